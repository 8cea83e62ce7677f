//! funkmean: a k-sample test for equality of mean functions of functional
//! data, built on basis projection with groupwise covariance standardization.
//!
//! The pipeline is: discretize curves on a common grid, project onto an
//! orthonormal basis ([`basis`], [`projection`]), run the standardized test
//! statistic with asymptotic or bootstrap calibration ([`flrt`],
//! [`bootstrap`]), and inspect basis choice with the noncentrality
//! diagnostics ([`diagnostics`]). The [`simulate`] module reproduces the
//! Matern Gaussian-process size and power studies.

pub mod basis;
pub mod bootstrap;
pub mod diagnostics;
pub mod error;
pub mod flrt;
mod linalg;
pub mod plot;
pub mod projection;
pub mod simulate;

pub use basis::{evaluate_basis, BasisFamily, BasisMatrix, BasisSpec};
pub use bootstrap::{bootstrap_test, BootstrapConfig, BootstrapResult};
pub use error::{Error, Result};
pub use flrt::{
    hotelling_t2, noncentrality_estimate, t_flrt, t_flrt_with, FlrtOptions, GroupedScores,
    HotellingResult, ScoreMatrix, TestResult,
};
pub use projection::{
    project_curve, project_dataset, rescale_domain, DiscretizedCurve, FunctionalDataset,
};
