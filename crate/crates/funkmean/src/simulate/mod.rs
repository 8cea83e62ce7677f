//! Simulation harness: Bessel K, Matern covariances, Gaussian-process
//! sampling, and the Monte-Carlo experiment drivers.

pub mod bessel;
pub mod experiment;
pub mod gp;
pub mod matern;

pub use bessel::bessel_k;
pub use experiment::{
    generate_dataset, preset, preset_table1, preset_table2, preset_table3, run_power_experiment,
    run_size_experiment, ExperimentConfig, ExperimentRow, ExperimentTable, GroupDesign, MeanSpec,
    PowerTable, SizeTable,
};
pub use gp::{gp_sample, GpSampler};
pub use matern::{matern_cov, MaternParams};
