//! Trapezium-quadrature projection of discretized curves onto basis scores.

use nalgebra::DMatrix;

use crate::basis::{evaluate_basis, trapezium_weights, BasisSpec};
use crate::error::{Error, Result};
use crate::flrt::{GroupedScores, ScoreMatrix};

/// One functional observation: a sorted time grid with matching values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl DiscretizedCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::GridTooCoarse);
        }
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "curve has {} time points but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotoneTimes);
        }
        if values.iter().chain(times.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue);
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// k >= 2 groups of curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    groups: Vec<Vec<DiscretizedCurve>>,
}

impl FunctionalDataset {
    pub fn new(groups: Vec<Vec<DiscretizedCurve>>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        if let Some(j) = groups.iter().position(|g| g.is_empty()) {
            return Err(Error::InvalidDataset(format!("group {j} is empty")));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<DiscretizedCurve>] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// True when every curve in every group carries an identical time grid.
    pub fn shared_grid(&self) -> bool {
        let first = &self.groups[0][0];
        self.groups
            .iter()
            .flatten()
            .all(|c| c.times == first.times)
    }
}

/// Affinely map the curve's time grid so min -> 0 and max -> 1.
pub fn rescale_domain(curve: &DiscretizedCurve) -> Result<DiscretizedCurve> {
    let lo = curve.times[0];
    let hi = *curve.times.last().unwrap();
    if hi - lo <= 0.0 {
        return Err(Error::DegenerateDomain);
    }
    let span = hi - lo;
    let times = curve.times.iter().map(|&t| (t - lo) / span).collect();
    DiscretizedCurve::new(times, curve.values.clone())
}

/// Trapezium approximation of the first p basis scores of one curve.
pub fn project_curve(curve: &DiscretizedCurve, spec: &BasisSpec) -> Result<Vec<f64>> {
    let basis = evaluate_basis(spec, &curve.times)?;
    let w = trapezium_weights(&curve.times);
    if curve.times[0] > 0.0 || *curve.times.last().unwrap() < 1.0 {
        log::warn!(
            "curve grid covers [{:.4}, {:.4}] only; integrating without extrapolation",
            curve.times[0],
            curve.times.last().unwrap()
        );
    }
    let scores = (0..spec.p)
        .map(|q| {
            curve
                .values
                .iter()
                .zip(basis.values.column(q).iter())
                .zip(&w)
                .map(|((y, b), wi)| y * b * wi)
                .sum()
        })
        .collect();
    Ok(scores)
}

/// Project every curve of the dataset, preserving group structure.
pub fn project_dataset(data: &FunctionalDataset, spec: &BasisSpec) -> Result<GroupedScores> {
    if !data.shared_grid() {
        log::warn!("dataset has mixed time grids; quadrature error rates assume a common design");
    }
    let mut matrices = Vec::with_capacity(data.k());
    for (j, group) in data.groups.iter().enumerate() {
        let mut rows = Vec::with_capacity(group.len());
        for curve in group {
            rows.push(project_curve(curve, spec)?);
        }
        let scores = DMatrix::from_fn(group.len(), spec.p, |i, q| rows[i][q]);
        matrices.push(ScoreMatrix::new(scores, j));
    }
    GroupedScores::new(matrices)
}
