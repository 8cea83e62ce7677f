//! The statistic core: group covariances, the pooled weighted mean, the
//! covariance-adapted k-sample statistic and its standardization, the P/Q
//! projection matrices, noncentrality estimates, and a Hotelling T^2 baseline.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};
use crate::linalg::sym_decompose;

/// Scores of one group: n_j rows of p basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    scores: DMatrix<f64>,
    group_index: usize,
}

impl ScoreMatrix {
    pub fn new(scores: DMatrix<f64>, group_index: usize) -> Self {
        Self {
            scores,
            group_index,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], group_index: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidDataset("empty score matrix".into()));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged score rows".into()));
        }
        Ok(Self::new(
            DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]),
            group_index,
        ))
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn group_index(&self) -> usize {
        self.group_index
    }

    pub fn n(&self) -> usize {
        self.scores.nrows()
    }

    pub fn p(&self) -> usize {
        self.scores.ncols()
    }

    /// Keep only the given (0-based) score columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> ScoreMatrix {
        let sel = DMatrix::from_fn(self.n(), cols.len(), |i, j| self.scores[(i, cols[j])]);
        ScoreMatrix::new(sel, self.group_index)
    }
}

/// The k-group collection of score matrices that the test operates on.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedScores {
    matrices: Vec<ScoreMatrix>,
}

impl GroupedScores {
    pub fn new(matrices: Vec<ScoreMatrix>) -> Result<Self> {
        if matrices.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 groups, got {}",
                matrices.len()
            )));
        }
        let p = matrices[0].p();
        if matrices.iter().any(|m| m.p() != p) {
            return Err(Error::DimensionMismatch(
                "groups carry different score dimensions".into(),
            ));
        }
        Ok(Self { matrices })
    }

    pub fn matrices(&self) -> &[ScoreMatrix] {
        &self.matrices
    }

    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn p(&self) -> usize {
        self.matrices[0].p()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.matrices.iter().map(|m| m.n()).collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<GroupedScores> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.p()) {
            return Err(Error::DimensionMismatch(format!(
                "column {c} out of range for p = {}",
                self.p()
            )));
        }
        GroupedScores::new(self.matrices.iter().map(|m| m.select_columns(cols)).collect())
    }
}

/// Sample mean and covariance (divisor n_j) of one group's scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCovariance {
    pub sigma_hat: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub n: usize,
    pub group_index: usize,
}

/// Sample covariance of the truncated score vectors, with divisor n_j.
pub fn group_covariance(scores: &ScoreMatrix) -> Result<GroupCovariance> {
    let n = scores.n();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let p = scores.p();
    let mut mean = DVector::zeros(p);
    for i in 0..n {
        for q in 0..p {
            mean[q] += scores.scores()[(i, q)];
        }
    }
    mean /= n as f64;
    let mut sigma = DMatrix::zeros(p, p);
    for i in 0..n {
        for a in 0..p {
            let da = scores.scores()[(i, a)] - mean[a];
            for b in a..p {
                let db = scores.scores()[(i, b)] - mean[b];
                sigma[(a, b)] += da * db;
            }
        }
    }
    sigma /= n as f64;
    for a in 0..p {
        for b in 0..a {
            sigma[(a, b)] = sigma[(b, a)];
        }
    }
    Ok(GroupCovariance {
        sigma_hat: sigma,
        mean,
        n,
        group_index: scores.group_index(),
    })
}

/// Options for the matrix inversion policy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlrtOptions {
    /// Opt-in diagonal jitter added to each group covariance before inversion.
    /// Off by default; near-singularity is surfaced as an error instead.
    pub jitter: Option<f64>,
}

/// Outcome of the covariance-adapted k-sample statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    /// The quadratic-form statistic.
    pub t_flrt: f64,
    /// Degrees of freedom p(k-1).
    pub df: usize,
    /// Standardized statistic (T - df) / sqrt(2 df).
    pub w: f64,
    /// Upper-tail normal p-value for W.
    pub p_normal: f64,
    /// Upper-tail chi-square p-value for T at df degrees of freedom.
    pub p_chisq: f64,
    /// Per-group covariance condition numbers.
    pub condition_report: Vec<f64>,
}

struct GroupPieces {
    covs: Vec<GroupCovariance>,
    inverses: Vec<DMatrix<f64>>,
    conditions: Vec<f64>,
}

fn decompose_groups(scores: &GroupedScores, opts: &FlrtOptions) -> Result<GroupPieces> {
    let mut covs = Vec::with_capacity(scores.k());
    let mut inverses = Vec::with_capacity(scores.k());
    let mut conditions = Vec::with_capacity(scores.k());
    for m in scores.matrices() {
        if m.n() <= 2 * m.p() {
            log::warn!(
                "group {} has n = {} <= 2p = {}; the statistic may be ill-conditioned",
                m.group_index(),
                m.n(),
                2 * m.p()
            );
        }
        let cov = group_covariance(m)?;
        let decomp = sym_decompose(&cov.sigma_hat, opts.jitter);
        conditions.push(decomp.condition());
        inverses.push(decomp.inverse(m.group_index())?);
        covs.push(cov);
    }
    Ok(GroupPieces {
        covs,
        inverses,
        conditions,
    })
}

fn pooled_mean_from(
    covs: &[&GroupCovariance],
    inverses: &[DMatrix<f64>],
) -> Result<DVector<f64>> {
    let p = covs[0].mean.len();
    let mut lhs = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    for (cov, inv) in covs.iter().zip(inverses) {
        let w = inv * (cov.n as f64);
        lhs += &w;
        rhs += &w * &cov.mean;
    }
    let decomp = sym_decompose(&lhs, None);
    // lhs is a sum of per-group precision matrices; failure here means every
    // group was near-degenerate along a common direction.
    let inv = decomp.inverse(0).map_err(|_| Error::SingularCovariance {
        group: 0,
        condition: decomp.condition(),
    })?;
    Ok(inv * rhs)
}

/// Precision-weighted pooled mean estimator.
pub fn pooled_mean(covs: &[GroupCovariance]) -> Result<DVector<f64>> {
    let mut inverses = Vec::with_capacity(covs.len());
    for cov in covs {
        let decomp = sym_decompose(&cov.sigma_hat, None);
        inverses.push(decomp.inverse(cov.group_index)?);
    }
    let refs: Vec<&GroupCovariance> = covs.iter().collect();
    pooled_mean_from(&refs, &inverses)
}

/// The covariance-adapted k-sample statistic with asymptotic p-values.
pub fn t_flrt(scores: &GroupedScores) -> Result<TestResult> {
    t_flrt_with(scores, &FlrtOptions::default())
}

pub fn t_flrt_with(scores: &GroupedScores, opts: &FlrtOptions) -> Result<TestResult> {
    let pieces = decompose_groups(scores, opts)?;
    let refs: Vec<&GroupCovariance> = pieces.covs.iter().collect();
    let mu_hat = pooled_mean_from(&refs, &pieces.inverses)?;
    let mut t = 0.0;
    for (cov, inv) in pieces.covs.iter().zip(&pieces.inverses) {
        let d = &cov.mean - &mu_hat;
        t += cov.n as f64 * (d.transpose() * inv * &d)[(0, 0)];
    }
    let t = t.max(0.0);
    let df = scores.p() * (scores.k() - 1);
    Ok(finish_result(t, df, pieces.conditions))
}

fn finish_result(t: f64, df: usize, condition_report: Vec<f64>) -> TestResult {
    let w = standardize(t, df);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let chisq = ChiSquared::new(df as f64).unwrap();
    TestResult {
        t_flrt: t,
        df,
        w,
        p_normal: normal.sf(w),
        p_chisq: chisq.sf(t),
        condition_report,
    }
}

/// Standardization used by both the observed and the bootstrap statistic:
/// (T - p(k-1)) / sqrt(2 p(k-1)).
pub fn standardize(t: f64, df: usize) -> f64 {
    (t - df as f64) / (2.0 * df as f64).sqrt()
}

/// P = Sigma B Sigma^T and Q = I - P built from per-group covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    /// pk x pk projection onto the stacked whitened design.
    pub p_mat: DMatrix<f64>,
    /// Q = I - P; trace(Q) = p(k-1).
    pub q_mat: DMatrix<f64>,
    /// B = (sum_j n_j Sigma_j^{-1})^{-1}.
    pub b: DMatrix<f64>,
    /// The pk x p stacked matrix of sqrt(n_j) Sigma_j^{-1/2} blocks.
    pub stacked: DMatrix<f64>,
}

/// Build the projection pair from SPD covariance matrices and group sizes.
pub fn projection_pair(covs: &[DMatrix<f64>], sizes: &[usize]) -> Result<ProjectionPair> {
    if covs.len() != sizes.len() || covs.len() < 2 {
        return Err(Error::DimensionMismatch(
            "need one covariance per group, k >= 2".into(),
        ));
    }
    let p = covs[0].nrows();
    let k = covs.len();
    let mut inv_sum = DMatrix::zeros(p, p);
    let mut stacked = DMatrix::zeros(p * k, p);
    for (j, (cov, &n)) in covs.iter().zip(sizes).enumerate() {
        if cov.nrows() != p || cov.ncols() != p {
            return Err(Error::DimensionMismatch("covariance sizes differ".into()));
        }
        let decomp = sym_decompose(cov, None);
        inv_sum += decomp.inverse(j)? * n as f64;
        let inv_sqrt = decomp.inverse_sqrt(j)?;
        let scale = (n as f64).sqrt();
        for r in 0..p {
            for c in 0..p {
                stacked[(j * p + r, c)] = scale * inv_sqrt[(r, c)];
            }
        }
    }
    let b = sym_decompose(&inv_sum, None).inverse(0)?;
    let p_mat = &stacked * &b * stacked.transpose();
    let q_mat = DMatrix::identity(p * k, p * k) - &p_mat;
    Ok(ProjectionPair {
        p_mat,
        q_mat,
        b,
        stacked,
    })
}

/// Sample noncentrality estimate: the stacked whitened mean differences
/// d_j = ybar_1 - ybar_j pushed through Q. Tiny negative values from rounding
/// are clamped to 0; the raw value is also returned.
pub fn noncentrality_estimate_detailed(scores: &GroupedScores) -> Result<(f64, f64)> {
    let mut covs = Vec::with_capacity(scores.k());
    for m in scores.matrices() {
        covs.push(group_covariance(m)?);
    }
    let mats: Vec<DMatrix<f64>> = covs.iter().map(|c| c.sigma_hat.clone()).collect();
    let pair = projection_pair(&mats, &scores.sizes())?;
    let p = scores.p();
    let k = scores.k();
    let mut v_d = DVector::zeros(p * k);
    for (j, cov) in covs.iter().enumerate() {
        let d = &covs[0].mean - &cov.mean;
        let inv_sqrt = sym_decompose(&cov.sigma_hat, None).inverse_sqrt(j)?;
        let block = inv_sqrt * d;
        for r in 0..p {
            v_d[j * p + r] = block[r];
        }
    }
    let raw = (v_d.transpose() * &pair.q_mat * &v_d)[(0, 0)];
    Ok((raw.max(0.0), raw))
}

pub fn noncentrality_estimate(scores: &GroupedScores) -> Result<f64> {
    noncentrality_estimate_detailed(scores).map(|(v, _)| v)
}

/// Two-sample Hotelling T^2 with pooled covariance and the F transformation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotellingResult {
    pub t2: f64,
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

pub fn hotelling_t2(scores: &GroupedScores) -> Result<HotellingResult> {
    if scores.k() != 2 {
        return Err(Error::NotTwoGroups(scores.k()));
    }
    let p = scores.p();
    let c1 = group_covariance(&scores.matrices()[0])?;
    let c2 = group_covariance(&scores.matrices()[1])?;
    let (n1, n2) = (c1.n as f64, c2.n as f64);
    // Pooled covariance with divisor n1 + n2 - 2 from sums of squares.
    let pooled = (&c1.sigma_hat * n1 + &c2.sigma_hat * n2) / (n1 + n2 - 2.0);
    let inv = sym_decompose(&pooled, None).inverse(0)?;
    let d = &c1.mean - &c2.mean;
    let t2 = (n1 * n2) / (n1 + n2) * (d.transpose() * inv * &d)[(0, 0)];
    let df2 = n1 + n2 - p as f64 - 1.0;
    if df2 <= 0.0 {
        return Err(Error::DimensionMismatch(format!(
            "Hotelling T^2 needs n1 + n2 > p + 1 (p = {p})"
        )));
    }
    let f_stat = t2 * df2 / ((n1 + n2 - 2.0) * p as f64);
    let fdist = FisherSnedecor::new(p as f64, df2).unwrap();
    Ok(HotellingResult {
        t2,
        f_stat,
        df1: p,
        df2: df2 as usize,
        p_value: fdist.sf(f_stat),
    })
}
