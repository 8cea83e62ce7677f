//! Groupwise nonparametric bootstrap calibration of the test.
//!
//! Scores are recentred within each group (enforcing the null), resampled
//! with replacement within each group, and the standardized statistic is
//! recomputed per resample. Replicates run in parallel on per-replicate RNG
//! substreams derived from (seed, replicate index), so results do not depend
//! on thread scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flrt::{group_covariance, standardize, t_flrt, FlrtOptions, GroupedScores, ScoreMatrix};

/// How many resamples, which seed, and the significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub b: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Use (#{W* >= W} + 1) / (B + 1) instead of the plain proportion.
    pub add_one_correction: bool,
}

impl BootstrapConfig {
    pub fn new(b: usize, seed: u64, alpha: f64) -> Self {
        Self {
            b,
            seed,
            alpha,
            add_one_correction: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.b < 1 {
            return Err(Error::InvalidConfig("bootstrap needs B >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub p_boot: f64,
    pub w_observed: f64,
    pub w_star: Vec<f64>,
    pub reject: bool,
    pub seed: u64,
}

/// SplitMix64 mix of (seed, counter) into a per-replicate stream seed.
fn substream_seed(base: u64, counter: u64) -> u64 {
    let mut z = base.wrapping_add(counter.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, replicate))
}

/// Draw n_j rows i.i.d. uniformly with replacement from the given rows.
pub fn resample_group(centered: &ScoreMatrix, rng: &mut impl Rng) -> Result<ScoreMatrix> {
    let n = centered.n();
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    let p = centered.p();
    let picks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let scores = DMatrix::from_fn(n, p, |i, q| centered.scores()[(picks[i], q)]);
    Ok(ScoreMatrix::new(scores, centered.group_index()))
}

fn center_groups(scores: &GroupedScores) -> Result<Vec<ScoreMatrix>> {
    scores
        .matrices()
        .iter()
        .map(|m| {
            let cov = group_covariance(m)?;
            let centered = DMatrix::from_fn(m.n(), m.p(), |i, q| {
                m.scores()[(i, q)] - cov.mean[q]
            });
            Ok(ScoreMatrix::new(centered, m.group_index()))
        })
        .collect()
}

const RETRIES_PER_REPLICATE: usize = 100;

fn one_replicate(
    centered: &[ScoreMatrix],
    df: usize,
    opts: &FlrtOptions,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    for _ in 0..RETRIES_PER_REPLICATE {
        let mut groups = Vec::with_capacity(centered.len());
        for g in centered {
            groups.push(resample_group(g, rng)?);
        }
        let resampled = GroupedScores::new(groups)?;
        match crate::flrt::t_flrt_with(&resampled, opts) {
            Ok(res) => return Ok(standardize(res.t_flrt, df)),
            Err(Error::SingularCovariance { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    // Identify the smallest group for the error message; tiny groups are the
    // usual cause of collapsed resamples.
    let worst = centered
        .iter()
        .min_by_key(|g| g.n())
        .map(|g| g.group_index())
        .unwrap_or(0);
    Err(Error::ResampleDegenerate(worst))
}

/// Bootstrap calibration of the test: recentre, resample, compare W* to W.
pub fn bootstrap_test(scores: &GroupedScores, config: &BootstrapConfig) -> Result<BootstrapResult> {
    bootstrap_test_with(scores, config, &FlrtOptions::default())
}

pub fn bootstrap_test_with(
    scores: &GroupedScores,
    config: &BootstrapConfig,
    opts: &FlrtOptions,
) -> Result<BootstrapResult> {
    config.validate()?;
    let observed = t_flrt(scores)?;
    let w_observed = observed.w;
    let centered = center_groups(scores)?;
    let df = scores.p() * (scores.k() - 1);

    let w_star: Vec<f64> = (0..config.b as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(config.seed, b);
            one_replicate(&centered, df, opts, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;

    let exceed = w_star.iter().filter(|&&w| w >= w_observed).count();
    let p_boot = if config.add_one_correction {
        (exceed + 1) as f64 / (config.b + 1) as f64
    } else {
        exceed as f64 / config.b as f64
    };
    Ok(BootstrapResult {
        p_boot,
        w_observed,
        w_star,
        reject: p_boot < config.alpha,
        seed: config.seed,
    })
}
