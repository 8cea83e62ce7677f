//! Gaussian-process curve sampling via Cholesky with a jitter ladder.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::projection::DiscretizedCurve;

/// Holds a mean vector and a Cholesky factor; draws are mean + L z.
pub struct GpSampler {
    times: Vec<f64>,
    mean: Vec<f64>,
    factor: DMatrix<f64>,
}

impl GpSampler {
    /// Factor `cov`, escalating diagonal jitter from 1e-10 to 1e-6 of the
    /// largest diagonal entry (times 10 per step) until Cholesky succeeds.
    pub fn new(times: Vec<f64>, mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let m = times.len();
        if mean.len() != m || cov.nrows() != m || cov.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "grid has {m} points, mean {} entries, covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let scale = cov.diagonal().iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let mut jitter = 0.0;
        loop {
            let mut jittered = cov.clone();
            if jitter > 0.0 {
                for i in 0..m {
                    jittered[(i, i)] += jitter;
                }
            }
            if let Some(chol) = Cholesky::new(jittered) {
                return Ok(Self {
                    times,
                    mean,
                    factor: chol.l(),
                });
            }
            jitter = if jitter == 0.0 {
                1e-10 * scale
            } else {
                jitter * 10.0
            };
            if jitter > 1e-6 * scale {
                return Err(Error::FactorizationFailed(1e-6 * scale));
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> DiscretizedCurve {
        let m = self.mean.len();
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = &self.factor * z;
        let values: Vec<f64> = self.mean.iter().zip(noise.iter()).map(|(m, n)| m + n).collect();
        DiscretizedCurve::new(self.times.clone(), values)
            .expect("sampler grid was validated at construction")
    }
}

/// One-shot draw from N(mean, cov) on the given grid.
pub fn gp_sample(
    times: &[f64],
    mean: &[f64],
    cov: &DMatrix<f64>,
    rng: &mut impl Rng,
) -> Result<DiscretizedCurve> {
    let sampler = GpSampler::new(times.to_vec(), mean.to_vec(), cov.clone())?;
    Ok(sampler.sample(rng))
}
