//! Matern covariance matrices on a time grid.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::simulate::bessel::bessel_k;

/// Matern kernel parameters: marginal variance, range, smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub sigma2: f64,
    pub ell: f64,
    pub nu: f64,
}

impl MaternParams {
    pub fn new(sigma2: f64, ell: f64, nu: f64) -> Result<Self> {
        let p = Self { sigma2, ell, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.ell > 0.0 && self.nu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "Matern parameters must be strictly positive: sigma2 = {}, ell = {}, nu = {}",
                self.sigma2, self.ell, self.nu
            )));
        }
        Ok(())
    }

    /// Kernel value at distance d.
    pub fn kernel(&self, d: f64) -> f64 {
        let d = d.abs();
        if d == 0.0 {
            return self.sigma2;
        }
        let u = (2.0 * self.nu).sqrt() * d / self.ell;
        let prefactor = self.sigma2 * 2f64.powf(1.0 - self.nu) / gamma(self.nu);
        let value = prefactor * u.powf(self.nu) * bessel_k(self.nu, u).unwrap_or(f64::INFINITY);
        if value.is_finite() {
            value
        } else {
            // u^nu underflowed against an overflowing K_nu; the limit of the
            // product as u -> 0 is sigma2.
            self.sigma2
        }
    }
}

/// Evaluate the kernel on a grid; diagonal entries are exactly sigma2.
pub fn matern_cov(params: &MaternParams, times: &[f64]) -> Result<DMatrix<f64>> {
    params.validate()?;
    if times.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::TimesOutOfRange(
            *times
                .iter()
                .find(|&&t| !(0.0..=1.0).contains(&t))
                .unwrap(),
        ));
    }
    let m = times.len();
    let mut cov = DMatrix::zeros(m, m);
    for a in 0..m {
        cov[(a, a)] = params.sigma2;
        for b in 0..a {
            let v = params.kernel(times[a] - times[b]);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}
