//! Symmetric eigendecomposition helpers shared by the statistic core.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number above which a covariance matrix is declared singular.
pub const CONDITION_LIMIT: f64 = 1e12;

pub(crate) struct SymDecomp {
    pub eigvecs: DMatrix<f64>,
    pub eigvals: Vec<f64>,
}

pub(crate) fn sym_decompose(mat: &DMatrix<f64>, jitter: Option<f64>) -> SymDecomp {
    let mut m = mat.clone();
    // Symmetrize to guard against accumulation asymmetry.
    let mt = m.transpose();
    m = (m + mt) * 0.5;
    if let Some(eps) = jitter {
        for i in 0..m.nrows() {
            m[(i, i)] += eps;
        }
    }
    let eig = SymmetricEigen::new(m);
    SymDecomp {
        eigvals: eig.eigenvalues.iter().copied().collect(),
        eigvecs: eig.eigenvectors,
    }
}

impl SymDecomp {
    pub fn condition(&self) -> f64 {
        let max = self.eigvals.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.eigvals.iter().cloned().fold(f64::MAX, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    fn check(&self, group: usize) -> Result<()> {
        let cond = self.condition();
        if !cond.is_finite() || cond > CONDITION_LIMIT {
            return Err(Error::SingularCovariance {
                group,
                condition: cond,
            });
        }
        Ok(())
    }

    /// Inverse via the eigendecomposition; fails when the condition number
    /// exceeds [`CONDITION_LIMIT`] or an eigenvalue is nonpositive.
    pub fn inverse(&self, group: usize) -> Result<DMatrix<f64>> {
        self.check(group)?;
        Ok(self.map_eigvals(|l| 1.0 / l))
    }

    /// The unique symmetric PSD inverse square root.
    pub fn inverse_sqrt(&self, group: usize) -> Result<DMatrix<f64>> {
        self.check(group)?;
        Ok(self.map_eigvals(|l| 1.0 / l.sqrt()))
    }

    fn map_eigvals(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let p = self.eigvals.len();
        let mut scaled = self.eigvecs.clone();
        for c in 0..p {
            let s = f(self.eigvals[c]);
            for r in 0..p {
                scaled[(r, c)] *= s;
            }
        }
        &scaled * self.eigvecs.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_matches_direct() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let d = sym_decompose(&m, None);
        let inv = d.inverse(0).unwrap();
        let id = &m * &inv;
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let d = sym_decompose(&m, None);
        let isq = d.inverse_sqrt(0).unwrap();
        let inv = d.inverse(0).unwrap();
        let prod = &isq * &isq;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(prod[(i, j)], inv[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let d = sym_decompose(&m, None);
        assert!(matches!(
            d.inverse(3),
            Err(Error::SingularCovariance { group: 3, .. })
        ));
    }

    #[test]
    fn jitter_rescues_singular_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let d = sym_decompose(&m, Some(1e-3));
        assert!(d.inverse(0).is_ok());
    }
}
