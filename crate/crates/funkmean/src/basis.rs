//! Orthonormal bases of L^2[0,1] evaluated on arbitrary time grids.
//!
//! Three families are supported:
//!
//! * Fourier: column 1 is the constant 1, column 2m is `sqrt(2) cos(2 pi m t)`
//!   and column 2m+1 is `sqrt(2) sin(2 pi m t)`. With this ordering
//!   `sqrt(2) sin(10 pi t)` occupies column 11.
//! * Haar: column 1 is the constant 1; thereafter levels j = 0, 1, 2, ... in
//!   increasing order with shifts s = 0..2^j-1 left to right. Evaluation at a
//!   dyadic discontinuity uses the right-limit (half-open interval convention).
//! * Orthonormalized B-splines: a clamped B-spline basis on the given knots,
//!   orthonormalized under the trapezium inner product on the evaluation grid.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Fourier,
    Haar,
    SplineOrthonormal,
}

impl std::fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisFamily::Fourier => write!(f, "fourier"),
            BasisFamily::Haar => write!(f, "haar"),
            BasisFamily::SplineOrthonormal => write!(f, "spline"),
        }
    }
}

/// Which basis to use and how many functions to keep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: BasisFamily,
    /// Number of basis functions (the truncation level p).
    pub p: usize,
    /// Spline order (polynomial degree + 1); ignored for Fourier and Haar.
    #[serde(default = "default_spline_order")]
    pub spline_order: usize,
    /// Sorted interior knots in [0,1]; ignored for Fourier and Haar.
    #[serde(default)]
    pub spline_knots: Vec<f64>,
}

fn default_spline_order() -> usize {
    4
}

impl BasisSpec {
    pub fn fourier(p: usize) -> Self {
        Self {
            family: BasisFamily::Fourier,
            p,
            spline_order: default_spline_order(),
            spline_knots: Vec::new(),
        }
    }

    pub fn haar(p: usize) -> Self {
        Self {
            family: BasisFamily::Haar,
            p,
            spline_order: default_spline_order(),
            spline_knots: Vec::new(),
        }
    }

    pub fn spline(p: usize, order: usize, knots: Vec<f64>) -> Self {
        Self {
            family: BasisFamily::SplineOrthonormal,
            p,
            spline_order: order,
            spline_knots: knots,
        }
    }

    /// Cubic spline spec with enough uniformly spaced interior knots for `p`
    /// basis functions.
    pub fn spline_default(p: usize) -> Self {
        let order = default_spline_order();
        let interior = p.saturating_sub(order);
        let knots: Vec<f64> = (1..=interior)
            .map(|i| i as f64 / (interior + 1) as f64)
            .collect();
        Self::spline(p, order, knots)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidBasisDim);
        }
        if self.family == BasisFamily::SplineOrthonormal {
            if self.spline_order == 0 {
                return Err(Error::InvalidSplineOrder);
            }
            let k = &self.spline_knots;
            if k.windows(2).any(|w| w[0] > w[1]) || k.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
                return Err(Error::InvalidSplineKnots);
            }
            let available = k.len() + self.spline_order;
            if self.p > available {
                return Err(Error::SplineBasisTooSmall {
                    requested: self.p,
                    available,
                });
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.family.to_string()
    }
}

/// Basis functions evaluated columnwise on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    pub times: Vec<f64>,
    /// m x p matrix; column l holds b_{l+1} evaluated at `times`.
    pub values: DMatrix<f64>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::EmptyGrid(times.len()));
    }
    for &t in times {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TimesOutOfRange(t));
        }
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::NonMonotoneTimes);
    }
    Ok(())
}

/// Evaluate the first `spec.p` basis functions analytically at `times`.
pub fn evaluate_basis(spec: &BasisSpec, times: &[f64]) -> Result<BasisMatrix> {
    spec.validate()?;
    check_times(times)?;
    let m = times.len();
    let p = spec.p;
    let values = match spec.family {
        BasisFamily::Fourier => {
            DMatrix::from_fn(m, p, |i, l| fourier_function(l + 1, times[i]))
        }
        BasisFamily::Haar => DMatrix::from_fn(m, p, |i, l| haar_function(l + 1, times[i])),
        BasisFamily::SplineOrthonormal => {
            let raw = bspline_matrix(times, spec.spline_order, &spec.spline_knots);
            let ortho = orthonormalize_spline(&raw, times)?;
            ortho.columns(0, p).into_owned()
        }
    };
    Ok(BasisMatrix {
        times: times.to_vec(),
        values,
    })
}

/// Fourier basis function with 1-based index: 1, then cos before sin within
/// each frequency.
pub(crate) fn fourier_function(index: usize, t: f64) -> f64 {
    debug_assert!(index >= 1);
    if index == 1 {
        return 1.0;
    }
    let m = (index / 2) as f64;
    let angle = 2.0 * std::f64::consts::PI * m * t;
    if index % 2 == 0 {
        std::f64::consts::SQRT_2 * angle.cos()
    } else {
        std::f64::consts::SQRT_2 * angle.sin()
    }
}

/// Haar basis function with 1-based index: the constant, then wavelets filled
/// level-by-level.
pub(crate) fn haar_function(index: usize, t: f64) -> f64 {
    debug_assert!(index >= 1);
    if index == 1 {
        return 1.0;
    }
    // Index 2 + s within level j, where levels hold 2^j wavelets.
    let mut rem = index - 2;
    let mut level = 0u32;
    while rem >= (1usize << level) {
        rem -= 1usize << level;
        level += 1;
    }
    let shift = rem as f64;
    let scale = 2f64.powi(level as i32);
    let u = scale * t - shift;
    let amp = scale.sqrt();
    if (0.0..0.5).contains(&u) {
        amp
    } else if (0.5..1.0).contains(&u) {
        -amp
    } else {
        0.0
    }
}

/// Trapezium quadrature weights on a (possibly non-uniform) sorted grid.
pub(crate) fn trapezium_weights(times: &[f64]) -> Vec<f64> {
    let m = times.len();
    let mut w = vec![0.0; m];
    for i in 0..m - 1 {
        let h = times[i + 1] - times[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Orthonormalize the columns of `raw` under the trapezium inner product on
/// `times` using modified Gram-Schmidt. The sign of each output column is
/// fixed so that its inner product with the raw column is positive.
pub fn orthonormalize_spline(raw: &DMatrix<f64>, times: &[f64]) -> Result<DMatrix<f64>> {
    check_times(times)?;
    if raw.nrows() != times.len() {
        return Err(Error::DimensionMismatch(format!(
            "raw spline matrix has {} rows but the grid has {} points",
            raw.nrows(),
            times.len()
        )));
    }
    let w = trapezium_weights(times);
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(&w).map(|((x, y), wi)| x * y * wi).sum()
    };
    let q = raw.ncols();
    let mut out = raw.clone();
    for j in 0..q {
        let initial_norm = {
            let col: Vec<f64> = out.column(j).iter().copied().collect();
            dot(&col, &col).sqrt()
        };
        for i in 0..j {
            let qi: Vec<f64> = out.column(i).iter().copied().collect();
            let cj: Vec<f64> = out.column(j).iter().copied().collect();
            let r = dot(&qi, &cj);
            for row in 0..out.nrows() {
                out[(row, j)] -= r * qi[row];
            }
        }
        let cj: Vec<f64> = out.column(j).iter().copied().collect();
        let norm = dot(&cj, &cj).sqrt();
        if !(norm > 1e-10 * initial_norm.max(1e-300)) {
            return Err(Error::RankDeficient(j));
        }
        for row in 0..out.nrows() {
            out[(row, j)] /= norm;
        }
        // Sign convention: positive inner product with the raw column.
        let rawj: Vec<f64> = raw.column(j).iter().copied().collect();
        let oj: Vec<f64> = out.column(j).iter().copied().collect();
        if dot(&oj, &rawj) < 0.0 {
            for row in 0..out.nrows() {
                out[(row, j)] = -out[(row, j)];
            }
        }
    }
    Ok(out)
}

/// Clamped B-spline basis matrix (Cox-de Boor) of the given order on [0,1]
/// with the given interior knots, evaluated at `times`.
pub(crate) fn bspline_matrix(times: &[f64], order: usize, interior: &[f64]) -> DMatrix<f64> {
    let n_basis = interior.len() + order;
    let mut knots = Vec::with_capacity(2 * order + interior.len());
    knots.extend(std::iter::repeat(0.0).take(order));
    knots.extend_from_slice(interior);
    knots.extend(std::iter::repeat(1.0).take(order));

    DMatrix::from_fn(times.len(), n_basis, |i, j| {
        bspline_value(&knots, order, j, times[i])
    })
}

fn bspline_value(knots: &[f64], order: usize, j: usize, t: f64) -> f64 {
    // Clamp t = 1 into the last nonempty interval so the basis sums to 1 there.
    let n_basis = knots.len() - order;
    if t >= 1.0 {
        // Only the last basis function is nonzero at the right endpoint.
        return if j == n_basis - 1 { 1.0 } else { 0.0 };
    }
    // Degree-0 seed.
    let mut coeffs: Vec<f64> = (0..order)
        .map(|r| {
            let idx = j + r;
            if knots[idx] <= t && t < knots[idx + 1] {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    // Triangular Cox-de Boor recursion.
    for deg in 1..order {
        for r in 0..order - deg {
            let i = j + r;
            let left_den = knots[i + deg] - knots[i];
            let right_den = knots[i + deg + 1] - knots[i + 1];
            let left = if left_den > 0.0 {
                (t - knots[i]) / left_den * coeffs[r]
            } else {
                0.0
            };
            let right = if right_den > 0.0 {
                (knots[i + deg + 1] - t) / right_den * coeffs[r + 1]
            } else {
                0.0
            };
            coeffs[r] = left + right;
        }
    }
    coeffs[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform_grid(m: usize) -> Vec<f64> {
        (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
    }

    #[test]
    fn fourier_p1_is_constant() {
        let b = evaluate_basis(&BasisSpec::fourier(1), &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(b.values.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn haar_p2_signs() {
        let b = evaluate_basis(&BasisSpec::haar(2), &[0.25, 0.75]).unwrap();
        assert_eq!(b.values[(0, 0)], 1.0);
        assert_eq!(b.values[(1, 0)], 1.0);
        assert_eq!(b.values[(0, 1)], 1.0);
        assert_eq!(b.values[(1, 1)], -1.0);
    }

    #[test]
    fn fourier_column_11_is_sin_10pi() {
        let b = evaluate_basis(&BasisSpec::fourier(11), &[0.0, 0.05]).unwrap();
        assert_abs_diff_eq!(b.values[(1, 10)], std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn haar_right_limit_at_discontinuity() {
        // psi_{0,0} jumps at 0.5; the right-limit is -1.
        assert_eq!(haar_function(2, 0.5), -1.0);
        // psi_{1,0} has support [0, 0.5); at 0.5 it is 0.
        assert_eq!(haar_function(3, 0.5), 0.0);
        assert_eq!(haar_function(4, 0.5), std::f64::consts::SQRT_2);
    }

    #[test]
    fn haar_level_shift_layout() {
        // Index 4 = level 1, shift 1: support [0.5, 1), amplitude sqrt(2).
        assert_eq!(haar_function(4, 0.6), std::f64::consts::SQRT_2);
        assert_eq!(haar_function(4, 0.8), -std::f64::consts::SQRT_2);
        assert_eq!(haar_function(4, 0.3), 0.0);
        // Index 5 opens level 2: support [0, 0.25), amplitude 2.
        assert_eq!(haar_function(5, 0.1), 2.0);
        assert_eq!(haar_function(5, 0.2), -2.0);
        assert_eq!(haar_function(5, 0.3), 0.0);
    }

    #[test]
    fn evaluate_basis_is_deterministic() {
        let times = uniform_grid(33);
        let a = evaluate_basis(&BasisSpec::haar(8), &times).unwrap();
        let b = evaluate_basis(&BasisSpec::haar(8), &times).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_validation_errors() {
        let spec = BasisSpec::fourier(2);
        assert!(matches!(
            evaluate_basis(&spec, &[0.5]),
            Err(Error::EmptyGrid(1))
        ));
        assert!(matches!(
            evaluate_basis(&spec, &[0.0, 1.5]),
            Err(Error::TimesOutOfRange(_))
        ));
        assert!(matches!(
            evaluate_basis(&spec, &[0.5, 0.5]),
            Err(Error::NonMonotoneTimes)
        ));
    }

    #[test]
    fn spline_too_small() {
        let spec = BasisSpec::spline(7, 4, vec![0.5]);
        assert!(matches!(
            evaluate_basis(&spec, &uniform_grid(11)),
            Err(Error::SplineBasisTooSmall {
                requested: 7,
                available: 5
            })
        ));
    }

    #[test]
    fn orthonormalize_idempotent_on_orthonormal_input() {
        let times = uniform_grid(101);
        let b = evaluate_basis(&BasisSpec::fourier(3), &times).unwrap();
        let out = orthonormalize_spline(&b.values, &times).unwrap();
        for (a, b) in out.iter().zip(b.values.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn orthonormalize_rejects_duplicate_columns() {
        let times = uniform_grid(11);
        let col: Vec<f64> = times.clone();
        let m = DMatrix::from_fn(11, 2, |i, _| col[i]);
        assert!(matches!(
            orthonormalize_spline(&m, &times),
            Err(Error::RankDeficient(1))
        ));
    }

    #[test]
    fn orthonormalize_one_and_t() {
        let times = uniform_grid(101);
        let m = DMatrix::from_fn(101, 2, |i, j| if j == 0 { 1.0 } else { times[i] });
        let out = orthonormalize_spline(&m, &times).unwrap();
        let w = trapezium_weights(&times);
        for a in 0..2 {
            for b in 0..2 {
                let g: f64 = (0..101).map(|i| out[(i, a)] * out[(i, b)] * w[i]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn spline_basis_partition_of_unity() {
        let times = uniform_grid(51);
        let raw = bspline_matrix(&times, 4, &[0.25, 0.5, 0.75]);
        for i in 0..times.len() {
            let s: f64 = raw.row(i).iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fourier_gram_near_identity() {
        let times = uniform_grid(2049);
        let b = evaluate_basis(&BasisSpec::fourier(64), &times).unwrap();
        let w = trapezium_weights(&times);
        for l in 0..64 {
            for r in 0..64 {
                let g: f64 = (0..times.len())
                    .map(|i| b.values[(i, l)] * b.values[(i, r)] * w[i])
                    .sum();
                let expect = if l == r { 1.0 } else { 0.0 };
                assert!(
                    (g - expect).abs() <= 1e-3,
                    "fourier gram ({l},{r}) = {g}"
                );
            }
        }
    }

    #[test]
    fn spline_gram_near_identity() {
        let times = uniform_grid(2049);
        let spec = BasisSpec::spline_default(12);
        let b = evaluate_basis(&spec, &times).unwrap();
        let w = trapezium_weights(&times);
        for l in 0..12 {
            for r in 0..12 {
                let g: f64 = (0..times.len())
                    .map(|i| b.values[(i, l)] * b.values[(i, r)] * w[i])
                    .sum();
                let expect = if l == r { 1.0 } else { 0.0 };
                assert!((g - expect).abs() <= 1e-3, "spline gram ({l},{r}) = {g}");
            }
        }
    }

    // Haar functions are right-continuous step functions with jumps on dyadic
    // points, so the left-endpoint rule integrates their products exactly on a
    // dyadic grid; trapezium carries an O(1/m) error at each jump cell.
    #[test]
    fn haar_gram_exact_on_dyadic_grid() {
        let times = uniform_grid(2049);
        let b = evaluate_basis(&BasisSpec::haar(64), &times).unwrap();
        let h = 1.0 / 2048.0;
        for l in 0..64 {
            for r in 0..64 {
                let g: f64 = (0..2048)
                    .map(|i| b.values[(i, l)] * b.values[(i, r)] * h)
                    .sum();
                let expect = if l == r { 1.0 } else { 0.0 };
                assert!((g - expect).abs() <= 1e-12, "haar gram ({l},{r}) = {g}");
            }
        }
    }
}
