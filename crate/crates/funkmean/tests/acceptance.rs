//! Acceptance suite: one test per release criterion, each printing a single
//! PASS line (visible with --nocapture; a failed assertion surfaces the same
//! message). Tolerances are pinned here, next to the assertions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use funkmean::flrt::{projection_pair, t_flrt, GroupedScores, ScoreMatrix};
use funkmean::simulate::{
    bessel_k, generate_dataset, preset_table1, preset_table2, preset_table3, run_power_experiment,
    run_size_experiment, MaternParams,
};
use funkmean::diagnostics::{multi_basis_diagnostic, reorder_diagnostic, SpikeRule};
use funkmean::{bootstrap_test, project_curve, BasisSpec, BootstrapConfig, DiscretizedCurve};

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Draw n rows from N(0, chol chol^T) as a ScoreMatrix.
fn gaussian_scores(chol: &DMatrix<f64>, n: usize, group: usize, rng: &mut impl Rng) -> ScoreMatrix {
    let p = chol.nrows();
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let row = chol * z;
        for j in 0..p {
            m[(i, j)] = row[j];
        }
    }
    ScoreMatrix::new(m, group)
}

fn chol(m: &DMatrix<f64>) -> DMatrix<f64> {
    nalgebra::Cholesky::new(m.clone()).expect("SPD input").l()
}

fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = (f - i as f64 / n).abs();
            let hi = ((i + 1) as f64 / n - f).abs();
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_chi_square_calibration() {
    // k=2, p=3, equal means, unequal covariances, n=(200,200), 2000
    // replicates. Rejection at the chi2_3 0.95 quantile must land in
    // [0.040, 0.060] and the KS distance to chi2_3 must stay below 0.035.
    let sigma1 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.5]);
    let sigma2 = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 1.5]);
    let (l1, l2) = (chol(&sigma1), chol(&sigma2));
    let reps = 2000;
    let tees: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(101, r);
            let scores = GroupedScores::new(vec![
                gaussian_scores(&l1, 200, 0, &mut rng),
                gaussian_scores(&l2, 200, 1, &mut rng),
            ])
            .unwrap();
            t_flrt(&scores).unwrap().t_flrt
        })
        .collect();
    let chi = ChiSquared::new(3.0).unwrap();
    let q95 = chi.inverse_cdf(0.95);
    let reject = tees.iter().filter(|&&t| t > q95).count() as f64 / reps as f64;
    let mut tees = tees;
    let ks = ks_distance(&mut tees, |x| chi.cdf(x));
    assert!(
        (0.040..=0.060).contains(&reject),
        "criterion 1: FAIL (rejection rate {reject})"
    );
    assert!(ks < 0.035, "criterion 1: FAIL (KS distance {ks})");
    println!("criterion 1 (chi-square calibration): PASS (reject {reject:.4}, KS {ks:.4})");
}

#[test]
fn criterion_2_size_reproduction() {
    // The nu = 5 size design at R=1000, B=500: both bases within +-0.020 of
    // the nominal 0.05.
    let mut cfg = preset_table1();
    cfg.nu_grid = vec![5.0];
    let table = run_size_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 2);
    for row in &table.rows {
        assert!(
            (row.reject_rate - 0.05).abs() <= 0.020,
            "criterion 2: FAIL (basis {} size {})",
            row.basis,
            row.reject_rate
        );
    }
    let sizes: Vec<(String, f64)> = table
        .rows
        .iter()
        .map(|r| (r.basis.clone(), r.reject_rate))
        .collect();
    println!("criterion 2 (size reproduction): PASS ({sizes:?})");
}

#[test]
fn criterion_3_high_frequency_power() {
    // c=0.2, R=200, B=500: Haar p=4 power >= 0.99, Fourier p=4 <= 0.10,
    // Fourier p=11 >= 0.99.
    let mut cfg = preset_table3();
    cfg.replications = 200;
    cfg.ps = vec![4, 11];
    cfg.c_grid = vec![0.2];
    let table = run_power_experiment(&cfg).unwrap();
    let rate = |basis: &str, p: usize| {
        table
            .rows
            .iter()
            .find(|r| r.basis == basis && r.p == p)
            .map(|r| r.reject_rate)
            .unwrap()
    };
    let haar4 = rate("haar", 4);
    let fourier4 = rate("fourier", 4);
    let fourier11 = rate("fourier", 11);
    assert!(haar4 >= 0.99, "criterion 3: FAIL (haar p=4 power {haar4})");
    assert!(
        fourier4 <= 0.10,
        "criterion 3: FAIL (fourier p=4 power {fourier4})"
    );
    assert!(
        fourier11 >= 0.99,
        "criterion 3: FAIL (fourier p=11 power {fourier11})"
    );
    println!(
        "criterion 3 (high-frequency power): PASS (haar4 {haar4}, fourier4 {fourier4}, \
         fourier11 {fourier11})"
    );
}

#[test]
fn criterion_4_power_ordering() {
    // The p=3 power design at R=300: Haar rates within +-0.06 of the
    // reference 0.3380 / 0.9260 / 1.0000 and monotone in c.
    let mut cfg = preset_table2();
    cfg.replications = 300;
    cfg.c_grid = vec![0.321, 0.643, 0.964];
    let table = run_power_experiment(&cfg).unwrap();
    let expected = [(0.321, 0.3380), (0.643, 0.9260), (0.964, 1.0000)];
    let mut haar_rates = Vec::new();
    for &(c, want) in &expected {
        let got = table
            .rows
            .iter()
            .find(|r| r.basis == "haar" && (r.x - c).abs() < 1e-12)
            .map(|r| r.reject_rate)
            .unwrap();
        assert!(
            (got - want).abs() <= 0.06,
            "criterion 4: FAIL (haar power at c={c} is {got}, want {want} +- 0.06)"
        );
        haar_rates.push(got);
    }
    assert!(
        haar_rates[0] <= haar_rates[1] && haar_rates[1] <= haar_rates[2],
        "criterion 4: FAIL (not monotone: {haar_rates:?})"
    );
    println!("criterion 4 (power ordering): PASS ({haar_rates:?})");
}

#[test]
fn criterion_5_figure_diagnostics() {
    // One seeded high-frequency dataset (c = 0.2): the Haar projection curve
    // jumps by >= 10x from p=3 to p=4, the Fourier curve by >= 10x from p=10
    // to p=11, and the Fourier single-score profile peaks at l = 11.
    let cfg = preset_table3();
    let mut rng = stream_rng(cfg.seed, 0);
    let data = generate_dataset(&cfg, None, Some(0.2), &mut rng).unwrap();
    let specs = vec![BasisSpec::haar(11), BasisSpec::fourier(11)];
    let curves = multi_basis_diagnostic(&data, &specs, 11).unwrap();
    let haar = &curves[0].values;
    let fourier = &curves[1].values;
    let haar_jump = haar[3] / haar[2].max(1e-12);
    let fourier_jump = fourier[10] / fourier[9].max(1e-12);
    assert!(
        haar_jump >= 10.0,
        "criterion 5: FAIL (haar p4/p3 ratio {haar_jump})"
    );
    assert!(
        fourier_jump >= 10.0,
        "criterion 5: FAIL (fourier p11/p10 ratio {fourier_jump})"
    );
    let profile = reorder_diagnostic(&data, &BasisSpec::fourier(1), 100, &SpikeRule::default())
        .unwrap();
    let argmax = profile
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0
        + 1;
    assert_eq!(
        argmax, 11,
        "criterion 5: FAIL (profile max at l={argmax}, values {:?})",
        profile.values
    );
    println!(
        "criterion 5 (figure diagnostics): PASS (haar jump {haar_jump:.1}, fourier jump \
         {fourier_jump:.1}, profile max at l=11)"
    );
}

fn random_spd(p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() + DMatrix::identity(p, p) * 0.5
}

#[test]
fn criterion_6_linear_algebra_invariants() {
    // 200 random SPD configurations, p <= 20, k <= 5: P^2 = P and
    // trace(Q) = p(k-1) within 1e-9; affine invariance of T within 1e-8
    // relative; T = 0 on equal-means inputs; the p=1 toy oracle to 1e-12.
    let mut rng = stream_rng(606, 0);
    for _ in 0..200 {
        let p = rng.gen_range(1..=20);
        let k = rng.gen_range(2..=5);
        let covs: Vec<DMatrix<f64>> = (0..k).map(|_| random_spd(p, &mut rng)).collect();
        let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(5..50)).collect();
        let pair = projection_pair(&covs, &sizes).unwrap();
        let sq = &pair.p_mat * &pair.p_mat;
        let idem = (&sq - &pair.p_mat).abs().max();
        assert!(idem < 1e-9, "criterion 6: FAIL (||P^2 - P|| = {idem:.3e})");
        let trace_q = pair.q_mat.trace();
        let want = (p * (k - 1)) as f64;
        assert!(
            (trace_q - want).abs() < 1e-9,
            "criterion 6: FAIL (trace Q = {trace_q}, want {want})"
        );
    }

    // Affine invariance: scores -> scores A^T + b leaves T unchanged.
    for trial in 0..20 {
        let mut rng = stream_rng(607, trial);
        let p = rng.gen_range(1..=6);
        let k = rng.gen_range(2..=4);
        let mats: Vec<ScoreMatrix> = (0..k)
            .map(|j| {
                let n = rng.gen_range((p + 2).max(5)..40);
                let l = chol(&random_spd(p, &mut rng));
                gaussian_scores(&l, n, j, &mut rng)
            })
            .collect();
        let base = t_flrt(&GroupedScores::new(mats.clone()).unwrap()).unwrap().t_flrt;
        let a = loop {
            let cand = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
            if cand.clone().lu().determinant().abs() > 0.1 {
                break cand;
            }
        };
        let shift = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let transformed: Vec<ScoreMatrix> = mats
            .iter()
            .map(|m| {
                let mut x = m.scores() * a.transpose();
                for i in 0..x.nrows() {
                    for j in 0..p {
                        x[(i, j)] += shift[j];
                    }
                }
                ScoreMatrix::new(x, m.group_index())
            })
            .collect();
        let mapped = t_flrt(&GroupedScores::new(transformed).unwrap()).unwrap().t_flrt;
        let rel = (mapped - base).abs() / base.abs().max(1e-300);
        assert!(
            rel < 1e-8,
            "criterion 6: FAIL (affine invariance relative error {rel:.3e})"
        );
    }

    // Equal means by construction: recentre every group to a common mean.
    let mut rng = stream_rng(608, 0);
    let p = 4;
    let l = chol(&random_spd(p, &mut rng));
    let mats: Vec<ScoreMatrix> = (0..3)
        .map(|j| {
            let raw = gaussian_scores(&l, 30, j, &mut rng);
            let mut x = raw.scores().clone();
            let mean = x.row_mean();
            for i in 0..x.nrows() {
                for c in 0..p {
                    x[(i, c)] -= mean[c];
                }
            }
            ScoreMatrix::new(x, j)
        })
        .collect();
    let t0 = t_flrt(&GroupedScores::new(mats).unwrap()).unwrap().t_flrt;
    assert!(t0.abs() < 1e-9, "criterion 6: FAIL (T = {t0} on equal means)");

    // Brute-force oracle on the p=1 toy instance: groups {1,2,3} and
    // {2,3,4}. Means 2 and 3, biased variances 2/3, precision weights
    // n/s2 = 4.5 each, pooled mean 2.5, T = 4.5 * 0.25 * 2 = 2.25.
    let toy = GroupedScores::new(vec![
        ScoreMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], 0).unwrap(),
        ScoreMatrix::from_rows(&[vec![2.0], vec![3.0], vec![4.0]], 1).unwrap(),
    ])
    .unwrap();
    let t_toy = t_flrt(&toy).unwrap().t_flrt;
    assert!(
        (t_toy - 2.25).abs() < 1e-12,
        "criterion 6: FAIL (toy T = {t_toy}, want 2.25)"
    );
    println!("criterion 6 (linear-algebra invariants): PASS");
}

#[test]
fn criterion_7_bootstrap_validity() {
    // H0 Gaussian design, k=2, p=3, n=(100,100), B=500, 500 replicates:
    // bootstrap p-values pass KS uniformity at the 1% level, and identical
    // seeds reproduce identical results bit-for-bit.
    let sigma1 = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 1.5, 0.1, 0.0, 0.1, 0.8]);
    let sigma2 = DMatrix::from_row_slice(3, 3, &[0.6, 0.0, 0.1, 0.0, 2.0, 0.0, 0.1, 0.0, 1.2]);
    let (l1, l2) = (chol(&sigma1), chol(&sigma2));
    let reps = 500;
    let mut pvals: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(707, r);
            let scores = GroupedScores::new(vec![
                gaussian_scores(&l1, 100, 0, &mut rng),
                gaussian_scores(&l2, 100, 1, &mut rng),
            ])
            .unwrap();
            let cfg = BootstrapConfig::new(500, rng.gen::<u64>(), 0.05);
            bootstrap_test(&scores, &cfg).unwrap().p_boot
        })
        .collect();
    // 1% KS critical value: 1.6276 / sqrt(n).
    let crit = 1.6276 / (reps as f64).sqrt();
    let ks = ks_distance(&mut pvals, |x| x.clamp(0.0, 1.0));
    assert!(
        ks < crit,
        "criterion 7: FAIL (KS {ks:.4} >= critical {crit:.4})"
    );

    let mut rng = stream_rng(708, 0);
    let scores = GroupedScores::new(vec![
        gaussian_scores(&l1, 100, 0, &mut rng),
        gaussian_scores(&l2, 100, 1, &mut rng),
    ])
    .unwrap();
    let cfg = BootstrapConfig::new(500, 12345, 0.05);
    let a = bootstrap_test(&scores, &cfg).unwrap();
    let b = bootstrap_test(&scores, &cfg).unwrap();
    assert_eq!(a, b, "criterion 7: FAIL (seeded reruns differ)");
    println!("criterion 7 (bootstrap validity): PASS (KS {ks:.4} < {crit:.4})");
}

#[test]
fn criterion_8_numerical_kernels() {
    // Matern closed forms at nu in {0.5, 1.5, 2.5} to 1e-10 relative.
    for &(nu, sigma2, ell) in &[(0.5, 2.0, 0.7), (1.5, 1.5, 2.0), (2.5, 1.0, 1.0)] {
        let params = MaternParams { sigma2, ell, nu };
        for &d in &[0.01f64, 0.1, 0.4, 0.9] {
            let expect = match nu {
                0.5 => sigma2 * (-d / ell).exp(),
                1.5 => {
                    let s = 3f64.sqrt() * d / ell;
                    sigma2 * (1.0 + s) * (-s).exp()
                }
                _ => {
                    let s = 5f64.sqrt() * d / ell;
                    sigma2 * (1.0 + s + s * s / 3.0) * (-s).exp()
                }
            };
            let got = params.kernel(d);
            let rel = ((got - expect) / expect).abs();
            assert!(
                rel < 1e-10,
                "criterion 8: FAIL (Matern nu={nu} d={d} relative error {rel:.3e})"
            );
        }
    }

    // Bessel recurrence K_{nu+1} = K_{nu-1} + (2 nu / x) K_nu to 1e-9.
    for &nu in &[1.3f64, 2.5, 5.8, 11.4, 25.0] {
        for &x in &[0.01f64, 0.5, 1.9, 2.1, 5.0, 12.0, 50.0] {
            let km1 = bessel_k(nu - 1.0, x).unwrap();
            let k0 = bessel_k(nu, x).unwrap();
            let kp1 = bessel_k(nu + 1.0, x).unwrap();
            if !kp1.is_finite() {
                continue;
            }
            let rhs = km1 + 2.0 * nu / x * k0;
            let rel = ((kp1 - rhs) / rhs).abs();
            assert!(
                rel < 1e-9,
                "criterion 8: FAIL (Bessel recurrence nu={nu} x={x} error {rel:.3e})"
            );
        }
    }

    // Trapezium projection error drops ~4x when the grid doubles.
    let err = |m: usize| {
        let times: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let values: Vec<f64> = times.iter().map(|&t| t * t * t).collect();
        let c = DiscretizedCurve::new(times, values).unwrap();
        let s = project_curve(&c, &BasisSpec::fourier(1)).unwrap();
        (s[0] - 0.25).abs()
    };
    let ratio = err(51) / err(101);
    assert!(
        (3.0..=5.0).contains(&ratio),
        "criterion 8: FAIL (halving ratio {ratio})"
    );
    println!("criterion 8 (numerical kernels): PASS (halving ratio {ratio:.3})");
}
