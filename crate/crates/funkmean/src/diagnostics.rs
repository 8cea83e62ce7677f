//! Basis-choice diagnostics: the noncentrality estimate traced over p for
//! several bases, the single-basis-function reordering profile with spike
//! detection, and CSV/SVG emission of both.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::flrt::noncentrality_estimate;
use crate::plot::{line_chart, Series};
use crate::projection::{project_dataset, FunctionalDataset};

/// Noncentrality estimates indexed by p = 1..p_max for one basis.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DiagnosticCurve {
    pub basis_label: String,
    pub values: Vec<f64>,
}

/// Single-basis-function noncentralities indexed by l = 1..N, with flagged
/// spikes (1-based indices, largest value first).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReorderProfile {
    pub basis_label: String,
    pub values: Vec<f64>,
    pub spikes: Vec<usize>,
}

/// Spike rule: flag values above median + c * MAD that also clear an absolute
/// floor tau, keeping at most `max_count` (largest first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeRule {
    pub c: f64,
    pub tau: f64,
    pub max_count: usize,
}

impl Default for SpikeRule {
    fn default() -> Self {
        Self {
            c: 5.0,
            tau: 1e-3,
            max_count: 5,
        }
    }
}

fn with_basis_context(e: Error, basis: &BasisSpec, p: usize) -> Error {
    match e {
        Error::SingularCovariance { group, condition } => Error::InvalidDataset(format!(
            "singular covariance in group {group} (condition {condition:.3e}) \
             for basis {} at p = {p}",
            basis.label()
        )),
        other => other,
    }
}

/// Trace the noncentrality estimate over p = 1..p_max for each basis.
pub fn multi_basis_diagnostic(
    data: &FunctionalDataset,
    specs: &[BasisSpec],
    p_max: usize,
) -> Result<Vec<DiagnosticCurve>> {
    if p_max == 0 {
        return Err(Error::InvalidConfig("p_max must be at least 1".into()));
    }
    let min_n = data.groups().iter().map(|g| g.len()).min().unwrap_or(0);
    if min_n < 5 * p_max {
        log::warn!(
            "smallest group has {min_n} curves for p_max = {p_max}; diagnostic values \
             may be volatile at the larger p"
        );
    }
    let mut curves = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut full = spec.clone();
        full.p = p_max;
        let scores =
            project_dataset(data, &full).map_err(|e| with_basis_context(e, spec, p_max))?;
        let mut values = Vec::with_capacity(p_max);
        for p in 1..=p_max {
            let cols: Vec<usize> = (0..p).collect();
            let sub = scores.select_columns(&cols)?;
            let v = noncentrality_estimate(&sub).map_err(|e| with_basis_context(e, spec, p))?;
            values.push(v);
        }
        curves.push(DiagnosticCurve {
            basis_label: spec.label(),
            values,
        });
    }
    Ok(curves)
}

/// Screen the first `n_funcs` basis functions one at a time, recording the
/// 1-dimensional noncentrality each produces alone.
pub fn reorder_diagnostic(
    data: &FunctionalDataset,
    spec: &BasisSpec,
    n_funcs: usize,
    rule: &SpikeRule,
) -> Result<ReorderProfile> {
    if n_funcs == 0 {
        return Err(Error::InvalidConfig("N must be at least 1".into()));
    }
    let mut full = spec.clone();
    full.p = n_funcs;
    let scores = project_dataset(data, &full).map_err(|e| with_basis_context(e, spec, n_funcs))?;
    let mut values = Vec::with_capacity(n_funcs);
    for l in 0..n_funcs {
        let sub = scores.select_columns(&[l])?;
        let v = noncentrality_estimate(&sub).map_err(|e| with_basis_context(e, spec, l + 1))?;
        values.push(v);
    }
    let spikes = detect_spikes(&values, rule);
    Ok(ReorderProfile {
        basis_label: spec.label(),
        values,
        spikes,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Apply the spike rule; returns 1-based indices, largest value first.
pub fn detect_spikes(values: &[f64], rule: &SpikeRule) -> Vec<usize> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let med = median(&sorted);
    let mut devs: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    devs.sort_by(|a, b| a.total_cmp(b));
    let mad = median(&devs);
    let threshold = med + rule.c * mad;
    let mut flagged: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold && v > rule.tau)
        .map(|(i, &v)| (i + 1, v))
        .collect();
    flagged.sort_by(|a, b| b.1.total_cmp(&a.1));
    flagged.truncate(rule.max_count);
    flagged.into_iter().map(|(i, _)| i).collect()
}

/// Split each group 50/50 (or by `ratio`) into train and test halves, seeded.
pub fn split_dataset(
    data: &FunctionalDataset,
    ratio: f64,
    seed: u64,
) -> Result<(FunctionalDataset, FunctionalDataset)> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split ratio must lie in (0,1), got {ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(data.k());
    let mut test = Vec::with_capacity(data.k());
    for group in data.groups() {
        let mut idx: Vec<usize> = (0..group.len()).collect();
        idx.shuffle(&mut rng);
        let cut = ((group.len() as f64 * ratio).round() as usize)
            .max(1)
            .min(group.len() - 1);
        let (a, b) = idx.split_at(cut);
        train.push(a.iter().map(|&i| group[i].clone()).collect());
        test.push(b.iter().map(|&i| group[i].clone()).collect());
    }
    Ok((FunctionalDataset::new(train)?, FunctionalDataset::new(test)?))
}

/// CSV with header `index,value,basis`, one row per (index, basis) cell.
pub fn curves_to_csv(curves: &[DiagnosticCurve]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::EmptyInput("no diagnostic curves".into()));
    }
    let mut out = String::from("index,value,basis\n");
    for c in curves {
        for (i, v) in c.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, v, c.basis_label));
        }
    }
    Ok(out)
}

pub fn profile_to_csv(profile: &ReorderProfile) -> Result<String> {
    curves_to_csv(std::slice::from_ref(&DiagnosticCurve {
        basis_label: profile.basis_label.clone(),
        values: profile.values.clone(),
    }))
}

/// Write `<base>.csv` and `<base>.svg` for a set of diagnostic curves.
pub fn emit_diagnostic_curves(curves: &[DiagnosticCurve], base: &Path) -> Result<()> {
    let csv = curves_to_csv(curves)?;
    std::fs::write(base.with_extension("csv"), csv)?;
    let xs: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| (1..=c.values.len()).map(|i| i as f64).collect())
        .collect();
    let series: Vec<Series> = curves
        .iter()
        .zip(&xs)
        .map(|(c, x)| Series {
            label: &c.basis_label,
            xs: x,
            ys: &c.values,
            markers: true,
        })
        .collect();
    let svg = line_chart("Noncentrality by projection dimension", "p", "value", &series);
    std::fs::write(base.with_extension("svg"), svg)?;
    Ok(())
}

/// Write `<base>.csv` and `<base>.svg` for a reordering profile.
pub fn emit_reorder_profile(profile: &ReorderProfile, base: &Path) -> Result<()> {
    let csv = profile_to_csv(profile)?;
    std::fs::write(base.with_extension("csv"), csv)?;
    let xs: Vec<f64> = (1..=profile.values.len()).map(|i| i as f64).collect();
    let series = [Series {
        label: &profile.basis_label,
        xs: &xs,
        ys: &profile.values,
        markers: true,
    }];
    let svg = line_chart(
        "Single-function noncentrality by basis index",
        "basis index",
        "value",
        &series,
    );
    std::fs::write(base.with_extension("svg"), svg)?;
    Ok(())
}
