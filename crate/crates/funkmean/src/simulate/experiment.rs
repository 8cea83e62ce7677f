//! Monte-Carlo size and power experiment drivers over Matern Gaussian
//! processes, with named presets mirroring the shipped simulation designs.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::bootstrap::{bootstrap_test, replicate_rng, BootstrapConfig};
use crate::error::{Error, Result};
use crate::plot::{line_chart, Series};
use crate::projection::{project_dataset, FunctionalDataset};
use crate::simulate::gp::GpSampler;
use crate::simulate::matern::{matern_cov, MaternParams};

/// Mean functions used by the simulation designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum MeanSpec {
    Zero,
    /// c * x
    Linear { c: f64 },
    /// -c * x^2
    NegQuadratic { c: f64 },
    /// x + c * sqrt(2) * sin(10 pi x)
    IdentityPlusSine { c: f64 },
    /// Arbitrary values on the simulation grid.
    CustomTable { values: Vec<f64> },
}

impl MeanSpec {
    pub fn evaluate(&self, times: &[f64]) -> Result<Vec<f64>> {
        match self {
            MeanSpec::Zero => Ok(vec![0.0; times.len()]),
            MeanSpec::Linear { c } => Ok(times.iter().map(|&t| c * t).collect()),
            MeanSpec::NegQuadratic { c } => Ok(times.iter().map(|&t| -c * t * t).collect()),
            MeanSpec::IdentityPlusSine { c } => Ok(times
                .iter()
                .map(|&t| t + c * std::f64::consts::SQRT_2 * (10.0 * std::f64::consts::PI * t).sin())
                .collect()),
            MeanSpec::CustomTable { values } => {
                if values.len() != times.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "custom mean table has {} entries for a {}-point grid",
                        values.len(),
                        times.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }

    /// Replace the shift magnitude for the parametric families.
    pub fn with_c(&self, c: f64) -> MeanSpec {
        match self {
            MeanSpec::Linear { .. } => MeanSpec::Linear { c },
            MeanSpec::NegQuadratic { .. } => MeanSpec::NegQuadratic { c },
            MeanSpec::IdentityPlusSine { .. } => MeanSpec::IdentityPlusSine { c },
            other => other.clone(),
        }
    }
}

/// One population: its covariance, its mean, and whether the power sweep's
/// shift magnitude c applies to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDesign {
    pub matern: MaternParams,
    pub mean: MeanSpec,
    #[serde(default = "default_true")]
    pub sweep_c: bool,
}

fn default_true() -> bool {
    true
}

/// Full experiment design, mirrored field-for-field by the JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub groups: Vec<GroupDesign>,
    pub bases: Vec<BasisSpec>,
    pub ps: Vec<usize>,
    pub replications: usize,
    pub bootstrap_b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    /// Size experiments: smoothness values swept with all means equal.
    #[serde(default)]
    pub nu_grid: Vec<f64>,
    /// Power experiments: shift magnitudes applied to sweeping groups.
    #[serde(default)]
    pub c_grid: Vec<f64>,
}

fn default_grid_points() -> usize {
    100
}

fn default_alpha() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.groups.len() != self.sizes.len() || self.groups.len() < 2 {
            return Err(Error::InvalidConfig(
                "need one group design per sample size, k >= 2".into(),
            ));
        }
        if self.sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("every group size must be >= 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
        }
        if self.bases.is_empty() || self.ps.is_empty() {
            return Err(Error::InvalidConfig("need at least one basis and one p".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        for g in &self.groups {
            g.matern.validate()?;
        }
        Ok(())
    }

    /// m equally spaced points on [0,1] inclusive of both endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points;
        (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
    }

    /// Override replication and bootstrap counts (the `--scale R,B` knob).
    pub fn with_scale(mut self, replications: usize, bootstrap_b: usize) -> Self {
        self.replications = replications;
        self.bootstrap_b = bootstrap_b;
        self
    }
}

/// One row of a size or power table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    /// The swept quantity: nu for size tables, c for power tables.
    pub x: f64,
    pub basis: String,
    pub p: usize,
    pub reject_rate: f64,
    pub r: usize,
    pub b: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

pub type SizeTable = ExperimentTable;
pub type PowerTable = ExperimentTable;

impl ExperimentTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("nu_or_c,basis,p,reject_rate,R,B,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.x, r.basis, r.p, r.reject_rate, r.r, r.b, r.seed
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Power-curve SVG: one series per (basis, p), rejection rate against x.
    pub fn write_svg(&self, path: &Path, x_label: &str) -> Result<()> {
        let mut keys: Vec<(String, usize)> = self
            .rows
            .iter()
            .map(|r| (r.basis.clone(), r.p))
            .collect();
        keys.sort();
        keys.dedup();
        let data: Vec<(String, Vec<f64>, Vec<f64>)> = keys
            .iter()
            .map(|(basis, p)| {
                let mut pts: Vec<(f64, f64)> = self
                    .rows
                    .iter()
                    .filter(|r| &r.basis == basis && r.p == *p)
                    .map(|r| (r.x, r.reject_rate))
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                (
                    format!("{basis} p={p}"),
                    pts.iter().map(|v| v.0).collect(),
                    pts.iter().map(|v| v.1).collect(),
                )
            })
            .collect();
        let series: Vec<Series> = data
            .iter()
            .map(|(label, xs, ys)| Series {
                label,
                xs,
                ys,
                markers: true,
            })
            .collect();
        let svg = line_chart("Rejection rate", x_label, "rejection rate", &series);
        std::fs::write(path, svg)?;
        Ok(())
    }
}

/// Generate one dataset from the design, with optional overrides of the
/// smoothness (all groups) and the mean-shift magnitude (sweeping groups).
pub fn generate_dataset(
    cfg: &ExperimentConfig,
    nu_override: Option<f64>,
    c_override: Option<f64>,
    rng: &mut impl Rng,
) -> Result<FunctionalDataset> {
    let grid = cfg.grid();
    let mut groups = Vec::with_capacity(cfg.groups.len());
    for (design, &n) in cfg.groups.iter().zip(&cfg.sizes) {
        let mut params = design.matern;
        if let Some(nu) = nu_override {
            params.nu = nu;
        }
        let mean_spec = match c_override {
            Some(c) if design.sweep_c => design.mean.with_c(c),
            _ => design.mean.clone(),
        };
        let mean = mean_spec.evaluate(&grid)?;
        let cov = matern_cov(&params, &grid)?;
        let sampler = GpSampler::new(grid.clone(), mean, cov)?;
        groups.push((0..n).map(|_| sampler.sample(rng)).collect());
    }
    FunctionalDataset::new(groups)
}

struct SamplerSet {
    samplers: Vec<(GpSampler, usize)>,
}

impl SamplerSet {
    fn build(cfg: &ExperimentConfig, nu_override: Option<f64>, c_override: Option<f64>) -> Result<Self> {
        let grid = cfg.grid();
        let mut samplers = Vec::with_capacity(cfg.groups.len());
        for (design, &n) in cfg.groups.iter().zip(&cfg.sizes) {
            let mut params = design.matern;
            if let Some(nu) = nu_override {
                params.nu = nu;
            }
            let mean_spec = match c_override {
                Some(c) if design.sweep_c => design.mean.with_c(c),
                _ => design.mean.clone(),
            };
            let mean = mean_spec.evaluate(&grid)?;
            let cov = matern_cov(&params, &grid)?;
            samplers.push((GpSampler::new(grid.clone(), mean, cov)?, n));
        }
        Ok(Self { samplers })
    }

    fn draw(&self, rng: &mut impl Rng) -> Result<FunctionalDataset> {
        FunctionalDataset::new(
            self.samplers
                .iter()
                .map(|(s, n)| (0..*n).map(|_| s.sample(rng)).collect())
                .collect(),
        )
    }
}

/// Shared driver: for each sweep point, run R replications of
/// generate -> project -> bootstrap test, counting rejections per (basis, p).
fn run_sweep(
    cfg: &ExperimentConfig,
    sweep: &[(f64, Option<f64>, Option<f64>)],
) -> Result<ExperimentTable> {
    cfg.validate()?;
    let p_top: usize = *cfg.ps.iter().max().unwrap();
    let mut rows = Vec::new();
    for (sweep_idx, &(x, nu_override, c_override)) in sweep.iter().enumerate() {
        let samplers = SamplerSet::build(cfg, nu_override, c_override)?;
        let combos: Vec<(usize, usize)> = (0..cfg.bases.len())
            .flat_map(|bi| cfg.ps.iter().map(move |&p| (bi, p)))
            .collect();
        let counts: Vec<Vec<usize>> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| {
                let stream = (sweep_idx as u64) * cfg.replications as u64 + r;
                let mut rng = replicate_rng(cfg.seed, stream);
                let data = samplers.draw(&mut rng)?;
                let mut rejects = vec![0usize; combos.len()];
                // Scores at the largest p per basis; smaller p reuse columns.
                for (bi, basis) in cfg.bases.iter().enumerate() {
                    let mut full = basis.clone();
                    full.p = p_top;
                    let scores = project_dataset(&data, &full)?;
                    for (ci, &(cbi, p)) in combos.iter().enumerate() {
                        if cbi != bi {
                            continue;
                        }
                        let cols: Vec<usize> = (0..p).collect();
                        let sub = scores.select_columns(&cols)?;
                        let boot_cfg = BootstrapConfig::new(
                            cfg.bootstrap_b,
                            rng.gen::<u64>(),
                            cfg.alpha,
                        );
                        let res = bootstrap_test(&sub, &boot_cfg)?;
                        if res.reject {
                            rejects[ci] = 1;
                        }
                    }
                }
                Ok(rejects)
            })
            .collect::<Result<Vec<Vec<usize>>>>()?;
        for (ci, &(bi, p)) in combos.iter().enumerate() {
            let total: usize = counts.iter().map(|c| c[ci]).sum();
            rows.push(ExperimentRow {
                x,
                basis: cfg.bases[bi].label(),
                p,
                reject_rate: total as f64 / cfg.replications as f64,
                r: cfg.replications,
                b: cfg.bootstrap_b,
                seed: cfg.seed,
            });
        }
    }
    Ok(ExperimentTable { rows })
}

/// Type-I error sweep over the nu grid; requires all group means equal.
pub fn run_size_experiment(cfg: &ExperimentConfig) -> Result<SizeTable> {
    let first_mean = &cfg.groups[0].mean;
    if cfg.groups.iter().any(|g| &g.mean != first_mean) {
        return Err(Error::InvalidConfig(
            "size experiments require identical mean functions across groups".into(),
        ));
    }
    let sweep: Vec<(f64, Option<f64>, Option<f64>)> = if cfg.nu_grid.is_empty() {
        vec![(cfg.groups[0].matern.nu, None, None)]
    } else {
        cfg.nu_grid.iter().map(|&nu| (nu, Some(nu), None)).collect()
    };
    run_sweep(cfg, &sweep)
}

/// Power sweep over the c grid.
pub fn run_power_experiment(cfg: &ExperimentConfig) -> Result<PowerTable> {
    let means_identical = cfg.groups.iter().all(|g| g.mean == cfg.groups[0].mean);
    let sweeps_nonzero = cfg.c_grid.iter().any(|&c| c != 0.0);
    if means_identical && !sweeps_nonzero {
        return Err(Error::InvalidConfig(
            "power experiments need some mean difference across groups".into(),
        ));
    }
    let sweep: Vec<(f64, Option<f64>, Option<f64>)> = if cfg.c_grid.is_empty() {
        vec![(0.0, None, None)]
    } else {
        cfg.c_grid.iter().map(|&c| (c, None, Some(c))).collect()
    };
    run_sweep(cfg, &sweep)
}

/// The size design: n = (50, 30), Matern groups (ell, sigma2) = (1, 5) and
/// (4, 1), equal zero means, p = 2, nu swept over the canonical grid.
pub fn preset_table1() -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![50, 30],
        grid_points: 100,
        groups: vec![
            GroupDesign {
                matern: MaternParams {
                    sigma2: 5.0,
                    ell: 1.0,
                    nu: 5.0,
                },
                mean: MeanSpec::Zero,
                sweep_c: true,
            },
            GroupDesign {
                matern: MaternParams {
                    sigma2: 1.0,
                    ell: 4.0,
                    nu: 5.0,
                },
                mean: MeanSpec::Zero,
                sweep_c: true,
            },
        ],
        bases: vec![BasisSpec::haar(2), BasisSpec::fourier(2)],
        ps: vec![2],
        replications: 1000,
        bootstrap_b: 500,
        alpha: 0.05,
        seed: 20240801,
        nu_grid: vec![0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 50.0],
        c_grid: vec![],
    }
}

/// The low-frequency power design: means c*x versus -c*x^2 at p = 3.
pub fn preset_table2() -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![50, 30],
        grid_points: 100,
        groups: vec![
            GroupDesign {
                matern: MaternParams {
                    sigma2: 5.0,
                    ell: 1.0,
                    nu: 5.0,
                },
                mean: MeanSpec::Linear { c: 1.0 },
                sweep_c: true,
            },
            GroupDesign {
                matern: MaternParams {
                    sigma2: 1.0,
                    ell: 0.5,
                    nu: 5.0,
                },
                mean: MeanSpec::NegQuadratic { c: 1.0 },
                sweep_c: true,
            },
        ],
        bases: vec![BasisSpec::haar(3), BasisSpec::fourier(3)],
        ps: vec![3],
        replications: 1000,
        bootstrap_b: 500,
        alpha: 0.05,
        seed: 20240802,
        nu_grid: vec![],
        c_grid: vec![
            0.0, 0.107, 0.214, 0.321, 0.429, 0.536, 0.643, 0.750, 0.857, 0.964, 1.070, 1.180,
            1.290,
        ],
    }
}

/// The high-frequency power design: n = (500, 300), mean shift
/// c*sqrt(2)*sin(10 pi x) riding on the identity.
pub fn preset_table3() -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![500, 300],
        grid_points: 100,
        groups: vec![
            GroupDesign {
                matern: MaternParams {
                    sigma2: 5.0,
                    ell: 1.0,
                    nu: 5.0,
                },
                mean: MeanSpec::Linear { c: 1.0 },
                sweep_c: false,
            },
            GroupDesign {
                matern: MaternParams {
                    sigma2: 1.0,
                    ell: 0.5,
                    nu: 5.0,
                },
                mean: MeanSpec::IdentityPlusSine { c: 0.0 },
                sweep_c: true,
            },
        ],
        bases: vec![BasisSpec::haar(11), BasisSpec::fourier(11)],
        ps: vec![2, 3, 4, 5, 10, 11],
        replications: 1000,
        bootstrap_b: 500,
        alpha: 0.05,
        seed: 20240803,
        nu_grid: vec![],
        c_grid: vec![0.0, 0.2, 0.4, 0.6],
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "table1" => Ok(preset_table1()),
        "table2" => Ok(preset_table2()),
        // fig1 and fig2 draw one dataset from the table3 design, so they share
        // its config.
        "table3" | "fig1" | "fig2" => Ok(preset_table3()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}
