//! Command-line front end: ingest curve CSVs, run the k-sample mean test
//! with asymptotic or bootstrap calibration, emit basis diagnostics, and
//! drive the simulation presets. Results land in files; the terminal gets a
//! one-line verdict and errors go to stderr with a nonzero exit status.

mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use funkmean::diagnostics::{
    emit_diagnostic_curves, emit_reorder_profile, multi_basis_diagnostic, reorder_diagnostic,
    split_dataset, SpikeRule,
};
use funkmean::simulate::{
    generate_dataset, preset, run_power_experiment, run_size_experiment, ExperimentConfig,
};
use funkmean::{
    bootstrap_test, project_dataset, t_flrt, BasisSpec, BootstrapConfig, Error, FunctionalDataset,
    TestResult,
};

use table::{parse_table, CurveTable};

#[derive(Parser)]
#[command(name = "funkmean", version, about = "k-sample tests for equality of mean functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the covariance-adapted mean test on a curve CSV.
    Test(TestArgs),
    /// Basis-choice diagnostics: projection curves or single-score profiles.
    Diagnose(DiagnoseArgs),
    /// Monte-Carlo size/power experiments from presets or a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Curve CSV, wide (`#grid,...`) or long (`group,id,time,value`).
    input_csv: PathBuf,
    /// Basis family: fourier, haar, or spline.
    #[arg(long, default_value = "fourier")]
    basis: String,
    /// Projection dimension.
    #[arg(long, default_value_t = 3)]
    p: usize,
    /// Calibrate by groupwise bootstrap with this many resamples.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Where to write the RunRecord JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    input_csv: PathBuf,
    /// Comma-separated basis families to compare.
    #[arg(long, value_delimiter = ',', default_value = "fourier")]
    bases: Vec<String>,
    /// Projection-dimension sweep: noncentrality against p = 1..pmax.
    #[arg(long, conflicts_with = "reorder")]
    pmax: Option<usize>,
    /// Single-score profile over basis indices 1..N with spike detection.
    #[arg(long)]
    reorder: Option<usize>,
    /// Train fraction for a seeded split: select on the train half, report
    /// the verdict on the held-out half.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Output stem; artifacts land at <out>.csv / <out>.svg / <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// One of table1, table2, table3, fig1, fig2.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON experiment config (same schema the RunRecord snapshots).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override replications and bootstrap resamples, e.g. `200,200`.
    #[arg(long, value_parser = parse_scale)]
    scale: Option<(usize, usize)>,
    /// Output stem; artifacts land at <out>.csv / <out>.svg / <out>.json.
    #[arg(long)]
    out: PathBuf,
}

fn parse_scale(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected R,B".into());
    }
    let r = parts[0].trim().parse().map_err(|_| "R must be an integer".to_string())?;
    let b = parts[1].trim().parse().map_err(|_| "B must be an integer".to_string())?;
    Ok((r, b))
}

fn basis_spec(name: &str, p: usize) -> anyhow::Result<BasisSpec> {
    let spec = match name {
        "fourier" => BasisSpec::fourier(p),
        "haar" => BasisSpec::haar(p),
        "spline" => BasisSpec::spline_default(p),
        other => bail!("unknown basis {other:?}; expected fourier, haar, or spline"),
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct RunRecord {
    command: String,
    version: String,
    seed: u64,
    config: serde_json::Value,
    group_labels: Vec<String>,
    timings_ms: u128,
    result: serde_json::Value,
}

fn write_record(path: &Path, record: &RunRecord) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(record)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_table(path: &Path) -> anyhow::Result<CurveTable> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table = parse_table(&text)?;
    if table.data.k() < 2 {
        bail!("need at least 2 groups, found {}", table.data.k());
    }
    Ok(table)
}

/// Asymptotic p-value policy: the chi-square reference for small p, the
/// normal reference once p is large enough for the CLT regime.
fn asymptotic_p(result: &TestResult, p: usize) -> (f64, &'static str) {
    if p <= 10 {
        (result.p_chisq, "chisq")
    } else {
        (result.p_normal, "normal")
    }
}

fn lower_p_hint(err: Error) -> anyhow::Error {
    if let Error::SingularCovariance { group, condition } = &err {
        anyhow::anyhow!(
            "group {group} has a singular score covariance (condition {condition:.3e}); \
             try a smaller --p or a different basis"
        )
    } else {
        err.into()
    }
}

fn cmd_test(args: &TestArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let table = read_table(&args.input_csv)?;
    let spec = basis_spec(&args.basis, args.p)?;
    println!("basis={} p={}", args.basis, args.p);
    let scores = project_dataset(&table.data, &spec)?;
    let result = t_flrt(&scores).map_err(lower_p_hint)?;
    let boot = match args.bootstrap {
        Some(b) => {
            let cfg = BootstrapConfig::new(b, args.seed, args.alpha);
            Some(bootstrap_test(&scores, &cfg)?)
        }
        None => None,
    };
    let (p_value, method) = match &boot {
        Some(b) => (b.p_boot, "bootstrap"),
        None => asymptotic_p(&result, args.p),
    };
    let reject = p_value < args.alpha;
    let verdict = if reject { "reject" } else { "fail to reject" };
    println!(
        "T={:.6} W={:.6} p={p_value:.6} ({method}): {verdict} H0 at alpha={}",
        result.t_flrt, result.w, args.alpha
    );
    let record = RunRecord {
        command: "test".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: args.seed,
        config: json!({
            "input": args.input_csv,
            "basis": args.basis,
            "p": args.p,
            "bootstrap": args.bootstrap,
            "alpha": args.alpha,
        }),
        group_labels: table.group_labels.clone(),
        timings_ms: start.elapsed().as_millis(),
        result: json!({
            "test": result,
            "bootstrap": boot,
            "p_value": p_value,
            "method": method,
            "reject": reject,
        }),
    };
    write_record(&args.out, &record)
}

fn parse_bases(names: &[String], p: usize) -> anyhow::Result<Vec<BasisSpec>> {
    names.iter().map(|n| basis_spec(n, p)).collect()
}

/// Selection step for --split: the (basis, p) pair with the largest
/// noncentrality diagnostic on the train half.
fn select_on_train(
    train: &FunctionalDataset,
    bases: &[String],
    pmax: usize,
) -> anyhow::Result<(String, usize)> {
    let specs = parse_bases(bases, pmax)?;
    let curves = multi_basis_diagnostic(train, &specs, pmax)?;
    let mut best = (bases[0].clone(), 1, f64::NEG_INFINITY);
    for (name, curve) in bases.iter().zip(&curves) {
        for (i, &v) in curve.values.iter().enumerate() {
            if v > best.2 {
                best = (name.clone(), i + 1, v);
            }
        }
    }
    Ok((best.0, best.1))
}

fn cmd_diagnose(args: &DiagnoseArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let table = read_table(&args.input_csv)?;
    if args.pmax.is_none() && args.reorder.is_none() {
        bail!("pass either --pmax or --reorder");
    }
    let (work, holdout) = match args.split {
        Some(ratio) => {
            let (train, test) = split_dataset(&table.data, ratio, args.seed)?;
            (train, Some(test))
        }
        None => (table.data.clone(), None),
    };
    let mut artifacts: Vec<String> = Vec::new();
    let mut payload = serde_json::Map::new();
    if let Some(pmax) = args.pmax {
        let specs = parse_bases(&args.bases, pmax)?;
        let curves = multi_basis_diagnostic(&work, &specs, pmax)?;
        emit_diagnostic_curves(&curves, &args.out)?;
        artifacts.push(format!("{}.csv", args.out.display()));
        artifacts.push(format!("{}.svg", args.out.display()));
        payload.insert("curves".into(), serde_json::to_value(&curves)?);
    }
    if let Some(n) = args.reorder {
        for name in &args.bases {
            let spec = basis_spec(name, 1)?;
            let profile = reorder_diagnostic(&work, &spec, n, &SpikeRule::default())?;
            let stem = if args.bases.len() == 1 {
                args.out.clone()
            } else {
                args.out.with_file_name(format!(
                    "{}-{}",
                    args.out.file_name().unwrap_or_default().to_string_lossy(),
                    name
                ))
            };
            emit_reorder_profile(&profile, &stem)?;
            artifacts.push(format!("{}.csv", stem.display()));
            artifacts.push(format!("{}.svg", stem.display()));
            println!("basis={name} spikes at indices {:?}", profile.spikes);
            payload.insert(format!("profile_{name}"), serde_json::to_value(&profile)?);
        }
    }
    if let Some(test_half) = holdout {
        // Selecting the basis on the same data used for the final test
        // inflates the type-I error; the verdict below comes from curves the
        // selection step never saw.
        let pmax = args.pmax.unwrap_or(3);
        let (sel_basis, sel_p) = select_on_train(&work, &args.bases, pmax)?;
        println!("selected basis={sel_basis} p={sel_p} on the train half");
        let spec = basis_spec(&sel_basis, sel_p)?;
        let scores = project_dataset(&test_half, &spec)?;
        let result = t_flrt(&scores).map_err(lower_p_hint)?;
        let (p_value, method) = asymptotic_p(&result, sel_p);
        let verdict = if p_value < args.alpha { "reject" } else { "fail to reject" };
        println!(
            "held-out: T={:.6} p={p_value:.6} ({method}): {verdict} H0 at alpha={}",
            result.t_flrt, args.alpha
        );
        payload.insert(
            "holdout".into(),
            json!({
                "basis": sel_basis,
                "p": sel_p,
                "test": result,
                "p_value": p_value,
                "method": method,
            }),
        );
    }
    payload.insert("artifacts".into(), serde_json::to_value(&artifacts)?);
    let record = RunRecord {
        command: "diagnose".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: args.seed,
        config: json!({
            "input": args.input_csv,
            "bases": args.bases,
            "pmax": args.pmax,
            "reorder": args.reorder,
            "split": args.split,
            "alpha": args.alpha,
        }),
        group_labels: table.group_labels.clone(),
        timings_ms: start.elapsed().as_millis(),
        result: serde_json::Value::Object(payload),
    };
    write_record(&args.out.with_extension("json"), &record)
}

/// The figure presets draw one seeded dataset from the high-frequency design
/// (shift magnitude c = 0.2) and emit the corresponding diagnostic.
fn run_figure(name: &str, cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<serde_json::Value> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let data = generate_dataset(cfg, None, Some(0.2), &mut rng)?;
    match name {
        "fig1" => {
            let pmax = 11;
            let specs = vec![BasisSpec::haar(pmax), BasisSpec::fourier(pmax)];
            let curves = multi_basis_diagnostic(&data, &specs, pmax)?;
            emit_diagnostic_curves(&curves, out)?;
            Ok(serde_json::to_value(&curves)?)
        }
        "fig2" => {
            let profile = reorder_diagnostic(&data, &BasisSpec::fourier(1), 100, &SpikeRule::default())?;
            emit_reorder_profile(&profile, out)?;
            println!("spikes at indices {:?}", profile.spikes);
            Ok(serde_json::to_value(&profile)?)
        }
        _ => unreachable!("only figure presets reach run_figure"),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let (mut cfg, label) = match (&args.preset, &args.config) {
        (Some(name), None) => (preset(name)?, name.clone()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            (cfg, path.display().to_string())
        }
        _ => bail!("pass exactly one of --preset or --config"),
    };
    if let Some((r, b)) = args.scale {
        cfg = cfg.with_scale(r, b);
    }
    let payload = if label == "fig1" || label == "fig2" {
        run_figure(&label, &cfg, &args.out)?
    } else {
        let is_size = matches!(args.preset.as_deref(), Some("table1"))
            || (args.config.is_some() && !cfg.nu_grid.is_empty());
        let (table, x_label) = if is_size {
            (run_size_experiment(&cfg)?, "nu")
        } else {
            (run_power_experiment(&cfg)?, "c")
        };
        table.write_csv(&args.out.with_extension("csv"))?;
        table.write_svg(&args.out.with_extension("svg"), x_label)?;
        for row in &table.rows {
            println!(
                "{x_label}={} basis={} p={} reject_rate={:.4}",
                row.x, row.basis, row.p, row.reject_rate
            );
        }
        serde_json::to_value(&table)?
    };
    let record = RunRecord {
        command: "simulate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: serde_json::to_value(&cfg)?,
        group_labels: Vec::new(),
        timings_ms: start.elapsed().as_millis(),
        result: payload,
    };
    write_record(&args.out.with_extension("json"), &record)
}

fn init_threads() {
    if let Ok(raw) = std::env::var("FUNKMEAN_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                // A failure here means a pool already exists; keep going.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        } else {
            log::warn!("ignoring unparseable FUNKMEAN_THREADS={raw:?}");
        }
    }
}

fn main() {
    env_logger::init();
    init_threads();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
