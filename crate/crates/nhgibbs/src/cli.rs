//! Command-line front end.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nhgibbs_core::config::Region;
use nhgibbs_core::estimate::{two_step, EstimateError, QuadratureSpec};
use nhgibbs_core::geometry::{Boundary, TorusWindow};
use nhgibbs_core::gnz::{gnz_sample, GnzError, GnzReport, TestFunctional, Z_THRESHOLD};
use nhgibbs_core::models::{Model, ModelError};
use nhgibbs_core::oracle::{brute_window_energy, MAX_POINTS};
use nhgibbs_core::sampler::run_chain;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::io;
use crate::spec::{check_quadrature, KeyValues, ModelSpec, KEYS_HELP};
use crate::study;

#[derive(Debug, Parser)]
#[command(name = "nhgibbs", version, about = "Gibbs point processes with non-hereditary hardcores", after_long_help = KEYS_HELP)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate on the torus and write a sample archive.
    Simulate(SimulateArgs),
    /// Two-step fit of one pattern.
    Estimate(EstimateArgs),
    /// Check the equilibrium identity on a sample archive.
    GnzCheck(GnzArgs),
    /// Replicate fits along a ladder of window sides.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model configuration file.
    #[arg(long)]
    pub model_spec: PathBuf,
    /// Side of the square torus.
    #[arg(long)]
    pub window: f64,
    /// Steps discarded before the first sample.
    #[arg(long)]
    pub burn: u64,
    /// Samples written.
    #[arg(long)]
    pub keep: usize,
    /// Steps between samples.
    #[arg(long)]
    pub thin: u64,
    /// Root seed.
    #[arg(long, env = "NHGIBBS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Random stream within the seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Archive directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Cross-check every 10th sample against the brute-force energy.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Model configuration file.
    #[arg(long)]
    pub model_spec: PathBuf,
    /// Pattern CSV.
    #[arg(long)]
    pub pattern: PathBuf,
    /// Boundary of the observation window.
    #[arg(long, value_parser = ["torus", "plane"])]
    pub boundary: String,
    /// Window side when the pattern header lacks one.
    #[arg(long)]
    pub window: Option<f64>,
    /// Dummy points per unit area.
    #[arg(long)]
    pub quad: Option<f64>,
    /// Result CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GnzArgs {
    /// Model configuration file.
    #[arg(long)]
    pub model_spec: PathBuf,
    /// Archive directory written by `simulate`.
    #[arg(long)]
    pub samples: PathBuf,
    /// Comma list of constant_one, statistic_component:I (from 1),
    /// empty_ball:R, or `all` for the constant and every statistic.
    #[arg(long, default_value = "all")]
    pub functionals: String,
    /// Dummy points per unit area.
    #[arg(long)]
    pub quad: Option<f64>,
    /// Largest acceptable |z|.
    #[arg(long, default_value_t = Z_THRESHOLD)]
    pub z_max: f64,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Study configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the root seed of the configuration.
    #[arg(long, env = "NHGIBBS_SEED")]
    pub seed: Option<u64>,
}

pub fn threads(requested: Option<usize>) -> usize {
    requested
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = threads(cli.threads);
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Estimate(a) => cmd_estimate(&a).map(|_| ()),
        Command::GnzCheck(a) => cmd_gnz_check(&a, threads).map(|_| ()),
        Command::Study(a) => cmd_study(&a, threads),
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let spec = ModelSpec::read(&a.model_spec)?;
    let window = TorusWindow::torus(a.window).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut sc = spec.sampler_config()?;
    sc.burn_in = a.burn;
    sc.keep = a.keep;
    sc.thin = a.thin;
    sc.seed = a.seed;
    sc.stream = a.stream;
    let set = run_chain(&spec.model, &spec.params, &window, &sc)?;
    if a.oracle {
        oracle_check(&spec, &set.samples)?;
    }
    io::write_archive(&a.out, &spec, &set, a.window)
}

fn oracle_check(spec: &ModelSpec, samples: &[nhgibbs_core::config::PointConfiguration]) -> Result<()> {
    if matches!(spec.model, Model::Delaunay(_)) {
        eprintln!("warning: the brute-force Delaunay oracle is plane-only; skipping the torus cross-check");
        return Ok(());
    }
    for (i, cfg) in samples.iter().enumerate().step_by(10) {
        if cfg.len() > MAX_POINTS {
            eprintln!("warning: sample {i} has {} points, above the oracle limit {MAX_POINTS}; skipped", cfg.len());
            continue;
        }
        let fast = spec.model.window_energy(&spec.params, cfg, &Region::Whole)?;
        let slow = brute_window_energy(&spec.model, &spec.params, cfg, &Region::Whole)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let agree = match (fast.value(), slow.value()) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0),
            (None, None) => true,
            _ => false,
        };
        if !agree {
            return Err(CliError::Internal(format!("sample {i}: energy {fast:?} but oracle {slow:?}")));
        }
    }
    Ok(())
}

/// Writes the estimate row. Degenerate data still writes its flagged row
/// and reports the condition on stderr.
pub fn cmd_estimate(a: &EstimateArgs) -> Result<bool> {
    let spec = ModelSpec::read(&a.model_spec)?;
    let boundary = io::parse_boundary(&a.boundary)?;
    let cfg = io::read_pattern(&a.pattern, a.window, Some(boundary))?;
    let quad = match a.quad {
        Some(d) => check_quadrature(QuadratureSpec { density: d })?,
        None => spec.quadrature()?,
    };
    let (result, degenerate) = match two_step(&spec.model, &cfg, &Region::Whole, &spec.theta_box()?, &quad) {
        Ok(r) => (r, false),
        Err(EstimateError::DegenerateData(r)) => (*r, true),
        Err(e) => return Err(e.into()),
    };
    io::write_text(&a.out, &io::estimate_csv(&result, cfg.len(), cfg.window().side()))?;
    if degenerate {
        eprintln!("warning: degenerate data, the estimate lies on the parameter box boundary");
    }
    Ok(degenerate)
}

pub fn parse_functionals(list: &str, model: &Model) -> Result<Vec<TestFunctional>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || CliError::Invalid(format!("unknown functional `{item}`"));
        match item.split_once(':') {
            None if item == "all" => {
                out.push(TestFunctional::ConstantOne);
                out.extend((0..model.dim()).map(TestFunctional::StatisticComponent));
            }
            None if item == "constant_one" => out.push(TestFunctional::ConstantOne),
            Some(("statistic_component", i)) => {
                let i: usize = i.parse().map_err(|_| bad())?;
                if i == 0 {
                    return Err(bad());
                }
                out.push(TestFunctional::StatisticComponent(i - 1));
            }
            Some(("empty_ball", r)) => out.push(TestFunctional::EmptyBall(r.parse().map_err(|_| bad())?)),
            _ => return Err(bad()),
        }
    }
    for f in &out {
        f.validate(model)?;
    }
    if out.is_empty() {
        return Err(CliError::Invalid("no functionals given".into()));
    }
    Ok(out)
}

pub fn cmd_gnz_check(a: &GnzArgs, threads: usize) -> Result<GnzReport> {
    let spec = ModelSpec::read(&a.model_spec)?;
    let fs = parse_functionals(&a.functionals, &spec.model)?;
    let quad = match a.quad {
        Some(d) => check_quadrature(QuadratureSpec { density: d })?,
        None => spec.quadrature()?,
    };
    let archive = io::read_archive(&a.samples)?;
    if archive.samples.is_empty() {
        return Err(GnzError::EmptySampleSet.into());
    }
    if let Some(b) = archive.samples.iter().find(|(_, c)| c.window().boundary() != Boundary::Torus) {
        return Err(CliError::BadFile { path: b.0.clone(), message: "samples must live on the torus".into() });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let values: Vec<Vec<(f64, f64)>> = pool.install(|| {
        archive
            .samples
            .par_iter()
            .map(|(path, cfg)| match gnz_sample(&fs, cfg, &spec.model, &spec.params, &Region::Whole, &quad) {
                Err(GnzError::Model(ModelError::InfeasibleBase)) => Err(CliError::BadFile {
                    path: path.clone(),
                    message: "configuration has infinite energy under the model".into(),
                }),
                r => r.map_err(CliError::from),
            })
            .collect::<Result<_>>()
    })?;
    let report = GnzReport::from_values(&fs, &values)?;
    io::write_text(&a.out, &io::gnz_csv(&report))?;
    if !report.passes(a.z_max) {
        return Err(CliError::GnzBreach(report.max_abs_z()));
    }
    Ok(report)
}

pub fn cmd_study(a: &StudyArgs, threads: usize) -> Result<()> {
    let mut cfg = study::StudyConfig::from_kv(KeyValues::read(&a.config)?)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let reps = study::run_study(&cfg, threads)?;
    let summary = study::summarize(&cfg, &reps);
    io::write_text(&a.out.join("study.csv"), &study::study_csv(&cfg, &reps))?;
    io::write_text(&a.out.join("summary.csv"), &study::summary_csv(&summary))?;
    if let Some(t) = study::trend(&summary) {
        io::write_text(&a.out.join("trend.csv"), &study::trend_csv(&t))?;
    }
    Ok(())
}
