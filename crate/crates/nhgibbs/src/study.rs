//! Window-ladder replicate experiments on simulated data.

use std::fmt::Write as _;

use nhgibbs_core::config::{PointConfiguration, Region};
use nhgibbs_core::estimate::{
    estimate_alpha, AlphaEstimate, EstimateError, EstimationResult, PseudoLikelihood, QuadratureSpec, ThetaBox,
};
use nhgibbs_core::geometry::TorusWindow;
use nhgibbs_core::sampler::run_chain;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::spec::{KeyValues, ModelSpec};

pub const DEFAULT_BURN_PER_AREA: f64 = 1000.0;

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub spec: ModelSpec,
    pub ladder: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub burn_per_area: f64,
    pub quad: QuadratureSpec,
    pub theta_box: ThetaBox,
}

impl StudyConfig {
    pub fn from_kv(kv: KeyValues) -> Result<Self> {
        kv.check_known(&[])?;
        let ladder: Vec<f64> = kv.list("ladder")?.unwrap_or_default();
        if ladder.is_empty() || ladder.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliError::Invalid("`ladder` needs positive window sides".into()));
        }
        let replicates: usize = kv.require("replicates")?;
        if replicates == 0 {
            return Err(CliError::Invalid("`replicates` must be positive".into()));
        }
        let seed = kv.get("seed")?.unwrap_or(0);
        let burn_per_area = kv.get("burn_per_area")?.unwrap_or(DEFAULT_BURN_PER_AREA);
        if !(burn_per_area >= 0.0 && f64::is_finite(burn_per_area)) {
            return Err(CliError::Invalid("`burn_per_area` must be non-negative".into()));
        }
        let spec = ModelSpec::from_kv(kv)?;
        let quad = spec.quadrature()?;
        let theta_box = spec.theta_box()?;
        for &l in &ladder {
            let w = TorusWindow::torus(l).map_err(|e| CliError::Invalid(e.to_string()))?;
            spec.sampler_config()?.validate(&spec.model, &w)?;
        }
        Ok(StudyConfig { spec, ladder, replicates, seed, burn_per_area, quad, theta_box })
    }
}

/// One fit at a given hardcore parameter, with its degeneracy flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub result: EstimationResult,
    pub degenerate: bool,
}

fn fit(pl: &PseudoLikelihood, b: &ThetaBox, alpha: f64) -> Result<Fit> {
    match pl.fit(b, alpha) {
        Ok(result) => Ok(Fit { result, degenerate: false }),
        Err(EstimateError::DegenerateData(r)) => Ok(Fit { result: *r, degenerate: true }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub side: f64,
    pub replicate: usize,
    pub pattern: PointConfiguration,
    pub alpha: AlphaEstimate,
    /// θ̂ with `α̂ + ε` plugged in.
    pub plug_in: Fit,
    /// θ̂ at the true hardcore parameter.
    pub known: Fit,
    /// `|PLL(α̂ + ε, θ*) - PLL(α*, θ*)|`
    pub plug_in_gap: f64,
}

impl Replicate {
    pub fn abs_err_alpha(&self, truth: f64) -> f64 {
        (self.alpha.alpha_hat - truth).abs()
    }
}

pub fn norm_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Stream index of a ladder cell; every chain draws from the root seed.
pub fn stream_of(ladder_index: usize, replicate: usize) -> u64 {
    ((ladder_index as u64) << 32) | replicate as u64
}

pub fn run_replicate(cfg: &StudyConfig, ladder_index: usize, replicate: usize) -> Result<Replicate> {
    let side = cfg.ladder[ladder_index];
    let spec = &cfg.spec;
    let window = TorusWindow::torus(side).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut sc = spec.sampler_config()?;
    sc.burn_in = (cfg.burn_per_area * side * side).ceil() as u64;
    sc.keep = 1;
    sc.thin = 1;
    sc.seed = cfg.seed;
    sc.stream = stream_of(ladder_index, replicate);
    let set = run_chain(&spec.model, &spec.params, &window, &sc)?;
    let pattern = set.samples.into_iter().next().ok_or_else(|| CliError::Internal("chain kept no sample".into()))?;
    let alpha = estimate_alpha(&spec.model, &pattern, &Region::Whole)?;
    let a_plug = alpha.alpha_hat + alpha.epsilon;
    let a_true = spec.params.alpha;
    let pl_plug = PseudoLikelihood::new(&spec.model, &pattern, &Region::Whole, a_plug, &cfg.quad)?;
    let pl_true = PseudoLikelihood::new(&spec.model, &pattern, &Region::Whole, a_true, &cfg.quad)?;
    let mut plug_in = fit(&pl_plug, &cfg.theta_box, a_plug)?;
    plug_in.result.alpha_hat = alpha.alpha_hat;
    plug_in.result.epsilon = alpha.epsilon;
    plug_in.result.attained = alpha.attained;
    let known = fit(&pl_true, &cfg.theta_box, a_true)?;
    let theta = &spec.params.theta;
    let plug_in_gap = (pl_plug.value(theta) - pl_true.value(theta)).abs();
    Ok(Replicate { side, replicate, pattern, alpha, plug_in, known, plug_in_gap })
}

/// Every ladder cell in (side, replicate) order, computed on `threads`
/// workers.
pub fn run_study(cfg: &StudyConfig, threads: usize) -> Result<Vec<Replicate>> {
    let jobs: Vec<(usize, usize)> =
        (0..cfg.ladder.len()).flat_map(|i| (0..cfg.replicates).map(move |r| (i, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(|&(i, r)| run_replicate(cfg, i, r)).collect())
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub side: f64,
    pub median_abs_err_alpha: f64,
    pub median_abs_err_theta: f64,
    pub median_abs_err_theta_known: f64,
    pub median_plug_in_gap: f64,
}

pub fn summarize(cfg: &StudyConfig, reps: &[Replicate]) -> Vec<SummaryRow> {
    let truth = &cfg.spec.params;
    cfg.ladder
        .iter()
        .map(|&side| {
            let cell: Vec<&Replicate> = reps.iter().filter(|r| r.side == side).collect();
            let col = |f: &dyn Fn(&Replicate) -> f64| median(&mut cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                side,
                median_abs_err_alpha: col(&|r| r.abs_err_alpha(truth.alpha)),
                median_abs_err_theta: col(&|r| norm_err(&r.plug_in.result.theta_hat, &truth.theta)),
                median_abs_err_theta_known: col(&|r| norm_err(&r.known.result.theta_hat, &truth.theta)),
                median_plug_in_gap: col(&|r| r.plug_in_gap),
            }
        })
        .collect()
}

/// Whether each median strictly decreases along the ladder, where a median
/// already at zero may stay there; `None` for a ladder of one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trend {
    pub alpha_decreasing: bool,
    pub theta_decreasing: bool,
    pub theta_known_decreasing: bool,
    pub plug_in_gap_decreasing: bool,
}

pub fn trend(summary: &[SummaryRow]) -> Option<Trend> {
    if summary.len() < 2 {
        return None;
    }
    let dec = |f: fn(&SummaryRow) -> f64| {
        summary.windows(2).all(|w| f(&w[1]) < f(&w[0]) || (f(&w[0]) == 0.0 && f(&w[1]) == 0.0))
    };
    Some(Trend {
        alpha_decreasing: dec(|r| r.median_abs_err_alpha),
        theta_decreasing: dec(|r| r.median_abs_err_theta),
        theta_known_decreasing: dec(|r| r.median_abs_err_theta_known),
        plug_in_gap_decreasing: dec(|r| r.median_plug_in_gap),
    })
}

pub fn study_csv(cfg: &StudyConfig, reps: &[Replicate]) -> String {
    let truth = &cfg.spec.params;
    let p = truth.theta.len();
    let mut s = String::from("L,replicate,alpha_hat");
    for i in 1..=p {
        let _ = write!(s, ",theta_hat_{i}");
    }
    s.push_str(",abs_err_alpha,abs_err_theta,epsilon");
    for i in 1..=p {
        let _ = write!(s, ",theta_known_{i}");
    }
    s.push_str(",abs_err_theta_known,degenerate,degenerate_known,removable_count,n_points,plug_in_gap\n");
    for r in reps {
        let _ = write!(s, "{},{},{}", r.side, r.replicate, r.alpha.alpha_hat);
        for t in &r.plug_in.result.theta_hat {
            let _ = write!(s, ",{t}");
        }
        let _ = write!(
            s,
            ",{},{},{}",
            r.abs_err_alpha(truth.alpha),
            norm_err(&r.plug_in.result.theta_hat, &truth.theta),
            r.alpha.epsilon
        );
        for t in &r.known.result.theta_hat {
            let _ = write!(s, ",{t}");
        }
        let _ = writeln!(
            s,
            ",{},{},{},{},{},{}",
            norm_err(&r.known.result.theta_hat, &truth.theta),
            r.plug_in.degenerate,
            r.known.degenerate,
            r.known.result.removable_count,
            r.pattern.len(),
            r.plug_in_gap
        );
    }
    s
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut s = String::from(
        "L,median_abs_err_alpha,median_abs_err_theta,median_abs_err_theta_known,median_plug_in_gap\n",
    );
    for r in summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.side, r.median_abs_err_alpha, r.median_abs_err_theta, r.median_abs_err_theta_known, r.median_plug_in_gap
        );
    }
    s
}

pub fn trend_csv(t: &Trend) -> String {
    format!(
        "quantity,strictly_decreasing\nabs_err_alpha,{}\nabs_err_theta,{}\nabs_err_theta_known,{}\nplug_in_gap,{}\n",
        t.alpha_decreasing, t.theta_decreasing, t.theta_known_decreasing, t.plug_in_gap_decreasing
    )
}
