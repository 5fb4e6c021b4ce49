//! Pattern files, sample archives and report tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nhgibbs_core::config::PointConfiguration;
use nhgibbs_core::estimate::EstimationResult;
use nhgibbs_core::geometry::{Boundary, Point, TorusWindow};
use nhgibbs_core::gnz::GnzReport;
use nhgibbs_core::sampler::{ProposalKind, SampleSet};

use crate::error::{CliError, Result};
use crate::spec::{KeyValues, ModelSpec};

pub const META_FILE: &str = "chain.meta";

pub fn sample_file_name(i: usize) -> String {
    format!("sample_{i:05}.csv")
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Torus => "torus",
        Boundary::Plane => "plane",
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary> {
    match s {
        "torus" => Ok(Boundary::Torus),
        "plane" => Ok(Boundary::Plane),
        other => Err(CliError::Invalid(format!("unknown boundary `{other}`"))),
    }
}

/// Pattern text: `# side` and `# boundary` header comments, then `x,y` rows.
pub fn pattern_to_string(cfg: &PointConfiguration) -> String {
    let w = cfg.window();
    let mut s = format!("# side = {}\n# boundary = {}\nx,y\n", w.side(), boundary_name(w.boundary()));
    for p in cfg.points() {
        let _ = writeln!(s, "{},{}", p.x, p.y);
    }
    s
}

pub fn write_pattern(path: &Path, cfg: &PointConfiguration) -> Result<()> {
    fs::write(path, pattern_to_string(cfg)).map_err(CliError::io(path))
}

/// Reads a pattern. `side` and `boundary` override the file header; the
/// side must come from one of them.
pub fn read_pattern(path: &Path, side: Option<f64>, boundary: Option<Boundary>) -> Result<PointConfiguration> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let bad = |message: String| CliError::BadFile { path: path.to_path_buf(), message };
    let header: String = text
        .lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .map(|l| l.trim_start().trim_start_matches('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let meta = KeyValues::parse(&header, &path.display().to_string())?;
    let side = match side {
        Some(s) => s,
        None => meta.get("side")?.ok_or_else(|| bad("no window side in header or arguments".into()))?,
    };
    let boundary = match (boundary, meta.raw("boundary")) {
        (Some(b), _) => b,
        (None, Some(b)) => parse_boundary(b)?,
        (None, None) => Boundary::Torus,
    };
    let window = TorusWindow::new(side, boundary).map_err(|e| bad(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut pts = Vec::new();
    for rec in rdr.deserialize::<(f64, f64)>() {
        let (x, y) = rec.map_err(CliError::csv(path))?;
        pts.push(Point::new(x, y));
    }
    PointConfiguration::from_points(window, pts).map_err(|e| bad(e.to_string()))
}

/// Writes `sample_%05d.csv` files and `chain.meta` into `dir`.
pub fn write_archive(dir: &Path, spec: &ModelSpec, set: &SampleSet, side: f64) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    for (i, cfg) in set.samples.iter().enumerate() {
        write_pattern(&dir.join(sample_file_name(i)), cfg)?;
    }
    let sc = &set.config;
    let mut m = spec.model_lines();
    let _ = writeln!(m, "side = {side}");
    for (k, v) in [
        ("p_birth", sc.p_birth),
        ("p_death", sc.p_death),
        ("p_move", sc.p_move),
        ("p_cluster_birth", sc.p_cluster_birth),
        ("p_cluster_death", sc.p_cluster_death),
        ("move_sigma", sc.move_sigma),
        ("cluster_radius", sc.cluster_radius),
    ] {
        let _ = writeln!(m, "{k} = {v}");
    }
    let _ = writeln!(m, "burn_in = {}\nkeep = {}\nthin = {}", sc.burn_in, sc.keep, sc.thin);
    let _ = writeln!(m, "seed = {}\nstream = {}", sc.seed, sc.stream);
    let d = &set.diagnostics;
    let _ = writeln!(m, "total_steps = {}", d.steps);
    for (kind, t) in &d.tallies {
        let _ = writeln!(m, "proposed_{} = {}", kind.name(), t.proposed);
        let _ = writeln!(m, "accepted_{} = {}", kind.name(), t.accepted);
        if let Some(r) = t.rate() {
            let _ = writeln!(m, "acceptance_{} = {r}", kind.name());
        }
    }
    let trace: Vec<String> = d.energy_trace.iter().map(|e| e.to_string()).collect();
    let _ = writeln!(m, "energy_trace = {}", trace.join(","));
    let meta = dir.join(META_FILE);
    fs::write(&meta, m).map_err(CliError::io(meta))
}

/// Sample files of an archive in order, with the window they live in.
pub struct Archive {
    pub meta: Option<KeyValues>,
    pub samples: Vec<(PathBuf, PointConfiguration)>,
}

pub fn read_archive(dir: &Path) -> Result<Archive> {
    let meta_path = dir.join(META_FILE);
    let meta = if meta_path.exists() { Some(KeyValues::read(&meta_path)?) } else { None };
    let side = match &meta {
        Some(m) => m.get::<f64>("side")?,
        None => None,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("sample_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    let mut samples = Vec::with_capacity(files.len());
    for f in files {
        let cfg = read_pattern(&f, side, None)?;
        samples.push((f, cfg));
    }
    Ok(Archive { meta, samples })
}

fn bool_list(v: &[bool]) -> String {
    v.iter().map(|b| if *b { "true" } else { "false" }).collect::<Vec<_>>().join(";")
}

pub fn estimate_csv(r: &EstimationResult, n_points: usize, side: f64) -> String {
    let p = r.theta_hat.len();
    let mut s = String::from("alpha_hat,epsilon,attained");
    for i in 1..=p {
        let _ = write!(s, ",theta_hat_{i}");
    }
    s.push_str(",pll,grad_norm,iters,at_boundary,removable_count,n_points,L\n");
    let _ = write!(s, "{},{},{}", r.alpha_hat, r.epsilon, r.attained);
    for t in &r.theta_hat {
        let _ = write!(s, ",{t}");
    }
    let _ = writeln!(
        s,
        ",{},{},{},{},{},{},{}",
        r.pll_value,
        r.gradient_norm,
        r.iterations,
        bool_list(&r.at_boundary),
        r.removable_count,
        n_points,
        side
    );
    s
}

pub fn gnz_csv(report: &GnzReport) -> String {
    let mut s = String::from("functional,lhs_mean,rhs_mean,lhs_se,rhs_se,z,n_samples,ess\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.functional.name(),
            r.lhs_mean,
            r.rhs_mean,
            r.lhs_se,
            r.rhs_se,
            r.z,
            r.n_samples,
            r.ess
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(path, text).map_err(CliError::io(path))
}

/// Acceptance rate per enabled proposal kind.
pub fn acceptance_rates(set: &SampleSet) -> Vec<(ProposalKind, f64)> {
    set.diagnostics.tallies.iter().filter_map(|(k, t)| t.rate().map(|r| (*k, r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = TorusWindow::torus(3.0).unwrap();
        let cfg = PointConfiguration::from_points(w, [Point::new(0.1, 1.0 / 3.0), Point::new(2.9999999999, 1e-12)]).unwrap();
        let p = dir.path().join("p.csv");
        write_pattern(&p, &cfg).unwrap();
        let back = read_pattern(&p, None, None).unwrap();
        assert_eq!(back, cfg);
        let plane = read_pattern(&p, Some(4.0), Some(Boundary::Plane)).unwrap();
        assert_eq!(plane.window().side(), 4.0);
        assert!(!plane.window().is_torus());
    }

    #[test]
    fn bad_patterns_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "x,y\n1,2\n").unwrap();
        let e = read_pattern(&p, None, None).unwrap_err().to_string();
        assert!(e.contains("bad.csv"), "{e}");
        fs::write(&p, "# side = 5\nx,y\n1,oops\n").unwrap();
        let e = read_pattern(&p, None, None).unwrap_err().to_string();
        assert!(e.contains("bad.csv"), "{e}");
        fs::write(&p, "# side = 5\nx,y\n7,1\n").unwrap();
        assert!(read_pattern(&p, None, None).is_err());
    }
}
