//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nhgibbs_core::estimate::{QuadratureSpec, ThetaBox};
use nhgibbs_core::models::{Model, ModelParams, Phi};
use nhgibbs_core::sampler::SamplerConfig;

use crate::error::{CliError, Result};

/// Every key a configuration file may contain.
pub const KEYS_HELP: &str = "\
Configuration files hold one `key = value` per line; `#` starts a comment.
Lists are comma separated.

Model:
  model            hard_sphere | delaunay | knn | poisson
  alpha            hardcore parameter
  theta            interaction parameters, one per statistic
  steps            hard_sphere: increasing annulus widths r_1 < ... < r_p
  min_edge         delaunay: minimal edge length r
  k                knn: neighbour count
  phi              knn: constant | truncated_linear | step
  phi_c            knn: constant value or truncated-linear range
  phi_radius       knn: step radius
  phi_height       knn: step height
Sampler (defaults depend on the model):
  p_birth, p_death, p_move, p_cluster_birth, p_cluster_death
  move_sigma       move jitter
  cluster_radius   cluster proposal radius
Estimation:
  theta_lower      lower corner of the parameter box (default -20)
  theta_upper      upper corner of the parameter box (default 20)
  quad             dummy points per unit area (default 400)
Study:
  ladder           window sides, e.g. 5,10,20
  replicates       patterns per window side
  seed             root seed
  burn_per_area    burn-in steps per unit area (default 1000)";

const KNOWN: &[&str] = &[
    "model",
    "alpha",
    "theta",
    "steps",
    "min_edge",
    "k",
    "phi",
    "phi_c",
    "phi_radius",
    "phi_height",
    "p_birth",
    "p_death",
    "p_move",
    "p_cluster_birth",
    "p_cluster_death",
    "move_sigma",
    "cluster_radius",
    "theta_lower",
    "theta_upper",
    "quad",
    "ladder",
    "replicates",
    "seed",
    "burn_per_area",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    source: String,
}

impl KeyValues {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| CliError::Invalid(format!("{source}:{}: {m}", no + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(bad("empty key"));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(bad(&format!("duplicate key `{k}`")));
            }
        }
        Ok(KeyValues { entries, source: source.to_string() })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        KeyValues::parse(&text, &path.display().to_string())
    }

    /// Rejects keys outside the documented set.
    pub fn check_known(&self, extra: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !KNOWN.contains(&k.as_str()) && !extra.contains(&k.as_str()) {
                return Err(CliError::Invalid(format!("{}: unknown key `{k}`", self.source)));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn invalid(&self, key: &str, v: &str) -> CliError {
        CliError::Invalid(format!("{}: invalid value `{v}` for `{key}`", self.source))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| self.invalid(key, v)),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| CliError::Invalid(format!("{}: missing key `{key}`", self.source)))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) if v.is_empty() => Ok(Some(Vec::new())),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| self.invalid(key, v)))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// A model with its parameters and any sampler or estimation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    pub params: ModelParams,
    pub kv: KeyValues,
}

impl ModelSpec {
    pub fn from_kv(kv: KeyValues) -> Result<Self> {
        let name: String = kv.require("model")?;
        let model = match name.as_str() {
            "hard_sphere" => Model::hard_sphere(kv.list("steps")?.unwrap_or_default())?,
            "delaunay" => Model::delaunay(kv.require("min_edge")?)?,
            "knn" => {
                let phi_name: String = kv.require("phi")?;
                let phi = match phi_name.as_str() {
                    "constant" => Phi::Constant(kv.require("phi_c")?),
                    "truncated_linear" => Phi::TruncatedLinear(kv.require("phi_c")?),
                    "step" => Phi::Step { radius: kv.require("phi_radius")?, height: kv.require("phi_height")? },
                    other => return Err(CliError::Invalid(format!("unknown phi `{other}`"))),
                };
                Model::knn(kv.require("k")?, phi)?
            }
            "poisson" => Model::Poisson,
            other => return Err(CliError::Invalid(format!("unknown model `{other}`"))),
        };
        let alpha = match model {
            Model::Poisson => kv.get("alpha")?.unwrap_or(1.0),
            _ => kv.require("alpha")?,
        };
        let params = ModelParams::new(alpha, kv.list("theta")?.unwrap_or_default());
        model.check_params(&params)?;
        Ok(ModelSpec { model, params, kv })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = KeyValues::read(path)?;
        kv.check_known(&[])?;
        ModelSpec::from_kv(kv)
    }

    /// Model defaults with the file's overrides applied.
    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let mut sc = SamplerConfig::defaults_for(&self.model, self.params.alpha);
        let kv = &self.kv;
        for (key, slot) in [
            ("p_birth", &mut sc.p_birth),
            ("p_death", &mut sc.p_death),
            ("p_move", &mut sc.p_move),
            ("p_cluster_birth", &mut sc.p_cluster_birth),
            ("p_cluster_death", &mut sc.p_cluster_death),
            ("move_sigma", &mut sc.move_sigma),
            ("cluster_radius", &mut sc.cluster_radius),
        ] {
            if let Some(v) = kv.get(key)? {
                *slot = v;
            }
        }
        Ok(sc)
    }

    pub fn theta_box(&self) -> Result<ThetaBox> {
        let p = self.model.dim();
        let lower = self.kv.list("theta_lower")?.unwrap_or_else(|| vec![-20.0; p]);
        let upper = self.kv.list("theta_upper")?.unwrap_or_else(|| vec![20.0; p]);
        if lower.len() != p || upper.len() != p {
            return Err(CliError::Invalid(format!("parameter box must have {p} components")));
        }
        Ok(ThetaBox::new(lower, upper)?)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        let q = QuadratureSpec { density: self.kv.get("quad")?.unwrap_or(QuadratureSpec::default().density) };
        check_quadrature(q)
    }

    /// The model keys in canonical `key = value` form.
    pub fn model_lines(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "model = {}", self.model.name());
        let _ = writeln!(s, "alpha = {}", self.params.alpha);
        let _ = writeln!(s, "theta = {}", list(&self.params.theta));
        match &self.model {
            Model::HardSphere(h) => {
                let _ = writeln!(s, "steps = {}", list(&h.steps));
            }
            Model::Delaunay(d) => {
                let _ = writeln!(s, "min_edge = {}", d.min_edge);
            }
            Model::Knn(k) => {
                let _ = writeln!(s, "k = {}", k.k);
                let _ = match k.phi {
                    Phi::Constant(c) => writeln!(s, "phi = constant\nphi_c = {c}"),
                    Phi::TruncatedLinear(c) => writeln!(s, "phi = truncated_linear\nphi_c = {c}"),
                    Phi::Step { radius, height } => {
                        writeln!(s, "phi = step\nphi_radius = {radius}\nphi_height = {height}")
                    }
                };
            }
            Model::Poisson => {}
        }
        s
    }
}

pub fn check_quadrature(q: QuadratureSpec) -> Result<QuadratureSpec> {
    if q.is_valid() {
        Ok(q)
    } else {
        Err(CliError::Invalid(format!("quadrature density must be at least 1, got {}", q.density)))
    }
}
