//! Run configuration files.
//!
//! ```toml
//! [general]
//! seed = 7            # base seed for every randomized check
//! dim = 2             # d
//! degree = 5          # truncation degree N
//! trials = 1000       # randomized trials per suite
//! out = "results"     # output directory
//! tolerance = 1e-9    # optional: overrides every suite tolerance
//!
//! [measure]
//! kind = "gaussian"   # gaussian | poisson | delta | moments
//! cov = [[1.0, 0.0], [0.0, 2.0]]   # gaussian, default identity
//! nu = [1.0]          # poisson, one value or one per coordinate
//! file = "m.txt"      # moments fixture, relative to the config file
//!
//! [alpha]
//! preset = "log1p"    # id | log1p | expm1
//! file = "a.txt"      # vectorjet fixture instead of a preset
//!
//! [norms]
//! p = 1.0
//! q = 1.0
//! beta = 1.0
//! epsilon = 1.0
//!
//! [suites]
//! names = ["biorth-gaussian-id"]   # empty or absent: all suites
//!
//! [mc]
//! samples = 100000
//! ```
//!
//! Every key is optional. Unknown sections and keys are errors.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use toml::{Table, Value};

use crate::alpha::Alpha;
use crate::appell::AppellBasis;
use crate::error::{Error, Result};
use crate::format;
use crate::measures::MeasureModel;
use crate::suites::SuiteConfig;

const KEYS: &[(&str, &[&str])] = &[
    ("general", &["seed", "dim", "degree", "trials", "out", "tolerance"]),
    ("measure", &["kind", "cov", "nu", "file"]),
    ("alpha", &["preset", "file"]),
    ("norms", &["p", "q", "beta", "epsilon"]),
    ("suites", &["names"]),
    ("mc", &["samples"]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// `None` means the identity covariance.
    Gaussian(Option<Vec<Vec<f64>>>),
    Poisson(Vec<f64>),
    Delta,
    Moments(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    pub degree: usize,
    pub trials: usize,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub measure: MeasureSpec,
    pub alpha: AlphaSpec,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub suites: Vec<String>,
    pub mc_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SuiteConfig::default();
        RunConfig {
            seed: s.seed,
            dim: s.dim,
            degree: s.degree,
            trials: s.trials,
            out: None,
            tolerance: None,
            measure: MeasureSpec::Gaussian(None),
            alpha: AlphaSpec::Preset("id".into()),
            p: s.p,
            q: s.q,
            beta: 1.0,
            epsilon: s.epsilon,
            suites: Vec::new(),
            mc_samples: s.mc_samples,
        }
    }
}

fn float(key: &str, v: &Value) -> Result<f64> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => return Err(Error::config(key, "expected a number")),
    };
    if !x.is_finite() {
        return Err(Error::config(key, "must be finite"));
    }
    Ok(x)
}

fn count(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(key, "expected a non-negative integer")),
    }
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(key, "expected a string"))
}

fn floats(key: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(a) => a.iter().map(|x| float(key, x)).collect(),
        other => Ok(vec![float(key, other)?]),
    }
}

impl RunConfig {
    /// Parses configuration text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            Error::config("<syntax>", e.message().to_string())
        })?;
        for (section, value) in &table {
            let allowed = KEYS
                .iter()
                .find(|(s, _)| s == section)
                .map(|(_, k)| *k)
                .ok_or_else(|| Error::config(section.as_str(), "unknown section"))?;
            let inner = value
                .as_table()
                .ok_or_else(|| Error::config(section.as_str(), "expected a section"))?;
            for key in inner.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::config(format!("{section}.{key}"), "unknown key"));
                }
            }
        }
        let get = |section: &str, key: &str| table.get(section).and_then(|s| s.get(key));
        let mut cfg = RunConfig::default();

        if let Some(v) = get("general", "seed") {
            cfg.seed = count("general.seed", v)? as u64;
        }
        if let Some(v) = get("general", "dim") {
            cfg.dim = count("general.dim", v)?;
            if cfg.dim == 0 || cfg.dim > format::MAX_DIM {
                return Err(Error::config("general.dim", format!("must be in 1..={}", format::MAX_DIM)));
            }
        }
        if let Some(v) = get("general", "degree") {
            cfg.degree = count("general.degree", v)?;
            if cfg.degree > format::MAX_DEGREE {
                return Err(Error::config("general.degree", format!("must be at most {}", format::MAX_DEGREE)));
            }
        }
        if let Some(v) = get("general", "trials") {
            cfg.trials = count("general.trials", v)?;
        }
        if let Some(v) = get("general", "out") {
            cfg.out = Some(PathBuf::from(string("general.out", v)?));
        }
        if let Some(v) = get("general", "tolerance") {
            let t = float("general.tolerance", v)?;
            if t < 0.0 {
                return Err(Error::config("general.tolerance", "must be non-negative"));
            }
            cfg.tolerance = Some(t);
        }

        let kind = match get("measure", "kind") {
            Some(v) => string("measure.kind", v)?,
            None => "gaussian",
        };
        cfg.measure = match kind {
            "gaussian" => {
                let cov = match get("measure", "cov") {
                    Some(Value::Array(rows)) => Some(
                        rows.iter()
                            .map(|r| match r {
                                Value::Array(_) => floats("measure.cov", r),
                                _ => Err(Error::config("measure.cov", "expected an array of rows")),
                            })
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    Some(_) => return Err(Error::config("measure.cov", "expected an array of rows")),
                    None => None,
                };
                MeasureSpec::Gaussian(cov)
            }
            "poisson" => {
                let nu = match get("measure", "nu") {
                    Some(v) => floats("measure.nu", v)?,
                    None => vec![1.0],
                };
                MeasureSpec::Poisson(nu)
            }
            "delta" => MeasureSpec::Delta,
            "moments" => {
                let file = get("measure", "file")
                    .ok_or_else(|| Error::config("measure.file", "required for kind = \"moments\""))?;
                MeasureSpec::Moments(base.join(string("measure.file", file)?))
            }
            other => return Err(Error::config("measure.kind", format!("unknown measure `{other}`"))),
        };

        cfg.alpha = match (get("alpha", "preset"), get("alpha", "file")) {
            (Some(_), Some(_)) => return Err(Error::config("alpha", "give either preset or file")),
            (Some(v), None) => AlphaSpec::Preset(string("alpha.preset", v)?.to_string()),
            (None, Some(v)) => AlphaSpec::File(base.join(string("alpha.file", v)?)),
            (None, None) => AlphaSpec::Preset("id".into()),
        };
        if let AlphaSpec::Preset(p) = &cfg.alpha {
            preset(p).map_err(|_| Error::config("alpha.preset", format!("unknown preset `{p}`")))?;
        }

        for (key, slot) in [("p", &mut cfg.p), ("q", &mut cfg.q), ("beta", &mut cfg.beta), ("epsilon", &mut cfg.epsilon)] {
            if let Some(v) = get("norms", key) {
                *slot = float(&format!("norms.{key}"), v)?;
            }
        }
        if !(0.0..=1.0).contains(&cfg.beta) {
            return Err(Error::config("norms.beta", "must lie in [0, 1]"));
        }
        if cfg.epsilon <= 0.0 {
            return Err(Error::config("norms.epsilon", "must be positive"));
        }

        if let Some(v) = get("suites", "names") {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::config("suites.names", "expected an array of strings"))?;
            cfg.suites = arr
                .iter()
                .map(|s| string("suites.names", s).map(String::from))
                .collect::<Result<_>>()?;
            for name in &cfg.suites {
                crate::suites::find_suite(name)
                    .map_err(|_| Error::config("suites.names", format!("unknown suite `{name}`")))?;
            }
        }
        if let Some(v) = get("mc", "samples") {
            cfg.mc_samples = count("mc.samples", v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn measure(&self) -> Result<MeasureModel> {
        let model = match &self.measure {
            MeasureSpec::Gaussian(None) => MeasureModel::standard_gaussian(self.dim),
            MeasureSpec::Gaussian(Some(rows)) => {
                if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                    return Err(Error::config("measure.cov", format!("expected a {0}x{0} matrix", self.dim)));
                }
                let m = DMatrix::from_fn(self.dim, self.dim, |i, j| rows[i][j]);
                MeasureModel::gaussian(m).map_err(|e| Error::config("measure.cov", e.to_string()))?
            }
            MeasureSpec::Poisson(nu) => {
                let nu = match nu.len() {
                    1 => vec![nu[0]; self.dim],
                    n if n == self.dim => nu.clone(),
                    _ => return Err(Error::config("measure.nu", format!("expected 1 or {} values", self.dim))),
                };
                MeasureModel::poisson(nu).map_err(|e| Error::config("measure.nu", e.to_string()))?
            }
            MeasureSpec::Delta => MeasureModel::Delta { dim: self.dim },
            MeasureSpec::Moments(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("measure.file", format!("{}: {e}", path.display())))?;
                format::parse_moments(&text).map_err(|e| Error::config("measure.file", e.to_string()))?
            }
        };
        if model.dim() != self.dim {
            return Err(Error::config(
                "general.dim",
                format!("measure has dimension {} but dim = {}", model.dim(), self.dim),
            ));
        }
        Ok(model)
    }

    pub fn alpha(&self) -> Result<Alpha> {
        match &self.alpha {
            AlphaSpec::Preset(p) => preset(p),
            AlphaSpec::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("alpha.file", format!("{}: {e}", path.display())))?;
                let jet = format::parse_vector_jet(&text).map_err(|e| Error::config("alpha.file", e.to_string()))?;
                Ok(Alpha::Jet(jet))
            }
        }
    }

    pub fn basis(&self) -> Result<AppellBasis> {
        AppellBasis::new(self.measure()?, self.alpha()?, self.degree)
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            dim: self.dim,
            degree: self.degree,
            trials: self.trials,
            mc_samples: self.mc_samples,
            p: self.p,
            q: self.q,
            epsilon: self.epsilon,
            tolerance: self.tolerance,
        }
    }
}

/// Named reparametrizations: `id`, `log1p`, `expm1`.
pub fn preset(name: &str) -> Result<Alpha> {
    match name {
        "id" | "identity" => Ok(Alpha::Identity),
        "log1p" => Ok(Alpha::Log1p),
        "expm1" => Ok(Alpha::Expm1),
        other => Err(Error::Unsupported(format!("unknown α preset `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/cfg"))
    }

    fn key_of(r: Result<RunConfig>) -> String {
        match r {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn full_example() {
        let cfg = parse(
            r#"
            [general]
            seed = 3
            dim = 1
            degree = 4
            tolerance = 1e-9
            [measure]
            kind = "poisson"
            nu = 2
            [alpha]
            preset = "log1p"
            [norms]
            p = 2
            beta = 0.5
            [suites]
            names = ["charlier-recurrence"]
            [mc]
            samples = 1000
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.measure, MeasureSpec::Poisson(vec![2.0]));
        assert_eq!(cfg.p, 2.0);
        assert_eq!(cfg.suite_config().tolerance, Some(1e-9));
        let b = cfg.basis().unwrap();
        assert_eq!(b.degree(), 4);
        assert_eq!(b.alpha().name(), "log1p");
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(parse("[general]\ndim = \"x\"")), "general.dim");
        assert_eq!(key_of(parse("[general]\nbogus = 1")), "general.bogus");
        assert_eq!(key_of(parse("[nope]\na = 1")), "nope");
        assert_eq!(key_of(parse("[measure]\nkind = \"cauchy\"")), "measure.kind");
        assert_eq!(key_of(parse("[measure]\nkind = \"moments\"")), "measure.file");
        assert_eq!(key_of(parse("[alpha]\npreset = \"sin\"")), "alpha.preset");
        assert_eq!(key_of(parse("[norms]\nbeta = 2")), "norms.beta");
        assert_eq!(key_of(parse("[suites]\nnames = [\"x\"]")), "suites.names");
        assert_eq!(key_of(parse("[general\n")), "<syntax>");
        let cfg = parse("[general]\ndim = 2\n[measure]\nkind = \"poisson\"\nnu = [1, 2, 3]").unwrap();
        assert!(matches!(cfg.measure(), Err(Error::Config { key, .. }) if key == "measure.nu"));
        let cfg = parse("[measure]\ncov = [[1, 0], [0, -1]]").unwrap();
        assert!(matches!(cfg.measure(), Err(Error::Config { key, .. }) if key == "measure.cov"));
    }

    #[test]
    fn relative_files_resolve_against_base() {
        let cfg = parse("[measure]\nkind = \"moments\"\nfile = \"m.txt\"\n[alpha]\nfile = \"a.txt\"").unwrap();
        assert_eq!(cfg.measure, MeasureSpec::Moments(PathBuf::from("/cfg/m.txt")));
        assert_eq!(cfg.alpha, AlphaSpec::File(PathBuf::from("/cfg/a.txt")));
    }
}
