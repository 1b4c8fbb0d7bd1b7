//! Flat `key = value` experiment configuration with dotted section names.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Unknown keys, duplicate keys and malformed values are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use gfflab_core::basis::{build_box_basis, build_hermite_basis, build_interval_basis};
use gfflab_core::dynamics::InitialCondition;
use gfflab_core::{BoundaryCondition, EigenBasis};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Io(String),
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.into() }
}

/// Every key the parser accepts. `tolerance.*` keys are checked against the
/// chosen experiment separately.
pub const KNOWN_KEYS: &[&str] = &[
    "experiment.name",
    "basis.kind",
    "basis.a",
    "basis.b",
    "basis.d",
    "basis.side",
    "basis.modes",
    "model.nu",
    "model.sigma",
    "model.eps",
    "mc.samples",
    "mc.seed",
    "mc.threshold",
    "time.t_list",
    "time.extra_step",
    "initial.kind",
    "initial.coeffs",
    "initial.r",
    "initial.scale",
    "initial.path",
    "grid.points",
    "kakutani.k_from",
    "log.eps_list",
    "log.radius",
    "fourier.eps_small",
    "output.prefix",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    Dirichlet,
    Neumann,
    Mixed,
    Box,
    Hermite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisConfig {
    pub family: BasisFamily,
    pub a: f64,
    pub b: f64,
    pub d: usize,
    pub side: f64,
}

impl BasisConfig {
    pub fn interval(family: BasisFamily, a: f64, b: f64) -> Self {
        Self { family, a, b, d: 1, side: 1.0 }
    }

    pub fn build(&self, modes: usize) -> Result<Arc<EigenBasis>, ConfigError> {
        let bc = |bc| build_interval_basis(bc, self.a, self.b, modes);
        let basis = match self.family {
            BasisFamily::Dirichlet => bc(BoundaryCondition::Dirichlet),
            BasisFamily::Neumann => bc(BoundaryCondition::Neumann),
            BasisFamily::Mixed => bc(BoundaryCondition::Mixed),
            BasisFamily::Box => build_box_basis(self.d, self.side, modes),
            BasisFamily::Hermite => build_hermite_basis(self.d, modes),
        };
        basis.map(Arc::new).map_err(|e| invalid("basis", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    Zero,
    /// Leading coefficients; the rest are zero.
    Fixed(Vec<f64>),
    Gff { r: f64, scale: f64 },
    File(PathBuf),
}

impl InitialConfig {
    pub fn resolve(&self, modes: usize) -> Result<InitialCondition, ConfigError> {
        Ok(match self {
            InitialConfig::Zero => InitialCondition::Zero,
            InitialConfig::Fixed(c) => {
                if c.len() > modes {
                    return Err(invalid("initial.coeffs", format!("{} values for {modes} modes", c.len())));
                }
                let mut v = c.clone();
                v.resize(modes, 0.0);
                InitialCondition::Fixed(v)
            }
            InitialConfig::Gff { r, scale } => InitialCondition::Gff { r: *r, scale: *scale },
            InitialConfig::File(p) => InitialCondition::File(p.clone()),
        })
    }
}

/// Parsed configuration; `None` means "use the experiment's default".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub basis: Option<BasisConfig>,
    pub modes: Option<usize>,
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub eps: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub t_list: Option<Vec<f64>>,
    pub extra_step: Option<f64>,
    pub initial: Option<InitialConfig>,
    pub grid: Option<Vec<f64>>,
    pub k_from: Option<usize>,
    pub eps_list: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub eps_small: Option<f64>,
    pub output: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| invalid(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = parse_f64(key, v)?;
    if x <= 0.0 {
        return Err(invalid(key, format!("must be positive, got {x}")));
    }
    Ok(x)
}

fn count(key: &str, v: &str) -> Result<usize, ConfigError> {
    let n: usize = v.parse().map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer")))?;
    if n == 0 {
        return Err(invalid(key, "must be at least 1"));
    }
    Ok(n)
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let out: Vec<f64> = v.split(',').map(|s| parse_f64(key, s.trim())).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(invalid(key, "empty list"));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line: line_no })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax { line: line_no });
            }
            let known = KNOWN_KEYS.contains(&k) || k.strip_prefix("tolerance.").is_some_and(|n| !n.is_empty());
            if !known {
                return Err(ConfigError::UnknownKey { line: line_no, key: k.to_string() });
            }
            if raw.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate { line: line_no, key: k.to_string() });
            }
        }
        Self::from_map(&raw)
    }

    fn from_map(raw: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let mut cfg = ExperimentConfig {
            experiment: get("experiment.name").ok_or(ConfigError::Missing("experiment.name"))?.to_string(),
            ..Default::default()
        };
        cfg.nu = get("model.nu").map(|v| positive("model.nu", v)).transpose()?;
        cfg.sigma = get("model.sigma").map(|v| positive("model.sigma", v)).transpose()?;
        cfg.eps = get("model.eps").map(|v| positive("model.eps", v)).transpose()?;
        cfg.modes = get("basis.modes").map(|v| count("basis.modes", v)).transpose()?;
        cfg.samples = get("mc.samples").map(|v| count("mc.samples", v)).transpose()?;
        if let Some(m) = cfg.samples {
            if m < gfflab_core::stats::MIN_SAMPLES {
                return Err(invalid("mc.samples", format!("must be at least {}, got {m}", gfflab_core::stats::MIN_SAMPLES)));
            }
        }
        cfg.seed = get("mc.seed")
            .map(|v| v.parse::<u64>().map_err(|_| invalid("mc.seed", format!("`{v}` is not a 64-bit unsigned integer"))))
            .transpose()?;
        cfg.threshold = get("mc.threshold").map(|v| positive("mc.threshold", v)).transpose()?;
        if let Some(v) = get("time.t_list") {
            let ts = list("time.t_list", v)?;
            if ts.iter().any(|&t| t < 0.0) {
                return Err(invalid("time.t_list", "times must be non-negative"));
            }
            if ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("time.t_list", "times must increase strictly"));
            }
            cfg.t_list = Some(ts);
        }
        cfg.extra_step = get("time.extra_step").map(|v| positive("time.extra_step", v)).transpose()?;
        cfg.grid = get("grid.points").map(|v| list("grid.points", v)).transpose()?;
        cfg.k_from = get("kakutani.k_from").map(|v| count("kakutani.k_from", v)).transpose()?;
        if let Some(v) = get("log.eps_list") {
            let e = list("log.eps_list", v)?;
            if e.iter().any(|&x| x <= 0.0) || e.len() < 2 {
                return Err(invalid("log.eps_list", "needs at least two positive values"));
            }
            cfg.eps_list = Some(e);
        }
        cfg.radius = get("log.radius").map(|v| positive("log.radius", v)).transpose()?;
        cfg.eps_small = get("fourier.eps_small").map(|v| positive("fourier.eps_small", v)).transpose()?;
        cfg.output = get("output.prefix").map(str::to_string);
        cfg.basis = Self::basis_from(raw)?;
        cfg.initial = Self::initial_from(raw)?;
        for (k, v) in raw {
            if let Some(name) = k.strip_prefix("tolerance.") {
                cfg.tolerances.insert(name.to_string(), positive(k, v)?);
            }
        }
        Ok(cfg)
    }

    fn basis_from(raw: &BTreeMap<String, String>) -> Result<Option<BasisConfig>, ConfigError> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let geometry = ["basis.a", "basis.b", "basis.d", "basis.side"];
        let Some(kind) = get("basis.kind") else {
            if let Some(k) = geometry.iter().find(|k| raw.contains_key(**k)) {
                return Err(invalid(k, "requires basis.kind"));
            }
            return Ok(None);
        };
        let family = match kind {
            "dirichlet" => BasisFamily::Dirichlet,
            "neumann" => BasisFamily::Neumann,
            "mixed" => BasisFamily::Mixed,
            "box" => BasisFamily::Box,
            "hermite" => BasisFamily::Hermite,
            other => return Err(invalid("basis.kind", format!("unknown kind `{other}`"))),
        };
        let interval = matches!(family, BasisFamily::Dirichlet | BasisFamily::Neumann | BasisFamily::Mixed);
        let allowed: &[&str] = match family {
            _ if interval => &["basis.a", "basis.b"],
            BasisFamily::Box => &["basis.d", "basis.side"],
            _ => &["basis.d"],
        };
        if let Some(k) = geometry.iter().find(|k| raw.contains_key(**k) && !allowed.contains(k)) {
            return Err(invalid(k, format!("not used by basis.kind = {kind}")));
        }
        let a = get("basis.a").map(|v| parse_f64("basis.a", v)).transpose()?.unwrap_or(0.0);
        let b = get("basis.b").map(|v| parse_f64("basis.b", v)).transpose()?.unwrap_or(1.0);
        if interval && b <= a {
            return Err(invalid("basis.b", format!("must exceed basis.a ({b} ≤ {a})")));
        }
        let d = get("basis.d").map(|v| count("basis.d", v)).transpose()?.unwrap_or(1);
        let side = get("basis.side").map(|v| positive("basis.side", v)).transpose()?.unwrap_or(1.0);
        Ok(Some(BasisConfig { family, a, b, d, side }))
    }

    fn initial_from(raw: &BTreeMap<String, String>) -> Result<Option<InitialConfig>, ConfigError> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let extras = ["initial.coeffs", "initial.r", "initial.scale", "initial.path"];
        let Some(kind) = get("initial.kind") else {
            if let Some(k) = extras.iter().find(|k| raw.contains_key(**k)) {
                return Err(invalid(k, "requires initial.kind"));
            }
            return Ok(None);
        };
        let allowed: &[&str] = match kind {
            "zero" => &[],
            "fixed" => &["initial.coeffs"],
            "gff" => &["initial.r", "initial.scale"],
            "file" => &["initial.path"],
            other => return Err(invalid("initial.kind", format!("unknown kind `{other}`"))),
        };
        if let Some(k) = extras.iter().find(|k| raw.contains_key(**k) && !allowed.contains(k)) {
            return Err(invalid(k, format!("not used by initial.kind = {kind}")));
        }
        Ok(Some(match kind {
            "zero" => InitialConfig::Zero,
            "fixed" => InitialConfig::Fixed(list("initial.coeffs", get("initial.coeffs").ok_or(ConfigError::Missing("initial.coeffs"))?)?),
            "gff" => InitialConfig::Gff {
                r: get("initial.r").map(|v| parse_f64("initial.r", v)).transpose()?.unwrap_or(1.0),
                scale: get("initial.scale").map(|v| positive("initial.scale", v)).transpose()?.unwrap_or(1.0),
            },
            _ => InitialConfig::File(PathBuf::from(get("initial.path").ok_or(ConfigError::Missing("initial.path"))?)),
        }))
    }

    /// Reject `tolerance.*` keys the experiment does not define.
    pub fn check_tolerances(&self, known: &[(&str, f64)]) -> Result<(), ConfigError> {
        for k in self.tolerances.keys() {
            if !known.iter().any(|(n, _)| n == k) {
                let names: Vec<&str> = known.iter().map(|(n, _)| *n).collect();
                return Err(invalid(
                    &format!("tolerance.{k}"),
                    format!("not a tolerance of {} (known: {})", self.experiment, if names.is_empty() { "none".into() } else { names.join(", ") }),
                ));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::parse(
            "# stationary run\nexperiment.name = stationary_bd\nbasis.kind = dirichlet\nbasis.a = 0\nbasis.b = 2\n\
             basis.modes = 64\nmodel.nu = 0.5\nmc.samples = 2000\nmc.seed = 7\ntime.t_list = 0.5, 1, 5\n\
             initial.kind = fixed\ninitial.coeffs = 1, 0.5\ntolerance.z = 3.5\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, "stationary_bd");
        assert_eq!(cfg.basis, Some(BasisConfig::interval(BasisFamily::Dirichlet, 0.0, 2.0)));
        assert_eq!(cfg.t_list, Some(vec![0.5, 1.0, 5.0]));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.initial, Some(InitialConfig::Fixed(vec![1.0, 0.5])));
        assert_eq!(cfg.tolerance("z", 4.0), 3.5);
        match cfg.initial.unwrap().resolve(4).unwrap() {
            InitialCondition::Fixed(v) => assert_eq!(v, vec![1.0, 0.5, 0.0, 0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        let err = |s: &str| ExperimentConfig::parse(s).unwrap_err();
        assert_eq!(err("experiment.name = x\nmodel.nuu = 1\n"), ConfigError::UnknownKey { line: 2, key: "model.nuu".into() });
        assert!(matches!(err("experiment.name = x\nmodel.nu = -1\n"), ConfigError::Invalid { field, .. } if field == "model.nu"));
        assert!(matches!(err("experiment.name = x\nmodel.nu = 1\nmodel.nu = 2\n"), ConfigError::Duplicate { .. }));
        assert_eq!(err("model.nu = 1\n"), ConfigError::Missing("experiment.name"));
        assert_eq!(err("experiment.name = x\njunk\n"), ConfigError::Syntax { line: 2 });
        assert!(matches!(err("experiment.name = x\ntime.t_list = 1, 0.5\n"), ConfigError::Invalid { .. }));
        assert!(matches!(err("experiment.name = x\nbasis.side = 2\n"), ConfigError::Invalid { .. }));
        assert!(matches!(err("experiment.name = x\nbasis.kind = hermite\nbasis.a = 2\n"), ConfigError::Invalid { .. }));
        assert!(matches!(err("experiment.name = x\nmc.samples = 50\n"), ConfigError::Invalid { .. }));
        assert!(matches!(err("experiment.name = x\ntolerance.z = 0\n"), ConfigError::Invalid { .. }));
        let msg = err("experiment.name = x\nmodel.nu = -1\n").to_string();
        assert!(msg.contains("model.nu"), "{msg}");
    }

    #[test]
    fn tolerance_names_are_checked() {
        let cfg = ExperimentConfig::parse("experiment.name = weyl\ntolerance.bogus = 1\n").unwrap();
        assert!(cfg.check_tolerances(&[("ratio", 0.05)]).is_err());
        let cfg = ExperimentConfig::parse("experiment.name = weyl\ntolerance.ratio = 0.1\n").unwrap();
        assert!(cfg.check_tolerances(&[("ratio", 0.05)]).is_ok());
    }
}
