//! Run configuration: a TOML file merged with command-line overrides.
//!
//! ```toml
//! command = "density"          # optional when given on the command line
//! gamma = 0.5                  # or two of gamma / z / c
//! seed = 7
//!
//! [grid]
//! kind = "logarithmic"         # or "uniform"
//! r_min = 1e-6
//! r_max = 5000.0
//! n_points = 2500
//!
//! [cutoffs]
//! n_max = 25
//! kappa_max = 12
//! l = 2
//! kappa = "-3..3"              # inclusive range or comma list
//! n = "0..4"
//!
//! [potential]
//! name = "power-exp"           # exp, power, power-exp, cutoff-coulomb, yukawa, coulomb-tail, screened-coulomb
//! a = 1.0
//! p = 1.0
//! b = 1.0
//!
//! [tolerances]
//! eigen = 1e-4
//! ```

use std::collections::BTreeMap;
use std::fmt;

use furry_density::grid::GridKind;
use furry_density::potential::RadialFunction;
use furry_density::{Coupling, RadialGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Command {
    Eigenvalues,
    Density,
    Bounds,
    FhCheck,
    Shift,
    Decay,
    Norms,
    Classify,
    Tf,
    Scott,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigenvalues => "eigenvalues",
            Command::Density => "density",
            Command::Bounds => "bounds",
            Command::FhCheck => "fh-check",
            Command::Shift => "shift",
            Command::Decay => "decay",
            Command::Norms => "norms",
            Command::Classify => "classify",
            Command::Tf => "tf",
            Command::Scott => "scott",
            Command::Verify => "verify",
        }
    }

    /// Keys accepted under `options` / `--set`.
    pub fn option_keys(self) -> &'static [&'static str] {
        match self {
            Command::Density => &["channels", "fit_tail", "tail_window", "fit_origin", "origin_window"],
            Command::Bounds => &["s"],
            Command::FhCheck => &["step"],
            Command::Decay => &["screening_mu", "lambda"],
            Command::Norms => &["s", "delta"],
            Command::Tf => &["screening_points", "mms_draws"],
            Command::Verify => &["mms_draws"],
            Command::Eigenvalues | Command::Shift | Command::Classify | Command::Scott => &[],
        }
    }
}

/// A configuration problem tied to one field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: Option<GridKind>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub n_points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoffs {
    pub n_max: Option<u32>,
    pub kappa_max: Option<u32>,
    pub l: Option<u32>,
    pub kappa: Option<String>,
    pub n: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative eigenvalue error against the closed form.
    pub eigen: f64,
    /// Allowed deviation of the observed convergence order from 2.
    pub order: f64,
    pub fh: f64,
    /// Allowed deviation of fitted density exponents.
    pub density_slope: f64,
    /// Relative drift of channel-bound constants under grid doubling.
    pub bound_drift: f64,
    pub charge: f64,
    pub tf_slope: f64,
    pub matrix: f64,
    pub domination: f64,
    pub norm: f64,
    pub unsold: f64,
    /// Doubled-grid change of the Scott probe, relative to its total.
    pub scott_disc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigen: 1e-4,
            order: 0.3,
            fh: 1e-3,
            density_slope: 0.1,
            bound_drift: 0.05,
            charge: 1e-3,
            tf_slope: 0.05,
            matrix: 1e-8,
            domination: 0.05,
            norm: 1e-6,
            unsold: 1e-10,
            scott_disc: 1e-2,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), ConfigError> {
        let v = serde_json::to_value(self).expect("plain struct");
        for (k, x) in v.as_object().expect("struct") {
            let x = x.as_f64().unwrap_or(f64::NAN);
            if !(x > 0.0 && x.is_finite()) {
                return Err(ConfigError::new(&format!("tolerances.{k}"), format!("must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

/// Everything a run depends on. `out` is excluded from the digest so the
/// same run written to two places compares equal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub gamma: Option<f64>,
    pub z: Option<f64>,
    pub c: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub cutoffs: Cutoffs,
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub out: Option<String>,
    /// Subcommand options (s, delta, lambda, step, draws, ...).
    #[serde(default)]
    pub options: BTreeMap<String, toml::Value>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "config".to_string());
            ConfigError::new(&field, msg.trim())
        })
    }

    pub fn validate(&self, cmd: Command) -> Result<(), ConfigError> {
        self.tolerances.validate()?;
        if let Some(k) = self.options.keys().find(|k| !cmd.option_keys().contains(&k.as_str())) {
            let known = cmd.option_keys();
            let hint = if known.is_empty() { "none".to_string() } else { known.join(", ") };
            return Err(ConfigError::new(&format!("options.{k}"), format!("not an option of {} (accepted: {hint})", cmd.name())));
        }
        if let Some(n) = self.grid.n_points {
            if n < furry_density::grid::MIN_POINTS {
                return Err(ConfigError::new("grid.n_points", format!("must be >= {}", furry_density::grid::MIN_POINTS)));
            }
        }
        if let (Some(a), Some(b)) = (self.grid.r_min, self.grid.r_max) {
            if !(a >= 0.0 && b > a) {
                return Err(ConfigError::new("grid.r_max", format!("need 0 <= r_min < r_max, got [{a}, {b}]")));
            }
        }
        if let Some(k) = &self.cutoffs.kappa {
            parse_int_list(k).map_err(|m| ConfigError::new("cutoffs.kappa", m))?;
            if k.split(',').any(|p| !p.contains("..") && p.trim().parse::<i64>() == Ok(0)) {
                return Err(ConfigError::new("cutoffs.kappa", "kappa = 0 is not a channel (zero is skipped only inside ranges)"));
            }
        }
        if let Some(n) = &self.cutoffs.n {
            let v = parse_int_list(n).map_err(|m| ConfigError::new("cutoffs.n", m))?;
            if v.iter().any(|&x| x < 0) {
                return Err(ConfigError::new("cutoffs.n", "radial quantum numbers are nonnegative"));
            }
        }
        if let Some(p) = &self.potential {
            p.build().map_err(|m| ConfigError::new("potential", m))?;
        }
        // tf takes Z alone; every other command reads the coupling
        let tf_only_z = cmd == Command::Tf && self.gamma.is_none() && self.c.is_none();
        if tf_only_z {
            if let Some(z) = self.z {
                if !(z > 0.0 && z.is_finite()) {
                    return Err(ConfigError::new("z", format!("must be positive, got {z}")));
                }
            }
        } else if self.gamma.is_some() || self.z.is_some() || self.c.is_some() {
            self.coupling()?;
        }
        Ok(())
    }

    /// Exactly two of {gamma, z, c}, or gamma alone.
    pub fn coupling(&self) -> Result<Coupling, ConfigError> {
        let built = match (self.gamma, self.z, self.c) {
            (Some(g), None, None) => Coupling::from_gamma(g),
            (None, Some(z), Some(c)) => Coupling::from_z_c(z, c),
            (Some(g), Some(z), None) => Coupling::from_z_gamma(z, g),
            (Some(g), None, Some(c)) => Coupling::from_c_gamma(c, g),
            (None, None, None) => return Err(ConfigError::new("gamma", "missing coupling: give gamma, or two of gamma/z/c")),
            (Some(_), Some(_), Some(_)) => {
                return Err(ConfigError::new("gamma", "over-determined coupling: give exactly two of gamma/z/c"))
            }
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err(ConfigError::new("gamma", "under-determined coupling: z or c alone needs a second input"))
            }
        };
        built.map_err(|e| ConfigError::new("gamma", e.to_string()))
    }

    /// Grid from the config, falling back field by field on `default`.
    pub fn grid_or(&self, default: GridSpec) -> Result<RadialGrid, ConfigError> {
        let kind = self.grid.kind.or(default.kind).unwrap_or(GridKind::Logarithmic);
        let r_min = self.grid.r_min.or(default.r_min).unwrap_or(1e-5);
        let r_max = self.grid.r_max.or(default.r_max).unwrap_or(300.0);
        let n = self.grid.n_points.or(default.n_points).unwrap_or(1200);
        furry_density::build_grid(kind, r_min, r_max, n).map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn option_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.options.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(ConfigError::new(&format!("options.{key}"), format!("expected a number, got {v}"))),
        }
    }

    pub fn option_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let field = format!("options.{key}");
        match self.options.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(ConfigError::new(&field, "expected numbers")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(toml::Value::String(s)) => s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| ConfigError::new(&field, format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => self.option_f64(key).map(|x| x.map(|x| vec![x])).map_err(|_| ConfigError::new(&field, format!("expected a list, got {v}"))),
        }
    }

    pub fn option_bool(&self, key: &str) -> Result<bool, ConfigError> {
        match self.options.get(key) {
            None => Ok(false),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(ConfigError::new(&format!("options.{key}"), format!("expected true/false, got {v}"))),
        }
    }

    pub fn option_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.options.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(ConfigError::new(&format!("options.{key}"), format!("expected a nonnegative integer, got {v}"))),
        }
    }

    pub fn kappas_or(&self, default: &str) -> Result<Vec<i32>, ConfigError> {
        let text = self.cutoffs.kappa.as_deref().unwrap_or(default);
        let v = parse_int_list(text).map_err(|m| ConfigError::new("cutoffs.kappa", m))?;
        Ok(v.into_iter().filter(|&k| k != 0).map(|k| k as i32).collect())
    }

    pub fn potential_or(&self, default: &str) -> Result<(PotentialSpec, RadialFunction), ConfigError> {
        let spec = match &self.potential {
            Some(p) => p.clone(),
            None => PotentialSpec::parse(default).map_err(|m| ConfigError::new("potential", m))?,
        };
        let f = spec.build().map_err(|m| ConfigError::new("potential", m))?;
        Ok((spec, f))
    }
}

/// "a..b" (inclusive), "a,b,c", or a mix such as "1,-1,3..4".
pub fn parse_int_list(text: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: i64 = a.trim().parse().map_err(|e| format!("{part:?}: {e}"))?;
            let b: i64 = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{part:?}: {e}"))?;
            if b < a {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|e| format!("{part:?}: {e}"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

impl PotentialSpec {
    /// "name:key=value,key=value", e.g. "cutoff-coulomb:a=1,cap=10,radius=5".
    pub fn parse(text: &str) -> Result<Self, String> {
        let (name, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("parameter {kv:?} is not key=value"))?;
            let x: f64 = v.trim().parse().map_err(|e| format!("parameter {k}: {e}"))?;
            params.insert(k.trim().to_string(), x);
        }
        Ok(PotentialSpec { name: name.trim().to_string(), params })
    }

    fn get(&self, key: &str, default: Option<f64>) -> Result<f64, String> {
        self.params
            .get(key)
            .copied()
            .or(default)
            .ok_or_else(|| format!("{} needs parameter {key}", self.name))
    }

    pub fn build(&self) -> Result<RadialFunction, String> {
        let allowed: &[&str] = match self.name.as_str() {
            "zero" => &[],
            "exp" => &["a", "b"],
            "power" => &["a", "alpha", "r_lo"],
            "power-exp" => &["a", "p", "b"],
            "cutoff-coulomb" => &["a", "cap", "radius"],
            "yukawa" => &["a", "mu"],
            "coulomb-tail" => &["a", "alpha"],
            "screened-coulomb" => &["gamma", "mu"],
            other => return Err(format!("unknown potential {other:?}")),
        };
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("{} does not take parameter {k:?} (allowed: {})", self.name, allowed.join(", ")));
        }
        let f = match self.name.as_str() {
            "zero" => RadialFunction::zero(),
            "exp" => RadialFunction::exp(self.get("a", Some(1.0))?, self.get("b", Some(1.0))?),
            "power" => RadialFunction::power(self.get("a", Some(1.0))?, self.get("alpha", None)?, self.get("r_lo", Some(0.0))?),
            "power-exp" => RadialFunction::power_exp(self.get("a", Some(1.0))?, self.get("p", None)?, self.get("b", Some(1.0))?),
            "cutoff-coulomb" => RadialFunction::cutoff_coulomb(
                self.get("a", Some(1.0))?,
                self.get("cap", Some(f64::INFINITY))?,
                self.get("radius", None)?,
            ),
            "yukawa" => RadialFunction::yukawa(self.get("a", Some(1.0))?, self.get("mu", None)?),
            "coulomb-tail" => RadialFunction::coulomb_power_tail(self.get("a", Some(1.0))?, self.get("alpha", None)?),
            "screened-coulomb" => RadialFunction::screened_coulomb(self.get("gamma", None)?, self.get("mu", Some(1.0))?),
            _ => unreachable!(),
        };
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("-2..2").unwrap(), vec![-2, -1, 0, 1, 2]);
        assert_eq!(parse_int_list("1,-1, 3..4").unwrap(), vec![1, -1, 3, 4]);
        assert!(parse_int_list("3..1").is_err());
        assert!(parse_int_list("").is_err());
    }

    #[test]
    fn coupling_rules() {
        let mut c = RunConfig { gamma: Some(0.5), ..Default::default() };
        assert!(c.coupling().is_ok());
        c.z = Some(20.0);
        assert!((c.coupling().unwrap().c.unwrap() - 40.0).abs() < 1e-12);
        c.c = Some(40.0);
        assert_eq!(c.coupling().unwrap_err().field, "gamma");
        let only_z = RunConfig { z: Some(20.0), ..Default::default() };
        assert!(only_z.coupling().is_err());
    }

    #[test]
    fn potential_specs() {
        let p = PotentialSpec::parse("cutoff-coulomb:a=0.3,radius=5").unwrap();
        let f = p.build().unwrap();
        assert!((f.eval(1.0) - 0.3).abs() < 1e-15);
        assert_eq!(f.eval(6.0), 0.0);
        assert!(PotentialSpec::parse("exp:q=1").unwrap().build().is_err());
        assert!(PotentialSpec::parse("nope").unwrap().build().is_err());
    }
}
