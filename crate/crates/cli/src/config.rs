//! Experiment configuration: flat `key = value` text, overridable key by key.
//!
//! ```text
//! # planted max-cut, six items
//! adversary = planted
//! n = 6
//! T = 1000
//! noise = 0.1
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use logdet_ftrl::engine::{EngineConfig, LearningRate, SolverSettings};
use logdet_ftrl::environment::{parse_script, AdversaryKind, AdversarySpec, Problem};
use logdet_ftrl::Error as CoreError;

use crate::error::{HarnessError, Result};

pub const DEFAULT_HORIZON: usize = 1000;
/// Largest `nk` the harness will run an engine at.
pub const RUN_DIM_CAP: usize = 512;

/// Keys accepted in config files and as overrides.
pub const KEYS: &[&str] = &[
    "n",
    "k",
    "T",
    "eta",
    "seed",
    "noise",
    "adversary",
    "problem",
    "planted",
    "script",
    "replicates",
    "out",
    "checkpoint_every",
    "resolve_every",
    "tolerance",
    "max_outer",
    "dykstra_tol",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// `None` takes the script length for scripted runs, else [`DEFAULT_HORIZON`].
    pub horizon: Option<usize>,
    /// `None` is the automatic rate.
    pub eta: Option<f64>,
    pub seed: u64,
    pub noise: f64,
    pub adversary: AdversaryKind,
    pub problem: Problem,
    pub planted: Option<Vec<usize>>,
    pub script: Option<PathBuf>,
    pub replicates: usize,
    pub out: PathBuf,
    /// Rounds between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    pub resolve_every: usize,
    pub solver: SolverSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 6,
            k: 2,
            horizon: None,
            eta: None,
            seed: 0,
            noise: 0.0,
            adversary: AdversaryKind::PlantedLabeling,
            problem: Problem::MaxCut,
            planted: None,
            script: None,
            replicates: 1,
            out: PathBuf::from("run.csv"),
            checkpoint_every: 0,
            resolve_every: 1,
            solver: SolverSettings::default(),
        }
    }
}

fn number<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HarnessError::config(field, format!("'{value}' is not a valid value")))
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    /// Applies every `key = value` line of `text`. Blank lines and `#`
    /// comments are skipped; errors name the line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| CoreError::Parse { line: idx + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at("expected 'key = value'".into()))?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                HarnessError::Config { field, msg } => at(format!("{field}: {msg}")).into(),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = number(key, value)?,
            "k" => self.k = number(key, value)?,
            "T" | "horizon" => self.horizon = Some(number(key, value)?),
            "eta" => {
                self.eta = match value {
                    "auto" => None,
                    v => Some(number(key, v)?),
                }
            }
            "seed" => self.seed = number(key, value)?,
            "noise" => self.noise = number(key, value)?,
            "adversary" => self.adversary = value.parse().map_err(|e: CoreError| HarnessError::config(key, e.to_string()))?,
            "problem" => self.problem = value.parse().map_err(|e: CoreError| HarnessError::config(key, e.to_string()))?,
            "planted" => {
                self.planted = match value {
                    "" | "random" => None,
                    v => Some(
                        v.split(',')
                            .map(|l| number(key, l.trim()))
                            .collect::<Result<Vec<usize>>>()?,
                    ),
                }
            }
            "script" => self.script = Some(PathBuf::from(value)),
            "replicates" => self.replicates = number(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "checkpoint_every" => self.checkpoint_every = number(key, value)?,
            "resolve_every" => self.resolve_every = number(key, value)?,
            "tolerance" => self.solver.tolerance = number(key, value)?,
            "max_outer" => self.solver.max_outer = number(key, value)?,
            "dykstra_tol" => self.solver.dykstra.tol = number(key, value)?,
            other => {
                return Err(HarnessError::config(
                    other,
                    format!("unknown key; expected one of {}", KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: &str| Err(HarnessError::config(field, msg));
        if self.n == 0 {
            return fail("n", "must be at least 1");
        }
        if self.k == 0 {
            return fail("k", "must be at least 1");
        }
        if self.problem == Problem::MaxCut && self.k != 2 {
            return fail("k", "max-cut needs k = 2");
        }
        if self.problem == Problem::Generic {
            return fail("problem", "generic payoffs have no run-time source");
        }
        if self.adversary != AdversaryKind::Scripted && self.n < 2 {
            return fail("n", "random queries need at least two items");
        }
        if self.horizon == Some(0) {
            return fail("T", "must be at least 1");
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return fail("eta", "must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return fail("noise", "must lie in [0, 1]");
        }
        if self.replicates == 0 {
            return fail("replicates", "must be at least 1");
        }
        if self.resolve_every == 0 {
            return fail("resolve_every", "must be at least 1");
        }
        if let Some(labels) = &self.planted {
            if labels.len() != self.n || labels.iter().any(|&l| l >= self.k) {
                return fail("planted", "needs n labels, each below k");
            }
        }
        if self.adversary == AdversaryKind::Scripted && self.script.is_none() {
            return fail("script", "scripted adversary needs a script file");
        }
        self.solver
            .validate()
            .map_err(|e| HarnessError::config("solver", e.to_string()))?;
        let dim = self.n.saturating_mul(self.k);
        if dim > RUN_DIM_CAP {
            return Err(CoreError::Size {
                what: "nk",
                size: dim as u128,
                cap: RUN_DIM_CAP as u128,
            }
            .into());
        }
        Ok(())
    }

    /// The adversary for one replicate, reading the script file if any.
    pub fn adversary_spec(&self, seed: u64) -> Result<AdversarySpec> {
        let script = match (&self.script, self.adversary) {
            (Some(path), AdversaryKind::Scripted) => {
                let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
                    path: path.clone(),
                    source,
                })?;
                parse_script(&text, self.problem, self.n, self.k, 1).map_err(|source| HarnessError::Input {
                    path: path.clone(),
                    source,
                })?
            }
            _ => Vec::new(),
        };
        let horizon = match (self.horizon, self.adversary) {
            (Some(t), _) => t,
            (None, AdversaryKind::Scripted) => script.len().max(1),
            (None, _) => DEFAULT_HORIZON,
        };
        Ok(AdversarySpec {
            kind: self.adversary,
            problem: self.problem,
            n: self.n,
            k: self.k,
            horizon,
            noise: self.noise,
            seed,
            planted: self.planted.clone(),
            script,
        })
    }

    pub fn engine_config(&self, horizon: usize, seed: u64) -> EngineConfig {
        EngineConfig {
            n: self.n,
            k: self.k,
            horizon: Some(horizon),
            eta: self.eta.map_or(LearningRate::Auto, LearningRate::Fixed),
            solver: self.solver,
            resolve_every: self.resolve_every,
            seed,
        }
    }
}

/// Parses `a..b` (half-open) or a comma-separated list.
pub fn parse_list(field: &str, text: &str) -> Result<Vec<u64>> {
    let values: Vec<u64> = match text.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (number(field, a.trim())?, number(field, b.trim())?);
            (a..b).collect()
        }
        None => text
            .split(',')
            .map(|v| number(field, v.trim()))
            .collect::<Result<_>>()?,
    };
    if values.is_empty() {
        return Err(HarnessError::config(field, "empty list"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = ExperimentConfig::from_text("# comment\nn = 4\nT=50\nadversary = random\n\neta = 0.5\n").unwrap();
        assert_eq!((c.n, c.horizon, c.eta), (4, Some(50), Some(0.5)));
        assert_eq!(c.adversary, AdversaryKind::RandomEdge);
        c.set("eta", "auto").unwrap();
        c.set("T", "80").unwrap();
        assert_eq!((c.eta, c.horizon), (None, Some(80)));
        c.validate().unwrap();
    }

    #[test]
    fn errors_name_line_or_field() {
        let err = ExperimentConfig::from_text("n = 4\nk = 2\nT = ten\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = ExperimentConfig::from_text("colour = red\n").unwrap_err();
        assert!(err.to_string().contains("colour"));
        let mut c = ExperimentConfig::default();
        c.set("noise", "1.5").unwrap();
        let err = c.validate().unwrap_err();
        assert!(matches!(&err, HarnessError::Config { field, .. } if field == "noise"));
        let mut c = ExperimentConfig::default();
        c.n = 300;
        assert_eq!(c.validate().unwrap_err().exit_code(), 3);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("seed", "0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_list("T", "250, 500,1000").unwrap(), vec![250, 500, 1000]);
        assert!(parse_list("T", "5..5").is_err());
        assert!(parse_list("T", "a,b").is_err());
    }
}
