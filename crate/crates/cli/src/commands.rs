//! `verify` and `opt`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use logdet_ftrl::formats::parse_transcript;
use logdet_ftrl::oracles::{brute_force_opt, pseudodist_opt_desk, BestLabeling, DESK_DIM_CAP};
use logdet_ftrl::pseudodist::DykstraSettings;
use logdet_ftrl::verify::{self, LemmaTrialReport};
use logdet_ftrl::{lemmas, regularizer};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

/// Random feasible competitors per projection input.
pub const PROJECTION_COMPETITORS: usize = 1000;
pub const MAX_ENTROPY_MIXTURES: usize = 50;
pub const BOUNDS_TOLERANCE: f64 = 1e-9;
/// Shapes covered by the regularizer bounds check, `{2..=5} × {2..=4}`.
const BOUND_SHAPES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Entropy,
    Tv,
    Logdet,
    Regularizer,
    Projection,
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "entropy" => Suite::Entropy,
            "tv" => Suite::Tv,
            "logdet" => Suite::Logdet,
            "regularizer" => Suite::Regularizer,
            "projection" => Suite::Projection,
            other => {
                return Err(HarnessError::config(
                    "suite",
                    format!("unknown suite '{other}' (all, entropy, tv, logdet, regularizer, projection)"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    /// Replaces the constant of every parametrized check that runs: the
    /// entropy and `ln det` constants, the payoff-modulus constant and the
    /// TV bound's multiplier.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Check {
    Entropy,
    MaxEntropy,
    Tv,
    Logdet,
    Bounds,
    Concavity,
    PayoffModulus,
    Projection,
}

impl Check {
    fn run(self, o: &VerifyOptions) -> logdet_ftrl::Result<LemmaTrialReport> {
        let (t, seed) = (o.trials, o.seed);
        let c = |default: f64| o.constant.unwrap_or(default);
        match self {
            Check::Entropy => verify::entropy_suite(t, seed, c(lemmas::ENTROPY_CONCAVITY_CONSTANT)),
            Check::MaxEntropy => verify::gaussian_max_entropy_suite(t.min(MAX_ENTROPY_MIXTURES), seed),
            Check::Tv => verify::tv_suite(t, seed, c(1.0)),
            Check::Logdet => verify::logdet_suite(t, seed, c(lemmas::LOGDET_CONCAVITY_CONSTANT)),
            Check::Bounds => verify::regularizer_bounds_suite(t.div_ceil(BOUND_SHAPES), seed, BOUNDS_TOLERANCE),
            Check::Concavity => verify::regularizer_concavity_suite(t, seed),
            Check::PayoffModulus => verify::payoff_modulus_suite(t, seed, c(regularizer::PAYOFF_MODULUS_CONSTANT)),
            Check::Projection => {
                verify::projection_suite(t, PROJECTION_COMPETITORS, seed, DykstraSettings::default())
            }
        }
    }
}

fn checks(suite: Suite) -> Vec<Check> {
    use Check::*;
    match suite {
        Suite::All => vec![Entropy, MaxEntropy, Tv, Logdet, Bounds, Concavity, PayoffModulus, Projection],
        Suite::Entropy => vec![Entropy, MaxEntropy],
        Suite::Tv => vec![Tv],
        Suite::Logdet => vec![Logdet],
        Suite::Regularizer => vec![Bounds, Concavity, PayoffModulus],
        Suite::Projection => vec![Projection],
    }
}

/// Runs the selected suites. The reports come back in a fixed order; the
/// caller decides the exit status from [`LemmaTrialReport::passed`].
pub fn cmd_verify(options: &VerifyOptions) -> Result<Vec<LemmaTrialReport>> {
    if options.trials == 0 {
        return Err(HarnessError::config("trials", "must be at least 1"));
    }
    if let Some(c) = options.constant {
        if !(c.is_finite() && c >= 0.0) {
            return Err(HarnessError::config("constant", "must be finite and nonnegative"));
        }
    }
    checks(options.suite)
        .into_par_iter()
        .map(|check| check.run(options).map_err(HarnessError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptReport {
    pub best: BestLabeling,
    /// Relaxation optimum, computed when `nk ≤ 8`.
    pub relaxed: Option<f64>,
}

impl fmt::Display for OptReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.best.labels.iter().map(|l| l.to_string()).collect();
        writeln!(f, "value {}", self.best.value)?;
        write!(f, "labeling {}", labels.join(" "))?;
        if let Some(v) = self.relaxed {
            write!(f, "\nrelaxation {v}")?;
        }
        Ok(())
    }
}

pub fn cmd_opt(path: &Path) -> Result<OptReport> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let transcript = parse_transcript(&text).map_err(|source| HarnessError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let best = brute_force_opt(&transcript)?;
    let relaxed = if transcript.n * transcript.k <= DESK_DIM_CAP {
        Some(pseudodist_opt_desk(&transcript)?)
    } else {
        None
    };
    Ok(OptReport { best, relaxed })
}
