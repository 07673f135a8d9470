//! The experiment loop and its CSV output.
//!
//! One row per round, `round` counted from 0:
//!
//! ```text
//! round,i,j,payoff,cumulative,inexact_flag,sampled_a,sampled_b[,opt_cumulative,regret]
//! ```
//!
//! `payoff` is the expected payoff of the distribution the engine submitted,
//! `sampled_a,sampled_b` the label pair actually drawn from it. The comparator
//! columns appear when every prefix optimum is affordable (`kⁿ ≤ 2²⁰`).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use logdet_ftrl::engine::EngineState;
use logdet_ftrl::environment::Adversary;
use logdet_ftrl::formats::{fmt_f64, write_checkpoint, Checkpoint};
use logdet_ftrl::oracles::{
    labeling_count, measure_regret, prefix_optima, regret_ratios, Transcript, BRUTE_FORCE_CAP,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Largest `kⁿ` for which per-round comparator columns are written.
pub const PREFIX_CAP: u128 = 1 << 20;
/// Rounds averaged for the closing payoff in a summary.
pub const TAIL_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub round: usize,
    pub i: usize,
    pub j: usize,
    pub payoff: f64,
    pub cumulative: f64,
    pub inexact: bool,
    pub sampled: (usize, usize),
    pub opt_cumulative: Option<f64>,
}

impl RunRow {
    pub fn regret(&self) -> Option<f64> {
        self.opt_cumulative.map(|opt| opt - self.cumulative)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub rows: Vec<RunRow>,
    pub cumulative_payoff: f64,
    /// Best fixed labeling's total, when `kⁿ` is within the brute-force cap.
    pub opt_value: Option<f64>,
    pub regret: Option<f64>,
    pub inexact_solves: usize,
    pub wall_clock: Duration,
    pub output: Option<PathBuf>,
}

impl RunSummary {
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    /// `(regret / √(nk³T), regret / √(nkT))`.
    pub fn ratios(&self) -> Option<(f64, f64)> {
        self.regret
            .map(|r| regret_ratios(r, self.n, self.k, self.horizon()))
    }

    /// Mean payoff over the last [`TAIL_WINDOW`] rounds.
    pub fn tail_mean(&self) -> f64 {
        let tail = &self.rows[self.rows.len().saturating_sub(TAIL_WINDOW)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.payoff).sum::<f64>() / tail.len() as f64
    }
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "seed {}  rounds {}  payoff {:.6}  last-{} mean {:.6}  inexact {}",
            self.seed,
            self.horizon(),
            self.cumulative_payoff,
            TAIL_WINDOW.min(self.horizon()),
            self.tail_mean(),
            self.inexact_solves
        )?;
        match (self.opt_value, self.regret, self.ratios()) {
            (Some(opt), Some(regret), Some((nk3, nk))) => write!(
                f,
                "  opt {opt:.6}  regret {regret:.6}  regret/sqrt(nk^3T) {nk3:.6}  regret/sqrt(nkT) {nk:.6}"
            )?,
            _ => write!(f, "  (no comparator: k^n above cap)")?,
        }
        if let Some(path) = &self.output {
            write!(f, "  -> {}", path.display())?;
        }
        Ok(())
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let fail = |source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    };
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(fail)
}

/// Plays one replicate. Both the adversary and the pair sampler use `seed`.
/// With `checkpoint` set, the engine is saved there every
/// `checkpoint_every` rounds.
pub fn simulate(config: &ExperimentConfig, seed: u64, checkpoint: Option<&Path>) -> Result<RunSummary> {
    config.validate()?;
    let started = Instant::now();
    let spec = config.adversary_spec(seed)?;
    let horizon = spec.horizon;
    let adversary = Adversary::new(spec)?;
    let mut engine = EngineState::new(config.engine_config(horizon, seed))?;
    let mut transcript = Transcript::new(config.n, config.k, config.problem);
    let mut rows = Vec::with_capacity(horizon);
    let mut cumulative = 0.0;

    for t in 0..horizon {
        let (query, deferred) = adversary.generate_round(t)?;
        let dist = engine.predict(query)?;
        let sampled = engine.sample(&dist);
        let payoff = deferred.reveal();
        let outcome = engine.observe(query, &payoff)?;
        cumulative += outcome.payoff;
        rows.push(RunRow {
            round: t,
            i: query.i,
            j: query.j,
            payoff: outcome.payoff,
            cumulative,
            inexact: outcome.resolved && !outcome.exact,
            sampled,
            opt_cumulative: None,
        });
        transcript.push(query, payoff);
        if let Some(path) = checkpoint {
            if config.checkpoint_every > 0 && (t + 1) % config.checkpoint_every == 0 {
                write_atomic(path, write_checkpoint(&Checkpoint::of(&engine)).as_bytes())?;
            }
        }
    }

    if let Some(prefix) = prefix_optima(&transcript, PREFIX_CAP)? {
        for (row, opt) in rows.iter_mut().zip(prefix) {
            row.opt_cumulative = Some(opt);
        }
    }
    let payoffs: Vec<f64> = rows.iter().map(|r| r.payoff).collect();
    let (opt_value, regret) = if labeling_count(config.n, config.k) <= BRUTE_FORCE_CAP {
        let report = measure_regret(&transcript, &payoffs)?;
        (Some(report.opt.value), Some(report.regret))
    } else {
        (None, None)
    };
    Ok(RunSummary {
        seed,
        n: config.n,
        k: config.k,
        rows,
        cumulative_payoff: cumulative,
        opt_value,
        regret,
        inexact_solves: engine.inexact_solves(),
        wall_clock: started.elapsed(),
        output: None,
    })
}

pub fn csv_bytes(summary: &RunSummary) -> Result<Vec<u8>> {
    let with_opt = summary.rows.iter().all(|r| r.opt_cumulative.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["round", "i", "j", "payoff", "cumulative", "inexact_flag", "sampled_a", "sampled_b"];
    if with_opt {
        header.extend(["opt_cumulative", "regret"]);
    }
    w.write_record(&header).map_err(csv_error)?;
    for r in &summary.rows {
        let mut record = vec![
            r.round.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            fmt_f64(r.payoff),
            fmt_f64(r.cumulative),
            u8::from(r.inexact).to_string(),
            r.sampled.0.to_string(),
            r.sampled.1.to_string(),
        ];
        if let (true, Some(opt), Some(regret)) = (with_opt, r.opt_cumulative, r.regret()) {
            record.extend([fmt_f64(opt), fmt_f64(regret)]);
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| csv_error(e.into_error().into()))
}

fn csv_error(e: csv::Error) -> HarnessError {
    HarnessError::Write {
        path: PathBuf::from("<csv>"),
        source: std::io::Error::other(e),
    }
}

/// Output path of replicate `index`: `out` itself for a single replicate,
/// else `<stem>_<index>.<ext>` beside it.
pub fn replicate_path(out: &Path, index: usize, replicates: usize) -> PathBuf {
    if replicates == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let name = match out.extension() {
        Some(ext) => format!("{stem}_{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index}"),
    };
    out.with_file_name(name)
}

/// Runs every replicate (seed `seed + index`) and writes one CSV each.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    config.validate()?;
    (0..config.replicates)
        .into_par_iter()
        .map(|index| {
            let seed = config.seed.wrapping_add(index as u64);
            let path = replicate_path(&config.out, index, config.replicates);
            let checkpoint = (config.checkpoint_every > 0).then(|| path.with_extension("checkpoint"));
            let mut summary = simulate(config, seed, checkpoint.as_deref())?;
            write_atomic(&path, &csv_bytes(&summary)?)?;
            summary.output = Some(path);
            Ok(summary)
        })
        .collect()
}
