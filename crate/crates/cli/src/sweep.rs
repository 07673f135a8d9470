//! Grids of runs over horizons and seeds, aggregated into one CSV.

use rayon::prelude::*;

use logdet_ftrl::formats::fmt_f64;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::simulate;

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub cumulative_payoff: f64,
    pub opt_value: Option<f64>,
    pub regret: Option<f64>,
    pub ratio_nk3: Option<f64>,
    pub ratio_nk: Option<f64>,
    pub tail_mean: f64,
    pub inexact_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub horizon: usize,
    pub seed: u64,
    /// A failed cell keeps its error message.
    pub outcome: std::result::Result<CellStats, String>,
}

/// Runs `template` at every `(T, seed)` and returns rows sorted by `(T, seed)`.
/// A failing cell is recorded, not fatal.
pub fn cmd_sweep(template: &ExperimentConfig, horizons: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    template.validate()?;
    if horizons.contains(&0) {
        return Err(HarnessError::config("T", "must be at least 1"));
    }
    let cells: Vec<(usize, u64)> = horizons
        .iter()
        .flat_map(|&t| seeds.iter().map(move |&s| (t, s)))
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(horizon, seed)| {
            let mut config = template.clone();
            config.horizon = Some(horizon);
            let outcome = simulate(&config, seed, None)
                .map(|s| {
                    let ratios = s.ratios();
                    CellStats {
                        cumulative_payoff: s.cumulative_payoff,
                        opt_value: s.opt_value,
                        regret: s.regret,
                        ratio_nk3: ratios.map(|r| r.0),
                        ratio_nk: ratios.map(|r| r.1),
                        tail_mean: s.tail_mean(),
                        inexact_solves: s.inexact_solves,
                    }
                })
                .map_err(|e| e.to_string());
            SweepRow { horizon, seed, outcome }
        })
        .collect();
    rows.sort_by_key(|r| (r.horizon, r.seed));
    Ok(rows)
}

/// Mean regret per horizon over the cells that produced one.
pub fn mean_regret_by_horizon(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for row in rows {
        let Ok(CellStats { regret: Some(regret), .. }) = &row.outcome else {
            continue;
        };
        match out.last_mut() {
            Some((t, sum)) if *t == row.horizon => {
                *sum += regret;
                *counts.last_mut().unwrap() += 1;
            }
            _ => {
                out.push((row.horizon, *regret));
                counts.push(1);
            }
        }
    }
    for ((_, sum), count) in out.iter_mut().zip(counts) {
        *sum /= count as f64;
    }
    out
}

pub fn sweep_csv_bytes(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "T", "seed", "cumulative", "opt", "regret", "ratio_nk3", "ratio_nk", "tail_mean", "inexact", "error",
    ];
    let fail = |e: csv::Error| HarnessError::Write {
        path: "<csv>".into(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(fail)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let mut record = vec![r.horizon.to_string(), r.seed.to_string()];
        match &r.outcome {
            Ok(s) => record.extend([
                fmt_f64(s.cumulative_payoff),
                opt(s.opt_value),
                opt(s.regret),
                opt(s.ratio_nk3),
                opt(s.ratio_nk),
                fmt_f64(s.tail_mean),
                s.inexact_solves.to_string(),
                String::new(),
            ]),
            Err(msg) => {
                record.extend(std::iter::repeat_n(String::new(), 7));
                record.push(msg.clone());
            }
        }
        w.write_record(&record).map_err(fail)?;
    }
    w.into_inner().map_err(|e| fail(e.into_error().into()))
}
