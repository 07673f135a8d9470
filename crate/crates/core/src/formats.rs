//! Text formats: transcripts and engine checkpoints.
//!
//! # Transcript
//!
//! ```text
//! n k T problem
//! i j outcome
//! ...
//! ```
//!
//! The header gives the item count, label count, number of rounds and the
//! problem (`maxcut` or `gambling`). Each following line is one round in the
//! scripted-adversary format (`cut`/`not-cut` for max-cut, `first`/`second`
//! for gambling). Blank lines and `#` comments are ignored.
//!
//! # Checkpoint
//!
//! ```text
//! logdet-ftrl-checkpoint 1
//! round <t>
//! shape <n> <k>
//! G
//! <nk rows of nk numbers>
//! A
//! <nk rows of nk numbers>
//! ```
//!
//! Matrices are row-major, one row per line; numbers carry 17 significant
//! digits so doubles round-trip exactly.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::engine::{EngineConfig, EngineState};
use crate::environment::{format_script, parse_script, Problem};
use crate::error::{Error, Result};
use crate::oracles::Transcript;

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(idx, l)| (idx + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::parse(line, format!("'{field}' is not a valid {what}")))
}

pub fn parse_transcript(text: &str) -> Result<Transcript> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header 'n k T problem'"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::parse(header_line, "header must be 'n k T problem'"));
    }
    let n: usize = parse_field(header_line, fields[0], "item count")?;
    let k: usize = parse_field(header_line, fields[1], "label count")?;
    let horizon: usize = parse_field(header_line, fields[2], "round count")?;
    let problem: Problem = fields[3]
        .parse()
        .map_err(|e: Error| Error::parse(header_line, e.to_string()))?;
    if n == 0 || k == 0 {
        return Err(Error::parse(header_line, "n and k must be positive"));
    }
    if problem == Problem::Generic {
        return Err(Error::parse(header_line, "generic transcripts have no text form"));
    }
    if problem == Problem::MaxCut && k != 2 {
        return Err(Error::parse(header_line, "max-cut transcripts need k = 2"));
    }

    // Re-slice the body so parse_script sees original line numbers.
    let body_start = header_line;
    let body: String = text
        .lines()
        .skip(body_start)
        .map(|l| format!("{l}\n"))
        .collect();
    let rounds = parse_script(&body, problem, n, k, body_start + 1)?;
    if rounds.len() != horizon {
        let last_line = text.lines().count().max(header_line);
        return Err(Error::parse(
            last_line,
            format!("header promises {horizon} rounds, found {}", rounds.len()),
        ));
    }
    Ok(Transcript {
        n,
        k,
        problem,
        rounds,
    })
}

pub fn write_transcript(transcript: &Transcript) -> Result<String> {
    let mut out = format!(
        "{} {} {} {}\n",
        transcript.n,
        transcript.k,
        transcript.len(),
        transcript.problem
    );
    out.push_str(&format_script(&transcript.rounds, transcript.problem)?);
    Ok(out)
}

/// The persisted part of an engine: round index, payoff embedding, solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub round: usize,
    pub n: usize,
    pub k: usize,
    pub g: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

const CHECKPOINT_MAGIC: &str = "logdet-ftrl-checkpoint 1";

impl Checkpoint {
    pub fn of(engine: &EngineState) -> Self {
        let ix = engine.indexing();
        Self {
            round: engine.round(),
            n: ix.n(),
            k: ix.k(),
            g: engine.payoff_embedding().clone(),
            a: engine.solution().matrix().clone(),
        }
    }

    pub fn restore(self, config: EngineConfig) -> Result<EngineState> {
        if (config.n, config.k) != (self.n, self.k) {
            return Err(Error::State(format!(
                "checkpoint shape ({}, {}) does not match config ({}, {})",
                self.n, self.k, config.n, config.k
            )));
        }
        EngineState::restore(config, self.round, self.g, self.a)
    }
}

fn write_matrix(out: &mut String, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_f64(m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn write_checkpoint(checkpoint: &Checkpoint) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(out, "round {}", checkpoint.round);
    let _ = writeln!(out, "shape {} {}", checkpoint.n, checkpoint.k);
    out.push_str("G\n");
    write_matrix(&mut out, &checkpoint.g);
    out.push_str("A\n");
    write_matrix(&mut out, &checkpoint.a);
    out
}

/// Largest `nk` accepted when reading a checkpoint.
const CHECKPOINT_DIM_CAP: usize = 4096;

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |expect: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of checkpoint, expected {expect}")))
    };

    let (line, magic) = next("header")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::parse(line, format!("expected '{CHECKPOINT_MAGIC}'")));
    }
    let (line, round_line) = next("round")?;
    let round = match round_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["round", t] => parse_field(line, t, "round index")?,
        _ => return Err(Error::parse(line, "expected 'round <t>'")),
    };
    let (line, shape_line) = next("shape")?;
    let (n, k): (usize, usize) = match shape_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["shape", n, k] => (parse_field(line, n, "item count")?, parse_field(line, k, "label count")?),
        _ => return Err(Error::parse(line, "expected 'shape <n> <k>'")),
    };
    let d = n
        .checked_mul(k)
        .filter(|&d| d > 0 && d <= CHECKPOINT_DIM_CAP)
        .ok_or_else(|| Error::parse(line, format!("shape {n}x{k} out of range")))?;

    let mut read_matrix = |name: &str| -> Result<DMatrix<f64>> {
        let (line, tag) = next(name)?;
        if tag != name {
            return Err(Error::parse(line, format!("expected '{name}'")));
        }
        let mut values = Vec::with_capacity(d * d);
        for _ in 0..d {
            let (line, row) = next("matrix row")?;
            let before = values.len();
            for field in row.split_whitespace() {
                let v: f64 = parse_field(line, field, "number")?;
                if !v.is_finite() {
                    return Err(Error::parse(line, "non-finite matrix entry"));
                }
                values.push(v);
            }
            if values.len() - before != d {
                return Err(Error::parse(line, format!("expected {d} entries")));
            }
        }
        Ok(DMatrix::from_row_slice(d, d, &values))
    };
    let g = read_matrix("G")?;
    let a = read_matrix("A")?;
    Ok(Checkpoint { round, n, k, g, a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{maxcut_payoff, CutOutcome, RoundQuery};

    #[test]
    fn transcript_round_trip() {
        let text = "3 2 3 maxcut\n0 1 cut\n1 2 cut\n0 2 not-cut\n";
        let t = parse_transcript(text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.rounds[2].payoff, maxcut_payoff(CutOutcome::NotCut, 2).unwrap());
        assert_eq!(t.rounds[1].query, RoundQuery { i: 1, j: 2 });
        assert_eq!(write_transcript(&t).unwrap(), text);
    }

    #[test]
    fn transcript_header_only() {
        let t = parse_transcript("4 2 0 maxcut\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn transcript_errors_name_the_line() {
        let err = parse_transcript("3 2 3 maxcut\n0 1 cut\n1 2 bogus\n0 2 cut\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_transcript("3 2 maxcut\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_transcript("3 2 2 maxcut\n0 1 cut\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(parse_transcript("").is_err());
        assert!(parse_transcript("3 3 0 maxcut\n").is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let g = DMatrix::from_fn(4, 4, |r, c| (r as f64 + 1.0) / (c as f64 + 3.0));
        let a = DMatrix::from_fn(4, 4, |r, c| 0.1f64.powi((r + c) as i32) / 7.0);
        let ck = Checkpoint { round: 17, n: 2, k: 2, g, a };
        let parsed = parse_checkpoint(&write_checkpoint(&ck)).unwrap();
        assert_eq!(parsed, ck);
    }

    #[test]
    fn checkpoint_rejects_malformed_input() {
        assert!(parse_checkpoint("").is_err());
        assert!(parse_checkpoint("logdet-ftrl-checkpoint 1\nround x\n").is_err());
        let truncated = "logdet-ftrl-checkpoint 1\nround 1\nshape 1 2\nG\n1 0\n";
        assert!(parse_checkpoint(truncated).is_err());
        let huge = "logdet-ftrl-checkpoint 1\nround 1\nshape 100000 100000\n";
        assert!(parse_checkpoint(huge).is_err());
    }
}
