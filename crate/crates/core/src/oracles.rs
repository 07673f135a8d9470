//! Comparators for regret measurement: the best fixed labeling by exhaustive
//! enumeration and the best pseudodistribution at desk scale.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{accumulate_payoff, solve_inner, SolverSettings};
use crate::environment::{PayoffMatrix, Problem, RoundQuery, ScriptedRound};
use crate::error::{Error, Result};
use crate::linalg;
use crate::pseudodist::{LabelIndexing, PseudoDistribution};
use crate::sampling;

/// Largest `kⁿ` the exhaustive comparator will enumerate.
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;
/// Largest `nk` for the pseudodistribution comparator.
pub const DESK_DIM_CAP: usize = 8;
/// Learning rate standing in for `η → ∞` in the pseudodistribution comparator.
pub const DESK_ETA: f64 = 1e4;
pub const DESK_RESTARTS: usize = 20;

/// An ordered sequence of queries and the payoffs nature revealed.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub n: usize,
    pub k: usize,
    pub problem: Problem,
    pub rounds: Vec<ScriptedRound>,
}

impl Transcript {
    pub fn new(n: usize, k: usize, problem: Problem) -> Self {
        Self {
            n,
            k,
            problem,
            rounds: Vec::new(),
        }
    }

    pub fn push(&mut self, query: RoundQuery, payoff: PayoffMatrix) {
        self.rounds.push(ScriptedRound { query, payoff });
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        LabelIndexing::new(self.n, self.k)?;
        for (t, r) in self.rounds.iter().enumerate() {
            if r.query.i >= self.n || r.query.j >= self.n {
                return Err(Error::Input(format!("round {t} queries an item >= n = {}", self.n)));
            }
            if r.payoff.k() != self.k {
                return Err(Error::Input(format!("round {t} payoff is not {0}x{0}", self.k)));
            }
        }
        Ok(())
    }

    /// Total payoff of the fixed labeling strategy over the transcript.
    pub fn labeling_payoff(&self, labels: &[usize]) -> f64 {
        self.rounds
            .iter()
            .map(|r| r.payoff.get(labels[r.query.i], labels[r.query.j]))
            .sum()
    }

    /// The payoff embedding `G` with `⟨G, A⟩ = Σ_t payoff_t(A)`.
    pub fn payoff_embedding(&self) -> Result<DMatrix<f64>> {
        let indexing = LabelIndexing::new(self.n, self.k)?;
        let d = indexing.dim();
        let mut g = DMatrix::zeros(d, d);
        for r in &self.rounds {
            accumulate_payoff(&mut g, indexing, r.query, &r.payoff);
        }
        Ok(g)
    }
}

/// A maximizing labeling and its total payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct BestLabeling {
    pub labels: Vec<usize>,
    pub value: f64,
}

pub fn labeling_count(n: usize, k: usize) -> u128 {
    (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Exhaustive maximization over all `kⁿ` labelings. Ties go to the
/// lexicographically smallest labeling.
pub fn brute_force_opt(transcript: &Transcript) -> Result<BestLabeling> {
    transcript.validate()?;
    let (n, k) = (transcript.n, transcript.k);
    let count = labeling_count(n, k);
    if count > BRUTE_FORCE_CAP {
        return Err(Error::Size {
            what: "k^n",
            size: count,
            cap: BRUTE_FORCE_CAP,
        });
    }

    // unary[i][a]: rounds with i == j. pair[j][i][a*k+b] (i < j): rounds on
    // {i, j}, oriented so a labels i and b labels j.
    let mut unary = vec![vec![0.0; k]; n];
    let mut pair = vec![vec![vec![0.0; k * k]; n]; n];
    for r in &transcript.rounds {
        let (i, j) = (r.query.i, r.query.j);
        if i == j {
            for (a, slot) in unary[i].iter_mut().enumerate() {
                *slot += r.payoff.get(a, a);
            }
            continue;
        }
        let (lo, hi, swapped) = if i < j { (i, j, false) } else { (j, i, true) };
        for a in 0..k {
            for b in 0..k {
                let c = if swapped { r.payoff.get(b, a) } else { r.payoff.get(a, b) };
                pair[hi][lo][a * k + b] += c;
            }
        }
    }

    let mut search = Search {
        n,
        k,
        unary: &unary,
        pair: &pair,
        labels: vec![0; n],
        best: None,
    };
    search.descend(0, 0.0);
    let (labels, value) = search.best.expect("at least one labeling");
    Ok(BestLabeling { labels, value })
}

struct Search<'a> {
    n: usize,
    k: usize,
    unary: &'a [Vec<f64>],
    pair: &'a [Vec<Vec<f64>>],
    labels: Vec<usize>,
    best: Option<(Vec<usize>, f64)>,
}

impl Search<'_> {
    fn descend(&mut self, item: usize, partial: f64) {
        if item == self.n {
            if self.best.as_ref().is_none_or(|(_, v)| partial > *v) {
                self.best = Some((self.labels.clone(), partial));
            }
            return;
        }
        for a in 0..self.k {
            let mut gain = self.unary[item][a];
            for prev in 0..item {
                gain += self.pair[item][prev][self.labels[prev] * self.k + a];
            }
            self.labels[item] = a;
            self.descend(item + 1, partial + gain);
        }
    }
}

/// Best payoff over the pseudodistribution relaxation, for `nk ≤ 8`:
/// the inner solver at `η = 10⁴` from the uniform point plus 20 random
/// feasible starts; the best `⟨G, A⟩` found.
pub fn pseudodist_opt_desk(transcript: &Transcript) -> Result<f64> {
    transcript.validate()?;
    let indexing = LabelIndexing::new(transcript.n, transcript.k)?;
    if indexing.dim() > DESK_DIM_CAP {
        return Err(Error::Size {
            what: "nk",
            size: indexing.dim() as u128,
            cap: DESK_DIM_CAP as u128,
        });
    }
    if transcript.is_empty() {
        return Ok(0.0);
    }
    let g = transcript.payoff_embedding()?;
    // Same maximizer as the default solver on F / η, so step and tolerance
    // live on the payoff scale instead of the η-inflated one.
    let defaults = SolverSettings::default();
    let settings = SolverSettings {
        initial_step: defaults.initial_step / DESK_ETA,
        tolerance: defaults.tolerance * DESK_ETA,
        // The objective is nearly linear here, so spectral steps overshoot.
        spectral_steps: false,
        ..defaults
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = f64::NEG_INFINITY;
    for start in 0..=DESK_RESTARTS {
        let warm = if start == 0 {
            PseudoDistribution::uniform(indexing)
        } else {
            sampling::random_feasible(indexing, &mut rng)?
        };
        let solved = solve_inner(&g, DESK_ETA, &warm, &settings)?;
        best = best.max(linalg::frobenius_inner(&g, solved.point.matrix()));
    }
    Ok(best)
}

/// Regret of a learner against the best fixed labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub opt: BestLabeling,
    pub cumulative_payoff: f64,
    pub regret: f64,
    /// `regret / √(nk³T)`.
    pub ratio_nk3: f64,
    /// `regret / √(nkT)`.
    pub ratio_nk: f64,
}

pub fn regret_ratios(regret: f64, n: usize, k: usize, horizon: usize) -> (f64, f64) {
    if horizon == 0 {
        return (0.0, 0.0);
    }
    let (n, k, t) = (n as f64, k as f64, horizon as f64);
    (regret / (n * k.powi(3) * t).sqrt(), regret / (n * k * t).sqrt())
}

pub fn measure_regret(transcript: &Transcript, engine_payoffs: &[f64]) -> Result<RegretReport> {
    if engine_payoffs.len() != transcript.len() {
        return Err(Error::Input(format!(
            "{} payoffs for a transcript of {} rounds",
            engine_payoffs.len(),
            transcript.len()
        )));
    }
    let opt = brute_force_opt(transcript)?;
    let cumulative_payoff: f64 = engine_payoffs.iter().sum();
    let regret = opt.value - cumulative_payoff;
    let (ratio_nk3, ratio_nk) = regret_ratios(regret, transcript.n, transcript.k, transcript.len());
    Ok(RegretReport {
        opt,
        cumulative_payoff,
        regret,
        ratio_nk3,
        ratio_nk,
    })
}

/// Cumulative optimum of every prefix of the transcript, by tracking the
/// payoff of all `kⁿ` labelings. Returns `None` above `cap` labelings.
pub fn prefix_optima(transcript: &Transcript, cap: u128) -> Result<Option<Vec<f64>>> {
    transcript.validate()?;
    let (n, k) = (transcript.n, transcript.k);
    let count = labeling_count(n, k);
    if count > cap {
        return Ok(None);
    }
    let count = count as usize;
    let mut labels_of = vec![0usize; count * n];
    for code in 0..count {
        let mut rest = code;
        for item in (0..n).rev() {
            labels_of[code * n + item] = rest % k;
            rest /= k;
        }
    }
    let mut totals = vec![0.0; count];
    let mut out = Vec::with_capacity(transcript.len());
    for r in &transcript.rounds {
        let (i, j) = (r.query.i, r.query.j);
        let mut best = f64::NEG_INFINITY;
        for (code, total) in totals.iter_mut().enumerate() {
            let labels = &labels_of[code * n..(code + 1) * n];
            *total += r.payoff.get(labels[i], labels[j]);
            best = best.max(*total);
        }
        out.push(best);
    }
    Ok(Some(out))
}
