//! Payoff functions, adversaries and the pairing reduction for `r`-local
//! payoffs.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Slack allowed when validating probability matrices.
const DIST_TOL: f64 = 1e-9;

/// Nature's payoff for one round: a `k × k` matrix with entries in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    entries: DMatrix<f64>,
}

impl PayoffMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Input(format!(
                "payoff matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!("payoff entry {bad} outside [-1, 1]")));
        }
        Ok(Self { entries })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            entries: DMatrix::zeros(k, k),
        }
    }

    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[(a, b)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn negated(&self) -> Self {
        Self {
            entries: -&self.entries,
        }
    }
}

/// The pair of items presented in a round. `i == j` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoundQuery {
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOutcome {
    Cut,
    NotCut,
}

impl CutOutcome {
    pub fn flipped(self) -> Self {
        match self {
            CutOutcome::Cut => CutOutcome::NotCut,
            CutOutcome::NotCut => CutOutcome::Cut,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
}

impl Winner {
    pub fn flipped(self) -> Self {
        match self {
            Winner::First => Winner::Second,
            Winner::Second => Winner::First,
        }
    }
}

/// Max-cut payoff: `+1` when the labels agree with nature's answer, `−1`
/// otherwise. Only defined for two labels.
pub fn maxcut_payoff(outcome: CutOutcome, k: usize) -> Result<PayoffMatrix> {
    if k != 2 {
        return Err(Error::Input(format!("max-cut needs k = 2, got k = {k}")));
    }
    let cut = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    let entries = match outcome {
        CutOutcome::Cut => cut,
        CutOutcome::NotCut => -cut,
    };
    Ok(PayoffMatrix { entries })
}

/// Gambling payoff over rank labels `0..k`: with `winner = First`,
/// `c(a, b) = sign(a − b)`; with `winner = Second`, `c(a, b) = sign(b − a)`.
pub fn gambling_payoff(winner: Winner, k: usize) -> PayoffMatrix {
    let sign = |x: f64, y: f64| match x.partial_cmp(&y) {
        Some(std::cmp::Ordering::Greater) => 1.0,
        Some(std::cmp::Ordering::Less) => -1.0,
        _ => 0.0,
    };
    let entries = DMatrix::from_fn(k, k, |a, b| match winner {
        Winner::First => sign(a as f64, b as f64),
        Winner::Second => sign(b as f64, a as f64),
    });
    PayoffMatrix { entries }
}

/// Expected payoff `Σ c(a, b)·p(a, b)` of a pair distribution.
pub fn payoff_value(dist: &DMatrix<f64>, payoff: &PayoffMatrix) -> Result<f64> {
    let k = payoff.k();
    if dist.nrows() != k || dist.ncols() != k {
        return Err(Error::Input(format!(
            "distribution is {}x{}, payoff is {k}x{k}",
            dist.nrows(),
            dist.ncols()
        )));
    }
    if let Some(bad) = dist.iter().find(|&&p| !(p >= -DIST_TOL) || !p.is_finite()) {
        return Err(Error::Input(format!("probability {bad} is negative or non-finite")));
    }
    let total = dist.sum();
    if (total - 1.0).abs() > DIST_TOL {
        return Err(Error::Input(format!("probabilities sum to {total}, not 1")));
    }
    Ok(dist.iter().zip(payoff.entries.iter()).map(|(p, c)| p * c).sum())
}

/// Which example problem the payoffs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    MaxCut,
    Gambling,
    /// Payoff matrices supplied directly (e.g. by the pairing reduction).
    Generic,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::MaxCut => "maxcut",
            Problem::Gambling => "gambling",
            Problem::Generic => "generic",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxcut" | "max-cut" => Ok(Problem::MaxCut),
            "gambling" => Ok(Problem::Gambling),
            "generic" => Ok(Problem::Generic),
            other => Err(Error::Input(format!("unknown problem '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    RandomEdge,
    PlantedLabeling,
    Scripted,
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryKind::RandomEdge => "random",
            AdversaryKind::PlantedLabeling => "planted",
            AdversaryKind::Scripted => "scripted",
        })
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random-edge" => Ok(AdversaryKind::RandomEdge),
            "planted" | "planted-labeling" => Ok(AdversaryKind::PlantedLabeling),
            "scripted" => Ok(AdversaryKind::Scripted),
            other => Err(Error::Input(format!("unknown adversary '{other}'"))),
        }
    }
}

/// One round of a scripted adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedRound {
    pub query: RoundQuery,
    pub payoff: PayoffMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    pub problem: Problem,
    pub n: usize,
    pub k: usize,
    pub horizon: usize,
    pub noise: f64,
    pub seed: u64,
    pub planted: Option<Vec<usize>>,
    pub script: Vec<ScriptedRound>,
}

impl AdversarySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::Input("n and k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Input(format!("noise rate {} not in [0, 1]", self.noise)));
        }
        if self.problem == Problem::MaxCut && self.k != 2 {
            return Err(Error::Input(format!("max-cut needs k = 2, got k = {}", self.k)));
        }
        if self.kind != AdversaryKind::Scripted {
            if self.problem == Problem::Generic {
                return Err(Error::Input("generic payoffs need a scripted adversary".into()));
            }
            if self.n < 2 {
                return Err(Error::Input("random queries need at least two items".into()));
            }
        }
        if let Some(labels) = &self.planted {
            if labels.len() != self.n {
                return Err(Error::Input(format!(
                    "planted labeling has length {}, expected {}",
                    labels.len(),
                    self.n
                )));
            }
            if let Some(bad) = labels.iter().find(|&&l| l >= self.k) {
                return Err(Error::Input(format!("planted label {bad} outside 0..{}", self.k)));
            }
        }
        for (t, round) in self.script.iter().enumerate() {
            if round.query.i >= self.n || round.query.j >= self.n {
                return Err(Error::Input(format!("scripted round {t} queries an item >= n")));
            }
            if round.payoff.k() != self.k {
                return Err(Error::Input(format!("scripted round {t} has a payoff of the wrong size")));
            }
        }
        Ok(())
    }
}

/// A payoff withheld until the learner has committed to its prediction.
#[derive(Debug)]
#[must_use]
pub struct DeferredPayoff(PayoffMatrix);

impl DeferredPayoff {
    pub fn reveal(self) -> PayoffMatrix {
        self.0
    }
}

/// An oblivious adversary: every round is a pure function of its [`AdversarySpec`] and
/// the round index.
#[derive(Debug, Clone)]
pub struct Adversary {
    spec: AdversarySpec,
    planted: Option<Vec<usize>>,
}

const PLANTED_STREAM: u64 = u64::MAX;

impl Adversary {
    pub fn new(spec: AdversarySpec) -> Result<Self> {
        spec.validate()?;
        let planted = match (&spec.kind, &spec.planted) {
            (AdversaryKind::PlantedLabeling, Some(labels)) => Some(labels.clone()),
            (AdversaryKind::PlantedLabeling, None) => {
                let mut rng = round_rng(spec.seed, PLANTED_STREAM);
                Some((0..spec.n).map(|_| rng.random_range(0..spec.k)).collect())
            }
            _ => None,
        };
        Ok(Self { spec, planted })
    }

    pub fn spec(&self) -> &AdversarySpec {
        &self.spec
    }

    /// The hidden labeling of a planted adversary.
    pub fn planted_labeling(&self) -> Option<&[usize]> {
        self.planted.as_deref()
    }

    pub fn generate_round(&self, t: usize) -> Result<(RoundQuery, DeferredPayoff)> {
        let spec = &self.spec;
        if spec.kind == AdversaryKind::Scripted {
            let round = spec.script.get(t).ok_or_else(|| {
                Error::Input(format!(
                    "scripted adversary has {} rounds, round {t} requested",
                    spec.script.len()
                ))
            })?;
            return Ok((round.query, DeferredPayoff(round.payoff.clone())));
        }
        if t >= spec.horizon {
            return Err(Error::Input(format!("round {t} is past the horizon {}", spec.horizon)));
        }

        let mut rng = round_rng(spec.seed, t as u64);
        let i = rng.random_range(0..spec.n);
        let mut j = rng.random_range(0..spec.n - 1);
        if j >= i {
            j += 1;
        }
        let query = RoundQuery { i, j };
        let flip = rng.random_bool(spec.noise);
        let coin = rng.random_bool(0.5);

        let payoff = match (spec.problem, &self.planted) {
            (Problem::MaxCut, None) => {
                maxcut_payoff(if coin { CutOutcome::Cut } else { CutOutcome::NotCut }, spec.k)?
            }
            (Problem::MaxCut, Some(labels)) => {
                let truth = if labels[i] != labels[j] {
                    CutOutcome::Cut
                } else {
                    CutOutcome::NotCut
                };
                maxcut_payoff(if flip { truth.flipped() } else { truth }, spec.k)?
            }
            (Problem::Gambling, None) => {
                gambling_payoff(if coin { Winner::First } else { Winner::Second }, spec.k)
            }
            (Problem::Gambling, Some(labels)) => {
                let truth = match labels[i].cmp(&labels[j]) {
                    std::cmp::Ordering::Greater => Winner::First,
                    std::cmp::Ordering::Less => Winner::Second,
                    std::cmp::Ordering::Equal if coin => Winner::First,
                    std::cmp::Ordering::Equal => Winner::Second,
                };
                gambling_payoff(if flip { truth.flipped() } else { truth }, spec.k)
            }
            (Problem::Generic, _) => unreachable!("rejected by validate"),
        };
        Ok((query, DeferredPayoff(payoff)))
    }
}

fn round_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parses one outcome word for `problem` into a payoff matrix.
pub fn parse_outcome(word: &str, problem: Problem, k: usize) -> Result<PayoffMatrix> {
    match (problem, word) {
        (Problem::MaxCut, "cut") => maxcut_payoff(CutOutcome::Cut, k),
        (Problem::MaxCut, "not-cut" | "notcut") => maxcut_payoff(CutOutcome::NotCut, k),
        (Problem::Gambling, "first") => Ok(gambling_payoff(Winner::First, k)),
        (Problem::Gambling, "second") => Ok(gambling_payoff(Winner::Second, k)),
        (Problem::Generic, _) => Err(Error::Input(
            "generic payoffs have no textual outcome form".into(),
        )),
        (_, other) => Err(Error::Input(format!("unknown {problem} outcome '{other}'"))),
    }
}

/// Inverse of [`parse_outcome`] for payoffs produced by the example problems.
pub fn outcome_word(payoff: &PayoffMatrix, problem: Problem) -> Option<&'static str> {
    let k = payoff.k();
    match problem {
        Problem::MaxCut => [("cut", CutOutcome::Cut), ("not-cut", CutOutcome::NotCut)]
            .into_iter()
            .find(|(_, o)| maxcut_payoff(*o, k).ok().as_ref() == Some(payoff))
            .map(|(w, _)| w),
        Problem::Gambling => [("first", Winner::First), ("second", Winner::Second)]
            .into_iter()
            .find(|(_, w)| &gambling_payoff(*w, k) == payoff)
            .map(|(w, _)| w),
        Problem::Generic => None,
    }
}

/// Parses the scripted-round text format: one round per line,
/// `i j outcome`, whitespace separated, 0-indexed items. Blank lines and
/// lines starting with `#` are skipped. `first_line` is the file line number
/// of `text`'s first line, for error messages.
pub fn parse_script(
    text: &str,
    problem: Problem,
    n: usize,
    k: usize,
    first_line: usize,
) -> Result<Vec<ScriptedRound>> {
    let mut rounds = Vec::new();
    for (offset, raw) in text.lines().enumerate() {
        let line_no = first_line + offset;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 'i j outcome', found {} fields", fields.len()),
            ));
        }
        let item = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| Error::parse(line_no, format!("'{s}' is not an item index")))?;
            if v >= n {
                return Err(Error::parse(line_no, format!("item {v} out of range (n = {n})")));
            }
            Ok(v)
        };
        let query = RoundQuery {
            i: item(fields[0])?,
            j: item(fields[1])?,
        };
        let payoff = parse_outcome(fields[2], problem, k)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        rounds.push(ScriptedRound { query, payoff });
    }
    Ok(rounds)
}

/// Writes rounds in the scripted format. Fails on generic payoffs.
pub fn format_script(rounds: &[ScriptedRound], problem: Problem) -> Result<String> {
    let mut out = String::new();
    for (t, r) in rounds.iter().enumerate() {
        let word = outcome_word(&r.payoff, problem).ok_or_else(|| {
            Error::Input(format!("round {t} payoff has no {problem} outcome form"))
        })?;
        out.push_str(&format!("{} {} {}\n", r.query.i, r.query.j, word));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pairing reduction for r-local payoffs
// ---------------------------------------------------------------------------

/// One round of an `r`-local problem: a tuple of items and a payoff over
/// label tuples, stored row-major (`payoff[Σ ℓ_m k^(r−1−m)]`).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRound {
    pub items: Vec<usize>,
    pub payoff: Vec<f64>,
}

impl LocalRound {
    /// Payoff of the tuple under a full labeling of the items.
    pub fn evaluate(&self, labels: &[usize], k: usize) -> f64 {
        let idx = self.items.iter().fold(0, |acc, &it| acc * k + labels[it]);
        self.payoff[idx]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpec {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub rounds: Vec<LocalRound>,
}

/// A 2-local scripted problem over super-items, each super-item a pair of
/// original items `(2s, 2s + 1)` labeled by `k²` super-labels.
#[derive(Debug, Clone)]
pub struct PairReduction {
    pub spec: AdversarySpec,
    pub base_n: usize,
    pub base_k: usize,
    /// Items per super-item, `⌈r/2⌉`.
    pub group: usize,
}

impl PairReduction {
    /// Original-item labels from super-item labels (dummy padding dropped).
    pub fn decode(&self, super_labels: &[usize]) -> Vec<usize> {
        let mut labels = Vec::with_capacity(super_labels.len() * self.group);
        for &sl in super_labels {
            labels.extend(self.decode_one(sl));
        }
        labels.truncate(self.base_n);
        labels
    }

    /// Super-item labels from original-item labels. Padding items get label 0.
    pub fn encode(&self, labels: &[usize]) -> Vec<usize> {
        (0..self.spec.n)
            .map(|s| {
                (0..self.group).fold(0, |acc, m| {
                    let item = s * self.group + m;
                    acc * self.base_k + labels.get(item).copied().unwrap_or(0)
                })
            })
            .collect()
    }

    fn decode_one(&self, super_label: usize) -> Vec<usize> {
        let mut out = vec![0; self.group];
        let mut rest = super_label;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.base_k;
            rest /= self.base_k;
        }
        out
    }
}

/// Reduces an `r`-local problem (`r ∈ {3, 4}`) to a 2-local one by grouping
/// consecutive items into super-items of `⌈r/2⌉ = 2` items. Each tuple must
/// touch at most two super-items, which always holds for `n ≤ 4`.
pub fn pair_reduction(r: usize, base: &LocalSpec) -> Result<PairReduction> {
    if r > 4 {
        return Err(Error::Unsupported(format!("pairing reduction for r = {r} > 4")));
    }
    if r < 3 {
        return Err(Error::Input(format!("pairing reduction needs r in {{3, 4}}, got {r}")));
    }
    if base.r != r {
        return Err(Error::Input(format!("spec is {}-local, reduction asked for r = {r}", base.r)));
    }
    let (n, k) = (base.n, base.k);
    let group = r.div_ceil(2);
    let super_n = n.div_ceil(group);
    let super_k = k.pow(group as u32);
    let tuple_size = k.pow(r as u32);

    let mut reduction = PairReduction {
        spec: AdversarySpec {
            kind: AdversaryKind::Scripted,
            problem: Problem::Generic,
            n: super_n,
            k: super_k,
            horizon: base.rounds.len(),
            noise: 0.0,
            seed: 0,
            planted: None,
            script: Vec::with_capacity(base.rounds.len()),
        },
        base_n: n,
        base_k: k,
        group,
    };

    for (t, round) in base.rounds.iter().enumerate() {
        if round.items.len() != r || round.payoff.len() != tuple_size {
            return Err(Error::Input(format!("round {t} is not a well-formed {r}-local round")));
        }
        if let Some(&bad) = round.items.iter().find(|&&it| it >= n) {
            return Err(Error::Input(format!("round {t} references item {bad} >= n = {n}")));
        }
        let mut supers: Vec<usize> = round.items.iter().map(|&it| it / group).collect();
        supers.sort_unstable();
        supers.dedup();
        let (s, s2) = match supers.as_slice() {
            [s] => (*s, *s),
            [s, s2] => (*s, *s2),
            _ => {
                return Err(Error::Unsupported(format!(
                    "round {t} spans {} super-items; pairing handles at most two",
                    supers.len()
                )))
            }
        };
        let entries = DMatrix::from_fn(super_k, super_k, |la, lb| {
            let mut labels = vec![0; super_n * group];
            let la_items = reduction.decode_one(la);
            let lb_items = reduction.decode_one(lb);
            for m in 0..group {
                labels[s2 * group + m] = lb_items[m];
                labels[s * group + m] = la_items[m];
            }
            round.evaluate(&labels, k)
        });
        reduction.spec.script.push(ScriptedRound {
            query: RoundQuery { i: s, j: s2 },
            payoff: PayoffMatrix::new(entries)?,
        });
    }
    reduction.spec.validate()?;
    Ok(reduction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxcut_entries() {
        let cut = maxcut_payoff(CutOutcome::Cut, 2).unwrap();
        let not_cut = maxcut_payoff(CutOutcome::NotCut, 2).unwrap();
        assert_eq!(cut.get(0, 1), 1.0);
        assert_eq!(not_cut.get(0, 0), 1.0);
        assert_eq!(cut.get(0, 0), -1.0);
        assert_eq!(cut, not_cut.negated());
        assert!(maxcut_payoff(CutOutcome::Cut, 3).is_err());
    }

    #[test]
    fn gambling_entries() {
        let first = gambling_payoff(Winner::First, 4);
        let second = gambling_payoff(Winner::Second, 4);
        assert_eq!(first.get(3, 1), 1.0);
        assert_eq!(first.get(2, 2), 0.0);
        assert_eq!(second.get(1, 3), 1.0);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(first.get(a, b), second.get(b, a));
            }
        }
    }

    #[test]
    fn payoff_value_cases() {
        let cut = maxcut_payoff(CutOutcome::Cut, 2).unwrap();
        assert_eq!(payoff_value(&DMatrix::from_element(2, 2, 0.25), &cut).unwrap(), 0.0);
        let point = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(payoff_value(&point, &cut).unwrap(), 1.0);
        let p = DMatrix::from_row_slice(2, 2, &[0.1, 0.4, 0.3, 0.2]);
        assert!((payoff_value(&p, &cut).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn payoff_value_rejects_invalid_distribution() {
        let cut = maxcut_payoff(CutOutcome::Cut, 2).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.0]);
        assert!(payoff_value(&bad, &cut).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, 0.0, 0.0]);
        assert!(payoff_value(&neg, &cut).is_err());
    }

    #[test]
    fn payoff_matrix_range_checked() {
        assert!(PayoffMatrix::new(DMatrix::from_element(2, 2, 1.5)).is_err());
        assert!(PayoffMatrix::new(DMatrix::from_element(2, 3, 0.0)).is_err());
    }

    fn planted_spec(noise: f64) -> AdversarySpec {
        AdversarySpec {
            kind: AdversaryKind::PlantedLabeling,
            problem: Problem::MaxCut,
            n: 3,
            k: 2,
            horizon: 50,
            noise,
            seed: 11,
            planted: Some(vec![0, 1, 0]),
            script: vec![],
        }
    }

    #[test]
    fn planted_outcomes_follow_labeling() {
        for (noise, expect_cut_on_01) in [(0.0, true), (1.0, false)] {
            let adv = Adversary::new(planted_spec(noise)).unwrap();
            let mut saw = false;
            for t in 0..50 {
                let (q, deferred) = adv.generate_round(t).unwrap();
                let payoff = deferred.reveal();
                if (q.i, q.j) == (0, 1) || (q.i, q.j) == (1, 0) {
                    let is_cut = payoff == maxcut_payoff(CutOutcome::Cut, 2).unwrap();
                    assert_eq!(is_cut, expect_cut_on_01);
                    saw = true;
                }
            }
            assert!(saw);
        }
    }

    #[test]
    fn random_edge_is_reproducible() {
        let spec = AdversarySpec {
            kind: AdversaryKind::RandomEdge,
            noise: 0.0,
            planted: None,
            ..planted_spec(0.0)
        };
        let first = Adversary::new(spec.clone()).unwrap();
        let second = Adversary::new(spec).unwrap();
        for t in 0..5 {
            let (q1, p1) = first.generate_round(t).unwrap();
            let (q2, p2) = second.generate_round(t).unwrap();
            assert_eq!(q1, q2);
            assert_ne!(q1.i, q1.j);
            assert_eq!(p1.reveal(), p2.reveal());
        }
    }

    #[test]
    fn horizon_and_script_exhaustion() {
        let adv = Adversary::new(planted_spec(0.0)).unwrap();
        assert!(adv.generate_round(50).is_err());
        let scripted = AdversarySpec {
            kind: AdversaryKind::Scripted,
            script: vec![ScriptedRound {
                query: RoundQuery { i: 0, j: 2 },
                payoff: maxcut_payoff(CutOutcome::Cut, 2).unwrap(),
            }],
            planted: None,
            ..planted_spec(0.0)
        };
        let adv = Adversary::new(scripted).unwrap();
        assert_eq!(adv.generate_round(0).unwrap().0, RoundQuery { i: 0, j: 2 });
        assert!(matches!(adv.generate_round(1), Err(Error::Input(_))));
    }

    #[test]
    fn spec_validation() {
        let mut spec = planted_spec(1.5);
        assert!(spec.validate().is_err());
        spec.noise = 0.1;
        spec.planted = Some(vec![0, 1]);
        assert!(spec.validate().is_err());
        spec.planted = Some(vec![0, 1, 2]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn script_format_parses_and_reports_lines() {
        let text = "0 1 cut\n\n# comment\n1 2 not-cut\n";
        let rounds = parse_script(text, Problem::MaxCut, 3, 2, 1).unwrap();
        assert_eq!(rounds.len(), 2);
        assert_eq!(rounds[1].query, RoundQuery { i: 1, j: 2 });
        assert_eq!(format_script(&rounds, Problem::MaxCut).unwrap(), "0 1 cut\n1 2 not-cut\n");

        let err = parse_script("0 1 cut\n0 1 cut\n0 9 cut\n", Problem::MaxCut, 3, 2, 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_script("0 1 sideways\n", Problem::MaxCut, 3, 2, 5).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }));

        let g = parse_script("0 1 first\n1 0 second\n", Problem::Gambling, 2, 3, 1).unwrap();
        assert_eq!(g[0].payoff, gambling_payoff(Winner::First, 3));
    }

    fn triple_cut(items: [usize; 3]) -> LocalRound {
        // Pays +1 when items[0] and items[2] get different labels.
        let mut payoff = vec![0.0; 8];
        for (idx, slot) in payoff.iter_mut().enumerate() {
            let (a, c) = (idx >> 2, idx & 1);
            *slot = if a != c { 1.0 } else { -1.0 };
        }
        LocalRound {
            items: items.to_vec(),
            payoff,
        }
    }

    #[test]
    fn reduction_shapes() {
        let base = LocalSpec {
            n: 4,
            k: 2,
            r: 3,
            rounds: vec![triple_cut([0, 1, 2])],
        };
        let red = pair_reduction(3, &base).unwrap();
        assert_eq!((red.spec.n, red.spec.k), (2, 4));
        let base4 = LocalSpec {
            n: 4,
            k: 2,
            r: 4,
            rounds: vec![],
        };
        let red4 = pair_reduction(4, &base4).unwrap();
        assert_eq!((red4.spec.n, red4.spec.k), (2, 4));
        assert!(matches!(pair_reduction(5, &base), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reduction_matches_direct_two_local_encoding() {
        let base = LocalSpec {
            n: 4,
            k: 2,
            r: 3,
            rounds: vec![triple_cut([0, 1, 2]), triple_cut([3, 0, 1])],
        };
        let red = pair_reduction(3, &base).unwrap();
        for labels_code in 0..16usize {
            let labels: Vec<usize> = (0..4).map(|b| (labels_code >> (3 - b)) & 1).collect();
            let supers = red.encode(&labels);
            assert_eq!(red.decode(&supers), labels);
            for (round, scripted) in base.rounds.iter().zip(&red.spec.script) {
                let direct_two_local = if labels[round.items[0]] != labels[round.items[2]] {
                    1.0
                } else {
                    -1.0
                };
                let q = scripted.query;
                assert_eq!(scripted.payoff.get(supers[q.i], supers[q.j]), direct_two_local);
                assert_eq!(round.evaluate(&labels, 2), direct_two_local);
            }
        }
    }

    #[test]
    fn reduction_pads_odd_item_count() {
        let base = LocalSpec {
            n: 3,
            k: 2,
            r: 3,
            rounds: vec![triple_cut([0, 1, 2])],
        };
        let red = pair_reduction(3, &base).unwrap();
        assert_eq!(red.spec.n, 2);
        assert_eq!(red.decode(&[3, 2]), vec![1, 1, 1]);
    }

    #[test]
    fn reduction_rejects_tuples_over_three_super_items() {
        let base = LocalSpec {
            n: 6,
            k: 2,
            r: 3,
            rounds: vec![triple_cut([0, 2, 4])],
        };
        assert!(matches!(pair_reduction(3, &base), Err(Error::Unsupported(_))));
    }
}
