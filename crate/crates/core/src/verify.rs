//! Randomized trial suites for the supporting inequalities, each reporting
//! its violation count and worst margin.
//!
//! Every trial draws from its own ChaCha stream `(seed, trial)` so suites are
//! reproducible and individual trials can be replayed.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environment::{gambling_payoff, maxcut_payoff, CutOutcome, PayoffMatrix, RoundQuery, Winner};
use crate::error::Result;
use crate::lemmas;
use crate::linalg;
use crate::pseudodist::{
    check_feasibility, project_feasible, DykstraSettings, LabelIndexing, PseudoDistribution,
};
use crate::regularizer;
use crate::sampling;

/// Slack for rounding in the gap-style checks.
pub const ROUNDING_SLACK: f64 = 1e-12;
/// Allowed quadrature error for grid-integrated quantities.
pub const QUADRATURE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LemmaId {
    EntropyConcavity,
    GaussianTvBound,
    LogdetConcavity,
    PayoffModulus,
    RegularizerBounds,
    RegularizerConcavity,
    GaussianMaxEntropy,
    Projection,
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaId::EntropyConcavity => "entropy-concavity",
            LemmaId::GaussianTvBound => "gaussian-tv-bound",
            LemmaId::LogdetConcavity => "logdet-concavity",
            LemmaId::PayoffModulus => "payoff-modulus",
            LemmaId::RegularizerBounds => "regularizer-bounds",
            LemmaId::RegularizerConcavity => "regularizer-concavity",
            LemmaId::GaussianMaxEntropy => "gaussian-max-entropy",
            LemmaId::Projection => "projection",
        })
    }
}

/// Outcome of one randomized suite. A margin is the amount by which a trial
/// satisfied its inequality; negative margins are violations.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaTrialReport {
    pub lemma: LemmaId,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Trial index of the worst margin, for replay.
    pub worst_trial: usize,
    pub parameters: String,
}

impl LemmaTrialReport {
    fn new(lemma: LemmaId, parameters: String) -> Self {
        Self {
            lemma,
            trials: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_trial: 0,
            parameters,
        }
    }

    fn record(&mut self, margin: f64) {
        if margin < 0.0 || margin.is_nan() {
            self.violations += 1;
        }
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_trial = self.trials;
        }
        self.trials += 1;
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for LemmaTrialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} trials {:>6}  violations {:>5}  worst margin {:+.3e} (trial {})  [{}]",
            self.lemma.to_string(),
            self.trials,
            self.violations,
            self.worst_margin,
            self.worst_trial,
            self.parameters
        )
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn random_eps<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(1e-3..(1.0 - 1e-3))
}

/// Entropy strong concavity with constant `constant` over random pairs of
/// distributions on supports of size at most 20.
pub fn entropy_suite(trials: usize, seed: u64, constant: f64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(LemmaId::EntropyConcavity, format!("constant {constant}"));
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let len_p = rng.random_range(1..=20);
        let len_q = if rng.random_bool(0.8) { len_p } else { rng.random_range(1..=20) };
        let sparsity = rng.random_range(0.0..0.7);
        let p = sampling::random_distribution(len_p, sparsity, &mut rng);
        let q = sampling::random_distribution(len_q, sparsity, &mut rng);
        let eps = random_eps(&mut rng);
        let gap = lemmas::entropy_concavity_gap_with(&p, &q, eps, constant)?;
        report.record(gap + ROUNDING_SLACK);
    }
    Ok(report)
}

fn random_covariance_pair<R: Rng + ?Sized>(d: usize, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>) {
    let s1 = sampling::random_spd(d, 0.2, 5.0, rng);
    let s2 = if rng.random_bool(0.5) {
        sampling::random_spd(d, 0.2, 5.0, rng)
    } else {
        // Nearby pair: small symmetric perturbation kept positive definite.
        let mut s2 = s1.clone();
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        let t = rng.random_range(-0.3..0.3);
        s2[(i, j)] += t;
        if i != j {
            s2[(j, i)] += t;
        }
        if linalg::min_eigenvalue(&s2).map_or(true, |m| m < 0.05) {
            s1.clone() * rng.random_range(0.5..2.0)
        } else {
            s2
        }
    };
    (s1, s2)
}

/// Grid resolution used by the TV suite in two dimensions.
pub const TV_SUITE_CELLS_2D: usize = 400;
pub const TV_SUITE_CELLS_1D: usize = 4000;
pub const TV_GRID_WIDTH: f64 = 8.0;

/// Characteristic-function TV bound against grid-integrated TV in one and
/// two dimensions. `inflation` multiplies the bound; 1 is the real check.
pub fn tv_suite(trials: usize, seed: u64, inflation: f64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(
        LemmaId::GaussianTvBound,
        format!("inflation {inflation}, grid ±{TV_GRID_WIDTH}σ"),
    );
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let d = 1 + trial % 2;
        let (s1, s2) = random_covariance_pair(d, &mut rng);
        let (i, j) = if d == 1 {
            (0, 0)
        } else {
            [(0, 1), (0, 0), (1, 1)][rng.random_range(0..3)]
        };
        let bound = lemmas::gaussian_tv_lower_bound(&s1, &s2, i, j)?;
        let cells = if d == 1 { TV_SUITE_CELLS_1D } else { TV_SUITE_CELLS_2D };
        let tv = lemmas::gaussian_tv_by_grid(&s1, &s2, TV_GRID_WIDTH, cells)?;
        report.record(tv + QUADRATURE_SLACK - inflation * bound);
    }
    Ok(report)
}

/// `ln det` strong concavity with constant `c` over random positive definite
/// pairs of dimension at most 6.
pub fn logdet_suite(trials: usize, seed: u64, c: f64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(LemmaId::LogdetConcavity, format!("c {c}"));
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let d = rng.random_range(1..=6);
        let (s1, s2) = random_covariance_pair(d, &mut rng);
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        let eps = random_eps(&mut rng);
        let gap = lemmas::logdet_concavity_gap(&s1, &s2, i, j, eps, c)?;
        report.record(gap + ROUNDING_SLACK);
    }
    Ok(report)
}

fn random_payoff<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<PayoffMatrix> {
    Ok(match rng.random_range(0..3) {
        0 if k == 2 => maxcut_payoff(
            if rng.random_bool(0.5) { CutOutcome::Cut } else { CutOutcome::NotCut },
            k,
        )?,
        1 => gambling_payoff(if rng.random_bool(0.5) { Winner::First } else { Winner::Second }, k),
        _ => PayoffMatrix::new(DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..=1.0)))?,
    })
}

/// One payoff-modulus trial: random feasible pair, query, payoff and weight.
pub fn payoff_modulus_trial(seed: u64, trial: usize, c: f64) -> Result<f64> {
    let mut rng = trial_rng(seed, trial);
    let n = rng.random_range(2..=4);
    let k = rng.random_range(2..=3);
    let indexing = LabelIndexing::new(n, k)?;
    let a = sampling::random_feasible(indexing, &mut rng)?;
    let b = if rng.random_bool(0.2) {
        // Nearby pairs on a segment toward a labeling mixture.
        let other = sampling::random_labeling_mixture(indexing, 2, &mut rng)?;
        a.mix(&other, 1.0 - rng.random_range(0.0..1.0))?
    } else {
        sampling::random_feasible(indexing, &mut rng)?
    };
    let i = rng.random_range(0..n);
    let j = if rng.random_bool(0.9) {
        (i + rng.random_range(1..n)) % n
    } else {
        i
    };
    let payoff = random_payoff(k, &mut rng)?;
    let eps = random_eps(&mut rng);
    regularizer::concavity_modulus_check(&a, &b, RoundQuery { i, j }, &payoff, eps, c)
}

/// Payoff-distance strong concavity of the regularizer with constant `c`.
pub fn payoff_modulus_suite(trials: usize, seed: u64, c: f64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(LemmaId::PayoffModulus, format!("c {c}, n <= 4, k <= 3"));
    for trial in 0..trials {
        let gap = payoff_modulus_trial(seed, trial, c)?;
        report.record(gap + ROUNDING_SLACK);
    }
    Ok(report)
}

/// Halves `c` from `start` until `trials` randomized payoff-modulus trials
/// show no violation. Returns the first passing constant.
pub fn calibrate_payoff_modulus(start: f64, trials: usize, seed: u64) -> Result<f64> {
    let mut c = start;
    loop {
        if payoff_modulus_suite(trials, seed, c)?.passed() {
            return Ok(c);
        }
        c *= 0.5;
    }
}

/// Halves `c` from `start` until the `ln det` suite shows no violation.
pub fn calibrate_logdet(start: f64, trials: usize, seed: u64) -> Result<f64> {
    let mut c = start;
    loop {
        if logdet_suite(trials, seed, c)?.passed() {
            return Ok(c);
        }
        c *= 0.5;
    }
}

/// `0 ≤ R(A) ≤ nk` on random feasible points for every `(n, k)` in
/// `{2..=5} × {2..=4}`; margins in bits.
pub fn regularizer_bounds_suite(per_shape: usize, seed: u64, tol: f64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(
        LemmaId::RegularizerBounds,
        format!("{per_shape} points per (n, k) in 2..=5 x 2..=4, tol {tol:e}"),
    );
    let mut trial = 0;
    for n in 2..=5 {
        for k in 2..=4 {
            let indexing = LabelIndexing::new(n, k)?;
            for _ in 0..per_shape {
                let mut rng = trial_rng(seed, trial);
                trial += 1;
                let a = sampling::random_feasible(indexing, &mut rng)?;
                let r = regularizer::logdet_reg(&a)?.bits();
                let upper = (n * k) as f64;
                report.record(r.min(upper - r) + tol);
            }
        }
    }
    Ok(report)
}

/// Midpoint concavity `R(½A + ½A') ≥ ½R(A) + ½R(A')` on random feasible pairs.
pub fn regularizer_concavity_suite(trials: usize, seed: u64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(LemmaId::RegularizerConcavity, "midpoint, n <= 5, k <= 4".into());
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let indexing = LabelIndexing::new(rng.random_range(1..=5), rng.random_range(2..=4))?;
        let a = sampling::random_feasible(indexing, &mut rng)?;
        let b = sampling::random_feasible(indexing, &mut rng)?;
        let mid = a.mix(&b, 0.5)?;
        let r = |p: &PseudoDistribution| regularizer::logdet_reg(p).map(|v| v.bits());
        report.record(r(&mid)? - 0.5 * r(&a)? - 0.5 * r(&b)? + ROUNDING_SLACK);
    }
    Ok(report)
}

/// Projection optimality against random feasible competitors, idempotence
/// and feasibility, for random symmetric inputs with `nk ≤ 6`.
pub fn projection_suite(
    inputs: usize,
    competitors: usize,
    seed: u64,
    settings: DykstraSettings,
) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(
        LemmaId::Projection,
        format!("{competitors} competitors per input, nk <= 6, dykstra tol {:e}", settings.tol),
    );
    let shapes = [(1, 2), (2, 2), (3, 2), (1, 3), (2, 3), (1, 4), (1, 5), (1, 6)];
    for trial in 0..inputs {
        let mut rng = trial_rng(seed, trial);
        let (n, k) = shapes[trial % shapes.len()];
        let indexing = LabelIndexing::new(n, k)?;
        let m = PseudoDistribution::uniform(indexing).into_matrix()
            + sampling::random_symmetric(indexing.dim(), rng.random_range(0.1..2.0), &mut rng);
        let p = project_feasible(&m, indexing, settings)?;
        let again = project_feasible(p.matrix(), indexing, settings)?;
        let feasible = check_feasibility(p.matrix(), indexing, 10.0 * settings.tol)?.pass;
        let own = linalg::frobenius_distance(&m, p.matrix());
        let mut margin = 1e-7 - linalg::frobenius_distance(p.matrix(), again.matrix());
        if !feasible {
            margin = margin.min(-1.0);
        }
        for c in 0..competitors {
            let x = if c % 2 == 0 {
                sampling::random_labeling_mixture(indexing, 4, &mut rng)?
            } else {
                // Competitors close to the projection probe the optimality
                // condition directly.
                let y = sampling::random_labeling_mixture(indexing, 4, &mut rng)?;
                p.mix(&y, 1.0 - rng.random_range(0.0..0.1))?
            };
            margin = margin.min(linalg::frobenius_distance(&m, x.matrix()) - own + 1e-4);
        }
        report.record(margin);
    }
    Ok(report)
}

/// Gaussian maximum entropy in one and two dimensions: grid-integrated
/// entropy of `N(0, Σ)` against `½ ln det Σ + (d/2) ln(2πe)`, and matched
/// covariance mixtures never above it.
pub fn gaussian_max_entropy_suite(mixtures: usize, seed: u64) -> Result<LemmaTrialReport> {
    let mut report = LemmaTrialReport::new(
        LemmaId::GaussianMaxEntropy,
        format!("d in {{1, 2}}, {mixtures} mixtures, slack {QUADRATURE_SLACK:e}"),
    );
    let cells = |d: usize| if d == 1 { 20_000 } else { 700 };
    let total = 2 * 4 + mixtures;
    for trial in 0..total {
        let mut rng = trial_rng(seed, trial);
        let d = 1 + trial % 2;
        let sigma = sampling::random_spd(d, 0.3, 3.0, &mut rng);
        let closed = lemmas::gaussian_entropy(&sigma)?;
        let half: Vec<f64> = (0..d).map(|a| 12.0 * sigma[(a, a)].sqrt()).collect();
        if trial < 8 {
            let g = lemmas::GaussianDensity::centered(&sigma)?;
            let h = lemmas::differential_entropy_by_grid(&half, cells(d), |x| g.at(x));
            report.record(QUADRATURE_SLACK - (h - closed).abs());
        } else {
            // m = t·Σ^{1/2}u keeps Σ − mmᵀ positive definite for t < 1.
            let eig = linalg::sym_eigen(&sigma)?;
            let root = linalg::spectral_map(&eig, f64::sqrt);
            let u = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let u = if u.norm() > 0.0 { &u / u.norm() } else { DVector::from_element(d, 1.0) };
            let m = root * u * rng.random_range(0.2..0.95);
            let mix = lemmas::matched_covariance_mixture(&sigma, &m, rng.random_range(0.1..0.9))?;
            let h = lemmas::differential_entropy_by_grid(&half, cells(d), |x| mix.at(x));
            report.record(closed + QUADRATURE_SLACK - h);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(entropy_suite(200, 1, lemmas::ENTROPY_CONCAVITY_CONSTANT).unwrap().passed());
        assert!(logdet_suite(200, 1, lemmas::LOGDET_CONCAVITY_CONSTANT).unwrap().passed());
        assert!(payoff_modulus_suite(100, 1, regularizer::PAYOFF_MODULUS_CONSTANT).unwrap().passed());
    }

    #[test]
    fn inflated_constants_fail() {
        assert!(!entropy_suite(200, 1, 10.0).unwrap().passed());
        assert!(!logdet_suite(500, 1, 16.0).unwrap().passed());
        assert!(!payoff_modulus_suite(500, 1, 16.0).unwrap().passed());
    }

    #[test]
    fn report_tracks_worst_trial() {
        let mut r = LemmaTrialReport::new(LemmaId::Projection, String::new());
        for m in [0.5, -0.1, 0.2, -0.3] {
            r.record(m);
        }
        assert_eq!((r.trials, r.violations, r.worst_trial), (4, 2, 3));
        assert_eq!(r.worst_margin, -0.3);
    }
}
