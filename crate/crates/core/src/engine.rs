//! Follow-the-regularized-leader over the pseudodistribution relaxation.
//!
//! Each round the learner plays the block `(i, j)` of
//!
//! ```text
//! A_t = argmax_{A feasible}  η⟨G_t, A⟩ + log₂ det(kA + I)
//! ```
//!
//! where `G_t` is the symmetrized embedding of all payoffs seen so far. The
//! maximization is done by projected gradient ascent with a backtracking
//! line search; projections use Dykstra's algorithm.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environment::{payoff_value, PayoffMatrix, RoundQuery};
use crate::error::{Error, Result};
use crate::linalg;
use crate::pseudodist::{
    check_feasibility, project_feasible_warm, DykstraSettings, LabelIndexing, ProjectionHint,
    PseudoDistribution,
};
use crate::regularizer;

/// `η = √(Mγ/T)` with `M = nk`, `γ = 1/k²`, i.e. `√(n / (kT))`.
pub fn eta_for_horizon(n: usize, k: usize, horizon: usize) -> f64 {
    (n as f64 / (k as f64 * horizon as f64)).sqrt()
}

/// Settings of the inner projected gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_outer: usize,
    /// Stop once the gradient-mapping norm drops below this.
    pub tolerance: f64,
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo parameter of the sufficient-increase test.
    pub sufficient_increase: f64,
    /// Barzilai-Borwein trial steps; otherwise the step grows back by
    /// `1 / shrink` per iteration up to `initial_step`.
    pub spectral_steps: bool,
    pub dykstra: DykstraSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_outer: 500,
            tolerance: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_increase: 1e-4,
            spectral_steps: true,
            dykstra: DykstraSettings::default(),
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerance", self.tolerance),
            ("initial_step", self.initial_step),
            ("dykstra tol", self.dykstra.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Input(format!("shrink {} not in (0, 1)", self.shrink)));
        }
        if !(self.sufficient_increase > 0.0 && self.sufficient_increase < 1.0) {
            return Err(Error::Input("sufficient_increase must be in (0, 1)".into()));
        }
        if self.max_outer == 0 || self.dykstra.max_iters == 0 {
            return Err(Error::Input("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    /// `eta_for_horizon`, with the doubling trick when the horizon is unknown.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub n: usize,
    pub k: usize,
    /// `None` means unknown; automatic `η` then restarts on doubling epochs.
    pub horizon: Option<usize>,
    pub eta: LearningRate,
    pub solver: SolverSettings,
    /// Rounds between full re-solves (1 = every round).
    pub resolve_every: usize,
    pub seed: u64,
}

impl EngineConfig {
    pub fn new(n: usize, k: usize, horizon: usize) -> Self {
        Self {
            n,
            k,
            horizon: Some(horizon),
            eta: LearningRate::Auto,
            solver: SolverSettings::default(),
            resolve_every: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        LabelIndexing::new(self.n, self.k)?;
        if self.horizon == Some(0) {
            return Err(Error::Input("horizon T must be at least 1".into()));
        }
        if let LearningRate::Fixed(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Input(format!("learning rate {eta} must be positive")));
            }
        }
        if self.resolve_every == 0 {
            return Err(Error::Input("resolve cadence must be at least 1".into()));
        }
        self.solver.validate()
    }
}

/// Adds the symmetrized embedding of `payoff` at `query` to `g`:
/// `½c(a, b)` at `((i,a),(j,b))` and at `((j,b),(i,a))`. Afterwards
/// `⟨g, A⟩` grows by exactly the payoff of `A`'s `(i, j)` block for any
/// symmetric `A`.
pub fn accumulate_payoff(
    g: &mut DMatrix<f64>,
    indexing: LabelIndexing,
    query: RoundQuery,
    payoff: &PayoffMatrix,
) {
    let k = indexing.k();
    debug_assert_eq!(payoff.k(), k);
    for a in 0..k {
        for b in 0..k {
            let half = 0.5 * payoff.get(a, b);
            g[(indexing.index(query.i, a), indexing.index(query.j, b))] += half;
            g[(indexing.index(query.j, b), indexing.index(query.i, a))] += half;
        }
    }
}

/// `F(A) = η⟨G, A⟩ + log₂ det(kA + I)`.
pub fn objective(g: &DMatrix<f64>, eta: f64, a: &DMatrix<f64>, k: usize) -> Result<f64> {
    Ok(eta * linalg::frobenius_inner(g, a) + regularizer::logdet_bits(a, k)?)
}

/// Result of one inner maximization.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub point: PseudoDistribution,
    pub objective: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit or the line search stalled above
    /// tolerance.
    pub exact: bool,
    pub gradient_mapping: f64,
}

/// Moves shorter than this multiple of the projection tolerance are
/// indistinguishable from projection error.
const PROJECTION_RESOLUTION: f64 = 10.0;
/// Barzilai-Borwein trial steps are clamped to these multiples of the
/// initial step.
const MIN_TRIAL_STEP: f64 = 1e-4;
const MAX_TRIAL_STEP: f64 = 1e3;

/// Maximizes `η⟨G, A⟩ + R(A)` over the feasible set by projected gradient
/// ascent from `warm_start`. Trial steps after the first are Barzilai-Borwein
/// steps unless disabled, then Armijo backtracking on the projected arc, so the result never
/// has a lower objective than the warm start.
pub fn solve_inner(
    g: &DMatrix<f64>,
    eta: f64,
    warm_start: &PseudoDistribution,
    settings: &SolverSettings,
) -> Result<InnerSolution> {
    let indexing = warm_start.indexing();
    let k = indexing.k();
    let feas_tol = 10.0 * settings.dykstra.tol;

    let mut current = warm_start.matrix().clone();
    let (reg, mut reg_grad) = regularizer::value_and_gradient(&current, k)?;
    let mut value = eta * linalg::frobenius_inner(g, &current) + reg;
    let mut step = settings.initial_step;
    let mut gradient_mapping = f64::INFINITY;
    let mut exact = false;
    let mut iterations = 0;
    let mut hint = None;

    while iterations < settings.max_outer {
        iterations += 1;
        let grad = g * eta + &reg_grad;
        let mut accepted = None;
        while step > 1e-12 {
            let target = &current + &grad * step;
            if let Some(candidate) = project_candidate(&target, indexing, settings, feas_tol, &mut hint)? {
                match regularizer::value_and_gradient(&candidate, k) {
                    Ok((cand_reg, cand_grad)) => {
                        let cand_value = eta * linalg::frobenius_inner(g, &candidate) + cand_reg;
                        let diff = &candidate - &current;
                        let predicted = linalg::frobenius_inner(&grad, &diff);
                        if cand_value >= value + settings.sufficient_increase * predicted
                            && cand_value >= value
                        {
                            accepted = Some((candidate, cand_value, cand_grad, diff.norm()));
                            break;
                        }
                        // Stationary up to rounding: the projection returned the
                        // current point, or moved it by less than it can resolve.
                        if diff.norm() / step <= settings.tolerance
                            || diff.norm() <= PROJECTION_RESOLUTION * settings.dykstra.tol
                        {
                            gradient_mapping = diff.norm() / step;
                            break;
                        }
                    }
                    Err(Error::Domain(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            step *= settings.shrink;
        }

        match accepted {
            Some((candidate, cand_value, cand_grad, moved)) => {
                gradient_mapping = moved / step;
                let dx = &candidate - &current;
                let dg = &cand_grad - &reg_grad;
                current = candidate;
                value = cand_value;
                reg_grad = cand_grad;
                if gradient_mapping <= settings.tolerance {
                    exact = true;
                    break;
                }
                // Barzilai-Borwein trial step; the payoff term is linear, so
                // only the regularizer gradient changes between iterates.
                let curvature = -linalg::frobenius_inner(&dx, &dg);
                step = if settings.spectral_steps && curvature > 0.0 {
                    (dx.norm_squared() / curvature).clamp(
                        MIN_TRIAL_STEP * settings.initial_step,
                        MAX_TRIAL_STEP * settings.initial_step,
                    )
                } else {
                    (step / settings.shrink).min(settings.initial_step)
                };
            }
            None => {
                exact = gradient_mapping <= settings.tolerance;
                break;
            }
        }
    }
    Ok(InnerSolution {
        point: PseudoDistribution::from_matrix_unchecked(current, indexing),
        objective: value,
        iterations,
        exact,
        gradient_mapping,
    })
}

/// Projection that tolerates hitting the iteration cap as long as the last
/// iterate is feasible at `feas_tol`. Successful runs refresh `hint`.
fn project_candidate(
    target: &DMatrix<f64>,
    indexing: LabelIndexing,
    settings: &SolverSettings,
    feas_tol: f64,
    hint: &mut Option<ProjectionHint>,
) -> Result<Option<DMatrix<f64>>> {
    match project_feasible_warm(target, indexing, settings.dykstra, hint.as_ref()) {
        Ok((p, next)) => {
            *hint = Some(next);
            Ok(Some(p.point.into_matrix()))
        }
        Err(Error::Convergence { last, .. }) => {
            let report = check_feasibility(&last, indexing, feas_tol)?;
            Ok(report.pass.then_some(*last))
        }
        Err(e) => Err(e),
    }
}

/// Inverse-CDF draw of a label pair from a row-major `k × k` distribution.
pub fn sample_pair<R: Rng + ?Sized>(dist: &DMatrix<f64>, rng: &mut R) -> (usize, usize) {
    let k = dist.ncols();
    let u: f64 = rng.random::<f64>() * dist.sum();
    let mut cumulative = 0.0;
    let mut last_positive = (0, 0);
    for a in 0..dist.nrows() {
        for b in 0..k {
            let p = dist[(a, b)];
            if p > 0.0 {
                last_positive = (a, b);
                cumulative += p;
                if u < cumulative {
                    return (a, b);
                }
            }
        }
    }
    last_positive
}

/// What happened in one call to [`EngineState::observe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserveOutcome {
    /// Expected payoff of the distribution played this round.
    pub payoff: f64,
    pub resolved: bool,
    pub exact: bool,
    pub iterations: usize,
}

/// The learner's state between rounds.
#[derive(Debug, Clone)]
pub struct EngineState {
    config: EngineConfig,
    indexing: LabelIndexing,
    /// Cumulative payoff embedding of the current epoch.
    g: DMatrix<f64>,
    a: PseudoDistribution,
    t: usize,
    eta: f64,
    epoch_start: usize,
    epoch_len: Option<usize>,
    cumulative_payoff: f64,
    inexact_solves: usize,
    total_iterations: usize,
}

impl EngineState {
    /// A fresh engine, playing the uniform pseudodistribution.
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let indexing = LabelIndexing::new(config.n, config.k)?;
        let (eta, epoch_len) = match (config.eta, config.horizon) {
            (LearningRate::Fixed(eta), _) => (eta, None),
            (LearningRate::Auto, Some(horizon)) => (eta_for_horizon(config.n, config.k, horizon), None),
            (LearningRate::Auto, None) => (eta_for_horizon(config.n, config.k, 1), Some(1)),
        };
        let d = indexing.dim();
        Ok(Self {
            indexing,
            g: DMatrix::zeros(d, d),
            a: PseudoDistribution::uniform(indexing),
            t: 0,
            eta,
            epoch_start: 0,
            epoch_len,
            cumulative_payoff: 0.0,
            inexact_solves: 0,
            total_iterations: 0,
            config,
        })
    }

    /// Rebuilds an engine from a checkpoint. `g` is the cumulative payoff
    /// embedding of the epoch that contains round `t`.
    pub fn restore(config: EngineConfig, t: usize, g: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        let mut state = Self::new(config)?;
        let d = state.indexing.dim();
        for m in [&g, &a] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension {
                    expected: d,
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
        }
        let report = check_feasibility(&a, state.indexing, 10.0 * state.config.solver.dykstra.tol)?;
        if !report.pass {
            return Err(Error::State(format!("checkpointed solution is infeasible: {report}")));
        }
        while let Some(len) = state.epoch_len {
            if state.epoch_start + len > t {
                break;
            }
            state.epoch_start += len;
            state.epoch_len = Some(2 * len);
            state.eta = eta_for_horizon(state.config.n, state.config.k, 2 * len);
        }
        state.t = t;
        state.g = g;
        state.a = PseudoDistribution::from_matrix_unchecked(a, state.indexing);
        Ok(state)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn indexing(&self) -> LabelIndexing {
        self.indexing
    }

    /// Rounds observed so far.
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn solution(&self) -> &PseudoDistribution {
        &self.a
    }

    pub fn payoff_embedding(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn cumulative_payoff(&self) -> f64 {
        self.cumulative_payoff
    }

    pub fn inexact_solves(&self) -> usize {
        self.inexact_solves
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iterations
    }

    /// The distribution over label pairs played for `query`, computed from
    /// rounds before the current one.
    pub fn predict(&self, query: RoundQuery) -> Result<DMatrix<f64>> {
        self.a.block(query.i, query.j)
    }

    /// Draws the pair actually played in the current round. The generator
    /// is seeded from `(seed, round)` so draws are reproducible and resumable.
    pub fn sample(&self, dist: &DMatrix<f64>) -> (usize, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(self.t as u64);
        sample_pair(dist, &mut rng)
    }

    /// Accrues this round's expected payoff, folds `payoff` into the
    /// accumulated embedding and re-solves for the next round.
    pub fn observe(&mut self, query: RoundQuery, payoff: &PayoffMatrix) -> Result<ObserveOutcome> {
        if payoff.k() != self.indexing.k() {
            return Err(Error::Input(format!(
                "payoff is {0}x{0}, engine has k = {1}",
                payoff.k(),
                self.indexing.k()
            )));
        }
        if query.i >= self.indexing.n() || query.j >= self.indexing.n() {
            return Err(Error::Index {
                index: query.i.max(query.j),
                n: self.indexing.n(),
            });
        }
        let played = self.predict(query)?;
        let realized = payoff_value(&played, payoff)?;
        self.cumulative_payoff += realized;
        accumulate_payoff(&mut self.g, self.indexing, query, payoff);
        self.t += 1;

        if let Some(len) = self.epoch_len {
            if self.t == self.epoch_start + len {
                self.epoch_start = self.t;
                self.epoch_len = Some(2 * len);
                self.eta = eta_for_horizon(self.config.n, self.config.k, 2 * len);
                self.g.fill(0.0);
                self.a = PseudoDistribution::uniform(self.indexing);
                return Ok(ObserveOutcome {
                    payoff: realized,
                    resolved: false,
                    exact: true,
                    iterations: 0,
                });
            }
        }

        if !self.t.is_multiple_of(self.config.resolve_every) {
            return Ok(ObserveOutcome {
                payoff: realized,
                resolved: false,
                exact: true,
                iterations: 0,
            });
        }
        let solution = solve_inner(&self.g, self.eta, &self.a, &self.config.solver)?;
        self.total_iterations += solution.iterations;
        if !solution.exact {
            self.inexact_solves += 1;
        }
        self.a = solution.point;
        Ok(ObserveOutcome {
            payoff: realized,
            resolved: true,
            exact: solution.exact,
            iterations: solution.iterations,
        })
    }
}
