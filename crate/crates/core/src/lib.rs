//! Online 2-local prediction by follow-the-regularized-leader over the
//! semidefinite relaxation of labelings, regularized by `log₂ det(kA + I)`.
//!
//! Modules, bottom-up:
//!
//! * [`pseudodist`]: the feasible set, feasibility reports and projection.
//! * [`regularizer`]: the log-det regularizer, its gradient and bounds.
//! * [`environment`]: payoff functions, adversaries, the pairing reduction.
//! * [`engine`]: the FTRL learner and its inner concave maximization.
//! * [`oracles`]: brute-force comparators and regret measurement.
//! * [`lemmas`]: numerical checks of the supporting inequalities.
//! * [`formats`]: transcript and checkpoint text formats.

pub mod engine;
pub mod environment;
pub mod error;
pub mod formats;
pub mod lemmas;
pub mod linalg;
pub mod oracles;
pub mod pseudodist;
pub mod regularizer;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
