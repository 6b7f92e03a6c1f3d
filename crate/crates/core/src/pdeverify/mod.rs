//! Finite-difference check of branch predictions.
//!
//! Solutions are computed in the rescaled variable `v = ε^{−1/(p−1)}u`, which solves
//! `−Δv = ε|v|^{p−1}v + λv` with `ε = λⱼ − λ`, so amplitudes stay of order one as `ε → 0`.
//! On the grid the bifurcation point is the discrete eigenvalue `λⱼʰ` of the group.

mod continuation;
mod grid;
mod minres;
mod morse;
mod solve;

pub use continuation::{
    continuation_run, diagram_data, discrete_critical_point, fit_order, geometric_schedule, BranchVerdict,
    StepFailure, VerificationReport, VerifyConfig,
};
pub use grid::{build_laplacian, min_interior, DiscreteProblem};
pub use minres::{minres, MinresOutcome};
pub use morse::{discrete_morse_index, MorseResult, MorseSettings};
pub use solve::{critical_exponent, solve_branch, ContinuationRecord, NewtonSettings};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("exponent p = {p} is not subcritical (critical exponent {critical})")]
    SupercriticalP { p: f64, critical: f64 },
    #[error("Newton diverged after {} steps, last residual {:e}", .history.len() - 1, .history.last().copied().unwrap_or(f64::NAN))]
    NewtonDiverged { history: Vec<f64> },
    #[error("solve seeded from pair {expected} converged near pair {found}")]
    ConvergedToWrongBranch { expected: usize, found: usize },
    #[error("linearized eigenvalue {mu:e} too close to zero to count")]
    SpectrumTooClose { mu: f64 },
    #[error("eigenvalue iteration did not converge in {iterations} steps")]
    EigenNotConverged { iterations: usize },
    #[error("discrete reduced problem: {0}")]
    Reduced(String),
    #[error("bad epsilon schedule: {0}")]
    BadSchedule(String),
}
