//! Regular stationary solutions of a self-consistent Schrödinger–Poisson
//! model of the hydrogen atom, by shooting and by Laguerre-mode variation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod integrator;
pub mod magnetic;
pub mod model;
pub mod observables;
pub mod record;
pub mod report;
pub mod shooting;
pub mod variational;

pub use error::{Result, SolverError};
pub use model::{AnsatzKind, RadialGrid, RadialProfile, Sign, StepControl, Variant};
pub use record::SolutionRecord;
pub use shooting::ShootingProblem;

/// Shooting solve followed by the magnetic potential.
pub fn solve(problem: &ShootingProblem) -> Result<SolutionRecord> {
    let mut record = shooting::solve_delta(problem)?;
    magnetic::attach(&mut record)?;
    Ok(record)
}
