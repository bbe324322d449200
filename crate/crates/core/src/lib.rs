//! Recovery of sparse and union-of-subspaces signals from *nonlinear*
//! measurements, plus projected gradient descent for general objectives
//! under the same non-convex constraints.
//!
//! The crate is organised around five pieces:
//!
//! - [`constraints`] — exact projections onto k-sparse, block-sparse and
//!   union-of-subspaces sets.
//! - [`operators`] — measurement models `y = Φ̄(x + h(x)) + e` with analytic
//!   Jacobian actions and finite-difference verification.
//! - [`solvers`] — the linearised iterative hard thresholding solver and a
//!   projected gradient (Landweber-style) solver, with admissible step-size
//!   windows.
//! - [`analysis`] — Monte-Carlo estimators for restricted-isometry and
//!   restricted-convexity constants, linearisation constants, and the
//!   convergence-bound calculators built from them.
//! - [`harness`] — seeded problem generation, a brute-force support-
//!   enumeration oracle, and deterministic parameter sweeps with CSV output.

pub mod analysis;
pub mod constraints;
pub mod error;
pub mod harness;
pub mod operators;
pub mod report;
pub mod signal;
pub mod solvers;

pub use constraints::{ActiveSet, ConstraintKind, ConstraintSet, ProjectionSlack};
pub use error::{Error, Result};
pub use operators::{
    ElementwiseNonlinearity, JacobianPoint, LinearOperator, MeasurementModel, ModelVariant,
};
pub use signal::Signal;
pub use solvers::{
    AdmissibleStep, Objective, RecoveryResult, SolverConfig, StopReason,
};
