//! The two iterative solvers.
//!
//! `niht_solve` runs hard-thresholded recovery from (possibly nonlinear)
//! measurements: a gradient step through the adjoint Jacobian at the current
//! iterate, followed by the exact projection onto the constraint set,
//!
//! ```text
//! x^{n+1} = P_A(x^n + μ Φ_{x^n}^*(y − Φ(x^n)))
//! ```
//!
//! `pgd_solve` minimises a general differentiable objective over the same
//! sets via the projected (Landweber-style) iteration
//!
//! ```text
//! x^{n+1} = P_A(x^n − (μ/2) ∇f(x^n))
//! ```
//!
//! Both start from `x^0 = 0`, which is a member of every supported set, so
//! the bound calculators in [`crate::analysis`] can use `‖x_ref‖` as the
//! initial distance. On a quadratic `f(x) = ‖y − Φ̄x‖²` the two iterations
//! coincide step for step: `(μ/2)·2Φ̄ᵀr = μΦ̄ᵀr`.

use nalgebra::DMatrix;

use crate::constraints::{project, project_with_active_set, ActiveSet, ConstraintSet};
use crate::error::{Error, Result};
use crate::operators::{
    forward, jacobian_adjoint_apply, JacobianPoint, MeasurementModel,
};
use crate::signal::{ensure_finite, ensure_len, is_finite, Signal};

/// Step size, stopping rules and trace switches shared by both solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Step size μ.
    pub mu: f64,
    /// Hard iteration cap; always active.
    pub max_iterations: usize,
    /// Stop once the residual norm (or objective value, for the descent
    /// solver) drops to this level.
    pub residual_tolerance: f64,
    /// Stop once `‖x^{n+1} − x^n‖` drops to this level.
    pub iterate_change_tolerance: f64,
    /// Keep per-iteration records.
    pub record_trace: bool,
    /// Keep every iterate (diagnostics; memory-heavy for long runs).
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(mu: f64) -> Self {
        Self {
            mu,
            max_iterations: 1000,
            residual_tolerance: 1e-8,
            iterate_change_tolerance: 1e-10,
            record_trace: false,
            record_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "step size mu={} must be finite and > 0",
                self.mu
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        for (name, v) in [
            ("residual_tolerance", self.residual_tolerance),
            ("iterate_change_tolerance", self.iterate_change_tolerance),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name}={v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Which stopping rule fired first. Rules are checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualTol,
    IterateTol,
    MaxIter,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::ResidualTol => write!(f, "residual_tolerance"),
            StopReason::IterateTol => write!(f, "iterate_tolerance"),
            StopReason::MaxIter => write!(f, "max_iterations"),
        }
    }
}

/// Ground-truth diagnostics for one step `x^n → x^{n+1}`. Only available when
/// the caller supplies the true signal; never used by the iteration itself.
#[derive(Debug, Clone)]
pub struct OracleDiagnostics {
    /// `‖y − Φ(x^n) − Φ_{x^n}(x_ref − x^n)‖`, evaluated at the pre-step
    /// iterate, where `x_ref` is the projection of the ground truth.
    pub linearized_residual_norm: f64,
    /// `‖x_ref − x^{n+1}‖` after the step.
    pub distance_to_reference: f64,
}

/// One record per completed step `x^n → x^{n+1}`.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Residual norm `‖y − Φ(x^{n+1})‖` for the measurement solver, objective
    /// value `f(x^{n+1})` for the descent solver.
    pub objective: f64,
    /// `‖x^{n+1} − x^n‖`.
    pub iterate_change: f64,
    pub active_set: ActiveSet,
    pub oracle: Option<OracleDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// Final iterate; always the output of a projection, hence a set member.
    pub estimate: Signal,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    /// Objective at the final iterate, recorded even when tracing is off.
    pub final_objective: f64,
    pub trace: Option<Vec<IterationRecord>>,
    pub iterates: Option<Vec<Signal>>,
}

/// Hard-thresholded recovery from measurements `y` under `model`.
///
/// When `ground_truth` is supplied the trace carries oracle diagnostics
/// against `x_ref = P_A(ground_truth)`; the iteration never reads them.
pub fn niht_solve(
    y: &Signal,
    model: &MeasurementModel,
    set: &ConstraintSet,
    cfg: &SolverConfig,
    ground_truth: Option<&Signal>,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    ensure_finite("y", y)?;
    ensure_len("y", y, model.output_dim())?;
    if set.dim() != model.input_dim() {
        return Err(Error::InvalidInput(format!(
            "constraint set dimension {} does not match model input dimension {}",
            set.dim(),
            model.input_dim()
        )));
    }
    let reference = match ground_truth {
        Some(truth) => {
            ensure_len("ground_truth", truth, model.input_dim())?;
            Some(project(truth, set)?)
        }
        None => None,
    };

    let n = model.input_dim();
    let mut x = Signal::zeros(n);
    let mut residual = y - forward(model, &x)?;
    let mut objective = residual.norm();
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut iterates = cfg.record_iterates.then(Vec::new);
    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;

    for iteration in 0..cfg.max_iterations {
        let at = JacobianPoint::new(&x)?;
        let ascent = jacobian_adjoint_apply(model, &at, &residual)?;
        let proposal = &x + cfg.mu * &ascent;
        if !is_finite(&proposal) {
            return Err(Error::Diverged {
                iteration,
                last_iterate: x,
            });
        }
        let (next, active_set) = project_with_active_set(&proposal, set)?;

        let oracle = match &reference {
            Some(x_ref) => {
                let mapped = crate::operators::jacobian_apply(model, &at, &(x_ref - &x))?;
                Some(OracleDiagnostics {
                    linearized_residual_norm: (&residual - mapped).norm(),
                    distance_to_reference: (x_ref - &next).norm(),
                })
            }
            None => None,
        };

        let change = (&next - &x).norm();
        let next_residual = y - forward(model, &next)?;
        let next_objective = next_residual.norm();
        if !next_objective.is_finite() {
            return Err(Error::Diverged {
                iteration,
                last_iterate: x,
            });
        }
        if let Some(t) = trace.as_mut() {
            t.push(IterationRecord {
                iteration,
                objective: next_objective,
                iterate_change: change,
                active_set,
                oracle,
            });
        }
        if let Some(list) = iterates.as_mut() {
            list.push(next.clone());
        }
        x = next;
        residual = next_residual;
        objective = next_objective;
        iterations = iteration + 1;

        if objective <= cfg.residual_tolerance {
            stop = StopReason::ResidualTol;
            break;
        }
        if change <= cfg.iterate_change_tolerance {
            stop = StopReason::IterateTol;
            break;
        }
    }

    Ok(RecoveryResult {
        estimate: x,
        iterations_run: iterations,
        stop_reason: stop,
        final_objective: objective,
        trace,
        iterates,
    })
}

/// Differentiable objective for the projected gradient solver.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &Signal) -> Result<f64>;
    fn gradient(&self, x: &Signal) -> Result<Signal>;
}

/// `f(x) = ‖y − A x‖²` with gradient `−2 Aᵀ(y − A x)`.
#[derive(Debug, Clone)]
pub struct LeastSquaresObjective {
    matrix: DMatrix<f64>,
    target: Signal,
}

impl LeastSquaresObjective {
    pub fn new(matrix: DMatrix<f64>, target: Signal) -> Result<Self> {
        if matrix.nrows() != target.len() {
            return Err(Error::InvalidInput(format!(
                "target has length {}, matrix has {} rows",
                target.len(),
                matrix.nrows()
            )));
        }
        ensure_finite("target", &target)?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has a non-finite entry".into()));
        }
        Ok(Self { matrix, target })
    }
}

impl Objective for LeastSquaresObjective {
    fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn evaluate(&self, x: &Signal) -> Result<f64> {
        ensure_len("x", x, self.dim())?;
        Ok((&self.target - &self.matrix * x).norm_squared())
    }

    fn gradient(&self, x: &Signal) -> Result<Signal> {
        ensure_len("x", x, self.dim())?;
        let residual = &self.target - &self.matrix * x;
        Ok(-2.0 * self.matrix.tr_mul(&residual))
    }
}

/// `f(x) = ‖y − Φ(x)‖²` for a measurement model, with the exact gradient
/// `−2 Φ_x^*(y − Φ(x))`.
#[derive(Debug, Clone)]
pub struct ModelResidualObjective {
    model: MeasurementModel,
    observations: Signal,
}

impl ModelResidualObjective {
    pub fn new(model: MeasurementModel, observations: Signal) -> Result<Self> {
        ensure_len("observations", &observations, model.output_dim())?;
        ensure_finite("observations", &observations)?;
        Ok(Self {
            model,
            observations,
        })
    }
}

impl Objective for ModelResidualObjective {
    fn dim(&self) -> usize {
        self.model.input_dim()
    }

    fn evaluate(&self, x: &Signal) -> Result<f64> {
        Ok((&self.observations - forward(&self.model, x)?).norm_squared())
    }

    fn gradient(&self, x: &Signal) -> Result<Signal> {
        let residual = &self.observations - forward(&self.model, x)?;
        let at = JacobianPoint::new(x)?;
        Ok(-2.0 * jacobian_adjoint_apply(&self.model, &at, &residual)?)
    }
}

/// Objective defined by closures; handy in tests and probes.
pub struct FnObjective<F, G>
where
    F: Fn(&Signal) -> f64,
    G: Fn(&Signal) -> Signal,
{
    dim: usize,
    value: F,
    grad: G,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&Signal) -> f64,
    G: Fn(&Signal) -> Signal,
{
    pub fn new(dim: usize, value: F, grad: G) -> Self {
        Self { dim, value, grad }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&Signal) -> f64,
    G: Fn(&Signal) -> Signal,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &Signal) -> Result<f64> {
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &Signal) -> Result<Signal> {
        Ok((self.grad)(x))
    }
}

/// Projected gradient descent on `objective` over `set`.
///
/// The residual stopping rule compares the objective *value* against
/// `residual_tolerance`; with tolerance zero it fires exactly when the
/// measurement solver's residual rule would on the induced quadratic.
pub fn pgd_solve(
    objective: &dyn Objective,
    set: &ConstraintSet,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    if set.dim() != objective.dim() {
        return Err(Error::InvalidInput(format!(
            "constraint set dimension {} does not match objective dimension {}",
            set.dim(),
            objective.dim()
        )));
    }

    let n = objective.dim();
    let mut x = Signal::zeros(n);
    let mut value = objective.evaluate(&x)?;
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut iterates = cfg.record_iterates.then(Vec::new);
    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;

    for iteration in 0..cfg.max_iterations {
        let gradient = objective.gradient(&x)?;
        if !is_finite(&gradient) {
            return Err(Error::Diverged {
                iteration,
                last_iterate: x,
            });
        }
        let proposal = &x - (cfg.mu / 2.0) * &gradient;
        if !is_finite(&proposal) {
            return Err(Error::Diverged {
                iteration,
                last_iterate: x,
            });
        }
        let (next, active_set) = project_with_active_set(&proposal, set)?;
        let change = (&next - &x).norm();
        let next_value = objective.evaluate(&next)?;
        if !next_value.is_finite() {
            return Err(Error::Diverged {
                iteration,
                last_iterate: x,
            });
        }
        if let Some(t) = trace.as_mut() {
            t.push(IterationRecord {
                iteration,
                objective: next_value,
                iterate_change: change,
                active_set,
                oracle: None,
            });
        }
        if let Some(list) = iterates.as_mut() {
            list.push(next.clone());
        }
        x = next;
        value = next_value;
        iterations = iteration + 1;

        if value <= cfg.residual_tolerance {
            stop = StopReason::ResidualTol;
            break;
        }
        if change <= cfg.iterate_change_tolerance {
            stop = StopReason::IterateTol;
            break;
        }
    }

    Ok(RecoveryResult {
        estimate: x,
        iterations_run: iterations,
        stop_reason: stop,
        final_objective: value,
        trace,
        iterates,
    })
}

/// Admissible step-size window for a solver, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdmissibleStep {
    Feasible {
        lower: f64,
        /// Whether the lower endpoint is excluded from the window.
        lower_exclusive: bool,
        upper: f64,
    },
    Infeasible,
}

impl AdmissibleStep {
    pub fn contains(&self, mu: f64) -> bool {
        match *self {
            AdmissibleStep::Feasible {
                lower,
                lower_exclusive,
                upper,
            } => {
                let above = if lower_exclusive { mu > lower } else { mu >= lower };
                above && mu <= upper
            }
            AdmissibleStep::Infeasible => false,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, AdmissibleStep::Feasible { .. })
    }
}

fn validate_constants(alpha: f64, beta: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidInput(
            "restricted-isometry constants must be finite and > 0".into(),
        ));
    }
    if beta < alpha {
        return Err(Error::InvalidInput(format!(
            "beta={beta} must be >= alpha={alpha}"
        )));
    }
    Ok(())
}

/// Step window `(1/(1.5α − 4C), 1/β]` for the hard-thresholding solver,
/// realising the requirement `β ≤ 1/μ < 1.5α − 4C`. `C` is the linearisation
/// constant; pass zero for linear models.
pub fn admissible_step_niht(alpha: f64, beta: f64, c_linearization: f64) -> Result<AdmissibleStep> {
    validate_constants(alpha, beta)?;
    if !c_linearization.is_finite() || c_linearization < 0.0 {
        return Err(Error::InvalidInput(
            "linearization constant must be finite and >= 0".into(),
        ));
    }
    let limit = 1.5 * alpha - 4.0 * c_linearization;
    if beta < limit {
        Ok(AdmissibleStep::Feasible {
            lower: 1.0 / limit,
            lower_exclusive: true,
            upper: 1.0 / beta,
        })
    } else {
        Ok(AdmissibleStep::Infeasible)
    }
}

/// Step window `[3/(4α), 1/β]` for the projected gradient solver, realising
/// `β ≤ 1/μ ≤ (4/3)α`. At the lower endpoint the contraction factor
/// `4(1 − μα)` equals one and the geometric error bound degenerates; the
/// window keeps the closed endpoint and reports the factor through
/// [`pgd_contraction_factor`] so callers can warn.
pub fn admissible_step_pgd(alpha: f64, beta: f64) -> Result<AdmissibleStep> {
    validate_constants(alpha, beta)?;
    if beta <= (4.0 / 3.0) * alpha {
        Ok(AdmissibleStep::Feasible {
            lower: 3.0 / (4.0 * alpha),
            lower_exclusive: false,
            upper: 1.0 / beta,
        })
    } else {
        Ok(AdmissibleStep::Infeasible)
    }
}

/// Contraction factor `c = 4(1 − μα)` of the descent solver's error recursion.
pub fn pgd_contraction_factor(mu: f64, alpha: f64) -> f64 {
    4.0 * (1.0 - mu * alpha)
}
