//! Empirical constant estimation and convergence-bound evaluation.
//!
//! The Monte-Carlo estimators draw feasible points (random support or
//! subspace, standard Gaussian coefficients) and report extremal quotients.
//! Sampling can only shrink the true range, so `alpha_hat >= alpha` and
//! `beta_hat <= beta`; every estimate is labelled as an inner estimate.
//!
//! The bound calculators evaluate closed-form constants. Where the commonly
//! stated constant disagrees with the one its own error recursion produces,
//! both are reported: a `printed_*` value for the constant as stated and a
//! `derived_*` value for the recursion-consistent one, so the discrepancy is
//! documented instead of silently resolved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::constraints::{ConstraintKind, ConstraintSet};
use crate::error::{Error, Result};
use crate::operators::{
    forward, jacobian_apply, linearization_residual, JacobianPoint, MeasurementModel,
};
use crate::report::KvReport;
use crate::signal::Signal;
use crate::solvers::Objective;

/// Pairs closer than this (in squared norm) are resampled.
const DEGENERATE_PAIR_TOL: f64 = 1e-24;

/// Draw one member of the constraint set: uniform random support or
/// subspace index, standard Gaussian coefficients.
pub fn sample_member(set: &ConstraintSet, rng: &mut impl Rng) -> Signal {
    match set.kind() {
        ConstraintKind::KSparse { dim, k } => {
            let mut ids = rand::seq::index::sample(rng, *dim, *k).into_vec();
            ids.sort_unstable();
            gaussian_on_support(*dim, &ids, rng)
        }
        ConstraintKind::BlockSparse {
            dim,
            blocks,
            k_blocks,
        } => {
            let mut chosen = rand::seq::index::sample(rng, blocks.len(), *k_blocks).into_vec();
            chosen.sort_unstable();
            let indices: Vec<usize> = chosen
                .iter()
                .flat_map(|&b| blocks[b].iter().copied())
                .collect();
            gaussian_on_support(*dim, &indices, rng)
        }
        ConstraintKind::UnionOfSubspaces { bases } => {
            let i = rng.gen_range(0..bases.len());
            gaussian_in_subspace(&bases[i], rng)
        }
    }
}

/// Like [`sample_member`] but rescaled to fit a model's domain box, when it
/// has one. Scaling keeps the sample inside the set (all supported sets are
/// unions of subspaces, hence scale-invariant).
pub fn sample_member_within(
    set: &ConstraintSet,
    domain_radius: Option<f64>,
    rng: &mut impl Rng,
) -> Signal {
    let mut x = sample_member(set, rng);
    if let Some(radius) = domain_radius {
        let peak = x.amax();
        if peak > radius {
            x *= (radius / peak) * (1.0 - 1e-12);
        }
    }
    x
}

/// Empirical restricted-isometry estimate over a constraint set.
#[derive(Debug, Clone)]
pub struct RipEstimate {
    /// Smallest sampled quotient; an upper bound on the true `alpha`.
    pub alpha_hat: f64,
    /// Largest sampled quotient; a lower bound on the true `beta`.
    pub beta_hat: f64,
    pub trials: usize,
    pub constraint: String,
    /// Number of distinct linearisation points sampled (one per trial).
    pub linearization_points: usize,
    /// Always true: sampling explores the set from the inside.
    pub inner_estimate: bool,
}

impl RipEstimate {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("alpha_hat", self.alpha_hat);
        r.set("beta_hat", self.beta_hat);
        r.set("trials", self.trials);
        r.set("constraint", &self.constraint);
        r.set("linearization_points", self.linearization_points);
        r.set("estimate_kind", "monte_carlo_inner");
        r
    }
}

/// Single restricted-isometry quotient
/// `‖Φ_{x*}(x₁ − x₂)‖² / ‖x₁ − x₂‖²`.
pub fn rip_quotient(
    model: &MeasurementModel,
    linearization_point: &Signal,
    x1: &Signal,
    x2: &Signal,
) -> Result<f64> {
    let difference = x1 - x2;
    let d2 = difference.norm_squared();
    if d2 <= DEGENERATE_PAIR_TOL {
        return Err(Error::InvalidInput(
            "sample pair is degenerate (x1 == x2)".into(),
        ));
    }
    let at = JacobianPoint::new(linearization_point)?;
    Ok(jacobian_apply(model, &at, &difference)?.norm_squared() / d2)
}

/// Monte-Carlo restricted-isometry estimate: extremal Jacobian quotients over
/// random triples `(x₁, x₂, x*)` from the set.
pub fn estimate_rip(
    model: &MeasurementModel,
    set: &ConstraintSet,
    trials: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if set.dim() != model.input_dim() {
        return Err(Error::InvalidInput(
            "constraint set and model dimensions differ".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = model.domain_radius();
    let mut alpha_hat = f64::INFINITY;
    let mut beta_hat = f64::NEG_INFINITY;
    for _ in 0..trials {
        let (x1, x2, point) = loop {
            let x1 = sample_member_within(set, radius, &mut rng);
            let x2 = sample_member_within(set, radius, &mut rng);
            let point = sample_member_within(set, radius, &mut rng);
            if (&x1 - &x2).norm_squared() > DEGENERATE_PAIR_TOL {
                break (x1, x2, point);
            }
        };
        let q = rip_quotient(model, &point, &x1, &x2)?;
        alpha_hat = alpha_hat.min(q);
        beta_hat = beta_hat.max(q);
    }
    Ok(RipEstimate {
        alpha_hat,
        beta_hat,
        trials,
        constraint: set.description(),
        linearization_points: trials,
        inner_estimate: true,
    })
}

/// Exact restricted-isometry constants of a fixed matrix over vectors with at
/// most `order` non-zeros, by enumerating supports and taking extremal
/// singular values of each column submatrix. Budgeted at 10⁴ supports.
pub fn exact_rip_ksparse(matrix: &DMatrix<f64>, order: usize) -> Result<(f64, f64)> {
    let n = matrix.ncols();
    if order == 0 {
        return Err(Error::InvalidInput("order must be >= 1".into()));
    }
    let order = order.min(n);
    let count = binomial(n, order);
    if count > 10_000.0 {
        return Err(Error::InvalidInput(format!(
            "support enumeration budget exceeded: C({n},{order}) = {count:.3e} > 1e4"
        )));
    }
    let mut alpha = f64::INFINITY;
    let mut beta = f64::NEG_INFINITY;
    for support in (0..n).combinations(order) {
        let submatrix = matrix.select_columns(support.iter());
        let singular_values = submatrix.singular_values();
        for s in singular_values.iter() {
            alpha = alpha.min(s * s);
            beta = beta.max(s * s);
        }
    }
    Ok((alpha, beta))
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64;
        acc /= (i + 1) as f64;
    }
    acc
}

/// Empirical and analytic linearisation constants.
#[derive(Debug, Clone)]
pub struct LinearizationEstimate {
    /// Largest sampled `‖Φ(x₁) − Φ(x₂) − Φ_{x₁}(x₁−x₂)‖² / ‖x₁−x₂‖²`.
    pub c_hat: f64,
    /// Closed-form safe value `β·M` with `β` the squared operator norm of the
    /// linear part and `M` the derivative bound; zero for linear models.
    pub c_analytic: Option<f64>,
    pub trials: usize,
}

impl LinearizationEstimate {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("c_hat", self.c_hat);
        r.set_option("c_analytic", self.c_analytic);
        r.set("trials", self.trials);
        r
    }
}

/// `linearization_residual(x₁,x₂)² / ‖x₁−x₂‖²` for one pair.
pub fn linearization_ratio(model: &MeasurementModel, x1: &Signal, x2: &Signal) -> Result<f64> {
    let d2 = (x1 - x2).norm_squared();
    if d2 <= DEGENERATE_PAIR_TOL {
        return Err(Error::InvalidInput(
            "sample pair is degenerate (x1 == x2)".into(),
        ));
    }
    let residual = linearization_residual(model, x1, x2)?;
    Ok(residual * residual / d2)
}

/// Worst sampled linearisation ratio over the set, plus the analytic value.
pub fn estimate_linearization_constant(
    model: &MeasurementModel,
    set: &ConstraintSet,
    trials: usize,
    seed: u64,
) -> Result<LinearizationEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if set.dim() != model.input_dim() {
        return Err(Error::InvalidInput(
            "constraint set and model dimensions differ".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = model.domain_radius();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (x1, x2) = loop {
            let x1 = sample_member_within(set, radius, &mut rng);
            let x2 = sample_member_within(set, radius, &mut rng);
            if (&x1 - &x2).norm_squared() > DEGENERATE_PAIR_TOL {
                break (x1, x2);
            }
        };
        worst = worst.max(linearization_ratio(model, &x1, &x2)?);
    }
    let c_analytic = if model.is_linear() {
        Some(0.0)
    } else {
        Some(model.operator().operator_norm_squared() * model.derivative_bound())
    };
    Ok(LinearizationEstimate {
        c_hat: worst,
        c_analytic,
        trials,
    })
}

/// Restricted-isometry constants of the composed Jacobian `Φ̄(I + H')`,
/// expressed through the constants `(α, β)` of `Φ̄` and the derivative bound
/// `M`. The upper constant is reported twice: `upper_printed = β(1−M)²` as
/// commonly stated, and `upper_derived = β(1+M)²` as the triangle-inequality
/// chain actually yields. Both share the lower constant `(√α − √β·M)²`,
/// which is only meaningful while `√α > √β·M` (otherwise `lower_vacuous`).
#[derive(Debug, Clone)]
pub struct ComposedRipConstants {
    pub lower: f64,
    pub lower_vacuous: bool,
    pub upper_derived: f64,
    pub upper_printed: f64,
}

impl ComposedRipConstants {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("lower", self.lower);
        r.set("lower_vacuous", self.lower_vacuous);
        r.set("derived_upper", self.upper_derived);
        r.set("printed_upper", self.upper_printed);
        r
    }
}

pub fn composed_rip_constants(alpha: f64, beta: f64, m: f64) -> Result<ComposedRipConstants> {
    if !alpha.is_finite() || alpha <= 0.0 || !beta.is_finite() || beta < alpha {
        return Err(Error::InvalidInput(
            "need finite constants with 0 < alpha <= beta".into(),
        ));
    }
    if !m.is_finite() || m < 0.0 || m >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "derivative bound M={m} must satisfy 0 <= M < 1"
        )));
    }
    let lower_vacuous = alpha.sqrt() <= beta.sqrt() * m;
    // Expanded form of (sqrt(alpha) - sqrt(beta)*m)^2; exact at m = 0.
    let lower = alpha - 2.0 * (alpha * beta).sqrt() * m + beta * m * m;
    Ok(ComposedRipConstants {
        lower: if lower_vacuous { 0.0 } else { lower },
        lower_vacuous,
        upper_derived: beta * (1.0 + m) * (1.0 + m),
        upper_printed: beta * (1.0 - m) * (1.0 - m),
    })
}

/// Finite-iteration report for the hard-thresholding solver: the accumulated
/// noise energy `ε^k`, the iteration count `k*` needed to shrink the initial
/// term below `δ·√ε^k`, and the resulting error bound.
#[derive(Debug, Clone)]
pub struct NihtIterationReport {
    pub alpha: f64,
    pub mu: f64,
    pub delta: f64,
    /// `‖x_ref‖`, the norm of the projected true signal.
    pub reference_norm: f64,
    /// `‖x_ref − x‖`, the distance from the true signal to the set.
    pub offset: f64,
    /// Contraction base `a = 2/(μα) − 2` of the error recursion.
    pub a: f64,
    /// Noise gain `b = 4/α`.
    pub b: f64,
    /// True when `a ∈ (0, 1)` so the geometric accumulation converges.
    pub applicable: bool,
    /// `ε^k = b·Σ_{n<k} a^{k−1−n} ‖e^n‖²` by direct summation.
    pub epsilon_k: f64,
    pub k_star: Option<usize>,
    /// The closed form gave a negative count (log argument >= 1); floored.
    pub k_star_floored: bool,
    /// `(1 + δ)·√ε^k + offset`.
    pub error_bound: f64,
    /// `ε_lim·b/(1−a)` when the residual norms have levelled off
    /// (last-quarter max/min below 1.01).
    pub asymptotic_cap: Option<f64>,
    /// Sequence length `k`.
    pub iterations: usize,
}

impl NihtIterationReport {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("alpha", self.alpha);
        r.set("mu", self.mu);
        r.set("delta", self.delta);
        r.set("reference_norm", self.reference_norm);
        r.set("offset", self.offset);
        r.set("a", self.a);
        r.set("b", self.b);
        r.set("applicable", self.applicable);
        r.set("epsilon_k", self.epsilon_k);
        r.set_option("k_star", self.k_star);
        r.set("k_star_floored", self.k_star_floored);
        r.set("error_bound", self.error_bound);
        r.set_option("asymptotic_cap", self.asymptotic_cap);
        r.set("iterations", self.iterations);
        r
    }
}

pub fn niht_iteration_report(
    alpha: f64,
    mu: f64,
    linearized_residual_norms: &[f64],
    reference_norm: f64,
    delta: f64,
    offset: f64,
) -> Result<NihtIterationReport> {
    if !alpha.is_finite() || alpha <= 0.0 || !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidInput("alpha and mu must be > 0".into()));
    }
    if linearized_residual_norms.is_empty() {
        return Err(Error::InvalidInput(
            "residual norm sequence must be non-empty".into(),
        ));
    }
    if linearized_residual_norms
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::InvalidInput(
            "residual norms must be finite and >= 0".into(),
        ));
    }
    for (name, v) in [
        ("reference_norm", reference_norm),
        ("delta", delta),
        ("offset", offset),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "{name}={v} must be finite and >= 0"
            )));
        }
    }

    let a = 2.0 / (mu * alpha) - 2.0;
    let b = 4.0 / alpha;
    let applicable = a > 0.0 && a < 1.0;

    let k = linearized_residual_norms.len();
    let mut epsilon_k = 0.0;
    for (n, r) in linearized_residual_norms.iter().enumerate() {
        epsilon_k += a.powi((k - 1 - n) as i32) * r * r;
    }
    epsilon_k *= b;

    let mut k_star_floored = false;
    let k_star = if !applicable {
        None
    } else {
        let argument = delta * epsilon_k.sqrt() / reference_norm;
        if !argument.is_finite() || argument <= 0.0 {
            None
        } else if argument >= 1.0 {
            k_star_floored = true;
            Some(0)
        } else {
            let count = (2.0 * argument.ln() / a.ln()).ceil();
            Some(count.max(0.0) as usize)
        }
    };

    let error_bound = (1.0 + delta) * epsilon_k.sqrt() + offset;

    let asymptotic_cap = if applicable {
        let start = k - (k / 4).max(1);
        let window = &linearized_residual_norms[start..];
        let peak = window.iter().cloned().fold(0.0f64, f64::max);
        let trough = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let converged = peak <= 1e-300 || (trough > 0.0 && peak / trough < 1.01);
        if converged {
            let limit = window.iter().map(|r| r * r).sum::<f64>() / window.len() as f64;
            Some(limit * b / (1.0 - a))
        } else {
            None
        }
    } else {
        None
    };

    Ok(NihtIterationReport {
        alpha,
        mu,
        delta,
        reference_norm,
        offset,
        a,
        b,
        applicable,
        epsilon_k,
        k_star,
        k_star_floored,
        error_bound,
        asymptotic_cap,
        iterations: k,
    })
}

/// Steady-state error bound for the hard-thresholding solver under a
/// linearisation constant `C`: the limit of the recursion
/// `d_{n+1}² ≤ 2(1/(μα) − 1 + 4C/α)·d_n² + (8/α)·‖e‖²`.
///
/// Two constants are evaluated: `printed_constant = 2/(0.75α − 1/μ − 2C)` as
/// commonly stated — whose denominator is non-positive whenever
/// `1/μ ≥ 0.75α`, which the admissibility window forces — and the
/// recursion fixed point `derived_constant = √((8/α)/(1 − a'))` with
/// `a' = 2(1/(μα) − 1 + 4C/α)`. With a zero residual both bounds collapse to
/// the offset term.
#[derive(Debug, Clone)]
pub struct NihtLimitReport {
    pub alpha: f64,
    pub mu: f64,
    pub c_linearization: f64,
    /// `‖e‖ = ‖y − Φ(x_ref)‖`.
    pub residual_norm: f64,
    /// `‖x_ref − x‖`.
    pub offset: f64,
    pub printed_constant: f64,
    pub printed_denominator_nonpositive: bool,
    pub printed_bound: Option<f64>,
    /// `a' = 2(1/(μα) − 1 + 4C/α)`.
    pub derived_contraction: f64,
    /// True when `a' < 1` so the recursion has a fixed point.
    pub derived_applicable: bool,
    pub derived_constant: Option<f64>,
    pub derived_bound: Option<f64>,
}

impl NihtLimitReport {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("alpha", self.alpha);
        r.set("mu", self.mu);
        r.set("c_linearization", self.c_linearization);
        r.set("residual_norm", self.residual_norm);
        r.set("offset", self.offset);
        r.set("printed_constant", self.printed_constant);
        r.set(
            "printed_denominator_nonpositive",
            self.printed_denominator_nonpositive,
        );
        r.set_option("printed_bound", self.printed_bound);
        r.set("derived_contraction", self.derived_contraction);
        r.set("derived_applicable", self.derived_applicable);
        r.set_option("derived_constant", self.derived_constant);
        r.set_option("derived_bound", self.derived_bound);
        r
    }
}

pub fn niht_limit_report(
    alpha: f64,
    mu: f64,
    c_linearization: f64,
    residual_norm: f64,
    offset: f64,
) -> Result<NihtLimitReport> {
    if !alpha.is_finite() || alpha <= 0.0 || !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidInput("alpha and mu must be > 0".into()));
    }
    for (name, v) in [
        ("c_linearization", c_linearization),
        ("residual_norm", residual_norm),
        ("offset", offset),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "{name}={v} must be finite and >= 0"
            )));
        }
    }

    let denominator = 0.75 * alpha - 1.0 / mu - 2.0 * c_linearization;
    let printed_constant = 2.0 / denominator;
    let printed_denominator_nonpositive = denominator <= 0.0;
    let printed_bound = if residual_norm == 0.0 {
        Some(offset)
    } else if printed_denominator_nonpositive {
        None
    } else {
        Some(printed_constant * residual_norm + offset)
    };

    let derived_contraction = 2.0 * (1.0 / (mu * alpha) - 1.0 + 4.0 * c_linearization / alpha);
    let derived_applicable = derived_contraction < 1.0;
    let derived_constant =
        derived_applicable.then(|| ((8.0 / alpha) / (1.0 - derived_contraction)).sqrt());
    let derived_bound = if residual_norm == 0.0 {
        Some(offset)
    } else {
        derived_constant.map(|c| c * residual_norm + offset)
    };

    Ok(NihtLimitReport {
        alpha,
        mu,
        c_linearization,
        residual_norm,
        offset,
        printed_constant,
        printed_denominator_nonpositive,
        printed_bound,
        derived_contraction,
        derived_applicable,
        derived_constant,
        derived_bound,
    })
}

/// Iteration count and accuracy bound for the projected gradient solver.
///
/// The stated bound multiplies the whole error term by `f_opt`; the error
/// recursion `d_n² ≤ c^n‖x_opt‖² + 4μ/(1−c)·f_opt` produces `√f_opt` in the
/// leading term instead. Both are reported; the bounds cover only the
/// `f_opt`-dependent part (the caller adds its own distance-to-optimum term).
#[derive(Debug, Clone)]
pub struct PgdIterationReport {
    pub alpha: f64,
    pub mu: f64,
    pub f_opt: f64,
    pub optimum_norm: f64,
    pub delta: f64,
    /// `c = 4(1 − μα)`.
    pub contraction: f64,
    /// True when `c ∈ (0, 1)`.
    pub applicable: bool,
    /// True when `c ≥ 1 − 1e-9`: the step sits at the boundary where the
    /// geometric bound degenerates.
    pub degenerate: bool,
    pub n_star: Option<usize>,
    pub n_star_floored: bool,
    /// `(2√(μ/(1−c)) + δ)·f_opt`.
    pub printed_bound: Option<f64>,
    /// `2√(μ/(1−c))·√f_opt + δ·f_opt`.
    pub derived_bound: Option<f64>,
}

impl PgdIterationReport {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("alpha", self.alpha);
        r.set("mu", self.mu);
        r.set("f_opt", self.f_opt);
        r.set("optimum_norm", self.optimum_norm);
        r.set("delta", self.delta);
        r.set("contraction", self.contraction);
        r.set("applicable", self.applicable);
        r.set("degenerate", self.degenerate);
        r.set_option("n_star", self.n_star);
        r.set("n_star_floored", self.n_star_floored);
        r.set_option("printed_bound", self.printed_bound);
        r.set_option("derived_bound", self.derived_bound);
        r
    }
}

pub fn pgd_iteration_report(
    alpha: f64,
    mu: f64,
    f_opt: f64,
    optimum_norm: f64,
    delta: f64,
) -> Result<PgdIterationReport> {
    if !alpha.is_finite() || alpha <= 0.0 || !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidInput("alpha and mu must be > 0".into()));
    }
    if !f_opt.is_finite() || f_opt < 0.0 {
        return Err(Error::InvalidInput(
            "objective value must be finite and >= 0 (f is a positive function)".into(),
        ));
    }
    for (name, v) in [("optimum_norm", optimum_norm), ("delta", delta)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "{name}={v} must be finite and >= 0"
            )));
        }
    }

    let contraction = 4.0 * (1.0 - mu * alpha);
    let applicable = contraction > 0.0 && contraction < 1.0;
    let degenerate = contraction >= 1.0 - 1e-9;

    let mut n_star_floored = false;
    let n_star = if !applicable {
        None
    } else {
        let argument = delta * f_opt / optimum_norm;
        if !argument.is_finite() || argument <= 0.0 {
            None
        } else if argument >= 1.0 {
            n_star_floored = true;
            Some(0)
        } else {
            let count = (2.0 * argument.ln() / contraction.ln()).ceil();
            Some(count.max(0.0) as usize)
        }
    };

    let (printed_bound, derived_bound) = if contraction < 1.0 {
        let gain = 2.0 * (mu / (1.0 - contraction)).sqrt();
        (
            Some((gain + delta) * f_opt),
            Some(gain * f_opt.sqrt() + delta * f_opt),
        )
    } else {
        (None, None)
    };

    Ok(PgdIterationReport {
        alpha,
        mu,
        f_opt,
        optimum_norm,
        delta,
        contraction,
        applicable,
        degenerate,
        n_star,
        n_star_floored,
        printed_bound,
        derived_bound,
    })
}

/// Extremal restricted-convexity quotients of an objective.
#[derive(Debug, Clone)]
pub struct RscpEstimate {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub trials: usize,
    /// False when the sampled lower quotient is not positive, i.e. the
    /// objective fails the property on the sampled directions.
    pub is_rscp: bool,
}

impl RscpEstimate {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("alpha_hat", self.alpha_hat);
        r.set("beta_hat", self.beta_hat);
        r.set("trials", self.trials);
        r.set("is_rscp", self.is_rscp);
        r
    }
}

/// Restricted-convexity quotient
/// `(f(x₁) − f(x₂) − ⟨∇f(x₂), x₁−x₂⟩)/‖x₁−x₂‖²`.
pub fn rscp_quotient(objective: &dyn Objective, x1: &Signal, x2: &Signal) -> Result<f64> {
    let difference = x1 - x2;
    let d2 = difference.norm_squared();
    if d2 <= DEGENERATE_PAIR_TOL {
        return Err(Error::InvalidInput(
            "sample pair is degenerate (x1 == x2)".into(),
        ));
    }
    let numerator = objective.evaluate(x1)?
        - objective.evaluate(x2)?
        - objective.gradient(x2)?.dot(&difference);
    Ok(numerator / d2)
}

/// Sample restricted-convexity quotients over pairs whose difference lies in
/// the three-fold sum of set members (three random members added together),
/// with the base point a dense Gaussian vector.
pub fn rscp_probe(
    objective: &dyn Objective,
    set: &ConstraintSet,
    trials: usize,
    seed: u64,
) -> Result<RscpEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if set.dim() != objective.dim() {
        return Err(Error::InvalidInput(
            "constraint set and objective dimensions differ".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = set.dim();
    let mut alpha_hat = f64::INFINITY;
    let mut beta_hat = f64::NEG_INFINITY;
    for _ in 0..trials {
        let difference = loop {
            let d = sample_member(set, &mut rng)
                + sample_member(set, &mut rng)
                + sample_member(set, &mut rng);
            if d.norm_squared() > DEGENERATE_PAIR_TOL {
                break d;
            }
        };
        let x2 = Signal::from_iterator(n, (0..n).map(|_| rng.sample(StandardNormal)));
        let x1 = &x2 + difference;
        let q = rscp_quotient(objective, &x1, &x2)?;
        alpha_hat = alpha_hat.min(q);
        beta_hat = beta_hat.max(q);
    }
    Ok(RscpEstimate {
        alpha_hat,
        beta_hat,
        trials,
        is_rscp: alpha_hat > 0.0,
    })
}

/// Outcome of the convexity search: either a witness triple for which the
/// squared-residual objective violates midpoint convexity on a subspace, or
/// exhaustion of the trial budget.
#[derive(Debug, Clone)]
pub enum ConvexityWitness {
    Found {
        y: Signal,
        x1: Signal,
        x2: Signal,
        /// `½f(x₁) + ½f(x₂) − f((x₁+x₂)/2)`, negative at the witness.
        violation: f64,
    },
    NotFound {
        trials_used: usize,
        budget_exhausted: bool,
    },
}

impl ConvexityWitness {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        match self {
            ConvexityWitness::Found {
                y,
                x1,
                x2,
                violation,
            } => {
                r.set("found", true);
                r.set("violation", violation);
                r.set("y", join_entries(y));
                r.set("x1", join_entries(x1));
                r.set("x2", join_entries(x2));
            }
            ConvexityWitness::NotFound {
                trials_used,
                budget_exhausted,
            } => {
                r.set("found", false);
                r.set("trials_used", trials_used);
                r.set("budget_exhausted", budget_exhausted);
            }
        }
        r
    }
}

fn join_entries(x: &Signal) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Search for observations `y` under which `x ↦ ‖y − Φ(x)‖²` is non-convex
/// on a subspace of the constraint set.
///
/// Each trial samples two points in a common subspace and checks the
/// midpoint-convexity defect for `y = −t·(Φ(x̄) − ½Φ(x₁) − ½Φ(x₂))` over a
/// geometric ladder of scales `t`; when the map has any curvature between
/// the sampled points, large `t` makes the defect negative. Affine models
/// have no curvature anywhere, so the search reports `NotFound`.
pub fn convexity_counterexample(
    model: &MeasurementModel,
    set: &ConstraintSet,
    trials: usize,
    seed: u64,
) -> Result<ConvexityWitness> {
    if set.dim() != model.input_dim() {
        return Err(Error::InvalidInput(
            "constraint set and model dimensions differ".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = model.domain_radius();
    for _ in 0..trials {
        let (x1, x2) = sample_pair_in_common_atom(set, radius, &mut rng);
        if (&x1 - &x2).norm_squared() <= DEGENERATE_PAIR_TOL {
            continue;
        }
        let midpoint = 0.5 * (&x1 + &x2);
        let y1 = forward(model, &x1)?;
        let y2 = forward(model, &x2)?;
        let ym = forward(model, &midpoint)?;
        let curvature = &ym - 0.5 * (&y1 + &y2);
        if curvature.norm_squared() <= 1e-20 {
            continue;
        }
        for scale in [1.0, 10.0, 100.0, 1000.0] {
            let y = -scale * &curvature;
            let violation = 0.5 * ((&y - &y1).norm_squared() + (&y - &y2).norm_squared())
                - (&y - &ym).norm_squared();
            if violation < -1e-10 {
                return Ok(ConvexityWitness::Found {
                    y,
                    x1,
                    x2,
                    violation,
                });
            }
        }
    }
    Ok(ConvexityWitness::NotFound {
        trials_used: trials,
        budget_exhausted: true,
    })
}

/// Two Gaussian samples sharing one atom (support, block choice or
/// subspace), so their segment stays inside a single subspace of the set.
fn sample_pair_in_common_atom(
    set: &ConstraintSet,
    domain_radius: Option<f64>,
    rng: &mut impl Rng,
) -> (Signal, Signal) {
    let shrink = |mut x: Signal| {
        if let Some(radius) = domain_radius {
            let peak = x.amax();
            if peak > radius {
                x *= (radius / peak) * (1.0 - 1e-12);
            }
        }
        x
    };
    match set.kind() {
        ConstraintKind::KSparse { dim, k } => {
            let mut ids = rand::seq::index::sample(rng, *dim, *k).into_vec();
            ids.sort_unstable();
            let a = gaussian_on_support(*dim, &ids, rng);
            let b = gaussian_on_support(*dim, &ids, rng);
            (shrink(a), shrink(b))
        }
        ConstraintKind::BlockSparse {
            dim,
            blocks,
            k_blocks,
        } => {
            let mut chosen = rand::seq::index::sample(rng, blocks.len(), *k_blocks).into_vec();
            chosen.sort_unstable();
            let indices: Vec<usize> = chosen
                .iter()
                .flat_map(|&b| blocks[b].iter().copied())
                .collect();
            let a = gaussian_on_support(*dim, &indices, rng);
            let b = gaussian_on_support(*dim, &indices, rng);
            (shrink(a), shrink(b))
        }
        ConstraintKind::UnionOfSubspaces { bases } => {
            let i = rng.gen_range(0..bases.len());
            let a = gaussian_in_subspace(&bases[i], rng);
            let b = gaussian_in_subspace(&bases[i], rng);
            (shrink(a), shrink(b))
        }
    }
}

fn gaussian_on_support(dim: usize, indices: &[usize], rng: &mut impl Rng) -> Signal {
    let mut x = Signal::zeros(dim);
    for &i in indices {
        x[i] = rng.sample(StandardNormal);
    }
    x
}

fn gaussian_in_subspace(basis: &DMatrix<f64>, rng: &mut impl Rng) -> Signal {
    let coefficients = Signal::from_iterator(
        basis.ncols(),
        (0..basis.ncols()).map(|_| rng.sample(StandardNormal)),
    );
    basis * coefficients
}
