//! Measurement models and their Jacobians.
//!
//! The nonlinear model composes a fixed linear operator `Φ̄` with an
//! element-wise distortion `f(x) = x + h(x)`, so the measurement map is
//! `Φ(x) = Φ̄(x + h(x))` and its Jacobian at `x*` acts as
//! `v ↦ Φ̄((I + H'(x*)) v)` with `H'` the diagonal of `h'`. Every built-in
//! `h` satisfies `h(0) = 0` and carries an explicit derivative bound
//! `sup|h'| = M < 1`; the cubic distortion only bounds its derivative inside
//! a declared box, so evaluations outside the box are an error instead of a
//! silent contract break.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::signal::{ensure_finite, ensure_len, Signal};

/// Dense linear measurement operator (`M × N` gain matrix).
#[derive(Debug, Clone)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
}

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidInput(
                "operator must have at least one row and one column".into(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "operator contains a non-finite entry".into(),
            ));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Largest squared singular value.
    pub fn operator_norm_squared(&self) -> f64 {
        self.matrix
            .singular_values()
            .iter()
            .fold(0.0f64, |a, &s| a.max(s * s))
    }
}

/// Element-wise distortion `h` with `h(0) = 0` and a known derivative bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementwiseNonlinearity {
    /// `h ≡ 0`: the composed model collapses to the linear one.
    Identity,
    /// `h(x) = s·sin(x)` with `|h'| ≤ s`.
    ScaledSine { scale: f64 },
    /// `h(x) = s·tanh(x)` with `|h'| ≤ s`.
    ScaledTanh { scale: f64 },
    /// `h(x) = s·x³` on the box `[-radius, radius]`, where `|h'| ≤ 3·s·radius²`.
    Cubic { scale: f64, radius: f64 },
}

impl ElementwiseNonlinearity {
    pub fn scaled_sine(scale: f64) -> Result<Self> {
        let h = Self::ScaledSine { scale };
        h.validate()?;
        Ok(h)
    }

    pub fn scaled_tanh(scale: f64) -> Result<Self> {
        let h = Self::ScaledTanh { scale };
        h.validate()?;
        Ok(h)
    }

    pub fn cubic(scale: f64, radius: f64) -> Result<Self> {
        let h = Self::Cubic { scale, radius };
        h.validate()?;
        Ok(h)
    }

    /// Build from the textual kind used in configs and sweep grids.
    pub fn from_kind(kind: &str, scale: f64, radius: Option<f64>) -> Result<Self> {
        match kind {
            "identity" => Ok(Self::Identity),
            "sine" => Self::scaled_sine(scale),
            "tanh" => Self::scaled_tanh(scale),
            "cubic" => {
                let radius = radius.ok_or_else(|| {
                    Error::InvalidInput("cubic nonlinearity needs a domain radius".into())
                })?;
                Self::cubic(scale, radius)
            }
            other => Err(Error::InvalidInput(format!(
                "unknown nonlinearity kind '{other}' (expected identity|sine|tanh|cubic)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Identity => Ok(()),
            Self::ScaledSine { scale } | Self::ScaledTanh { scale } => {
                if !scale.is_finite() || !(0.0..1.0).contains(&scale) {
                    return Err(Error::InvalidInput(format!(
                        "nonlinearity scale {scale} must satisfy 0 <= s < 1"
                    )));
                }
                Ok(())
            }
            Self::Cubic { scale, radius } => {
                if !scale.is_finite() || scale < 0.0 {
                    return Err(Error::InvalidInput("cubic scale must be >= 0".into()));
                }
                if !radius.is_finite() || radius <= 0.0 {
                    return Err(Error::InvalidInput("cubic radius must be > 0".into()));
                }
                let bound = 3.0 * scale * radius * radius;
                if bound >= 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "cubic derivative bound 3·s·r² = {bound} must be < 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `h(x)`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::ScaledSine { scale } => scale * x.sin(),
            Self::ScaledTanh { scale } => scale * x.tanh(),
            Self::Cubic { scale, .. } => scale * x * x * x,
        }
    }

    /// `h'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::ScaledSine { scale } => scale * x.cos(),
            Self::ScaledTanh { scale } => {
                let t = x.tanh();
                scale * (1.0 - t * t)
            }
            Self::Cubic { scale, .. } => 3.0 * scale * x * x,
        }
    }

    /// `M = sup |h'|` over the admissible domain.
    pub fn derivative_bound(&self) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::ScaledSine { scale } | Self::ScaledTanh { scale } => scale,
            Self::Cubic { scale, radius } => 3.0 * scale * radius * radius,
        }
    }

    pub fn domain_radius(&self) -> Option<f64> {
        match *self {
            Self::Cubic { radius, .. } => Some(radius),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::ScaledSine { .. } => "sine",
            Self::ScaledTanh { .. } => "tanh",
            Self::Cubic { .. } => "cubic",
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::ScaledSine { scale } | Self::ScaledTanh { scale } | Self::Cubic { scale, .. } => {
                scale
            }
        }
    }

    fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }
}

#[derive(Debug, Clone)]
pub enum ModelVariant {
    Linear(LinearOperator),
    Composed {
        operator: LinearOperator,
        nonlinearity: ElementwiseNonlinearity,
    },
}

/// Forward measurement map with optional additive-noise level.
///
/// The forward map itself is deterministic and noiseless; `noise_sigma` is
/// the standard deviation the experiment harness uses when it draws the
/// observation error.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    variant: ModelVariant,
    noise_sigma: f64,
}

impl MeasurementModel {
    pub fn linear(operator: LinearOperator) -> Self {
        Self {
            variant: ModelVariant::Linear(operator),
            noise_sigma: 0.0,
        }
    }

    pub fn composed(operator: LinearOperator, nonlinearity: ElementwiseNonlinearity) -> Result<Self> {
        nonlinearity.validate()?;
        Ok(Self {
            variant: ModelVariant::Composed {
                operator,
                nonlinearity,
            },
            noise_sigma: 0.0,
        })
    }

    pub fn with_noise_sigma(mut self, noise_sigma: f64) -> Result<Self> {
        if !noise_sigma.is_finite() || noise_sigma < 0.0 {
            return Err(Error::InvalidInput(
                "noise sigma must be finite and >= 0".into(),
            ));
        }
        self.noise_sigma = noise_sigma;
        Ok(self)
    }

    pub fn variant(&self) -> &ModelVariant {
        &self.variant
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// The linear part `Φ̄`.
    pub fn operator(&self) -> &LinearOperator {
        match &self.variant {
            ModelVariant::Linear(op) => op,
            ModelVariant::Composed { operator, .. } => operator,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.operator().input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.operator().output_dim()
    }

    /// `M = sup |h'|`; zero for linear models.
    pub fn derivative_bound(&self) -> f64 {
        match &self.variant {
            ModelVariant::Linear(_) => 0.0,
            ModelVariant::Composed { nonlinearity, .. } => nonlinearity.derivative_bound(),
        }
    }

    pub fn nonlinearity(&self) -> Option<&ElementwiseNonlinearity> {
        match &self.variant {
            ModelVariant::Linear(_) => None,
            ModelVariant::Composed { nonlinearity, .. } => Some(nonlinearity),
        }
    }

    /// True when the map is affine in exact arithmetic.
    pub fn is_linear(&self) -> bool {
        match &self.variant {
            ModelVariant::Linear(_) => true,
            ModelVariant::Composed { nonlinearity, .. } => nonlinearity.is_identity(),
        }
    }

    pub fn domain_radius(&self) -> Option<f64> {
        self.nonlinearity().and_then(|h| h.domain_radius())
    }

    fn check_domain(&self, name: &str, x: &Signal) -> Result<()> {
        if let Some(r) = self.domain_radius() {
            if x.iter().any(|v| v.abs() > r) {
                return Err(Error::DomainViolation(format!(
                    "{name} leaves the declared box [-{r}, {r}]"
                )));
            }
        }
        Ok(())
    }
}

/// Linearisation point `x*` for Jacobian actions.
#[derive(Debug, Clone, Copy)]
pub struct JacobianPoint<'a> {
    point: &'a Signal,
}

impl<'a> JacobianPoint<'a> {
    pub fn new(point: &'a Signal) -> Result<Self> {
        ensure_finite("linearization point", point)?;
        Ok(Self { point })
    }

    pub fn point(&self) -> &Signal {
        self.point
    }
}

/// Noiseless forward map `Φ(x)`.
pub fn forward(model: &MeasurementModel, x: &Signal) -> Result<Signal> {
    ensure_finite("x", x)?;
    ensure_len("x", x, model.input_dim())?;
    model.check_domain("x", x)?;
    let out = match model.variant() {
        ModelVariant::Linear(op) => op.matrix() * x,
        ModelVariant::Composed {
            operator,
            nonlinearity,
        } => {
            if nonlinearity.is_identity() {
                operator.matrix() * x
            } else {
                let warped = x.map(|v| v + nonlinearity.value(v));
                operator.matrix() * warped
            }
        }
    };
    Ok(out)
}

/// Jacobian action `Φ_{x*} v = Φ̄((I + H'(x*)) v)`.
pub fn jacobian_apply(model: &MeasurementModel, at: &JacobianPoint<'_>, v: &Signal) -> Result<Signal> {
    ensure_finite("v", v)?;
    ensure_len("v", v, model.input_dim())?;
    ensure_len("linearization point", at.point(), model.input_dim())?;
    model.check_domain("linearization point", at.point())?;
    let out = match model.variant() {
        ModelVariant::Linear(op) => op.matrix() * v,
        ModelVariant::Composed {
            operator,
            nonlinearity,
        } => {
            if nonlinearity.is_identity() {
                operator.matrix() * v
            } else {
                let scaled = at
                    .point()
                    .zip_map(v, |p, vi| (1.0 + nonlinearity.derivative(p)) * vi);
                operator.matrix() * scaled
            }
        }
    };
    Ok(out)
}

/// Adjoint Jacobian action `Φ_{x*}^* r = (I + H'(x*)) Φ̄ᵀ r`.
pub fn jacobian_adjoint_apply(
    model: &MeasurementModel,
    at: &JacobianPoint<'_>,
    r: &Signal,
) -> Result<Signal> {
    ensure_finite("r", r)?;
    ensure_len("r", r, model.output_dim())?;
    ensure_len("linearization point", at.point(), model.input_dim())?;
    model.check_domain("linearization point", at.point())?;
    let pulled = model.operator().matrix().tr_mul(r);
    let out = match model.variant() {
        ModelVariant::Linear(_) => pulled,
        ModelVariant::Composed { nonlinearity, .. } => {
            if nonlinearity.is_identity() {
                pulled
            } else {
                at.point()
                    .zip_map(&pulled, |p, ti| (1.0 + nonlinearity.derivative(p)) * ti)
            }
        }
    };
    Ok(out)
}

/// `‖Φ(x₁) − Φ(x₂) − Φ_{x₁}(x₁ − x₂)‖₂`, the first-order Taylor error of the
/// map between two points. Exactly zero for affine models.
pub fn linearization_residual(model: &MeasurementModel, x1: &Signal, x2: &Signal) -> Result<f64> {
    ensure_finite("x1", x1)?;
    ensure_finite("x2", x2)?;
    ensure_len("x1", x1, model.input_dim())?;
    ensure_len("x2", x2, model.input_dim())?;
    if model.is_linear() {
        model.check_domain("x1", x1)?;
        model.check_domain("x2", x2)?;
        return Ok(0.0);
    }
    let f1 = forward(model, x1)?;
    let f2 = forward(model, x2)?;
    let at = JacobianPoint::new(x1)?;
    let mapped = jacobian_apply(model, &at, &(x1 - x2))?;
    Ok((f1 - f2 - mapped).norm())
}

/// Largest ∞-norm deviation between forward differences of `forward_map` and
/// the claimed Jacobian columns. `jacobian_column(j)` must return the action
/// on the `j`-th coordinate direction.
pub fn fd_jacobian_deviation<F, J>(
    forward_map: F,
    jacobian_column: J,
    point: &Signal,
    step: f64,
) -> Result<f64>
where
    F: Fn(&Signal) -> Result<Signal>,
    J: Fn(usize) -> Result<Signal>,
{
    if !(1e-8..=1e-3).contains(&step) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step {step} must lie in [1e-8, 1e-3]"
        )));
    }
    ensure_finite("point", point)?;
    let base = forward_map(point)?;
    let mut worst = 0.0f64;
    for j in 0..point.len() {
        let mut shifted = point.clone();
        shifted[j] += step;
        let fd = (forward_map(&shifted)? - &base) / step;
        let deviation = (fd - jacobian_column(j)?).amax();
        worst = worst.max(deviation);
    }
    Ok(worst)
}

/// Check the model's analytic Jacobian against forward differences at `point`.
pub fn fd_jacobian_check(model: &MeasurementModel, point: &Signal, step: f64) -> Result<f64> {
    ensure_len("point", point, model.input_dim())?;
    let at = JacobianPoint::new(point)?;
    let n = model.input_dim();
    fd_jacobian_deviation(
        |x| forward(model, x),
        |j| {
            let mut e = Signal::zeros(n);
            e[j] = 1.0;
            jacobian_apply(model, &at, &e)
        },
        point,
        step,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sig(values: &[f64]) -> Signal {
        DVector::from_column_slice(values)
    }

    fn sine_model(n: usize, scale: f64) -> MeasurementModel {
        MeasurementModel::composed(
            LinearOperator::identity(n),
            ElementwiseNonlinearity::scaled_sine(scale).unwrap(),
        )
        .unwrap()
    }

    fn random_model(m: usize, n: usize, h: ElementwiseNonlinearity, seed: u64) -> MeasurementModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..m * n)
            .map(|_| rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt())
            .collect();
        let op = LinearOperator::new(DMatrix::from_row_slice(m, n, &data)).unwrap();
        match h {
            ElementwiseNonlinearity::Identity => MeasurementModel::linear(op),
            other => MeasurementModel::composed(op, other).unwrap(),
        }
    }

    #[test]
    fn forward_examples() {
        let linear = MeasurementModel::linear(LinearOperator::identity(2));
        assert_eq!(forward(&linear, &sig(&[1.0, 2.0])).unwrap(), sig(&[1.0, 2.0]));

        let model = sine_model(2, 0.1);
        let out = forward(&model, &sig(&[0.0, FRAC_PI_2])).unwrap();
        assert!((out[0] - 0.0).abs() < 1e-15);
        assert!((out[1] - (FRAC_PI_2 + 0.1)).abs() < 1e-15);

        let row = LinearOperator::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        let model =
            MeasurementModel::composed(row, ElementwiseNonlinearity::scaled_sine(0.1).unwrap())
                .unwrap();
        assert_eq!(forward(&model, &sig(&[0.0, 0.0])).unwrap(), sig(&[0.0]));
    }

    #[test]
    fn jacobian_examples() {
        let model = sine_model(2, 0.1);
        let p = sig(&[0.0, FRAC_PI_2]);
        let at = JacobianPoint::new(&p).unwrap();
        let out = jacobian_apply(&model, &at, &sig(&[1.0, 1.0])).unwrap();
        assert!((out[0] - 1.1).abs() < 1e-15);
        assert!((out[1] - 1.0).abs() < 1e-15);

        let p = sig(&[PI, PI]);
        let at = JacobianPoint::new(&p).unwrap();
        let out = jacobian_apply(&model, &at, &sig(&[1.0, 0.0])).unwrap();
        assert!((out[0] - 0.9).abs() < 1e-12);
        assert!(out[1].abs() < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let model = sine_model(2, 0.1);
        let p = sig(&[0.0, 0.0]);
        let at = JacobianPoint::new(&p).unwrap();
        let out = jacobian_adjoint_apply(&model, &at, &sig(&[1.0, 1.0])).unwrap();
        assert!((out[0] - 1.1).abs() < 1e-15);
        assert!((out[1] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn adjoint_identity_holds_on_random_instances() {
        let models = [
            random_model(4, 6, ElementwiseNonlinearity::Identity, 1),
            random_model(4, 6, ElementwiseNonlinearity::scaled_sine(0.3).unwrap(), 2),
            random_model(4, 6, ElementwiseNonlinearity::scaled_tanh(0.4).unwrap(), 3),
            random_model(4, 6, ElementwiseNonlinearity::cubic(0.05, 1.5).unwrap(), 4),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for model in &models {
            for _ in 0..100 {
                let p = Signal::from_fn(6, |_, _| {
                    rng.sample::<f64, _>(StandardNormal) * 0.4
                });
                let v = Signal::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
                let r = Signal::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
                let at = JacobianPoint::new(&p).unwrap();
                let lhs = jacobian_apply(model, &at, &v).unwrap().dot(&r);
                let rhs = v.dot(&jacobian_adjoint_apply(model, &at, &r).unwrap());
                assert!((lhs - rhs).abs() < 1e-10, "adjoint identity violated");
            }
        }
    }

    #[test]
    fn linearization_residual_examples() {
        let linear = random_model(3, 5, ElementwiseNonlinearity::Identity, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = Signal::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = Signal::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
        assert_eq!(linearization_residual(&linear, &a, &b).unwrap(), 0.0);

        let model = sine_model(1, 0.1);
        assert_eq!(
            linearization_residual(&model, &sig(&[0.5]), &sig(&[0.5])).unwrap(),
            0.0
        );
        // |0.1 (sin 0 − sin π) − 0.1 cos(0) · π| = 0.1 π for the scalar map.
        let r = linearization_residual(&model, &sig(&[0.0]), &sig(&[PI])).unwrap();
        assert!((r - 0.1 * PI).abs() < 1e-12);
    }

    #[test]
    fn linearization_residual_is_second_order() {
        let model = random_model(5, 5, ElementwiseNonlinearity::scaled_sine(0.3).unwrap(), 21);
        let x = sig(&[0.3, -0.2, 0.1, 0.4, -0.5]);
        let d = sig(&[1.0, -1.0, 0.5, 0.25, 0.75]).normalize();
        let at_coarse = linearization_residual(&model, &x, &(&x + 1e-2 * &d)).unwrap() / 1e-2;
        let at_fine = linearization_residual(&model, &x, &(&x + 1e-4 * &d)).unwrap() / 1e-4;
        assert!(at_coarse > at_fine * 10.0);
    }

    #[test]
    fn linearization_residual_obeys_derivative_bound() {
        let model = random_model(4, 6, ElementwiseNonlinearity::scaled_sine(0.3).unwrap(), 33);
        let beta = model.operator().operator_norm_squared();
        let m_h = model.derivative_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..1000 {
            let x1 = Signal::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x2 = Signal::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            let res = linearization_residual(&model, &x1, &x2).unwrap();
            let cap = (beta * m_h).sqrt() * (&x1 - &x2).norm();
            assert!(res <= cap + 1e-12);
        }
    }

    #[test]
    fn all_builtins_vanish_at_zero() {
        for h in [
            ElementwiseNonlinearity::Identity,
            ElementwiseNonlinearity::scaled_sine(0.2).unwrap(),
            ElementwiseNonlinearity::scaled_tanh(0.2).unwrap(),
            ElementwiseNonlinearity::cubic(0.05, 1.5).unwrap(),
        ] {
            assert_eq!(h.value(0.0), 0.0);
        }
    }

    #[test]
    fn fd_check_is_tight_for_linear_and_smooth_models() {
        let linear = random_model(4, 6, ElementwiseNonlinearity::Identity, 40);
        let x = sig(&[0.1, -0.3, 0.2, 0.0, 0.4, -0.2]);
        assert!(fd_jacobian_check(&linear, &x, 1e-6).unwrap() < 1e-9);

        let model = sine_model(2, 0.1);
        let x = sig(&[0.3, -0.7]);
        assert!(fd_jacobian_check(&model, &x, 1e-6).unwrap() < 1e-4);
    }

    #[test]
    fn corrupted_jacobian_is_detected() {
        let model = sine_model(3, 0.1);
        let x = sig(&[0.3, -0.7, 0.2]);
        let at = JacobianPoint::new(&x).unwrap();
        let deviation = fd_jacobian_deviation(
            |p| forward(&model, p),
            |j| {
                let mut e = Signal::zeros(3);
                e[j] = 1.0;
                jacobian_apply(&model, &at, &e).map(|col| 1.01 * col)
            },
            &x,
            1e-6,
        )
        .unwrap();
        assert!(deviation > 1e-3);
    }

    #[test]
    fn fd_step_range_is_enforced() {
        let model = sine_model(2, 0.1);
        let x = sig(&[0.0, 0.0]);
        assert!(fd_jacobian_check(&model, &x, 1e-2).is_err());
        assert!(fd_jacobian_check(&model, &x, 1e-9).is_err());
    }

    #[test]
    fn invalid_nonlinearities_are_rejected() {
        assert!(ElementwiseNonlinearity::scaled_sine(1.0).is_err());
        assert!(ElementwiseNonlinearity::scaled_tanh(-0.1).is_err());
        assert!(ElementwiseNonlinearity::cubic(0.2, 1.5).is_err()); // 3·0.2·2.25 > 1
        assert!(ElementwiseNonlinearity::from_kind("cubic", 0.05, None).is_err());
        assert!(ElementwiseNonlinearity::from_kind("nope", 0.0, None).is_err());
    }

    #[test]
    fn cubic_box_is_enforced() {
        let model = MeasurementModel::composed(
            LinearOperator::identity(2),
            ElementwiseNonlinearity::cubic(0.05, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            forward(&model, &sig(&[2.0, 0.0])),
            Err(Error::DomainViolation(_))
        ));
        let inside = sig(&[0.5, -0.5]);
        assert!(forward(&model, &inside).is_ok());
        let p = sig(&[2.0, 0.0]);
        let at = JacobianPoint::new(&p).unwrap();
        assert!(matches!(
            jacobian_apply(&model, &at, &inside),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let model = sine_model(2, 0.1);
        assert!(matches!(
            forward(&model, &sig(&[1.0])),
            Err(Error::InvalidInput(_))
        ));
    }
}
