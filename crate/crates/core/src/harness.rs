//! Problem generation, single-trial execution, parameter sweeps and
//! persistence.
//!
//! Everything here is deterministic in the seed: the problem generator draws
//! matrix, support, coefficients and noise from one stream in a fixed order,
//! and sweep trials derive their seeds as a hash of `(base_seed, cell,
//! trial)` so any cell can be replayed in isolation.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use itertools::Itertools;

use crate::analysis::{
    binomial, estimate_linearization_constant, estimate_rip, niht_limit_report,
    LinearizationEstimate, NihtLimitReport, RipEstimate,
};
use crate::constraints::{distance_to_set, ConstraintSet};
use crate::error::{Error, Result};
use crate::operators::{forward, ElementwiseNonlinearity, LinearOperator, MeasurementModel};
use crate::report::KvReport;
use crate::signal::{ensure_len, Signal};
use crate::solvers::{
    admissible_step_niht, admissible_step_pgd, niht_solve, pgd_solve, ModelResidualObjective,
    RecoveryResult, SolverConfig, StopReason,
};

/// Exact CSV schema of sweep aggregates.
pub const SWEEP_CSV_HEADER: &str = "cell_id,N,M,k,h_kind,h_scale,noise_sigma,trials,success_rate,mean_rel_err,mean_iters,mu_used,alpha_hat,beta_hat,C_hat,skip_reason";

#[derive(Debug, Clone)]
pub enum MatrixEnsemble {
    /// i.i.d. Gaussian entries scaled by `1/sqrt(M)`, so restricted-isometry
    /// quotients concentrate near one at desk scale.
    Gaussian,
    /// A fixed measurement matrix, e.g. loaded from a text file.
    Explicit(DMatrix<f64>),
}

/// Everything needed to generate one reproducible problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub ensemble: MatrixEnsemble,
    pub nonlinearity: ElementwiseNonlinearity,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidInput("N and M must be >= 1".into()));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::InvalidInput(format!(
                "sparsity k={} must satisfy 1 <= k <= {}",
                self.k, self.n
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidInput("noise sigma must be >= 0".into()));
        }
        if let MatrixEnsemble::Explicit(matrix) = &self.ensemble {
            if matrix.nrows() != self.m || matrix.ncols() != self.n {
                return Err(Error::InvalidInput(format!(
                    "explicit matrix is {}x{}, spec says {}x{}",
                    matrix.nrows(),
                    matrix.ncols(),
                    self.m,
                    self.n
                )));
            }
        }
        self.nonlinearity.validate()?;
        if let Some(radius) = self.nonlinearity.domain_radius() {
            // Generated signals have unit norm, so entries stay in [-1, 1].
            if radius < 1.0 {
                return Err(Error::InvalidInput(
                    "cubic domain radius must be >= 1 for generated problems".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Draw `(model, x0, y)` deterministically from the spec's seed.
///
/// `x0` is exactly k-sparse with unit Euclidean norm; `y = Φ(x0) + σ·e` with
/// `e` standard normal. The noise vector is drawn as a unit-variance sample
/// and scaled afterwards, so doubling `noise_sigma` under the same seed
/// doubles the realised error exactly.
pub fn generate_problem(spec: &ProblemSpec) -> Result<(MeasurementModel, Signal, Signal)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let matrix = match &spec.ensemble {
        MatrixEnsemble::Gaussian => gaussian_matrix(spec.m, spec.n, &mut rng),
        MatrixEnsemble::Explicit(matrix) => matrix.clone(),
    };
    let operator = LinearOperator::new(matrix)?;
    let model = match spec.nonlinearity {
        ElementwiseNonlinearity::Identity => MeasurementModel::linear(operator),
        h => MeasurementModel::composed(operator, h)?,
    }
    .with_noise_sigma(spec.noise_sigma)?;

    let mut support = rand::seq::index::sample(&mut rng, spec.n, spec.k).into_vec();
    support.sort_unstable();
    let mut x0 = Signal::zeros(spec.n);
    loop {
        for &i in &support {
            x0[i] = rng.sample(StandardNormal);
        }
        let norm = x0.norm();
        if norm > 0.0 {
            x0 /= norm;
            break;
        }
    }

    let unit_noise = Signal::from_iterator(spec.m, (0..spec.m).map(|_| rng.sample(StandardNormal)));
    let y = forward(&model, &x0)? + spec.noise_sigma * unit_noise;
    Ok((model, x0, y))
}

/// i.i.d. N(0, 1/M) entries in row-major draw order.
pub fn gaussian_matrix(m: usize, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let scale = 1.0 / (m as f64).sqrt();
    let data: Vec<f64> = (0..m * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    DMatrix::from_row_slice(m, n, &data)
}

/// Global best k-sparse fit by support enumeration.
///
/// Every support of size `k` is solved as a restricted least-squares problem:
/// closed form for linear models, damped Gauss-Newton (at most 50 iterations,
/// step halving on increase, initialised at the restricted linear solution)
/// otherwise. Budgeted at 10⁵ supports. Ties keep the lexicographically
/// first support.
pub fn exhaustive_oracle(y: &Signal, model: &MeasurementModel, k: usize) -> Result<Signal> {
    ensure_len("y", y, model.output_dim())?;
    let n = model.input_dim();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "sparsity k={k} must satisfy 1 <= k <= {n}"
        )));
    }
    let count = binomial(n, k);
    if count > 100_000.0 {
        return Err(Error::InvalidInput(format!(
            "support enumeration budget exceeded: C({n},{k}) = {count:.3e} > 1e5"
        )));
    }
    let mut best: Option<(f64, Signal)> = None;
    for support in (0..n).combinations(k) {
        let x = restricted_fit(y, model, &support)?;
        let residual = match forward(model, &x) {
            Ok(out) => (y - out).norm_squared(),
            Err(Error::DomainViolation(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, x));
        }
    }
    Ok(best.expect("at least one support").1)
}

fn embed(n: usize, support: &[usize], coefficients: &Signal) -> Signal {
    let mut x = Signal::zeros(n);
    for (j, &i) in support.iter().enumerate() {
        x[i] = coefficients[j];
    }
    x
}

fn least_squares(matrix: &DMatrix<f64>, rhs: &Signal) -> Result<Signal> {
    matrix
        .clone()
        .svd(true, true)
        .solve(rhs, 1e-12)
        .map(|solution| solution.column(0).into_owned())
        .map_err(|e| Error::InvalidInput(format!("least-squares solve failed: {e}")))
}

fn restricted_fit(y: &Signal, model: &MeasurementModel, support: &[usize]) -> Result<Signal> {
    let n = model.input_dim();
    let submatrix = model.operator().matrix().select_columns(support.iter());
    let mut coefficients = least_squares(&submatrix, y)?;
    if model.is_linear() {
        return Ok(embed(n, support, &coefficients));
    }
    let nonlinearity = *model.nonlinearity().expect("composed model");

    let squared_residual = |c: &Signal| -> Result<f64> {
        let x = embed(n, support, c);
        match forward(model, &x) {
            Ok(out) => Ok((y - out).norm_squared()),
            Err(Error::DomainViolation(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let mut best = squared_residual(&coefficients)?;
    for _ in 0..50 {
        let x = embed(n, support, &coefficients);
        let residual = match forward(model, &x) {
            Ok(out) => y - out,
            Err(Error::DomainViolation(_)) => break,
            Err(e) => return Err(e),
        };
        // Restricted Jacobian: column j is (1 + h'(x_{s_j})) times the
        // corresponding column of the linear part.
        let mut jacobian = submatrix.clone();
        for (j, &i) in support.iter().enumerate() {
            let factor = 1.0 + nonlinearity.derivative(x[i]);
            jacobian.column_mut(j).scale_mut(factor);
        }
        let step = least_squares(&jacobian, &residual)?;

        let mut improved = false;
        let mut scale = 1.0;
        for _ in 0..30 {
            let candidate = &coefficients + scale * &step;
            let value = squared_residual(&candidate)?;
            if value < best {
                coefficients = candidate;
                best = value;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved || best <= 1e-28 {
            break;
        }
    }
    Ok(embed(n, support, &coefficients))
}

/// Deterministic seed derivation for sweep cells and trials (SplitMix64
/// chain). Estimation sub-streams use trial indices past the trial count.
pub fn derive_seed(base: u64, cell: u64, trial: u64) -> u64 {
    let mut state = splitmix64(base);
    state = splitmix64(state ^ cell.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(state ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which solver a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Niht,
    Pgd,
}

/// Step-size selection for a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSelection {
    /// `μ = 1/β̂`: the largest step satisfying `β ≤ 1/μ`.
    Auto,
    /// A fixed step, gated by the full admissibility window.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct TrialSettings {
    pub algorithm: Algorithm,
    pub mu: MuSelection,
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub iterate_change_tolerance: f64,
    /// Relative error below this counts as success.
    pub success_threshold: f64,
    /// Sample count for the per-trial constant estimates.
    pub rip_trials: usize,
    pub record_trace: bool,
    pub with_bound_report: bool,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Niht,
            mu: MuSelection::Auto,
            max_iterations: 1000,
            residual_tolerance: 1e-8,
            iterate_change_tolerance: 1e-10,
            success_threshold: 1e-4,
            rip_trials: 500,
            record_trace: false,
            with_bound_report: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub h_kind: String,
    pub h_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub mu_used: f64,
    pub recovery_error: f64,
    pub relative_error: f64,
    pub success: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Wall time of the solve; excluded from serialised records so reruns
    /// stay byte-identical.
    pub wall_time_s: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub c_hat: f64,
    pub bound_report: Option<NihtLimitReport>,
}

impl TrialRecord {
    pub fn kv(&self) -> KvReport {
        let mut r = KvReport::new();
        r.set("n", self.n);
        r.set("m", self.m);
        r.set("k", self.k);
        r.set("h_kind", &self.h_kind);
        r.set("h_scale", self.h_scale);
        r.set("noise_sigma", self.noise_sigma);
        r.set("seed", self.seed);
        r.set("mu_used", self.mu_used);
        r.set("recovery_error", self.recovery_error);
        r.set("relative_error", self.relative_error);
        r.set("success", self.success);
        r.set("iterations", self.iterations);
        r.set("stop_reason", self.stop_reason);
        r.set("alpha_hat", self.alpha_hat);
        r.set("beta_hat", self.beta_hat);
        r.set("c_hat", self.c_hat);
        if let Some(report) = &self.bound_report {
            for (key, value) in report.kv().pairs() {
                r.set(&format!("bound_{key}"), value);
            }
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub result: RecoveryResult,
    pub rip: RipEstimate,
    pub linearization: LinearizationEstimate,
}

/// Generate a problem, estimate constants, resolve the step size and solve.
///
/// An explicit `mu` is rejected (`Error::Infeasible`) when it falls outside
/// the admissible window computed from the estimates; `Auto` always runs
/// with `μ = 1/β̂`.
pub fn run_trial(spec: &ProblemSpec, settings: &TrialSettings) -> Result<TrialOutcome> {
    let (model, x0, y) = generate_problem(spec)?;
    let set = ConstraintSet::k_sparse(spec.n, spec.k)?;
    let rip = estimate_rip(
        &model,
        &set,
        settings.rip_trials,
        derive_seed(spec.seed, u64::MAX, 0),
    )?;
    let linearization = estimate_linearization_constant(
        &model,
        &set,
        settings.rip_trials,
        derive_seed(spec.seed, u64::MAX, 1),
    )?;

    let mu = resolve_mu(
        settings.algorithm,
        settings.mu,
        rip.alpha_hat,
        rip.beta_hat,
        linearization.c_hat,
    )?;

    let mut cfg = SolverConfig::new(mu);
    cfg.max_iterations = settings.max_iterations;
    cfg.residual_tolerance = settings.residual_tolerance;
    cfg.iterate_change_tolerance = settings.iterate_change_tolerance;
    cfg.record_trace = settings.record_trace;

    let started = Instant::now();
    let result = match settings.algorithm {
        Algorithm::Niht => niht_solve(&y, &model, &set, &cfg, Some(&x0))?,
        Algorithm::Pgd => {
            let objective = ModelResidualObjective::new(model.clone(), y.clone())?;
            pgd_solve(&objective, &set, &cfg)?
        }
    };
    let wall_time_s = started.elapsed().as_secs_f64();

    let recovery_error = (&result.estimate - &x0).norm();
    let relative_error = recovery_error / x0.norm();
    let success = relative_error < settings.success_threshold;

    let bound_report = if settings.with_bound_report {
        let residual_at_reference = (&y - forward(&model, &x0)?).norm();
        let offset = distance_to_set(&x0, &set)?;
        Some(niht_limit_report(
            rip.alpha_hat,
            mu,
            linearization.c_hat,
            residual_at_reference,
            offset,
        )?)
    } else {
        None
    };

    let record = TrialRecord {
        n: spec.n,
        m: spec.m,
        k: spec.k,
        h_kind: spec.nonlinearity.kind_name().to_string(),
        h_scale: spec.nonlinearity.scale(),
        noise_sigma: spec.noise_sigma,
        seed: spec.seed,
        mu_used: mu,
        recovery_error,
        relative_error,
        success,
        iterations: result.iterations_run,
        stop_reason: result.stop_reason,
        wall_time_s,
        alpha_hat: rip.alpha_hat,
        beta_hat: rip.beta_hat,
        c_hat: linearization.c_hat,
        bound_report,
    };
    Ok(TrialOutcome {
        record,
        result,
        rip,
        linearization,
    })
}

fn resolve_mu(
    algorithm: Algorithm,
    selection: MuSelection,
    alpha_hat: f64,
    beta_hat: f64,
    c_hat: f64,
) -> Result<f64> {
    match selection {
        MuSelection::Auto => Ok(1.0 / beta_hat),
        MuSelection::Fixed(mu) => {
            let window = match algorithm {
                Algorithm::Niht => admissible_step_niht(alpha_hat, beta_hat, c_hat)?,
                Algorithm::Pgd => admissible_step_pgd(alpha_hat, beta_hat)?,
            };
            if window.contains(mu) {
                Ok(mu)
            } else {
                let condition = match algorithm {
                    Algorithm::Niht => "beta <= 1/mu < 1.5*alpha - 4*C",
                    Algorithm::Pgd => "beta <= 1/mu <= (4/3)*alpha",
                };
                Err(Error::Infeasible(format!(
                    "mu={mu} violates {condition} with alpha_hat={alpha_hat}, beta_hat={beta_hat}, C_hat={c_hat}"
                )))
            }
        }
    }
}

/// Grid description for a sweep over `(M, k, nonlinearity scale)`.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub m_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub h_kind: String,
    pub h_scales: Vec<f64>,
    pub cubic_radius: Option<f64>,
    pub noise_sigma: f64,
    pub trials_per_cell: usize,
    pub base_seed: u64,
    pub success_threshold: f64,
    pub rip_trials: usize,
    pub max_iterations: usize,
    pub residual_tolerance: f64,
    pub iterate_change_tolerance: f64,
    /// `None` selects `μ = 1/β̂` per cell.
    pub mu: Option<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() || self.k_values.is_empty() || self.h_scales.is_empty() {
            return Err(Error::InvalidInput("sweep grid must be non-empty".into()));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::InvalidInput("trials_per_cell must be >= 1".into()));
        }
        Ok(())
    }

    /// Cells in deterministic order: M outermost, then k, then scale.
    pub fn cells(&self) -> Vec<(usize, usize, f64)> {
        let mut cells = Vec::new();
        for &m in &self.m_values {
            for &k in &self.k_values {
                for &scale in &self.h_scales {
                    cells.push((m, k, scale));
                }
            }
        }
        cells
    }
}

/// Per-cell aggregate row. Mean fields are NaN on skipped cells.
#[derive(Debug, Clone)]
pub struct CellAggregate {
    pub cell_id: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub h_kind: String,
    pub h_scale: f64,
    pub noise_sigma: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_rel_err: f64,
    pub mean_iters: f64,
    pub mu_used: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub c_hat: f64,
    pub skip_reason: Option<String>,
}

impl CellAggregate {
    pub fn csv_row(&self) -> String {
        let reason = self
            .skip_reason
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n'], ";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.cell_id,
            self.n,
            self.m,
            self.k,
            self.h_kind,
            self.h_scale,
            self.noise_sigma,
            self.trials,
            self.success_rate,
            self.mean_rel_err,
            self.mean_iters,
            self.mu_used,
            self.alpha_hat,
            self.beta_hat,
            self.c_hat,
            reason
        )
    }
}

pub fn write_sweep_csv(rows: &[CellAggregate]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

/// Run one cell: constants are estimated once on the cell's first trial
/// model, the step size is resolved from them, and every trial of the cell
/// runs with that step. A diverged trial counts as a failed trial with
/// infinite error rather than aborting the cell.
pub fn run_sweep_cell(config: &SweepConfig, cell_id: usize) -> Result<CellAggregate> {
    config.validate()?;
    let cells = config.cells();
    let (m, k, scale) = *cells.get(cell_id).ok_or_else(|| {
        Error::InvalidInput(format!("cell {cell_id} out of range ({})", cells.len()))
    })?;
    let nonlinearity =
        ElementwiseNonlinearity::from_kind(&config.h_kind, scale, config.cubic_radius)?;
    let spec_for = |trial: u64| ProblemSpec {
        n: config.n,
        m,
        k,
        ensemble: MatrixEnsemble::Gaussian,
        nonlinearity,
        noise_sigma: config.noise_sigma,
        seed: derive_seed(config.base_seed, cell_id as u64, trial),
    };

    let (model0, _, _) = generate_problem(&spec_for(0))?;
    let set = ConstraintSet::k_sparse(config.n, k)?;
    let trials = config.trials_per_cell;
    let rip = estimate_rip(
        &model0,
        &set,
        config.rip_trials,
        derive_seed(config.base_seed, cell_id as u64, trials as u64),
    )?;
    let linearization = estimate_linearization_constant(
        &model0,
        &set,
        config.rip_trials,
        derive_seed(config.base_seed, cell_id as u64, trials as u64 + 1),
    )?;

    let mut aggregate = CellAggregate {
        cell_id,
        n: config.n,
        m,
        k,
        h_kind: nonlinearity.kind_name().to_string(),
        h_scale: scale,
        noise_sigma: config.noise_sigma,
        trials,
        success_rate: f64::NAN,
        mean_rel_err: f64::NAN,
        mean_iters: f64::NAN,
        mu_used: f64::NAN,
        alpha_hat: rip.alpha_hat,
        beta_hat: rip.beta_hat,
        c_hat: linearization.c_hat,
        skip_reason: None,
    };

    let selection = match config.mu {
        Some(mu) => MuSelection::Fixed(mu),
        None => MuSelection::Auto,
    };
    let mu = match resolve_mu(
        Algorithm::Niht,
        selection,
        rip.alpha_hat,
        rip.beta_hat,
        linearization.c_hat,
    ) {
        Ok(mu) => mu,
        Err(Error::Infeasible(reason)) => {
            aggregate.mu_used = config.mu.unwrap_or(f64::NAN);
            aggregate.skip_reason = Some(reason);
            return Ok(aggregate);
        }
        Err(e) => return Err(e),
    };

    let mut cfg = SolverConfig::new(mu);
    cfg.max_iterations = config.max_iterations;
    cfg.residual_tolerance = config.residual_tolerance;
    cfg.iterate_change_tolerance = config.iterate_change_tolerance;

    let mut successes = 0usize;
    let mut error_sum = 0.0;
    let mut iteration_sum = 0usize;
    for trial in 0..trials {
        let spec = spec_for(trial as u64);
        let (model, x0, y) = generate_problem(&spec)?;
        match niht_solve(&y, &model, &set, &cfg, None) {
            Ok(result) => {
                let relative_error = (&result.estimate - &x0).norm() / x0.norm();
                if relative_error < config.success_threshold {
                    successes += 1;
                }
                error_sum += relative_error;
                iteration_sum += result.iterations_run;
            }
            Err(Error::Diverged { iteration, .. }) => {
                error_sum += f64::INFINITY;
                iteration_sum += iteration;
            }
            Err(e) => return Err(e),
        }
    }
    aggregate.mu_used = mu;
    aggregate.success_rate = successes as f64 / trials as f64;
    aggregate.mean_rel_err = error_sum / trials as f64;
    aggregate.mean_iters = iteration_sum as f64 / trials as f64;
    Ok(aggregate)
}

/// Run a whole sweep sequentially; rows come back in cell order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<CellAggregate>> {
    config.validate()?;
    (0..config.cells().len())
        .map(|cell_id| run_sweep_cell(config, cell_id))
        .collect()
}

/// Run a sweep across `jobs` worker threads. Cells are independent and
/// seeded individually, so the result table is identical to the sequential
/// one regardless of scheduling.
pub fn run_sweep_parallel(config: &SweepConfig, jobs: usize) -> Result<Vec<CellAggregate>> {
    config.validate()?;
    let cell_count = config.cells().len();
    if jobs <= 1 || cell_count <= 1 {
        return run_sweep(config);
    }
    let jobs = jobs.min(cell_count);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<CellAggregate>>>> =
        (0..cell_count).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let cell_id = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if cell_id >= cell_count {
                    break;
                }
                let outcome = run_sweep_cell(config, cell_id);
                *results[cell_id].lock().unwrap() = Some(outcome);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every cell visited"))
        .collect()
}

/// Parse the plain-text matrix format: first line `M N`, then M rows of N
/// space-separated decimals. Blank lines are ignored.
pub fn parse_matrix_text(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty());
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("matrix file is empty".into()))?;
    let mut parts = header.split_whitespace();
    let m: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad_line(header_no, "expected 'M N' header"))?;
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad_line(header_no, "expected 'M N' header"))?;
    if parts.next().is_some() {
        return Err(bad_line(header_no, "header must contain exactly 'M N'"));
    }
    if m == 0 || n == 0 {
        return Err(bad_line(header_no, "M and N must be >= 1"));
    }
    let mut data = Vec::with_capacity(m * n);
    let mut rows = 0usize;
    for (line_no, line) in lines {
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad_line(line_no, "expected decimal entries"))?;
        if values.len() != n {
            return Err(bad_line(
                line_no,
                &format!("expected {n} entries, found {}", values.len()),
            ));
        }
        data.extend_from_slice(&values);
        rows += 1;
        if rows > m {
            return Err(bad_line(line_no, "more rows than the header declares"));
        }
    }
    if rows != m {
        return Err(Error::InvalidInput(format!(
            "matrix file declares {m} rows but contains {rows}"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "matrix contains a non-finite entry".into(),
        ));
    }
    Ok(DMatrix::from_row_slice(m, n, &data))
}

fn bad_line(line_index: usize, message: &str) -> Error {
    Error::InvalidInput(format!("line {}: {message}", line_index + 1))
}
