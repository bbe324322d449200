//! `nlcs` — sparse recovery from nonlinear measurements.
//!
//! Commands: `solve`, `sweep`, `rip`, `bound`, `check-jacobian`,
//! `counterexample`. Exit codes: 0 success, 1 usage or config error,
//! 2 infeasible step size, 3 solver divergence.

mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};

use nlcs_core::analysis::{
    convexity_counterexample, estimate_rip, niht_iteration_report, niht_limit_report,
    pgd_iteration_report,
};
use nlcs_core::constraints::ConstraintSet;
use nlcs_core::harness::{derive_seed, generate_problem, run_sweep_parallel, write_sweep_csv};
use nlcs_core::operators::fd_jacobian_check;
use nlcs_core::report::KvReport;
use nlcs_core::solvers::{admissible_step_niht, admissible_step_pgd, AdmissibleStep};
use nlcs_core::{Error as CoreError, Signal};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(message) => write!(f, "{message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Infeasible(_)) => 2,
            CliError::Core(CoreError::Diverged { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nlcs",
    version,
    about = "Sparse recovery from nonlinear measurements: solvers, constant estimators and sweeps"
)]
struct Cli {
    /// Base seed for all randomness; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one problem instance and run the configured solver.
    Solve,
    /// Run the configured parameter sweep and write aggregate CSV rows.
    Sweep {
        /// Worker threads; cells are independent, output order is fixed.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Estimate restricted-isometry constants of the configured model.
    Rip {
        /// Sample count; defaults to solver.rip_trials from the config.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Evaluate convergence-bound formulas from explicit constants.
    Bound(BoundArgs),
    /// Compare the analytic Jacobian against finite differences.
    CheckJacobian {
        /// Number of random evaluation points.
        #[arg(long, default_value_t = 10)]
        points: usize,
        /// Forward-difference step, within [1e-8, 1e-3].
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
    },
    /// Search for observations making the squared-residual objective
    /// non-convex on a subspace of the constraint set.
    Counterexample {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    formula: BoundFormula,
    /// Which constant family to print for dual-constant reports.
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated per-iteration linearised residual norms.
    #[arg(long, value_delimiter = ',')]
    residual_norms: Option<Vec<f64>>,
    /// Norm of the projected true signal.
    #[arg(long)]
    reference_norm: Option<f64>,
    /// Distance from the true signal to the constraint set.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Linearisation constant C.
    #[arg(long)]
    c: Option<f64>,
    /// Residual norm at the projected truth.
    #[arg(long)]
    residual: Option<f64>,
    #[arg(long)]
    f_opt: Option<f64>,
    #[arg(long)]
    optimum_norm: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundFormula {
    /// Finite-iteration accumulation bound for the measurement solver.
    Niht,
    /// Steady-state bound under a linearisation constant.
    NihtLimit,
    /// Iteration/accuracy bound for the projected gradient solver.
    Pgd,
    /// Admissible step window for the measurement solver.
    StepNiht,
    /// Admissible step window for the projected gradient solver.
    StepPgd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Printed,
    Derived,
    Both,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                0
            } else {
                1
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Solve => cmd_solve(&cli),
        Command::Sweep { jobs } => cmd_sweep(&cli, *jobs),
        Command::Rip { trials } => cmd_rip(&cli, *trials),
        Command::Bound(args) => cmd_bound(&cli, args),
        Command::CheckJacobian { points, step } => cmd_check_jacobian(&cli, *points, *step),
        Command::Counterexample { trials } => cmd_counterexample(&cli, *trials),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command requires --config <path>".into()))?;
    ExperimentConfig::load(path)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_solve(cli: &Cli) -> Result<i32, CliError> {
    let config = load_config(cli)?;
    let spec = config.problem_spec(cli.seed)?;
    let settings = config.trial_settings();
    let outcome = nlcs_core::harness::run_trial(&spec, &settings)?;

    emit(&cli.out, &outcome.record.kv().render())?;
    if settings.record_trace {
        if let (Some(out), Some(trace)) = (&cli.out, &outcome.result.trace) {
            let mut csv = String::from(
                "iteration,objective,iterate_change,active_set,oracle_linearized_residual,oracle_distance\n",
            );
            for record in trace {
                let (oracle_residual, oracle_distance) = match &record.oracle {
                    Some(oracle) => (
                        oracle.linearized_residual_norm.to_string(),
                        oracle.distance_to_reference.to_string(),
                    ),
                    None => ("na".into(), "na".into()),
                };
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    record.iteration,
                    record.objective,
                    record.iterate_change,
                    record.active_set,
                    oracle_residual,
                    oracle_distance
                ));
            }
            let mut trace_path = out.as_os_str().to_owned();
            trace_path.push(".trace.csv");
            std::fs::write(PathBuf::from(trace_path), csv)?;
        }
    }
    eprintln!(
        "solved in {} iterations ({}); wall time {:.3}s",
        outcome.record.iterations, outcome.record.stop_reason, outcome.record.wall_time_s
    );
    Ok(0)
}

fn cmd_sweep(cli: &Cli, jobs: usize) -> Result<i32, CliError> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be >= 1".into()));
    }
    let config = load_config(cli)?;
    let sweep = config.sweep_config(cli.seed)?;
    let rows = run_sweep_parallel(&sweep, jobs)?;
    emit(&cli.out, &write_sweep_csv(&rows))?;
    let skipped = rows.iter().filter(|r| r.skip_reason.is_some()).count();
    eprintln!("swept {} cells ({skipped} skipped)", rows.len());
    Ok(0)
}

fn cmd_rip(cli: &Cli, trials: Option<usize>) -> Result<i32, CliError> {
    let config = load_config(cli)?;
    let spec = config.problem_spec(cli.seed)?;
    let (model, _, _) = generate_problem(&spec)?;
    let set = ConstraintSet::k_sparse(spec.n, spec.k)?;
    let trials = trials.unwrap_or(config.solver.rip_trials);
    let estimate = estimate_rip(&model, &set, trials, derive_seed(spec.seed, u64::MAX, 0))?;
    emit(&cli.out, &estimate.kv().render())?;
    Ok(0)
}

fn cmd_bound(cli: &Cli, args: &BoundArgs) -> Result<i32, CliError> {
    let require = |value: Option<f64>, flag: &str| -> Result<f64, CliError> {
        value.ok_or_else(|| CliError::Usage(format!("--formula requires {flag}")))
    };
    let report = match args.formula {
        BoundFormula::Niht => {
            let norms = args
                .residual_norms
                .clone()
                .ok_or_else(|| CliError::Usage("--formula niht requires --residual-norms".into()))?;
            niht_iteration_report(
                args.alpha,
                require(args.mu, "--mu")?,
                &norms,
                require(args.reference_norm, "--reference-norm")?,
                require(args.delta, "--delta")?,
                args.offset,
            )?
            .kv()
        }
        BoundFormula::NihtLimit => niht_limit_report(
            args.alpha,
            require(args.mu, "--mu")?,
            require(args.c, "--c")?,
            require(args.residual, "--residual")?,
            args.offset,
        )?
        .kv(),
        BoundFormula::Pgd => {
            let report = pgd_iteration_report(
                args.alpha,
                require(args.mu, "--mu")?,
                require(args.f_opt, "--f-opt")?,
                require(args.optimum_norm, "--optimum-norm")?,
                require(args.delta, "--delta")?,
            )?;
            if report.degenerate {
                eprintln!(
                    "warning: contraction factor {} >= 1 - 1e-9; the geometric bound degenerates",
                    report.contraction
                );
            }
            report.kv()
        }
        BoundFormula::StepNiht => step_report(admissible_step_niht(
            args.alpha,
            require(args.beta, "--beta")?,
            args.c.unwrap_or(0.0),
        )?),
        BoundFormula::StepPgd => step_report(admissible_step_pgd(
            args.alpha,
            require(args.beta, "--beta")?,
        )?),
    };
    let filtered = match args.variant {
        VariantArg::Printed => report.filtered(&["derived_"]),
        VariantArg::Derived => report.filtered(&["printed_"]),
        VariantArg::Both => report,
    };
    emit(&cli.out, &filtered.render())?;
    Ok(0)
}

fn step_report(window: AdmissibleStep) -> KvReport {
    let mut report = KvReport::new();
    match window {
        AdmissibleStep::Feasible {
            lower,
            lower_exclusive,
            upper,
        } => {
            report.set("feasible", true);
            report.set("lower", lower);
            report.set("lower_exclusive", lower_exclusive);
            report.set("upper", upper);
        }
        AdmissibleStep::Infeasible => {
            report.set("feasible", false);
        }
    }
    report
}

fn cmd_check_jacobian(cli: &Cli, points: usize, step: f64) -> Result<i32, CliError> {
    if points == 0 {
        return Err(CliError::Usage("--points must be >= 1".into()));
    }
    let config = load_config(cli)?;
    let spec = config.problem_spec(cli.seed)?;
    let (model, _, _) = generate_problem(&spec)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, u64::MAX, 2));
    let mut worst = 0.0f64;
    for _ in 0..points {
        let mut point = Signal::from_iterator(
            spec.n,
            (0..spec.n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) * 0.5),
        );
        if let Some(radius) = model.domain_radius() {
            let peak = point.amax();
            if peak > 0.9 * radius {
                point *= 0.9 * radius / peak;
            }
        }
        worst = worst.max(fd_jacobian_check(&model, &point, step)?);
    }
    let mut report = KvReport::new();
    report.set("max_deviation", worst);
    report.set("points", points);
    report.set("step", step);
    emit(&cli.out, &report.render())?;
    Ok(0)
}

fn cmd_counterexample(cli: &Cli, trials: usize) -> Result<i32, CliError> {
    let config = load_config(cli)?;
    let spec = config.problem_spec(cli.seed)?;
    let (model, _, _) = generate_problem(&spec)?;
    let set = ConstraintSet::k_sparse(spec.n, spec.k)?;
    let witness = convexity_counterexample(&model, &set, trials, spec.seed)?;
    emit(&cli.out, &witness.kv().render())?;
    Ok(0)
}
