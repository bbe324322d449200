//! Experiment config file: nested TOML, validated before any computation.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use nlcs_core::harness::{
    parse_matrix_text, Algorithm, MatrixEnsemble, MuSelection, ProblemSpec, SweepConfig,
    TrialSettings,
};
use nlcs_core::operators::ElementwiseNonlinearity;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub report: ReportSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub matrix: MatrixSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSection {
    /// "gaussian" (default) or "explicit".
    #[serde(default = "default_ensemble")]
    pub ensemble: String,
    /// Path of the plain-text matrix, required for the explicit ensemble.
    /// Relative paths resolve against the config file's directory.
    pub file: Option<PathBuf>,
}

fn default_ensemble() -> String {
    "gaussian".into()
}

impl Default for MatrixSection {
    fn default() -> Self {
        Self {
            ensemble: default_ensemble(),
            file: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub scale: f64,
    pub radius: Option<f64>,
}

fn default_kind() -> String {
    "identity".into()
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            scale: 0.0,
            radius: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// "niht" (default) or "pgd".
    #[serde(default = "default_algorithm")]
    pub algorithm: String,
    /// Either the string "auto" (μ = 1/β̂) or a positive number.
    #[serde(default = "default_mu")]
    pub mu: MuField,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_residual_tolerance")]
    pub residual_tolerance: f64,
    #[serde(default = "default_iterate_change_tolerance")]
    pub iterate_change_tolerance: f64,
    #[serde(default)]
    pub record_trace: bool,
    #[serde(default = "default_rip_trials")]
    pub rip_trials: usize,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
}

fn default_algorithm() -> String {
    "niht".into()
}

fn default_mu() -> MuField {
    MuField::Named("auto".into())
}

fn default_max_iterations() -> usize {
    1000
}

fn default_residual_tolerance() -> f64 {
    1e-8
}

fn default_iterate_change_tolerance() -> f64 {
    1e-10
}

fn default_rip_trials() -> usize {
    500
}

fn default_success_threshold() -> f64 {
    1e-4
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            algorithm: default_algorithm(),
            mu: default_mu(),
            max_iterations: default_max_iterations(),
            residual_tolerance: default_residual_tolerance(),
            iterate_change_tolerance: default_iterate_change_tolerance(),
            record_trace: false,
            rip_trials: default_rip_trials(),
            success_threshold: default_success_threshold(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MuField {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Attach steady-state bound values to solve records.
    #[serde(default)]
    pub bounds: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub m_values: Vec<usize>,
    pub k_values: Vec<usize>,
    #[serde(default = "default_scales")]
    pub h_scales: Vec<f64>,
    pub trials: usize,
}

fn default_scales() -> Vec<f64> {
    vec![0.0]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        // toml errors carry line/column spans.
        let mut config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        config.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        match self.solver.algorithm.as_str() {
            "niht" | "pgd" => {}
            other => {
                return Err(CliError::Usage(format!(
                    "solver.algorithm '{other}' must be niht or pgd"
                )))
            }
        }
        if let MuField::Named(name) = &self.solver.mu {
            if name != "auto" {
                return Err(CliError::Usage(format!(
                    "solver.mu must be a positive number or \"auto\", got \"{name}\""
                )));
            }
        }
        if let MuField::Fixed(mu) = &self.solver.mu {
            if !mu.is_finite() || *mu <= 0.0 {
                return Err(CliError::Usage(format!("solver.mu = {mu} must be > 0")));
            }
        }
        match self.problem.matrix.ensemble.as_str() {
            "gaussian" => {}
            "explicit" => {
                let file = self.problem.matrix.file.as_ref().ok_or_else(|| {
                    CliError::Usage("explicit ensemble needs problem.matrix.file".into())
                })?;
                let resolved = self.resolve(file);
                if !resolved.exists() {
                    return Err(CliError::Usage(format!(
                        "matrix file {} does not exist",
                        resolved.display()
                    )));
                }
            }
            other => {
                return Err(CliError::Usage(format!(
                    "matrix ensemble '{other}' must be gaussian or explicit"
                )))
            }
        }
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn nonlinearity(&self) -> Result<ElementwiseNonlinearity, CliError> {
        let section = &self.problem.nonlinearity;
        Ok(ElementwiseNonlinearity::from_kind(
            &section.kind,
            section.scale,
            section.radius,
        )?)
    }

    /// Build the problem spec; `seed_override` comes from `--seed`.
    pub fn problem_spec(&self, seed_override: Option<u64>) -> Result<ProblemSpec, CliError> {
        let ensemble = match self.problem.matrix.ensemble.as_str() {
            "gaussian" => MatrixEnsemble::Gaussian,
            "explicit" => {
                let file = self.problem.matrix.file.as_ref().expect("validated");
                let resolved = self.resolve(file);
                let text = std::fs::read_to_string(&resolved).map_err(|e| {
                    CliError::Usage(format!("cannot read matrix {}: {e}", resolved.display()))
                })?;
                MatrixEnsemble::Explicit(parse_matrix_text(&text)?)
            }
            _ => unreachable!("validated"),
        };
        let spec = ProblemSpec {
            n: self.problem.n,
            m: self.problem.m,
            k: self.problem.k,
            ensemble,
            nonlinearity: self.nonlinearity()?,
            noise_sigma: self.problem.noise_sigma,
            seed: seed_override.unwrap_or(self.problem.seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn trial_settings(&self) -> TrialSettings {
        let solver = &self.solver;
        TrialSettings {
            algorithm: match solver.algorithm.as_str() {
                "pgd" => Algorithm::Pgd,
                _ => Algorithm::Niht,
            },
            mu: match &solver.mu {
                MuField::Fixed(mu) => MuSelection::Fixed(*mu),
                MuField::Named(_) => MuSelection::Auto,
            },
            max_iterations: solver.max_iterations,
            residual_tolerance: solver.residual_tolerance,
            iterate_change_tolerance: solver.iterate_change_tolerance,
            success_threshold: solver.success_threshold,
            rip_trials: solver.rip_trials,
            record_trace: solver.record_trace,
            with_bound_report: self.report.bounds,
        }
    }

    pub fn sweep_config(&self, seed_override: Option<u64>) -> Result<SweepConfig, CliError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no [sweep] section".into()))?;
        let config = SweepConfig {
            n: self.problem.n,
            m_values: sweep.m_values.clone(),
            k_values: sweep.k_values.clone(),
            h_kind: self.problem.nonlinearity.kind.clone(),
            h_scales: sweep.h_scales.clone(),
            cubic_radius: self.problem.nonlinearity.radius,
            noise_sigma: self.problem.noise_sigma,
            trials_per_cell: sweep.trials,
            base_seed: seed_override.unwrap_or(self.problem.seed),
            success_threshold: self.solver.success_threshold,
            rip_trials: self.solver.rip_trials,
            max_iterations: self.solver.max_iterations,
            residual_tolerance: self.solver.residual_tolerance,
            iterate_change_tolerance: self.solver.iterate_change_tolerance,
            mu: match &self.solver.mu {
                MuField::Fixed(mu) => Some(*mu),
                MuField::Named(_) => None,
            },
        };
        config.validate()?;
        Ok(config)
    }
}
