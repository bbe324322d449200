//! Shared instance builders for the benchmark targets.

use nlcs_core::harness::{generate_problem, MatrixEnsemble, ProblemSpec};
use nlcs_core::operators::{ElementwiseNonlinearity, MeasurementModel};
use nlcs_core::Signal;

/// A mid-sized nonlinear recovery instance.
pub fn sine_instance(n: usize, m: usize, k: usize, seed: u64) -> (MeasurementModel, Signal, Signal) {
    let spec = ProblemSpec {
        n,
        m,
        k,
        ensemble: MatrixEnsemble::Gaussian,
        nonlinearity: ElementwiseNonlinearity::scaled_sine(0.05).expect("valid scale"),
        noise_sigma: 0.0,
        seed,
    };
    generate_problem(&spec).expect("valid spec")
}
