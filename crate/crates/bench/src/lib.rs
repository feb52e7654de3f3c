//! Benchmark fixtures shared by the criterion targets.

use std::sync::Arc;

use borp_core::field::{Componentwise, Profile};
use borp_core::lift::{lift_scalar, ScalarLift};
use borp_core::path_gen::{simulate_bm, DriverSpec};
use borp_core::{RdeProblem, RegularityParams, SampledPath};

pub fn brownian(dim: usize, n_steps: usize, seed: u64) -> SampledPath {
    simulate_bm(&DriverSpec::brownian(dim, 1.0, n_steps, seed)).expect("valid spec")
}

/// `dY = sin(Y) ∘ dW`, `Y_0 = π/2`.
pub fn sine_problem(n_steps: usize, seed: u64) -> RdeProblem {
    let rp = lift_scalar(&brownian(1, n_steps, seed), ScalarLift::Stratonovich).expect("scalar lift");
    let params = RegularityParams::new(0.45, 2.0, f64::INFINITY).expect("valid params");
    RdeProblem::new(rp, Arc::new(Componentwise::scalar(Profile::Sin)), vec![std::f64::consts::FRAC_PI_2], params)
        .expect("valid problem")
}
