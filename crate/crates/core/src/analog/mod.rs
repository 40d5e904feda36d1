//! Beampattern evaluation, mismatch objective, the relaxed analog step and
//! the alternating digital/analog loop.

mod alternating;
mod beampattern;
pub mod sdp;
mod simplex;
mod system;
mod weights;

pub use alternating::{alternating_optimize, AlternatingOutcome, StopReason};
pub use beampattern::{
    beampattern_from_table, desired_pattern, mismatch_error, steering_table, transmit_beampattern, uniform_angles,
    BeampatternGrid,
};
pub use simplex::project_to_simplex;
pub use system::{HybridSystem, PairEvaluation, SystemParts};
pub use weights::{optimize_analog_weights, AnalogStep};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig<T = f64> {
    /// Stop once the mismatch decreases by less than this.
    pub epsilon: T,
    pub max_iterations: usize,
    /// Gaussian draws per analog step.
    pub randomization_count: usize,
    /// Default per-user floor in bit/s/Hz.
    pub capacity_floor: T,
    pub noise_power: T,
    pub sdr_solver_tolerance: T,
    pub max_solver_iterations: usize,
    /// Projected-gradient steps after candidate selection; 0 disables.
    pub polish_iterations: usize,
    pub seed: u64,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: T::lit(1e-4),
            max_iterations: 50,
            randomization_count: 100,
            capacity_floor: T::one(),
            noise_power: T::lit(1e-13),
            sdr_solver_tolerance: T::lit(1e-6),
            max_solver_iterations: 200,
            polish_iterations: 200,
            seed: 0,
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.max_iterations == 0 || self.randomization_count == 0 || self.max_solver_iterations == 0 {
            return Err(Error::invalid("iteration and draw counts must be >= 1"));
        }
        if !(self.capacity_floor >= T::zero()) || !self.capacity_floor.is_finite() {
            return Err(Error::invalid("capacity floor must be finite and >= 0"));
        }
        if !(self.noise_power > T::zero()) || !self.noise_power.is_finite() {
            return Err(Error::invalid("noise power must be positive"));
        }
        if !(self.sdr_solver_tolerance > T::zero()) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        Ok(())
    }
}

/// One row of the convergence trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry<T = f64> {
    /// 0 is the equal-weight starting point.
    pub iteration: usize,
    pub mse: T,
    pub alpha: T,
    /// `None` without users.
    pub min_capacity: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MismatchReport<T = f64> {
    pub alpha: T,
    pub mse: T,
    pub trace: Vec<TraceEntry<T>>,
}

impl<T: Real> MismatchReport<T> {
    /// `iteration,mse,alpha,min_capacity`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mse,alpha,min_capacity\n");
        for e in &self.trace {
            let cap = e.min_capacity.map_or_else(String::new, |c| c.to_string());
            out.push_str(&format!("{},{},{},{}\n", e.iteration, e.mse, e.alpha, cap));
        }
        out
    }
}
