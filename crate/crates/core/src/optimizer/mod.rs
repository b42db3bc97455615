//! Outage-constrained power allocation.

mod geometric;
mod objective;
mod search;

pub use geometric::{geometric_allocation, ratio_variation, recursion_residuals, GeometricAllocation, SHOOTING_TOL};
pub use objective::{solve_last_round_power, HarqScheme, LastRoundPower, Objective};
pub use search::{monotonicity_report, optimize, MonotonicityReport, OptimizationResult, OptimizerConfig, ORDER_TOL};

use crate::error::Result;
use crate::policy::PowerPolicy;
use crate::{to_db, Real};

/// Power saving of the optimized long-term allocation over the uniform
/// short-term baseline, in dB.
pub fn power_efficiency<T: Real>(objective: &Objective<T>, config: &OptimizerConfig<T>) -> Result<T> {
    let result = optimize(objective, config)?;
    power_efficiency_of(objective, &result)
}

/// [`power_efficiency`] for an already optimized result.
pub fn power_efficiency_of<T: Real>(objective: &Objective<T>, result: &OptimizationResult<T>) -> Result<T> {
    if objective.rounds() == 1 {
        // Single round: the constraint fixes the only feasible point.
        return Ok(T::zero());
    }
    Ok(to_db(objective.baseline_power()?) - to_db(result.objective()))
}

/// Relative throughput loss `(eta_uniform - eta_opt) / eta_opt` in percent,
/// where the uniform policy spends the same average power as the optimum.
pub fn relative_throughput_loss<T: Real>(objective: &Objective<T>, config: &OptimizerConfig<T>) -> Result<T> {
    let result = optimize(objective, config)?;
    relative_throughput_loss_of(objective, &result)
}

pub fn relative_throughput_loss_of<T: Real>(objective: &Objective<T>, result: &OptimizationResult<T>) -> Result<T> {
    let uniform = PowerPolicy::uniform(result.objective(), objective.rounds())?;
    let eta_uniform = objective.evaluate(&uniform)?.throughput;
    let eta_opt = result.achieved.throughput;
    Ok((eta_uniform - eta_opt) / eta_opt * T::lit(100.0))
}
