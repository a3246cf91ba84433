//! Cost model: internal execution cost, external outsourcing cost, dynamic
//! pricing and EWMA cost calibration.
//!
//! Units: task work in FLOP counts, hardware throughput in FLOPS, execution
//! time in hours inside cost formulas, latency quantities in seconds, data
//! in bytes, money in currency units.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::model::{
    AgentId, ContractorProfile, CostBreakdown, HardwareSpec, MarketState, Task, TaskType,
};

/// Prices never fall below this fraction of the contractor's base price,
/// however oversupplied the market gets.
pub const PRICE_FLOOR_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },
    #[error("task needs {required_bytes} bytes but only {available_bytes} are available locally")]
    InfeasibleLocal {
        required_bytes: f64,
        available_bytes: f64,
    },
    #[error("market total supply must be > 0")]
    ZeroSupply,
    #[error("actual cost must be >= 0, got {actual}")]
    NegativeActual { actual: f64 },
}

/// Execution time of a task on the given hardware, in hours.
pub fn exec_hours(flops_required: f64, peak_flops: f64) -> f64 {
    flops_required / peak_flops / 3600.0
}

/// Compute cost: utilization-hours times the hourly hardware rate.
pub fn compute_cost(task: &Task, hw: &HardwareSpec) -> Result<f64, CostError> {
    if !task.flops_required.is_finite() {
        return Err(CostError::NonFinite {
            what: "flops_required",
        });
    }
    if !hw.peak_flops.is_finite() || !hw.hw_cost_per_hour.is_finite() {
        return Err(CostError::NonFinite {
            what: "hardware spec",
        });
    }
    Ok(exec_hours(task.flops_required, hw.peak_flops) * hw.hw_cost_per_hour)
}

/// Memory cost: occupied fraction of total memory, held for the execution
/// time, at the hourly memory rate. Fails when the task cannot fit at all.
pub fn memory_cost(
    footprint: &crate::model::MemoryFootprint,
    hw: &HardwareSpec,
    t_exec_hours: f64,
) -> Result<f64, CostError> {
    let demand = footprint.total_bytes();
    if !demand.is_finite() || !t_exec_hours.is_finite() {
        return Err(CostError::NonFinite {
            what: "memory demand",
        });
    }
    if demand > hw.mem_total_bytes {
        return Err(CostError::InfeasibleLocal {
            required_bytes: demand,
            available_bytes: hw.mem_total_bytes,
        });
    }
    Ok((demand / hw.mem_total_bytes) * t_exec_hours * hw.mem_cost_per_hour)
}

/// Energy cost: TDP kilowatts at the utilization factor for the execution
/// time, at the electricity price.
pub fn energy_cost(hw: &HardwareSpec, t_exec_hours: f64) -> f64 {
    (hw.tdp_watts / 1000.0) * hw.utilization_factor * t_exec_hours * hw.kwh_cost
}

/// A pending task competing for the same executor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueuedWork {
    pub value: f64,
    pub exec_hours: f64,
}

/// Opportunity cost: best displaced value rate in the queue, for the
/// execution time. Empty queue costs nothing.
pub fn opportunity_cost(queue: &[QueuedWork], t_exec_hours: f64) -> f64 {
    queue
        .iter()
        .map(|q| q.value / q.exec_hours)
        .fold(0.0, f64::max)
        * t_exec_hours
}

/// Full internal cost breakdown for executing `task` locally.
pub fn internal_cost(
    task: &Task,
    hw: &HardwareSpec,
    queue: &[QueuedWork],
) -> Result<CostBreakdown, CostError> {
    let t = exec_hours(task.flops_required, hw.peak_flops);
    let compute = compute_cost(task, hw)?;
    let memory = memory_cost(&task.memory, hw, t)?;
    let energy = energy_cost(hw, t);
    let opportunity = opportunity_cost(queue, t);
    let depreciation = hw.depreciation_per_hour * t;
    Ok(CostBreakdown::internal(
        compute,
        memory,
        energy,
        opportunity,
        depreciation,
    ))
}

/// Supply/demand-driven price quote for a task, floored at
/// [`PRICE_FLOOR_FRACTION`] of the base price.
pub fn dynamic_price(
    contractor: &ContractorProfile,
    task: &Task,
    market: &MarketState,
) -> Result<f64, CostError> {
    if !(market.total_supply > 0.0) {
        return Err(CostError::ZeroSupply);
    }
    let pressure = (market.current_demand - market.available_supply) / market.total_supply;
    let raw = contractor.base_price
        * (1.0 + contractor.demand_sensitivity * pressure)
        * task.complexity_multiplier;
    Ok(raw.max(PRICE_FLOOR_FRACTION * contractor.base_price))
}

/// Transfer cost for the task's payloads plus the flat protocol overhead.
///
/// The transfer rate is priced per byte: the bandwidth-normalized volume is
/// multiplied by `transfer_cost_per_byte * bandwidth`, so the product
/// reduces to bytes times the per-byte price.
pub fn communication_cost(task: &Task, hw: &HardwareSpec, config: &EngineConfig) -> f64 {
    let volume = task.input_size_bytes + task.output_size_bytes;
    let transfer_rate = hw.transfer_cost_per_byte * hw.bandwidth_bytes_per_s;
    (volume / hw.bandwidth_bytes_per_s) * transfer_rate + config.protocol_overhead_cost
}

/// Expected loss from failure, security breach and quality degradation.
/// Probabilities must already be in [0, 1].
pub fn risk_cost(
    task_value: f64,
    p_failure: f64,
    p_security: f64,
    p_quality: f64,
    gamma_impact: f64,
) -> f64 {
    let p_any_bad = 1.0 - (1.0 - p_failure) * (1.0 - p_security) * (1.0 - p_quality);
    task_value * p_any_bad * gamma_impact
}

/// End-to-end latency estimate for outsourcing to a contractor: execution on
/// contractor hardware, payload transfer, and the fixed dispatch delay.
pub fn estimated_latency_s(task: &Task, contractor: &ContractorProfile) -> f64 {
    let exec_s = task.flops_required / contractor.hardware.peak_flops;
    let transfer_s = (task.input_size_bytes + task.output_size_bytes)
        / contractor.hardware.bandwidth_bytes_per_s;
    exec_s + transfer_s + contractor.dispatch_delay_s
}

/// The client's current estimates of a contractor's bad-outcome
/// probabilities, sourced from the reputation module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimates {
    pub failure: f64,
    pub security: f64,
    pub quality: f64,
}

/// Full external cost breakdown for outsourcing `task` to `contractor`.
pub fn external_cost(
    task: &Task,
    contractor: &ContractorProfile,
    market: &MarketState,
    estimates: &RiskEstimates,
    config: &EngineConfig,
) -> Result<CostBreakdown, CostError> {
    let price = dynamic_price(contractor, task, market)?;
    let communication = communication_cost(task, &contractor.hardware, config);
    let risk = risk_cost(
        task.value,
        estimates.failure,
        estimates.security,
        estimates.quality,
        config.gamma_impact,
    );
    let latency_penalty = match task.max_latency_s {
        Some(max_s) if max_s > 0.0 => {
            let estimate = estimated_latency_s(task, contractor);
            if estimate > max_s {
                task.urgency * task.value * ((estimate - max_s) / max_s)
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    Ok(CostBreakdown::external(
        price,
        communication,
        config.verification_cost,
        config.integration_cost,
        risk,
        latency_penalty,
    ))
}

/// One EWMA-calibrated cost estimate with its sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub estimate: f64,
    pub samples: u64,
}

impl CalibrationEntry {
    /// Seeds the estimate, typically with the model's first prediction.
    pub fn seeded(initial_estimate: f64) -> Self {
        Self {
            estimate: initial_estimate,
            samples: 0,
        }
    }

    /// One EWMA step toward an observed actual cost.
    pub fn updated(self, actual: f64, ewma_lambda: f64) -> Result<Self, CostError> {
        if !actual.is_finite() {
            return Err(CostError::NonFinite {
                what: "actual cost",
            });
        }
        if actual < 0.0 {
            return Err(CostError::NegativeActual { actual });
        }
        Ok(Self {
            estimate: ewma_lambda * actual + (1.0 - ewma_lambda) * self.estimate,
            samples: self.samples + 1,
        })
    }
}

/// Whose cost a calibration entry tracks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CostSubject {
    Local,
    Contractor(AgentId),
}

/// Calibrated cost estimates per (executor, task type) pair.
pub type CalibrationLedger = BTreeMap<(CostSubject, TaskType), CalibrationEntry>;
