//! Single-threaded market simulation loop: hourly market stepping, per-task
//! decisions, ground-truth execution and ledger accounting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Violation;
use crate::cost::{self, CalibrationEntry, CalibrationLedger, CostSubject};
use crate::decision::{self, DecisionHistory, DecisionInputs, EngineError};
use crate::lifecycle::{LifecycleState, TaskLifecycle};
use crate::model::{
    AgentId, Choice, ContractorProfile, DecisionRecord, HardwareSpec, MarketState, Task, TaskId,
    TaskType,
};
use crate::population::{self, ActiveWork, World};
use crate::reputation::{self, Outcome, ReputationLedger};
use crate::scenario::ScenarioConfig;
use crate::seeding::{self, stream};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0:?}")]
    InvalidScenario(Vec<Violation>),
    #[error("engine failure on task {task}: {source}")]
    Engine {
        task: String,
        #[source]
        source: EngineError,
    },
}

/// What actually happened when a task ran on some executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub kind: Outcome,
    pub actual_cost: f64,
    pub actual_latency_s: f64,
    pub lifecycle: TaskLifecycle,
}

/// The local re-execution charged after a failed outsourced attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryReport {
    pub cost: f64,
    pub latency_s: f64,
}

/// One task's complete audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub task_id: TaskId,
    pub task_type: TaskType,
    pub client_id: AgentId,
    pub arrival_hours: f64,
    /// Absent when the task could run nowhere (unserved).
    pub decision: Option<DecisionRecord>,
    pub outcome: Option<ExecutionReport>,
    pub retry: Option<RetryReport>,
    /// Local-execution cost baseline: the realized local cost for local
    /// tasks, the decision-time internal estimate for outsourced ones.
    pub counterfactual_local_cost: Option<f64>,
    pub counterfactual_local_latency_s: Option<f64>,
    pub actual_total_cost: f64,
    pub actual_total_latency_s: f64,
    /// Absolute cost-estimate error discovered by executing externally.
    pub learning_gain: Option<f64>,
    /// Exploration value including the configured learning-gain term.
    pub exploration_value: Option<f64>,
}

/// Full record of one simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLedger {
    pub entries: Vec<LedgerEntry>,
    pub duration_hours: f64,
    pub n_clients: u32,
    pub n_contractors: u32,
    pub seed: u64,
}

impl RunLedger {
    /// Decision choices in arrival order, for convergence diagnostics.
    pub fn choices(&self) -> Vec<Choice> {
        self.entries
            .iter()
            .filter_map(|e| e.decision.as_ref().map(|d| d.choice.clone()))
            .collect()
    }
}

/// Flat per-decision record for the line-delimited decision log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionLogLine {
    pub seq: u64,
    pub time_hours: f64,
    pub client: String,
    pub task: String,
    pub task_type: String,
    pub choice: String,
    pub contractor: Option<String>,
    pub topsis_score: f64,
    pub confidence: f64,
    pub exploration: bool,
    pub internal_cost: Option<f64>,
    pub external_cost: Option<f64>,
    pub actual_cost: f64,
    pub actual_latency_s: f64,
    pub outcome: Option<String>,
    pub retried_locally: bool,
}

impl LedgerEntry {
    pub fn log_line(&self) -> Option<DecisionLogLine> {
        let decision = self.decision.as_ref()?;
        let (choice, contractor) = match &decision.choice {
            Choice::Local => ("local".to_string(), None),
            Choice::Outsource(id) => ("outsource".to_string(), Some(id.0.clone())),
        };
        Some(DecisionLogLine {
            seq: self.seq,
            time_hours: self.arrival_hours,
            client: self.client_id.0.clone(),
            task: self.task_id.0.clone(),
            task_type: self.task_type.label().to_string(),
            choice,
            contractor,
            topsis_score: decision.topsis_score,
            confidence: decision.confidence,
            exploration: decision.exploration,
            internal_cost: decision.internal_cost.as_ref().map(|c| c.total),
            external_cost: decision.chosen_external_cost.as_ref().map(|c| c.total),
            actual_cost: self.actual_total_cost,
            actual_latency_s: self.actual_total_latency_s,
            outcome: self.outcome.as_ref().map(|o| o.kind.label().to_string()),
            retried_locally: self.retry.is_some(),
        })
    }
}

/// Everything a finished run hands back to callers.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub ledger: RunLedger,
    pub reputation: ReputationLedger,
    pub calibration: CalibrationLedger,
    pub final_market: MarketState,
}

fn initial_market(scenario: &ScenarioConfig, world: &World) -> MarketState {
    let base_demand = scenario.sim.n_clients as f64 * scenario.sim.arrival_rate_per_hour;
    let total_supply: f64 = world.contractor_meta.iter().map(|m| m.supply_units).sum();
    let available_supply: f64 = world
        .contractors
        .iter()
        .zip(&world.contractor_meta)
        .map(|(c, m)| m.supply_units * (1.0 - c.capacity_utilization))
        .sum();
    let market_pressure = if total_supply > 0.0 {
        ((base_demand - available_supply) / total_supply).clamp(0.0, 1.0)
    } else {
        0.0
    };
    MarketState {
        current_demand: base_demand,
        available_supply,
        total_supply,
        market_pressure,
        failure_rate: 0.0,
        price_volatility: scenario.market.price_volatility,
        demand_fluctuation: scenario.market.demand_fluctuation,
    }
}

/// One market step: demand jitter around the base level, per-contractor
/// capacity redraw and price jitter around nominal, supply recomputed and
/// pressure re-clamped.
pub fn step_market(
    market: &mut MarketState,
    world: &mut World,
    base_demand: f64,
    scenario: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) {
    let df = scenario.market.demand_fluctuation;
    let pv = scenario.market.price_volatility;
    let (lo, hi) = scenario.market.capacity_utilization_band;

    market.current_demand = if df > 0.0 {
        base_demand * rng.gen_range(1.0 - df..1.0 + df)
    } else {
        base_demand
    };
    let mut available = 0.0;
    for (contractor, meta) in world.contractors.iter_mut().zip(&world.contractor_meta) {
        contractor.capacity_utilization = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        contractor.base_price = if pv > 0.0 {
            meta.nominal_base_price * rng.gen_range(1.0 - pv..1.0 + pv)
        } else {
            meta.nominal_base_price
        };
        available += meta.supply_units * (1.0 - contractor.capacity_utilization);
    }
    market.available_supply = available.clamp(0.0, market.total_supply);
    market.market_pressure = if market.total_supply > 0.0 {
        ((market.current_demand - market.available_supply) / market.total_supply).clamp(0.0, 1.0)
    } else {
        0.0
    };
}

fn cost_noise(sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma > 0.0 {
        LogNormal::new(0.0, sigma)
            .expect("valid lognormal")
            .sample(rng)
    } else {
        // Keep the draw so the stream shape does not depend on sigma.
        let _: f64 = rng.gen();
        1.0
    }
}

/// Executes a task on the client's own hardware. Local execution always
/// succeeds; realized cost is the model cost under multiplicative noise.
pub fn execute_local(
    task: &Task,
    hardware: &HardwareSpec,
    model_cost: f64,
    now_hours: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> ExecutionReport {
    let noise = cost_noise(sigma, rng);
    let _outcome_draw: f64 = rng.gen();
    let latency_s = task.flops_required / hardware.peak_flops;
    let mut lifecycle = TaskLifecycle::submitted(now_hours);
    lifecycle
        .advance(LifecycleState::Working, now_hours)
        .expect("submitted -> working");
    lifecycle
        .advance(LifecycleState::Completed, now_hours + latency_s / 3600.0)
        .expect("working -> completed");
    ExecutionReport {
        kind: Outcome::Success,
        actual_cost: model_cost * noise,
        actual_latency_s: latency_s,
        lifecycle,
    }
}

/// Executes a task on a contractor. The outcome is drawn from the
/// contractor's hidden ground truth; failures deliver nothing but are still
/// billed in full (the retry-locally policy charges the local re-run on top).
pub fn execute_external(
    task: &Task,
    contractor: &ContractorProfile,
    model_total: f64,
    now_hours: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> ExecutionReport {
    let noise = cost_noise(sigma, rng);
    let draw: f64 = rng.gen();
    let p_fail = contractor.true_failure_prob;
    let p_quality = contractor.true_quality_degradation_prob;
    let p_security = reputation::security_risk(contractor, task);
    let kind = if draw < p_fail {
        Outcome::Failure
    } else if draw < p_fail + p_quality {
        Outcome::QualityDegraded
    } else if draw < p_fail + p_quality + p_security {
        Outcome::SecurityIncident
    } else {
        Outcome::Success
    };
    let latency_s = cost::estimated_latency_s(task, contractor);
    let mut lifecycle = TaskLifecycle::submitted(now_hours);
    let start = now_hours + contractor.dispatch_delay_s / 3600.0;
    lifecycle
        .advance(LifecycleState::Working, start)
        .expect("submitted -> working");
    let terminal = if kind == Outcome::Failure {
        LifecycleState::Failed
    } else {
        LifecycleState::Completed
    };
    lifecycle
        .advance(terminal, now_hours + latency_s / 3600.0)
        .expect("working -> terminal");
    ExecutionReport {
        kind,
        actual_cost: model_total * noise,
        actual_latency_s: latency_s,
        lifecycle,
    }
}

/// Runs one full simulation: population, task stream, market path,
/// decisions, executions and learning updates. Fully deterministic in the
/// scenario seed.
pub fn run_simulation(scenario: &ScenarioConfig) -> Result<SimOutput, SimError> {
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(SimError::InvalidScenario(violations));
    }
    let seed = scenario.sim.seed;

    let mut pop_rng = seeding::rng_for(seed, stream::POPULATION);
    let mut world = population::generate_population(scenario, &mut pop_rng);

    let mut task_rng = seeding::rng_for(seed, stream::TASKS);
    let arrivals = population::generate_tasks(scenario, &world.prototypes, &mut task_rng);

    let mut market_rng = seeding::rng_for(seed, stream::MARKET);
    let base_demand = scenario.sim.n_clients as f64 * scenario.sim.arrival_rate_per_hour;
    let mut market = initial_market(scenario, &world);

    // The discovery/negotiation overhead grows with the searched pool, so
    // larger markets pay more per outsourcing decision.
    let mut engine_cfg = scenario.engine.clone();
    engine_cfg.protocol_overhead_cost +=
        scenario.market.coordination_cost_per_candidate * scenario.sim.n_contractors as f64;

    let mut reputation = ReputationLedger::new();
    let mut history = DecisionHistory::new();
    let mut calibration: CalibrationLedger = CalibrationLedger::new();
    let mut entries: Vec<LedgerEntry> = Vec::with_capacity(arrivals.len());
    let sigma = scenario.execution.cost_noise_sigma;
    let mut next_market_step = 1.0;

    for (seq, arrival) in arrivals.iter().enumerate() {
        while arrival.at_hours >= next_market_step {
            step_market(
                &mut market,
                &mut world,
                base_demand,
                scenario,
                &mut market_rng,
            );
            next_market_step += 1.0;
        }

        let now = arrival.at_hours;
        let task = &arrival.task;
        let client = &mut world.clients[arrival.client_index];
        let queue = client.queue_at(now);
        let local_hardware = client.hardware.clone();
        let client_id = client.id.clone();

        let mut decide_rng = seeding::rng_for_indexed(seed, stream::DECIDE, seq as u64);
        let inputs = DecisionInputs {
            task,
            local_hardware: &local_hardware,
            local_queue: &queue,
            candidates: &world.contractors,
            market: &market,
            reputation: &reputation,
            history: &history,
            now_hours: now,
        };
        let decision = match decision::decide(&inputs, &engine_cfg, &mut decide_rng) {
            Ok(record) => record,
            Err(EngineError::NoFeasibleExecutor(_)) => {
                entries.push(LedgerEntry {
                    seq: seq as u64,
                    task_id: task.id.clone(),
                    task_type: task.task_type,
                    client_id,
                    arrival_hours: now,
                    decision: None,
                    outcome: None,
                    retry: None,
                    counterfactual_local_cost: None,
                    counterfactual_local_latency_s: None,
                    actual_total_cost: 0.0,
                    actual_total_latency_s: 0.0,
                    learning_gain: None,
                    exploration_value: None,
                });
                continue;
            }
            Err(source) => {
                return Err(SimError::Engine {
                    task: task.id.0.clone(),
                    source,
                })
            }
        };

        history.note_weights(decision.weights_used, engine_cfg.ewma_lambda);
        let mut exec_rng = seeding::rng_for_indexed(seed, stream::EXECUTE, seq as u64);
        let local_latency_estimate_s = task.flops_required / local_hardware.peak_flops;

        let entry = match &decision.choice {
            Choice::Local => {
                let internal = decision
                    .internal_cost
                    .as_ref()
                    .expect("local decisions always carry an internal cost");
                let report = execute_local(
                    task,
                    &local_hardware,
                    internal.total,
                    now,
                    sigma,
                    &mut exec_rng,
                );
                let exec_hours = cost::exec_hours(task.flops_required, local_hardware.peak_flops);
                world.clients[arrival.client_index].active.push(ActiveWork {
                    finish_hours: now + exec_hours,
                    value: task.value,
                    exec_hours: exec_hours.max(1e-9),
                });
                let local_entry = calibration
                    .entry((CostSubject::Local, task.task_type))
                    .or_insert_with(|| CalibrationEntry::seeded(internal.total));
                *local_entry = local_entry
                    .updated(report.actual_cost, engine_cfg.ewma_lambda)
                    .expect("actual costs are non-negative");
                LedgerEntry {
                    seq: seq as u64,
                    task_id: task.id.clone(),
                    task_type: task.task_type,
                    client_id,
                    arrival_hours: now,
                    counterfactual_local_cost: Some(report.actual_cost),
                    counterfactual_local_latency_s: Some(report.actual_latency_s),
                    actual_total_cost: report.actual_cost,
                    actual_total_latency_s: report.actual_latency_s,
                    decision: Some(decision),
                    outcome: Some(report),
                    retry: None,
                    learning_gain: None,
                    exploration_value: None,
                }
            }
            Choice::Outsource(contractor_id) => {
                let idx = world
                    .contractors
                    .iter()
                    .position(|c| &c.id == contractor_id)
                    .expect("chosen contractor exists");
                let contractor = &world.contractors[idx];
                let external = decision
                    .chosen_external_cost
                    .as_ref()
                    .expect("outsource decisions carry an external cost");
                let report =
                    execute_external(task, contractor, external.total, now, sigma, &mut exec_rng);

                reputation.observe(
                    contractor_id,
                    report.kind,
                    engine_cfg.beta_prior,
                    now,
                    engine_cfg.ewma_lambda,
                );
                history.record_outcome(contractor_id, task.task_type, report.kind.is_success());
                let fail_ind = if report.kind == Outcome::Failure {
                    1.0
                } else {
                    0.0
                };
                market.failure_rate = (engine_cfg.ewma_lambda * fail_ind
                    + (1.0 - engine_cfg.ewma_lambda) * market.failure_rate)
                    .clamp(0.0, 1.0);
                let cal = calibration
                    .entry((
                        CostSubject::Contractor(contractor_id.clone()),
                        task.task_type,
                    ))
                    .or_insert_with(|| CalibrationEntry::seeded(external.total));
                *cal = cal
                    .updated(report.actual_cost, engine_cfg.ewma_lambda)
                    .expect("actual costs are non-negative");

                // Failed outsourced work is redone locally when possible;
                // the ledger charges both attempts.
                let retry = if report.kind == Outcome::Failure {
                    decision.internal_cost.as_ref().map(|internal| {
                        let retry_report = execute_local(
                            task,
                            &local_hardware,
                            internal.total,
                            now + report.actual_latency_s / 3600.0,
                            sigma,
                            &mut exec_rng,
                        );
                        let exec_hours =
                            cost::exec_hours(task.flops_required, local_hardware.peak_flops);
                        world.clients[arrival.client_index].active.push(ActiveWork {
                            finish_hours: now + report.actual_latency_s / 3600.0 + exec_hours,
                            value: task.value,
                            exec_hours: exec_hours.max(1e-9),
                        });
                        RetryReport {
                            cost: retry_report.actual_cost,
                            latency_s: retry_report.actual_latency_s,
                        }
                    })
                } else {
                    None
                };

                let retry_cost = retry.map_or(0.0, |r| r.cost);
                let retry_latency = retry.map_or(0.0, |r| r.latency_s);
                let learning_gain = (report.actual_cost - external.total).abs();
                let exploration_value = if decision.exploration {
                    Some(external.total + engine_cfg.learning_value_weight * learning_gain)
                } else {
                    None
                };
                LedgerEntry {
                    seq: seq as u64,
                    task_id: task.id.clone(),
                    task_type: task.task_type,
                    client_id,
                    arrival_hours: now,
                    counterfactual_local_cost: decision.internal_cost.as_ref().map(|c| c.total),
                    counterfactual_local_latency_s: decision
                        .internal_cost
                        .as_ref()
                        .map(|_| local_latency_estimate_s),
                    actual_total_cost: report.actual_cost + retry_cost,
                    actual_total_latency_s: report.actual_latency_s + retry_latency,
                    decision: Some(decision),
                    outcome: Some(report),
                    retry,
                    learning_gain: Some(learning_gain),
                    exploration_value,
                }
            }
        };
        entries.push(entry);
    }

    Ok(SimOutput {
        ledger: RunLedger {
            entries,
            duration_hours: scenario.duration_hours(),
            n_clients: scenario.sim.n_clients,
            n_contractors: scenario.sim.n_contractors,
            seed,
        },
        reputation,
        calibration,
        final_market: market,
    })
}
