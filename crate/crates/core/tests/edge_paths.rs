//! Edge paths: memory-infeasible local execution (forced outsourcing or an
//! unserved task) and the budget constraint.

use agora_core::config::EngineConfig;
use agora_core::decision::{self, DecisionHistory, DecisionInputs, EngineError};
use agora_core::model::{
    AgentId, Archetype, Choice, ContractorProfile, HardwareSpec, MarketState, MemoryFootprint,
    Task, TaskId, TaskType,
};
use agora_core::reputation::{Outcome, ReputationLedger};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hardware(peak: f64, mem_bytes: f64) -> HardwareSpec {
    HardwareSpec {
        peak_flops: peak,
        hw_cost_per_hour: 1.4,
        mem_total_bytes: mem_bytes,
        mem_cost_per_hour: 0.15,
        tdp_watts: 350.0,
        utilization_factor: 0.85,
        kwh_cost: 0.15,
        bandwidth_bytes_per_s: 1e9,
        transfer_cost_per_byte: 1e-11,
        depreciation_per_hour: 0.05,
    }
}

fn big_memory_task() -> Task {
    Task {
        id: TaskId("t-big".into()),
        task_type: TaskType::GenericCompute,
        flops_required: 1e15,
        input_size_bytes: 1e8,
        output_size_bytes: 1e7,
        value: 8.0,
        urgency: 0.5,
        data_sensitivity: 0.2,
        complexity_multiplier: 1.0,
        max_latency_s: None,
        max_budget: None,
        required_skills: ["general_compute".to_string()].into_iter().collect(),
        requirement_embedding: {
            let mut v = vec![0.0; 8];
            v[0] = 1.0;
            v
        },
        memory: MemoryFootprint {
            // 120 GB against a 64 GB client machine.
            model_bytes: 1.0e11,
            kv_cache_bytes: 1.0e10,
            activations_bytes: 1.0e10,
        },
    }
}

fn capable_contractor(id: &str) -> ContractorProfile {
    ContractorProfile {
        id: AgentId(id.into()),
        archetype: Archetype::CloudService,
        skills: ["general_compute".to_string()].into_iter().collect(),
        skill_embedding: {
            let mut v = vec![0.0; 8];
            v[0] = 1.0;
            v
        },
        hardware: hardware(5e13, 2.56e11),
        base_price: 0.5,
        demand_sensitivity: 0.3,
        capacity_utilization: 0.8,
        breach_probs: vec![0.01],
        channel_security: 0.9,
        dispatch_delay_s: 30.0,
        true_failure_prob: 0.0,
        true_quality_degradation_prob: 0.0,
    }
}

fn market() -> MarketState {
    MarketState {
        current_demand: 40.0,
        available_supply: 20.0,
        total_supply: 60.0,
        market_pressure: 0.4,
        failure_rate: 0.0,
        price_volatility: 0.1,
        demand_fluctuation: 0.25,
    }
}

#[test]
fn infeasible_local_with_eligible_pool_forces_outsourcing() {
    let cfg = EngineConfig {
        epsilon: 0.0,
        ..EngineConfig::default()
    };
    let task = big_memory_task();
    let local = hardware(2e12, 6.4e10);
    let candidates = vec![capable_contractor("c-000"), capable_contractor("c-001")];
    // Cold history: thresholds would normally keep this local, but local
    // execution is impossible, so the engine must outsource regardless.
    let reputation = ReputationLedger::new();
    let history = DecisionHistory::new();
    let market = market();
    let inputs = DecisionInputs {
        task: &task,
        local_hardware: &local,
        local_queue: &[],
        candidates: &candidates,
        market: &market,
        reputation: &reputation,
        history: &history,
        now_hours: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let record = decision::decide(&inputs, &cfg, &mut rng).unwrap();
    assert!(record.choice.is_outsource());
    assert!(record.internal_cost.is_none());
    assert!(!record.exploration);
}

#[test]
fn infeasible_local_without_eligible_pool_is_unservable() {
    let cfg = EngineConfig {
        epsilon: 0.0,
        ..EngineConfig::default()
    };
    let task = big_memory_task();
    let local = hardware(2e12, 6.4e10);
    // A contractor with unrelated skills never clears the skill gate.
    let mut stranger = capable_contractor("c-000");
    stranger.skills = ["quantum_optimization".to_string()].into_iter().collect();
    stranger.skill_embedding = {
        let mut v = vec![0.0; 8];
        v[5] = 1.0;
        v
    };
    let candidates = vec![stranger];
    let reputation = ReputationLedger::new();
    let history = DecisionHistory::new();
    let market = market();
    let inputs = DecisionInputs {
        task: &task,
        local_hardware: &local,
        local_queue: &[],
        candidates: &candidates,
        market: &market,
        reputation: &reputation,
        history: &history,
        now_hours: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let err = decision::decide(&inputs, &cfg, &mut rng).unwrap_err();
    assert!(matches!(err, EngineError::NoFeasibleExecutor(_)));
}

#[test]
fn budget_cap_blocks_outsourcing() {
    let cfg = EngineConfig {
        epsilon: 0.0,
        ..EngineConfig::default()
    };
    // A feasible task that would normally be outsourced: warm history and a
    // clearly cheaper contractor.
    let mut task = big_memory_task();
    task.memory = MemoryFootprint::default();
    task.flops_required = 2e16;
    let local = hardware(2e12, 6.4e10);
    let mut runner_up = capable_contractor("c-001");
    runner_up.base_price = 0.8;
    runner_up.dispatch_delay_s = 120.0;
    let candidates = vec![capable_contractor("c-000"), runner_up];
    let mut reputation = ReputationLedger::new();
    let mut history = DecisionHistory::new();
    for c in &candidates {
        for i in 0..20 {
            reputation.observe(
                &c.id,
                Outcome::Success,
                cfg.beta_prior,
                i as f64,
                cfg.ewma_lambda,
            );
            history.record_outcome(&c.id, task.task_type, true);
        }
    }
    let market = market();
    let now = 20.0;

    let decide_with = |task: &Task| {
        let inputs = DecisionInputs {
            task,
            local_hardware: &local,
            local_queue: &[],
            candidates: &candidates,
            market: &market,
            reputation: &reputation,
            history: &history,
            now_hours: now,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        decision::decide(&inputs, &cfg, &mut rng).unwrap()
    };

    let unconstrained = decide_with(&task);
    assert!(
        unconstrained.choice.is_outsource(),
        "baseline should outsource"
    );
    let external_total = unconstrained.chosen_external_cost.unwrap().total;

    let mut capped = task.clone();
    capped.max_budget = Some(external_total / 2.0);
    let record = decide_with(&capped);
    assert_eq!(record.choice, Choice::Local);

    let mut roomy = task.clone();
    roomy.max_budget = Some(external_total * 2.0);
    let record = decide_with(&roomy);
    assert!(record.choice.is_outsource());
}
