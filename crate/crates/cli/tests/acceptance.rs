//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass line with its measured numbers. Run with
//! `cargo test -p agora-cli --test acceptance -- --nocapture` to see them.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use agora_core::config::EngineConfig;
use agora_core::cost::{self, CalibrationEntry, QueuedWork};
use agora_core::decision::{self, CriteriaMatrix, CriteriaRow, DecisionHistory, DecisionInputs};
use agora_core::experiment::{self, ExperimentPlan};
use agora_core::lifecycle::{transition_allowed, LifecycleState, TaskLifecycle};
use agora_core::metrics::{self, RunMetrics};
use agora_core::model::{
    AgentId, Archetype, Choice, ContractorProfile, CostBreakdown, HardwareSpec, MarketState,
    MemoryFootprint, Task, TaskId, TaskType, WeightVector,
};
use agora_core::presets;
use agora_core::reputation::{self, ReputationLedger, ReputationRecord};
use agora_core::scenario::ScenarioConfig;
use agora_core::seeding::{self, stream};
use agora_core::sim::{self, LedgerEntry, RunLedger};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const REL_TOL: f64 = 1e-9;

fn assert_close(got: f64, want: f64, what: &str) {
    let scale = want.abs().max(1.0);
    assert!(
        (got - want).abs() <= REL_TOL * scale,
        "{what}: got {got}, want {want}"
    );
}

fn tags(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn basis(dim: usize, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[axis] = 1.0;
    v
}

fn oracle_hardware() -> HardwareSpec {
    HardwareSpec {
        peak_flops: 1e12,
        hw_cost_per_hour: 2.0,
        mem_total_bytes: 200e9,
        mem_cost_per_hour: 1.0,
        tdp_watts: 700.0,
        utilization_factor: 0.9,
        kwh_cost: 0.12,
        bandwidth_bytes_per_s: 1e9,
        transfer_cost_per_byte: 1e-11,
        depreciation_per_hour: 0.05,
    }
}

fn oracle_task() -> Task {
    Task {
        id: TaskId("t-oracle".into()),
        task_type: TaskType::GenericCompute,
        flops_required: 3.6e15,
        input_size_bytes: 0.5e9,
        output_size_bytes: 0.5e9,
        value: 10.0,
        urgency: 0.5,
        data_sensitivity: 1.0,
        complexity_multiplier: 1.2,
        max_latency_s: None,
        max_budget: None,
        required_skills: tags(&[]),
        requirement_embedding: basis(8, 0),
        memory: MemoryFootprint::default(),
    }
}

fn oracle_contractor() -> ContractorProfile {
    ContractorProfile {
        id: AgentId("c-oracle".into()),
        archetype: Archetype::GpuSpecialist,
        skills: tags(&[]),
        skill_embedding: basis(8, 0),
        hardware: oracle_hardware(),
        base_price: 1.0,
        demand_sensitivity: 0.5,
        capacity_utilization: 0.8,
        breach_probs: vec![0.1, 0.1],
        channel_security: 0.0,
        dispatch_delay_s: 60.0,
        true_failure_prob: 0.0,
        true_quality_degradation_prob: 0.0,
    }
}

fn ledger_entry(
    cf_cost: Option<f64>,
    actual_cost: f64,
    cf_lat: Option<f64>,
    actual_lat: f64,
) -> LedgerEntry {
    LedgerEntry {
        seq: 0,
        task_id: TaskId("t".into()),
        task_type: TaskType::GenericCompute,
        client_id: AgentId("client-000".into()),
        arrival_hours: 0.0,
        decision: None,
        outcome: None,
        retry: None,
        counterfactual_local_cost: cf_cost,
        counterfactual_local_latency_s: cf_lat,
        actual_total_cost: actual_cost,
        actual_total_latency_s: actual_lat,
        learning_gain: None,
        exploration_value: None,
    }
}

fn ledger(entries: Vec<LedgerEntry>) -> RunLedger {
    RunLedger {
        entries,
        duration_hours: 24.0,
        n_clients: 1,
        n_contractors: 1,
        seed: 0,
    }
}

#[test]
fn criterion_01_formula_oracles() {
    let started = Instant::now();
    let hw = oracle_hardware();
    let task = oracle_task();
    let cfg = EngineConfig::default();

    // Compute cost: 3.6e15 FLOP at 1e12 FLOPS = 1 h at $2/h.
    assert_close(cost::compute_cost(&task, &hw).unwrap(), 2.0, "compute");

    // Memory cost: 100 GB of 200 GB for 2 h at $1/h.
    let fp = MemoryFootprint {
        model_bytes: 70e9,
        kv_cache_bytes: 10e9,
        activations_bytes: 20e9,
    };
    assert_close(cost::memory_cost(&fp, &hw, 2.0).unwrap(), 1.0, "memory");

    // Energy: 700 W * 0.9 * 1 h * $0.12/kWh.
    assert_close(cost::energy_cost(&hw, 1.0), 0.0756, "energy");

    // Opportunity: max(10/2, 9/1) * 2.
    let queue = [
        QueuedWork {
            value: 10.0,
            exec_hours: 2.0,
        },
        QueuedWork {
            value: 9.0,
            exec_hours: 1.0,
        },
    ];
    assert_close(cost::opportunity_cost(&queue, 2.0), 18.0, "opportunity");

    // Dynamic price: 1.0 * (1 + 0.5*(100-50)/100) * 1.2 and the floor rule.
    let contractor = oracle_contractor();
    let market = MarketState {
        current_demand: 100.0,
        available_supply: 50.0,
        total_supply: 100.0,
        market_pressure: 0.5,
        failure_rate: 0.0,
        price_volatility: 0.1,
        demand_fluctuation: 0.25,
    };
    assert_close(
        cost::dynamic_price(&contractor, &task, &market).unwrap(),
        1.5,
        "dynamic price",
    );
    let oversupplied = MarketState {
        current_demand: 0.0,
        available_supply: 1000.0,
        ..market.clone()
    };
    assert_close(
        cost::dynamic_price(&contractor, &task, &oversupplied).unwrap(),
        0.05,
        "price floor",
    );

    // Communication: 1 GB at $0.01/GB + $0.001 overhead.
    let comm_cfg = EngineConfig {
        protocol_overhead_cost: 0.001,
        ..cfg.clone()
    };
    assert_close(
        cost::communication_cost(&task, &hw, &comm_cfg),
        0.011,
        "communication",
    );

    // Risk: 10 * (1 - 0.9) * 1.
    assert_close(cost::risk_cost(10.0, 0.1, 0.0, 0.0, 1.0), 1.0, "risk");

    // EWMA: 0.2*10 + 0.8*20 = 18, then the geometric closed form.
    let entry = CalibrationEntry::seeded(20.0);
    assert_close(
        entry.updated(10.0, 0.2).unwrap().estimate,
        18.0,
        "ewma step",
    );
    let mut conv = CalibrationEntry::seeded(25.0);
    for n in 1..=30 {
        conv = conv.updated(5.0, 0.2).unwrap();
        let expected = 5.0 + 0.8f64.powi(n) * 20.0;
        assert_close(conv.estimate, expected, "ewma geometric");
    }

    // Reliability: uniform prior 0.5; (1+9)/(2+10); 12-month decay.
    let fresh = ReputationRecord::fresh(AgentId("c-1".into()), (1.0, 1.0), 0.0);
    assert_close(fresh.reliability(0.0, 0.1), 0.5, "reliability prior");
    let seasoned = ReputationRecord {
        n_success: 9,
        n_total: 10,
        ..fresh.clone()
    };
    assert_close(
        seasoned.reliability(0.0, 0.1),
        10.0 / 12.0,
        "reliability counts",
    );
    assert_close(
        seasoned.reliability(12.0 * reputation::HOURS_PER_MONTH, 0.1),
        0.250_995_176_593_501_75,
        "reliability decay",
    );

    // Security risk: 1 - 0.9^2 at full sensitivity, zero channel security.
    assert_close(
        reputation::security_risk(&contractor, &task),
        0.19,
        "security risk",
    );

    // Skill compatibility: J({a,b},{b,c}) = 1/3, cosine 0.8, perf 0.5 -> 0.6.
    let mut compat_task = oracle_task();
    compat_task.required_skills = tags(&["a", "b"]);
    let mut compat_contractor = oracle_contractor();
    compat_contractor.skills = tags(&["b", "c"]);
    compat_contractor.skill_embedding = {
        let mut v = vec![0.0; 8];
        v[0] = 0.8;
        v[1] = 0.6;
        v
    };
    let history = DecisionHistory::new();
    assert_close(
        decision::skill_compatibility(&compat_contractor, &compat_task, &history, &cfg).unwrap(),
        0.6,
        "skill compatibility",
    );

    // Dynamic weights at beta = 1 reproduce the normalized signals.
    let mut weight_task = oracle_task();
    weight_task.urgency = 0.05;
    weight_task.data_sensitivity = 0.05;
    let weight_market = MarketState {
        market_pressure: 0.8,
        failure_rate: 0.1,
        ..market.clone()
    };
    let w = decision::dynamic_weights(&weight_market, &weight_task, &history, 1.0);
    for (got, want) in w.as_array().iter().zip([0.8, 0.1, 0.05, 0.05]) {
        assert_close(*got, want, "dynamic weights");
    }

    // Correlation adjustment on a perfectly correlated pair.
    let matrix = CriteriaMatrix {
        rows: vec![
            CriteriaRow {
                contractor: AgentId("a".into()),
                values: [1.0, 2.0, 5.0, 1.0],
            },
            CriteriaRow {
                contractor: AgentId("b".into()),
                values: [2.0, 4.0, 5.0, 1.0],
            },
            CriteriaRow {
                contractor: AgentId("c".into()),
                values: [3.0, 6.0, 5.0, 1.0],
            },
        ],
    };
    let adjusted = decision::correlation_adjust(WeightVector::uniform(), &matrix, 0.3);
    for (got, want) in
        adjusted
            .as_array()
            .iter()
            .zip([7.0 / 34.0, 7.0 / 34.0, 5.0 / 17.0, 5.0 / 17.0])
    {
        assert_close(*got, want, "correlation adjust");
    }

    // TOPSIS sentinels: identical rows 0.5 each; dominant pair 1 and 0.
    let twin = CriteriaMatrix {
        rows: vec![
            CriteriaRow {
                contractor: AgentId("a".into()),
                values: [2.0, 0.8, 100.0, 0.1],
            },
            CriteriaRow {
                contractor: AgentId("b".into()),
                values: [2.0, 0.8, 100.0, 0.1],
            },
        ],
    };
    let scores = decision::topsis(&twin, &WeightVector::uniform()).unwrap();
    assert_close(scores[0], 0.5, "topsis twin");
    assert_close(scores[1], 0.5, "topsis twin");
    let dominant = CriteriaMatrix {
        rows: vec![
            CriteriaRow {
                contractor: AgentId("a".into()),
                values: [1.0, 0.9, 100.0, 0.1],
            },
            CriteriaRow {
                contractor: AgentId("b".into()),
                values: [2.0, 0.5, 200.0, 0.3],
            },
        ],
    };
    let scores = decision::topsis(&dominant, &WeightVector::uniform()).unwrap();
    assert_close(scores[0], 1.0, "topsis dominant");
    assert_close(scores[1], 0.0, "topsis dominated");

    // Reservation-price check.
    let internal = CostBreakdown::internal(10.0, 0.0, 0.0, 0.0, 0.0);
    assert!(decision::nash_accepts(
        &internal,
        &CostBreakdown::external(5.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    ));
    assert!(!decision::nash_accepts(
        &internal,
        &CostBreakdown::external(10.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    ));
    assert!(decision::nash_accepts(
        &internal,
        &CostBreakdown::external(10.0 - 1e-9, 0.0, 0.0, 0.0, 0.0, 0.0)
    ));

    // Confidence: zero variance 1.0; p=0.5 n=100 -> 0.902; no history 0.5.
    let cid = AgentId("c-1".into());
    let tt = TaskType::GenericCompute;
    let mut rich = DecisionHistory::new();
    for _ in 0..50 {
        rich.record_outcome(&cid, tt, true);
    }
    assert_close(
        decision::decision_confidence(&rich, tt, &cid, 1.96),
        1.0,
        "confidence p=1",
    );
    let mut mixed = DecisionHistory::new();
    for i in 0..100 {
        mixed.record_outcome(&cid, tt, i % 2 == 0);
    }
    assert_close(
        decision::decision_confidence(&mixed, tt, &cid, 1.96),
        0.902,
        "confidence half",
    );
    assert_close(
        decision::decision_confidence(&DecisionHistory::new(), tt, &cid, 1.96),
        0.5,
        "confidence prior",
    );

    // Cost reduction: $100 local counterfactual vs $58.2 actual -> 41.8%.
    let lg = ledger(vec![ledger_entry(Some(100.0), 58.2, None, 0.0)]);
    assert_close(
        metrics::cost_reduction(&lg).unwrap(),
        41.8,
        "cost reduction",
    );
    // Hand-built 3-task ledger: (10+20+30) vs (10+15+20) -> 25%.
    let lg = ledger(vec![
        ledger_entry(Some(10.0), 10.0, None, 0.0),
        ledger_entry(Some(20.0), 15.0, None, 0.0),
        ledger_entry(Some(30.0), 20.0, None, 0.0),
    ]);
    assert_close(
        metrics::cost_reduction(&lg).unwrap(),
        25.0,
        "ledger reduction",
    );
    // All-local is exactly zero.
    let lg = ledger(vec![
        ledger_entry(Some(3.25), 3.25, Some(10.0), 10.0),
        ledger_entry(Some(7.5), 7.5, Some(20.0), 20.0),
    ]);
    assert_close(metrics::cost_reduction(&lg).unwrap(), 0.0, "all-local zero");
    assert_close(
        metrics::time_savings(&lg).unwrap(),
        0.0,
        "all-local time zero",
    );
    // One task twice as fast of two -> 25% time savings; slower -> negative.
    let lg = ledger(vec![
        ledger_entry(Some(1.0), 1.0, Some(10.0), 10.0),
        ledger_entry(Some(1.0), 1.0, Some(10.0), 5.0),
    ]);
    assert_close(metrics::time_savings(&lg).unwrap(), 25.0, "time savings");
    let lg = ledger(vec![ledger_entry(Some(1.0), 1.0, Some(10.0), 15.0)]);
    assert_close(
        metrics::time_savings(&lg).unwrap(),
        -50.0,
        "negative time savings",
    );

    // Pearson on exactly linear data.
    let xs = [1.0, 2.0, 3.0];
    assert_close(
        metrics::pearson(&xs, &[2.0, 4.0, 6.0]).unwrap(),
        1.0,
        "pearson up",
    );
    assert_close(
        metrics::pearson(&xs, &[3.0, 2.0, 1.0]).unwrap(),
        -1.0,
        "pearson down",
    );

    // Decision engine edge cases: empty pool is local; epsilon 1 explores.
    let local_hw = oracle_hardware();
    let reputation_ledger = ReputationLedger::new();
    let empty_history = DecisionHistory::new();
    let eps0 = EngineConfig {
        epsilon: 0.0,
        ..cfg.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let record = decision::decide(
        &DecisionInputs {
            task: &task,
            local_hardware: &local_hw,
            local_queue: &[],
            candidates: &[],
            market: &market,
            reputation: &reputation_ledger,
            history: &empty_history,
            now_hours: 0.0,
        },
        &eps0,
        &mut rng,
    )
    .unwrap();
    assert_eq!(record.choice, Choice::Local);

    let eps1 = EngineConfig {
        epsilon: 1.0,
        ..cfg.clone()
    };
    let lone = oracle_contractor();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let record = decision::decide(
        &DecisionInputs {
            task: &task,
            local_hardware: &local_hw,
            local_queue: &[],
            candidates: std::slice::from_ref(&lone),
            market: &market,
            reputation: &reputation_ledger,
            history: &empty_history,
            now_hours: 0.0,
        },
        &eps1,
        &mut rng,
    )
    .unwrap();
    assert_eq!(record.choice, Choice::Outsource(lone.id.clone()));
    assert!(record.exploration);
    assert_eq!(record.confidence, 0.7);
    assert_eq!(record.topsis_score, 0.5);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "oracle suite took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: formula oracle suite at 1e-9 relative tolerance in {elapsed:?}");
}

/// Independent step-by-step TOPSIS reimplementation for criterion 2.
fn topsis_reference(rows: &[Vec<f64>], weights: &[f64; 4]) -> Vec<f64> {
    let lower_better = [true, false, true, true];
    let mut norms = [0.0f64; 4];
    for j in 0..4 {
        norms[j] = rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
    }
    let weighted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            (0..4)
                .map(|j| {
                    if norms[j] == 0.0 {
                        0.0
                    } else {
                        r[j] / norms[j] * weights[j]
                    }
                })
                .collect()
        })
        .collect();
    let mut ideal = [0.0f64; 4];
    let mut anti = [0.0f64; 4];
    for j in 0..4 {
        let col: Vec<f64> = weighted.iter().map(|r| r[j]).collect();
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lower_better[j] {
            ideal[j] = min;
            anti[j] = max;
        } else {
            ideal[j] = max;
            anti[j] = min;
        }
    }
    weighted
        .iter()
        .map(|r| {
            let dp: f64 = (0..4)
                .map(|j| (r[j] - ideal[j]).powi(2))
                .sum::<f64>()
                .sqrt();
            let dn: f64 = (0..4).map(|j| (r[j] - anti[j]).powi(2)).sum::<f64>().sqrt();
            if dp + dn == 0.0 {
                0.5
            } else {
                dn / (dp + dn)
            }
        })
        .collect()
}

#[test]
fn criterion_02_topsis_brute_force_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut dominant_checks = 0;
    for case in 0..1000 {
        let n = rng.gen_range(2..=10);
        let mut raw: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                vec![
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(1.0..1e4),
                    rng.gen_range(0.0..1.0),
                ]
            })
            .collect();
        // Every third case: force row 0 into strict domination.
        let forced = case % 3 == 0;
        if forced {
            for j in 0..4 {
                let others: Vec<f64> = raw[1..].iter().map(|r| r[j]).collect();
                let min = others.iter().copied().fold(f64::INFINITY, f64::min);
                let max = others.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                raw[0][j] = if j == 1 { max + 0.01 } else { 0.9 * min };
            }
        }
        let weights = WeightVector::from_array([
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
        ])
        .normalized();
        let matrix = CriteriaMatrix {
            rows: raw
                .iter()
                .enumerate()
                .map(|(i, r)| CriteriaRow {
                    contractor: AgentId(format!("c-{i:03}")),
                    values: [r[0], r[1], r[2], r[3]],
                })
                .collect(),
        };
        let got = decision::topsis(&matrix, &weights).unwrap();
        let want = topsis_reference(&raw, &weights.as_array());
        for (g, w) in got.iter().zip(&want) {
            assert!(
                (g - w).abs() <= 1e-9 * w.abs().max(1.0),
                "got {g}, oracle {w}"
            );
        }
        if forced {
            for s in &got[1..] {
                assert!(got[0] > *s, "dominant row must be the strict maximum");
            }
            dominant_checks += 1;
        }
    }
    println!(
        "ACCEPTANCE 2 PASS: 1000 random matrices match the brute-force oracle at 1e-9 ({dominant_checks} dominant-row cases)"
    );
}

#[test]
fn criterion_03_exploration_statistics() {
    let cfg = EngineConfig::default();
    assert_eq!(cfg.epsilon, 0.1);
    let task = oracle_task();
    let local_hw = oracle_hardware();
    let market = MarketState {
        current_demand: 40.0,
        available_supply: 20.0,
        total_supply: 60.0,
        market_pressure: 0.4,
        failure_rate: 0.02,
        price_volatility: 0.1,
        demand_fluctuation: 0.25,
    };
    let candidates: Vec<ContractorProfile> = (0..5)
        .map(|i| {
            let mut c = oracle_contractor();
            c.id = AgentId(format!("c-{i:03}"));
            c
        })
        .collect();
    let reputation_ledger = ReputationLedger::new();
    let history = DecisionHistory::new();

    let n = 10_000u64;
    let mut explorations = 0u64;
    for i in 0..n {
        let mut rng = seeding::rng_for_indexed(20_240_601, stream::DECIDE, i);
        let record = decision::decide(
            &DecisionInputs {
                task: &task,
                local_hardware: &local_hw,
                local_queue: &[],
                candidates: &candidates,
                market: &market,
                reputation: &reputation_ledger,
                history: &history,
                now_hours: 0.0,
            },
            &cfg,
            &mut rng,
        )
        .unwrap();
        if record.exploration {
            explorations += 1;
        }
    }
    let fraction = explorations as f64 / n as f64;
    assert!(
        (0.09..=0.11).contains(&fraction),
        "exploration fraction {fraction} outside [0.09, 0.11]"
    );
    println!(
        "ACCEPTANCE 3 PASS: exploration fraction {fraction:.4} over {n} non-empty-pool decisions within [0.09, 0.11]"
    );
}

fn load_plan(name: &str) -> ExperimentPlan {
    let plan = ExperimentPlan::from_toml_str(presets::plan(name).unwrap(), &[], None).unwrap();
    assert!(plan.validate().is_empty());
    plan
}

fn cell_mean(
    plan: &ExperimentPlan,
    table: &experiment::ResultTable,
    cell: &str,
    pick: impl Fn(&RunMetrics) -> Option<f64>,
) -> f64 {
    let _ = plan;
    let values: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.cell == cell)
        .filter_map(|r| r.metrics.as_ref())
        .filter_map(&pick)
        .collect();
    assert!(!values.is_empty(), "no values for cell {cell}");
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn criterion_04_exploration_ablation_direction() {
    let started = Instant::now();
    let plan = load_plan("exploration_ablation");
    let table = experiment::run_plan(&plan, 2);
    let cr_off = cell_mean(&plan, &table, "explore_off", |m| m.cost_reduction_pct);
    let cr_on = cell_mean(&plan, &table, "explore_on", |m| m.cost_reduction_pct);
    let out_off = cell_mean(&plan, &table, "explore_off", |m| {
        Some(m.outsourcing_rate_pct)
    });
    let out_on = cell_mean(&plan, &table, "explore_on", |m| {
        Some(m.outsourcing_rate_pct)
    });

    assert!(cr_on > cr_off, "cost reduction: on {cr_on} vs off {cr_off}");
    assert!(
        out_on > out_off,
        "outsourcing: on {out_on} vs off {out_off}"
    );
    assert!(
        out_on - out_off >= 5.0,
        "outsourcing-rate gap {:.2} below 5 percentage points",
        out_on - out_off
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "ablation took {elapsed:?}");
    println!(
        "ACCEPTANCE 4 PASS: exploration ablation direction holds (cost reduction {cr_off:.1}% -> {cr_on:.1}%, outsourcing {out_off:.1}% -> {out_on:.1}%) in {elapsed:?}"
    );
}

#[test]
fn criterion_05_aggregate_band() {
    let started = Instant::now();
    let doc = "series = \"single\"\nreplications = 20\nbase_seed = 42\nbase_preset = \"default\"\n\n[[cells]]\nname = \"base\"\n";
    let plan = ExperimentPlan::from_toml_str(doc, &[], None).unwrap();
    assert!(plan.validate().is_empty());
    let scenario = &plan.cells[0].scenario;
    assert_eq!(
        (
            scenario.sim.n_clients,
            scenario.sim.n_contractors,
            scenario.sim.duration_days
        ),
        (15, 30, 7.0)
    );
    let table = experiment::run_plan(&plan, 2);
    let mean = cell_mean(&plan, &table, "base", |m| m.cost_reduction_pct);
    assert!(
        (30.0..=55.0).contains(&mean),
        "mean cost reduction {mean:.2}% outside [30, 55]"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "band run took {elapsed:?}");
    println!(
        "ACCEPTANCE 5 PASS: default preset mean cost reduction {mean:.1}% within [30%, 55%] over 20 seeds in {elapsed:?}"
    );
}

#[test]
fn criterion_06_economic_correlations() {
    let plan = load_plan("agent_scaling");
    let table = experiment::run_plan(&plan, 2);
    let summary = experiment::summarize(&plan, &table);
    let r_out = summary
        .correlations
        .outsourcing_cost_reduction
        .expect("outsourcing correlation defined");
    let r_agents = summary
        .correlations
        .agents_cost_reduction
        .expect("agent-count correlation defined");
    assert!(r_agents < 0.0, "r(agents, cost reduction) = {r_agents}");
    assert!(r_out > 0.0, "r(outsourcing, cost reduction) = {r_out}");
    println!(
        "ACCEPTANCE 6 PASS: r(agent count, cost reduction) = {r_agents:.3} < 0 and r(outsourcing rate, cost reduction) = {r_out:.3} > 0"
    );
}

#[test]
fn criterion_07_sensitivity_shape() {
    let plan = load_plan("epsilon_sweep");
    let cells: Vec<&str> = plan.cells.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        cells,
        ["eps_005", "eps_010", "eps_015", "eps_020", "eps_025"]
    );
    let table = experiment::run_plan(&plan, 2);

    let mut interior = 0;
    for rep in 0..plan.replications {
        let mut best: Option<(&str, f64)> = None;
        for row in table.rows.iter().filter(|r| r.replication == rep) {
            let cr = row
                .metrics
                .as_ref()
                .and_then(|m| m.cost_reduction_pct)
                .expect("cost reduction defined");
            if best.map(|(_, v)| cr > v).unwrap_or(true) {
                best = Some((row.cell.as_str(), cr));
            }
        }
        let (winner, _) = best.unwrap();
        if winner != "eps_005" && winner != "eps_025" {
            interior += 1;
        }
    }
    assert!(
        interior >= 15,
        "interior epsilon optimum in only {interior}/20 seed families"
    );
    println!(
        "ACCEPTANCE 7 PASS: epsilon sweep maximized at an interior rate in {interior}/20 seed families"
    );
}

#[test]
fn criterion_08_convergence_diagnostic() {
    let base = ScenarioConfig::from_toml_str(presets::scenario("stationary").unwrap()).unwrap();
    let n_seeds = 50;
    let mut decreasing = 0;
    for i in 0..n_seeds {
        let mut scenario = base.clone();
        scenario.sim.seed = 31_000 + i;
        let out = sim::run_simulation(&scenario).unwrap();
        let choices = out.ledger.choices();
        let window = choices.len() / 10;
        let tvs = metrics::convergence_diagnostic(&choices, window);
        if tvs.last().unwrap() < tvs.first().unwrap() {
            decreasing += 1;
        }
    }
    assert!(
        decreasing * 10 >= n_seeds * 9,
        "TV decreased in only {decreasing}/{n_seeds} stationary seeds"
    );
    println!(
        "ACCEPTANCE 8 PASS: windowed TV distance decreased first-to-last in {decreasing}/{n_seeds} stationary seeds"
    );
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_agora"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().to_string(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_09_byte_identical_determinism() {
    let base = std::env::temp_dir().join("agora-acceptance-determinism");
    let _ = std::fs::remove_dir_all(&base);
    let dir = |name: &str| base.join(name).to_string_lossy().to_string();

    // Single run, twice, identical bytes.
    for out in ["run-a", "run-b"] {
        let output = run_cli(&[
            "run",
            "--preset",
            "default",
            "--seed",
            "7",
            "--set",
            "sim.duration_days=1",
            "--out",
            &dir(out),
        ]);
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let a = read_dir_bytes(&base.join("run-a"));
    let b = read_dir_bytes(&base.join("run-b"));
    assert_eq!(
        a.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        vec![
            "decisions.jsonl",
            "reputation.jsonl",
            "runs.csv",
            "summary.json"
        ]
    );
    assert_eq!(a, b, "single-run outputs differ between executions");

    // Experiment, serial vs parallel, identical bytes.
    for (out, jobs) in [("exp-a", "1"), ("exp-b", "4")] {
        let output = run_cli(&[
            "experiment",
            "--preset",
            "exploration_ablation",
            "--jobs",
            jobs,
            "--set",
            "sim.duration_days=0.5",
            "--set",
            "sim.n_clients=3",
            "--set",
            "sim.n_contractors=6",
            "--out",
            &dir(out),
        ]);
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let a = read_dir_bytes(&base.join("exp-a"));
    let b = read_dir_bytes(&base.join("exp-b"));
    assert_eq!(
        a, b,
        "experiment outputs differ between serial and parallel runs"
    );

    println!("ACCEPTANCE 9 PASS: identical inputs and seed produce byte-identical output files (runs and experiments, serial and parallel)");
}

#[test]
fn criterion_10_property_suites() {
    let cases = 10_000;

    // Weight-simplex preservation under correlation adjustment.
    let mut rng = ChaCha8Rng::seed_from_u64(90_001);
    for _ in 0..cases {
        let weights = WeightVector::from_array([
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        ])
        .normalized();
        let n = rng.gen_range(1..8);
        let matrix = CriteriaMatrix {
            rows: (0..n)
                .map(|i| CriteriaRow {
                    contractor: AgentId(format!("c-{i}")),
                    values: [
                        rng.gen_range(0.0..10.0),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..100.0),
                        rng.gen_range(0.0..1.0),
                    ],
                })
                .collect(),
        };
        let adjusted = decision::correlation_adjust(weights, &matrix, rng.gen_range(0.0..1.0));
        assert!(adjusted.as_array().iter().all(|w| *w >= 0.0));
        assert!((adjusted.sum() - 1.0).abs() < 1e-9);
    }

    // CostBreakdown sum invariant.
    let mut rng = ChaCha8Rng::seed_from_u64(90_002);
    for _ in 0..cases {
        let mut c = [0.0f64; 11];
        for v in &mut c {
            *v = rng.gen_range(0.0..1e5);
        }
        assert!(CostBreakdown::from_components(c).is_consistent());
    }

    // Lifecycle-transition legality under fuzzing.
    let all_states = [
        LifecycleState::Submitted,
        LifecycleState::Working,
        LifecycleState::InputRequired,
        LifecycleState::Completed,
        LifecycleState::Failed,
        LifecycleState::Canceled,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(90_003);
    for _ in 0..cases {
        let mut lifecycle = TaskLifecycle::submitted(0.0);
        let mut now = 0.0;
        for _ in 0..12 {
            let target = all_states[rng.gen_range(0..all_states.len())];
            now += 0.25;
            let before = lifecycle.state();
            match lifecycle.advance(target, now) {
                Ok(()) => assert!(transition_allowed(before, target)),
                Err(_) => assert_eq!(lifecycle.state(), before),
            }
        }
        for pair in lifecycle.transitions().windows(2) {
            assert!(transition_allowed(pair[0].0, pair[1].0));
        }
    }

    // Reliability monotonicity and decay.
    let mut rng = ChaCha8Rng::seed_from_u64(90_004);
    for _ in 0..cases {
        let total = rng.gen_range(0..200u64);
        let success = rng.gen_range(0..=total);
        let record = ReputationRecord {
            n_success: success,
            n_total: total,
            ..ReputationRecord::fresh(AgentId("c".into()), (1.0, 1.0), 0.0)
        };
        let now = rng.gen_range(0.0..5000.0);
        let later = now + rng.gen_range(1.0..5000.0);
        let r_now = record.reliability(now, 0.1);
        assert!(r_now > 0.0 && r_now < 1.0);
        assert!(record.reliability(later, 0.1) < r_now);
        if success < total {
            let better = ReputationRecord {
                n_success: success + 1,
                ..record.clone()
            };
            assert!(better.reliability(now, 0.1) > r_now);
        }
    }

    println!("ACCEPTANCE 10 PASS: weight-simplex, cost-sum, lifecycle-legality and reliability properties held over {cases} randomized cases each");
}
