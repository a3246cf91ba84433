//! Agent population and task stream generation.
//!
//! Skill embeddings are built from per-task-type prototype vectors that all
//! share a common component, so specialists score near-perfect cosine
//! similarity on their own types and generalists stay well above strangers.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cost::QueuedWork;
use crate::model::{
    AgentId, Archetype, ContractorProfile, HardwareSpec, MemoryFootprint, Task, TaskId, TaskType,
};
use crate::scenario::ScenarioConfig;

/// A client agent: local hardware plus its queue of running local work.
#[derive(Debug, Clone)]
pub struct ClientAgent {
    pub id: AgentId,
    pub hardware: HardwareSpec,
    pub active: Vec<ActiveWork>,
}

/// Work currently occupying a client's local hardware.
#[derive(Debug, Clone, Copy)]
pub struct ActiveWork {
    pub finish_hours: f64,
    pub value: f64,
    pub exec_hours: f64,
}

impl ClientAgent {
    /// Drops finished work and returns the live queue snapshot.
    pub fn queue_at(&mut self, now_hours: f64) -> Vec<QueuedWork> {
        self.active.retain(|w| w.finish_hours > now_hours);
        self.active
            .iter()
            .map(|w| QueuedWork {
                value: w.value,
                exec_hours: w.exec_hours,
            })
            .collect()
    }
}

/// Supply-side bookkeeping the market stepper owns per contractor.
#[derive(Debug, Clone, Copy)]
pub struct ContractorMeta {
    pub nominal_base_price: f64,
    pub supply_units: f64,
}

/// The generated agent population.
#[derive(Debug, Clone)]
pub struct World {
    pub clients: Vec<ClientAgent>,
    pub contractors: Vec<ContractorProfile>,
    pub contractor_meta: Vec<ContractorMeta>,
    pub prototypes: Vec<Vec<f64>>,
}

/// One task arrival in the generated stream.
#[derive(Debug, Clone)]
pub struct TaskArrival {
    pub at_hours: f64,
    pub client_index: usize,
    pub task: Task,
}

fn normalize(v: &mut [f64]) {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// One prototype per task type: `normalize(sqrt(2) * common_axis + type_axis)`.
/// The shared component puts cross-type cosines at 2/3 and keeps mixtures
/// over two or three types above 0.88 similarity to each covered prototype,
/// so multi-specialty contractors stay plausible matches for all their types.
pub fn type_prototypes(dim: usize) -> Vec<Vec<f64>> {
    TaskType::ALL
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut v = vec![0.0; dim];
            v[0] = 2f64.sqrt();
            v[1 + i] = 1.0;
            normalize(&mut v);
            v
        })
        .collect()
}

fn type_index(tt: TaskType) -> usize {
    TaskType::ALL
        .iter()
        .position(|t| *t == tt)
        .expect("known task type")
}

fn jittered(value: f64, jitter: f64, rng: &mut ChaCha8Rng) -> f64 {
    value * (1.0 + jitter * rng.gen_range(-1.0..1.0))
}

fn jittered_hardware(template: &HardwareSpec, jitter: f64, rng: &mut ChaCha8Rng) -> HardwareSpec {
    HardwareSpec {
        peak_flops: jittered(template.peak_flops, jitter, rng),
        hw_cost_per_hour: jittered(template.hw_cost_per_hour, jitter, rng),
        mem_total_bytes: jittered(template.mem_total_bytes, jitter, rng),
        mem_cost_per_hour: jittered(template.mem_cost_per_hour, jitter, rng),
        tdp_watts: jittered(template.tdp_watts, jitter, rng),
        utilization_factor: jittered(template.utilization_factor, jitter, rng).clamp(0.05, 1.0),
        kwh_cost: jittered(template.kwh_cost, jitter, rng),
        bandwidth_bytes_per_s: jittered(template.bandwidth_bytes_per_s, jitter, rng),
        transfer_cost_per_byte: jittered(template.transfer_cost_per_byte, jitter, rng),
        depreciation_per_hour: jittered(template.depreciation_per_hour, jitter, rng),
    }
}

fn embedding_for(
    covered: &[TaskType],
    prototypes: &[Vec<f64>],
    noise: f64,
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for tt in covered {
        let p = &prototypes[type_index(*tt)];
        for (a, b) in v.iter_mut().zip(p) {
            *a += b;
        }
    }
    let gauss = Normal::new(0.0, 1.0).expect("valid normal");
    for a in v.iter_mut() {
        *a += noise * gauss.sample(rng);
    }
    normalize(&mut v);
    v
}

fn draw_archetype(scenario: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Archetype {
    let total: f64 = scenario.archetype_mix.values().sum();
    let mut u = rng.gen::<f64>() * total;
    for (arch, frac) in &scenario.archetype_mix {
        u -= frac;
        if u <= 0.0 {
            return *arch;
        }
    }
    *scenario
        .archetype_mix
        .keys()
        .next_back()
        .expect("non-empty archetype mix")
}

/// Generates clients and contractors from the scenario templates.
pub fn generate_population(scenario: &ScenarioConfig, rng: &mut ChaCha8Rng) -> World {
    let dim = scenario.engine.embedding_dim;
    let prototypes = type_prototypes(dim);
    let jitter = scenario.population.hardware_jitter;

    let clients = (0..scenario.sim.n_clients)
        .map(|i| ClientAgent {
            id: AgentId(format!("client-{i:03}")),
            hardware: jittered_hardware(&scenario.client_template, jitter, rng),
            active: Vec::new(),
        })
        .collect();

    let mut contractors = Vec::with_capacity(scenario.sim.n_contractors as usize);
    let mut contractor_meta = Vec::with_capacity(scenario.sim.n_contractors as usize);
    for i in 0..scenario.sim.n_contractors {
        let archetype = draw_archetype(scenario, rng);
        let template = scenario
            .archetypes
            .get(&archetype)
            .expect("validated scenario has templates for mixed archetypes");
        let hardware = jittered_hardware(&template.hardware, jitter, rng);
        let base_price = jittered(template.base_price, scenario.population.price_jitter, rng);
        let embedding = embedding_for(
            &template.service_types,
            &prototypes,
            scenario.population.embedding_noise,
            dim,
            rng,
        );
        let (lo, hi) = scenario.market.capacity_utilization_band;
        let capacity_utilization = if lo == hi { lo } else { rng.gen_range(lo..hi) };
        contractors.push(ContractorProfile {
            id: AgentId(format!("c-{i:03}")),
            archetype,
            skills: template.skills.clone(),
            skill_embedding: embedding,
            hardware,
            base_price,
            demand_sensitivity: template.demand_sensitivity,
            capacity_utilization,
            breach_probs: template.breach_probs.clone(),
            channel_security: template.channel_security,
            dispatch_delay_s: template.dispatch_delay_s,
            true_failure_prob: template.true_failure_prob,
            true_quality_degradation_prob: template.true_quality_degradation_prob,
        });
        contractor_meta.push(ContractorMeta {
            nominal_base_price: base_price,
            supply_units: scenario.market.supply_units_per_contractor
                * template.supply_units_factor,
        });
    }

    World {
        clients,
        contractors,
        contractor_meta,
        prototypes,
    }
}

fn draw_task_type(scenario: &ScenarioConfig, rng: &mut ChaCha8Rng) -> TaskType {
    let total: f64 = scenario.tasks.values().map(|t| t.weight).sum();
    let mut u = rng.gen::<f64>() * total;
    for (tt, template) in &scenario.tasks {
        u -= template.weight;
        if u <= 0.0 {
            return *tt;
        }
    }
    *scenario
        .tasks
        .keys()
        .next_back()
        .expect("non-empty task templates")
}

fn uniform_in(range: (f64, f64), rng: &mut ChaCha8Rng) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

fn draw_task(
    scenario: &ScenarioConfig,
    prototypes: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> (TaskType, TaskBody) {
    let tt = draw_task_type(scenario, rng);
    let template = &scenario.tasks[&tt];
    let flops = 10f64.powf(uniform_in(template.flops_log10_range, rng));
    let input = uniform_in(template.input_gb_range, rng) * 1e9;
    let output = uniform_in(template.output_gb_range, rng) * 1e9;
    let value = template.value_base + template.value_per_pflop * flops / 1e15;
    let urgency = uniform_in(template.urgency_range, rng);
    let sensitivity = uniform_in(template.sensitivity_range, rng);
    let memory_total = uniform_in(template.memory_gb_range, rng) * 1e9;
    let embedding = embedding_for(
        &[tt],
        prototypes,
        scenario.population.embedding_noise,
        scenario.engine.embedding_dim,
        rng,
    );
    (
        tt,
        TaskBody {
            flops,
            input,
            output,
            value,
            urgency,
            sensitivity,
            complexity: template.complexity_multiplier,
            memory: MemoryFootprint {
                model_bytes: 0.70 * memory_total,
                kv_cache_bytes: 0.15 * memory_total,
                activations_bytes: 0.15 * memory_total,
            },
            embedding,
        },
    )
}

struct TaskBody {
    flops: f64,
    input: f64,
    output: f64,
    value: f64,
    urgency: f64,
    sensitivity: f64,
    complexity: f64,
    memory: MemoryFootprint,
    embedding: Vec<f64>,
}

/// Generates the time-ordered task stream: per-client Poisson arrivals with
/// exponential inter-arrival times, merged and sorted by arrival time.
pub fn generate_tasks(
    scenario: &ScenarioConfig,
    prototypes: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Vec<TaskArrival> {
    let horizon = scenario.duration_hours();
    let rate = scenario.sim.arrival_rate_per_hour;
    let mut raw: Vec<(f64, usize, TaskType, TaskBody)> = Vec::new();
    for client_index in 0..scenario.sim.n_clients as usize {
        let mut t = 0.0;
        loop {
            let u: f64 = rng.gen();
            t += -(1.0 - u).ln() / rate;
            if t >= horizon {
                break;
            }
            let (tt, body) = draw_task(scenario, prototypes, rng);
            raw.push((t, client_index, tt, body));
        }
    }
    raw.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite arrival times")
            .then(a.1.cmp(&b.1))
    });
    raw.into_iter()
        .enumerate()
        .map(|(seq, (at_hours, client_index, tt, body))| TaskArrival {
            at_hours,
            client_index,
            task: Task {
                id: TaskId(format!("t-{seq:05}")),
                task_type: tt,
                flops_required: body.flops,
                input_size_bytes: body.input,
                output_size_bytes: body.output,
                value: body.value,
                urgency: body.urgency,
                data_sensitivity: body.sensitivity,
                complexity_multiplier: body.complexity,
                max_latency_s: None,
                max_budget: None,
                required_skills: tt
                    .required_skills()
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<BTreeSet<String>>(),
                requirement_embedding: body.embedding,
                memory: body.memory,
            },
        })
        .collect()
}
