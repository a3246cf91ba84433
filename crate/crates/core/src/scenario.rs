//! Scenario configuration: the full parameter set of one simulated market,
//! loadable from TOML preset documents with dotted-key overrides.
//!
//! Field-by-field schema documentation lives in `presets/default.toml`,
//! which doubles as the reference scenario.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{EngineConfig, Violation};
use crate::model::{Archetype, HardwareSpec, TaskType};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override {key:?}: {reason}")]
    BadOverride { key: String, reason: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Run-level simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_clients: u32,
    pub n_contractors: u32,
    pub duration_days: f64,
    /// Poisson arrival rate per client, tasks/hour.
    pub arrival_rate_per_hour: f64,
    pub seed: u64,
}

/// Market volatility and supply accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Band contractor capacity utilization is redrawn from each step.
    pub capacity_utilization_band: (f64, f64),
    /// Relative demand jitter around the base demand (0.25 = plus/minus 25%).
    pub demand_fluctuation: f64,
    /// Relative per-step price jitter around nominal prices.
    pub price_volatility: f64,
    /// Service capacity each contractor contributes to total supply.
    pub supply_units_per_contractor: f64,
    /// Per-candidate discovery/negotiation overhead added to the protocol
    /// overhead each decision; models coordination cost growing with the
    /// size of the searched market.
    pub coordination_cost_per_candidate: f64,
}

/// Execution noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionParams {
    /// Sigma of the lognormal multiplicative noise on realized costs.
    pub cost_noise_sigma: f64,
}

/// Population generation jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    /// Relative jitter applied to template hardware numbers.
    pub hardware_jitter: f64,
    /// Relative jitter applied to template base prices.
    pub price_jitter: f64,
    /// Gaussian noise mixed into generated skill/requirement embeddings.
    pub embedding_noise: f64,
}

/// Per-archetype contractor template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeTemplate {
    pub hardware: HardwareSpec,
    pub base_price: f64,
    pub demand_sensitivity: f64,
    pub dispatch_delay_s: f64,
    pub skills: BTreeSet<String>,
    /// Task types this archetype's embedding is aligned with.
    pub service_types: Vec<TaskType>,
    pub breach_probs: Vec<f64>,
    pub channel_security: f64,
    /// Relative share of supply capacity (1.0 = standard).
    #[serde(default = "default_supply_factor")]
    pub supply_units_factor: f64,
    pub true_failure_prob: f64,
    pub true_quality_degradation_prob: f64,
}

fn default_supply_factor() -> f64 {
    1.0
}

/// Per-task-type generation template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTemplate {
    /// Relative frequency of this task type in the stream.
    pub weight: f64,
    /// log10 of required FLOP count is drawn uniformly from this range.
    pub flops_log10_range: (f64, f64),
    pub input_gb_range: (f64, f64),
    pub output_gb_range: (f64, f64),
    /// Task value = value_base + value_per_pflop * flops / 1e15.
    pub value_base: f64,
    pub value_per_pflop: f64,
    pub urgency_range: (f64, f64),
    pub sensitivity_range: (f64, f64),
    pub complexity_multiplier: f64,
    /// Total memory footprint drawn uniformly from this range (GB), split
    /// 70/15/15 across weights, KV cache and activations.
    pub memory_gb_range: (f64, f64),
}

/// A complete scenario: everything a simulation run needs besides code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub sim: SimParams,
    pub market: MarketParams,
    pub execution: ExecutionParams,
    pub population: PopulationParams,
    #[serde(default)]
    pub engine: EngineConfig,
    pub archetype_mix: BTreeMap<Archetype, f64>,
    pub client_template: HardwareSpec,
    pub archetypes: BTreeMap<Archetype, ArchetypeTemplate>,
    pub tasks: BTreeMap<TaskType, TaskTemplate>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn duration_hours(&self) -> f64 {
        self.sim.duration_days * 24.0
    }

    /// Validates every bound and cross-field invariant.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.sim.n_clients < 1 {
            v.push(Violation::new("sim.n_clients", "must be >= 1"));
        }
        if self.sim.n_contractors < 1 {
            v.push(Violation::new("sim.n_contractors", "must be >= 1"));
        }
        if !(self.sim.duration_days >= 0.0) {
            v.push(Violation::new("sim.duration_days", "must be >= 0"));
        }
        if !(self.sim.arrival_rate_per_hour > 0.0) {
            v.push(Violation::new("sim.arrival_rate_per_hour", "must be > 0"));
        }

        let (lo, hi) = self.market.capacity_utilization_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            v.push(Violation::new(
                "market.capacity_utilization_band",
                "must be an ordered sub-range of [0, 1]",
            ));
        }
        if !(0.0..1.0).contains(&self.market.demand_fluctuation) {
            v.push(Violation::new(
                "market.demand_fluctuation",
                "must be in [0, 1)",
            ));
        }
        if !(0.0..1.0).contains(&self.market.price_volatility) {
            v.push(Violation::new(
                "market.price_volatility",
                "must be in [0, 1)",
            ));
        }
        if !(self.market.supply_units_per_contractor > 0.0) {
            v.push(Violation::new(
                "market.supply_units_per_contractor",
                "must be > 0",
            ));
        }
        if !(self.market.coordination_cost_per_candidate >= 0.0) {
            v.push(Violation::new(
                "market.coordination_cost_per_candidate",
                "must be >= 0",
            ));
        }
        if !(self.execution.cost_noise_sigma >= 0.0) {
            v.push(Violation::new("execution.cost_noise_sigma", "must be >= 0"));
        }
        for (field, value) in [
            (
                "population.hardware_jitter",
                self.population.hardware_jitter,
            ),
            ("population.price_jitter", self.population.price_jitter),
            (
                "population.embedding_noise",
                self.population.embedding_noise,
            ),
        ] {
            if !(0.0..1.0).contains(&value) {
                v.push(Violation::new(field, "must be in [0, 1)"));
            }
        }

        let mix_sum: f64 = self.archetype_mix.values().sum();
        if (mix_sum - 1.0).abs() > 1e-9 {
            v.push(Violation::new(
                "archetype_mix",
                format!("fractions sum to {mix_sum}, expected 1"),
            ));
        }
        for (arch, frac) in &self.archetype_mix {
            if !(0.0..=1.0).contains(frac) {
                v.push(Violation::new(
                    &format!("archetype_mix.{arch}"),
                    "must be in [0, 1]",
                ));
            }
            if *frac > 0.0 && !self.archetypes.contains_key(arch) {
                v.push(Violation::new(
                    &format!("archetypes.{arch}"),
                    "template missing for archetype with non-zero mix",
                ));
            }
        }

        for msg in self.client_template.invariant_violations("client_template") {
            v.push(Violation::new("client_template", msg));
        }
        for (arch, template) in &self.archetypes {
            let who = format!("archetypes.{arch}");
            for msg in template.hardware.invariant_violations(&who) {
                v.push(Violation::new(&who, msg));
            }
            if !(template.base_price > 0.0) {
                v.push(Violation::new(&format!("{who}.base_price"), "must be > 0"));
            }
            if !(0.0..=1.0).contains(&template.channel_security) {
                v.push(Violation::new(
                    &format!("{who}.channel_security"),
                    "must be in [0, 1]",
                ));
            }
            for (name, p) in [
                ("true_failure_prob", template.true_failure_prob),
                (
                    "true_quality_degradation_prob",
                    template.true_quality_degradation_prob,
                ),
            ] {
                if !(0.0..=1.0).contains(&p) {
                    v.push(Violation::new(
                        &format!("{who}.{name}"),
                        "must be in [0, 1]",
                    ));
                }
            }
            for (i, p) in template.breach_probs.iter().enumerate() {
                if !(0.0..=1.0).contains(p) {
                    v.push(Violation::new(
                        &format!("{who}.breach_probs[{i}]"),
                        "must be in [0, 1]",
                    ));
                }
            }
            if !(template.supply_units_factor > 0.0) {
                v.push(Violation::new(
                    &format!("{who}.supply_units_factor"),
                    "must be > 0",
                ));
            }
            if !(template.dispatch_delay_s >= 0.0) {
                v.push(Violation::new(
                    &format!("{who}.dispatch_delay_s"),
                    "must be >= 0",
                ));
            }
        }

        let task_weight_sum: f64 = self.tasks.values().map(|t| t.weight).sum();
        if !(task_weight_sum > 0.0) {
            v.push(Violation::new("tasks", "task type weights must sum to > 0"));
        }
        for (tt, template) in &self.tasks {
            let who = format!("tasks.{tt}");
            if !(template.weight >= 0.0) {
                v.push(Violation::new(&format!("{who}.weight"), "must be >= 0"));
            }
            let ranges = [
                ("flops_log10_range", template.flops_log10_range),
                ("input_gb_range", template.input_gb_range),
                ("output_gb_range", template.output_gb_range),
                ("urgency_range", template.urgency_range),
                ("sensitivity_range", template.sensitivity_range),
                ("memory_gb_range", template.memory_gb_range),
            ];
            for (name, (a, b)) in ranges {
                if !(a <= b) {
                    v.push(Violation::new(
                        &format!("{who}.{name}"),
                        "range must be ordered",
                    ));
                }
            }
            for (name, (a, b)) in [
                ("urgency_range", template.urgency_range),
                ("sensitivity_range", template.sensitivity_range),
            ] {
                if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                    v.push(Violation::new(
                        &format!("{who}.{name}"),
                        "must lie within [0, 1]",
                    ));
                }
            }
            if !(template.complexity_multiplier > 0.0) {
                v.push(Violation::new(
                    &format!("{who}.complexity_multiplier"),
                    "must be > 0",
                ));
            }
        }

        for violation in self.engine.validate() {
            v.push(Violation::new(
                &format!("engine.{}", violation.field),
                violation.message,
            ));
        }
        v
    }
}

/// Parses a `--set key=value` style value as a TOML literal, falling back to
/// a plain string.
fn parse_override_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Holder {
        v: toml::Value,
    }
    match toml::from_str::<Holder>(&format!("v = {raw}")) {
        Ok(h) => h.v,
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `doc[key] = value` for a dotted key path, creating intermediate
/// tables as needed.
pub fn set_dotted(
    doc: &mut toml::Value,
    key: &str,
    value: toml::Value,
) -> Result<(), ScenarioError> {
    let mut current = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ScenarioError::BadOverride {
            key: key.to_string(),
            reason: "empty path segment".to_string(),
        });
    }
    for part in &parts[..parts.len() - 1] {
        let table = current
            .as_table_mut()
            .ok_or_else(|| ScenarioError::BadOverride {
                key: key.to_string(),
                reason: format!("{part} is not a table"),
            })?;
        current = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = current
        .as_table_mut()
        .ok_or_else(|| ScenarioError::BadOverride {
            key: key.to_string(),
            reason: "parent is not a table".to_string(),
        })?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Applies `key=value` overrides to a scenario document and deserializes it.
pub fn resolve_scenario(
    base_toml: &str,
    overrides: &[(String, String)],
    seed: Option<u64>,
) -> Result<ScenarioConfig, ScenarioError> {
    let mut doc: toml::Value = toml::from_str(base_toml)?;
    for (key, raw) in overrides {
        set_dotted(&mut doc, key, parse_override_value(raw))?;
    }
    if let Some(seed) = seed {
        set_dotted(&mut doc, "sim.seed", toml::Value::Integer(seed as i64))?;
    }
    let scenario: ScenarioConfig = doc.try_into()?;
    Ok(scenario)
}
