//! Shared domain types: tasks, hardware, contractors, market state, cost
//! breakdowns and decision records.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque task identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub String);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque agent identifier. Ordering is lexicographic, which the decision
/// engine relies on for deterministic tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Workload category of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    FinancialDocAnalysis,
    RiskAssessment,
    PortfolioOptimization,
    SentimentAnalysis,
    GenericCompute,
}

impl TaskType {
    pub const ALL: [TaskType; 5] = [
        TaskType::FinancialDocAnalysis,
        TaskType::RiskAssessment,
        TaskType::PortfolioOptimization,
        TaskType::SentimentAnalysis,
        TaskType::GenericCompute,
    ];

    /// Ontology skill tags a contractor must cover to serve this task type.
    pub fn required_skills(self) -> &'static [&'static str] {
        match self {
            TaskType::FinancialDocAnalysis => &["finance", "document_analysis"],
            TaskType::RiskAssessment => &["statistics", "risk_modeling"],
            TaskType::PortfolioOptimization => &["optimization", "finance"],
            TaskType::SentimentAnalysis => &["nlp"],
            TaskType::GenericCompute => &["general_compute"],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TaskType::FinancialDocAnalysis => "financial_doc_analysis",
            TaskType::RiskAssessment => "risk_assessment",
            TaskType::PortfolioOptimization => "portfolio_optimization",
            TaskType::SentimentAnalysis => "sentiment_analysis",
            TaskType::GenericCompute => "generic_compute",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Memory a task needs while executing: weights, KV cache and activations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryFootprint {
    pub model_bytes: f64,
    pub kv_cache_bytes: f64,
    pub activations_bytes: f64,
}

impl MemoryFootprint {
    pub fn total_bytes(&self) -> f64 {
        self.model_bytes + self.kv_cache_bytes + self.activations_bytes
    }
}

/// A unit of work with its computational requirements and economics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub task_type: TaskType,
    /// Total floating-point operations the task requires.
    pub flops_required: f64,
    pub input_size_bytes: f64,
    pub output_size_bytes: f64,
    /// Value of the task to its owner, in currency units.
    pub value: f64,
    /// Urgency in [0, 1].
    pub urgency: f64,
    /// Data sensitivity in [0, 1].
    pub data_sensitivity: f64,
    /// Pricing multiplier for task complexity; > 0.
    pub complexity_multiplier: f64,
    /// Hard latency constraint in seconds, if any.
    pub max_latency_s: Option<f64>,
    /// Hard budget constraint, if any.
    pub max_budget: Option<f64>,
    pub required_skills: BTreeSet<String>,
    pub requirement_embedding: Vec<f64>,
    pub memory: MemoryFootprint,
}

impl Task {
    /// Checks the type-level invariants, returning one message per violation.
    pub fn invariant_violations(&self, embedding_dim: usize) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.flops_required > 0.0) {
            out.push(format!("{}: flops_required must be > 0", self.id));
        }
        if !(self.value >= 0.0) {
            out.push(format!("{}: value must be >= 0", self.id));
        }
        if !(0.0..=1.0).contains(&self.urgency) {
            out.push(format!("{}: urgency must be in [0, 1]", self.id));
        }
        if !(0.0..=1.0).contains(&self.data_sensitivity) {
            out.push(format!("{}: data_sensitivity must be in [0, 1]", self.id));
        }
        if !(self.complexity_multiplier > 0.0) {
            out.push(format!("{}: complexity_multiplier must be > 0", self.id));
        }
        if self.requirement_embedding.len() != embedding_dim {
            out.push(format!(
                "{}: requirement_embedding has dimension {}, expected {}",
                self.id,
                self.requirement_embedding.len(),
                embedding_dim
            ));
        }
        out
    }
}

/// One of the six contractor classes the scenario generator knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    GpuSpecialist,
    CpuOptimized,
    BudgetProvider,
    EdgeComputing,
    CloudService,
    QuantumComputing,
}

impl Archetype {
    pub const ALL: [Archetype; 6] = [
        Archetype::GpuSpecialist,
        Archetype::CpuOptimized,
        Archetype::BudgetProvider,
        Archetype::EdgeComputing,
        Archetype::CloudService,
        Archetype::QuantumComputing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Archetype::GpuSpecialist => "gpu_specialist",
            Archetype::CpuOptimized => "cpu_optimized",
            Archetype::BudgetProvider => "budget_provider",
            Archetype::EdgeComputing => "edge_computing",
            Archetype::CloudService => "cloud_service",
            Archetype::QuantumComputing => "quantum_computing",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Hardware parameters used by the cost equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    /// Peak throughput in FLOPS (operations per second).
    pub peak_flops: f64,
    /// Hourly cost of hardware utilization, currency/h.
    pub hw_cost_per_hour: f64,
    pub mem_total_bytes: f64,
    pub mem_cost_per_hour: f64,
    pub tdp_watts: f64,
    /// Utilization factor in (0, 1].
    pub utilization_factor: f64,
    /// Electricity price, currency per kWh.
    pub kwh_cost: f64,
    pub bandwidth_bytes_per_s: f64,
    pub transfer_cost_per_byte: f64,
    pub depreciation_per_hour: f64,
}

impl HardwareSpec {
    pub fn invariant_violations(&self, who: &str) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("peak_flops", self.peak_flops),
            ("hw_cost_per_hour", self.hw_cost_per_hour),
            ("mem_total_bytes", self.mem_total_bytes),
            ("mem_cost_per_hour", self.mem_cost_per_hour),
            ("tdp_watts", self.tdp_watts),
            ("kwh_cost", self.kwh_cost),
            ("bandwidth_bytes_per_s", self.bandwidth_bytes_per_s),
            ("transfer_cost_per_byte", self.transfer_cost_per_byte),
            ("depreciation_per_hour", self.depreciation_per_hour),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                out.push(format!("{who}: {name} must be > 0"));
            }
        }
        if !(self.utilization_factor > 0.0 && self.utilization_factor <= 1.0) {
            out.push(format!("{who}: utilization_factor must be in (0, 1]"));
        }
        out
    }
}

/// A contractor's advertised profile plus the simulation's hidden truth about
/// its behavior. The decision engine never reads the `true_*` fields; only
/// the executor does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractorProfile {
    pub id: AgentId,
    pub archetype: Archetype,
    pub skills: BTreeSet<String>,
    pub skill_embedding: Vec<f64>,
    pub hardware: HardwareSpec,
    /// Nominal asking price before market dynamics, currency.
    pub base_price: f64,
    /// Demand sensitivity of the dynamic pricing rule.
    pub demand_sensitivity: f64,
    /// Fraction of capacity currently committed, in [0, 1].
    pub capacity_utilization: f64,
    /// Per-attack-vector breach probabilities.
    pub breach_probs: Vec<f64>,
    /// Channel security level in [0, 1]; higher is safer.
    pub channel_security: f64,
    /// Fixed dispatch delay before the contractor starts work, seconds.
    pub dispatch_delay_s: f64,
    /// Hidden ground truth: probability an accepted task fails outright.
    pub true_failure_prob: f64,
    /// Hidden ground truth: probability the deliverable is degraded.
    pub true_quality_degradation_prob: f64,
}

impl ContractorProfile {
    pub fn invariant_violations(&self, embedding_dim: usize) -> Vec<String> {
        let mut out = self.hardware.invariant_violations(&self.id.0);
        if self.skill_embedding.len() != embedding_dim {
            out.push(format!(
                "{}: skill_embedding has dimension {}, expected {}",
                self.id,
                self.skill_embedding.len(),
                embedding_dim
            ));
        }
        if !(self.base_price > 0.0) {
            out.push(format!("{}: base_price must be > 0", self.id));
        }
        let unit = [
            ("capacity_utilization", self.capacity_utilization),
            ("channel_security", self.channel_security),
            ("true_failure_prob", self.true_failure_prob),
            (
                "true_quality_degradation_prob",
                self.true_quality_degradation_prob,
            ),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{}: {name} must be in [0, 1]", self.id));
            }
        }
        for (i, p) in self.breach_probs.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                out.push(format!("{}: breach_probs[{i}] must be in [0, 1]", self.id));
            }
        }
        out
    }
}

/// Market-wide signals driving dynamic pricing and decision weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub current_demand: f64,
    pub available_supply: f64,
    pub total_supply: f64,
    /// Normalized demand pressure signal, in [0, 1].
    pub market_pressure: f64,
    /// Smoothed market-wide fraction of failed executions, in [0, 1].
    pub failure_rate: f64,
    /// Relative price jitter band (e.g. 0.10 for plus/minus 10%).
    pub price_volatility: f64,
    /// Relative demand jitter band (e.g. 0.25 for plus/minus 25%).
    pub demand_fluctuation: f64,
}

impl MarketState {
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.available_supply >= 0.0 && self.available_supply <= self.total_supply) {
            out.push("market: available_supply must be in [0, total_supply]".to_string());
        }
        if !(0.0..=1.0).contains(&self.market_pressure) {
            out.push("market: market_pressure must be in [0, 1]".to_string());
        }
        if !(0.0..=1.0).contains(&self.failure_rate) {
            out.push("market: failure_rate must be in [0, 1]".to_string());
        }
        out
    }
}

/// Itemized cost of executing a task on one executor. Internal executions
/// populate the first five components, external ones the last six; unused
/// components stay zero. `total` always equals the component sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub compute: f64,
    pub memory: f64,
    pub energy: f64,
    pub opportunity: f64,
    pub depreciation: f64,
    pub price: f64,
    pub communication: f64,
    pub verification: f64,
    pub integration: f64,
    pub risk: f64,
    pub latency_penalty: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn zero() -> Self {
        Self::from_components([0.0; 11])
    }

    /// Builds a breakdown from the 11 components in field order, computing
    /// the total. Panics if any component is negative or non-finite: callers
    /// construct components from validated inputs, so a bad value here is a
    /// programming error.
    pub fn from_components(c: [f64; 11]) -> Self {
        for (i, v) in c.iter().enumerate() {
            assert!(
                v.is_finite() && *v >= 0.0,
                "cost component {i} must be finite and >= 0, got {v}"
            );
        }
        let total = c.iter().sum();
        Self {
            compute: c[0],
            memory: c[1],
            energy: c[2],
            opportunity: c[3],
            depreciation: c[4],
            price: c[5],
            communication: c[6],
            verification: c[7],
            integration: c[8],
            risk: c[9],
            latency_penalty: c[10],
            total,
        }
    }

    pub fn internal(
        compute: f64,
        memory: f64,
        energy: f64,
        opportunity: f64,
        depreciation: f64,
    ) -> Self {
        Self::from_components([
            compute,
            memory,
            energy,
            opportunity,
            depreciation,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ])
    }

    pub fn external(
        price: f64,
        communication: f64,
        verification: f64,
        integration: f64,
        risk: f64,
        latency_penalty: f64,
    ) -> Self {
        Self::from_components([
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            price,
            communication,
            verification,
            integration,
            risk,
            latency_penalty,
        ])
    }

    pub fn components(&self) -> [f64; 11] {
        [
            self.compute,
            self.memory,
            self.energy,
            self.opportunity,
            self.depreciation,
            self.price,
            self.communication,
            self.verification,
            self.integration,
            self.risk,
            self.latency_penalty,
        ]
    }

    /// True when `total` equals the component sum within 1e-9 relative
    /// tolerance.
    pub fn is_consistent(&self) -> bool {
        let sum: f64 = self.components().iter().sum();
        let scale = sum.abs().max(1.0);
        (self.total - sum).abs() <= 1e-9 * scale
    }
}

/// The normalized criteria weights used in a decision, in matrix column
/// order: cost, reliability, latency, security.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub cost: f64,
    pub reliability: f64,
    pub latency: f64,
    pub security: f64,
}

impl WeightVector {
    pub fn uniform() -> Self {
        Self {
            cost: 0.25,
            reliability: 0.25,
            latency: 0.25,
            security: 0.25,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.cost, self.reliability, self.latency, self.security]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            cost: a[0],
            reliability: a[1],
            latency: a[2],
            security: a[3],
        }
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Rescales to sum 1. Falls back to uniform weights when all components
    /// are zero.
    pub fn normalized(&self) -> Self {
        let s = self.sum();
        if s <= 0.0 {
            return Self::uniform();
        }
        Self::from_array(self.as_array().map(|w| w / s))
    }
}

/// Where a task was sent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "contractor", rename_all = "snake_case")]
pub enum Choice {
    Local,
    Outsource(AgentId),
}

impl Choice {
    pub fn is_outsource(&self) -> bool {
        matches!(self, Choice::Outsource(_))
    }
}

/// The decision engine's output for one task.
///
/// `internal_cost` is absent only when the task could not run locally at all
/// (memory-infeasible), in which case the engine was forced to outsource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub task_id: TaskId,
    pub choice: Choice,
    /// Best TOPSIS score, or the 0.5 sentinel when TOPSIS was degenerate or
    /// not evaluated (exploration, empty candidate set).
    pub topsis_score: f64,
    pub confidence: f64,
    pub exploration: bool,
    /// Exploration value at decision time (chosen external cost plus the
    /// configured learning-value term; the information-gain part is only
    /// known after execution and is accounted in the run ledger).
    pub exploration_value: Option<f64>,
    pub internal_cost: Option<CostBreakdown>,
    pub chosen_external_cost: Option<CostBreakdown>,
    pub weights_used: WeightVector,
}

impl DecisionRecord {
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.exploration && (self.confidence != 0.7 || self.topsis_score != 0.5) {
            out.push(format!(
                "{}: exploration decisions must carry confidence 0.7 and score 0.5",
                self.task_id
            ));
        }
        if self.choice == Choice::Local && self.chosen_external_cost.is_some() {
            out.push(format!(
                "{}: local choice must not carry an external cost",
                self.task_id
            ));
        }
        for (name, cost) in [
            ("internal_cost", &self.internal_cost),
            ("chosen_external_cost", &self.chosen_external_cost),
        ] {
            if let Some(c) = cost {
                if !c.is_consistent() {
                    out.push(format!("{}: {name} total != component sum", self.task_id));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_breakdown_totals_components() {
        let b = CostBreakdown::internal(2.0, 1.0, 0.0756, 18.0, 0.25);
        assert!(b.is_consistent());
        assert!((b.total - 21.3256).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn cost_breakdown_rejects_negative_component() {
        CostBreakdown::internal(-1.0, 0.0, 0.0, 0.0, 0.0);
    }

    #[test]
    fn weight_normalization_handles_zero() {
        let w = WeightVector::from_array([0.0; 4]).normalized();
        assert_eq!(w, WeightVector::uniform());
        let w = WeightVector::from_array([2.0, 1.0, 1.0, 0.0]).normalized();
        assert!((w.sum() - 1.0).abs() < 1e-12);
        assert!((w.cost - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exploration_record_invariant() {
        let rec = DecisionRecord {
            task_id: TaskId("t-1".into()),
            choice: Choice::Outsource(AgentId("c-1".into())),
            topsis_score: 0.5,
            confidence: 0.7,
            exploration: true,
            exploration_value: Some(1.0),
            internal_cost: Some(CostBreakdown::zero()),
            chosen_external_cost: Some(CostBreakdown::zero()),
            weights_used: WeightVector::uniform(),
        };
        assert!(rec.invariant_violations().is_empty());

        let bad = DecisionRecord {
            confidence: 0.9,
            ..rec
        };
        assert_eq!(bad.invariant_violations().len(), 1);
    }

    #[test]
    fn agent_id_ordering_is_lexicographic() {
        assert!(AgentId("c-02".into()) < AgentId("c-10".into()));
    }
}
