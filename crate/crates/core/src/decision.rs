//! The outsourcing decision engine: epsilon-greedy exploration, skill
//! gating, correlation-adjusted dynamic weights, TOPSIS ranking, the
//! reservation-price check and decision confidence.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::cost::{self, CostError, QueuedWork};
use crate::metrics::pearson;
use crate::model::{
    AgentId, Choice, ContractorProfile, CostBreakdown, DecisionRecord, HardwareSpec, MarketState,
    Task, TaskType, WeightVector,
};
use crate::reputation::{self, ReputationLedger};

/// Criteria matrix columns, in order.
pub const CRITERIA: [&str; 4] = ["cost", "reliability", "latency", "security"];

/// Per-column optimization direction: cost, latency and security risk are
/// lower-better; reliability is higher-better.
pub const LOWER_IS_BETTER: [bool; 4] = [true, false, true, true];

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("embedding dimension mismatch: task {task_dim}, contractor {contractor_dim}")]
    DimensionMismatch {
        task_dim: usize,
        contractor_dim: usize,
    },
    #[error("criteria matrix is empty")]
    EmptyMatrix,
    #[error("task {0} cannot run locally and no contractor is eligible")]
    NoFeasibleExecutor(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// One candidate's row of criteria values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRow {
    pub contractor: AgentId,
    /// [external cost, reliability, latency seconds, security risk]
    pub values: [f64; 4],
}

/// Rows of eligible candidates over the four decision criteria.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CriteriaMatrix {
    pub rows: Vec<CriteriaRow>,
}

impl CriteriaMatrix {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }
}

/// Success statistics for one (contractor, task type) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    pub successes: u64,
    pub attempts: u64,
}

/// The client's decision history: per-pair performance and the EWMA of past
/// normalized criteria weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionHistory {
    perf: BTreeMap<(AgentId, TaskType), PairStats>,
    historical_weights: WeightVector,
}

impl Default for DecisionHistory {
    fn default() -> Self {
        Self {
            perf: BTreeMap::new(),
            historical_weights: WeightVector::uniform(),
        }
    }
}

impl DecisionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Observed success fraction for similar work, defaulting to 0.5 when
    /// the pair has no history.
    pub fn historical_performance(&self, contractor: &AgentId, task_type: TaskType) -> f64 {
        match self.perf.get(&(contractor.clone(), task_type)) {
            Some(s) if s.attempts > 0 => s.successes as f64 / s.attempts as f64,
            _ => 0.5,
        }
    }

    pub fn pair_stats(&self, contractor: &AgentId, task_type: TaskType) -> PairStats {
        self.perf
            .get(&(contractor.clone(), task_type))
            .copied()
            .unwrap_or_default()
    }

    /// Pooled outcomes over all pairs similar to (any type, contractor):
    /// the candidate's full track record.
    pub fn candidate_stats(&self, contractor: &AgentId) -> PairStats {
        let mut total = PairStats::default();
        for tt in TaskType::ALL {
            let s = self.pair_stats(contractor, tt);
            total.successes += s.successes;
            total.attempts += s.attempts;
        }
        total
    }

    pub fn record_outcome(&mut self, contractor: &AgentId, task_type: TaskType, success: bool) {
        let stats = self
            .perf
            .entry((contractor.clone(), task_type))
            .or_default();
        stats.attempts += 1;
        if success {
            stats.successes += 1;
        }
    }

    pub fn historical_weights(&self) -> WeightVector {
        self.historical_weights
    }

    /// Folds a decision's normalized weights into the historical EWMA.
    pub fn note_weights(&mut self, used: WeightVector, ewma_lambda: f64) {
        let prev = self.historical_weights.as_array();
        let new = used.as_array();
        let mut blended = [0.0; 4];
        for i in 0..4 {
            blended[i] = ewma_lambda * new[i] + (1.0 - ewma_lambda) * prev[i];
        }
        self.historical_weights = WeightVector::from_array(blended).normalized();
    }
}

fn jaccard(a: &std::collections::BTreeSet<String>, b: &std::collections::BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    let intersection = a.intersection(b).count();
    intersection as f64 / union as f64
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Blended skill compatibility: Jaccard set match, clamped cosine embedding
/// similarity and historical performance.
pub fn skill_compatibility(
    contractor: &ContractorProfile,
    task: &Task,
    history: &DecisionHistory,
    config: &EngineConfig,
) -> Result<f64, EngineError> {
    if contractor.skill_embedding.len() != task.requirement_embedding.len() {
        return Err(EngineError::DimensionMismatch {
            task_dim: task.requirement_embedding.len(),
            contractor_dim: contractor.skill_embedding.len(),
        });
    }
    let w = config.skill_weights;
    let ontological = jaccard(&contractor.skills, &task.required_skills);
    let embedding = cosine(&contractor.skill_embedding, &task.requirement_embedding).max(0.0);
    let performance = history.historical_performance(&contractor.id, task.task_type);
    Ok(w.ontological * ontological + w.embedding * embedding + w.performance * performance)
}

/// Market-adaptive criteria weights: each raw weight blends a market/task
/// signal with the historical weight, then the vector is normalized.
pub fn dynamic_weights(
    market: &MarketState,
    task: &Task,
    history: &DecisionHistory,
    beta_market: f64,
) -> WeightVector {
    let hist = history.historical_weights().as_array();
    let signals = [
        market.market_pressure,
        market.failure_rate,
        task.urgency,
        task.data_sensitivity,
    ];
    let mut raw = [0.0; 4];
    for i in 0..4 {
        raw[i] = beta_market * signals[i] + (1.0 - beta_market) * hist[i];
    }
    WeightVector::from_array(raw).normalized()
}

/// Pearson correlations between criteria columns; fewer than two rows or a
/// zero-variance column contribute zero correlation.
fn column_correlations(matrix: &CriteriaMatrix) -> [[f64; 4]; 4] {
    let mut rho = [[0.0; 4]; 4];
    if matrix.rows.len() < 2 {
        return rho;
    }
    let cols: Vec<Vec<f64>> = (0..4).map(|j| matrix.column(j)).collect();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let r = pearson(&cols[i], &cols[j]).unwrap_or(0.0);
            rho[i][j] = r;
            rho[j][i] = r;
        }
    }
    rho
}

/// Downweights criteria that are redundant with others:
/// `w'_i = w_i * max(0, 1 - alpha * sum_j |rho_ij|)`, renormalized.
pub fn correlation_adjust(
    weights: WeightVector,
    matrix: &CriteriaMatrix,
    alpha_corr: f64,
) -> WeightVector {
    let rho = column_correlations(matrix);
    let w = weights.as_array();
    let mut adjusted = [0.0; 4];
    for i in 0..4 {
        let penalty: f64 = (0..4).filter(|&j| j != i).map(|j| rho[i][j].abs()).sum();
        adjusted[i] = w[i] * (1.0 - alpha_corr * penalty).max(0.0);
    }
    WeightVector::from_array(adjusted).normalized()
}

/// TOPSIS closeness scores, one per matrix row.
///
/// Columns are vector-normalized (zero-norm columns pass through as zeros),
/// weighted, and scored by relative closeness to the direction-aware ideal
/// point. A row equidistant from both ideals (all rows identical) scores 0.5.
pub fn topsis(matrix: &CriteriaMatrix, weights: &WeightVector) -> Result<Vec<f64>, EngineError> {
    if matrix.is_empty() {
        return Err(EngineError::EmptyMatrix);
    }
    let w = weights.as_array();
    let n = matrix.rows.len();

    let mut weighted = vec![[0.0f64; 4]; n];
    for j in 0..4 {
        let col = matrix.column(j);
        let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (i, v) in col.iter().enumerate() {
            let normalized = if norm == 0.0 { 0.0 } else { v / norm };
            weighted[i][j] = normalized * w[j];
        }
    }

    let mut ideal = [0.0f64; 4];
    let mut anti_ideal = [0.0f64; 4];
    for j in 0..4 {
        let column: Vec<f64> = weighted.iter().map(|r| r[j]).collect();
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if LOWER_IS_BETTER[j] {
            ideal[j] = min;
            anti_ideal[j] = max;
        } else {
            ideal[j] = max;
            anti_ideal[j] = min;
        }
    }

    let scores = weighted
        .iter()
        .map(|row| {
            let mut d_pos = 0.0;
            let mut d_neg = 0.0;
            for j in 0..4 {
                d_pos += (row[j] - ideal[j]).powi(2);
                d_neg += (row[j] - anti_ideal[j]).powi(2);
            }
            let d_pos = d_pos.sqrt();
            let d_neg = d_neg.sqrt();
            if d_pos + d_neg == 0.0 {
                0.5
            } else {
                d_neg / (d_pos + d_neg)
            }
        })
        .collect();
    Ok(scores)
}

/// Reservation-price check: outsourcing is only rational strictly below the
/// client's own execution cost.
pub fn nash_accepts(internal: &CostBreakdown, best_external: &CostBreakdown) -> bool {
    best_external.total < internal.total
}

/// Bootstrap-style decision confidence from historical outcomes of similar
/// (task type, candidate) pairs — pooled over the candidate's task types,
/// since reliability travels with the contractor. No history yields the 0.5
/// prior; a zero-variance success proportion yields full confidence.
pub fn decision_confidence(
    history: &DecisionHistory,
    _task_type: TaskType,
    candidate: &AgentId,
    z_alpha_half: f64,
) -> f64 {
    let stats = history.candidate_stats(candidate);
    if stats.attempts == 0 {
        return 0.5;
    }
    let n = stats.attempts as f64;
    let p = stats.successes as f64 / n;
    if p == 0.0 || p == 1.0 {
        return 1.0;
    }
    (1.0 - z_alpha_half * (p * (1.0 - p)).sqrt() / n.sqrt()).clamp(0.0, 1.0)
}

/// Everything the engine reads to decide one task. The candidate slice is
/// the full discovered pool; eligibility filtering happens inside.
pub struct DecisionInputs<'a> {
    pub task: &'a Task,
    pub local_hardware: &'a HardwareSpec,
    pub local_queue: &'a [QueuedWork],
    pub candidates: &'a [ContractorProfile],
    pub market: &'a MarketState,
    pub reputation: &'a ReputationLedger,
    pub history: &'a DecisionHistory,
    pub now_hours: f64,
}

fn external_for(
    inputs: &DecisionInputs<'_>,
    contractor: &ContractorProfile,
    config: &EngineConfig,
) -> Result<CostBreakdown, EngineError> {
    let record = inputs
        .reputation
        .record(&contractor.id, config.beta_prior, inputs.now_hours);
    Ok(cost::external_cost(
        inputs.task,
        contractor,
        inputs.market,
        &record.risk_estimates(),
        config,
    )?)
}

/// Decides whether to run `task` locally or outsource it.
///
/// With probability epsilon (and a non-empty pool) the engine explores: it
/// picks a uniformly random candidate, bypassing the skill threshold, and
/// returns immediately with the exploration sentinel score and confidence.
/// Otherwise it filters candidates by skill compatibility, builds the
/// criteria matrix, applies correlation-adjusted dynamic weights, ranks by
/// TOPSIS and outsources only when score, confidence and the reservation
/// price all agree.
pub fn decide(
    inputs: &DecisionInputs<'_>,
    config: &EngineConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionRecord, EngineError> {
    let task = inputs.task;
    let internal = match cost::internal_cost(task, inputs.local_hardware, inputs.local_queue) {
        Ok(breakdown) => Some(breakdown),
        Err(CostError::InfeasibleLocal { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    // Epsilon-greedy preprocessing: the draw happens on every decision so
    // the stream stays aligned across epsilon settings.
    let explore_draw: f64 = rng.gen();
    if explore_draw < config.epsilon && !inputs.candidates.is_empty() {
        let pick = rng.gen_range(0..inputs.candidates.len());
        let contractor = &inputs.candidates[pick];
        let external = external_for(inputs, contractor, config)?;
        let weights = dynamic_weights(inputs.market, task, inputs.history, config.beta_market);
        return Ok(DecisionRecord {
            task_id: task.id.clone(),
            choice: Choice::Outsource(contractor.id.clone()),
            topsis_score: 0.5,
            confidence: 0.7,
            exploration: true,
            exploration_value: Some(external.total),
            internal_cost: internal,
            chosen_external_cost: Some(external),
            weights_used: weights,
        });
    }

    let mut eligible: Vec<&ContractorProfile> = Vec::new();
    for candidate in inputs.candidates {
        let compat = skill_compatibility(candidate, task, inputs.history, config)?;
        if compat >= config.theta_skill {
            eligible.push(candidate);
        }
    }

    let weights = dynamic_weights(inputs.market, task, inputs.history, config.beta_market);

    if eligible.is_empty() {
        let internal =
            internal.ok_or_else(|| EngineError::NoFeasibleExecutor(task.id.0.clone()))?;
        return Ok(DecisionRecord {
            task_id: task.id.clone(),
            choice: Choice::Local,
            topsis_score: 0.5,
            confidence: 0.5,
            exploration: false,
            exploration_value: None,
            internal_cost: Some(internal),
            chosen_external_cost: None,
            weights_used: weights,
        });
    }

    let mut matrix = CriteriaMatrix::default();
    let mut externals: Vec<CostBreakdown> = Vec::with_capacity(eligible.len());
    for contractor in &eligible {
        let external = external_for(inputs, contractor, config)?;
        let record = inputs
            .reputation
            .record(&contractor.id, config.beta_prior, inputs.now_hours);
        let reliability = record.reliability(inputs.now_hours, config.decay_lambda_per_month);
        let latency = cost::estimated_latency_s(task, contractor);
        let security = reputation::security_risk(contractor, task);
        matrix.rows.push(CriteriaRow {
            contractor: contractor.id.clone(),
            values: [external.total, reliability, latency, security],
        });
        externals.push(external);
    }

    let weights = correlation_adjust(weights, &matrix, config.alpha_corr);
    let scores = topsis(&matrix, &weights)?;

    // Argmax with deterministic ties toward the lowest contractor id; rows
    // are already sorted by candidate order, so compare ids explicitly.
    let mut best = 0;
    for i in 1..scores.len() {
        let better = scores[i] > scores[best]
            || (scores[i] == scores[best]
                && matrix.rows[i].contractor < matrix.rows[best].contractor);
        if better {
            best = i;
        }
    }
    let best_score = scores[best];
    let best_external = externals[best];
    let best_id = matrix.rows[best].contractor.clone();
    let confidence = decision_confidence(
        inputs.history,
        task.task_type,
        &best_id,
        config.z_alpha_half,
    );

    let within_budget = task
        .max_budget
        .map(|budget| best_external.total <= budget)
        .unwrap_or(true);
    let outsource = match &internal {
        // Local execution impossible: forced outsourcing to the TOPSIS
        // winner regardless of thresholds.
        None => true,
        Some(internal) => {
            best_score > config.tau_threshold
                && confidence > config.rho_min
                && nash_accepts(internal, &best_external)
                && within_budget
        }
    };

    if outsource {
        Ok(DecisionRecord {
            task_id: task.id.clone(),
            choice: Choice::Outsource(best_id),
            topsis_score: best_score,
            confidence,
            exploration: false,
            exploration_value: None,
            internal_cost: internal,
            chosen_external_cost: Some(best_external),
            weights_used: weights,
        })
    } else {
        Ok(DecisionRecord {
            task_id: task.id.clone(),
            choice: Choice::Local,
            topsis_score: best_score,
            confidence,
            exploration: false,
            exploration_value: None,
            internal_cost: internal,
            chosen_external_cost: None,
            weights_used: weights,
        })
    }
}
