//! Decision-engine configuration and validation.

use serde::{Deserialize, Serialize};

/// Blend weights for the skill-compatibility score: ontological set match,
/// embedding similarity and historical performance. Must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillBlendWeights {
    pub ontological: f64,
    pub embedding: f64,
    pub performance: f64,
}

impl Default for SkillBlendWeights {
    fn default() -> Self {
        Self {
            ontological: 0.3,
            embedding: 0.5,
            performance: 0.2,
        }
    }
}

impl SkillBlendWeights {
    pub fn sum(&self) -> f64 {
        self.ontological + self.embedding + self.performance
    }
}

/// A named bound violation found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// All tunable parameters of the decision engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Exploration rate of the epsilon-greedy preprocessing step.
    pub epsilon: f64,
    /// Skill-compatibility threshold below which candidates are filtered out.
    pub theta_skill: f64,
    /// Minimum TOPSIS score required to outsource.
    pub tau_threshold: f64,
    /// Minimum decision confidence required to outsource.
    pub rho_min: f64,
    /// Correlation penalty factor for criteria weight adjustment.
    pub alpha_corr: f64,
    /// Market responsiveness of the dynamic weight blend.
    pub beta_market: f64,
    pub skill_weights: SkillBlendWeights,
    /// EWMA learning rate for cost calibration and tracked estimates.
    pub ewma_lambda: f64,
    /// Reliability decay rate per month of inactivity.
    pub decay_lambda_per_month: f64,
    /// Beta prior (successes, failures) for reliability estimation.
    pub beta_prior: (f64, f64),
    /// Critical value for the confidence interval (1.96 for 95%).
    pub z_alpha_half: f64,
    /// Weight of the information-gain term in the exploration value.
    pub learning_value_weight: f64,
    /// Impact severity multiplier of the risk cost.
    pub gamma_impact: f64,
    /// Flat protocol overhead added to every outsourced communication.
    pub protocol_overhead_cost: f64,
    /// Flat cost of verifying an outsourced deliverable.
    pub verification_cost: f64,
    /// Flat cost of integrating an outsourced deliverable.
    pub integration_cost: f64,
    /// Dimension of all skill and requirement embeddings.
    pub embedding_dim: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            theta_skill: 0.7,
            tau_threshold: 0.6,
            rho_min: 0.8,
            alpha_corr: 0.3,
            beta_market: 0.7,
            skill_weights: SkillBlendWeights::default(),
            ewma_lambda: 0.2,
            decay_lambda_per_month: 0.1,
            beta_prior: (1.0, 1.0),
            z_alpha_half: 1.96,
            learning_value_weight: 0.0,
            gamma_impact: 1.0,
            protocol_overhead_cost: 0.002,
            verification_cost: 0.02,
            integration_cost: 0.02,
            embedding_dim: 8,
        }
    }
}

impl EngineConfig {
    /// Validates every bound, returning an empty list iff the configuration
    /// is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let unit_interval = [
            ("epsilon", self.epsilon),
            ("theta_skill", self.theta_skill),
            ("tau_threshold", self.tau_threshold),
            ("rho_min", self.rho_min),
        ];
        for (field, value) in unit_interval {
            if !(0.0..=1.0).contains(&value) {
                v.push(Violation::new(field, format!("{value} not in [0, 1]")));
            }
        }
        if !(0.1..=0.3).contains(&self.ewma_lambda) {
            v.push(Violation::new(
                "ewma_lambda",
                format!("{} not in [0.1, 0.3]", self.ewma_lambda),
            ));
        }
        if (self.skill_weights.sum() - 1.0).abs() > 1e-9 {
            v.push(Violation::new(
                "skill_weights",
                format!("components sum to {}, expected 1", self.skill_weights.sum()),
            ));
        }
        for (field, value) in [
            ("skill_weights.ontological", self.skill_weights.ontological),
            ("skill_weights.embedding", self.skill_weights.embedding),
            ("skill_weights.performance", self.skill_weights.performance),
        ] {
            if !(0.0..=1.0).contains(&value) {
                v.push(Violation::new(field, format!("{value} not in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha_corr) {
            v.push(Violation::new(
                "alpha_corr",
                format!("{} not in [0, 1]", self.alpha_corr),
            ));
        }
        if !(0.0..=1.0).contains(&self.beta_market) {
            v.push(Violation::new(
                "beta_market",
                format!("{} not in [0, 1]", self.beta_market),
            ));
        }
        if !(self.decay_lambda_per_month >= 0.0) {
            v.push(Violation::new("decay_lambda_per_month", "must be >= 0"));
        }
        if !(self.beta_prior.0 > 0.0 && self.beta_prior.1 > 0.0) {
            v.push(Violation::new("beta_prior", "both parameters must be > 0"));
        }
        if !(self.z_alpha_half > 0.0) {
            v.push(Violation::new("z_alpha_half", "must be > 0"));
        }
        if !(self.learning_value_weight >= 0.0) {
            v.push(Violation::new("learning_value_weight", "must be >= 0"));
        }
        if !(self.gamma_impact >= 0.0) {
            v.push(Violation::new("gamma_impact", "must be >= 0"));
        }
        for (field, value) in [
            ("protocol_overhead_cost", self.protocol_overhead_cost),
            ("verification_cost", self.verification_cost),
            ("integration_cost", self.integration_cost),
        ] {
            if !(value >= 0.0) {
                v.push(Violation::new(field, "must be >= 0"));
            }
        }
        // One axis per task type plus the shared component; see population.rs.
        if self.embedding_dim < 6 {
            v.push(Violation::new("embedding_dim", "must be >= 6"));
        }
        v
    }
}
