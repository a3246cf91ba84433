//! Bayesian reliability estimation with temporal decay, plus the per-outcome
//! probability estimates the risk model consumes.
//!
//! Success/failure gets the Beta-posterior treatment; quality and security
//! outcomes are tracked as EWMA estimates toward observed indicators. A
//! month is 30 days (720 simulation hours) for decay purposes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cost::RiskEstimates;
use crate::model::{AgentId, ContractorProfile, Task};

pub const HOURS_PER_MONTH: f64 = 30.0 * 24.0;

/// What happened to a delegated task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    QualityDegraded,
    SecurityIncident,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        matches!(self, Outcome::Success)
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
            Outcome::QualityDegraded => "quality_degraded",
            Outcome::SecurityIncident => "security_incident",
        }
    }
}

/// Reliability and bad-outcome statistics for one contractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationRecord {
    pub contractor_id: AgentId,
    pub n_success: u64,
    pub n_total: u64,
    pub last_update_hours: f64,
    /// Beta prior (alpha_success, beta_failure).
    pub prior: (f64, f64),
    /// EWMA estimate of the quality-degradation probability.
    pub estimated_quality_prob: f64,
    /// EWMA estimate of the security-incident probability.
    pub estimated_security_prob: f64,
}

impl ReputationRecord {
    pub fn fresh(contractor_id: AgentId, prior: (f64, f64), now_hours: f64) -> Self {
        Self {
            contractor_id,
            n_success: 0,
            n_total: 0,
            last_update_hours: now_hours,
            prior,
            // Mildly cautious starting points; EWMA pulls them toward the
            // observed incident rates.
            estimated_quality_prob: 0.10,
            estimated_security_prob: 0.05,
        }
    }

    /// Beta-posterior mean success probability decayed by idle time:
    /// `(alpha + n_success) / (alpha + beta + n_total) * exp(-lambda * idle_months)`.
    pub fn reliability(&self, now_hours: f64, decay_lambda_per_month: f64) -> f64 {
        let (alpha, beta) = self.prior;
        let posterior = (alpha + self.n_success as f64) / (alpha + beta + self.n_total as f64);
        let idle_months = ((now_hours - self.last_update_hours).max(0.0)) / HOURS_PER_MONTH;
        posterior * (-decay_lambda_per_month * idle_months).exp()
    }

    /// Beta-posterior mean failure probability (no decay): the failure-side
    /// counterpart of `reliability`.
    pub fn estimated_failure_prob(&self) -> f64 {
        let (alpha, beta) = self.prior;
        let failures = (self.n_total - self.n_success) as f64;
        (beta + failures) / (alpha + beta + self.n_total as f64)
    }

    /// Records one observed outcome, updating counts, the EWMA incident
    /// estimates and the last-update time.
    pub fn record_outcome(mut self, outcome: Outcome, now_hours: f64, ewma_lambda: f64) -> Self {
        self.n_total += 1;
        if outcome.is_success() {
            self.n_success += 1;
        }
        let quality_ind = if outcome == Outcome::QualityDegraded {
            1.0
        } else {
            0.0
        };
        let security_ind = if outcome == Outcome::SecurityIncident {
            1.0
        } else {
            0.0
        };
        self.estimated_quality_prob =
            ewma_lambda * quality_ind + (1.0 - ewma_lambda) * self.estimated_quality_prob;
        self.estimated_security_prob =
            ewma_lambda * security_ind + (1.0 - ewma_lambda) * self.estimated_security_prob;
        self.last_update_hours = now_hours;
        self
    }

    /// The probability estimates the external-cost risk term consumes.
    pub fn risk_estimates(&self) -> RiskEstimates {
        RiskEstimates {
            failure: self.estimated_failure_prob(),
            security: self.estimated_security_prob,
            quality: self.estimated_quality_prob,
        }
    }
}

/// Composite breach probability scaled by data sensitivity and channel
/// weakness. Higher channel security lowers the risk via `1 - channel_security`.
pub fn security_risk(contractor: &ContractorProfile, task: &Task) -> f64 {
    let survive_all: f64 = contractor.breach_probs.iter().map(|p| 1.0 - p).product();
    (1.0 - survive_all) * task.data_sensitivity * (1.0 - contractor.channel_security)
}

/// All contractors' reputation records, owned by the simulation loop.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReputationLedger {
    records: BTreeMap<AgentId, ReputationRecord>,
}

impl ReputationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// The stored record, or a fresh one with the given prior.
    pub fn record(&self, id: &AgentId, prior: (f64, f64), now_hours: f64) -> ReputationRecord {
        self.records
            .get(id)
            .cloned()
            .unwrap_or_else(|| ReputationRecord::fresh(id.clone(), prior, now_hours))
    }

    pub fn observe(
        &mut self,
        id: &AgentId,
        outcome: Outcome,
        prior: (f64, f64),
        now_hours: f64,
        ewma_lambda: f64,
    ) {
        let record = self.record(id, prior, now_hours);
        self.records.insert(
            id.clone(),
            record.record_outcome(outcome, now_hours, ewma_lambda),
        );
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, &ReputationRecord)> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
