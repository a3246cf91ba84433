//! Per-run and cross-run statistics: cost reduction, time savings, Pearson
//! correlations and the windowed total-variation convergence diagnostic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::Choice;
use crate::sim::RunLedger;

/// Aggregate statistics of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Percent cost reduction versus the all-local counterfactual. Negative
    /// when outsourcing lost money; absent when no counterfactual exists.
    pub cost_reduction_pct: Option<f64>,
    pub time_savings_pct: Option<f64>,
    pub outsourcing_rate_pct: f64,
    pub exploration_rate_pct: f64,
    pub mean_topsis_score: f64,
    pub throughput_tasks_per_hour: f64,
    /// First-attempt success percentage across executed tasks.
    pub success_rate_pct: f64,
    pub n_decisions: u64,
}

impl RunMetrics {
    pub fn from_ledger(ledger: &RunLedger) -> Self {
        let n_decisions = ledger
            .entries
            .iter()
            .filter(|e| e.decision.is_some())
            .count() as u64;
        let n = n_decisions.max(1) as f64;
        let outsourced = ledger
            .entries
            .iter()
            .filter_map(|e| e.decision.as_ref())
            .filter(|d| d.choice.is_outsource())
            .count() as f64;
        let explored = ledger
            .entries
            .iter()
            .filter_map(|e| e.decision.as_ref())
            .filter(|d| d.exploration)
            .count() as f64;
        let topsis_sum: f64 = ledger
            .entries
            .iter()
            .filter_map(|e| e.decision.as_ref())
            .map(|d| d.topsis_score)
            .sum();
        let executed = ledger
            .entries
            .iter()
            .filter(|e| e.outcome.is_some())
            .count();
        let first_attempt_ok = ledger
            .entries
            .iter()
            .filter_map(|e| e.outcome.as_ref())
            .filter(|o| o.kind.is_success())
            .count();
        let success_rate_pct = if executed == 0 {
            100.0
        } else {
            100.0 * first_attempt_ok as f64 / executed as f64
        };
        let throughput = if ledger.duration_hours > 0.0 {
            ledger.entries.len() as f64 / ledger.duration_hours
        } else {
            0.0
        };
        Self {
            cost_reduction_pct: cost_reduction(ledger),
            time_savings_pct: time_savings(ledger),
            outsourcing_rate_pct: 100.0 * outsourced / n,
            exploration_rate_pct: 100.0 * explored / n,
            mean_topsis_score: if n_decisions == 0 {
                0.0
            } else {
                topsis_sum / n
            },
            throughput_tasks_per_hour: throughput,
            success_rate_pct,
            n_decisions,
        }
    }
}

/// Percent reduction of realized total cost against the recorded local
/// counterfactuals. Tasks without a counterfactual (forced outsourcing) are
/// excluded from both sums. `None` when the denominator is zero.
pub fn cost_reduction(ledger: &RunLedger) -> Option<f64> {
    let mut counterfactual = 0.0;
    let mut actual = 0.0;
    for entry in &ledger.entries {
        if let Some(cf) = entry.counterfactual_local_cost {
            counterfactual += cf;
            actual += entry.actual_total_cost;
        }
    }
    if counterfactual > 0.0 {
        Some(100.0 * (counterfactual - actual) / counterfactual)
    } else {
        None
    }
}

/// Percent reduction of realized latency against the local counterfactual,
/// with the same pairing convention as [`cost_reduction`].
pub fn time_savings(ledger: &RunLedger) -> Option<f64> {
    let mut counterfactual = 0.0;
    let mut actual = 0.0;
    for entry in &ledger.entries {
        if let Some(cf) = entry.counterfactual_local_latency_s {
            counterfactual += cf;
            actual += entry.actual_total_latency_s;
        }
    }
    if counterfactual > 0.0 {
        Some(100.0 * (counterfactual - actual) / counterfactual)
    } else {
        None
    }
}

/// Pearson correlation coefficient. `None` for fewer than two points or
/// zero variance on either axis.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// One run's coordinates in the cross-run economic-validation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossRunPoint {
    pub agent_count: f64,
    pub outsourcing_rate_pct: f64,
    pub cost_reduction_pct: f64,
}

/// The two validation correlations computed over run-level points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub outsourcing_cost_reduction: Option<f64>,
    pub agents_cost_reduction: Option<f64>,
}

/// Pearson correlations over at least three run-level points; fewer points
/// or degenerate variance yield absent coefficients.
pub fn correlations(points: &[CrossRunPoint]) -> CorrelationBlock {
    if points.len() < 3 {
        return CorrelationBlock {
            outsourcing_cost_reduction: None,
            agents_cost_reduction: None,
        };
    }
    let cr: Vec<f64> = points.iter().map(|p| p.cost_reduction_pct).collect();
    let out: Vec<f64> = points.iter().map(|p| p.outsourcing_rate_pct).collect();
    let agents: Vec<f64> = points.iter().map(|p| p.agent_count).collect();
    CorrelationBlock {
        outsourcing_cost_reduction: pearson(&out, &cr),
        agents_cost_reduction: pearson(&agents, &cr),
    }
}

/// Total-variation distance between two empirical distributions over the
/// union of their keys.
fn tv_distance(p: &BTreeMap<&Choice, f64>, q: &BTreeMap<&Choice, f64>) -> f64 {
    let mut keys: Vec<&&Choice> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut sum = 0.0;
    for k in keys {
        let a = p.get(*k).copied().unwrap_or(0.0);
        let b = q.get(*k).copied().unwrap_or(0.0);
        sum += (a - b).abs();
    }
    sum / 2.0
}

fn window_distribution(window: &[Choice]) -> BTreeMap<&Choice, f64> {
    let mut counts: BTreeMap<&Choice, f64> = BTreeMap::new();
    for c in window {
        *counts.entry(c).or_insert(0.0) += 1.0;
    }
    let n = window.len() as f64;
    for v in counts.values_mut() {
        *v /= n;
    }
    counts
}

/// Total-variation distances between the empirical decision-choice
/// distributions of consecutive windows. A decreasing-to-plateau sequence
/// indicates the decision process has mixed to a stationary distribution.
/// The stream must cover at least two windows; a trailing partial window is
/// dropped.
pub fn convergence_diagnostic(choices: &[Choice], window: usize) -> Vec<f64> {
    assert!(window > 0, "window must be positive");
    assert!(
        choices.len() >= 2 * window,
        "stream length {} shorter than two windows of {}",
        choices.len(),
        window
    );
    let windows: Vec<&[Choice]> = choices.chunks_exact(window).collect();
    windows
        .windows(2)
        .map(|pair| tv_distance(&window_distribution(pair[0]), &window_distribution(pair[1])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AgentId;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pearson_perfectly_linear() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -0.5 * x + 3.0).collect();
        assert!((pearson(&xs, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_zero_variance_is_absent() {
        let xs = [1.0, 1.0, 1.0];
        let ys = [1.0, 2.0, 3.0];
        assert!(pearson(&xs, &ys).is_none());
    }

    #[test]
    fn pearson_matches_textbook_formula() {
        // Independent oracle: r = (n*sum(xy) - sum(x)sum(y)) /
        // sqrt((n*sum(x^2) - sum(x)^2)(n*sum(y^2) - sum(y)^2)).
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(3..40);
            let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| 0.7 * x + rng.gen_range(-5.0..5.0))
                .collect();
            let nf = n as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
            let sxx: f64 = xs.iter().map(|a| a * a).sum();
            let syy: f64 = ys.iter().map(|a| a * a).sum();
            let denom = ((nf * sxx - sx * sx) * (nf * syy - sy * sy)).sqrt();
            if denom == 0.0 {
                continue;
            }
            let oracle = (nf * sxy - sx * sy) / denom;
            let got = pearson(&xs, &ys).unwrap();
            assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
        }
    }

    #[test]
    fn correlations_need_three_points() {
        let pts = [
            CrossRunPoint {
                agent_count: 5.0,
                outsourcing_rate_pct: 30.0,
                cost_reduction_pct: 50.0,
            },
            CrossRunPoint {
                agent_count: 10.0,
                outsourcing_rate_pct: 25.0,
                cost_reduction_pct: 45.0,
            },
        ];
        let block = correlations(&pts);
        assert!(block.outsourcing_cost_reduction.is_none());
        assert!(block.agents_cost_reduction.is_none());
    }

    fn local() -> Choice {
        Choice::Local
    }

    fn out(i: usize) -> Choice {
        Choice::Outsource(AgentId(format!("c-{i:03}")))
    }

    #[test]
    fn tv_near_zero_for_identical_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let choices: Vec<Choice> = (0..4000)
            .map(|_| {
                if rng.gen::<f64>() < 0.5 {
                    local()
                } else {
                    out(rng.gen_range(0..4))
                }
            })
            .collect();
        let tvs = convergence_diagnostic(&choices, 1000);
        for tv in tvs {
            assert!(tv < 0.08, "iid windows should be close, tv = {tv}");
        }
    }

    #[test]
    fn tv_spikes_at_regime_switch() {
        let mut choices = vec![local(); 3000];
        choices.extend(std::iter::repeat_with(|| out(1)).take(3000));
        let tvs = convergence_diagnostic(&choices, 1000);
        // Windows 0..2 are all-local, 3..5 all-outsource; the switch edge is
        // between windows 2 and 3.
        assert!(tvs[0] < 1e-12 && tvs[1] < 1e-12);
        assert!((tvs[2] - 1.0).abs() < 1e-12);
        assert!(tvs[3] < 1e-12 && tvs[4] < 1e-12);
    }

    #[test]
    fn run_metrics_are_permutation_invariant() {
        let mut sc = crate::scenario::ScenarioConfig::from_toml_str(
            crate::presets::scenario("default").unwrap(),
        )
        .unwrap();
        sc.sim.n_clients = 3;
        sc.sim.n_contractors = 6;
        sc.sim.duration_days = 1.0;
        let out = crate::sim::run_simulation(&sc).unwrap();
        let base = RunMetrics::from_ledger(&out.ledger);
        let mut shuffled = out.ledger.clone();
        shuffled.entries.reverse();
        shuffled.entries.rotate_left(7);
        let permuted = RunMetrics::from_ledger(&shuffled);
        // Equal up to floating-point reassociation of the sums.
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        assert!(close(
            permuted.cost_reduction_pct.unwrap(),
            base.cost_reduction_pct.unwrap()
        ));
        assert!(close(
            permuted.time_savings_pct.unwrap(),
            base.time_savings_pct.unwrap()
        ));
        assert!(close(permuted.mean_topsis_score, base.mean_topsis_score));
        assert_eq!(permuted.outsourcing_rate_pct, base.outsourcing_rate_pct);
        assert_eq!(permuted.exploration_rate_pct, base.exploration_rate_pct);
        assert_eq!(permuted.success_rate_pct, base.success_rate_pct);
        assert_eq!(permuted.n_decisions, base.n_decisions);
    }

    #[test]
    #[should_panic]
    fn diagnostic_rejects_short_streams() {
        let stream = vec![local(); 100];
        convergence_diagnostic(&stream, 100);
    }
}
