//! Multi-seed experiment plans: grids of scenario variations, deterministic
//! per-run seed derivation, parallel execution and per-cell summaries.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Violation;
use crate::metrics::{self, CorrelationBlock, CrossRunPoint, RunMetrics};
use crate::scenario::{self, ScenarioConfig, ScenarioError};
use crate::seeding;
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    DurationScaling,
    AgentScaling,
    EpsilonSweep,
    ThetaSweep,
    ExplorationAblation,
    Single,
}

impl SeriesKind {
    pub fn label(self) -> &'static str {
        match self {
            SeriesKind::DurationScaling => "duration_scaling",
            SeriesKind::AgentScaling => "agent_scaling",
            SeriesKind::EpsilonSweep => "epsilon_sweep",
            SeriesKind::ThetaSweep => "theta_sweep",
            SeriesKind::ExplorationAblation => "exploration_ablation",
            SeriesKind::Single => "single",
        }
    }
}

/// One grid cell: a named scenario variation.
#[derive(Debug, Clone)]
pub struct PlanCell {
    pub name: String,
    pub scenario: ScenarioConfig,
}

/// A resolved experiment plan ready to run.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub series: SeriesKind,
    pub replications: u32,
    pub base_seed: u64,
    pub cells: Vec<PlanCell>,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("failed to parse plan: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("plan needs either base_preset or an inline [base] scenario")]
    MissingBase,
}

/// On-disk plan document. Cells are dotted-key override tables applied to
/// the base scenario.
#[derive(Debug, Clone, Deserialize)]
pub struct PlanDoc {
    pub series: SeriesKind,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    pub base_preset: Option<String>,
    pub base: Option<toml::Value>,
    pub cells: Vec<PlanCellDoc>,
}

fn default_replications() -> u32 {
    20
}

fn default_base_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
pub struct PlanCellDoc {
    pub name: String,
    #[serde(default)]
    pub overrides: toml::map::Map<String, toml::Value>,
}

impl ExperimentPlan {
    /// Parses and resolves a plan document, applying extra overrides (e.g.
    /// from the command line) to the base scenario before cell overrides.
    pub fn from_toml_str(
        text: &str,
        extra_overrides: &[(String, String)],
        base_seed_flag: Option<u64>,
    ) -> Result<Self, PlanError> {
        let doc: PlanDoc = toml::from_str(text)?;
        let base_value: toml::Value = match (&doc.base, &doc.base_preset) {
            (Some(value), _) => value.clone(),
            (None, Some(name)) => {
                let text = crate::presets::scenario(name)
                    .ok_or_else(|| ScenarioError::UnknownPreset(name.clone()))?;
                toml::from_str(text).map_err(ScenarioError::Parse)?
            }
            (None, None) => return Err(PlanError::MissingBase),
        };

        let mut base = base_value;
        for (key, raw) in extra_overrides {
            let value = toml::from_str::<toml::Value>(&format!("v = {raw}"))
                .ok()
                .and_then(|v| v.get("v").cloned())
                .unwrap_or_else(|| toml::Value::String(raw.clone()));
            scenario::set_dotted(&mut base, key, value)?;
        }

        let mut cells = Vec::with_capacity(doc.cells.len());
        for cell in &doc.cells {
            let mut value = base.clone();
            for (key, v) in &cell.overrides {
                scenario::set_dotted(&mut value, key, v.clone())?;
            }
            let scenario: ScenarioConfig = value.try_into().map_err(ScenarioError::Parse)?;
            cells.push(PlanCell {
                name: cell.name.clone(),
                scenario,
            });
        }

        Ok(Self {
            series: doc.series,
            replications: doc.replications,
            base_seed: base_seed_flag.unwrap_or(doc.base_seed),
            cells,
        })
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.replications < 1 {
            v.push(Violation::new("replications", "must be >= 1"));
        }
        if self.cells.is_empty() {
            v.push(Violation::new("cells", "grid must be non-empty"));
        }
        let mut names: Vec<&str> = self.cells.iter().map(|c| c.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.cells.len() {
            v.push(Violation::new("cells", "cell names must be unique"));
        }
        for cell in &self.cells {
            for violation in cell.scenario.validate() {
                v.push(Violation::new(
                    &format!("cells.{}.{}", cell.name, violation.field),
                    violation.message,
                ));
            }
        }
        v
    }
}

/// Seed for one (cell, replication) run. Keyed by cell name, not index, so
/// permuting the grid permutes rows without changing any run.
pub fn derive_run_seed(base_seed: u64, cell_name: &str, replication: u32) -> u64 {
    seeding::derive(
        seeding::derive(base_seed, seeding::fnv1a(cell_name)),
        replication as u64,
    )
}

/// One run's row in the result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub cell: String,
    pub replication: u32,
    pub seed: u64,
    pub n_clients: u32,
    pub n_contractors: u32,
    pub duration_days: f64,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

/// All rows of a finished plan, in (cell, replication) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<RunRow>,
}

fn run_one(plan: &ExperimentPlan, cell_index: usize, replication: u32) -> RunRow {
    let cell = &plan.cells[cell_index];
    let seed = derive_run_seed(plan.base_seed, &cell.name, replication);
    let mut scenario = cell.scenario.clone();
    scenario.sim.seed = seed;
    let (metrics, error) = match sim::run_simulation(&scenario) {
        Ok(output) => (Some(RunMetrics::from_ledger(&output.ledger)), None),
        // Errors are recorded; remaining cells proceed.
        Err(e) => (None, Some(e.to_string().replace(',', ";"))),
    };
    RunRow {
        cell: cell.name.clone(),
        replication,
        seed,
        n_clients: scenario.sim.n_clients,
        n_contractors: scenario.sim.n_contractors,
        duration_days: scenario.sim.duration_days,
        metrics,
        error,
    }
}

/// Runs every (cell, replication) pair, optionally across worker threads.
/// Results are identical regardless of `jobs` because each run is an
/// isolated simulation with its own derived seed.
pub fn run_plan(plan: &ExperimentPlan, jobs: usize) -> ResultTable {
    let work: Vec<(usize, u32)> = (0..plan.cells.len())
        .flat_map(|c| (0..plan.replications).map(move |r| (c, r)))
        .collect();

    let rows = if jobs <= 1 || work.len() <= 1 {
        work.iter().map(|&(c, r)| run_one(plan, c, r)).collect()
    } else {
        let slots: Mutex<Vec<Option<RunRow>>> = Mutex::new(vec![None; work.len()]);
        let cursor = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(work.len()) {
                scope.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::Relaxed);
                    if i >= work.len() {
                        break;
                    }
                    let (c, r) = work[i];
                    let row = run_one(plan, c, r);
                    slots.lock().expect("no poisoned runs").as_mut_slice()[i] = Some(row);
                });
            }
        });
        slots
            .into_inner()
            .expect("all workers joined")
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect()
    };
    ResultTable { rows }
}

/// Mean and sample standard deviation (n-1); single samples have zero spread.
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, sd))
}

/// Per-cell aggregate in the mean +/- sd format of the validation tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: String,
    pub configuration: String,
    pub n_runs: u32,
    pub n_errors: u32,
    pub cost_reduction_pct: Option<(f64, f64)>,
    pub time_savings_pct: Option<(f64, f64)>,
    pub outsourcing_rate_pct: Option<(f64, f64)>,
    pub exploration_rate_pct: Option<(f64, f64)>,
    pub mean_topsis_score: Option<(f64, f64)>,
    pub success_rate_pct: Option<(f64, f64)>,
}

/// Whole-plan summary: per-cell aggregates plus cross-run correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub series: String,
    pub replications: u32,
    pub base_seed: u64,
    pub cells: Vec<CellSummary>,
    pub correlations: CorrelationBlock,
}

/// Aggregates a result table: per-cell mean +/- sd and the economic
/// validation correlations over all successful runs.
pub fn summarize(plan: &ExperimentPlan, table: &ResultTable) -> PlanSummary {
    let mut cells = Vec::with_capacity(plan.cells.len());
    for cell in &plan.cells {
        let rows: Vec<&RunRow> = table.rows.iter().filter(|r| r.cell == cell.name).collect();
        let n_errors = rows.iter().filter(|r| r.error.is_some()).count() as u32;
        let collect = |pick: &dyn Fn(&RunMetrics) -> Option<f64>| -> Vec<f64> {
            rows.iter()
                .filter_map(|r| r.metrics.as_ref())
                .filter_map(pick)
                .collect()
        };
        let configuration = format!(
            "{} days / {} clients / {} contractors",
            cell.scenario.sim.duration_days,
            cell.scenario.sim.n_clients,
            cell.scenario.sim.n_contractors
        );
        cells.push(CellSummary {
            cell: cell.name.clone(),
            configuration,
            n_runs: rows.len() as u32,
            n_errors,
            cost_reduction_pct: mean_sd(&collect(&|m| m.cost_reduction_pct)),
            time_savings_pct: mean_sd(&collect(&|m| m.time_savings_pct)),
            outsourcing_rate_pct: mean_sd(&collect(&|m| Some(m.outsourcing_rate_pct))),
            exploration_rate_pct: mean_sd(&collect(&|m| Some(m.exploration_rate_pct))),
            mean_topsis_score: mean_sd(&collect(&|m| Some(m.mean_topsis_score))),
            success_rate_pct: mean_sd(&collect(&|m| Some(m.success_rate_pct))),
        });
    }

    let points: Vec<CrossRunPoint> = table
        .rows
        .iter()
        .filter_map(|r| {
            let m = r.metrics.as_ref()?;
            Some(CrossRunPoint {
                agent_count: (r.n_clients + r.n_contractors) as f64,
                outsourcing_rate_pct: m.outsourcing_rate_pct,
                cost_reduction_pct: m.cost_reduction_pct?,
            })
        })
        .collect();

    PlanSummary {
        series: plan.series.label().to_string(),
        replications: plan.replications,
        base_seed: plan.base_seed,
        cells,
        correlations: metrics::correlations(&points),
    }
}

const CSV_HEADER: &str = "cell,replication,seed,n_clients,n_contractors,duration_days,n_decisions,outsourcing_rate_pct,exploration_rate_pct,cost_reduction_pct,time_savings_pct,mean_topsis_score,success_rate_pct,throughput_tasks_per_hour,error";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultTable {
    /// Renders the table as CSV with a fixed header. Floats use the shortest
    /// round-trip representation, so parsing the file back reproduces the
    /// table exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let m = r.metrics.as_ref();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.cell,
                r.replication,
                r.seed,
                r.n_clients,
                r.n_contractors,
                r.duration_days,
                m.map(|m| m.n_decisions.to_string()).unwrap_or_default(),
                fmt_opt(m.map(|m| m.outsourcing_rate_pct)),
                fmt_opt(m.map(|m| m.exploration_rate_pct)),
                fmt_opt(m.and_then(|m| m.cost_reduction_pct)),
                fmt_opt(m.and_then(|m| m.time_savings_pct)),
                fmt_opt(m.map(|m| m.mean_topsis_score)),
                fmt_opt(m.map(|m| m.success_rate_pct)),
                fmt_opt(m.map(|m| m.throughput_tasks_per_hour)),
                r.error.clone().unwrap_or_default(),
            ));
        }
        out
    }

    /// Parses a table previously produced by [`ResultTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty csv")?;
        if header != CSV_HEADER {
            return Err(format!("unexpected header: {header}"));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 15 {
                return Err(format!("line {}: expected 15 fields", lineno + 2));
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64, String> {
                s.parse::<f64>()
                    .map_err(|e| format!("line {}: bad {what}: {e}", lineno + 2))
            };
            let opt_f64 = |s: &str, what: &str| -> Result<Option<f64>, String> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(s, what).map(Some)
                }
            };
            let metrics = if fields[6].is_empty() {
                None
            } else {
                Some(RunMetrics {
                    n_decisions: fields[6]
                        .parse()
                        .map_err(|e| format!("line {}: bad n_decisions: {e}", lineno + 2))?,
                    outsourcing_rate_pct: parse_f64(fields[7], "outsourcing_rate_pct")?,
                    exploration_rate_pct: parse_f64(fields[8], "exploration_rate_pct")?,
                    cost_reduction_pct: opt_f64(fields[9], "cost_reduction_pct")?,
                    time_savings_pct: opt_f64(fields[10], "time_savings_pct")?,
                    mean_topsis_score: parse_f64(fields[11], "mean_topsis_score")?,
                    success_rate_pct: parse_f64(fields[12], "success_rate_pct")?,
                    throughput_tasks_per_hour: parse_f64(fields[13], "throughput_tasks_per_hour")?,
                })
            };
            rows.push(RunRow {
                cell: fields[0].to_string(),
                replication: fields[1]
                    .parse()
                    .map_err(|e| format!("line {}: bad replication: {e}", lineno + 2))?,
                seed: fields[2]
                    .parse()
                    .map_err(|e| format!("line {}: bad seed: {e}", lineno + 2))?,
                n_clients: fields[3]
                    .parse()
                    .map_err(|e| format!("line {}: bad n_clients: {e}", lineno + 2))?,
                n_contractors: fields[4]
                    .parse()
                    .map_err(|e| format!("line {}: bad n_contractors: {e}", lineno + 2))?,
                duration_days: parse_f64(fields[5], "duration_days")?,
                metrics,
                error: if fields[14].is_empty() {
                    None
                } else {
                    Some(fields[14].to_string())
                },
            });
        }
        Ok(Self { rows })
    }
}
