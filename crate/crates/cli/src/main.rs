//! Command-line front end: scenario and plan loading, run orchestration,
//! deterministic seeding and machine-readable outputs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use agora_core::experiment::{self, ExperimentPlan, ResultTable, RunRow};
use agora_core::metrics::RunMetrics;
use agora_core::scenario::{self, ScenarioConfig};
use agora_core::sim::{self, SimOutput};
use agora_core::{presets, Violation};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "agora",
    version,
    about = "Deterministic task-outsourcing market simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation and write its output bundle.
    Run(RunArgs),
    /// Run an experiment plan (grid of scenarios x replications).
    Experiment(ExperimentArgs),
    /// Parse and validate a scenario or plan without running it.
    Validate { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file; omit to use --preset.
    scenario: Option<PathBuf>,
    /// Built-in scenario preset name.
    #[arg(long, default_value = "default")]
    preset: String,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted-path overrides, e.g. --set engine.epsilon=0.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan TOML file; omit to use --preset.
    plan: Option<PathBuf>,
    /// Built-in plan preset name.
    #[arg(long, default_value = "exploration_ablation")]
    preset: String,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for replications.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Dotted-path overrides applied to the base scenario.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Validate { path } => cmd_validate(&path),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum CliError {
    /// Parse or validation failure (exit 2).
    Input(String),
    /// Failure while running or writing output (exit 1).
    Runtime(String),
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, CliError> {
    raw.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Input(format!("--set expects KEY=VALUE, got {kv:?}")))
        })
        .collect()
}

fn read_source(path: Option<&Path>, preset: &str, kind: &str) -> Result<String, CliError> {
    match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display()))),
        None => match kind {
            "scenario" => presets::scenario(preset)
                .map(str::to_string)
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "unknown scenario preset {preset:?}; available: {}",
                        presets::scenario_names().join(", ")
                    ))
                }),
            _ => presets::plan(preset).map(str::to_string).ok_or_else(|| {
                CliError::Input(format!(
                    "unknown plan preset {preset:?}; available: {}",
                    presets::plan_names().join(", ")
                ))
            }),
        },
    }
}

fn check_violations(violations: &[Violation]) -> Result<(), CliError> {
    if violations.is_empty() {
        return Ok(());
    }
    let mut msg = String::from("configuration is invalid:");
    for v in violations {
        msg.push_str(&format!("\n  {v}"));
    }
    Err(CliError::Input(msg))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn fmt_opt_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}%"))
        .unwrap_or_else(|| "n/a".to_string())
}

#[derive(Serialize)]
struct RunSummaryDoc<'a> {
    version: &'a str,
    kind: &'a str,
    seed: u64,
    scenario: &'a ScenarioConfig,
    metrics: &'a RunMetrics,
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let overrides = parse_overrides(&args.set)?;
    let source = read_source(args.scenario.as_deref(), &args.preset, "scenario")?;
    let config = scenario::resolve_scenario(&source, &overrides, args.seed)
        .map_err(|e| CliError::Input(e.to_string()))?;
    check_violations(&config.validate())?;

    let output: SimOutput =
        sim::run_simulation(&config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let metrics = RunMetrics::from_ledger(&output.ledger);

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;

    let mut decisions = String::new();
    for entry in &output.ledger.entries {
        if let Some(line) = entry.log_line() {
            decisions.push_str(&serde_json::to_string(&line).expect("serializable log line"));
            decisions.push('\n');
        }
    }
    write_file(&args.out, "decisions.jsonl", &decisions)?;

    let mut reputation = String::new();
    for (_, record) in output.reputation.iter() {
        reputation.push_str(&serde_json::to_string(record).expect("serializable record"));
        reputation.push('\n');
    }
    write_file(&args.out, "reputation.jsonl", &reputation)?;

    let table = ResultTable {
        rows: vec![RunRow {
            cell: "single".to_string(),
            replication: 0,
            seed: config.sim.seed,
            n_clients: config.sim.n_clients,
            n_contractors: config.sim.n_contractors,
            duration_days: config.sim.duration_days,
            metrics: Some(metrics.clone()),
            error: None,
        }],
    };
    write_file(&args.out, "runs.csv", &table.to_csv())?;

    let summary = RunSummaryDoc {
        version: VERSION,
        kind: "run",
        seed: config.sim.seed,
        scenario: &config,
        metrics: &metrics,
    };
    let mut summary_json = serde_json::to_string_pretty(&summary).expect("serializable summary");
    summary_json.push('\n');
    write_file(&args.out, "summary.json", &summary_json)?;

    println!(
        "cost_reduction={} time_savings={} outsourcing={:.1}% exploration={:.1}% success={:.1}% decisions={} seed={}",
        fmt_opt_pct(metrics.cost_reduction_pct),
        fmt_opt_pct(metrics.time_savings_pct),
        metrics.outsourcing_rate_pct,
        metrics.exploration_rate_pct,
        metrics.success_rate_pct,
        metrics.n_decisions,
        config.sim.seed,
    );
    Ok(())
}

#[derive(Serialize)]
struct PlanEcho<'a> {
    series: String,
    replications: u32,
    base_seed: u64,
    cells: Vec<CellEcho<'a>>,
}

#[derive(Serialize)]
struct CellEcho<'a> {
    name: &'a str,
    scenario: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct ExperimentSummaryDoc<'a> {
    version: &'a str,
    kind: &'a str,
    summary: &'a experiment::PlanSummary,
    plan: PlanEcho<'a>,
}

fn fmt_mean_sd(v: Option<(f64, f64)>) -> (String, String) {
    match v {
        Some((m, s)) => (m.to_string(), s.to_string()),
        None => (String::new(), String::new()),
    }
}

fn cells_csv(summary: &experiment::PlanSummary) -> String {
    let mut out = String::from(
        "cell,configuration,n_runs,n_errors,cost_reduction_mean,cost_reduction_sd,time_savings_mean,time_savings_sd,outsourcing_mean,outsourcing_sd,exploration_mean,exploration_sd,topsis_mean,topsis_sd,success_mean,success_sd\n",
    );
    for c in &summary.cells {
        let (crm, crs) = fmt_mean_sd(c.cost_reduction_pct);
        let (tsm, tss) = fmt_mean_sd(c.time_savings_pct);
        let (om, os) = fmt_mean_sd(c.outsourcing_rate_pct);
        let (em, es) = fmt_mean_sd(c.exploration_rate_pct);
        let (tm, ts) = fmt_mean_sd(c.mean_topsis_score);
        let (sm, ss) = fmt_mean_sd(c.success_rate_pct);
        out.push_str(&format!(
            "{},{},{},{},{crm},{crs},{tsm},{tss},{om},{os},{em},{es},{tm},{ts},{sm},{ss}\n",
            c.cell,
            c.configuration.replace(',', ";"),
            c.n_runs,
            c.n_errors,
        ));
    }
    out
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let overrides = parse_overrides(&args.set)?;
    let source = read_source(args.plan.as_deref(), &args.preset, "plan")?;
    let plan = ExperimentPlan::from_toml_str(&source, &overrides, args.seed)
        .map_err(|e| CliError::Input(e.to_string()))?;
    check_violations(&plan.validate())?;

    let table = experiment::run_plan(&plan, args.jobs.max(1));
    let summary = experiment::summarize(&plan, &table);

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;
    write_file(&args.out, "runs.csv", &table.to_csv())?;
    write_file(&args.out, "cells.csv", &cells_csv(&summary))?;

    let doc = ExperimentSummaryDoc {
        version: VERSION,
        kind: "experiment",
        summary: &summary,
        plan: PlanEcho {
            series: plan.series.label().to_string(),
            replications: plan.replications,
            base_seed: plan.base_seed,
            cells: plan
                .cells
                .iter()
                .map(|c| CellEcho {
                    name: &c.name,
                    scenario: &c.scenario,
                })
                .collect(),
        },
    };
    let mut summary_json = serde_json::to_string_pretty(&doc).expect("serializable summary");
    summary_json.push('\n');
    write_file(&args.out, "summary.json", &summary_json)?;

    println!(
        "{:<14} {:<36} {:>18} {:>18}",
        "cell", "configuration", "cost reduction", "time savings"
    );
    for c in &summary.cells {
        let fmt = |v: Option<(f64, f64)>| match v {
            Some((m, s)) => format!("{m:.1} +/- {s:.1}"),
            None => "n/a".to_string(),
        };
        println!(
            "{:<14} {:<36} {:>18} {:>18}",
            c.cell,
            c.configuration,
            fmt(c.cost_reduction_pct),
            fmt(c.time_savings_pct)
        );
    }
    if let Some(r) = summary.correlations.outsourcing_cost_reduction {
        println!("r(outsourcing rate, cost reduction) = {r:.3}");
    }
    if let Some(r) = summary.correlations.agents_cost_reduction {
        println!("r(agent count, cost reduction)      = {r:.3}");
    }
    let errors: u32 = summary.cells.iter().map(|c| c.n_errors).sum();
    if errors > 0 {
        eprintln!("warning: {errors} runs failed; see runs.csv");
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    // A plan document is recognized by its `series` key.
    let looks_like_plan = text.lines().any(|l| l.trim_start().starts_with("series"));
    if looks_like_plan {
        let plan = ExperimentPlan::from_toml_str(&text, &[], None)
            .map_err(|e| CliError::Input(e.to_string()))?;
        check_violations(&plan.validate())?;
        println!(
            "plan ok: series={} cells={} replications={}",
            plan.series.label(),
            plan.cells.len(),
            plan.replications
        );
    } else {
        let config =
            ScenarioConfig::from_toml_str(&text).map_err(|e| CliError::Input(e.to_string()))?;
        check_violations(&config.validate())?;
        println!(
            "scenario ok: {} clients, {} contractors, {} days, seed {}",
            config.sim.n_clients,
            config.sim.n_contractors,
            config.sim.duration_days,
            config.sim.seed
        );
    }
    Ok(())
}
