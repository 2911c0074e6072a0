//! Batch execution and on-disk layout.
//!
//! An experiment directory holds `traj_00000.csv`, `traj_00001.csv`, ...,
//! an `aggregate.csv` with one summary row per trajectory, and `report.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stp_core::rng::trajectory_seed;
use stp_core::solvers::{run_trajectory, RunSettings};
use stp_core::trajectory::{format_float, Trajectory};

use crate::check::CheckResult;
use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::registry::{Experiment, Registry};

pub const REPORT_FILE: &str = "report.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

pub fn trajectory_file_name(index: u64) -> String {
    format!("traj_{index:05}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub run_index: u64,
    pub seed: u64,
    pub file: String,
    pub final_t: u64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub min_grad_norm: f64,
    pub evals: u64,
    pub elapsed_ns: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_reason: Option<String>,
}

impl TrajectorySummary {
    pub fn of(traj: &Trajectory) -> Self {
        let last = traj.last().expect("trajectories record at least one row");
        Self {
            run_index: traj.run_index,
            seed: traj.seed,
            file: trajectory_file_name(traj.run_index),
            final_t: last.t,
            final_f: last.f_value,
            final_grad_norm: last.grad_norm,
            min_grad_norm: last.min_grad_norm,
            evals: last.evals,
            elapsed_ns: last.elapsed_ns,
            terminal_reason: traj.terminal_reason.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentEntry {
    pub label: String,
    pub directory: PathBuf,
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub trajectories: Vec<TrajectorySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AggregateReport {
    pub experiments: Vec<ExperimentEntry>,
    #[serde(default)]
    pub checks: Vec<CheckResult>,
}

impl AggregateReport {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }

    /// Concatenates experiments and check results.
    pub fn merge(reports: impl IntoIterator<Item = AggregateReport>) -> Self {
        let mut out = AggregateReport::default();
        for r in reports {
            out.experiments.extend(r.experiments);
            out.checks.extend(r.checks);
        }
        out
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(HarnessError::invalid("--threads", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::invalid("--threads", e.to_string()))
}

/// Runs every trajectory of `config`, returned in index order. The result
/// does not depend on `threads` apart from timings.
pub fn execute(
    config: &ExperimentConfig,
    experiment: &Experiment,
    threads: Option<usize>,
) -> Result<Vec<Trajectory>, HarnessError> {
    let pool = pool(threads)?;
    pool.install(|| {
        (0..config.trajectories)
            .into_par_iter()
            .map(|index| {
                let settings = RunSettings {
                    iterations: config.iterations,
                    seed: trajectory_seed(config.base_seed, index),
                    record_every: config.record_every,
                    run_index: index,
                };
                run_trajectory(
                    experiment.solver.as_ref(),
                    experiment.objective.as_ref(),
                    &experiment.theta_init,
                    &settings,
                )
                .map_err(HarnessError::from)
            })
            .collect()
    })
}

pub fn aggregate_csv(summaries: &[TrajectorySummary]) -> String {
    let mut out = String::from(
        "run_index,seed,final_t,final_f,final_grad_norm,min_grad_norm,evals,elapsed_ns,terminal_reason\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.run_index,
            s.seed,
            s.final_t,
            format_float(s.final_f),
            format_float(s.final_grad_norm),
            format_float(s.min_grad_norm),
            s.evals,
            s.elapsed_ns,
            s.terminal_reason
                .as_deref()
                .map(csv_quote)
                .unwrap_or_default(),
        ));
    }
    out
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Writes trajectory CSVs, the aggregate CSV and a report without checks.
pub fn write_outputs(
    config: &ExperimentConfig,
    trajectories: &[Trajectory],
) -> Result<AggregateReport, HarnessError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for traj in trajectories {
        let path = dir.join(trajectory_file_name(traj.run_index));
        let text = traj.to_csv_string()?;
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    }
    let summaries: Vec<TrajectorySummary> =
        trajectories.iter().map(TrajectorySummary::of).collect();
    let agg = dir.join(AGGREGATE_FILE);
    fs::write(&agg, aggregate_csv(&summaries)).map_err(|e| HarnessError::io(&agg, e))?;
    let directory = fs::canonicalize(dir).map_err(|e| HarnessError::io(dir, e))?;
    let report = AggregateReport {
        experiments: vec![ExperimentEntry {
            label: config.label(),
            directory,
            config_digest: config.digest(),
            config: config.clone(),
            trajectories: summaries,
        }],
        checks: Vec::new(),
    };
    report.save(&dir.join(REPORT_FILE))?;
    Ok(report)
}

pub struct RunOutcome {
    pub experiment: Experiment,
    pub trajectories: Vec<Trajectory>,
    pub report: AggregateReport,
    pub report_path: PathBuf,
}

pub fn run(
    registry: &Registry,
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<RunOutcome, HarnessError> {
    let experiment = registry.build(config)?;
    let trajectories = execute(config, &experiment, threads)?;
    let report = write_outputs(config, &trajectories)?;
    Ok(RunOutcome {
        experiment,
        trajectories,
        report,
        report_path: config.output_dir.join(REPORT_FILE),
    })
}

/// Reads back the trajectories listed in `entry`, filling in descriptors
/// from its config.
pub fn load_trajectories(entry: &ExperimentEntry) -> Result<Vec<Trajectory>, HarnessError> {
    entry
        .trajectories
        .iter()
        .map(|summary| {
            let path = entry.directory.join(&summary.file);
            let file = fs::File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
            let mut traj = Trajectory::read_csv(std::io::BufReader::new(file))
                .map_err(|e| HarnessError::invalid(path.display().to_string(), e.to_string()))?;
            if traj.run_index != summary.run_index || traj.seed != summary.seed {
                return Err(HarnessError::invalid(
                    path.display().to_string(),
                    "run_index/seed do not match the report",
                ));
            }
            traj.solver = entry.config.solver.name.clone();
            traj.objective = entry.config.objective.name.clone();
            traj.schedule = entry.config.schedule.as_ref().map(|s| s.name.clone());
            traj.terminal_reason = summary.terminal_reason.clone();
            Ok(traj)
        })
        .collect()
}

/// Rebuilds `aggregate.csv` of every experiment from its trajectory files.
pub fn regenerate_aggregate(report: &AggregateReport) -> Result<(), HarnessError> {
    for entry in &report.experiments {
        let trajectories = load_trajectories(entry)?;
        let summaries: Vec<TrajectorySummary> =
            trajectories.iter().map(TrajectorySummary::of).collect();
        let path = entry.directory.join(AGGREGATE_FILE);
        fs::write(&path, aggregate_csv(&summaries)).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}
