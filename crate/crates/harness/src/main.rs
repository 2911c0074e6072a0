use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand};
use serde_json::json;
use stp_core::diagnostics::convex_rate_constants;
use stp_core::schedules::linear_rate_probe_base;
use stp_harness::check::run_checks;
use stp_harness::config::ExperimentConfig;
use stp_harness::plot::{render_svg, series_for, PlotKind, SeriesGroup};
use stp_harness::runner::{self, load_trajectories, AggregateReport, REPORT_FILE};
use stp_harness::{HarnessError, Registry};

#[derive(Parser)]
#[command(name = "stp", version, about = "Zeroth-order optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trajectory of an experiment and write CSVs plus a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the diagnostic checks; exits 0 only if all pass.
    ///
    /// With `--config`, the experiment is run first unless its output
    /// directory already holds a report for the same configuration.
    #[command(group(ArgGroup::new("input").required(true).args(["config", "report"])))]
    Check {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Draw an SVG plot of the trajectories in a report.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge reports and rebuild each aggregate CSV from its trajectory files.
    Aggregate {
        #[arg(long = "report", required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the analytic constants for an experiment.
    Constants {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    let registry = Registry::builtin();
    match command {
        Command::Run { config, threads } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = runner::run(&registry, &config, threads)?;
            println!(
                "{} trajectories written; report at {}",
                outcome.trajectories.len(),
                outcome.report_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            config,
            report,
            threads,
        } => {
            let report_path = match (config, report) {
                (Some(config), _) => {
                    let config = ExperimentConfig::load(&config)?;
                    let path = config.output_dir.join(REPORT_FILE);
                    if !has_current_run(&path, &config) {
                        runner::run(&registry, &config, threads)?;
                    }
                    path
                }
                (None, Some(report)) => report,
                (None, None) => unreachable!("clap enforces one input"),
            };
            check(&registry, &report_path, threads)
        }
        Command::Plot { report, kind, out } => {
            plot(&registry, &report, kind, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Aggregate { reports, out } => {
            let loaded = reports
                .iter()
                .map(|p| AggregateReport::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let merged = AggregateReport::merge(loaded);
            runner::regenerate_aggregate(&merged)?;
            merged.save(&out)?;
            println!(
                "merged {} experiments into {}",
                merged.experiments.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants { config } => {
            let config = ExperimentConfig::load(&config)?;
            constants(&registry, &config)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// True when `path` holds a report for exactly this configuration.
fn has_current_run(path: &Path, config: &ExperimentConfig) -> bool {
    let digest = config.digest();
    AggregateReport::load(path)
        .is_ok_and(|r| r.experiments.len() == 1 && r.experiments[0].config_digest == digest)
}

fn check(registry: &Registry, report_path: &Path, threads: Option<usize>) -> Result<ExitCode> {
    if !report_path.exists() {
        return Err(HarnessError::MissingFile(report_path.to_path_buf()).into());
    }
    let mut report = AggregateReport::load(report_path)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building thread pool")?;
    let prefix = report.experiments.len() > 1;
    let mut results = Vec::new();
    for entry in &report.experiments {
        let exp = registry.build(&entry.config)?;
        let trajectories = load_trajectories(entry)?;
        let mut checks = pool.install(|| run_checks(&entry.config, &exp, &trajectories))?;
        if prefix {
            for c in &mut checks {
                c.check_name = format!("{}:{}", entry.label, c.check_name);
            }
        }
        results.extend(checks);
    }
    let all_pass = results.iter().all(|c| c.pass);
    println!("{}", serde_json::to_string_pretty(&results)?);
    report.checks = results;
    report.save(report_path)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn plot(registry: &Registry, report_path: &Path, kind: PlotKind, out: &Path) -> Result<()> {
    let report = AggregateReport::load(report_path)?;
    if report.experiments.is_empty() {
        bail!(HarnessError::EmptyPlot(
            "report lists no experiments".into()
        ));
    }
    let mut groups = Vec::new();
    for entry in &report.experiments {
        let f_star = registry.objective(&entry.config.objective)?.f_star();
        let trajectories = load_trajectories(entry)?;
        groups.push(SeriesGroup {
            label: entry.label.clone(),
            series: trajectories
                .iter()
                .map(|t| series_for(kind, t, f_star))
                .collect(),
        });
    }
    let svg = render_svg(kind, &groups)?;
    std::fs::write(out, svg).map_err(|e| HarnessError::io(out, e))?;
    Ok(())
}

fn constants(registry: &Registry, config: &ExperimentConfig) -> Result<()> {
    let exp = registry.build(config)?;
    let objective = exp.objective.as_ref();
    let dist = exp.sampler.constants(objective.dim())?;
    let mu = objective.strong_convexity();
    let l = objective.smoothness();
    let probe_base = if mu > 0.0 {
        Some(linear_rate_probe_base(dist.mu_d, mu, l)?)
    } else {
        None
    };
    let convex = convex_rate_constants(objective, &exp.theta_init, dist.mu_d).ok();
    let out = json!({
        "objective": objective.name(),
        "dim": objective.dim(),
        "smoothness": l,
        "strong_convexity": mu,
        "f_star": objective.f_star(),
        "distribution": exp.sampler.name(),
        "mu_d": dist.mu_d,
        "gamma_d": dist.gamma_d,
        "linear_rate_probe_base": probe_base,
        "convex_rate": convex.map(|c| json!({
            "radius": c.radius, "alpha": c.alpha, "a": c.a, "initial_gap": c.initial_gap,
        })),
        "config_digest": config.digest(),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
