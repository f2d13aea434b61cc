use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clusterbench_cli::{
    cmd_baseline, cmd_basin, cmd_report, cmd_run, cmd_suite_list, cmd_transform_compare,
    CliError, ConfigSelector, ExperimentConfig,
};

/// Clustering-based continuous black-box optimization benchmarks: suite
/// management, baselines, benchmark execution, landscape analysis and report
/// emission.
#[derive(Parser)]
#[command(name = "clusterbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the problems of a suite (id, dataset, k, m).
    SuiteList {
        /// Suite manifest JSON; the bundled default suite when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Collect K-Means++/Lloyd baselines and write baselines.csv.
    Baseline {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Independent restarts per problem.
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, env = "CLUSTERBENCH_OUT", default_value = "clusterbench_out")]
        out: PathBuf,
    },
    /// Execute the (problem × config × repetition) benchmark grid.
    Run {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Evaluation budget per run.
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        /// Repetitions per (problem, config) cell.
        #[arg(long, default_value_t = 25)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CLUSTERBENCH_OUT", default_value = "clusterbench_out")]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// "all" or a comma-separated list of config ids.
        #[arg(long, default_value = "all")]
        configs: String,
        /// Restrict to one problem id ("all" for every problem).
        #[arg(long)]
        problem: Option<String>,
    },
    /// Multi-restart local-search basin analysis of one or all problems.
    Basin {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Problem id, or "all".
        #[arg(long)]
        problem: String,
        /// Region-constrained start points per problem.
        #[arg(long, default_value_t = 50)]
        starts: usize,
        /// Evaluation budget per local search.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CLUSTERBENCH_OUT", default_value = "clusterbench_out")]
        out: PathBuf,
    },
    /// Paired benchmark of the default ES on original vs transformed space.
    TransformCompare {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Problem id, or "all" (default).
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[arg(long, default_value_t = 25)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CLUSTERBENCH_OUT", default_value = "clusterbench_out")]
        out: PathBuf,
    },
    /// Aggregate a run-log directory into plot-ready analysis files.
    Report {
        /// Directory containing run-log CSV/JSON cells.
        #[arg(long)]
        logs: PathBuf,
        /// Baseline CSV produced by the baseline command.
        #[arg(long)]
        baselines: PathBuf,
        /// Optional feature-vector CSV for cosine similarity.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, env = "CLUSTERBENCH_OUT", default_value = "clusterbench_out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SuiteList { manifest } => {
            print!("{}", cmd_suite_list(manifest.as_deref())?);
        }
        Command::Baseline {
            manifest,
            reps,
            seed,
            out,
        } => {
            let path = cmd_baseline(manifest.as_deref(), reps, seed, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Run {
            manifest,
            budget,
            reps,
            seed,
            out,
            jobs,
            configs,
            problem,
        } => {
            let experiment = ExperimentConfig {
                manifest,
                budget,
                repetitions: reps,
                master_seed: seed,
                out_dir: out,
                jobs,
                configs: ConfigSelector::parse(&configs),
                problem,
            };
            let summary = cmd_run(&experiment)?;
            println!(
                "completed {} cells, skipped {} (already present)",
                summary.completed, summary.skipped
            );
        }
        Command::Basin {
            manifest,
            problem,
            starts,
            budget,
            seed,
            out,
        } => {
            let reports = cmd_basin(manifest.as_deref(), &problem, starts, budget, seed, &out)?;
            for r in &reports {
                println!(
                    "{}: retention {:.3}, {} distinct solutions ({} canonical)",
                    r.problem_id,
                    r.region_retention,
                    r.distinct_solutions,
                    r.distinct_canonical_solutions
                );
            }
        }
        Command::TransformCompare {
            manifest,
            problem,
            budget,
            reps,
            seed,
            out,
        } => {
            let rows = cmd_transform_compare(
                manifest.as_deref(),
                problem.as_deref(),
                budget,
                reps,
                seed,
                &out,
            )?;
            for row in &rows {
                println!(
                    "{}: original {:.6e}, transformed {:.6e}, difference {:+.3e}",
                    row.problem_id, row.mean_original, row.mean_transformed, row.difference
                );
            }
        }
        Command::Report {
            logs,
            baselines,
            features,
            out,
        } => {
            let summary = cmd_report(&logs, &baselines, features.as_deref(), &out)?;
            println!(
                "analyzed {} problems x {} configs at budget {}; wrote {} EAF files to {}",
                summary.problems.len(),
                summary.configs,
                summary.budget,
                summary.eaf_files.len(),
                out.display()
            );
        }
    }
    Ok(())
}
