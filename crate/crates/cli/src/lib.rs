//! Command implementations behind the `clusterbench` binary.
//!
//! Each command is an ordinary function so the pipeline can be driven from
//! tests; `main` only parses arguments and maps errors to exit codes
//! (0 success, 1 usage, 2 data error, 3 partial failure).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use clusterbench::analysis::{
    baseline_gap, best_worst_spread, cosine_similarity, eaf_curve, kendall_tau, log_budget_grid,
    top_k_module_frequency, PerformanceTable,
};
use clusterbench::baseline::{baseline_table, collect_baselines, BaselineTable};
use clusterbench::landscape::{
    basin_connectivity_probe, build_solution_graph, count_distinct_canonical_solutions,
    count_distinct_solutions, merged_representatives, region_constrained_starts,
    region_retention, Connectivity, Solution, DEFAULT_CLOSENESS_EPS, DEFAULT_HILL_VALLEY_TOL,
    DEFAULT_INTERMEDIATES, DEFAULT_PERTURB_SCALE, DEFAULT_STAGNATION_LIMIT,
    DEFAULT_VALUE_MERGE_EPS,
};
use clusterbench::optimizers::{
    enumerate_configs, run_es, run_one_plus_one, run_simplex_local, OptimizerConfig,
    LOCAL_SIGMA0,
};
use clusterbench::problem::EvalMeter;
use clusterbench::runlog::{cell_stem, read_cell, read_log_dir, write_atomic, write_cell, RunLog};
use clusterbench::suite::{build_suite, ProblemSuite, SuiteManifest, SuiteProblem};
use clusterbench::transform::TransformedProblem;

/// Errors of the command layer, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 1: the invocation itself is wrong.
    #[error("{0}")]
    Usage(String),
    /// Exit code 2: inputs could not be read or are inconsistent.
    #[error("{0}")]
    Data(String),
    /// Exit code 3: some cells failed; the error manifest lists them.
    #[error("{failed} of {total} cells failed; see {manifest}")]
    Partial {
        failed: usize,
        total: usize,
        manifest: PathBuf,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Partial { .. } => 3,
        }
    }
}

impl From<clusterbench::Error> for CliError {
    fn from(e: clusterbench::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Loads the manifest at `path`, or the bundled default suite manifest.
pub fn load_manifest(path: Option<&Path>) -> CliResult<SuiteManifest> {
    match path {
        Some(p) => Ok(SuiteManifest::from_json_file(p)?),
        None => Ok(SuiteManifest::default_suite()),
    }
}

fn load_suite(manifest: Option<&Path>) -> CliResult<ProblemSuite> {
    Ok(build_suite(&load_manifest(manifest)?)?)
}

/// Orders problem ids so that F2 sorts before F10.
fn natural_key(id: &str) -> Vec<(u8, u64, String)> {
    let mut key = Vec::new();
    let mut chars = id.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            let mut num = 0u64;
            while let Some(&d) = chars.peek() {
                if let Some(v) = d.to_digit(10) {
                    num = num * 10 + v as u64;
                    chars.next();
                } else {
                    break;
                }
            }
            key.push((0, num, String::new()));
        } else {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    break;
                }
                text.push(d);
                chars.next();
            }
            key.push((1, 0, text));
        }
    }
    key
}

// ---------------------------------------------------------------------------
// suite-list
// ---------------------------------------------------------------------------

/// Renders the suite table (problem id, dataset, k, m), one row per problem.
pub fn cmd_suite_list(manifest: Option<&Path>) -> CliResult<String> {
    let suite = load_suite(manifest)?;
    let mut out = String::from("problem_id\tdataset\tk\tm\n");
    for p in suite.problems() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            p.id,
            p.dataset_name,
            p.k,
            p.problem.search_dim()
        );
    }
    let _ = writeln!(out, "{} problems", suite.len());
    Ok(out)
}

// ---------------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------------

/// Collects K-Means++/Lloyd baselines over the suite and writes
/// `baselines.csv` into the output directory.
pub fn cmd_baseline(
    manifest: Option<&Path>,
    repetitions: usize,
    seed: u64,
    out_dir: &Path,
) -> CliResult<PathBuf> {
    let suite = load_suite(manifest)?;
    let results = collect_baselines(&suite, repetitions, seed)?;
    let table = baseline_table(&results);
    ensure_dir(out_dir)?;
    let path = out_dir.join("baselines.csv");
    write_atomic(&path, table.to_csv_string().as_bytes())?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Which optimizer configurations an experiment covers.
#[derive(Debug, Clone)]
pub enum ConfigSelector {
    All,
    Ids(Vec<String>),
}

impl ConfigSelector {
    pub fn parse(raw: &str) -> Self {
        if raw.trim() == "all" {
            ConfigSelector::All
        } else {
            ConfigSelector::Ids(raw.split(',').map(|s| s.trim().to_string()).collect())
        }
    }

    fn resolve(&self) -> CliResult<Vec<OptimizerConfig>> {
        let all = enumerate_configs();
        match self {
            ConfigSelector::All => Ok(all),
            ConfigSelector::Ids(ids) => ids
                .iter()
                .map(|id| {
                    all.iter()
                        .find(|c| &c.id() == id)
                        .cloned()
                        .ok_or_else(|| CliError::Usage(format!("unknown config id '{id}'")))
                })
                .collect(),
        }
    }
}

/// Parameters of a benchmark run grid.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub manifest: Option<PathBuf>,
    pub budget: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub configs: ConfigSelector,
    pub problem: Option<String>,
}

/// Outcome counts of a run-grid execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub completed: usize,
    pub skipped: usize,
    pub failed: usize,
}

#[derive(Serialize)]
struct ExperimentRecord<'a> {
    budget: usize,
    repetitions: usize,
    master_seed: u64,
    problem_ids: Vec<&'a str>,
    config_ids: Vec<String>,
}

/// Executes the (problem × config × repetition) grid with per-cell derived
/// seeds, writing one CSV + sidecar pair per (problem, config) cell.
///
/// Re-running with identical parameters skips completed cells, so an
/// interrupted invocation resumes where it stopped and a completed one is a
/// no-op.
pub fn cmd_run(experiment: &ExperimentConfig) -> CliResult<RunSummary> {
    if experiment.budget == 0 || experiment.repetitions == 0 {
        return Err(CliError::Usage(
            "budget and repetitions must be >= 1".into(),
        ));
    }
    let suite = load_suite(experiment.manifest.as_deref())?;
    let problems = select_problems(&suite, experiment.problem.as_deref())?;
    let configs = experiment.configs.resolve()?;
    ensure_dir(&experiment.out_dir)?;

    let record = ExperimentRecord {
        budget: experiment.budget,
        repetitions: experiment.repetitions,
        master_seed: experiment.master_seed,
        problem_ids: problems.iter().map(|p| p.id.as_str()).collect(),
        config_ids: configs.iter().map(|c| c.id()).collect(),
    };
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::Data(format!("experiment record: {e}")))?;
    write_atomic(&experiment.out_dir.join("experiment.json"), json.as_bytes())?;

    let cells: Vec<(&SuiteProblem, &OptimizerConfig)> = problems
        .iter()
        .flat_map(|p| configs.iter().map(move |c| (*p, c)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(experiment.jobs)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))?;

    let outcomes: Vec<Result<bool, (String, String)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|(sp, config)| {
                run_cell(sp, config, experiment)
                    .map_err(|e| (cell_stem(&sp.id, &config.id()), e.to_string()))
            })
            .collect()
    });

    let mut summary = RunSummary {
        completed: 0,
        skipped: 0,
        failed: 0,
    };
    let mut failures: BTreeMap<String, String> = BTreeMap::new();
    for outcome in outcomes {
        match outcome {
            Ok(true) => summary.completed += 1,
            Ok(false) => summary.skipped += 1,
            Err((cell, message)) => {
                summary.failed += 1;
                failures.insert(cell, message);
            }
        }
    }
    if !failures.is_empty() {
        let manifest = experiment.out_dir.join("errors.json");
        let json = serde_json::to_string_pretty(&failures)
            .map_err(|e| CliError::Data(format!("error manifest: {e}")))?;
        write_atomic(&manifest, json.as_bytes())?;
        return Err(CliError::Partial {
            failed: summary.failed,
            total: cells.len(),
            manifest,
        });
    }
    Ok(summary)
}

fn select_problems<'a>(
    suite: &'a ProblemSuite,
    problem: Option<&str>,
) -> CliResult<Vec<&'a SuiteProblem>> {
    match problem {
        None => Ok(suite.problems().iter().collect()),
        Some("all") => Ok(suite.problems().iter().collect()),
        Some(id) => suite
            .get(id)
            .map(|p| vec![p])
            .ok_or_else(|| CliError::Data(format!("problem '{id}' is not in the suite"))),
    }
}

/// Seed of one run: depends on the master seed, the problem, the population
/// size and the repetition, but not on the other module settings, so all
/// configurations with a given λ start from the same set of samples.
pub fn derive_run_seed(master_seed: u64, problem_id: &str, lambda: usize, rep: usize) -> u64 {
    let mut h = splitmix64(master_seed ^ (lambda as u64).wrapping_mul(0x9E3779B97F4A7C15));
    for byte in problem_id.bytes() {
        h = splitmix64(h ^ u64::from(byte));
    }
    splitmix64(h ^ rep as u64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Runs (or resumes) one cell. Returns false when a complete matching cell
/// was already on disk.
fn run_cell(
    sp: &SuiteProblem,
    config: &OptimizerConfig,
    experiment: &ExperimentConfig,
) -> Result<bool, clusterbench::Error> {
    let stem = cell_stem(&sp.id, &config.id());
    let csv_path = experiment.out_dir.join(format!("{stem}.csv"));
    if csv_path.exists() {
        if let Ok((sidecar, _)) = read_cell(&csv_path) {
            if sidecar.budget == experiment.budget
                && sidecar.repetitions == experiment.repetitions
                && sidecar.master_seed == experiment.master_seed
                && sidecar.config_id == config.id()
            {
                return Ok(false);
            }
        }
        // Present but unreadable or mismatched: rebuild the cell.
    }

    let mut runs = Vec::with_capacity(experiment.repetitions);
    for rep in 0..experiment.repetitions {
        let seed = derive_run_seed(experiment.master_seed, &sp.id, config.lambda, rep);
        let seeded = config.clone().with_seed(seed);
        let mut meter = EvalMeter::new(&sp.problem, experiment.budget);
        let mut log = run_es(&mut meter, &seeded)?;
        log.problem_id = sp.id.clone();
        log.repetition = rep;
        runs.push(log);
    }
    write_cell(&experiment.out_dir, config, experiment.master_seed, &runs)?;
    Ok(true)
}

// ---------------------------------------------------------------------------
// basin
// ---------------------------------------------------------------------------

/// Basin-analysis output for one problem.
#[derive(Debug, Serialize)]
pub struct BasinReport {
    pub problem_id: String,
    pub starts: usize,
    pub budget_per_search: usize,
    pub region_retention: f64,
    pub distinct_solutions: usize,
    /// Distinct solutions after collapsing symmetric copies.
    pub distinct_canonical_solutions: usize,
    pub representatives: Vec<usize>,
    pub representative_values: Vec<f64>,
    /// Connectivity verdict per probed (worse, better) representative pair.
    pub connectivity: Vec<(usize, usize, Connectivity)>,
    pub graph: clusterbench::landscape::SolutionGraph,
}

/// Runs the basin pipeline on one problem: region-constrained starts, two
/// local searches per start, the hill-valley solution network, clique
/// representatives and pairwise connectivity probes.
pub fn run_basin_analysis(
    sp: &SuiteProblem,
    starts: usize,
    budget: usize,
    seed: u64,
) -> CliResult<BasinReport> {
    let problem = &sp.problem;
    let start_points = region_constrained_starts(problem, starts, seed)?;

    let mut solutions = Vec::with_capacity(starts * 2);
    let mut pairs = Vec::with_capacity(starts * 2);
    for (i, start) in start_points.iter().enumerate() {
        let run_seed = splitmix64(seed ^ ((i as u64) << 1));
        let mut meter = EvalMeter::new(problem, budget);
        let simplex = run_simplex_local(&mut meter, start.as_slice(), run_seed)?;
        push_solution(&simplex, "simplex", start, &mut solutions, &mut pairs)?;

        let es_seed = splitmix64(seed ^ ((i as u64) << 1) ^ 1);
        let mut meter = EvalMeter::new(problem, budget);
        let one_plus_one =
            run_one_plus_one(&mut meter, start.as_slice(), LOCAL_SIGMA0, es_seed, false)?;
        push_solution(&one_plus_one, "one_plus_one_es", start, &mut solutions, &mut pairs)?;
    }

    let retention = region_retention(problem, &pairs)?;
    let graph = build_solution_graph(
        problem,
        solutions,
        DEFAULT_INTERMEDIATES,
        DEFAULT_HILL_VALLEY_TOL,
        DEFAULT_VALUE_MERGE_EPS,
    )?;
    let distinct = count_distinct_solutions(&graph);
    let canonical = count_distinct_canonical_solutions(&graph, problem);

    // Connectivity probes between merged representatives, capped at the 12
    // best ones: the probe walk is expensive and pair counts grow
    // quadratically on high-dimensional problems.
    const MAX_PROBED: usize = 12;
    let mut probed = merged_representatives(&graph);
    probed.truncate(MAX_PROBED);
    let mut connectivity = Vec::new();
    for a in 0..probed.len() {
        for b in (a + 1)..probed.len() {
            let (i, j) = (probed[a], probed[b]);
            let (worse, better) = if graph.nodes[i].value >= graph.nodes[j].value {
                (i, j)
            } else {
                (j, i)
            };
            let verdict = basin_connectivity_probe(
                problem,
                &graph.nodes[worse].point,
                &graph.nodes[better].point,
                DEFAULT_PERTURB_SCALE,
                DEFAULT_CLOSENESS_EPS,
                DEFAULT_STAGNATION_LIMIT,
                splitmix64(seed ^ ((a as u64) << 32) ^ b as u64),
            )?;
            connectivity.push((worse, better, verdict));
        }
    }

    let reps = graph.representatives.clone();
    let representative_values = reps.iter().map(|&i| graph.nodes[i].value).collect();
    Ok(BasinReport {
        problem_id: sp.id.clone(),
        starts,
        budget_per_search: budget,
        region_retention: retention,
        distinct_solutions: distinct,
        distinct_canonical_solutions: canonical,
        representatives: reps,
        representative_values,
        connectivity,
        graph,
    })
}

fn push_solution(
    log: &RunLog,
    algorithm: &str,
    start: &clusterbench::CenterVector,
    solutions: &mut Vec<Solution>,
    pairs: &mut Vec<(clusterbench::CenterVector, clusterbench::CenterVector)>,
) -> CliResult<()> {
    let value = log
        .final_best()
        .ok_or_else(|| CliError::Data(format!("{algorithm} produced an empty run log")))?;
    let final_point = clusterbench::CenterVector::new(log.final_vector.clone())?;
    solutions.push(Solution {
        point: log.final_vector.clone(),
        value,
        algorithm: algorithm.to_string(),
        start: Some(start.as_slice().to_vec()),
    });
    pairs.push((start.clone(), final_point));
    Ok(())
}

/// Runs basin analysis for one problem id (or every problem when `problem`
/// is "all"), writing one graph JSON per problem plus a heatmap CSV of
/// distinct-solution counts.
pub fn cmd_basin(
    manifest: Option<&Path>,
    problem: &str,
    starts: usize,
    budget: usize,
    seed: u64,
    out_dir: &Path,
) -> CliResult<Vec<BasinReport>> {
    let suite = load_suite(manifest)?;
    let targets: Vec<&SuiteProblem> = if problem == "all" {
        suite.problems().iter().collect()
    } else {
        vec![suite
            .get(problem)
            .ok_or_else(|| CliError::Data(format!("problem '{problem}' is not in the suite")))?]
    };
    ensure_dir(out_dir)?;

    let reports: Vec<BasinReport> = targets
        .par_iter()
        .map(|sp| run_basin_analysis(sp, starts, budget, seed))
        .collect::<CliResult<Vec<_>>>()?;

    let mut heatmap = String::from("problem_id,distinct_solutions,distinct_canonical,retention\n");
    for report in &reports {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Data(format!("graph json: {e}")))?;
        write_atomic(
            &out_dir.join(format!("basin_{}.json", report.problem_id)),
            json.as_bytes(),
        )?;
        let _ = writeln!(
            heatmap,
            "{},{},{},{}",
            report.problem_id,
            report.distinct_solutions,
            report.distinct_canonical_solutions,
            report.region_retention
        );
    }
    write_atomic(&out_dir.join("basin_heatmap.csv"), heatmap.as_bytes())?;
    Ok(reports)
}

// ---------------------------------------------------------------------------
// transform-compare
// ---------------------------------------------------------------------------

/// Paired comparison of the default ES configuration on the original versus
/// the stick-breaking-transformed representation of one problem.
#[derive(Debug, Clone, Serialize)]
pub struct TransformComparison {
    pub problem_id: String,
    pub mean_original: f64,
    pub mean_transformed: f64,
    /// `mean_original − mean_transformed`: negative when the original
    /// representation performed better.
    pub difference: f64,
}

/// Runs the paired transform comparison; repetition seeds are shared between
/// the two representations.
pub fn cmd_transform_compare(
    manifest: Option<&Path>,
    problem: Option<&str>,
    budget: usize,
    repetitions: usize,
    seed: u64,
    out_dir: &Path,
) -> CliResult<Vec<TransformComparison>> {
    if repetitions == 0 {
        return Err(CliError::Usage("repetitions must be >= 1".into()));
    }
    let suite = load_suite(manifest)?;
    let targets = select_problems(&suite, problem)?;
    ensure_dir(out_dir)?;

    let rows: Vec<TransformComparison> = targets
        .par_iter()
        .map(|sp| -> CliResult<TransformComparison> {
            let config = OptimizerConfig::default_config();
            let transformed = TransformedProblem::new(sp.problem.clone());
            let mut total_original = 0.0;
            let mut total_transformed = 0.0;
            for rep in 0..repetitions {
                let run_seed = derive_run_seed(seed, &sp.id, config.lambda, rep);
                let seeded = config.clone().with_seed(run_seed);

                let mut meter = EvalMeter::new(&sp.problem, budget);
                let log = run_es(&mut meter, &seeded)?;
                total_original += log.final_best().unwrap_or(f64::INFINITY);

                let mut meter = EvalMeter::new(&transformed, budget);
                let log = run_es(&mut meter, &seeded)?;
                total_transformed += log.final_best().unwrap_or(f64::INFINITY);
            }
            let mean_original = total_original / repetitions as f64;
            let mean_transformed = total_transformed / repetitions as f64;
            Ok(TransformComparison {
                problem_id: sp.id.clone(),
                mean_original,
                mean_transformed,
                difference: mean_original - mean_transformed,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut csv = String::from("problem_id,mean_original,mean_transformed,difference\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.problem_id, row.mean_original, row.mean_transformed, row.difference
        );
    }
    write_atomic(&out_dir.join("transform_compare.csv"), csv.as_bytes())?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Files emitted by `cmd_report`.
#[derive(Debug, Serialize)]
pub struct ReportSummary {
    pub problems: Vec<String>,
    pub configs: usize,
    pub budget: usize,
    pub eaf_files: Vec<String>,
    pub skipped_eaf_problems: Vec<String>,
}

/// Aggregates a run-log directory into plot-ready CSVs: EAF curves per
/// dimension group, best/worst spread, module frequencies, Kendall-τ problem
/// similarity, optional cosine similarity over supplied feature vectors and
/// baseline-gap tables.
pub fn cmd_report(
    logs_dir: &Path,
    baselines_path: &Path,
    features_path: Option<&Path>,
    out_dir: &Path,
) -> CliResult<ReportSummary> {
    let cells = read_log_dir(logs_dir)?;
    if cells.is_empty() {
        return Err(CliError::Data(format!(
            "no run logs to analyze in {}",
            logs_dir.display()
        )));
    }
    let budget = cells[0].0.budget;
    for (sidecar, _) in &cells {
        if sidecar.budget != budget {
            return Err(CliError::Data(format!(
                "mixed budgets in log directory: {} has {}, expected {budget}",
                cell_stem(&sidecar.problem_id, &sidecar.config_id),
                sidecar.budget
            )));
        }
    }
    let baselines = BaselineTable::read_csv(baselines_path)?;
    ensure_dir(out_dir)?;

    let table = PerformanceTable::from_runs(
        cells.iter().map(|(s, runs)| (&s.config, runs.as_slice())),
        budget,
    )?;
    let mut problems = table.problem_ids();
    problems.sort_by_key(|p| natural_key(p));

    // Group problems by search dimensionality (taken from final vectors).
    let mut dims: BTreeMap<String, usize> = BTreeMap::new();
    for (_, runs) in &cells {
        for run in runs {
            if !run.final_vector.is_empty() {
                dims.insert(run.problem_id.clone(), run.final_vector.len());
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for p in &problems {
        if let Some(&m) = dims.get(p) {
            groups.entry(m).or_default().push(p.clone());
        }
    }

    // EAF per dimension group with per-problem bounds: lower is the baseline
    // best, upper the worst value observed on that problem. The group curve
    // averages run scores over every run of the group.
    let grid = log_budget_grid(budget, 64);
    let mut eaf_files = Vec::new();
    let mut skipped = Vec::new();
    for (m, group) in &groups {
        let mut weighted: Vec<f64> = vec![0.0; grid.len()];
        let mut run_count = 0usize;
        for problem_id in group {
            let runs: Vec<&RunLog> = cells
                .iter()
                .filter(|(s, _)| &s.problem_id == problem_id)
                .flat_map(|(_, runs)| runs.iter())
                .collect();
            let baseline = baselines.get(problem_id).ok_or_else(|| {
                CliError::Data(format!("no baseline row for problem {problem_id}"))
            })?;
            let lower = baseline.best.max(1e-12);
            let upper = runs
                .iter()
                .filter_map(|r| r.worst_raw())
                .fold(f64::NEG_INFINITY, f64::max);
            if !(upper > lower) {
                skipped.push(problem_id.clone());
                continue;
            }
            let curve = eaf_curve(&runs, lower, upper, &grid)?;
            for (i, (_, score)) in curve.iter().enumerate() {
                weighted[i] += score * runs.len() as f64;
            }
            run_count += runs.len();
        }
        if run_count == 0 {
            continue;
        }
        let mut csv = String::from("evaluations,attainment\n");
        for (b, w) in grid.iter().zip(&weighted) {
            let _ = writeln!(csv, "{},{}", b, w / run_count as f64);
        }
        let name = format!("eaf_m{m}.csv");
        write_atomic(&out_dir.join(&name), csv.as_bytes())?;
        eaf_files.push(name);
    }

    // Best/worst relative spread.
    let mut spread_csv = String::from("problem_id,relative_spread\n");
    for p in &problems {
        let spread = best_worst_spread(&table, p)?;
        let _ = writeln!(spread_csv, "{p},{spread}");
    }
    write_atomic(&out_dir.join("spread.csv"), spread_csv.as_bytes())?;

    // Module frequency among the top-8 configurations.
    let k_top = 8.min(table.configs_for(&problems[0]).len());
    let mut freq = top_k_module_frequency(&table, k_top)?;
    freq.sort_by_key(|f| natural_key(&f.problem_id));
    let mut freq_csv = String::from("problem_id,axis,setting,count\n");
    for f in &freq {
        let p = &f.problem_id;
        let _ = writeln!(freq_csv, "{p},covariance,on,{}", f.covariance_on);
        let _ = writeln!(freq_csv, "{p},covariance,off,{}", f.k_top - f.covariance_on);
        let _ = writeln!(freq_csv, "{p},elitism,on,{}", f.elitism_on);
        let _ = writeln!(freq_csv, "{p},elitism,off,{}", f.k_top - f.elitism_on);
        let _ = writeln!(freq_csv, "{p},boundary,saturate,{}", f.boundary_saturate);
        let _ = writeln!(freq_csv, "{p},boundary,off,{}", f.k_top - f.boundary_saturate);
        for (lambda, count) in &f.lambda_counts {
            let _ = writeln!(freq_csv, "{p},lambda,{lambda},{count}");
        }
        for (mu, count) in &f.mu_counts {
            let _ = writeln!(freq_csv, "{p},mu,{mu},{count}");
        }
    }
    write_atomic(&out_dir.join("module_frequency.csv"), freq_csv.as_bytes())?;

    // Kendall-τ similarity between problems over config performance vectors.
    let vectors: BTreeMap<&String, Vec<f64>> = problems
        .iter()
        .map(|p| {
            let values = table
                .configs_for(p)
                .iter()
                .map(|r| r.mean_final)
                .collect::<Vec<_>>();
            (p, values)
        })
        .collect();
    let mut tau_csv = String::from("problem_id");
    for p in &problems {
        let _ = write!(tau_csv, ",{p}");
    }
    tau_csv.push('\n');
    for a in &problems {
        let _ = write!(tau_csv, "{a}");
        for b in &problems {
            match kendall_tau(&vectors[a], &vectors[b]) {
                Ok(tau) => {
                    let _ = write!(tau_csv, ",{tau}");
                }
                Err(_) => {
                    let _ = write!(tau_csv, ",nan");
                }
            }
        }
        tau_csv.push('\n');
    }
    write_atomic(&out_dir.join("kendall_tau.csv"), tau_csv.as_bytes())?;

    // Cosine similarity over externally supplied feature vectors.
    if let Some(features) = features_path {
        let matrix = feature_cosine_matrix(features)?;
        write_atomic(&out_dir.join("cosine_similarity.csv"), matrix.as_bytes())?;
    }

    // Baseline gaps per population size.
    let gaps = baseline_gap(&table, &baselines)?;
    let mut gap_csv = String::from("problem_id,lambda,config_id,mean_final,gap\n");
    for g in &gaps {
        let _ = writeln!(
            gap_csv,
            "{},{},{},{},{}",
            g.problem_id, g.lambda, g.config_id, g.mean_final, g.gap
        );
    }
    write_atomic(&out_dir.join("baseline_gap.csv"), gap_csv.as_bytes())?;

    let summary = ReportSummary {
        problems: problems.clone(),
        configs: table.configs_for(&problems[0]).len(),
        budget,
        eaf_files,
        skipped_eaf_problems: skipped,
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Data(format!("summary json: {e}")))?;
    write_atomic(&out_dir.join("summary.json"), json.as_bytes())?;
    Ok(summary)
}

/// Reads a feature CSV (`problem_id,f1,f2,…`) and renders the pairwise
/// cosine-similarity matrix.
fn feature_cosine_matrix(path: &Path) -> CliResult<String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("features {}: {e}", path.display())))?;
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || i == 0 {
            continue; // header
        }
        let mut fields = line.split(',');
        let id = fields
            .next()
            .ok_or_else(|| CliError::Data(format!("features row {}: empty", i + 1)))?
            .to_string();
        let values: Result<Vec<f64>, _> = fields.map(|f| f.trim().parse::<f64>()).collect();
        let values = values
            .map_err(|e| CliError::Data(format!("features row {}: {e}", i + 1)))?;
        rows.push((id, values));
    }
    if rows.is_empty() {
        return Err(CliError::Data("feature file has no data rows".into()));
    }
    rows.sort_by_key(|(id, _)| natural_key(id));

    let mut out = String::from("problem_id");
    for (id, _) in &rows {
        let _ = write!(out, ",{id}");
    }
    out.push('\n');
    for (id_a, u) in &rows {
        let _ = write!(out, "{id_a}");
        for (_, v) in &rows {
            match cosine_similarity(u, v) {
                Ok(c) => {
                    let _ = write!(out, ",{c}");
                }
                Err(_) => {
                    let _ = write!(out, ",nan");
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}
