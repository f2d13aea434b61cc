//! Run-log analytics: fixed-budget performance tables, empirical attainment
//! curves, best/worst spread, module frequencies among top configurations,
//! rank correlation between problems and baseline gaps.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::optimizers::{BoundaryCorrection, OptimizerConfig};
use crate::runlog::RunLog;

/// Mean final best-so-far of one (problem, config) cell at a stated budget.
#[derive(Debug, Clone)]
pub struct PerformanceRecord {
    pub problem_id: String,
    pub config_id: String,
    pub config: OptimizerConfig,
    pub mean_final: f64,
    pub repetitions: usize,
}

/// Per-(problem, config) fixed-budget performance, derived purely from logs.
#[derive(Debug, Clone)]
pub struct PerformanceTable {
    pub budget: usize,
    records: Vec<PerformanceRecord>,
}

impl PerformanceTable {
    /// Aggregates run logs at `budget` using step interpolation (last
    /// improvement at or before the budget).
    pub fn from_runs<'a, I>(cells: I, budget: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a OptimizerConfig, &'a [RunLog])>,
    {
        let mut records = Vec::new();
        for (config, runs) in cells {
            let first = runs.first().ok_or_else(|| {
                Error::Analysis("performance table received an empty cell".into())
            })?;
            let mut total = 0.0;
            for run in runs {
                let value = run.best_at(budget).ok_or_else(|| {
                    Error::Analysis(format!(
                        "run {}/{} rep {} has no evaluation at budget {budget}",
                        run.problem_id, run.config_id, run.repetition
                    ))
                })?;
                total += value;
            }
            records.push(PerformanceRecord {
                problem_id: first.problem_id.clone(),
                config_id: first.config_id.clone(),
                config: config.clone(),
                mean_final: total / runs.len() as f64,
                repetitions: runs.len(),
            });
        }
        Ok(PerformanceTable { budget, records })
    }

    pub fn records(&self) -> &[PerformanceRecord] {
        &self.records
    }

    /// Problem ids in first-appearance order.
    pub fn problem_ids(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.problem_id) {
                seen.push(r.problem_id.clone());
            }
        }
        seen
    }

    /// Records of one problem, sorted by config id.
    pub fn configs_for(&self, problem_id: &str) -> Vec<&PerformanceRecord> {
        let mut rows: Vec<&PerformanceRecord> = self
            .records
            .iter()
            .filter(|r| r.problem_id == problem_id)
            .collect();
        rows.sort_by(|a, b| a.config_id.cmp(&b.config_id));
        rows
    }
}

/// Log-spaced integer budget grid from 1 to `max_budget` (both included).
pub fn log_budget_grid(max_budget: usize, points: usize) -> Vec<usize> {
    let points = points.max(2);
    let mut grid = Vec::with_capacity(points);
    let hi = (max_budget.max(1)) as f64;
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let b = hi.powf(t).round() as usize;
        grid.push(b.clamp(1, max_budget.max(1)));
    }
    grid.dedup();
    grid
}

/// Empirical attainment curve over a set of runs.
///
/// Per run and budget the attainment score is the log-scaled position of the
/// best-so-far value between `upper` (score 0) and `lower` (score 1), clamped
/// to [0,1]; this is the ECDF in the infinite-target limit. The curve is the
/// mean score over runs at each grid budget.
pub fn eaf_curve(
    runs: &[&RunLog],
    lower: f64,
    upper: f64,
    budgets: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if runs.is_empty() {
        return Err(Error::Analysis("eaf needs at least one run".into()));
    }
    if !(lower > 0.0) || !(upper > 0.0) {
        return Err(Error::Analysis(
            "eaf bounds must be positive (log scaling)".into(),
        ));
    }
    if lower >= upper {
        return Err(Error::Analysis(format!(
            "eaf lower bound {lower} must be below upper bound {upper}"
        )));
    }
    let log_lower = lower.ln();
    let log_upper = upper.ln();
    let span = log_upper - log_lower;

    let mut curve = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let mut total = 0.0;
        for run in runs {
            let score = match run.best_at(b) {
                None => 0.0,
                Some(v) => {
                    let clamped = v.max(lower);
                    ((log_upper - clamped.ln()) / span).clamp(0.0, 1.0)
                }
            };
            total += score;
        }
        curve.push((b, total / runs.len() as f64));
    }
    Ok(curve)
}

/// Relative spread between the best and worst mean final value on a problem:
/// `(worst − best) / worst`, with 0/0 defined as 0.
pub fn best_worst_spread(table: &PerformanceTable, problem_id: &str) -> Result<f64> {
    let rows = table.configs_for(problem_id);
    if rows.len() < 2 {
        return Err(Error::Analysis(format!(
            "spread needs >= 2 configs for {problem_id}"
        )));
    }
    let best = rows.iter().map(|r| r.mean_final).fold(f64::INFINITY, f64::min);
    let worst = rows
        .iter()
        .map(|r| r.mean_final)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst == 0.0 {
        return Ok(0.0);
    }
    Ok((worst - best) / worst)
}

/// Per-axis counts of module settings among the best `k_top` configurations
/// of one problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleFrequency {
    pub problem_id: String,
    pub k_top: usize,
    pub covariance_on: usize,
    pub elitism_on: usize,
    pub boundary_saturate: usize,
    pub lambda_counts: BTreeMap<usize, usize>,
    pub mu_counts: BTreeMap<usize, usize>,
}

/// Ranks configs per problem by mean final value (ascending, ties broken by
/// config id) and counts each axis setting among the top `k_top`.
pub fn top_k_module_frequency(
    table: &PerformanceTable,
    k_top: usize,
) -> Result<Vec<ModuleFrequency>> {
    let mut out = Vec::new();
    for problem_id in table.problem_ids() {
        let mut rows = table.configs_for(&problem_id);
        if k_top > rows.len() {
            return Err(Error::Analysis(format!(
                "k_top {k_top} exceeds the {} configs on {problem_id}",
                rows.len()
            )));
        }
        // configs_for returns config-id order; a stable value sort keeps the
        // documented tie rule (lower config id wins).
        rows.sort_by(|a, b| {
            a.mean_final
                .partial_cmp(&b.mean_final)
                .expect("finite mean finals")
        });
        let mut freq = ModuleFrequency {
            problem_id: problem_id.clone(),
            k_top,
            covariance_on: 0,
            elitism_on: 0,
            boundary_saturate: 0,
            lambda_counts: BTreeMap::new(),
            mu_counts: BTreeMap::new(),
        };
        for row in rows.iter().take(k_top) {
            if row.config.covariance_adaptation {
                freq.covariance_on += 1;
            }
            if row.config.elitism {
                freq.elitism_on += 1;
            }
            if row.config.boundary_correction == BoundaryCorrection::Saturate {
                freq.boundary_saturate += 1;
            }
            *freq.lambda_counts.entry(row.config.lambda).or_default() += 1;
            *freq.mu_counts.entry(row.config.mu).or_default() += 1;
        }
        out.push(freq);
    }
    Ok(out)
}

/// Kendall's τ-b (tie-corrected) between two equally long value lists.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Analysis(format!(
            "kendall tau length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Analysis("kendall tau needs length >= 2".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "kendall tau input",
        });
    }

    let n = a.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_a_only = 0i64;
    let mut ties_b_only = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            let tied_a = da == 0.0;
            let tied_b = db == 0.0;
            match (tied_a, tied_b) {
                (true, true) => {}
                (true, false) => ties_a_only += 1,
                (false, true) => ties_b_only += 1,
                (false, false) => {
                    if (da > 0.0) == (db > 0.0) {
                        concordant += 1;
                    } else {
                        discordant += 1;
                    }
                }
            }
        }
    }
    let comparable = concordant + discordant;
    let denom_a = (comparable + ties_b_only) as f64;
    let denom_b = (comparable + ties_a_only) as f64;
    if denom_a == 0.0 || denom_b == 0.0 {
        return Err(Error::Analysis(
            "kendall tau undefined for constant input".into(),
        ));
    }
    Ok((concordant - discordant) as f64 / (denom_a * denom_b).sqrt())
}

/// Cosine similarity `u·v / (‖u‖‖v‖)` between two feature vectors.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Analysis(format!(
            "cosine length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Analysis(
            "cosine similarity undefined for a zero vector".into(),
        ));
    }
    Ok(dot / (nu * nv))
}

/// Gap of the best configuration at one population size to the baseline best.
#[derive(Debug, Clone)]
pub struct BaselineGap {
    pub problem_id: String,
    pub lambda: usize,
    pub config_id: String,
    pub mean_final: f64,
    /// `mean_final − baseline best`; negative when the optimizer won.
    pub gap: f64,
}

/// For every problem and every population size present in the table, the
/// minimal mean final value among configs with that λ, as a difference to the
/// baseline best.
pub fn baseline_gap(
    table: &PerformanceTable,
    baselines: &crate::baseline::BaselineTable,
) -> Result<Vec<BaselineGap>> {
    let mut out = Vec::new();
    for problem_id in table.problem_ids() {
        let baseline = baselines.get(&problem_id).ok_or_else(|| {
            Error::Analysis(format!("no baseline row for problem {problem_id}"))
        })?;
        let rows = table.configs_for(&problem_id);
        let lambdas: std::collections::BTreeSet<usize> =
            rows.iter().map(|r| r.config.lambda).collect();
        for lambda in lambdas {
            let best = rows
                .iter()
                .filter(|r| r.config.lambda == lambda)
                .min_by(|x, y| {
                    x.mean_final
                        .partial_cmp(&y.mean_final)
                        .expect("finite mean finals")
                        .then_with(|| x.config_id.cmp(&y.config_id))
                })
                .expect("lambda set derived from rows");
            out.push(BaselineGap {
                problem_id: problem_id.clone(),
                lambda,
                config_id: best.config_id.clone(),
                mean_final: best.mean_final,
                gap: best.mean_final - baseline.best,
            });
        }
    }
    Ok(out)
}
