//! K-Means++-initialized Lloyd's algorithm, used to collect per-problem
//! reference values that black-box optimizers are compared against.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{CenterVector, ClusteringProblem};
use crate::suite::ProblemSuite;

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-12;

/// Baseline statistics for one problem.
#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub problem_id: String,
    /// Best objective over all repetitions.
    pub best: f64,
    /// Objective of every repetition, in repetition order.
    pub values: Vec<f64>,
    /// Center vector achieving `best`.
    pub best_centers: CenterVector,
    pub repetitions: usize,
    pub seed: u64,
}

impl BaselineResult {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn std(&self) -> f64 {
        if self.values.len() < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let var = self
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (self.values.len() - 1) as f64;
        var.sqrt()
    }
}

/// One exported row of the baseline table.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub problem_id: String,
    pub repetitions: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
}

/// Baseline rows keyed by problem id, in suite order.
#[derive(Debug, Clone, Default)]
pub struct BaselineTable {
    pub rows: Vec<BaselineRow>,
}

impl BaselineTable {
    pub fn get(&self, problem_id: &str) -> Option<&BaselineRow> {
        self.rows.iter().find(|r| r.problem_id == problem_id)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("problem_id,repetitions,best,mean,std,seed\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.problem_id, r.repetitions, r.best, r.mean, r.std, r.seed
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Manifest(format!(
            "baseline csv {}: {e}",
            path.display()
        )))?;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::CsvRow {
                path: path.to_path_buf(),
                row: i + 1,
                message: e.to_string(),
            })?;
            let field = |idx: usize| -> Result<&str> {
                record.get(idx).ok_or_else(|| Error::CsvRow {
                    path: path.to_path_buf(),
                    row: i + 1,
                    message: format!("missing column {idx}"),
                })
            };
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::CsvRow {
                    path: path.to_path_buf(),
                    row: i + 1,
                    message: format!("non-numeric field '{s}'"),
                })
            };
            rows.push(BaselineRow {
                problem_id: field(0)?.to_string(),
                repetitions: field(1)?.parse().unwrap_or(0),
                best: parse(field(2)?)?,
                mean: parse(field(3)?)?,
                std: parse(field(4)?)?,
                seed: field(5)?.parse().unwrap_or(0),
            });
        }
        Ok(BaselineTable { rows })
    }
}

/// K-Means++ initialization: the first center is a uniformly chosen data
/// point; each subsequent center is a data point sampled with probability
/// proportional to its squared distance to the nearest chosen center.
/// Deterministic for a fixed seed. `k > n` is permitted (duplicates allowed).
pub fn kmeans_pp_init(problem: &ClusteringProblem, seed: u64) -> Result<CenterVector> {
    let data = problem.data();
    let (n, d, k) = (data.len(), data.dim(), problem.k());
    if n == 0 {
        return Err(Error::Precondition("kmeans++ needs a non-empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<f64> = Vec::with_capacity(k * d);

    let first = rng.random_range(0..n);
    centers.extend_from_slice(data.point(first));

    // Squared distance of every point to its nearest chosen center.
    let mut min_sq = vec![0.0f64; n];
    for (i, point) in data.iter().enumerate() {
        min_sq[i] = sq_dist(point, data.point(first));
    }

    for _ in 1..k {
        let total: f64 = min_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in min_sq.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // All mass collapsed (k exceeds the number of distinct points).
            rng.random_range(0..n)
        };
        let new_center = data.point(pick).to_vec();
        for (i, point) in data.iter().enumerate() {
            let dist = sq_dist(point, &new_center);
            if dist < min_sq[i] {
                min_sq[i] = dist;
            }
        }
        centers.extend_from_slice(&new_center);
    }
    CenterVector::new(centers)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        acc += diff * diff;
    }
    acc
}

/// Outcome of a Lloyd run, including the per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct LloydResult {
    pub centers: CenterVector,
    pub value: f64,
    /// Objective after the initial centers and after each accepted update;
    /// non-increasing by construction.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Alternates nearest-center assignment and centroid update until the
/// improvement drops below `tol` or `max_iter` is reached.
///
/// Empty clusters are re-seeded at the point farthest from its nearest
/// center, which keeps the objective non-increasing. An update that fails to
/// improve (possible only through rounding) is rejected, so the returned
/// trace never increases.
pub fn lloyd(
    problem: &ClusteringProblem,
    init: &CenterVector,
    max_iter: usize,
    tol: f64,
) -> Result<LloydResult> {
    problem.check_centers(init)?;
    let data = problem.data();
    let (n, d, k) = (data.len(), data.dim(), problem.k());

    let mut centers = init.clone();
    let mut value = problem.evaluate(&centers)?;
    let mut trace = vec![value];
    let mut iterations = 0;

    for _ in 0..max_iter {
        let assignment = problem.assign(&centers)?;
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for (i, point) in data.iter().enumerate() {
            let j = assignment.nearest(i);
            counts[j] += 1;
            for t in 0..d {
                sums[j * d + t] += point[t];
            }
        }
        let mut updated = centers.as_slice().to_vec();
        for j in 0..k {
            if counts[j] > 0 {
                for t in 0..d {
                    updated[j * d + t] = sums[j * d + t] / counts[j] as f64;
                }
            }
        }
        // Re-seed empty clusters one at a time so repairs see each other.
        for j in 0..k {
            if counts[j] == 0 {
                let farthest = (0..n)
                    .max_by(|&a, &b| {
                        let da = nearest_center_dist(problem, data.point(a), &updated, d, k);
                        let db = nearest_center_dist(problem, data.point(b), &updated, d, k);
                        da.partial_cmp(&db).expect("finite distances")
                    })
                    .expect("non-empty dataset");
                updated[j * d..(j + 1) * d].copy_from_slice(data.point(farthest));
            }
        }

        let candidate = CenterVector::new(updated)?;
        let new_value = problem.evaluate(&candidate)?;
        if new_value > value {
            break;
        }
        let improvement = value - new_value;
        centers = candidate;
        value = new_value;
        trace.push(value);
        iterations += 1;
        if improvement < tol {
            break;
        }
    }

    Ok(LloydResult {
        centers,
        value,
        trace,
        iterations,
    })
}

fn nearest_center_dist(
    problem: &ClusteringProblem,
    point: &[f64],
    centers: &[f64],
    d: usize,
    k: usize,
) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..k {
        let dist = problem
            .assignment_metric()
            .distance(point, &centers[j * d..(j + 1) * d]);
        if dist < best {
            best = dist;
        }
    }
    best
}

/// Runs `repetitions` independent K-Means++ + Lloyd restarts on every suite
/// problem. Repetition `r` uses seed `master_seed + r`; the layout is
/// deterministic and independent of the parallel schedule.
pub fn collect_baselines(
    suite: &ProblemSuite,
    repetitions: usize,
    master_seed: u64,
) -> Result<Vec<BaselineResult>> {
    if repetitions == 0 {
        return Err(Error::Precondition("repetitions must be >= 1".into()));
    }
    suite
        .problems()
        .par_iter()
        .map(|sp| {
            let mut values = Vec::with_capacity(repetitions);
            let mut best = f64::INFINITY;
            let mut best_centers: Option<CenterVector> = None;
            for r in 0..repetitions {
                let seed = master_seed.wrapping_add(r as u64);
                let init = kmeans_pp_init(&sp.problem, seed)?;
                let result = lloyd(&sp.problem, &init, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
                if result.value < best {
                    best = result.value;
                    best_centers = Some(result.centers.clone());
                }
                values.push(result.value);
            }
            Ok(BaselineResult {
                problem_id: sp.id.clone(),
                best,
                values,
                best_centers: best_centers.expect("at least one repetition"),
                repetitions,
                seed: master_seed,
            })
        })
        .collect()
}

/// Condenses per-problem results into the exported table.
pub fn baseline_table(results: &[BaselineResult]) -> BaselineTable {
    BaselineTable {
        rows: results
            .iter()
            .map(|r| BaselineRow {
                problem_id: r.problem_id.clone(),
                repetitions: r.repetitions,
                best: r.best,
                mean: r.mean(),
                std: r.std(),
                seed: r.seed,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::suite::{build_suite, ManifestEntry, Preprocessing, SuiteManifest};

    fn one_d(points: &[f64]) -> ClusteringProblem {
        let data = Dataset::from_rows("t", points.iter().map(|&p| vec![p]).collect()).unwrap();
        ClusteringProblem::new(data, 2).unwrap()
    }

    #[test]
    fn kmeans_pp_k1_picks_a_data_point() {
        let data = Dataset::from_rows("t", vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let problem = ClusteringProblem::new(data, 1).unwrap();
        let init = kmeans_pp_init(&problem, 3).unwrap();
        assert!([0.0, 0.5, 1.0].contains(&init.as_slice()[0]));
    }

    #[test]
    fn kmeans_pp_two_points_picks_both() {
        // After the first pick the already-chosen point has weight zero, so
        // the second pick is the other point with probability 1.
        let problem = one_d(&[0.0, 1.0]);
        for seed in 0..20 {
            let init = kmeans_pp_init(&problem, seed).unwrap();
            let mut centers = init.as_slice().to_vec();
            centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(centers, vec![0.0, 1.0], "seed {seed}");
        }
    }

    #[test]
    fn kmeans_pp_is_deterministic() {
        let problem = one_d(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let a = kmeans_pp_init(&problem, 42).unwrap();
        let b = kmeans_pp_init(&problem, 42).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn kmeans_pp_allows_k_above_n() {
        let data = Dataset::from_rows("t", vec![vec![0.0], vec![1.0]]).unwrap();
        let problem = ClusteringProblem::new(data, 4).unwrap();
        let init = kmeans_pp_init(&problem, 0).unwrap();
        assert_eq!(init.len(), 4);
    }

    #[test]
    fn lloyd_converges_from_centroid() {
        let data = Dataset::from_rows("t", vec![vec![0.0], vec![1.0]]).unwrap();
        let problem = ClusteringProblem::new(data, 1).unwrap();
        let result = lloyd(
            &problem,
            &CenterVector::new(vec![0.5]).unwrap(),
            300,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(result.centers.as_slice(), &[0.5]);
        assert_eq!(result.value, 0.25);
        assert!(result.iterations <= 1);
    }

    #[test]
    fn lloyd_two_pairs_hand_computed() {
        let data = Dataset::from_rows(
            "t",
            vec![vec![0.0], vec![0.1], vec![0.9], vec![1.0]],
        )
        .unwrap();
        let problem = ClusteringProblem::new(data, 2).unwrap();
        let result = lloyd(
            &problem,
            &CenterVector::new(vec![0.2, 0.8]).unwrap(),
            300,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(result.centers.as_slice(), &[0.05, 0.95]);
        assert!((result.value - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn lloyd_trace_is_monotone_on_random_starts() {
        let data = Dataset::from_rows(
            "t",
            (0..30)
                .map(|i| vec![(i as f64 * 0.37) % 1.0, (i as f64 * 0.61) % 1.0])
                .collect(),
        )
        .unwrap();
        let problem = ClusteringProblem::new(data, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let init: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let result = lloyd(
                &problem,
                &CenterVector::new(init).unwrap(),
                300,
                DEFAULT_TOL,
            )
            .unwrap();
            for w in result.trace.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn lloyd_repairs_empty_clusters() {
        let data = Dataset::from_rows("t", vec![vec![0.0], vec![0.1], vec![1.0]]).unwrap();
        let problem = ClusteringProblem::new(data, 2).unwrap();
        // Both initial centers sit far right; cluster 0 captures everything.
        let result = lloyd(
            &problem,
            &CenterVector::new(vec![5.0, 9.0]).unwrap(),
            300,
            DEFAULT_TOL,
        )
        .unwrap();
        // After repair both clusters are active and the split is recovered.
        assert!(result.value < 0.01);
    }

    #[test]
    fn baselines_on_separated_blobs_reach_within_blob_variance() {
        // Two tight blobs; the k=2 optimum is the sum of within-blob
        // variances, computable analytically from memberships.
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push(vec![0.1 + 0.001 * i as f64]);
            rows.push(vec![0.9 + 0.001 * i as f64]);
        }
        let data = Dataset::from_rows("blobs", rows.clone()).unwrap();
        let problem = ClusteringProblem::new(data, 2).unwrap();

        let blob_a: Vec<f64> = rows.iter().step_by(2).map(|r| r[0]).collect();
        let blob_b: Vec<f64> = rows.iter().skip(1).step_by(2).map(|r| r[0]).collect();
        let var = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        };
        let expected = (var(&blob_a) + var(&blob_b)) / rows.len() as f64;

        let mut best = f64::INFINITY;
        for seed in 0..20 {
            let init = kmeans_pp_init(&problem, seed).unwrap();
            let result = lloyd(&problem, &init, 300, DEFAULT_TOL).unwrap();
            best = best.min(result.value);
        }
        assert!((best - expected).abs() < 1e-6);
    }

    #[test]
    fn collect_baselines_is_deterministic() {
        let manifest = SuiteManifest {
            k_values: vec![2, 3],
            datasets: vec![ManifestEntry {
                name: "r".into(),
                source: "builtin:ruspini".into(),
                preprocessing: Preprocessing::default(),
            }],
            base_dir: Default::default(),
        };
        let suite = build_suite(&manifest).unwrap();
        let a = collect_baselines(&suite, 5, 1).unwrap();
        let b = collect_baselines(&suite, 5, 1).unwrap();
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values, y.values);
            assert_eq!(x.best, y.best);
            assert!(x.best <= x.values.iter().cloned().fold(f64::INFINITY, f64::min) + 0.0);
        }
    }

    #[test]
    fn single_repetition_best_equals_mean() {
        let manifest = SuiteManifest {
            k_values: vec![2],
            datasets: vec![ManifestEntry {
                name: "r".into(),
                source: "builtin:ruspini".into(),
                preprocessing: Preprocessing::default(),
            }],
            base_dir: Default::default(),
        };
        let suite = build_suite(&manifest).unwrap();
        let results = collect_baselines(&suite, 1, 9).unwrap();
        assert_eq!(results[0].best, results[0].mean());
        assert_eq!(results[0].std(), 0.0);
    }

    #[test]
    fn table_roundtrip() {
        let table = BaselineTable {
            rows: vec![BaselineRow {
                problem_id: "F1_k2".into(),
                repetitions: 3,
                best: 0.012345678901234567,
                mean: 0.02,
                std: 0.001,
                seed: 7,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("baselines.csv");
        table.write_csv(&path).unwrap();
        let back = BaselineTable::read_csv(&path).unwrap();
        assert_eq!(table.rows, back.rows);
    }
}
