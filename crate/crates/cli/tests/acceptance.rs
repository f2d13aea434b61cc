//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The criteria pin objective correctness against a brute-force oracle, the
//! exact symmetry and neutrality guarantees, suite shape, ES-vs-baseline
//! quality on the bundled Ruspini problems, transform properties, the basin
//! pipeline's qualitative behavior, the region-retention trend, the analysis
//! unit oracles and byte-level determinism of the run command.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use clusterbench::baseline::{lloyd, DEFAULT_MAX_ITER, DEFAULT_TOL};
use clusterbench::data::Dataset;
use clusterbench::optimizers::{
    run_es, BoundaryCorrection, OptimizerConfig, DEFAULT_SIGMA0, LOCAL_SIGMA0,
};
use clusterbench::problem::{CenterVector, ClusteringProblem, EvalMeter, Objective};
use clusterbench::suite::{build_suite, SuiteManifest};
use clusterbench::transform::{stick_breaking_transform, TransformedProblem};
use clusterbench::{analysis, landscape, optimizers};
use clusterbench_cli::{cmd_run, derive_run_seed, ConfigSelector, ExperimentConfig};

/// Straight-line reimplementation of the MSE objective: indexed loops, no
/// shared code with the library path it checks.
fn brute_force_mse(data: &Dataset, y: &[f64], k: usize) -> f64 {
    let d = data.dim();
    let n = data.len();
    let mut total = 0.0;
    for i in 0..n {
        let point = data.point(i);
        let mut best = f64::INFINITY;
        for j in 0..k {
            let mut dist = 0.0;
            for t in 0..d {
                let diff = point[t] - y[j * d + t];
                dist += diff * diff;
            }
            if dist < best {
                best = dist;
            }
        }
        total += best;
    }
    total / n as f64
}

fn default_suite() -> clusterbench::ProblemSuite {
    build_suite(&SuiteManifest::default_suite()).expect("default suite builds")
}

#[test]
fn criterion_01_objective_matches_brute_force_oracle() {
    let suite = default_suite();
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0usize;
    for sp in suite.problems() {
        let m = sp.problem.search_dim();
        if m > 4 {
            continue;
        }
        for _ in 0..10_000 {
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..1.5)).collect();
            let fast = sp
                .problem
                .evaluate(&CenterVector::new(y.clone()).unwrap())
                .unwrap();
            let slow = brute_force_mse(sp.problem.data(), &y, sp.k);
            assert_eq!(fast, slow, "{}: mismatch at {y:?}", sp.id);
        }
        checked += 1;
    }
    let elapsed = started.elapsed();
    assert_eq!(checked, 10, "expected ten m<=4 problems");
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "oracle comparison took {elapsed:?}, must stay under 10 s"
    );
    println!(
        "[PASS] criterion 01: evaluate == brute-force oracle on 10^4 inputs x {checked} problems ({elapsed:?})"
    );
}

#[test]
fn criterion_02_permutation_invariance_bit_identical() {
    let suite = default_suite();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut k_seen = std::collections::BTreeSet::new();
    for sp in suite.problems() {
        let (k, d, m) = (sp.k, sp.problem.point_dim(), sp.problem.search_dim());
        k_seen.insert(k);
        for _ in 0..1000 {
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-0.2..1.2)).collect();
            let mut order: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let permuted: Vec<f64> = order
                .iter()
                .flat_map(|&j| y[j * d..(j + 1) * d].iter().copied())
                .collect();
            let a = sp
                .problem
                .evaluate(&CenterVector::new(y).unwrap())
                .unwrap();
            let b = sp
                .problem
                .evaluate(&CenterVector::new(permuted).unwrap())
                .unwrap();
            assert!(a == b, "{}: permuted evaluation differs", sp.id);
        }
    }
    assert_eq!(
        k_seen.into_iter().collect::<Vec<_>>(),
        vec![2, 3, 5, 10],
        "every k of the suite grid must be exercised"
    );
    println!("[PASS] criterion 02: permutation invariance bit-identical on 1000 pairs x 40 problems");
}

#[test]
fn criterion_03_neutrality_is_exact() {
    // One center far outside the data range: every point is closer to the
    // in-range center, so the far block is inactive and perturbing it inside
    // a unit ball keeps the objective exactly constant.
    let suite = default_suite();
    let sp = suite.get("F8_k2").unwrap();
    let d = sp.problem.point_dim();
    let mut base = vec![0.5; 2 * d];
    for t in 0..d {
        base[d + t] = 10.0;
    }
    let reference = sp
        .problem
        .evaluate(&CenterVector::new(base.clone()).unwrap())
        .unwrap();
    assert_eq!(
        sp.problem
            .active_centers(&CenterVector::new(base.clone()).unwrap())
            .unwrap(),
        vec![0]
    );

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..1000 {
        let mut moved = base.clone();
        for t in 0..d {
            moved[d + t] = 10.0 + rng.random_range(-1.0..1.0);
        }
        let value = sp
            .problem
            .evaluate(&CenterVector::new(moved).unwrap())
            .unwrap();
        assert!(
            value == reference,
            "neutral perturbation changed the objective by {}",
            value - reference
        );
    }
    println!("[PASS] criterion 03: inactive-center perturbations change the objective by exactly 0 (1000 trials)");
}

#[test]
fn criterion_04_suite_shape() {
    let suite = default_suite();
    assert_eq!(suite.len(), 40);
    let mut per_dim = std::collections::BTreeMap::new();
    for sp in suite.problems() {
        *per_dim.entry(sp.problem.search_dim()).or_insert(0usize) += 1;
    }
    assert_eq!(
        per_dim.into_iter().collect::<Vec<_>>(),
        vec![(4, 10), (6, 10), (10, 10), (20, 10)]
    );
    println!("[PASS] criterion 04: default suite is 40 problems, 10 per m in {{4,6,10,20}}");
}

/// The 16-config sub-grid of the ES-vs-baseline check: boundary off, both
/// covariance and elitism settings, four (λ, μ) pairs spanning small
/// exploitative to large global populations.
fn sub_grid() -> Vec<OptimizerConfig> {
    let mut configs = Vec::new();
    for covariance_adaptation in [true, false] {
        for elitism in [true, false] {
            for (lambda, mu) in [(10, 5), (20, 10), (100, 50), (200, 50)] {
                configs.push(OptimizerConfig {
                    covariance_adaptation,
                    elitism,
                    boundary_correction: BoundaryCorrection::Off,
                    lambda,
                    mu,
                    sigma0: DEFAULT_SIGMA0,
                    seed: 0,
                });
            }
        }
    }
    configs
}

#[test]
fn criterion_05_best_es_config_within_one_percent_of_kmeans_best() {
    let started = Instant::now();
    let suite = default_suite();
    let configs = sub_grid();
    assert_eq!(configs.len(), 16);

    for problem_id in ["F8_k2", "F8_k3"] {
        let sp = suite.get(problem_id).unwrap();

        // 100-repetition K-Means++ baseline.
        let mut kpp_best = f64::INFINITY;
        for rep in 0..100u64 {
            let init = clusterbench::baseline::kmeans_pp_init(&sp.problem, 1000 + rep).unwrap();
            let result = lloyd(&sp.problem, &init, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
            kpp_best = kpp_best.min(result.value);
        }

        let mut best_config_mean = f64::INFINITY;
        let mut best_config_id = String::new();
        for config in &configs {
            let mut total = 0.0;
            for rep in 0..25 {
                let seed = derive_run_seed(9000, problem_id, config.lambda, rep);
                let seeded = config.clone().with_seed(seed);
                let mut meter = EvalMeter::new(&sp.problem, 5000);
                let log = run_es(&mut meter, &seeded).unwrap();
                total += log.final_best().unwrap();
            }
            let mean = total / 25.0;
            if mean < best_config_mean {
                best_config_mean = mean;
                best_config_id = config.id();
            }
        }

        let relative_gap = (best_config_mean - kpp_best) / kpp_best;
        assert!(
            relative_gap <= 0.01,
            "{problem_id}: best config {best_config_id} mean {best_config_mean} vs K-Means++ best {kpp_best} (relative gap {relative_gap})"
        );
        println!(
            "[PASS] criterion 05 ({problem_id}): best config {best_config_id} mean {best_config_mean:.6e}, K-Means++ best {kpp_best:.6e}, relative gap {relative_gap:+.2e}"
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "ES-vs-baseline study took {elapsed:?}, spec expects < 5 min"
    );
    println!("[PASS] criterion 05: finished in {elapsed:?} (single-threaded)");
}

#[test]
fn criterion_06_transform_sorted_outputs_and_grid_minimum() {
    // 10^5 random inputs across the suite's k values give sorted outputs.
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut trials = 0usize;
    while trials < 100_000 {
        for &k in &[2usize, 3, 5, 10] {
            let x: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let t = stick_breaking_transform(&x).unwrap();
            for w in t.windows(2) {
                assert!(w[0] <= w[1], "unsorted output {t:?} for input {x:?}");
            }
            assert!(t.iter().all(|&v| (0.0..=1.0).contains(&v)));
            trials += 1;
        }
    }

    // 200×200 grid oracle on a 1-D two-point problem: both representations
    // reach the same minimum value.
    let data = Dataset::from_rows("pair", vec![vec![0.0], vec![1.0]]).unwrap();
    let base = ClusteringProblem::new(data, 2).unwrap();
    let view = TransformedProblem::new(base.clone());
    let steps = 200usize;
    let mut best_orig = f64::INFINITY;
    let mut best_trans = f64::INFINITY;
    for i in 0..steps {
        for j in 0..steps {
            let x = [
                i as f64 / (steps - 1) as f64,
                j as f64 / (steps - 1) as f64,
            ];
            best_orig = best_orig.min(base.value(&x));
            best_trans = best_trans.min(view.value(&x));
        }
    }
    assert!(
        (best_orig - best_trans).abs() < 1e-6,
        "grid minima differ: original {best_orig} vs transformed {best_trans}"
    );
    println!(
        "[PASS] criterion 06: 10^5 sorted transform outputs; grid minima agree ({best_orig:.3e} vs {best_trans:.3e})"
    );
}

#[test]
fn criterion_07_basin_pipeline_ruspini_qualitative() {
    let suite = default_suite();
    let k2 = clusterbench_cli::run_basin_analysis(suite.get("F8_k2").unwrap(), 50, 2000, 4242)
        .unwrap();
    let k3 = clusterbench_cli::run_basin_analysis(suite.get("F8_k3").unwrap(), 50, 2000, 4242)
        .unwrap();

    // Exact counts are dataset-preprocessing sensitive: logged, not gated.
    println!(
        "[INFO] criterion 07: F8_k2 -> {} distinct ({} canonical), retention {:.3}; F8_k3 -> {} distinct ({} canonical), retention {:.3}",
        k2.distinct_solutions,
        k2.distinct_canonical_solutions,
        k2.region_retention,
        k3.distinct_solutions,
        k3.distinct_canonical_solutions,
        k3.region_retention
    );
    assert!(
        k2.distinct_solutions >= 2,
        "expected >= 2 distinct representatives at k=2, got {}",
        k2.distinct_solutions
    );
    assert!(
        k3.distinct_solutions > k2.distinct_solutions,
        "expected more representatives at k=3 ({}) than at k=2 ({})",
        k3.distinct_solutions,
        k2.distinct_solutions
    );
    println!("[PASS] criterion 07: basin pipeline reports >=2 solutions at k=2 and more at k=3");
}

#[test]
fn criterion_08_region_retention_trend() {
    let started = Instant::now();
    let suite = default_suite();
    let mut mean_low = 0.0;
    let mut mean_high = 0.0;
    let mut n_low = 0usize;
    let mut n_high = 0usize;

    for sp in suite.problems() {
        let m = sp.problem.search_dim();
        if m != 4 && m != 20 {
            continue;
        }
        let starts = landscape::region_constrained_starts(&sp.problem, 50, 808).unwrap();
        let mut pairs = Vec::with_capacity(starts.len());
        for (i, start) in starts.iter().enumerate() {
            let mut meter = EvalMeter::new(&sp.problem, 1000);
            let log = optimizers::run_one_plus_one(
                &mut meter,
                start.as_slice(),
                LOCAL_SIGMA0,
                808 ^ (i as u64),
                false,
            )
            .unwrap();
            pairs.push((
                start.clone(),
                CenterVector::new(log.final_vector.clone()).unwrap(),
            ));
        }
        let retention = landscape::region_retention(&sp.problem, &pairs).unwrap();
        if m == 4 {
            mean_low += retention;
            n_low += 1;
        } else {
            mean_high += retention;
            n_high += 1;
        }
    }
    mean_low /= n_low as f64;
    mean_high /= n_high as f64;
    let elapsed = started.elapsed();

    assert_eq!((n_low, n_high), (10, 10));
    assert!(
        mean_low - mean_high >= 0.3,
        "retention trend too weak: m=4 mean {mean_low:.3}, m=20 mean {mean_high:.3}"
    );
    assert!(
        elapsed.as_secs_f64() < 900.0,
        "retention sweep took {elapsed:?}, spec expects < 15 min"
    );
    println!(
        "[PASS] criterion 08: mean retention {mean_low:.3} at m=4 vs {mean_high:.3} at m=20 (gap {:.3}, {elapsed:?})",
        mean_low - mean_high
    );
}

#[test]
fn criterion_09_analysis_unit_oracles() {
    // Kendall τ on the pinned example.
    let tau = analysis::kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((tau - 4.0 / 6.0).abs() <= 1e-12, "tau = {tau}");

    // EAF midpoint: a run resting at the geometric mean of the bounds scores
    // exactly one half.
    let lower = 1e-3_f64;
    let upper = 1e1_f64;
    let run = clusterbench::runlog::RunLog {
        problem_id: "p".into(),
        config_id: "c".into(),
        repetition: 0,
        seed: 0,
        budget: 100,
        entries: vec![clusterbench::runlog::LogEntry {
            evaluations: 1,
            raw: (lower * upper).sqrt(),
            best: (lower * upper).sqrt(),
        }],
        final_vector: vec![],
    };
    let curve = analysis::eaf_curve(&[&run], lower, upper, &[50]).unwrap();
    assert!((curve[0].1 - 0.5).abs() <= 1e-12, "midpoint = {}", curve[0].1);

    // Lloyd monotonicity on 100 random starts per suite problem.
    let suite = default_suite();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for sp in suite.problems() {
        let m = sp.problem.search_dim();
        for _ in 0..100 {
            let init: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let result = lloyd(
                &sp.problem,
                &CenterVector::new(init).unwrap(),
                DEFAULT_MAX_ITER,
                DEFAULT_TOL,
            )
            .unwrap();
            for w in result.trace.windows(2) {
                assert!(
                    w[1] <= w[0],
                    "{}: Lloyd objective increased from {} to {}",
                    sp.id,
                    w[0],
                    w[1]
                );
            }
        }
    }
    println!("[PASS] criterion 09: kendall τ = 2/3, EAF midpoint = 0.5, Lloyd monotone on 100 starts x 40 problems");
}

#[test]
fn criterion_10_cmd_run_determinism_byte_identical() {
    let configs = "cov-on_eli-off_bc-off_lam005_mu005,cov-off_eli-on_bc-sat_lam010_mu010,cov-on_eli-on_bc-off_lam010_mu005";
    let make = |out: std::path::PathBuf| ExperimentConfig {
        manifest: None,
        budget: 300,
        repetitions: 2,
        master_seed: 77,
        out_dir: out,
        jobs: 3,
        configs: ConfigSelector::parse(configs),
        problem: Some("F8_k2".into()),
    };
    let dir = tempfile::tempdir().unwrap();
    let tree_a = dir.path().join("a");
    let tree_b = dir.path().join("b");
    cmd_run(&make(tree_a.clone())).unwrap();
    cmd_run(&make(tree_b.clone())).unwrap();

    let list = |root: &std::path::Path| -> Vec<String> {
        let mut names: Vec<String> = std::fs::read_dir(root)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let names_a = list(&tree_a);
    let names_b = list(&tree_b);
    assert_eq!(names_a, names_b);
    assert!(names_a.len() >= 7); // 3 cells x 2 files + experiment.json
    for name in &names_a {
        let bytes_a = std::fs::read(tree_a.join(name)).unwrap();
        let bytes_b = std::fs::read(tree_b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
    }
    println!(
        "[PASS] criterion 10: two cmd_run executions produced byte-identical trees ({} files)",
        names_a.len()
    );
}
