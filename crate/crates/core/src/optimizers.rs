//! The configurable evolution-strategy family, a (1+1)-ES local searcher and
//! a simplex-style direct search, all driven through budget-metered handles.
//!
//! The ES follows the standard (μ/μ_w, λ) scheme with cumulative step-size
//! adaptation. Four module toggles turn it into a 128-configuration family:
//! covariance adaptation (rank-one + rank-μ updates versus a fixed identity),
//! elitism ((μ+λ) versus (μ,λ) selection), boundary correction (saturate to
//! the unit box versus evaluating as-is) and the (λ, μ) population pair.
//!
//! All randomness flows through a single seeded stream per run. Runs with the
//! same seed and the same λ draw identical initial means and identical first
//! sample sets regardless of the other toggles, which allows paired
//! comparisons across configurations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::EvalMeter;
use crate::runlog::{RunLog, TrajectoryLogger};

/// Default initial step size for global benchmark runs.
pub const DEFAULT_SIGMA0: f64 = 0.2;
/// Initial step size promoting local search behavior.
pub const LOCAL_SIGMA0: f64 = 0.1;

/// Population sizes of the configuration grid.
pub const LAMBDA_GRID: [usize; 5] = [5, 10, 20, 100, 200];
/// Parent counts of the configuration grid.
pub const MU_GRID: [usize; 5] = [5, 10, 20, 50, 100];

/// How sampled candidates outside the unit box are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCorrection {
    /// Evaluate as-is; the objective is defined everywhere.
    Off,
    /// Clip each coordinate into [0,1] before evaluation.
    Saturate,
}

/// One point of the five-axis ES configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub covariance_adaptation: bool,
    pub elitism: bool,
    pub boundary_correction: BoundaryCorrection,
    pub lambda: usize,
    pub mu: usize,
    pub sigma0: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    /// Covariance on, no elitism, boundaries ignored, λ=10, μ=5: the fixed
    /// reference configuration used for paired comparisons.
    pub fn default_config() -> Self {
        OptimizerConfig {
            covariance_adaptation: true,
            elitism: false,
            boundary_correction: BoundaryCorrection::Off,
            lambda: 10,
            mu: 5,
            sigma0: DEFAULT_SIGMA0,
            seed: 0,
        }
    }

    /// Stable identifier over the five grid axes (seed and σ₀ excluded).
    pub fn id(&self) -> String {
        format!(
            "cov-{}_eli-{}_bc-{}_lam{:03}_mu{:03}",
            if self.covariance_adaptation { "on" } else { "off" },
            if self.elitism { "on" } else { "off" },
            match self.boundary_correction {
                BoundaryCorrection::Off => "off",
                BoundaryCorrection::Saturate => "sat",
            },
            self.lambda,
            self.mu
        )
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 || self.lambda == 0 {
            return Err(Error::Precondition("lambda and mu must be >= 1".into()));
        }
        if self.mu > self.lambda {
            return Err(Error::Precondition(format!(
                "mu ({}) must not exceed lambda ({})",
                self.mu, self.lambda
            )));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Precondition("sigma0 must be positive".into()));
        }
        Ok(())
    }
}

/// The full cross product of the five module axes filtered by μ ≤ λ, in a
/// stable order with stable ids: exactly 128 configurations.
pub fn enumerate_configs() -> Vec<OptimizerConfig> {
    let mut configs = Vec::with_capacity(128);
    for covariance_adaptation in [true, false] {
        for elitism in [true, false] {
            for boundary_correction in [BoundaryCorrection::Off, BoundaryCorrection::Saturate] {
                for &lambda in &LAMBDA_GRID {
                    for &mu in &MU_GRID {
                        if mu > lambda {
                            continue;
                        }
                        configs.push(OptimizerConfig {
                            covariance_adaptation,
                            elitism,
                            boundary_correction,
                            lambda,
                            mu,
                            sigma0: DEFAULT_SIGMA0,
                            seed: 0,
                        });
                    }
                }
            }
        }
    }
    configs
}

struct Individual {
    x: DVector<f64>,
    f: f64,
}

/// Covariance machinery, present only while covariance adaptation is on, so
/// that the off setting is structurally a scalar-times-identity sampler.
struct CovarianceState {
    c: DMatrix<f64>,
    eigenvectors: DMatrix<f64>,
    /// Square roots of the (clamped) eigenvalues.
    scales: DVector<f64>,
    inv_sqrt: DMatrix<f64>,
    path: DVector<f64>,
}

impl CovarianceState {
    fn identity(dim: usize) -> Self {
        CovarianceState {
            c: DMatrix::identity(dim, dim),
            eigenvectors: DMatrix::identity(dim, dim),
            scales: DVector::from_element(dim, 1.0),
            inv_sqrt: DMatrix::identity(dim, dim),
            path: DVector::zeros(dim),
        }
    }

    fn refresh_decomposition(&mut self) {
        let dim = self.c.nrows();
        if self.c.iter().any(|v| !v.is_finite()) {
            *self = CovarianceState::identity(dim);
            return;
        }
        // Symmetrize before decomposing; updates are symmetric up to rounding.
        let sym = (&self.c + self.c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let max_ev = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        if !(max_ev > 0.0) || !max_ev.is_finite() {
            *self = CovarianceState::identity(dim);
            return;
        }
        // Cap the condition number at 1e14.
        let floor = max_ev * 1e-14;
        let scales = DVector::from_iterator(
            dim,
            eig.eigenvalues.iter().map(|&ev| ev.max(floor).sqrt()),
        );
        let mut inv_sqrt = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                let mut acc = 0.0;
                for t in 0..dim {
                    acc += eig.eigenvectors[(a, t)] * eig.eigenvectors[(b, t)] / scales[t];
                }
                inv_sqrt[(a, b)] = acc;
            }
        }
        self.eigenvectors = eig.eigenvectors;
        self.scales = scales;
        self.inv_sqrt = inv_sqrt;
    }
}

/// Outcome of an ES generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// A full generation was sampled, evaluated and adapted.
    Advanced,
    /// The budget ran out (possibly after evaluating a partial generation).
    Exhausted,
}

/// Steppable (μ/μ_w, λ) evolution strategy with cumulative step-size
/// adaptation and the four module toggles of [`OptimizerConfig`].
pub struct EvolutionStrategy {
    config: OptimizerConfig,
    dim: usize,
    rng: ChaCha8Rng,
    mean: DVector<f64>,
    sigma: f64,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
    sigma_path: DVector<f64>,
    covariance: Option<CovarianceState>,
    population: Vec<Individual>,
    generation: usize,
    best_value: f64,
    best_point: Vec<f64>,
    logger: TrajectoryLogger,
}

impl EvolutionStrategy {
    /// Initializes the strategy: the mean is drawn uniformly from the unit
    /// box using the configuration seed, before any normal draws, so the
    /// initial sample set depends only on (seed, λ, dimension).
    pub fn new(dim: usize, config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mean = DVector::from_iterator(dim, (0..dim).map(|_| rng.random::<f64>()));

        let mu = config.mu;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((mu as f64) + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let n = dim as f64;
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma =
            1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        let covariance = config
            .covariance_adaptation
            .then(|| CovarianceState::identity(dim));

        Ok(EvolutionStrategy {
            sigma: config.sigma0,
            config,
            dim,
            rng,
            mean,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            sigma_path: DVector::zeros(dim),
            covariance,
            population: Vec::new(),
            generation: 0,
            best_value: f64::INFINITY,
            best_point: Vec::new(),
            logger: TrajectoryLogger::new(),
        })
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    /// Whether the sampling covariance is (a scalar multiple of) the
    /// identity. Always true while covariance adaptation is off.
    pub fn covariance_is_identity(&self) -> bool {
        match &self.covariance {
            None => true,
            Some(state) => state.c == DMatrix::<f64>::identity(self.dim, self.dim),
        }
    }

    /// Objective value of the current incumbent (the best population member).
    pub fn incumbent(&self) -> Option<f64> {
        self.population
            .iter()
            .map(|ind| ind.f)
            .fold(None, |acc, f| Some(acc.map_or(f, |a: f64| a.min(f))))
    }

    fn sample_candidate(&mut self) -> DVector<f64> {
        let z = DVector::from_iterator(
            self.dim,
            (0..self.dim).map(|_| StandardNormal.sample(&mut self.rng)),
        );
        let y = match &self.covariance {
            None => z,
            Some(state) => {
                let scaled = DVector::from_iterator(
                    self.dim,
                    (0..self.dim).map(|i| state.scales[i] * z[i]),
                );
                &state.eigenvectors * scaled
            }
        };
        &self.mean + self.sigma * y
    }

    /// Runs one generation against the meter. Evaluates a trailing partial
    /// generation (fewer than λ samples) for logging but skips adaptation.
    pub fn step(&mut self, meter: &mut EvalMeter<'_>) -> Result<StepOutcome> {
        let lambda = self.config.lambda;
        let remaining = meter.remaining();
        if remaining == 0 {
            return Ok(StepOutcome::Exhausted);
        }
        let sample_count = remaining.min(lambda);

        let mut offspring: Vec<Individual> = Vec::with_capacity(sample_count);
        for _ in 0..sample_count {
            let mut x = self.sample_candidate();
            if self.config.boundary_correction == BoundaryCorrection::Saturate {
                for v in x.iter_mut() {
                    *v = v.clamp(0.0, 1.0);
                }
            }
            let value = meter.try_eval(x.as_slice())?;
            if self.logger.observe(meter.used(), value) {
                self.best_point = x.as_slice().to_vec();
                self.best_value = value;
            }
            offspring.push(Individual { x, f: value });
        }
        self.logger.mark(meter.used());

        if sample_count < lambda {
            return Ok(StepOutcome::Exhausted);
        }

        // Selection: (μ+λ) keeps the previous population in the pool (listed
        // first, so ties retain incumbents under the stable sort); (μ,λ)
        // selects from offspring only.
        let mut pool: Vec<Individual> = if self.config.elitism {
            std::mem::take(&mut self.population)
                .into_iter()
                .chain(offspring)
                .collect()
        } else {
            offspring
        };
        pool.sort_by(|a, b| a.f.partial_cmp(&b.f).expect("finite objective values"));
        pool.truncate(self.config.mu);

        let mean_old = self.mean.clone();
        let sigma_old = self.sigma;
        let mut mean_new = DVector::zeros(self.dim);
        for (w, ind) in self.weights.iter().zip(&pool) {
            mean_new += *w * &ind.x;
        }

        // Displacement of the mean in σ units.
        let y_w = (&mean_new - &mean_old) / sigma_old;
        let whitened = match &self.covariance {
            None => y_w.clone(),
            Some(state) => &state.inv_sqrt * &y_w,
        };
        self.sigma_path = (1.0 - self.c_sigma) * &self.sigma_path
            + (self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff).sqrt() * whitened;
        let path_norm = self.sigma_path.norm();
        self.sigma = sigma_old
            * ((self.c_sigma / self.d_sigma) * (path_norm / self.chi_n - 1.0)).exp();
        self.sigma = self.sigma.clamp(1e-18, 1e6);

        if let Some(state) = &mut self.covariance {
            let decay = (1.0 - self.c_sigma).powi(2 * (self.generation as i32 + 1));
            let h_sigma = if path_norm / (1.0 - decay).sqrt()
                < (1.4 + 2.0 / (self.dim as f64 + 1.0)) * self.chi_n
            {
                1.0
            } else {
                0.0
            };
            state.path = (1.0 - self.c_c) * &state.path
                + h_sigma * (self.c_c * (2.0 - self.c_c) * self.mu_eff).sqrt() * &y_w;

            let mut rank_mu = DMatrix::zeros(self.dim, self.dim);
            for (w, ind) in self.weights.iter().zip(&pool) {
                let y_i = (&ind.x - &mean_old) / sigma_old;
                rank_mu += *w * (&y_i * y_i.transpose());
            }
            let discount = 1.0 - self.c_1 - self.c_mu;
            state.c = discount * &state.c
                + self.c_1
                    * (&state.path * state.path.transpose()
                        + ((1.0 - h_sigma) * self.c_c * (2.0 - self.c_c)) * &state.c)
                + self.c_mu * rank_mu;
            state.refresh_decomposition();
        }

        self.mean = mean_new;
        self.population = pool;
        self.generation += 1;
        Ok(StepOutcome::Advanced)
    }

    /// Consumes the strategy into a run log.
    pub fn into_run_log(self, meter: &EvalMeter<'_>) -> RunLog {
        RunLog {
            problem_id: String::new(),
            config_id: self.config.id(),
            repetition: 0,
            seed: self.config.seed,
            budget: meter.budget(),
            entries: self.logger.into_entries(),
            final_vector: self.best_point,
        }
    }
}

/// Runs the configured ES until the meter's budget is spent.
///
/// Fails upfront when the budget cannot fit a single generation.
pub fn run_es(meter: &mut EvalMeter<'_>, config: &OptimizerConfig) -> Result<RunLog> {
    if meter.budget() < config.lambda {
        return Err(Error::BudgetBelowLambda {
            budget: meter.budget(),
            lambda: config.lambda,
        });
    }
    let mut es = EvolutionStrategy::new(meter.dim(), config.clone())?;
    while es.step(meter)? == StepOutcome::Advanced {}
    Ok(es.into_run_log(meter))
}

// ---------------------------------------------------------------------------
// (1+1)-ES
// ---------------------------------------------------------------------------

/// (1+1)-ES with 1/5th-success-rule step-size adaptation.
///
/// Steps are isotropic by default; `adapt_covariance` switches on the
/// rank-one Cholesky update of the (1+1)-CMA-ES. Elitist by construction:
/// the incumbent never worsens.
pub fn run_one_plus_one(
    meter: &mut EvalMeter<'_>,
    start: &[f64],
    sigma0: f64,
    seed: u64,
    adapt_covariance: bool,
) -> Result<RunLog> {
    let dim = meter.dim();
    if start.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: start.len(),
        });
    }
    if start.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Precondition(
            "(1+1)-ES start must lie in the unit box".into(),
        ));
    }
    if !(sigma0 > 0.0) {
        return Err(Error::Precondition("sigma0 must be positive".into()));
    }

    // 1/5th-rule constants; the covariance variant uses the smoothed success
    // probability and rank-one Cholesky update of the (1+1)-CMA-ES.
    const P_TARGET: f64 = 0.2;
    const P_SMOOTH: f64 = 1.0 / 12.0;
    const P_THRESH: f64 = 0.44;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut logger = TrajectoryLogger::new();

    let mut x = DVector::from_column_slice(start);
    let mut fx = match meter.try_eval(x.as_slice()) {
        Ok(v) => v,
        Err(Error::BudgetExhausted { .. }) => {
            return Ok(RunLog {
                problem_id: String::new(),
                config_id: "one_plus_one_es".into(),
                repetition: 0,
                seed,
                budget: meter.budget(),
                entries: Vec::new(),
                final_vector: start.to_vec(),
            })
        }
        Err(e) => return Err(e),
    };
    logger.observe(meter.used(), fx);

    let mut sigma = sigma0;
    let damping = 1.0 + dim as f64 / 2.0;
    let mut p_succ = P_TARGET;
    let c_cov = 2.0 / (dim as f64 * dim as f64 + 6.0);
    let mut cholesky: Option<DMatrix<f64>> =
        adapt_covariance.then(|| DMatrix::identity(dim, dim));

    while meter.remaining() > 0 {
        let z = DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
        let step = match &cholesky {
            None => z.clone(),
            Some(a) => a * &z,
        };
        let candidate = &x + sigma * step;
        let fy = match meter.try_eval(candidate.as_slice()) {
            Ok(v) => v,
            Err(Error::BudgetExhausted { .. }) => break,
            Err(e) => return Err(e),
        };
        logger.observe(meter.used(), fy);

        let success = fy <= fx;
        p_succ = (1.0 - P_SMOOTH) * p_succ + P_SMOOTH * if success { 1.0 } else { 0.0 };
        sigma *= ((p_succ - P_TARGET) / (damping * (1.0 - P_TARGET))).exp();
        sigma = sigma.clamp(1e-18, 1e3);

        if success {
            if let Some(a) = &mut cholesky {
                if p_succ < P_THRESH {
                    let z_sq = z.norm_squared();
                    if z_sq > 0.0 {
                        let ca = (1.0 - c_cov).sqrt();
                        let factor =
                            (ca / z_sq) * ((1.0 + c_cov * z_sq / (1.0 - c_cov)).sqrt() - 1.0);
                        let az = &*a * &z;
                        *a = ca * &*a + factor * (az * z.transpose());
                    }
                }
            }
            x = candidate;
            fx = fy;
        }
    }
    logger.mark(meter.used());

    Ok(RunLog {
        problem_id: String::new(),
        config_id: "one_plus_one_es".into(),
        repetition: 0,
        seed,
        budget: meter.budget(),
        entries: logger.into_entries(),
        final_vector: x.as_slice().to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Simplex direct search
// ---------------------------------------------------------------------------

/// Derivative-free simplex descent (reflection / expansion / contraction /
/// shrink with the standard 1, 2, ½, ½ coefficients).
///
/// Deterministic; the seed only labels the run log. Terminates when the
/// simplex diameter drops below 1e-9 or the budget is spent.
pub fn run_simplex_local(meter: &mut EvalMeter<'_>, start: &[f64], seed: u64) -> Result<RunLog> {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SHRINK: f64 = 0.5;
    const INITIAL_STEP: f64 = 0.05;
    const DIAMETER_TOL: f64 = 1e-9;

    let dim = meter.dim();
    if start.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: start.len(),
        });
    }
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "simplex start point",
        });
    }

    struct Vertex {
        x: Vec<f64>,
        f: f64,
    }

    let mut logger = TrajectoryLogger::new();
    let mut best_point = start.to_vec();

    macro_rules! eval_or_break {
        ($x:expr, $on_exhausted:stmt) => {
            match meter.try_eval($x) {
                Ok(v) => {
                    if logger.observe(meter.used(), v) {
                        best_point = $x.to_vec();
                    }
                    v
                }
                Err(Error::BudgetExhausted { .. }) => {
                    $on_exhausted
                }
                Err(e) => return Err(e),
            }
        };
    }

    // Initial simplex: the start plus one axis step per dimension.
    let mut vertices: Vec<Vertex> = Vec::with_capacity(dim + 1);
    'init: for i in 0..=dim {
        let mut x = start.to_vec();
        if i > 0 {
            x[i - 1] += INITIAL_STEP;
        }
        let f = eval_or_break!(&x, break 'init);
        vertices.push(Vertex { x, f });
    }

    if vertices.len() == dim + 1 {
        'outer: loop {
            vertices.sort_by(|a, b| a.f.partial_cmp(&b.f).expect("finite objective values"));

            let views: Vec<&[f64]> = vertices.iter().map(|v| v.x.as_slice()).collect();
            if simplex_diameter(&views) < DIAMETER_TOL || meter.remaining() == 0 {
                break;
            }

            let worst = vertices.len() - 1;
            let mut centroid = vec![0.0; dim];
            for v in &vertices[..worst] {
                for t in 0..dim {
                    centroid[t] += v.x[t];
                }
            }
            for c in &mut centroid {
                *c /= worst as f64;
            }

            let shift = |origin: &[f64], other: &[f64], t: f64| -> Vec<f64> {
                origin
                    .iter()
                    .zip(other)
                    .map(|(a, b)| a + t * (b - a))
                    .collect()
            };

            let reflected = shift(&centroid, &vertices[worst].x, -ALPHA);
            let fr = eval_or_break!(&reflected, break 'outer);

            if fr < vertices[0].f {
                let expanded = shift(&centroid, &reflected, GAMMA);
                let fe = eval_or_break!(&expanded, {
                    vertices[worst] = Vertex { x: reflected, f: fr };
                    break 'outer
                });
                vertices[worst] = if fe < fr {
                    Vertex { x: expanded, f: fe }
                } else {
                    Vertex { x: reflected, f: fr }
                };
                continue;
            }
            if fr < vertices[worst - 1].f {
                vertices[worst] = Vertex { x: reflected, f: fr };
                continue;
            }

            // Contraction: outside when the reflection beat the worst vertex,
            // inside otherwise.
            let (target, threshold) = if fr < vertices[worst].f {
                (shift(&centroid, &reflected, RHO), fr)
            } else {
                (shift(&centroid, &vertices[worst].x, RHO), vertices[worst].f)
            };
            let fc = eval_or_break!(&target, break 'outer);
            if fc <= threshold {
                vertices[worst] = Vertex { x: target, f: fc };
                continue;
            }

            // Shrink towards the best vertex.
            let anchor = vertices[0].x.clone();
            for i in 1..vertices.len() {
                let shrunk = shift(&anchor, &vertices[i].x, SHRINK);
                let f = eval_or_break!(&shrunk, break 'outer);
                vertices[i] = Vertex { x: shrunk, f };
            }
        }
    }

    logger.mark(meter.used());
    Ok(RunLog {
        problem_id: String::new(),
        config_id: "simplex".into(),
        repetition: 0,
        seed,
        budget: meter.budget(),
        entries: logger.into_entries(),
        final_vector: best_point,
    })
}

fn simplex_diameter(vertices: &[&[f64]]) -> f64 {
    let mut max_sq = 0.0f64;
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            let mut acc = 0.0;
            for (a, b) in vertices[i].iter().zip(vertices[j]) {
                let diff = a - b;
                acc += diff * diff;
            }
            max_sq = max_sq.max(acc);
        }
    }
    max_sq.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::problem::{ClusteringProblem, Objective};

    fn small_problem(k: usize) -> ClusteringProblem {
        let rows = vec![
            vec![0.05, 0.1],
            vec![0.1, 0.2],
            vec![0.15, 0.12],
            vec![0.2, 0.3],
            vec![0.8, 0.85],
            vec![0.85, 0.9],
            vec![0.9, 0.8],
            vec![0.95, 0.95],
            vec![0.5, 0.5],
            vec![0.55, 0.45],
        ];
        ClusteringProblem::new(Dataset::from_rows("small", rows).unwrap(), k).unwrap()
    }

    /// Mean squared deviation from the centroid: the k=1 optimum.
    fn centroid_value(problem: &ClusteringProblem) -> f64 {
        let data = problem.data();
        let d = data.dim();
        let mut mean = vec![0.0; d];
        for p in data.iter() {
            for t in 0..d {
                mean[t] += p[t];
            }
        }
        for m in &mut mean {
            *m /= data.len() as f64;
        }
        problem.value(&mean)
    }

    #[test]
    fn enumerate_yields_128_unique_configs() {
        let configs = enumerate_configs();
        assert_eq!(configs.len(), 128);
        assert!(configs.iter().all(|c| c.mu <= c.lambda));
        let ids: std::collections::HashSet<String> = configs.iter().map(|c| c.id()).collect();
        assert_eq!(ids.len(), 128);
        let again: Vec<String> = enumerate_configs().iter().map(|c| c.id()).collect();
        assert_eq!(again, configs.iter().map(|c| c.id()).collect::<Vec<_>>());
    }

    #[test]
    fn es_reaches_k1_centroid_optimum() {
        let problem = small_problem(1);
        let target = centroid_value(&problem);
        for config in [
            OptimizerConfig::default_config(),
            OptimizerConfig {
                covariance_adaptation: false,
                elitism: true,
                boundary_correction: BoundaryCorrection::Saturate,
                lambda: 20,
                mu: 10,
                sigma0: DEFAULT_SIGMA0,
                seed: 3,
            },
        ] {
            let mut meter = EvalMeter::new(&problem, 5000);
            let log = run_es(&mut meter, &config).unwrap();
            let best = log.final_best().unwrap();
            assert!(
                best - target < 1e-6,
                "config {} stopped at {best} (target {target})",
                config.id()
            );
        }
    }

    #[test]
    fn es_is_deterministic() {
        let problem = small_problem(2);
        let config = OptimizerConfig::default_config().with_seed(99);
        let mut m1 = EvalMeter::new(&problem, 600);
        let mut m2 = EvalMeter::new(&problem, 600);
        let a = run_es(&mut m1, &config).unwrap();
        let b = run_es(&mut m2, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn es_budget_accounting_is_exact() {
        let problem = small_problem(2);
        let config = OptimizerConfig {
            lambda: 7,
            mu: 3,
            ..OptimizerConfig::default_config()
        };
        let mut meter = EvalMeter::new(&problem, 100);
        let log = run_es(&mut meter, &config).unwrap();
        assert_eq!(meter.used(), 100);
        assert_eq!(log.evaluations_used(), 100);
        for w in log.entries.windows(2) {
            assert!(w[1].evaluations > w[0].evaluations);
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn es_rejects_budget_below_lambda() {
        let problem = small_problem(2);
        let config = OptimizerConfig {
            lambda: 5,
            mu: 5,
            ..OptimizerConfig::default_config()
        };
        let mut meter = EvalMeter::new(&problem, 4);
        assert!(matches!(
            run_es(&mut meter, &config),
            Err(Error::BudgetBelowLambda { .. })
        ));
    }

    #[test]
    fn elitism_keeps_incumbent_monotone() {
        let problem = small_problem(3);
        let config = OptimizerConfig {
            elitism: true,
            lambda: 10,
            mu: 5,
            ..OptimizerConfig::default_config()
        }
        .with_seed(5);
        let mut es = EvolutionStrategy::new(problem.search_dim(), config).unwrap();
        let mut meter = EvalMeter::new(&problem, 400);
        let mut prev = f64::INFINITY;
        while es.step(&mut meter).unwrap() == StepOutcome::Advanced {
            let inc = es.incumbent().unwrap();
            assert!(inc <= prev, "incumbent worsened: {prev} -> {inc}");
            prev = inc;
        }
    }

    #[test]
    fn covariance_off_stays_identity() {
        let problem = small_problem(2);
        let config = OptimizerConfig {
            covariance_adaptation: false,
            ..OptimizerConfig::default_config()
        }
        .with_seed(11);
        let mut es = EvolutionStrategy::new(problem.search_dim(), config).unwrap();
        let mut meter = EvalMeter::new(&problem, 300);
        while es.step(&mut meter).unwrap() == StepOutcome::Advanced {
            assert!(es.covariance_is_identity());
        }
    }

    #[test]
    fn saturate_evaluates_inside_box_only() {
        // The objective on the unit box over unit-box data never exceeds the
        // squared box diagonal; unclipped σ=5 samples would overshoot it.
        let problem = small_problem(2);
        let config = OptimizerConfig {
            boundary_correction: BoundaryCorrection::Saturate,
            sigma0: 5.0,
            ..OptimizerConfig::default_config()
        }
        .with_seed(2);
        let mut meter = EvalMeter::new(&problem, 200);
        let log = run_es(&mut meter, &config).unwrap();
        for e in &log.entries {
            assert!(e.raw <= 2.0, "raw {} implies a point outside the box", e.raw);
        }
    }

    #[test]
    fn same_seed_same_lambda_share_first_samples() {
        let problem = small_problem(2);
        let base = OptimizerConfig::default_config().with_seed(123);
        let variants = [
            base.clone(),
            OptimizerConfig {
                covariance_adaptation: false,
                ..base.clone()
            },
            OptimizerConfig {
                elitism: true,
                ..base.clone()
            },
        ];
        let mut first_gen: Option<Vec<(usize, f64)>> = None;
        for config in variants {
            let mut es = EvolutionStrategy::new(problem.search_dim(), config.clone()).unwrap();
            let mut meter = EvalMeter::new(&problem, config.lambda);
            es.step(&mut meter).unwrap();
            let log = es.into_run_log(&meter);
            let seen: Vec<(usize, f64)> =
                log.entries.iter().map(|e| (e.evaluations, e.raw)).collect();
            match &first_gen {
                None => first_gen = Some(seen),
                Some(reference) => assert_eq!(reference, &seen, "config {}", config.id()),
            }
        }
    }

    #[test]
    fn one_plus_one_converges_on_k1() {
        let problem = small_problem(1);
        let target = centroid_value(&problem);
        let mut meter = EvalMeter::new(&problem, 2000);
        let log = run_one_plus_one(&mut meter, &[0.9, 0.1], LOCAL_SIGMA0, 7, false).unwrap();
        let best = log.final_best().unwrap();
        assert!(best - target < 1e-4, "best {best}, target {target}");
    }

    #[test]
    fn one_plus_one_best_is_monotone_and_seeded() {
        let problem = small_problem(2);
        let mut m1 = EvalMeter::new(&problem, 500);
        let mut m2 = EvalMeter::new(&problem, 500);
        let a = run_one_plus_one(&mut m1, &[0.5; 4], 0.1, 21, false).unwrap();
        let b = run_one_plus_one(&mut m2, &[0.5; 4], 0.1, 21, false).unwrap();
        assert_eq!(a, b);
        for w in a.entries.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
        assert_eq!(a.evaluations_used(), 500);
    }

    #[test]
    fn one_plus_one_with_covariance_still_descends() {
        let problem = small_problem(2);
        let mut meter = EvalMeter::new(&problem, 1000);
        let log = run_one_plus_one(&mut meter, &[0.5; 4], 0.1, 4, true).unwrap();
        let first = log.entries.first().unwrap().best;
        let last = log.final_best().unwrap();
        assert!(last <= first);
    }

    #[test]
    fn one_plus_one_rejects_start_outside_box() {
        let problem = small_problem(2);
        let mut meter = EvalMeter::new(&problem, 100);
        assert!(run_one_plus_one(&mut meter, &[1.5, 0.0, 0.0, 0.0], 0.1, 0, false).is_err());
    }

    #[test]
    fn simplex_finds_1d_quadratic_minimum() {
        // k=1 on 1-D data: the objective is a parabola with its minimum at
        // the centroid.
        let data = Dataset::from_rows("t", vec![vec![0.2], vec![0.4], vec![0.9]]).unwrap();
        let problem = ClusteringProblem::new(data, 1).unwrap();
        let target = centroid_value(&problem);
        let mut meter = EvalMeter::new(&problem, 500);
        let log = run_simplex_local(&mut meter, &[0.05], 0).unwrap();
        assert!(log.final_best().unwrap() - target < 1e-6);
    }

    #[test]
    fn simplex_never_returns_worse_than_start() {
        let problem = small_problem(2);
        let start = [0.3, 0.3, 0.7, 0.7];
        let start_value = problem.value(&start);
        let mut meter = EvalMeter::new(&problem, 400);
        let log = run_simplex_local(&mut meter, &start, 0).unwrap();
        assert!(log.final_best().unwrap() <= start_value);
        for w in log.entries.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn simplex_respects_budget() {
        let problem = small_problem(3);
        let mut meter = EvalMeter::new(&problem, 10);
        let log = run_simplex_local(&mut meter, &[0.5; 6], 0).unwrap();
        assert!(meter.used() <= 10);
        assert_eq!(log.evaluations_used(), meter.used());
    }
}
