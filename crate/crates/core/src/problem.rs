//! The centroid-clustering objective and its search-space utilities.
//!
//! A [`ClusteringProblem`] turns a dataset and a cluster count `k` into a
//! continuous minimization problem over center vectors of dimension `m = k·d`:
//! each point contributes the distance to its nearest center, and the
//! contributions are aggregated (mean by default). The objective is defined
//! for every finite center vector, including points outside the unit box.
//!
//! Evaluation is a pure function and is written so that permuting the center
//! blocks reproduces the objective value bit-identically: per-(point, center)
//! distances are accumulated in a fixed coordinate order, and the minimum over
//! centers does not depend on block order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Distance used to decide which center a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMetric {
    #[default]
    SquaredEuclidean,
    Euclidean,
    Manhattan,
}

impl AssignmentMetric {
    /// Distance between a point and a center block.
    #[inline]
    pub fn distance(self, point: &[f64], center: &[f64]) -> f64 {
        match self {
            AssignmentMetric::SquaredEuclidean => sq_euclidean(point, center),
            AssignmentMetric::Euclidean => sq_euclidean(point, center).sqrt(),
            AssignmentMetric::Manhattan => {
                let mut acc = 0.0;
                for (a, b) in point.iter().zip(center) {
                    acc += (a - b).abs();
                }
                acc
            }
        }
    }
}

#[inline]
fn sq_euclidean(point: &[f64], center: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in point.iter().zip(center) {
        let diff = a - b;
        acc += diff * diff;
    }
    acc
}

/// How per-point nearest-center distances are aggregated into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorAggregation {
    /// Mean over points (the MSE objective).
    #[default]
    Mean,
    /// Sum over points.
    Sum,
    /// Maximum within each cluster, then maximum over clusters.
    MaxPerClusterThenMax,
}

/// A flattened center vector: center `j` occupies entries `[j·d, (j+1)·d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterVector {
    values: Vec<f64>,
}

impl CenterVector {
    /// Wraps raw values, requiring every entry to be finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "center vector",
            });
        }
        Ok(CenterVector { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// The block of coordinates belonging to center `j` under dimension `d`.
    pub fn block(&self, j: usize, d: usize) -> &[f64] {
        &self.values[j * d..(j + 1) * d]
    }
}

impl From<CenterVector> for Vec<f64> {
    fn from(v: CenterVector) -> Self {
        v.values
    }
}

/// The permutation of center blocks that brings a vector into its canonical
/// (sorted-by-first-coordinate) form. `perm[i]` is the original block index of
/// the block placed at position `i`. Two center vectors lie in the same
/// symmetry region iff their permutations are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionId(pub Vec<usize>);

impl RegionId {
    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Anything that can be minimized: a dimension and a value function.
///
/// Budget accounting deliberately lives outside this trait (see [`EvalMeter`])
/// so that analysis code can evaluate freely without consuming experiment
/// budget.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
}

/// A dataset plus a cluster count and metric configuration.
///
/// The dataset is shared behind an `Arc`, so cloning a problem is cheap and
/// problems are safe to share across threads.
#[derive(Debug, Clone)]
pub struct ClusteringProblem {
    data: Arc<Dataset>,
    k: usize,
    assignment_metric: AssignmentMetric,
    error_metric: ErrorAggregation,
}

impl ClusteringProblem {
    /// Builds a problem with default metrics (squared Euclidean, mean).
    pub fn new(data: Dataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("cluster count k must be >= 1".into()));
        }
        Ok(ClusteringProblem {
            data: Arc::new(data),
            k,
            assignment_metric: AssignmentMetric::default(),
            error_metric: ErrorAggregation::default(),
        })
    }

    pub fn with_metrics(
        mut self,
        assignment: AssignmentMetric,
        aggregation: ErrorAggregation,
    ) -> Self {
        self.assignment_metric = assignment;
        self.error_metric = aggregation;
        self
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Data dimensionality d.
    pub fn point_dim(&self) -> usize {
        self.data.dim()
    }

    /// Search-space dimensionality m = k·d.
    pub fn search_dim(&self) -> usize {
        self.k * self.data.dim()
    }

    pub fn assignment_metric(&self) -> AssignmentMetric {
        self.assignment_metric
    }

    pub fn error_metric(&self) -> ErrorAggregation {
        self.error_metric
    }

    /// Validates a center vector's length against this problem.
    pub fn check_centers(&self, centers: &CenterVector) -> Result<()> {
        if centers.len() != self.search_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.search_dim(),
                got: centers.len(),
            });
        }
        Ok(())
    }

    /// Nearest-center index for every point. Ties go to the lowest center
    /// index, which makes the assignment (and hence evaluation) a pure
    /// function of its inputs.
    pub fn assign(&self, centers: &CenterVector) -> Result<Assignment> {
        self.check_centers(centers)?;
        let d = self.point_dim();
        let y = centers.as_slice();
        let nearest = self
            .data
            .iter()
            .map(|point| {
                let mut best = f64::INFINITY;
                let mut best_j = 0;
                for j in 0..self.k {
                    let dist = self.assignment_metric.distance(point, &y[j * d..(j + 1) * d]);
                    if dist < best {
                        best = dist;
                        best_j = j;
                    }
                }
                best_j
            })
            .collect();
        Ok(Assignment {
            nearest,
            k: self.k,
        })
    }

    /// The objective value for a flattened center vector.
    pub fn evaluate(&self, centers: &CenterVector) -> Result<f64> {
        self.check_centers(centers)?;
        Ok(self.value_unchecked(centers.as_slice()))
    }

    #[inline]
    fn value_unchecked(&self, y: &[f64]) -> f64 {
        let d = self.point_dim();
        let n = self.data.len();
        match self.error_metric {
            ErrorAggregation::Mean | ErrorAggregation::Sum => {
                let mut total = 0.0;
                for point in self.data.iter() {
                    total += self.nearest_distance(point, y, d);
                }
                if self.error_metric == ErrorAggregation::Mean {
                    total / n as f64
                } else {
                    total
                }
            }
            ErrorAggregation::MaxPerClusterThenMax => {
                // Every point belongs to exactly one cluster, so the max over
                // clusters of per-cluster maxima is the max over points.
                let mut worst = 0.0_f64;
                for point in self.data.iter() {
                    let dist = self.nearest_distance(point, y, d);
                    if dist > worst {
                        worst = dist;
                    }
                }
                worst
            }
        }
    }

    #[inline]
    fn nearest_distance(&self, point: &[f64], y: &[f64], d: usize) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.k {
            let dist = self.assignment_metric.distance(point, &y[j * d..(j + 1) * d]);
            if dist < best {
                best = dist;
            }
        }
        best
    }

    /// Indices of centers that are nearest to at least one data point. The
    /// complement is the inactive set: moving an inactive center inside its
    /// neutral region leaves the objective exactly unchanged.
    pub fn active_centers(&self, centers: &CenterVector) -> Result<Vec<usize>> {
        let assignment = self.assign(centers)?;
        let mut active = vec![false; self.k];
        for &j in &assignment.nearest {
            active[j] = true;
        }
        Ok((0..self.k).filter(|&j| active[j]).collect())
    }

    /// Stably sorts center blocks ascending by first coordinate. Returns the
    /// sorted vector and the permutation applied (`perm[i]` = original index
    /// of the block now at position `i`). Evaluation is invariant under this
    /// reordering, bit-identically.
    pub fn canonicalize(&self, centers: &CenterVector) -> Result<(CenterVector, RegionId)> {
        self.check_centers(centers)?;
        let d = self.point_dim();
        Ok(canonicalize_blocks(centers.as_slice(), d))
    }

    /// The symmetry region a center vector lies in, identified by the block
    /// permutation that sorts it.
    pub fn region_id(&self, centers: &CenterVector) -> Result<RegionId> {
        Ok(self.canonicalize(centers)?.1)
    }
}

impl Objective for ClusteringProblem {
    fn dim(&self) -> usize {
        self.search_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.search_dim());
        self.value_unchecked(x)
    }
}

/// Sorts the blocks of a flattened vector by first coordinate (stable), for a
/// block width `d`. Exposed for callers that hold raw slices.
pub fn canonicalize_blocks(y: &[f64], d: usize) -> (CenterVector, RegionId) {
    debug_assert!(d > 0 && y.len() % d == 0);
    let k = y.len() / d;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        y[a * d]
            .partial_cmp(&y[b * d])
            .expect("finite first coordinates")
    });
    let mut sorted = Vec::with_capacity(y.len());
    for &j in &order {
        sorted.extend_from_slice(&y[j * d..(j + 1) * d]);
    }
    (CenterVector { values: sorted }, RegionId(order))
}

/// The n×k one-hot assignment of Eq.-style membership: each row has exactly
/// one `1`, at the nearest center (lowest index on ties).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    nearest: Vec<usize>,
    k: usize,
}

impl Assignment {
    /// Nearest center index of point `i`.
    pub fn nearest(&self, i: usize) -> usize {
        self.nearest[i]
    }

    pub fn nearest_indices(&self) -> &[usize] {
        &self.nearest
    }

    pub fn is_assigned(&self, i: usize, j: usize) -> bool {
        self.nearest[i] == j
    }

    pub fn n_points(&self) -> usize {
        self.nearest.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Materializes the full 0/1 matrix, row-major n×k.
    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        self.nearest
            .iter()
            .map(|&j| {
                let mut row = vec![0u8; self.k];
                row[j] = 1;
                row
            })
            .collect()
    }
}

/// A budget-metered evaluation handle over one objective.
///
/// One run owns one meter; the underlying objective stays shareable. Every
/// call to [`EvalMeter::try_eval`] counts as exactly one evaluation.
pub struct EvalMeter<'a> {
    objective: &'a dyn Objective,
    budget: usize,
    used: usize,
}

impl<'a> EvalMeter<'a> {
    pub fn new(objective: &'a dyn Objective, budget: usize) -> Self {
        EvalMeter {
            objective,
            budget,
            used: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.used
    }

    /// Evaluates the objective, or fails once the budget is exhausted.
    pub fn try_eval(&mut self, x: &[f64]) -> Result<f64> {
        if self.used >= self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.used += 1;
        Ok(self.objective.value(x))
    }
}
