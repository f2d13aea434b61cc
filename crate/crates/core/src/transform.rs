//! Symmetry-breaking reparameterization via a modified stick-breaking map.
//!
//! The unit box `[0,1]^k` is mapped bijectively onto its sorted sub-region
//! using Beta inverse CDFs: the image of any input has non-decreasing
//! coordinates, so exactly one of the `k!` symmetry regions is reachable.
//! For data dimension `d > 1` the map is applied to the first coordinate of
//! each center block, leaving the remaining coordinates intact.

use crate::error::{Error, Result};
use crate::problem::{ClusteringProblem, Objective};

const DOMAIN_TOL: f64 = 1e-12;

/// Inverse CDF of Beta(1, b) in closed form.
#[inline]
fn beta_inv_cdf_one(u: f64, b: f64) -> f64 {
    1.0 - (1.0 - u).powf(1.0 / b)
}

/// Maps `x ∈ [0,1]^k` to a non-decreasing vector in `[0,1]^k`.
///
/// Step `i` (1-based) consumes a Beta(1, k−i+1)-distributed fraction of the
/// remaining stick `[t_{i−1}, 1]`; the final step uses Beta(1, 1), i.e. the
/// identity. Inputs may stray outside `[0,1]` by at most `1e-12` and are
/// clamped; anything further is an error.
pub fn stick_breaking_transform(x: &[f64]) -> Result<Vec<f64>> {
    let k = x.len();
    let mut out = Vec::with_capacity(k);
    let mut prev = 0.0_f64;
    for (i, &raw) in x.iter().enumerate() {
        if !((-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&raw)) {
            return Err(Error::TransformDomain {
                index: i,
                value: raw,
            });
        }
        let u = raw.clamp(0.0, 1.0);
        let shape = (k - i) as f64;
        let fraction = beta_inv_cdf_one(u, shape);
        let t = prev + (1.0 - prev) * fraction;
        // Monotone by construction; clamp guards the last few ulps.
        let t = t.clamp(prev, 1.0);
        out.push(t);
        prev = t;
    }
    Ok(out)
}

/// A view of a clustering problem over the symmetry-free representation.
///
/// Evaluation gathers the first coordinate of each center block, pushes them
/// through [`stick_breaking_transform`], reinserts them and evaluates the
/// base problem. One evaluation of the view costs exactly one evaluation of
/// the base problem, so budget accounting carries over unchanged.
///
/// The view is defined on `[0,1]^m`; first coordinates of points outside the
/// box are saturated into `[0,1]` before the transform so that optimizers
/// without boundary handling still get a total function.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    base: ClusteringProblem,
}

impl TransformedProblem {
    pub fn new(base: ClusteringProblem) -> Self {
        TransformedProblem { base }
    }

    pub fn base(&self) -> &ClusteringProblem {
        &self.base
    }

    /// The full m-dimensional image of a search point: first coordinates
    /// replaced by their stick-breaking image, others untouched.
    pub fn map_point(&self, x: &[f64]) -> Vec<f64> {
        let d = self.base.point_dim();
        let k = self.base.k();
        debug_assert_eq!(x.len(), k * d);
        let firsts: Vec<f64> = (0..k).map(|j| x[j * d].clamp(0.0, 1.0)).collect();
        let mapped = stick_breaking_transform(&firsts)
            .expect("clamped inputs are inside the transform domain");
        let mut out = x.to_vec();
        for (j, t) in mapped.into_iter().enumerate() {
            out[j * d] = t;
        }
        out
    }
}

impl Objective for TransformedProblem {
    fn dim(&self) -> usize {
        self.base.search_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mapped = self.map_point(x);
        self.base.value(&mapped)
    }
}
