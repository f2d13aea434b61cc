//! Basin analysis of local-search outcomes: region-constrained starts,
//! region-retention statistics, hill-valley tests, the solution network with
//! its cliques and representatives, and basin-connectivity probing.
//!
//! All evaluations here go directly through [`Objective`] rather than a
//! budget meter: analysis is free, experiment budgets are not consumed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{canonicalize_blocks, CenterVector, ClusteringProblem, Objective};

/// Default number of interior points of the hill-valley test.
pub const DEFAULT_INTERMEDIATES: usize = 4;
/// Default hill-valley tolerance (absolute).
pub const DEFAULT_HILL_VALLEY_TOL: f64 = 1e-9;
/// Default search-space distance below which representatives merge.
pub const DEFAULT_VALUE_MERGE_EPS: f64 = 1e-3;
/// Default perturbation scale of the connectivity probe.
pub const DEFAULT_PERTURB_SCALE: f64 = 0.01;
/// Default closeness radius of the connectivity probe.
pub const DEFAULT_CLOSENESS_EPS: f64 = 0.05;
/// Default consecutive-failure limit of the connectivity probe.
pub const DEFAULT_STAGNATION_LIMIT: usize = 1000;

/// Uniform samples over the unit box, each canonicalized into the
/// sorted-first-coordinate symmetry region, pairwise distinct.
pub fn region_constrained_starts(
    problem: &ClusteringProblem,
    count: usize,
    seed: u64,
) -> Result<Vec<CenterVector>> {
    if count == 0 {
        return Err(Error::Precondition("start count must be >= 1".into()));
    }
    let m = problem.search_dim();
    let d = problem.point_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<CenterVector> = Vec::with_capacity(count);
    let mut attempts = 0;
    while starts.len() < count {
        attempts += 1;
        if attempts > count * 100 {
            return Err(Error::Precondition(
                "could not sample pairwise-distinct starts".into(),
            ));
        }
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let (canonical, _) = canonicalize_blocks(&raw, d);
        if starts.iter().any(|s| s.as_slice() == canonical.as_slice()) {
            continue;
        }
        starts.push(canonical);
    }
    Ok(starts)
}

/// Fraction of (start, final) pairs whose final point lies in the same
/// symmetry region as its start.
pub fn region_retention(
    problem: &ClusteringProblem,
    pairs: &[(CenterVector, CenterVector)],
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Precondition(
            "region retention needs at least one run".into(),
        ));
    }
    let mut retained = 0usize;
    for (start, finish) in pairs {
        if problem.region_id(start)? == problem.region_id(finish)? {
            retained += 1;
        }
    }
    Ok(retained as f64 / pairs.len() as f64)
}

/// Hill-valley test: `a` and `b` are deemed same-basin iff no equally spaced
/// interior segment point exceeds `max(f(a), f(b)) + tolerance`.
///
/// The endpoints are ordered canonically before the segment is built, so the
/// test is exactly symmetric in `(a, b)` (same points, same evaluations).
pub fn hill_valley_same_basin<F: Objective + ?Sized>(
    objective: &F,
    a: &[f64],
    b: &[f64],
    intermediates: usize,
    tolerance: f64,
) -> Result<bool> {
    if a.len() != b.len() || a.len() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: if a.len() != objective.dim() { a.len() } else { b.len() },
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "hill-valley endpoints",
        });
    }
    let intermediates = intermediates.max(1);

    let (lo, hi) = if lex_le(a, b) { (a, b) } else { (b, a) };
    let threshold = objective.value(lo).max(objective.value(hi)) + tolerance;
    let mut segment = vec![0.0; lo.len()];
    for i in 1..=intermediates {
        let t = i as f64 / (intermediates + 1) as f64;
        for (s, (x, y)) in segment.iter_mut().zip(lo.iter().zip(hi)) {
            *s = x + t * (y - x);
        }
        if objective.value(&segment) > threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

fn lex_le(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    true
}

/// A local-search end point entering the solution network.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    #[serde(rename = "vector")]
    pub point: Vec<f64>,
    pub value: f64,
    /// Which algorithm produced it.
    pub algorithm: String,
    /// The start the search was launched from, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

/// Nodes, same-basin edges, disjoint clique groups and their representatives.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionGraph {
    pub nodes: Vec<Solution>,
    /// Unordered index pairs (i < j) passing the hill-valley test.
    pub edges: Vec<(usize, usize)>,
    /// Disjoint node groups; each group is a clique of the same-basin graph.
    pub cliques: Vec<Vec<usize>>,
    /// Best-valued node of each clique, parallel to `cliques`.
    pub representatives: Vec<usize>,
    /// Merge radius used by [`count_distinct_solutions`].
    pub value_merge_eps: f64,
}

/// Builds the solution network: an edge marks a passed hill-valley test
/// (no barrier between the end points), maximal cliques are enumerated
/// exactly, every node joins its best-valued containing clique, and each
/// group elects its minimum-value node as representative.
pub fn build_solution_graph<F: Objective + ?Sized>(
    objective: &F,
    solutions: Vec<Solution>,
    intermediates: usize,
    tolerance: f64,
    value_merge_eps: f64,
) -> Result<SolutionGraph> {
    if solutions.is_empty() {
        return Err(Error::Precondition(
            "solution graph needs at least one solution".into(),
        ));
    }
    let n = solutions.len();
    let mut adjacency = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if hill_valley_same_basin(
                objective,
                &solutions[i].point,
                &solutions[j].point,
                intermediates,
                tolerance,
            )? {
                adjacency[i][j] = true;
                adjacency[j][i] = true;
                edges.push((i, j));
            }
        }
    }

    let mut maximal = bron_kerbosch(&adjacency);
    // Canonical clique order: by best contained value, then lexicographic
    // members. Assignment of a node to the first containing clique is then
    // "the best-valued clique containing it".
    for clique in &mut maximal {
        clique.sort_unstable();
    }
    maximal.sort_by(|a, b| {
        let va = clique_value(a, &solutions);
        let vb = clique_value(b, &solutions);
        va.partial_cmp(&vb)
            .expect("finite values")
            .then_with(|| a.cmp(b))
    });

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); maximal.len()];
    for node in 0..n {
        let home = maximal
            .iter()
            .position(|clique| clique.binary_search(&node).is_ok())
            .expect("every node lies in at least one maximal clique");
        groups[home].push(node);
    }
    let mut cliques: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    for clique in &mut cliques {
        clique.sort_unstable();
    }
    let representatives = cliques
        .iter()
        .map(|clique| {
            *clique
                .iter()
                .min_by(|&&i, &&j| {
                    solutions[i]
                        .value
                        .partial_cmp(&solutions[j].value)
                        .expect("finite values")
                })
                .expect("non-empty clique")
        })
        .collect();

    Ok(SolutionGraph {
        nodes: solutions,
        edges,
        cliques,
        representatives,
        value_merge_eps,
    })
}

fn clique_value(clique: &[usize], solutions: &[Solution]) -> f64 {
    clique
        .iter()
        .map(|&i| solutions[i].value)
        .fold(f64::INFINITY, f64::min)
}

/// Exact maximal-clique enumeration (Bron–Kerbosch with pivoting), fine for
/// the ≤150-node graphs produced here. Deterministic: candidates are visited
/// in ascending index order and the pivot tie-breaks on the lowest index.
fn bron_kerbosch(adjacency: &[Vec<bool>]) -> Vec<Vec<usize>> {
    fn recurse(
        adjacency: &[Vec<bool>],
        r: &mut Vec<usize>,
        p: Vec<usize>,
        x: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        // Pivot: vertex of P ∪ X with the most neighbors in P.
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| p.iter().filter(|&&v| adjacency[u][v]).count())
            .expect("p or x non-empty");
        let candidates: Vec<usize> = p
            .iter()
            .copied()
            .filter(|&v| !adjacency[pivot][v])
            .collect();
        let mut p = p;
        let mut x = x;
        for v in candidates {
            let neighbors = |set: &[usize]| -> Vec<usize> {
                set.iter().copied().filter(|&u| adjacency[v][u]).collect()
            };
            r.push(v);
            recurse(adjacency, r, neighbors(&p), neighbors(&x), out);
            r.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }

    let n = adjacency.len();
    let mut out = Vec::new();
    recurse(
        adjacency,
        &mut Vec::new(),
        (0..n).collect(),
        Vec::new(),
        &mut out,
    );
    out
}

/// Verdict of the basin-connectivity probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    Connected,
    Disconnected,
}

/// Improvement-only random walk from the worse point: `Connected` when the
/// trajectory comes within `closeness_eps` (Euclidean) of the better point,
/// `Disconnected` after `stagnation_limit` consecutive failed proposals or
/// once the walk has spent `50 × stagnation_limit` proposals in total without
/// reaching the target.
pub fn basin_connectivity_probe<F: Objective + ?Sized>(
    objective: &F,
    worse: &[f64],
    better: &[f64],
    perturb_scale: f64,
    closeness_eps: f64,
    stagnation_limit: usize,
    seed: u64,
) -> Result<Connectivity> {
    let max_proposals = stagnation_limit.saturating_mul(50).max(10_000);

    let dim = objective.dim();
    if worse.len() != dim || better.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: if worse.len() != dim {
                worse.len()
            } else {
                better.len()
            },
        });
    }
    let mut f_current = objective.value(worse);
    let f_better = objective.value(better);
    if f_current < f_better {
        return Err(Error::Precondition(
            "connectivity probe expects f(worse) >= f(better)".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = worse.to_vec();
    let mut stagnation = 0usize;
    let mut proposal = vec![0.0; dim];

    for _ in 0..max_proposals {
        if euclidean(&current, better) <= closeness_eps {
            return Ok(Connectivity::Connected);
        }
        for (p, c) in proposal.iter_mut().zip(&current) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p = c + perturb_scale * z;
        }
        let f_proposal = objective.value(&proposal);
        if f_proposal < f_current {
            current.copy_from_slice(&proposal);
            f_current = f_proposal;
            stagnation = 0;
        } else {
            stagnation += 1;
            if stagnation >= stagnation_limit {
                return Ok(Connectivity::Disconnected);
            }
        }
    }
    Ok(Connectivity::Disconnected)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Number of distinct solutions: representatives merged transitively whenever
/// their pairwise search-space distance falls below the graph's merge radius.
pub fn count_distinct_solutions(graph: &SolutionGraph) -> usize {
    merged_representatives(graph).len()
}

/// One representative node per merged group (transitive closure of the
/// merge-radius relation), each the best-valued member of its group, ordered
/// by value then node index.
pub fn merged_representatives(graph: &SolutionGraph) -> Vec<usize> {
    let groups = merge_groups(graph, |i| &graph.nodes[i].point);
    let mut reps: Vec<usize> = groups
        .into_iter()
        .map(|group| {
            group
                .into_iter()
                .min_by(|&a, &b| {
                    graph.nodes[a]
                        .value
                        .partial_cmp(&graph.nodes[b].value)
                        .expect("finite values")
                        .then(a.cmp(&b))
                })
                .expect("non-empty merge group")
        })
        .collect();
    reps.sort_by(|&a, &b| {
        graph.nodes[a]
            .value
            .partial_cmp(&graph.nodes[b].value)
            .expect("finite values")
            .then(a.cmp(&b))
    });
    reps
}

/// Like [`count_distinct_solutions`] but comparing canonicalized (block-
/// sorted) representatives, so symmetric copies of one center set collapse.
pub fn count_distinct_canonical_solutions(
    graph: &SolutionGraph,
    problem: &ClusteringProblem,
) -> usize {
    let canonical: Vec<Vec<f64>> = graph
        .representatives
        .iter()
        .map(|&i| {
            canonicalize_blocks(&graph.nodes[i].point, problem.point_dim())
                .0
                .into_vec()
        })
        .collect();
    let lookup: std::collections::HashMap<usize, usize> = graph
        .representatives
        .iter()
        .enumerate()
        .map(|(pos, &node)| (node, pos))
        .collect();
    merge_groups(graph, |i| canonical[lookup[&i]].as_slice()).len()
}

/// Groups the graph's representatives by transitive closeness under the merge
/// radius. Returns groups of node indices.
fn merge_groups<'a, G>(graph: &SolutionGraph, point_of: G) -> Vec<Vec<usize>>
where
    G: Fn(usize) -> &'a [f64] + 'a,
{
    let reps = &graph.representatives;
    let mut parent: Vec<usize> = (0..reps.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..reps.len() {
        for j in (i + 1)..reps.len() {
            if euclidean(point_of(reps[i]), point_of(reps[j])) < graph.value_merge_eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..reps.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(reps[i]);
    }
    groups.into_values().collect()
}
