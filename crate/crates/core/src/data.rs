//! Dataset ingestion, synthetic generation, PCA reduction and min-max normalization.
//!
//! A [`Dataset`] is an n×d point cloud. Benchmark problems are built on top of
//! datasets that have been reduced to a common dimensionality and normalized to
//! the unit box, but all operations here work on raw data as well.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An n×d point cloud with provenance metadata.
///
/// Rows are points, stored row-major. `normalized` records whether every
/// coordinate lies in `[0,1]` with each non-constant dimension spanning the
/// full interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    points: Vec<f64>,
    n: usize,
    d: usize,
    normalized: bool,
}

impl Dataset {
    /// Builds a dataset from row vectors. All rows must share one dimension
    /// and every coordinate must be finite.
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        if rows.is_empty() {
            return Err(Error::InvalidDataset {
                name,
                message: "dataset must contain at least one point".into(),
            });
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidDataset {
                name,
                message: "points must have at least one coordinate".into(),
            });
        }
        let mut points = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset {
                    name,
                    message: format!("row {} has {} fields, expected {}", i + 1, row.len(), d),
                });
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidDataset {
                        name,
                        message: format!("row {} contains a non-finite value", i + 1),
                    });
                }
            }
            points.extend_from_slice(row);
        }
        let n = rows.len();
        Ok(Dataset {
            name,
            points,
            n,
            d,
            normalized: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The i-th point as a coordinate slice.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    /// Flat row-major coordinate storage.
    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// Per-dimension (min, max) over all points.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.d];
        for row in self.iter() {
            for (t, &v) in row.iter().enumerate() {
                if v < bounds[t].0 {
                    bounds[t].0 = v;
                }
                if v > bounds[t].1 {
                    bounds[t].1 = v;
                }
            }
        }
        bounds
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Loads a dataset from a comma-separated file ('.' decimal separator, one
/// point per row). A single leading header row is detected and skipped when
/// its fields do not all parse as numbers.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_dataset_csv(&text, &name, path)
}

fn parse_dataset_csv(text: &str, name: &str, path: &Path) -> Result<Dataset> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty());

    let mut header_skipped = false;
    if let Some((_, first)) = lines.next() {
        match parse_numeric_row(first) {
            Some(row) => rows.push(row),
            // A header row has no numeric fields at all; a partially numeric
            // first row is treated as malformed data, not as a header.
            None if first.split(',').all(|f| f.trim().parse::<f64>().is_err()) => {
                header_skipped = true;
            }
            None => {
                let bad = first
                    .split(',')
                    .map(str::trim)
                    .find(|f| f.parse::<f64>().is_err())
                    .unwrap_or("");
                return Err(Error::CsvRow {
                    path: path.to_path_buf(),
                    row: 1,
                    message: format!("non-numeric field '{bad}'"),
                });
            }
        }
    }
    for (line_idx, line) in lines {
        let row_number = if header_skipped { line_idx } else { line_idx + 1 };
        let fields: Vec<&str> = line.split(',').collect();
        let mut row = Vec::with_capacity(fields.len());
        for field in &fields {
            let v: f64 = field.trim().parse().map_err(|_| Error::CsvRow {
                path: path.to_path_buf(),
                row: row_number,
                message: format!("non-numeric field '{}'", field.trim()),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::CsvRow {
                    path: path.to_path_buf(),
                    row: row_number,
                    message: format!("ragged row: {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidDataset {
            name: name.to_string(),
            message: "file contains no data rows".into(),
        });
    }
    Dataset::from_rows(name, rows)
}

fn parse_numeric_row(line: &str) -> Option<Vec<f64>> {
    line.split(',')
        .map(|f| f.trim().parse::<f64>().ok())
        .collect()
}

/// Serializes a dataset back to CSV using the shortest decimal representation
/// that round-trips each `f64` bit-identically.
pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in data.iter() {
        for (t, v) in row.iter().enumerate() {
            if t > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Projects the mean-centered data onto its top `target_dim` principal
/// components, ordered by descending explained variance.
///
/// The sample covariance uses divisor n−1. Sign convention: within each
/// component, the entry of largest absolute value is made positive, which
/// pins an otherwise arbitrary choice. Components beyond the data's rank
/// carry zero variance and are kept as-is.
pub fn pca_reduce(data: &Dataset, target_dim: usize) -> Result<Dataset> {
    let (n, d) = (data.len(), data.dim());
    if target_dim == 0 || target_dim > d {
        return Err(Error::PcaTargetDim {
            target: target_dim,
            dim: d,
        });
    }
    if n < 2 {
        return Err(Error::InvalidDataset {
            name: data.name().to_string(),
            message: "pca requires at least two points".into(),
        });
    }

    let mut mean = vec![0.0; d];
    for row in data.iter() {
        for (t, &v) in row.iter().enumerate() {
            mean[t] += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in data.iter() {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                let db = row[b] - mean[b];
                cov[(a, b)] += da * db;
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let total_variance: f64 = (0..d).map(|t| cov[(t, t)]).sum();
    if total_variance <= 0.0 {
        return Err(Error::PcaDegenerate);
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a real symmetric matrix are finite")
    });

    // Components as rows, sign-fixed on the largest-magnitude entry.
    let mut components = Vec::with_capacity(target_dim);
    for &idx in order.iter().take(target_dim) {
        let col = eig.eigenvectors.column(idx);
        let mut comp: Vec<f64> = col.iter().copied().collect();
        let pivot = comp
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| {
                x.abs()
                    .partial_cmp(&y.abs())
                    .expect("eigenvector entries are finite")
            })
            .map(|(i, _)| i)
            .unwrap();
        if comp[pivot] < 0.0 {
            for c in &mut comp {
                *c = -*c;
            }
        }
        components.push(comp);
    }

    let mut rows = Vec::with_capacity(n);
    for row in data.iter() {
        let mut projected = Vec::with_capacity(target_dim);
        for comp in &components {
            let mut s = 0.0;
            for t in 0..d {
                s += (row[t] - mean[t]) * comp[t];
            }
            projected.push(s);
        }
        rows.push(projected);
    }
    Dataset::from_rows(data.name(), rows)
}

/// Affinely rescales each dimension so its minimum maps to 0 and its maximum
/// to 1. Constant dimensions map to 0.5 to stay inside the unit box.
pub fn min_max_normalize(data: &Dataset) -> Dataset {
    let (n, d) = (data.len(), data.dim());
    let bounds = data.bounds();
    let mut points = Vec::with_capacity(n * d);
    for row in data.iter() {
        for (t, &v) in row.iter().enumerate() {
            let (lo, hi) = bounds[t];
            if hi > lo {
                points.push((v - lo) / (hi - lo));
            } else {
                points.push(0.5);
            }
        }
    }
    Dataset {
        name: data.name().to_string(),
        points,
        n,
        d,
        normalized: true,
    }
}

/// One component of a synthetic mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixtureComponent {
    /// Axis-aligned Gaussian with per-dimension standard deviations.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    /// Uniform over an axis-aligned box.
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

impl MixtureComponent {
    fn dim(&self) -> usize {
        match self {
            MixtureComponent::Gaussian { mean, .. } => mean.len(),
            MixtureComponent::Uniform { low, .. } => low.len(),
        }
    }
}

/// A weighted mixture of Gaussian / uniform components. Outliers are modelled
/// as a low-weight wide component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub name: String,
    pub n_points: usize,
    pub weights: Vec<f64>,
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::InvalidMixtureSpec("point count must be >= 1".into()));
        }
        if self.components.is_empty() {
            return Err(Error::InvalidMixtureSpec(
                "at least one component required".into(),
            ));
        }
        if self.weights.len() != self.components.len() {
            return Err(Error::InvalidMixtureSpec(format!(
                "{} weights for {} components",
                self.weights.len(),
                self.components.len()
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidMixtureSpec(format!(
                "weights must be non-negative and sum to 1 (got {total})"
            )));
        }
        let d = self.components[0].dim();
        for comp in &self.components {
            if comp.dim() != d {
                return Err(Error::InvalidMixtureSpec(
                    "components have inconsistent dimensions".into(),
                ));
            }
            match comp {
                MixtureComponent::Gaussian { mean, std } => {
                    if std.len() != mean.len() || std.iter().any(|&s| !(s > 0.0)) {
                        return Err(Error::InvalidMixtureSpec(
                            "gaussian std must be positive per dimension".into(),
                        ));
                    }
                }
                MixtureComponent::Uniform { low, high } => {
                    if high.len() != low.len() || low.iter().zip(high).any(|(l, h)| !(h > l)) {
                        return Err(Error::InvalidMixtureSpec(
                            "uniform bounds must satisfy low < high".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Samples a dataset from a mixture spec. Deterministic for a fixed seed.
pub fn generate_synthetic(spec: &MixtureSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.components[0].dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(spec.weights.len());
    let mut acc = 0.0;
    for &w in &spec.weights {
        acc += w;
        cumulative.push(acc);
    }

    let mut rows = Vec::with_capacity(spec.n_points);
    for _ in 0..spec.n_points {
        let u: f64 = rng.random();
        let idx = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(spec.components.len() - 1);
        let mut row = Vec::with_capacity(d);
        match &spec.components[idx] {
            MixtureComponent::Gaussian { mean, std } => {
                for t in 0..d {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    row.push(mean[t] + std[t] * z);
                }
            }
            MixtureComponent::Uniform { low, high } => {
                for t in 0..d {
                    row.push(rng.random_range(low[t]..high[t]));
                }
            }
        }
        rows.push(row);
    }
    Dataset::from_rows(spec.name.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_two_row_file() {
        let f = write_temp("0,0\n1,1\n");
        let data = load_dataset(f.path()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.dim(), 2);
        assert!(!data.is_normalized());
        assert_eq!(data.point(1), &[1.0, 1.0]);
    }

    #[test]
    fn load_detects_header() {
        let f = write_temp("x,y\n0,0\n1,2\n");
        let data = load_dataset(f.path()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.point(1), &[1.0, 2.0]);
    }

    #[test]
    fn load_reports_bad_row_number() {
        let f = write_temp("1,a\n");
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::CsvRow { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_reports_ragged_row() {
        let f = write_temp("1,2\n3\n");
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::CsvRow { row, message, .. } => {
                assert_eq!(row, 2);
                assert!(message.contains("ragged"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_missing_file() {
        let err = load_dataset("/nonexistent/nope.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn normalize_simple_1d() {
        let data = Dataset::from_rows("t", vec![vec![2.0], vec![4.0], vec![6.0]]).unwrap();
        let norm = min_max_normalize(&data);
        assert_eq!(norm.as_flat(), &[0.0, 0.5, 1.0]);
        assert!(norm.is_normalized());
    }

    #[test]
    fn normalize_is_idempotent() {
        let data = Dataset::from_rows(
            "t",
            vec![vec![0.3, 5.0], vec![0.9, -1.0], vec![0.1, 2.0]],
        )
        .unwrap();
        let once = min_max_normalize(&data);
        let twice = min_max_normalize(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn normalize_constant_dimension_maps_to_half() {
        let data = Dataset::from_rows("t", vec![vec![1.0, 5.0], vec![2.0, 5.0]]).unwrap();
        let norm = min_max_normalize(&data);
        assert_eq!(norm.point(0), &[0.0, 0.5]);
        assert_eq!(norm.point(1), &[1.0, 0.5]);
    }

    #[test]
    fn pca_identity_on_axis_aligned() {
        // Variance along x dominates; PCA recovers the axes up to centering.
        let data = Dataset::from_rows(
            "t",
            vec![vec![0.0, 0.0], vec![4.0, 0.5], vec![8.0, 0.0], vec![12.0, 0.5]],
        )
        .unwrap();
        let reduced = pca_reduce(&data, 2).unwrap();
        // Pairwise distances are preserved by an orthogonal change of basis.
        for i in 0..data.len() {
            for j in 0..data.len() {
                let orig: f64 = data
                    .point(i)
                    .iter()
                    .zip(data.point(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let red: f64 = reduced
                    .point(i)
                    .iter()
                    .zip(reduced.point(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                assert_relative_eq!(orig, red, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn pca_projects_diagonal_line() {
        let data = Dataset::from_rows(
            "t",
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]],
        )
        .unwrap();
        let reduced = pca_reduce(&data, 1).unwrap();
        let expected = [-(2.0f64.sqrt()), 0.0, 2.0f64.sqrt()];
        for (i, &e) in expected.iter().enumerate() {
            assert_relative_eq!(reduced.point(i)[0], e, epsilon = 1e-12);
        }
    }

    #[test]
    fn pca_rejects_degenerate_data() {
        let data = Dataset::from_rows("t", vec![vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(pca_reduce(&data, 2), Err(Error::PcaDegenerate)));
    }

    #[test]
    fn pca_rank_deficient_keeps_zero_variance_component() {
        // Two points differing along one direction: second component has zero variance.
        let data = Dataset::from_rows("t", vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let reduced = pca_reduce(&data, 2).unwrap();
        assert_eq!(reduced.dim(), 2);
        let second: Vec<f64> = (0..2).map(|i| reduced.point(i)[1]).collect();
        assert_relative_eq!(second[0], second[1], epsilon = 1e-12);
    }

    #[test]
    fn pca_rejects_target_above_dim() {
        let data = Dataset::from_rows("t", vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            pca_reduce(&data, 2),
            Err(Error::PcaTargetDim { .. })
        ));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = MixtureSpec {
            name: "g".into(),
            n_points: 100,
            weights: vec![1.0],
            components: vec![MixtureComponent::Gaussian {
                mean: vec![0.0, 0.0],
                std: vec![1.0, 1.0],
            }],
        };
        let a = generate_synthetic(&spec, 7).unwrap();
        let b = generate_synthetic(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
    }

    #[test]
    fn synthetic_component_balance() {
        // Two well-separated blobs with equal weight: component counts stay
        // within the 99.99% binomial interval stated for n=200.
        let spec = MixtureSpec {
            name: "two".into(),
            n_points: 200,
            weights: vec![0.5, 0.5],
            components: vec![
                MixtureComponent::Gaussian {
                    mean: vec![0.0, 0.0],
                    std: vec![0.1, 0.1],
                },
                MixtureComponent::Gaussian {
                    mean: vec![10.0, 10.0],
                    std: vec![0.1, 0.1],
                },
            ],
        };
        let data = generate_synthetic(&spec, 3).unwrap();
        let near_origin = data
            .iter()
            .filter(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() < 5.0)
            .count();
        assert!((60..=140).contains(&near_origin), "got {near_origin}");
    }

    #[test]
    fn synthetic_rejects_bad_weights() {
        let spec = MixtureSpec {
            name: "bad".into(),
            n_points: 10,
            weights: vec![0.5, 0.6],
            components: vec![
                MixtureComponent::Uniform {
                    low: vec![0.0],
                    high: vec![1.0],
                },
                MixtureComponent::Uniform {
                    low: vec![0.0],
                    high: vec![1.0],
                },
            ],
        };
        assert!(matches!(
            generate_synthetic(&spec, 0),
            Err(Error::InvalidMixtureSpec(_))
        ));
    }

    #[test]
    fn save_load_roundtrip_is_bit_identical() {
        let data = Dataset::from_rows(
            "t",
            vec![
                vec![0.1234567890123456, 1.0 / 3.0],
                vec![std::f64::consts::PI, 1e-17],
            ],
        )
        .unwrap();
        let norm = min_max_normalize(&data);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.csv");
        save_dataset(&norm, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(norm.as_flat(), back.as_flat());
    }
}
