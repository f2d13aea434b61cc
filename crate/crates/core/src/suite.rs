//! Suite assembly: manifests, bundled datasets and the default 40-problem set.
//!
//! The default suite pairs 10 bundled 2-D datasets with k ∈ {2, 3, 5, 10},
//! giving 40 problems of search dimensionality m ∈ {4, 6, 10, 20}. Each
//! dataset is reduced to 2 dimensions by PCA and min-max normalized to the
//! unit box before problems are built. Problems carry stable ids
//! `F{datasetIndex}_k{k}`; the Ruspini dataset sits at index 8.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineTable;
use crate::data::{
    generate_synthetic, load_dataset, min_max_normalize, pca_reduce, Dataset, MixtureComponent,
    MixtureSpec,
};
use crate::error::{Error, Result};
use crate::problem::ClusteringProblem;

/// The k values of the default suite.
pub const DEFAULT_K_VALUES: [usize; 4] = [2, 3, 5, 10];

/// Preprocessing applied to a dataset before problems are built from it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Preprocessing {
    /// Reduce to this many dimensions via PCA (skipped when `None` or when
    /// the data already has this dimension).
    pub pca_dim: Option<usize>,
    /// Min-max normalize to the unit box afterwards.
    pub normalize: bool,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            pca_dim: Some(2),
            normalize: true,
        }
    }
}

/// One dataset entry of a suite manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Either `builtin:<id>` or a CSV path (relative to the manifest file).
    pub source: String,
    #[serde(default)]
    pub preprocessing: Preprocessing,
}

/// A suite manifest: datasets plus the list of cluster counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteManifest {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    pub datasets: Vec<ManifestEntry>,
    /// Directory used to resolve relative CSV paths; set when loading from a
    /// file, empty for in-memory manifests.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_k_values() -> Vec<usize> {
    DEFAULT_K_VALUES.to_vec()
}

impl SuiteManifest {
    /// The bundled 10-dataset manifest reproducing the default suite layout.
    pub fn default_suite() -> Self {
        let datasets = builtin_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| ManifestEntry {
                name: format!("F{}", i + 1),
                source: format!("builtin:{id}"),
                preprocessing: Preprocessing::default(),
            })
            .collect();
        SuiteManifest {
            k_values: default_k_values(),
            datasets,
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: SuiteManifest = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| k == 0) {
            return Err(Error::Manifest("k_values must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for entry in &self.datasets {
            if !seen.insert(&entry.name) {
                return Err(Error::Manifest(format!(
                    "duplicate dataset name '{}'",
                    entry.name
                )));
            }
        }
        Ok(())
    }
}

/// One benchmark problem of a suite.
#[derive(Debug, Clone)]
pub struct SuiteProblem {
    /// Stable id `F{datasetIndex}_k{k}`.
    pub id: String,
    pub dataset_name: String,
    pub k: usize,
    pub problem: ClusteringProblem,
}

/// An ordered set of problems built from a manifest, with optional attached
/// baseline values.
#[derive(Debug, Clone)]
pub struct ProblemSuite {
    problems: Vec<SuiteProblem>,
    baselines: Option<BaselineTable>,
}

impl ProblemSuite {
    pub fn problems(&self) -> &[SuiteProblem] {
        &self.problems
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SuiteProblem> {
        self.problems.iter().find(|p| p.id == id)
    }

    pub fn attach_baselines(&mut self, baselines: BaselineTable) {
        self.baselines = Some(baselines);
    }

    pub fn baselines(&self) -> Option<&BaselineTable> {
        self.baselines.as_ref()
    }

    /// Problems grouped by search dimensionality, ascending.
    pub fn by_dimension(&self) -> BTreeMap<usize, Vec<&SuiteProblem>> {
        let mut groups: BTreeMap<usize, Vec<&SuiteProblem>> = BTreeMap::new();
        for p in &self.problems {
            groups.entry(p.problem.search_dim()).or_default().push(p);
        }
        groups
    }
}

/// Loads every manifest dataset, applies its preprocessing and instantiates
/// one problem per (dataset, k).
pub fn build_suite(manifest: &SuiteManifest) -> Result<ProblemSuite> {
    manifest.validate()?;
    let mut problems = Vec::with_capacity(manifest.datasets.len() * manifest.k_values.len());
    for (index, entry) in manifest.datasets.iter().enumerate() {
        let raw = resolve_source(entry, &manifest.base_dir).map_err(|e| {
            Error::Manifest(format!("dataset '{}': {e}", entry.name))
        })?;
        let data = preprocess(raw, &entry.preprocessing)?.with_name(entry.name.clone());
        for &k in &manifest.k_values {
            problems.push(SuiteProblem {
                id: format!("F{}_k{}", index + 1, k),
                dataset_name: entry.name.clone(),
                k,
                problem: ClusteringProblem::new(data.clone(), k)?,
            });
        }
    }
    Ok(ProblemSuite {
        problems,
        baselines: None,
    })
}

fn resolve_source(entry: &ManifestEntry, base_dir: &Path) -> Result<Dataset> {
    if let Some(id) = entry.source.strip_prefix("builtin:") {
        load_builtin(id)
    } else {
        let path = base_dir.join(&entry.source);
        load_dataset(path)
    }
}

fn preprocess(data: Dataset, prep: &Preprocessing) -> Result<Dataset> {
    let reduced = match prep.pca_dim {
        Some(dim) if dim < data.dim() => pca_reduce(&data, dim)?,
        Some(dim) if dim > data.dim() => {
            return Err(Error::PcaTargetDim {
                target: dim,
                dim: data.dim(),
            })
        }
        _ => data,
    };
    Ok(if prep.normalize {
        min_max_normalize(&reduced)
    } else {
        reduced
    })
}

// ---------------------------------------------------------------------------
// Bundled datasets
// ---------------------------------------------------------------------------

/// Ids of the bundled datasets in default-suite order (index 8 is Ruspini).
pub fn builtin_ids() -> &'static [&'static str] {
    &[
        "gauss3",
        "elongated2",
        "densities5",
        "uniform_cluster",
        "outliers4",
        "unimodal",
        "overlap2",
        "ruspini",
        "ring8",
        "micro10",
    ]
}

/// Loads a bundled dataset from its embedded CSV.
pub fn load_builtin(id: &str) -> Result<Dataset> {
    let text = match id {
        "gauss3" => include_str!("../data/gauss3.csv"),
        "elongated2" => include_str!("../data/elongated2.csv"),
        "densities5" => include_str!("../data/densities5.csv"),
        "uniform_cluster" => include_str!("../data/uniform_cluster.csv"),
        "outliers4" => include_str!("../data/outliers4.csv"),
        "unimodal" => include_str!("../data/unimodal.csv"),
        "overlap2" => include_str!("../data/overlap2.csv"),
        "ruspini" => include_str!("../data/ruspini.csv"),
        "ring8" => include_str!("../data/ring8.csv"),
        "micro10" => include_str!("../data/micro10.csv"),
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    };
    parse_embedded_csv(text, id)
}

fn parse_embedded_csv(text: &str, name: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let parsed: Option<Vec<f64>> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().ok())
            .collect();
        match parsed {
            Some(row) => rows.push(row),
            None => continue, // header
        }
    }
    Dataset::from_rows(name, rows)
}

/// Generation recipe for a bundled synthetic dataset: the mixture spec plus
/// its pinned seed. Ruspini is real data and has no recipe.
pub fn builtin_recipe(id: &str) -> Option<(MixtureSpec, u64)> {
    let gauss = |mean: [f64; 2], std: [f64; 2]| MixtureComponent::Gaussian {
        mean: mean.to_vec(),
        std: std.to_vec(),
    };
    match id {
        "gauss3" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 150,
                weights: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                components: vec![
                    gauss([0.0, 0.0], [0.8, 0.8]),
                    gauss([6.0, 1.0], [0.8, 0.8]),
                    gauss([3.0, 6.0], [0.8, 0.8]),
                ],
            },
            9001,
        )),
        "elongated2" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 120,
                weights: vec![0.5, 0.5],
                components: vec![
                    gauss([0.0, 0.0], [2.5, 0.3]),
                    gauss([1.0, 4.0], [2.5, 0.3]),
                ],
            },
            9002,
        )),
        "densities5" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 250,
                weights: vec![0.3, 0.25, 0.2, 0.15, 0.1],
                components: vec![
                    gauss([0.0, 0.0], [1.2, 1.2]),
                    gauss([7.0, 0.5], [0.5, 0.5]),
                    gauss([3.5, 5.5], [0.9, 0.9]),
                    gauss([8.0, 6.0], [0.25, 0.25]),
                    gauss([-1.0, 7.0], [1.8, 1.8]),
                ],
            },
            9003,
        )),
        "uniform_cluster" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 200,
                weights: vec![0.6, 0.4],
                components: vec![
                    MixtureComponent::Uniform {
                        low: vec![0.0, 0.0],
                        high: vec![10.0, 10.0],
                    },
                    gauss([7.5, 2.5], [0.4, 0.4]),
                ],
            },
            9004,
        )),
        "outliers4" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 160,
                weights: vec![0.25, 0.25, 0.25, 0.2, 0.05],
                components: vec![
                    gauss([0.0, 0.0], [0.5, 0.5]),
                    gauss([5.0, 0.0], [0.5, 0.5]),
                    gauss([0.0, 5.0], [0.5, 0.5]),
                    gauss([5.0, 5.0], [0.5, 0.5]),
                    // Wide low-weight component producing outliers.
                    gauss([2.5, 2.5], [8.0, 8.0]),
                ],
            },
            9005,
        )),
        "unimodal" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 100,
                weights: vec![1.0],
                components: vec![gauss([0.0, 0.0], [1.0, 2.0])],
            },
            9006,
        )),
        "overlap2" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 180,
                weights: vec![0.5, 0.5],
                components: vec![
                    gauss([0.0, 0.0], [1.5, 1.5]),
                    gauss([2.5, 0.5], [1.5, 1.5]),
                ],
            },
            9007,
        )),
        "ring8" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 200,
                weights: vec![0.125; 8],
                components: (0..8)
                    .map(|i| {
                        let angle = std::f64::consts::TAU * i as f64 / 8.0;
                        gauss([5.0 * angle.cos(), 5.0 * angle.sin()], [0.45, 0.45])
                    })
                    .collect(),
            },
            9008,
        )),
        "micro10" => Some((
            MixtureSpec {
                name: id.into(),
                n_points: 220,
                weights: vec![0.1; 10],
                components: vec![
                    gauss([0.0, 0.0], [0.3, 0.3]),
                    gauss([4.0, 1.0], [0.3, 0.3]),
                    gauss([8.0, 0.0], [0.3, 0.3]),
                    gauss([1.0, 4.0], [0.3, 0.3]),
                    gauss([5.0, 5.0], [0.3, 0.3]),
                    gauss([9.0, 4.0], [0.3, 0.3]),
                    gauss([0.0, 8.0], [0.3, 0.3]),
                    gauss([4.0, 9.0], [0.3, 0.3]),
                    gauss([8.0, 8.0], [0.3, 0.3]),
                    gauss([12.0, 6.0], [0.3, 0.3]),
                ],
            },
            9009,
        )),
        _ => None,
    }
}

/// Regenerates a bundled synthetic dataset from its pinned recipe.
pub fn regenerate_builtin(id: &str) -> Result<Dataset> {
    let (spec, seed) = builtin_recipe(id).ok_or_else(|| Error::UnknownBuiltin(id.to_string()))?;
    generate_synthetic(&spec, seed)
}
