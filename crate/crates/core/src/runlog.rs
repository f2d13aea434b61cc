//! Best-so-far run trajectories and their on-disk format.
//!
//! One [`RunLog`] holds the trajectory of a single optimization run as
//! `(evaluations-used, raw value, best-so-far)` triples, recorded at every
//! improvement and at every generation boundary. Runs of one
//! (problem, configuration) cell share a CSV file with a JSON sidecar, which
//! is enough to reconstruct best-so-far at any budget exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::OptimizerConfig;

/// One logged point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    /// Total evaluations consumed when this entry was written.
    pub evaluations: usize,
    /// Raw objective value of the evaluation at that point.
    pub raw: f64,
    /// Best value seen so far.
    pub best: f64,
}

/// The trajectory and outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub problem_id: String,
    pub config_id: String,
    pub repetition: usize,
    pub seed: u64,
    pub budget: usize,
    pub entries: Vec<LogEntry>,
    /// Best point found by the run.
    pub final_vector: Vec<f64>,
}

impl RunLog {
    /// Best-so-far after `budget` evaluations (step interpolation: the last
    /// entry at or before `budget`). `None` when nothing was evaluated yet.
    pub fn best_at(&self, budget: usize) -> Option<f64> {
        let mut best = None;
        for e in &self.entries {
            if e.evaluations <= budget {
                best = Some(e.best);
            } else {
                break;
            }
        }
        best
    }

    pub fn final_best(&self) -> Option<f64> {
        self.entries.last().map(|e| e.best)
    }

    pub fn evaluations_used(&self) -> usize {
        self.entries.last().map_or(0, |e| e.evaluations)
    }

    /// Largest raw value observed anywhere in the trajectory.
    pub fn worst_raw(&self) -> Option<f64> {
        self.entries
            .iter()
            .map(|e| e.raw)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Incremental trajectory recorder shared by all optimizers.
#[derive(Debug, Default)]
pub(crate) struct TrajectoryLogger {
    entries: Vec<LogEntry>,
    best: f64,
    last_raw: f64,
}

impl TrajectoryLogger {
    pub fn new() -> Self {
        TrajectoryLogger {
            entries: Vec::new(),
            best: f64::INFINITY,
            last_raw: f64::NAN,
        }
    }

    /// Records an evaluation, appending an entry if it improved.
    pub fn observe(&mut self, evaluations: usize, raw: f64) -> bool {
        self.last_raw = raw;
        if raw < self.best {
            self.best = raw;
            self.entries.push(LogEntry {
                evaluations,
                raw,
                best: self.best,
            });
            true
        } else {
            false
        }
    }

    /// Ensures an entry exists at `evaluations` (generation boundary / end of
    /// run), keeping evaluation counts strictly increasing.
    pub fn mark(&mut self, evaluations: usize) {
        if evaluations == 0 {
            return;
        }
        if self.entries.last().map(|e| e.evaluations) != Some(evaluations) {
            self.entries.push(LogEntry {
                evaluations,
                raw: self.last_raw,
                best: self.best,
            });
        }
    }

    pub fn into_entries(self) -> Vec<LogEntry> {
        self.entries
    }
}

// ---------------------------------------------------------------------------
// File format: one CSV + JSON sidecar per (problem, config) cell
// ---------------------------------------------------------------------------

/// Per-repetition summary stored in the sidecar.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FinalSummary {
    pub repetition: usize,
    pub seed: u64,
    pub evaluations: usize,
    pub best: f64,
    pub vector: Vec<f64>,
}

/// JSON sidecar describing a (problem, config) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSidecar {
    pub problem_id: String,
    pub config_id: String,
    pub config: OptimizerConfig,
    pub budget: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub finals: Vec<FinalSummary>,
}

/// File stem used for one cell inside a run directory.
pub fn cell_stem(problem_id: &str, config_id: &str) -> String {
    format!("{problem_id}__{config_id}")
}

/// Writes the runs of one cell atomically (temp file + rename).
pub fn write_cell(
    dir: &Path,
    config: &OptimizerConfig,
    master_seed: u64,
    runs: &[RunLog],
) -> Result<(PathBuf, PathBuf)> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Precondition("cannot write an empty cell".into()))?;
    let stem = cell_stem(&first.problem_id, &first.config_id);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));

    let mut csv = String::from("run_id,evaluations,raw_y,best_so_far\n");
    for run in runs {
        for e in &run.entries {
            let _ = writeln!(csv, "{},{},{},{}", run.repetition, e.evaluations, e.raw, e.best);
        }
    }
    let sidecar = CellSidecar {
        problem_id: first.problem_id.clone(),
        config_id: first.config_id.clone(),
        config: config.clone(),
        budget: first.budget,
        repetitions: runs.len(),
        master_seed,
        finals: runs
            .iter()
            .map(|r| FinalSummary {
                repetition: r.repetition,
                seed: r.seed,
                evaluations: r.evaluations_used(),
                best: r.final_best().unwrap_or(f64::INFINITY),
                vector: r.final_vector.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Json {
        path: json_path.clone(),
        source: e,
    })?;

    write_atomic(&csv_path, csv.as_bytes())?;
    write_atomic(&json_path, json.as_bytes())?;
    Ok((csv_path, json_path))
}

/// Writes `bytes` to `path` via a temp file in the same directory followed by
/// a rename, so a file is either absent or complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads one cell back from its CSV + sidecar pair.
pub fn read_cell(csv_path: &Path) -> Result<(CellSidecar, Vec<RunLog>)> {
    let json_path = csv_path.with_extension("json");
    let json_text =
        std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: CellSidecar = serde_json::from_str(&json_text).map_err(|e| Error::Json {
        path: json_path.clone(),
        source: e,
    })?;

    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut runs: Vec<RunLog> = sidecar
        .finals
        .iter()
        .map(|f| RunLog {
            problem_id: sidecar.problem_id.clone(),
            config_id: sidecar.config_id.clone(),
            repetition: f.repetition,
            seed: f.seed,
            budget: sidecar.budget,
            entries: Vec::new(),
            final_vector: f.vector.clone(),
        })
        .collect();

    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next_field = |name: &str| -> Result<&str> {
            fields.next().ok_or_else(|| Error::MalformedRunLog {
                path: csv_path.to_path_buf(),
                message: format!("line {}: missing {name}", i + 1),
            })
        };
        let rep: usize = parse_field(next_field("run_id")?, csv_path, i)?;
        let evaluations: usize = parse_field(next_field("evaluations")?, csv_path, i)?;
        let raw: f64 = parse_field(next_field("raw_y")?, csv_path, i)?;
        let best: f64 = parse_field(next_field("best_so_far")?, csv_path, i)?;
        let run = runs
            .iter_mut()
            .find(|r| r.repetition == rep)
            .ok_or_else(|| Error::MalformedRunLog {
                path: csv_path.to_path_buf(),
                message: format!("line {}: run_id {rep} absent from sidecar", i + 1),
            })?;
        run.entries.push(LogEntry {
            evaluations,
            raw,
            best,
        });
    }
    Ok((sidecar, runs))
}

fn parse_field<T: std::str::FromStr>(s: &str, path: &Path, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::MalformedRunLog {
        path: path.to_path_buf(),
        message: format!("line {}: bad field '{s}'", line + 1),
    })
}

/// Loads every cell (`*.csv` with a sidecar) in a directory, sorted by file
/// name for determinism.
pub fn read_log_dir(dir: &Path) -> Result<Vec<(CellSidecar, Vec<RunLog>)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_cell(p)).collect()
}
