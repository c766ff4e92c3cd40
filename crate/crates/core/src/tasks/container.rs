//! On-disk dataset container.
//!
//! A dataset is a directory with a JSON manifest plus plain-text payloads:
//!
//! ```text
//! manifest.json          task kind, name, counts, splits, metadata
//! graph_0000.edges       edge-list text (n=<count> header, one `u v` per line)
//! features_0000.csv      one node per row, comma-separated values
//! targets.csv            node or graph labels / graph scalars, one per line
//! targets_0000.csv       per-graph node-level real targets (node tasks)
//! ```
//!
//! Serialization is deterministic: identical tasks produce byte-identical
//! directories.

use super::{Splits, TaskInstance, TaskKind, Targets};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{ColVec, Mat, Real};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    task: String,
    name: String,
    graphs: usize,
    feature_dim: usize,
    targets: String,
    num_classes: Option<usize>,
    eval_node: Option<usize>,
    splits: SplitsManifest,
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitsManifest {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

fn matrix_to_csv<T: Real>(m: &Mat<T>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)].as_f64());
        }
        out.push('\n');
    }
    out
}

fn matrix_from_csv<T: Real>(text: &str) -> Result<Mat<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<T>> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>().map(T::of).map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad value {f:?}"),
                })
            })
            .collect();
        rows.push(row?);
    }
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse {
            line: 0,
            message: "ragged csv".into(),
        });
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Writes the task to `dir` (created if needed).
pub fn save_task<T: Real>(task: &TaskInstance<T>, dir: &Path) -> Result<()> {
    task.validate()?;
    std::fs::create_dir_all(dir)?;
    let targets_kind = match &task.targets {
        Targets::NodeClasses(_) => "node_classes",
        Targets::GraphClasses(_) => "graph_classes",
        Targets::NodeReals(_) => "node_reals",
        Targets::GraphReals(_) => "graph_reals",
    };
    let manifest = Manifest {
        task: task.kind.name().into(),
        name: task.name.clone(),
        graphs: task.graphs.len(),
        feature_dim: task.feature_dim(),
        targets: targets_kind.into(),
        num_classes: task.num_classes,
        eval_node: task.eval_node,
        splits: SplitsManifest {
            train: task.splits.train.clone(),
            val: task.splits.val.clone(),
            test: task.splits.test.clone(),
        },
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), manifest_json)?;
    for (i, g) in task.graphs.iter().enumerate() {
        std::fs::write(dir.join(format!("graph_{i:04}.edges")), g.to_edge_list_text())?;
        std::fs::write(
            dir.join(format!("features_{i:04}.csv")),
            matrix_to_csv(&task.features[i]),
        )?;
    }
    match &task.targets {
        Targets::NodeClasses(labels) | Targets::GraphClasses(labels) => {
            let mut out = String::new();
            for l in labels {
                let _ = writeln!(out, "{l}");
            }
            std::fs::write(dir.join("targets.csv"), out)?;
        }
        Targets::GraphReals(ys) => {
            let mut out = String::new();
            for y in ys {
                let _ = writeln!(out, "{}", y.as_f64());
            }
            std::fs::write(dir.join("targets.csv"), out)?;
        }
        Targets::NodeReals(ys) => {
            for (i, y) in ys.iter().enumerate() {
                let mut out = String::new();
                for r in 0..y.len() {
                    let _ = writeln!(out, "{}", y[r].as_f64());
                }
                std::fs::write(dir.join(format!("targets_{i:04}.csv")), out)?;
            }
        }
    }
    Ok(())
}

/// Reads a task back from a directory written by [`save_task`].
pub fn load_task<T: Real>(dir: &Path) -> Result<TaskInstance<T>> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
            .map_err(|e| Error::Parse {
                line: 0,
                message: format!("manifest: {e}"),
            })?;
    let kind = match manifest.task.as_str() {
        "node_classification" => TaskKind::NodeClassification,
        "graph_regression" => TaskKind::GraphRegression,
        "node_regression" => TaskKind::NodeRegression,
        "ring_transfer" => TaskKind::RingTransfer,
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown task kind {other:?}"),
            })
        }
    };
    let mut graphs = Vec::with_capacity(manifest.graphs);
    let mut features = Vec::with_capacity(manifest.graphs);
    for i in 0..manifest.graphs {
        let text = std::fs::read_to_string(dir.join(format!("graph_{i:04}.edges")))?;
        graphs.push(Graph::from_edge_list_text(&text)?);
        let csv = std::fs::read_to_string(dir.join(format!("features_{i:04}.csv")))?;
        features.push(matrix_from_csv::<T>(&csv)?);
    }
    let read_labels = || -> Result<Vec<usize>> {
        let text = std::fs::read_to_string(dir.join("targets.csv"))?;
        text.lines()
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(lineno, l)| {
                l.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad label {l:?}"),
                })
            })
            .collect()
    };
    let targets = match manifest.targets.as_str() {
        "node_classes" => Targets::NodeClasses(read_labels()?),
        "graph_classes" => Targets::GraphClasses(read_labels()?),
        "graph_reals" => {
            let text = std::fs::read_to_string(dir.join("targets.csv"))?;
            let ys: Result<Vec<T>> = text
                .lines()
                .filter(|l| !l.is_empty())
                .enumerate()
                .map(|(lineno, l)| {
                    l.parse::<f64>().map(T::of).map_err(|_| Error::Parse {
                        line: lineno + 1,
                        message: format!("bad target {l:?}"),
                    })
                })
                .collect();
            Targets::GraphReals(ys?)
        }
        "node_reals" => {
            let mut ys = Vec::with_capacity(manifest.graphs);
            for i in 0..manifest.graphs {
                let m =
                    matrix_from_csv::<T>(&std::fs::read_to_string(
                        dir.join(format!("targets_{i:04}.csv")),
                    )?)?;
                ys.push(ColVec::from_fn(m.nrows(), |r, _| m[(r, 0)]));
            }
            Targets::NodeReals(ys)
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown target kind {other:?}"),
            })
        }
    };
    let task = TaskInstance {
        kind,
        name: manifest.name,
        graphs,
        features,
        targets,
        splits: Splits {
            train: manifest.splits.train,
            val: manifest.splits.val,
            test: manifest.splits.test,
        },
        num_classes: manifest.num_classes,
        eval_node: manifest.eval_node,
    };
    task.validate()?;
    Ok(task)
}
