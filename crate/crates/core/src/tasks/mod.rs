//! Dataset construction and ingestion.

mod container;
mod cora;
mod gpp;
mod ring;
mod synthetic;

pub use container::{load_task, save_task};
pub use cora::{load_cora, split_cora, SplitScheme};
pub use gpp::{make_gpp, GppKind, GPP_PAPER_TEST, GPP_PAPER_TRAIN, GPP_PAPER_VAL};
pub use ring::make_ring_transfer;
pub use synthetic::make_citation_synthetic;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{ColVec, Mat, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// One graph, one label per node, node splits.
    NodeClassification,
    /// Many graphs, one real target per graph.
    GraphRegression,
    /// Many graphs, one real target per node.
    NodeRegression,
    /// Many cycle graphs; the class planted at the source node is predicted
    /// at the antipodal target node.
    RingTransfer,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::NodeClassification => "node_classification",
            TaskKind::GraphRegression => "graph_regression",
            TaskKind::NodeRegression => "node_regression",
            TaskKind::RingTransfer => "ring_transfer",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets<T> {
    /// One label per node of the single graph.
    NodeClasses(Vec<usize>),
    /// One label per graph.
    GraphClasses(Vec<usize>),
    /// One real vector per graph (entry per node).
    NodeReals(Vec<ColVec<T>>),
    /// One real scalar per graph.
    GraphReals(Vec<T>),
}

/// Train/val/test index sets; node indices for single-graph tasks, graph
/// indices otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn assert_disjoint(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for idx in self.train.iter().chain(&self.val).chain(&self.test) {
            if !seen.insert(*idx) {
                return Err(Error::invalid(format!("splits overlap at index {idx}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance<T> {
    pub kind: TaskKind,
    pub name: String,
    pub graphs: Vec<Graph>,
    /// Per-graph feature matrices, row count = node count.
    pub features: Vec<Mat<T>>,
    pub targets: Targets<T>,
    pub splits: Splits,
    pub num_classes: Option<usize>,
    /// For ring transfer: the within-graph index of the readout node.
    pub eval_node: Option<usize>,
}

impl<T: Real> TaskInstance<T> {
    pub fn feature_dim(&self) -> usize {
        self.features.first().map(|f| f.ncols()).unwrap_or(0)
    }

    /// Output dimension a model must produce for this task.
    pub fn output_dim(&self) -> usize {
        match self.kind {
            TaskKind::NodeClassification | TaskKind::RingTransfer => {
                self.num_classes.unwrap_or(1)
            }
            TaskKind::GraphRegression | TaskKind::NodeRegression => 1,
        }
    }

    /// Validates the structural invariants shared by all tasks.
    pub fn validate(&self) -> Result<()> {
        if self.graphs.len() != self.features.len() {
            return Err(Error::invalid("one feature matrix per graph required"));
        }
        for (g, f) in self.graphs.iter().zip(&self.features) {
            if g.node_count() != f.nrows() {
                return Err(Error::invalid(format!(
                    "feature rows {} != node count {}",
                    f.nrows(),
                    g.node_count()
                )));
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric("non-finite feature".into()));
            }
        }
        match (&self.kind, &self.targets) {
            (TaskKind::NodeClassification, Targets::NodeClasses(labels)) => {
                if self.graphs.len() != 1 {
                    return Err(Error::invalid("node classification expects one graph"));
                }
                if labels.len() != self.graphs[0].node_count() {
                    return Err(Error::invalid("one label per node required"));
                }
            }
            (TaskKind::RingTransfer, Targets::GraphClasses(labels))
            | (TaskKind::NodeClassification, Targets::GraphClasses(labels)) => {
                if labels.len() != self.graphs.len() {
                    return Err(Error::invalid("one label per graph required"));
                }
            }
            (TaskKind::GraphRegression, Targets::GraphReals(ys)) => {
                if ys.len() != self.graphs.len() {
                    return Err(Error::invalid("one target per graph required"));
                }
                if ys.iter().any(|y| !y.is_finite()) {
                    return Err(Error::Numeric("non-finite target".into()));
                }
            }
            (TaskKind::NodeRegression, Targets::NodeReals(ys)) => {
                if ys.len() != self.graphs.len() {
                    return Err(Error::invalid("one target vector per graph required"));
                }
                for (g, y) in self.graphs.iter().zip(ys) {
                    if g.node_count() != y.len() {
                        return Err(Error::invalid("target length != node count"));
                    }
                    if y.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Numeric("non-finite target".into()));
                    }
                }
            }
            _ => return Err(Error::invalid("targets do not match task kind")),
        }
        self.splits.assert_disjoint()?;
        let max_index = match self.kind {
            TaskKind::NodeClassification => self.graphs[0].node_count(),
            _ => self.graphs.len(),
        };
        for idx in self
            .splits
            .train
            .iter()
            .chain(&self.splits.val)
            .chain(&self.splits.test)
        {
            if *idx >= max_index {
                return Err(Error::invalid(format!("split index {idx} out of range")));
            }
        }
        Ok(())
    }
}
