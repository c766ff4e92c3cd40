//! Graph-property-prediction datasets with exact BFS oracles as targets.
//!
//! Graphs are drawn round-robin over ten generator families (Erdős–Rényi,
//! Barabási–Albert, grid, caveman, tree, ladder, line, star, caterpillar,
//! lobster), each sized to land between 25 and 35 nodes. Only connected
//! instances are kept; a family is resampled up to 100 times before the
//! build fails loudly, since diameter and eccentricity are undefined on
//! disconnected graphs. Node features are uniform in `[0, 1)`; the
//! single-source-shortest-path task marks its uniformly chosen source node
//! through an extra indicator channel.

use super::{Splits, TaskInstance, TaskKind, Targets};
use crate::error::{Error, Result};
use crate::graph::{
    generate, graph_property, GeneratorKind, GeneratorSpec, PropertyKind, PropertyValue,
};
use crate::rng::{derive_seed, derive_seed_indexed, Prng};
use crate::scalar::{ColVec, Mat, Real};

/// Paper-scale split sizes.
pub const GPP_PAPER_TRAIN: usize = 5120;
pub const GPP_PAPER_VAL: usize = 640;
pub const GPP_PAPER_TEST: usize = 1280;

const RESAMPLE_BUDGET: usize = 100;
const FAMILIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GppKind {
    Diameter,
    Sssp,
    Eccentricity,
}

impl GppKind {
    pub fn name(&self) -> &'static str {
        match self {
            GppKind::Diameter => "diameter",
            GppKind::Sssp => "sssp",
            GppKind::Eccentricity => "eccentricity",
        }
    }
}

/// One 25-35 node spec for family index `f`, parameterized by the sampler.
fn family_spec(f: usize, rng: &mut Prng, seed: u64) -> GeneratorSpec {
    let n = 25 + rng.below(11); // 25..=35
    let kind = match f {
        0 => GeneratorKind::ErdosRenyi {
            n,
            // dense enough that connected draws are common
            p: 0.12 + 0.1 * rng.uniform_f64(),
        },
        1 => GeneratorKind::BarabasiAlbert {
            n,
            m: 1 + rng.below(3),
        },
        2 => {
            // w*h in [25, 35]
            let (w, h) = [(5, 5), (5, 6), (5, 7), (4, 7), (4, 8), (3, 9), (3, 11), (6, 5)]
                [rng.below(8)];
            GeneratorKind::Grid { w, h }
        }
        3 => {
            let (cliques, size) = [(5, 5), (5, 6), (5, 7), (6, 5), (7, 5), (4, 7), (8, 4)]
                [rng.below(7)];
            GeneratorKind::Caveman { cliques, size }
        }
        4 => GeneratorKind::Tree { n },
        5 => GeneratorKind::Ladder {
            rungs: 13 + rng.below(5), // 26..=34 nodes
        },
        6 => GeneratorKind::Line { n },
        7 => GeneratorKind::Star { n },
        8 => {
            let spine = 8 + rng.below(8);
            GeneratorKind::Caterpillar {
                spine,
                leaves: n - spine,
            }
        }
        _ => {
            let spine = 6 + rng.below(6);
            let leaves = (n - spine) / 2;
            GeneratorKind::Lobster {
                spine,
                leaves,
                extensions: n - spine - leaves,
            }
        }
    };
    GeneratorSpec { kind, seed }
}

fn connected_sample(f: usize, index: usize, seed: u64) -> Result<crate::graph::Graph> {
    for attempt in 0..RESAMPLE_BUDGET {
        let sub = derive_seed_indexed(seed, "gpp-graph", index * RESAMPLE_BUDGET + attempt);
        let mut rng = Prng::seed_from(sub);
        let spec = family_spec(f, &mut rng, sub);
        let g = generate(&spec)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Domain(format!(
        "family {f}: no connected graph within {RESAMPLE_BUDGET} resamples"
    )))
}

/// Builds a GPP dataset. `(n_train, n_val, n_test)` defaults mirror the
/// paper-scale sizes through the exported constants; desk-scale runs pass
/// smaller counts.
pub fn make_gpp<T: Real>(
    task: GppKind,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<TaskInstance<T>> {
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::invalid("split sizes must be >= 1"));
    }
    let total = n_train + n_val + n_test;
    let mut graphs = Vec::with_capacity(total);
    let mut features = Vec::with_capacity(total);
    let mut node_targets: Vec<ColVec<T>> = Vec::new();
    let mut graph_targets: Vec<T> = Vec::new();
    let mut feature_rng = Prng::seed_from(derive_seed(seed, "gpp-features"));
    let mut source_rng = Prng::seed_from(derive_seed(seed, "gpp-sources"));
    for index in 0..total {
        let g = connected_sample(index % FAMILIES, index, seed)?;
        let n = g.node_count();
        let d = if matches!(task, GppKind::Sssp) { 2 } else { 1 };
        let mut x = Mat::<T>::zeros(n, d);
        for u in 0..n {
            x[(u, 0)] = feature_rng.uniform();
        }
        match task {
            GppKind::Diameter => {
                let PropertyValue::Scalar(diam) = graph_property(&g, PropertyKind::Diameter)?
                else {
                    unreachable!()
                };
                graph_targets.push(T::of(diam as f64));
            }
            GppKind::Eccentricity => {
                let PropertyValue::PerNode(ecc) =
                    graph_property(&g, PropertyKind::Eccentricity)?
                else {
                    unreachable!()
                };
                node_targets.push(ColVec::from_fn(n, |i, _| T::of(ecc[i] as f64)));
            }
            GppKind::Sssp => {
                let source = source_rng.below(n);
                x[(source, 1)] = T::one();
                let PropertyValue::PerNode(dist) =
                    graph_property(&g, PropertyKind::Sssp(source))?
                else {
                    unreachable!()
                };
                node_targets.push(ColVec::from_fn(n, |i, _| T::of(dist[i] as f64)));
            }
        }
        graphs.push(g);
        features.push(x);
    }
    let (kind, targets) = match task {
        GppKind::Diameter => (TaskKind::GraphRegression, Targets::GraphReals(graph_targets)),
        GppKind::Sssp | GppKind::Eccentricity => {
            (TaskKind::NodeRegression, Targets::NodeReals(node_targets))
        }
    };
    let splits = Splits {
        train: (0..n_train).collect(),
        val: (n_train..n_train + n_val).collect(),
        test: (n_train + n_val..total).collect(),
    };
    let instance = TaskInstance {
        kind,
        name: format!("gpp_{}", task.name()),
        graphs,
        features,
        targets,
        splits,
        num_classes: None,
        eval_node: None,
    };
    instance.validate()?;
    Ok(instance)
}
