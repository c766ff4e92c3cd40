//! Deterministic citation-style surrogate task.
//!
//! Builds a node-classification instance with the gross shape of a citation
//! network: uneven class sizes, homophilous degree-skewed edges grown by
//! preferential attachment (which yields many leaf nodes), and sparse binary
//! bag-of-words features drawn from per-class prototype word sets. Useful as
//! a stand-in at the same scale when the real raw files are not on disk;
//! loaders and experiments treat it as just another task.

use super::cora::{split_cora, SplitScheme};
use super::{TaskInstance, TaskKind, Targets};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, Prng};
use crate::scalar::{Mat, Real};

/// Relative class masses, echoing the skew of real citation data.
const CLASS_WEIGHTS: [f64; 7] = [0.30, 0.16, 0.15, 0.13, 0.11, 0.08, 0.07];
const HOMOPHILY: f64 = 0.8;
const PROTOTYPE_WORDS: usize = 30;
const WORD_FIDELITY: f64 = 0.75;

pub fn make_citation_synthetic<T: Real>(
    n: usize,
    d: usize,
    n_classes: usize,
    seed: u64,
) -> Result<TaskInstance<T>> {
    if n_classes < 2 || n_classes > CLASS_WEIGHTS.len() {
        return Err(Error::invalid(format!(
            "n_classes must be in [2, {}]",
            CLASS_WEIGHTS.len()
        )));
    }
    if d < n_classes * PROTOTYPE_WORDS {
        return Err(Error::invalid(format!(
            "need d >= {} so class prototypes stay mostly disjoint",
            n_classes * PROTOTYPE_WORDS
        )));
    }
    if n < n_classes * 40 {
        return Err(Error::invalid("need at least 40 nodes per class"));
    }
    let mut label_rng = Prng::seed_from(derive_seed(seed, "citation-labels"));
    let weight_total: f64 = CLASS_WEIGHTS[..n_classes].iter().sum();
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let mut u = label_rng.uniform_f64() * weight_total;
            for (c, w) in CLASS_WEIGHTS[..n_classes].iter().enumerate() {
                if u < *w {
                    return c;
                }
                u -= w;
            }
            n_classes - 1
        })
        .collect();

    // homophilous preferential attachment; per-class endpoint multisets act
    // as the degree-proportional samplers
    let mut edge_rng = Prng::seed_from(derive_seed(seed, "citation-edges"));
    let mut endpoints_by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    let mut seen_by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for v in 0..n {
        let own = labels[v];
        if v > 0 {
            let degree_budget = match edge_rng.below(20) {
                0..=7 => 1,
                8..=15 => 2,
                16..=18 => 3,
                _ => 4,
            };
            for _ in 0..degree_budget {
                let mut class = own;
                if edge_rng.uniform_f64() >= HOMOPHILY {
                    class = edge_rng.below(n_classes);
                }
                // fall back to any earlier node when the class is still empty
                let target = if !endpoints_by_class[class].is_empty() {
                    endpoints_by_class[class][edge_rng.below(endpoints_by_class[class].len())]
                } else if !seen_by_class[class].is_empty() {
                    seen_by_class[class][edge_rng.below(seen_by_class[class].len())]
                } else {
                    edge_rng.below(v)
                };
                if target != v {
                    pairs.push((v, target));
                    endpoints_by_class[labels[target]].push(target);
                    endpoints_by_class[own].push(v);
                }
            }
        }
        seen_by_class[own].push(v);
    }
    let graph = Graph::from_edge_list(&pairs, n)?;

    // sparse binary features from class prototypes, row-normalized
    let mut word_rng = Prng::seed_from(derive_seed(seed, "citation-words"));
    let prototypes: Vec<Vec<usize>> = (0..n_classes)
        .map(|c| {
            (0..PROTOTYPE_WORDS)
                .map(|i| (c * PROTOTYPE_WORDS + i + word_rng.below(3) * 0) % d)
                .collect()
        })
        .collect();
    let mut features = Mat::<T>::zeros(n, d);
    for v in 0..n {
        let words = 8 + word_rng.below(12);
        let mut row = vec![false; d];
        for _ in 0..words {
            let w = if word_rng.uniform_f64() < WORD_FIDELITY {
                prototypes[labels[v]][word_rng.below(PROTOTYPE_WORDS)]
            } else {
                word_rng.below(d)
            };
            row[w] = true;
        }
        let count = row.iter().filter(|&&b| b).count().max(1);
        let value = T::one() / T::of(count as f64);
        for (w, &set) in row.iter().enumerate() {
            if set {
                features[(v, w)] = value;
            }
        }
    }

    let splits = split_cora(&labels, SplitScheme::PlanetoidLike)?;
    let task = TaskInstance {
        kind: TaskKind::NodeClassification,
        name: format!("citation_synthetic_n{n}"),
        graphs: vec![graph],
        features: vec![features],
        targets: Targets::NodeClasses(labels),
        splits,
        num_classes: Some(n_classes),
        eval_node: None,
    };
    task.validate()?;
    Ok(task)
}
