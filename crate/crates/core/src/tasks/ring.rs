//! RingTransfer: long-range class transfer across a cycle.
//!
//! Each sample is an `n`-cycle. Node 0 (the source) carries a one-hot class
//! in the first `n_classes` feature channels; node `n/2` (the antipodal
//! target, at shortest-path distance `n/2`) carries a 1 in a dedicated
//! marker channel; every other entry is zero. The label is the source class
//! and is read out at the target node, so solving the task requires moving
//! information across `n/2` hops. Samples are class-balanced up to rounding
//! and the class sequence is seed-deterministic. Fixing the source and
//! target positions costs no generality: the models are permutation
//! equivariant.

use super::{Splits, TaskInstance, TaskKind, Targets};
use crate::error::{Error, Result};
use crate::graph::{generate, GeneratorKind, GeneratorSpec};
use crate::rng::{derive_seed, Prng};
use crate::scalar::{Mat, Real};

pub fn make_ring_transfer<T: Real>(
    n_nodes: usize,
    n_classes: usize,
    n_samples: usize,
    seed: u64,
) -> Result<TaskInstance<T>> {
    if n_nodes < 4 || n_nodes % 2 != 0 {
        return Err(Error::invalid("ring transfer needs an even n_nodes >= 4"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("ring transfer needs n_classes >= 2"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("ring transfer needs n_samples >= 1"));
    }
    let target_node = n_nodes / 2;
    let d = n_classes + 1; // one-hot classes plus the target marker channel
    let cycle = generate(&GeneratorSpec {
        kind: GeneratorKind::Ring { n: n_nodes },
        seed: 0,
    })?;
    // balanced class sequence, then a seeded shuffle
    let mut classes: Vec<usize> = (0..n_samples).map(|i| i % n_classes).collect();
    let mut rng = Prng::seed_from(derive_seed(seed, "ring-classes"));
    rng.shuffle(&mut classes);

    let mut graphs = Vec::with_capacity(n_samples);
    let mut features = Vec::with_capacity(n_samples);
    for &class in &classes {
        let mut x = Mat::<T>::zeros(n_nodes, d);
        x[(0, class)] = T::one();
        x[(target_node, n_classes)] = T::one();
        graphs.push(cycle.clone());
        features.push(x);
    }

    // 80/10/10 split over sample order (already shuffled)
    let n_val = (n_samples / 10).max(1).min(n_samples.saturating_sub(2).max(1));
    let n_test = n_val;
    let n_train = n_samples - n_val - n_test;
    let splits = Splits {
        train: (0..n_train).collect(),
        val: (n_train..n_train + n_val).collect(),
        test: (n_train + n_val..n_samples).collect(),
    };
    let task = TaskInstance {
        kind: TaskKind::RingTransfer,
        name: format!("ring_transfer_n{n_nodes}_c{n_classes}"),
        graphs,
        features,
        targets: Targets::GraphClasses(classes),
        splits,
        num_classes: Some(n_classes),
        eval_node: Some(target_node),
    };
    task.validate()?;
    Ok(task)
}
