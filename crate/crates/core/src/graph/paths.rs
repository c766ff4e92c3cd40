//! Breadth-first distances and derived graph properties.

use super::Graph;
use crate::error::{Error, Result};
use std::collections::VecDeque;

/// BFS distances from `source`; `None` marks unreachable nodes.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<Option<u32>> {
    assert!(source < g.node_count(), "source out of range");
    let mut dist = vec![None; g.node_count()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued nodes have distances");
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Distance matrix from per-source BFS; `None` marks unreachable pairs.
pub fn all_pairs_distances(g: &Graph) -> Vec<Vec<Option<u32>>> {
    (0..g.node_count()).map(|s| bfs_distances(g, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Diameter,
    Eccentricity,
    /// Single-source shortest paths from the given node.
    Sssp(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyValue {
    Scalar(u32),
    PerNode(Vec<u32>),
}

/// Exact graph properties used as regression targets.
///
/// All three require finite distances, so the graph must be connected;
/// otherwise a domain error is returned.
pub fn graph_property(g: &Graph, which: PropertyKind) -> Result<PropertyValue> {
    let finite = |d: Vec<Option<u32>>| -> Result<Vec<u32>> {
        d.into_iter()
            .map(|x| x.ok_or_else(|| Error::Domain("graph is disconnected".into())))
            .collect()
    };
    match which {
        PropertyKind::Sssp(source) => {
            if source >= g.node_count() {
                return Err(Error::invalid(format!(
                    "sssp source {source} out of range"
                )));
            }
            Ok(PropertyValue::PerNode(finite(bfs_distances(g, source))?))
        }
        PropertyKind::Eccentricity => {
            let mut ecc = Vec::with_capacity(g.node_count());
            for v in 0..g.node_count() {
                let d = finite(bfs_distances(g, v))?;
                ecc.push(d.into_iter().max().unwrap_or(0));
            }
            Ok(PropertyValue::PerNode(ecc))
        }
        PropertyKind::Diameter => {
            let mut diameter = 0;
            for v in 0..g.node_count() {
                let d = finite(bfs_distances(g, v))?;
                diameter = diameter.max(d.into_iter().max().unwrap_or(0));
            }
            Ok(PropertyValue::Scalar(diameter))
        }
    }
}
