//! Immutable undirected graphs.
//!
//! A [`Graph`] stores a deduplicated edge set, sorted neighbor lists, and the
//! degree vector. Adjacency matrices (dense or CSR) are derived on demand.
//! Graphs are immutable after construction, so all operations here are pure
//! and safe for unsynchronized concurrent reads.

mod generate;
mod normalize;
mod paths;

pub use generate::{generate, GeneratorKind, GeneratorSpec};
pub use normalize::{k_hop_adjacency, laplacian, normalized_adjacency, AdjKind, NormalizedAdjacency};
pub use paths::{bfs_distances, graph_property, PropertyKind, PropertyValue};

use crate::error::{Error, Result};
use crate::scalar::{Mat, Real};
use crate::sparse::Csr;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    degrees: Vec<usize>,
}

impl Graph {
    /// Builds a graph from raw `(u, v)` pairs on `n` nodes.
    ///
    /// Self-pairs are dropped; duplicates and reversed duplicates are merged.
    /// Indices outside `[0, n)` are an input error.
    pub fn from_edge_list(pairs: &[(usize, usize)], n: usize) -> Result<Graph> {
        if n == 0 {
            return Err(Error::invalid("graph must have at least one node"));
        }
        let mut set = BTreeSet::new();
        for &(u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                continue;
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let degrees = neighbors.iter().map(Vec::len).collect();
        Ok(Graph {
            n,
            edges,
            neighbors,
            degrees,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Dense 0/1 adjacency matrix. Symmetric with zero diagonal by
    /// construction. Materializes `n^2` entries; intended for small graphs.
    pub fn adjacency_dense<T: Real>(&self) -> Mat<T> {
        let mut a = Mat::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = T::one();
            a[(v, u)] = T::one();
        }
        a
    }

    /// Adjacency in compressed sparse row form.
    pub fn adjacency_csr<T: Real>(&self) -> Csr<T> {
        let rows = self
            .neighbors
            .iter()
            .map(|ns| ns.iter().map(|&v| (v, T::one())).collect())
            .collect();
        Csr::from_rows(self.n, rows).expect("neighbor lists are in range")
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        paths::bfs_distances(self, 0)
            .iter()
            .all(|d| d.is_some())
    }

    /// Relabels nodes: node `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::invalid("permutation length must equal node count"));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::invalid("not a permutation"));
            }
            seen[p] = true;
        }
        let pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        Graph::from_edge_list(&pairs, self.n)
    }

    /// Disjoint union. Returns the union graph plus node offsets per block
    /// (length `blocks + 1`).
    pub fn disjoint_union(graphs: &[&Graph]) -> (Graph, Vec<usize>) {
        let mut offsets = Vec::with_capacity(graphs.len() + 1);
        offsets.push(0);
        let mut n = 0;
        let mut pairs = Vec::new();
        for g in graphs {
            for &(u, v) in &g.edges {
                pairs.push((u + n, v + n));
            }
            n += g.n;
            offsets.push(n);
        }
        let union = Graph::from_edge_list(&pairs, n.max(1)).expect("offsets keep edges in range");
        (union, offsets)
    }

    /// Serializes to the edge-list text format: a `n=<count>` header followed
    /// by one `u v` pair per line.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Parses the edge-list text format. Lines starting with `#` and blank
    /// lines are ignored; the `n=<count>` header must precede any edge.
    pub fn from_edge_list_text(text: &str) -> Result<Graph> {
        let mut n: Option<usize> = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("n=") {
                n = Some(rest.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad node count {rest:?}"),
                })?);
                continue;
            }
            let count = n.ok_or_else(|| Error::Parse {
                line: lineno,
                message: "edge before n=<count> header".into(),
            })?;
            let mut it = line.split_whitespace();
            let (u, v) = match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => {
                    let u = a.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("bad node id {a:?}"),
                    })?;
                    let v = b.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("bad node id {b:?}"),
                    })?;
                    (u, v)
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "expected exactly two node ids".into(),
                    })
                }
            };
            if u >= count || v >= count {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("edge ({u}, {v}) out of range for n = {count}"),
                });
            }
            pairs.push((u, v));
        }
        let n = n.ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing n=<count> header".into(),
        })?;
        Graph::from_edge_list(&pairs, n)
    }
}
