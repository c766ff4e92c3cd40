//! Numerical laboratory for state-space graph networks.
//!
//! The crate implements message-passing layers (GCN, GAT, exact-k-hop) wrapped
//! in a linear state-space update `H(k+1)^T = Λ H(k)^T + B F(H(k), k)^T`,
//! together with the spectral machinery needed to study their training
//! dynamics: layer-wise Jacobian spectra, Marchenko–Pastur moment checks,
//! Dirichlet-energy propagation traces, node-to-node sensitivity bounds, and
//! a deterministic training loop with hand-written reverse-mode gradients.
//!
//! All numerical code is generic over the scalar type through the [`Real`]
//! trait; `f64` is the default used by the concrete aliases at the crate
//! root ([`Mat64`], [`Vec64`]). Everything is seed-deterministic: a single
//! `u64` seed reproduces datasets, models, and training histories bit for
//! bit on the same platform.

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod sparse;
pub mod spectral;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
pub use scalar::{ColVec, Mat, Real};

/// Dense matrix over the default `f64` scalar.
pub type Mat64 = Mat<f64>;
/// Dense matrix over `f32`.
pub type Mat32 = Mat<f32>;
/// Column vector over the default `f64` scalar.
pub type Vec64 = ColVec<f64>;
/// Column vector over `f32`.
pub type Vec32 = ColVec<f32>;

/// Node features: one row per node, one column per feature channel.
pub type FeatureMatrix<T> = Mat<T>;

/// Dense mirrors of graph operators are only materialized while the matrix
/// has at most this many entries; larger graphs stay on sparse-only paths.
pub const DENSE_MIRROR_LIMIT: usize = 4096;

/// Explicit layer Jacobians (`nd x nd` matrices) are refused above this
/// vectorized dimension; callers are directed to the operator-norm path.
pub const EXPLICIT_JACOBIAN_LIMIT: usize = 2048;
