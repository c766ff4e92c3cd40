//! Message-passing layers, the state-space wrapper, and model assembly.
//!
//! A model is an encoder, `K` coupled layers, and a readout. Each layer
//! applies a coupling `F(H) = sigma(C H W)` — where `C` is the
//! self-loop-normalized adjacency (GCN), a learned attention operator (GAT),
//! or an exact-k-hop operator — and then combines it with the previous state:
//!
//! * `ResidualMode::None`: `H' = F(H)` (a plain memoryless stack);
//! * `ResidualMode::Ssm`: `H'^T = Λ H^T + B F(H)^T` with fixed matrices
//!   `Λ` (state) and `B` (input) built from scaled random orthogonal
//!   matrices, shared across layers by default and never trained unless the
//!   explicit ablation flag is set;
//! * `ResidualMode::PlainResidual`: the `Λ = I`, `B = I` special case.
//!
//! The nonlinearity lives inside the coupling, so the state update itself is
//! purely linear and the zero state is a fixed point of every layer.

mod checkpoint;
mod forward;
mod jacobian;
pub(crate) mod layer_ops;

pub use checkpoint::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use forward::{gat_forward, gcn_forward, khop_coupling_forward, model_forward, ssm_step};
pub use jacobian::{layer_jacobian, layer_jacobian_dim};
pub(crate) use layer_ops::{coupling_jacobian_dense, layer_jvp, layer_pullback, LayerGradsPart};
pub use layer_ops::{ForwardTrace, GatTrace, LayerTrace};

use crate::error::{Error, Result};
use crate::graph::{k_hop_adjacency, normalized_adjacency, AdjKind, Graph, NormalizedAdjacency};
use crate::rng::{derive_seed, derive_seed_indexed, Prng};
use crate::scalar::{ColVec, Mat, Real};
use crate::spectral::{random_orthogonal, scale_spectral_radius};
use crate::sparse::Csr;
use std::collections::BTreeMap;

/// Elementwise nonlinearity with `sigma(0) = 0` and Lipschitz constant 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    Relu,
    Tanh,
    Identity,
}

impl Nonlinearity {
    pub fn apply<T: Real>(&self, m: &Mat<T>) -> Mat<T> {
        match self {
            Nonlinearity::Relu => m.map(|x| x.max(T::zero())),
            Nonlinearity::Tanh => m.map(|x| x.tanh()),
            Nonlinearity::Identity => m.clone(),
        }
    }

    /// Elementwise derivative at the given pre-activations. The ReLU
    /// subgradient at exactly 0 is fixed to 0 for determinism.
    pub fn derivative<T: Real>(&self, pre: &Mat<T>) -> Mat<T> {
        match self {
            Nonlinearity::Relu => pre.map(|x| if x > T::zero() { T::one() } else { T::zero() }),
            Nonlinearity::Tanh => pre.map(|x| {
                let t = x.tanh();
                T::one() - t * t
            }),
            Nonlinearity::Identity => Mat::from_element(pre.nrows(), pre.ncols(), T::one()),
        }
    }

    /// Lipschitz constant `c_sigma`; 1 for all supported choices.
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Relu => "relu",
            Nonlinearity::Tanh => "tanh",
            Nonlinearity::Identity => "identity",
        }
    }
}

/// GAT attention vectors (single head).
#[derive(Debug, Clone, PartialEq)]
pub struct Attention<T> {
    pub a_src: ColVec<T>,
    pub a_dst: ColVec<T>,
}

/// Trainable per-layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weight: Mat<T>,
    pub attention: Option<Attention<T>>,
    pub sigma: Nonlinearity,
}

/// Which operator couples node states in a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Self-loop-normalized adjacency.
    Gcn,
    /// Single-head attention over `N(u) ∪ {u}` with LeakyReLU(0.2) scores.
    Gat,
    /// Exact-distance-k normalized adjacency (no self loops; self-information
    /// flows only through the state path).
    KHop(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub kind: CouplingKind,
    pub params: LayerParams<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    None,
    Ssm,
    PlainResidual,
}

impl ResidualMode {
    pub fn name(&self) -> &'static str {
        match self {
            ResidualMode::None => "none",
            ResidualMode::Ssm => "ssm",
            ResidualMode::PlainResidual => "plain_residual",
        }
    }
}

/// Construction recipe for the fixed state matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmConfig {
    /// Target spectral radius of the state matrix Λ.
    pub state_radius: f64,
    /// Target spectral radius of the input matrix B.
    pub input_radius: f64,
    /// When set, B is the identity (the "without B" ablation); the
    /// `input_radius` is ignored.
    pub identity_input: bool,
    pub seed: u64,
    /// One (Λ, B) pair reused at every layer.
    pub shared: bool,
    /// Λ and B receive gradients (ablation only).
    pub trainable: bool,
}

impl Default for SsmConfig {
    fn default() -> Self {
        SsmConfig {
            state_radius: 1.0,
            input_radius: 0.1,
            identity_input: false,
            seed: 0,
            shared: true,
            trainable: false,
        }
    }
}

/// Materialized state matrices of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmPair<T> {
    /// Λ, applied to the previous state.
    pub state: Mat<T>,
    /// B, applied to the coupling output.
    pub input: Mat<T>,
}

impl<T: Real> SsmPair<T> {
    pub fn identity(d: usize) -> Self {
        SsmPair {
            state: Mat::identity(d, d),
            input: Mat::identity(d, d),
        }
    }

    /// Builds the pair from a config: a Haar-random orthogonal matrix scaled
    /// to the target spectral radius (exactly, since all singular values and
    /// eigenvalue moduli of an orthogonal matrix are 1).
    pub fn materialize(cfg: &SsmConfig, d: usize, layer: Option<usize>) -> Result<Self> {
        if cfg.state_radius < 0.0 || cfg.input_radius < 0.0 {
            return Err(Error::invalid("spectral radii must be >= 0"));
        }
        let seed_for = |tag: &str| match layer {
            Some(k) => derive_seed_indexed(cfg.seed, tag, k),
            None => derive_seed(cfg.seed, tag),
        };
        let scaled = |tag: &str, radius: f64| -> Result<Mat<T>> {
            let q = random_orthogonal::<T>(d, seed_for(tag))?;
            scale_spectral_radius(&q, radius)
        };
        let state = scaled("lambda", cfg.state_radius)?;
        let input = if cfg.identity_input {
            Mat::identity(d, d)
        } else {
            scaled("b", cfg.input_radius)?
        };
        Ok(SsmPair { state, input })
    }
}

/// How the state matrices are stored across layers.
#[derive(Debug, Clone, PartialEq)]
pub enum SsmStorage<T> {
    Absent,
    Shared(SsmPair<T>),
    PerLayer(Vec<SsmPair<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Readout<T> {
    /// Per-node linear map.
    Node { weight: Mat<T>, bias: Option<ColVec<T>> },
    /// Mean-pool node states per graph, then a linear map.
    GraphMean { weight: Mat<T>, bias: Option<ColVec<T>> },
}

impl<T: Real> Readout<T> {
    pub fn weight(&self) -> &Mat<T> {
        match self {
            Readout::Node { weight, .. } | Readout::GraphMean { weight, .. } => weight,
        }
    }
}

/// Ordered stack: encoder, K coupled layers, readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub encoder: Mat<T>,
    pub layers: Vec<Layer<T>>,
    pub ssm: SsmStorage<T>,
    pub residual: ResidualMode,
    pub readout: Readout<T>,
    /// Recorded construction recipe, kept for checkpoints and reporting.
    pub ssm_config: Option<SsmConfig>,
}

impl<T: Real> Model<T> {
    pub fn d_in(&self) -> usize {
        self.encoder.nrows()
    }

    pub fn d_h(&self) -> usize {
        self.encoder.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.readout.weight().ncols()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// State matrices used by layer `k`, if the residual mode has a state path.
    pub fn pair_for(&self, k: usize) -> Option<&SsmPair<T>> {
        match &self.ssm {
            SsmStorage::Absent => None,
            SsmStorage::Shared(p) => Some(p),
            SsmStorage::PerLayer(ps) => ps.get(k),
        }
    }

    /// Checks the dimension chain encoder -> layers -> readout.
    pub fn validate(&self) -> Result<()> {
        let d_h = self.d_h();
        for (k, layer) in self.layers.iter().enumerate() {
            let w = &layer.params.weight;
            if w.nrows() != d_h || w.ncols() != d_h {
                return Err(Error::Config(format!(
                    "layer {k} weight is {}x{}, expected {d_h}x{d_h}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            if matches!(layer.kind, CouplingKind::Gat) {
                let att = layer.params.attention.as_ref().ok_or_else(|| {
                    Error::Config(format!("layer {k} is GAT but has no attention vectors"))
                })?;
                if att.a_src.len() != d_h || att.a_dst.len() != d_h {
                    return Err(Error::Config(format!(
                        "layer {k} attention vectors must have length {d_h}"
                    )));
                }
            }
            if let CouplingKind::KHop(hop) = layer.kind {
                if hop == 0 {
                    return Err(Error::Config(format!("layer {k} k-hop distance must be >= 1")));
                }
            }
        }
        match (&self.residual, &self.ssm) {
            (ResidualMode::None, SsmStorage::Absent) => {}
            (ResidualMode::None, _) => {
                return Err(Error::Config("residual mode none must not carry state matrices".into()))
            }
            (_, SsmStorage::Absent) => {
                return Err(Error::Config("state residual modes need state matrices".into()))
            }
            (_, SsmStorage::Shared(p)) => check_pair(p, d_h, None)?,
            (_, SsmStorage::PerLayer(ps)) => {
                if ps.len() != self.layers.len() {
                    return Err(Error::Config("per-layer state matrices must match depth".into()));
                }
                for (k, p) in ps.iter().enumerate() {
                    check_pair(p, d_h, Some(k))?;
                }
            }
        }
        if self.readout.weight().nrows() != d_h {
            return Err(Error::Config(format!(
                "readout expects {} input features, encoder produces {d_h}",
                self.readout.weight().nrows()
            )));
        }
        Ok(())
    }

    /// Hop distances required by the layer stack.
    pub fn hops(&self) -> Vec<usize> {
        let mut hops: Vec<usize> = self
            .layers
            .iter()
            .filter_map(|l| match l.kind {
                CouplingKind::KHop(h) => Some(h),
                _ => None,
            })
            .collect();
        hops.sort_unstable();
        hops.dedup();
        hops
    }
}

fn check_pair<T: Real>(p: &SsmPair<T>, d_h: usize, layer: Option<usize>) -> Result<()> {
    let ok = p.state.nrows() == d_h
        && p.state.ncols() == d_h
        && p.input.nrows() == d_h
        && p.input.ncols() == d_h;
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "state matrices{} must be {d_h}x{d_h}",
            layer.map(|k| format!(" of layer {k}")).unwrap_or_default()
        )))
    }
}

/// Coupling choice at the model level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingConfig {
    Gcn,
    Gat,
    /// Layer `k` (1-based) aggregates the exact-distance-`k` neighborhood.
    KHopByLayer,
}

impl CouplingConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingConfig::Gcn => "gcn",
            CouplingConfig::Gat => "gat",
            CouplingConfig::KHopByLayer => "khop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutKind {
    Node,
    GraphMean,
}

/// Model construction recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_in: usize,
    pub d_h: usize,
    pub d_out: usize,
    pub depth: usize,
    pub coupling: CouplingConfig,
    pub sigma: Nonlinearity,
    pub residual: ResidualMode,
    pub ssm: SsmConfig,
    pub readout: ReadoutKind,
    pub readout_bias: bool,
    /// Coupling weights are i.i.d. `N(0, weight_scale^2 / fan_in)`.
    pub weight_scale: f64,
    /// Reuse one coupling's parameters at every layer.
    pub shared_weights: bool,
}

impl ModelConfig {
    pub fn new(d_in: usize, d_h: usize, d_out: usize, depth: usize) -> Self {
        ModelConfig {
            d_in,
            d_h,
            d_out,
            depth,
            coupling: CouplingConfig::Gcn,
            sigma: Nonlinearity::Tanh,
            residual: ResidualMode::Ssm,
            ssm: SsmConfig::default(),
            readout: ReadoutKind::Node,
            readout_bias: true,
            weight_scale: 1.0,
            shared_weights: false,
        }
    }
}

/// Draws a model at initialization. All weights are i.i.d.
/// `N(0, weight_scale^2 / fan_in)`; readout biases start at zero; state
/// matrices follow the [`SsmConfig`] recipe.
pub fn init_model<T: Real>(cfg: &ModelConfig, seed: u64) -> Result<Model<T>> {
    if cfg.d_in == 0 || cfg.d_h == 0 || cfg.d_out == 0 {
        return Err(Error::Config("model dimensions must be positive".into()));
    }
    let normal = |tag: &str, rows: usize, cols: usize, fan_in: usize| -> Mat<T> {
        let mut rng = Prng::seed_from(derive_seed(seed, tag));
        rng.normal_matrix(rows, cols, cfg.weight_scale / (fan_in as f64).sqrt())
    };
    let encoder = normal("encoder", cfg.d_in, cfg.d_h, cfg.d_in);
    let mut layers = Vec::with_capacity(cfg.depth);
    for k in 0..cfg.depth {
        let draw_index = if cfg.shared_weights { 0 } else { k };
        let mut rng = Prng::seed_from(derive_seed_indexed(seed, "layer", draw_index));
        let std_dev = cfg.weight_scale / (cfg.d_h as f64).sqrt();
        let weight: Mat<T> = rng.normal_matrix(cfg.d_h, cfg.d_h, std_dev);
        let kind = match cfg.coupling {
            CouplingConfig::Gcn => CouplingKind::Gcn,
            CouplingConfig::Gat => CouplingKind::Gat,
            CouplingConfig::KHopByLayer => CouplingKind::KHop(k + 1),
        };
        let attention = matches!(kind, CouplingKind::Gat).then(|| Attention {
            a_src: rng.normal_vector(cfg.d_h, std_dev),
            a_dst: rng.normal_vector(cfg.d_h, std_dev),
        });
        layers.push(Layer {
            kind,
            params: LayerParams {
                weight,
                attention,
                sigma: cfg.sigma,
            },
        });
    }
    let ssm = match cfg.residual {
        ResidualMode::None => SsmStorage::Absent,
        ResidualMode::PlainResidual => SsmStorage::Shared(SsmPair::identity(cfg.d_h)),
        ResidualMode::Ssm => {
            if cfg.ssm.shared {
                SsmStorage::Shared(SsmPair::materialize(&cfg.ssm, cfg.d_h, None)?)
            } else {
                let pairs: Result<Vec<_>> = (0..cfg.depth)
                    .map(|k| SsmPair::materialize(&cfg.ssm, cfg.d_h, Some(k)))
                    .collect();
                SsmStorage::PerLayer(pairs?)
            }
        }
    };
    let readout_weight = normal("readout", cfg.d_h, cfg.d_out, cfg.d_h);
    let bias = cfg.readout_bias.then(|| ColVec::zeros(cfg.d_out));
    let readout = match cfg.readout {
        ReadoutKind::Node => Readout::Node {
            weight: readout_weight,
            bias,
        },
        ReadoutKind::GraphMean => Readout::GraphMean {
            weight: readout_weight,
            bias,
        },
    };
    let model = Model {
        encoder,
        layers,
        ssm,
        residual: cfg.residual,
        readout,
        ssm_config: matches!(cfg.residual, ResidualMode::Ssm).then_some(cfg.ssm),
    };
    model.validate()?;
    Ok(model)
}

/// Mean-pool segment boundaries for graph-level readout over disjoint
/// unions: graph `g` owns node rows `offsets[g]..offsets[g+1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pooling {
    pub offsets: Vec<usize>,
}

impl Pooling {
    pub fn single(n: usize) -> Self {
        Pooling { offsets: vec![0, n] }
    }

    pub fn graphs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn graph_of_node(&self, node: usize) -> usize {
        match self.offsets.binary_search(&(node + 1)) {
            Ok(i) | Err(i) => i - 1,
        }
    }
}

/// A graph together with the normalized operators a model needs, computed
/// once and shared read-only across forward passes.
#[derive(Debug)]
pub struct PreparedGraph<T> {
    pub graph: Graph,
    pub sym: NormalizedAdjacency<T>,
    pub sym_self: NormalizedAdjacency<T>,
    pub khop: BTreeMap<usize, NormalizedAdjacency<T>>,
    pub pooling: Pooling,
}

impl<T: Real> Clone for PreparedGraph<T> {
    fn clone(&self) -> Self {
        PreparedGraph {
            graph: self.graph.clone(),
            sym: self.sym.clone(),
            sym_self: self.sym_self.clone(),
            khop: self.khop.clone(),
            pooling: self.pooling.clone(),
        }
    }
}

impl<T: Real> PreparedGraph<T> {
    pub fn new(graph: Graph) -> Result<Self> {
        Self::with_hops(graph, &[])
    }

    pub fn with_hops(graph: Graph, hops: &[usize]) -> Result<Self> {
        let sym = normalized_adjacency::<T>(&graph, AdjKind::Sym)?;
        let sym_self = normalized_adjacency::<T>(&graph, AdjKind::SymSelfLoops)?;
        let mut khop = BTreeMap::new();
        for &h in hops {
            khop.insert(h, k_hop_adjacency::<T>(&graph, h)?);
        }
        let pooling = Pooling::single(graph.node_count());
        Ok(PreparedGraph {
            graph,
            sym,
            sym_self,
            khop,
            pooling,
        })
    }

    pub fn for_model(graph: Graph, model: &Model<T>) -> Result<Self> {
        Self::with_hops(graph, &model.hops())
    }

    /// Block-diagonal union of many graphs; k-hop operators are built per
    /// block, so distances never leak across graphs and the quadratic
    /// all-pairs work stays per-graph.
    pub fn union(graphs: &[&Graph], hops: &[usize]) -> Result<Self> {
        let (graph, offsets) = Graph::disjoint_union(graphs);
        let stack = |parts: Vec<NormalizedAdjacency<T>>, kind: AdjKind| {
            let csrs: Vec<&Csr<T>> = parts.iter().map(|p| p.csr()).collect();
            NormalizedAdjacency::from_csr(kind, Csr::block_diag(&csrs))
        };
        let sym = stack(
            graphs
                .iter()
                .map(|g| normalized_adjacency::<T>(g, AdjKind::Sym))
                .collect::<Result<_>>()?,
            AdjKind::Sym,
        );
        let sym_self = stack(
            graphs
                .iter()
                .map(|g| normalized_adjacency::<T>(g, AdjKind::SymSelfLoops))
                .collect::<Result<_>>()?,
            AdjKind::SymSelfLoops,
        );
        let mut khop = BTreeMap::new();
        for &h in hops {
            khop.insert(
                h,
                stack(
                    graphs
                        .iter()
                        .map(|g| k_hop_adjacency::<T>(g, h))
                        .collect::<Result<_>>()?,
                    AdjKind::KHop(h),
                ),
            );
        }
        Ok(PreparedGraph {
            graph,
            sym,
            sym_self,
            khop,
            pooling: Pooling { offsets },
        })
    }

    /// The coupling operator for a layer kind. GAT has no fixed operator
    /// (attention is recomputed from the state), so only GCN and k-hop
    /// resolve here.
    pub fn coupling_operator(&self, kind: CouplingKind) -> Result<&NormalizedAdjacency<T>> {
        match kind {
            CouplingKind::Gcn => Ok(&self.sym_self),
            CouplingKind::KHop(h) => self.khop.get(&h).ok_or_else(|| {
                Error::Config(format!("prepared graph is missing the {h}-hop operator"))
            }),
            CouplingKind::Gat => Err(Error::Config(
                "GAT coupling has no precomputed operator".into(),
            )),
        }
    }
}
