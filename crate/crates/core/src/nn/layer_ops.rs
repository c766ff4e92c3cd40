//! Single-layer forward, vector-Jacobian, and Jacobian-vector products.
//!
//! These primitives are shared by the training backward pass, the explicit
//! layer Jacobian, and the power-iteration operator-norm path.

use super::{CouplingKind, Layer, Model, Pooling, PreparedGraph, Readout, ResidualMode};
use crate::error::{Error, Result};
use crate::scalar::{ColVec, Mat, Real};

const LEAKY_SLOPE: f64 = 0.2;

#[inline]
fn leaky_relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::of(LEAKY_SLOPE) * x
    }
}

/// Derivative of LeakyReLU(0.2); the kink at 0 takes the negative-side slope.
#[inline]
fn leaky_relu_prime<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        T::of(LEAKY_SLOPE)
    }
}

/// One attention edge: the raw (pre-LeakyReLU) score and the softmax weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GatEdge<T> {
    pub target: usize,
    pub raw: T,
    pub alpha: T,
}

/// Attention internals kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GatTrace<T> {
    /// `Z = H W`.
    pub z: Mat<T>,
    /// Per source node, the edges over `N(u) ∪ {u}` (self last).
    pub rows: Vec<Vec<GatEdge<T>>>,
}

/// Everything the backward pass needs about one layer application.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    /// Pre-activation `C H W` (or `alpha Z` for GAT).
    pub pre: Mat<T>,
    /// Coupling output `F = sigma(pre)`.
    pub post: Mat<T>,
    pub gat: Option<GatTrace<T>>,
}

/// Full forward pass record.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    /// Model input `X`.
    pub input: Mat<T>,
    /// Hidden states `H^(0) .. H^(K)`; `hidden[0]` is the encoder output.
    pub hidden: Vec<Mat<T>>,
    pub layers: Vec<LayerTrace<T>>,
    /// Mean-pooled states for graph-level readout.
    pub pooled: Option<Mat<T>>,
    pub output: Mat<T>,
}

/// Gradients produced by one layer's pullback.
#[derive(Debug, Clone)]
pub struct LayerGradsPart<T> {
    pub weight: Mat<T>,
    pub a_src: Option<ColVec<T>>,
    pub a_dst: Option<ColVec<T>>,
    /// Gradient w.r.t. Λ (only when the state matrices are trainable).
    pub state: Option<Mat<T>>,
    /// Gradient w.r.t. B (only when the state matrices are trainable).
    pub input: Option<Mat<T>>,
}

fn check_layer_input<T: Real>(layer: &Layer<T>, n: usize, h: &Mat<T>) -> Result<()> {
    if h.nrows() != n {
        return Err(Error::dims(format!(
            "features have {} rows for a graph with {n} nodes",
            h.nrows()
        )));
    }
    if h.ncols() != layer.params.weight.nrows() {
        return Err(Error::dims(format!(
            "features have {} columns, layer weight expects {}",
            h.ncols(),
            layer.params.weight.nrows()
        )));
    }
    Ok(())
}

/// GAT attention rows at the current state: softmax over `N(u) ∪ {u}` of
/// `LeakyReLU(a_src . z_u + a_dst . z_v)`.
fn gat_attention<T: Real>(
    prep: &PreparedGraph<T>,
    z: &Mat<T>,
    a_src: &ColVec<T>,
    a_dst: &ColVec<T>,
) -> Vec<Vec<GatEdge<T>>> {
    let n = prep.graph.node_count();
    let s = z * a_src;
    let t = z * a_dst;
    let mut rows = Vec::with_capacity(n);
    for u in 0..n {
        let mut edges: Vec<GatEdge<T>> = prep
            .graph
            .neighbors(u)
            .iter()
            .copied()
            .chain(std::iter::once(u))
            .map(|v| GatEdge {
                target: v,
                raw: s[u] + t[v],
                alpha: T::zero(),
            })
            .collect();
        let max_score = edges
            .iter()
            .map(|e| leaky_relu(e.raw))
            .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b));
        let mut total = T::zero();
        for e in &mut edges {
            e.alpha = (leaky_relu(e.raw) - max_score).exp();
            total += e.alpha;
        }
        for e in &mut edges {
            e.alpha /= total;
        }
        rows.push(edges);
    }
    rows
}

/// Applies the coupling of `layer` at state `h`, returning the layer trace.
pub(crate) fn coupling_forward<T: Real>(
    layer: &Layer<T>,
    prep: &PreparedGraph<T>,
    h: &Mat<T>,
) -> Result<LayerTrace<T>> {
    check_layer_input(layer, prep.graph.node_count(), h)?;
    let params = &layer.params;
    match layer.kind {
        CouplingKind::Gcn | CouplingKind::KHop(_) => {
            let op = prep.coupling_operator(layer.kind)?;
            let mixed = op.mul(h)?;
            let pre = mixed * &params.weight;
            let post = params.sigma.apply(&pre);
            Ok(LayerTrace {
                pre,
                post,
                gat: None,
            })
        }
        CouplingKind::Gat => {
            let att = params
                .attention
                .as_ref()
                .ok_or_else(|| Error::Config("GAT layer without attention vectors".into()))?;
            let z = h * &params.weight;
            let rows = gat_attention(prep, &z, &att.a_src, &att.a_dst);
            let n = h.nrows();
            let d = z.ncols();
            let mut pre = Mat::zeros(n, d);
            for (u, edges) in rows.iter().enumerate() {
                for e in edges {
                    for c in 0..d {
                        pre[(u, c)] += e.alpha * z[(e.target, c)];
                    }
                }
            }
            let post = params.sigma.apply(&pre);
            Ok(LayerTrace {
                pre,
                post,
                gat: Some(GatTrace { z, rows }),
            })
        }
    }
}

/// Combines coupling output and previous state according to the residual
/// mode: `H' = H Λ^T + F B^T` when a state path exists, else `H' = F`.
pub(crate) fn state_combine<T: Real>(
    model: &Model<T>,
    layer_index: usize,
    h: &Mat<T>,
    coupling_out: &Mat<T>,
) -> Mat<T> {
    match model.pair_for(layer_index) {
        None => coupling_out.clone(),
        Some(pair) => h * pair.state.transpose() + coupling_out * pair.input.transpose(),
    }
}

/// Full single-layer application.
pub(crate) fn layer_apply<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    layer_index: usize,
    h: &Mat<T>,
) -> Result<(LayerTrace<T>, Mat<T>)> {
    let trace = coupling_forward(&model.layers[layer_index], prep, h)?;
    let out = state_combine(model, layer_index, h, &trace.post);
    Ok((trace, out))
}

/// Pullback of one layer: given `cot_out = dL/dH'`, returns `dL/dH` and the
/// parameter gradients, all evaluated at the recorded state `h_in`.
pub(crate) fn layer_pullback<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    layer_index: usize,
    h_in: &Mat<T>,
    trace: &LayerTrace<T>,
    cot_out: &Mat<T>,
) -> Result<(Mat<T>, LayerGradsPart<T>)> {
    let layer = &model.layers[layer_index];
    let params = &layer.params;
    let trainable_state = model
        .ssm_config
        .map(|c| c.trainable && model.residual == ResidualMode::Ssm)
        .unwrap_or(false);

    // split the cotangent across the state and coupling paths
    let (mut cot_h, cot_f, state_grads) = match model.pair_for(layer_index) {
        None => (
            Mat::zeros(h_in.nrows(), h_in.ncols()),
            cot_out.clone(),
            (None, None),
        ),
        Some(pair) => {
            let cot_h = cot_out * &pair.state;
            let cot_f = cot_out * &pair.input;
            let grads = if trainable_state {
                (
                    Some(cot_out.tr_mul(h_in)),
                    Some(cot_out.tr_mul(&trace.post)),
                )
            } else {
                (None, None)
            };
            (cot_h, cot_f, grads)
        }
    };

    // through the nonlinearity
    let cot_pre = cot_f.component_mul(&params.sigma.derivative(&trace.pre));

    let (cot_h_coupling, grads) = match layer.kind {
        CouplingKind::Gcn | CouplingKind::KHop(_) => {
            let op = prep.coupling_operator(layer.kind)?;
            // C is symmetric: dL/dH = C (dL/dpre) W^T, dL/dW = H^T C (dL/dpre)
            let mixed_cot = op.mul(&cot_pre)?;
            let cot_h = &mixed_cot * params.weight.transpose();
            let grad_w = h_in.tr_mul(&mixed_cot);
            (
                cot_h,
                LayerGradsPart {
                    weight: grad_w,
                    a_src: None,
                    a_dst: None,
                    state: state_grads.0,
                    input: state_grads.1,
                },
            )
        }
        CouplingKind::Gat => {
            let gat = trace
                .gat
                .as_ref()
                .ok_or_else(|| Error::Config("missing attention trace".into()))?;
            let att = params
                .attention
                .as_ref()
                .ok_or_else(|| Error::Config("GAT layer without attention vectors".into()))?;
            let n = h_in.nrows();
            let d = gat.z.ncols();
            // product path: dL/dZ += alpha^T cot_pre
            let mut cot_z = Mat::zeros(n, d);
            for (u, edges) in gat.rows.iter().enumerate() {
                for e in edges {
                    for c in 0..d {
                        cot_z[(e.target, c)] += e.alpha * cot_pre[(u, c)];
                    }
                }
            }
            // attention path: softmax and LeakyReLU backward per row
            let mut grad_s = ColVec::zeros(n);
            let mut grad_t = ColVec::zeros(n);
            for (u, edges) in gat.rows.iter().enumerate() {
                let mut dots: Vec<T> = Vec::with_capacity(edges.len());
                let mut weighted_sum = T::zero();
                for e in edges {
                    let mut dot = T::zero();
                    for c in 0..d {
                        dot += cot_pre[(u, c)] * gat.z[(e.target, c)];
                    }
                    weighted_sum += e.alpha * dot;
                    dots.push(dot);
                }
                for (e, dot) in edges.iter().zip(dots) {
                    let grad_score = e.alpha * (dot - weighted_sum) * leaky_relu_prime(e.raw);
                    grad_s[u] += grad_score;
                    grad_t[e.target] += grad_score;
                }
            }
            // Z = H W, s = Z a_src, t = Z a_dst
            for u in 0..n {
                for c in 0..d {
                    cot_z[(u, c)] += grad_s[u] * att.a_src[c] + grad_t[u] * att.a_dst[c];
                }
            }
            let grad_a_src = gat.z.tr_mul(&grad_s);
            let grad_a_dst = gat.z.tr_mul(&grad_t);
            let cot_h = &cot_z * params.weight.transpose();
            let grad_w = h_in.tr_mul(&cot_z);
            (
                cot_h,
                LayerGradsPart {
                    weight: grad_w,
                    a_src: Some(grad_a_src),
                    a_dst: Some(grad_a_dst),
                    state: state_grads.0,
                    input: state_grads.1,
                },
            )
        }
    };
    cot_h += cot_h_coupling;
    Ok((cot_h, grads))
}

/// Jacobian-vector product of one layer at the recorded state: `J . vec(V)`
/// reshaped to matrix layout. Supported for fixed-operator couplings (GCN,
/// k-hop); attention requires the explicit-Jacobian path.
pub(crate) fn layer_jvp<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    layer_index: usize,
    trace: &LayerTrace<T>,
    v: &Mat<T>,
) -> Result<Mat<T>> {
    let layer = &model.layers[layer_index];
    match layer.kind {
        CouplingKind::Gat => Err(Error::Capability(
            "attention layers have no closed-form JVP; use the explicit Jacobian".into(),
        )),
        CouplingKind::Gcn | CouplingKind::KHop(_) => {
            let op = prep.coupling_operator(layer.kind)?;
            let mixed = op.mul(v)?;
            let dpre = mixed * &layer.params.weight;
            let dpost = dpre.component_mul(&layer.params.sigma.derivative(&trace.pre));
            Ok(match model.pair_for(layer_index) {
                None => dpost,
                Some(pair) => v * pair.state.transpose() + dpost * pair.input.transpose(),
            })
        }
    }
}

/// Dense Jacobian of the coupling alone (`Γ` in the state-space bound),
/// assembled from the Kronecker structure `D_sigma' (W^T (x) C)`. Fixed
/// operators only; vec is column-stacking.
pub(crate) fn coupling_jacobian_dense<T: Real>(
    layer: &Layer<T>,
    prep: &PreparedGraph<T>,
    trace: &LayerTrace<T>,
) -> Result<Mat<T>> {
    let op = prep.coupling_operator(layer.kind)?;
    let c = op.to_dense();
    let w = &layer.params.weight;
    let n = c.nrows();
    let d_out = w.ncols();
    let d_in = w.nrows();
    let sig = layer.params.sigma.derivative(&trace.pre);
    let mut jac = Mat::zeros(n * d_out, n * d_in);
    for fo in 0..d_out {
        for fi in 0..d_in {
            let scale = w[(fi, fo)];
            for uo in 0..n {
                let row = fo * n + uo;
                let dsig = sig[(uo, fo)];
                for ui in 0..n {
                    jac[(row, fi * n + ui)] = dsig * scale * c[(uo, ui)];
                }
            }
        }
    }
    Ok(jac)
}

/// Readout application shared by forward and backward.
pub(crate) fn readout_apply<T: Real>(
    readout: &Readout<T>,
    pooling: &Pooling,
    h: &Mat<T>,
) -> Result<(Option<Mat<T>>, Mat<T>)> {
    match readout {
        Readout::Node { weight, bias } => {
            let mut out = h * weight;
            if let Some(b) = bias {
                add_row_bias(&mut out, b);
            }
            Ok((None, out))
        }
        Readout::GraphMean { weight, bias } => {
            if *pooling.offsets.last().unwrap_or(&0) != h.nrows() {
                return Err(Error::dims(format!(
                    "pooling covers {} rows but features have {}",
                    pooling.offsets.last().unwrap_or(&0),
                    h.nrows()
                )));
            }
            let pooled = mean_pool(pooling, h);
            let mut out = &pooled * weight;
            if let Some(b) = bias {
                add_row_bias(&mut out, b);
            }
            Ok((Some(pooled), out))
        }
    }
}

pub(crate) fn mean_pool<T: Real>(pooling: &Pooling, h: &Mat<T>) -> Mat<T> {
    let g = pooling.graphs();
    let mut pooled = Mat::zeros(g, h.ncols());
    for gi in 0..g {
        let lo = pooling.offsets[gi];
        let hi = pooling.offsets[gi + 1];
        let scale = T::one() / T::of((hi - lo).max(1) as f64);
        for c in 0..h.ncols() {
            let mut acc = T::zero();
            for r in lo..hi {
                acc += h[(r, c)];
            }
            pooled[(gi, c)] = acc * scale;
        }
    }
    pooled
}

pub(crate) fn add_row_bias<T: Real>(m: &mut Mat<T>, bias: &ColVec<T>) {
    for c in 0..m.ncols() {
        let b = bias[c];
        for r in 0..m.nrows() {
            m[(r, c)] += b;
        }
    }
}
