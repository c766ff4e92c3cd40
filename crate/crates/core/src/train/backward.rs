//! Reverse-mode gradients through the full model.

use crate::error::{Error, Result};
use crate::nn::{layer_pullback, ForwardTrace, Model, PreparedGraph, Readout, SsmStorage};
use crate::scalar::{ColVec, Mat, Real};

/// Per-layer trainable-parameter gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weight: Mat<T>,
    pub a_src: Option<ColVec<T>>,
    pub a_dst: Option<ColVec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsmPairGrads<T> {
    pub state: Mat<T>,
    pub input: Mat<T>,
}

/// Gradients mirroring the model parameters, plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle<T> {
    pub encoder: Mat<T>,
    pub layers: Vec<LayerGrads<T>>,
    /// Present only when the state matrices are trainable; shared storage
    /// accumulates one pair, per-layer storage mirrors the layers.
    pub ssm: Option<Vec<SsmPairGrads<T>>>,
    pub readout_weight: Mat<T>,
    pub readout_bias: Option<ColVec<T>>,
    /// `dL/dX` in input layout.
    pub input: Mat<T>,
}

impl<T: Real> GradientBundle<T> {
    /// Errors on any non-finite gradient entry.
    pub fn check_finite(&self) -> Result<()> {
        let bad = |m: &Mat<T>| m.iter().any(|x| !x.is_finite());
        let bad_v = |v: &ColVec<T>| v.iter().any(|x| !x.is_finite());
        let mut broken = bad(&self.encoder) || bad(&self.readout_weight) || bad(&self.input);
        for l in &self.layers {
            broken |= bad(&l.weight)
                || l.a_src.as_ref().map(bad_v).unwrap_or(false)
                || l.a_dst.as_ref().map(bad_v).unwrap_or(false);
        }
        if let Some(pairs) = &self.ssm {
            for p in pairs {
                broken |= bad(&p.state) || bad(&p.input);
            }
        }
        if let Some(b) = &self.readout_bias {
            broken |= bad_v(b);
        }
        if broken {
            Err(Error::Numeric("non-finite gradient".into()))
        } else {
            Ok(())
        }
    }

    /// Frobenius norm of one layer's weight gradient.
    pub fn layer_weight_norm(&self, k: usize) -> f64 {
        self.layers[k].weight.norm().as_f64()
    }
}

/// Pullback through the readout: returns the cotangent at `H^(K)` and the
/// readout parameter gradients.
fn readout_pullback<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    trace: &ForwardTrace<T>,
    grad_output: &Mat<T>,
) -> Result<(Mat<T>, Mat<T>, Option<ColVec<T>>)> {
    if grad_output.shape() != trace.output.shape() {
        return Err(Error::dims(format!(
            "output gradient is {:?}, output is {:?}",
            grad_output.shape(),
            trace.output.shape()
        )));
    }
    let h_last = trace.hidden.last().expect("hidden states");
    let colsum = |m: &Mat<T>| -> ColVec<T> {
        ColVec::from_fn(m.ncols(), |c, _| {
            let mut acc = T::zero();
            for r in 0..m.nrows() {
                acc += m[(r, c)];
            }
            acc
        })
    };
    match &model.readout {
        Readout::Node { weight, bias } => {
            let cot_h = grad_output * weight.transpose();
            let grad_w = h_last.tr_mul(grad_output);
            let grad_b = bias.as_ref().map(|_| colsum(grad_output));
            Ok((cot_h, grad_w, grad_b))
        }
        Readout::GraphMean { weight, bias } => {
            let pooled = trace
                .pooled
                .as_ref()
                .ok_or_else(|| Error::Config("graph readout without pooled trace".into()))?;
            let grad_w = pooled.tr_mul(grad_output);
            let grad_b = bias.as_ref().map(|_| colsum(grad_output));
            let cot_pooled = grad_output * weight.transpose();
            let mut cot_h = Mat::zeros(h_last.nrows(), h_last.ncols());
            for g in 0..prep.pooling.graphs() {
                let lo = prep.pooling.offsets[g];
                let hi = prep.pooling.offsets[g + 1];
                let inv = T::one() / T::of((hi - lo).max(1) as f64);
                for r in lo..hi {
                    for c in 0..h_last.ncols() {
                        cot_h[(r, c)] = cot_pooled[(g, c)] * inv;
                    }
                }
            }
            Ok((cot_h, grad_w, grad_b))
        }
    }
}

/// Pullback of a cotangent at `H^(K)` through the layer stack only, also
/// accumulating per-layer parameter gradients.
fn layers_pullback<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    trace: &ForwardTrace<T>,
    cot_last: Mat<T>,
) -> Result<(Mat<T>, Vec<LayerGrads<T>>, Option<Vec<SsmPairGrads<T>>>)> {
    let trainable = model.ssm_config.map(|c| c.trainable).unwrap_or(false);
    let shared = matches!(model.ssm, SsmStorage::Shared(_));
    let mut cot = cot_last;
    let mut layer_grads: Vec<LayerGrads<T>> = Vec::with_capacity(model.depth());
    let mut ssm_grads: Option<Vec<SsmPairGrads<T>>> = None;
    for k in (0..model.depth()).rev() {
        let (cot_in, part) =
            layer_pullback(model, prep, k, &trace.hidden[k], &trace.layers[k], &cot)?;
        cot = cot_in;
        layer_grads.push(LayerGrads {
            weight: part.weight,
            a_src: part.a_src,
            a_dst: part.a_dst,
        });
        if trainable {
            if let (Some(gs), Some(gi)) = (part.state, part.input) {
                let pairs = ssm_grads.get_or_insert_with(|| {
                    let slots = if shared { 1 } else { model.depth() };
                    (0..slots)
                        .map(|_| SsmPairGrads {
                            state: Mat::zeros(model.d_h(), model.d_h()),
                            input: Mat::zeros(model.d_h(), model.d_h()),
                        })
                        .collect()
                });
                let slot = if shared { 0 } else { k };
                pairs[slot].state += gs;
                pairs[slot].input += gi;
            }
        }
    }
    layer_grads.reverse();
    Ok((cot, layer_grads, ssm_grads))
}

/// Exact reverse-mode gradients of a scalar loss through readout, state
/// updates, couplings, and encoder, given the forward trace and
/// `dL/d(output)`.
pub fn backward<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    trace: &ForwardTrace<T>,
    grad_output: &Mat<T>,
) -> Result<GradientBundle<T>> {
    let (cot_last, readout_weight, readout_bias) =
        readout_pullback(model, prep, trace, grad_output)?;
    let (cot_h0, layers, ssm) = layers_pullback(model, prep, trace, cot_last)?;
    // H^(0) = X * encoder
    let encoder = trace.input.tr_mul(&cot_h0);
    let input = &cot_h0 * model.encoder.transpose();
    Ok(GradientBundle {
        encoder,
        layers,
        ssm,
        readout_weight,
        readout_bias,
        input,
    })
}

/// Pulls a cotangent on the final hidden state `H^(K)` back to the input:
/// `cot^T (prod_k J_k) J_encoder`, reshaped to the `n x d_in` input layout.
pub fn input_vjp<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    x: &Mat<T>,
    cotangent: &Mat<T>,
) -> Result<Mat<T>> {
    let trace = crate::nn::forward::forward_trace(model, prep, x)?;
    hidden_vjp(model, prep, &trace, cotangent).map(|cot_h0| &cot_h0 * model.encoder.transpose())
}

/// Pulls a cotangent on `H^(K)` back to `H^(0)` (through the layers only).
pub(crate) fn hidden_vjp<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    trace: &ForwardTrace<T>,
    cotangent: &Mat<T>,
) -> Result<Mat<T>> {
    let h_last = trace.hidden.last().expect("hidden states");
    if cotangent.shape() != h_last.shape() {
        return Err(Error::dims(format!(
            "cotangent is {:?}, hidden state is {:?}",
            cotangent.shape(),
            h_last.shape()
        )));
    }
    let (cot_h0, _, _) = layers_pullback(model, prep, trace, cotangent.clone())?;
    Ok(cot_h0)
}
