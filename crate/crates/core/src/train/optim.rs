//! Adam and AdamW with a fixed parameter traversal order.

use super::backward::GradientBundle;
use crate::error::{Error, Result};
use crate::nn::{Model, Readout, SsmStorage};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    AdamW,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// One trainable block: parameter values, gradient values, and whether
/// weight decay applies (it never does to biases or to the fixed state
/// matrices, which are not visited at all unless marked trainable).
struct Block<'a, T> {
    values: &'a mut [T],
    grads: &'a [T],
    decay: bool,
}

/// Collects aligned parameter/gradient blocks in a fixed order: encoder,
/// per-layer (weight, a_src, a_dst), trainable state pairs, readout weight,
/// readout bias.
fn blocks<'a, T: Real>(
    model: &'a mut Model<T>,
    grads: &'a GradientBundle<T>,
) -> Result<Vec<Block<'a, T>>> {
    if grads.layers.len() != model.layers.len() {
        return Err(Error::dims("gradient bundle does not mirror the model".into()));
    }
    let mut out = Vec::new();
    out.push(Block {
        values: model.encoder.as_mut_slice(),
        grads: grads.encoder.as_slice(),
        decay: true,
    });
    for (layer, lg) in model.layers.iter_mut().zip(&grads.layers) {
        out.push(Block {
            values: layer.params.weight.as_mut_slice(),
            grads: lg.weight.as_slice(),
            decay: true,
        });
        if let Some(att) = layer.params.attention.as_mut() {
            let (gs, gd) = match (&lg.a_src, &lg.a_dst) {
                (Some(gs), Some(gd)) => (gs, gd),
                _ => return Err(Error::dims("missing attention gradients".into())),
            };
            out.push(Block {
                values: att.a_src.as_mut_slice(),
                grads: gs.as_slice(),
                decay: true,
            });
            out.push(Block {
                values: att.a_dst.as_mut_slice(),
                grads: gd.as_slice(),
                decay: true,
            });
        }
    }
    if let Some(pair_grads) = &grads.ssm {
        match &mut model.ssm {
            SsmStorage::Shared(p) if pair_grads.len() == 1 => {
                out.push(Block {
                    values: p.state.as_mut_slice(),
                    grads: pair_grads[0].state.as_slice(),
                    decay: false,
                });
                out.push(Block {
                    values: p.input.as_mut_slice(),
                    grads: pair_grads[0].input.as_slice(),
                    decay: false,
                });
            }
            SsmStorage::PerLayer(ps) if pair_grads.len() == ps.len() => {
                for (p, g) in ps.iter_mut().zip(pair_grads) {
                    out.push(Block {
                        values: p.state.as_mut_slice(),
                        grads: g.state.as_slice(),
                        decay: false,
                    });
                    out.push(Block {
                        values: p.input.as_mut_slice(),
                        grads: g.input.as_slice(),
                        decay: false,
                    });
                }
            }
            _ => return Err(Error::dims("state gradients do not mirror state storage".into())),
        }
    }
    match &mut model.readout {
        Readout::Node { weight, bias } | Readout::GraphMean { weight, bias } => {
            out.push(Block {
                values: weight.as_mut_slice(),
                grads: grads.readout_weight.as_slice(),
                decay: true,
            });
            if let Some(b) = bias {
                let gb = grads
                    .readout_bias
                    .as_ref()
                    .ok_or_else(|| Error::dims("missing readout bias gradient".into()))?;
                out.push(Block {
                    values: b.as_mut_slice(),
                    grads: gb.as_slice(),
                    decay: false,
                });
            }
        }
    }
    Ok(out)
}

/// Adam/AdamW moment state, aligned with the block traversal order.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: usize,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new() -> Self {
        AdamState {
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// One optimizer step. `Adam` treats weight decay as a coupled L2 term
    /// added to the gradient; `AdamW` decays decoupled, after the adaptive
    /// update. Decay only touches encoder/coupling/readout weights.
    pub fn step<T: Real>(
        &mut self,
        model: &mut Model<T>,
        grads: &GradientBundle<T>,
        kind: OptimizerKind,
        learning_rate: f64,
        weight_decay: f64,
    ) -> Result<()> {
        grads.check_finite()?;
        let mut blocks = blocks(model, grads)?;
        if self.first.is_empty() {
            for b in &blocks {
                self.first.push(vec![0.0; b.values.len()]);
                self.second.push(vec![0.0; b.values.len()]);
            }
        }
        if self.first.len() != blocks.len() {
            return Err(Error::dims("optimizer state does not mirror the model".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - BETA1.powi(t);
        let bias2 = 1.0 - BETA2.powi(t);
        for (bi, block) in blocks.iter_mut().enumerate() {
            if self.first[bi].len() != block.values.len() {
                return Err(Error::dims("optimizer state block size mismatch".into()));
            }
            for i in 0..block.values.len() {
                let p = block.values[i].as_f64();
                let mut g = block.grads[i].as_f64();
                if block.decay && weight_decay != 0.0 && kind == OptimizerKind::Adam {
                    g += weight_decay * p;
                }
                let m = &mut self.first[bi][i];
                let v = &mut self.second[bi][i];
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                let mut new_p = p - learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
                if block.decay && weight_decay != 0.0 && kind == OptimizerKind::AdamW {
                    new_p -= learning_rate * weight_decay * p;
                }
                block.values[i] = T::of(new_p);
            }
        }
        Ok(())
    }
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new()
    }
}
