//! Public forward-pass entry points.

use super::layer_ops::{self, ForwardTrace};
use super::{Layer, LayerParams, Model, PreparedGraph, SsmPair};
use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedAdjacency};
use crate::scalar::{Mat, Real};

/// One graph-convolution coupling: `sigma(C h W)` for a precomputed
/// normalized operator `C` (with self loops for the standard GCN update,
/// without for the plain symmetric normalization).
pub fn gcn_forward<T: Real>(
    adj: &NormalizedAdjacency<T>,
    h: &Mat<T>,
    params: &LayerParams<T>,
) -> Result<Mat<T>> {
    if adj.n() != h.nrows() {
        return Err(Error::dims(format!(
            "operator is {}x{} but features have {} rows",
            adj.n(),
            adj.n(),
            h.nrows()
        )));
    }
    if h.ncols() != params.weight.nrows() {
        return Err(Error::dims(format!(
            "features have {} columns, weight expects {}",
            h.ncols(),
            params.weight.nrows()
        )));
    }
    let pre = adj.mul(h)? * &params.weight;
    Ok(params.sigma.apply(&pre))
}

/// Single-head graph attention over `N(u) ∪ {u}`.
pub fn gat_forward<T: Real>(g: &Graph, h: &Mat<T>, params: &LayerParams<T>) -> Result<Mat<T>> {
    let prep = PreparedGraph::new(g.clone())?;
    let layer = Layer {
        kind: super::CouplingKind::Gat,
        params: params.clone(),
    };
    Ok(layer_ops::coupling_forward(&layer, &prep, h)?.post)
}

/// Exact-k-hop coupling: `sigma(C_k h W)` where `C_k` is the normalized
/// distance-k adjacency. Nodes with an empty k-hop neighborhood receive 0
/// before the nonlinearity.
pub fn khop_coupling_forward<T: Real>(
    g: &Graph,
    h: &Mat<T>,
    params: &LayerParams<T>,
    hop: usize,
) -> Result<Mat<T>> {
    let adj = crate::graph::k_hop_adjacency::<T>(g, hop)?;
    gcn_forward(&adj, h, params)
}

/// Linear state update: per node `u`, `h'_u = Λ h_u + B f_u`.
pub fn ssm_step<T: Real>(
    pair: &SsmPair<T>,
    h: &Mat<T>,
    coupling_out: &Mat<T>,
) -> Result<Mat<T>> {
    let d = pair.state.nrows();
    if pair.state.ncols() != d || pair.input.nrows() != d || pair.input.ncols() != d {
        return Err(Error::dims("state matrices must be square and same-sized"));
    }
    if h.ncols() != d || coupling_out.ncols() != d || h.nrows() != coupling_out.nrows() {
        return Err(Error::dims(format!(
            "state update expects {d}-wide features; got h {}x{}, coupling {}x{}",
            h.nrows(),
            h.ncols(),
            coupling_out.nrows(),
            coupling_out.ncols()
        )));
    }
    Ok(h * pair.state.transpose() + coupling_out * pair.input.transpose())
}

/// Runs the full model: encoder, K layers, readout.
///
/// With `want_trace`, also returns the hidden states `H^(0..K)` (encoder
/// output through last layer output).
pub fn model_forward<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    x: &Mat<T>,
    want_trace: bool,
) -> Result<(Mat<T>, Option<Vec<Mat<T>>>)> {
    let trace = forward_trace(model, prep, x)?;
    let hidden = want_trace.then_some(trace.hidden);
    Ok((trace.output, hidden))
}

/// Forward pass retaining everything the backward pass needs.
pub(crate) fn forward_trace<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    x: &Mat<T>,
) -> Result<ForwardTrace<T>> {
    model.validate()?;
    if x.nrows() != prep.graph.node_count() {
        return Err(Error::dims(format!(
            "input has {} rows for a graph with {} nodes",
            x.nrows(),
            prep.graph.node_count()
        )));
    }
    if x.ncols() != model.d_in() {
        return Err(Error::dims(format!(
            "input has {} columns, encoder expects {}",
            x.ncols(),
            model.d_in()
        )));
    }
    let mut hidden = Vec::with_capacity(model.depth() + 1);
    hidden.push(x * &model.encoder);
    let mut layers = Vec::with_capacity(model.depth());
    for k in 0..model.depth() {
        let (trace, out) = layer_ops::layer_apply(model, prep, k, &hidden[k])?;
        layers.push(trace);
        hidden.push(out);
    }
    let (pooled, output) =
        layer_ops::readout_apply(&model.readout, &prep.pooling, hidden.last().expect("h0"))?;
    Ok(ForwardTrace {
        input: x.clone(),
        hidden,
        layers,
        pooled,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalized_adjacency, AdjKind};
    use crate::nn::{
        init_model, Attention, CouplingConfig, ModelConfig, Nonlinearity, ReadoutKind,
        ResidualMode, SsmConfig,
    };
    use crate::rng::Prng;
    use crate::{Mat64, Vec64};
    use approx::assert_abs_diff_eq;

    fn edge_graph() -> Graph {
        Graph::from_edge_list(&[(0, 1)], 2).unwrap()
    }

    fn ring(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edge_list(&pairs, n).unwrap()
    }

    fn plain_params(weight: Mat64, sigma: Nonlinearity) -> LayerParams<f64> {
        LayerParams {
            weight,
            attention: None,
            sigma,
        }
    }

    #[test]
    fn gcn_zero_is_fixed_point() {
        let g = edge_graph();
        let adj = normalized_adjacency::<f64>(&g, AdjKind::SymSelfLoops).unwrap();
        let mut rng = Prng::seed_from(1);
        let w: Mat64 = rng.normal_matrix(3, 3, 1.0);
        for sigma in [Nonlinearity::Relu, Nonlinearity::Tanh] {
            let out = gcn_forward(&adj, &Mat64::zeros(2, 3), &plain_params(w.clone(), sigma)).unwrap();
            assert_eq!(out, Mat64::zeros(2, 3));
        }
    }

    #[test]
    fn gcn_hand_computed_mixing() {
        let g = edge_graph();
        let adj = normalized_adjacency::<f64>(&g, AdjKind::SymSelfLoops).unwrap();
        let h = Mat64::identity(2, 2);
        let out = gcn_forward(
            &adj,
            &h,
            &plain_params(Mat64::identity(2, 2), Nonlinearity::Identity),
        )
        .unwrap();
        for v in out.iter() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn relu_kills_negative_preactivations() {
        let g = edge_graph();
        let adj = normalized_adjacency::<f64>(&g, AdjKind::SymSelfLoops).unwrap();
        let h = Mat64::from_element(2, 2, -1.0);
        let out = gcn_forward(
            &adj,
            &h,
            &plain_params(Mat64::identity(2, 2), Nonlinearity::Relu),
        )
        .unwrap();
        assert_eq!(out, Mat64::zeros(2, 2));
    }

    #[test]
    fn gcn_dimension_mismatch_is_input_error() {
        let g = edge_graph();
        let adj = normalized_adjacency::<f64>(&g, AdjKind::SymSelfLoops).unwrap();
        let bad = gcn_forward(
            &adj,
            &Mat64::zeros(2, 3),
            &plain_params(Mat64::identity(2, 2), Nonlinearity::Relu),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn gat_uniform_scores_reduce_to_mean_aggregation() {
        let g = ring(5);
        let mut rng = Prng::seed_from(2);
        let h: Mat64 = rng.normal_matrix(5, 3, 1.0);
        let params = LayerParams {
            weight: Mat64::identity(3, 3),
            attention: Some(Attention {
                a_src: Vec64::zeros(3),
                a_dst: Vec64::zeros(3),
            }),
            sigma: Nonlinearity::Identity,
        };
        let out = gat_forward(&g, &h, &params).unwrap();
        for u in 0..5 {
            // alpha = 1/(deg+1): mean over neighbors and self
            let mut want = h.row(u) / 3.0;
            for &v in g.neighbors(u) {
                want += h.row(v) / 3.0;
            }
            for c in 0..3 {
                assert_abs_diff_eq!(out[(u, c)], want[c], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gat_zero_input_is_fixed_point_and_rows_normalize() {
        let g = ring(6);
        let mut rng = Prng::seed_from(3);
        let params = LayerParams {
            weight: rng.normal_matrix(4, 4, 1.0),
            attention: Some(Attention {
                a_src: rng.normal_vector(4, 1.0),
                a_dst: rng.normal_vector(4, 1.0),
            }),
            sigma: Nonlinearity::Tanh,
        };
        let out = gat_forward(&g, &Mat64::zeros(6, 4), &params).unwrap();
        assert_eq!(out, Mat64::zeros(6, 4));

        // attention rows sum to one
        let prep = PreparedGraph::<f64>::new(g).unwrap();
        let h: Mat64 = rng.normal_matrix(6, 4, 1.0);
        let layer = Layer {
            kind: crate::nn::CouplingKind::Gat,
            params,
        };
        let trace = crate::nn::layer_ops::coupling_forward(&layer, &prep, &h).unwrap();
        for row in &trace.gat.unwrap().rows {
            let total: f64 = row.iter().map(|e| e.alpha).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gat_isolated_node_is_pure_self_attention() {
        let g = Graph::from_edge_list(&[], 1).unwrap();
        let mut rng = Prng::seed_from(4);
        let h: Mat64 = rng.normal_matrix(1, 3, 1.0);
        let params = LayerParams {
            weight: rng.normal_matrix(3, 3, 1.0),
            attention: Some(Attention {
                a_src: rng.normal_vector(3, 1.0),
                a_dst: rng.normal_vector(3, 1.0),
            }),
            sigma: Nonlinearity::Tanh,
        };
        let out = gat_forward(&g, &h, &params).unwrap();
        let want = params.sigma.apply(&(&h * &params.weight));
        assert_abs_diff_eq!(out[(0, 0)], want[(0, 0)], epsilon = 1e-12);
    }

    #[test]
    fn khop_hop1_equals_gcn_on_sym_operator() {
        let g = ring(7);
        let mut rng = Prng::seed_from(5);
        let h: Mat64 = rng.normal_matrix(7, 3, 1.0);
        let params = plain_params(rng.normal_matrix(3, 3, 1.0), Nonlinearity::Tanh);
        let a = khop_coupling_forward(&g, &h, &params, 1).unwrap();
        let sym = normalized_adjacency::<f64>(&g, AdjKind::Sym).unwrap();
        let b = gcn_forward(&sym, &h, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn khop_ring6_hop3_permutes_to_antipodes() {
        let g = ring(6);
        let mut rng = Prng::seed_from(6);
        let h: Mat64 = rng.normal_matrix(6, 2, 1.0);
        let params = plain_params(Mat64::identity(2, 2), Nonlinearity::Identity);
        let out = khop_coupling_forward(&g, &h, &params, 3).unwrap();
        for u in 0..6 {
            for c in 0..2 {
                assert_abs_diff_eq!(out[(u, c)], h[((u + 3) % 6, c)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn khop_beyond_diameter_is_zero_output() {
        let g = ring(6);
        let mut rng = Prng::seed_from(7);
        let h: Mat64 = rng.normal_matrix(6, 2, 1.0);
        let params = plain_params(rng.normal_matrix(2, 2, 1.0), Nonlinearity::Tanh);
        let out = khop_coupling_forward(&g, &h, &params, 9).unwrap();
        assert_eq!(out, Mat64::zeros(6, 2));
    }

    #[test]
    fn ssm_step_cases() {
        let pair = SsmPair::<f64>::identity(2);
        let h = Mat64::from_row_slice(1, 2, &[2.0, 0.0]);
        let out = ssm_step(&pair, &h, &Mat64::zeros(1, 2)).unwrap();
        assert_eq!(out, h);

        let half = SsmPair {
            state: Mat64::identity(2, 2) * 0.5,
            input: Mat64::identity(2, 2),
        };
        let out = ssm_step(&half, &h, &Mat64::zeros(1, 2)).unwrap();
        assert_eq!(out, Mat64::from_row_slice(1, 2, &[1.0, 0.0]));

        // Λ = 0 reduces to the plain (memoryless) coupling output
        let memoryless = SsmPair {
            state: Mat64::zeros(2, 2),
            input: Mat64::identity(2, 2),
        };
        let f = Mat64::from_row_slice(1, 2, &[0.3, -0.7]);
        let out = ssm_step(&memoryless, &h, &f).unwrap();
        assert_eq!(out, f);

        assert!(ssm_step(&pair, &h, &Mat64::zeros(2, 2)).is_err());
    }

    #[test]
    fn model_forward_k0_is_readout_of_encoder() {
        let g = edge_graph();
        let cfg = ModelConfig {
            residual: ResidualMode::None,
            readout_bias: false,
            ..ModelConfig::new(3, 4, 2, 0)
        };
        let m = init_model::<f64>(&cfg, 9).unwrap();
        let prep = PreparedGraph::for_model(g, &m).unwrap();
        let mut rng = Prng::seed_from(8);
        let x: Mat64 = rng.normal_matrix(2, 3, 1.0);
        let (out, trace) = model_forward(&m, &prep, &x, true).unwrap();
        let want = &x * &m.encoder * m.readout.weight();
        assert_abs_diff_eq!(out, want, epsilon = 1e-14);
        assert_eq!(trace.unwrap().len(), 1);
    }

    #[test]
    fn zero_state_radius_with_identity_input_matches_memoryless_stack() {
        let g = ring(8);
        let base = ModelConfig {
            coupling: CouplingConfig::Gcn,
            sigma: Nonlinearity::Tanh,
            readout: ReadoutKind::Node,
            ..ModelConfig::new(3, 5, 2, 4)
        };
        let ssm_cfg = ModelConfig {
            residual: ResidualMode::Ssm,
            ssm: SsmConfig {
                state_radius: 0.0,
                identity_input: true,
                ..SsmConfig::default()
            },
            ..base.clone()
        };
        let plain_cfg = ModelConfig {
            residual: ResidualMode::None,
            ..base
        };
        let a = init_model::<f64>(&ssm_cfg, 21).unwrap();
        let b = init_model::<f64>(&plain_cfg, 21).unwrap();
        let prep = PreparedGraph::for_model(g, &a).unwrap();
        let mut rng = Prng::seed_from(10);
        let x: Mat64 = rng.normal_matrix(8, 3, 1.0);
        let (ya, _) = model_forward(&a, &prep, &x, false).unwrap();
        let (yb, _) = model_forward(&b, &prep, &x, false).unwrap();
        assert_abs_diff_eq!(ya, yb, epsilon = 1e-14);
    }

    #[test]
    fn model_layers_fix_zero_when_state_path_is_zero() {
        // layers map 0 -> 0 for every coupling and sigma(0) = 0
        for coupling in [CouplingConfig::Gcn, CouplingConfig::Gat, CouplingConfig::KHopByLayer] {
            for sigma in [Nonlinearity::Relu, Nonlinearity::Tanh] {
                let cfg = ModelConfig {
                    coupling,
                    sigma,
                    residual: ResidualMode::Ssm,
                    readout_bias: false,
                    ..ModelConfig::new(3, 4, 2, 3)
                };
                let m = init_model::<f64>(&cfg, 13).unwrap();
                let prep = PreparedGraph::for_model(ring(6), &m).unwrap();
                let x = Mat64::zeros(6, 3);
                let (_, hidden) = model_forward(&m, &prep, &x, true).unwrap();
                for h in hidden.unwrap() {
                    assert_eq!(h, Mat64::zeros(6, 4), "{coupling:?} {sigma:?}");
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance_of_node_models() {
        for coupling in [CouplingConfig::Gcn, CouplingConfig::Gat, CouplingConfig::KHopByLayer] {
            let cfg = ModelConfig {
                coupling,
                residual: ResidualMode::Ssm,
                ..ModelConfig::new(3, 6, 2, 3)
            };
            let m = init_model::<f64>(&cfg, 31).unwrap();
            let g = ring(7);
            let mut rng = Prng::seed_from(32);
            let x: Mat64 = rng.normal_matrix(7, 3, 1.0);
            let perm: Vec<usize> = vec![3, 0, 6, 2, 5, 1, 4];
            let gp = g.permuted(&perm).unwrap();
            let mut xp = Mat64::zeros(7, 3);
            for u in 0..7 {
                for c in 0..3 {
                    xp[(perm[u], c)] = x[(u, c)];
                }
            }
            let prep = PreparedGraph::for_model(g, &m).unwrap();
            let prep_p = PreparedGraph::for_model(gp, &m).unwrap();
            let (y, _) = model_forward(&m, &prep, &x, false).unwrap();
            let (yp, _) = model_forward(&m, &prep_p, &xp, false).unwrap();
            for u in 0..7 {
                for c in 0..2 {
                    assert_abs_diff_eq!(yp[(perm[u], c)], y[(u, c)], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn graph_mean_readout_pools_per_block() {
        let g1 = ring(4);
        let g2 = ring(3);
        let cfg = ModelConfig {
            residual: ResidualMode::None,
            readout: ReadoutKind::GraphMean,
            readout_bias: false,
            ..ModelConfig::new(2, 4, 1, 0)
        };
        let m = init_model::<f64>(&cfg, 14).unwrap();
        let prep = PreparedGraph::<f64>::union(&[&g1, &g2], &[]).unwrap();
        let mut rng = Prng::seed_from(15);
        let x: Mat64 = rng.normal_matrix(7, 2, 1.0);
        let (out, _) = model_forward(&m, &prep, &x, false).unwrap();
        assert_eq!(out.nrows(), 2);
        let h0 = &x * &m.encoder;
        let mean_first = h0.rows(0, 4).row_sum() / 4.0;
        let want = mean_first * m.readout.weight();
        assert_abs_diff_eq!(out[(0, 0)], want[(0, 0)], epsilon = 1e-13);
    }
}
