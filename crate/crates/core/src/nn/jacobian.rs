//! Explicit layer Jacobians on guard-sized instances.

use super::layer_ops;
use super::{Model, PreparedGraph};
use crate::error::{Error, Result};
use crate::scalar::{Mat, Real};
use crate::EXPLICIT_JACOBIAN_LIMIT;

/// Vectorized dimension of a layer Jacobian for this model and graph.
pub fn layer_jacobian_dim<T: Real>(model: &Model<T>, prep: &PreparedGraph<T>) -> usize {
    model.d_h() * prep.graph.node_count()
}

/// Exact Jacobian of layer `layer_index` at state `h`, as an `nd x nd`
/// matrix over column-stacked `vec(H)` (entry index `f * n + u`).
///
/// Includes the nonlinearity diagonal, the Kronecker adjacency/weight
/// structure, the attention derivative for GAT, and the state path. Assembled
/// row by row from the layer pullback, so the same code path that training
/// gradients use is what gets checked against oracles.
///
/// Refused above [`EXPLICIT_JACOBIAN_LIMIT`]; use the power-iteration
/// operator-norm path for larger instances.
pub fn layer_jacobian<T: Real>(
    model: &Model<T>,
    prep: &PreparedGraph<T>,
    layer_index: usize,
    h: &Mat<T>,
) -> Result<Mat<T>> {
    if layer_index >= model.depth() {
        return Err(Error::invalid(format!(
            "layer index {layer_index} out of range for depth {}",
            model.depth()
        )));
    }
    let n = prep.graph.node_count();
    let d = model.d_h();
    let dim = n * d;
    if dim > EXPLICIT_JACOBIAN_LIMIT {
        return Err(Error::Capability(format!(
            "explicit Jacobian needs n*d = {dim} <= {EXPLICIT_JACOBIAN_LIMIT}; \
             use spectral::operator_norm with the layer JVP/VJP instead"
        )));
    }
    if h.nrows() != n || h.ncols() != d {
        return Err(Error::dims(format!(
            "state must be {n}x{d}, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let trace = layer_ops::coupling_forward(&model.layers[layer_index], prep, h)?;
    let mut jac = Mat::zeros(dim, dim);
    let mut cot = Mat::zeros(n, d);
    for out_f in 0..d {
        for out_u in 0..n {
            cot[(out_u, out_f)] = T::one();
            let (cot_in, _) =
                layer_ops::layer_pullback(model, prep, layer_index, h, &trace, &cot)?;
            cot[(out_u, out_f)] = T::zero();
            let row = out_f * n + out_u;
            // cot_in is dL/dH for L = H'[out_u, out_f]; its column-major
            // flattening is exactly the Jacobian row
            for in_f in 0..d {
                for in_u in 0..n {
                    jac[(row, in_f * n + in_u)] = cot_in[(in_u, in_f)];
                }
            }
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::nn::{
        init_model, CouplingConfig, ModelConfig, Nonlinearity, ReadoutKind, ResidualMode,
        SsmConfig, SsmStorage,
    };
    use crate::rng::Prng;
    use crate::scalar::max_abs;
    use crate::spectral::symmetric_eigenvalues;
    use crate::Mat64;

    fn ring(n: usize) -> Graph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edge_list(&pairs, n).unwrap()
    }

    /// `W^T (x) C` with column-stacked vec, assembled independently.
    fn kron_wt_c(w: &Mat64, c: &Mat64) -> Mat64 {
        let n = c.nrows();
        let d = w.nrows();
        let mut out = Mat64::zeros(n * w.ncols(), n * d);
        for bo in 0..w.ncols() {
            for bi in 0..d {
                let scale = w[(bi, bo)];
                for i in 0..n {
                    for j in 0..n {
                        out[(bo * n + i, bi * n + j)] = scale * c[(i, j)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn linear_gcn_jacobian_is_kron_wt_ahat() {
        let cfg = ModelConfig {
            sigma: Nonlinearity::Identity,
            residual: ResidualMode::None,
            ..ModelConfig::new(2, 3, 1, 1)
        };
        let m = init_model::<f64>(&cfg, 5).unwrap();
        let g = ring(5);
        let prep = PreparedGraph::for_model(g, &m).unwrap();
        let mut rng = Prng::seed_from(6);
        let h: Mat64 = rng.normal_matrix(5, 3, 1.0);
        let jac = layer_jacobian(&m, &prep, 0, &h).unwrap();
        let want = kron_wt_c(&m.layers[0].params.weight, &prep.sym_self.to_dense());
        assert!(max_abs(&(jac - want)) <= 1e-12);
    }

    #[test]
    fn inactive_relu_reduces_jacobian_to_state_path() {
        // all pre-activations strictly negative => coupling Jacobian is zero,
        // leaving the block-diagonal Λ action; spectrum = spec(Λ) repeated n times
        let cfg = ModelConfig {
            sigma: Nonlinearity::Relu,
            residual: ResidualMode::Ssm,
            ssm: SsmConfig {
                state_radius: 0.7,
                input_radius: 0.1,
                seed: 40,
                ..SsmConfig::default()
            },
            ..ModelConfig::new(2, 3, 1, 1)
        };
        let mut m = init_model::<f64>(&cfg, 7).unwrap();
        // force strongly negative pre-activations at an all-ones state
        m.layers[0].params.weight = Mat64::from_element(3, 3, -10.0);
        let g = ring(4);
        let prep = PreparedGraph::for_model(g, &m).unwrap();
        let h = Mat64::from_element(4, 3, 1.0);
        let jac = layer_jacobian(&m, &prep, 0, &h).unwrap();

        let pair = match &m.ssm {
            SsmStorage::Shared(p) => p.clone(),
            _ => unreachable!(),
        };
        // block structure: J = Λ (x) I_n for column-stacked vec
        let mut want = Mat64::zeros(12, 12);
        for a in 0..3 {
            for b in 0..3 {
                for u in 0..4 {
                    want[(a * 4 + u, b * 4 + u)] = pair.state[(a, b)];
                }
            }
        }
        assert!(max_abs(&(jac.clone() - want)) <= 1e-12);

        // eigenvalue moduli of J are those of Λ, each with multiplicity n
        let lam_gram = symmetric_eigenvalues(&(pair.state.transpose() * &pair.state)).unwrap();
        let jac_gram = symmetric_eigenvalues(&(jac.transpose() * &jac)).unwrap();
        for (i, &mu) in jac_gram.iter().enumerate() {
            let want = lam_gram[i / 4];
            assert!((mu - want).abs() <= 1e-10, "{mu} vs {want}");
        }
    }

    #[test]
    fn jacobian_matches_central_differences_at_random_coordinates() {
        // every coupling kind under the SSM residual
        for coupling in [CouplingConfig::Gcn, CouplingConfig::Gat, CouplingConfig::KHopByLayer] {
            let cfg = ModelConfig {
                coupling,
                sigma: Nonlinearity::Tanh,
                residual: ResidualMode::Ssm,
                ..ModelConfig::new(2, 3, 1, 2)
            };
            let m = init_model::<f64>(&cfg, 8).unwrap();
            let g = ring(6);
            let prep = PreparedGraph::for_model(g, &m).unwrap();
            let mut rng = Prng::seed_from(9);
            let h: Mat64 = rng.normal_matrix(6, 3, 1.0);
            let k = 1; // second layer (hop 2 for the k-hop stack)
            let jac = layer_jacobian(&m, &prep, k, &h).unwrap();
            let n = 6;
            let step = 1e-5;
            for probe in 0..10 {
                let iu = rng.below(n);
                let ic = rng.below(3);
                let mut hp = h.clone();
                let mut hm = h.clone();
                hp[(iu, ic)] += step;
                hm[(iu, ic)] -= step;
                let fp = crate::nn::layer_ops::layer_apply(&m, &prep, k, &hp).unwrap().1;
                let fm = crate::nn::layer_ops::layer_apply(&m, &prep, k, &hm).unwrap().1;
                let fd = (fp - fm) / (2.0 * step);
                let col = ic * n + iu;
                for of in 0..3 {
                    for ou in 0..n {
                        let got = jac[(of * n + ou, col)];
                        let want = fd[(ou, of)];
                        assert!(
                            (got - want).abs() <= 1e-5 * want.abs().max(1.0),
                            "{coupling:?} probe {probe}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn size_guard_returns_capability_error() {
        let cfg = ModelConfig {
            residual: ResidualMode::None,
            ..ModelConfig::new(2, 33, 1, 1)
        };
        let m = init_model::<f64>(&cfg, 1).unwrap();
        let g = ring(63); // 63 * 33 = 2079 > 2048
        let prep = PreparedGraph::for_model(g, &m).unwrap();
        let h = Mat64::zeros(63, 33);
        match layer_jacobian(&m, &prep, 0, &h) {
            Err(Error::Capability(msg)) => assert!(msg.contains("operator_norm")),
            other => panic!("expected capability error, got {other:?}"),
        }
    }
}
