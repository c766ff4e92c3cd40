//! Eigenvalue and singular-value machinery.
//!
//! Houses the closed-form Kronecker spectrum of linear message-passing
//! Jacobians, Wishart/Marchenko-Pastur moment formulas with a Monte Carlo
//! check, Haar-random orthogonal matrices with exact spectral-radius
//! scaling, and a power-iteration operator-norm estimator for maps too large
//! to materialize.

use crate::error::{Error, Result};
use crate::rng::{derive_seed_indexed, Prng};
use crate::scalar::{max_abs, ColVec, Mat, Real};
use serde::Serialize;
use std::fmt::Write as _;

/// Multiset of nonnegative spectrum values with summary statistics.
///
/// `values` holds either squared singular values or eigenvalue moduli,
/// sorted descending. `eoc_distance` is the mean over values `v` of
/// `| |v| - 1 |`, the average distance of the spectrum to the edge of chaos.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport<T> {
    pub values: Vec<T>,
    pub mean: T,
    pub variance: T,
    pub max: T,
    pub eoc_distance: T,
}

impl<T: Real> SpectrumReport<T> {
    pub fn from_values(mut values: Vec<T>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("spectrum values are ordered"));
        let n = values.len();
        let (mean, variance, max, eoc) = if n == 0 {
            (T::zero(), T::zero(), T::zero(), T::zero())
        } else {
            let count = T::of(n as f64);
            let mean = values.iter().fold(T::zero(), |a, &v| a + v) / count;
            let variance = values
                .iter()
                .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
                / count;
            let max = values[0];
            let eoc = values
                .iter()
                .fold(T::zero(), |a, &v| a + (v.abs() - T::one()).abs())
                / count;
            (mean, variance, max, eoc)
        };
        SpectrumReport {
            values,
            mean,
            variance,
            max,
            eoc_distance: eoc,
        }
    }

    /// Median of the stored values (0 for an empty report).
    pub fn median(&self) -> T {
        if self.values.is_empty() {
            return T::zero();
        }
        let n = self.values.len();
        if n % 2 == 1 {
            self.values[n / 2]
        } else {
            (self.values[n / 2 - 1] + self.values[n / 2]) / T::of(2.0)
        }
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One value per row, for histogram plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value\n");
        for v in &self.values {
            let _ = writeln!(out, "{}", v.as_f64());
        }
        out
    }
}

/// Checks that `m` is square and symmetric to `tol` (absolute, relative to
/// the largest entry magnitude when that exceeds 1).
fn check_symmetric<T: Real>(m: &Mat<T>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = max_abs(m).max(T::one());
    let bound = T::of(tol) * scale;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > bound {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)].as_f64(),
                    m[(j, i)].as_f64()
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// The input must be symmetric to 1e-10; the solver satisfies the
/// reconstruction contract `||m - Q diag(e) Q^T|| <= 1e-8 ||m||`.
pub fn symmetric_eigenvalues<T: Real>(m: &Mat<T>) -> Result<Vec<T>> {
    Ok(symmetric_eigendecomposition(m)?.0)
}

/// Full symmetric eigendecomposition `(eigenvalues, eigenvectors)`, both
/// sorted by descending eigenvalue; column `j` of the matrix is the
/// eigenvector for eigenvalue `j`.
pub fn symmetric_eigendecomposition<T: Real>(m: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    check_symmetric(m, 1e-10)?;
    let decomp = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..decomp.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        decomp.eigenvalues[b]
            .partial_cmp(&decomp.eigenvalues[a])
            .expect("real eigenvalues")
    });
    let values: Vec<T> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(m.nrows(), m.ncols(), |i, j| decomp.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Singular values of an arbitrary matrix, sorted descending.
pub fn singular_values<T: Real>(m: &Mat<T>) -> Vec<T> {
    let mut sv: Vec<T> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are real"));
    sv
}

/// Largest singular value (operator 2-norm) via exact SVD.
pub fn spectral_norm<T: Real>(m: &Mat<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// Largest eigenvalue modulus, via the real Schur form.
pub fn spectral_radius<T: Real>(m: &Mat<T>) -> T {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .fold(T::zero(), |acc, c| acc.max(c.re.hypot(c.im)))
}

/// Eigenvalue moduli of a (possibly nonsymmetric) real matrix, sorted
/// descending.
pub fn eigenvalue_moduli<T: Real>(m: &Mat<T>) -> Vec<T> {
    let mut moduli: Vec<T> = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re.hypot(c.im))
        .collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).expect("moduli are real"));
    moduli
}

/// Haar-distributed random orthogonal `d x d` matrix.
///
/// Sign-fixed QR of an i.i.d. standard Gaussian matrix: column signs are
/// chosen so the R factor has a positive diagonal, which makes the draw both
/// Haar-distributed and seed-deterministic.
pub fn random_orthogonal<T: Real>(d: usize, seed: u64) -> Result<Mat<T>> {
    if d == 0 {
        return Err(Error::invalid("orthogonal matrix needs d >= 1"));
    }
    let mut rng = Prng::seed_from(seed);
    let gaussian: Mat<T> = rng.normal_matrix(d, d, 1.0);
    let qr = gaussian.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < T::zero() {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// Rescales `m` so its spectral radius (largest eigenvalue modulus) equals
/// `rho`. Errors when the spectral radius is numerically zero (zero or
/// nilpotent input), since no rescaling can reach a positive target.
pub fn scale_spectral_radius<T: Real>(m: &Mat<T>, rho: f64) -> Result<Mat<T>> {
    if rho < 0.0 {
        return Err(Error::invalid(format!("target radius must be >= 0, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(Mat::zeros(m.nrows(), m.ncols()));
    }
    let radius = spectral_radius(m);
    if radius <= T::of(1e-300) {
        return Err(Error::invalid(
            "matrix has zero spectral radius; cannot scale to a positive target",
        ));
    }
    Ok(m * (T::of(rho) / radius))
}

/// Closed-form squared singular values of the vectorized Jacobian of a
/// linear message-passing layer `H -> C H W`.
///
/// Given the eigenvalues `{lambda_i}` of the symmetric operator `C` and the
/// weight matrix `W`, the Jacobian is `W^T (x) C`, and its squared singular
/// values are exactly the products `lambda_i^2 * mu_j`, where `{mu_j}` is
/// the spectrum of the Gram matrix `W^T W` (for square `W` this coincides
/// with the spectrum of `W W^T`). Cardinality is `n * ncols(W)`.
pub fn kron_jacobian_spectrum<T: Real>(
    adj_eigenvalues: &[T],
    w: &Mat<T>,
) -> Result<SpectrumReport<T>> {
    let bound = T::one() + T::of(1e-10);
    for &l in adj_eigenvalues {
        if l.abs() > bound {
            return Err(Error::invalid(format!(
                "adjacency eigenvalue modulus {} exceeds 1",
                l.abs().as_f64()
            )));
        }
    }
    let gram = w.tr_mul(w); // W^T W, symmetric PSD
    let mu = symmetric_eigenvalues(&gram)?;
    let mut values = Vec::with_capacity(adj_eigenvalues.len() * mu.len());
    for &l in adj_eigenvalues {
        for &m in &mu {
            // Gram eigenvalues are >= 0 up to roundoff; clamp the noise
            values.push((l * l * m).max(T::zero()));
        }
    }
    Ok(SpectrumReport::from_values(values))
}

/// Mean and variance of the squared singular values `gamma_{i,j}` of a
/// Gaussian-initialized linear layer Jacobian: `E = lambda^2 sigma^2` and
/// `Var = lambda^4 sigma^4 d_k / d_{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpMoments {
    pub mean: f64,
    pub variance: f64,
    pub lambda: f64,
    pub sigma2: f64,
    pub d_k: usize,
    pub d_k_minus_1: usize,
}

pub fn mp_moments(lambda: f64, sigma2: f64, d_k: usize, d_k_minus_1: usize) -> Result<MpMoments> {
    if sigma2 <= 0.0 {
        return Err(Error::invalid("sigma2 must be positive"));
    }
    if d_k == 0 || d_k_minus_1 == 0 {
        return Err(Error::invalid("dimensions must be >= 1"));
    }
    let mean = lambda * lambda * sigma2;
    let variance = lambda.powi(4) * sigma2 * sigma2 * d_k as f64 / d_k_minus_1 as f64;
    Ok(MpMoments {
        mean,
        variance,
        lambda,
        sigma2,
        d_k,
        d_k_minus_1,
    })
}

/// Monte Carlo estimates for [`mp_moments`], with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpEmpirical {
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
    pub trials: usize,
}

/// Samples the squared-singular-value population `gamma = lambda^2 mu`.
///
/// Normalization convention: the weight `W in R^{d_{k-1} x d_k}` has i.i.d.
/// `N(0, sigma^2 / d_{k-1})` entries (variance scaled by the input
/// dimension), and `mu` ranges over the spectrum of the Gram matrix
/// `W^T W in R^{d_k x d_k}`. This is the unique scaling for which the
/// population mean is `sigma^2` for every shape, and it reproduces the
/// variance ratio `d_k / d_{k-1}` exactly; a brute-force check lives in the
/// tests. Per-trial statistics are aggregated across `trials` independent
/// draws, and the standard errors are the spread of the per-trial statistics
/// divided by `sqrt(trials)`.
pub fn mp_empirical_check(
    lambda: f64,
    sigma2: f64,
    d_k: usize,
    d_k_minus_1: usize,
    trials: usize,
    seed: u64,
) -> Result<MpEmpirical> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if sigma2 <= 0.0 {
        return Err(Error::invalid("sigma2 must be positive"));
    }
    if d_k == 0 || d_k_minus_1 == 0 {
        return Err(Error::invalid("dimensions must be >= 1"));
    }
    let std_dev = (sigma2 / d_k_minus_1 as f64).sqrt();
    let mut trial_means = Vec::with_capacity(trials);
    let mut trial_vars = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = Prng::seed_from(derive_seed_indexed(seed, "mp-trial", t));
        let w: Mat<f64> = rng.normal_matrix(d_k_minus_1, d_k, std_dev);
        let gram = w.tr_mul(&w);
        let mu = gram.symmetric_eigen().eigenvalues;
        let l2 = lambda * lambda;
        let n = mu.len() as f64;
        let mean = mu.iter().map(|&m| l2 * m).sum::<f64>() / n;
        let var = mu
            .iter()
            .map(|&m| {
                let g = l2 * m;
                (g - mean) * (g - mean)
            })
            .sum::<f64>()
            / n;
        trial_means.push(mean);
        trial_vars.push(var);
    }
    let agg = |xs: &[f64]| -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return (mean, f64::INFINITY);
        }
        let sample_var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, (sample_var / n).sqrt())
    };
    let (mean, mean_se) = agg(&trial_means);
    let (variance, var_se) = agg(&trial_vars);
    Ok(MpEmpirical {
        mean,
        variance,
        mean_std_error: mean_se,
        variance_std_error: var_se,
        trials,
    })
}

/// Result of power-iteration operator-norm estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNormEstimate<T> {
    pub value: T,
    /// False when the relative change had not dropped below tolerance after
    /// `max_iter` iterations on some restart; the value is still the best
    /// estimate found.
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates the largest singular value of a linear map given as a pair of
/// callables (the map and its adjoint).
///
/// Runs power iteration on `A^T A` from 3 deterministic random starts and
/// takes the maximum, which guards against an unlucky start lying in an
/// orthogonal eigenspace of a degenerate spectrum.
pub fn operator_norm<T: Real>(
    apply: &dyn Fn(&ColVec<T>) -> ColVec<T>,
    apply_adjoint: &dyn Fn(&ColVec<T>) -> ColVec<T>,
    dim: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> OperatorNormEstimate<T> {
    let mut best = T::zero();
    let mut converged = true;
    let mut total_iterations = 0;
    for restart in 0..3 {
        let mut rng = Prng::seed_from(derive_seed_indexed(seed, "opnorm-restart", restart));
        let mut v: ColVec<T> = rng.normal_vector(dim, 1.0);
        let norm = v.norm();
        if norm == T::zero() {
            continue;
        }
        v /= norm;
        let mut estimate = T::zero();
        let mut this_converged = false;
        for _ in 0..max_iter {
            total_iterations += 1;
            let w = apply(&v);
            let s = w.norm();
            if s == T::zero() {
                estimate = T::zero();
                this_converged = true;
                break;
            }
            let z = apply_adjoint(&w);
            let zn = z.norm();
            if zn == T::zero() {
                estimate = s;
                this_converged = true;
                break;
            }
            v = z / zn;
            let change = (s - estimate).abs();
            estimate = s;
            if change <= T::of(tol) * estimate.max(T::one()) {
                this_converged = true;
                break;
            }
        }
        converged &= this_converged;
        best = best.max(estimate);
    }
    OperatorNormEstimate {
        value: best,
        converged,
        iterations: total_iterations,
    }
}

/// [`operator_norm`] for an explicit matrix.
pub fn operator_norm_matrix<T: Real>(
    m: &Mat<T>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> OperatorNormEstimate<T> {
    let mt = m.transpose();
    operator_norm(
        &|v| m * v,
        &|v| &mt * v,
        m.ncols(),
        tol,
        max_iter,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat64;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_eigenvalues() {
        let e = symmetric_eigenvalues(&Mat64::identity(3, 3)).unwrap();
        assert_eq!(e, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn reflection_eigenvalues() {
        let m = Mat64::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn self_loop_edge_graph_eigenvalues() {
        // \hat A of the 2-node single-edge graph
        let m = Mat64::from_element(2, 2, 0.5);
        let e = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = Mat64::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(symmetric_eigenvalues(&m).is_err());
    }

    #[test]
    fn reconstruction_residual_meets_contract() {
        let mut rng = Prng::seed_from(99);
        for _ in 0..10 {
            let raw: Mat64 = rng.normal_matrix(12, 12, 1.0);
            let m = (&raw + raw.transpose()) / 2.0;
            let (vals, q) = symmetric_eigendecomposition(&m).unwrap();
            let rebuilt = &q * Mat64::from_diagonal(&crate::Vec64::from_vec(vals)) * q.transpose();
            assert!((rebuilt - &m).norm() <= 1e-8 * m.norm().max(1.0));
        }
    }

    #[test]
    fn singular_values_of_diagonal_zero_orthogonal() {
        assert_eq!(
            singular_values(&Mat64::from_partial_diagonal(2, 2, &[2.0, 3.0])),
            vec![3.0, 2.0]
        );
        assert_eq!(singular_values(&Mat64::zeros(3, 2)), vec![0.0, 0.0]);
        let u = random_orthogonal::<f64>(6, 4).unwrap();
        for s in singular_values(&u) {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_orthogonal_is_orthogonal_and_deterministic() {
        for d in [1usize, 3, 64] {
            let u = random_orthogonal::<f64>(d, 7).unwrap();
            let gram = u.tr_mul(&u);
            assert!(max_abs(&(gram - Mat64::identity(d, d))) <= 1e-10, "d = {d}");
        }
        let a = random_orthogonal::<f64>(16, 5).unwrap();
        assert_eq!(a, random_orthogonal::<f64>(16, 5).unwrap());
        assert_ne!(a, random_orthogonal::<f64>(16, 6).unwrap());
        let one = random_orthogonal::<f64>(1, 11).unwrap();
        assert_abs_diff_eq!(one[(0, 0)].abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn scale_spectral_radius_cases() {
        let u = random_orthogonal::<f64>(8, 3).unwrap();
        let half = scale_spectral_radius(&u, 0.5).unwrap();
        for s in singular_values(&half) {
            assert_abs_diff_eq!(s, 0.5, epsilon = 1e-10);
        }
        let d = Mat64::from_partial_diagonal(2, 2, &[2.0, 1.0]);
        let scaled = scale_spectral_radius(&d, 1.0).unwrap();
        assert_abs_diff_eq!(scaled[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled[(1, 1)], 0.5, epsilon = 1e-12);
        let same = scale_spectral_radius(&u, 1.0).unwrap();
        assert!(max_abs(&(&same - &u)) <= 1e-10);
        assert!(scale_spectral_radius(&Mat64::zeros(3, 3), 1.0).is_err());
        assert_abs_diff_eq!(
            spectral_radius(&scale_spectral_radius(&d, 0.3).unwrap()),
            0.3,
            epsilon = 1e-8
        );
    }

    #[test]
    fn kron_spectrum_examples() {
        let w = Mat64::from_partial_diagonal(2, 2, &[2.0, 3.0]);
        let report = kron_jacobian_spectrum(&[1.0, 0.0], &w).unwrap();
        assert_eq!(report.values.len(), 4);
        assert_abs_diff_eq!(report.values[0], 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.values[1], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.values[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.values[3], 0.0, epsilon = 1e-12);

        let id = Mat64::identity(4, 4);
        let ones = kron_jacobian_spectrum(&[1.0], &id).unwrap();
        assert_eq!(ones.values.len(), 4);
        for v in &ones.values {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ones.eoc_distance, 0.0, epsilon = 1e-12);

        let zero = kron_jacobian_spectrum(&[0.3, -0.7], &Mat64::zeros(3, 3)).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));

        assert!(kron_jacobian_spectrum(&[1.5], &id).is_err());
    }

    /// Oracle for the closed form: assemble `W^T (x) C` explicitly and take
    /// its exact SVD.
    fn explicit_kron_squared_svs(c: &Mat64, w: &Mat64) -> Vec<f64> {
        let n = c.nrows();
        let (wr, wc) = (w.nrows(), w.ncols());
        let mut j = Mat64::zeros(wc * n, wr * n);
        for bi in 0..wc {
            for bj in 0..wr {
                let scale = w[(bj, bi)]; // (W^T)[bi, bj]
                for i in 0..n {
                    for jj in 0..n {
                        j[(bi * n + i, bj * n + jj)] = scale * c[(i, jj)];
                    }
                }
            }
        }
        let mut sv: Vec<f64> = singular_values(&j).iter().map(|s| s * s).collect();
        // J is (n*wc) x (n*wr); pad implicit zeros so the multiset has n*wc entries
        while sv.len() < n * wc {
            sv.push(0.0);
        }
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv.truncate(n * wc);
        sv
    }

    #[test]
    fn kron_spectrum_matches_explicit_svd_oracle() {
        use crate::graph::{generate, normalized_adjacency, AdjKind, GeneratorKind, GeneratorSpec};
        let mut rng = Prng::seed_from(2024);
        for trial in 0..30u64 {
            let n = 2 + (trial as usize % 7);
            let g = generate(&GeneratorSpec {
                kind: GeneratorKind::ErdosRenyi { n, p: 0.5 },
                seed: trial,
            })
            .unwrap();
            let adj = normalized_adjacency::<f64>(&g, AdjKind::Sym).unwrap();
            let d = 1 + (trial as usize % 5);
            let w: Mat64 = rng.normal_matrix(d, d, 1.0);
            let closed = kron_jacobian_spectrum(adj.eigenvalues(), &w).unwrap();
            let explicit = explicit_kron_squared_svs(&adj.to_dense(), &w);
            assert_eq!(closed.values.len(), explicit.len());
            let scale = explicit.first().copied().unwrap_or(0.0).max(1.0);
            for (a, b) in closed.values.iter().zip(&explicit) {
                assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn mp_moment_formulas() {
        let m = mp_moments(1.0, 1.0, 128, 128).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.variance, 1.0);
        let m = mp_moments(0.5, 1.0, 128, 128).unwrap();
        assert_eq!(m.mean, 0.25);
        assert_eq!(m.variance, 0.0625);
        let m = mp_moments(0.0, 2.0, 64, 32).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, 0.0);
        assert!(mp_moments(1.0, 0.0, 4, 4).is_err());
    }

    #[test]
    fn mp_empirical_matches_theory_at_square_shape() {
        for (lambda, want_mean) in [(1.0, 1.0), (0.5, 0.25)] {
            let est = mp_empirical_check(lambda, 1.0, 256, 256, 50, 7).unwrap();
            let theory = mp_moments(lambda, 1.0, 256, 256).unwrap();
            assert!(
                (est.mean - theory.mean).abs() <= 3.0 * est.mean_std_error,
                "lambda {lambda}: mean {} vs {} (se {})",
                est.mean,
                want_mean,
                est.mean_std_error
            );
            assert!(
                (est.variance - theory.variance).abs() <= 3.0 * est.variance_std_error,
                "lambda {lambda}: var {} vs {} (se {})",
                est.variance,
                theory.variance,
                est.variance_std_error
            );
        }
    }

    #[test]
    fn mp_variance_ratio_tracks_shape() {
        // d_k / d_{k-1} = 2: variance should be ~2 sigma^4 within 10%
        let est = mp_empirical_check(1.0, 1.0, 512, 256, 30, 11).unwrap();
        assert!((est.mean - 1.0).abs() <= 3.0 * est.mean_std_error);
        assert!(
            (est.variance / 2.0 - 1.0).abs() < 0.1,
            "variance {} should be within 10% of 2",
            est.variance
        );
        assert!(mp_empirical_check(1.0, 1.0, 16, 16, 0, 1).is_err());
    }

    #[test]
    fn operator_norm_basics() {
        let id = |v: &crate::Vec64| v.clone();
        let est = operator_norm::<f64>(&id, &id, 5, 1e-10, 200, 1);
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-8);
        assert!(est.converged);

        let halve = |v: &crate::Vec64| v * 0.5;
        let est = operator_norm::<f64>(&halve, &halve, 4, 1e-10, 200, 2);
        assert_abs_diff_eq!(est.value, 0.5, epsilon = 1e-8);

        let m = Mat64::from_partial_diagonal(2, 2, &[3.0, 1.0]);
        let est = operator_norm_matrix(&m, 1e-10, 500, 3);
        assert_abs_diff_eq!(est.value, 3.0, epsilon = 1e-7);

        // agrees with exact SVD on a random rectangular matrix
        let mut rng = Prng::seed_from(17);
        let r: Mat64 = rng.normal_matrix(7, 4, 1.0);
        let est = operator_norm_matrix(&r, 1e-12, 2000, 4);
        assert_abs_diff_eq!(est.value, spectral_norm(&r), epsilon = 1e-8);
    }

    #[test]
    fn spectrum_report_statistics_recompute() {
        let r = SpectrumReport::from_values(vec![0.5, 2.0, 1.0]);
        assert_eq!(r.values, vec![2.0, 1.0, 0.5]);
        assert_abs_diff_eq!(r.mean, 3.5 / 3.0, epsilon = 1e-15);
        assert_eq!(r.max, 2.0);
        assert_abs_diff_eq!(r.eoc_distance, 0.5, epsilon = 1e-15);
        assert_eq!(r.median(), 1.0);
        let json = r.to_json();
        assert!(json.contains("eoc_distance"));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        // eoc is zero exactly when all moduli are 1
        let unit = SpectrumReport::from_values(vec![1.0; 5]);
        assert_eq!(unit.eoc_distance, 0.0);
    }
}
