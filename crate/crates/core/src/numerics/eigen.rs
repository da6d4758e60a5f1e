//! Smallest nonzero eigenpairs of graph Laplacians.
//!
//! Laplacians of connected graphs have a single zero eigenvalue with a
//! constant eigenvector. The solver deflates that known null vector and
//! targets the low end of the remaining spectrum: a dense symmetric
//! solve below [`DENSE_LIMIT`], Lanczos with full reorthogonalization
//! above it.

use super::sparse::SparseSymMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

/// Dimension up to which the dense symmetric solver is used.
pub const DENSE_LIMIT: usize = 2000;

/// Residual tolerance: a pair (λ, v) is accepted when
/// ‖Lv − λv‖₂ ≤ RESIDUAL_TOL · max(1, λ).
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("graph is disconnected: zero eigenvalue has multiplicity {0}")]
    DisconnectedGraph(usize),
    #[error("eigensolver failed to converge after {0} Lanczos steps")]
    ConvergenceFailure(usize),
}

/// The `k` smallest eigenvalues strictly greater than the zero
/// eigenvalue, with their orthonormal eigenvectors (one `Vec<f64>` per
/// eigenvector, ascending eigenvalue order).
///
/// # Panics
/// When `k` is outside `1..n`.
pub fn smallest_eigenpairs(
    l: &SparseSymMatrix,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    smallest_eigenpairs_impl(l, k, DENSE_LIMIT)
}

pub(crate) fn smallest_eigenpairs_impl(
    l: &SparseSymMatrix,
    k: usize,
    dense_limit: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    let n = l.n();
    assert!(k >= 1 && k < n, "k must satisfy 1 <= k < n (k={k}, n={n})");
    let components = l.pattern_components();
    if components > 1 {
        return Err(EigenError::DisconnectedGraph(components));
    }
    if n <= dense_limit {
        dense_smallest(l, k)
    } else {
        lanczos_smallest(l, k)
    }
}

fn dense_smallest(
    l: &SparseSymMatrix,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    let eig = l.to_dense().symmetric_eigen();
    let n = l.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // Skip the single zero eigenvalue of the connected Laplacian.
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().skip(1).take(k) {
        values.push(eig.eigenvalues[idx]);
        vectors.push(eig.eigenvectors.column(idx).iter().copied().collect());
    }
    Ok((values, vectors))
}

/// Lanczos with full reorthogonalization, deflating the constant null
/// vector, with dense eigen-extraction from the tridiagonal matrix.
fn lanczos_smallest(
    l: &SparseSymMatrix,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    let n = l.n();
    let max_steps = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b3c4d);
    let null = DVector::from_element(n, 1.0 / (n as f64).sqrt());

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut v = random_deflated(&mut rng, &basis, &null, n);
    basis.push(v.clone());

    let mut checkpoint = (4 * k + 40).min(max_steps);
    let mut work = vec![0.0; n];
    loop {
        // One Lanczos step from the newest basis vector.
        l.mul_vec(v.as_slice(), &mut work);
        let mut w = DVector::from_column_slice(&work);
        let a = v.dot(&w);
        alpha.push(a);
        w.axpy(-a, &v, 1.0);
        if basis.len() >= 2 {
            let prev = &basis[basis.len() - 2];
            w.axpy(-beta[beta.len() - 1], prev, 1.0);
        }
        // Full reorthogonalization (two passes) against the basis and
        // the deflated null vector.
        for _ in 0..2 {
            let c = null.dot(&w);
            w.axpy(-c, &null, 1.0);
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();

        let m = alpha.len();
        if m >= checkpoint || m >= max_steps || b < 1e-12 {
            if let Some(result) = extract_ritz(l, k, &basis, &alpha, &beta) {
                return Ok(result);
            }
            if m >= max_steps {
                return Err(EigenError::ConvergenceFailure(m));
            }
            checkpoint = (checkpoint + 40).min(max_steps);
        }

        if b < 1e-12 {
            // Krylov space exhausted; continue in a fresh direction.
            v = random_deflated(&mut rng, &basis, &null, n);
            beta.push(0.0);
        } else {
            v = w / b;
            beta.push(b);
        }
        basis.push(v.clone());
    }
}

fn random_deflated(
    rng: &mut ChaCha8Rng,
    basis: &[DVector<f64>],
    null: &DVector<f64>,
    n: usize,
) -> DVector<f64> {
    loop {
        let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let c = null.dot(&v);
        v.axpy(-c, null, 1.0);
        for q in basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Dense eigen-extraction from the tridiagonal coefficients; returns the
/// k smallest Ritz pairs when all pass the residual test.
fn extract_ritz(
    l: &SparseSymMatrix,
    k: usize,
    basis: &[DVector<f64>],
    alpha: &[f64],
    beta: &[f64],
) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = alpha.len();
    if m < k {
        return None;
    }
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let n = l.n();
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut work = vec![0.0; n];
    for &idx in order.iter().take(k) {
        let theta = eig.eigenvalues[idx];
        let s = eig.eigenvectors.column(idx);
        let mut y = DVector::zeros(n);
        for (j, q) in basis.iter().take(m).enumerate() {
            y.axpy(s[j], q, 1.0);
        }
        let norm = y.norm();
        if norm < 1e-12 {
            return None;
        }
        y /= norm;
        l.mul_vec(y.as_slice(), &mut work);
        let mut residual = 0.0;
        for i in 0..n {
            let d = work[i] - theta * y[i];
            residual += d * d;
        }
        if residual.sqrt() > RESIDUAL_TOL * theta.abs().max(1.0) {
            return None;
        }
        values.push(theta);
        vectors.push(y.as_slice().to_vec());
    }
    Some((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn laplacian(n: usize, edges: &[(usize, usize)]) -> SparseSymMatrix {
        let mut degree = vec![0.0; n];
        let mut l = SparseSymMatrix::new(n);
        for &(a, b) in edges {
            degree[a] += 1.0;
            degree[b] += 1.0;
            l.push(a, b, -1.0);
        }
        for (i, &d) in degree.iter().enumerate() {
            l.push(i, i, d);
        }
        l
    }

    #[test]
    fn path3_eigenvalues_match_hand_computation() {
        // Characteristic polynomial of the 3-node path Laplacian is
        // λ(λ−1)(λ−3), so the nonzero eigenvalues are {1, 3}.
        let l = laplacian(3, &[(0, 1), (1, 2)]);
        let (values, vectors) = smallest_eigenpairs(&l, 2).unwrap();
        assert_abs_diff_eq!(values[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(values[1], 3.0, epsilon = 1e-10);
        assert_eq!(vectors.len(), 2);
    }

    #[test]
    fn triangle_has_degenerate_pair() {
        // Complete-graph Laplacian spectrum is {0, n, n}.
        let l = laplacian(3, &[(0, 1), (1, 2), (0, 2)]);
        let (values, _) = smallest_eigenpairs(&l, 2).unwrap();
        assert_abs_diff_eq!(values[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(values[1], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn disconnected_graph_rejected() {
        let l = laplacian(4, &[(0, 1), (2, 3)]);
        match smallest_eigenpairs(&l, 2) {
            Err(EigenError::DisconnectedGraph(2)) => {}
            other => panic!("expected DisconnectedGraph(2), got {other:?}"),
        }
    }

    #[test]
    fn vectors_are_orthonormal_and_fiedler_positive() {
        let edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        let l = laplacian(10, &edges);
        let (values, vectors) = smallest_eigenpairs(&l, 4).unwrap();
        assert!(values[0] > 0.0, "Fiedler value must be positive");
        for i in 0..vectors.len() {
            for j in 0..vectors.len() {
                let dot: f64 = vectors[i]
                    .iter()
                    .zip(&vectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn lanczos_path_matches_dense_on_moderate_graph() {
        // Ring of 60 nodes with a few chords; force the Lanczos path by
        // setting the dense limit to zero.
        let mut edges: Vec<(usize, usize)> = (0..60).map(|i| (i, (i + 1) % 60)).collect();
        edges.push((0, 30));
        edges.push((15, 45));
        edges.push((10, 50));
        let l = laplacian(60, &edges);
        let (dense_vals, _) = smallest_eigenpairs_impl(&l, 5, usize::MAX).unwrap();
        let (lanczos_vals, lanczos_vecs) = smallest_eigenpairs_impl(&l, 5, 0).unwrap();
        for (d, s) in dense_vals.iter().zip(&lanczos_vals) {
            assert_abs_diff_eq!(d, s, epsilon = 1e-8);
        }
        // Residual bound holds pairwise.
        let mut work = vec![0.0; 60];
        for (val, vec) in lanczos_vals.iter().zip(&lanczos_vecs) {
            l.mul_vec(vec, &mut work);
            let res: f64 = work
                .iter()
                .zip(vec)
                .map(|(lv, v)| (lv - val * v).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-8 * val.max(1.0), "residual {res} too large");
        }
    }

    #[test]
    fn path_graph_closed_form_spectrum() {
        // P_n Laplacian eigenvalues are 2 − 2cos(πk/n), k = 0..n−1.
        for n in [3usize, 10, 25, 50] {
            let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
            let l = laplacian(n, &edges);
            let (values, _) = smallest_eigenpairs(&l, n - 1).unwrap();
            for (k, v) in values.iter().enumerate() {
                let expected = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / n as f64).cos();
                assert_abs_diff_eq!(*v, expected, epsilon = 1e-8);
            }
        }
    }
}
