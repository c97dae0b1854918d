//! Shared dense linear algebra: SVD-based pseudoinverse, sorted
//! eigendecompositions, and small matrix utilities used across the crate.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Inverse, SVD};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("eigendecomposition failed: {0}")]
    Eig(String),
    #[error("singular value decomposition failed: {0}")]
    Svd(String),
    #[error("matrix inversion failed: {0}")]
    Inverse(String),
}

/// Promote a real matrix to complex entries.
pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}

/// Frobenius norm.
pub fn frob(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of the difference `a - b`.
pub fn frob_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖a - b‖_F / ‖b‖_F`, with the convention 0/0 = 0.
pub fn rel_frob_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let denom = frob(b);
    if denom == 0.0 {
        return frob(a);
    }
    frob_diff(a, b) / denom
}

/// Result of an SVD-based pseudoinverse.
pub struct Pinv {
    pub matrix: Array2<C64>,
    /// Number of singular values retained.
    pub rank: usize,
    /// Largest singular value of the input (0 for the zero matrix).
    pub sigma_max: f64,
}

/// Moore–Penrose pseudoinverse with relative truncation: singular values
/// below `rcond * sigma_max` are dropped. The zero matrix maps to zero.
pub fn pinv(a: &Array2<C64>, rcond: f64) -> Result<Pinv, LinalgError> {
    let (m, n) = a.dim();
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| LinalgError::Svd(e.to_string()))?;
    let u = u.expect("svd requested u");
    let vt = vt.expect("svd requested vt");
    let sigma_max = s.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rcond * sigma_max;
    let k = s.len();
    let mut rank = 0;
    let mut sinv = Array2::<C64>::zeros((k, k));
    for (i, &sv) in s.iter().enumerate() {
        if sv > cutoff && sv > 0.0 {
            sinv[(i, i)] = C64::new(1.0 / sv, 0.0);
            rank += 1;
        }
    }
    // A = U S V^H  =>  A+ = V S+ U^H, using the k leading columns of U and
    // rows of V^H (LAPACK may return full square factors)
    let u_k = u.slice(s![.., ..k]).to_owned();
    let vt_k = vt.slice(s![..k, ..]).to_owned();
    let matrix = conj_transpose(&vt_k).dot(&sinv).dot(&conj_transpose(&u_k));
    debug_assert_eq!(matrix.dim(), (n, m));
    Ok(Pinv {
        matrix,
        rank,
        sigma_max,
    })
}

/// Conjugate transpose.
pub fn conj_transpose(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Matrix inverse, complex.
pub fn inv(a: &Array2<C64>) -> Result<Array2<C64>, LinalgError> {
    a.inv().map_err(|e| LinalgError::Inverse(e.to_string()))
}

/// Eigendecomposition with a deterministic presentation: eigenvalues sorted
/// by descending modulus (ties: descending real part, then imaginary part),
/// right eigenvectors unit-normalized with their first significant component
/// rotated onto the positive real axis.
pub struct SortedEig {
    pub values: Array1<C64>,
    /// Right eigenvectors as columns, matching `values` order.
    pub vectors: Array2<C64>,
}

pub fn eig_sorted(a: &Array2<C64>) -> Result<SortedEig, LinalgError> {
    let (values, vectors) = a.eig().map_err(|e| LinalgError::Eig(e.to_string()))?;
    Ok(sort_eig(values, vectors))
}

pub(crate) fn sort_eig(values: Array1<C64>, vectors: Array2<C64>) -> SortedEig {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig_cmp(values[i], values[j]));
    let mut sorted_vals = Array1::<C64>::zeros(n);
    let mut sorted_vecs = Array2::<C64>::zeros(vectors.dim());
    for (dst, &src) in order.iter().enumerate() {
        sorted_vals[dst] = values[src];
        let col = normalize_eigvec(&vectors.column(src).to_owned());
        sorted_vecs.column_mut(dst).assign(&col);
    }
    SortedEig {
        values: sorted_vals,
        vectors: sorted_vecs,
    }
}

pub(crate) fn eig_cmp(a: C64, b: C64) -> std::cmp::Ordering {
    b.norm()
        .partial_cmp(&a.norm())
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(
            b.re.partial_cmp(&a.re)
                .unwrap_or(std::cmp::Ordering::Equal),
        )
        .then(
            b.im.partial_cmp(&a.im)
                .unwrap_or(std::cmp::Ordering::Equal),
        )
}

/// Unit 2-norm with the first component of magnitude above `1e-12 * max`
/// rotated to the positive real axis.
pub fn normalize_eigvec(v: &Array1<C64>) -> Array1<C64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.clone();
    }
    let max_abs = v.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let pivot = v
        .iter()
        .find(|z| z.norm() > 1e-12 * max_abs)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot / pivot.norm();
    v.mapv(|z| z / (phase * norm))
}

/// Left eigenvectors `W` satisfying `w_i^H K = λ_i w_i^H` and the
/// biorthogonality `w_i^H u_j = δ_ij`, computed as `(U^{-1})^H`. Returns
/// `None` when the right eigenvector matrix is numerically singular.
pub fn left_from_right(right: &Array2<C64>) -> Option<Array2<C64>> {
    match right.inv() {
        Ok(rinv) => Some(conj_transpose(&rinv)),
        Err(_) => None,
    }
}

/// Kronecker product of real matrices.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<f64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != 0.0 {
                out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                    .assign(&b.mapv(|x| aij * x));
            }
        }
    }
    out
}

/// Kronecker product of complex matrices.
pub fn kron_c(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != C64::new(0.0, 0.0) {
                out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                    .assign(&b.mapv(|x| aij * x));
            }
        }
    }
    out
}

/// Greedy one-to-one matching of two eigenvalue multisets; returns the
/// largest pairwise distance over the matching, or `f64::INFINITY` when the
/// lengths differ. Quadratic, intended for spectra of modest size.
pub fn eigenvalue_multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    // match in decreasing-modulus order so dominant eigenvalues pair first
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| eig_cmp(a[i], a[j]));
    for &i in &order {
        let mut best: Option<(usize, f64)> = None;
        for (j, &bv) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (a[i] - bv).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("lengths match");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
