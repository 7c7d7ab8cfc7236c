//! Dense complex linear algebra used throughout the crate.
//!
//! Everything works on `DMatrix<Complex64>`. Hermitian routines symmetrize
//! their input before decomposing, so callers may pass matrices that are
//! Hermitian only up to rounding.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>, vectors: Option<&CMatrix>) -> bool {
    values.into_iter().all(|x| x.is_finite())
        && vectors.is_none_or(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Rotations tried when the direct decomposition breaks down.
const EIGEN_RETRIES: u64 = 4;

/// `SymmetricEigen` of a Hermitian matrix. nalgebra's complex reduction can
/// produce NaN on inputs with exact zero structure; those are retried in a
/// fixed Haar-random basis.
fn hermitian_eigen(h: CMatrix, vectors: bool) -> (Vec<f64>, Option<CMatrix>) {
    let n = h.nrows();
    let direct = |m: CMatrix| {
        if vectors {
            let e = SymmetricEigen::new(m);
            (
                e.eigenvalues.iter().copied().collect::<Vec<_>>(),
                Some(e.eigenvectors),
            )
        } else {
            (m.symmetric_eigenvalues().iter().copied().collect(), None)
        }
    };
    let (values, vecs) = direct(h.clone());
    if all_finite(&values, vecs.as_ref()) {
        return (values, vecs);
    }
    for attempt in 0..EIGEN_RETRIES {
        let w = crate::tensor::random::haar_matrix(
            &mut crate::tensor::random::rng_from_seed(attempt),
            n,
        );
        let (values, vecs) = direct(hermitian_part(&(w.adjoint() * &h * &w)));
        if all_finite(&values, vecs.as_ref()) {
            log::debug!(
                "eigendecomposition of a {n}x{n} matrix needed {} rotation(s)",
                attempt + 1
            );
            return (values, vecs.map(|v| w * v));
        }
    }
    (values, vecs)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Returns `(values, vectors)` where column `k` of `vectors` belongs to
/// `values[k]`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    if n == 1 {
        return (vec![m[(0, 0)].re], identity(1));
    }
    let (raw, vecs) = hermitian_eigen(hermitian_part(m), true);
    let vecs = vecs.expect("eigenvectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let values = order.iter().map(|&k| raw[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m[(0, 0)].re];
    }
    let mut values = hermitian_eigen(hermitian_part(m), false).0;
    values.sort_by(f64::total_cmp);
    values
}

/// Rebuild `V diag(f(λ)) V†` from a decomposition.
pub fn reassemble(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = f(v);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn map_hermitian(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    reassemble(&values, &vectors, |x| c(f(x), 0.0))
}

/// Square root of a positive semidefinite matrix; eigenvalues below `cutoff`
/// are treated as zero.
pub fn psd_sqrt(m: &CMatrix, cutoff: f64) -> CMatrix {
    map_hermitian(m, |x| if x > cutoff { x.sqrt() } else { 0.0 })
}

/// Moore-Penrose inverse square root on the numerical support.
pub fn pinv_sqrt(m: &CMatrix, cutoff: f64) -> CMatrix {
    map_hermitian(m, |x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 })
}

/// Orthogonal projector onto the eigenspaces with eigenvalue above `cutoff`.
pub fn support_projector(m: &CMatrix, cutoff: f64) -> CMatrix {
    map_hermitian(m, |x| if x > cutoff { 1.0 } else { 0.0 })
}

/// Kronecker product, first argument most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `exp(k)` for skew-Hermitian `k`, computed spectrally so the result is
/// unitary to working precision.
pub fn expm_skew_hermitian(k: &CMatrix) -> CMatrix {
    // k = iH with H Hermitian
    let h = k * c(0.0, -1.0);
    let (values, vectors) = eigh(&h);
    reassemble(&values, &vectors, |x| Complex64::from_polar(1.0, x))
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator norm of a Hermitian matrix.
pub fn hermitian_operator_norm(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Iteration cap for the SVD; nalgebra's uncapped loop can fail to
/// terminate on some exactly structured inputs.
pub const SVD_MAX_ITER: usize = 10_000;

/// Sum of singular values. Falls back to the spectrum of `M†M` when the SVD
/// does not converge.
pub fn nuclear_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return f64::NAN;
    }
    match m.clone().try_svd(false, false, f64::EPSILON, SVD_MAX_ITER) {
        Some(svd) if svd.singular_values.iter().all(|s| s.is_finite()) => {
            svd.singular_values.iter().sum()
        }
        _ => {
            log::debug!(
                "SVD did not converge on a {}x{} matrix; using the Gram spectrum",
                m.nrows(),
                m.ncols()
            );
            let gram = eigvalsh(&(m.adjoint() * m));
            let floor = 64.0 * f64::EPSILON * gram.last().copied().unwrap_or(0.0);
            gram.iter()
                .map(|&x| if x > floor { x.sqrt() } else { 0.0 })
                .sum()
        }
    }
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Entropy in bits of a probability vector; entries at or below `cutoff`
/// contribute nothing.
pub fn shannon_bits(probabilities: impl IntoIterator<Item = f64>, cutoff: f64) -> f64 {
    probabilities
        .into_iter()
        .filter(|&p| p > cutoff)
        .map(|p| -p * p.log2())
        .sum()
}

/// Extend the orthonormal columns of `isometry` (n x m) to an n x n unitary.
/// The first m columns of the result are the input columns.
pub fn complete_to_unitary(isometry: &CMatrix) -> CMatrix {
    let n = isometry.nrows();
    let m = isometry.ncols();
    let complement = identity(n) - isometry * isometry.adjoint();
    let (values, vectors) = eigh(&complement);
    let mut out = CMatrix::zeros(n, n);
    out.columns_mut(0, m).copy_from(isometry);
    // eigenvalues of the complement projector are 0 (m times) then 1
    for (j, value) in values.iter().enumerate().skip(m) {
        debug_assert!(*value > 0.5);
        out.set_column(j, &vectors.column(j));
    }
    out
}
