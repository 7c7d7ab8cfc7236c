//! Independent reference computations for tests.
//!
//! Nothing here calls the crate's entropy or partial-trace code: marginals are
//! taken by explicit index loops and spectra come from a cyclic Jacobi
//! iteration on the real `[[Re, -Im], [Im, Re]]` embedding, where every
//! eigenvalue of the complex matrix appears twice.

#![allow(dead_code)]

use backflow_core::linalg::{c, CMatrix};
use backflow_core::tensor::random::{ginibre, haar_matrix};
use backflow_core::tensor::{DensityMatrix, SystemLayout};
use nalgebra::DMatrix;
use rand::Rng;

/// Marginal on the factors in `keep`, for a state with factor dims `dims`.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let n = dims.len();
    let total: usize = dims.iter().product();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let digits = |mut idx: usize| {
        let mut d = vec![0; n];
        for f in (0..n).rev() {
            d[f] = idx % dims[f];
            idx /= dims[f];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            let traced_equal = (0..n).all(|f| keep.contains(&f) || di[f] == dj[f]);
            if traced_equal {
                out[(kept_index(&di), kept_index(&dj))] += m[(i, j)];
            }
        }
    }
    out
}

fn real_embedding(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Cyclic Jacobi for a real symmetric matrix: `(values, vectors)` with
/// `a = V diag(values) Vᵀ`.
fn jacobi(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let (cs, sn) = (1.0 / (t * t + 1.0).sqrt(), t / (t * t + 1.0).sqrt());
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Eigenvalues of a Hermitian matrix, each listed once, ascending.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v = jacobi(real_embedding(m)).0;
    v.sort_by(f64::total_cmp);
    assert!(
        v.iter().all(|x| x.is_finite()),
        "oracle spectrum not finite"
    );
    v.into_iter().step_by(2).collect()
}

/// `f(H)` through the real embedding, which commutes with functional calculus.
fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = m.nrows();
    let (values, vectors) = jacobi(real_embedding(m));
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        2 * n,
        values.into_iter().map(&f),
    ));
    let r = &vectors * d * vectors.transpose();
    CMatrix::from_fn(n, n, |i, j| c(r[(i, j)], r[(i + n, j)]))
}

pub fn entropy_bits(m: &CMatrix) -> f64 {
    if m.nrows() == 1 {
        return 0.0;
    }
    eigenvalues(m)
        .iter()
        .filter(|&&x| x > 1e-14)
        .map(|&x| -x * x.log2())
        .sum()
}

fn h(m: &CMatrix, dims: &[usize], set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let mut s = set.to_vec();
    s.sort_unstable();
    entropy_bits(&partial_trace(m, dims, &s))
}

fn join(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().chain(b).copied().collect()
}

pub fn qmi(m: &CMatrix, dims: &[usize], a: &[usize], b: &[usize]) -> f64 {
    h(m, dims, a) + h(m, dims, b) - h(m, dims, &join(a, b))
}

/// `I(A;C|B)`.
pub fn qcmi(m: &CMatrix, dims: &[usize], a: &[usize], cc: &[usize], b: &[usize]) -> f64 {
    h(m, dims, &join(a, b)) + h(m, dims, &join(b, cc))
        - h(m, dims, b)
        - h(m, dims, &join(&join(a, b), cc))
}

/// Convenience: factor indices of `labels` in `rho`'s layout.
pub fn idx(rho: &DensityMatrix, labels: &[&str]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| rho.layout().position(l).unwrap())
        .collect()
}

pub fn dims(rho: &DensityMatrix) -> Vec<usize> {
    rho.layout().dims()
}

fn random_state<R: Rng>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    let g = ginibre(rng, d, rank);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    m * c(1.0 / tr, 0.0)
}

/// An exact Markov chain `A - B - C` on `2 ⊗ 4 ⊗ 2`:
/// `B = ⊕_j (bL_j ⊗ bR_j)` and `σ = ⊕_j p_j ρ_{A bL_j} ⊗ ρ_{bR_j C}`, optionally
/// followed by a random unitary on `B`.
pub fn markov_chain<R: Rng>(rng: &mut R, scramble: bool) -> DensityMatrix {
    let splits: [&[(usize, usize)]; 4] = [
        &[(2, 2)],
        &[(1, 2), (2, 1)],
        &[(1, 1), (1, 1), (1, 1), (1, 1)],
        &[(2, 1), (1, 1), (1, 1)],
    ];
    let blocks = splits[rng.random_range(0..splits.len())];
    let (da, db, dc) = (2usize, 4usize, 2usize);
    let weights: Vec<f64> = blocks.iter().map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut sigma = CMatrix::zeros(da * db * dc, da * db * dc);
    let mut offset = 0;
    for (&(dl, dr), w) in blocks.iter().zip(&weights) {
        let p = w / total;
        let left_rank = rng.random_range(1..=da * dl);
        let left = random_state(rng, da * dl, left_rank);
        let right_rank = rng.random_range(1..=dr * dc);
        let right = random_state(rng, dr * dc, right_rank);
        for a in 0..da {
            for l in 0..dl {
                for r in 0..dr {
                    for cc in 0..dc {
                        let row = (a * db + offset + l * dr + r) * dc + cc;
                        for a2 in 0..da {
                            for l2 in 0..dl {
                                for r2 in 0..dr {
                                    for c2 in 0..dc {
                                        let col = (a2 * db + offset + l2 * dr + r2) * dc + c2;
                                        sigma[(row, col)] += left[(a * dl + l, a2 * dl + l2)]
                                            * right[(r * dc + cc, r2 * dc + c2)]
                                            * c(p, 0.0);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        offset += dl * dr;
    }
    if scramble {
        let u = haar_matrix(rng, db);
        let full = CMatrix::identity(da, da)
            .kronecker(&u)
            .kronecker(&CMatrix::identity(dc, dc));
        sigma = &full * sigma * full.adjoint();
    }
    let layout = SystemLayout::new([("A", da), ("B", db), ("C", dc)]).unwrap();
    DensityMatrix::new(layout, sigma).unwrap()
}

/// `(1 - λ) σ + λ I / d`.
pub fn depolarized(sigma: &DensityMatrix, lambda: f64) -> DensityMatrix {
    let d = sigma.dim();
    let m =
        sigma.matrix() * c(1.0 - lambda, 0.0) + CMatrix::identity(d, d) * c(lambda / d as f64, 0.0);
    DensityMatrix::new(sigma.layout().clone(), m).unwrap()
}

/// `½ Σ_i |ii⟩⟨ii|_AB ⊗ |i⟩⟨i|_X`: the separable state with a classical copy.
pub fn classical_copy_extension() -> CMatrix {
    let mut m = CMatrix::zeros(8, 8);
    m[(0, 0)] = c(0.5, 0.0);
    m[(7, 7)] = c(0.5, 0.0);
    m
}

/// `¼ Σ_ab |ab⟩⟨ab| ⊗ |a⊕b⟩⟨a⊕b|` on `A ⊗ B ⊗ X(4)`; only `X ∈ {0,1}` is used.
pub fn xor_extension() -> CMatrix {
    let mut m = CMatrix::zeros(16, 16);
    for a in 0..2 {
        for b in 0..2 {
            let i = (a * 2 + b) * 4 + (a ^ b);
            m[(i, i)] = c(0.25, 0.0);
        }
    }
    m
}

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    hermitian_function(m, |x| if x > 1e-14 { x.sqrt() } else { 0.0 })
}

/// `(Tr √(√α β √α))²`. Eigenvalues of `√α β √α` below `1e-13` are rounding
/// noise; their square roots would otherwise add ~1e-8 each.
pub fn fidelity(alpha: &CMatrix, beta: &CMatrix) -> f64 {
    let s = psd_sqrt(alpha);
    let inner = &s * beta * &s;
    let root: f64 = eigenvalues(&inner)
        .iter()
        .filter(|&&x| x > 1e-13)
        .map(|x| x.sqrt())
        .sum();
    root * root
}

/// `h(p) = bits` with `p ≤ ½`, by bisection.
pub fn binary_entropy_root(bits: f64) -> f64 {
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let (mut lo, mut hi) = (1e-300, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
