//! Seeded random states, unitaries and channels.
//!
//! All generators draw from `ChaCha20Rng`, so a fixed seed reproduces the
//! same object on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::tensor::layout::SystemLayout;
use crate::tensor::ops::{QuantumChannel, UnitaryInteraction};
use crate::tensor::state::{DensityMatrix, PureState};

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal
/// folded back into `Q`.
pub fn haar_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = ginibre(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary(
    input: SystemLayout,
    output: SystemLayout,
    seed: u64,
) -> Result<UnitaryInteraction> {
    let mut rng = rng_from_seed(seed);
    haar_unitary_with(&mut rng, input, output)
}

pub fn haar_unitary_with<R: Rng + ?Sized>(
    rng: &mut R,
    input: SystemLayout,
    output: SystemLayout,
) -> Result<UnitaryInteraction> {
    if input.total_dim() != output.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "unitary input {input} and output {output} have different total dimension"
        )));
    }
    let m = haar_matrix(rng, input.total_dim());
    UnitaryInteraction::new(input, output, m)
}

/// Random state of the given rank: `G G† / Tr` for a `dim × rank` Ginibre `G`.
pub fn random_density(layout: SystemLayout, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = rng_from_seed(seed);
    random_density_with(&mut rng, layout, rank)
}

pub fn random_density_with<R: Rng + ?Sized>(
    rng: &mut R,
    layout: SystemLayout,
    rank: usize,
) -> Result<DensityMatrix> {
    let dim = layout.total_dim();
    if rank > dim {
        return Err(Error::RankTooLarge { rank, dim });
    }
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be positive".into()));
    }
    let g = ginibre(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    Ok(DensityMatrix::from_trusted(layout, m * c(1.0 / tr, 0.0)))
}

pub fn random_pure_with<R: Rng + ?Sized>(rng: &mut R, layout: SystemLayout) -> Result<PureState> {
    let d = layout.total_dim();
    let g = ginibre(rng, d, 1);
    let v = CVector::from_iterator(d, g.iter().copied());
    let norm = v.norm();
    PureState::new(layout, v / c(norm, 0.0))
}

/// Random channel with `kraus_rank` Kraus operators, from the first
/// `dim(input)` columns of a Haar unitary on `output ⊗ C^kraus_rank`.
pub fn random_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    input: SystemLayout,
    output: SystemLayout,
    kraus_rank: usize,
) -> Result<QuantumChannel> {
    let (din, dout) = (input.total_dim(), output.total_dim());
    if dout * kraus_rank < din {
        return Err(Error::InvalidParameter(format!(
            "Kraus rank {kraus_rank} too small for a channel {din} -> {dout}"
        )));
    }
    let u = haar_matrix(rng, dout * kraus_rank);
    let iso = u.columns(0, din).into_owned();
    QuantumChannel::from_isometry(input, output, kraus_rank, &iso)
}
