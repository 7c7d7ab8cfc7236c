//! Entropic measures in bits.
//!
//! Every quantity is assembled from von Neumann entropies of marginals of the
//! one joint state passed in; nothing is computed from reconstructed chains.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;
use crate::tensor::{ensure_disjoint, DensityMatrix};

/// Eigenvalues at or below this are left out of entropy sums.
pub const EIGEN_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Quantity {
    H,
    Qmi,
    Qcmi,
    CohInfo,
}

/// A labeled entropic readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub quantity: Quantity,
    pub subsystems: Vec<Vec<String>>,
    pub value: f64,
}

impl EntropyReport {
    pub fn entropy(rho: &DensityMatrix, a: &[&str]) -> Result<Self> {
        Ok(Self {
            quantity: Quantity::H,
            subsystems: vec![owned(a)],
            value: von_neumann_entropy(rho, a)?,
        })
    }

    pub fn qmi(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<Self> {
        Ok(Self {
            quantity: Quantity::Qmi,
            subsystems: vec![owned(a), owned(b)],
            value: qmi(rho, a, b)?,
        })
    }

    /// `I(A;C|B)`; subsystems are stored as `[A, C, B]`.
    pub fn qcmi(rho: &DensityMatrix, a: &[&str], c: &[&str], b: &[&str]) -> Result<Self> {
        Ok(Self {
            quantity: Quantity::Qcmi,
            subsystems: vec![owned(a), owned(c), owned(b)],
            value: qcmi(rho, a, c, b)?,
        })
    }

    pub fn coherent_information(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<Self> {
        Ok(Self {
            quantity: Quantity::CohInfo,
            subsystems: vec![owned(a), owned(b)],
            value: coherent_information(rho, a, b)?,
        })
    }
}

fn owned(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// Entropy of a spectrum, in bits.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> f64 {
    linalg::shannon_bits(eigenvalues.iter().copied(), EIGEN_CUTOFF).max(0.0)
}

/// `H(subset)` of `rho`. The empty subset has zero entropy.
pub fn von_neumann_entropy<S: AsRef<str>>(rho: &DensityMatrix, subset: &[S]) -> Result<f64> {
    if subset.is_empty() {
        return Ok(0.0);
    }
    let marginal = rho.partial_trace(subset)?;
    Ok(spectrum_entropy(&marginal.eigenvalues()))
}

fn union<S: AsRef<str>>(parts: &[&[S]]) -> Vec<String> {
    parts
        .iter()
        .flat_map(|p| p.iter().map(|s| s.as_ref().to_string()))
        .collect()
}

/// `I(A;B) = H(A) + H(B) - H(AB)`.
pub fn qmi<S: AsRef<str>, T: AsRef<str>>(rho: &DensityMatrix, a: &[S], b: &[T]) -> Result<f64> {
    ensure_disjoint(a, b)?;
    let a: Vec<String> = union(&[a]);
    let b: Vec<String> = union(&[b]);
    let ab = union(&[&a[..], &b[..]]);
    Ok(
        von_neumann_entropy(rho, &a)? + von_neumann_entropy(rho, &b)?
            - von_neumann_entropy(rho, &ab)?,
    )
}

/// `I(A;C|B) = H(AB) + H(BC) - H(B) - H(ABC)`.
pub fn qcmi<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    c: &[T],
    b: &[U],
) -> Result<f64> {
    ensure_disjoint(a, b)?;
    ensure_disjoint(a, c)?;
    ensure_disjoint(b, c)?;
    let a: Vec<String> = union(&[a]);
    let b: Vec<String> = union(&[b]);
    let c: Vec<String> = union(&[c]);
    let h = |set: Vec<String>| von_neumann_entropy(rho, &set);
    Ok(h(union(&[&a[..], &b[..]]))? + h(union(&[&b[..], &c[..]]))?
        - h(b.clone())?
        - h(union(&[&a[..], &b[..], &c[..]]))?)
}

/// `max{H(B) - H(AB), H(A) - H(AB), 0}`, a lower bound on distillable
/// entanglement and hence on squashed entanglement.
pub fn coherent_information<S: AsRef<str>, T: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    b: &[T],
) -> Result<f64> {
    ensure_disjoint(a, b)?;
    let a: Vec<String> = union(&[a]);
    let b: Vec<String> = union(&[b]);
    let ab = union(&[&a[..], &b[..]]);
    let h_ab = von_neumann_entropy(rho, &ab)?;
    let forward = von_neumann_entropy(rho, &b)? - h_ab;
    let backward = von_neumann_entropy(rho, &a)? - h_ab;
    Ok(forward.max(backward).max(0.0))
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    linalg::shannon_bits([p, 1.0 - p], 0.0)
}

/// The `p ∈ [0, 1/2]` with `h(p) = target`, by bisection.
pub fn inverse_binary_entropy(target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMatrix, CVector};
    use crate::tensor::{PureState, SystemLayout};
    use crate::Error;

    fn ghz() -> DensityMatrix {
        let layout = SystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap();
        let mut v = CVector::zeros(8);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[7] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState::new(layout, v).unwrap().to_density()
    }

    #[test]
    fn maximally_mixed_four_level_has_two_bits() {
        let g = DensityMatrix::maximally_mixed(SystemLayout::single("E", 4).unwrap());
        assert!((von_neumann_entropy(&g, &["E"]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_entropy() {
        let rho =
            DensityMatrix::from_diagonal(SystemLayout::single("A", 3).unwrap(), &[0.5, 0.25, 0.25])
                .unwrap();
        assert!((von_neumann_entropy(&rho, &["A"]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn pure_states_have_zero_entropy() {
        let g = ghz();
        assert!(von_neumann_entropy(&g, &["A", "B", "C"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bell_state_mutual_information() {
        let phi = PureState::maximally_entangled("R", "Q", 2)
            .unwrap()
            .to_density();
        assert!((qmi(&phi, &["R"], &["Q"]).unwrap() - 2.0).abs() < 1e-12);
        assert!((coherent_information(&phi, &["R"], &["Q"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_conditional_mutual_information_is_one_bit() {
        // H(AB) = H(BC) = H(B) = 1, H(ABC) = 0
        let g = ghz();
        assert!((qcmi(&g, &["A"], &["C"], &["B"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let g = ghz();
        assert_eq!(
            qmi(&g, &["A"], &["A"]),
            Err(Error::OverlappingLabels("A".into()))
        );
        assert!(qcmi(&g, &["A"], &["B"], &["B"]).is_err());
        assert!(coherent_information(&g, &["A", "B"], &["B"]).is_err());
    }

    #[test]
    fn product_third_factor_gives_zero_qcmi() {
        let ab = PureState::maximally_entangled("A", "B", 2)
            .unwrap()
            .to_density();
        let cst = DensityMatrix::from_diagonal(SystemLayout::single("C", 2).unwrap(), &[0.7, 0.3])
            .unwrap();
        let abc = ab.tensor(&cst).unwrap();
        assert!(qcmi(&abc, &["A"], &["C"], &["B"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn isotropic_state_coherent_information() {
        // v Φ+ + (1 - v) I/4 has spectrum {v + (1-v)/4, (1-v)/4 x3}
        let phi = PureState::maximally_entangled("A", "B", 2)
            .unwrap()
            .to_density();
        for v in [0.5f64, 0.9] {
            let m: CMatrix =
                phi.matrix() * c(v, 0.0) + CMatrix::identity(4, 4) * c((1.0 - v) / 4.0, 0.0);
            let rho = DensityMatrix::new(phi.layout().clone(), m).unwrap();
            let top = v + (1.0 - v) / 4.0;
            let low = (1.0 - v) / 4.0;
            let h_ab = -(top * top.log2() + 3.0 * low * low.log2());
            let expected = (1.0 - h_ab).max(0.0);
            let got = coherent_information(&rho, &["A"], &["B"]).unwrap();
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn binary_entropy_inversion() {
        let p = inverse_binary_entropy(0.5);
        assert!((binary_entropy(p) - 0.5).abs() < 1e-14);
        assert!(p > 0.0 && p < 0.5);
    }
}
