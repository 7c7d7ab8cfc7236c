use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, ONE, ZERO};
use crate::tensor::layout::{ensure_disjoint, SystemLayout};

/// Hermiticity, trace and positivity tolerance for states.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues below this are dropped when purifying.
pub const PURIFY_CUTOFF: f64 = 1e-12;
/// Norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;

/// A Hermitian, positive semidefinite, unit-trace operator on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SystemLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate and normalize a candidate state.
    ///
    /// Eigenvalues in `[-1e-10, 0)` are clamped to zero and the trace
    /// renormalized; anything more negative is rejected.
    pub fn new(layout: SystemLayout, matrix: CMatrix) -> Result<Self> {
        check_square(&layout, &matrix)?;
        let anti = (&matrix - matrix.adjoint()) * c(0.5, 0.0);
        if linalg::frobenius(&anti) > STATE_TOL {
            let norm = linalg::hermitian_operator_norm(&(anti * linalg::I));
            if norm > STATE_TOL {
                return Err(Error::NotHermitian(norm));
            }
        }
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let herm = linalg::hermitian_part(&matrix);
        let (values, vectors) = linalg::eigh(&herm);
        let min = values.first().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        let matrix = if min < 0.0 {
            let clamped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            linalg::reassemble(&clamped, &vectors, |x| c(x / total, 0.0))
        } else {
            herm
        };
        Ok(Self { layout, matrix })
    }

    /// Wrap the output of an operation that provably yields a state.
    /// Only Hermiticity is restored; no spectral check is performed.
    pub(crate) fn from_trusted(layout: SystemLayout, matrix: CMatrix) -> Self {
        debug_assert_eq!(layout.total_dim(), matrix.nrows());
        Self {
            layout,
            matrix: linalg::hermitian_part(&matrix),
        }
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            matrix: CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0),
        }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_diagonal(layout: SystemLayout, probabilities: &[f64]) -> Result<Self> {
        if probabilities.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for dimension {}",
                probabilities.len(),
                layout.total_dim()
            )));
        }
        let m = CMatrix::from_diagonal(&CVector::from_iterator(
            probabilities.len(),
            probabilities.iter().map(|&p| c(p, 0.0)),
        ));
        Self::new(layout, m)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_parts(self) -> (SystemLayout, CMatrix) {
        (self.layout, self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// Spectrum, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Number of eigenvalues above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > cutoff).count()
    }

    /// Largest eigenvalue exceeds `1 - tol`.
    pub fn is_pure(&self, tol: f64) -> bool {
        self.eigenvalues().last().copied().unwrap_or(0.0) > 1.0 - tol
    }

    /// Full state checks: Hermitian, unit trace and no eigenvalue below `-tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let anti = (&self.matrix - self.matrix.adjoint()) * c(0.5, 0.0);
        if linalg::max_abs(&anti) > tol {
            return Err(Error::NotHermitian(linalg::max_abs(&anti)));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidTrace(tr));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(())
    }

    /// Same matrix with the factors renamed (dims unchanged).
    pub fn relabeled<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        Ok(Self {
            layout: self.layout.relabeled(labels)?,
            matrix: self.matrix.clone(),
        })
    }

    /// `ρ ⊗ σ` on the concatenated layout.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self {
            layout,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        })
    }

    /// Reduced state on `keep`; kept factors stay in their original order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidParameter(
                "partial trace must keep at least one factor".into(),
            ));
        }
        let kept = self.layout.restrict(keep)?;
        if kept.len() == self.layout.len() {
            return Ok(self.clone());
        }
        let table = TraceTable::new(&self.layout, keep)?;
        let dk = table.kept_dim;
        let dt = table.traced_dim;
        let mut out = CMatrix::zeros(dk, dk);
        for k1 in 0..dk {
            for k2 in k1..dk {
                let mut acc = ZERO;
                for t in 0..dt {
                    acc += self.matrix[(table.full(k1, t), table.full(k2, t))];
                }
                out[(k1, k2)] = acc;
                if k1 != k2 {
                    out[(k2, k1)] = acc.conj();
                }
            }
        }
        Ok(Self {
            layout: kept,
            matrix: out,
        })
    }

    /// Reorder factors; `new_order` must be a permutation of the labels.
    pub fn permute_factors<S: AsRef<str>>(&self, new_order: &[S]) -> Result<Self> {
        let (layout, perm) = permutation(&self.layout, new_order)?;
        let d = self.dim();
        let matrix = CMatrix::from_fn(d, d, |i, j| self.matrix[(perm[i], perm[j])]);
        Ok(Self { layout, matrix })
    }

    /// Permute to match the factor order of `target`, which must carry the
    /// same labels.
    pub fn aligned_to(&self, target: &SystemLayout) -> Result<Self> {
        let aligned = self.permute_factors(&target.labels())?;
        if aligned.layout != *target {
            return Err(Error::LayoutMismatch(format!(
                "{} vs {}",
                aligned.layout, target
            )));
        }
        Ok(aligned)
    }

    /// Apply `X ↦ Σ_k K_k X K_k†` on the factors named by `input`, replacing
    /// them with the factors of `output`. The output factors take the place of
    /// the first input factor; other factors keep their relative order.
    pub fn apply_local(
        &self,
        input: &SystemLayout,
        output: &SystemLayout,
        kraus: &[CMatrix],
    ) -> Result<Self> {
        let in_labels = input.labels();
        let first = self
            .layout
            .positions(&in_labels)?
            .into_iter()
            .min()
            .unwrap_or(0);
        for f in input.factors() {
            let d = self.layout.dim_of(&f.label)?;
            if d != f.dim {
                return Err(Error::DimensionMismatch(format!(
                    "factor `{}` has dim {} in state, {} in operator",
                    f.label, d, f.dim
                )));
            }
        }
        let rest = self.layout.without(&in_labels)?;
        ensure_disjoint(&rest.labels(), &output.labels())?;

        // move the operated factors to the end, in the operator's order
        let mut order = rest.labels();
        order.extend(in_labels.iter().cloned());
        let moved = self.permute_factors(&order)?;

        let dr = rest.total_dim();
        let dt = input.total_dim();
        let dout = output.total_dim();
        let mut out = CMatrix::zeros(dr * dout, dr * dout);
        for a in 0..dr {
            for b in a..dr {
                let block = moved.matrix.view((a * dt, b * dt), (dt, dt));
                let mut acc = CMatrix::zeros(dout, dout);
                for k in kraus {
                    acc += k * block * k.adjoint();
                }
                out.view_mut((a * dout, b * dout), (dout, dout))
                    .copy_from(&acc);
                if a != b {
                    out.view_mut((b * dout, a * dout), (dout, dout))
                        .copy_from(&acc.adjoint());
                }
            }
        }
        let produced = Self::from_trusted(rest.concat(output)?, out);

        // splice the output factors in at the first input position
        let before = self
            .layout
            .factors()
            .iter()
            .take(first)
            .filter(|f| !input.contains(&f.label))
            .count();
        let rest_labels = rest.labels();
        let mut final_order: Vec<String> = rest_labels[..before].to_vec();
        final_order.extend(output.labels());
        final_order.extend(rest_labels[before..].iter().cloned());
        produced.permute_factors(&final_order)
    }
}

/// A normalized state vector on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: SystemLayout,
    vector: CVector,
}

impl PureState {
    pub fn new(layout: SystemLayout, vector: CVector) -> Result<Self> {
        if vector.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for layout {}",
                vector.len(),
                layout
            )));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { layout, vector })
    }

    /// Computational basis vector.
    pub fn basis(layout: SystemLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut v = CVector::zeros(d);
        v[index] = ONE;
        Ok(Self { layout, vector: v })
    }

    /// `Σ_i |ii⟩ / √d` on two factors of dimension `d`.
    pub fn maximally_entangled(first: &str, second: &str, d: usize) -> Result<Self> {
        let layout = SystemLayout::new([(first, d), (second, d)])?;
        let mut v = CVector::zeros(d * d);
        let amp = c(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            v[i * d + i] = amp;
        }
        Self::new(layout, v)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.layout.clone(), &self.vector * self.vector.adjoint())
    }
}

/// Minimal purification: the environment factor has dimension equal to the
/// numerical rank of `rho`.
pub fn purify(rho: &DensityMatrix, env_label: &str) -> Result<PureState> {
    if rho.layout.contains(env_label) {
        return Err(Error::DuplicateLabel(env_label.to_string()));
    }
    let (values, vectors) = linalg::eigh(rho.matrix());
    let kept: Vec<usize> = (0..values.len())
        .filter(|&k| values[k] >= PURIFY_CUTOFF)
        .collect();
    let r = kept.len().max(1);
    let d = rho.dim();
    let mut v = CVector::zeros(d * r);
    for (slot, &k) in kept.iter().enumerate() {
        let amp = values[k].sqrt();
        for i in 0..d {
            v[i * r + slot] = vectors[(i, k)] * amp;
        }
    }
    let norm = v.norm();
    v /= c(norm, 0.0);
    let layout = rho.layout.concat(&SystemLayout::single(env_label, r)?)?;
    PureState::new(layout, v)
}

/// Squared Uhlmann fidelity `(Tr √(√α β √α))²`, computed as the squared
/// nuclear norm of `√α √β`.
pub fn fidelity(alpha: &DensityMatrix, beta: &DensityMatrix) -> Result<f64> {
    if alpha.layout != beta.layout {
        return Err(Error::LayoutMismatch(format!(
            "{} vs {}",
            alpha.layout, beta.layout
        )));
    }
    let sa = linalg::psd_sqrt(alpha.matrix(), 1e-14);
    let sb = linalg::psd_sqrt(beta.matrix(), 1e-14);
    let root = linalg::nuclear_norm(&(sa * sb));
    if !root.is_finite() {
        return Err(Error::InvariantViolation("fidelity is not finite".into()));
    }
    Ok((root * root).clamp(0.0, 1.0))
}

/// `ρ_A ⊗ ρ_B`.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    a.tensor(b)
}

fn check_square(layout: &SystemLayout, m: &CMatrix) -> Result<()> {
    let d = layout.total_dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for layout {} of dimension {}",
            m.nrows(),
            m.ncols(),
            layout,
            d
        )));
    }
    Ok(())
}

/// Index bookkeeping for a partial trace: `full(k, t)` is the composite index
/// whose kept digits spell `k` and traced digits spell `t`.
struct TraceTable {
    kept_dim: usize,
    traced_dim: usize,
    map: Vec<usize>,
}

impl TraceTable {
    fn new<S: AsRef<str>>(layout: &SystemLayout, keep: &[S]) -> Result<Self> {
        let keep_pos = layout.positions(keep)?;
        let dims = layout.dims();
        let kept_dim: usize = keep_pos.iter().map(|&p| dims[p]).product();
        let traced_dim = layout.total_dim() / kept_dim;
        let mut map = vec![0; layout.total_dim()];
        for i in 0..layout.total_dim() {
            let digits = layout.digits(i);
            let (mut k, mut t) = (0, 0);
            for (p, &d) in digits.iter().enumerate() {
                if keep_pos.contains(&p) {
                    k = k * dims[p] + d;
                } else {
                    t = t * dims[p] + d;
                }
            }
            map[k * traced_dim + t] = i;
        }
        Ok(Self {
            kept_dim,
            traced_dim,
            map,
        })
    }

    #[inline]
    fn full(&self, k: usize, t: usize) -> usize {
        self.map[k * self.traced_dim + t]
    }
}

/// Permuted layout plus the map `new index -> old index`.
pub(crate) fn permutation<S: AsRef<str>>(
    layout: &SystemLayout,
    new_order: &[S],
) -> Result<(SystemLayout, Vec<usize>)> {
    let names: Vec<String> = new_order.iter().map(|s| s.as_ref().to_string()).collect();
    if names.len() != layout.len() {
        return Err(Error::NotAPermutation(names));
    }
    let old_pos = layout
        .positions(new_order)
        .map_err(|_| Error::NotAPermutation(names.clone()))?;
    let new_layout = SystemLayout::from_factors(
        old_pos
            .iter()
            .map(|&p| layout.factors()[p].clone())
            .collect(),
    )?;
    let mut perm = vec![0; layout.total_dim()];
    let mut old_digits = vec![0; layout.len()];
    for (n, slot) in perm.iter_mut().enumerate() {
        let new_digits = new_layout.digits(n);
        for (j, &p) in old_pos.iter().enumerate() {
            old_digits[p] = new_digits[j];
        }
        *slot = layout.compose(&old_digits);
    }
    Ok((new_layout, perm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit(label: &str) -> SystemLayout {
        SystemLayout::single(label, 2).unwrap()
    }

    #[test]
    fn maximally_mixed_product() {
        let a = DensityMatrix::maximally_mixed(qubit("Q"));
        let b = DensityMatrix::maximally_mixed(qubit("E"));
        let ab = a.tensor(&b).unwrap();
        let expected =
            DensityMatrix::maximally_mixed(SystemLayout::new([("Q", 2), ("E", 2)]).unwrap());
        assert!(linalg::max_abs_diff(ab.matrix(), expected.matrix()) < 1e-15);
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = DensityMatrix::maximally_mixed(qubit("Q"));
        assert!(a.tensor(&a).is_err());
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let phi = PureState::maximally_entangled("R", "Q", 2)
            .unwrap()
            .to_density();
        let q = phi.partial_trace(&["Q"]).unwrap();
        let expected = DensityMatrix::maximally_mixed(qubit("Q"));
        assert!(linalg::max_abs_diff(q.matrix(), expected.matrix()) < 1e-15);
    }

    #[test]
    fn unknown_label_in_partial_trace() {
        let phi = PureState::maximally_entangled("R", "Q", 2)
            .unwrap()
            .to_density();
        assert_eq!(
            phi.partial_trace(&["Z"]),
            Err(Error::UnknownLabel("Z".into()))
        );
    }

    #[test]
    fn identity_permutation_is_noop() {
        let phi = PureState::maximally_entangled("R", "Q", 3)
            .unwrap()
            .to_density();
        assert_eq!(phi.permute_factors(&["R", "Q"]).unwrap(), phi);
        assert!(matches!(
            phi.permute_factors(&["R"]),
            Err(Error::NotAPermutation(_))
        ));
        assert!(matches!(
            phi.permute_factors(&["R", "R"]),
            Err(Error::NotAPermutation(_))
        ));
    }

    #[test]
    fn swap_of_product_state() {
        let a = DensityMatrix::from_diagonal(qubit("A"), &[0.9, 0.1]).unwrap();
        let b =
            DensityMatrix::from_diagonal(SystemLayout::single("B", 3).unwrap(), &[0.5, 0.3, 0.2])
                .unwrap();
        let ab = a.tensor(&b).unwrap();
        let ba = b.tensor(&a).unwrap();
        assert!(
            linalg::max_abs_diff(
                ab.permute_factors(&["B", "A"]).unwrap().matrix(),
                ba.matrix()
            ) < 1e-15
        );
    }

    #[test]
    fn small_negative_eigenvalues_are_clamped() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(1.0 + 5e-11, 0.0),
            c(-5e-11, 0.0),
        ]));
        let rho = DensityMatrix::new(qubit("A"), m).unwrap();
        assert!(rho.eigenvalues()[0] >= 0.0);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn large_negative_eigenvalue_is_hard_error() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.1, 0.0), c(-0.1, 0.0)]));
        assert!(matches!(
            DensityMatrix::new(qubit("A"), m),
            Err(Error::NegativeEigenvalue(_))
        ));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.3, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(qubit("A"), m),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn purify_pure_state_uses_trivial_environment() {
        let psi = PureState::basis(qubit("A"), 1).unwrap().to_density();
        let p = purify(&psi, "P").unwrap();
        assert_eq!(p.layout().dim_of("P").unwrap(), 1);
        let back = p.to_density().partial_trace(&["A"]).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), psi.matrix()) < 1e-14);
    }

    #[test]
    fn purify_maximally_mixed_qubit() {
        let rho = DensityMatrix::maximally_mixed(qubit("A"));
        let p = purify(&rho, "P").unwrap();
        assert_eq!(p.layout().dim_of("P").unwrap(), 2);
        let reduced = p.to_density().partial_trace(&["P"]).unwrap();
        let ev = reduced.eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fidelity_elementary_cases() {
        let zero = PureState::basis(qubit("A"), 0).unwrap().to_density();
        let one = PureState::basis(qubit("A"), 1).unwrap().to_density();
        let mixed = DensityMatrix::maximally_mixed(qubit("A"));
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
        let other = DensityMatrix::maximally_mixed(qubit("B"));
        assert!(matches!(
            fidelity(&zero, &other),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn apply_local_places_outputs_at_first_input() {
        let layout = SystemLayout::new([("R", 2), ("Q", 2), ("E", 2), ("F", 2)]).unwrap();
        let rho = DensityMatrix::maximally_mixed(layout.clone());
        let input = SystemLayout::new([("Q", 2), ("E", 2)]).unwrap();
        let output = SystemLayout::new([("Q'", 2), ("E'", 2)]).unwrap();
        let out = rho
            .apply_local(&input, &output, &[linalg::identity(4)])
            .unwrap();
        assert_eq!(out.layout().labels(), vec!["R", "Q'", "E'", "F"]);
    }
}
