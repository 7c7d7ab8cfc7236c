use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::tensor::layout::SystemLayout;
use crate::tensor::state::DensityMatrix;

/// Unitarity tolerance, max-abs entry of `U†U - I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Trace-preservation tolerance, max-abs entry of `Σ K†K - I`.
pub const CHANNEL_TOL: f64 = 1e-9;

/// A unitary between two factorizations of the same space.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryInteraction {
    input: SystemLayout,
    output: SystemLayout,
    matrix: CMatrix,
}

impl UnitaryInteraction {
    pub fn new(input: SystemLayout, output: SystemLayout, matrix: CMatrix) -> Result<Self> {
        let d = input.total_dim();
        if output.total_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "unitary input {input} and output {output} have different total dimension"
            )));
        }
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for a unitary on dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                d
            )));
        }
        let dev = linalg::max_abs_diff(&(matrix.adjoint() * &matrix), &linalg::identity(d));
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self {
            input,
            output,
            matrix,
        })
    }

    pub fn identity(input: SystemLayout, output: SystemLayout) -> Result<Self> {
        let d = input.total_dim();
        Self::new(input, output, linalg::identity(d))
    }

    pub fn input_layout(&self) -> &SystemLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &SystemLayout {
        &self.output
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `U ρ U†` on the input factors of `rho`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.apply_local(
            &self.input,
            &self.output,
            std::slice::from_ref(&self.matrix),
        )
    }

    /// `next ∘ self`; `next` must take this unitary's output layout.
    pub fn then(&self, next: &UnitaryInteraction) -> Result<UnitaryInteraction> {
        if next.input != self.output {
            return Err(Error::LayoutMismatch(format!(
                "cannot follow output {} with input {}",
                self.output, next.input
            )));
        }
        Ok(Self {
            input: self.input.clone(),
            output: next.output.clone(),
            matrix: &next.matrix * &self.matrix,
        })
    }

    /// Same matrix, acting on factors with new labels.
    pub fn relabeled<S: AsRef<str>, T: AsRef<str>>(
        &self,
        input: &[S],
        output: &[T],
    ) -> Result<Self> {
        Ok(Self {
            input: self.input.relabeled(input)?,
            output: self.output.relabeled(output)?,
            matrix: self.matrix.clone(),
        })
    }
}

/// A CPTP map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    input: SystemLayout,
    output: SystemLayout,
    kraus: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn new(input: SystemLayout, output: SystemLayout, kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::EmptyChannel);
        }
        let (din, dout) = (input.total_dim(), output.total_dim());
        let mut sum = CMatrix::zeros(din, din);
        for k in &kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    dout,
                    din
                )));
            }
            sum += k.adjoint() * k;
        }
        let dev = linalg::max_abs_diff(&sum, &linalg::identity(din));
        if dev > CHANNEL_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self {
            input,
            output,
            kraus,
        })
    }

    pub fn from_unitary(u: &UnitaryInteraction) -> Self {
        Self {
            input: u.input.clone(),
            output: u.output.clone(),
            kraus: vec![u.matrix.clone()],
        }
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            input: layout.clone(),
            output: layout,
            kraus: vec![linalg::identity(d)],
        }
    }

    /// Channel `X ↦ Tr_junk[V X V†]` for an isometry `V: in -> out ⊗ junk`
    /// with the junk index least significant.
    pub fn from_isometry(
        input: SystemLayout,
        output: SystemLayout,
        junk_dim: usize,
        isometry: &CMatrix,
    ) -> Result<Self> {
        let dout = output.total_dim();
        if isometry.nrows() != dout * junk_dim || isometry.ncols() != input.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "isometry is {}x{}, expected {}x{}",
                isometry.nrows(),
                isometry.ncols(),
                dout * junk_dim,
                input.total_dim()
            )));
        }
        let kraus = (0..junk_dim)
            .map(|j| {
                CMatrix::from_fn(dout, isometry.ncols(), |o, i| {
                    isometry[(o * junk_dim + j, i)]
                })
            })
            .collect();
        Self::new(input, output, kraus)
    }

    /// Minimal Kraus form recovered from an (unnormalized) Choi matrix
    /// `Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`, input index most significant.
    pub fn from_choi(
        input: SystemLayout,
        output: SystemLayout,
        choi: &CMatrix,
        cutoff: f64,
    ) -> Result<Self> {
        let (din, dout) = (input.total_dim(), output.total_dim());
        if choi.nrows() != din * dout {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of size {} for channel {} -> {}",
                choi.nrows(),
                input,
                output
            )));
        }
        let (values, vectors) = linalg::eigh(choi);
        let mut kraus = Vec::new();
        for (k, &lambda) in values.iter().enumerate().rev() {
            if lambda < cutoff {
                continue;
            }
            let s = lambda.sqrt();
            kraus.push(CMatrix::from_fn(dout, din, |o, i| {
                vectors[(i * dout + o, k)] * s
            }));
        }
        Self::new(input, output, kraus)
    }

    pub fn input_layout(&self) -> &SystemLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &SystemLayout {
        &self.output
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Unnormalized Choi matrix, input index most significant.
    pub fn choi(&self) -> CMatrix {
        let (din, dout) = (self.input.total_dim(), self.output.total_dim());
        let mut j = CMatrix::zeros(din * dout, din * dout);
        for k in &self.kraus {
            // vec(K) with input digit most significant
            let v = CMatrix::from_fn(din * dout, 1, |row, _| k[(row % dout, row / dout)]);
            j += &v * v.adjoint();
        }
        j
    }

    /// Choi state `(id ⊗ N)(Φ+)` on layout `reference ⊗ output`.
    pub fn choi_state(&self, reference: &str) -> Result<DensityMatrix> {
        let din = self.input.total_dim();
        let layout = SystemLayout::single(reference, din)?.concat(&self.output)?;
        Ok(DensityMatrix::from_trusted(
            layout,
            self.choi() * c(1.0 / din as f64, 0.0),
        ))
    }

    /// Apply on the input factors of `rho`; see [`DensityMatrix::apply_local`]
    /// for the resulting factor order.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.apply_local(&self.input, &self.output, &self.kraus)
    }

    /// `next ∘ self` in Kraus form.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if next.input != self.output {
            return Err(Error::LayoutMismatch(format!(
                "cannot follow output {} with input {}",
                self.output, next.input
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Self::new(self.input.clone(), next.output.clone(), kraus)
    }

    /// Max-abs deviation of `Σ K†K` from the identity.
    pub fn trace_preservation_error(&self) -> f64 {
        let din = self.input.total_dim();
        let mut sum = CMatrix::zeros(din, din);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        linalg::max_abs_diff(&sum, &linalg::identity(din))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::tensor::state::PureState;

    fn qubit(label: &str) -> SystemLayout {
        SystemLayout::single(label, 2).unwrap()
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(
            UnitaryInteraction::new(qubit("A"), qubit("B"), m),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn rejects_mismatched_total_dims() {
        let m = linalg::identity(2);
        assert!(matches!(
            UnitaryInteraction::new(qubit("A"), SystemLayout::single("B", 3).unwrap(), m),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn channel_requires_trace_preservation() {
        let half = linalg::identity(2) * c(0.5, 0.0);
        assert!(matches!(
            QuantumChannel::new(qubit("A"), qubit("A"), vec![half]),
            Err(Error::NotTracePreserving(_))
        ));
        assert_eq!(
            QuantumChannel::new(qubit("A"), qubit("A"), vec![]),
            Err(Error::EmptyChannel)
        );
    }

    #[test]
    fn choi_round_trip_preserves_action() {
        // amplitude damping with gamma = 0.3
        let g: f64 = 0.3;
        let k0 =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), ZERO, ZERO, c((1.0 - g).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(g.sqrt(), 0.0), ZERO, ZERO]);
        let ch = QuantumChannel::new(qubit("A"), qubit("A"), vec![k0, k1]).unwrap();
        let back = QuantumChannel::from_choi(qubit("A"), qubit("A"), &ch.choi(), 1e-12).unwrap();
        let phi = PureState::maximally_entangled("R", "A", 2)
            .unwrap()
            .to_density();
        let a = ch.apply(&phi).unwrap();
        let b = back.apply(&phi).unwrap();
        assert!(linalg::max_abs_diff(a.matrix(), b.matrix()) < 1e-13);
        let cs = ch.choi_state("R").unwrap();
        assert!(linalg::max_abs_diff(cs.matrix(), a.matrix()) < 1e-13);
    }
}
