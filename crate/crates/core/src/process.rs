//! Three-time snapshots of a system interacting with its environment.
//!
//! The reference `R` is always half of a maximally entangled pair with the
//! input system `Q`; models never supply it. At each time the first factor of
//! the most recent unitary's output layout is the system, the remaining
//! output factors are the environment, and any inert factors ride along
//! untouched.

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::tensor::{DensityMatrix, PureState, QuantumChannel, SystemLayout, UnitaryInteraction};

pub const REFERENCE: &str = "R";
pub const SYSTEM: &str = "Q";
/// Default threshold above which a QMI increase counts as a revival.
pub const REVIVAL_TOL: f64 = 1e-7;
/// Tolerance for the marginal constraint on supplied extensions.
pub const EXTENSION_TOL: f64 = 1e-9;

/// Environment state plus the two interaction unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel {
    d_system: usize,
    env_state: DensityMatrix,
    inert: Vec<String>,
    u: UnitaryInteraction,
    v: UnitaryInteraction,
}

impl InteractionModel {
    /// `u` must act on `Q` and exactly the non-inert environment factors;
    /// `v` must act on `u`'s output layout.
    pub fn new(
        d_system: usize,
        env_state: DensityMatrix,
        inert: Vec<String>,
        u: UnitaryInteraction,
        v: UnitaryInteraction,
    ) -> Result<Self> {
        let env = env_state.layout();
        for reserved in [REFERENCE, SYSTEM] {
            if env.contains(reserved) {
                return Err(Error::DuplicateLabel(reserved.to_string()));
            }
        }
        for f in &inert {
            if !env.contains(f) {
                return Err(Error::UnknownLabel(f.clone()));
            }
        }
        for layout in [
            u.input_layout(),
            u.output_layout(),
            v.input_layout(),
            v.output_layout(),
        ] {
            if let Some(f) = inert.iter().find(|f| layout.contains(f)) {
                return Err(Error::NonInertExtension(f.clone()));
            }
            if layout.contains(REFERENCE) {
                return Err(Error::DuplicateLabel(REFERENCE.to_string()));
            }
        }
        if u.input_layout()
            .dim_of(SYSTEM)
            .map_err(|_| Error::LayoutMismatch("first unitary must act on the system `Q`".into()))?
            != d_system
        {
            return Err(Error::DimensionMismatch(format!(
                "system dimension {d_system} but the first unitary's `Q` has dimension {}",
                u.input_layout().dim_of(SYSTEM)?
            )));
        }
        let active = env.without(&inert)?;
        let mut expected = vec![SystemLayout::single(SYSTEM, d_system)?.factors()[0].clone()];
        expected.extend(active.factors().iter().cloned());
        let mut got = u.input_layout().factors().to_vec();
        let mut want = expected;
        got.sort_by(|a, b| a.label.cmp(&b.label));
        want.sort_by(|a, b| a.label.cmp(&b.label));
        if got != want {
            return Err(Error::DimensionMismatch(format!(
                "first unitary acts on {} but system plus environment is Q[{}]⊗{}",
                u.input_layout(),
                d_system,
                active
            )));
        }
        if v.input_layout() != u.output_layout() {
            return Err(Error::LayoutMismatch(format!(
                "second unitary takes {} but the first produces {}",
                v.input_layout(),
                u.output_layout()
            )));
        }
        if u.output_layout().is_empty() || v.output_layout().is_empty() {
            return Err(Error::LayoutMismatch(
                "unitary outputs need a system factor".into(),
            ));
        }
        Ok(Self {
            d_system,
            env_state,
            inert,
            u,
            v,
        })
    }

    pub fn d_system(&self) -> usize {
        self.d_system
    }

    pub fn env_state(&self) -> &DensityMatrix {
        &self.env_state
    }

    pub fn inert_labels(&self) -> &[String] {
        &self.inert
    }

    pub fn active_env_labels(&self) -> Vec<String> {
        self.env_state
            .layout()
            .labels()
            .into_iter()
            .filter(|l| !self.inert.contains(l))
            .collect()
    }

    /// Marginal of the environment on the factors the dynamics touches.
    pub fn active_env_state(&self) -> Result<DensityMatrix> {
        let active = self.active_env_labels();
        if active.is_empty() {
            return Ok(DensityMatrix::maximally_mixed(SystemLayout::scalar()));
        }
        self.env_state.partial_trace(&active)
    }

    pub fn first_step(&self) -> &UnitaryInteraction {
        &self.u
    }

    pub fn second_step(&self) -> &UnitaryInteraction {
        &self.v
    }

    pub fn system_label(&self, time: usize) -> String {
        match time {
            0 => SYSTEM.to_string(),
            1 => self.u.output_layout().factors()[0].label.clone(),
            _ => self.v.output_layout().factors()[0].label.clone(),
        }
    }

    pub fn env_labels(&self, time: usize) -> Vec<String> {
        match time {
            0 => self.active_env_labels(),
            1 => self.u.output_layout().labels()[1..].to_vec(),
            _ => self.v.output_layout().labels()[1..].to_vec(),
        }
    }

    /// Attach an inert factor in state `gamma_ef`, which must extend the
    /// current environment state.
    pub fn with_extension(&self, gamma_ef: DensityMatrix, extension: Vec<String>) -> Result<Self> {
        let base = gamma_ef.partial_trace(&self.env_state.layout().labels())?;
        let dev = linalg::max_abs_diff(
            base.aligned_to(self.env_state.layout())?.matrix(),
            self.env_state.matrix(),
        );
        if dev > EXTENSION_TOL {
            return Err(Error::InvalidParameter(format!(
                "extended environment does not reduce to the original (deviation {dev:e})"
            )));
        }
        let mut inert = self.inert.clone();
        inert.extend(extension);
        Self::new(
            self.d_system,
            gamma_ef,
            inert,
            self.u.clone(),
            self.v.clone(),
        )
    }
}

/// The full states at the three times plus their `R`-system marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    states: [DensityMatrix; 3],
    reduced: [DensityMatrix; 3],
    system: [String; 3],
    environment: [Vec<String>; 3],
    inert: Vec<String>,
    second_step: UnitaryInteraction,
}

impl Snapshot {
    pub fn state(&self, time: usize) -> &DensityMatrix {
        &self.states[time]
    }

    /// `Φ+`, `σ_RQ'`, `τ_RQ''` for times 0, 1, 2.
    pub fn reduced(&self, time: usize) -> &DensityMatrix {
        &self.reduced[time]
    }

    pub fn system_label(&self, time: usize) -> &str {
        &self.system[time]
    }

    pub fn env_labels(&self, time: usize) -> &[String] {
        &self.environment[time]
    }

    pub fn inert_labels(&self) -> &[String] {
        &self.inert
    }

    pub fn second_step(&self) -> &UnitaryInteraction {
        &self.second_step
    }

    /// `I(R;Q)` at the given time.
    pub fn system_qmi(&self, time: usize) -> Result<f64> {
        entropy::qmi(
            &self.reduced[time],
            &[REFERENCE],
            &[self.system[time].as_str()],
        )
    }

    /// `I(R; everything else)` at the given time.
    pub fn total_qmi(&self, time: usize) -> Result<f64> {
        let rest: Vec<String> = self.states[time]
            .layout()
            .labels()
            .into_iter()
            .filter(|l| l != REFERENCE)
            .collect();
        entropy::qmi(&self.states[time], &[REFERENCE], &rest)
    }

    /// Attach an extension, producing the extended `t1` and `t2` states.
    pub fn extend(&self, extension: &Extension) -> Result<ExtendedSnapshot> {
        match extension {
            Extension::Attached(labels) => {
                for l in labels {
                    if !self.inert.contains(l) {
                        return Err(Error::NonInertExtension(l.clone()));
                    }
                }
                Ok(ExtendedSnapshot {
                    sigma: self.states[1].clone(),
                    tau: self.states[2].clone(),
                    extension: labels.clone(),
                    system: [self.system[1].clone(), self.system[2].clone()],
                    environment: [self.environment[1].clone(), self.environment[2].clone()],
                })
            }
            Extension::Intermediate(omega) => {
                let t1_labels = self.states[1].layout().labels();
                let (base_labels, extra): (Vec<String>, Vec<String>) = omega
                    .layout()
                    .labels()
                    .into_iter()
                    .partition(|l| t1_labels.contains(l));
                if extra.is_empty() {
                    return Err(Error::InvalidParameter(
                        "intermediate extension adds no factors".into(),
                    ));
                }
                let mut required = vec![REFERENCE.to_string(), self.system[1].clone()];
                required.extend(self.environment[1].iter().cloned());
                if let Some(missing) = required.iter().find(|l| !base_labels.contains(l)) {
                    return Err(Error::UnknownLabel(missing.clone()));
                }
                let marginal = self.states[1].partial_trace(&base_labels)?;
                let base = omega
                    .partial_trace(&base_labels)?
                    .aligned_to(marginal.layout())?;
                let dev = linalg::max_abs_diff(base.matrix(), marginal.matrix());
                if dev > EXTENSION_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "extension does not reduce to the t1 state (deviation {dev:e})"
                    )));
                }
                for l in &extra {
                    if self.second_step.input_layout().contains(l)
                        || self.second_step.output_layout().contains(l)
                    {
                        return Err(Error::NonInertExtension(l.clone()));
                    }
                }
                let tau = self.second_step.conjugate(omega)?;
                Ok(ExtendedSnapshot {
                    sigma: omega.clone(),
                    tau,
                    extension: extra,
                    system: [self.system[1].clone(), self.system[2].clone()],
                    environment: [self.environment[1].clone(), self.environment[2].clone()],
                })
            }
        }
    }
}

/// How an inert extension enters a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub enum Extension {
    /// Inert factors already carried by the model's environment.
    Attached(Vec<String>),
    /// An extension of the `t1` state, or of its marginal on `R`, the system,
    /// the environment and any subset of the inert factors. Its additional
    /// factors are the extension and are carried unchanged through the
    /// second step.
    Intermediate(DensityMatrix),
}

/// `σ_RQ'E'F` and `τ_RQ''E''F` for a chosen inert extension `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSnapshot {
    pub sigma: DensityMatrix,
    pub tau: DensityMatrix,
    pub extension: Vec<String>,
    /// System labels at t1 and t2.
    pub system: [String; 2],
    /// Environment labels at t1 and t2.
    pub environment: [Vec<String>; 2],
}

impl ExtendedSnapshot {
    fn system_and_extension(&self, t: usize) -> Vec<String> {
        let mut v = vec![self.system[t].clone()];
        v.extend(self.extension.iter().cloned());
        v
    }

    fn state(&self, t: usize) -> &DensityMatrix {
        if t == 0 {
            &self.sigma
        } else {
            &self.tau
        }
    }

    /// `I(R;Q'F)_1` for `t = 0`, `I(R;Q''F)_2` for `t = 1`.
    pub fn qmi_with_extension(&self, t: usize) -> Result<f64> {
        entropy::qmi(self.state(t), &[REFERENCE], &self.system_and_extension(t))
    }

    /// `I(R;E'|Q'F)_1` for `t = 0`, `I(R;E''|Q''F)_2` for `t = 1`.
    pub fn qcmi_environment(&self, t: usize) -> Result<f64> {
        entropy::qcmi(
            self.state(t),
            &[REFERENCE],
            &self.environment[t],
            &self.system_and_extension(t),
        )
    }

    /// `I(R;F)` at t1 (`t = 0`) or t2 (`t = 1`).
    pub fn reference_extension_qmi(&self, t: usize) -> Result<f64> {
        entropy::qmi(self.state(t), &[REFERENCE], &self.extension)
    }
}

/// Evolve `Φ+_RQ ⊗ γ` through both unitaries.
pub fn run_snapshot(model: &InteractionModel) -> Result<Snapshot> {
    let phi = PureState::maximally_entangled(REFERENCE, SYSTEM, model.d_system)?.to_density();
    let t0 = phi.tensor(&model.env_state)?;
    let t1 = model.u.conjugate(&t0)?;
    let t2 = model.v.conjugate(&t1)?;
    let system = [
        model.system_label(0),
        model.system_label(1),
        model.system_label(2),
    ];
    let reduced = [
        t0.partial_trace(&[REFERENCE, system[0].as_str()])?,
        t1.partial_trace(&[REFERENCE, system[1].as_str()])?,
        t2.partial_trace(&[REFERENCE, system[2].as_str()])?,
    ];
    Ok(Snapshot {
        states: [t0, t1, t2],
        reduced,
        environment: [
            model.env_labels(0),
            model.env_labels(1),
            model.env_labels(2),
        ],
        system,
        inert: model.inert.clone(),
        second_step: model.v.clone(),
    })
}

/// Reference-system correlations at the three times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalReport {
    pub qmi_t0: f64,
    pub qmi_t1: f64,
    pub qmi_t2: f64,
    /// `qmi_t2 - qmi_t1`.
    pub revival_magnitude: f64,
    pub revived: bool,
    pub tolerance: f64,
}

pub fn detect_revival(snapshot: &Snapshot, tolerance: f64) -> Result<RevivalReport> {
    let qmi_t0 = snapshot.system_qmi(0)?;
    let qmi_t1 = snapshot.system_qmi(1)?;
    let qmi_t2 = snapshot.system_qmi(2)?;
    let revival_magnitude = qmi_t2 - qmi_t1;
    Ok(RevivalReport {
        qmi_t0,
        qmi_t1,
        qmi_t2,
        revival_magnitude,
        revived: revival_magnitude > tolerance,
        tolerance,
    })
}

/// The channels `Q -> Q'` and `Q -> Q''` induced on the system by the fixed
/// environment, built from a Stinespring dilation of the model.
pub fn reduced_channels(model: &InteractionModel) -> Result<(QuantumChannel, QuantumChannel)> {
    let gamma = model.active_env_state()?;
    let first = stinespring_reduction(model, &model.u, &gamma)?;
    let composite = model.u.then(&model.v)?;
    let second = stinespring_reduction(model, &composite, &gamma)?;
    Ok((first, second))
}

fn stinespring_reduction(
    model: &InteractionModel,
    unitary: &UnitaryInteraction,
    gamma: &DensityMatrix,
) -> Result<QuantumChannel> {
    let d = model.d_system;
    let env_layout = gamma.layout().clone();
    let de = env_layout.total_dim();
    let natural = SystemLayout::single(SYSTEM, d)?.concat(&env_layout)?;
    let (_, perm) = crate::tensor::state_permutation(&natural, &unitary.input_layout().labels())?;

    let out = unitary.output_layout();
    let sys_out = out.factors()[0].dim;
    let rest_out = out.total_dim() / sys_out;

    let (values, vectors) = linalg::eigh(gamma.matrix());
    let mut kraus = Vec::new();
    for (k, &mu) in values.iter().enumerate() {
        if mu < 1e-14 {
            continue;
        }
        let amp = mu.sqrt();
        // columns: U |q⟩|e_k⟩ for each input system basis state q
        let mut columns = CMatrix::zeros(out.total_dim(), d);
        for q in 0..d {
            let mut x = CVector::zeros(d * de);
            for e in 0..de {
                x[q * de + e] = vectors[(e, k)];
            }
            let y = CVector::from_fn(d * de, |n, _| x[perm[n]]);
            columns.set_column(q, &(unitary.matrix() * y));
        }
        for j in 0..rest_out {
            kraus.push(CMatrix::from_fn(sys_out, d, |o, q| {
                columns[(o * rest_out + j, q)] * c(amp, 0.0)
            }));
        }
    }
    let input = SystemLayout::single(SYSTEM, d)?;
    let output = SystemLayout::from_factors(vec![out.factors()[0].clone()])?;
    QuantumChannel::new(input, output, kraus)
}
