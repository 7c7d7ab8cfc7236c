//! Revival classification.
//!
//! A revival is certified non-causal by exhibiting an inert extension `F`
//! with `I(R;Q''F)_2 ≤ I(R;Q'F)_1`. It is witnessed as genuine backflow,
//! from the reduced process alone, when a lower bound on `E_sq(R;Q'')_2`
//! exceeds `H(Q')_1`. A pure environment also forces genuine backflow, but
//! that conclusion depends on knowing the model.

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::process::{
    self, Extension, InteractionModel, RevivalReport, Snapshot, REFERENCE, REVIVAL_TOL,
};
use crate::squashed::{self, ExtensionSpec, SquashedOptions};
use crate::tensor::{purify, DensityMatrix, PURIFY_CUTOFF};

/// Slack on the extended data-processing inequality.
pub const CERTIFY_TOL: f64 = 1e-9;
/// Required agreement between the QMI and QCMI forms of the non-causal
/// condition.
pub const FORM_AGREEMENT_TOL: f64 = 1e-9;
/// The witness fires only above this margin.
pub const WITNESS_TOL: f64 = 1e-7;
/// `τ_RQ''` counts as pure when its largest eigenvalue exceeds `1 - PURITY_TOL`.
pub const PURITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NoRevival,
    NonCausalCertified,
    GenuineBackflowWitnessed,
    Inconclusive,
}

/// What a genuine-backflow verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GenuineBasis {
    /// Read off the reduced process; no environment data used.
    Operational,
    /// Follows from a pure environment in the given model.
    ModelRelative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LowerBoundMethod {
    EntanglementEntropy,
    CoherentInformation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionEvidence {
    pub description: String,
    pub labels: Vec<String>,
    /// `I(R;Q'F)_1`.
    pub qmi_t1: f64,
    /// `I(R;Q''F)_2`.
    pub qmi_t2: f64,
    /// `I(R;E'|Q'F)_1`.
    pub qcmi_t1: f64,
    /// `I(R;E''|Q''F)_2`.
    pub qcmi_t2: f64,
    /// `|(qmi_t1 + qcmi_t1) - (qmi_t2 + qcmi_t2)|`.
    pub form_gap: f64,
    pub qmi_form_holds: bool,
    pub qcmi_form_holds: bool,
    pub certified: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessEvidence {
    pub lower_bound: f64,
    pub method: LowerBoundMethod,
    /// `H(Q')_1`.
    pub system_entropy_t1: f64,
    pub margin: f64,
    pub fired: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureEnvironmentEvidence {
    pub environment_rank: usize,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub revival: RevivalReport,
    pub extensions: Vec<ExtensionEvidence>,
    pub witness: Option<WitnessEvidence>,
    pub pure_environment: Option<PureEnvironmentEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub genuine_basis: Option<GenuineBasis>,
    pub evidence: Evidence,
}

/// An inert extension to try.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtensionCandidate {
    /// Inert factors already in the model's environment.
    Attached(Vec<String>),
    /// An explicit extension of the `t1` state.
    Explicit(DensityMatrix),
    /// A parameterized extension; its base state must be a marginal of the
    /// `t1` state.
    Spec(ExtensionSpec),
    /// A purification of `σ_{RQ'E'}`.
    Purification,
}

impl ExtensionCandidate {
    fn resolve(&self, snapshot: &Snapshot) -> Result<(Extension, String)> {
        Ok(match self {
            Self::Attached(labels) => (
                Extension::Attached(labels.clone()),
                format!("attached inert factors {labels:?}"),
            ),
            Self::Explicit(state) => (
                Extension::Intermediate(state.clone()),
                "explicit extension".into(),
            ),
            Self::Spec(spec) => (
                Extension::Intermediate(spec.extended_state()?),
                format!(
                    "parameterized extension of dimension {}",
                    spec.extension_dim
                ),
            ),
            Self::Purification => {
                let base = active_t1(snapshot)?;
                let label = squashed::fresh_label(base.layout(), "P");
                (
                    Extension::Intermediate(purify(&base, &label)?.to_density()),
                    "purification of the t1 state".into(),
                )
            }
        })
    }
}

/// `σ_{RQ'E'}` without inert factors.
fn active_t1(snapshot: &Snapshot) -> Result<DensityMatrix> {
    let mut keep = vec![REFERENCE.to_string(), snapshot.system_label(1).to_string()];
    keep.extend(snapshot.env_labels(1).iter().cloned());
    snapshot.state(1).partial_trace(&keep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub revival_tol: f64,
    pub witness_tol: f64,
    pub certify_tol: f64,
    /// Try all of the model's inert factors together as one extension.
    pub use_attached: bool,
    pub extensions: Vec<ExtensionCandidate>,
    /// If set and no candidate certifies, search parameterized extensions of
    /// `σ_{RQ'E'}` for one that does.
    pub search: Option<SquashedOptions>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            revival_tol: REVIVAL_TOL,
            witness_tol: WITNESS_TOL,
            certify_tol: CERTIFY_TOL,
            use_attached: true,
            extensions: Vec::new(),
            search: None,
        }
    }
}

/// Model-relative rule: with a pure environment any revival is genuine.
/// Gives `NO_REVIVAL` when there is no revival and abstains when the
/// environment is mixed.
pub fn check_pure_environment_rule(model: &InteractionModel) -> Result<Option<Verdict>> {
    let snapshot = process::run_snapshot(model)?;
    let revival = process::detect_revival(&snapshot, REVIVAL_TOL)?;
    Ok(pure_environment_rule(model, &revival)?.0)
}

fn pure_environment_rule(
    model: &InteractionModel,
    revival: &RevivalReport,
) -> Result<(Option<Verdict>, PureEnvironmentEvidence)> {
    let rank = model.active_env_state()?.rank(PURIFY_CUTOFF);
    let pure = rank <= 1;
    let verdict = match (pure, revival.revived) {
        (true, true) => Some(Verdict::GenuineBackflowWitnessed),
        (true, false) => Some(Verdict::NoRevival),
        (false, _) => None,
    };
    Ok((
        verdict,
        PureEnvironmentEvidence {
            environment_rank: rank,
            fired: pure && revival.revived,
        },
    ))
}

/// Evaluate both forms of the non-causal condition for one extension.
pub fn extension_evidence(
    snapshot: &Snapshot,
    candidate: &ExtensionCandidate,
    tolerance: f64,
) -> Result<ExtensionEvidence> {
    let (extension, description) = candidate.resolve(snapshot)?;
    let ext = snapshot.extend(&extension)?;
    let qmi_t1 = ext.qmi_with_extension(0)?;
    let qmi_t2 = ext.qmi_with_extension(1)?;
    let qcmi_t1 = ext.qcmi_environment(0)?;
    let qcmi_t2 = ext.qcmi_environment(1)?;
    let form_gap = ((qmi_t1 + qcmi_t1) - (qmi_t2 + qcmi_t2)).abs();
    if form_gap > FORM_AGREEMENT_TOL {
        return Err(Error::InvariantViolation(format!(
            "QMI and QCMI forms of the non-causal condition disagree by {form_gap:e}"
        )));
    }
    let qmi_form_holds = qmi_t2 <= qmi_t1 + tolerance;
    let qcmi_form_holds = qcmi_t2 >= qcmi_t1 - tolerance;
    Ok(ExtensionEvidence {
        description,
        labels: ext.extension.clone(),
        qmi_t1,
        qmi_t2,
        qcmi_t1,
        qcmi_t2,
        form_gap,
        qmi_form_holds,
        qcmi_form_holds,
        certified: qmi_form_holds,
        tolerance,
    })
}

/// Classification from a single candidate extension.
pub fn certify_noncausal(
    snapshot: &Snapshot,
    candidate: &ExtensionCandidate,
) -> Result<Classification> {
    let revival = process::detect_revival(snapshot, REVIVAL_TOL)?;
    let evidence = extension_evidence(snapshot, candidate, CERTIFY_TOL)?;
    let verdict = if !revival.revived {
        Verdict::NoRevival
    } else if evidence.certified {
        Verdict::NonCausalCertified
    } else {
        Verdict::Inconclusive
    };
    Ok(Classification {
        verdict,
        genuine_basis: None,
        evidence: Evidence {
            revival,
            extensions: vec![evidence],
            witness: None,
            pure_environment: None,
        },
    })
}

/// Sound lower bound on `E_sq(R;Q'')_2` compared against `H(Q')_1`.
pub fn witness_evidence(snapshot: &Snapshot, tolerance: f64) -> Result<WitnessEvidence> {
    let tau = snapshot.reduced(2);
    let q2 = snapshot.system_label(2);
    let top = tau.eigenvalues().last().copied().unwrap_or(0.0);
    let (lower_bound, method) = if top > 1.0 - PURITY_TOL {
        (
            entropy::von_neumann_entropy(tau, &[REFERENCE])?,
            LowerBoundMethod::EntanglementEntropy,
        )
    } else {
        (
            entropy::coherent_information(tau, &[REFERENCE], &[q2])?,
            LowerBoundMethod::CoherentInformation,
        )
    };
    let system_entropy_t1 =
        entropy::von_neumann_entropy(snapshot.reduced(1), &[snapshot.system_label(1)])?;
    let margin = lower_bound - system_entropy_t1;
    Ok(WitnessEvidence {
        lower_bound,
        method,
        system_entropy_t1,
        margin,
        fired: margin > tolerance,
        tolerance,
    })
}

/// Operational genuine-backflow witness; reads only the reduced process.
pub fn witness_genuine_backflow(snapshot: &Snapshot) -> Result<Classification> {
    let revival = process::detect_revival(snapshot, REVIVAL_TOL)?;
    let witness = witness_evidence(snapshot, WITNESS_TOL)?;
    let (verdict, basis) = if !revival.revived {
        (Verdict::NoRevival, None)
    } else if witness.fired {
        (
            Verdict::GenuineBackflowWitnessed,
            Some(GenuineBasis::Operational),
        )
    } else {
        (Verdict::Inconclusive, None)
    };
    Ok(Classification {
        verdict,
        genuine_basis: basis,
        evidence: Evidence {
            revival,
            extensions: Vec::new(),
            witness: Some(witness),
            pure_environment: None,
        },
    })
}

/// Search parameterized extensions of `σ_{RQ'E'}` minimizing
/// `I(R;Q''X)_2 - I(R;Q'X)_1`.
pub fn search_certifying_extension(
    snapshot: &Snapshot,
    opts: &SquashedOptions,
    tolerance: f64,
) -> Result<ExtensionSpec> {
    let base = active_t1(snapshot)?;
    let label = squashed::fresh_label(snapshot.state(2).layout(), squashed::EXTENSION_LABEL);
    let label = squashed::fresh_label(base.layout(), &label);
    let q1 = snapshot.system_label(1).to_string();
    let q2 = snapshot.system_label(2).to_string();
    let v = snapshot.second_step();
    let objective = |omega: &DensityMatrix| -> Result<f64> {
        let tau = v.conjugate(omega)?;
        Ok(
            entropy::qmi(&tau, &[REFERENCE], &[q2.as_str(), label.as_str()])?
                - entropy::qmi(omega, &[REFERENCE], &[q1.as_str(), label.as_str()])?,
        )
    };
    let found = squashed::search_extensions(&base, &label, objective, tolerance * 0.1, opts)?;
    Ok(found.spec)
}

/// Full classification of a model's snapshot.
pub fn classify(model: &InteractionModel, opts: &ClassifyOptions) -> Result<Classification> {
    let snapshot = process::run_snapshot(model)?;
    classify_snapshot(model, &snapshot, opts)
}

pub fn classify_snapshot(
    model: &InteractionModel,
    snapshot: &Snapshot,
    opts: &ClassifyOptions,
) -> Result<Classification> {
    let revival = process::detect_revival(snapshot, opts.revival_tol)?;
    let witness = witness_evidence(snapshot, opts.witness_tol)?;
    let (pure_verdict, pure_evidence) = pure_environment_rule(model, &revival)?;

    let mut candidates = Vec::new();
    if opts.use_attached && !model.inert_labels().is_empty() {
        candidates.push(ExtensionCandidate::Attached(model.inert_labels().to_vec()));
    }
    candidates.extend(opts.extensions.iter().cloned());
    let mut extensions = candidates
        .iter()
        .map(|c| extension_evidence(snapshot, c, opts.certify_tol))
        .collect::<Result<Vec<_>>>()?;
    if revival.revived
        && !witness.fired
        && pure_verdict.is_none()
        && !extensions.iter().any(|e| e.certified)
    {
        if let Some(search) = &opts.search {
            let spec = search_certifying_extension(snapshot, search, opts.certify_tol)?;
            extensions.push(extension_evidence(
                snapshot,
                &ExtensionCandidate::Spec(spec),
                opts.certify_tol,
            )?);
        }
    }
    let certified = extensions.iter().any(|e| e.certified);

    if revival.revived && certified && (witness.fired || pure_evidence.fired) {
        return Err(Error::InvariantViolation(
            "a revival was both certified non-causal and witnessed as genuine backflow".into(),
        ));
    }
    let (verdict, genuine_basis) = if !revival.revived {
        (Verdict::NoRevival, None)
    } else if witness.fired {
        (
            Verdict::GenuineBackflowWitnessed,
            Some(GenuineBasis::Operational),
        )
    } else if certified {
        (Verdict::NonCausalCertified, None)
    } else if pure_evidence.fired {
        (
            Verdict::GenuineBackflowWitnessed,
            Some(GenuineBasis::ModelRelative),
        )
    } else {
        (Verdict::Inconclusive, None)
    };
    Ok(Classification {
        verdict,
        genuine_basis,
        evidence: Evidence {
            revival,
            extensions,
            witness: Some(witness),
            pure_environment: Some(pure_evidence),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, PauliExtension, E_TILDE};
    use crate::tensor::SystemLayout;

    #[test]
    fn pauli_with_copy_is_certified() {
        for ext in [PauliExtension::Purifying, PauliExtension::ClassicalCopy] {
            let model = scenarios::pauli_control_model(ext).unwrap();
            let c = classify(&model, &ClassifyOptions::default()).unwrap();
            assert_eq!(c.verdict, Verdict::NonCausalCertified);
            let e = &c.evidence.extensions[0];
            assert!((e.qmi_t1 - 2.0).abs() < 1e-9 && (e.qmi_t2 - 2.0).abs() < 1e-9);
            assert!(e.qcmi_form_holds);
        }
    }

    #[test]
    fn pauli_witness_is_silent() {
        let model = scenarios::pauli_control_model(PauliExtension::None).unwrap();
        let s = process::run_snapshot(&model).unwrap();
        let w = witness_genuine_backflow(&s).unwrap();
        let ev = w.evidence.witness.unwrap();
        assert!(ev.margin.abs() < 1e-9);
        assert_eq!(w.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn trivial_extension_does_not_certify_revival() {
        let model = scenarios::pauli_control_model(PauliExtension::None).unwrap();
        let s = process::run_snapshot(&model).unwrap();
        let base = active_t1(&s).unwrap();
        let spec = ExtensionSpec::trivial(base, 1).unwrap();
        let c = certify_noncausal(&s, &ExtensionCandidate::Spec(spec)).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn swap_with_pure_environment() {
        let g = DensityMatrix::from_diagonal(SystemLayout::single("E", 2).unwrap(), &[1.0, 0.0])
            .unwrap();
        let model = scenarios::swap_model(2, &g).unwrap();
        assert_eq!(
            check_pure_environment_rule(&model).unwrap(),
            Some(Verdict::GenuineBackflowWitnessed)
        );
        let c = classify(&model, &ClassifyOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::GenuineBackflowWitnessed);
        assert_eq!(c.genuine_basis, Some(GenuineBasis::Operational));
        assert!((c.evidence.witness.unwrap().margin - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_environment_rule_abstains() {
        let g = DensityMatrix::maximally_mixed(SystemLayout::single("E", 2).unwrap());
        let model = scenarios::swap_model(2, &g).unwrap();
        assert_eq!(check_pure_environment_rule(&model).unwrap(), None);
    }

    #[test]
    fn attached_copy_is_labeled() {
        let model = scenarios::pauli_control_model(PauliExtension::Purifying).unwrap();
        let s = process::run_snapshot(&model).unwrap();
        let e = extension_evidence(
            &s,
            &ExtensionCandidate::Attached(vec![E_TILDE.into()]),
            CERTIFY_TOL,
        )
        .unwrap();
        assert_eq!(e.labels, vec![E_TILDE.to_string()]);
    }
}
