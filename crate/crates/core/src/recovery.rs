//! Petz recovery, its composition with the second interaction, and
//! reconstruction checks for extended snapshots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::optimize::{self, OptimizerConfig};
use crate::process::{Extension, Snapshot, REFERENCE};
use crate::squashed::{fresh_label, skew_hermitian_from_params};
use crate::tensor::{fidelity, DensityMatrix, QuantumChannel, SystemLayout, UnitaryInteraction};

/// Eigenvalue cutoff for the pseudo-inverse square root of `σ_B`.
pub const PINV_CUTOFF: f64 = 1e-10;
/// Choi eigenvalues below this are dropped from Kraus decompositions.
pub const KRAUS_CUTOFF: f64 = 1e-12;
/// Largest input weight outside `supp σ_B` accepted by [`PetzRecovery::apply`].
pub const SUPPORT_TOL: f64 = 1e-9;
/// Slack on the `F ≥ 2^{-ε}` comparison.
pub const BOUND_TOL: f64 = 1e-9;

/// `X ↦ σ_BC^{1/2} (σ_B^{-1/2} X σ_B^{-1/2} ⊗ I_C) σ_BC^{1/2}` on
/// `supp σ_B`, completed to a channel by preparing `σ_BC` on the orthogonal
/// complement.
#[derive(Debug, Clone, PartialEq)]
pub struct PetzRecovery {
    channel: QuantumChannel,
    support: CMatrix,
}

impl PetzRecovery {
    pub fn channel(&self) -> &QuantumChannel {
        &self.channel
    }

    pub fn into_channel(self) -> QuantumChannel {
        self.channel
    }

    /// Projector onto `supp σ_B`.
    pub fn support(&self) -> &CMatrix {
        &self.support
    }

    /// Apply to the `B` factors of `rho`, refusing inputs with weight outside
    /// `supp σ_B`, where the map is not the Petz map.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let b = self.channel.input_layout();
        let rho_b = rho.partial_trace(&b.labels())?.aligned_to(b)?;
        let inside = linalg::trace(&(&self.support * rho_b.matrix())).re;
        let outside = rho_b.trace() - inside;
        if outside > SUPPORT_TOL {
            return Err(Error::SupportViolation(outside));
        }
        self.channel.apply(rho)
    }
}

fn owned<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels.iter().map(|s| s.as_ref().to_string()).collect()
}

/// Petz map `B -> BC` of `σ_full`; the output layout is `B` followed by `C`,
/// each in the order given.
pub fn petz_recovery<S: AsRef<str>, T: AsRef<str>>(
    sigma_full: &DensityMatrix,
    b: &[S],
    c_labels: &[T],
) -> Result<PetzRecovery> {
    crate::tensor::ensure_disjoint(b, c_labels)?;
    let (b, cl) = (owned(b), owned(c_labels));
    let mut bc_labels = b.clone();
    bc_labels.extend(cl.iter().cloned());
    let sigma_bc = sigma_full
        .partial_trace(&bc_labels)?
        .permute_factors(&bc_labels)?;
    let sigma_b = sigma_bc.partial_trace(&b)?;
    let (db, dc) = (sigma_b.dim(), sigma_bc.dim() / sigma_b.dim());
    let b_layout = sigma_b.layout().clone();
    let bc_layout = sigma_bc.layout().clone();

    let a = linalg::psd_sqrt(sigma_bc.matrix(), 0.0)
        * linalg::kron(
            &linalg::pinv_sqrt(sigma_b.matrix(), PINV_CUTOFF),
            &linalg::identity(dc),
        );
    let mut kraus: Vec<CMatrix> = (0..dc)
        .map(|ci| CMatrix::from_fn(db * dc, db, |o, i| a[(o, i * dc + ci)]))
        .collect();

    let (b_values, b_vectors) = linalg::eigh(sigma_b.matrix());
    let (w_values, w_vectors) = linalg::eigh(sigma_bc.matrix());
    for (j, _) in b_values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= PINV_CUTOFF)
    {
        let bra = b_vectors.column(j).adjoint();
        for (k, &mu) in w_values.iter().enumerate() {
            if mu <= 1e-14 {
                continue;
            }
            kraus.push(w_vectors.column(k) * &bra * c(mu.sqrt(), 0.0));
        }
    }
    let direct = QuantumChannel::new(b_layout.clone(), bc_layout.clone(), kraus)?;
    let channel = QuantumChannel::from_choi(b_layout, bc_layout, &direct.choi(), KRAUS_CUTOFF)?;
    Ok(PetzRecovery {
        channel,
        support: linalg::support_projector(sigma_b.matrix(), PINV_CUTOFF),
    })
}

/// `V ∘ R`: the unitary acts on its input factors inside `R`'s output and any
/// other output factors pass through.
pub fn compose_recovery_with_v(
    r: &QuantumChannel,
    v: &UnitaryInteraction,
) -> Result<QuantumChannel> {
    for f in v.input_layout().factors() {
        match r.output_layout().dim_of(&f.label) {
            Ok(d) if d == f.dim => {}
            _ => {
                return Err(Error::LayoutMismatch(format!(
                    "recovery output {} does not contain the unitary input {}",
                    r.output_layout(),
                    v.input_layout()
                )))
            }
        }
    }
    let reference = fresh_label(r.output_layout(), "ref");
    let reference = fresh_label(r.input_layout(), &reference);
    let choi = v.conjugate(&r.choi_state(&reference)?)?;
    let output = choi.layout().without(&[reference.as_str()])?;
    let din = r.input_layout().total_dim() as f64;
    let unnormalized = choi.matrix() * c(din, 0.0);
    QuantumChannel::from_choi(
        r.input_layout().clone(),
        output,
        &unnormalized,
        KRAUS_CUTOFF,
    )
}

/// `F(σ_full, R(σ_{rest, B}))` for a channel `R: B -> BC`.
pub fn reconstruction_fidelity(
    sigma_full: &DensityMatrix,
    channel: &QuantumChannel,
) -> Result<f64> {
    let produced = channel.output_layout().labels();
    let keep: Vec<String> = sigma_full
        .layout()
        .labels()
        .into_iter()
        .filter(|l| !produced.contains(l) || channel.input_layout().contains(l))
        .collect();
    let input = sigma_full.partial_trace(&keep)?;
    let out = channel.apply(&input)?;
    fidelity(&sigma_full.aligned_to(out.layout())?, &out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RecoveryCandidate {
    Petz,
    Variational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryOptions {
    pub fallback: bool,
    pub restarts: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Skip the variational search when the generator would need more
    /// parameters than this.
    pub max_params: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            fallback: true,
            restarts: 4,
            seed: 0,
            optimizer: OptimizerConfig {
                max_iterations: 200,
                ..Default::default()
            },
            max_params: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackSummary {
    pub fidelity: f64,
    pub restarts: usize,
    pub converged: bool,
    pub parameters: usize,
    /// Set when the search was not attempted.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Best recovery channel `Q'F -> Q'E'F` found.
    pub channel: QuantumChannel,
    /// `F(τ_{RQ''E''F}, (V ∘ R)(σ_{RQ'F}))` for the best channel.
    pub reconstruction_fidelity: f64,
    pub qcmi_input: f64,
    pub bound_2_to_minus_eps: f64,
    pub bound_satisfied: bool,
    pub candidate: RecoveryCandidate,
    pub petz_fidelity: f64,
    pub fallback: Option<FallbackSummary>,
}

/// Serializable part of a [`RecoveryResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub reconstruction_fidelity: f64,
    pub qcmi_input: f64,
    pub bound_2_to_minus_eps: f64,
    pub bound_satisfied: bool,
    pub bound_tolerance: f64,
    pub candidate: RecoveryCandidate,
    pub petz_fidelity: f64,
    pub fallback: Option<FallbackSummary>,
}

impl RecoveryResult {
    pub fn summary(&self) -> RecoverySummary {
        RecoverySummary {
            reconstruction_fidelity: self.reconstruction_fidelity,
            qcmi_input: self.qcmi_input,
            bound_2_to_minus_eps: self.bound_2_to_minus_eps,
            bound_satisfied: self.bound_satisfied,
            bound_tolerance: BOUND_TOL,
            candidate: self.candidate,
            petz_fidelity: self.petz_fidelity,
            fallback: self.fallback.clone(),
        }
    }
}

/// Channels `B -> BC` given by the first `dim B` columns of
/// `exp(K(θ)) W₀`, with `W₀` a unitary completion of a Stinespring isometry
/// of the Petz map. `θ = 0` is the Petz map itself.
struct StinespringFamily {
    base: CMatrix,
    input: SystemLayout,
    output: SystemLayout,
    junk: usize,
}

impl StinespringFamily {
    fn around(channel: &QuantumChannel) -> Self {
        let (din, dout) = (
            channel.input_layout().total_dim(),
            channel.output_layout().total_dim(),
        );
        let junk = channel.kraus().len();
        let iso = CMatrix::from_fn(dout * junk, din, |row, i| {
            channel.kraus()[row % junk][(row / junk, i)]
        });
        Self {
            base: linalg::complete_to_unitary(&iso),
            input: channel.input_layout().clone(),
            output: channel.output_layout().clone(),
            junk,
        }
    }

    fn n(&self) -> usize {
        self.base.nrows()
    }

    fn channel(&self, params: &[f64]) -> Result<QuantumChannel> {
        let w =
            linalg::expm_skew_hermitian(&skew_hermitian_from_params(params, self.n())) * &self.base;
        let iso = w.columns(0, self.input.total_dim()).into_owned();
        QuantumChannel::from_isometry(self.input.clone(), self.output.clone(), self.junk, &iso)
    }
}

fn variational_recovery(
    sigma_full: &DensityMatrix,
    petz: &QuantumChannel,
    goal: f64,
    opts: &RecoveryOptions,
) -> Result<(Option<QuantumChannel>, FallbackSummary)> {
    let family = StinespringFamily::around(petz);
    let n = family.n();
    if n * n > opts.max_params {
        return Ok((
            None,
            FallbackSummary {
                fidelity: 0.0,
                restarts: 0,
                converged: false,
                parameters: n * n,
                skipped: Some(format!(
                    "{} parameters exceed the cap of {}",
                    n * n,
                    opts.max_params
                )),
            },
        ));
    }
    let objective = |x: &[f64]| -> Result<f64> {
        Ok(-reconstruction_fidelity(sigma_full, &family.channel(x)?)?)
    };
    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|i| {
            if i == 0 {
                vec![0.0; n * n]
            } else {
                let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
                rng.set_stream(i as u64);
                (0..n * n)
                    .map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
        })
        .collect();
    let results: Vec<optimize::Minimum> = starts
        .into_par_iter()
        .map(|x0| optimize::minimize(&objective, x0, &opts.optimizer, Some(-goal)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, m) in results.iter().enumerate() {
        if m.value < results[best].value {
            best = i;
        }
    }
    let m = &results[best];
    Ok((
        Some(family.channel(&m.x)?),
        FallbackSummary {
            fidelity: -m.value,
            restarts: results.len(),
            converged: m.converged,
            parameters: n * n,
            skipped: None,
        },
    ))
}

/// Best recovery `B -> BC` found for a tripartite state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecovery {
    pub channel: QuantumChannel,
    /// `F(σ, R(σ_{AB}))` for the best channel.
    pub fidelity: f64,
    /// `I(A;C|B)` with `A` every factor outside `B` and `C`.
    pub qcmi: f64,
    pub bound_2_to_minus_eps: f64,
    pub bound_satisfied: bool,
    pub candidate: RecoveryCandidate,
    pub petz_fidelity: f64,
    pub fallback: Option<FallbackSummary>,
}

/// Petz recovery of `C` from `B`, followed by a variational search when the
/// Petz map misses `F ≥ 2^{-I(A;C|B)}`.
pub fn recover_state<S: AsRef<str>, T: AsRef<str>>(
    sigma_full: &DensityMatrix,
    b: &[S],
    c_labels: &[T],
    opts: &RecoveryOptions,
) -> Result<StateRecovery> {
    let (b, cl) = (owned(b), owned(c_labels));
    let a: Vec<String> = sigma_full
        .layout()
        .labels()
        .into_iter()
        .filter(|l| !b.contains(l) && !cl.contains(l))
        .collect();
    let qcmi = if a.is_empty() {
        0.0
    } else {
        crate::entropy::qcmi(sigma_full, &a, &cl, &b)?
    };
    let bound = 2f64.powf(-qcmi.max(0.0));
    let petz = petz_recovery(sigma_full, &b, &cl)?.into_channel();
    let petz_fidelity = reconstruction_fidelity(sigma_full, &petz)?;
    let mut result = StateRecovery {
        channel: petz,
        fidelity: petz_fidelity,
        qcmi,
        bound_2_to_minus_eps: bound,
        bound_satisfied: petz_fidelity >= bound - BOUND_TOL,
        candidate: RecoveryCandidate::Petz,
        petz_fidelity,
        fallback: None,
    };
    if result.bound_satisfied || !opts.fallback {
        return Ok(result);
    }
    log::info!("Petz recovery fidelity {petz_fidelity:.9} below 2^-eps = {bound:.9}; trying variational search");
    let (found, summary) = variational_recovery(sigma_full, &result.channel, bound, opts)?;
    if let Some(ch) = found {
        let fid = reconstruction_fidelity(sigma_full, &ch)?;
        if fid > petz_fidelity {
            result.channel = ch;
            result.fidelity = fid;
            result.candidate = RecoveryCandidate::Variational;
            result.bound_satisfied = fid >= bound - BOUND_TOL;
        }
    }
    if !result.bound_satisfied {
        log::warn!(
            "no recovery channel found with fidelity above 2^-eps = {bound:.9} (best {:.9})",
            result.fidelity
        );
    }
    result.fallback = Some(summary);
    Ok(result)
}

/// Try to reproduce `τ_{RQ''E''F}` from `σ_{RQ'F}` through `V ∘ R`, first with
/// the Petz map and then, if `F ≥ 2^{-ε}` fails, with a variational search.
/// By unitary invariance of the fidelity the search runs on `R` alone; the
/// reported fidelity is recomputed through `V`.
pub fn check_approximate_recovery(
    snapshot: &Snapshot,
    extension: &Extension,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult> {
    let ext = snapshot.extend(extension)?;
    let mut b = vec![ext.system[0].clone()];
    b.extend(ext.extension.iter().cloned());
    let env1 = ext.environment[0].clone();
    let mut full1 = vec![REFERENCE.to_string()];
    full1.extend(b.iter().cloned());
    full1.extend(env1.iter().cloned());
    let sigma_full = ext.sigma.partial_trace(&full1)?;

    let mut full2 = vec![REFERENCE.to_string(), ext.system[1].clone()];
    full2.extend(ext.environment[1].iter().cloned());
    full2.extend(ext.extension.iter().cloned());
    let tau_full = ext.tau.partial_trace(&full2)?;
    let mut rb = vec![REFERENCE.to_string()];
    rb.extend(b.iter().cloned());
    let sigma_rb = ext.sigma.partial_trace(&rb)?;

    let v = snapshot.second_step();
    let through_v = |r: &QuantumChannel| -> Result<f64> {
        let n = compose_recovery_with_v(r, v)?;
        let out = n.apply(&sigma_rb)?;
        fidelity(&tau_full.aligned_to(out.layout())?, &out)
    };

    let found = recover_state(&sigma_full, &b, &env1, opts)?;
    let reconstruction_fidelity = through_v(&found.channel)?;
    let petz_fidelity = if found.candidate == RecoveryCandidate::Petz {
        reconstruction_fidelity
    } else {
        found.petz_fidelity
    };
    Ok(RecoveryResult {
        channel: found.channel,
        reconstruction_fidelity,
        qcmi_input: found.qcmi,
        bound_2_to_minus_eps: found.bound_2_to_minus_eps,
        bound_satisfied: reconstruction_fidelity >= found.bound_2_to_minus_eps - BOUND_TOL,
        candidate: found.candidate,
        petz_fidelity,
        fallback: found.fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy;
    use crate::tensor::random_density;

    fn layout3() -> SystemLayout {
        SystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap()
    }

    #[test]
    fn product_case_appends_marginal() {
        let ab = random_density(SystemLayout::new([("A", 2), ("B", 2)]).unwrap(), 4, 1).unwrap();
        let cst = random_density(SystemLayout::single("C", 2).unwrap(), 2, 2).unwrap();
        let sigma = ab.tensor(&cst).unwrap();
        let r = petz_recovery(&sigma, &["B"], &["C"]).unwrap();
        let x = random_density(SystemLayout::single("B", 2).unwrap(), 2, 3).unwrap();
        let out = r.apply(&x).unwrap();
        let expected = x.tensor(&cst).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), expected.matrix()) < 1e-10);
    }

    #[test]
    fn petz_is_trace_preserving_with_deficient_support() {
        // σ_B of rank 1 inside a qubit
        let b = DensityMatrix::from_diagonal(SystemLayout::single("B", 2).unwrap(), &[1.0, 0.0])
            .unwrap();
        let ac = random_density(SystemLayout::new([("A", 2), ("C", 2)]).unwrap(), 3, 4).unwrap();
        let sigma = ac.tensor(&b).unwrap();
        let r = petz_recovery(&sigma, &["B"], &["C"]).unwrap();
        assert!(r.channel().trace_preservation_error() < 1e-9);
        let outside =
            DensityMatrix::from_diagonal(SystemLayout::single("B", 2).unwrap(), &[0.0, 1.0])
                .unwrap();
        assert!(matches!(r.apply(&outside), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn random_state_is_not_recovered() {
        let sigma = random_density(layout3(), 8, 5).unwrap();
        let q = entropy::qcmi(&sigma, &["A"], &["C"], &["B"]).unwrap();
        let r = petz_recovery(&sigma, &["B"], &["C"]).unwrap();
        let f = reconstruction_fidelity(&sigma, r.channel()).unwrap();
        assert!(q > 0.01);
        assert!(f < 1.0 - 1e-6);
        assert!(f <= 1.0 + 1e-12);
    }

    #[test]
    fn identity_unitary_composition_is_unchanged() {
        let sigma = random_density(layout3(), 8, 6).unwrap();
        let r = petz_recovery(&sigma, &["B"], &["C"])
            .unwrap()
            .into_channel();
        let v = UnitaryInteraction::identity(
            SystemLayout::new([("B", 2), ("C", 2)]).unwrap(),
            SystemLayout::new([("B", 2), ("C", 2)]).unwrap(),
        )
        .unwrap();
        let n = compose_recovery_with_v(&r, &v).unwrap();
        assert!(linalg::max_abs_diff(&n.choi(), &r.choi()) < 1e-10);
    }

    #[test]
    fn composition_rejects_mismatched_layout() {
        let sigma = random_density(layout3(), 8, 6).unwrap();
        let r = petz_recovery(&sigma, &["B"], &["C"])
            .unwrap()
            .into_channel();
        let v = UnitaryInteraction::identity(
            SystemLayout::new([("B", 2), ("D", 2)]).unwrap(),
            SystemLayout::new([("B'", 2), ("D'", 2)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            compose_recovery_with_v(&r, &v),
            Err(Error::LayoutMismatch(_))
        ));
    }

    fn append_mixed_c() -> QuantumChannel {
        // B -> B ⊗ I/2
        let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let kraus = (0..2)
            .map(|j| {
                CMatrix::from_fn(4, 2, |o, i| {
                    if o / 2 == i && o % 2 == j {
                        h
                    } else {
                        c(0.0, 0.0)
                    }
                })
            })
            .collect();
        QuantumChannel::new(
            SystemLayout::single("B", 2).unwrap(),
            SystemLayout::new([("B", 2), ("C", 2)]).unwrap(),
            kraus,
        )
        .unwrap()
    }

    #[test]
    fn stinespring_family_starts_at_its_base() {
        let base = append_mixed_c();
        let family = StinespringFamily::around(&base);
        let at_zero = family.channel(&vec![0.0; family.n() * family.n()]).unwrap();
        assert!(linalg::max_abs_diff(&at_zero.choi(), &base.choi()) < 1e-10);
    }

    #[test]
    fn variational_search_improves_a_poor_start() {
        let ab = random_density(SystemLayout::new([("A", 2), ("B", 2)]).unwrap(), 4, 1).unwrap();
        let cst = DensityMatrix::from_diagonal(SystemLayout::single("C", 2).unwrap(), &[0.9, 0.1])
            .unwrap();
        let sigma = ab.tensor(&cst).unwrap();
        let start = append_mixed_c();
        let before = reconstruction_fidelity(&sigma, &start).unwrap();
        let opts = RecoveryOptions {
            restarts: 1,
            ..Default::default()
        };
        let (found, summary) = variational_recovery(&sigma, &start, 1.0, &opts).unwrap();
        let after = reconstruction_fidelity(&sigma, &found.unwrap()).unwrap();
        assert!(after > before + 0.05, "{before} -> {after}");
        assert!((summary.fidelity - after).abs() < 1e-12);
        assert!(after > 1.0 - 1e-6, "{after}");
    }

    #[test]
    fn variational_search_respects_parameter_cap() {
        let sigma = random_density(layout3(), 8, 6).unwrap();
        let opts = RecoveryOptions {
            max_params: 10,
            ..Default::default()
        };
        let (found, summary) = variational_recovery(&sigma, &append_mixed_c(), 1.0, &opts).unwrap();
        assert!(found.is_none());
        assert!(summary.skipped.is_some());
    }
}
