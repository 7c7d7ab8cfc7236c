//! Built-in models: the Pauli-controlled depolarizer, the swap model, random
//! models and classical mixtures of models.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I, ONE, ZERO};
use crate::process::{self, InteractionModel, Snapshot, REFERENCE, SYSTEM};
use crate::tensor::random::{haar_unitary_with, random_density_with, rng_from_seed};
use crate::tensor::{DensityMatrix, PureState, SystemLayout, UnitaryInteraction};

/// Inert copy of the Pauli environment, or the mixture's classical register.
pub const E_TILDE: &str = "E~";
/// Inert copy of the mixture's classical register.
pub const F_TILDE: &str = "F~";
/// Combined inert factor carried over from mixture components.
pub const F_COMBINED: &str = "F";
/// Largest `d_system * d_env` accepted by the random generators.
pub const RANDOM_DIM_CAP: usize = 64;
pub const PROBABILITY_TOL: f64 = 1e-12;
const DECOMPOSITION_TOL: f64 = 1e-9;

/// Names addressable from configuration files.
pub const SCENARIO_NAMES: [(&str, &str); 4] = [
    (
        "pauli-control",
        "uniform Pauli twirl controlled by a maximally mixed 4-level environment, applied twice",
    ),
    ("swap", "system and environment swapped, then swapped back"),
    (
        "convex-mixture",
        "classical mixture of component models with an inert copy of the mixing register",
    ),
    (
        "haar",
        "Haar-random interactions with a random environment of given rank",
    ),
];

/// Optional inert partner for the Pauli environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PauliExtension {
    None,
    /// `E~` purifies `E`.
    Purifying,
    /// `E~` is a classical copy of `E` in the computational basis.
    ClassicalCopy,
}

/// `I, X, Y, Z`.
pub fn pauli_matrices() -> [CMatrix; 4] {
    [
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// `Σ_i π^i ⊗ |i⟩⟨i|` on qubit ⊗ 4-level control.
pub fn pauli_control_unitary() -> CMatrix {
    let mut m = CMatrix::zeros(8, 8);
    for (i, p) in pauli_matrices().iter().enumerate() {
        let mut proj = CMatrix::zeros(4, 4);
        proj[(i, i)] = ONE;
        m += linalg::kron(p, &proj);
    }
    m
}

/// `|a⟩|b⟩ ↦ |b⟩|a⟩` on `C^d ⊗ C^d`.
pub fn swap_matrix(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = ONE;
        }
    }
    m
}

fn step_layouts(d_sys: usize, env: &[(&str, usize)]) -> Result<[SystemLayout; 3]> {
    let build = |primes: &str| {
        let mut factors = vec![(format!("{SYSTEM}{primes}"), d_sys)];
        factors.extend(env.iter().map(|(l, d)| (format!("{l}{primes}"), *d)));
        SystemLayout::new(factors)
    };
    Ok([build("")?, build("'")?, build("''")?])
}

fn two_step_model(
    d_sys: usize,
    env_state: DensityMatrix,
    inert: Vec<String>,
    active: &[(&str, usize)],
    u: CMatrix,
    v: CMatrix,
) -> Result<InteractionModel> {
    let [l0, l1, l2] = step_layouts(d_sys, active)?;
    let u = UnitaryInteraction::new(l0, l1.clone(), u)?;
    let v = UnitaryInteraction::new(l1, l2, v)?;
    InteractionModel::new(d_sys, env_state, inert, u, v)
}

/// The Pauli-controlled model: `γ_E = I/4`, `U = V = Σ_i π^i ⊗ |i⟩⟨i|`.
pub fn pauli_control_model(extension: PauliExtension) -> Result<InteractionModel> {
    let e = SystemLayout::single("E", 4)?;
    let (env, inert) = match extension {
        PauliExtension::None => (DensityMatrix::maximally_mixed(e), vec![]),
        PauliExtension::Purifying => (
            PureState::maximally_entangled("E", E_TILDE, 4)?.to_density(),
            vec![E_TILDE.to_string()],
        ),
        PauliExtension::ClassicalCopy => {
            let layout = SystemLayout::new([("E", 4), (E_TILDE, 4)])?;
            let mut diag = vec![0.0; 16];
            for i in 0..4 {
                diag[i * 4 + i] = 0.25;
            }
            (
                DensityMatrix::from_diagonal(layout, &diag)?,
                vec![E_TILDE.to_string()],
            )
        }
    };
    let u = pauli_control_unitary();
    two_step_model(2, env, inert, &[("E", 4)], u.clone(), u)
}

/// Swap `Q` with a `d`-level environment and swap back. Logs a warning when
/// `H(γ) ≥ log2 d`, where no genuine-backflow witness can fire.
pub fn swap_model(d: usize, gamma: &DensityMatrix) -> Result<InteractionModel> {
    if gamma.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "swap environment has dimension {}, system has {d}",
            gamma.dim()
        )));
    }
    let margin = swap_entropy_margin(d, gamma);
    if margin <= 0.0 {
        warn!("swap environment entropy is not below log2 {d} (margin {margin:.3e} bits)");
    }
    let env = DensityMatrix::from_trusted(SystemLayout::single("E", d)?, gamma.matrix().clone());
    let s = swap_matrix(d);
    two_step_model(d, env, vec![], &[("E", d)], s.clone(), s)
}

/// `log2 d - H(γ)`.
pub fn swap_entropy_margin(d: usize, gamma: &DensityMatrix) -> f64 {
    (d as f64).log2() - entropy::spectrum_entropy(&gamma.eigenvalues())
}

/// Qubit environment `diag(1-p, p)` with `h(p) = bits`.
pub fn binary_entropy_environment(bits: f64) -> Result<DensityMatrix> {
    let p = entropy::inverse_binary_entropy(bits);
    DensityMatrix::from_diagonal(SystemLayout::single("E", 2)?, &[1.0 - p, p])
}

fn check_random_dims(d_system: usize, d_env: usize, env_rank: usize) -> Result<()> {
    if d_system == 0 {
        return Err(Error::InvalidDimension(SYSTEM.into(), 0));
    }
    if d_env == 0 {
        return Err(Error::InvalidDimension("E".into(), 0));
    }
    let dim = d_system * d_env;
    if dim > RANDOM_DIM_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: RANDOM_DIM_CAP,
        });
    }
    if env_rank == 0 || env_rank > d_env {
        return Err(Error::RankTooLarge {
            rank: env_rank,
            dim: d_env,
        });
    }
    Ok(())
}

/// Haar-random `U` and `V` with a random environment of rank `env_rank`.
pub fn random_model(
    d_system: usize,
    d_env: usize,
    env_rank: usize,
    seed: u64,
) -> Result<InteractionModel> {
    check_random_dims(d_system, d_env, env_rank)?;
    let mut rng = rng_from_seed(seed);
    random_model_with(&mut rng, d_system, d_env, env_rank, false)
}

/// As [`random_model`], but `V = W ⊗ I` acts on the system alone, so no
/// revival can occur.
pub fn random_markovian_model(
    d_system: usize,
    d_env: usize,
    env_rank: usize,
    seed: u64,
) -> Result<InteractionModel> {
    check_random_dims(d_system, d_env, env_rank)?;
    let mut rng = rng_from_seed(seed);
    random_model_with(&mut rng, d_system, d_env, env_rank, true)
}

pub fn random_model_with<R: Rng + ?Sized>(
    rng: &mut R,
    d_system: usize,
    d_env: usize,
    env_rank: usize,
    markovian: bool,
) -> Result<InteractionModel> {
    check_random_dims(d_system, d_env, env_rank)?;
    let [l0, l1, l2] = step_layouts(d_system, &[("E", d_env)])?;
    let gamma = random_density_with(rng, SystemLayout::single("E", d_env)?, env_rank)?;
    let u = haar_unitary_with(rng, l0, l1.clone())?;
    let v = if markovian {
        let w = crate::tensor::random::haar_matrix(rng, d_system);
        UnitaryInteraction::new(l1, l2, linalg::kron(&w, &linalg::identity(d_env)))?
    } else {
        haar_unitary_with(rng, l1, l2)?
    };
    InteractionModel::new(d_system, gamma, vec![], u, v)
}

/// Weighted component models.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub components: Vec<(f64, InteractionModel)>,
}

impl MixtureSpec {
    pub fn new(components: Vec<(f64, InteractionModel)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        let mut total = 0.0;
        for (p, _) in &components {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::InvalidParameter(format!("mixing probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotNormalized(total));
        }
        let d = components[0].1.d_system();
        if let Some((_, m)) = components.iter().find(|(_, m)| m.d_system() != d) {
            return Err(Error::DimensionMismatch(format!(
                "mixture components have system dimensions {d} and {}",
                m.d_system()
            )));
        }
        Ok(Self { components })
    }
}

/// A mixture model and the data needed to audit it.
#[derive(Debug, Clone)]
pub struct ConvexMixture {
    pub model: InteractionModel,
    pub probabilities: Vec<f64>,
    pub components: Vec<InteractionModel>,
    /// Labels of the canonical inert extension: `F~`, preceded by `F` when
    /// any component carries inert factors.
    pub extension: Vec<String>,
}

/// Component `x` as a flat block `Q ⊗ E -> Q' ⊗ E'` on its own dimensions.
struct FlatStep {
    d_in: usize,
    env_in: usize,
    d_out: usize,
    env_out: usize,
    matrix: CMatrix,
}

fn flatten_first_step(model: &InteractionModel) -> Result<FlatStep> {
    let u = model.first_step();
    let active = model.active_env_labels();
    let mut natural_labels = vec![SYSTEM.to_string()];
    natural_labels.extend(active.iter().cloned());
    let natural = u.input_layout().restrict(&natural_labels)?;
    let natural = SystemLayout::from_factors(
        natural_labels
            .iter()
            .map(|l| natural.factors()[natural.position(l).unwrap()].clone())
            .collect(),
    )?;
    let (_, perm) = crate::tensor::state_permutation(&natural, &u.input_layout().labels())?;
    let n = natural.total_dim();
    // U's column for input index in its own order n_new is natural index perm[n_new]
    let mut matrix = CMatrix::zeros(n, n);
    for (n_new, &m) in perm.iter().enumerate() {
        matrix.set_column(m, &u.matrix().column(n_new));
    }
    let d_out = u.output_layout().factors()[0].dim;
    Ok(FlatStep {
        d_in: model.d_system(),
        env_in: n / model.d_system(),
        d_out,
        env_out: n / d_out,
        matrix,
    })
}

fn flatten_second_step(model: &InteractionModel) -> FlatStep {
    let v = model.second_step();
    let n = v.input_layout().total_dim();
    let d_in = v.input_layout().factors()[0].dim;
    let d_out = v.output_layout().factors()[0].dim;
    FlatStep {
        d_in,
        env_in: n / d_in,
        d_out,
        env_out: n / d_out,
        matrix: v.matrix().clone(),
    }
}

/// Embed a block into `C^d_in ⊗ C^big_in -> C^d_out ⊗ C^big_out`, mapping the
/// orthogonal complements onto each other in lexicographic order.
fn padded_block(step: &FlatStep, big_in: usize, big_out: usize) -> CMatrix {
    let n = step.d_in * big_in;
    let mut m = CMatrix::zeros(n, n);
    let into_in = |q: usize, e: usize| q * big_in + e;
    let into_out = |q: usize, e: usize| q * big_out + e;
    for q in 0..step.d_in {
        for e in 0..step.env_in {
            let col = into_in(q, e);
            for qo in 0..step.d_out {
                for eo in 0..step.env_out {
                    m[(into_out(qo, eo), col)] =
                        step.matrix[(qo * step.env_out + eo, q * step.env_in + e)];
                }
            }
        }
    }
    let rest_in = (0..step.d_in).flat_map(|q| (step.env_in..big_in).map(move |e| into_in(q, e)));
    let rest_out: Vec<usize> = (0..step.d_out)
        .flat_map(|q| (step.env_out..big_out).map(move |e| into_out(q, e)))
        .collect();
    for (col, &row) in rest_in.zip(rest_out.iter()) {
        m[(row, col)] = ONE;
    }
    m
}

fn controlled(blocks: &[CMatrix]) -> CMatrix {
    let n = blocks.len();
    let b = blocks[0].nrows();
    let mut m = CMatrix::zeros(b * n, b * n);
    for (x, block) in blocks.iter().enumerate() {
        for i in 0..b {
            for j in 0..b {
                m[(i * n + x, j * n + x)] = block[(i, j)];
            }
        }
    }
    m
}

fn single_dim_check(values: &[usize], what: &str) -> Result<usize> {
    let first = values[0];
    if values.iter().any(|&v| v != first) {
        return Err(Error::DimensionMismatch(format!(
            "mixture components disagree on the {what} dimension: {values:?}"
        )));
    }
    Ok(first)
}

/// Classical mixture `Σ_x p_x (component x) ⊗ |x⟩⟨x|_E~ ⊗ |x⟩⟨x|_F~` with
/// controlled unitaries `Σ_x U^(x) ⊗ |x⟩⟨x|_E~`. Environments of different
/// sizes are padded into the largest.
pub fn build_convex_mixture(spec: &MixtureSpec) -> Result<ConvexMixture> {
    let n = spec.components.len();
    let d = spec.components[0].1.d_system();
    let firsts = spec
        .components
        .iter()
        .map(|(_, m)| flatten_first_step(m))
        .collect::<Result<Vec<_>>>()?;
    let seconds: Vec<FlatStep> = spec
        .components
        .iter()
        .map(|(_, m)| flatten_second_step(m))
        .collect();
    let d1 = single_dim_check(
        &firsts.iter().map(|s| s.d_out).collect::<Vec<_>>(),
        "t1 system",
    )?;
    let d2 = single_dim_check(
        &seconds.iter().map(|s| s.d_out).collect::<Vec<_>>(),
        "t2 system",
    )?;

    let big_e = firsts.iter().map(|s| s.env_in).max().unwrap();
    let total = d * big_e;
    if !total.is_multiple_of(d1) || !total.is_multiple_of(d2) {
        return Err(Error::DimensionMismatch(format!(
            "padded dimension {total} does not factor through system dimensions {d1} and {d2}"
        )));
    }
    let (big_e1, big_e2) = (total / d1, total / d2);

    let inert_dims: Vec<usize> = spec
        .components
        .iter()
        .map(|(_, m)| {
            m.env_state()
                .layout()
                .dim_of_set(m.inert_labels())
                .unwrap_or(1)
        })
        .collect();
    let big_f = *inert_dims.iter().max().unwrap();

    // environment E ⊗ E~ ⊗ [F] ⊗ F~
    let env_dim = big_e * n * big_f * n;
    let mut env = CMatrix::zeros(env_dim, env_dim);
    for (x, (p, model)) in spec.components.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let mut order = model.active_env_labels();
        order.extend(model.inert_labels().iter().cloned());
        let gamma = model.env_state().permute_factors(&order)?;
        let (ge, gf) = (firsts[x].env_in, inert_dims[x]);
        let index = |e: usize, f: usize| ((e * n + x) * big_f + f) * n + x;
        for e in 0..ge {
            for f in 0..gf {
                for e2 in 0..ge {
                    for f2 in 0..gf {
                        env[(index(e, f), index(e2, f2))] +=
                            gamma.matrix()[(e * gf + f, e2 * gf + f2)] * c(*p, 0.0);
                    }
                }
            }
        }
    }
    let mut env_factors = vec![("E".to_string(), big_e), (E_TILDE.to_string(), n)];
    let mut extension = Vec::new();
    if big_f > 1 {
        env_factors.push((F_COMBINED.to_string(), big_f));
        extension.push(F_COMBINED.to_string());
    }
    env_factors.push((F_TILDE.to_string(), n));
    extension.push(F_TILDE.to_string());
    // with big_f = 1 the F index is always 0 and the factor is dropped
    let env = DensityMatrix::from_trusted(SystemLayout::new(env_factors)?, env);

    let u_blocks: Vec<CMatrix> = firsts
        .iter()
        .map(|s| padded_block(s, big_e, big_e1))
        .collect();
    let v_blocks: Vec<CMatrix> = seconds
        .iter()
        .map(|s| padded_block(s, big_e1, big_e2))
        .collect();
    let l0 = SystemLayout::new([
        (SYSTEM.to_string(), d),
        ("E".into(), big_e),
        (E_TILDE.into(), n),
    ])?;
    let l1 = SystemLayout::new([
        ("Q'".to_string(), d1),
        ("E'".into(), big_e1),
        ("E~'".into(), n),
    ])?;
    let l2 = SystemLayout::new([
        ("Q''".to_string(), d2),
        ("E''".into(), big_e2),
        ("E~''".into(), n),
    ])?;
    let u = UnitaryInteraction::new(l0, l1.clone(), controlled(&u_blocks))?;
    let v = UnitaryInteraction::new(l1, l2, controlled(&v_blocks))?;
    let model = InteractionModel::new(d, env, extension.clone(), u, v)?;
    Ok(ConvexMixture {
        model,
        probabilities: spec.components.iter().map(|(p, _)| *p).collect(),
        components: spec.components.iter().map(|(_, m)| m.clone()).collect(),
        extension,
    })
}

/// Outcome of the extended data-processing audit of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedDpi {
    /// `I(R;Q'F F~)_1 - I(R;Q''F F~)_2`.
    pub value: f64,
    /// `|I(R;Q'F|F~)_1 - Σ_x p_x I(R;Q'F)^(x)_1|`, with the analogous t2 gap.
    pub decomposition_gap: [f64; 2],
    /// `max_t |I(R;F~)_t|`.
    pub register_correlation: f64,
}

impl ConvexMixture {
    pub fn run(&self) -> Result<Snapshot> {
        process::run_snapshot(&self.model)
    }

    /// Evaluates the extended DPI difference and checks the per-component
    /// decomposition of the conditional QMI.
    pub fn verify_extended_dpi(&self, snapshot: &Snapshot) -> Result<ExtendedDpi> {
        let mut value = [0.0; 2];
        let mut conditional = [0.0; 2];
        for (k, t) in [1usize, 2].into_iter().enumerate() {
            let state = snapshot.state(t);
            let mut sys_f = vec![snapshot.system_label(t).to_string()];
            sys_f.extend(self.extension.iter().cloned());
            value[k] = entropy::qmi(state, &[REFERENCE], &sys_f)?;
            let sys_inner: Vec<String> = sys_f.iter().filter(|l| *l != F_TILDE).cloned().collect();
            conditional[k] = entropy::qcmi(state, &[REFERENCE], &sys_inner, &[F_TILDE])?;
        }
        let mut expected = [0.0; 2];
        for (p, component) in self.probabilities.iter().zip(&self.components) {
            if *p == 0.0 {
                continue;
            }
            let s = process::run_snapshot(component)?;
            for (k, t) in [1usize, 2].into_iter().enumerate() {
                let mut sys_f = vec![s.system_label(t).to_string()];
                sys_f.extend(component.inert_labels().iter().cloned());
                expected[k] += p * entropy::qmi(s.state(t), &[REFERENCE], &sys_f)?;
            }
        }
        let gap = [
            (conditional[0] - expected[0]).abs(),
            (conditional[1] - expected[1]).abs(),
        ];
        if gap[0] > DECOMPOSITION_TOL || gap[1] > DECOMPOSITION_TOL {
            return Err(Error::InvariantViolation(format!(
                "mixture conditional QMI differs from the component average by {:e}",
                gap[0].max(gap[1])
            )));
        }
        let mut register_correlation: f64 = 0.0;
        for t in 0..3 {
            register_correlation = register_correlation
                .max(entropy::qmi(snapshot.state(t), &[REFERENCE], &[F_TILDE])?.abs());
        }
        Ok(ExtendedDpi {
            value: value[0] - value[1],
            decomposition_gap: gap,
            register_correlation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{detect_revival, run_snapshot, Extension, REVIVAL_TOL};

    #[test]
    fn pauli_unitary_squares_to_identity() {
        let u = pauli_control_unitary();
        assert!(linalg::max_abs_diff(&(&u * &u), &linalg::identity(8)) < 1e-14);
    }

    #[test]
    fn pauli_sequence() {
        let s = run_snapshot(&pauli_control_model(PauliExtension::None).unwrap()).unwrap();
        let r = detect_revival(&s, REVIVAL_TOL).unwrap();
        assert!((r.qmi_t0 - 2.0).abs() < 1e-9);
        assert!(r.qmi_t1.abs() < 1e-9);
        assert!((r.qmi_t2 - 2.0).abs() < 1e-9);
        assert!(r.revived);
    }

    #[test]
    fn pauli_extended_sequences() {
        for ext in [PauliExtension::Purifying, PauliExtension::ClassicalCopy] {
            let s = run_snapshot(&pauli_control_model(ext).unwrap()).unwrap();
            let x = s
                .extend(&Extension::Attached(vec![E_TILDE.into()]))
                .unwrap();
            assert!((x.qmi_with_extension(0).unwrap() - 2.0).abs() < 1e-9);
            assert!((x.qmi_with_extension(1).unwrap() - 2.0).abs() < 1e-9);
            assert!(x.qcmi_environment(0).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn swap_returns_to_start() {
        let g = binary_entropy_environment(0.5).unwrap();
        let s = run_snapshot(&swap_model(2, &g).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(s.state(2).matrix(), s.state(0).matrix()) < 1e-14);
        // t1: ρ_R ⊗ γ
        let expected = DensityMatrix::maximally_mixed(SystemLayout::single("R", 2).unwrap())
            .tensor(&g.relabeled(&["Q'"]).unwrap())
            .unwrap();
        assert!(linalg::max_abs_diff(s.reduced(1).matrix(), expected.matrix()) < 1e-14);
        assert!((swap_entropy_margin(2, &g) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn swap_rejects_wrong_dimension() {
        let g = DensityMatrix::maximally_mixed(SystemLayout::single("E", 3).unwrap());
        assert!(swap_model(2, &g).is_err());
    }

    #[test]
    fn random_model_is_deterministic_and_capped() {
        assert_eq!(
            random_model(2, 2, 2, 9).unwrap(),
            random_model(2, 2, 2, 9).unwrap()
        );
        assert_eq!(
            random_model(8, 16, 1, 0).unwrap_err(),
            Error::DimensionCap {
                dim: 128,
                cap: RANDOM_DIM_CAP
            }
        );
    }

    #[test]
    fn markovian_model_never_revives() {
        for seed in 0..20 {
            let s = run_snapshot(&random_markovian_model(2, 2, 2, seed).unwrap()).unwrap();
            let r = detect_revival(&s, REVIVAL_TOL).unwrap();
            assert!(r.revival_magnitude.abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_mixture_matches_component() {
        let a = random_model(2, 2, 2, 1).unwrap();
        let b = random_model(2, 3, 2, 2).unwrap();
        let mix =
            build_convex_mixture(&MixtureSpec::new(vec![(1.0, a.clone()), (0.0, b)]).unwrap())
                .unwrap();
        let s = mix.run().unwrap();
        let r = detect_revival(&s, REVIVAL_TOL).unwrap();
        let ra = detect_revival(&run_snapshot(&a).unwrap(), REVIVAL_TOL).unwrap();
        assert!((r.qmi_t1 - ra.qmi_t1).abs() < 1e-9);
        assert!((r.qmi_t2 - ra.qmi_t2).abs() < 1e-9);
        let dpi = mix.verify_extended_dpi(&s).unwrap();
        assert!((dpi.value - (ra.qmi_t1 - ra.qmi_t2)).abs() < 1e-9);
    }

    #[test]
    fn mixture_of_markovian_pairs_satisfies_extended_dpi() {
        for seed in 0..10u64 {
            let a = random_markovian_model(2, 2, 2, 2 * seed).unwrap();
            let b = random_markovian_model(2, 2, 1, 2 * seed + 1).unwrap();
            let mix =
                build_convex_mixture(&MixtureSpec::new(vec![(0.3, a), (0.7, b)]).unwrap()).unwrap();
            let s = mix.run().unwrap();
            let dpi = mix.verify_extended_dpi(&s).unwrap();
            assert!(dpi.value >= -1e-9);
            assert!(dpi.register_correlation < 1e-9);
        }
    }

    #[test]
    fn mixture_probabilities_validated() {
        let a = random_model(2, 2, 2, 1).unwrap();
        assert!(MixtureSpec::new(vec![(0.5, a.clone()), (0.4, a.clone())]).is_err());
        assert!(MixtureSpec::new(vec![(1.2, a.clone()), (-0.2, a)]).is_err());
        let c = random_model(3, 2, 2, 1).unwrap();
        let d = random_model(2, 2, 2, 1).unwrap();
        assert!(MixtureSpec::new(vec![(0.5, c), (0.5, d)]).is_err());
    }
}
