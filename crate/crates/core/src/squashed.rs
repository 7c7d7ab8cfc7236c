//! Variational bounds on squashed entanglement, squashed non-Markovianity and
//! puffed entanglement.
//!
//! Extensions are parameterized by purifying the input state on a factor `P`
//! of dimension `r = rank(ρ)` and applying a unitary `W = exp(K)` to
//! `ancilla(k) ⊗ P` with the ancilla in `|0⟩`. The output splits as
//! `X(k) ⊗ junk(r)`; `X` is kept as the extension and `junk` is traced out.
//! `K = 0` gives the trivial extension `ρ ⊗ |0⟩⟨0|`.
//!
//! Only one side of each optimization is sound: an infimum estimate is an
//! upper bound and a supremum estimate is a lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ZERO};
use crate::optimize::{self, OptimizerConfig};
use crate::tensor::{purify, DensityMatrix, SystemLayout};

/// Tolerance of the marginal constraint `Tr_X ω = ρ`.
pub const MARGINAL_TOL: f64 = 1e-9;
pub const DEFAULT_RESTARTS: usize = 8;
/// Default cap on `dim(ρ) * extension_dim`.
pub const DEFAULT_DIMENSION_CAP: usize = 256;
/// Preferred label for the extension factor.
pub const EXTENSION_LABEL: &str = "X";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundKind {
    UpperBoundOnInf,
    LowerBoundOnSup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquashedEstimate {
    pub value_bits: f64,
    pub kind: BoundKind,
    pub extension_dim: usize,
    pub restarts: usize,
    /// Whether the winning restart stopped before the iteration cap.
    pub converged: bool,
    pub best_params: Vec<f64>,
    pub best_restart: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SquashedOptions {
    /// Defaults to the rank of the input state.
    pub extension_dim: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub dimension_cap: usize,
    pub optimizer: OptimizerConfig,
    /// Parameters from an earlier run, possibly at a smaller extension
    /// dimension; tried as one extra restart.
    pub warm_start: Option<WarmStart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub extension_dim: usize,
    pub params: Vec<f64>,
}

impl Default for SquashedOptions {
    fn default() -> Self {
        Self {
            extension_dim: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            optimizer: OptimizerConfig::default(),
            warm_start: None,
        }
    }
}

/// A concrete extension of `base_state` on one extra factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub base_state: DensityMatrix,
    pub extension_dim: usize,
    pub channel_params: Vec<f64>,
    pub label: String,
}

impl ExtensionSpec {
    pub fn new(
        base_state: DensityMatrix,
        extension_dim: usize,
        channel_params: Vec<f64>,
    ) -> Result<Self> {
        let label = fresh_label(base_state.layout(), EXTENSION_LABEL);
        let spec = Self {
            base_state,
            extension_dim,
            channel_params,
            label,
        };
        let n = spec.family()?.n();
        if spec.channel_params.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "{} parameters for a {n}-dimensional generator, expected {}",
                spec.channel_params.len(),
                n * n
            )));
        }
        Ok(spec)
    }

    pub fn with_label(mut self, label: &str) -> Result<Self> {
        if self.base_state.layout().contains(label) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
        self.label = label.to_string();
        Ok(self)
    }

    /// `ρ ⊗ |0⟩⟨0|`.
    pub fn trivial(base_state: DensityMatrix, extension_dim: usize) -> Result<Self> {
        let r = purifying_dim(&base_state);
        let n = r * extension_dim;
        Self::new(base_state, extension_dim, vec![0.0; n * n])
    }

    /// The extension factor holds a full purification of the base state.
    pub fn purification_copy(base_state: DensityMatrix) -> Result<Self> {
        let r = purifying_dim(&base_state);
        Self::new(base_state, r, purification_copy_params(r, r))
    }

    pub fn purifying_dim(&self) -> usize {
        purifying_dim(&self.base_state)
    }

    fn family(&self) -> Result<ExtensionFamily> {
        ExtensionFamily::new(
            &self.base_state,
            self.extension_dim,
            &self.label,
            usize::MAX,
        )
    }

    /// `ω` on `base ⊗ label`.
    pub fn extended_state(&self) -> Result<DensityMatrix> {
        self.family()?.state(&self.channel_params)
    }
}

pub fn purifying_dim(rho: &DensityMatrix) -> usize {
    rho.rank(crate::tensor::PURIFY_CUTOFF).max(1)
}

/// `label`, or `label` with a numeric suffix if already taken.
pub fn fresh_label(layout: &SystemLayout, label: &str) -> String {
    if !layout.contains(label) {
        return label.to_string();
    }
    (1..)
        .map(|i| format!("{label}{i}"))
        .find(|l| !layout.contains(l))
        .unwrap()
}

/// Skew-Hermitian generator from `n²` reals: the diagonal as `iθ`, then each
/// pair `i < j` as `K_ij = a + ib`, `K_ji = -a + ib`.
pub fn skew_hermitian_from_params(params: &[f64], n: usize) -> CMatrix {
    let mut k = CMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = c(0.0, params[i]);
    }
    let mut idx = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (params[idx], params[idx + 1]);
            k[(i, j)] = c(a, b);
            k[(j, i)] = c(-a, b);
            idx += 2;
        }
    }
    k
}

fn params_from_skew_hermitian(k: &CMatrix) -> Vec<f64> {
    let n = k.nrows();
    let mut p = Vec::with_capacity(n * n);
    for i in 0..n {
        p.push(k[(i, i)].im);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            p.push(k[(i, j)].re);
            p.push(k[(i, j)].im);
        }
    }
    p
}

/// Embed parameters found at extension dimension `from` into dimension `to`.
/// The generator is padded with zeros, so the induced extension is the same
/// state with the extension factor embedded in a larger space.
pub fn embed_params(params: &[f64], r: usize, from: usize, to: usize) -> Result<Vec<f64>> {
    let (n_from, n_to) = (r * from, r * to);
    if params.len() != n_from * n_from || to < from {
        return Err(Error::InvalidParameter(format!(
            "cannot embed {} parameters from extension dimension {from} into {to}",
            params.len()
        )));
    }
    let small = skew_hermitian_from_params(params, n_from);
    let mut big = CMatrix::zeros(n_to, n_to);
    big.view_mut((0, 0), (n_from, n_from)).copy_from(&small);
    Ok(params_from_skew_hermitian(&big))
}

/// Rotations by π/2 in the planes `(p, p·r)`, taking `|0⟩_X|p⟩_P` to
/// `|p⟩_X|0⟩_junk`. Requires `k ≥ r`.
pub fn purification_copy_params(r: usize, k: usize) -> Vec<f64> {
    let n = r * k;
    let mut gen = CMatrix::zeros(n, n);
    let half_pi = std::f64::consts::FRAC_PI_2;
    for p in 1..r.min(k) {
        gen[(p * r, p)] = c(half_pi, 0.0);
        gen[(p, p * r)] = c(-half_pi, 0.0);
    }
    params_from_skew_hermitian(&gen)
}

/// Precomputed purification of a base state.
struct ExtensionFamily {
    base: DensityMatrix,
    /// `|ψ⟩` reshaped to `dim(base) × r`.
    psi: CMatrix,
    r: usize,
    k: usize,
    layout: SystemLayout,
}

impl ExtensionFamily {
    fn new(base: &DensityMatrix, k: usize, label: &str, cap: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension(label.to_string(), 0));
        }
        let d = base.dim();
        if d.saturating_mul(k) > cap {
            return Err(Error::DimensionCap { dim: d * k, cap });
        }
        let purifier = fresh_label(base.layout(), "P");
        let pure = purify(base, &purifier)?;
        let r = pure.layout().dim_of(&purifier)?;
        let psi = CMatrix::from_fn(d, r, |a, p| pure.vector()[a * r + p]);
        let layout = base.layout().concat(&SystemLayout::single(label, k)?)?;
        Ok(Self {
            base: base.clone(),
            psi,
            r,
            k,
            layout,
        })
    }

    fn n(&self) -> usize {
        self.r * self.k
    }

    fn state(&self, params: &[f64]) -> Result<DensityMatrix> {
        let n = self.n();
        if params.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "{} parameters, expected {}",
                params.len(),
                n * n
            )));
        }
        let w = linalg::expm_skew_hermitian(&skew_hermitian_from_params(params, n));
        let (d, r, k) = (self.base.dim(), self.r, self.k);
        // Φ[(a, x), j] = Σ_p ψ[a, p] W[(x, j), p]
        let mut phi = CMatrix::from_element(d * k, r, ZERO);
        for x in 0..k {
            let block = w.view((x * r, 0), (r, r));
            let rows = &self.psi * block.transpose();
            for a in 0..d {
                for j in 0..r {
                    phi[(a * k + x, j)] = rows[(a, j)];
                }
            }
        }
        let omega = DensityMatrix::from_trusted(self.layout.clone(), &phi * phi.adjoint());
        let marginal = omega.partial_trace(&self.base.layout().labels())?;
        let dev = linalg::max_abs_diff(marginal.matrix(), self.base.matrix());
        if dev > MARGINAL_TOL {
            return Err(Error::InvariantViolation(format!(
                "extension marginal deviates from the base state by {dev:e}"
            )));
        }
        Ok(omega)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sense {
    Minimize,
    Maximize,
}

struct Best {
    value: f64,
    params: Vec<f64>,
    converged: bool,
    restart: usize,
}

fn starting_points(family: &ExtensionFamily, opts: &SquashedOptions) -> Result<Vec<Vec<f64>>> {
    let n = family.n();
    let mut starts = Vec::with_capacity(opts.restarts + 1);
    for i in 0..opts.restarts {
        if i == 0 {
            starts.push(vec![0.0; n * n]);
        } else if i == 1 && family.k >= family.r {
            starts.push(purification_copy_params(family.r, family.k));
        } else {
            let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            starts.push(
                (0..n * n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
        }
    }
    if let Some(ws) = &opts.warm_start {
        starts.push(embed_params(
            &ws.params,
            family.r,
            ws.extension_dim,
            family.k,
        )?);
    }
    Ok(starts)
}

fn optimize_over_extensions<F>(
    family: &ExtensionFamily,
    objective: F,
    sense: Sense,
    target: f64,
    opts: &SquashedOptions,
) -> Result<Best>
where
    F: Fn(&DensityMatrix) -> Result<f64> + Sync,
{
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter(
            "at least one restart is required".into(),
        ));
    }
    let sign = if sense == Sense::Minimize { 1.0 } else { -1.0 };
    let signed = |x: &[f64]| -> Result<f64> { Ok(sign * objective(&family.state(x)?)?) };
    let starts = starting_points(family, opts)?;
    let results: Vec<optimize::Minimum> = starts
        .into_par_iter()
        .map(|x0| optimize::minimize(&signed, x0, &opts.optimizer, Some(sign * target)))
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, &optimize::Minimum)> = None;
    for (i, m) in results.iter().enumerate() {
        if best.is_none_or(|(_, b)| m.value < b.value) {
            best = Some((i, m));
        }
    }
    let (restart, m) = best.unwrap();
    Ok(Best {
        value: sign * m.value,
        params: m.x.clone(),
        converged: m.converged,
        restart,
    })
}

/// Result of minimizing an arbitrary objective over extensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSearch {
    pub value: f64,
    pub spec: ExtensionSpec,
    pub converged: bool,
    pub best_restart: usize,
}

/// Minimize `objective` over extensions of `base` on a new factor `label`,
/// with the same restarts and parameterization as the squashed estimators.
/// Restarts stop early once they reach `target`.
pub fn search_extensions<F>(
    base: &DensityMatrix,
    label: &str,
    objective: F,
    target: f64,
    opts: &SquashedOptions,
) -> Result<ExtensionSearch>
where
    F: Fn(&DensityMatrix) -> Result<f64> + Sync,
{
    if base.layout().contains(label) {
        return Err(Error::DuplicateLabel(label.to_string()));
    }
    let k = opts.extension_dim.unwrap_or_else(|| purifying_dim(base));
    let family = ExtensionFamily::new(base, k, label, opts.dimension_cap)?;
    let best = optimize_over_extensions(&family, objective, Sense::Minimize, target, opts)?;
    Ok(ExtensionSearch {
        value: best.value,
        spec: ExtensionSpec {
            base_state: base.clone(),
            extension_dim: k,
            channel_params: best.params,
            label: label.to_string(),
        },
        converged: best.converged,
        best_restart: best.restart,
    })
}

fn owned<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels.iter().map(|s| s.as_ref().to_string()).collect()
}

fn prepare<S: AsRef<str>>(
    rho: &DensityMatrix,
    parts: &[&[S]],
    opts: &SquashedOptions,
) -> Result<(ExtensionFamily, String)> {
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            crate::tensor::ensure_disjoint(a, b)?;
        }
    }
    let keep: Vec<String> = parts.iter().flat_map(|p| owned(p)).collect();
    let base = rho.partial_trace(&keep)?;
    let label = fresh_label(base.layout(), EXTENSION_LABEL);
    let k = opts.extension_dim.unwrap_or_else(|| purifying_dim(&base));
    let family = ExtensionFamily::new(&base, k, &label, opts.dimension_cap)?;
    Ok((family, label))
}

fn finish(
    best: Best,
    kind: BoundKind,
    family: &ExtensionFamily,
    opts: &SquashedOptions,
) -> Result<SquashedEstimate> {
    if best.value < -MARGINAL_TOL {
        return Err(Error::InvariantViolation(format!(
            "negative squashed estimate {:e}",
            best.value
        )));
    }
    Ok(SquashedEstimate {
        value_bits: best.value,
        kind,
        extension_dim: family.k,
        restarts: opts.restarts,
        converged: best.converged,
        best_params: best.params,
        best_restart: best.restart,
    })
}

/// Upper bound on `½ inf_X I(A;B|X)`.
pub fn estimate_squashed_entanglement<S: AsRef<str>, T: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    b: &[T],
    opts: &SquashedOptions,
) -> Result<SquashedEstimate> {
    let (a, b) = (owned(a), owned(b));
    let (family, x) = prepare(rho, &[&a[..], &b[..]], opts)?;
    let objective = |w: &DensityMatrix| Ok(0.5 * entropy::qcmi(w, &a, &b, &[x.as_str()])?);
    let best = optimize_over_extensions(&family, objective, Sense::Minimize, 1e-12, opts)?;
    let trivial = 0.5 * entropy::qmi(&family.base, &a, &b)?;
    if best.value > trivial + MARGINAL_TOL {
        return Err(Error::InvariantViolation(format!(
            "squashed entanglement estimate {} above half the mutual information {trivial}",
            best.value
        )));
    }
    finish(best, BoundKind::UpperBoundOnInf, &family, opts)
}

/// Upper bound on `½ inf_X I(A;C|BX)`.
pub fn estimate_squashed_nonmarkovianity<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    c: &[T],
    b: &[U],
    opts: &SquashedOptions,
) -> Result<SquashedEstimate> {
    let (a, c, b) = (owned(a), owned(c), owned(b));
    let (family, x) = prepare(rho, &[&a[..], &c[..], &b[..]], opts)?;
    let mut bx = b.clone();
    bx.push(x.clone());
    let objective = |w: &DensityMatrix| Ok(0.5 * entropy::qcmi(w, &a, &c, &bx)?);
    let best = optimize_over_extensions(&family, objective, Sense::Minimize, 1e-12, opts)?;
    let trivial = 0.5 * entropy::qcmi(&family.base, &a, &c, &b)?;
    if best.value > trivial + MARGINAL_TOL {
        return Err(Error::InvariantViolation(format!(
            "squashed non-Markovianity estimate {} above the trivial bound {trivial}",
            best.value
        )));
    }
    finish(best, BoundKind::UpperBoundOnInf, &family, opts)
}

/// Lower bound on `½ sup_X I(A;B|X)`; never exceeds `min{H(A), H(B)}`.
pub fn estimate_puffed_entanglement<S: AsRef<str>, T: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    b: &[T],
    opts: &SquashedOptions,
) -> Result<SquashedEstimate> {
    let (a, b) = (owned(a), owned(b));
    let (family, x) = prepare(rho, &[&a[..], &b[..]], opts)?;
    let ceiling = entropy::von_neumann_entropy(&family.base, &a)?
        .min(entropy::von_neumann_entropy(&family.base, &b)?);
    let objective = |w: &DensityMatrix| Ok(0.5 * entropy::qcmi(w, &a, &b, &[x.as_str()])?);
    let best =
        optimize_over_extensions(&family, objective, Sense::Maximize, ceiling - 1e-12, opts)?;
    if best.value > ceiling + MARGINAL_TOL {
        return Err(Error::InvariantViolation(format!(
            "puffed entanglement estimate {} exceeds min{{H(A), H(B)}} = {ceiling}",
            best.value
        )));
    }
    finish(best, BoundKind::LowerBoundOnSup, &family, opts)
}

/// The two closed-form upper bounds on squashed non-Markovianity, from the
/// trivial extension (`I(A;C|B)`) and from a purifying extension (`I(A;C)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrivialBounds {
    /// `(½ I(A;C|B), ½ I(A;C))`.
    pub halved: (f64, f64),
    /// `(I(A;C|B), I(A;C))`.
    pub unhalved: (f64, f64),
}

impl TrivialBounds {
    pub fn min_halved(&self) -> f64 {
        self.halved.0.min(self.halved.1)
    }
}

pub fn nsq_trivial_upper_bounds<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
    rho: &DensityMatrix,
    a: &[S],
    c: &[T],
    b: &[U],
) -> Result<TrivialBounds> {
    let conditional = entropy::qcmi(rho, a, c, b)?.max(0.0);
    let plain = entropy::qmi(rho, a, c)?.max(0.0);
    Ok(TrivialBounds {
        halved: (0.5 * conditional, 0.5 * plain),
        unhalved: (conditional, plain),
    })
}
