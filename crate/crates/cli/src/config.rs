//! Run configuration: JSON schema and conversion into core models.

use std::path::Path;

use backflow_core::classify::{ClassifyOptions, ExtensionCandidate, CERTIFY_TOL, WITNESS_TOL};
use backflow_core::linalg::{c, CMatrix};
use backflow_core::process::{InteractionModel, REVIVAL_TOL};
use backflow_core::recovery::RecoveryOptions;
use backflow_core::scenarios::{self, MixtureSpec, PauliExtension};
use backflow_core::squashed::SquashedOptions;
use backflow_core::tensor::random::{haar_matrix, rng_from_seed};
use backflow_core::tensor::{DensityMatrix, SystemLayout, UnitaryInteraction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complex matrix as rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub squashed: SquashedConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Keyed by scenario name, e.g. `{"swap": {"environment": ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioConfig {
    PauliControl {
        #[serde(default = "no_extension")]
        extension: PauliExtension,
    },
    Swap {
        #[serde(default = "two")]
        d: usize,
        environment: EnvState,
    },
    Haar {
        d_system: usize,
        d_env: usize,
        env_rank: usize,
        seed: u64,
        #[serde(default)]
        markovian: bool,
    },
    ConvexMixture {
        components: Vec<MixtureComponent>,
    },
    Inline {
        model: InlineModel,
    },
}

fn no_extension() -> PauliExtension {
    PauliExtension::None
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub probability: f64,
    pub scenario: ScenarioConfig,
}

/// Environment state. Variants other than `matrix` are diagonal in the
/// computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvState {
    Matrix(MatrixSpec),
    Diagonal(Vec<f64>),
    /// Qubit state `diag(1-p, p)` with `h(p)` equal to the given entropy.
    EntropyBits(f64),
    MaximallyMixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub d_system: usize,
    /// Environment factors as `[label, dim]`.
    pub environment: Vec<(String, usize)>,
    pub env_state: EnvState,
    #[serde(default)]
    pub inert: Vec<String>,
    pub u: UnitarySpec,
    pub v: UnitarySpec,
}

/// Exactly one of `generator` and `matrix`. The output layout defaults to the
/// input labels with a prime appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Vec<(String, usize)>>,
}

/// `"identity"`, `"swap"`, `"pauli-control"` or `{"haar": {"seed": n}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    Identity,
    Swap,
    PauliControl,
    Haar { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed_start: u64,
    pub samples: u64,
    pub generator: SweepGenerator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SweepGenerator {
    /// Haar-random `U` and `V`.
    Haar {
        d_system: usize,
        d_env: usize,
        env_rank: usize,
        #[serde(default)]
        markovian: bool,
    },
    /// Two Markovian components mixed with a uniformly random weight.
    MarkovianMixture {
        d_system: usize,
        d_env: usize,
        env_rank: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub revival_tol: f64,
    pub witness_tol: f64,
    pub certify_tol: f64,
    pub use_attached: bool,
    pub extensions: Vec<ExtensionConfig>,
    /// Search parameterized extensions when no candidate certifies.
    pub search: Option<SquashedOptions>,
}

impl Default for ClassifyConfig {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtensionConfig {
    Attached(Vec<String>),
    Purification,
    /// An extension of the `t1` state on the given factors.
    Explicit {
        factors: Vec<(String, usize)>,
        matrix: MatrixSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub enabled: bool,
    pub options: RecoveryOptions,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            options: RecoveryOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SquashedConfig {
    /// Run the variational estimators; the closed-form bounds are always
    /// reported.
    pub enabled: bool,
    pub options: SquashedOptions,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Report path; standard output when absent.
    pub report: Option<String>,
    /// CSV sidecar path.
    pub csv: Option<String>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.classify;
        for (name, v) in [
            ("classify.revival_tol", c.revival_tol),
            ("classify.witness_tol", c.witness_tol),
            ("classify.certify_tol", c.certify_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "at `{name}`: tolerance must be positive, got {v}"
                )));
            }
        }
        if self.scenario.is_none() && self.sweep.is_none() {
            return Err(CliError::Config(
                "configuration needs a `scenario` or a `sweep`".into(),
            ));
        }
        Ok(())
    }

    pub fn classify_options(&self) -> Result<ClassifyOptions, CliError> {
        let c = &self.classify;
        let extensions = c
            .extensions
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Ok(match e {
                    ExtensionConfig::Attached(l) => ExtensionCandidate::Attached(l.clone()),
                    ExtensionConfig::Purification => ExtensionCandidate::Purification,
                    ExtensionConfig::Explicit { factors, matrix } => {
                        let layout = SystemLayout::new(factors.clone())
                            .map_err(|e| at(&format!("classify.extensions[{i}]"), e))?;
                        let m = to_matrix(
                            matrix,
                            layout.total_dim(),
                            &format!("classify.extensions[{i}].matrix"),
                        )?;
                        ExtensionCandidate::Explicit(
                            DensityMatrix::new(layout, m)
                                .map_err(|e| at(&format!("classify.extensions[{i}]"), e))?,
                        )
                    }
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ClassifyOptions {
            revival_tol: c.revival_tol,
            witness_tol: c.witness_tol,
            certify_tol: c.certify_tol,
            use_attached: c.use_attached,
            extensions,
            search: c.search.clone(),
        })
    }
}

fn at(path: &str, e: backflow_core::Error) -> CliError {
    if e.is_invariant_violation() {
        CliError::Invariant(format!("at `{path}`: {e}"))
    } else {
        CliError::Config(format!("at `{path}`: {e}"))
    }
}

fn to_matrix(spec: &MatrixSpec, dim: usize, path: &str) -> Result<CMatrix, CliError> {
    if spec.len() != dim || spec.iter().any(|row| row.len() != dim) {
        return Err(CliError::Config(format!(
            "at `{path}`: expected a {dim}x{dim} matrix"
        )));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        c(spec[i][j][0], spec[i][j][1])
    }))
}

fn env_state(
    state: &EnvState,
    layout: SystemLayout,
    path: &str,
) -> Result<DensityMatrix, CliError> {
    let dim = layout.total_dim();
    match state {
        EnvState::Matrix(m) => {
            DensityMatrix::new(layout, to_matrix(m, dim, path)?).map_err(|e| at(path, e))
        }
        EnvState::Diagonal(p) => {
            if p.len() != dim {
                return Err(CliError::Config(format!(
                    "at `{path}`: expected {dim} diagonal entries"
                )));
            }
            DensityMatrix::from_diagonal(layout, p).map_err(|e| at(path, e))
        }
        EnvState::EntropyBits(bits) => {
            if dim != 2 || !(0.0..=1.0).contains(bits) {
                return Err(CliError::Config(format!(
                    "at `{path}`: entropy_bits needs a qubit environment and a value in [0, 1]"
                )));
            }
            let gamma = scenarios::binary_entropy_environment(*bits).map_err(|e| at(path, e))?;
            gamma.relabeled(&layout.labels()).map_err(|e| at(path, e))
        }
        EnvState::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(layout)),
    }
}

fn primed(layout: &SystemLayout) -> Vec<(String, usize)> {
    layout
        .factors()
        .iter()
        .map(|f| (format!("{}'", f.label), f.dim))
        .collect()
}

fn unitary(
    spec: &UnitarySpec,
    input: SystemLayout,
    path: &str,
) -> Result<UnitaryInteraction, CliError> {
    let output = SystemLayout::new(spec.output.clone().unwrap_or_else(|| primed(&input)))
        .map_err(|e| at(path, e))?;
    let n = input.total_dim();
    let dims = input.dims();
    let matrix = match (&spec.generator, &spec.matrix) {
        (Some(g), None) => match g {
            Generator::Identity => CMatrix::identity(n, n),
            Generator::Swap => {
                if dims.len() != 2 || dims[0] != dims[1] {
                    return Err(CliError::Config(format!(
                        "at `{path}`: swap needs two factors of equal dimension, got {dims:?}"
                    )));
                }
                scenarios::swap_matrix(dims[0])
            }
            Generator::PauliControl => {
                if dims != [2, 4] {
                    return Err(CliError::Config(format!(
                        "at `{path}`: pauli-control needs a qubit and a 4-level factor, got {dims:?}"
                    )));
                }
                scenarios::pauli_control_unitary()
            }
            Generator::Haar { seed } => haar_matrix(&mut rng_from_seed(*seed), n),
        },
        (None, Some(m)) => to_matrix(m, n, &format!("{path}.matrix"))?,
        _ => {
            return Err(CliError::Config(format!(
                "at `{path}`: give exactly one of `generator` and `matrix`"
            )))
        }
    };
    UnitaryInteraction::new(input, output, matrix).map_err(|e| at(path, e))
}

/// A model plus, for mixtures, the pieces needed for the extended DPI audit.
pub enum BuiltModel {
    Plain(InteractionModel),
    Mixture(scenarios::ConvexMixture),
}

impl BuiltModel {
    pub fn model(&self) -> &InteractionModel {
        match self {
            Self::Plain(m) => m,
            Self::Mixture(m) => &m.model,
        }
    }
}

pub fn build_scenario(s: &ScenarioConfig, path: &str) -> Result<BuiltModel, CliError> {
    Ok(match s {
        ScenarioConfig::PauliControl { extension } => {
            BuiltModel::Plain(scenarios::pauli_control_model(*extension).map_err(|e| at(path, e))?)
        }
        ScenarioConfig::Swap { d, environment } => {
            let layout = SystemLayout::single("E", *d).map_err(|e| at(path, e))?;
            let gamma = env_state(environment, layout, &format!("{path}.environment"))?;
            BuiltModel::Plain(scenarios::swap_model(*d, &gamma).map_err(|e| at(path, e))?)
        }
        ScenarioConfig::Haar {
            d_system,
            d_env,
            env_rank,
            seed,
            markovian,
        } => {
            let m = if *markovian {
                scenarios::random_markovian_model(*d_system, *d_env, *env_rank, *seed)
            } else {
                scenarios::random_model(*d_system, *d_env, *env_rank, *seed)
            };
            BuiltModel::Plain(m.map_err(|e| at(path, e))?)
        }
        ScenarioConfig::ConvexMixture { components } => {
            let parts = components
                .iter()
                .enumerate()
                .map(|(i, comp)| {
                    let p = format!("{path}.components[{i}].scenario");
                    match build_scenario(&comp.scenario, &p)? {
                        BuiltModel::Plain(m) => Ok((comp.probability, m)),
                        BuiltModel::Mixture(m) => Ok((comp.probability, m.model)),
                    }
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let spec = MixtureSpec::new(parts).map_err(|e| at(path, e))?;
            BuiltModel::Mixture(scenarios::build_convex_mixture(&spec).map_err(|e| at(path, e))?)
        }
        ScenarioConfig::Inline { model } => {
            BuiltModel::Plain(build_inline(model, &format!("{path}.model"))?)
        }
    })
}

fn build_inline(m: &InlineModel, path: &str) -> Result<InteractionModel, CliError> {
    let env_layout = SystemLayout::new(m.environment.clone())
        .map_err(|e| at(&format!("{path}.environment"), e))?;
    let gamma = env_state(
        &m.env_state,
        env_layout.clone(),
        &format!("{path}.env_state"),
    )?;
    let active = env_layout
        .without(&m.inert)
        .map_err(|e| at(&format!("{path}.inert"), e))?;
    let input = SystemLayout::single(backflow_core::process::SYSTEM, m.d_system)
        .and_then(|q| q.concat(&active))
        .map_err(|e| at(path, e))?;
    let u = unitary(&m.u, input, &format!("{path}.u"))?;
    let v = unitary(&m.v, u.output_layout().clone(), &format!("{path}.v"))?;
    InteractionModel::new(m.d_system, gamma, m.inert.clone(), u, v).map_err(|e| at(path, e))
}
