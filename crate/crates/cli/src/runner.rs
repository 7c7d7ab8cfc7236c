//! Evaluation of configured scenarios and sweeps.

use std::path::Path;
use std::time::Instant;

use backflow_core::classify;
use backflow_core::entropy;
use backflow_core::process::{self, Extension, Snapshot, REFERENCE};
use backflow_core::recovery::{self, BOUND_TOL};
use backflow_core::scenarios::{self, MixtureSpec};
use backflow_core::squashed;
use backflow_core::tensor::random::rng_from_seed;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{self, BuiltModel, RunConfig, ScenarioConfig, SweepGenerator};
use crate::error::CliError;
use crate::report::{self, Entropies, RunReport, SnapshotRecord, Summary, Tolerances};

fn entropies(s: &Snapshot) -> Result<Entropies, CliError> {
    let mut e = Entropies {
        reference_system_qmi: [0.0; 3],
        system_entropy: [0.0; 3],
        reference_entropy: [0.0; 3],
        total_qmi: [0.0; 3],
    };
    for t in 0..3 {
        e.reference_system_qmi[t] = s.system_qmi(t)?;
        e.system_entropy[t] = entropy::von_neumann_entropy(s.state(t), &[s.system_label(t)])?;
        e.reference_entropy[t] = entropy::von_neumann_entropy(s.state(t), &[REFERENCE])?;
        e.total_qmi[t] = s.total_qmi(t)?;
    }
    Ok(e)
}

/// Evaluates one model and assembles its record.
pub fn evaluate(
    built: &BuiltModel,
    cfg: &RunConfig,
    index: u64,
    seed: Option<u64>,
    label: String,
) -> Result<SnapshotRecord, CliError> {
    let model = built.model();
    let s = match built {
        BuiltModel::Plain(m) => process::run_snapshot(m)?,
        BuiltModel::Mixture(m) => m.run()?,
    };
    let opts = cfg.classify_options()?;
    let classification = classify::classify_snapshot(model, &s, &opts)?;
    let revival = classification.evidence.revival;

    let inert = match built {
        BuiltModel::Plain(m) => m.inert_labels().to_vec(),
        BuiltModel::Mixture(m) => m.extension.clone(),
    };
    let recovery = if cfg.recovery.enabled {
        let r = recovery::check_approximate_recovery(
            &s,
            &Extension::Attached(inert),
            &cfg.recovery.options,
        )?;
        Some(r.summary())
    } else {
        None
    };

    let q1 = s.system_label(1).to_string();
    let env1 = s.env_labels(1).to_vec();
    let mut active = vec![REFERENCE.to_string(), q1.clone()];
    active.extend(env1.iter().cloned());
    let sigma = s.state(1).partial_trace(&active)?;
    let trivial_bounds =
        squashed::nsq_trivial_upper_bounds(&sigma, &[REFERENCE], &env1, &[q1.as_str()])?;
    let squashed_nonmarkovianity = if cfg.squashed.enabled && !env1.is_empty() {
        Some(squashed::estimate_squashed_nonmarkovianity(
            &sigma,
            &[REFERENCE],
            &env1,
            &[q1.as_str()],
            &cfg.squashed.options,
        )?)
    } else {
        None
    };

    let extended_dpi = match built {
        BuiltModel::Mixture(m) => Some(m.verify_extended_dpi(&s)?),
        BuiltModel::Plain(_) => None,
    };
    log::info!(
        "record {index} ({label}): revival {:.3e}, {:?}",
        revival.revival_magnitude,
        classification.verdict
    );
    Ok(SnapshotRecord {
        index,
        seed,
        label,
        entropies: entropies(&s)?,
        revival,
        classification,
        recovery,
        trivial_bounds,
        squashed_nonmarkovianity,
        extended_dpi,
    })
}

fn scenario_label(s: &ScenarioConfig) -> (String, Option<u64>) {
    match s {
        ScenarioConfig::PauliControl { .. } => ("pauli-control".into(), None),
        ScenarioConfig::Swap { .. } => ("swap".into(), None),
        ScenarioConfig::Haar { seed, .. } => ("haar".into(), Some(*seed)),
        ScenarioConfig::ConvexMixture { .. } => ("convex-mixture".into(), None),
        ScenarioConfig::Inline { .. } => ("inline".into(), None),
    }
}

fn sweep_model(g: &SweepGenerator, seed: u64) -> Result<BuiltModel, CliError> {
    Ok(match *g {
        SweepGenerator::Haar {
            d_system,
            d_env,
            env_rank,
            markovian,
        } => {
            let m = if markovian {
                scenarios::random_markovian_model(d_system, d_env, env_rank, seed)
            } else {
                scenarios::random_model(d_system, d_env, env_rank, seed)
            };
            BuiltModel::Plain(m.map_err(|e| config_error("sweep.generator", e))?)
        }
        SweepGenerator::MarkovianMixture {
            d_system,
            d_env,
            env_rank,
        } => {
            let mut rng = rng_from_seed(seed);
            let p: f64 = rng.random_range(0.0..=1.0);
            let a = scenarios::random_model_with(&mut rng, d_system, d_env, env_rank, true);
            let b = scenarios::random_model_with(&mut rng, d_system, d_env, env_rank, true);
            let spec = a
                .and_then(|a| Ok(vec![(p, a), (1.0 - p, b?)]))
                .and_then(MixtureSpec::new)
                .map_err(|e| config_error("sweep.generator", e))?;
            BuiltModel::Mixture(scenarios::build_convex_mixture(&spec)?)
        }
    })
}

fn config_error(path: &str, e: backflow_core::Error) -> CliError {
    if e.is_invariant_violation() {
        CliError::Invariant(format!("at `{path}`: {e}"))
    } else {
        CliError::Config(format!("at `{path}`: {e}"))
    }
}

fn finish(
    cfg: &RunConfig,
    command: &str,
    records: Vec<SnapshotRecord>,
    start: Instant,
) -> Result<RunReport, CliError> {
    let report = RunReport {
        toolkit_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.clone(),
        summary: Summary::tally(&records),
        records,
        tolerances: Tolerances {
            revival: cfg.classify.revival_tol,
            witness: cfg.classify.witness_tol,
            certify: cfg.classify.certify_tol,
            recovery_bound: BOUND_TOL,
        },
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    report::rounded(&report)
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let scenario = cfg
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("`run` needs a `scenario`".into()))?;
    let built = config::build_scenario(scenario, "scenario")?;
    let (label, seed) = scenario_label(scenario);
    let record = evaluate(&built, cfg, 0, seed, label)?;
    finish(cfg, "run", vec![record], start)
}

pub fn sweep(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("`sweep` needs a `sweep` section".into()))?;
    let label = match sw.generator {
        SweepGenerator::Haar { .. } => "haar",
        SweepGenerator::MarkovianMixture { .. } => "markovian-mixture",
    };
    let mut records = (0..sw.samples)
        .into_par_iter()
        .map(|i| {
            let seed = sw.seed_start.wrapping_add(i);
            let built = sweep_model(&sw.generator, seed)?;
            evaluate(&built, cfg, i, Some(seed), label.into())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    records.sort_by_key(|r| r.index);
    finish(cfg, "sweep", records, start)
}

/// Writes the report and the optional CSV sidecar. Command-line paths take
/// precedence over the configured ones; without a report path the JSON goes
/// to standard output.
pub fn emit(report: &RunReport, output: Option<&Path>, csv: Option<&Path>) -> Result<(), CliError> {
    let json = report.to_json()?;
    let out = output
        .map(Path::to_path_buf)
        .or_else(|| report.config.output.report.as_ref().map(Into::into));
    match out {
        Some(p) => std::fs::write(&p, json + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => println!("{json}"),
    }
    let csv_path = csv
        .map(Path::to_path_buf)
        .or_else(|| report.config.output.csv.as_ref().map(Into::into));
    if let Some(p) = csv_path {
        std::fs::write(&p, report.to_csv()?)
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}
