//! Report types and their JSON and CSV encodings.

use backflow_core::classify::{Classification, GenuineBasis, Verdict};
use backflow_core::process::RevivalReport;
use backflow_core::recovery::RecoverySummary;
use backflow_core::scenarios::ExtendedDpi;
use backflow_core::squashed::{SquashedEstimate, TrivialBounds};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

/// Significant digits kept for every float in an emitted report.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub toolkit_version: String,
    pub command: String,
    pub config: RunConfig,
    pub records: Vec<SnapshotRecord>,
    pub summary: Summary,
    pub tolerances: Tolerances,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRecord {
    pub index: u64,
    pub seed: Option<u64>,
    pub label: String,
    pub entropies: Entropies,
    pub revival: RevivalReport,
    pub classification: Classification,
    pub recovery: Option<RecoverySummary>,
    pub trivial_bounds: TrivialBounds,
    pub squashed_nonmarkovianity: Option<SquashedEstimate>,
    pub extended_dpi: Option<ExtendedDpi>,
}

/// Entropic data at `t0`, `t1`, `t2`, in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entropies {
    /// `I(R;Q_t)`.
    pub reference_system_qmi: [f64; 3],
    /// `H(Q_t)`.
    pub system_entropy: [f64; 3],
    /// `H(R)`, constant in time.
    pub reference_entropy: [f64; 3],
    /// `I(R;Q_t E_t)` over the active environment.
    pub total_qmi: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub records: usize,
    pub no_revival: usize,
    pub non_causal_certified: usize,
    pub genuine_backflow_witnessed: usize,
    pub inconclusive: usize,
    pub genuine_operational: usize,
    pub genuine_model_relative: usize,
}

impl Summary {
    pub fn tally(records: &[SnapshotRecord]) -> Self {
        let mut s = Self {
            records: records.len(),
            ..Default::default()
        };
        for r in records {
            let c = &r.classification;
            match c.verdict {
                Verdict::NoRevival => s.no_revival += 1,
                Verdict::NonCausalCertified => s.non_causal_certified += 1,
                Verdict::GenuineBackflowWitnessed => s.genuine_backflow_witnessed += 1,
                Verdict::Inconclusive => s.inconclusive += 1,
            }
            match c.genuine_basis {
                Some(GenuineBasis::Operational) => s.genuine_operational += 1,
                Some(GenuineBasis::ModelRelative) => s.genuine_model_relative += 1,
                None => {}
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub revival: f64,
    pub witness: f64,
    pub certify: f64,
    pub recovery_bound: f64,
}

/// One row of the CSV sidecar.
#[derive(Debug, Serialize)]
struct CsvRow {
    seed: Option<u64>,
    revival_magnitude: f64,
    verdict: Verdict,
    witness_margin: Option<f64>,
}

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Rounds every float to [`SIGNIFICANT_DIGITS`] so that the emitted JSON
/// parses back to an identical value.
pub fn rounded<T: Serialize + DeserializeOwned>(x: &T) -> Result<T, CliError> {
    let mut v = serde_json::to_value(x)
        .map_err(|e| CliError::Invariant(format!("report encoding: {e}")))?;
    round_value(&mut v);
    serde_json::from_value(v).map_err(|e| CliError::Invariant(format!("report encoding: {e}")))
}

impl RunReport {
    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Invariant(format!("report encoding: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(CsvRow {
                seed: r.seed,
                revival_magnitude: r.revival.revival_magnitude,
                verdict: r.classification.verdict,
                witness_margin: r.classification.evidence.witness.as_ref().map(|w| w.margin),
            })
            .map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.123456789012345), 0.123456789012);
        assert_eq!(round_sig(-1.5e-20), -1.5e-20);
        assert_eq!(round_sig(0.0), 0.0);
        let x = 2.0f64.sqrt();
        assert_eq!(round_sig(round_sig(x)), round_sig(x));
    }

    #[test]
    fn rounded_floats_survive_text() {
        for x in [1.0 / 3.0, 1e-7, 0.9999999999999, 123456.789, -2.5e-13] {
            let r = round_sig(x);
            let back: f64 = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
            assert_eq!(back, r);
        }
    }
}
