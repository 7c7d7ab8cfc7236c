//! Randomized invariant suites.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::Result;
use crate::linalg;
use crate::process;
use crate::scenarios;
use crate::tensor::random::{random_channel_with, random_density_with};
use crate::tensor::{purify, SystemLayout};

pub const DPI_CASES: usize = 500;
pub const INVARIANCE_CASES: usize = 200;
pub const QCMI_CASES: usize = 500;
pub const PURIFICATION_CASES: usize = 200;

pub const DPI_TOL: f64 = 1e-9;
pub const INVARIANCE_TOL: f64 = 1e-9;
pub const QCMI_TOL: f64 = 1e-9;
pub const PURIFICATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest amount by which any case exceeded its bound; negative when
    /// every case had room to spare.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub seconds: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

fn case_rng(seed: u64, suite: u64, case: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(case as u64);
    rng
}

fn run_suite<F>(
    name: &str,
    cases: usize,
    tolerance: f64,
    seed: u64,
    suite: u64,
    check: F,
) -> Result<SuiteResult>
where
    F: Fn(&mut ChaCha20Rng) -> Result<f64> + Sync,
{
    let start = Instant::now();
    let excess: Vec<f64> = (0..cases)
        .into_par_iter()
        .map(|i| check(&mut case_rng(seed, suite, i)))
        .collect::<Result<_>>()?;
    let failures = excess.iter().filter(|&&e| e > tolerance).count();
    let worst_violation = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SuiteResult {
        name: name.to_string(),
        cases,
        failures,
        worst_violation,
        tolerance,
        passed: failures == 0,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `I(R;Q')` after a random channel on `Q`, minus `I(R;Q)`.
pub fn dpi_suite(seed: u64, cases: usize) -> Result<SuiteResult> {
    run_suite("dpi-local-channels", cases, DPI_TOL, seed, 1, |rng| {
        let dr = rng.random_range(2..=3);
        let dq = rng.random_range(2..=3);
        let dq_out = rng.random_range(2..=3);
        let layout = SystemLayout::new([("R", dr), ("Q", dq)])?;
        let rank = rng.random_range(1..=dr * dq);
        let rho = random_density_with(rng, layout, rank)?;
        let kraus_rank = rng.random_range(1..=4).max(dq.div_ceil(dq_out));
        let ch = random_channel_with(
            rng,
            SystemLayout::single("Q", dq)?,
            SystemLayout::single("Q'", dq_out)?,
            kraus_rank,
        )?;
        let after = ch.apply(&rho)?;
        Ok(entropy::qmi(&after, &["R"], &["Q'"])? - entropy::qmi(&rho, &["R"], &["Q"])?)
    })
}

/// Largest change of `I(R; everything else)` across the three times of a
/// random model.
pub fn invariance_suite(seed: u64, cases: usize) -> Result<SuiteResult> {
    run_suite(
        "unitary-invariance",
        cases,
        INVARIANCE_TOL,
        seed,
        2,
        |rng| {
            let d = rng.random_range(2..=3);
            let de = rng.random_range(1..=3);
            let rank = rng.random_range(1..=de);
            let model = scenarios::random_model_with(rng, d, de, rank, false)?;
            let s = process::run_snapshot(&model)?;
            let i0 = s.total_qmi(0)?;
            Ok((s.total_qmi(1)? - i0)
                .abs()
                .max((s.total_qmi(2)? - i0).abs()))
        },
    )
}

/// `-I(A;C|B)` on random tripartite states.
pub fn qcmi_suite(seed: u64, cases: usize) -> Result<SuiteResult> {
    run_suite("qcmi-nonnegativity", cases, QCMI_TOL, seed, 3, |rng| {
        let dims = [
            rng.random_range(2..=3),
            rng.random_range(2..=3),
            rng.random_range(2..=3),
        ];
        let layout = SystemLayout::new([("A", dims[0]), ("B", dims[1]), ("C", dims[2])])?;
        let total = dims.iter().product::<usize>();
        let rank = rng.random_range(1..=total);
        let rho = random_density_with(rng, layout, rank)?;
        Ok(-entropy::qcmi(&rho, &["A"], &["C"], &["B"])?)
    })
}

/// Deviation of `Tr_P |ψ⟩⟨ψ|` from `ρ` for a minimal purification.
pub fn purification_suite(seed: u64, cases: usize) -> Result<SuiteResult> {
    run_suite(
        "purification-round-trip",
        cases,
        PURIFICATION_TOL,
        seed,
        4,
        |rng| {
            let da = rng.random_range(1..=3);
            let db = rng.random_range(2..=4);
            let layout = SystemLayout::new([("A", da), ("B", db)])?;
            let rank = rng.random_range(1..=da * db);
            let rho = random_density_with(rng, layout, rank)?;
            let psi = purify(&rho, "P")?;
            let back = psi.to_density().partial_trace(&["A", "B"])?;
            Ok(linalg::max_abs_diff(back.matrix(), rho.matrix()))
        },
    )
}

pub fn run_all(seed: u64) -> Result<SelftestReport> {
    let start = Instant::now();
    let suites = vec![
        dpi_suite(seed, DPI_CASES)?,
        invariance_suite(seed, INVARIANCE_CASES)?,
        qcmi_suite(seed, QCMI_CASES)?,
        purification_suite(seed, PURIFICATION_CASES)?,
    ];
    Ok(SelftestReport {
        seed,
        suites,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for s in [
            dpi_suite(7, 20).unwrap(),
            invariance_suite(7, 10).unwrap(),
            qcmi_suite(7, 20).unwrap(),
            purification_suite(7, 20).unwrap(),
        ] {
            assert!(s.passed, "{s:?}");
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = qcmi_suite(3, 10).unwrap();
        let b = qcmi_suite(3, 10).unwrap();
        assert_eq!(a.worst_violation, b.worst_violation);
    }
}
