//! Statistical randomness battery in the NIST SP 800-22 style.
//!
//! A bit string is judged by a collection of hypothesis tests, each
//! producing a p-value that is compared against a significance level α
//! (default 0.01): an ideal generator fails each test on about one string
//! in a hundred, while a structurally biased one fails catastrophically.
//!
//! Two suites are exposed: `core` runs the eight kernels that carry the
//! bias-versus-calibrated demonstration (frequency, block frequency, runs,
//! longest run, cumulative sums, spectral, serial, approximate entropy);
//! `full` adds the remaining seven conformance families (matrix rank,
//! template matching, universal statistic, linear complexity, random
//! excursions and its variant) for the standard fifteen. Strings shorter
//! than a test's recommended minimum yield a `skipped` record — never a
//! fabricated p-value.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod core;
pub mod extended;
pub mod special;

pub use self::core::{
    approximate_entropy, block_frequency, cumulative_sums, dft_spectral, frequency_monobit,
    longest_run_of_ones, runs, serial, CusumMode, KernelResult,
};
pub use self::extended::{
    binary_matrix_rank, choose_universal_params, linear_complexity, maurer_universal,
    non_overlapping_template, overlapping_template, random_excursions, random_excursions_variant,
    ExcursionOutcome, DEFAULT_NONOVERLAP_TEMPLATE, MIN_EXCURSION_CYCLES,
};

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Recommended minimum input sizes, below which a test is skipped.
/// The monobit, spectral, and universal minimums follow SP 800-22;
/// the others are sized so each test's asymptotic χ²/normal reference
/// distribution is trustworthy under our default parameters.
pub const MIN_BITS_MONOBIT: usize = 100;
pub const MIN_BITS_BLOCK_FREQUENCY: usize = 2_560;
pub const MIN_BITS_RUNS: usize = 100;
pub const MIN_BITS_LONGEST_RUN: usize = 128;
pub const MIN_BITS_CUSUM: usize = 100;
pub const MIN_BITS_DFT: usize = 1_000;
pub const MIN_BITS_SERIAL: usize = 128;
pub const MIN_BITS_APEN: usize = 128;
pub const MIN_BITS_RANK: usize = 38_912;
pub const MIN_BITS_NON_OVERLAPPING: usize = 20_544;
pub const MIN_BITS_OVERLAPPING: usize = 1_000_000;
pub const MIN_BITS_UNIVERSAL: usize = 387_840;
pub const MIN_BITS_LINEAR_COMPLEXITY: usize = 1_000_000;
pub const MIN_BITS_EXCURSIONS: usize = 1_000_000;

/// Suite defaults: block length for block frequency and linear complexity.
pub const DEFAULT_BLOCK_FREQUENCY_LEN: usize = 128;
pub const DEFAULT_LINEAR_COMPLEXITY_BLOCK: usize = 500;

/// Invalid inputs to the battery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestError {
    /// Bit buffers hold the values 0 and 1 only.
    #[error("bit at index {index} is {value}, expected 0 or 1")]
    InvalidBit { index: usize, value: u8 },
    /// α must be a proper probability.
    #[error("significance level must lie strictly between 0 and 1, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    /// No bits at all.
    #[error("empty bit string")]
    EmptyInput,
    /// A kernel parameter outside its documented domain.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Validates that a buffer holds only 0/1 values.
pub(crate) fn check_bits(bits: &[u8]) -> Result<(), TestError> {
    match bits.iter().position(|&b| b > 1) {
        Some(index) => Err(TestError::InvalidBit { index, value: bits[index] }),
        None => Ok(()),
    }
}

/// Which battery to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// The eight demonstration kernels.
    Core,
    /// All fifteen test families.
    Full,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "core" => Ok(Suite::Core),
            "full" => Ok(Suite::Full),
            other => Err(format!("unknown suite {other:?} (expected core or full)")),
        }
    }
}

/// Outcome of one test record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Pass,
    Fail,
    Skipped,
}

/// One test's entry in the report. `pass` is true exactly when the test
/// executed and its p-value reached α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub name: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub pass: bool,
    pub status: TestStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl TestRecord {
    fn executed(name: &str, result: KernelResult, alpha: f64) -> Self {
        let pass = result.p_value >= alpha;
        TestRecord {
            name: name.to_owned(),
            statistic: Some(result.statistic),
            p_value: Some(result.p_value),
            pass,
            status: if pass { TestStatus::Pass } else { TestStatus::Fail },
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }

    fn skipped(name: &str, note: String) -> Self {
        TestRecord {
            name: name.to_owned(),
            statistic: None,
            p_value: None,
            pass: false,
            status: TestStatus::Skipped,
            note: Some(note),
        }
    }
}

/// The battery's report: one record per test, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub alpha: f64,
    pub n_bits: usize,
    pub records: Vec<TestRecord>,
    /// Number of records with status `pass`.
    pub suite_pass_count: usize,
}

impl TestReport {
    /// Record lookup by test name.
    pub fn record(&self, name: &str) -> Option<&TestRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Number of tests that actually ran.
    pub fn executed_count(&self) -> usize {
        self.records.iter().filter(|r| r.status != TestStatus::Skipped).count()
    }

    /// Number of executed tests that failed.
    pub fn failed_count(&self) -> usize {
        self.records.iter().filter(|r| r.status == TestStatus::Fail).count()
    }

    /// True when every executed test passed.
    pub fn all_executed_pass(&self) -> bool {
        self.failed_count() == 0
    }

    /// Aligned plain-text rendering: name, p-value to six decimals, and
    /// PASS/FAIL/SKIP with any per-test note.
    pub fn to_text_table(&self) -> String {
        let name_width = self.records.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        let _ = writeln!(out, "{:<name_width$}  {:>9}  result", "test", "p-value");
        for r in &self.records {
            let p = r.p_value.map_or_else(|| "-".to_owned(), |p| format!("{p:.6}"));
            let status = match r.status {
                TestStatus::Pass => "PASS",
                TestStatus::Fail => "FAIL",
                TestStatus::Skipped => "SKIP",
            };
            let note = r.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
            let _ = writeln!(out, "{:<name_width$}  {p:>9}  {status}{note}", r.name);
        }
        let _ = writeln!(
            out,
            "{} of {} executed tests pass at alpha = {}; {} skipped ({} bits)",
            self.executed_count() - self.failed_count(),
            self.executed_count(),
            self.alpha,
            self.records.len() - self.executed_count(),
            self.n_bits,
        );
        out
    }
}

/// Pattern length for the serial test, scaled down on short inputs so the
/// 2^m cells keep a healthy expected occupancy (m ≲ log₂ n − 5).
fn default_serial_m(n: usize) -> usize {
    (n.ilog2() as i64 - 5).clamp(2, 16) as usize
}

/// Pattern length for approximate entropy (m ≲ log₂ n − 6).
fn default_apen_m(n: usize) -> usize {
    (n.ilog2() as i64 - 6).clamp(1, 10) as usize
}

fn gated(
    records: &mut Vec<TestRecord>,
    name: &str,
    n: usize,
    min: usize,
    alpha: f64,
    kernel: impl FnOnce() -> Result<KernelResult, TestError>,
) -> Result<(), TestError> {
    if n < min {
        records.push(TestRecord::skipped(name, format!("needs at least {min} bits, have {n}")));
    } else {
        records.push(TestRecord::executed(name, kernel()?, alpha));
    }
    Ok(())
}

/// Pushes one record for a multi-state excursions outcome: the worst state
/// decides the family's p-value, so the record passes exactly when every
/// state does.
fn push_excursion_record(
    records: &mut Vec<TestRecord>,
    name: &str,
    n: usize,
    alpha: f64,
    outcome: Result<ExcursionOutcome, TestError>,
) -> Result<(), TestError> {
    if n < MIN_BITS_EXCURSIONS {
        records.push(TestRecord::skipped(
            name,
            format!("needs at least {MIN_BITS_EXCURSIONS} bits, have {n}"),
        ));
        return Ok(());
    }
    let outcome = outcome?;
    if outcome.states.is_empty() {
        records.push(TestRecord::skipped(
            name,
            format!(
                "walk produced {} zero-return cycles (< {MIN_EXCURSION_CYCLES}): not applicable",
                outcome.cycles
            ),
        ));
        return Ok(());
    }
    let (x, worst) = outcome
        .states
        .iter()
        .min_by(|a, b| a.1.p_value.total_cmp(&b.1.p_value))
        .copied()
        .expect("states non-empty");
    records.push(
        TestRecord::executed(name, worst, alpha)
            .with_note(format!("worst of {} states (x = {x})", outcome.states.len())),
    );
    Ok(())
}

/// Runs the configured battery over a bit string.
///
/// Every test at or above its minimum input size executes; the rest are
/// reported as skipped. Deterministic: identical input yields an identical
/// report.
pub fn run_suite(bits: &[u8], alpha: f64, suite: Suite) -> Result<TestReport, TestError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TestError::InvalidAlpha { alpha });
    }
    check_bits(bits)?;
    let n = bits.len();
    let full = suite == Suite::Full;
    let mut records = Vec::with_capacity(if full { 17 } else { 10 });

    gated(&mut records, "frequency_monobit", n, MIN_BITS_MONOBIT, alpha, || {
        frequency_monobit(bits)
    })?;
    gated(&mut records, "block_frequency", n, MIN_BITS_BLOCK_FREQUENCY, alpha, || {
        block_frequency(bits, DEFAULT_BLOCK_FREQUENCY_LEN)
    })?;
    gated(&mut records, "runs", n, MIN_BITS_RUNS, alpha, || runs(bits))?;
    gated(&mut records, "longest_run_of_ones", n, MIN_BITS_LONGEST_RUN, alpha, || {
        longest_run_of_ones(bits)
    })?;
    if full {
        gated(&mut records, "binary_matrix_rank", n, MIN_BITS_RANK, alpha, || {
            binary_matrix_rank(bits)
        })?;
    }
    gated(&mut records, "dft_spectral", n, MIN_BITS_DFT, alpha, || dft_spectral(bits))?;
    if full {
        gated(&mut records, "non_overlapping_template", n, MIN_BITS_NON_OVERLAPPING, alpha, || {
            non_overlapping_template(bits, &DEFAULT_NONOVERLAP_TEMPLATE, 8)
        })?;
        gated(&mut records, "overlapping_template", n, MIN_BITS_OVERLAPPING, alpha, || {
            overlapping_template(bits)
        })?;
        match choose_universal_params(n) {
            None => records.push(TestRecord::skipped(
                "maurer_universal",
                format!("needs at least {MIN_BITS_UNIVERSAL} bits, have {n}"),
            )),
            Some((l, q)) => records.push(
                TestRecord::executed("maurer_universal", maurer_universal(bits, l, q)?, alpha)
                    .with_note(format!("L = {l}, Q = {q}")),
            ),
        }
        gated(&mut records, "linear_complexity", n, MIN_BITS_LINEAR_COMPLEXITY, alpha, || {
            linear_complexity(bits, DEFAULT_LINEAR_COMPLEXITY_BLOCK)
        })?;
    }
    if n < MIN_BITS_SERIAL {
        let note = format!("needs at least {MIN_BITS_SERIAL} bits, have {n}");
        records.push(TestRecord::skipped("serial_1", note.clone()));
        records.push(TestRecord::skipped("serial_2", note));
    } else {
        let m = default_serial_m(n);
        let (first, second) = serial(bits, m)?;
        records.push(TestRecord::executed("serial_1", first, alpha).with_note(format!("m = {m}")));
        records.push(TestRecord::executed("serial_2", second, alpha).with_note(format!("m = {m}")));
    }
    if n < MIN_BITS_APEN {
        records.push(TestRecord::skipped(
            "approximate_entropy",
            format!("needs at least {MIN_BITS_APEN} bits, have {n}"),
        ));
    } else {
        let m = default_apen_m(n);
        records.push(
            TestRecord::executed("approximate_entropy", approximate_entropy(bits, m)?, alpha)
                .with_note(format!("m = {m}")),
        );
    }
    gated(&mut records, "cumulative_sums_forward", n, MIN_BITS_CUSUM, alpha, || {
        cumulative_sums(bits, CusumMode::Forward)
    })?;
    gated(&mut records, "cumulative_sums_backward", n, MIN_BITS_CUSUM, alpha, || {
        cumulative_sums(bits, CusumMode::Backward)
    })?;
    if full {
        push_excursion_record(&mut records, "random_excursions", n, alpha, random_excursions(bits))?;
        push_excursion_record(
            &mut records,
            "random_excursions_variant",
            n,
            alpha,
            random_excursions_variant(bits),
        )?;
    }

    let suite_pass_count = records.iter().filter(|r| r.status == TestStatus::Pass).count();
    Ok(TestReport { alpha, n_bits: n, records, suite_pass_count })
}
