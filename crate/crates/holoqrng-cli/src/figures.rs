//! Plot-data builders: each takes upstream artifacts (test reports,
//! calibration JSON, scan CSVs) and emits a small x,y[,z] CSV that any
//! plotting tool can render. No rendering happens here.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use holoqrng::hologram::{self, CalibrationRecord};
use holoqrng::stattests::TestReport;

use crate::CliError;

fn bad(artifact: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{artifact}: {reason}"))
}

/// Side-by-side p-values of two test reports, keyed by record name:
/// `test,p_before,p_after` with `-` for records that did not execute.
pub fn pvalue_comparison(before: &str, after: &str) -> Result<String, CliError> {
    let before: TestReport =
        serde_json::from_str(before).map_err(|e| bad("before-report", e))?;
    let after: TestReport = serde_json::from_str(after).map_err(|e| bad("after-report", e))?;
    let cell = |report: &TestReport, name: &str| -> String {
        report
            .record(name)
            .and_then(|r| r.p_value)
            .map_or_else(|| "-".into(), |p| format!("{p:.6}"))
    };
    let mut csv = String::from("test,p_before,p_after\n");
    for record in &before.records {
        let _ = writeln!(
            csv,
            "{},{},{}",
            record.name,
            cell(&before, &record.name),
            cell(&after, &record.name)
        );
    }
    Ok(csv)
}

/// Min-entropy vs grating depth at the calibrated bias, one row per grey
/// level, so the balance point of the calibration is visible on the curve:
/// `M,H_min`.
pub fn entropy_vs_depth(calibration: &str) -> Result<String, CliError> {
    let record: CalibrationRecord =
        serde_json::from_str(calibration).map_err(|e| bad("calibration", e))?;
    let grid = 256u32;
    let mut csv = String::from("M,H_min\n");
    for step in 0..=grid {
        let depth = f64::from(step) / f64::from(grid);
        let h = hologram::min_entropy(record.bias_ratio, depth)
            .map_err(|e| bad("calibration", e))?;
        let _ = writeln!(csv, "{depth:.6},{h:.6}");
    }
    Ok(csv)
}

/// Diagonal (ℓ_B, −ℓ_B) profile of a spiral-bandwidth scan CSV, pivoted to
/// one row per ℓ: `l,normalized_b0,normalized_b1`.
pub fn bandwidth_diagonal(scan_csv: &str) -> Result<String, CliError> {
    let mut rows: BTreeMap<i32, [Option<f64>; 2]> = BTreeMap::new();
    for (index, line) in scan_csv.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad("bandwidth-csv", format!("line {}: expected 5 fields", index + 1)));
        }
        let arm = match fields[0] {
            "B0" => 0,
            "B1" => 1,
            other => return Err(bad("bandwidth-csv", format!("unknown arm {other:?}"))),
        };
        let l_b: i32 = fields[1].parse().map_err(|e| bad("bandwidth-csv", e))?;
        let l_a: i32 = fields[2].parse().map_err(|e| bad("bandwidth-csv", e))?;
        let normalized: f64 = fields[4].parse().map_err(|e| bad("bandwidth-csv", e))?;
        if l_a == -l_b {
            rows.entry(l_b).or_default()[arm] = Some(normalized);
        }
    }
    if rows.is_empty() {
        return Err(bad("bandwidth-csv", "no diagonal rows found"));
    }
    let mut csv = String::from("l,normalized_b0,normalized_b1\n");
    for (l, pair) in rows {
        let (b0, b1) = (pair[0], pair[1]);
        let render = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.6}"));
        let _ = writeln!(csv, "{l},{},{}", render(b0), render(b1));
    }
    Ok(csv)
}

/// Entropy-vs-detuning slice of a surface CSV at one ℓ_B0 working point:
/// `l_B1,hmin,normalized_rate`. With no explicit point, the first row's
/// ℓ_B0 is used.
pub fn surface_slice(surface_csv: &str, l_b0: Option<i32>) -> Result<String, CliError> {
    let mut selected = l_b0;
    let mut csv = String::from("l_B1,hmin,normalized_rate\n");
    let mut matched = 0u32;
    for (index, line) in surface_csv.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad("surface-csv", format!("line {}: expected 5 fields", index + 1)));
        }
        let row_l_b0: i32 = fields[0].parse().map_err(|e| bad("surface-csv", e))?;
        let point = *selected.get_or_insert(row_l_b0);
        if row_l_b0 == point {
            let _ = writeln!(csv, "{},{},{}", fields[1], fields[3], fields[4]);
            matched += 1;
        }
    }
    if matched == 0 {
        return Err(bad(
            "surface-csv",
            format!("no rows at l_B0 = {}", selected.map_or_else(|| "?".into(), |l| l.to_string())),
        ));
    }
    Ok(csv)
}
