//! Black-box tests of the `holoqrng` binary: the documented exit-code
//! contract, the fail → calibrate → pass pipeline, manifest reproducibility,
//! bit-format agreement, and the scan/figures plumbing.

use std::path::Path;
use std::process::{Command, Output};

fn holoqrng(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holoqrng"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_exit(output: &Output, expected: i32) {
    let code = output.status.code().expect("no exit code");
    assert_eq!(
        code,
        expected,
        "exit {code}, expected {expected}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Ideal-optics configuration: decisive statistics from a short run.
const LEAN_CONFIG: &str = "
[source]
pair_rate_hz = 1.0e6
duration_s = 0.12
seed = 21

[detection]
efficiency_a = 1.0
efficiency_b0 = 1.0
efficiency_b1 = 1.0
dark_rate_a_hz = 0.0
dark_rate_b0_hz = 0.0
dark_rate_b1_hz = 0.0

[coincidence]
window_ns = 1.0
";

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&holoqrng(dir.path(), &["--help"]), 0);
    assert_exit(&holoqrng(dir.path(), &["--version"]), 0);
    assert_exit(&holoqrng(dir.path(), &["extract", "--help"]), 0);
}

#[test]
fn unknown_flags_and_missing_commands_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&holoqrng(dir.path(), &["--frobnicate"]), 1);
    assert_exit(&holoqrng(dir.path(), &[]), 1);
    assert_exit(&holoqrng(dir.path(), &["simulate"]), 1); // --out is required
    assert_exit(
        &holoqrng(dir.path(), &["calibrate", "--tags", "x", "--bias-ratio", "2", "--out", "c"]),
        1, // the source group is mutually exclusive
    );
}

#[test]
fn missing_input_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &holoqrng(dir.path(), &["extract", "--tags", "absent.qtag", "--out", "bits"]),
        2,
    );
    assert_exit(&holoqrng(dir.path(), &["test", "--bits", "absent.bits"]), 2);
    assert_exit(
        &holoqrng(dir.path(), &["--config", "absent.toml", "simulate", "--out", "x.qtag"]),
        2,
    );
}

#[test]
fn schema_mismatched_configs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[source]\npair_rate = 1.0\n").unwrap();
    let output =
        holoqrng(dir.path(), &["--config", "bad.toml", "simulate", "--out", "x.qtag"]);
    assert_exit(&output, 3);
    assert!(String::from_utf8_lossy(&output.stderr).contains("config"));
    assert!(!dir.path().join("x.qtag").exists());
}

#[test]
fn corrupt_tag_files_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.qtag"), b"NOPEadditional junk bytes").unwrap();
    assert_exit(
        &holoqrng(dir.path(), &["extract", "--tags", "junk.qtag", "--out", "bits"]),
        3,
    );
}

#[test]
fn all_zero_bits_fail_the_suite_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("zeros.bits"), "0".repeat(2_000)).unwrap();
    let output = holoqrng(dir.path(), &["test", "--bits", "zeros.bits", "--out", "report.json"]);
    assert_exit(&output, 4);
    // The report is still written so the failure can be inspected.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["suite_pass_count"], 0);
    assert!(String::from_utf8_lossy(&output.stdout).contains("FAIL"));
}

#[test]
fn pipeline_fails_biased_then_passes_after_calibration() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), LEAN_CONFIG).unwrap();

    // Uncorrected simulate → extract → test must fail the suite.
    assert_exit(
        &holoqrng(
            dir.path(),
            &["--config", "run.toml", "simulate", "--out", "raw.qtag"],
        ),
        0,
    );
    assert_exit(
        &holoqrng(
            dir.path(),
            &["--config", "run.toml", "extract", "--tags", "raw.qtag", "--out", "raw.bits"],
        ),
        0,
    );
    let raw_test = holoqrng(
        dir.path(),
        &["--config", "run.toml", "test", "--bits", "raw.bits", "--out", "before.json"],
    );
    assert_exit(&raw_test, 4);
    assert!(String::from_utf8_lossy(&raw_test.stdout).contains("frequency_monobit"));

    // Calibrate from the same tag file and re-run with the solved depth.
    assert_exit(
        &holoqrng(
            dir.path(),
            &["--config", "run.toml", "calibrate", "--tags", "raw.qtag", "--out", "calib.json"],
        ),
        0,
    );
    let calib: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("calib.json")).unwrap())
            .unwrap();
    let depth = calib["M_quantized"].as_f64().unwrap();
    assert!((calib["R"].as_f64().unwrap() - 0.8518).abs() < 0.02);
    assert!((depth - 0.7812).abs() < 0.01);

    let corrected = format!("{LEAN_CONFIG}\n[splitter]\ndepth_m1 = {depth}\n");
    std::fs::write(dir.path().join("corrected.toml"), corrected).unwrap();
    assert_exit(
        &holoqrng(
            dir.path(),
            &["--config", "corrected.toml", "simulate", "--out", "cal.qtag"],
        ),
        0,
    );
    assert_exit(
        &holoqrng(
            dir.path(),
            &["--config", "corrected.toml", "extract", "--tags", "cal.qtag", "--out", "cal.bits"],
        ),
        0,
    );
    let cal_test = holoqrng(
        dir.path(),
        &["--config", "corrected.toml", "test", "--bits", "cal.bits", "--out", "after.json"],
    );
    assert_exit(&cal_test, 0);

    // The extraction's entropy report reflects the correction.
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("cal.bits.entropy.json")).unwrap(),
    )
    .unwrap();
    assert!(report["H_min"].as_f64().unwrap() > 0.99);

    // Both figure inputs exist; emit the before/after comparison.
    assert_exit(
        &holoqrng(
            dir.path(),
            &[
                "figures",
                "--test-before",
                "before.json",
                "--test-after",
                "after.json",
                "--calibration",
                "calib.json",
                "--out-dir",
                "figs",
            ],
        ),
        0,
    );
    let comparison =
        std::fs::read_to_string(dir.path().join("figs").join("test_pvalues.csv")).unwrap();
    let monobit_row = comparison
        .lines()
        .find(|l| l.starts_with("frequency_monobit,"))
        .expect("monobit row");
    let fields: Vec<&str> = monobit_row.split(',').collect();
    assert!(fields[1].parse::<f64>().unwrap() < 1e-6);
    assert!(fields[2].parse::<f64>().unwrap() >= 0.01);
    assert!(dir.path().join("figs").join("entropy_vs_depth.csv").exists());
}

#[test]
fn manifest_entries_reproduce_output_hashes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), LEAN_CONFIG).unwrap();
    let args = |out: &str, manifest: &str| -> Vec<String> {
        ["--config", "run.toml", "--seed", "5", "--manifest", manifest, "simulate", "--out", out]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    for (out, manifest) in [("a.qtag", "m1.jsonl"), ("b.qtag", "m2.jsonl")] {
        let args: Vec<String> = args(out, manifest);
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_exit(&holoqrng(dir.path(), &arg_refs), 0);
    }
    let hash = |manifest: &str| -> String {
        let text = std::fs::read_to_string(dir.path().join(manifest)).unwrap();
        let entry: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(entry["command"], "simulate");
        assert_eq!(entry["seed"], 5);
        assert!(entry["config"]["source"]["pair_rate_hz"].is_number());
        entry["outputs"][0]["sha256"].as_str().unwrap().to_string()
    };
    assert_eq!(hash("m1.jsonl"), hash("m2.jsonl"), "same inputs must hash identically");
    assert_eq!(
        std::fs::read(dir.path().join("a.qtag")).unwrap(),
        std::fs::read(dir.path().join("b.qtag")).unwrap()
    );
    let header = std::fs::read(dir.path().join("a.qtag")).unwrap();
    assert_eq!(&header[..4], b"QTAG");
}

#[test]
fn packed_and_ascii_encodings_agree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), LEAN_CONFIG).unwrap();
    assert_exit(
        &holoqrng(dir.path(), &["--config", "run.toml", "simulate", "--out", "run.qtag"]),
        0,
    );
    for (format, out) in [("ascii", "run.ascii"), ("packed", "run.packed")] {
        assert_exit(
            &holoqrng(
                dir.path(),
                &[
                    "--config", "run.toml", "extract", "--tags", "run.qtag", "--format", format,
                    "--out", out,
                ],
            ),
            0,
        );
    }
    let ascii = std::fs::read_to_string(dir.path().join("run.ascii")).unwrap();
    let packed = std::fs::read(dir.path().join("run.packed")).unwrap();
    let declared: usize = std::fs::read_to_string(dir.path().join("run.packed.nbits"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(declared, ascii.len());
    assert_eq!(packed.len(), declared.div_ceil(8));
    let rebuilt: String = (0..declared)
        .map(|i| if packed[i / 8] >> (7 - (i % 8)) & 1 == 1 { '1' } else { '0' })
        .collect();
    assert_eq!(rebuilt, ascii);

    // Both encodings produce the same verdict under test.
    let ascii_run = holoqrng(dir.path(), &["test", "--bits", "run.ascii", "--alpha", "0.01"]);
    let packed_run = holoqrng(
        dir.path(),
        &["test", "--bits", "run.packed", "--format", "packed", "--alpha", "0.01"],
    );
    assert_eq!(ascii_run.status.code(), packed_run.status.code());
    assert_eq!(ascii_run.stdout, packed_run.stdout);
}

#[test]
fn oam_scan_emits_bandwidth_and_surface_csvs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("scan.toml"),
        "
[detection]
efficiency_a = 1.0
efficiency_b0 = 1.0
efficiency_b1 = 1.0
dark_rate_a_hz = 0.0
dark_rate_b0_hz = 0.0
dark_rate_b1_hz = 0.0

[splitter]
bias_ratio = 1.0

[projection]
sigma = 2.0
l_max = 12
",
    )
    .unwrap();
    assert_exit(
        &holoqrng(
            dir.path(),
            &[
                "--config", "scan.toml", "oam-scan", "--l-b0", "2", "--l1-min", "-3", "--l1-max",
                "3", "--dwell-s", "0.02", "--out-bandwidth", "bw.csv", "--out-surface",
                "surface.csv",
            ],
        ),
        0,
    );
    let bandwidth = std::fs::read_to_string(dir.path().join("bw.csv")).unwrap();
    assert!(bandwidth.starts_with("arm,l_B,l_A,counts,normalized"));
    // Symmetric hull of the requested points: ℓ ∈ [−3, 3] on a 7×7 grid per arm.
    assert_eq!(bandwidth.lines().count(), 1 + 2 * 7 * 7);
    let surface = std::fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert!(surface.starts_with("l_B0,l_B1,p0,hmin,normalized_rate"));
    assert_eq!(surface.lines().count(), 1 + 7);
    assert!(surface.lines().skip(1).all(|l| l.starts_with("2,")));

    // The emitted artifacts feed the figures command.
    assert_exit(
        &holoqrng(
            dir.path(),
            &[
                "figures", "--bandwidth", "bw.csv", "--surface", "surface.csv", "--out-dir",
                "figs",
            ],
        ),
        0,
    );
    let diagonal =
        std::fs::read_to_string(dir.path().join("figs").join("spiral_bandwidth_diagonal.csv"))
            .unwrap();
    assert_eq!(diagonal.lines().count(), 1 + 7);
    assert!(dir.path().join("figs").join("entropy_vs_detuning.csv").exists());
}

#[test]
fn interrupted_writes_leave_no_partial_file_at_the_final_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), LEAN_CONFIG).unwrap();
    // A directory squatting on the output path makes the final rename fail
    // after the full content was already written to a temporary: the command
    // must report an I/O error and leave no bytes at the destination.
    std::fs::create_dir(dir.path().join("taken.qtag")).unwrap();
    let output = holoqrng(
        dir.path(),
        &["--config", "run.toml", "simulate", "--out", "taken.qtag"],
    );
    assert_exit(&output, 2);
    assert!(dir.path().join("taken.qtag").is_dir(), "destination must be untouched");
    let leftovers: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|name| name != "run.toml" && name != "taken.qtag")
        .collect();
    assert_eq!(leftovers, Vec::<String>::new(), "no temporaries or partial outputs");
}
