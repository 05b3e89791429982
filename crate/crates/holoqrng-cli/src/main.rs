//! `holoqrng` — drives the photon-pair RNG pipeline from the command line:
//! simulate time tags, extract coincidence bits, calibrate the splitter,
//! run the statistical suite, scan OAM projections, and emit plot data.
//!
//! Every command validates its inputs, writes outputs atomically, and
//! appends a hash-stamped entry to a JSONL run manifest. Exit codes:
//! 0 success, 1 usage, 2 I/O, 3 validation, 4 statistical test failure.

mod bitfile;
mod config;
mod figures;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use holoqrng::coincidence::{extract_bits, BitString, CoincidenceParams};
use holoqrng::entropy::EntropyReport;
use holoqrng::hologram::calibrate;
use holoqrng::oam::{entropy_rate_surface, measure_spiral_bandwidth, surface_to_csv};
use holoqrng::sim::simulate;
use holoqrng::stattests::run_suite;
use holoqrng::tags::{read_tags_file, write_tags, TagIoError, TimeTagEvent};

use bitfile::BitFormat;
use config::{window_ns_to_ps, PolicyName, RunConfig, SuiteName};
use manifest::{ManifestEntry, OutputRecord};

/// Failure taxonomy; the variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: contradictory or missing arguments.
    Usage(String),
    /// The system failed us: unreadable or unwritable files.
    Io(String),
    /// The input was readable but wrong: malformed files or configs,
    /// physically invalid parameters.
    Validation(String),
    /// The statistical suite ran and at least one executed test failed.
    TestFailure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Validation(_) => 3,
            CliError::TestFailure(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Validation(m)
            | CliError::TestFailure(m) => m,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "holoqrng", version, about = "Holographic quantum RNG pipeline driver")]
struct Cli {
    /// TOML run configuration; defaults are the documented instrument.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run manifest to append to.
    #[arg(long, global = true, value_name = "PATH", default_value = "holoqrng-manifest.jsonl")]
    manifest: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the source and detectors into a QTAG time-tag file.
    Simulate(SimulateArgs),
    /// Extract coincidence bits from a QTAG file, with an entropy report.
    Extract(ExtractArgs),
    /// Solve the grating depth that balances a measured or given bias.
    Calibrate(CalibrateArgs),
    /// Run the statistical suite over a bit file.
    Test(TestArgs),
    /// Scan OAM projections: spiral-bandwidth counts and entropy surface.
    OamScan(OamScanArgs),
    /// Emit plot-data CSVs from earlier artifacts.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Destination QTAG file.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Source QTAG file.
    #[arg(long, value_name = "PATH")]
    tags: PathBuf,
    /// Coincidence window in nanoseconds (overrides the configuration).
    #[arg(long, value_name = "NS")]
    window_ns: Option<f64>,
    /// Ambiguity policy (overrides the configuration).
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
    /// Bit file encoding.
    #[arg(long, value_enum, default_value = "ascii")]
    format: BitFormat,
    /// Destination bit file (packed format adds a `.nbits` sidecar).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Destination entropy report (default: `<out>.entropy.json`).
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CalibrateSource {
    /// Measure the bias from this QTAG file.
    #[arg(long, value_name = "PATH")]
    tags: Option<PathBuf>,
    /// Use an already-measured bias ratio R = p0/p1.
    #[arg(long, value_name = "R")]
    bias_ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    source: CalibrateSource,
    /// Coincidence window in nanoseconds for `--tags` measurement.
    #[arg(long, value_name = "NS")]
    window_ns: Option<f64>,
    /// Ambiguity policy for `--tags` measurement.
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
    /// Grey levels of the phase modulator (overrides the configuration).
    #[arg(long)]
    grey_levels: Option<u32>,
    /// Destination calibration JSON.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Bit file to test.
    #[arg(long, value_name = "PATH")]
    bits: PathBuf,
    /// Bit file encoding.
    #[arg(long, value_enum, default_value = "ascii")]
    format: BitFormat,
    /// Significance level (overrides the configuration).
    #[arg(long)]
    alpha: Option<f64>,
    /// Test selection (overrides the configuration).
    #[arg(long, value_enum)]
    suite: Option<SuiteName>,
    /// Destination report JSON (optional; the table always prints).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OamScanArgs {
    /// Working-point projection on arm B0 for the reported summary.
    #[arg(long, default_value_t = 4)]
    l_b0: i32,
    /// Lowest scanned ℓ on arm B1.
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    l1_min: i32,
    /// Highest scanned ℓ on arm B1.
    #[arg(long, default_value_t = 10)]
    l1_max: i32,
    /// Acquisition time per grid point, in seconds.
    #[arg(long, default_value_t = 0.5)]
    dwell_s: f64,
    /// Destination spiral-bandwidth counts CSV.
    #[arg(long, value_name = "PATH")]
    out_bandwidth: PathBuf,
    /// Destination entropy/rate surface CSV.
    #[arg(long, value_name = "PATH")]
    out_surface: PathBuf,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    /// Test report JSON before calibration (paired with --test-after).
    #[arg(long, value_name = "PATH", requires = "test_after")]
    test_before: Option<PathBuf>,
    /// Test report JSON after calibration.
    #[arg(long, value_name = "PATH", requires = "test_before")]
    test_after: Option<PathBuf>,
    /// Calibration JSON for the entropy-vs-depth curve.
    #[arg(long, value_name = "PATH")]
    calibration: Option<PathBuf>,
    /// Spiral-bandwidth scan CSV for the diagonal profile.
    #[arg(long, value_name = "PATH")]
    bandwidth: Option<PathBuf>,
    /// Surface CSV for the entropy-vs-detuning slice.
    #[arg(long, value_name = "PATH")]
    surface: Option<PathBuf>,
    /// Working point for the surface slice (default: first row).
    #[arg(long, allow_hyphen_values = true)]
    l_b0: Option<i32>,
    /// Directory receiving the plot-data CSVs.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (config, config_snapshot) = load_config(cli.config.as_deref())?;
    let context = Context {
        config,
        config_snapshot,
        seed: cli.seed,
        manifest_path: cli.manifest,
    };
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&context, &args),
        Command::Extract(args) => cmd_extract(&context, &args),
        Command::Calibrate(args) => cmd_calibrate(&context, &args),
        Command::Test(args) => cmd_test(&context, &args),
        Command::OamScan(args) => cmd_oam_scan(&context, &args),
        Command::Figures(args) => cmd_figures(&context, &args),
    }
}

/// Effective configuration plus manifest plumbing shared by every command.
struct Context {
    config: RunConfig,
    config_snapshot: Option<serde_json::Value>,
    seed: Option<u64>,
    manifest_path: PathBuf,
}

impl Context {
    fn record(
        &self,
        command: &'static str,
        params: serde_json::Value,
        outputs: Vec<OutputRecord>,
    ) -> Result<(), CliError> {
        let mut entry = ManifestEntry::new(command, params);
        entry.seed = self.seed;
        entry.config = self.config_snapshot.clone();
        entry.outputs = outputs;
        manifest::append(&self.manifest_path, &entry)
    }
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, Option<serde_json::Value>), CliError> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), None));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let config = RunConfig::from_toml(&text)?;
    let snapshot: toml::Value =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    let snapshot = serde_json::to_value(snapshot)
        .map_err(|e| CliError::Validation(format!("config: {e}")))?;
    Ok((config, Some(snapshot)))
}

/// Extraction parameters: config values with per-command overrides.
fn extraction_params(
    context: &Context,
    window_ns: Option<f64>,
    policy: Option<PolicyName>,
) -> Result<CoincidenceParams, CliError> {
    let mut params = context.config.coincidence_params()?;
    if let Some(ns) = window_ns {
        params.window_ps = window_ns_to_ps(ns)?;
    }
    if let Some(policy) = policy {
        params.policy = policy.into();
    }
    Ok(params)
}

fn read_tags_checked(path: &Path) -> Result<Vec<TimeTagEvent>, CliError> {
    read_tags_file(path).map_err(|e| match e {
        TagIoError::Io(inner) => CliError::Io(format!("{}: {inner}", path.display())),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })
}

fn validated<T, E: std::fmt::Display>(result: Result<T, E>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Validation(e.to_string()))
}

fn cmd_simulate(context: &Context, args: &SimulateArgs) -> Result<(), CliError> {
    let experiment = context.config.experiment(context.seed)?;
    let events = validated(simulate(&experiment))?;
    let mut payload = Vec::new();
    validated(write_tags(&events, &mut payload))?;
    let output = manifest::write_output(&args.out, &payload)?;
    println!(
        "simulated {:.3} s: {} events -> {}",
        experiment.duration_s,
        events.len(),
        args.out.display()
    );
    context.record(
        "simulate",
        serde_json::json!({ "out": args.out.display().to_string(), "seed": experiment.seed }),
        vec![output],
    )
}

fn extract_from_file(
    context: &Context,
    tags: &Path,
    window_ns: Option<f64>,
    policy: Option<PolicyName>,
) -> Result<(BitString, CoincidenceParams), CliError> {
    let events = read_tags_checked(tags)?;
    let params = extraction_params(context, window_ns, policy)?;
    let bits = validated(extract_bits(&events, &params))?;
    Ok((bits, params))
}

fn cmd_extract(context: &Context, args: &ExtractArgs) -> Result<(), CliError> {
    let (extraction, params) =
        extract_from_file(context, &args.tags, args.window_ns, args.policy)?;
    let mut outputs = Vec::new();
    match args.format {
        BitFormat::Ascii => {
            outputs.push(manifest::write_output(&args.out, &bitfile::encode_ascii(&extraction.bits))?);
        }
        BitFormat::Packed => {
            let (payload, sidecar) = bitfile::encode_packed(&extraction.bits);
            outputs.push(manifest::write_output(&args.out, &payload)?);
            outputs.push(manifest::write_output(&bitfile::sidecar_path(&args.out), sidecar.as_bytes())?);
        }
    }
    let report = validated(EntropyReport::from_bits(&extraction))?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.entropy.json", args.out.display())));
    let report_json = validated(serde_json::to_string_pretty(&report))?;
    outputs.push(manifest::write_output(&report_path, report_json.as_bytes())?);
    println!(
        "extracted {} bits ({:.1} bits/s, R_hat = {:.4}, H_min = {:.4}) -> {}",
        extraction.bits.len(),
        extraction.bit_rate_hz,
        report.r_hat,
        report.h_min,
        args.out.display()
    );
    context.record(
        "extract",
        serde_json::json!({
            "tags": args.tags.display().to_string(),
            "window_ps": params.window_ps,
            "policy": format!("{:?}", params.policy),
            "format": format!("{:?}", args.format),
        }),
        outputs,
    )
}

fn cmd_calibrate(context: &Context, args: &CalibrateArgs) -> Result<(), CliError> {
    let (bias_ratio, measured_from) = match (&args.source.tags, args.source.bias_ratio) {
        (Some(tags), None) => {
            let (extraction, _) = extract_from_file(context, tags, args.window_ns, args.policy)?;
            let report = validated(EntropyReport::from_bits(&extraction))?;
            (report.r_hat, Some(tags.display().to_string()))
        }
        (None, Some(r)) => (r, None),
        _ => unreachable!("clap group enforces exactly one source"),
    };
    let grey_levels = args.grey_levels.unwrap_or(context.config.splitter.grey_levels);
    let record = validated(calibrate(bias_ratio, grey_levels))?;
    let json = validated(serde_json::to_string_pretty(&record))?;
    let output = manifest::write_output(&args.out, json.as_bytes())?;
    println!(
        "calibrated R = {:.4}: M* = {:.6}, quantized {:.6}, predicted H_min = {:.4} -> {}",
        record.bias_ratio,
        record.depth_exact,
        record.depth_quantized,
        record.min_entropy_predicted,
        args.out.display()
    );
    context.record(
        "calibrate",
        serde_json::json!({
            "bias_ratio": bias_ratio,
            "grey_levels": grey_levels,
            "measured_from": measured_from,
        }),
        vec![output],
    )
}

fn cmd_test(context: &Context, args: &TestArgs) -> Result<(), CliError> {
    let bits = bitfile::read_bits(&args.bits, args.format)?;
    let alpha = args.alpha.unwrap_or(context.config.test.alpha);
    let suite = args.suite.unwrap_or(context.config.test.suite);
    let report = validated(run_suite(&bits, alpha, suite.into()))?;
    print!("{}", report.to_text_table());
    let mut outputs = Vec::new();
    if let Some(out) = &args.out {
        let json = validated(serde_json::to_string_pretty(&report))?;
        outputs.push(manifest::write_output(out, json.as_bytes())?);
    }
    context.record(
        "test",
        serde_json::json!({
            "bits": args.bits.display().to_string(),
            "alpha": alpha,
            "suite": format!("{suite:?}"),
            "n_bits": report.n_bits,
            "passed": report.suite_pass_count,
            "executed": report.executed_count(),
        }),
        outputs,
    )?;
    if report.all_executed_pass() {
        Ok(())
    } else {
        Err(CliError::TestFailure(format!(
            "{} of {} executed tests failed at alpha = {alpha}",
            report.failed_count(),
            report.executed_count(),
        )))
    }
}

fn cmd_oam_scan(context: &Context, args: &OamScanArgs) -> Result<(), CliError> {
    if args.l1_min > args.l1_max {
        return Err(CliError::Validation(format!(
            "l1-min {} exceeds l1-max {}",
            args.l1_min, args.l1_max
        )));
    }
    if context.config.projection.is_none() {
        return Err(CliError::Validation(
            "oam-scan needs a [projection] section in the configuration".into(),
        ));
    }
    let experiment = context.config.experiment(context.seed)?;
    // The scan range must be symmetric to hold every conserved (ℓ, −ℓ) pair
    // for both the B1 sweep and the B0 working point.
    let reach = args
        .l1_min
        .abs()
        .max(args.l1_max.abs())
        .max(args.l_b0.abs());
    let data = validated(measure_spiral_bandwidth(&experiment, -reach..=reach, args.dwell_s))?;
    let surface =
        validated(entropy_rate_surface(&data, args.l_b0..=args.l_b0, args.l1_min..=args.l1_max))?;
    let bandwidth_out = manifest::write_output(&args.out_bandwidth, data.to_csv().as_bytes())?;
    let surface_out =
        manifest::write_output(&args.out_surface, surface_to_csv(&surface).as_bytes())?;
    let best = surface.iter().max_by(|a, b| a.hmin.total_cmp(&b.hmin));
    if let Some(point) = best {
        println!(
            "scanned ℓ ∈ [{}, {}] at {} s/point: best H_min = {:.4} at l_B1 = {}",
            -reach, reach, args.dwell_s, point.hmin, point.l_b1
        );
    }
    context.record(
        "oam-scan",
        serde_json::json!({
            "l_b0": args.l_b0,
            "l1_min": args.l1_min,
            "l1_max": args.l1_max,
            "dwell_s": args.dwell_s,
            "seed": experiment.seed,
        }),
        vec![bandwidth_out, surface_out],
    )
}

fn cmd_figures(context: &Context, args: &FiguresArgs) -> Result<(), CliError> {
    if args.test_before.is_none()
        && args.calibration.is_none()
        && args.bandwidth.is_none()
        && args.surface.is_none()
    {
        return Err(CliError::Usage(
            "figures: provide at least one input artifact (see --help)".into(),
        ));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    let read = |path: &Path| -> Result<String, CliError> {
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    };
    let mut outputs = Vec::new();
    if let (Some(before), Some(after)) = (&args.test_before, &args.test_after) {
        let csv = figures::pvalue_comparison(&read(before)?, &read(after)?)?;
        outputs.push(manifest::write_output(
            &args.out_dir.join("test_pvalues.csv"),
            csv.as_bytes(),
        )?);
    }
    if let Some(calibration) = &args.calibration {
        let csv = figures::entropy_vs_depth(&read(calibration)?)?;
        outputs.push(manifest::write_output(
            &args.out_dir.join("entropy_vs_depth.csv"),
            csv.as_bytes(),
        )?);
    }
    if let Some(bandwidth) = &args.bandwidth {
        let csv = figures::bandwidth_diagonal(&read(bandwidth)?)?;
        outputs.push(manifest::write_output(
            &args.out_dir.join("spiral_bandwidth_diagonal.csv"),
            csv.as_bytes(),
        )?);
    }
    if let Some(surface) = &args.surface {
        let csv = figures::surface_slice(&read(surface)?, args.l_b0)?;
        outputs.push(manifest::write_output(
            &args.out_dir.join("entropy_vs_detuning.csv"),
            csv.as_bytes(),
        )?);
    }
    println!("wrote {} plot-data files to {}", outputs.len(), args.out_dir.display());
    context.record(
        "figures",
        serde_json::json!({ "out_dir": args.out_dir.display().to_string() }),
        outputs,
    )
}
