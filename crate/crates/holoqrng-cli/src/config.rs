//! TOML run configuration: a sectioned key = value file whose physical
//! defaults mirror the documented instrument (25 ns window, 256 grey levels,
//! α = 0.01). Unknown keys are rejected so a typo cannot silently fall back
//! to a default.

use holoqrng::coincidence::{AmbiguityPolicy, CoincidenceParams};
use holoqrng::hologram::SplitterConfig;
use holoqrng::sim::{ExperimentConfig, ProjectionConfig};
use holoqrng::spdc::{gaussian_spectrum, DEFAULT_L_MAX, DEFAULT_SIGMA};
use holoqrng::stattests::Suite;
use serde::Deserialize;

use crate::CliError;

/// Whole-file schema. Every section is optional and defaults to the
/// documented instrument values; `[projection]` additionally defaults to
/// absent (plain path-encoded generation, no modal filtering).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub source: SourceSection,
    pub detection: DetectionSection,
    pub splitter: SplitterSection,
    pub projection: Option<ProjectionSection>,
    pub coincidence: CoincidenceSection,
    pub test: TestSection,
}

/// `[source]`: pair emission and run length.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub pair_rate_hz: f64,
    pub duration_s: f64,
    pub seed: u64,
}

/// `[detection]`: per-channel efficiencies, noise, and timing.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub efficiency_a: f64,
    pub efficiency_b0: f64,
    pub efficiency_b1: f64,
    pub dark_rate_a_hz: f64,
    pub dark_rate_b0_hz: f64,
    pub dark_rate_b1_hz: f64,
    pub jitter_ps: f64,
    pub dead_time_ps: u64,
}

/// `[splitter]`: raw bias and grating depths.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitterSection {
    pub bias_ratio: f64,
    pub depth_m0: f64,
    pub depth_m1: f64,
    pub grey_levels: u32,
}

/// `[projection]`: optional OAM filtering on the B arms.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionSection {
    pub sigma: f64,
    pub l_max: i32,
    pub l_b0: i32,
    pub l_b1: i32,
    pub crosstalk: f64,
}

/// `[coincidence]`: window and ambiguity policy for bit extraction.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoincidenceSection {
    pub window_ns: f64,
    pub policy: PolicyName,
}

/// `[test]`: statistical suite selection.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestSection {
    pub alpha: f64,
    pub suite: SuiteName,
}

/// CLI/config spelling of the ambiguity policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    DiscardAmbiguous,
    FirstMatch,
}

impl From<PolicyName> for AmbiguityPolicy {
    fn from(name: PolicyName) -> Self {
        match name {
            PolicyName::DiscardAmbiguous => AmbiguityPolicy::DiscardAmbiguous,
            PolicyName::FirstMatch => AmbiguityPolicy::FirstMatch,
        }
    }
}

/// CLI/config spelling of the suite selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Core,
    Full,
}

impl From<SuiteName> for Suite {
    fn from(name: SuiteName) -> Self {
        match name {
            SuiteName::Core => Suite::Core,
            SuiteName::Full => Suite::Full,
        }
    }
}

impl Default for SourceSection {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        SourceSection { pair_rate_hz: d.pair_rate_hz, duration_s: d.duration_s, seed: d.seed }
    }
}

impl Default for DetectionSection {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        DetectionSection {
            efficiency_a: d.efficiency_a,
            efficiency_b0: d.efficiency_b0,
            efficiency_b1: d.efficiency_b1,
            dark_rate_a_hz: d.dark_rate_a_hz,
            dark_rate_b0_hz: d.dark_rate_b0_hz,
            dark_rate_b1_hz: d.dark_rate_b1_hz,
            jitter_ps: d.jitter_ps,
            dead_time_ps: d.dead_time_ps,
        }
    }
}

impl Default for SplitterSection {
    fn default() -> Self {
        let d = ExperimentConfig::default().splitter;
        SplitterSection {
            bias_ratio: d.bias_ratio,
            depth_m0: d.depth_m0,
            depth_m1: d.depth_m1,
            grey_levels: d.grey_levels,
        }
    }
}

impl Default for ProjectionSection {
    fn default() -> Self {
        ProjectionSection { sigma: DEFAULT_SIGMA, l_max: DEFAULT_L_MAX, l_b0: 0, l_b1: 0, crosstalk: 0.0 }
    }
}

impl Default for CoincidenceSection {
    fn default() -> Self {
        CoincidenceSection { window_ns: 25.0, policy: PolicyName::DiscardAmbiguous }
    }
}

impl Default for TestSection {
    fn default() -> Self {
        TestSection { alpha: 0.01, suite: SuiteName::Core }
    }
}

impl RunConfig {
    /// Parses a TOML document, rejecting unknown keys.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Builds the simulator configuration, with `seed` overriding the file.
    pub fn experiment(&self, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
        let projection = match &self.projection {
            None => None,
            Some(p) => Some(ProjectionConfig {
                spectrum: gaussian_spectrum(p.sigma, p.l_max)
                    .map_err(|e| CliError::Validation(format!("projection: {e}")))?,
                l_b0: p.l_b0,
                l_b1: p.l_b1,
                crosstalk: p.crosstalk,
            }),
        };
        Ok(ExperimentConfig {
            pair_rate_hz: self.source.pair_rate_hz,
            duration_s: self.source.duration_s,
            efficiency_a: self.detection.efficiency_a,
            efficiency_b0: self.detection.efficiency_b0,
            efficiency_b1: self.detection.efficiency_b1,
            dark_rate_a_hz: self.detection.dark_rate_a_hz,
            dark_rate_b0_hz: self.detection.dark_rate_b0_hz,
            dark_rate_b1_hz: self.detection.dark_rate_b1_hz,
            jitter_ps: self.detection.jitter_ps,
            dead_time_ps: self.detection.dead_time_ps,
            splitter: SplitterConfig {
                bias_ratio: self.splitter.bias_ratio,
                depth_m0: self.splitter.depth_m0,
                depth_m1: self.splitter.depth_m1,
                grey_levels: self.splitter.grey_levels,
            },
            projection,
            seed: seed.unwrap_or(self.source.seed),
        })
    }

    /// Extraction parameters from the `[coincidence]` section.
    pub fn coincidence_params(&self) -> Result<CoincidenceParams, CliError> {
        Ok(CoincidenceParams {
            window_ps: window_ns_to_ps(self.coincidence.window_ns)?,
            policy: self.coincidence.policy.into(),
        })
    }
}

/// Converts a nanosecond window to integer picoseconds.
pub fn window_ns_to_ps(window_ns: f64) -> Result<u64, CliError> {
    if !window_ns.is_finite() || window_ns <= 0.0 || window_ns > 1.0e12 {
        return Err(CliError::Validation(format!("window_ns must be positive, got {window_ns}")));
    }
    Ok((window_ns * 1000.0).round() as u64)
}
