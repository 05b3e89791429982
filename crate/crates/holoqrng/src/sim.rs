//! Monte Carlo simulator producing time-tagged detection streams.
//!
//! Pairs are emitted by a homogeneous Poisson process. For each pair the
//! herald photon (arm A) survives its end-to-end efficiency or not; the
//! partner photon is routed toward B0/B1 by the splitter's conditional
//! probabilities (see [`crate::hologram::routing_probabilities`]), thinned by
//! any OAM projection acceptance on that arm, and then subjected to its own
//! arm efficiency. Detected events get Gaussian timing jitter (rounded to the
//! 1 ps clock), uncorrelated Poisson dark counts are injected per channel,
//! and the merged stream is emitted sorted.
//!
//! All randomness comes from one seeded counter-based generator, split into
//! an independent stream per purpose (emission times, routing, efficiencies,
//! jitter, darks), so a (config, seed) pair reproduces its stream exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hologram::{routing_probabilities, HologramError, SplitterConfig};
use crate::spdc::{SpectrumError, SpiralSpectrum};
use crate::tags::{Channel, TimeTagEvent};

/// Longest representable run: 2⁶⁴ ps is ≈ 2.1×10⁷ s, kept with margin.
pub const MAX_DURATION_S: f64 = 5.0e6;

/// Modal filtering applied to the splitter arms: each arm projects onto one
/// OAM index of the given source spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Source spectrum the projection weights are computed from.
    pub spectrum: SpiralSpectrum,
    /// Projection index on arm B0.
    pub l_b0: i32,
    /// Projection index on arm B1.
    pub l_b1: i32,
    /// Mode-filter crosstalk fraction (0 = ideal projection).
    pub crosstalk: f64,
}

/// Full description of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Mean pair emission rate of the source, in Hz.
    pub pair_rate_hz: f64,
    /// Simulated wall-clock span, in seconds.
    pub duration_s: f64,
    /// End-to-end herald efficiency (collection × coupling × detector).
    pub efficiency_a: f64,
    /// End-to-end efficiency of arm B0.
    pub efficiency_b0: f64,
    /// End-to-end efficiency of arm B1.
    pub efficiency_b1: f64,
    /// Dark count rate on the herald detector, in Hz.
    pub dark_rate_a_hz: f64,
    /// Dark count rate on detector B0, in Hz.
    pub dark_rate_b0_hz: f64,
    /// Dark count rate on detector B1, in Hz.
    pub dark_rate_b1_hz: f64,
    /// Gaussian 1σ timing spread per detection, in ps.
    pub jitter_ps: f64,
    /// Detector dead time, in ps (0 disables it).
    pub dead_time_ps: u64,
    /// Splitter bias and grating depths.
    pub splitter: SplitterConfig,
    /// Optional per-arm OAM projection.
    pub projection: Option<ProjectionConfig>,
    /// Root seed; everything the run draws derives from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// A desk-scale stand-in for the real apparatus: 10⁶ pairs/s with a 30%
    /// herald and 8% collection arms gives the ~24 kHz coincidence bit rate
    /// of the physical device, with its measured raw bias R = 0.8518 and
    /// both gratings at full depth (uncorrected).
    fn default() -> Self {
        ExperimentConfig {
            pair_rate_hz: 1.0e6,
            duration_s: 1.0,
            efficiency_a: 0.30,
            efficiency_b0: 0.08,
            efficiency_b1: 0.08,
            dark_rate_a_hz: 200.0,
            dark_rate_b0_hz: 200.0,
            dark_rate_b1_hz: 200.0,
            jitter_ps: 100.0,
            dead_time_ps: 0,
            splitter: SplitterConfig { bias_ratio: 0.8518, ..SplitterConfig::default() },
            projection: None,
            seed: 1,
        }
    }
}

/// Configuration failures for a simulated run.
#[derive(Debug, Error)]
pub enum SimError {
    /// Negative, NaN or infinite pair rate.
    #[error("pair rate must be finite and non-negative, got {0} Hz")]
    InvalidPairRate(f64),
    /// Non-positive or non-finite duration.
    #[error("duration must be positive and finite, got {0} s")]
    InvalidDuration(f64),
    /// The 64-bit picosecond clock cannot index runs this long.
    #[error("duration {0} s overflows the picosecond clock (max {MAX_DURATION_S:.0} s)")]
    DurationOverflow(f64),
    /// An efficiency outside [0, 1].
    #[error("{arm} efficiency must lie in [0, 1], got {value}")]
    InvalidEfficiency { arm: &'static str, value: f64 },
    /// Negative, NaN or infinite dark rate.
    #[error("{channel} dark rate must be finite and non-negative, got {value} Hz")]
    InvalidDarkRate { channel: &'static str, value: f64 },
    /// Negative, NaN or infinite jitter width.
    #[error("timing jitter must be finite and non-negative, got {0} ps")]
    InvalidJitter(f64),
    /// Bad splitter parameters.
    #[error(transparent)]
    Splitter(#[from] HologramError),
    /// Bad projection parameters (index out of range, crosstalk, ...).
    #[error(transparent)]
    Projection(#[from] SpectrumError),
}

impl ExperimentConfig {
    /// Checks every field against its physical range.
    pub fn validate(&self) -> Result<(), SimError> {
        if !self.pair_rate_hz.is_finite() || self.pair_rate_hz < 0.0 {
            return Err(SimError::InvalidPairRate(self.pair_rate_hz));
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(SimError::InvalidDuration(self.duration_s));
        }
        if self.duration_s > MAX_DURATION_S {
            return Err(SimError::DurationOverflow(self.duration_s));
        }
        for (arm, value) in [
            ("herald", self.efficiency_a),
            ("B0", self.efficiency_b0),
            ("B1", self.efficiency_b1),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SimError::InvalidEfficiency { arm, value });
            }
        }
        for (channel, value) in [
            ("A", self.dark_rate_a_hz),
            ("B0", self.dark_rate_b0_hz),
            ("B1", self.dark_rate_b1_hz),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::InvalidDarkRate { channel, value });
            }
        }
        if !self.jitter_ps.is_finite() || self.jitter_ps < 0.0 {
            return Err(SimError::InvalidJitter(self.jitter_ps));
        }
        self.splitter.validate()?;
        if let Some(projection) = &self.projection {
            // Evaluating the weights validates indices and crosstalk.
            projection.spectrum.marginal_projection_weight(projection.l_b0, projection.crosstalk)?;
            projection.spectrum.marginal_projection_weight(projection.l_b1, projection.crosstalk)?;
        }
        Ok(())
    }

    /// Run length on the picosecond clock.
    pub fn duration_ps(&self) -> u64 {
        (self.duration_s * 1e12).round() as u64
    }
}

// Independent sub-streams of the run's generator, one per random purpose, so
// that e.g. turning jitter off cannot shift the emission times.
const STREAM_PAIRS: u64 = 0;
const STREAM_ROUTING: u64 = 1;
const STREAM_EFF_A: u64 = 2;
const STREAM_EFF_B: u64 = 3;
const STREAM_JITTER: u64 = 4;
const STREAM_DARK_A: u64 = 5;
const STREAM_DARK_B0: u64 = 6;
const STREAM_DARK_B1: u64 = 7;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Bernoulli trial that consumes no randomness for the deterministic
/// probabilities 0 and 1 (unit-efficiency scans would otherwise burn one
/// draw per photon for a foregone conclusion).
fn survives(rng: &mut ChaCha8Rng, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.gen::<f64>() < p
    }
}

struct JitterSampler {
    normal: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    duration_ps: u64,
}

impl JitterSampler {
    /// True detection time → recorded timestamp: Gaussian spread, rounded to
    /// the 1 ps clock, clamped to the run window.
    fn stamp(&mut self, t_ps: u64) -> u64 {
        match &self.normal {
            None => t_ps,
            Some(normal) => {
                let shift = normal.sample(&mut self.rng).round();
                let shifted = if shift >= 0.0 {
                    t_ps.saturating_add(shift as u64)
                } else {
                    t_ps.saturating_sub(-shift as u64)
                };
                shifted.min(self.duration_ps)
            }
        }
    }
}

/// Simulates one run, returning the merged, sorted detection stream.
pub fn simulate(config: &ExperimentConfig) -> Result<Vec<TimeTagEvent>, SimError> {
    let (w0, w1) = match &config.projection {
        None => (1.0, 1.0),
        Some(p) => (
            p.spectrum.marginal_projection_weight(p.l_b0, p.crosstalk)?,
            p.spectrum.marginal_projection_weight(p.l_b1, p.crosstalk)?,
        ),
    };
    simulate_with_arm_weights(config, w0, w1)
}

/// Core generator with explicit projection acceptance per arm. The public
/// entry point derives (w0, w1) from the configured projection; spiral-
/// bandwidth scans drive this directly with joint projection weights.
pub(crate) fn simulate_with_arm_weights(
    config: &ExperimentConfig,
    w0: f64,
    w1: f64,
) -> Result<Vec<TimeTagEvent>, SimError> {
    config.validate()?;
    debug_assert!((0.0..=1.0).contains(&w0) && (0.0..=1.0).contains(&w1));

    let duration_ps = config.duration_ps();
    let (q0, q1) = routing_probabilities(&config.splitter)?;
    // Absolute per-pair probabilities of the partner photon reaching each
    // fibre: conditional routing × projection acceptance. A projection makes
    // these sum to less than one; the remainder is post-selected away.
    let accept_b0 = q0 * w0;
    let accept_b1 = q1 * w1;

    let expected = config.pair_rate_hz
        * config.duration_s
        * (config.efficiency_a + accept_b0 * config.efficiency_b0 + accept_b1 * config.efficiency_b1)
        + (config.dark_rate_a_hz + config.dark_rate_b0_hz + config.dark_rate_b1_hz)
            * config.duration_s;
    let mut events: Vec<TimeTagEvent> = Vec::with_capacity(expected as usize + 64);

    let mut jitter = JitterSampler {
        normal: if config.jitter_ps > 0.0 {
            Some(Normal::new(0.0, config.jitter_ps).expect("validated jitter"))
        } else {
            None
        },
        rng: stream_rng(config.seed, STREAM_JITTER),
        duration_ps,
    };

    if config.pair_rate_hz > 0.0 {
        let mut pairs_rng = stream_rng(config.seed, STREAM_PAIRS);
        let mut route_rng = stream_rng(config.seed, STREAM_ROUTING);
        let mut eff_a_rng = stream_rng(config.seed, STREAM_EFF_A);
        let mut eff_b_rng = stream_rng(config.seed, STREAM_EFF_B);
        let gap = Exp::new(config.pair_rate_hz).expect("validated rate");

        // Emission times accumulate on the integer picosecond clock, so long
        // runs cannot lose monotonicity to floating-point absorption.
        let mut t_ps = 0u64;
        loop {
            let gap_ps = gap.sample(&mut pairs_rng) * 1e12;
            t_ps = t_ps.saturating_add(gap_ps.round() as u64);
            if t_ps > duration_ps {
                break;
            }
            if survives(&mut eff_a_rng, config.efficiency_a) {
                let ts = jitter.stamp(t_ps);
                events.push(TimeTagEvent::new(Channel::A, ts));
            }
            // One uniform decides routing and projection survival together.
            let u: f64 = route_rng.gen();
            let (channel, efficiency) = if u < accept_b0 {
                (Channel::B0, config.efficiency_b0)
            } else if u < accept_b0 + accept_b1 {
                (Channel::B1, config.efficiency_b1)
            } else {
                continue; // diffracted away or projected out
            };
            if survives(&mut eff_b_rng, efficiency) {
                let ts = jitter.stamp(t_ps);
                events.push(TimeTagEvent::new(channel, ts));
            }
        }
    }

    for (channel, rate, stream) in [
        (Channel::A, config.dark_rate_a_hz, STREAM_DARK_A),
        (Channel::B0, config.dark_rate_b0_hz, STREAM_DARK_B0),
        (Channel::B1, config.dark_rate_b1_hz, STREAM_DARK_B1),
    ] {
        if rate <= 0.0 {
            continue;
        }
        let mut rng = stream_rng(config.seed, stream);
        let gap = Exp::new(rate).expect("validated dark rate");
        let mut t_ps = 0u64;
        loop {
            t_ps = t_ps.saturating_add((gap.sample(&mut rng) * 1e12).round() as u64);
            if t_ps > duration_ps {
                break;
            }
            events.push(TimeTagEvent::new(channel, t_ps));
        }
    }

    events.sort_unstable();
    if config.dead_time_ps > 0 {
        apply_dead_time(&mut events, config.dead_time_ps);
    }
    Ok(events)
}

/// Drops events arriving within the dead time of the previous accepted event
/// on the same channel. Requires a sorted stream.
fn apply_dead_time(events: &mut Vec<TimeTagEvent>, dead_time_ps: u64) {
    let mut last_accepted: [Option<u64>; 3] = [None; 3];
    events.retain(|event| {
        let slot = event.channel.code() as usize;
        if let Some(prev) = last_accepted[slot] {
            if event.timestamp_ps - prev < dead_time_ps {
                return false;
            }
        }
        last_accepted[slot] = Some(event.timestamp_ps);
        true
    });
}
