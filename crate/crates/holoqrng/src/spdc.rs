//! Orbital-angular-momentum spiral spectrum of the photon-pair source.
//!
//! Spontaneous parametric down-conversion with a Gaussian pump produces a
//! two-photon state that, restricted to the azimuthal degree of freedom, is a
//! superposition Σ_ℓ C_ℓ |ℓ⟩_A |−ℓ⟩_B: the signal and idler carry equal and
//! opposite OAM. This module represents |C_ℓ|² as a discrete probability
//! spectrum over ℓ ∈ [−l_max, +l_max] and answers the two questions the rest
//! of the pipeline needs:
//!
//! * with what probability does a joint projection onto |ℓ_A⟩|ℓ_B⟩ fire, and
//! * what fraction of pairs survives projecting one arm alone onto |ℓ_B⟩?
//!
//! The spectrum shape is a normalized Gaussian in ℓ, which is what measured
//! spiral bandwidths resemble; an optional crosstalk term smears the ideal
//! anti-diagonal δ(ℓ_A, −ℓ_B) with a width-one Gaussian in ℓ_A + ℓ_B to
//! account for imperfect mode projection. The radial index is taken as p = 0
//! throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard deviation (in OAM index units) of the default source spectrum,
/// chosen so the full width at half maximum is 19 modes:
/// σ = 19 / (2·√(2 ln 2)).
pub const DEFAULT_SIGMA: f64 = 8.068_557_102_736_181;

/// Default spectrum cutoff. Six standard deviations of the default σ is
/// ≈ 48.4, so ±50 keeps the truncated mass below 1e−9.
pub const DEFAULT_L_MAX: i32 = 50;

/// Normalizer of the width-one crosstalk kernel: Σ_{k∈ℤ} exp(−k²/2).
/// (Within f64 precision the tail beyond |k| = 10 is zero.)
const CROSSTALK_NORM: f64 = 2.506_628_288_042_905_5;

/// Everything that can go wrong constructing or querying a spectrum.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    /// The Gaussian width must be a positive finite number.
    #[error("spectrum sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    /// The cutoff truncates too much probability mass.
    #[error("l_max = {l_max} truncates the spectrum; need l_max >= 6*sigma ({required:.1})")]
    Truncated { l_max: i32, required: f64 },
    /// A projection index fell outside [−l_max, +l_max].
    #[error("OAM index {l} outside spectrum range [-{l_max}, {l_max}]")]
    IndexOutOfRange { l: i32, l_max: i32 },
    /// Crosstalk is a probability-like mixing fraction.
    #[error("crosstalk must lie in [0, 1), got {0}")]
    InvalidCrosstalk(f64),
    /// A supplied weight was negative, NaN or infinite.
    #[error("weight for OAM mode {l} must be finite and non-negative, got {value}")]
    InvalidWeight { l: i32, value: f64 },
    /// A weight table did not cover a symmetric contiguous range.
    #[error("expected {expected} weights covering a symmetric OAM range, got {got}")]
    WrongWeightCount { expected: usize, got: usize },
    /// All weights were zero, so the table cannot be normalized.
    #[error("spectrum weights sum to zero")]
    ZeroMass,
    /// A text table failed to parse.
    #[error("spectrum text line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Discrete OAM probability spectrum |C_ℓ|² of the pair source.
///
/// Weights are stored for ℓ = −l_max ..= +l_max and always sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralSpectrum {
    l_max: i32,
    sigma: f64,
    weights: Vec<f64>,
}

/// Width-one Gaussian kernel over the OAM sum, normalized over the integers.
/// Used to smear the anti-diagonal when projection crosstalk is nonzero.
fn crosstalk_kernel(k: i32) -> f64 {
    let k = f64::from(k);
    (-0.5 * k * k).exp() / CROSSTALK_NORM
}

/// Builds the Gaussian spiral spectrum w_ℓ ∝ exp(−ℓ²/(2σ²)) over
/// ℓ ∈ [−l_max, +l_max], normalized to unit sum.
///
/// The cutoff must satisfy `l_max ≥ 6σ` so that the discarded tail mass is
/// negligible (< 1e−6).
pub fn gaussian_spectrum(sigma: f64, l_max: i32) -> Result<SpiralSpectrum, SpectrumError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(SpectrumError::InvalidSigma(sigma));
    }
    let required = 6.0 * sigma;
    if l_max < 1 || (f64::from(l_max)) < required {
        return Err(SpectrumError::Truncated { l_max, required });
    }
    let two_sigma_sq = 2.0 * sigma * sigma;
    let weights: Vec<f64> = (-l_max..=l_max)
        .map(|l| {
            let l = f64::from(l);
            (-l * l / two_sigma_sq).exp()
        })
        .collect();
    let mut spectrum = SpiralSpectrum { l_max, sigma, weights };
    spectrum.normalize();
    Ok(spectrum)
}

impl SpiralSpectrum {
    /// Builds a spectrum from an explicit weight table covering
    /// ℓ = −l_max ..= +l_max (useful for externally measured spiral
    /// bandwidths). Weights are validated and normalized; the stored sigma is
    /// the RMS width of the resulting distribution.
    pub fn from_weights(l_max: i32, weights: &[f64]) -> Result<Self, SpectrumError> {
        let expected = (2 * l_max + 1).max(0) as usize;
        if l_max < 0 || weights.len() != expected {
            return Err(SpectrumError::WrongWeightCount { expected, got: weights.len() });
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(SpectrumError::InvalidWeight { l: i as i32 - l_max, value: w });
            }
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(SpectrumError::ZeroMass);
        }
        let mut spectrum = SpiralSpectrum { l_max, sigma: 0.0, weights: weights.to_vec() };
        spectrum.normalize();
        spectrum.sigma = spectrum.rms_width();
        Ok(spectrum)
    }

    /// The default source spectrum: FWHM of 19 modes, cutoff ±50.
    pub fn default_source() -> Self {
        gaussian_spectrum(DEFAULT_SIGMA, DEFAULT_L_MAX)
            .expect("default spectrum parameters are valid")
    }

    fn normalize(&mut self) {
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    /// RMS width √(Σ w_ℓ ℓ²) of the stored distribution.
    fn rms_width(&self) -> f64 {
        self.modes().map(|(l, w)| w * f64::from(l) * f64::from(l)).sum::<f64>().sqrt()
    }

    /// Spectrum cutoff: weights cover ℓ ∈ [−l_max, +l_max].
    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    /// Width parameter: the generating σ for Gaussian spectra, otherwise the
    /// RMS width of the supplied table.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn index(&self, l: i32) -> Result<usize, SpectrumError> {
        if l.abs() > self.l_max {
            Err(SpectrumError::IndexOutOfRange { l, l_max: self.l_max })
        } else {
            Ok((l + self.l_max) as usize)
        }
    }

    /// Probability weight w_ℓ = |C_ℓ|² of the pair carrying OAM ±ℓ.
    pub fn weight(&self, l: i32) -> Result<f64, SpectrumError> {
        Ok(self.weights[self.index(l)?])
    }

    /// Iterates over (ℓ, w_ℓ) in ascending ℓ order.
    pub fn modes(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.weights.iter().enumerate().map(|(i, &w)| (i as i32 - self.l_max, w))
    }

    /// Probability that a joint projection of arm A onto |ℓ_A⟩ and arm B onto
    /// |ℓ_B⟩ detects the pair.
    ///
    /// For `crosstalk = 0` this is w_{ℓ_B}·δ(ℓ_A, −ℓ_B): only anti-correlated
    /// projections fire. A nonzero crosstalk fraction replaces that much of
    /// the delta with a width-one Gaussian in ℓ_A + ℓ_B, broadening the
    /// anti-diagonal the way imperfect mode filters do.
    pub fn joint_projection_probability(
        &self,
        l_a: i32,
        l_b: i32,
        crosstalk: f64,
    ) -> Result<f64, SpectrumError> {
        if !crosstalk.is_finite() || !(0.0..1.0).contains(&crosstalk) {
            return Err(SpectrumError::InvalidCrosstalk(crosstalk));
        }
        self.index(l_a)?;
        let w = self.weight(l_b)?;
        let delta = if l_a == -l_b { 1.0 } else { 0.0 };
        Ok(w * ((1.0 - crosstalk) * delta + crosstalk * crosstalk_kernel(l_a + l_b)))
    }

    /// Probability that the pair survives projecting arm B alone onto |ℓ_B⟩,
    /// with arm A traced out (summed over every in-range ℓ_A).
    ///
    /// For `crosstalk = 0` this equals w_{ℓ_B} exactly; for nonzero crosstalk
    /// it differs only by the tail of the smearing kernel that leaks past the
    /// spectrum cutoff.
    pub fn marginal_projection_weight(&self, l_b: i32, crosstalk: f64) -> Result<f64, SpectrumError> {
        if !crosstalk.is_finite() || !(0.0..1.0).contains(&crosstalk) {
            return Err(SpectrumError::InvalidCrosstalk(crosstalk));
        }
        let w = self.weight(l_b)?;
        if crosstalk == 0.0 {
            return Ok(w);
        }
        // Σ_{l_A} [(1−xt)·δ + xt·g(l_A + l_B)] over the in-range herald modes.
        let kernel_mass: f64 = (-self.l_max..=self.l_max)
            .map(|l_a| crosstalk_kernel(l_a + l_b))
            .sum();
        Ok(w * ((1.0 - crosstalk) + crosstalk * kernel_mass))
    }

    /// Full width at half maximum of the weight profile, in index units,
    /// located by linear interpolation between the modes that bracket the
    /// half-maximum crossing.
    pub fn fwhm(&self) -> f64 {
        let half = self.weights[(self.l_max) as usize] / 2.0;
        let mut crossing = f64::from(self.l_max);
        for l in 0..self.l_max {
            let w_lo = self.weights[(l + self.l_max) as usize];
            let w_hi = self.weights[(l + 1 + self.l_max) as usize];
            if w_lo >= half && w_hi < half {
                crossing = f64::from(l) + (w_lo - half) / (w_lo - w_hi);
                break;
            }
        }
        2.0 * crossing
    }

    /// Serializes the spectrum as a two-column text table (`ℓ<TAB>weight`,
    /// one mode per line). Weights are written with enough digits to
    /// round-trip exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (l, w) in self.modes() {
            out.push_str(&format!("{l}\t{w:e}\n"));
        }
        out
    }

    /// Parses a two-column text table as written by [`Self::to_text`].
    /// Blank lines and lines starting with `#` are ignored. The modes must
    /// cover a contiguous symmetric range −l_max ..= +l_max in ascending
    /// order; weights are normalized on import.
    pub fn from_text(text: &str) -> Result<Self, SpectrumError> {
        let mut entries: Vec<(i32, f64)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let l: i32 = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|e| SpectrumError::Parse { line, reason: format!("bad OAM index: {e}") })?;
            let w: f64 = fields
                .next()
                .ok_or_else(|| SpectrumError::Parse { line, reason: "missing weight column".into() })?
                .parse()
                .map_err(|e| SpectrumError::Parse { line, reason: format!("bad weight: {e}") })?;
            if fields.next().is_some() {
                return Err(SpectrumError::Parse { line, reason: "expected exactly two columns".into() });
            }
            entries.push((l, w));
        }
        if entries.is_empty() {
            return Err(SpectrumError::Parse { line: 0, reason: "empty spectrum table".into() });
        }
        let l_max = entries.last().unwrap().0;
        for (k, &(l, _)) in entries.iter().enumerate() {
            if l != k as i32 - l_max {
                return Err(SpectrumError::Parse {
                    line: 0,
                    reason: format!("modes must run contiguously from {} to {l_max}, found {l}", -l_max),
                });
            }
        }
        let weights: Vec<f64> = entries.iter().map(|&(_, w)| w).collect();
        Self::from_weights(l_max, &weights)
    }
}
