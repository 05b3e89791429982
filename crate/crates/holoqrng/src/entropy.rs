//! Information measures and their estimation from counted bits.
//!
//! The pipeline quantifies randomness three ways: self-information of a
//! single outcome, Shannon entropy (its expectation), and min-entropy (the
//! conservative bound set by the most probable outcome, which is what a
//! randomness consumer should budget against). `estimate_bias` turns raw
//! 0/1 counts into the bias ratio R = p0/p1 and a min-entropy estimate,
//! both with binomial standard errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coincidence::BitString;

/// Tolerance on Σp = 1 when validating a distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Invalid inputs to the entropy calculations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    /// Probabilities live in [0, 1].
    #[error("probability {value} outside [0, 1]")]
    InvalidProbability { value: f64 },
    /// Logarithm bases below 2 are not meaningful here.
    #[error("logarithm base must be an integer >= 2, got {base}")]
    InvalidBase { base: u32 },
    /// The entries of a distribution must sum to one.
    #[error("probabilities sum to {sum}, not 1 (tolerance {NORMALIZATION_TOL:e})")]
    Unnormalized { sum: f64 },
    /// A distribution needs at least one outcome.
    #[error("empty probability vector")]
    Empty,
    /// Bias estimation needs at least one count in each bin.
    #[error("degenerate counts n0={n0}, n1={n1}: both bins must be non-empty")]
    DegenerateCounts { n0: u64, n1: u64 },
}

/// Information content of one outcome of probability `p`, in base-`b` units:
/// −log_b(p). Certainty carries no information; `p = 0` returns the infinite
/// sentinel `f64::INFINITY` rather than an error, since it is the correct
/// limit ("an impossible event would be infinitely informative").
pub fn self_information(p: f64, base_b: u32) -> Result<f64, EntropyError> {
    if base_b < 2 {
        return Err(EntropyError::InvalidBase { base: base_b });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(EntropyError::InvalidProbability { value: p });
    }
    if p == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-p.ln() / (base_b as f64).ln())
}

/// A validated discrete probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Validates entries in [0, 1] and Σp = 1 within [`NORMALIZATION_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self, EntropyError> {
        if probs.is_empty() {
            return Err(EntropyError::Empty);
        }
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(EntropyError::InvalidProbability { value: p });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(EntropyError::Unnormalized { sum });
        }
        Ok(ProbabilityVector { probs })
    }

    /// Two-outcome distribution {p0, 1 − p0}.
    pub fn binary(p0: f64) -> Result<Self, EntropyError> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(EntropyError::InvalidProbability { value: p0 });
        }
        ProbabilityVector::new(vec![p0, 1.0 - p0])
    }

    /// Uniform distribution over `d` outcomes.
    pub fn uniform(d: usize) -> Result<Self, EntropyError> {
        if d == 0 {
            return Err(EntropyError::Empty);
        }
        ProbabilityVector::new(vec![1.0 / d as f64; d])
    }

    /// The validated entries.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = EntropyError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        ProbabilityVector::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(pv: ProbabilityVector) -> Self {
        pv.probs
    }
}

/// Shannon entropy −Σ pᵢ log₂ pᵢ in bits, with 0·log 0 := 0 by continuity.
pub fn shannon_entropy(pv: &ProbabilityVector) -> f64 {
    -pv.probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Min-entropy −log₂(maxᵢ pᵢ) in bits: the worst-case randomness per symbol,
/// which lower-bounds the Shannon entropy.
pub fn min_entropy(pv: &ProbabilityVector) -> f64 {
    let max = pv.probs.iter().cloned().fold(0.0f64, f64::max);
    // + 0.0 normalizes the -0.0 that -log2(1) produces on point masses.
    -max.log2() + 0.0
}

/// Bias ratio and min-entropy estimated from 0/1 counts, with standard
/// errors propagated from the binomial variance of p̂ = n0/(n0+n1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub n0: u64,
    pub n1: u64,
    /// R̂ = n0/n1.
    pub r_hat: f64,
    /// Standard error of R̂: σ_p / (1 − p̂)².
    pub r_sigma: f64,
    /// −log₂ max(p̂, 1 − p̂), in bits.
    pub hmin_hat: f64,
    /// Standard error of the min-entropy: σ_p / (max(p̂, 1−p̂) · ln 2).
    pub hmin_sigma: f64,
}

/// Estimates the bias of a bit string; see [`estimate_bias_from_counts`].
pub fn estimate_bias(bits: &BitString) -> Result<BiasEstimate, EntropyError> {
    let n1: u64 = bits.bits.iter().map(|&b| u64::from(b)).sum();
    let n0 = bits.bits.len() as u64 - n1;
    estimate_bias_from_counts(n0, n1)
}

/// Core bias estimator on raw counts. Both bins must be non-empty: a bit
/// value that never occurs leaves R and its error undefined.
pub fn estimate_bias_from_counts(n0: u64, n1: u64) -> Result<BiasEstimate, EntropyError> {
    if n0 == 0 || n1 == 0 {
        return Err(EntropyError::DegenerateCounts { n0, n1 });
    }
    let n = (n0 + n1) as f64;
    let p_hat = n0 as f64 / n;
    let sigma_p = (p_hat * (1.0 - p_hat) / n).sqrt();
    let p_max = p_hat.max(1.0 - p_hat);
    Ok(BiasEstimate {
        n0,
        n1,
        r_hat: n0 as f64 / n1 as f64,
        r_sigma: sigma_p / ((1.0 - p_hat) * (1.0 - p_hat)),
        hmin_hat: -p_max.log2(),
        hmin_sigma: sigma_p / (p_max * std::f64::consts::LN_2),
    })
}

/// The JSON entropy report emitted alongside extracted bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub n0: u64,
    pub n1: u64,
    #[serde(rename = "R_hat")]
    pub r_hat: f64,
    #[serde(rename = "R_sigma")]
    pub r_sigma: f64,
    #[serde(rename = "H_shannon")]
    pub h_shannon: f64,
    #[serde(rename = "H_min")]
    pub h_min: f64,
    #[serde(rename = "H_min_sigma")]
    pub h_min_sigma: f64,
}

impl EntropyReport {
    /// Builds the report from 0/1 counts.
    pub fn from_counts(n0: u64, n1: u64) -> Result<Self, EntropyError> {
        let est = estimate_bias_from_counts(n0, n1)?;
        let p_hat = n0 as f64 / (n0 + n1) as f64;
        let pv = ProbabilityVector::binary(p_hat)?;
        Ok(EntropyReport {
            n0,
            n1,
            r_hat: est.r_hat,
            r_sigma: est.r_sigma,
            h_shannon: shannon_entropy(&pv),
            h_min: est.hmin_hat,
            h_min_sigma: est.hmin_sigma,
        })
    }

    /// Builds the report from an extracted bit string.
    pub fn from_bits(bits: &BitString) -> Result<Self, EntropyError> {
        let n1: u64 = bits.bits.iter().map(|&b| u64::from(b)).sum();
        Self::from_counts(bits.bits.len() as u64 - n1, n1)
    }
}
