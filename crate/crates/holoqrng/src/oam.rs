//! Orbital-angular-momentum projection experiments.
//!
//! The pair source emits anti-correlated OAM modes, so projecting the two
//! splitter arms onto chosen indices (ℓ_B0, ℓ_B1) turns the modal weight
//! profile into a tunable bit bias: each arm's coincidence rate scales with
//! the weight of its projected mode. This module orchestrates three
//! experiments on top of the simulator:
//!
//! * a spiral-bandwidth scan — coincidence counts versus (ℓ_A, ℓ_B) per arm,
//!   mapping the source's modal profile;
//! * conditional min-entropy and normalized bit-rate surfaces over projection
//!   pairs, derived from those counts;
//! * entropy tailoring — choosing the ℓ_B1 whose predicted bias is closest
//!   to a requested zero/one ratio.
//!
//! The projection model is heralded post-selection: projecting arm B_i onto
//! ℓ multiplies that arm's routing probability by the corresponding modal
//! weight. The heralding arm itself is collected without a modal filter, so
//! its mode sums happen analytically; the scanned ℓ_A axis exists to
//! reproduce the scanned presentation of the joint profile. Projections are
//! integer-index only.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coincidence::{extract_bits, CoincidenceError, CoincidenceParams};
use crate::sim::{simulate_with_arm_weights, ExperimentConfig, SimError};
use crate::spdc::{SpectrumError, SpiralSpectrum};

/// Failures of the projection experiments.
#[derive(Debug, Error)]
pub enum OamError {
    /// The experiment config carries no projection block, so there is no
    /// spectrum to scan.
    #[error("experiment config has no projection: a source spectrum is required")]
    MissingProjection,
    /// Scan range endpoints in the wrong order.
    #[error("empty projection range: {lo} ..= {hi}")]
    EmptyRange { lo: i32, hi: i32 },
    /// Dwell must be a finite, non-negative duration.
    #[error("dwell must be finite and non-negative, got {0} s")]
    InvalidDwell(f64),
    /// A projection index outside the scanned grid.
    #[error("projection index {l} outside the scanned range {lo} ..= {hi}")]
    OutsideScan { l: i32, lo: i32, hi: i32 },
    /// No counts to normalize: the requested pair saw nothing.
    #[error("zero combined counts for (l_B0 = {l_b0}, l_B1 = {l_b1}): cannot normalize")]
    DegenerateCounts { l_b0: i32, l_b1: i32 },
    /// Both modal weights vanish, so the conditional bias is undefined.
    #[error("modal weights at l_B0 = {l_b0} and l_B1 = {l_b1} are both zero")]
    DegenerateWeights { l_b0: i32, l_b1: i32 },
    /// The requested bias cannot be produced by any in-range projection.
    #[error(
        "target p0 = {target} is unachievable: projections in range reach \
         [{achievable_min:.6}, {achievable_max:.6}]"
    )]
    UnachievableTarget { target: f64, achievable_min: f64, achievable_max: f64 },
    /// Target bias outside the open unit interval.
    #[error("target p0 must lie strictly between 0 and 1, got {0}")]
    InvalidTarget(f64),
    /// Propagated spectrum failure (index out of range, bad crosstalk, ...).
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    /// Propagated simulation failure.
    #[error(transparent)]
    Sim(#[from] SimError),
    /// Propagated coincidence-extraction failure.
    #[error(transparent)]
    Coincidence(#[from] CoincidenceError),
}

/// The two splitter output arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    B0,
    B1,
}

impl Arm {
    fn index(self) -> usize {
        match self {
            Arm::B0 => 0,
            Arm::B1 => 1,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Arm::B0 => "B0",
            Arm::B1 => "B1",
        }
    }
}

/// Coincidence counts from a spiral-bandwidth scan: for each arm and each
/// projection pair (ℓ_B, ℓ_A) on a square grid, the number of herald
/// coincidences accumulated over one dwell. The grid is rectangular by
/// construction and counts are unsigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralBandwidthData {
    l_lo: i32,
    l_hi: i32,
    acquisition_s: f64,
    /// Row-major per arm: `counts[arm][l_b_offset * width + l_a_offset]`.
    counts: [Vec<u64>; 2],
}

impl SpiralBandwidthData {
    /// The scanned projection range (both axes, both arms).
    pub fn l_range(&self) -> RangeInclusive<i32> {
        self.l_lo..=self.l_hi
    }

    /// Dwell per grid point, in seconds.
    pub fn acquisition_s(&self) -> f64 {
        self.acquisition_s
    }

    fn width(&self) -> usize {
        (self.l_hi - self.l_lo + 1) as usize
    }

    fn offset(&self, l: i32) -> Result<usize, OamError> {
        if l < self.l_lo || l > self.l_hi {
            Err(OamError::OutsideScan { l, lo: self.l_lo, hi: self.l_hi })
        } else {
            Ok((l - self.l_lo) as usize)
        }
    }

    /// Coincidence count for one grid cell.
    pub fn count(&self, arm: Arm, l_b: i32, l_a: i32) -> Result<u64, OamError> {
        let row = self.offset(l_b)?;
        let col = self.offset(l_a)?;
        Ok(self.counts[arm.index()][row * self.width() + col])
    }

    /// Total coincidences for one arm's projection, summed over the heralding
    /// axis — the modal singles curve the conditional bias is built from.
    pub fn arm_total(&self, arm: Arm, l_b: i32) -> Result<u64, OamError> {
        let row = self.offset(l_b)?;
        let width = self.width();
        Ok(self.counts[arm.index()][row * width..(row + 1) * width].iter().sum())
    }

    /// Renders the grid as CSV with columns `arm,l_B,l_A,counts,normalized`.
    /// Normalization is per arm (each arm's peak maps to 1), so the two maps
    /// stay comparable even when the splitter feeds them unevenly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arm,l_B,l_A,counts,normalized\n");
        for arm in [Arm::B0, Arm::B1] {
            let peak = self.counts[arm.index()].iter().copied().max().unwrap_or(0).max(1) as f64;
            for l_b in self.l_range() {
                for l_a in self.l_range() {
                    let count = self.count(arm, l_b, l_a).expect("in-range by construction");
                    let _ = writeln!(
                        out,
                        "{},{l_b},{l_a},{count},{:.6}",
                        arm.label(),
                        count as f64 / peak
                    );
                }
            }
        }
        out
    }
}

/// One cell of the entropy/rate surface over projection pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OamSurfacePoint {
    pub l_b0: i32,
    pub l_b1: i32,
    /// Conditional probability of a 0 bit given this projection pair.
    pub p0_given: f64,
    /// Min-entropy of the conditional bit, −log₂ max(p0, 1 − p0) ≤ 1.
    pub hmin: f64,
    /// Pair coincidence sum relative to the densest scanned pair, in [0, 1].
    pub normalized_rate: f64,
}

/// SplitMix64 of (root, index): decorrelates neighbouring grid points while
/// keeping the whole scan a pure function of the root seed.
fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the spiral-bandwidth scan: for each arm and each (ℓ_B, ℓ_A) pair in
/// `l_range`, simulates one dwell with the joint projection weight scaling
/// that arm's routing probability (the other arm is shuttered) and records
/// the arm's coincidence count under the default 25 ns matching window.
///
/// The config must carry a projection block — its spectrum and crosstalk
/// drive the weights; its ℓ indices are ignored in favour of the scan.
/// Points run in parallel with per-point seeds derived from `config.seed`,
/// so the grid is deterministic and independent of thread scheduling. A zero
/// dwell yields an all-zero grid without simulating.
pub fn measure_spiral_bandwidth(
    config: &ExperimentConfig,
    l_range: RangeInclusive<i32>,
    dwell_s: f64,
) -> Result<SpiralBandwidthData, OamError> {
    let projection = config.projection.as_ref().ok_or(OamError::MissingProjection)?;
    let spectrum = &projection.spectrum;
    let crosstalk = projection.crosstalk;
    let (lo, hi) = (*l_range.start(), *l_range.end());
    if lo > hi {
        return Err(OamError::EmptyRange { lo, hi });
    }
    // Both endpoints must be valid projection indices for the spectrum.
    spectrum.weight(lo)?;
    spectrum.weight(hi)?;
    if !dwell_s.is_finite() || dwell_s < 0.0 {
        return Err(OamError::InvalidDwell(dwell_s));
    }

    let width = (hi - lo + 1) as usize;
    if dwell_s == 0.0 {
        return Ok(SpiralBandwidthData {
            l_lo: lo,
            l_hi: hi,
            acquisition_s: 0.0,
            counts: [vec![0; width * width], vec![0; width * width]],
        });
    }
    config.validate().map_err(OamError::Sim)?;

    let grid: Vec<(usize, Arm, i32, i32)> = [Arm::B0, Arm::B1]
        .into_iter()
        .flat_map(|arm| {
            (lo..=hi).flat_map(move |l_b| (lo..=hi).map(move |l_a| (arm, l_b, l_a)))
        })
        .enumerate()
        .map(|(index, (arm, l_b, l_a))| (index, arm, l_b, l_a))
        .collect();

    let counts: Vec<u64> = grid
        .par_iter()
        .map(|&(index, arm, l_b, l_a)| -> Result<u64, OamError> {
            let weight = spectrum.joint_projection_probability(l_a, l_b, crosstalk)?;
            let scanned_dark = match arm {
                Arm::B0 => config.dark_rate_b0_hz,
                Arm::B1 => config.dark_rate_b1_hz,
            };
            // A dead cell with a silent detector records nothing; skip the
            // simulation (with crosstalk 0 this reduces the scan from O(n²)
            // runs to the populated anti-diagonal).
            if weight == 0.0 && scanned_dark == 0.0 {
                return Ok(0);
            }
            let mut point = config.clone();
            point.duration_s = dwell_s;
            point.seed = derive_seed(config.seed, index as u64);
            point.projection = None; // weights are injected explicitly below
            let (w0, w1) = match arm {
                Arm::B0 => (weight, 0.0),
                Arm::B1 => (0.0, weight),
            };
            let events = simulate_with_arm_weights(&point, w0, w1)?;
            let bits = extract_bits(&events, &CoincidenceParams::default())?;
            Ok(match arm {
                Arm::B0 => bits.n_coincidences_0,
                Arm::B1 => bits.n_coincidences_1,
            })
        })
        .collect::<Result<Vec<u64>, OamError>>()?;

    let cells = width * width;
    Ok(SpiralBandwidthData {
        l_lo: lo,
        l_hi: hi,
        acquisition_s: dwell_s,
        counts: [counts[..cells].to_vec(), counts[cells..].to_vec()],
    })
}

/// Conditional bit probabilities for one projection pair, from scan counts:
/// p0 ∝ Σ_{ℓ_A} counts(B0, ℓ_B0, ℓ_A) and p1 ∝ Σ_{ℓ_A} counts(B1, ℓ_B1, ℓ_A),
/// normalized by their combined sum.
pub fn conditional_probabilities(
    data: &SpiralBandwidthData,
    l_b0: i32,
    l_b1: i32,
) -> Result<(f64, f64), OamError> {
    let s0 = data.arm_total(Arm::B0, l_b0)?;
    let s1 = data.arm_total(Arm::B1, l_b1)?;
    let total = s0 + s1;
    if total == 0 {
        return Err(OamError::DegenerateCounts { l_b0, l_b1 });
    }
    let p0 = s0 as f64 / total as f64;
    Ok((p0, 1.0 - p0))
}

fn binary_min_entropy(p0: f64) -> f64 {
    // + 0.0 normalizes the -0.0 that -log2(1) produces at p0 ∈ {0, 1}.
    -p0.max(1.0 - p0).log2() + 0.0
}

/// Builds the min-entropy / normalized-rate surface over projection pairs.
/// The rate of a pair is its combined coincidence sum divided by the largest
/// sum in the scanned rectangle, so the densest pair sits at exactly 1.
pub fn entropy_rate_surface(
    data: &SpiralBandwidthData,
    l_b0_range: RangeInclusive<i32>,
    l_b1_range: RangeInclusive<i32>,
) -> Result<Vec<OamSurfacePoint>, OamError> {
    let mut sums: Vec<(i32, i32, f64, u64)> = Vec::new();
    for l_b0 in l_b0_range.clone() {
        let s0 = data.arm_total(Arm::B0, l_b0)?;
        for l_b1 in l_b1_range.clone() {
            let s1 = data.arm_total(Arm::B1, l_b1)?;
            let (p0, _) = conditional_probabilities(data, l_b0, l_b1)?;
            sums.push((l_b0, l_b1, p0, s0 + s1));
        }
    }
    let peak = sums.iter().map(|&(_, _, _, s)| s).max().unwrap_or(0).max(1) as f64;
    Ok(sums
        .into_iter()
        .map(|(l_b0, l_b1, p0, sum)| OamSurfacePoint {
            l_b0,
            l_b1,
            p0_given: p0,
            hmin: binary_min_entropy(p0),
            normalized_rate: sum as f64 / peak,
        })
        .collect())
}

/// Renders a surface as CSV with columns `l_B0,l_B1,p0,hmin,normalized_rate`.
pub fn surface_to_csv(points: &[OamSurfacePoint]) -> String {
    let mut out = String::from("l_B0,l_B1,p0,hmin,normalized_rate\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            p.l_b0, p.l_b1, p.p0_given, p.hmin, p.normalized_rate
        );
    }
    out
}

/// Closed-form prediction of the conditional 0-probability for a projection
/// pair: the anti-correlated source makes each arm's acceptance proportional
/// to its projected modal weight, so p0 = w(ℓ_B0) / (w(ℓ_B0) + w(ℓ_B1)) for a
/// balanced splitter.
pub fn predicted_p0(
    spectrum: &SpiralSpectrum,
    l_b0: i32,
    l_b1: i32,
) -> Result<f64, OamError> {
    let w0 = spectrum.weight(l_b0)?;
    let w1 = spectrum.weight(l_b1)?;
    if w0 + w1 == 0.0 {
        return Err(OamError::DegenerateWeights { l_b0, l_b1 });
    }
    Ok(w0 / (w0 + w1))
}

/// Picks the projection index ℓ_B1 within `l_range` whose predicted
/// 0-probability against the fixed ℓ_B0 lands closest to `target_p0`.
///
/// Ties prefer the smaller |ℓ_B1| (higher coincidence rate), then the
/// positive sign. Targets outside the span reachable within the range are
/// rejected with the achievable interval.
pub fn tailor_bias(
    spectrum: &SpiralSpectrum,
    target_p0: f64,
    l_b0: i32,
    l_range: RangeInclusive<i32>,
) -> Result<i32, OamError> {
    if !target_p0.is_finite() || target_p0 <= 0.0 || target_p0 >= 1.0 {
        return Err(OamError::InvalidTarget(target_p0));
    }
    let (lo, hi) = (*l_range.start(), *l_range.end());
    if lo > hi {
        return Err(OamError::EmptyRange { lo, hi });
    }

    let mut best: Option<(f64, i32, f64)> = None; // (|error|, l, predicted)
    let mut achievable_min = f64::INFINITY;
    let mut achievable_max = f64::NEG_INFINITY;
    for l in lo..=hi {
        let predicted = match predicted_p0(spectrum, l_b0, l) {
            Ok(p) => p,
            Err(OamError::DegenerateWeights { .. }) => continue,
            Err(e) => return Err(e),
        };
        achievable_min = achievable_min.min(predicted);
        achievable_max = achievable_max.max(predicted);
        let error = (predicted - target_p0).abs();
        let better = match best {
            None => true,
            Some((best_error, best_l, _)) => {
                error < best_error
                    || (error == best_error
                        && (l.abs() < best_l.abs() || (l.abs() == best_l.abs() && l > best_l)))
            }
        };
        if better {
            best = Some((error, l, predicted));
        }
    }

    let (_, l, _) = best.ok_or(OamError::DegenerateWeights { l_b0, l_b1: lo })?;
    if target_p0 < achievable_min || target_p0 > achievable_max {
        return Err(OamError::UnachievableTarget { target: target_p0, achievable_min, achievable_max });
    }
    Ok(l)
}
