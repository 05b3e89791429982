//! Blazed-grating splitter model and bit-bias calibration.
//!
//! The random bit of this generator is *which fibre* a heralded photon lands
//! in. A spatial light modulator displays two juxtaposed blazed gratings that
//! steer the photon toward fibre B0 or B1; scaling a grating's phase depth by
//! M ∈ [0, 1] moves light out of the first diffraction order with efficiency
//! sinc²(π(1 − M)), and that light is discarded. Attenuating the favored arm
//! this way rebalances an intrinsically biased splitter.
//!
//! This module provides the efficiency curve, the rebalanced path
//! probabilities, the predicted min-entropy of the resulting bit, a solver
//! for the balancing depth, and the entropy penalty of rendering that depth
//! on a grey-level-quantized device.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Grey-scale resolution of a typical 8-bit phase modulator.
pub const DEFAULT_GREY_LEVELS: u32 = 256;

/// Step used for one-sided numerical entropy derivatives.
const DEPTH_STEP: f64 = 1e-6;

/// Parameter failures for splitter math.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HologramError {
    /// Grating depths are a fraction of the full 2π phase ramp.
    #[error("grating depth must lie in [0, 1], got {0}")]
    InvalidDepth(f64),
    /// The bias ratio R = p0/p1 must be a positive finite number.
    #[error("bias ratio must be positive and finite, got {0}")]
    InvalidBiasRatio(f64),
    /// Balancing attenuates the favored arm, so it needs R ≤ 1.
    #[error(
        "bias ratio {0} exceeds 1: the favored arm is B0, so invert the ratio \
         and swap arm roles before solving for a balance depth"
    )]
    BiasFavorsOtherArm(f64),
    /// Zero grey levels would make quantization meaningless.
    #[error("grey level count must be at least 1")]
    InvalidGreyLevels,
}

fn check_depth(depth_m: f64) -> Result<(), HologramError> {
    if !depth_m.is_finite() || !(0.0..=1.0).contains(&depth_m) {
        return Err(HologramError::InvalidDepth(depth_m));
    }
    Ok(())
}

fn check_bias(bias_ratio_r: f64) -> Result<(), HologramError> {
    if !bias_ratio_r.is_finite() || bias_ratio_r <= 0.0 {
        return Err(HologramError::InvalidBiasRatio(bias_ratio_r));
    }
    Ok(())
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Fraction of light a blazed grating of depth scale `depth_m` sends into
/// diffraction order `order_n`: sinc²(π(n − M)).
///
/// At full depth (M = 1) everything lands in order 1; shrinking the depth
/// leaks light into neighboring orders, which downstream optics discard.
pub fn diffraction_efficiency(order_n: i32, depth_m: f64) -> Result<f64, HologramError> {
    check_depth(depth_m)?;
    let s = sinc(std::f64::consts::PI * (f64::from(order_n) - depth_m));
    Ok(s * s)
}

/// Path probabilities after scaling the favored arm's grating to `depth_m1`.
///
/// With raw bias R = p0/p1 and first-order efficiency s = sinc²(π(1 − M)),
/// the kept light renormalizes to p1' = s/(R + s) and p0' = R/(R + s).
/// The pair always sums to exactly 1.
pub fn rebalanced_probabilities(
    bias_ratio_r: f64,
    depth_m1: f64,
) -> Result<(f64, f64), HologramError> {
    check_bias(bias_ratio_r)?;
    let s = diffraction_efficiency(1, depth_m1)?;
    let p1 = s / (bias_ratio_r + s);
    Ok((1.0 - p1, p1))
}

/// Predicted min-entropy of one splitter bit: −log₂ max(p0', p1') with the
/// rebalanced probabilities at (R, M).
pub fn min_entropy(bias_ratio_r: f64, depth_m1: f64) -> Result<f64, HologramError> {
    let (p0, p1) = rebalanced_probabilities(bias_ratio_r, depth_m1)?;
    // + 0.0 normalizes the -0.0 that -log2(1) produces at fully one-sided depths.
    Ok(-p0.max(p1).log2() + 0.0)
}

/// Solves sinc²(π(1 − M)) = R for the depth M ∈ [0, 1] that balances the
/// splitter, by bisection to |sinc²(π(1−M)) − R| < 1e−12.
///
/// The efficiency is strictly increasing in M on [0, 1], so the root is
/// unique. Requires R ≤ 1: the convention is that B0 is the favored arm and
/// B1 carries the grating; a caller seeing R > 1 must invert the ratio and
/// swap which arm it attenuates.
pub fn solve_balance_depth(bias_ratio_r: f64) -> Result<f64, HologramError> {
    check_bias(bias_ratio_r)?;
    if bias_ratio_r > 1.0 {
        return Err(HologramError::BiasFavorsOtherArm(bias_ratio_r));
    }
    if bias_ratio_r == 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let residual = diffraction_efficiency(1, mid)? - bias_ratio_r;
        if residual.abs() < 1e-12 {
            break;
        }
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Snaps a depth to the nearest multiple of 1/grey_levels (ties round up),
/// the way an integer-valued phase ramp must be rendered.
pub fn quantize_depth(depth_m: f64, grey_levels: u32) -> Result<f64, HologramError> {
    check_depth(depth_m)?;
    if grey_levels == 0 {
        return Err(HologramError::InvalidGreyLevels);
    }
    let g = f64::from(grey_levels);
    Ok((depth_m * g + 0.5).floor() / g)
}

/// One-sided numerical slope ∂H_min/∂M at (R, M), taken over [M − h, M] with
/// h = 1e−6 (or [M, M + h] when M < h).
///
/// The min-entropy surface has a kink at the balance depth where the max
/// switches from p0' to p1', so a central difference there would average the
/// two branches; the one-sided difference stays on a single branch.
pub fn one_sided_entropy_slope(bias_ratio_r: f64, depth_m: f64) -> Result<f64, HologramError> {
    check_depth(depth_m)?;
    let (a, b) = if depth_m >= DEPTH_STEP {
        (depth_m - DEPTH_STEP, depth_m)
    } else {
        (depth_m, depth_m + DEPTH_STEP)
    };
    Ok((min_entropy(bias_ratio_r, b)? - min_entropy(bias_ratio_r, a)?) / DEPTH_STEP)
}

/// Min-entropy cost of rendering the depth on a quantized device: one grey
/// step (1/grey_levels) times the local slope magnitude |∂H_min/∂M|.
pub fn quantized_entropy_error(
    bias_ratio_r: f64,
    depth_m: f64,
    grey_levels: u32,
) -> Result<f64, HologramError> {
    if grey_levels == 0 {
        return Err(HologramError::InvalidGreyLevels);
    }
    Ok(one_sided_entropy_slope(bias_ratio_r, depth_m)?.abs() / f64::from(grey_levels))
}

/// Conditional routing probabilities (q0, q1) for a photon that stays in a
/// first diffraction order, with gratings on both arms.
///
/// The raw bias sends the photon toward B0 with p0 = R/(1+R); each arm's
/// grating keeps it with its first-order efficiency s_i, and light diffracted
/// elsewhere never reaches a detector, so the detected split renormalizes to
/// q_i ∝ p_i·s_i. With depth_m0 = 1 this reduces exactly to
/// [`rebalanced_probabilities`].
pub fn routing_probabilities(config: &SplitterConfig) -> Result<(f64, f64), HologramError> {
    check_bias(config.bias_ratio)?;
    let p0_raw = config.bias_ratio / (1.0 + config.bias_ratio);
    let p1_raw = 1.0 - p0_raw;
    let kept0 = p0_raw * diffraction_efficiency(1, config.depth_m0)?;
    let kept1 = p1_raw * diffraction_efficiency(1, config.depth_m1)?;
    let total = kept0 + kept1;
    Ok((kept0 / total, kept1 / total))
}

/// Splitter description: raw bias plus the grating depth on each output arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitterConfig {
    /// Raw system bias R = p0/p1 before any grating correction.
    pub bias_ratio: f64,
    /// Grating depth scale on arm B0.
    pub depth_m0: f64,
    /// Grating depth scale on arm B1.
    pub depth_m1: f64,
    /// Grey-level resolution of the phase modulator.
    pub grey_levels: u32,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig {
            bias_ratio: 1.0,
            depth_m0: 1.0,
            depth_m1: 1.0,
            grey_levels: DEFAULT_GREY_LEVELS,
        }
    }
}

impl SplitterConfig {
    /// Checks every field against its physical range.
    pub fn validate(&self) -> Result<(), HologramError> {
        check_bias(self.bias_ratio)?;
        check_depth(self.depth_m0)?;
        check_depth(self.depth_m1)?;
        if self.grey_levels == 0 {
            return Err(HologramError::InvalidGreyLevels);
        }
        Ok(())
    }

    /// The same splitter with both depths snapped to the grey-level grid.
    pub fn quantized(&self) -> Result<Self, HologramError> {
        self.validate()?;
        Ok(SplitterConfig {
            depth_m0: quantize_depth(self.depth_m0, self.grey_levels)?,
            depth_m1: quantize_depth(self.depth_m1, self.grey_levels)?,
            ..self.clone()
        })
    }
}

/// Result of balancing a splitter of measured bias R on a quantized device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    /// Measured raw bias the calibration corrects.
    #[serde(rename = "R")]
    pub bias_ratio: f64,
    /// Exact balance depth from the bisection solve.
    #[serde(rename = "M_star")]
    pub depth_exact: f64,
    /// The solved depth snapped to the grey-level grid.
    #[serde(rename = "M_quantized")]
    pub depth_quantized: f64,
    /// Predicted min-entropy per bit at the quantized depth.
    #[serde(rename = "H_min_predicted")]
    pub min_entropy_predicted: f64,
    /// Worst-case min-entropy loss from one grey step of depth error.
    #[serde(rename = "dH_min")]
    pub quantization_error: f64,
}

/// Full calibration: solve the balance depth for `bias_ratio_r`, quantize it
/// to the device grid, and report the predicted min-entropy and its
/// quantization error budget.
pub fn calibrate(bias_ratio_r: f64, grey_levels: u32) -> Result<CalibrationRecord, HologramError> {
    let depth_exact = solve_balance_depth(bias_ratio_r)?;
    let depth_quantized = quantize_depth(depth_exact, grey_levels)?;
    Ok(CalibrationRecord {
        bias_ratio: bias_ratio_r,
        depth_exact,
        depth_quantized,
        min_entropy_predicted: min_entropy(bias_ratio_r, depth_quantized)?,
        quantization_error: quantized_entropy_error(bias_ratio_r, depth_exact, grey_levels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// d/dM sinc²(π(1 − M)).
    fn efficiency_slope(depth_m: f64) -> f64 {
        let u = std::f64::consts::PI * (1.0 - depth_m);
        if u == 0.0 {
            return 0.0;
        }
        let sinc_u = u.sin() / u;
        let dsinc = u.cos() / u - u.sin() / (u * u);
        -2.0 * std::f64::consts::PI * sinc_u * dsinc
    }

    #[test]
    fn efficiency_matches_closed_form_points() {
        assert_eq!(diffraction_efficiency(1, 1.0).unwrap(), 1.0);
        assert!(diffraction_efficiency(0, 1.0).unwrap() < 1e-30);
        let e = diffraction_efficiency(1, 0.7812).unwrap();
        assert!((e - 0.8520969209496381).abs() < 1e-12);
        // The solved-and-rounded depth reproduces the raw bias it corrects
        // up to the rounding residual.
        assert!((e - 0.8518).abs() < 5e-4);
        assert!((diffraction_efficiency(1, 0.5).unwrap() - 0.4052847345693511).abs() < 1e-12);
    }

    #[test]
    fn efficiency_rejects_out_of_range_depths() {
        assert!(matches!(diffraction_efficiency(1, -0.1), Err(HologramError::InvalidDepth(_))));
        assert!(matches!(diffraction_efficiency(1, 1.1), Err(HologramError::InvalidDepth(_))));
        assert!(matches!(diffraction_efficiency(1, f64::NAN), Err(HologramError::InvalidDepth(_))));
    }

    #[test]
    fn energy_across_low_orders_never_exceeds_unity() {
        for i in 0..=100 {
            let m = f64::from(i) / 100.0;
            let total: f64 =
                (-10..=10).map(|n| diffraction_efficiency(n, m).unwrap()).sum();
            assert!(total <= 1.0 + 1e-3, "M={m}: {total}");
        }
    }

    #[test]
    fn first_order_efficiency_is_strictly_increasing() {
        let mut prev = diffraction_efficiency(1, 0.0).unwrap();
        for i in 1..=1000 {
            let m = f64::from(i) / 1000.0;
            let e = diffraction_efficiency(1, m).unwrap();
            assert!(e > prev, "not increasing at M={m}");
            prev = e;
        }
    }

    #[test]
    fn rebalanced_probabilities_match_golden_points() {
        let (p0, p1) = rebalanced_probabilities(0.8518, 1.0).unwrap();
        assert!((p1 - 0.5400151204233718).abs() < 1e-12); // 1/(1 + 0.8518)
        assert_eq!(p0 + p1, 1.0);

        let (p0, p1) = rebalanced_probabilities(1.0, 1.0).unwrap();
        assert_eq!((p0, p1), (0.5, 0.5));

        let (_, p1) = rebalanced_probabilities(0.8518, 0.7812).unwrap();
        assert!((p1 - 0.5000871299624958).abs() < 1e-12);
        assert!((p1 - 0.5).abs() < 2e-4);
    }

    #[test]
    fn rebalanced_probabilities_reject_bad_bias() {
        assert!(matches!(rebalanced_probabilities(0.0, 1.0), Err(HologramError::InvalidBiasRatio(_))));
        assert!(matches!(rebalanced_probabilities(-2.0, 1.0), Err(HologramError::InvalidBiasRatio(_))));
    }

    #[test]
    fn min_entropy_matches_golden_points() {
        assert!((min_entropy(0.8518, 1.0).unwrap() - 0.8889282915845642).abs() < 1e-12);
        assert!((min_entropy(0.8518, 1.0).unwrap() - 0.8889).abs() < 0.0015);
        assert_eq!(min_entropy(1.0, 1.0).unwrap(), 1.0);
        // Model prediction at the quantized operating depth. (A physical
        // device lands a little lower because its residual bias after
        // correction is measured, not ideal.)
        assert!((min_entropy(0.8518, 0.7812).unwrap() - 0.9997486179726595).abs() < 1e-12);
    }

    #[test]
    fn balance_solve_matches_golden_points() {
        let m = solve_balance_depth(0.8518).unwrap();
        assert!((m - 0.7809657773925671).abs() < 1e-9);
        assert!((m - 0.7812).abs() < 1.0 / 256.0);
        assert_eq!(solve_balance_depth(1.0).unwrap(), 1.0);
        assert!((solve_balance_depth(0.5).unwrap() - 0.5570535293105477).abs() < 1e-9);
    }

    #[test]
    fn balance_solve_rejects_inverted_or_invalid_bias() {
        assert!(matches!(solve_balance_depth(1.2), Err(HologramError::BiasFavorsOtherArm(_))));
        assert!(matches!(solve_balance_depth(0.0), Err(HologramError::InvalidBiasRatio(_))));
        assert!(matches!(solve_balance_depth(f64::INFINITY), Err(HologramError::InvalidBiasRatio(_))));
    }

    #[test]
    fn solved_depth_equalizes_the_arms() {
        for r in [0.1, 0.3, 0.5, 0.8518, 0.99, 1.0] {
            let m = solve_balance_depth(r).unwrap();
            let (p0, p1) = rebalanced_probabilities(r, m).unwrap();
            assert!((p0 - p1).abs() < 1e-10, "R={r}");
        }
    }

    #[test]
    fn solved_depth_maximizes_min_entropy() {
        for r in [0.2, 0.5, 0.8518, 0.95] {
            let m_star = solve_balance_depth(r).unwrap();
            let best = min_entropy(r, m_star).unwrap();
            for i in 0..=100 {
                let m = f64::from(i) / 100.0;
                assert!(
                    best >= min_entropy(r, m).unwrap() - 1e-12,
                    "R={r}, M={m} beats the solved depth"
                );
            }
        }
    }

    #[test]
    fn quantize_depth_snaps_to_grey_grid() {
        assert_eq!(quantize_depth(0.7812, 256).unwrap(), 200.0 / 256.0);
        assert_eq!(quantize_depth(0.0, 256).unwrap(), 0.0);
        assert_eq!(quantize_depth(1.0, 256).unwrap(), 1.0);
        // 1.5 grey steps sits exactly between 1/256 and 2/256: ties go up.
        assert_eq!(quantize_depth(1.5 / 256.0, 256).unwrap(), 2.0 / 256.0);
        assert!(matches!(quantize_depth(0.5, 0), Err(HologramError::InvalidGreyLevels)));
    }

    #[test]
    fn quantization_error_matches_the_analytic_budget() {
        let slope = one_sided_entropy_slope(0.8518, 0.7812).unwrap();
        assert!((slope.abs() - 1.0725581295821).abs() < 1e-6);
        assert!((slope.abs() - 1.073).abs() < 0.005);
        let err = quantized_entropy_error(0.8518, 0.7812, 256).unwrap();
        assert!((err - 0.004189680193680078).abs() < 1e-8);
        assert!((err - 0.0043).abs() < 0.0003);
    }

    #[test]
    fn entropy_slope_vanishes_for_a_balanced_untouched_splitter() {
        // At (R=1, M=1) the efficiency curve is flat (sinc' = 0 at 0), so
        // dp/dM = 0 and the one-sided slope must agree with 2/ln2 · |dp/dM| = 0.
        let slope = one_sided_entropy_slope(1.0, 1.0).unwrap();
        assert!(slope.abs() < 1e-4, "slope = {slope}");
    }

    #[test]
    fn one_sided_slope_matches_analytic_chain_rule_on_fixed_branches() {
        let ln2 = std::f64::consts::LN_2;
        // Above the balance depth p1' is the max: H = −log₂(s/(R+s)).
        for (r, m) in [(0.8518, 0.7812), (0.8518, 0.9), (0.5, 0.9), (0.3, 0.95)] {
            let s = diffraction_efficiency(1, m).unwrap();
            let analytic = -efficiency_slope(m) * r / (ln2 * s * (r + s));
            let numeric = one_sided_entropy_slope(r, m).unwrap();
            assert!((numeric - analytic).abs() < 1e-4, "(R={r}, M={m}): {numeric} vs {analytic}");
        }
        // Below it p0' is the max: H = log₂((R+s)/R).
        for (r, m) in [(0.8518, 0.5), (0.5, 0.3), (0.9, 0.7)] {
            let s = diffraction_efficiency(1, m).unwrap();
            let analytic = efficiency_slope(m) / (ln2 * (r + s));
            let numeric = one_sided_entropy_slope(r, m).unwrap();
            assert!((numeric - analytic).abs() < 1e-4, "(R={r}, M={m}): {numeric} vs {analytic}");
        }
    }

    #[test]
    fn two_arm_routing_reduces_to_single_grating_rebalancing() {
        for (r, m1) in [(0.8518, 0.7812), (0.8518, 1.0), (0.5, 0.6), (1.0, 1.0)] {
            let config = SplitterConfig { bias_ratio: r, depth_m0: 1.0, depth_m1: m1, grey_levels: 256 };
            let (q0, q1) = routing_probabilities(&config).unwrap();
            let (p0, p1) = rebalanced_probabilities(r, m1).unwrap();
            assert!((q0 - p0).abs() < 1e-15 && (q1 - p1).abs() < 1e-15, "(R={r}, M1={m1})");
            assert!((q0 + q1 - 1.0).abs() < 1e-15);
        }
        // Equal depths cancel: the split falls back to the raw bias.
        let config = SplitterConfig { bias_ratio: 3.0, depth_m0: 0.6, depth_m1: 0.6, grey_levels: 256 };
        let (q0, q1) = routing_probabilities(&config).unwrap();
        assert!((q0 - 0.75).abs() < 1e-12 && (q1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn calibration_record_round_trips_with_published_field_names() {
        let record = calibrate(0.8518, 256).unwrap();
        assert!((record.depth_exact - 0.7812).abs() < 1.0 / 256.0);
        assert_eq!(record.depth_quantized, 200.0 / 256.0);
        assert!(record.min_entropy_predicted >= 0.9987);
        assert!((record.quantization_error - 0.0043).abs() < 0.0003);

        let json = serde_json::to_value(&record).unwrap();
        for key in ["R", "M_star", "M_quantized", "H_min_predicted", "dH_min"] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
    }

    #[test]
    fn splitter_config_validates_and_quantizes() {
        let config = SplitterConfig::default();
        config.validate().unwrap();
        let biased = SplitterConfig { bias_ratio: 0.8518, depth_m1: 0.7812, ..config };
        let snapped = biased.quantized().unwrap();
        assert_eq!(snapped.depth_m1, 200.0 / 256.0);
        assert_eq!(snapped.depth_m0, 1.0);
        let bad = SplitterConfig { depth_m0: 1.5, ..SplitterConfig::default() };
        assert!(bad.validate().is_err());
    }
}
