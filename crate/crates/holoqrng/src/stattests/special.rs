//! Special functions backing the hypothesis tests: log-gamma, the
//! regularized incomplete gamma ratio, and the complementary error
//! function.
//!
//! Every p-value in the battery reduces to one of these. They are
//! implemented from scratch (Lanczos series plus the classic
//! series/continued-fraction split for the gamma ratio) so the test suite
//! carries no numeric dependency, and are verified against high-precision
//! reference values to 1e-10 relative error.

/// Lanczos coefficients for g = 7, giving ~1e-13 relative accuracy.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Iteration cap for the gamma-ratio series and continued fraction. The
/// series needs a few thousand terms when x ≈ a with a in the thousands
/// (block-frequency tests on long strings put us exactly there).
const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;

/// Natural log of the gamma function for x > 0 (Lanczos approximation,
/// reflection formula below 0.5).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π/sin(πx)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Lower regularized incomplete gamma P(a, x) by its power series; valid
/// and efficient for x < a + 1.
fn igam_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Upper regularized incomplete gamma Q(a, x) by modified-Lentz continued
/// fraction; valid and efficient for x ≥ a + 1.
fn igamc_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a) for a > 0,
/// x ≥ 0 — the χ² tail probability with 2a degrees of freedom at 2x.
/// Results below ~1e-308 underflow to 0, which is the correct p-value
/// reading for such overwhelming statistics.
pub fn igamc(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "igamc domain: a > 0, x >= 0 (got a={a}, x={x})");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - igam_series(a, x)).clamp(0.0, 1.0)
    } else {
        igamc_continued_fraction(a, x).clamp(0.0, 1.0)
    }
}

/// Complementary error function erfc(x) = Q(1/2, x²), extended to negative
/// arguments by erfc(−x) = 2 − erfc(x).
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x == 0.0 {
        1.0
    } else {
        igamc(0.5, x * x)
    }
}

/// Standard normal CDF Φ(x), used by the random-walk tests.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
