//! The eight core randomness kernels: frequency (monobit and block), runs,
//! longest run of ones, cumulative sums, spectral (DFT), serial, and
//! approximate entropy.
//!
//! Each kernel follows its NIST SP 800-22 definition and maps a bit slice
//! to a test statistic and a p-value under the null hypothesis of ideal
//! randomness. Kernels compute wherever their formulas are defined; the
//! suite layer is what enforces the recommended minimum lengths.

use serde::Serialize;

use super::special::{erfc, igamc, normal_cdf};
use super::{check_bits, TestError};

/// A single kernel evaluation: the test statistic and its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Direction for the cumulative-sums random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumMode {
    Forward,
    Backward,
}

/// Frequency (monobit) test: S = Σ(2ε−1), p = erfc(|S|/√(2n)).
/// SP 800-22 §2.1.
pub fn frequency_monobit(bits: &[u8]) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n = nonempty(bits)?;
    let s: i64 = bits.iter().map(|&b| 2 * i64::from(b) - 1).sum();
    let s_obs = s.abs() as f64 / n.sqrt();
    Ok(KernelResult {
        statistic: s_obs,
        p_value: erfc(s_obs / std::f64::consts::SQRT_2),
    })
}

/// Block frequency test: χ² of per-block one-proportions against 1/2,
/// p = Q(N/2, χ²/2). SP 800-22 §2.2.
pub fn block_frequency(bits: &[u8], block_len: usize) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    nonempty(bits)?;
    if block_len == 0 {
        return Err(TestError::InvalidParameter {
            name: "block_len",
            reason: "must be positive".into(),
        });
    }
    let n_blocks = bits.len() / block_len;
    if n_blocks == 0 {
        return Err(TestError::InvalidParameter {
            name: "block_len",
            reason: format!("no complete block of {} bits in {} input bits", block_len, bits.len()),
        });
    }
    let mut chi2 = 0.0;
    for block in bits.chunks_exact(block_len) {
        let ones: u64 = block.iter().map(|&b| u64::from(b)).sum();
        let pi = ones as f64 / block_len as f64;
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * block_len as f64;
    Ok(KernelResult {
        statistic: chi2,
        p_value: igamc(n_blocks as f64 / 2.0, chi2 / 2.0),
    })
}

/// Runs test: total number of runs against its expectation, prerequisite
/// |π − 1/2| < 2/√n (a string that already fails frequency gets p = 0
/// without evaluating the run statistic's reference distribution).
/// SP 800-22 §2.3.
pub fn runs(bits: &[u8]) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n = nonempty(bits)?;
    let ones: u64 = bits.iter().map(|&b| u64::from(b)).sum();
    let pi = ones as f64 / n;
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count() as u64;
    let tau = 2.0 / n.sqrt();
    if (pi - 0.5).abs() >= tau || pi == 0.0 || pi == 1.0 {
        return Ok(KernelResult { statistic: v_obs as f64, p_value: 0.0 });
    }
    let p = erfc(
        (v_obs as f64 - 2.0 * n * pi * (1.0 - pi)).abs()
            / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi)),
    );
    Ok(KernelResult { statistic: v_obs as f64, p_value: p })
}

/// Class table for one longest-run regime: block length, smallest and
/// largest tabulated run-length class, and the class probabilities.
struct LongestRunRegime {
    block_len: usize,
    v_min: u32,
    v_max: u32,
    pi: &'static [f64],
}

/// The M = 8 class probabilities are exact dyadic rationals (k/256); the
/// longer regimes use the published reference constants.
const LONGEST_RUN_REGIMES: [LongestRunRegime; 3] = [
    LongestRunRegime {
        block_len: 8,
        v_min: 1,
        v_max: 4,
        pi: &[0.214_843_75, 0.367_187_5, 0.230_468_75, 0.187_5],
    },
    LongestRunRegime {
        block_len: 128,
        v_min: 4,
        v_max: 9,
        pi: &[0.117_403_578_8, 0.242_955_959, 0.249_363_483, 0.175_177_06, 0.102_701_071, 0.112_398_847],
    },
    LongestRunRegime {
        block_len: 10_000,
        v_min: 10,
        v_max: 16,
        pi: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
    },
];

/// Longest run of ones within fixed blocks, χ² over tabulated run-length
/// classes. Block length steps 8 → 128 → 10⁴ with input size.
/// SP 800-22 §2.4.
pub fn longest_run_of_ones(bits: &[u8]) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n = bits.len();
    if n < 128 {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("longest-run test needs at least 128 bits, got {n}"),
        });
    }
    let regime = if n < 6_272 {
        &LONGEST_RUN_REGIMES[0]
    } else if n < 750_000 {
        &LONGEST_RUN_REGIMES[1]
    } else {
        &LONGEST_RUN_REGIMES[2]
    };
    let n_blocks = n / regime.block_len;
    let n_classes = regime.pi.len();
    let mut nu = vec![0u64; n_classes];
    for block in bits.chunks_exact(regime.block_len) {
        let mut longest = 0u32;
        let mut run = 0u32;
        for &b in block {
            run = if b == 1 { run + 1 } else { 0 };
            longest = longest.max(run);
        }
        let class = longest.clamp(regime.v_min, regime.v_max) - regime.v_min;
        nu[class as usize] += 1;
    }
    let mut chi2 = 0.0;
    for (count, &pi) in nu.iter().zip(regime.pi) {
        let expected = n_blocks as f64 * pi;
        chi2 += (*count as f64 - expected) * (*count as f64 - expected) / expected;
    }
    Ok(KernelResult {
        statistic: chi2,
        p_value: igamc((n_classes - 1) as f64 / 2.0, chi2 / 2.0),
    })
}

/// Cumulative sums test: maximum excursion of the ±1 random walk (forward
/// or over the reversed string), with the walk-range reference
/// distribution. Sum limits use the floor of the stated index ranges,
/// which keeps every non-negligible term. SP 800-22 §2.13.
pub fn cumulative_sums(bits: &[u8], mode: CusumMode) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n = nonempty(bits)?;
    let mut sum = 0i64;
    let mut z = 0i64;
    let step = |b: u8| 2 * i64::from(b) - 1;
    match mode {
        CusumMode::Forward => {
            for &b in bits {
                sum += step(b);
                z = z.max(sum.abs());
            }
        }
        CusumMode::Backward => {
            for &b in bits.iter().rev() {
                sum += step(b);
                z = z.max(sum.abs());
            }
        }
    }
    let z = z as f64;
    let sqrt_n = n.sqrt();
    let term = |k: i64, offset: f64| normal_cdf((4.0 * k as f64 + offset) * z / sqrt_n);
    let mut p = 1.0;
    let k_hi = ((n / z - 1.0) / 4.0).floor() as i64;
    let k_lo = ((-n / z + 1.0) / 4.0).floor() as i64;
    for k in k_lo..=k_hi {
        p -= term(k, 1.0) - term(k, -1.0);
    }
    let k_lo = ((-n / z - 3.0) / 4.0).floor() as i64;
    for k in k_lo..=k_hi {
        p += term(k, 3.0) - term(k, 1.0);
    }
    Ok(KernelResult { statistic: z, p_value: p.clamp(0.0, 1.0) })
}

/// Discrete Fourier transform (spectral) test: the fraction of magnitude
/// peaks below the 95% threshold T = √(n·ln(1/0.05)) against its
/// expectation. SP 800-22 §2.6 with the corrected threshold constant.
pub fn dft_spectral(bits: &[u8]) -> Result<KernelResult, TestError> {
    use rustfft::{num_complex::Complex, FftPlanner};

    check_bits(bits)?;
    let n = bits.len();
    if n < 2 {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("spectral test needs at least 2 bits, got {n}"),
        });
    }
    let mut buf: Vec<Complex<f64>> = bits
        .iter()
        .map(|&b| Complex::new(2.0 * f64::from(b) - 1.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let threshold = (n as f64 * (1.0 / 0.05f64).ln()).sqrt();
    let below = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count();
    let expected = 0.95 * n as f64 / 2.0;
    let d = (below as f64 - expected) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt();
    Ok(KernelResult {
        statistic: d,
        p_value: erfc(d.abs() / std::f64::consts::SQRT_2),
    })
}

/// Overlapping m-pattern counts with wraparound, as used by the serial and
/// approximate-entropy tests: every one of the n cyclic windows of length
/// `m` is tallied.
fn pattern_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut counts = vec![0u64; 1 << m];
    let mut idx = 0usize;
    for &b in &bits[..m - 1] {
        idx = (idx << 1) | b as usize;
    }
    for i in 0..n {
        idx = ((idx << 1) | bits[(i + m - 1) % n] as usize) & mask;
        counts[idx] += 1;
    }
    counts
}

/// ψ²_m = (2^m/n)·Σ ν_i² − n over cyclic m-pattern counts; ψ²_0 := 0.
fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum_sq: f64 = pattern_counts(bits, m).iter().map(|&c| (c as f64) * (c as f64)).sum();
    (2.0f64.powi(m as i32) / n) * sum_sq - n
}

/// Serial test: first- and second-difference ψ² statistics over m-pattern
/// frequencies, p₁ = Q(2^(m−2), ∇ψ²/2) and p₂ = Q(2^(m−3), ∇²ψ²/2).
/// SP 800-22 §2.11.
pub fn serial(bits: &[u8], m: usize) -> Result<(KernelResult, KernelResult), TestError> {
    check_bits(bits)?;
    let n = bits.len();
    if m < 2 {
        return Err(TestError::InvalidParameter {
            name: "m",
            reason: format!("serial pattern length must be at least 2, got {m}"),
        });
    }
    if n < m {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("need at least m = {m} bits, got {n}"),
        });
    }
    let psi_m = psi_squared(bits, m);
    let psi_m1 = psi_squared(bits, m - 1);
    let psi_m2 = psi_squared(bits, m - 2);
    let del1 = psi_m - psi_m1;
    let del2 = psi_m - 2.0 * psi_m1 + psi_m2;
    let p1 = igamc(2.0f64.powi(m as i32 - 2), del1 / 2.0);
    let p2 = igamc(2.0f64.powi(m as i32 - 3), del2 / 2.0);
    Ok((
        KernelResult { statistic: del1, p_value: p1 },
        KernelResult { statistic: del2, p_value: p2 },
    ))
}

/// Approximate entropy test: ApEn(m) = φ_m − φ_{m+1} compared to its ln 2
/// limit, χ² = 2n(ln 2 − ApEn), p = Q(2^(m−1), χ²/2). SP 800-22 §2.12.
pub fn approximate_entropy(bits: &[u8], m: usize) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n = bits.len();
    if m == 0 {
        return Err(TestError::InvalidParameter {
            name: "m",
            reason: "pattern length must be positive".into(),
        });
    }
    if n <= m + 1 {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("need more than m+1 = {} bits, got {n}", m + 1),
        });
    }
    let phi = |m: usize| -> f64 {
        let n = bits.len() as f64;
        pattern_counts(bits, m)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let f = c as f64 / n;
                f * f.ln()
            })
            .sum()
    };
    let apen = phi(m) - phi(m + 1);
    let chi2 = 2.0 * n as f64 * (std::f64::consts::LN_2 - apen);
    Ok(KernelResult {
        statistic: chi2,
        p_value: igamc(2.0f64.powi(m as i32 - 1), chi2 / 2.0),
    })
}

fn nonempty(bits: &[u8]) -> Result<f64, TestError> {
    if bits.is_empty() {
        Err(TestError::EmptyInput)
    } else {
        Ok(bits.len() as f64)
    }
}
