//! Conformance extensions: the seven heavier SP 800-22 tests that join the
//! core kernels to form the full fifteen-family battery — binary matrix
//! rank, template matching (both variants), Maurer's universal statistic,
//! linear complexity, and the two random-excursions tests.

use super::core::KernelResult;
use super::special::{erfc, igamc};
use super::{check_bits, TestError};

/// Matrix dimensions for the rank test (32×32 per SP 800-22 §2.5).
const RANK_M: usize = 32;

/// Both random-excursions tests require at least this many zero-return
/// cycles in the walk; below it the χ² approximation is invalid and the
/// test is not applicable to the string (SP 800-22 §2.14.4).
pub const MIN_EXCURSION_CYCLES: u64 = 500;

/// First length-9 entry of the SP 800-22 aperiodic template library; the
/// suite's default pattern for non-overlapping matching.
pub const DEFAULT_NONOVERLAP_TEMPLATE: [u8; 9] = [0, 0, 0, 0, 0, 0, 0, 0, 1];

/// P(rank = r) for a random GF(2) matrix of the given dimensions.
fn rank_probability(r: usize, m: usize, q: usize) -> f64 {
    let mut p = 2.0f64.powi((r * (q + m - r)) as i32 - (m * q) as i32);
    for i in 0..r {
        p *= (1.0 - 2.0f64.powi(i as i32 - q as i32)) * (1.0 - 2.0f64.powi(i as i32 - m as i32))
            / (1.0 - 2.0f64.powi(i as i32 - r as i32));
    }
    p
}

/// Rank of a 32×32 GF(2) matrix by Gaussian elimination on u32 rows.
fn gf2_rank(mut rows: [u32; RANK_M]) -> usize {
    let mut rank = 0;
    for col in (0..RANK_M).rev() {
        let bit = 1u32 << col;
        if let Some(pivot) = (rank..RANK_M).find(|&r| rows[r] & bit != 0) {
            rows.swap(rank, pivot);
            let pivot_row = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && *row & bit != 0 {
                    *row ^= pivot_row;
                }
            }
            rank += 1;
            if rank == RANK_M {
                break;
            }
        }
    }
    rank
}

/// Binary matrix rank test: ranks of disjoint 32×32 bit matrices against
/// the exact GF(2) rank distribution, χ² over {full, full−1, lower}.
/// SP 800-22 §2.5.
pub fn binary_matrix_rank(bits: &[u8]) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n_matrices = bits.len() / (RANK_M * RANK_M);
    if n_matrices == 0 {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("rank test needs at least {} bits, got {}", RANK_M * RANK_M, bits.len()),
        });
    }
    let mut counts = [0u64; 3]; // full rank, one deficient, lower
    for matrix_bits in bits.chunks_exact(RANK_M * RANK_M).take(n_matrices) {
        let mut rows = [0u32; RANK_M];
        for (r, row_bits) in matrix_bits.chunks_exact(RANK_M).enumerate() {
            rows[r] = row_bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        }
        let rank = gf2_rank(rows);
        let class = if rank == RANK_M {
            0
        } else if rank == RANK_M - 1 {
            1
        } else {
            2
        };
        counts[class] += 1;
    }
    let p_full = rank_probability(RANK_M, RANK_M, RANK_M);
    let p_deficient = rank_probability(RANK_M - 1, RANK_M, RANK_M);
    let pi = [p_full, p_deficient, 1.0 - p_full - p_deficient];
    let n = n_matrices as f64;
    let chi2: f64 = counts
        .iter()
        .zip(pi)
        .map(|(&c, p)| (c as f64 - n * p) * (c as f64 - n * p) / (n * p))
        .sum();
    Ok(KernelResult { statistic: chi2, p_value: igamc(1.0, chi2 / 2.0) })
}

/// Non-overlapping template matching: per-block counts of a pattern
/// (the scan jumps past each match) against the asymptotic mean and
/// variance. SP 800-22 §2.7.
pub fn non_overlapping_template(
    bits: &[u8],
    template: &[u8],
    n_blocks: usize,
) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    check_bits(template)?;
    let m = template.len();
    if m == 0 {
        return Err(TestError::InvalidParameter {
            name: "template",
            reason: "template must be non-empty".into(),
        });
    }
    if n_blocks == 0 {
        return Err(TestError::InvalidParameter {
            name: "n_blocks",
            reason: "need at least one block".into(),
        });
    }
    let block_len = bits.len() / n_blocks;
    if block_len < m {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("blocks of {block_len} bits cannot hold a {m}-bit template"),
        });
    }
    let two_m = 2.0f64.powi(m as i32);
    let mean = (block_len - m + 1) as f64 / two_m;
    let variance = block_len as f64 * (1.0 / two_m - (2 * m - 1) as f64 / (two_m * two_m));
    let mut chi2 = 0.0;
    for block in bits.chunks_exact(block_len).take(n_blocks) {
        let mut hits = 0u64;
        let mut i = 0;
        while i + m <= block.len() {
            if block[i..i + m] == *template {
                hits += 1;
                i += m;
            } else {
                i += 1;
            }
        }
        chi2 += (hits as f64 - mean) * (hits as f64 - mean) / variance;
    }
    Ok(KernelResult { statistic: chi2, p_value: igamc(n_blocks as f64 / 2.0, chi2 / 2.0) })
}

/// Class probabilities for the overlapping-template test in its standard
/// regime (9-bit template of ones, 1032-bit blocks, so λ = 2): the
/// corrected constants from SP 800-22 rev 1a §3.8.
const OVERLAPPING_PI: [f64; 6] = [0.364_091, 0.185_659, 0.139_381, 0.100_571, 0.070_432, 0.139_865];
const OVERLAPPING_TEMPLATE_LEN: usize = 9;
const OVERLAPPING_BLOCK_LEN: usize = 1_032;

/// Overlapping template matching: per-block counts of the all-ones 9-bit
/// pattern (overlaps allowed), classed {0..4, ≥5}, χ² against the
/// compound-Poisson class probabilities. SP 800-22 §2.8.
pub fn overlapping_template(bits: &[u8]) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    let n_blocks = bits.len() / OVERLAPPING_BLOCK_LEN;
    if n_blocks == 0 {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!(
                "overlapping-template test needs at least {OVERLAPPING_BLOCK_LEN} bits, got {}",
                bits.len()
            ),
        });
    }
    let mut nu = [0u64; 6];
    for block in bits.chunks_exact(OVERLAPPING_BLOCK_LEN).take(n_blocks) {
        let mut hits = 0usize;
        for window in block.windows(OVERLAPPING_TEMPLATE_LEN) {
            if window.iter().all(|&b| b == 1) {
                hits += 1;
            }
        }
        nu[hits.min(5)] += 1;
    }
    let n = n_blocks as f64;
    let chi2: f64 = nu
        .iter()
        .zip(OVERLAPPING_PI)
        .map(|(&c, p)| (c as f64 - n * p) * (c as f64 - n * p) / (n * p))
        .sum();
    Ok(KernelResult { statistic: chi2, p_value: igamc(2.5, chi2 / 2.0) })
}

/// Expected compressed-distance values and variances for Maurer's test,
/// indexed by block length L (SP 800-22 Table 2-8; entries 0 and 1 unused).
const UNIVERSAL_EXPECTED: [f64; 17] = [
    0.0, 0.0, 1.537_438_3, 2.401_606_8, 3.311_224_7, 4.253_426_6, 5.217_705_2, 6.196_250_7,
    7.183_665_6, 8.176_424_8, 9.172_324_3, 10.170_032, 11.168_765, 12.168_070, 13.167_693,
    14.167_488, 15.167_379,
];
const UNIVERSAL_VARIANCE: [f64; 17] = [
    0.0, 0.0, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384, 3.401, 3.410,
    3.416, 3.419, 3.421,
];

/// Standard (L, Q) for Maurer's test at a given input size, or `None`
/// below the 387 840-bit minimum (SP 800-22 Table 2-7: L grows with n,
/// Q = 10·2^L initialization blocks).
pub fn choose_universal_params(n: usize) -> Option<(usize, usize)> {
    const THRESHOLDS: [(usize, usize); 11] = [
        (1_059_061_760, 16),
        (496_435_200, 15),
        (231_669_760, 14),
        (107_560_960, 13),
        (49_643_520, 12),
        (22_753_280, 11),
        (10_342_400, 10),
        (4_654_080, 9),
        (2_068_480, 8),
        (904_960, 7),
        (387_840, 6),
    ];
    THRESHOLDS
        .iter()
        .find(|&&(min_n, _)| n >= min_n)
        .map(|&(_, l)| (l, 10 * (1 << l)))
}

/// Maurer's universal statistical test: mean log-distance between
/// repetitions of L-bit blocks, after a Q-block table warm-up, compared
/// with its expectation for a random source. SP 800-22 §2.9.
pub fn maurer_universal(bits: &[u8], l: usize, q: usize) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    if !(2..=16).contains(&l) {
        return Err(TestError::InvalidParameter {
            name: "l",
            reason: format!("block length must be in 2..=16, got {l}"),
        });
    }
    let n_blocks = bits.len() / l;
    if q == 0 || n_blocks <= q {
        return Err(TestError::InvalidParameter {
            name: "q",
            reason: format!("need q >= 1 initialization blocks plus test blocks, got q={q} of {n_blocks}"),
        });
    }
    let k = n_blocks - q;
    let mut last_seen = vec![0u64; 1 << l];
    let block_value =
        |i: usize| bits[i * l..(i + 1) * l].iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    for i in 0..q {
        last_seen[block_value(i)] = (i + 1) as u64;
    }
    let mut sum = 0.0;
    for i in q..n_blocks {
        let pattern = block_value(i);
        let index = (i + 1) as u64;
        sum += ((index - last_seen[pattern]) as f64).log2();
        last_seen[pattern] = index;
    }
    let f_n = sum / k as f64;
    let c = 0.7 - 0.8 / l as f64 + (4.0 + 32.0 / l as f64) * (k as f64).powf(-3.0 / l as f64) / 15.0;
    let sigma = c * (UNIVERSAL_VARIANCE[l] / k as f64).sqrt();
    Ok(KernelResult {
        statistic: f_n,
        p_value: erfc((f_n - UNIVERSAL_EXPECTED[l]).abs() / (std::f64::consts::SQRT_2 * sigma)),
    })
}

/// Linear complexity (shortest LFSR length) of a 0/1 sequence by the
/// Berlekamp-Massey algorithm.
fn berlekamp_massey(s: &[u8]) -> usize {
    let n = s.len();
    let mut c = vec![0u8; n + 1];
    let mut b = vec![0u8; n + 1];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m: i64 = -1;
    for i in 0..n {
        let mut d = s[i];
        for j in 1..=l {
            d ^= c[j] & s[i - j];
        }
        if d == 1 {
            let shift = (i as i64 - m) as usize;
            if 2 * l <= i {
                let t = c.clone();
                for j in 0..=n - shift {
                    c[j + shift] ^= b[j];
                }
                l = i + 1 - l;
                m = i as i64;
                b = t;
            } else {
                for j in 0..=n - shift {
                    c[j + shift] ^= b[j];
                }
            }
        }
    }
    l
}

/// Per-block linear complexities against the random-sequence expectation
/// μ ≈ M/2, classed by the centered statistic T, χ² over seven classes
/// with exact probabilities. SP 800-22 §2.10.
pub fn linear_complexity(bits: &[u8], block_len: usize) -> Result<KernelResult, TestError> {
    check_bits(bits)?;
    if block_len < 4 {
        return Err(TestError::InvalidParameter {
            name: "block_len",
            reason: format!("block length must be at least 4, got {block_len}"),
        });
    }
    let n_blocks = bits.len() / block_len;
    if n_blocks == 0 {
        return Err(TestError::InvalidParameter {
            name: "bits",
            reason: format!("no complete block of {block_len} bits in {}", bits.len()),
        });
    }
    let m = block_len as f64;
    let sign = if block_len % 2 == 0 { 1.0 } else { -1.0 };
    let mu = m / 2.0 + (9.0 - sign) / 36.0 - (m / 3.0 + 2.0 / 9.0) / 2.0f64.powf(m);
    // P(T in class): exact dyadic masses {1/96, 1/32, 1/8, 1/2, 1/4, 1/16, 1/48}.
    let pi = [
        1.0 / 96.0,
        1.0 / 32.0,
        1.0 / 8.0,
        1.0 / 2.0,
        1.0 / 4.0,
        1.0 / 16.0,
        1.0 / 48.0,
    ];
    let mut nu = [0u64; 7];
    for block in bits.chunks_exact(block_len).take(n_blocks) {
        let complexity = berlekamp_massey(block) as f64;
        let t = sign * (complexity - mu) + 2.0 / 9.0;
        let class = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        nu[class] += 1;
    }
    let n = n_blocks as f64;
    let chi2: f64 = nu
        .iter()
        .zip(pi)
        .map(|(&c, p)| (c as f64 - n * p) * (c as f64 - n * p) / (n * p))
        .sum();
    Ok(KernelResult { statistic: chi2, p_value: igamc(3.0, chi2 / 2.0) })
}

/// Result of a random-excursions evaluation: the number of zero-return
/// cycles in the walk, and per-state results (empty when the cycle count
/// is below [`MIN_EXCURSION_CYCLES`], where the test is not applicable).
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionOutcome {
    pub cycles: u64,
    pub states: Vec<(i32, KernelResult)>,
}

/// Probability that state x (≠ 0) is visited exactly k times (k capped at
/// 5) within one zero-return cycle of the random walk.
fn excursion_pi(x: i32, k: usize) -> f64 {
    let a = 1.0 / (2.0 * f64::from(x.abs()));
    match k {
        0 => 1.0 - a,
        // 1/(4x²) = a², then a geometric tail in (1 − a).
        1..=4 => a * a * (1.0 - a).powi(k as i32 - 1),
        _ => a * (1.0 - a).powi(4),
    }
}

/// Shared walk pass: per-cycle visit-class counts for |x| ≤ 4, total
/// visit counts for |x| ≤ 9, and the cycle count J.
struct WalkSummary {
    cycles: u64,
    /// nu[state_index][k]: cycles where state was visited exactly k times
    /// (k capped at 5); state_index maps x ∈ {−4..−1, 1..4} to 0..8.
    nu: [[u64; 6]; 8],
    /// xi[state_index]: total visits for x ∈ {−9..−1, 1..9} mapped to 0..18.
    xi: [u64; 18],
}

fn walk_summary(bits: &[u8]) -> WalkSummary {
    let mut summary = WalkSummary { cycles: 0, nu: [[0; 6]; 8], xi: [0; 18] };
    let mut visits = [0u64; 8];
    let mut s: i64 = 0;
    let flush = |visits: &mut [u64; 8], summary: &mut WalkSummary| {
        summary.cycles += 1;
        for (idx, v) in visits.iter().enumerate() {
            summary.nu[idx][(*v).min(5) as usize] += 1;
        }
        *visits = [0; 8];
    };
    for &b in bits {
        s += 2 * i64::from(b) - 1;
        if s == 0 {
            flush(&mut visits, &mut summary);
        } else {
            if (-4..=4).contains(&s) {
                let idx = if s < 0 { (s + 4) as usize } else { (s + 3) as usize };
                visits[idx] += 1;
            }
            if (-9..=9).contains(&s) {
                let idx = if s < 0 { (s + 9) as usize } else { (s + 8) as usize };
                summary.xi[idx] += 1;
            }
        }
    }
    if s != 0 {
        flush(&mut visits, &mut summary);
    }
    summary
}

fn excursion_state(idx: usize) -> i32 {
    if idx < 4 {
        idx as i32 - 4
    } else {
        idx as i32 - 3
    }
}

/// Random excursions test: per-cycle visit counts to states −4..4, χ²
/// against the exact per-cycle visit distribution, one p-value per state.
/// SP 800-22 §2.14.
pub fn random_excursions(bits: &[u8]) -> Result<ExcursionOutcome, TestError> {
    check_bits(bits)?;
    let summary = walk_summary(bits);
    let j = summary.cycles;
    if j < MIN_EXCURSION_CYCLES {
        return Ok(ExcursionOutcome { cycles: j, states: Vec::new() });
    }
    let mut states = Vec::with_capacity(8);
    for (idx, counts) in summary.nu.iter().enumerate() {
        let x = excursion_state(idx);
        let chi2: f64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let expected = j as f64 * excursion_pi(x, k);
                (c as f64 - expected) * (c as f64 - expected) / expected
            })
            .sum();
        states.push((x, KernelResult { statistic: chi2, p_value: igamc(2.5, chi2 / 2.0) }));
    }
    Ok(ExcursionOutcome { cycles: j, states })
}

/// Random excursions variant: total visits to states −9..9 against the
/// cycle count, p = erfc(|ξ − J| / √(2J(4|x| − 2))). SP 800-22 §2.15.
pub fn random_excursions_variant(bits: &[u8]) -> Result<ExcursionOutcome, TestError> {
    check_bits(bits)?;
    let summary = walk_summary(bits);
    let j = summary.cycles;
    if j < MIN_EXCURSION_CYCLES {
        return Ok(ExcursionOutcome { cycles: j, states: Vec::new() });
    }
    let mut states = Vec::with_capacity(18);
    for (idx, &xi) in summary.xi.iter().enumerate() {
        let x = if idx < 9 { idx as i32 - 9 } else { idx as i32 - 8 };
        let denom = (2.0 * j as f64 * (4.0 * f64::from(x.abs()) - 2.0)).sqrt();
        let p = erfc((xi as f64 - j as f64).abs() / denom);
        states.push((x, KernelResult { statistic: xi as f64, p_value: p }));
    }
    Ok(ExcursionOutcome { cycles: j, states })
}
