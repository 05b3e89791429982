//! Heralded coincidence extraction: turning a time-tag stream into bits.
//!
//! An A-channel click heralds a partner photon; a B0 or B1 click within the
//! coincidence window (default 25 ns, inclusive) pairs with it and appends a
//! 0 or 1 to the bit string. Matching is one-to-one — no event is reused —
//! and heralds are resolved in time order by a single bounded-memory pass:
//!
//! * a herald with in-window candidates in only one B channel takes the
//!   closest one (equal distances prefer the earlier candidate; the bit is
//!   the same either way);
//! * a herald with candidates in **both** B channels is ambiguous. The
//!   default policy drops the herald and every candidate with no bit; the
//!   `first_match` policy keeps the overall closest candidate instead, and
//!   falls back to the drop behavior when the two channels tie exactly.
//!
//! Dropped groups are tallied so rate accounting stays exact.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tags::{Channel, TimeTagEvent};

/// Default coincidence window: 25 ns on the picosecond clock.
pub const DEFAULT_WINDOW_PS: u64 = 25_000;

/// How to resolve a herald that matches events in both B channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityPolicy {
    /// Drop the herald and every candidate; no bit is emitted. The default:
    /// it introduces no policy-driven bias.
    DiscardAmbiguous,
    /// Keep the candidate with the smallest |Δt|; an exact cross-channel tie
    /// is dropped like an ambiguous group.
    FirstMatch,
}

impl std::str::FromStr for AmbiguityPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "discard_ambiguous" | "discard-ambiguous" => Ok(AmbiguityPolicy::DiscardAmbiguous),
            "first_match" | "first-match" => Ok(AmbiguityPolicy::FirstMatch),
            other => Err(format!(
                "unknown ambiguity policy {other:?} (expected discard_ambiguous or first_match)"
            )),
        }
    }
}

/// Extraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceParams {
    /// Maximum |t_A − t_B| for a pair, in ps (inclusive comparison).
    pub window_ps: u64,
    /// Ambiguity resolution policy.
    pub policy: AmbiguityPolicy,
}

impl Default for CoincidenceParams {
    fn default() -> Self {
        CoincidenceParams {
            window_ps: DEFAULT_WINDOW_PS,
            policy: AmbiguityPolicy::DiscardAmbiguous,
        }
    }
}

/// Extraction failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoincidenceError {
    /// A window of zero would make every comparison fail.
    #[error("coincidence window must be positive")]
    InvalidWindow,
    /// The extractor requires a time-sorted stream.
    #[error("event stream unsorted at index {index}: timestamps must be non-decreasing")]
    UnsortedStream { index: usize },
}

/// The extracted random bit string with its rate accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitString {
    /// Bit values (one byte per bit, values 0 and 1), in herald time order.
    pub bits: Vec<u8>,
    /// Number of A–B0 coincidences (0 bits).
    pub n_coincidences_0: u64,
    /// Number of A–B1 coincidences (1 bits).
    pub n_coincidences_1: u64,
    /// Number of ambiguous herald groups dropped without a bit.
    pub n_ambiguous_discarded: u64,
    /// Span of the input stream (last timestamp), in seconds.
    pub duration_s: f64,
    /// Bits per second over that span.
    pub bit_rate_hz: f64,
}

impl BitString {
    /// Number of extracted bits.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// True when no bits were extracted.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Per-event accounting of one extraction; every input event lands in
/// exactly one bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MatchStats {
    /// Events consumed by coincidences: two per emitted bit.
    pub matched_events: u64,
    /// Ambiguous groups dropped (also counted in `BitString`).
    pub ambiguous_groups: u64,
    /// Events consumed by those drops (each herald plus its candidates).
    pub ambiguous_events: u64,
    /// Heralds that found no candidate at all.
    pub unmatched_a: u64,
    /// B events never claimed by any herald.
    pub unmatched_b: u64,
}

#[derive(Debug, Clone, Copy)]
struct PoolEntry {
    timestamp_ps: u64,
    channel: Channel,
    consumed: bool,
}

/// Extracts the bit string from a sorted stream. See the module docs for the
/// matching rules.
pub fn extract_bits(
    events: &[TimeTagEvent],
    params: &CoincidenceParams,
) -> Result<BitString, CoincidenceError> {
    extract_bits_with_stats(events, params).map(|(bits, _)| bits)
}

/// [`extract_bits`] plus per-event conservation accounting.
pub fn extract_bits_with_stats(
    events: &[TimeTagEvent],
    params: &CoincidenceParams,
) -> Result<(BitString, MatchStats), CoincidenceError> {
    if params.window_ps == 0 {
        return Err(CoincidenceError::InvalidWindow);
    }
    let window = params.window_ps;

    let mut bits: Vec<u8> = Vec::new();
    let mut stats = MatchStats::default();
    let mut n0 = 0u64;
    let mut n1 = 0u64;
    let mut total_b = 0u64;
    let mut consumed_b = 0u64;

    // Heralds wait here until the stream cursor passes their window end.
    let mut pending_a: VecDeque<u64> = VecDeque::new();
    // B events still inside (or ahead of) some live window.
    let mut pool: VecDeque<PoolEntry> = VecDeque::new();

    let resolve = |a_ts: u64,
                   pool: &mut VecDeque<PoolEntry>,
                   bits: &mut Vec<u8>,
                   n0: &mut u64,
                   n1: &mut u64,
                   stats: &mut MatchStats,
                   consumed_b: &mut u64| {
        // Closest unconsumed candidate per channel: (|Δt|, timestamp, slot).
        let mut best: [Option<(u64, u64, usize)>; 2] = [None, None];
        let mut candidate_slots: Vec<usize> = Vec::new();
        for (slot, entry) in pool.iter().enumerate() {
            if entry.consumed {
                continue;
            }
            if entry.timestamp_ps > a_ts.saturating_add(window) {
                break; // pool is time-sorted
            }
            let dt = a_ts.abs_diff(entry.timestamp_ps);
            if dt > window {
                continue;
            }
            candidate_slots.push(slot);
            let lane = if entry.channel == Channel::B0 { 0 } else { 1 };
            let better = match best[lane] {
                None => true,
                // Equal distances prefer the earlier candidate, and sorted
                // iteration already visits it first.
                Some((best_dt, _, _)) => dt < best_dt,
            };
            if better {
                best[lane] = Some((dt, entry.timestamp_ps, slot));
            }
        }

        let discard_group = |pool: &mut VecDeque<PoolEntry>,
                             stats: &mut MatchStats,
                             consumed_b: &mut u64,
                             slots: &[usize]| {
            for &slot in slots {
                pool[slot].consumed = true;
            }
            *consumed_b += slots.len() as u64;
            stats.ambiguous_groups += 1;
            stats.ambiguous_events += 1 + slots.len() as u64;
        };

        let take = |pool: &mut VecDeque<PoolEntry>,
                    bits: &mut Vec<u8>,
                    n0: &mut u64,
                    n1: &mut u64,
                    stats: &mut MatchStats,
                    consumed_b: &mut u64,
                    lane: usize,
                    slot: usize| {
            pool[slot].consumed = true;
            *consumed_b += 1;
            bits.push(lane as u8);
            if lane == 0 {
                *n0 += 1;
            } else {
                *n1 += 1;
            }
            stats.matched_events += 2;
        };

        match (best[0], best[1]) {
            (None, None) => stats.unmatched_a += 1,
            (Some((_, _, slot)), None) => {
                take(pool, bits, n0, n1, stats, consumed_b, 0, slot)
            }
            (None, Some((_, _, slot))) => {
                take(pool, bits, n0, n1, stats, consumed_b, 1, slot)
            }
            (Some((dt0, _, slot0)), Some((dt1, _, slot1))) => match params.policy {
                AmbiguityPolicy::DiscardAmbiguous => {
                    discard_group(pool, stats, consumed_b, &candidate_slots)
                }
                AmbiguityPolicy::FirstMatch => {
                    if dt0 < dt1 {
                        take(pool, bits, n0, n1, stats, consumed_b, 0, slot0);
                    } else if dt1 < dt0 {
                        take(pool, bits, n0, n1, stats, consumed_b, 1, slot1);
                    } else {
                        discard_group(pool, stats, consumed_b, &candidate_slots);
                    }
                }
            },
        }
    };

    let mut prev_ts = 0u64;
    for (index, event) in events.iter().enumerate() {
        if index > 0 && event.timestamp_ps < prev_ts {
            return Err(CoincidenceError::UnsortedStream { index });
        }
        prev_ts = event.timestamp_ps;

        // Heralds whose window can no longer grow are decided now, in order.
        while let Some(&a_ts) = pending_a.front() {
            if event.timestamp_ps > a_ts.saturating_add(window) {
                resolve(a_ts, &mut pool, &mut bits, &mut n0, &mut n1, &mut stats, &mut consumed_b);
                pending_a.pop_front();
            } else {
                break;
            }
        }

        match event.channel {
            Channel::A => pending_a.push_back(event.timestamp_ps),
            _ => {
                total_b += 1;
                pool.push_back(PoolEntry {
                    timestamp_ps: event.timestamp_ps,
                    channel: event.channel,
                    consumed: false,
                });
            }
        }

        // Drop pool entries no live or future window can reach, keeping the
        // memory footprint proportional to one window span of traffic.
        let horizon = pending_a.front().copied().unwrap_or(event.timestamp_ps);
        while let Some(front) = pool.front() {
            if front.consumed || front.timestamp_ps.saturating_add(window) < horizon {
                pool.pop_front();
            } else {
                break;
            }
        }
    }
    while let Some(a_ts) = pending_a.pop_front() {
        resolve(a_ts, &mut pool, &mut bits, &mut n0, &mut n1, &mut stats, &mut consumed_b);
    }

    stats.unmatched_b = total_b - consumed_b;

    let duration_s = events.last().map_or(0.0, |e| e.timestamp_ps as f64 * 1e-12);
    let bit_rate_hz = if duration_s > 0.0 { bits.len() as f64 / duration_s } else { 0.0 };
    Ok((
        BitString {
            bits,
            n_coincidences_0: n0,
            n_coincidences_1: n1,
            n_ambiguous_discarded: stats.ambiguous_groups,
            duration_s,
            bit_rate_hz,
        },
        stats,
    ))
}

/// Expected rate of false coincidences between two independent streams:
/// singles_A · singles_B · 2·window. Rates in Hz, window in ps.
pub fn accidental_rate(singles_a_hz: f64, singles_b_hz: f64, window_ps: u64) -> f64 {
    singles_a_hz * singles_b_hz * 2.0 * window_ps as f64 * 1e-12
}

/// Writes bits as a newline-free ASCII string of '0'/'1' characters.
pub fn write_bits_ascii<W: Write>(bits: &[u8], mut writer: W) -> std::io::Result<()> {
    let ascii: Vec<u8> = bits.iter().map(|&b| b + b'0').collect();
    writer.write_all(&ascii)
}

/// Reads an ASCII bit file as written by [`write_bits_ascii`]. Trailing
/// whitespace is tolerated; anything else is rejected with its offset.
pub fn read_bits_ascii<R: Read>(reader: R) -> std::io::Result<Vec<u8>> {
    let mut text = Vec::new();
    BufReader::new(reader).read_to_end(&mut text)?;
    while matches!(text.last(), Some(b'\n' | b'\r' | b' ' | b'\t')) {
        text.pop();
    }
    text.iter()
        .enumerate()
        .map(|(i, &c)| match c {
            b'0' => Ok(0),
            b'1' => Ok(1),
            other => Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bit file byte {i}: expected '0' or '1', got 0x{other:02x}"),
            )),
        })
        .collect()
}

/// Writes bits packed MSB-first, the final partial byte zero-padded, and the
/// valid-bit count as one line on the sidecar writer.
pub fn write_bits_packed<W: Write, S: Write>(
    bits: &[u8],
    mut data: W,
    mut sidecar: S,
) -> std::io::Result<()> {
    let mut packed = vec![0u8; bits.len().div_ceil(8)];
    for (i, &bit) in bits.iter().enumerate() {
        packed[i / 8] |= bit << (7 - (i % 8));
    }
    data.write_all(&packed)?;
    writeln!(sidecar, "{}", bits.len())
}

/// Reads a packed bit file given the valid-bit count from its sidecar.
pub fn read_bits_packed<R: Read>(reader: R, n_bits: usize) -> std::io::Result<Vec<u8>> {
    let mut packed = Vec::new();
    BufReader::new(reader).read_to_end(&mut packed)?;
    if packed.len() != n_bits.div_ceil(8) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("packed file holds {} bytes but {} bits were declared", packed.len(), n_bits),
        ));
    }
    Ok((0..n_bits).map(|i| (packed[i / 8] >> (7 - (i % 8))) & 1).collect())
}

/// Parses the one-line sidecar produced by [`write_bits_packed`].
pub fn read_packed_sidecar<R: Read>(reader: R) -> std::io::Result<usize> {
    let mut line = String::new();
    BufReader::new(reader).read_line(&mut line)?;
    line.trim().parse().map_err(|e| {
        std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad bit-count sidecar: {e}"))
    })
}
