#![allow(dead_code)]
//! Shared helpers for the integration suites: an independent quadratic
//! reference implementation of coincidence matching, plus stream and bit
//! generators.

use holoqrng::coincidence::{AmbiguityPolicy, CoincidenceParams, MatchStats};
use holoqrng::tags::{Channel, TimeTagEvent};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference coincidence matcher, deliberately naive: for every herald, in
/// time order, rescan the sorted stream for every unconsumed B event inside
/// the window and apply the documented rules directly. No pools, no pruning,
/// no shared state with the streaming extractor — only the rules:
///
/// * candidates are unconsumed B events with |Δt| ≤ window (inclusive);
/// * per channel the best candidate minimizes |Δt|, ties to the earlier
///   timestamp;
/// * one channel with candidates → take its best (bit 0 for B0, 1 for B1);
/// * both channels → ambiguous: `DiscardAmbiguous` consumes the whole group
///   with no bit; `FirstMatch` takes the overall closest, but an exact
///   cross-channel tie falls back to the group discard.
pub fn brute_force_extract(
    events: &[TimeTagEvent],
    params: &CoincidenceParams,
) -> (Vec<u8>, MatchStats) {
    let mut consumed = vec![false; events.len()];
    let mut bits: Vec<u8> = Vec::new();
    let mut stats = MatchStats::default();

    for herald in events {
        if herald.channel != Channel::A {
            continue;
        }
        let a_ts = herald.timestamp_ps;

        // Restrict the rescan to the window's time span (the stream is
        // sorted); within it, examine every event.
        let lo = events.partition_point(|e| e.timestamp_ps < a_ts.saturating_sub(params.window_ps));
        let mut candidates: Vec<usize> = Vec::new();
        for j in lo..events.len() {
            if events[j].timestamp_ps > a_ts.saturating_add(params.window_ps) {
                break;
            }
            if events[j].channel != Channel::A
                && !consumed[j]
                && events[j].timestamp_ps.abs_diff(a_ts) <= params.window_ps
            {
                candidates.push(j);
            }
        }

        let best_in = |channel: Channel| -> Option<usize> {
            candidates
                .iter()
                .copied()
                .filter(|&j| events[j].channel == channel)
                .min_by_key(|&j| (events[j].timestamp_ps.abs_diff(a_ts), events[j].timestamp_ps))
        };
        let best0 = best_in(Channel::B0);
        let best1 = best_in(Channel::B1);

        // The outcomes, spelled out.
        enum Outcome {
            Unmatched,
            Take(usize, u8),
            DiscardGroup,
        }
        let outcome = match (best0, best1) {
            (None, None) => Outcome::Unmatched,
            (Some(j), None) => Outcome::Take(j, 0),
            (None, Some(j)) => Outcome::Take(j, 1),
            (Some(j0), Some(j1)) => {
                let d0 = events[j0].timestamp_ps.abs_diff(a_ts);
                let d1 = events[j1].timestamp_ps.abs_diff(a_ts);
                match params.policy {
                    AmbiguityPolicy::DiscardAmbiguous => Outcome::DiscardGroup,
                    AmbiguityPolicy::FirstMatch => {
                        if d0 < d1 {
                            Outcome::Take(j0, 0)
                        } else if d1 < d0 {
                            Outcome::Take(j1, 1)
                        } else {
                            Outcome::DiscardGroup
                        }
                    }
                }
            }
        };
        match outcome {
            Outcome::Unmatched => stats.unmatched_a += 1,
            Outcome::Take(j, bit) => {
                consumed[j] = true;
                bits.push(bit);
                stats.matched_events += 2;
            }
            Outcome::DiscardGroup => {
                for &j in &candidates {
                    consumed[j] = true;
                }
                stats.ambiguous_groups += 1;
                stats.ambiguous_events += 1 + candidates.len() as u64;
            }
        }
    }

    stats.unmatched_b = events
        .iter()
        .enumerate()
        .filter(|&(j, e)| e.channel != Channel::A && !consumed[j])
        .count() as u64;
    (bits, stats)
}

/// Random stream on a coarse timestamp grid: collisions and exact ties are
/// frequent by construction, which is what stresses the matching rules.
pub fn grid_stream(
    seed: u64,
    n_events: usize,
    span_ps: u64,
    grid_ps: u64,
    p_a: f64,
    p_b0: f64,
) -> Vec<TimeTagEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = (span_ps / grid_ps).max(1);
    let mut events: Vec<TimeTagEvent> = (0..n_events)
        .map(|_| {
            let ts = rng.gen_range(0..=slots) * grid_ps;
            let u: f64 = rng.gen();
            let channel = if u < p_a {
                Channel::A
            } else if u < p_a + p_b0 {
                Channel::B0
            } else {
                Channel::B1
            };
            TimeTagEvent::new(channel, ts)
        })
        .collect();
    events.sort_unstable();
    events
}

/// Unbiased random bits from a seeded generator.
pub fn random_bits(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0u8; n];
    let mut word = 0u64;
    for (i, b) in out.iter_mut().enumerate() {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        *b = (word & 1) as u8;
        word >>= 1;
    }
    out
}

/// Bernoulli(p₁) bits from a seeded generator.
pub fn biased_bits(seed: u64, n: usize, p_one: f64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| u8::from(rng.gen::<f64>() < p_one)).collect()
}
