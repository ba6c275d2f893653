//! Toeplitz-style hashing over GF(2) for privacy amplification.
//!
//! A seed of `in_len + out_len - 1` bits defines the `out_len x in_len`
//! matrix `T[j][i] = seed[j + i]`; the hash is `T·x`. For any fixed
//! `x != y` exactly a `2^-out_len` fraction of seeds makes them collide.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::stats::{wilson_interval, Interval};

use super::PostprocError;

/// Largest input length for exhaustive seed enumeration.
pub const EXHAUSTIVE_MAX_IN: usize = 10;
/// Largest output length for exhaustive seed enumeration.
pub const EXHAUSTIVE_MAX_OUT: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzSeed {
    in_len: usize,
    out_len: usize,
    seed_bits: BitString,
}

impl ToeplitzSeed {
    pub fn new(in_len: usize, out_len: usize, seed_bits: BitString) -> Result<Self, PostprocError> {
        if out_len > in_len {
            return Err(PostprocError::InvalidSeed(format!(
                "output length {out_len} exceeds input length {in_len}"
            )));
        }
        let expected = seed_len(in_len, out_len);
        if seed_bits.len() != expected {
            return Err(PostprocError::InvalidSeed(format!(
                "seed has {} bits, expected {expected}",
                seed_bits.len()
            )));
        }
        Ok(ToeplitzSeed {
            in_len,
            out_len,
            seed_bits,
        })
    }

    pub fn random<R: Rng>(rng: &mut R, in_len: usize, out_len: usize) -> Result<Self, PostprocError> {
        let bits = (0..seed_len(in_len, out_len)).map(|_| rng.random::<bool>()).collect();
        Self::new(in_len, out_len, BitString(bits))
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    pub fn seed_bits(&self) -> &BitString {
        &self.seed_bits
    }

    pub fn hash(&self, input: &[bool]) -> Result<BitString, PostprocError> {
        toeplitz_hash(self, input)
    }
}

fn seed_len(in_len: usize, out_len: usize) -> usize {
    (in_len + out_len).saturating_sub(1)
}

pub fn toeplitz_hash(seed: &ToeplitzSeed, input: &[bool]) -> Result<BitString, PostprocError> {
    if input.len() != seed.in_len {
        return Err(PostprocError::LengthMismatch {
            expected: seed.in_len,
            got: input.len(),
        });
    }
    let s = pack(&seed.seed_bits.0);
    let x = pack(input);
    Ok(BitString(
        (0..seed.out_len)
            .map(|j| {
                let acc = x
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (w, &xw)| acc ^ (xw & window(&s, j + 64 * w)));
                acc.count_ones() & 1 == 1
            })
            .collect(),
    ))
}

fn pack(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64)
        .map(|c| c.iter().rev().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
        .collect()
}

/// 64 packed bits starting at bit `start`; zeros past the end.
fn window(words: &[u64], start: usize) -> u64 {
    let (q, r) = (start / 64, start % 64);
    let lo = words.get(q).map_or(0, |w| w >> r);
    let hi = if r == 0 { 0 } else { words.get(q + 1).map_or(0, |w| w << (64 - r)) };
    lo | hi
}

/// Hash on packed words: input bit `i` is bit `i` of `x`, seed bit `t` is
/// bit `t` of `seed`, output bit `j` is bit `j` of the result.
fn hash_packed(seed: u64, in_len: usize, out_len: usize, x: u64) -> u64 {
    let in_mask = (1u64 << in_len) - 1;
    (0..out_len).fold(0u64, |acc, j| {
        let row = (seed >> j) & in_mask;
        acc | (u64::from((row & x).count_ones() & 1) << j)
    })
}

fn check_exhaustive(in_len: usize, out_len: usize) -> Result<(), PostprocError> {
    if in_len == 0 || out_len == 0 || out_len > in_len {
        return Err(PostprocError::InvalidSeed(format!(
            "need 1 <= out_len <= in_len, got in={in_len} out={out_len}"
        )));
    }
    if in_len > EXHAUSTIVE_MAX_IN || out_len > EXHAUSTIVE_MAX_OUT {
        return Err(PostprocError::TooLargeForExhaustive { in_len, out_len });
    }
    Ok(())
}

/// Exact fraction of seeds under which `x` and `y` collide.
pub fn family_collision_rate(
    in_len: usize,
    out_len: usize,
    x: &[bool],
    y: &[bool],
) -> Result<Ratio<u64>, PostprocError> {
    check_exhaustive(in_len, out_len)?;
    for v in [x, y] {
        if v.len() != in_len {
            return Err(PostprocError::LengthMismatch {
                expected: in_len,
                got: v.len(),
            });
        }
    }
    if x == y {
        return Err(PostprocError::IdenticalInputs);
    }
    let (px, py) = (BitString(x.to_vec()).to_u64(), BitString(y.to_vec()).to_u64());
    Ok(collision_rate_packed(in_len, out_len, px, py))
}

fn collision_rate_packed(in_len: usize, out_len: usize, x: u64, y: u64) -> Ratio<u64> {
    let seeds = 1u64 << seed_len(in_len, out_len);
    let diff = x ^ y;
    // linear: f(x) = f(y) iff f(x ^ y) = 0
    let hits = (0..seeds)
        .filter(|&s| hash_packed(s, in_len, out_len, diff) == 0)
        .count() as u64;
    Ratio::new(hits, seeds)
}

/// Collision estimate from random seeds, for sizes beyond exhaustive reach.
pub fn sampled_collision_rate<R: Rng>(
    rng: &mut R,
    in_len: usize,
    out_len: usize,
    x: &[bool],
    y: &[bool],
    samples: u64,
) -> Result<(f64, Interval), PostprocError> {
    if x == y {
        return Err(PostprocError::IdenticalInputs);
    }
    let mut hits = 0u64;
    for _ in 0..samples {
        let seed = ToeplitzSeed::random(rng, in_len, out_len)?;
        if seed.hash(x)? == seed.hash(y)? {
            hits += 1;
        }
    }
    let rate = hits as f64 / samples as f64;
    Ok((rate, wilson_interval(hits, samples, 1.96)))
}

/// Exhaustive check of the collision bound over every pair `x != y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub in_len: usize,
    pub out_len: usize,
    pub pairs: u64,
    pub max_rate: Ratio<u64>,
    pub delta: Ratio<u64>,
    pub violations: u64,
    /// Pairs whose collision rate equals `delta` exactly.
    pub equality_witnesses: u64,
}

pub fn exhaustive_delta(in_len: usize, out_len: usize) -> Result<DeltaReport, PostprocError> {
    check_exhaustive(in_len, out_len)?;
    let delta = Ratio::new(1, 1u64 << out_len);
    // collision depends only on x ^ y; each nonzero difference occurs for
    // 2^in_len ordered pairs
    let words = 1u64 << in_len;
    let mut max_rate = Ratio::new(0, 1);
    let (mut violations, mut witnesses) = (0, 0);
    for diff in 1..words {
        let rate = collision_rate_packed(in_len, out_len, 0, diff);
        if rate > max_rate {
            max_rate = rate;
        }
        if rate > delta {
            violations += words;
        }
        if rate == delta {
            witnesses += words;
        }
    }
    Ok(DeltaReport {
        in_len,
        out_len,
        pairs: words * (words - 1),
        max_rate,
        delta,
        violations,
        equality_witnesses: witnesses,
    })
}
