//! Closed-form eavesdropper bounds.
//!
//! Every bound is returned as a [`Log2Value`]. A few of them (the near-miss
//! estimate in particular) can exceed one; they are reported unclamped and
//! callers read [`Log2Value::exceeds_unity`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::mathcore::{self, entropy_unchecked, Log2Value, MathError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("epsilon must be a probability (exponent <= 0), got 2^{0}")]
    EpsilonAboveOne(f64),
    #[error("key length must be at least 1 bit")]
    EmptyKey,
    #[error("xi must lie in [1, 2], got {0}")]
    XiOutOfRange(f64),
    #[error("unknown bits {unknown} outside [1, {key_bits}]")]
    UnknownBitsOutOfRange { unknown: u64, key_bits: u64 },
    #[error("Q_E must lie in [0, 0.5], got {0}")]
    QeOutOfRange(f64),
    #[error("{0} must be a probability (exponent <= 0)")]
    NotAProbability(&'static str),
    #[error("plaintext has {plain} bits but key has {key} bits")]
    LengthMismatch { plain: u32, key: u32 },
    #[error("distribution over {bits} bits: {reason}")]
    InvalidDistribution { bits: u32, reason: String },
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Security parameters: trace-distance bound, final key length and the
/// reconciliation efficiency factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    epsilon: Log2Value,
    key_bits: u64,
    xi: f64,
}

impl SecurityParams {
    pub fn new(epsilon: Log2Value, key_bits: u64, xi: f64) -> Result<Self, BoundsError> {
        if epsilon.exceeds_unity() {
            return Err(BoundsError::EpsilonAboveOne(epsilon.exponent()));
        }
        if key_bits == 0 {
            return Err(BoundsError::EmptyKey);
        }
        if !(1.0..=2.0).contains(&xi) {
            return Err(BoundsError::XiOutOfRange(xi));
        }
        Ok(SecurityParams { epsilon, key_bits, xi })
    }

    /// Parameters with the customary `xi = 1.1`.
    pub fn with_default_xi(epsilon: Log2Value, key_bits: u64) -> Result<Self, BoundsError> {
        Self::new(epsilon, key_bits, 1.1)
    }

    pub fn epsilon(&self) -> Log2Value {
        self.epsilon
    }

    pub fn key_bits(&self) -> u64 {
        self.key_bits
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Pure-guessing floor `2^-|K|`.
pub fn guessing_floor(key_bits: u64) -> Log2Value {
    Log2Value::pow2(-(key_bits as i64))
}

/// Upper bound on Eve's probability of producing the whole key:
/// `2^-|K| + epsilon`.
pub fn guessing_bound(params: &SecurityParams) -> Log2Value {
    guessing_floor(params.key_bits) + params.epsilon
}

/// Guessing bound for the part of the key still unknown to Eve after a
/// known-plaintext attack revealed `key_bits - unknown_bits` bits.
pub fn kpa_bound(params: &SecurityParams, unknown_bits: u64) -> Result<Log2Value, BoundsError> {
    if unknown_bits == 0 || unknown_bits > params.key_bits {
        return Err(BoundsError::UnknownBitsOutOfRange {
            unknown: unknown_bits,
            key_bits: params.key_bits,
        });
    }
    Ok(guessing_floor(unknown_bits) + params.epsilon)
}

/// The two terms of the near-miss estimate, kept apart so the dominant one
/// can be reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearMiss {
    /// `2^(-|K|(1 - h2(Q_E)))`
    pub blind_term: Log2Value,
    /// `epsilon · 2^(|K| h2(Q_E))`
    pub epsilon_term: Log2Value,
    pub total: Log2Value,
}

/// Rough bound on Eve holding a key within bit-error rate `q_e` of the real
/// one. May exceed one.
pub fn near_miss_bound(params: &SecurityParams, q_e: f64) -> Result<Log2Value, BoundsError> {
    near_miss_terms(params, q_e).map(|t| t.total)
}

pub fn near_miss_terms(params: &SecurityParams, q_e: f64) -> Result<NearMiss, BoundsError> {
    if !(0.0..=0.5).contains(&q_e) {
        return Err(BoundsError::QeOutOfRange(q_e));
    }
    let k = params.key_bits as f64;
    let ball = k * entropy_unchecked(q_e);
    let blind_term = Log2Value::from_exponent(-(k - ball))?;
    let epsilon_term = params.epsilon * Log2Value::from_exponent(ball)?;
    Ok(NearMiss {
        blind_term,
        epsilon_term,
        total: blind_term + epsilon_term,
    })
}

/// Exact log2 of the number of keys within `floor(|K| Q_E)` errors of a
/// given key, for cross-checking the entropy relaxation used by
/// [`near_miss_bound`].
pub fn near_miss_ball_exact(key_bits: u64, q_e: f64) -> Result<Log2Value, BoundsError> {
    if !(0.0..=0.5).contains(&q_e) {
        return Err(BoundsError::QeOutOfRange(q_e));
    }
    let t = (key_bits as f64 * q_e + 1e-9).floor() as u64;
    Ok(mathcore::log2_binomial_sum(key_bits, t.min(key_bits))?)
}

/// Eve's success after privacy amplification with a delta-almost-two-universal
/// family: `(1 - delta)·p + delta`.
pub fn pa_guess_bound(p_correct: Log2Value, delta: Log2Value) -> Result<Log2Value, BoundsError> {
    if p_correct.exceeds_unity() {
        return Err(BoundsError::NotAProbability("p_correct"));
    }
    if delta.exceeds_unity() {
        return Err(BoundsError::NotAProbability("delta"));
    }
    if p_correct == Log2Value::ONE {
        return Ok(Log2Value::ONE);
    }
    let keep = delta.complement().ok_or(BoundsError::NotAProbability("delta"))?;
    let out = keep * p_correct + delta;
    // rounding in the log domain must not push a probability above one
    Ok(if out.exceeds_unity() { Log2Value::ONE } else { out })
}

/// Probability distribution over `bits`-bit strings, indexed by value.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    bits: u32,
    probs: Vec<BigRational>,
}

impl JointDistribution {
    pub fn from_rationals(bits: u32, probs: Vec<BigRational>) -> Result<Self, BoundsError> {
        let invalid = |reason: &str| BoundsError::InvalidDistribution {
            bits,
            reason: reason.to_string(),
        };
        if bits > 16 {
            return Err(invalid("at most 16 bits supported for exhaustive tables"));
        }
        if probs.len() != 1usize << bits {
            return Err(invalid("table length must be 2^bits"));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(invalid("negative probability"));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(invalid("probabilities do not sum to 1"));
        }
        Ok(JointDistribution { bits, probs })
    }

    /// Ratios `num/den` per symbol.
    pub fn from_ratios(bits: u32, ratios: &[(i64, i64)]) -> Result<Self, BoundsError> {
        let probs = ratios
            .iter()
            .map(|&(n, d)| {
                if d == 0 {
                    Err(BoundsError::InvalidDistribution {
                        bits,
                        reason: "zero denominator".into(),
                    })
                } else {
                    Ok(BigRational::new(BigInt::from(n), BigInt::from(d)))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rationals(bits, probs)
    }

    /// Floating-point probabilities; each is converted exactly and the table
    /// is renormalised if it sums to one within 1e-12.
    pub fn from_f64(bits: u32, probs: &[f64]) -> Result<Self, BoundsError> {
        let invalid = |reason: &str| BoundsError::InvalidDistribution {
            bits,
            reason: reason.to_string(),
        };
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(invalid("probabilities do not sum to 1 within 1e-12"));
        }
        let exact = probs
            .iter()
            .map(|&p| BigRational::from_f64(p).ok_or_else(|| invalid("non-finite probability")))
            .collect::<Result<Vec<_>, _>>()?;
        let total: BigRational = exact.iter().sum();
        let normalised = exact.into_iter().map(|p| p / &total).collect();
        Self::from_rationals(bits, normalised)
    }

    pub fn uniform(bits: u32) -> Result<Self, BoundsError> {
        let size = 1i64 << bits;
        Self::from_ratios(bits, &vec![(1, size); size as usize])
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn prob(&self, symbol: usize) -> &BigRational {
        &self.probs[symbol]
    }

    pub fn is_uniform(&self) -> bool {
        self.probs.iter().all(|p| *p == self.probs[0])
    }
}

/// One row of the one-time-pad secrecy table: the plaintext distribution
/// seen by someone holding ciphertext `ciphertext`.
#[derive(Debug, Clone, PartialEq)]
pub struct CiphertextRow {
    pub ciphertext: usize,
    pub prob_ciphertext: BigRational,
    pub posterior: Vec<BigRational>,
    /// `max_x |Pr(X=x | C=c) - Pr(X=x)|` for this ciphertext.
    pub deviation: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyReport {
    pub prior: Vec<BigRational>,
    pub rows: Vec<CiphertextRow>,
    /// `max_{x,c} |Pr(X=x | C=c) - Pr(X=x)|` over ciphertexts with nonzero
    /// probability.
    pub max_deviation: BigRational,
}

impl SecrecyReport {
    pub fn max_deviation_f64(&self) -> f64 {
        self.max_deviation.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_perfectly_secret(&self) -> bool {
        self.max_deviation.is_zero()
    }
}

/// Exhaustive one-time-pad table `C = X xor K` with an independent key.
///
/// With a plaintext of full support the deviation is zero exactly when the
/// key is uniform.
pub fn otp_secrecy_table(
    plaintext: &JointDistribution,
    key: &JointDistribution,
) -> Result<SecrecyReport, BoundsError> {
    if plaintext.bits != key.bits {
        return Err(BoundsError::LengthMismatch {
            plain: plaintext.bits,
            key: key.bits,
        });
    }
    let size = 1usize << plaintext.bits;
    let mut rows = Vec::with_capacity(size);
    let mut max_deviation = BigRational::zero();
    for c in 0..size {
        let joint: Vec<BigRational> = (0..size)
            .map(|x| &plaintext.probs[x] * &key.probs[c ^ x])
            .collect();
        let prob_c: BigRational = joint.iter().sum();
        if prob_c.is_zero() {
            continue;
        }
        let posterior: Vec<BigRational> = joint.into_iter().map(|j| j / &prob_c).collect();
        let deviation = posterior
            .iter()
            .zip(&plaintext.probs)
            .map(|(post, prior)| (post - prior).abs())
            .max()
            .unwrap_or_else(BigRational::zero);
        if deviation > max_deviation {
            max_deviation = deviation.clone();
        }
        rows.push(CiphertextRow {
            ciphertext: c,
            prob_ciphertext: prob_c,
            posterior,
            deviation,
        });
    }
    Ok(SecrecyReport {
        prior: plaintext.probs.clone(),
        rows,
        max_deviation,
    })
}
