//! Exact and log-domain numerics.
//!
//! Probabilities in this crate routinely span thousands of binary orders of
//! magnitude (a 2^-50 trace distance next to a 2^-1,000,000 guessing floor),
//! so they are carried as base-2 exponents ([`Log2Value`]) and only turned
//! back into linear numbers for display. Binomial tail sums are computed
//! exactly with big integers ([`BigCount`]).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("exponent must be finite or -inf, got {0}")]
    InvalidExponent(f64),
    #[error("threshold t={t} exceeds length n={n}")]
    ThresholdExceedsLength { n: u64, t: u64 },
    #[error("error rate {0} outside [0, 0.5)")]
    ErrorRateOutOfRange(f64),
    #[error("key length must be at least 1")]
    EmptyKey,
    #[error(
        "no code length n in [{k}, {ceiling}] satisfies the Hamming bound for Q={q} \
         (h2(Q) >= 1 - k/n throughout the search range)"
    )]
    ParityLengthNotFound { k: u64, q: f64, ceiling: u64 },
}

/// A nonnegative quantity stored as its base-2 logarithm.
///
/// `-inf` encodes zero. NaN and `+inf` are unrepresentable. Values above one
/// are allowed (loose bounds can exceed unity); callers that need a
/// probability check [`Log2Value::exceeds_unity`].
#[derive(Clone, Copy, PartialEq)]
pub struct Log2Value(f64);

impl Log2Value {
    pub const ZERO: Log2Value = Log2Value(f64::NEG_INFINITY);
    pub const ONE: Log2Value = Log2Value(0.0);

    pub fn from_exponent(exponent: f64) -> Result<Self, MathError> {
        if exponent.is_nan() || exponent == f64::INFINITY {
            return Err(MathError::InvalidExponent(exponent));
        }
        Ok(Log2Value(exponent))
    }

    /// `2^exponent` for an integer exponent; exact in the exponent.
    pub fn pow2(exponent: i64) -> Self {
        Log2Value(exponent as f64)
    }

    pub fn from_linear(value: f64) -> Result<Self, MathError> {
        if !(value >= 0.0) || value.is_infinite() {
            return Err(MathError::ProbabilityOutOfRange(value));
        }
        Ok(Log2Value(value.log2()))
    }

    pub fn from_probability(p: f64) -> Result<Self, MathError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MathError::ProbabilityOutOfRange(p));
        }
        Ok(Log2Value(p.log2()))
    }

    pub fn exponent(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn exceeds_unity(self) -> bool {
        self.0 > 0.0
    }

    /// Linear value, possibly `0.0` on underflow or `inf` on overflow.
    pub fn to_linear(self) -> f64 {
        self.0.exp2()
    }

    /// Linear value clamped to `[0, 1]`, plus a flag telling whether the
    /// clamp was applied.
    pub fn to_saturated(self) -> (f64, bool) {
        if self.exceeds_unity() {
            (1.0, true)
        } else {
            (self.to_linear(), false)
        }
    }

    /// `log2(1 - 2^e)` for a probability; `None` when the value exceeds one.
    pub fn complement(self) -> Option<Log2Value> {
        if self.exceeds_unity() {
            return None;
        }
        if self.is_zero() {
            return Some(Log2Value::ONE);
        }
        // ln(1 - 2^e) = ln_1p(-2^e); for e close to 0 use exp_m1 on the
        // natural-log side to keep precision.
        let ln_p = self.0 * std::f64::consts::LN_2;
        let ln_comp = if ln_p > -std::f64::consts::LN_2 {
            (-ln_p.exp_m1()).ln()
        } else {
            (-ln_p.exp()).ln_1p()
        };
        Some(Log2Value(ln_comp / std::f64::consts::LN_2))
    }
}

impl Add for Log2Value {
    type Output = Log2Value;

    /// `log2(2^a + 2^b)` with the larger exponent factored out.
    fn add(self, rhs: Log2Value) -> Log2Value {
        let (hi, lo) = if self.0 >= rhs.0 { (self.0, rhs.0) } else { (rhs.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return Log2Value(hi);
        }
        Log2Value(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2)
    }
}

impl Mul for Log2Value {
    type Output = Log2Value;

    fn mul(self, rhs: Log2Value) -> Log2Value {
        if self.is_zero() || rhs.is_zero() {
            return Log2Value::ZERO;
        }
        Log2Value(self.0 + rhs.0)
    }
}

impl PartialOrd for Log2Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Debug for Log2Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^({})", self.0)
    }
}

impl fmt::Display for Log2Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "2^({})", self.0)
        }
    }
}

// JSON cannot carry -inf, so zero is written as the string "-inf".
impl Serialize for Log2Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_zero() {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Log2Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExpVisitor;

        impl Visitor<'_> for ExpVisitor {
            type Value = Log2Value;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a base-2 exponent or \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Log2Value, E> {
                Log2Value::from_exponent(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Log2Value, E> {
                Ok(Log2Value(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Log2Value, E> {
                Ok(Log2Value(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Log2Value, E> {
                parse_log2(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExpVisitor)
    }
}

/// Parses an exponent written as a plain real or `-inf`.
pub fn parse_log2(text: &str) -> Result<Log2Value, String> {
    let trimmed = text.trim();
    if matches!(trimmed, "-inf" | "-infinity" | "-Inf" | "-INF") {
        return Ok(Log2Value::ZERO);
    }
    let e: f64 = trimmed
        .parse()
        .map_err(|_| format!("`{text}` is not a base-2 exponent (use a real or -inf)"))?;
    Log2Value::from_exponent(e).map_err(|err| err.to_string())
}

/// An exact nonnegative integer count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(pub BigUint);

impl BigCount {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Base-2 logarithm of the count (`-inf` for zero).
    ///
    /// Uses the top 64 bits of the integer, so the relative error is at the
    /// level of f64 rounding regardless of the magnitude.
    pub fn log2(&self) -> Log2Value {
        log2_biguint(&self.0)
    }

    /// `ceil(log2(count))` computed exactly; zero for a count of one.
    pub fn ceil_log2(&self) -> u64 {
        if self.0.is_zero() {
            return 0;
        }
        (&self.0 - 1u32).bits()
    }
}

fn log2_biguint(x: &BigUint) -> Log2Value {
    if x.is_zero() {
        return Log2Value::ZERO;
    }
    let bits = x.bits();
    if bits <= 64 {
        let v = x.iter_u64_digits().next().unwrap_or(0);
        return Log2Value((v as f64).log2());
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    let top = top.iter_u64_digits().next().unwrap_or(0);
    Log2Value((top as f64).log2() + shift as f64)
}

/// Binary Shannon entropy `h2(q)` in bits.
///
/// The `(1-q)·log2(1/(1-q))` term goes through `ln_1p` so that the result
/// keeps full relative precision for q down to the subnormal range.
pub fn binary_entropy(q: f64) -> Result<f64, MathError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(MathError::ProbabilityOutOfRange(q));
    }
    Ok(entropy_unchecked(q))
}

pub(crate) fn entropy_unchecked(q: f64) -> f64 {
    if q == 0.0 || q == 1.0 {
        return 0.0;
    }
    let (small, large) = if q <= 0.5 { (q, 1.0 - q) } else { (1.0 - q, q) };
    let a = -small * small.log2();
    let b = -large * (-small).ln_1p() / std::f64::consts::LN_2;
    a + b
}

/// `sum_{a=0}^{t} C(n, a)`, exactly.
pub fn binomial_sum(n: u64, t: u64) -> Result<BigCount, MathError> {
    if t > n {
        return Err(MathError::ThresholdExceedsLength { n, t });
    }
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for a in 0..t {
        term *= n - a;
        term /= a + 1;
        total += &term;
    }
    Ok(BigCount(total))
}

pub fn log2_binomial_sum(n: u64, t: u64) -> Result<Log2Value, MathError> {
    binomial_sum(n, t).map(|c| c.log2())
}

/// Largest `m` with `2^m <= 2^k / sum_{a<=t} C(k, a)`: the number of
/// information digits a length-`k` code correcting `t` errors can carry.
pub fn hamming_max_info_bits(k: u64, t: u64) -> Result<u64, MathError> {
    let ball = binomial_sum(k, t)?;
    // 2^m * ball <= 2^k  <=>  m <= k - log2(ball)  <=>  m = k - ceil(log2(ball))
    Ok(k - ball.ceil_log2())
}

/// Extra lengths searched beyond the entropy closed form before giving up.
pub const PARITY_SEARCH_SLACK: u64 = 64;

/// Error-count threshold used for a length-`n` block at error rate `q`:
/// `q·n` rounded to nearest, halves rounding up.
pub fn correctable_errors(q: f64, n: u64) -> u64 {
    (q * n as f64 + 0.5 + 1e-9).floor() as u64
}

/// Smallest code length `n >= k` such that a length-`n` code with `k`
/// information digits can satisfy the Hamming bound for
/// `round(Q·n)` errors: `sum_{a<=round(Qn)} C(n, a) <= 2^(n-k)`.
///
/// The search is exact; `ceil(k / (1 - h2(Q)))` only sets the search
/// ceiling (plus [`PARITY_SEARCH_SLACK`]).
pub fn solve_parity_length(k: u64, q: f64) -> Result<u64, MathError> {
    if k == 0 {
        return Err(MathError::EmptyKey);
    }
    if !(0.0..0.5).contains(&q) {
        return Err(MathError::ErrorRateOutOfRange(q));
    }
    let closed = (k as f64 / (1.0 - entropy_unchecked(q))).ceil() as u64;
    let ceiling = closed.saturating_mul(2).saturating_add(PARITY_SEARCH_SLACK);
    solve_parity_length_within(k, q, ceiling)
}

pub fn solve_parity_length_within(k: u64, q: f64, ceiling: u64) -> Result<u64, MathError> {
    if k == 0 {
        return Err(MathError::EmptyKey);
    }
    if !(0.0..0.5).contains(&q) {
        return Err(MathError::ErrorRateOutOfRange(q));
    }
    for n in k..=ceiling {
        let t = correctable_errors(q, n).min(n);
        let ball = binomial_sum(n, t)?;
        if ball.ceil_log2() <= n - k {
            return Ok(n);
        }
    }
    Err(MathError::ParityLengthNotFound { k, q, ceiling })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_reference_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.05).unwrap() - 0.286_397).abs() < 1e-5);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_small_argument_precision() {
        // 1e6 * h2(1e-6) = 21.374262888865376600806... (50-digit reference)
        let v = 1e6 * binary_entropy(1e-6).unwrap();
        assert!((v - 21.374_262_888_865_377).abs() < 1e-9, "{v}");
        // 1e6 * h2(2.5e-6) - 50 = 0.130834279888678...
        let v = 1e6 * binary_entropy(2.5e-6).unwrap() - 50.0;
        assert!((v - 0.130_834_279_888_678).abs() < 1e-8, "{v}");
    }

    #[test]
    fn binomial_sum_examples() {
        assert_eq!(binomial_sum(7, 1).unwrap().0, BigUint::from(8u32));
        assert_eq!(binomial_sum(5, 5).unwrap().0, BigUint::from(32u32));
        assert_eq!(binomial_sum(10, 0).unwrap().0, BigUint::from(1u32));
        assert!(binomial_sum(3, 4).is_err());
    }

    #[test]
    fn log2_binomial_sum_examples() {
        assert_eq!(log2_binomial_sum(7, 1).unwrap().exponent(), 3.0);
        assert!(log2_binomial_sum(20, 10).unwrap().exponent() <= 20.0);
        let bound = 64.0 * binary_entropy(0.125).unwrap();
        let v = log2_binomial_sum(64, 8).unwrap().exponent();
        // log2 S(64, 8) = 32.2564971543252764...
        assert!((v - 32.256_497_154_325_28).abs() < 1e-9);
        assert!(v <= bound);
    }

    #[test]
    fn log2_of_huge_counts() {
        let full = binomial_sum(3000, 3000).unwrap();
        assert_eq!(full.log2().exponent(), 3000.0);
        assert_eq!(full.ceil_log2(), 3000);
    }

    #[test]
    fn hamming_info_bits_examples() {
        assert_eq!(hamming_max_info_bits(7, 1).unwrap(), 4);
        assert_eq!(hamming_max_info_bits(10, 0).unwrap(), 10);
        assert_eq!(hamming_max_info_bits(15, 1).unwrap(), 11);
        assert!(hamming_max_info_bits(3, 4).is_err());
    }

    #[test]
    fn parity_length_examples() {
        assert_eq!(solve_parity_length(4, 1.0 / 7.0).unwrap(), 7);
        assert_eq!(solve_parity_length(1, 1e-12).unwrap(), 1);
        assert_eq!(solve_parity_length(1, 0.0).unwrap(), 1);
        // exact search value from an independent big-integer enumeration
        let n = solve_parity_length(100, 0.05).unwrap();
        assert_eq!(n, 138);
        let closed = (100.0 / (1.0 - binary_entropy(0.05).unwrap())).ceil() as u64;
        assert!((100..=closed + 8).contains(&n));
        assert!(solve_parity_length(0, 0.1).is_err());
        assert!(solve_parity_length(5, 0.5).is_err());
    }

    #[test]
    fn parity_length_search_ceiling_is_reported() {
        let err = solve_parity_length_within(50, 0.2, 60).unwrap_err();
        assert!(matches!(err, MathError::ParityLengthNotFound { ceiling: 60, .. }));
    }

    #[test]
    fn parity_length_within_slack_of_closed_form() {
        for k in [10u64, 50, 100, 400] {
            for q in [0.01, 0.03, 0.05, 0.08, 0.11] {
                let n = solve_parity_length(k, q).unwrap();
                let closed = (k as f64 / (1.0 - binary_entropy(q).unwrap())).ceil() as u64;
                assert!(n <= closed + 8, "k={k} q={q} n={n} closed={closed}");
            }
        }
    }

    #[test]
    fn log2_addition_examples() {
        let a = Log2Value::pow2(-3);
        assert_eq!((a + a).exponent(), -2.0);
        assert_eq!((Log2Value::ZERO + a).exponent(), -3.0);
        assert!((Log2Value::ZERO + Log2Value::ZERO).is_zero());
        let tiny = Log2Value::pow2(-1_000_000);
        assert_eq!((Log2Value::pow2(-50) + tiny).exponent(), -50.0);
    }

    #[test]
    fn complement_examples() {
        let half = Log2Value::from_probability(0.5).unwrap();
        assert!((half.complement().unwrap().exponent() + 1.0).abs() < 1e-15);
        assert_eq!(Log2Value::ONE.complement().unwrap(), Log2Value::ZERO);
        let small = Log2Value::pow2(-60).complement().unwrap().exponent();
        assert!(small < 0.0 && small > -1e-17);
        assert!(Log2Value::pow2(1).complement().is_none());
    }

    #[test]
    fn exponent_validation() {
        assert!(Log2Value::from_exponent(f64::NAN).is_err());
        assert!(Log2Value::from_exponent(f64::INFINITY).is_err());
        assert!(Log2Value::from_exponent(f64::NEG_INFINITY).unwrap().is_zero());
        assert!(parse_log2("-inf").unwrap().is_zero());
        assert_eq!(parse_log2("-50").unwrap().exponent(), -50.0);
        assert!(parse_log2("abc").is_err());
    }

    #[test]
    fn log2_serde_round_trip() {
        let values = [Log2Value::ZERO, Log2Value::pow2(-52), Log2Value::from_exponent(0.25).unwrap()];
        let json = serde_json::to_string(&values).unwrap();
        assert_eq!(json, r#"["-inf",-52.0,0.25]"#);
        let back: Vec<Log2Value> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn entropy_bound_on_binomial_sums_exhaustive() {
        for n in 1..=64u64 {
            for t in 0..=n / 2 {
                let lhs = log2_binomial_sum(n, t).unwrap().exponent();
                let rhs = n as f64 * binary_entropy(t as f64 / n as f64).unwrap();
                assert!(lhs <= rhs + 1e-9, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn full_binomial_sum_is_power_of_two() {
        for n in 0..=64u64 {
            assert_eq!(binomial_sum(n, n).unwrap().0, BigUint::one() << n);
        }
    }

    #[test]
    fn info_bits_plus_redundancy_within_length() {
        for k in 0..=30u64 {
            for t in 0..=k {
                let m = hamming_max_info_bits(k, t).unwrap() as f64;
                let r = log2_binomial_sum(k, t).unwrap().exponent();
                assert!(m + r <= k as f64 + 1e-9, "k={k} t={t}");
            }
        }
    }

    fn exponent() -> impl Strategy<Value = Log2Value> {
        (-200.0f64..20.0).prop_map(|e| Log2Value::from_exponent(e).unwrap())
    }

    proptest! {
        #[test]
        fn entropy_is_symmetric(q in 0.0f64..=1.0) {
            let a = binary_entropy(q).unwrap();
            let b = binary_entropy(1.0 - q).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn log_addition_commutes_and_associates(a in exponent(), b in exponent(), c in exponent()) {
            prop_assert_eq!((a + b).exponent(), (b + a).exponent());
            let left = ((a + b) + c).exponent();
            let right = (a + (b + c)).exponent();
            prop_assert!((left - right).abs() <= 1e-12 * left.abs().max(1.0));
        }

        #[test]
        fn log_addition_is_monotone(a in -100.0f64..0.0, gap in -40.0f64..40.0) {
            let x = Log2Value::from_exponent(a).unwrap();
            let y = Log2Value::from_exponent(a + gap).unwrap();
            let s = (x + y).exponent();
            prop_assert!(s > a && s > a + gap);
            prop_assert!(s >= x.exponent().max(y.exponent()));
        }

        #[test]
        fn log_addition_matches_linear(a in -30.0f64..5.0, b in -30.0f64..5.0) {
            let s = (Log2Value::from_exponent(a).unwrap() + Log2Value::from_exponent(b).unwrap()).to_linear();
            let direct = a.exp2() + b.exp2();
            prop_assert!((s - direct).abs() <= 1e-12 * direct);
        }
    }
}
