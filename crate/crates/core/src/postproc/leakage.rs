//! Pre-shared key consumed to one-time-pad the reconciliation syndrome.
//!
//! Two accountings are supported. The conventional one charges
//! `xi·k·h2(Q)` bits for a `k`-bit sifted key. The other treats the sifted
//! key as the information part of an `(n, k)` code, so the parity digits
//! that must be hidden number `n - k` with `n·h2(Q) <= n - k`, giving
//! `k·h2(Q) / (1 - h2(Q))`.

use serde::{Deserialize, Serialize};

use crate::mathcore::entropy_unchecked;

use super::PostprocError;

/// Denominator `1 - h2(Q)` below which the parity-digit accounting is
/// rejected as divergent.
pub const YUEN_MIN_DENOMINATOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LeakModel {
    Conventional { xi: f64 },
    Yuen,
}

impl LeakModel {
    pub fn leak_bits(&self, k: u64, q: f64) -> Result<f64, PostprocError> {
        match *self {
            LeakModel::Conventional { xi } => leak_conventional(k, q, xi),
            LeakModel::Yuen => leak_yuen(k, q),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LeakModel::Conventional { .. } => "conventional",
            LeakModel::Yuen => "yuen",
        }
    }

    pub fn xi(&self) -> Option<f64> {
        match *self {
            LeakModel::Conventional { xi } => Some(xi),
            LeakModel::Yuen => None,
        }
    }
}

fn check_domain(k: u64, q: f64) -> Result<(), PostprocError> {
    if k == 0 {
        return Err(PostprocError::Domain("sifted length must be >= 1".into()));
    }
    if !(0.0..0.5).contains(&q) {
        return Err(PostprocError::Domain(format!("QBER {q} outside [0, 0.5)")));
    }
    Ok(())
}

pub fn leak_conventional(k: u64, q: f64, xi: f64) -> Result<f64, PostprocError> {
    check_domain(k, q)?;
    if !(1.0..=2.0).contains(&xi) {
        return Err(PostprocError::Domain(format!("xi {xi} outside [1, 2]")));
    }
    Ok(xi * k as f64 * entropy_unchecked(q))
}

pub fn leak_yuen(k: u64, q: f64) -> Result<f64, PostprocError> {
    check_domain(k, q)?;
    let h = entropy_unchecked(q);
    let denom = 1.0 - h;
    if denom < YUEN_MIN_DENOMINATOR {
        return Err(PostprocError::Domain(format!(
            "1 - h2(Q) = {denom:e} below {YUEN_MIN_DENOMINATOR:e}; parity-digit leakage diverges"
        )));
    }
    Ok(k as f64 * h / denom)
}

/// QBER above which the parity-digit accounting charges more than the
/// conventional one with factor `xi`: the root of `h2(Q) = 1 - 1/xi`.
pub fn leak_crossover_qber(xi: f64) -> Result<f64, PostprocError> {
    if !(xi > 1.0 && xi <= 2.0) {
        return Err(PostprocError::Domain(format!("xi {xi} must lie in (1, 2]")));
    }
    let target = 1.0 - 1.0 / xi;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy_unchecked(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
