//! Brute-force oracle suites: exhaustive big-integer checks of the counting
//! bounds, randomized cq-state inequality checks, and exhaustive hash-family
//! enumeration. Shared by the command-line `verify` runner and the
//! acceptance target.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Pow};
use rand::Rng;
use serde::Serialize;

use crate::bounds::{kpa_bound, SecurityParams};
use crate::mathcore::{binomial_sum, hamming_max_info_bits, solve_parity_length, Log2Value};
use crate::postproc::shrinkage::{key_as_codeword, key_with_appended_parity};
use crate::postproc::toeplitz::exhaustive_delta;
use crate::postproc::LinearCodeSpec;
use crate::qstate::{
    build_ideal_state, build_real_state, cq_trace_distance, gamma_expectation, guessing_probability, kpa_reduce,
    optimal_classical_povm, optimal_guess_classical, random, trace_distance, CqBlock, CqState,
    DensityMatrix, Povm, StateError,
};

/// Slack allowed on floating-point inequalities.
pub const FLOAT_TOL: f64 = 1e-9;
pub const MAX_ENTROPY_N: u64 = 64;
pub const MAX_KEY_BITS: u32 = 3;
pub const MAX_EVE_DIM: usize = 4;
pub const HASH_MAX_IN: usize = 6;
pub const HASH_MAX_OUT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    /// Largest observed `lhs - rhs` for float inequalities.
    pub worst_gap: Option<f64>,
    /// `(seed, trial)` of the first violation, for randomized checks.
    pub first_failure: Option<(u64, u64)>,
}

impl Check {
    fn new(name: &str) -> Self {
        Check {
            name: name.into(),
            checked: 0,
            violations: 0,
            worst_gap: None,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, at: Option<(u64, u64)>) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = at;
            }
        }
    }

    fn record_bulk(&mut self, checked: u64, violations: u64) {
        self.checked += checked;
        self.violations += violations;
    }

    /// Records `lhs <= rhs + FLOAT_TOL`.
    fn record_le(&mut self, lhs: f64, rhs: f64, at: (u64, u64)) {
        let gap = lhs - rhs;
        self.worst_gap = Some(self.worst_gap.map_or(gap, |g| g.max(gap)));
        self.record(gap <= FLOAT_TOL, Some(at));
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checked > 0
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} hold",
            if self.passed() { "ok  " } else { "FAIL" },
            self.name,
            self.checked - self.violations,
            self.checked
        )?;
        if let Some(g) = self.worst_gap {
            write!(f, " (max lhs-rhs {g:.3e})")?;
        }
        if let Some((seed, trial)) = self.first_failure {
            write!(f, " first failure at seed {seed} trial {trial}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.suite)?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

/// `x^x` with `0^0 = 1`.
fn self_power(x: u64) -> BigUint {
    Pow::pow(BigUint::from(x), x as u32)
}

/// Counting bounds, all in exact integer arithmetic.
///
/// The entropy bound `S(n, t) <= 2^(n·h2(t/n))` is checked in the form
/// `S(n, t)·t^t·(n-t)^(n-t) <= n^n`, which is the same inequality with both
/// sides multiplied by `t^t (n-t)^(n-t)`.
pub fn mathcore_suite() -> SuiteReport {
    let mut entropy = Check::new("binomial ball <= 2^(n h2(t/n)), n <= 64, t <= n/2");
    let mut full = Check::new("full binomial sum = 2^n, n <= 64");
    let mut info = Check::new("2^m * ball <= 2^k < 2^(m+1) * ball for m = max info bits, k <= 64");
    let mut tight = Check::new("perfect-code tightness: max info bits (7,1) = 4, parity length (4, 1/7) = 7");

    for n in 0..=MAX_ENTROPY_N {
        for t in 0..=n / 2 {
            let s = binomial_sum(n, t).expect("t <= n").0;
            let lhs = s * self_power(t) * self_power(n - t);
            entropy.record(lhs <= self_power(n), None);
        }
        full.record(binomial_sum(n, n).expect("t = n").0 == BigUint::one() << n, None);
    }
    for k in 0..=MAX_ENTROPY_N {
        for t in 0..=k {
            let ball = binomial_sum(k, t).expect("t <= k").0;
            let m = hamming_max_info_bits(k, t).expect("t <= k");
            let lower = (&ball << m) <= BigUint::one() << k;
            let upper = (&ball << (m + 1)) > BigUint::one() << k;
            info.record(lower && upper, None);
        }
    }
    tight.record(hamming_max_info_bits(7, 1).ok() == Some(4), None);
    tight.record(hamming_max_info_bits(15, 1).ok() == Some(11), None);
    tight.record(solve_parity_length(4, 1.0 / 7.0).ok() == Some(7), None);

    SuiteReport {
        suite: "mathcore",
        checks: vec![entropy, full, info, tight],
    }
}

/// A random state whose Eve blocks are all diagonal.
fn random_commuting_state<R: Rng>(rng: &mut R, key_bits: u32, eve_dim: usize) -> CqState {
    let base = random::cq_state(rng, key_bits, eve_dim);
    let blocks = base
        .blocks()
        .iter()
        .map(|b| {
            let mut w = b.eve.diagonal_entries();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            CqBlock {
                eve: DensityMatrix::diagonal(&w).expect("normalised diagonal"),
                ..b.clone()
            }
        })
        .collect();
    CqState::new(key_bits, key_bits, blocks).expect("same shape as a valid state")
}

fn labels(key_bits: u32) -> Vec<u64> {
    (0..1u64 << key_bits).collect()
}

/// Randomized checks on `trials` seeded instances with key length at most
/// three bits and Eve dimension at most four.
pub fn qstate_suite(trials: u64, seed: u64) -> Result<SuiteReport, StateError> {
    let mut gamma = Check::new("tr[Gamma (rho - tau)] <= cq trace distance");
    let mut guess = Check::new("guessing probability <= 2^-|K| + cq trace distance");
    let mut kpa = Check::new("after known-prefix reduction: guess <= 2^-unknown + reduced distance");
    let mut sup = Check::new("commuting case: optimal guess >= any diagonal measurement, attained");
    let mut dense = Check::new("blockwise cq distance = dense distance, key <= 2 bits");

    for trial in 0..trials {
        let at = (seed, trial);
        let mut rng = random::trial_rng(seed, trial);
        let key_bits = rng.random_range(1..=MAX_KEY_BITS);
        let eve_dim = rng.random_range(1..=MAX_EVE_DIM);
        let real = random::cq_state(&mut rng, key_bits, eve_dim);
        let ideal = build_ideal_state(key_bits, &real.eve_marginal())?;
        let d = cq_trace_distance(&real, &ideal)?;
        let povm = random::povm(&mut rng, eve_dim, &labels(key_bits));

        let gap = gamma_expectation(&real, &povm)? - gamma_expectation(&ideal, &povm)?;
        gamma.record_le(gap, d, at);
        let floor = (-(key_bits as f64)).exp2();
        guess.record_le(guessing_probability(&real, &povm)?, floor + d, at);

        if key_bits >= 2 {
            let known = rng.random_range(1..key_bits);
            let value = rng.random_range(0..1u64 << known);
            let reduced = kpa_reduce(&real, known, value)?;
            let unknown = key_bits - known;
            let r_ideal = build_ideal_state(unknown, &reduced.eve_marginal())?;
            let d_r = cq_trace_distance(&reduced, &r_ideal)?;
            let params = SecurityParams::with_default_xi(
                Log2Value::from_linear(d_r).expect("distance is finite and nonnegative"),
                unknown as u64,
            )
            .expect("distance is at most one");
            let bound = kpa_bound(&params, unknown as u64).expect("unknown bits in range");
            let r_povm = random::povm(&mut rng, eve_dim, &labels(unknown));
            kpa.record_le(guessing_probability(&reduced, &r_povm)?, bound.to_linear(), at);
        }

        if key_bits <= 2 {
            let dd = trace_distance(&real.to_dense()?, &ideal.to_dense()?)?;
            dense.record_le((dd - d).abs(), 0.0, at);
        }

        let classical = random_commuting_state(&mut rng, key_bits, eve_dim);
        let best = optimal_guess_classical(&classical)?;
        let diag = random::diagonal_povm(&mut rng, eve_dim, key_bits);
        sup.record_le(guessing_probability(&classical, &diag)?, best, at);
        let attained = guessing_probability(&classical, &optimal_classical_povm(&classical)?)?;
        sup.record_le((attained - best).abs(), 0.0, at);
    }

    Ok(SuiteReport {
        suite: "qstate",
        checks: vec![gamma, guess, kpa, sup, dense],
    })
}

/// Uniform one-bit key with Eve holding `|k><k|` against `tau = I/2`.
pub fn distinguishable_one_bit() -> Result<(CqState, CqState), StateError> {
    let mut eve = BTreeMap::new();
    eve.insert((0, 0), DensityMatrix::basis_state(2, 0));
    eve.insert((1, 1), DensityMatrix::basis_state(2, 1));
    let real = build_real_state(1, 1, &[(0, 0, 0.5), (1, 1, 0.5)], &eve)?;
    let ideal = build_ideal_state(1, &DensityMatrix::maximally_mixed(2))?;
    Ok((real, ideal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationWitness {
    pub trace_distance: f64,
    pub guessing_probability: f64,
    /// `2^-|K| + trace_distance`.
    pub bound: f64,
}

/// The one-bit instance where the guessing bound holds with equality.
pub fn saturation_witness() -> Result<SaturationWitness, StateError> {
    let (real, ideal) = distinguishable_one_bit()?;
    let d = cq_trace_distance(&real, &ideal)?;
    let g = guessing_probability(&real, &Povm::computational(&[0, 1])?)?;
    Ok(SaturationWitness {
        trace_distance: d,
        guessing_probability: g,
        bound: 0.5 + d,
    })
}

/// Exhaustive Toeplitz collision check and the Hamming(7,4) candidate count.
pub fn postproc_suite() -> SuiteReport {
    let mut delta = Check::new("Toeplitz collision rate <= 2^-out for all x != y, in <= 6, out <= 4");
    let mut witness = Check::new("collision rate = 2^-out attained for some pair");
    for in_len in 1..=HASH_MAX_IN {
        for out_len in 1..=in_len.min(HASH_MAX_OUT) {
            let rep = exhaustive_delta(in_len, out_len).expect("within exhaustive limits");
            delta.record_bulk(rep.pairs, rep.violations);
            witness.record(rep.equality_witnesses > 0, None);
        }
    }

    let mut shrink = Check::new("Hamming(7,4): 2^4 candidates after correction vs 2^4 kept whole");
    let h = LinearCodeSpec::hamming_7_4();
    match (key_as_codeword(&h), key_with_appended_parity(&h)) {
        (Ok(km), Ok(nk)) => {
            shrink.record(km.candidates_before == 128 && km.candidates_after == 16, None);
            shrink.record(nk.candidates_before == 16 && nk.candidates_after == 16, None);
            shrink.record(km.collapse_bits() == 3 && nk.collapse_bits() == 0, None);
        }
        _ => shrink.record(false, None),
    }

    SuiteReport {
        suite: "postproc",
        checks: vec![delta, witness, shrink],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mathcore_suite_passes() {
        let r = mathcore_suite();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks[0].checked, (0..=64u64).map(|n| n / 2 + 1).sum::<u64>());
    }

    #[test]
    fn qstate_suite_passes() {
        let r = qstate_suite(200, 42).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.checks[0].checked, 200);
    }

    #[test]
    fn postproc_suite_passes() {
        let r = postproc_suite();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn witness_saturates() {
        let w = saturation_witness().unwrap();
        assert!((w.trace_distance - 0.5).abs() < 1e-12);
        assert!((w.guessing_probability - 1.0).abs() < 1e-12);
        assert!((w.bound - w.guessing_probability).abs() < 1e-12);
    }

    #[test]
    fn check_display_reports_failures() {
        let mut c = Check::new("x");
        c.record_le(1.0, 0.5, (7, 3));
        assert!(!c.passed());
        let s = c.to_string();
        assert!(s.starts_with("FAIL x: 0/1"));
        assert!(s.contains("seed 7 trial 3"));
    }
}
