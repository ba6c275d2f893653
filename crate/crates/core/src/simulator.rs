//! Deterministic BB84 session engine.
//!
//! Qubits are tracked as (basis, bit) pairs; measuring in the preparation
//! basis returns the bit, any other basis returns a fair coin. Each protocol
//! role draws from its own ChaCha20 stream keyed by the session seed, so
//! changing one role's behaviour never shifts another role's randomness.
//!
//! After the seven textbook steps the engine adds one more: Alice and Bob
//! compare short Toeplitz tags of their corrected keys and mark the session
//! `verification_failed` on mismatch. Privacy amplification runs only after
//! that check passes.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::bounds::{pa_guess_bound, BoundsError};
use crate::mathcore::{entropy_unchecked, Log2Value, MathError};
use crate::postproc::{LeakModel, LinearCodeSpec, PostprocError, SyndromeDecoder, ToeplitzSeed};
use crate::qstate::random::trial_rng;
use crate::stats::{binomial_sigma, wilson_interval, Interval};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_VERIFY_BITS: usize = 32;
/// Largest final key for which Eve's guess is scored exactly.
pub const MAX_SCORED_KEY_BITS: usize = 16;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("not enough key material: {0}")]
    InsufficientKey(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty QBER sample")]
    EmptySample,
    #[error("final key of {bits} bits exceeds the {max}-bit limit for exact scoring")]
    KeyTooLong { bits: usize, max: usize },
    #[error(transparent)]
    Postproc(#[from] PostprocError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Substream index per protocol role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Alice = 1,
    Bob = 2,
    Eve = 3,
    Channel = 4,
    Public = 5,
}

pub fn role_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(role as u64);
    rng
}

/// Privacy-amplification output length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaLength {
    /// `floor(m·(1 - h2(Q))) - tag_len` for an `m`-bit corrected key.
    Auto,
    Fixed(usize),
}

impl Serialize for PaLength {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PaLength::Auto => serializer.serialize_str("auto"),
            PaLength::Fixed(n) => serializer.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for PaLength {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Len(usize),
            Word(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Len(n) => Ok(PaLength::Fixed(n)),
            Raw::Word(w) if w == "auto" => Ok(PaLength::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("bad PA length {w:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_pulses: u64,
    pub channel_flip_prob: f64,
    pub eve_intercept_fraction: f64,
    /// Fraction of sifted bits disclosed for QBER estimation.
    pub sample_fraction: f64,
    /// Sessions with estimated QBER strictly above this abort.
    pub abort_qber: f64,
    pub code: LinearCodeSpec,
    pub leak_model: LeakModel,
    pub pa_out_len: PaLength,
    pub verify_bits: usize,
    /// Decoder weight cap; `None` accepts any coset leader.
    pub max_decode_weight: Option<usize>,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    pub fn new(n_pulses: u64, code: LinearCodeSpec) -> Self {
        ProtocolConfig {
            n_pulses,
            channel_flip_prob: 0.0,
            eve_intercept_fraction: 0.0,
            sample_fraction: 0.2,
            abort_qber: 0.11,
            code,
            leak_model: LeakModel::Conventional { xi: 1.1 },
            pa_out_len: PaLength::Auto,
            verify_bits: DEFAULT_VERIFY_BITS,
            max_decode_weight: None,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.n_pulses == 0 {
            return bad("n_pulses must be >= 1".into());
        }
        if usize::try_from(self.n_pulses).is_err() {
            return bad("n_pulses does not fit in memory".into());
        }
        if !(0.0..=0.5).contains(&self.channel_flip_prob) {
            return bad(format!("channel_flip_prob {} outside [0, 0.5]", self.channel_flip_prob));
        }
        if !(0.0..=1.0).contains(&self.eve_intercept_fraction) {
            return bad(format!(
                "eve_intercept_fraction {} outside [0, 1]",
                self.eve_intercept_fraction
            ));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return bad(format!("sample_fraction {} outside (0, 1)", self.sample_fraction));
        }
        if !(self.abort_qber >= 0.0) || !self.abort_qber.is_finite() {
            return bad(format!("abort_qber {} must be a finite value >= 0", self.abort_qber));
        }
        if let LeakModel::Conventional { xi } = self.leak_model {
            if !(1.0..=2.0).contains(&xi) {
                return bad(format!("xi {xi} outside [1, 2]"));
            }
        }
        if self.verify_bits == 0 {
            return bad("verify_bits must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Completed,
    AbortedQber,
    VerificationFailed,
}

/// What Eve did per pulse. `bits` is her measurement outcome where she
/// intercepted and 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    pub intercepted: BitString,
    pub bases: BitString,
    pub bits: BitString,
}

/// Quantum phase: preparation, optional interception, measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pub alice_bits: BitString,
    pub alice_bases: BitString,
    pub eve: EveRecord,
    pub bob_bases: BitString,
    pub bob_bits: BitString,
}

pub fn quantum_exchange(config: &ProtocolConfig) -> Result<Exchange, SimError> {
    config.validate()?;
    let n = config.n_pulses as usize;
    let mut alice = role_rng(config.rng_seed, Role::Alice);
    let mut bob = role_rng(config.rng_seed, Role::Bob);
    let mut eve = role_rng(config.rng_seed, Role::Eve);
    let mut channel = role_rng(config.rng_seed, Role::Channel);

    let mut ex = Exchange {
        alice_bits: BitString(Vec::with_capacity(n)),
        alice_bases: BitString(Vec::with_capacity(n)),
        eve: EveRecord {
            intercepted: BitString(Vec::with_capacity(n)),
            bases: BitString(Vec::with_capacity(n)),
            bits: BitString(Vec::with_capacity(n)),
        },
        bob_bases: BitString(Vec::with_capacity(n)),
        bob_bits: BitString(Vec::with_capacity(n)),
    };
    for _ in 0..n {
        let a_bit: bool = alice.random();
        let a_basis: bool = alice.random();

        // every draw happens on every pulse so streams stay aligned
        let intercept = eve.random_bool(config.eve_intercept_fraction);
        let e_basis: bool = eve.random();
        let e_coin: bool = eve.random();
        let (state_basis, state_bit, e_bit) = if intercept {
            let outcome = if e_basis == a_basis { a_bit } else { e_coin };
            (e_basis, outcome, outcome)
        } else {
            (a_basis, a_bit, false)
        };

        let b_basis: bool = bob.random();
        let b_coin: bool = bob.random();
        let flip = channel.random_bool(config.channel_flip_prob);
        let measured = if b_basis == state_basis { state_bit } else { b_coin };

        ex.alice_bits.0.push(a_bit);
        ex.alice_bases.0.push(a_basis);
        ex.eve.intercepted.0.push(intercept);
        ex.eve.bases.0.push(if intercept { e_basis } else { false });
        ex.eve.bits.0.push(e_bit);
        ex.bob_bases.0.push(b_basis);
        ex.bob_bits.0.push(measured ^ flip);
    }
    Ok(ex)
}

/// Mask of positions where the two basis strings agree.
pub fn sift(alice_bases: &BitString, bob_bases: &BitString) -> Result<BitString, SimError> {
    if alice_bases.len() != bob_bases.len() {
        return Err(SimError::LengthMismatch {
            left: alice_bases.len(),
            right: bob_bases.len(),
        });
    }
    Ok(BitString(
        alice_bases.0.iter().zip(&bob_bases.0).map(|(a, b)| a == b).collect(),
    ))
}

pub fn estimate_qber(alice_sample: &BitString, bob_sample: &BitString) -> Result<f64, SimError> {
    if alice_sample.len() != bob_sample.len() {
        return Err(SimError::LengthMismatch {
            left: alice_sample.len(),
            right: bob_sample.len(),
        });
    }
    if alice_sample.is_empty() {
        return Err(SimError::EmptySample);
    }
    Ok(alice_sample.xor(bob_sample).weight() as f64 / alice_sample.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    pub corrected: BitString,
    pub blocks: usize,
    pub syndrome_bits: usize,
    pub decoder_failures: usize,
}

/// Block-wise syndrome exchange: Bob flips the coset leader of the syndrome
/// difference in each block. Blocks the decoder refuses are left as they are.
pub fn reconcile(
    code: &LinearCodeSpec,
    decoder: &SyndromeDecoder,
    alice: &BitString,
    bob: &BitString,
    max_weight: Option<usize>,
) -> Result<Reconciliation, SimError> {
    if alice.len() != bob.len() {
        return Err(SimError::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let n = code.n();
    if !alice.len().is_multiple_of(n) {
        return Err(SimError::InvalidConfig(format!(
            "key length {} is not a multiple of the block length {n}",
            alice.len()
        )));
    }
    let max_weight = max_weight.unwrap_or(n);
    let mut corrected = Vec::with_capacity(bob.len());
    let mut failures = 0;
    for (a, b) in alice.0.chunks(n).zip(bob.0.chunks(n)) {
        let diff = code.syndrome(a)?.xor(&code.syndrome(b)?);
        match decoder.decode(&diff.0, max_weight) {
            Ok(e) => corrected.extend(b.iter().zip(&e.0).map(|(x, y)| x ^ y)),
            Err(_) => {
                failures += 1;
                corrected.extend_from_slice(b);
            }
        }
    }
    let blocks = alice.len() / n;
    Ok(Reconciliation {
        corrected: BitString(corrected),
        blocks,
        syndrome_bits: blocks * code.redundancy(),
        decoder_failures: failures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRecord {
    /// Absent when the tag is as long as the key, in which case the key is
    /// its own tag.
    pub seed: Option<ToeplitzSeed>,
    pub tag_alice: BitString,
    pub tag_bob: BitString,
    pub passed: bool,
}

pub fn verification_tags(
    seed: Option<&ToeplitzSeed>,
    alice: &BitString,
    bob: &BitString,
) -> Result<VerificationRecord, SimError> {
    let (tag_alice, tag_bob) = match seed {
        Some(s) => (s.hash(&alice.0)?, s.hash(&bob.0)?),
        None => (alice.clone(), bob.clone()),
    };
    Ok(VerificationRecord {
        seed: seed.cloned(),
        passed: tag_alice == tag_bob,
        tag_alice,
        tag_bob,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub schema_version: u32,
    pub config: ProtocolConfig,
    pub alice_bits: BitString,
    pub alice_bases: BitString,
    pub eve_actions: EveRecord,
    pub bob_bases: BitString,
    pub bob_bits: BitString,
    pub sift_mask: BitString,
    pub sifted_len: usize,
    /// Indices into the sifted key, ascending.
    pub disclosed_sample: Vec<usize>,
    pub estimated_q: f64,
    /// Error rate over all sifted bits; simulation ground truth.
    pub actual_sifted_q: f64,
    pub status: SessionStatus,
    pub blocks: usize,
    /// Undisclosed sifted bits left over after the last whole block.
    pub discarded_bits: usize,
    pub syndromes_exchanged: usize,
    pub decoder_failures: usize,
    pub corrected_key_alice: Option<BitString>,
    pub corrected_key_bob: Option<BitString>,
    pub verification: Option<VerificationRecord>,
    pub pa_seed: Option<ToeplitzSeed>,
    pub final_key_alice: Option<BitString>,
    pub final_key_bob: Option<BitString>,
    /// Pre-shared key spent padding syndromes: `blocks·(n - k)`.
    pub leak_bits_consumed: f64,
    /// What `leak_model` charges for the same key length at the estimated QBER.
    pub leak_model_prediction: Option<f64>,
}

impl SessionTranscript {
    /// Pulse index of every bit of the corrected key, in key order.
    pub fn key_pulse_indices(&self) -> Vec<usize> {
        let sifted: Vec<usize> = positions(&self.sift_mask);
        let mut disclosed = self.disclosed_sample.iter().peekable();
        let mut out = Vec::new();
        for (i, &p) in sifted.iter().enumerate() {
            if disclosed.peek() == Some(&&i) {
                disclosed.next();
                continue;
            }
            out.push(p);
        }
        out.truncate(self.blocks * self.config.code.n());
        out
    }
}

fn positions(mask: &BitString) -> Vec<usize> {
    mask.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

fn pick(bits: &BitString, idx: &[usize]) -> BitString {
    BitString(idx.iter().map(|&i| bits.0[i]).collect())
}

pub fn run_session(config: &ProtocolConfig) -> Result<SessionTranscript, SimError> {
    let ex = quantum_exchange(config)?;
    post_process(config, ex)
}

/// Classical phase: sifting, estimation, reconciliation, verification and
/// privacy amplification over a recorded exchange.
pub fn post_process(config: &ProtocolConfig, ex: Exchange) -> Result<SessionTranscript, SimError> {
    config.validate()?;
    let n_pulses = config.n_pulses as usize;
    for len in [
        ex.alice_bits.len(),
        ex.alice_bases.len(),
        ex.bob_bases.len(),
        ex.bob_bits.len(),
        ex.eve.bits.len(),
    ] {
        if len != n_pulses {
            return Err(SimError::LengthMismatch { left: len, right: n_pulses });
        }
    }
    let mut public = role_rng(config.rng_seed, Role::Public);

    let sift_mask = sift(&ex.alice_bases, &ex.bob_bases)?;
    let sifted_idx = positions(&sift_mask);
    let sifted_len = sifted_idx.len();
    let sifted_a = pick(&ex.alice_bits, &sifted_idx);
    let sifted_b = pick(&ex.bob_bits, &sifted_idx);
    if sifted_len < 2 {
        return Err(SimError::InsufficientKey(format!("{sifted_len} sifted bits")));
    }
    let actual_sifted_q = sifted_a.xor(&sifted_b).weight() as f64 / sifted_len as f64;

    let sample_size = ((config.sample_fraction * sifted_len as f64).round() as usize).max(1);
    if sample_size >= sifted_len {
        return Err(SimError::InsufficientKey(format!(
            "sample of {sample_size} leaves nothing of {sifted_len} sifted bits"
        )));
    }
    let mut sample = index::sample(&mut public, sifted_len, sample_size).into_vec();
    sample.sort_unstable();
    let estimated_q = estimate_qber(&pick(&sifted_a, &sample), &pick(&sifted_b, &sample))?;

    let mut in_sample = vec![false; sifted_len];
    for &i in &sample {
        in_sample[i] = true;
    }
    let kept: Vec<usize> = (0..sifted_len).filter(|&i| !in_sample[i]).collect();
    let n = config.code.n();
    let blocks = kept.len() / n;
    let key_idx = &kept[..blocks * n];

    let mut t = SessionTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        config: config.clone(),
        alice_bits: ex.alice_bits,
        alice_bases: ex.alice_bases,
        eve_actions: ex.eve,
        bob_bases: ex.bob_bases,
        bob_bits: ex.bob_bits,
        sift_mask,
        sifted_len,
        disclosed_sample: sample,
        estimated_q,
        actual_sifted_q,
        status: SessionStatus::AbortedQber,
        blocks: 0,
        discarded_bits: kept.len() - blocks * n,
        syndromes_exchanged: 0,
        decoder_failures: 0,
        corrected_key_alice: None,
        corrected_key_bob: None,
        verification: None,
        pa_seed: None,
        final_key_alice: None,
        final_key_bob: None,
        leak_bits_consumed: 0.0,
        leak_model_prediction: None,
    };
    if estimated_q > config.abort_qber {
        return Ok(t);
    }
    if blocks == 0 {
        return Err(SimError::InsufficientKey(format!(
            "{} undisclosed bits do not fill one {n}-bit block",
            kept.len()
        )));
    }

    let key_a = pick(&sifted_a, key_idx);
    let key_b = pick(&sifted_b, key_idx);
    let decoder = SyndromeDecoder::new(&config.code)?;
    let rec = reconcile(&config.code, &decoder, &key_a, &key_b, config.max_decode_weight)?;
    let m = key_a.len();
    t.blocks = blocks;
    t.syndromes_exchanged = rec.syndrome_bits;
    t.decoder_failures = rec.decoder_failures;
    t.leak_bits_consumed = rec.syndrome_bits as f64;
    t.leak_model_prediction = config.leak_model.leak_bits(m as u64, estimated_q).ok();

    let tag_len = config.verify_bits.min(m);
    let verify_seed = if tag_len < m {
        Some(ToeplitzSeed::random(&mut public, m, tag_len)?)
    } else {
        None
    };
    let verification = verification_tags(verify_seed.as_ref(), &key_a, &rec.corrected)?;
    let passed = verification.passed;
    t.verification = Some(verification);
    t.corrected_key_alice = Some(key_a);
    t.corrected_key_bob = Some(rec.corrected);
    if !passed {
        t.status = SessionStatus::VerificationFailed;
        return Ok(t);
    }

    let out_len = match config.pa_out_len {
        PaLength::Fixed(l) => l,
        PaLength::Auto => {
            let h = entropy_unchecked(estimated_q.min(0.5));
            ((m as f64 * (1.0 - h)).floor() as usize).saturating_sub(tag_len)
        }
    };
    if out_len > m {
        return Err(SimError::InsufficientKey(format!(
            "privacy amplification to {out_len} bits from a {m}-bit key"
        )));
    }
    let pa_seed = ToeplitzSeed::random(&mut public, m, out_len)?;
    let key_a = t.corrected_key_alice.as_ref().expect("set above");
    let key_b = t.corrected_key_bob.as_ref().expect("set above");
    t.final_key_alice = Some(pa_seed.hash(&key_a.0)?);
    t.final_key_bob = Some(pa_seed.hash(&key_b.0)?);
    t.pa_seed = Some(pa_seed);
    t.status = SessionStatus::Completed;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveStrategy {
    /// Intercept-resend, then guess Alice's bit from the recorded outcome
    /// wherever the announced bases show Eve measured correctly.
    InterceptResendThenBestGuess,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuessRateReport {
    pub trials: u64,
    pub scored_trials: u64,
    pub aborted: u64,
    pub verification_failed: u64,
    pub insufficient_key: u64,
    pub pre_pa_successes: u64,
    pub post_pa_successes: u64,
    pub pre_pa_rate: f64,
    pub rate: f64,
    pub interval: Interval,
    pub sigma: f64,
    /// Largest final key length seen; equal across trials unless PA is auto.
    pub out_len: usize,
    pub delta: f64,
    /// `pa_guess_bound(pre_pa_rate, delta)`, linear.
    pub bound: f64,
}

impl GuessRateReport {
    /// Rate at most the bound plus `widths` Wilson-interval widths.
    pub fn within_bound(&self, widths: f64) -> bool {
        self.rate <= self.bound + widths * self.interval.width()
    }
}

/// Eve's pre-amplification guess of the corrected key.
pub fn eve_key_guess(t: &SessionTranscript, strategy: EveStrategy) -> BitString {
    match strategy {
        EveStrategy::InterceptResendThenBestGuess => {
            let eve = &t.eve_actions;
            // where she did not intercept, or measured in the wrong basis,
            // her bit is independent of the key; any fixed guess is as good
            BitString(t.key_pulse_indices().iter().map(|&p| eve.bits.0[p]).collect())
        }
    }
}

/// Monte-Carlo score of Eve's key guess before and after privacy
/// amplification. Trial `i` runs with a seed derived from `config.rng_seed`
/// and `i`. Sessions that abort, fail verification, or end up too short are
/// counted and skipped.
pub fn empirical_eve_guess_rate(
    config: &ProtocolConfig,
    trials: u64,
    strategy: EveStrategy,
) -> Result<GuessRateReport, SimError> {
    config.validate()?;
    if trials == 0 {
        return Err(SimError::InvalidConfig("trials must be >= 1".into()));
    }
    if let PaLength::Fixed(l) = config.pa_out_len {
        if l > MAX_SCORED_KEY_BITS {
            return Err(SimError::KeyTooLong {
                bits: l,
                max: MAX_SCORED_KEY_BITS,
            });
        }
    }
    let mut rep = GuessRateReport {
        trials,
        scored_trials: 0,
        aborted: 0,
        verification_failed: 0,
        insufficient_key: 0,
        pre_pa_successes: 0,
        post_pa_successes: 0,
        pre_pa_rate: 0.0,
        rate: 0.0,
        interval: Interval { lower: 0.0, upper: 1.0 },
        sigma: 0.0,
        out_len: 0,
        delta: 1.0,
        bound: 1.0,
    };
    for i in 0..trials {
        let mut cfg = config.clone();
        cfg.rng_seed = trial_rng(config.rng_seed, i).random();
        let t = match run_session(&cfg) {
            Ok(t) => t,
            Err(SimError::InsufficientKey(_)) => {
                rep.insufficient_key += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match t.status {
            SessionStatus::AbortedQber => rep.aborted += 1,
            SessionStatus::VerificationFailed => rep.verification_failed += 1,
            SessionStatus::Completed => {
                let seed = t.pa_seed.as_ref().expect("completed sessions carry a seed");
                if seed.out_len() > MAX_SCORED_KEY_BITS {
                    return Err(SimError::KeyTooLong {
                        bits: seed.out_len(),
                        max: MAX_SCORED_KEY_BITS,
                    });
                }
                rep.out_len = rep.out_len.max(seed.out_len());
                let key = t.corrected_key_alice.as_ref().expect("completed");
                let guess = eve_key_guess(&t, strategy);
                rep.scored_trials += 1;
                if &guess == key {
                    rep.pre_pa_successes += 1;
                }
                if seed.hash(&guess.0)? == *t.final_key_alice.as_ref().expect("completed") {
                    rep.post_pa_successes += 1;
                }
            }
        }
    }
    if rep.scored_trials == 0 {
        return Err(SimError::InsufficientKey("no trial completed".into()));
    }
    let s = rep.scored_trials;
    rep.pre_pa_rate = rep.pre_pa_successes as f64 / s as f64;
    rep.rate = rep.post_pa_successes as f64 / s as f64;
    rep.interval = wilson_interval(rep.post_pa_successes, s, 1.96);
    rep.sigma = binomial_sigma(rep.rate, s);
    let delta = Log2Value::pow2(-(rep.out_len as i64));
    rep.delta = delta.to_linear();
    rep.bound = pa_guess_bound(Log2Value::from_probability(rep.pre_pa_rate)?, delta)?.to_linear();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> LinearCodeSpec {
        LinearCodeSpec::hamming_7_4()
    }

    #[test]
    fn sift_examples() {
        let a: BitString = "0110".parse().unwrap();
        assert_eq!(sift(&a, &a).unwrap().weight(), 4);
        let c: BitString = "1001".parse().unwrap();
        assert_eq!(sift(&a, &c).unwrap().weight(), 0);
        assert!(sift(&a, &"01".parse().unwrap()).is_err());
    }

    #[test]
    fn qber_examples() {
        let a: BitString = "01100101".parse().unwrap();
        assert_eq!(estimate_qber(&a, &a).unwrap(), 0.0);
        let not_a = BitString(a.0.iter().map(|b| !b).collect());
        assert_eq!(estimate_qber(&a, &not_a).unwrap(), 1.0);
        let mut one = a.clone();
        one.0[3] ^= true;
        assert_eq!(estimate_qber(&a, &one).unwrap(), 0.125);
        assert!(matches!(
            estimate_qber(&BitString::default(), &BitString::default()),
            Err(SimError::EmptySample)
        ));
    }

    #[test]
    fn noiseless_session_completes() {
        let mut cfg = ProtocolConfig::new(10_000, hamming());
        cfg.rng_seed = 1;
        let t = run_session(&cfg).unwrap();
        assert_eq!(t.status, SessionStatus::Completed);
        assert_eq!(t.estimated_q, 0.0);
        assert_eq!(t.final_key_alice, t.final_key_bob);
        assert!(!t.final_key_alice.unwrap().is_empty());
        assert_eq!(t.leak_bits_consumed, (t.blocks * 3) as f64);
    }

    #[test]
    fn flip_above_threshold_aborts() {
        let mut cfg = ProtocolConfig::new(10_000, hamming());
        cfg.channel_flip_prob = 0.02;
        cfg.abort_qber = 0.01;
        for seed in 0..5 {
            cfg.rng_seed = seed;
            assert_eq!(run_session(&cfg).unwrap().status, SessionStatus::AbortedQber);
        }
    }

    #[test]
    fn disclosed_bits_are_not_in_the_key() {
        let mut cfg = ProtocolConfig::new(2_000, hamming());
        cfg.rng_seed = 4;
        let t = run_session(&cfg).unwrap();
        let sifted = positions(&t.sift_mask);
        let disclosed: Vec<usize> = t.disclosed_sample.iter().map(|&i| sifted[i]).collect();
        let key = t.key_pulse_indices();
        assert!(key.iter().all(|p| !disclosed.contains(p)));
        assert_eq!(key.len() + disclosed.len() + t.discarded_bits, t.sifted_len);
        let expect = pick(&t.alice_bits, &key);
        assert_eq!(t.corrected_key_alice.as_ref(), Some(&expect));
    }

    #[test]
    fn weight_two_errors_fail_verification() {
        let mut cfg = ProtocolConfig::new(400, hamming());
        cfg.rng_seed = 9;
        let ex = quantum_exchange(&cfg).unwrap();
        let clean = post_process(&cfg, ex.clone()).unwrap();
        assert_eq!(clean.status, SessionStatus::Completed);
        let block0 = &clean.key_pulse_indices()[..7];
        for i in 0..7 {
            for j in i + 1..7 {
                let mut bad = ex.clone();
                bad.bob_bits.0[block0[i]] ^= true;
                bad.bob_bits.0[block0[j]] ^= true;
                let t = post_process(&cfg, bad).unwrap();
                assert_eq!(t.estimated_q, 0.0);
                assert_eq!(t.status, SessionStatus::VerificationFailed, "errors at {i},{j}");
                assert_ne!(t.corrected_key_alice, t.corrected_key_bob);
                assert!(t.final_key_alice.is_none());
            }
        }
    }

    #[test]
    fn reconcile_fixes_single_errors() {
        let code = hamming();
        let dec = SyndromeDecoder::new(&code).unwrap();
        let mut rng = trial_rng(1, 1);
        let a = BitString((0..70).map(|_| rng.random()).collect());
        let mut b = a.clone();
        for blk in 0..10 {
            b.0[blk * 7 + blk % 7] ^= true;
        }
        let r = reconcile(&code, &dec, &a, &b, Some(1)).unwrap();
        assert_eq!(r.corrected, a);
        assert_eq!((r.blocks, r.syndrome_bits, r.decoder_failures), (10, 30, 0));
        let mut c = a.clone();
        c.0[0] ^= true;
        c.0[1] ^= true;
        // the code is perfect, so only a zero weight cap can refuse a block
        let r = reconcile(&code, &dec, &a, &c, Some(0)).unwrap();
        assert_eq!(r.decoder_failures, 1);
        assert_eq!(r.corrected, c);
        assert!(reconcile(&code, &dec, &a, &BitString::zeros(63), None).is_err());
    }

    #[test]
    fn transcripts_are_deterministic() {
        let mut cfg = ProtocolConfig::new(3_000, hamming());
        cfg.channel_flip_prob = 0.03;
        cfg.eve_intercept_fraction = 0.1;
        cfg.abort_qber = 0.5;
        cfg.rng_seed = 77;
        let a = serde_json::to_string(&run_session(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_session(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: SessionTranscript = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
        cfg.rng_seed = 78;
        assert_ne!(serde_json::to_string(&run_session(&cfg).unwrap()).unwrap(), a);
    }

    #[test]
    fn role_streams_are_independent() {
        // Eve's presence must not change Alice's or Bob's basis choices
        let mut cfg = ProtocolConfig::new(500, hamming());
        cfg.rng_seed = 3;
        let quiet = quantum_exchange(&cfg).unwrap();
        cfg.eve_intercept_fraction = 1.0;
        let loud = quantum_exchange(&cfg).unwrap();
        assert_eq!(quiet.alice_bits, loud.alice_bits);
        assert_eq!(quiet.alice_bases, loud.alice_bases);
        assert_eq!(quiet.bob_bases, loud.bob_bases);
    }

    #[test]
    fn config_validation() {
        let ok = ProtocolConfig::new(10, hamming());
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.n_pulses = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.sample_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.channel_flip_prob = 0.6;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.eve_intercept_fraction = -0.1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn pa_length_serde() {
        assert_eq!(serde_json::to_string(&PaLength::Auto).unwrap(), "\"auto\"");
        assert_eq!(serde_json::to_string(&PaLength::Fixed(8)).unwrap(), "8");
        assert_eq!(serde_json::from_str::<PaLength>("12").unwrap(), PaLength::Fixed(12));
        assert!(serde_json::from_str::<PaLength>("\"most\"").is_err());
    }

    #[test]
    fn blind_eve_hits_the_floor() {
        let mut cfg = ProtocolConfig::new(200, hamming());
        cfg.pa_out_len = PaLength::Fixed(4);
        cfg.rng_seed = 5;
        let rep = empirical_eve_guess_rate(&cfg, 2_000, EveStrategy::InterceptResendThenBestGuess).unwrap();
        assert_eq!(rep.pre_pa_successes, 0);
        let sigma = binomial_sigma(1.0 / 16.0, rep.scored_trials);
        assert!((rep.rate - 1.0 / 16.0).abs() < 4.0 * sigma, "{rep:?}");
        assert!(rep.within_bound(3.0));
        cfg.pa_out_len = PaLength::Fixed(17);
        assert!(matches!(
            empirical_eve_guess_rate(&cfg, 1, EveStrategy::InterceptResendThenBestGuess),
            Err(SimError::KeyTooLong { .. })
        ));
    }
}
