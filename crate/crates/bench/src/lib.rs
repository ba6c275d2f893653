//! Fixtures shared by the criterion benchmarks in `benches/`.

use qkdbound::qstate::random;
use qkdbound::qstate::{build_ideal_state, StateError};
use qkdbound::{BitString, CqState, LinearCodeSpec, ProtocolConfig, ToeplitzSeed};

/// Noisy Hamming(7,4) session that completes.
pub fn session_config(pulses: u64) -> ProtocolConfig {
    let mut c = ProtocolConfig::new(pulses, LinearCodeSpec::hamming_7_4());
    c.channel_flip_prob = 0.002;
    c.rng_seed = 1;
    c
}

/// Random seed plus a fixed irregular input of `in_len` bits.
pub fn hash_fixture(in_len: usize, out_len: usize) -> (ToeplitzSeed, BitString) {
    let mut rng = random::trial_rng(0, in_len as u64);
    let seed = ToeplitzSeed::random(&mut rng, in_len, out_len).expect("valid shape");
    let input = BitString((0..in_len).map(|i| (i * 7 + 3) % 5 < 2).collect());
    (seed, input)
}

/// Random cq-state with its ideal counterpart.
pub fn cq_pair(key_bits: u32, eve_dim: usize) -> Result<(CqState, CqState), StateError> {
    let mut rng = random::trial_rng(7, 0);
    let real = random::cq_state(&mut rng, key_bits, eve_dim);
    let ideal = build_ideal_state(key_bits, &real.eve_marginal())?;
    Ok((real, ideal))
}
