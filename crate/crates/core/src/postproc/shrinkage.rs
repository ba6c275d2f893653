//! Key-candidate accounting for the two ways of laying out reconciliation.
//!
//! In the `(k, m)` layout the sifted key itself is treated as a length-`n`
//! word of an `[n, k]` code; after correction it is always a codeword, so
//! only `2^k` of the `2^n` possible keys remain. In the `(n, k)` layout a
//! `k`-bit key is kept whole and `n - k` parity digits are appended and sent
//! (one-time-padded); all `2^k` key values survive.

use std::collections::HashSet;

use serde::Serialize;

use super::code::{LinearCodeSpec, SyndromeDecoder};
use super::PostprocError;
use crate::bits::BitString;

/// Largest exhaustive enumeration, in bits.
pub const MAX_ENUMERATION_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateReport {
    pub layout: &'static str,
    /// Key length held before reconciliation.
    pub key_bits: usize,
    /// Distinct key values possible before reconciliation.
    pub candidates_before: u64,
    /// Distinct key values possible after reconciliation.
    pub candidates_after: u64,
    /// Parity digits that have to be transmitted under the one-time pad.
    pub parity_bits_sent: usize,
}

impl CandidateReport {
    /// `log2(candidates_before / candidates_after)`.
    pub fn collapse_bits(&self) -> u32 {
        self.candidates_before.ilog2() - self.candidates_after.ilog2()
    }
}

/// `(k, m)` layout: decode every length-`n` word and count distinct results.
pub fn key_as_codeword(code: &LinearCodeSpec) -> Result<CandidateReport, PostprocError> {
    let n = code.n();
    if n > MAX_ENUMERATION_BITS {
        return Err(PostprocError::TooLargeForEnumeration(n));
    }
    let decoder = SyndromeDecoder::new(code)?;
    let mut outcomes = HashSet::new();
    for v in 0u64..1 << n {
        let word = BitString::from_u64(v, n);
        let s = code.syndrome(&word.0)?;
        let e = decoder
            .decode(&s.0, n)
            .map_err(|f| PostprocError::Domain(format!("decoder failed during enumeration: {f:?}")))?;
        outcomes.insert(word.xor(&e));
    }
    Ok(CandidateReport {
        layout: "key-as-codeword (k,m)",
        key_bits: n,
        candidates_before: 1 << n,
        candidates_after: outcomes.len() as u64,
        parity_bits_sent: code.redundancy(),
    })
}

/// `(n, k)` layout: encode every `k`-bit key and count distinct keys that can
/// be read back from the codewords.
pub fn key_with_appended_parity(code: &LinearCodeSpec) -> Result<CandidateReport, PostprocError> {
    let k = code.k();
    if k > MAX_ENUMERATION_BITS {
        return Err(PostprocError::TooLargeForEnumeration(k));
    }
    let enc = code.systematic_encoder();
    let mut keys = HashSet::new();
    for v in 0u64..1 << k {
        let key = BitString::from_u64(v, k);
        let word = enc.encode(&key.0);
        debug_assert_eq!(code.syndrome(&word.0)?.weight(), 0);
        keys.insert(enc.extract_info(&word.0));
    }
    Ok(CandidateReport {
        layout: "appended-parity (n,k)",
        key_bits: k,
        candidates_before: 1 << k,
        candidates_after: keys.len() as u64,
        parity_bits_sent: code.redundancy(),
    })
}
