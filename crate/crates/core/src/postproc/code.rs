//! Binary linear codes given by a parity-check matrix, and syndrome decoding.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitString;

use super::PostprocError;

/// Largest code length for which a full coset-leader table is built.
pub const MAX_TABLE_LEN: usize = 24;

/// A binary `[n, k]` code described by its `(n-k) x n` parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCodeSpec {
    n: usize,
    k: usize,
    parity_check: Vec<Vec<bool>>,
}

/// Row-reduces `rows` over GF(2) in place; returns the pivot column of each
/// nonzero row, in row order.
fn row_reduce(rows: &mut Vec<Vec<bool>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col]) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && rows[i][col] {
                let pivot_row = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(pivot_row) {
                    *x ^= y;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

impl LinearCodeSpec {
    pub fn new(n: usize, k: usize, parity_check: Vec<Vec<bool>>) -> Result<Self, PostprocError> {
        if k == 0 || k > n {
            return Err(PostprocError::InvalidCode(format!("need 1 <= k <= n, got n={n} k={k}")));
        }
        if parity_check.len() != n - k {
            return Err(PostprocError::InvalidCode(format!(
                "expected {} parity-check rows, got {}",
                n - k,
                parity_check.len()
            )));
        }
        if let Some(row) = parity_check.iter().find(|r| r.len() != n) {
            return Err(PostprocError::InvalidCode(format!(
                "parity-check row has {} columns, expected {n}",
                row.len()
            )));
        }
        let mut reduced = parity_check.clone();
        let rank = row_reduce(&mut reduced).len();
        if rank != n - k {
            return Err(PostprocError::InvalidCode(format!(
                "parity-check matrix has rank {rank}, expected {}",
                n - k
            )));
        }
        Ok(LinearCodeSpec { n, k, parity_check })
    }

    /// `[n, 1]` repetition code: parity checks `x_0 + x_i = 0`.
    pub fn repetition(n: usize) -> Result<Self, PostprocError> {
        if n < 1 {
            return Err(PostprocError::InvalidCode("repetition length must be >= 1".into()));
        }
        let rows = (1..n)
            .map(|i| (0..n).map(|j| j == 0 || j == i).collect())
            .collect();
        Self::new(n, 1, rows)
    }

    /// Hamming code with `r` parity bits, length `2^r - 1`. Column `j`
    /// (0-based) is the binary expansion of `j + 1`, most significant bit in
    /// the first row, so a single error at position `j` has syndrome `j + 1`.
    pub fn hamming(r: u32) -> Result<Self, PostprocError> {
        if !(2..=10).contains(&r) {
            return Err(PostprocError::InvalidCode(format!("Hamming order {r} outside [2, 10]")));
        }
        let n = (1usize << r) - 1;
        let rows = (0..r)
            .map(|i| (0..n).map(|j| ((j + 1) >> (r - 1 - i)) & 1 == 1).collect())
            .collect();
        Self::new(n, n - r as usize, rows)
    }

    pub fn hamming_7_4() -> Self {
        Self::hamming(3).expect("valid Hamming order")
    }

    pub fn hamming_15_11() -> Self {
        Self::hamming(4).expect("valid Hamming order")
    }

    /// Built-in codes: `hamming7`, `hamming15`, `repN` (e.g. `rep3`).
    pub fn by_name(name: &str) -> Result<Self, PostprocError> {
        match name {
            "hamming7" | "hamming(7,4)" => Ok(Self::hamming_7_4()),
            "hamming15" | "hamming(15,11)" => Ok(Self::hamming_15_11()),
            _ => match name.strip_prefix("rep").and_then(|n| n.parse::<usize>().ok()) {
                Some(n) if n >= 2 => Self::repetition(n),
                _ => Err(PostprocError::InvalidCode(format!("unknown code name `{name}`"))),
            },
        }
    }

    /// Parses `n k` on the first line followed by `n-k` rows of `n`
    /// characters from `{0,1}`. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self, PostprocError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| PostprocError::InvalidCode("empty parity-check file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| PostprocError::InvalidCode(format!("bad header line `{header}`")))?;
        let [n, k] = dims[..] else {
            return Err(PostprocError::InvalidCode(format!("header must be `n k`, got `{header}`")));
        };
        let rows = lines
            .map(|l| {
                l.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(PostprocError::InvalidCode(format!("bad matrix character {other:?}"))),
                    })
                    .collect::<Result<Vec<bool>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, k, rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.k);
        for row in &self.parity_check {
            for &b in row {
                out.push(if b { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn parity_check(&self) -> &[Vec<bool>] {
        &self.parity_check
    }

    /// Column `j` of the parity-check matrix.
    pub fn column(&self, j: usize) -> BitString {
        BitString(self.parity_check.iter().map(|row| row[j]).collect())
    }

    pub fn syndrome(&self, word: &[bool]) -> Result<BitString, PostprocError> {
        if word.len() != self.n {
            return Err(PostprocError::LengthMismatch {
                expected: self.n,
                got: word.len(),
            });
        }
        Ok(BitString(
            self.parity_check
                .iter()
                .map(|row| row.iter().zip(word).fold(false, |acc, (&h, &w)| acc ^ (h & w)))
                .collect(),
        ))
    }

    /// Column syndromes packed as integers (first row most significant).
    fn packed_columns(&self) -> Vec<u64> {
        (0..self.n)
            .map(|j| {
                self.parity_check
                    .iter()
                    .fold(0u64, |acc, row| (acc << 1) | u64::from(row[j]))
            })
            .collect()
    }

    pub fn systematic_encoder(&self) -> SystematicEncoder {
        let mut rows = self.parity_check.clone();
        let pivots = row_reduce(&mut rows);
        let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
        let info_positions: Vec<usize> = (0..self.n).filter(|j| !pivot_set.contains(j)).collect();
        SystematicEncoder {
            n: self.n,
            reduced: rows,
            parity_positions: pivots,
            info_positions,
        }
    }

    /// Minimum Hamming distance, by enumerating codewords (`k <= 20`).
    pub fn min_distance(&self) -> Option<usize> {
        if self.k > 20 {
            return None;
        }
        let enc = self.systematic_encoder();
        (1u64..1 << self.k)
            .map(|m| enc.encode(&BitString::from_u64(m, self.k).0).weight())
            .min()
    }

    /// Number of errors every pattern of which is corrected.
    pub fn correction_radius(&self) -> Option<usize> {
        self.min_distance().map(|d| (d - 1) / 2)
    }
}

/// Serialises as the `n k` + rows text format.
impl Serialize for LinearCodeSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for LinearCodeSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        LinearCodeSpec::from_text(&s).map_err(serde::de::Error::custom)
    }
}

/// Encoder placing information bits at the non-pivot positions of the
/// row-reduced parity-check matrix.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    reduced: Vec<Vec<bool>>,
    parity_positions: Vec<usize>,
    info_positions: Vec<usize>,
}

impl SystematicEncoder {
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    pub fn encode(&self, info: &[bool]) -> BitString {
        debug_assert_eq!(info.len(), self.info_positions.len());
        let mut word = vec![false; self.n];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            word[pos] = b;
        }
        for (row, &p) in self.reduced.iter().zip(&self.parity_positions) {
            word[p] = self
                .info_positions
                .iter()
                .fold(false, |acc, &j| acc ^ (row[j] & word[j]));
        }
        BitString(word)
    }

    /// Parity digits for `info`, in parity-position order.
    pub fn parity_digits(&self, info: &[bool]) -> BitString {
        let word = self.encode(info);
        BitString(self.parity_positions.iter().map(|&p| word.0[p]).collect())
    }

    pub fn extract_info(&self, word: &[bool]) -> BitString {
        BitString(self.info_positions.iter().map(|&p| word[p]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeFailure {
    /// The minimum-weight pattern for this syndrome is heavier than allowed.
    ExceedsWeight { weight: usize, max_weight: usize },
    /// The decoder cannot name any pattern for this syndrome.
    NoPattern,
}

#[derive(Debug, Clone)]
enum Strategy {
    /// Coset leader per packed syndrome, as a packed error pattern.
    Table(Vec<u32>),
    /// Syndrome to error position, for codes with distinct nonzero columns.
    SingleError(HashMap<u64, usize>),
}

/// Minimum-weight syndrome decoder. Ties between leaders of equal weight go
/// to the pattern with the smallest value `sum_i e_i 2^i`.
#[derive(Debug, Clone)]
pub struct SyndromeDecoder {
    n: usize,
    redundancy: usize,
    strategy: Strategy,
}

const UNSET: u32 = u32::MAX;

impl SyndromeDecoder {
    pub fn new(code: &LinearCodeSpec) -> Result<Self, PostprocError> {
        let columns = code.packed_columns();
        let redundancy = code.redundancy();
        let strategy = if code.n <= MAX_TABLE_LEN {
            Strategy::Table(Self::coset_leaders(code.n, redundancy, &columns))
        } else {
            let mut map = HashMap::new();
            for (j, &c) in columns.iter().enumerate() {
                if c == 0 || map.insert(c, j).is_some() {
                    return Err(PostprocError::DecoderUnavailable {
                        n: code.n,
                        reason: "columns are not distinct and nonzero".into(),
                    });
                }
            }
            Strategy::SingleError(map)
        };
        Ok(SyndromeDecoder {
            n: code.n,
            redundancy,
            strategy,
        })
    }

    fn coset_leaders(n: usize, redundancy: usize, columns: &[u64]) -> Vec<u32> {
        let size = 1usize << redundancy;
        let mut table = vec![UNSET; size];
        let mut filled = 0;
        for weight in 0..=n {
            if filled == size {
                break;
            }
            // Gosper's hack: same-popcount patterns in increasing order.
            let mut pattern: u32 = if weight == 0 { 0 } else { (1u32 << weight) - 1 };
            let limit: u64 = 1u64 << n;
            while u64::from(pattern) < limit {
                let syn = (0..n)
                    .filter(|&j| pattern >> j & 1 == 1)
                    .fold(0u64, |acc, j| acc ^ columns[j]) as usize;
                if table[syn] == UNSET {
                    table[syn] = pattern;
                    filled += 1;
                }
                if weight == 0 {
                    break;
                }
                let c = pattern & pattern.wrapping_neg();
                let r = pattern.wrapping_add(c);
                if r == 0 {
                    break;
                }
                pattern = (((r ^ pattern) >> 2) / c) | r;
            }
        }
        table
    }

    fn pack_syndrome(&self, syndrome: &[bool]) -> u64 {
        syndrome.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Minimum-weight error pattern with the given syndrome, if its weight is
    /// at most `max_weight`.
    pub fn decode(&self, syndrome: &[bool], max_weight: usize) -> Result<BitString, DecodeFailure> {
        assert_eq!(syndrome.len(), self.redundancy, "syndrome length");
        let packed = self.pack_syndrome(syndrome);
        let pattern = match &self.strategy {
            Strategy::Table(table) => {
                let leader = table[packed as usize];
                if leader == UNSET {
                    return Err(DecodeFailure::NoPattern);
                }
                BitString::from_u64(u64::from(leader), self.n)
            }
            Strategy::SingleError(map) => {
                if packed == 0 {
                    BitString::zeros(self.n)
                } else {
                    let Some(&j) = map.get(&packed) else {
                        return Err(DecodeFailure::NoPattern);
                    };
                    let mut e = BitString::zeros(self.n);
                    e.0[j] = true;
                    e
                }
            }
        };
        let weight = pattern.weight();
        if weight > max_weight {
            return Err(DecodeFailure::ExceedsWeight { weight, max_weight });
        }
        Ok(pattern)
    }
}

/// One-shot syndrome decoding; builds the decoder each call.
pub fn decode_by_syndrome(
    code: &LinearCodeSpec,
    syndrome_diff: &[bool],
    max_weight: usize,
) -> Result<Result<BitString, DecodeFailure>, PostprocError> {
    if syndrome_diff.len() != code.redundancy() {
        return Err(PostprocError::LengthMismatch {
            expected: code.redundancy(),
            got: syndrome_diff.len(),
        });
    }
    Ok(SyndromeDecoder::new(code)?.decode(syndrome_diff, max_weight))
}

pub fn describe(code: &LinearCodeSpec) -> String {
    let mut s = String::new();
    let _ = write!(s, "[{}, {}] code", code.n, code.k);
    if let Some(d) = code.min_distance() {
        let _ = write!(s, ", d = {d}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_words(n: usize) -> impl Iterator<Item = BitString> {
        (0u64..1 << n).map(move |v| BitString::from_u64(v, n))
    }

    #[test]
    fn builtin_codes() {
        let h = LinearCodeSpec::hamming_7_4();
        assert_eq!((h.n(), h.k()), (7, 4));
        assert_eq!(h.min_distance(), Some(3));
        assert_eq!(h.correction_radius(), Some(1));
        let h15 = LinearCodeSpec::hamming_15_11();
        assert_eq!((h15.n(), h15.k()), (15, 11));
        assert_eq!(h15.correction_radius(), Some(1));
        let r5 = LinearCodeSpec::repetition(5).unwrap();
        assert_eq!(r5.correction_radius(), Some(2));
        assert_eq!(LinearCodeSpec::by_name("rep3").unwrap().n(), 3);
        assert!(LinearCodeSpec::by_name("golay").is_err());
    }

    #[test]
    fn code_validation() {
        assert!(LinearCodeSpec::new(3, 1, vec![vec![true, true, false], vec![true, true, false]]).is_err());
        assert!(LinearCodeSpec::new(3, 0, vec![]).is_err());
        assert!(LinearCodeSpec::new(3, 2, vec![vec![true, true]]).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let h = LinearCodeSpec::hamming_7_4();
        let text = h.to_text();
        assert_eq!(text.lines().next(), Some("7 4"));
        assert_eq!(LinearCodeSpec::from_text(&text).unwrap(), h);
        assert!(LinearCodeSpec::from_text("7 4\n0001111\n").is_err());
        assert!(LinearCodeSpec::from_text("3 1\n110\n1a1\n").is_err());
        assert!(LinearCodeSpec::from_text("").is_err());
    }

    #[test]
    fn syndrome_examples() {
        let h = LinearCodeSpec::hamming_7_4();
        assert_eq!(h.syndrome(&[false; 7]).unwrap().weight(), 0);
        for i in 0..7 {
            let mut e = vec![false; 7];
            e[i] = true;
            assert_eq!(h.syndrome(&e).unwrap(), h.column(i));
        }
        let enc = h.systematic_encoder();
        for m in all_words(4) {
            assert_eq!(h.syndrome(&enc.encode(&m.0).0).unwrap().weight(), 0);
        }
        assert!(h.syndrome(&[false; 6]).is_err());
    }

    #[test]
    fn syndrome_is_linear() {
        let h = LinearCodeSpec::hamming_15_11();
        let words: Vec<_> = (0..40u64).map(|i| BitString::from_u64(i * 811 % (1 << 15), 15)).collect();
        for a in &words {
            for b in &words {
                let lhs = h.syndrome(&a.xor(b).0).unwrap();
                let rhs = h.syndrome(&a.0).unwrap().xor(&h.syndrome(&b.0).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn decode_examples() {
        let h = LinearCodeSpec::hamming_7_4();
        let dec = SyndromeDecoder::new(&h).unwrap();
        assert_eq!(dec.decode(&[false; 3], 1).unwrap().weight(), 0);
        let e = dec.decode(&h.column(3).0, 1).unwrap();
        assert_eq!(e, BitString::from_u64(1 << 3, 7));
        assert!(decode_by_syndrome(&h, &[true], 1).is_err());
    }

    #[test]
    fn weight_two_errors_miscorrect_on_hamming7() {
        let h = LinearCodeSpec::hamming_7_4();
        let dec = SyndromeDecoder::new(&h).unwrap();
        let mut count = 0;
        for e in all_words(7).filter(|w| w.weight() == 2) {
            let s = h.syndrome(&e.0).unwrap();
            let guess = dec.decode(&s.0, 7).unwrap();
            assert_eq!(guess.weight(), 1);
            // the corrected word differs from the truth by a weight-3 codeword
            let residual = guess.xor(&e);
            assert_eq!(residual.weight(), 3);
            assert_eq!(h.syndrome(&residual.0).unwrap().weight(), 0);
            count += 1;
        }
        assert_eq!(count, 21);
    }

    #[test]
    fn max_weight_is_enforced() {
        let r = LinearCodeSpec::repetition(5).unwrap();
        let dec = SyndromeDecoder::new(&r).unwrap();
        let e = BitString::from_u64(0b00011, 5);
        let s = r.syndrome(&e.0).unwrap();
        assert_eq!(dec.decode(&s.0, 2).unwrap(), e);
        assert_eq!(
            dec.decode(&s.0, 1),
            Err(DecodeFailure::ExceedsWeight { weight: 2, max_weight: 1 })
        );
    }

    #[test]
    fn tie_break_prefers_smallest_pattern() {
        // columns 0 and 2 (and 1 and 3) coincide
        let code = LinearCodeSpec::new(
            4,
            2,
            vec![vec![true, false, true, false], vec![false, true, false, true]],
        )
        .unwrap();
        let dec = SyndromeDecoder::new(&code).unwrap();
        let s = code.syndrome(&[true, false, false, false]).unwrap();
        // e_0 and e_2 share this syndrome; e_0 has the smaller value
        assert_eq!(dec.decode(&s.0, 4).unwrap(), BitString::from_u64(1, 4));
    }

    #[test]
    fn decode_inverts_syndrome_within_radius() {
        let mut codes = vec![
            LinearCodeSpec::hamming_7_4(),
            LinearCodeSpec::hamming_15_11(),
            LinearCodeSpec::repetition(3).unwrap(),
            LinearCodeSpec::repetition(7).unwrap(),
        ];
        // a [10, 4] code with distance 4 (radius 1)
        codes.push(
            LinearCodeSpec::from_text(
                "10 4\n1100000000\n1010000000\n0001100011\n0000110001\n0000001101\n1001010110\n",
            )
            .unwrap(),
        );
        for code in codes {
            let radius = code.correction_radius().unwrap();
            let dec = SyndromeDecoder::new(&code).unwrap();
            for e in all_words(code.n()).filter(|w| w.weight() <= radius) {
                let s = code.syndrome(&e.0).unwrap();
                assert_eq!(dec.decode(&s.0, radius).unwrap(), e, "{}", describe(&code));
            }
        }
    }

    #[test]
    fn single_error_decoder_for_long_codes() {
        let h = LinearCodeSpec::hamming(5).unwrap();
        assert_eq!(h.n(), 31);
        let dec = SyndromeDecoder::new(&h).unwrap();
        for i in 0..31 {
            let mut e = vec![false; 31];
            e[i] = true;
            let s = h.syndrome(&e).unwrap();
            assert_eq!(dec.decode(&s.0, 1).unwrap().0, e);
        }
        // 26 columns drawn from only 7 nonzero 3-bit patterns must repeat
        let rows = (0..3)
            .map(|r| (0..26).map(|j| ((j % 7) + 1) >> (2 - r) & 1 == 1).collect())
            .collect();
        let dup = LinearCodeSpec::new(26, 23, rows).unwrap();
        assert!(SyndromeDecoder::new(&dup).is_err());
        assert!(SyndromeDecoder::new(&LinearCodeSpec::repetition(30).unwrap()).is_ok());
    }

    #[test]
    fn systematic_encoder_covers_info_set() {
        for code in [LinearCodeSpec::hamming_7_4(), LinearCodeSpec::hamming_15_11()] {
            let enc = code.systematic_encoder();
            assert_eq!(enc.info_positions().len(), code.k());
            assert_eq!(enc.parity_positions().len(), code.redundancy());
            let m = BitString::from_u64(0b1011, code.k());
            let w = enc.encode(&m.0);
            assert_eq!(enc.extract_info(&w.0), m);
        }
    }
}
