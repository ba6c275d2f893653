//! Small explicit classical-quantum states.
//!
//! A cq-state is stored block by block: one entry per key pair `(k_A, k_B)`
//! holding its probability and Eve's conditional density matrix. The dense
//! block-diagonal matrix is only materialised on request, for cross-checks
//! at key lengths up to two bits.
//!
//! Keys are bit strings packed into `u64`, first bit in the most significant
//! position, so a "known prefix" is the top bits of the value.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const POVM_TOL: f64 = 1e-9;
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Largest key length accepted for explicit states.
pub const MAX_KEY_BITS: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix deviates from Hermitian by {0:e}")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("smallest eigenvalue {0:e} below -{PSD_TOL:e}")]
    NotPositive(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("key lengths differ: {0:?} vs {1:?}")]
    KeyShapeMismatch((u32, u32), (u32, u32)),
    #[error("key length {0} outside [1, {MAX_KEY_BITS}]")]
    KeyLength(u32),
    #[error("key {key} does not fit in {bits} bits")]
    KeyOutOfRange { key: u64, bits: u32 },
    #[error("invalid probability {0}")]
    BadProbability(f64),
    #[error("probabilities sum to {0}")]
    ProbabilitySum(f64),
    #[error("duplicate key pair ({0}, {1})")]
    DuplicateKeyPair(u64, u64),
    #[error("no Eve state supplied for key pair ({0}, {1})")]
    MissingEveState(u64, u64),
    #[error("POVM element {label}: {reason}")]
    BadPovmElement { label: u64, reason: String },
    #[error("POVM elements sum to the identity only within {0:e}")]
    PovmIncomplete(f64),
    #[error("POVM has no element for key {0}")]
    MissingLabel(u64),
    #[error("duplicate POVM label {0}")]
    DuplicateLabel(u64),
    #[error("Eve state of block ({0}, {1}) is not diagonal")]
    NotCommuting(u64, u64),
    #[error("known prefix of {known} bits must be shorter than the {bits}-bit key")]
    PrefixOutOfRange { known: u32, bits: u32 },
    #[error("conditioning on known prefix {0} has probability zero")]
    ImpossiblePrefix(u64),
    #[error("dense materialisation limited to key lengths <= 2 bits")]
    TooLargeForDense,
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &CMatrix) -> Result<(), StateError> {
    if m.nrows() != m.ncols() {
        return Err(StateError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Real eigenvalues of a Hermitian matrix (validated to [`HERMITIAN_TOL`]).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>, StateError> {
    check_square(m)?;
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(StateError::NotHermitian(defect));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(sym.symmetric_eigenvalues().iter().copied().collect())
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64, StateError> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}

fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `tr[a b]` without forming the product.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, StateError> {
        let eigen = hermitian_eigenvalues(&matrix)?;
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(StateError::BadTrace(tr.re));
        }
        let min = eigen.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(StateError::NotPositive(min));
        }
        Ok(DensityMatrix(matrix))
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self, StateError> {
        let d = weights.len();
        let m = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(weights[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0))
    }

    /// `|psi><psi|` for a (not necessarily normalised) vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, StateError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let d = amplitudes.len();
        let m = CMatrix::from_fn(d, d, |i, j| amplitudes[i] * amplitudes[j].conj() / norm);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.0[(i, j)].norm() <= HERMITIAN_TOL))
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }
}

/// Half the trace norm of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, StateError> {
    if rho.dim() != sigma.dim() {
        return Err(StateError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(0.5 * trace_norm(&(&rho.0 - &sigma.0))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqBlock {
    pub key_a: u64,
    pub key_b: u64,
    pub prob: f64,
    pub eve: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqState {
    key_bits_a: u32,
    key_bits_b: u32,
    eve_dim: usize,
    blocks: Vec<CqBlock>,
}

fn check_key(key: u64, bits: u32) -> Result<(), StateError> {
    if key >> bits != 0 {
        return Err(StateError::KeyOutOfRange { key, bits });
    }
    Ok(())
}

fn check_key_bits(bits: u32) -> Result<(), StateError> {
    if bits == 0 || bits > MAX_KEY_BITS {
        return Err(StateError::KeyLength(bits));
    }
    Ok(())
}

impl CqState {
    pub fn new(key_bits_a: u32, key_bits_b: u32, blocks: Vec<CqBlock>) -> Result<Self, StateError> {
        check_key_bits(key_bits_a)?;
        check_key_bits(key_bits_b)?;
        let eve_dim = blocks.first().map(|b| b.eve.dim()).unwrap_or(1);
        let mut seen = std::collections::HashSet::new();
        let mut total = 0.0;
        for b in &blocks {
            check_key(b.key_a, key_bits_a)?;
            check_key(b.key_b, key_bits_b)?;
            if !(b.prob >= 0.0 && b.prob.is_finite()) {
                return Err(StateError::BadProbability(b.prob));
            }
            if b.eve.dim() != eve_dim {
                return Err(StateError::DimensionMismatch(eve_dim, b.eve.dim()));
            }
            if !seen.insert((b.key_a, b.key_b)) {
                return Err(StateError::DuplicateKeyPair(b.key_a, b.key_b));
            }
            total += b.prob;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(StateError::ProbabilitySum(total));
        }
        Ok(CqState {
            key_bits_a,
            key_bits_b,
            eve_dim,
            blocks,
        })
    }

    pub fn key_bits(&self) -> (u32, u32) {
        (self.key_bits_a, self.key_bits_b)
    }

    pub fn eve_dim(&self) -> usize {
        self.eve_dim
    }

    pub fn blocks(&self) -> &[CqBlock] {
        &self.blocks
    }

    /// Probability that Alice and Bob hold the same key.
    pub fn agreement_probability(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.key_a == b.key_b)
            .map(|b| b.prob)
            .sum()
    }

    /// Eve's reduced state `sum_k p(k) rho_E(k)`.
    pub fn eve_marginal(&self) -> DensityMatrix {
        let mut acc = CMatrix::zeros(self.eve_dim, self.eve_dim);
        for b in &self.blocks {
            acc += b.eve.matrix() * Complex64::new(b.prob, 0.0);
        }
        DensityMatrix(acc)
    }

    /// Block-diagonal dense matrix on `A ⊗ B ⊗ E`; key lengths <= 2 only.
    pub fn to_dense(&self) -> Result<DensityMatrix, StateError> {
        if self.key_bits_a > 2 || self.key_bits_b > 2 {
            return Err(StateError::TooLargeForDense);
        }
        let d = self.eve_dim;
        let size = (1usize << (self.key_bits_a + self.key_bits_b)) * d;
        let mut m = CMatrix::zeros(size, size);
        for b in &self.blocks {
            let offset = ((b.key_a as usize) << self.key_bits_b | b.key_b as usize) * d;
            for i in 0..d {
                for j in 0..d {
                    m[(offset + i, offset + j)] = b.eve.matrix()[(i, j)] * b.prob;
                }
            }
        }
        Ok(DensityMatrix(m))
    }
}

/// Joint key distribution for [`build_real_state`]: `(k_A, k_B, probability)`.
pub type KeyPairDistribution = [(u64, u64, f64)];

/// The state actually distributed: each key pair carries its own Eve state.
pub fn build_real_state(
    key_bits_a: u32,
    key_bits_b: u32,
    joint: &KeyPairDistribution,
    eve_states: &BTreeMap<(u64, u64), DensityMatrix>,
) -> Result<CqState, StateError> {
    let blocks = joint
        .iter()
        .map(|&(a, b, p)| {
            let eve = eve_states
                .get(&(a, b))
                .cloned()
                .ok_or(StateError::MissingEveState(a, b))?;
            Ok(CqBlock {
                key_a: a,
                key_b: b,
                prob: p,
                eve,
            })
        })
        .collect::<Result<Vec<_>, StateError>>()?;
    CqState::new(key_bits_a, key_bits_b, blocks)
}

/// Uniform agreed key decoupled from Eve, who holds `tau_e`.
pub fn build_ideal_state(key_bits: u32, tau_e: &DensityMatrix) -> Result<CqState, StateError> {
    check_key_bits(key_bits)?;
    let n = 1u64 << key_bits;
    let p = 1.0 / n as f64;
    let blocks = (0..n)
        .map(|k| CqBlock {
            key_a: k,
            key_b: k,
            prob: p,
            eve: tau_e.clone(),
        })
        .collect();
    CqState::new(key_bits, key_bits, blocks)
}

/// Trace distance between two cq-states, block by block.
pub fn cq_trace_distance(real: &CqState, ideal: &CqState) -> Result<f64, StateError> {
    if real.key_bits() != ideal.key_bits() {
        return Err(StateError::KeyShapeMismatch(real.key_bits(), ideal.key_bits()));
    }
    if real.eve_dim != ideal.eve_dim {
        return Err(StateError::DimensionMismatch(real.eve_dim, ideal.eve_dim));
    }
    let d = real.eve_dim;
    let mut diff: BTreeMap<(u64, u64), CMatrix> = BTreeMap::new();
    for (sign, state) in [(1.0, real), (-1.0, ideal)] {
        for b in &state.blocks {
            let entry = diff
                .entry((b.key_a, b.key_b))
                .or_insert_with(|| CMatrix::zeros(d, d));
            *entry += b.eve.matrix() * Complex64::new(sign * b.prob, 0.0);
        }
    }
    let mut total = 0.0;
    for m in diff.values() {
        total += trace_norm(m)?;
    }
    Ok(0.5 * total)
}

/// A measurement on Eve's system with outcomes labelled by keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<(u64, CMatrix)>,
}

impl Povm {
    pub fn new(dim: usize, elements: Vec<(u64, CMatrix)>) -> Result<Self, StateError> {
        let mut sum = CMatrix::zeros(dim, dim);
        let mut labels = std::collections::HashSet::new();
        for (label, m) in &elements {
            if !labels.insert(*label) {
                return Err(StateError::DuplicateLabel(*label));
            }
            if m.nrows() != dim || m.ncols() != dim {
                return Err(StateError::DimensionMismatch(dim, m.nrows()));
            }
            let eigen = hermitian_eigenvalues(m).map_err(|e| StateError::BadPovmElement {
                label: *label,
                reason: e.to_string(),
            })?;
            let min = eigen.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -POVM_TOL {
                return Err(StateError::BadPovmElement {
                    label: *label,
                    reason: format!("eigenvalue {min:e}"),
                });
            }
            sum += m;
        }
        let defect = (&sum - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > POVM_TOL {
            return Err(StateError::PovmIncomplete(defect));
        }
        Ok(Povm { dim, elements })
    }

    /// Projective measurement in the computational basis: outcome `i` is
    /// reported as `labels[i]`.
    pub fn computational(labels: &[u64]) -> Result<Self, StateError> {
        let dim = labels.len();
        let elements = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| (label, DensityMatrix::basis_state(dim, i).0))
            .collect::<Vec<_>>();
        Self::merged(dim, elements)
    }

    /// Like [`Povm::new`] but elements sharing a label are summed.
    pub fn merged(dim: usize, elements: Vec<(u64, CMatrix)>) -> Result<Self, StateError> {
        let mut by_label: BTreeMap<u64, CMatrix> = BTreeMap::new();
        for (label, m) in elements {
            *by_label.entry(label).or_insert_with(|| CMatrix::zeros(dim, dim)) += m;
        }
        Self::new(dim, by_label.into_iter().collect())
    }

    /// Adds a zero element for every `key_bits`-bit label not yet present.
    pub fn covering(mut self, key_bits: u32) -> Self {
        for label in 0..1u64 << key_bits {
            if !self.elements.iter().any(|(l, _)| *l == label) {
                self.elements.push((label, CMatrix::zeros(self.dim, self.dim)));
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[(u64, CMatrix)] {
        &self.elements
    }
}

/// `sum_{k} Pr(k, k) tr[M_k rho_E(k, k)]`: the expectation of the
/// operator `Gamma = sum_k |k,k><k,k| ⊗ M_k` on the state.
pub fn gamma_expectation(state: &CqState, povm: &Povm) -> Result<f64, StateError> {
    if povm.dim != state.eve_dim {
        return Err(StateError::DimensionMismatch(state.eve_dim, povm.dim));
    }
    let index: HashMap<u64, &CMatrix> = povm.elements.iter().map(|(l, m)| (*l, m)).collect();
    let mut total = 0.0;
    for b in state.blocks.iter().filter(|b| b.key_a == b.key_b) {
        let Some(m) = index.get(&b.key_a) else {
            if b.prob > 0.0 {
                return Err(StateError::MissingLabel(b.key_a));
            }
            continue;
        };
        total += b.prob * trace_of_product(m, b.eve.matrix()).re;
    }
    Ok(total)
}

/// Probability that Eve's measurement outcome equals the key Alice and Bob
/// agreed on.
pub fn guessing_probability(real: &CqState, povm: &Povm) -> Result<f64, StateError> {
    gamma_expectation(real, povm)
}

fn check_commuting(real: &CqState) -> Result<(), StateError> {
    for b in &real.blocks {
        if !b.eve.is_diagonal() {
            return Err(StateError::NotCommuting(b.key_a, b.key_b));
        }
    }
    Ok(())
}

/// Per Eve symbol `e`, the agreed key maximising `Pr(k, k)·rho_E(k,k)[e, e]`
/// (lowest key on ties) together with that weight.
fn classical_argmax(real: &CqState) -> Vec<(u64, f64)> {
    let mut best = vec![(0u64, 0.0f64); real.eve_dim];
    let mut agreed: Vec<&CqBlock> = real.blocks.iter().filter(|b| b.key_a == b.key_b).collect();
    agreed.sort_by_key(|b| b.key_a);
    for (e, slot) in best.iter_mut().enumerate() {
        let mut first = true;
        for b in &agreed {
            let w = b.prob * b.eve.matrix()[(e, e)].re;
            if first || w > slot.1 {
                *slot = (b.key_a, w);
                first = false;
            }
        }
    }
    best
}

/// Exact maximum of [`guessing_probability`] over all measurements when
/// every Eve state is diagonal in the same basis.
pub fn optimal_guess_classical(real: &CqState) -> Result<f64, StateError> {
    check_commuting(real)?;
    Ok(classical_argmax(real).iter().map(|(_, w)| w).sum())
}

/// The projective measurement achieving [`optimal_guess_classical`].
pub fn optimal_classical_povm(real: &CqState) -> Result<Povm, StateError> {
    check_commuting(real)?;
    let labels: Vec<u64> = classical_argmax(real).into_iter().map(|(k, _)| k).collect();
    Ok(Povm::computational(&labels)?.covering(real.key_bits_a))
}

/// Conditions on Alice's first `known_bits` key bits being `known_value`
/// (the part Eve learned from known plaintext), drops those bits from both
/// keys and renormalises.
pub fn kpa_reduce(real: &CqState, known_bits: u32, known_value: u64) -> Result<CqState, StateError> {
    let (bits_a, bits_b) = real.key_bits();
    if known_bits >= bits_a || known_bits >= bits_b {
        return Err(StateError::PrefixOutOfRange {
            known: known_bits,
            bits: bits_a.min(bits_b),
        });
    }
    check_key(known_value, known_bits)?;
    if known_bits == 0 {
        return Ok(real.clone());
    }
    let rest_a = bits_a - known_bits;
    let rest_b = bits_b - known_bits;
    let mask_a = (1u64 << rest_a) - 1;
    let mask_b = (1u64 << rest_b) - 1;
    let d = real.eve_dim;

    let mut merged: BTreeMap<(u64, u64), (f64, CMatrix)> = BTreeMap::new();
    let mut total = 0.0;
    for b in real.blocks.iter().filter(|b| b.key_a >> rest_a == known_value) {
        if b.prob == 0.0 {
            continue;
        }
        let entry = merged
            .entry((b.key_a & mask_a, b.key_b & mask_b))
            .or_insert_with(|| (0.0, CMatrix::zeros(d, d)));
        entry.0 += b.prob;
        entry.1 += b.eve.matrix() * Complex64::new(b.prob, 0.0);
        total += b.prob;
    }
    if total <= 0.0 {
        return Err(StateError::ImpossiblePrefix(known_value));
    }
    let blocks = merged
        .into_iter()
        .map(|((a, b), (p, m))| {
            Ok(CqBlock {
                key_a: a,
                key_b: b,
                prob: p / total,
                eve: DensityMatrix::new(m * Complex64::new(1.0 / p, 0.0))?,
            })
        })
        .collect::<Result<Vec<_>, StateError>>()?;
    // renormalisation can leave the sum a few ulps from one
    let mut state = CqState {
        key_bits_a: rest_a,
        key_bits_b: rest_b,
        eve_dim: d,
        blocks,
    };
    let sum: f64 = state.blocks.iter().map(|b| b.prob).sum();
    for b in &mut state.blocks {
        b.prob /= sum;
    }
    CqState::new(state.key_bits_a, state.key_bits_b, state.blocks)
}

pub mod random {
    //! Seeded random states and measurements for property checks.
    //!
    //! Density matrices are `A A† / tr(A A†)` with `A` a complex Gaussian
    //! matrix. POVMs are `S^{-1/2} G_k S^{-1/2}` with random PSD `G_k` and
    //! `S = sum_k G_k`.

    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Generator for trial `trial` of a run seeded with `seed`.
    pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        rng
    }

    fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    pub fn density_matrix<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
        let rank = rng.random_range(1..=dim);
        let a = gaussian_matrix(rng, dim, rank);
        let g = &a * a.adjoint();
        let tr = trace(&g).re;
        let m = g * Complex64::new(1.0 / tr, 0.0);
        DensityMatrix((&m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Random cq-state over all key pairs, biased toward agreement.
    pub fn cq_state<R: Rng>(rng: &mut R, key_bits: u32, eve_dim: usize) -> CqState {
        let n = 1u64 << key_bits;
        let disagreement: f64 = rng.random_range(0.0..0.3);
        let decoupled = rng.random_bool(0.2);
        let shared = density_matrix(rng, eve_dim);
        let mut blocks = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let scale = if a == b { 1.0 } else { disagreement };
                let weight: f64 = rng.random_range(0.05..1.0) * scale;
                let eve = if decoupled { shared.clone() } else { density_matrix(rng, eve_dim) };
                blocks.push(CqBlock {
                    key_a: a,
                    key_b: b,
                    prob: weight,
                    eve,
                });
            }
        }
        let total: f64 = blocks.iter().map(|b| b.prob).sum();
        for b in &mut blocks {
            b.prob /= total;
        }
        CqState::new(key_bits, key_bits, blocks).expect("generated state is valid")
    }

    fn inverse_sqrt(m: &CMatrix) -> CMatrix {
        let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let inv: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(1.0 / l.max(1e-300).sqrt(), 0.0))
            .collect();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(inv));
        &eig.eigenvectors * d * eig.eigenvectors.adjoint()
    }

    /// Random POVM on `dim` dimensions with one element per label.
    pub fn povm<R: Rng>(rng: &mut R, dim: usize, labels: &[u64]) -> Povm {
        loop {
            let raw: Vec<CMatrix> = labels
                .iter()
                .map(|_| {
                    let rank = rng.random_range(1..=dim);
                    let a = gaussian_matrix(rng, dim, rank);
                    &a * a.adjoint()
                })
                .collect();
            let sum = raw.iter().fold(CMatrix::zeros(dim, dim), |acc, g| acc + g);
            let smallest = hermitian_eigenvalues(&sum)
                .map(|e| e.into_iter().fold(f64::INFINITY, f64::min))
                .unwrap_or(0.0);
            if smallest < 1e-6 {
                continue;
            }
            let s = inverse_sqrt(&sum);
            let elements: Vec<(u64, CMatrix)> = labels
                .iter()
                .zip(raw)
                .map(|(&l, g)| {
                    let m = &s * g * &s;
                    (l, (&m + m.adjoint()) * Complex64::new(0.5, 0.0))
                })
                .collect();
            if let Ok(p) = Povm::new(dim, elements) {
                return p;
            }
        }
    }

    /// Random projective measurement diagonal in the computational basis.
    pub fn diagonal_povm<R: Rng>(rng: &mut R, dim: usize, key_bits: u32) -> Povm {
        let labels: Vec<u64> = (0..dim).map(|_| rng.random_range(0..1u64 << key_bits)).collect();
        Povm::computational(&labels)
            .expect("diagonal projectors form a POVM")
            .covering(key_bits)
    }
}
