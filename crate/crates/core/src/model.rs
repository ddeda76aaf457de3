//! Fundamental types: switch-weight bases, on/off representations, transition
//! models, and the per-transition glitch error.
//!
//! All types are immutable values and all operations are pure functions, so
//! everything here is safe to share across threads. Weights and glitch errors
//! are exact integers; no floating point enters the glitch-error arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Digital input code, in `[0, 2^N - 1]` for an `N`-bit converter.
pub type Codeword = u32;

/// Largest supported bit depth. Bounds the `2^N x 2^N` transition tables.
pub const MAX_BIT_DEPTH: u32 = 16;

/// Largest supported basis length (a thermometer basis at the maximum
/// practical depth).
pub const MAX_BASIS_LEN: usize = 1 << 12;

// ---------------------------------------------------------------------------
// Basis
// ---------------------------------------------------------------------------

/// Switch weights of a current-steering DAC, in units of the unit current.
///
/// Weights are kept in non-decreasing order (canonical form). A valid basis
/// covers every codeword in `[0, 2^N - 1]`: each code has at least one on/off
/// pattern whose weighted sum equals it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    weights: Vec<u32>,
    bit_depth: u32,
}

impl Basis {
    /// Validates weights, sorts them into canonical order, and checks that
    /// every codeword is representable.
    pub fn new(weights: Vec<u32>, bit_depth: u32) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if bit_depth > MAX_BIT_DEPTH {
            return Err(Error::BitDepthTooLarge(bit_depth));
        }
        if weights.len() > MAX_BASIS_LEN {
            return Err(Error::BasisTooLarge {
                len: weights.len(),
                max: MAX_BASIS_LEN,
            });
        }
        let max = 1u64 << bit_depth;
        let mut weights = weights;
        weights.sort_unstable();
        if let Some(&w) = weights.iter().find(|&&w| w == 0 || u64::from(w) > max) {
            return Err(Error::WeightOutOfRange { weight: w, max });
        }
        let basis = Basis { weights, bit_depth };
        if let Some(gap) = basis.first_coverage_gap() {
            return Err(Error::CoverageGap(gap));
        }
        Ok(basis)
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Number of switches, `L`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Intended codeword width, `N`.
    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    /// `2^N`.
    pub fn num_codewords(&self) -> u32 {
        1 << self.bit_depth
    }

    pub fn max_code(&self) -> Codeword {
        self.num_codewords() - 1
    }

    pub fn weight_sum(&self) -> u64 {
        self.weights.iter().map(|&w| u64::from(w)).sum()
    }

    /// True when the weights sum to exactly `2^N - 1`, i.e. the basis reaches
    /// full scale with no excess.
    pub fn is_full_scale_exact(&self) -> bool {
        self.weight_sum() == u64::from(self.max_code())
    }

    pub fn check_code(&self, code: Codeword) -> Result<()> {
        if code > self.max_code() {
            return Err(Error::CodewordOutOfRange {
                code,
                bit_depth: self.bit_depth,
            });
        }
        Ok(())
    }

    /// The canonical representation of `code`: the lexicographically smallest
    /// bit vector (index 0 compared first, 0 < 1) that decodes to `code`.
    pub fn canonical_rep(&self, code: Codeword) -> Result<Representation> {
        self.check_code(code)?;
        let feas = SuffixFeasibility::build(self);
        feas.canonical_rep(code)
    }

    /// Subset-sum reachability over `[0, 2^N - 1]`; returns the first
    /// uncovered codeword, if any.
    fn first_coverage_gap(&self) -> Option<Codeword> {
        let ncodes = self.num_codewords() as usize;
        let words = ncodes.div_ceil(64);
        let mut reach = vec![0u64; words];
        reach[0] = 1;
        for &w in &self.weights {
            let s = w as usize;
            if s < ncodes {
                shift_or_in_place(&mut reach, s);
            }
        }
        (0..ncodes)
            .find(|&x| reach[x / 64] >> (x % 64) & 1 == 0)
            .map(|x| x as Codeword)
    }
}

impl Serialize for Basis {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            weights: &'a [u32],
            bit_depth: u32,
        }
        Raw {
            weights: &self.weights,
            bit_depth: self.bit_depth,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            weights: Vec<u32>,
            bit_depth: u32,
        }
        let raw = Raw::deserialize(deserializer)?;
        Basis::new(raw.weights, raw.bit_depth).map_err(D::Error::custom)
    }
}

/// `bits |= bits << shift`, in place.
fn shift_or_in_place(bits: &mut [u64], shift: usize) {
    let word_shift = shift / 64;
    let bit_shift = shift % 64;
    for i in (word_shift..bits.len()).rev() {
        let mut v = bits[i - word_shift] << bit_shift;
        if bit_shift > 0 && i > word_shift {
            v |= bits[i - word_shift - 1] >> (64 - bit_shift);
        }
        bits[i] |= v;
    }
}

/// Per-suffix subset-sum reachability, used to build canonical
/// representations without enumerating the full representation set.
pub(crate) struct SuffixFeasibility {
    weights: Vec<u32>,
    // feasible[i] = bitset of sums reachable from weights[i..], truncated
    // to [0, 2^N - 1]
    feasible: Vec<Vec<u64>>,
    words: usize,
}

impl SuffixFeasibility {
    pub fn build(basis: &Basis) -> Self {
        let ncodes = basis.num_codewords() as usize;
        let words = ncodes.div_ceil(64);
        let l = basis.len();
        let mut feasible = vec![vec![0u64; words]; l + 1];
        feasible[l][0] = 1;
        for i in (0..l).rev() {
            let mut row = feasible[i + 1].clone();
            let s = basis.weights()[i] as usize;
            if s < ncodes {
                shift_or_in_place(&mut row, s);
            }
            feasible[i] = row;
        }
        SuffixFeasibility {
            weights: basis.weights().to_vec(),
            feasible,
            words,
        }
    }

    fn contains(&self, row: usize, sum: usize) -> bool {
        debug_assert!(sum / 64 < self.words);
        self.feasible[row][sum / 64] >> (sum % 64) & 1 == 1
    }

    /// Walks front to back, preferring each bit off; the result is the
    /// lexicographically smallest representation of `code`.
    pub fn canonical_rep(&self, code: Codeword) -> Result<Representation> {
        let l = self.weights.len();
        let mut rep = Representation::zeros(l);
        let mut remaining = code as usize;
        for i in 0..l {
            if self.contains(i + 1, remaining) {
                continue; // bit i stays 0
            }
            let w = self.weights[i] as usize;
            if w <= remaining && self.contains(i + 1, remaining - w) {
                rep.set_bit(i, true);
                remaining -= w;
            } else {
                return Err(Error::CoverageGap(code));
            }
        }
        if remaining != 0 {
            return Err(Error::CoverageGap(code));
        }
        Ok(rep)
    }
}

// ---------------------------------------------------------------------------
// Representation
// ---------------------------------------------------------------------------

/// On/off pattern of the `L` switches; bit `i` drives the `i`-th basis weight.
///
/// Serializes as a bit string whose leftmost character is bit 0 (the
/// smallest-index switch). Ordering is lexicographic on that string.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Representation {
    words: Vec<u64>,
    len: u32,
}

impl Representation {
    pub fn zeros(len: usize) -> Self {
        Representation {
            words: vec![0; len.div_ceil(64).max(1)],
            len: len as u32,
        }
    }

    /// Builds from the low `len` bits of `mask` (bit 0 = switch 0).
    pub fn from_low_mask(mask: u64, len: usize) -> Self {
        assert!(len <= 64, "mask form only holds up to 64 switches");
        assert!(len == 64 || mask >> len == 0, "mask has bits beyond len");
        let mut rep = Representation::zeros(len);
        rep.words[0] = mask;
        rep
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut rep = Representation::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                rep.set_bit(i, true);
            }
        }
        rep
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len());
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        assert!(i < self.len());
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Indices of switches that are on, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    /// The packed mask when the pattern fits one word.
    pub fn low_mask(&self) -> Option<u64> {
        if self.len <= 64 {
            Some(self.words[0])
        } else {
            None
        }
    }

    pub fn bit_string(&self) -> String {
        (0..self.len())
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Indices where `self` and `other` differ (the toggled switches).
    pub fn toggled(&self, other: &Representation) -> impl Iterator<Item = usize> + '_ {
        assert_eq!(self.len, other.len);
        let xored: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        xored.into_iter().enumerate().flat_map(|(wi, w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

impl Ord for Representation {
    fn cmp(&self, other: &Self) -> Ordering {
        // Lexicographic over the bit string: lowest differing index decides,
        // and the pattern with 0 there is smaller.
        match self.len.cmp(&other.len) {
            Ordering::Equal => {}
            ord => return ord,
        }
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let i = diff.trailing_zeros();
                return if a >> i & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Representation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_string())
    }
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Representation({})", self.bit_string())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidConfig("empty bit string".into()));
        }
        let mut rep = Representation::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => rep.set_bit(i, true),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "invalid character {other:?} in bit string"
                    )))
                }
            }
        }
        Ok(rep)
    }
}

impl Serialize for Representation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.bit_string())
    }
}

impl<'de> Deserialize<'de> for Representation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

/// The DAC output for a switch pattern: the inner product of the pattern and
/// the weights. May exceed `2^N - 1` on bases whose weights sum past full
/// scale.
pub fn decode(rep: &Representation, basis: &Basis) -> Result<u64> {
    if rep.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            rep_len: rep.len(),
            basis_len: basis.len(),
        });
    }
    Ok(rep.ones().map(|i| u64::from(basis.weights()[i])).sum())
}

/// Glitch error of the transition `rep_x -> rep_y`: the summed weight of every
/// switch that toggles. Symmetric in its arguments.
pub fn glitch_error(rep_x: &Representation, rep_y: &Representation, basis: &Basis) -> Result<u64> {
    if rep_x.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            rep_len: rep_x.len(),
            basis_len: basis.len(),
        });
    }
    if rep_y.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            rep_len: rep_y.len(),
            basis_len: basis.len(),
        });
    }
    Ok(rep_x
        .toggled(rep_y)
        .map(|i| u64::from(basis.weights()[i]))
        .sum())
}

// ---------------------------------------------------------------------------
// Transition model
// ---------------------------------------------------------------------------

/// Joint probability distribution over consecutive codeword pairs `(x, y)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TransitionModel {
    /// Independent uniform codewords: `P(x, y) = 4^-N`.
    UniformIid { bit_depth: u32 },
    /// Explicit joint table, row-major `[x * 2^N + y]`, summing to 1.
    Empirical { bit_depth: u32, joint: Vec<f64> },
}

impl TransitionModel {
    pub fn uniform(bit_depth: u32) -> Self {
        TransitionModel::UniformIid { bit_depth }
    }

    pub fn from_joint(bit_depth: u32, joint: Vec<f64>) -> Result<Self> {
        let n = 1usize << bit_depth;
        if joint.len() != n * n {
            return Err(Error::InvalidModel(format!(
                "joint table has {} entries, expected {}",
                joint.len(),
                n * n
            )));
        }
        if joint.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidModel(
                "joint probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = joint.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!(
                "joint probabilities sum to {total}, expected 1"
            )));
        }
        Ok(TransitionModel::Empirical { bit_depth, joint })
    }

    /// Estimates the joint distribution from the consecutive pairs of an
    /// observed code sequence.
    pub fn from_sequence(bit_depth: u32, codes: &[Codeword]) -> Result<Self> {
        if codes.len() < 2 {
            return Err(Error::InvalidModel(
                "need at least two codes to derive a transition model".into(),
            ));
        }
        let n = 1usize << bit_depth;
        let mut joint = vec![0.0; n * n];
        let share = 1.0 / (codes.len() - 1) as f64;
        for pair in codes.windows(2) {
            let (x, y) = (pair[0], pair[1]);
            if x as usize >= n || y as usize >= n {
                return Err(Error::CodewordOutOfRange {
                    code: x.max(y),
                    bit_depth,
                });
            }
            joint[x as usize * n + y as usize] += share;
        }
        Ok(TransitionModel::Empirical { bit_depth, joint })
    }

    pub fn bit_depth(&self) -> u32 {
        match self {
            TransitionModel::UniformIid { bit_depth } => *bit_depth,
            TransitionModel::Empirical { bit_depth, .. } => *bit_depth,
        }
    }

    pub fn num_codewords(&self) -> u32 {
        1 << self.bit_depth()
    }

    /// Joint probability `P(x, y)`.
    pub fn prob(&self, x: Codeword, y: Codeword) -> f64 {
        let n = self.num_codewords();
        debug_assert!(x < n && y < n);
        match self {
            TransitionModel::UniformIid { .. } => 1.0 / (n as f64 * n as f64),
            TransitionModel::Empirical { joint, .. } => joint[x as usize * n as usize + y as usize],
        }
    }

    /// Marginal probability of `x` as the first element of a pair.
    pub fn marginal(&self, x: Codeword) -> f64 {
        let n = self.num_codewords();
        match self {
            TransitionModel::UniformIid { .. } => 1.0 / n as f64,
            TransitionModel::Empirical { joint, .. } => {
                let n = n as usize;
                joint[x as usize * n..(x as usize + 1) * n].iter().sum()
            }
        }
    }

    /// Draws a codeword sequence: the first sample from the marginal, then a
    /// first-order walk over the conditional rows.
    pub fn sample_sequence<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<Codeword> {
        let n = self.num_codewords();
        match self {
            TransitionModel::UniformIid { .. } => (0..len).map(|_| rng.gen_range(0..n)).collect(),
            TransitionModel::Empirical { joint, .. } => {
                let nc = n as usize;
                let mut out = Vec::with_capacity(len);
                if len == 0 {
                    return out;
                }
                let marginals: Vec<f64> = (0..n).map(|x| self.marginal(x)).collect();
                let mut x = sample_discrete(&marginals, rng) as Codeword;
                out.push(x);
                while out.len() < len {
                    let row = &joint[x as usize * nc..(x as usize + 1) * nc];
                    let total: f64 = row.iter().sum();
                    let y = if total <= 0.0 {
                        // dead row: restart from the marginal
                        sample_discrete(&marginals, rng) as Codeword
                    } else {
                        sample_discrete(row, rng) as Codeword
                    };
                    out.push(y);
                    x = y;
                }
                out
            }
        }
    }

    /// Draws one `(x, y)` pair from the joint distribution.
    pub fn sample_pair<R: Rng>(&self, rng: &mut R) -> (Codeword, Codeword) {
        let n = self.num_codewords();
        match self {
            TransitionModel::UniformIid { .. } => (rng.gen_range(0..n), rng.gen_range(0..n)),
            TransitionModel::Empirical { joint, .. } => {
                let k = sample_discrete(joint, rng);
                ((k / n as usize) as Codeword, (k % n as usize) as Codeword)
            }
        }
    }
}

/// Inverse-CDF draw from an unnormalized weight vector.
fn sample_discrete<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

// ---------------------------------------------------------------------------
// Representation distribution
// ---------------------------------------------------------------------------

/// Per-codeword probability distribution over that codeword's
/// representations.
#[derive(Debug, Clone)]
pub struct RepDistribution {
    entries: Vec<Vec<(Representation, f64)>>,
}

impl RepDistribution {
    /// Validates support (every representation decodes to its codeword) and
    /// normalization (each codeword's probabilities sum to 1).
    pub fn new(basis: &Basis, entries: Vec<Vec<(Representation, f64)>>) -> Result<Self> {
        if entries.len() != basis.num_codewords() as usize {
            return Err(Error::InvalidModel(format!(
                "distribution covers {} codewords, expected {}",
                entries.len(),
                basis.num_codewords()
            )));
        }
        for (code, reps) in entries.iter().enumerate() {
            if reps.is_empty() {
                return Err(Error::IncompleteTable(code as u32));
            }
            let mut total = 0.0;
            for (rep, p) in reps {
                if !p.is_finite() || *p < 0.0 {
                    return Err(Error::InvalidModel(
                        "representation probabilities must be finite and non-negative".into(),
                    ));
                }
                let value = decode(rep, basis)?;
                if value != code as u64 {
                    return Err(Error::Inconsistent {
                        decoded: value,
                        expected: code as u64,
                    });
                }
                total += p;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidModel(format!(
                    "probabilities for codeword {code} sum to {total}, expected 1"
                )));
            }
        }
        Ok(RepDistribution { entries })
    }

    /// Wraps entries whose support and normalization are known-good by
    /// construction.
    pub(crate) fn from_validated(entries: Vec<Vec<(Representation, f64)>>) -> Self {
        RepDistribution { entries }
    }

    pub fn for_code(&self, code: Codeword) -> &[(Representation, f64)] {
        &self.entries[code as usize]
    }

    pub fn num_codewords(&self) -> usize {
        self.entries.len()
    }
}
