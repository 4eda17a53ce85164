//! Binary K-way contingency tables.
//!
//! Cells are ordered lexicographically with the last variable varying
//! fastest: for `k = 3`, cell `(0,0,1)` has index 1 and `(1,0,0)` has index 4.
//! Variable `v` (0-based) therefore occupies bit `k - 1 - v` of a cell index.
//! This ordering is part of every file format the crate reads or writes.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Largest number of variables supported by the dense representation.
pub const MAX_VARS: usize = 20;

/// Tolerance on `sum(p) == 1` for a [`JointDistribution`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_VARS {
        return Err(Error::VariableCount { k, max: MAX_VARS });
    }
    Ok(())
}

/// Bit of a cell index that holds the level of variable `var`.
#[inline]
pub fn var_bit(var: usize, k: usize) -> usize {
    1 << (k - 1 - var)
}

/// Default variable labels: `A`, `B`, `C`, ...
pub fn default_labels(k: usize) -> Vec<String> {
    (0..k)
        .map(|v| ((b'A' + v as u8) as char).to_string())
        .collect()
}

/// Levels of a cell written as a bit string, e.g. `"0101"`.
pub fn cell_label(index: usize, k: usize) -> String {
    (0..k)
        .map(|v| if index & var_bit(v, k) != 0 { '1' } else { '0' })
        .collect()
}

/// A set of variables, stored as a bitmask with bit `v` for variable `v`.
///
/// Serves both as a marginal (`M ⊆ {1..K}`, empty allowed) and as the index
/// of an interaction term. The [`Ord`] implementation is the canonical term
/// order: by cardinality, then lexicographically by sorted variable list
/// (`∅, A, B, C, AB, AC, BC, ABC`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct VarSet(u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    /// Builds a set from variable indices, rejecting duplicates and indices `>= k`.
    pub fn new(vars: &[usize], k: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &v in vars {
            if v >= k || v >= MAX_VARS {
                return Err(Error::VariableIndex { var: v, k });
            }
            if mask & (1 << v) != 0 {
                return Err(Error::DuplicateVariable { var: v });
            }
            mask |= 1 << v;
        }
        Ok(VarSet(mask))
    }

    pub fn full(k: usize) -> Self {
        VarSet(((1u64 << k) - 1) as u32)
    }

    pub fn singleton(v: usize) -> Self {
        VarSet(1 << v)
    }

    pub fn from_mask(mask: u32) -> Self {
        VarSet(mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, v: usize) -> bool {
        v < 32 && self.0 & (1 << v) != 0
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset(self, other: VarSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VarSet) -> VarSet {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: VarSet) -> VarSet {
        VarSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Complement within `{0, .., k-1}`.
    pub fn complement(self, k: usize) -> VarSet {
        VarSet(Self::full(k).0 & !self.0)
    }

    /// Variables in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |v| mask & (1 << v) != 0)
    }

    pub fn vars(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// The same set expressed as a mask over cell-index bits.
    pub fn cell_mask(self, k: usize) -> usize {
        self.iter().fold(0, |m, v| m | var_bit(v, k))
    }

    /// Inverse of [`VarSet::cell_mask`].
    pub fn from_cell_mask(mask: usize, k: usize) -> VarSet {
        VarSet((0..k).filter(|&v| mask & var_bit(v, k) != 0).fold(0, |m, v| m | (1 << v)))
    }

    /// Sets obtained by dropping exactly one variable.
    pub fn maximal_proper_subsets(self) -> Vec<VarSet> {
        self.iter().map(|v| VarSet(self.0 & !(1 << v))).collect()
    }

    /// Concatenated labels, e.g. `"ABD"`; labels are joined with `:` when
    /// any of them is longer than one character.
    pub fn label(self, labels: &[String]) -> String {
        let sep = if labels.iter().all(|l| l.chars().count() == 1) { "" } else { ":" };
        self.iter()
            .map(|v| labels[v].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

impl Ord for VarSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for VarSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let labels = default_labels(MAX_VARS);
        write!(f, "{}", self.label(&labels))
    }
}

/// Every subset of `{0, .., k-1}` in canonical order.
pub fn all_subsets(k: usize) -> Vec<VarSet> {
    let mut subsets: Vec<VarSet> = (0..(1u32 << k)).map(VarSet::from_mask).collect();
    subsets.sort();
    subsets
}

/// One cell of the table: a level in `{0, 1}` for each variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellIndex {
    bits: Vec<u8>,
}

impl CellIndex {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        check_k(bits.len())?;
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Parse { line: 0, msg: format!("level {b} is not binary") });
        }
        Ok(CellIndex { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn k(&self) -> usize {
        self.bits.len()
    }
}

pub fn cell_of_index(index: usize, k: usize) -> Result<CellIndex> {
    check_k(k)?;
    if index >= 1 << k {
        return Err(Error::CellIndex { index, k });
    }
    let bits = (0..k).map(|v| u8::from(index & var_bit(v, k) != 0)).collect();
    Ok(CellIndex { bits })
}

pub fn index_of_cell(cell: &CellIndex) -> usize {
    cell.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Projects cell `index` onto the variables of `m` (last variable of `m` fastest).
#[inline]
pub fn project_index(index: usize, m: VarSet, k: usize) -> usize {
    m.iter()
        .fold(0, |acc, v| (acc << 1) | usize::from(index & var_bit(v, k) != 0))
}

/// Sums a dense table over the variables outside `m`.
pub fn marginalize<T>(values: &[T], k: usize, m: VarSet) -> Vec<T>
where
    T: Copy + Default + std::ops::AddAssign,
{
    let mut out = vec![T::default(); 1 << m.len()];
    for (i, &v) in values.iter().enumerate() {
        out[project_index(i, m, k)] += v;
    }
    out
}

/// A strictly positive probability vector over the `2^k` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    k: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    pub fn new(k: usize, p: Vec<f64>) -> Result<Self> {
        check_k(k)?;
        if p.len() != 1 << k {
            return Err(Error::CellCount { k, expected: 1 << k, got: p.len() });
        }
        if let Some((i, &v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositive { cell: cell_label(i, k), value: v });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(JointDistribution { k, p })
    }

    /// Normalizes strictly positive weights into a distribution.
    pub fn from_weights(k: usize, weights: &[f64]) -> Result<Self> {
        check_k(k)?;
        if weights.len() != 1 << k {
            return Err(Error::CellCount { k, expected: 1 << k, got: weights.len() });
        }
        if let Some((i, &v)) = weights.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositive { cell: cell_label(i, k), value: v });
        }
        let total: f64 = weights.iter().sum();
        Ok(JointDistribution { k, p: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        check_k(k)?;
        let n = 1usize << k;
        Ok(JointDistribution { k, p: vec![1.0 / n as f64; n] })
    }

    /// Skips validation; callers guarantee positivity and normalization.
    pub(crate) fn from_vec_unchecked(k: usize, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), 1 << k);
        JointDistribution { k, p }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.p
    }

    pub fn n_cells(&self) -> usize {
        self.p.len()
    }

    pub fn log_probs(&self) -> Vec<f64> {
        self.p.iter().map(|x| x.ln()).collect()
    }

    pub fn min_prob(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Marginal probabilities over `m`, in the lexicographic order of `m`'s cells.
    pub fn marginal(&self, m: VarSet) -> Vec<f64> {
        marginalize(&self.p, self.k, m)
    }
}

/// Multinomial counts over the `2^k` cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    k: usize,
    counts: Vec<u64>,
    total: u64,
}

impl CountTable {
    pub fn new(k: usize, counts: Vec<u64>) -> Result<Self> {
        check_k(k)?;
        if counts.len() != 1 << k {
            return Err(Error::CellCount { k, expected: 1 << k, got: counts.len() });
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::ZeroTotal);
        }
        Ok(CountTable { k, counts, total })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical distribution `n_i / N`.
    ///
    /// With `smoothing`, 0.5 is added to every cell first. Without it a zero
    /// cell is an error.
    pub fn empirical(&self, smoothing: bool) -> Result<JointDistribution> {
        if smoothing {
            let w: Vec<f64> = self.counts.iter().map(|&n| n as f64 + 0.5).collect();
            return JointDistribution::from_weights(self.k, &w);
        }
        if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            return Err(Error::ZeroCell { cell: cell_label(i, self.k) });
        }
        let n = self.total as f64;
        let p = self.counts.iter().map(|&c| c as f64 / n).collect();
        Ok(JointDistribution::from_vec_unchecked(self.k, p))
    }

    pub fn marginal_counts(&self, m: VarSet) -> Vec<u64> {
        marginalize(&self.counts, self.k, m)
    }
}

/// Validates counts and returns them with their empirical distribution.
pub fn from_counts(counts: &[u64], k: usize, smoothing: bool) -> Result<(CountTable, JointDistribution)> {
    let table = CountTable::new(k, counts.to_vec())?;
    let p = table.empirical(smoothing)?;
    Ok((table, p))
}

/// Draws a multinomial sample of size `n` from `p` by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(p: &JointDistribution, n: u64, rng: &mut R) -> Result<CountTable> {
    if n == 0 {
        return Err(Error::ZeroTotal);
    }
    let mut counts = Vec::with_capacity(p.n_cells());
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    let last = p.n_cells() - 1;
    for (i, &pi) in p.probs().iter().enumerate() {
        if i == last || remaining_n == 0 {
            counts.push(if i == last { remaining_n } else { 0 });
            continue;
        }
        let q = (pi / remaining_p).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining_n, q)
            .map_err(|e| Error::Parameter(e.to_string()))?
            .sample(rng);
        counts.push(draw);
        remaining_n -= draw;
        remaining_p -= pi;
    }
    CountTable::new(p.k(), counts)
}
