//! Corner parameterization of binary log-linear models.
//!
//! Every positive distribution on a binary `K`-way table is written as
//!
//! ```text
//! log p_i = Σ_{S ⊆ ones(i)} γ_S
//! ```
//!
//! where `ones(i)` is the set of variables at level 1 in cell `i`. So `γ_∅` is
//! `log p_{0..0}`, `γ_A = log(p_{10..}/p_{00..})`, and in general `γ` is the
//! Möbius inversion of `log p` over the subset lattice.
//!
//! # Conditional odds ratios
//!
//! For a target set `S` and a level assignment `i` of the remaining
//! variables, the signed alternating sum
//!
//! ```text
//! L(S | i) = Σ_{W ⊆ S} (-1)^{|S| - |W|} log p(W at level 1, S \ W at 0, rest = i)
//! ```
//!
//! equals `Σ_{S ⊆ T ⊆ S ∪ ones(i)} γ_T`. This is [`log_cond_odds_ratio`]. The
//! conventional odds ratio [`cond_odds_ratio`] puts the baseline (all-zero)
//! cell in the numerator and equals `exp((-1)^{|S|} L(S | i))`.
//!
//! # Vanishing odds ratios and vanishing interactions
//!
//! `L(S | i) = 0` for every conditioning cell `i` if and only if `γ_T = 0`
//! for every `T ⊇ S`.
//!
//! Proof sketch: "if" is immediate from the sum above. For "only if", fix
//! `U ⊆ V \ S` and take `i` with `ones(i) = U`; then
//! `Σ_{W ⊆ U} γ_{S ∪ W} = 0` for every such `U`. Möbius inversion over the
//! lattice of `U` gives `γ_{S ∪ W} = 0` for every `W`, i.e. for every
//! superset of `S`.
//!
//! The sets whose odds ratios vanish at every cell therefore form an
//! ascending class, and its complement is the downward closure of the
//! nonzero `γ`s. The hypergraph a distribution is faithful to is thus read
//! off the maximal nonzero `γ_S`, which is what [`faithful_hypergraph`] does.
//! When `S` is maximal among nonzero terms, `L(S | i) = γ_S` at every `i`.

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::table::{all_subsets, check_k, marginalize, JointDistribution, VarSet};

/// Largest `k` for which the dense design matrix is materialized.
pub const MAX_DESIGN_VARS: usize = 12;

/// Default tolerance for deciding that an exact interaction vanishes.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The `2^K × 2^K` zero/one matrix `D` with `log p = D γ`.
///
/// Rows are cells in lexicographic order, columns are subsets in canonical
/// order. Entry `(i, S)` is 1 iff every variable of `S` is at level 1 in `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignMatrix {
    k: usize,
    columns: Vec<VarSet>,
    entries: Vec<u8>,
}

impl DesignMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[VarSet] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.dim() + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        let n = self.dim();
        &self.entries[row * n..(row + 1) * n]
    }

    /// `D x` for `x` given in column order.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .filter(|(&d, _)| d == 1)
                    .map(|(_, v)| v)
                    .sum()
            })
            .collect()
    }
}

pub fn design_matrix(k: usize) -> Result<DesignMatrix> {
    if k == 0 || k > MAX_DESIGN_VARS {
        return Err(Error::VariableCount { k, max: MAX_DESIGN_VARS });
    }
    let columns = all_subsets(k);
    let n = 1usize << k;
    let masks: Vec<usize> = columns.iter().map(|s| s.cell_mask(k)).collect();
    let mut entries = vec![0u8; n * n];
    for row in 0..n {
        for (col, &m) in masks.iter().enumerate() {
            entries[row * n + col] = u8::from(row & m == m);
        }
    }
    Ok(DesignMatrix { k, columns, entries })
}

/// All `2^K` interaction parameters `γ_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionVector {
    k: usize,
    // indexed by the subset's cell mask
    gamma: Vec<f64>,
}

impl InteractionVector {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, s: VarSet) -> f64 {
        self.gamma[s.cell_mask(self.k)]
    }

    /// `(S, γ_S)` in canonical subset order.
    pub fn iter(&self) -> impl Iterator<Item = (VarSet, f64)> + '_ {
        all_subsets(self.k).into_iter().map(move |s| (s, self.get(s)))
    }

    /// Values in the column order of [`design_matrix`].
    pub fn to_column_order(&self) -> Vec<f64> {
        self.iter().map(|(_, g)| g).collect()
    }

    /// `log p = D γ`, via the subset-sum (zeta) transform.
    pub fn log_probs(&self) -> Vec<f64> {
        let mut x = self.gamma.clone();
        subset_sums(&mut x);
        x
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs().into_iter().map(f64::exp).collect()
    }
}

fn subset_sums(x: &mut [f64]) {
    let n = x.len();
    let mut bit = 1;
    while bit < n {
        for i in 0..n {
            if i & bit != 0 {
                x[i] += x[i ^ bit];
            }
        }
        bit <<= 1;
    }
}

fn inverse_subset_sums(x: &mut [f64]) {
    let n = x.len();
    let mut bit = 1;
    while bit < n {
        for i in 0..n {
            if i & bit != 0 {
                x[i] -= x[i ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// `γ = D⁻¹ log p` by Möbius inversion over the subset lattice, `O(K 2^K)`.
pub fn interaction_vector(p: &JointDistribution) -> InteractionVector {
    let mut gamma = p.log_probs();
    inverse_subset_sums(&mut gamma);
    InteractionVector { k: p.k(), gamma }
}

/// A target set and a level assignment to the remaining variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CondOddsRatioSpec {
    target: VarSet,
    // levels of the complement's variables, ascending
    conditioning: Vec<u8>,
}

impl CondOddsRatioSpec {
    pub fn new(k: usize, target: VarSet, conditioning: Vec<u8>) -> Result<Self> {
        check_k(k)?;
        if target.is_empty() {
            return Err(Error::Conditioning("target set is empty".into()));
        }
        if !target.is_subset(VarSet::full(k)) {
            return Err(Error::Conditioning(format!("target {target} outside 0..{k}")));
        }
        let expected = k - target.len();
        if conditioning.len() != expected {
            return Err(Error::Conditioning(format!(
                "expected {expected} conditioning levels, got {}",
                conditioning.len()
            )));
        }
        if conditioning.iter().any(|&l| l > 1) {
            return Err(Error::Conditioning("levels must be 0 or 1".into()));
        }
        Ok(CondOddsRatioSpec { target, conditioning })
    }

    /// Conditioning on every other variable at level 0.
    pub fn at_zero(k: usize, target: VarSet) -> Result<Self> {
        Self::new(k, target, vec![0; k.saturating_sub(target.len())])
    }

    /// The `index`-th conditioning cell (lexicographic over the complement).
    pub fn at_cell(k: usize, target: VarSet, index: usize) -> Result<Self> {
        let m = k - target.len();
        if index >= 1 << m {
            return Err(Error::Conditioning(format!("conditioning cell {index} out of range")));
        }
        let levels = (0..m).map(|j| ((index >> (m - 1 - j)) & 1) as u8).collect();
        Self::new(k, target, levels)
    }

    pub fn target(&self) -> VarSet {
        self.target
    }

    pub fn conditioning(&self) -> &[u8] {
        &self.conditioning
    }

    /// Cell index with the target at level 0 and the rest at the conditioning levels.
    pub fn base_cell(&self, k: usize) -> usize {
        self.target
            .complement(k)
            .iter()
            .zip(&self.conditioning)
            .filter(|(_, &l)| l == 1)
            .fold(0, |acc, (v, _)| acc | crate::table::var_bit(v, k))
    }
}

/// Cells of the target's sub-cube with their signs (all-ones cell positive).
pub(crate) fn signed_subcube(k: usize, spec: &CondOddsRatioSpec) -> Vec<(usize, i8)> {
    let base = spec.base_cell(k);
    let t = spec.target;
    let t_mask = t.cell_mask(k);
    let size = t.len();
    // iterate sub-masks of t_mask
    let mut out = Vec::with_capacity(1 << size);
    let mut sub = t_mask;
    loop {
        let ones = sub.count_ones() as usize;
        let sign = if (size - ones) % 2 == 0 { 1 } else { -1 };
        out.push((base | sub, sign));
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & t_mask;
    }
    out
}

/// Signed log conditional odds ratio; equals `γ_S` whenever `S` is a maximal
/// nonvanishing interaction.
pub fn log_cond_odds_ratio(p: &JointDistribution, spec: &CondOddsRatioSpec) -> f64 {
    let probs = p.probs();
    signed_subcube(p.k(), spec)
        .into_iter()
        .map(|(i, s)| s as f64 * probs[i].ln())
        .sum()
}

/// Conditional odds ratio with the all-zero cell of the sub-cube in the
/// numerator, e.g. `p00·p11 / (p01·p10)` for two variables.
pub fn cond_odds_ratio(p: &JointDistribution, spec: &CondOddsRatioSpec) -> f64 {
    let l = log_cond_odds_ratio(p, spec);
    if spec.target.len() % 2 == 0 {
        l.exp()
    } else {
        (-l).exp()
    }
}

/// [`log_cond_odds_ratio`] at every conditioning cell, in lexicographic order.
pub fn log_cond_odds_ratios(p: &JointDistribution, target: VarSet) -> Result<Vec<f64>> {
    let k = p.k();
    (0..1usize << (k - target.len()))
        .map(|c| CondOddsRatioSpec::at_cell(k, target, c).map(|s| log_cond_odds_ratio(p, &s)))
        .collect()
}

/// Average of the per-cell values of [`log_cond_odds_ratios`].
///
/// On the model the values agree for a maximal interaction; off the model
/// they do not, and the mean is reported without claiming it is `γ_S`.
pub fn mean_log_cond_odds_ratio(p: &JointDistribution, target: VarSet) -> Result<f64> {
    let v = log_cond_odds_ratios(p, target)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Hypergraph of the maximal subsets `S` with `|γ_S| > tol`.
pub fn faithful_hypergraph(p: &JointDistribution, tol: f64) -> Result<Hypergraph> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let gamma = interaction_vector(p);
    let nonzero: Vec<VarSet> = gamma
        .iter()
        .filter(|(s, g)| !s.is_empty() && g.abs() > tol)
        .map(|(s, _)| s)
        .collect();
    let maximal: Vec<VarSet> = nonzero
        .iter()
        .copied()
        .filter(|&s| !nonzero.iter().any(|&t| s.is_proper_subset(t)))
        .collect();
    Hypergraph::new(p.k(), maximal)
}

/// `a ⊥ b | c`: every log odds ratio of the `a × b` table is zero (within
/// `tol`) inside each cell of `c`.
pub fn conditional_independence_check(
    p: &JointDistribution,
    a: VarSet,
    b: VarSet,
    c: VarSet,
    tol: f64,
) -> Result<bool> {
    let k = p.k();
    let full = VarSet::full(k);
    if !(a.is_subset(full) && b.is_subset(full) && c.is_subset(full)) {
        return Err(Error::Parameter("variable set outside the table".into()));
    }
    if !(a.is_disjoint(b) && a.is_disjoint(c) && b.is_disjoint(c)) {
        return Err(Error::Overlap);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(true);
    }
    let abc = a.union(b).union(c);
    let m = marginalize(p.probs(), k, abc);
    let km = abc.len();
    // positions of each variable inside the marginal table
    let pos = |v: usize| abc.iter().position(|x| x == v).unwrap();
    let bits = |s: VarSet| -> Vec<usize> { s.iter().map(|v| 1usize << (km - 1 - pos(v))).collect() };
    let (a_bits, b_bits, c_bits) = (bits(a), bits(b), bits(c));
    let spread = |levels: usize, bits: &[usize]| -> usize {
        bits.iter()
            .enumerate()
            .filter(|(j, _)| levels & (1 << (bits.len() - 1 - j)) != 0)
            .fold(0, |acc, (_, &b)| acc | b)
    };
    for ci in 0..1usize << c.len() {
        let base = spread(ci, &c_bits);
        let lp = |ai: usize, bi: usize| m[base | spread(ai, &a_bits) | spread(bi, &b_bits)].ln();
        for ai in 1..1usize << a.len() {
            for bi in 1..1usize << b.len() {
                let lor = lp(ai, bi) + lp(0, 0) - lp(ai, 0) - lp(0, bi);
                if lor.abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::default_labels;
    use proptest::prelude::*;

    fn abc_abd_table() -> JointDistribution {
        JointDistribution::new(
            4,
            vec![
                0.022, 0.062, 0.063, 0.103, 0.103, 0.063, 0.062, 0.022, 0.103, 0.063, 0.062, 0.022,
                0.022, 0.062, 0.063, 0.103,
            ],
        )
        .unwrap()
    }

    fn four_cycle_table() -> JointDistribution {
        JointDistribution::new(
            4,
            vec![
                0.006, 0.006, 0.0288, 0.0192, 0.06, 0.06, 0.072, 0.048, 0.0056, 0.0504, 0.187148,
                0.0368516, 0.021, 0.189, 0.175452, 0.0345484,
            ],
        )
        .unwrap()
    }

    fn parity_table(delta: f64) -> JointDistribution {
        let (lo, hi) = (0.125 - delta, 0.125 + delta);
        JointDistribution::new(3, vec![lo, hi, hi, lo, hi, lo, lo, hi]).unwrap()
    }

    fn set(vars: &[usize], k: usize) -> VarSet {
        VarSet::new(vars, k).unwrap()
    }

    /// Dense Gaussian elimination, independent of the Möbius route.
    fn solve_dense(d: &DesignMatrix, rhs: &[f64]) -> Vec<f64> {
        let n = d.dim();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                let mut row: Vec<f64> = d.row(r).iter().map(|&x| x as f64).collect();
                row.push(rhs[r]);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    if f != 0.0 {
                        for c in col..=n {
                            a[r][c] -= f * a[col][c];
                        }
                    }
                }
            }
        }
        (0..n).map(|r| a[r][n] / a[r][r]).collect()
    }

    fn det(d: &DesignMatrix) -> f64 {
        let n = d.dim();
        let mut a: Vec<Vec<f64>> = (0..n).map(|r| d.row(r).iter().map(|&x| x as f64).collect()).collect();
        let mut det = 1.0;
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            if piv != col {
                a.swap(col, piv);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
        det
    }

    #[test]
    fn design_matrix_k3_matches_published_matrix() {
        let expected: [[u8; 8]; 8] = [
            [1, 0, 0, 0, 0, 0, 0, 0],
            [1, 0, 0, 1, 0, 0, 0, 0],
            [1, 0, 1, 0, 0, 0, 0, 0],
            [1, 0, 1, 1, 0, 0, 1, 0],
            [1, 1, 0, 0, 0, 0, 0, 0],
            [1, 1, 0, 1, 0, 1, 0, 0],
            [1, 1, 1, 0, 1, 0, 0, 0],
            [1, 1, 1, 1, 1, 1, 1, 1],
        ];
        let d = design_matrix(3).unwrap();
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(d.row(r), row);
        }
        let d1 = design_matrix(1).unwrap();
        assert_eq!(d1.row(0), &[1, 0]);
        assert_eq!(d1.row(1), &[1, 1]);
        assert!(design_matrix(0).is_err());
        assert!(design_matrix(MAX_DESIGN_VARS + 1).is_err());
    }

    #[test]
    fn design_matrix_unimodular_and_triangular_in_mask_order() {
        for k in 1..=5 {
            let d = design_matrix(k).unwrap();
            assert!((det(&d).abs() - 1.0).abs() < 1e-9, "k = {k}");
            // columns permuted to cell-mask order give a unit lower-triangular matrix
            let n = d.dim();
            for r in 0..n {
                for (c, s) in d.columns().iter().enumerate() {
                    let m = s.cell_mask(k);
                    if m > r {
                        assert_eq!(d.get(r, c), 0);
                    }
                    if m == r {
                        assert_eq!(d.get(r, c), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_has_only_the_constant() {
        let g = interaction_vector(&JointDistribution::uniform(2).unwrap());
        for (s, v) in g.iter() {
            if s.is_empty() {
                assert!((v - 0.25f64.ln()).abs() < 1e-15);
            } else {
                assert!(v.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn parity_three_way_term() {
        let g = interaction_vector(&parity_table(1.0 / 24.0));
        let abc = g.get(set(&[0, 1, 2], 3));
        assert!((abc - 4.0 * 2f64.ln()).abs() < 1e-12);
        // closed forms for the lower-order terms: γ_A = log(p100/p000) etc.
        assert!((g.get(set(&[0], 3)) - 2f64.ln()).abs() < 1e-12);
        assert!((g.get(set(&[0, 1], 3)) + 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn abc_abd_gamma_structure() {
        let g = interaction_vector(&abc_abd_table());
        for vars in [&[0, 2, 3][..], &[1, 2, 3], &[0, 1, 2, 3]] {
            assert!(g.get(set(vars, 4)).abs() < 1e-10, "{vars:?}");
        }
        // the printed probabilities give COR(CD | A, B) = 0.5801..., not 1
        let cd = g.get(set(&[2, 3], 4));
        assert!((cd - 0.5801331285202252f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn abc_abd_conditional_odds_ratios() {
        let p = abc_abd_table();
        let abc = set(&[0, 1, 2], 4);
        let abd = set(&[0, 1, 3], 4);
        for d in 0..2u8 {
            let s = CondOddsRatioSpec::new(4, abc, vec![d]).unwrap();
            assert!((cond_odds_ratio(&p, &s) - 0.04418483).abs() < 1e-6);
            assert!((log_cond_odds_ratio(&p, &s) + 0.04418483f64.ln()).abs() < 1e-6);
            let s = CondOddsRatioSpec::new(4, abd, vec![d]).unwrap();
            assert!((cond_odds_ratio(&p, &s) - 0.04710518).abs() < 1e-6);
        }
        let cd = log_cond_odds_ratios(&p, set(&[2, 3], 4)).unwrap();
        assert_eq!(cd.len(), 4);
        for v in &cd {
            assert!((v - cd[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn odds_ratio_spec_validation() {
        assert!(CondOddsRatioSpec::new(3, VarSet::EMPTY, vec![0, 0, 0]).is_err());
        assert!(CondOddsRatioSpec::new(3, set(&[0], 3), vec![0]).is_err());
        assert!(CondOddsRatioSpec::new(3, set(&[0], 3), vec![0, 2]).is_err());
        let s = CondOddsRatioSpec::at_cell(4, set(&[1, 2], 4), 2).unwrap();
        assert_eq!(s.conditioning(), &[1, 0]);
        assert_eq!(s.base_cell(4), 0b1000);
    }

    #[test]
    fn faithful_hypergraph_examples() {
        let labels = |h: &Hypergraph| h.edge_labels();
        let u = JointDistribution::uniform(3).unwrap();
        assert!(faithful_hypergraph(&u, DEFAULT_TOL).unwrap().edges().is_empty());
        assert_eq!(labels(&faithful_hypergraph(&parity_table(0.05), DEFAULT_TOL).unwrap()), ["ABC"]);
        assert_eq!(
            labels(&faithful_hypergraph(&abc_abd_table(), DEFAULT_TOL).unwrap()),
            ["CD", "ABC", "ABD"]
        );
        assert!(faithful_hypergraph(&u, 0.0).is_err());
    }

    #[test]
    fn independence_relations() {
        let p = abc_abd_table();
        let (a, b, c, d) = (VarSet::singleton(0), VarSet::singleton(1), VarSet::singleton(2), VarSet::singleton(3));
        assert!(conditional_independence_check(&p, a, b, VarSet::EMPTY, 1e-12).unwrap());
        assert!(conditional_independence_check(&p, a, c, VarSet::EMPTY, 1e-12).unwrap());
        assert!(!conditional_independence_check(&p, a, b, c.union(d), 1e-6).unwrap());

        // six printed digits leave about 4e-6 of slack
        let q = four_cycle_table();
        let tol = 1e-5;
        assert!(conditional_independence_check(&q, a, c, b, tol).unwrap());
        assert!(conditional_independence_check(&q, b, d, a.union(c), tol).unwrap());
        assert!(conditional_independence_check(&q, a, d, VarSet::EMPTY, tol).unwrap());
        assert!(!conditional_independence_check(&q, a, b, VarSet::EMPTY, tol).unwrap());

        let u = JointDistribution::uniform(3).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    let z = VarSet::full(3).difference(VarSet::singleton(x)).difference(VarSet::singleton(y));
                    assert!(conditional_independence_check(&u, VarSet::singleton(x), VarSet::singleton(y), z, 1e-12).unwrap());
                    assert!(conditional_independence_check(&u, VarSet::singleton(x), VarSet::singleton(y), VarSet::EMPTY, 1e-12).unwrap());
                }
            }
        }
        assert_eq!(conditional_independence_check(&u, a, a, VarSet::EMPTY, 1e-9), Err(Error::Overlap));
    }

    #[test]
    fn multi_variable_independence() {
        // p(a, b, c) = p(a) p(bc) makes A ⊥ BC
        let pa = [0.3, 0.7];
        let pbc = [0.1, 0.2, 0.3, 0.4];
        let w: Vec<f64> = (0..8).map(|i| pa[i >> 2] * pbc[i & 3]).collect();
        let p = JointDistribution::from_weights(3, &w).unwrap();
        let bc = set(&[1, 2], 3);
        assert!(conditional_independence_check(&p, VarSet::singleton(0), bc, VarSet::EMPTY, 1e-12).unwrap());
        assert!(!conditional_independence_check(&p, VarSet::singleton(1), VarSet::singleton(2), VarSet::EMPTY, 1e-6).unwrap());
    }

    /// Ascending class computed directly from odds ratios at every conditioning cell.
    fn vanishing_by_odds_ratios(p: &JointDistribution, tol: f64) -> Vec<VarSet> {
        all_subsets(p.k())
            .into_iter()
            .filter(|s| !s.is_empty())
            .filter(|&s| log_cond_odds_ratios(p, s).unwrap().iter().all(|v| v.abs() <= tol))
            .collect()
    }

    fn positive_dist(k: usize) -> impl Strategy<Value = JointDistribution> {
        prop::collection::vec(0.01f64..1.0, 1 << k)
            .prop_map(move |w| JointDistribution::from_weights(k, &w).unwrap())
    }

    /// Random member of the model generated by a random antichain.
    fn model_member(k: usize) -> impl Strategy<Value = (JointDistribution, Hypergraph)> {
        (
            prop::collection::vec(1u32..(1 << k), 1..4),
            prop::collection::vec(-1.5f64..1.5, 1 << k),
        )
            .prop_map(move |(masks, coefs)| {
                let sets: Vec<VarSet> = masks.into_iter().map(VarSet::from_mask).collect();
                let h = crate::hypergraph::normalize_generating_class(k, &sets).unwrap();
                let mut gamma = vec![0.0; 1 << k];
                for s in all_subsets(k) {
                    if !s.is_empty() && h.in_descending_class(s) {
                        gamma[s.cell_mask(k)] = coefs[s.cell_mask(k)];
                    }
                }
                subset_sums(&mut gamma);
                let w: Vec<f64> = gamma.iter().map(|x| x.exp()).collect();
                (JointDistribution::from_weights(k, &w).unwrap(), h)
            })
    }

    proptest! {
        #[test]
        fn round_trip_exp_d_gamma(p in (2usize..=6).prop_flat_map(positive_dist)) {
            let g = interaction_vector(&p);
            for (a, b) in g.probs().iter().zip(p.probs()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            if p.k() <= 4 {
                let d = design_matrix(p.k()).unwrap();
                let dense = solve_dense(&d, &p.log_probs());
                for (a, b) in dense.iter().zip(g.to_column_order()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
                for (a, b) in d.apply(&g.to_column_order()).iter().zip(p.log_probs()) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn maximal_terms_are_cell_invariant((p, h) in model_member(4)) {
            let g = interaction_vector(&p);
            for &e in h.edges() {
                let vals = log_cond_odds_ratios(&p, e).unwrap();
                for v in vals {
                    prop_assert!((v - g.get(e)).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn faithful_hypergraph_is_antichain_containing_p((p, _h) in model_member(4)) {
            let f = faithful_hypergraph(&p, DEFAULT_TOL).unwrap();
            let g = interaction_vector(&p);
            for (s, v) in g.iter() {
                if !f.in_descending_class(s) {
                    prop_assert!(v.abs() <= DEFAULT_TOL);
                }
            }
            // the odds-ratio route gives the same ascending class
            let asc = crate::hypergraph::ascending_class(&f);
            prop_assert_eq!(asc, vanishing_by_odds_ratios(&p, 1e-9));
        }

        #[test]
        fn raising_tol_never_adds_larger_edges(p in positive_dist(4), t1 in 0.0f64..0.5, dt in 0.0f64..0.5) {
            let low = faithful_hypergraph(&p, t1 + 1e-12).unwrap();
            let high = faithful_hypergraph(&p, t1 + dt + 1e-12).unwrap();
            for e in high.edges() {
                prop_assert!(!low.edges().iter().any(|f| f.is_proper_subset(*e)));
                prop_assert!(low.in_descending_class(*e));
            }
        }
    }

    #[test]
    fn labels_for_edges() {
        let h = faithful_hypergraph(&parity_table(0.05), DEFAULT_TOL).unwrap();
        assert_eq!(h.labels(), default_labels(3));
    }
}
