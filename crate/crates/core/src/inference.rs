//! Wald tests for maximal interactions, detection thresholds, and
//! backward selection over hierarchical models.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::fit::{FitConfig, IpfPlan};
use crate::hypergraph::{normalize_generating_class, Hypergraph};
use crate::loglin::{interaction_vector, signed_subcube, CondOddsRatioSpec};
use crate::table::{cell_label, CountTable, JointDistribution, VarSet};

/// Ascending-class interactions above this magnitude mean `p` is not in the
/// model, so per-hyperedge `γ` depend on the conditioning cell.
pub const MODEL_MEMBERSHIP_TOL: f64 = 1e-8;

/// Signed indicator of a target sub-cube at one conditioning cell.
///
/// `c' log p` is the log conditional odds ratio of the target, with the
/// all-ones cell of the sub-cube counted positively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContrastVector {
    c: Vec<i8>,
}

impl ContrastVector {
    pub fn entries(&self) -> &[i8] {
        &self.c
    }

    /// `c'c`, which is `2^{h+1}` for an order-`h` interaction.
    pub fn norm_sq(&self) -> u64 {
        self.c.iter().map(|&x| (x as i64 * x as i64) as u64).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.c.iter().copied().enumerate().filter(|(_, x)| *x != 0)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.support().map(|(i, s)| s as f64 * x[i]).sum()
    }

    /// `c' log p`.
    pub fn apply_log(&self, p: &JointDistribution) -> f64 {
        let probs = p.probs();
        self.support().map(|(i, s)| s as f64 * probs[i].ln()).sum()
    }
}

pub fn contrast_vector(k: usize, spec: &CondOddsRatioSpec) -> ContrastVector {
    let mut c = vec![0i8; 1 << k];
    for (i, s) in signed_subcube(k, spec) {
        c[i] = s;
    }
    ContrastVector { c }
}

/// Contrast for `target` with all other variables at level 0.
pub fn contrast_at_zero(k: usize, target: VarSet) -> Result<ContrastVector> {
    Ok(contrast_vector(k, &CondOddsRatioSpec::at_zero(k, target)?))
}

/// `(1/N) c' diag⁻¹(p̂) c = Σ_{c_i ≠ 0} c_i² / n_i`.
pub fn gamma_variance(counts: &CountTable, c: &ContrastVector) -> Result<f64> {
    if c.entries().len() != counts.counts().len() {
        return Err(Error::Parameter("contrast and table sizes differ".into()));
    }
    let mut var = 0.0;
    for (i, s) in c.support() {
        let n = counts.counts()[i];
        if n == 0 {
            return Err(Error::ZeroOnSupport { cell: cell_label(i, counts.k()) });
        }
        var += (s as f64).powi(2) / n as f64;
    }
    Ok(var)
}

/// `(1/N) c' diag⁻¹(q) c` for a fitted distribution `q` and sample size `n`.
pub fn gamma_variance_under(q: &JointDistribution, n: u64, c: &ContrastVector) -> f64 {
    let probs = q.probs();
    c.support()
        .map(|(i, s)| (s as f64).powi(2) / probs[i])
        .sum::<f64>()
        / n as f64
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `z_{1-α/2} = Φ⁻¹(1 - α/2)`.
pub fn z_critical(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(Normal::standard().inverse_cdf(1.0 - alpha / 2.0))
}

/// Two-sided normal p-value `2 Φ(-|z|)`.
pub fn two_sided_p_value(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperedgeTestResult {
    pub gamma_hat: f64,
    pub std_error: f64,
    /// `|γ̂| / se`.
    pub statistic: f64,
    pub z_crit: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
}

/// Wald test of `γ = 0` given an estimate and its variance.
pub fn wald_from(gamma_hat: f64, variance: f64, alpha: f64) -> Result<HyperedgeTestResult> {
    let z_crit = z_critical(alpha)?;
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::Parameter(format!("variance must be positive and finite, got {variance}")));
    }
    let std_error = variance.sqrt();
    let statistic = gamma_hat.abs() / std_error;
    Ok(HyperedgeTestResult {
        gamma_hat,
        std_error,
        statistic,
        z_crit,
        p_value: two_sided_p_value(statistic),
        reject: statistic > z_crit,
        alpha,
    })
}

/// One-hyperedge Wald test on raw counts, at the all-zero conditioning cell.
pub fn wald_test(counts: &CountTable, target: VarSet, alpha: f64) -> Result<HyperedgeTestResult> {
    check_alpha(alpha)?;
    let c = contrast_at_zero(counts.k(), target)?;
    let variance = gamma_variance(counts, &c)?;
    let n = counts.total() as f64;
    let gamma_hat: f64 = c
        .support()
        .map(|(i, s)| s as f64 * (counts.counts()[i] as f64 / n).ln())
        .sum();
    wald_from(gamma_hat, variance, alpha)
}

/// `λ*_N = z_{1-α/2} N^{-(1/2-ε)} min_t 2^{(h_t+1)/2}`.
pub fn lambda_star(n: u64, alpha: f64, epsilon: f64, orders: &[usize]) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let h_min = *orders
        .iter()
        .min()
        .ok_or_else(|| Error::Parameter("orders must be nonempty".into()))?;
    let z = z_critical(alpha)?;
    let norm = 2f64.powf((h_min as f64 + 1.0) / 2.0);
    Ok(z * (n as f64).powf(-(0.5 - epsilon)) * norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongFaithfulnessReport {
    pub lambda: f64,
    /// `(hyperedge label, γ)` at the all-zero conditioning cell.
    pub gammas: Vec<(String, f64)>,
    pub min_abs_gamma: f64,
    pub satisfied: bool,
    /// Largest ascending-class `|γ_S|`; above [`MODEL_MEMBERSHIP_TOL`] the
    /// distribution is not in the model.
    pub off_model: f64,
}

/// `min_t |γ_t(p)| > λ` for the hyperedges of `h`.
pub fn strong_faithfulness_check(p: &JointDistribution, h: &Hypergraph, lambda: f64) -> Result<StrongFaithfulnessReport> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("lambda must be non-negative, got {lambda}")));
    }
    if p.k() != h.k() {
        return Err(Error::Parameter("distribution and hypergraph sizes differ".into()));
    }
    let g = interaction_vector(p);
    let off_model = g
        .iter()
        .filter(|(s, _)| !h.in_descending_class(*s))
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    if off_model > MODEL_MEMBERSHIP_TOL {
        log::warn!("distribution is not in the model (max ascending |γ| = {off_model:e}); hyperedge γ depend on the conditioning cell");
    }
    let mut gammas = Vec::with_capacity(h.edges().len());
    for &e in h.edges() {
        let c = contrast_at_zero(p.k(), e)?;
        gammas.push((e.label(h.labels()), c.apply_log(p)));
    }
    let min_abs_gamma = gammas.iter().map(|(_, v)| v.abs()).fold(f64::INFINITY, f64::min);
    Ok(StrongFaithfulnessReport {
        lambda,
        gammas,
        min_abs_gamma,
        satisfied: min_abs_gamma > lambda,
        off_model,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub fit: FitConfig,
    /// Add 0.5 to every count before estimating.
    pub smoothing: bool,
    /// Never test or remove single-variable hyperedges.
    pub keep_main_effects: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { fit: FitConfig::default(), smoothing: false, keep_main_effects: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    /// Null rejected; the term stays.
    Keep,
    /// Least significant non-rejected term; replaced by its maximal proper subsets.
    Remove,
    /// Not rejected, but another term was removed this step.
    Defer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchStep {
    pub step: usize,
    pub model: Hypergraph,
    pub tested: VarSet,
    pub test: HyperedgeTestResult,
    pub action: Action,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStepJson {
    pub step: usize,
    pub model: Vec<Vec<String>>,
    pub tested: Vec<String>,
    pub gamma_hat: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub action: Action,
}

impl SearchStep {
    pub fn to_json(&self) -> SearchStepJson {
        let labels = self.model.labels();
        SearchStepJson {
            step: self.step,
            model: self.model.to_json().hyperedges,
            tested: self.tested.iter().map(|v| labels[v].clone()).collect(),
            gamma_hat: self.test.gamma_hat,
            std_error: self.test.std_error,
            statistic: self.test.statistic,
            p_value: self.test.p_value,
            action: self.action,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<SearchStep>,
    pub final_model: Hypergraph,
}

impl SearchTrace {
    /// The sequence of distinct models visited, saturated first.
    pub fn models(&self) -> Vec<&Hypergraph> {
        let mut out: Vec<&Hypergraph> = Vec::new();
        for s in &self.steps {
            if out.last().map_or(true, |m| **m != s.model) {
                out.push(&s.model);
            }
        }
        if out.last().map_or(true, |m| **m != self.final_model) {
            out.push(&self.final_model);
        }
        out
    }

    /// One JSON object per test, then `{"final": <hypergraph>}`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(&s.to_json()).expect("serializable"));
            out.push('\n');
        }
        let fin = serde_json::json!({ "final": self.final_model.to_json() });
        out.push_str(&fin.to_string());
        out.push('\n');
        out
    }
}

/// A search that stopped early, with everything recorded up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("backward selection aborted at step {}: {source}", .trace.steps.last().map_or(0, |s| s.step))]
pub struct SearchError {
    pub trace: SearchTrace,
    pub source: Error,
}

/// Backward selection from the saturated model.
///
/// Each step fits the current model by IPF, Wald-tests every maximal term at
/// the all-zero conditioning cell, and replaces the least significant
/// non-rejected term by its maximal proper subsets. It stops when every
/// tested term is rejected or nothing testable remains.
pub fn backward_select(
    counts: &CountTable,
    alpha: f64,
    cfg: &SearchConfig,
) -> std::result::Result<SearchTrace, SearchError> {
    let k = counts.k();
    let fail = |steps: Vec<SearchStep>, model: Hypergraph, source: Error| SearchError {
        trace: SearchTrace { steps, final_model: model },
        source,
    };
    let mut current = Hypergraph::saturated(k).map_err(|e| fail(Vec::new(), Hypergraph::empty(k).unwrap(), e))?;
    if let Err(e) = check_alpha(alpha).and_then(|_| cfg.fit.validate()) {
        return Err(fail(Vec::new(), current, e));
    }
    let p_hat = match counts.empirical(cfg.smoothing) {
        Ok(p) => p,
        Err(e) => return Err(fail(Vec::new(), current, e)),
    };
    let n = counts.total();
    let mut steps: Vec<SearchStep> = Vec::new();
    let mut step = 0;
    loop {
        let fitted = if current.is_saturated() {
            p_hat.clone()
        } else {
            match IpfPlan::new(&current).fit(&p_hat, &cfg.fit) {
                Ok(r) if r.converged => r.fitted,
                Ok(r) => {
                    let e = Error::Parameter(format!(
                        "IPF did not converge in {} iterations (gap {:e})",
                        r.iterations, r.max_marginal_gap
                    ));
                    return Err(fail(steps, current, e));
                }
                Err(e) => return Err(fail(steps, current, e)),
            }
        };
        let testable: Vec<VarSet> = current
            .edges()
            .iter()
            .copied()
            .filter(|e| !(cfg.keep_main_effects && e.len() == 1))
            .collect();
        if testable.is_empty() {
            break;
        }
        let mut results = Vec::with_capacity(testable.len());
        for &e in &testable {
            let c = contrast_at_zero(k, e).map_err(|err| fail(steps.clone(), current.clone(), err))?;
            let gamma_hat = c.apply_log(&fitted);
            let variance = gamma_variance_under(&fitted, n, &c);
            let t = wald_from(gamma_hat, variance, alpha).map_err(|err| fail(steps.clone(), current.clone(), err))?;
            results.push((e, t));
        }
        let drop = results
            .iter()
            .enumerate()
            .filter(|(_, (_, t))| !t.reject)
            .fold(None::<(usize, f64)>, |best, (i, (_, t))| match best {
                Some((_, pv)) if pv >= t.p_value => best,
                _ => Some((i, t.p_value)),
            })
            .map(|(i, _)| i);
        for (i, &(e, t)) in results.iter().enumerate() {
            let action = match drop {
                _ if t.reject => Action::Keep,
                Some(d) if d == i => Action::Remove,
                _ => Action::Defer,
            };
            steps.push(SearchStep { step, model: current.clone(), tested: e, test: t, action });
        }
        let Some(d) = drop else { break };
        let removed = results[d].0;
        let mut sets: Vec<VarSet> = current.edges().iter().copied().filter(|&e| e != removed).collect();
        sets.extend(removed.maximal_proper_subsets().into_iter().filter(|s| !s.is_empty()));
        let labels = current.labels().to_vec();
        current = if sets.is_empty() {
            Hypergraph::empty(k)
        } else {
            normalize_generating_class(k, &sets)
        }
        .and_then(|h| h.with_labels(labels))
        .map_err(|e| fail(steps.clone(), current.clone(), e))?;
        step += 1;
    }
    Ok(SearchTrace { steps, final_model: current })
}
