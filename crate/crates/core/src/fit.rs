//! Maximum-likelihood fitting of hierarchical log-linear models.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::table::{cell_label, project_index, CountTable, JointDistribution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { tolerance: 1e-10, max_iterations: 10_000 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter(format!("fit tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub fitted: JointDistribution,
    pub iterations: usize,
    /// L∞ distance between fitted and target hyperedge marginals after the last sweep.
    pub max_marginal_gap: f64,
    pub converged: bool,
}

/// JSON form of a [`FitResult`].
#[derive(Clone, Debug, Serialize)]
pub struct FitResultJson<'a> {
    pub hyperedges: Vec<String>,
    pub fitted: &'a [f64],
    pub iterations: usize,
    pub max_marginal_gap: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn to_json<'a>(&'a self, h: &Hypergraph) -> FitResultJson<'a> {
        FitResultJson {
            hyperedges: h.edge_labels(),
            fitted: self.fitted.probs(),
            iterations: self.iterations,
            max_marginal_gap: self.max_marginal_gap,
            converged: self.converged,
        }
    }
}

/// Cell-to-marginal-cell maps for one hypergraph, reusable across targets.
#[derive(Clone, Debug)]
pub struct IpfPlan {
    k: usize,
    margins: Vec<Margin>,
}

#[derive(Clone, Debug)]
struct Margin {
    size: usize,
    proj: Vec<u32>,
}

impl IpfPlan {
    pub fn new(h: &Hypergraph) -> Self {
        let k = h.k();
        let margins = h
            .edges()
            .iter()
            .map(|&e| Margin {
                size: 1 << e.len(),
                proj: (0..1usize << k).map(|i| project_index(i, e, k) as u32).collect(),
            })
            .collect();
        IpfPlan { k, margins }
    }

    fn marginal(&self, m: &Margin, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (&j, &v) in m.proj.iter().zip(p) {
            out[j as usize] += v;
        }
    }

    /// Runs IPF from the uniform distribution, one sweep over the hyperedges
    /// per iteration, until every hyperedge marginal is within tolerance.
    pub fn fit(&self, target: &JointDistribution, cfg: &FitConfig) -> Result<FitResult> {
        cfg.validate()?;
        if target.k() != self.k {
            return Err(Error::Parameter(format!(
                "target has {} variables, hypergraph has {}",
                target.k(),
                self.k
            )));
        }
        let n = 1usize << self.k;
        let targets: Vec<Vec<f64>> = self
            .margins
            .iter()
            .map(|m| {
                let mut t = vec![0.0; m.size];
                self.marginal(m, target.probs(), &mut t);
                t
            })
            .collect();
        let mut q = vec![1.0 / n as f64; n];
        let mut buf = vec![0.0; self.margins.iter().map(|m| m.size).max().unwrap_or(1)];
        let mut gap = f64::INFINITY;
        for iteration in 1..=cfg.max_iterations {
            for (m, t) in self.margins.iter().zip(&targets) {
                let qm = &mut buf[..m.size];
                self.marginal(m, &q, qm);
                let ratio: Vec<f64> = t.iter().zip(qm.iter()).map(|(a, b)| a / b).collect();
                for (x, &j) in q.iter_mut().zip(&m.proj) {
                    *x *= ratio[j as usize];
                }
            }
            gap = 0.0;
            for (m, t) in self.margins.iter().zip(&targets) {
                let qm = &mut buf[..m.size];
                self.marginal(m, &q, qm);
                for (a, b) in qm.iter().zip(t) {
                    gap = f64::max(gap, (a - b).abs());
                }
            }
            if gap < cfg.tolerance {
                return Ok(FitResult {
                    fitted: finish(self.k, q),
                    iterations: iteration,
                    max_marginal_gap: gap,
                    converged: true,
                });
            }
        }
        Ok(FitResult {
            fitted: finish(self.k, q),
            iterations: cfg.max_iterations,
            max_marginal_gap: gap,
            converged: false,
        })
    }
}

fn finish(k: usize, mut q: Vec<f64>) -> JointDistribution {
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= s);
    JointDistribution::from_vec_unchecked(k, q)
}

/// Maximum-likelihood fit (equivalently the KL projection of `target`) onto
/// the hierarchical model generated by `h`.
pub fn ipf_fit(target: &JointDistribution, h: &Hypergraph, cfg: &FitConfig) -> Result<FitResult> {
    IpfPlan::new(h).fit(target, cfg)
}

/// `KL(p ‖ q) = Σ p_i log(p_i / q_i)`; cells with `p_i = 0` contribute 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Parameter(format!("length mismatch {} vs {}", p.len(), q.len())));
    }
    let mut kl = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a < 0.0 || !a.is_finite() {
            return Err(Error::Parameter(format!("invalid probability {a} at position {i}")));
        }
        if a == 0.0 {
            continue;
        }
        if !(b > 0.0) {
            return Err(Error::Parameter(format!("zero reference probability at position {i}")));
        }
        kl += a * (a / b).ln();
    }
    Ok(kl.max(0.0))
}

/// Likelihood-ratio statistic `G² = 2 Σ n_i log(n_i / (N q_i))`.
pub fn deviance(counts: &CountTable, q: &JointDistribution) -> Result<f64> {
    if counts.k() != q.k() {
        return Err(Error::Parameter("table and distribution sizes differ".into()));
    }
    let n = counts.total() as f64;
    let mut g2 = 0.0;
    for (i, (&c, &qi)) in counts.counts().iter().zip(q.probs()).enumerate() {
        if c == 0 {
            continue;
        }
        if !(qi > 0.0) {
            return Err(Error::NonPositive { cell: cell_label(i, q.k()), value: qi });
        }
        let c = c as f64;
        g2 += c * (c / (n * qi)).ln();
    }
    Ok((2.0 * g2).max(0.0))
}
