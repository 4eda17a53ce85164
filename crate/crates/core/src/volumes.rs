//! Proportions of distributions that are not λ-strong-faithful.
//!
//! Closed forms where they exist, and seeded Monte Carlo otherwise. The
//! sample stream is cut into fixed-size chunks; chunk `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, and hit counts are summed
//! as integers, so estimates do not depend on the thread count.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{FitConfig, IpfPlan};
use crate::hypergraph::{is_decomposable, Hypergraph};
use crate::inference::{contrast_at_zero, ContrastVector};
use crate::table::{check_k, var_bit, JointDistribution, VarSet};

/// Samples per chunk.
pub const CHUNK_SIZE: u64 = 1 << 14;

/// Largest interaction order accepted by the ν_h sampler.
pub const MAX_ORDER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    MonteCarlo,
    ProductFormula,
    LowerBound,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::MonteCarlo => "monte_carlo",
            Method::ProductFormula => "product_formula",
            Method::LowerBound => "lower_bound",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub method: Method,
}

impl VolumeEstimate {
    pub fn closed_form(value: f64) -> Self {
        VolumeEstimate { value, std_error: 0.0, n_samples: 0, seed: 0, method: Method::ClosedForm }
    }

    /// Proportion `hits / n` with binomial standard error `sqrt(v(1-v)/n)`.
    pub fn from_hits(hits: u64, n: u64, seed: u64) -> Self {
        let value = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let std_error = if n == 0 { 0.0 } else { (value * (1.0 - value) / n as f64).sqrt() };
        VolumeEstimate { value, std_error, n_samples: n, seed, method: Method::MonteCarlo }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_samples: 1_000_000, seed: 0, threads: None }
    }
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McConfig { n_samples, seed, threads: None }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Parameter("n_samples must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Parameter("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn with_seed(&self, seed: u64) -> Self {
        McConfig { seed, ..*self }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(())
}

/// Sums `(hits, failures)` over chunks. `f` gets a chunk RNG and a sample count.
fn run_chunks<F>(cfg: &McConfig, f: F) -> Result<(u64, u64)>
where
    F: Fn(&mut ChaCha8Rng, u64) -> (u64, u64) + Sync,
{
    cfg.validate()?;
    let n = cfg.n_samples;
    let chunks = n.div_ceil(CHUNK_SIZE);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i);
                let m = CHUNK_SIZE.min(n - i * CHUNK_SIZE);
                f(&mut rng, m)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    match cfg.threads {
        None => Ok(work()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Parameter(e.to_string()))?;
            Ok(pool.install(work))
        }
    }
}

fn mc_proportion<F>(cfg: &McConfig, f: F) -> Result<VolumeEstimate>
where
    F: Fn(&mut ChaCha8Rng, u64) -> u64 + Sync,
{
    let (hits, _) = run_chunks(cfg, |rng, m| (f(rng, m), 0))?;
    Ok(VolumeEstimate::from_hits(hits, cfg.n_samples, cfg.seed))
}

/// Uniform point on the probability simplex with `dim` coordinates.
pub fn sample_simplex<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    fill_simplex(&mut out, dim, rng);
    out
}

fn fill_simplex<R: Rng + ?Sized>(out: &mut Vec<f64>, dim: usize, rng: &mut R) {
    out.clear();
    if dim == 1 {
        out.push(1.0);
        return;
    }
    let mut total = 0.0;
    for _ in 0..dim {
        let u = unif(rng);
        let e = -u.ln();
        total += e;
        out.push(e);
    }
    for x in out.iter_mut() {
        *x /= total;
    }
}

/// Uniform point in the open cube `(0,1)^dim`.
pub fn sample_unit_cube<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| unif(rng)).collect()
}

fn unif<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// `ν₁(λ) = (e^{2λ} - 2λe^λ - 1) / (1 - e^λ)²`, the proportion of
/// `(θ₁, θ₂) ∈ (0,1)²` with `|logit θ₁ - logit θ₂| < λ`.
pub fn nu1_closed(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let x = lambda;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x < 1.0 {
        // (sinh x - x) / (cosh x - 1) as two positive series
        let x2 = x * x;
        let (mut num, mut den) = (0.0, 0.0);
        let mut term = x2 / 2.0;
        let mut n = 2.0;
        loop {
            den += term;
            term *= x / (n + 1.0);
            num += term;
            term *= x / (n + 2.0);
            n += 2.0;
            if term < 1e-18 * den {
                break;
            }
        }
        return Ok(num / den);
    }
    let e = (-x).exp();
    let d = -(-x).exp_m1();
    Ok((1.0 - 2.0 * x * e - e * e) / (d * d))
}

/// `ν_h(λ)`: proportion of `θ ∈ (0,1)^{2^h}` with
/// `|Σ_{j ≤ 2^{h-1}} logit θ_j - Σ_{j > 2^{h-1}} logit θ_j| < λ`.
pub fn nu_h_monte_carlo(h: usize, lambda: f64, cfg: &McConfig) -> Result<VolumeEstimate> {
    check_lambda(lambda)?;
    if h == 0 || h > MAX_ORDER {
        return Err(Error::Parameter(format!("order must lie in 1..={MAX_ORDER}, got {h}")));
    }
    let half = 1usize << (h - 1);
    mc_proportion(cfg, |rng, m| {
        let mut hits = 0;
        for _ in 0..m {
            let mut s = 0.0;
            for _ in 0..half {
                s += logit(unif(rng));
            }
            for _ in 0..half {
                s -= logit(unif(rng));
            }
            hits += (s.abs() < lambda) as u64;
        }
        hits
    })
}

fn order_seed(seed: u64, h: usize) -> u64 {
    seed ^ (h as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// `ν_h`: closed form for `h = 1`, Monte Carlo otherwise.
pub fn nu_h(h: usize, lambda: f64, cfg: &McConfig) -> Result<VolumeEstimate> {
    if h == 1 {
        Ok(VolumeEstimate::closed_form(nu1_closed(lambda)?))
    } else {
        nu_h_monte_carlo(h, lambda, &cfg.with_seed(order_seed(cfg.seed, h)))
    }
}

/// `1 - Π_t (1 - ν_{h_t})` for variation-independent hyperedges of the given
/// orders. Each distinct order is estimated once; the standard error is the
/// first-order delta method over those estimates.
pub fn unfaithful_proportion_decomposable(orders: &[usize], lambda: f64, cfg: &McConfig) -> Result<VolumeEstimate> {
    check_lambda(lambda)?;
    if orders.is_empty() {
        return Err(Error::Parameter("orders must be nonempty".into()));
    }
    let mut distinct: Vec<(usize, i32)> = Vec::new();
    for &h in orders {
        match distinct.iter_mut().find(|(o, _)| *o == h) {
            Some((_, m)) => *m += 1,
            None => distinct.push((h, 1)),
        }
    }
    let nus = distinct
        .iter()
        .map(|&(h, _)| nu_h(h, lambda, cfg))
        .collect::<Result<Vec<_>>>()?;
    let keep: Vec<f64> = distinct.iter().zip(&nus).map(|(&(_, m), nu)| (1.0 - nu.value).powi(m)).collect();
    let all: f64 = keep.iter().product();
    let mut var = 0.0;
    for (i, (&(_, m), nu)) in distinct.iter().zip(&nus).enumerate() {
        let others: f64 = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).product();
        let grad = m as f64 * (1.0 - nu.value).powi(m - 1) * others;
        var += (grad * nu.std_error).powi(2);
    }
    let mc = nus.iter().any(|nu| nu.method == Method::MonteCarlo);
    Ok(VolumeEstimate {
        value: 1.0 - all,
        std_error: var.sqrt(),
        n_samples: if mc { cfg.n_samples } else { 0 },
        seed: cfg.seed,
        method: Method::ProductFormula,
    })
}

/// The product formula for a hypergraph, which must be decomposable.
pub fn unfaithful_proportion_for(h: &Hypergraph, lambda: f64, cfg: &McConfig) -> Result<VolumeEstimate> {
    if is_decomposable(h).is_none() {
        return Err(Error::NotDecomposable);
    }
    unfaithful_proportion_decomposable(&h.orders(), lambda, cfg)
}

/// `max_t ν₁(λ / 2^{h_t-1})^{2^{h_t-1}}`.
pub fn volume_lower_bound(orders: &[usize], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if orders.is_empty() {
        return Err(Error::Parameter("orders must be nonempty".into()));
    }
    let mut best: f64 = 0.0;
    for &h in orders {
        if h == 0 || h > 62 {
            return Err(Error::Parameter(format!("invalid interaction order {h}")));
        }
        let m = (1u64 << (h - 1)) as f64;
        best = best.max(nu1_closed(lambda / m)?.powf(m));
    }
    Ok(best)
}

/// [`volume_lower_bound`] wrapped as an estimate.
pub fn volume_lower_bound_estimate(orders: &[usize], lambda: f64) -> Result<VolumeEstimate> {
    Ok(VolumeEstimate { method: Method::LowerBound, ..VolumeEstimate::closed_form(volume_lower_bound(orders, lambda)?) })
}

/// One conditional `P(var = 0 | cond)` in a chain-rule parameterization.
#[derive(Clone, Copy, Debug)]
struct Factor {
    var: usize,
    cond: VarSet,
}

/// Monte Carlo over the variation-independent conditional-probability
/// parameterization of a decomposable model.
///
/// Along a running-intersection order each hyperedge adds its new variables
/// one at a time, conditioned on the separator and the new variables before
/// it. Every conditional is drawn uniformly, the joint table is assembled,
/// and a sample counts as unfaithful when some hyperedge has `|γ_t| < λ`
/// at the all-zero conditioning cell. Variables outside every hyperedge are
/// uniform and independent.
pub fn decomposable_monte_carlo(h: &Hypergraph, lambda: f64, cfg: &McConfig) -> Result<VolumeEstimate> {
    check_lambda(lambda)?;
    let k = h.k();
    check_k(k)?;
    let order = is_decomposable(h).ok_or(Error::NotDecomposable)?;
    let mut factors = Vec::new();
    let mut seen = VarSet::EMPTY;
    for m in &order {
        let mut cond = m.intersection(seen);
        for v in m.difference(seen).iter() {
            factors.push(Factor { var: v, cond });
            cond = cond.union(VarSet::singleton(v));
        }
        seen = seen.union(*m);
    }
    let uncovered = seen.complement(k).len() as f64;
    let base = -uncovered * std::f64::consts::LN_2;
    let contrasts = h
        .edges()
        .iter()
        .map(|&e| contrast_at_zero(k, e))
        .collect::<Result<Vec<ContrastVector>>>()?;
    let n_cells = 1usize << k;
    mc_proportion(cfg, |rng, m| {
        let mut logp = vec![0.0; n_cells];
        let mut theta = Vec::new();
        let mut hits = 0;
        for _ in 0..m {
            logp.iter_mut().for_each(|x| *x = base);
            for f in &factors {
                let cv = f.cond.vars();
                theta.clear();
                theta.extend((0..1usize << cv.len()).map(|_| unif(rng)));
                let bit = var_bit(f.var, k);
                for (i, lp) in logp.iter_mut().enumerate() {
                    let mut j = 0;
                    for &c in &cv {
                        j = (j << 1) | (i & var_bit(c, k) != 0) as usize;
                    }
                    let t: f64 = theta[j];
                    *lp += if i & bit == 0 { t.ln() } else { (-t).ln_1p() };
                }
            }
            let unfaithful = contrasts.iter().any(|c| c.dot(&logp).abs() < lambda);
            hits += unfaithful as u64;
        }
        hits
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterSpace {
    Simplex,
    UnitCube,
}

/// Association measures for the 2×2 table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMeasure {
    /// `|log(p00 p11 / (p01 p10))|` on the simplex.
    Phi1LogOdds,
    /// Yule's `|(p00p11 - p01p10) / (p00p11 + p01p10)|` on the simplex.
    Phi2Yule,
    /// `|θ2 - θ3|` with `θ2 = P(B=0|A=0)`, `θ3 = P(B=0|A=1)`, on the unit cube.
    Phi3CondProbDiff,
}

impl AssociationMeasure {
    pub const ALL: [AssociationMeasure; 3] =
        [AssociationMeasure::Phi1LogOdds, AssociationMeasure::Phi2Yule, AssociationMeasure::Phi3CondProbDiff];

    pub fn parameter_space(self) -> ParameterSpace {
        match self {
            AssociationMeasure::Phi3CondProbDiff => ParameterSpace::UnitCube,
            _ => ParameterSpace::Simplex,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AssociationMeasure::Phi1LogOdds => "phi1",
            AssociationMeasure::Phi2Yule => "phi2",
            AssociationMeasure::Phi3CondProbDiff => "phi3",
        }
    }

    /// The measure at a point of its parameter space.
    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            AssociationMeasure::Phi1LogOdds => ((x[0] * x[3]) / (x[1] * x[2])).ln().abs(),
            AssociationMeasure::Phi2Yule => {
                let (a, b) = (x[0] * x[3], x[1] * x[2]);
                ((a - b) / (a + b)).abs()
            }
            AssociationMeasure::Phi3CondProbDiff => (x[1] - x[2]).abs(),
        }
    }
}

/// Proportion of 2×2 parameters whose association measure is below `λ`.
pub fn two_by_two_unfaithful_proportion(measure: AssociationMeasure, lambda: f64, cfg: &McConfig) -> Result<VolumeEstimate> {
    check_lambda(lambda)?;
    mc_proportion(cfg, |rng, m| {
        let mut x = Vec::with_capacity(4);
        let mut hits = 0;
        for _ in 0..m {
            match measure.parameter_space() {
                ParameterSpace::Simplex => fill_simplex(&mut x, 4, rng),
                ParameterSpace::UnitCube => {
                    x.clear();
                    x.extend((0..3).map(|_| unif(rng)));
                }
            }
            hits += (measure.evaluate(&x) < lambda) as u64;
        }
        hits
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectedEstimate {
    /// Proportion among samples whose projection converged.
    pub estimate: VolumeEstimate,
    pub fit_failures: u64,
}

/// Proportion of the flat simplex on `2^k` cells whose likelihood projection
/// onto `h` has some hyperedge with `|γ_t| < λ`.
pub fn projected_unfaithful_proportion(
    h: &Hypergraph,
    lambda: f64,
    cfg: &McConfig,
    fit: &FitConfig,
) -> Result<ProjectedEstimate> {
    check_lambda(lambda)?;
    fit.validate()?;
    let k = h.k();
    let plan = IpfPlan::new(h);
    let contrasts = h
        .edges()
        .iter()
        .map(|&e| contrast_at_zero(k, e))
        .collect::<Result<Vec<ContrastVector>>>()?;
    let saturated = h.is_saturated();
    let (hits, failures) = run_chunks(cfg, |rng, m| {
        let mut x = Vec::new();
        let (mut hits, mut failures) = (0, 0);
        for _ in 0..m {
            fill_simplex(&mut x, 1 << k, rng);
            let target = JointDistribution::from_vec_unchecked(k, x.clone());
            let q = if saturated {
                target
            } else {
                match plan.fit(&target, fit) {
                    Ok(r) if r.converged => r.fitted,
                    _ => {
                        failures += 1;
                        continue;
                    }
                }
            };
            hits += contrasts.iter().any(|c| c.apply_log(&q).abs() < lambda) as u64;
        }
        (hits, failures)
    })?;
    Ok(ProjectedEstimate {
        estimate: VolumeEstimate::from_hits(hits, cfg.n_samples - failures, cfg.seed),
        fit_failures: failures,
    })
}

/// Curve as CSV with columns `lambda,estimate,std_error,n_samples,method`.
pub fn curve_csv(points: &[(f64, VolumeEstimate)]) -> String {
    let mut out = String::from("lambda,estimate,std_error,n_samples,method\n");
    for (lambda, v) in points {
        out.push_str(&format!("{lambda},{},{},{},{}\n", v.value, v.std_error, v.n_samples, v.method.as_str()));
    }
    out
}
