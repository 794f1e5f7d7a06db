//! Closed-form rate and space bounds, plus Monte Carlo estimators for the
//! terms that have no closed form.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;

use statrs::function::gamma::ln_gamma;

use crate::infer::queue_space_bound;
use crate::model::ColorMatrix;
use crate::randgen::{rng_from_seed, sample_matrix, ColorDistribution};
use crate::Result;

/// `log2(n!)`.
pub fn log2_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0) / LN_2
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy_h(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// `M N H(p) - log2 N!`: ideal size of an `N x M` layer with unlabeled rows.
pub fn plbg_bound(n: usize, m_cols: usize, probs: &[f64]) -> f64 {
    (m_cols * n) as f64 * entropy_h(probs) - log2_factorial(n as u64)
}

/// `M N H(p) - N log2 N`, the cruder form reported next to measured sizes.
pub fn table_bound(n: usize, m_cols: usize, probs: &[f64]) -> f64 {
    let nf = n as f64;
    (m_cols * n) as f64 * entropy_h(probs) - nf * nf.log2()
}

/// `N^2 H(p) - 2 log2 N!`: ideal size of a square graph with both sides
/// unlabeled.
pub fn ubg_bound(n: usize, probs: &[f64]) -> f64 {
    (n * n) as f64 * entropy_h(probs) - 2.0 * log2_factorial(n as u64)
}

/// A bound with an explicit, unevaluated slack term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackedBound {
    /// Value of the evaluated terms.
    pub value: f64,
    /// Placeholder for constants that are known to exist but are not given;
    /// always 0, so `value` is a lower estimate of the true bound.
    pub slack: f64,
    pub lower_estimate: bool,
}

impl SlackedBound {
    fn lower(value: f64) -> Self {
        Self {
            value,
            slack: 0.0,
            lower_estimate: true,
        }
    }
}

/// `(K-1) N^2 H + (K-2) N H - (K-2) N log2 N` for `K` node layers of width
/// `N`, binary edges with edge probability `p`.
pub fn ktree_bound(k: usize, n: usize, p: f64) -> SlackedBound {
    let h = entropy_h(&[p, 1.0 - p]);
    let nf = n as f64;
    let k1 = k as f64 - 1.0;
    let k2 = k as f64 - 2.0;
    SlackedBound::lower(k1 * nf * nf * h + k2 * nf * h - k2 * nf * nf.log2())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl McEstimate {
    fn from_samples(samples: impl Iterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
        for x in samples {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let std_error = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            trials: n,
        }
    }
}

fn multiplicities(w: &ColorMatrix) -> BTreeMap<&[u16], u64> {
    let mut counts = BTreeMap::new();
    for r in 0..w.rows() {
        *counts.entry(w.row(r)).or_insert(0u64) += 1;
    }
    counts
}

fn log2_multiplicity_factorials(w: &ColorMatrix) -> f64 {
    multiplicities(w).values().map(|&k| log2_factorial(k)).sum()
}

fn neg_log2_multiset_prob(w: &ColorMatrix, log_p: &[f64]) -> f64 {
    let rows: f64 = w.cells().iter().map(|&c| log_p[c as usize]).sum();
    -log2_factorial(w.rows() as u64) + log2_multiplicity_factorials(w) - rows
}

fn monte_carlo<F>(
    n: usize,
    m_cols: usize,
    dist: &ColorDistribution,
    trials: u64,
    seed: u64,
    mut f: F,
) -> Result<McEstimate>
where
    F: FnMut(&ColorMatrix) -> f64,
{
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        samples.push(f(&sample_matrix(&mut rng, n, m_cols, dist)?));
    }
    Ok(McEstimate::from_samples(samples.into_iter()))
}

/// Entropy of the row multiset of a random `N x M` matrix.
pub fn mc_multiset_entropy(
    n: usize,
    m_cols: usize,
    dist: &ColorDistribution,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    let log_p: Vec<f64> = dist.probs().iter().map(|p| p.log2()).collect();
    monte_carlo(n, m_cols, dist, trials, seed, |w| neg_log2_multiset_prob(w, &log_p))
}

/// `E[sum_i log2 k_i!]` over the row multiplicities of a random matrix.
pub fn mc_log_multiplicity(
    n: usize,
    m_cols: usize,
    dist: &ColorDistribution,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    monte_carlo(n, m_cols, dist, trials, seed, log2_multiplicity_factorials)
}

/// Bound for a network compressed layer by layer with unlabeled rows, where
/// `widths` lists node-layer widths from input to output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeBound {
    pub bound: SlackedBound,
    /// Monte Carlo part of `bound.value`, summed over layers.
    pub multiplicity_term: McEstimate,
}

pub fn iterative_bound(widths: &[usize], dist: &ColorDistribution, trials: u64, seed: u64) -> Result<IterativeBound> {
    let mut value = 0.0;
    let mut mean = 0.0;
    let mut var = 0.0;
    for (i, w) in widths.windows(2).enumerate() {
        let (cols, rows) = (w[0], w[1]);
        let mc = mc_log_multiplicity(rows, cols, dist, trials, seed.wrapping_add(i as u64))?;
        value += plbg_bound(rows, cols, dist.probs()) + mc.mean;
        mean += mc.mean;
        var += mc.std_error * mc.std_error;
    }
    if let Some(&last) = widths.last() {
        value += log2_factorial(last as u64);
    }
    Ok(IterativeBound {
        bound: SlackedBound::lower(value),
        multiplicity_term: McEstimate {
            mean,
            std_error: var.sqrt(),
            trials,
        },
    })
}

/// The `x_n` and `y_n` sequences bounding expected tree sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: f64,
}

/// Binomial(n, p) weights, built from the `k = 0` term by ratio recurrence in
/// log space.
fn binomial_weights(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let (lp, lq) = (p.ln(), q.ln());
    let mut lw = n as f64 * lq;
    let mut w = Vec::with_capacity(n + 1);
    for k in 0..=n {
        w.push(lw.exp());
        lw += ((n - k) as f64 / (k + 1) as f64).ln() + lp - lq;
    }
    w
}

pub fn xy_recursion(n_max: usize, p: f64) -> RecursionTable {
    assert!(p > 0.0 && p < 1.0, "p must lie strictly between 0 and 1");
    let q = 1.0 - p;
    let mut x = vec![0.0; n_max + 1];
    let mut y = vec![0.0; n_max + 1];
    for n in 2..=n_max {
        let w = binomial_weights(n, p);
        let head = ((n + 1) as f64).log2().ceil();
        let inner: f64 = (1..n).map(|k| w[k] * (x[k] + x[n - k])).sum();
        x[n] = (head + inner) / (1.0 - p.powi(n as i32) - q.powi(n as i32));
    }
    for n in 0..n_max {
        let w = binomial_weights(n, p);
        y[n + 1] = n as f64 + (0..=n).map(|k| w[k] * (y[k] + y[n - k])).sum::<f64>();
    }
    RecursionTable { x, y, p }
}

/// Every bound for an `N x M` layer under one color distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: usize,
    pub cols: usize,
    pub entropy: f64,
    pub plbg_bound: f64,
    pub table_bound: f64,
    pub ubg_bound: f64,
    pub ktree_bound: Option<SlackedBound>,
    pub iterative_bound: Option<IterativeBound>,
    pub queue_bound: f64,
    pub multiset_entropy: Option<McEstimate>,
}

impl BoundReport {
    /// Monte Carlo fields are filled when `mc` gives `(trials, seed)`.
    pub fn new(rows: usize, cols: usize, dist: &ColorDistribution, mc: Option<(u64, u64)>) -> Result<Self> {
        let probs = dist.probs();
        let ktree_bound = (dist.m() == 1).then(|| ktree_bound(2, rows, probs[1]));
        let (iterative_bound, multiset_entropy) = match mc {
            Some((trials, seed)) => (
                Some(iterative_bound(&[cols, rows], dist, trials, seed)?),
                Some(mc_multiset_entropy(rows, cols, dist, trials, seed)?),
            ),
            None => (None, None),
        };
        Ok(Self {
            rows,
            cols,
            entropy: entropy_h(probs),
            plbg_bound: plbg_bound(rows, cols, probs),
            table_bound: table_bound(rows, cols, probs),
            ubg_bound: ubg_bound(rows, probs),
            ktree_bound,
            iterative_bound,
            queue_bound: queue_space_bound(rows, dist.m()),
            multiset_entropy,
        })
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows={}", self.rows)?;
        writeln!(f, "cols={}", self.cols)?;
        writeln!(f, "entropy_h={:.6}", self.entropy)?;
        writeln!(f, "plbg_bound={:.3}", self.plbg_bound)?;
        writeln!(f, "table_bound={:.3}", self.table_bound)?;
        writeln!(f, "ubg_bound={:.3}", self.ubg_bound)?;
        if let Some(k) = self.ktree_bound {
            writeln!(f, "ktree_bound={:.3}", k.value)?;
            writeln!(f, "ktree_slack={} lower_estimate={}", k.slack, k.lower_estimate)?;
        }
        writeln!(f, "queue_bound={:.3}", self.queue_bound)?;
        if let Some(it) = self.iterative_bound {
            writeln!(f, "iterative_bound={:.3}", it.bound.value)?;
            writeln!(
                f,
                "iterative_slack={} lower_estimate={}",
                it.bound.slack, it.bound.lower_estimate
            )?;
            writeln!(f, "mc_log_multiplicity={:.6}", it.multiplicity_term.mean)?;
            writeln!(f, "mc_log_multiplicity_stderr={:.6}", it.multiplicity_term.std_error)?;
        }
        if let Some(mc) = self.multiset_entropy {
            writeln!(f, "mc_multiset_entropy={:.6}", mc.mean)?;
            writeln!(f, "mc_multiset_entropy_stderr={:.6}", mc.std_error)?;
            writeln!(f, "mc_trials={}", mc.trials)?;
        }
        Ok(())
    }
}
