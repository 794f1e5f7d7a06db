//! Seeded generators for random layers and networks.
//!
//! All randomness comes from ChaCha20 so a seed fixes every output across
//! platforms and releases of this crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::deepcodec::QuantizedNetwork;
use crate::model::{Codebook, ColorMatrix};
use crate::{Error, Result};

/// Name of the generator, recorded alongside benchmark output.
pub const PRNG_NAME: &str = "chacha20/rand_chacha-0.3";

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Categorical distribution over colors `0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ColorDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 || probs.len() > u16::MAX as usize + 1 {
            return Err(Error::InvalidModel(format!(
                "need between 2 and 65536 color probabilities, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidModel(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("probabilities sum to {sum}, not 1")));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for c in &mut cumulative[last_nonzero..] {
            *c = 1.0;
        }
        Ok(Self { probs, cumulative })
    }

    /// Two colors: no edge with probability `1 - p`, edge with probability `p`.
    pub fn binary(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    /// Discretized zero-mean Gaussian over `m` nonzero uniform levels plus the
    /// zero level, `sigma` measured in level steps. Colors `1..=m` run from the
    /// most negative level to the most positive.
    pub fn gaussian_levels(m: u16, sigma: f64) -> Result<Self> {
        if m == 0 || sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidModel("need m >= 1 and a positive sigma".into()));
        }
        let neg = (m as i64 + 1) / 2;
        let mut w = vec![1.0];
        for color in 1..=m as i64 {
            let level = if color <= neg { color - neg - 1 } else { color - neg };
            let z = level as f64 / sigma;
            w.push((-0.5 * z * z).exp());
        }
        let total: f64 = w.iter().sum();
        Self::new(w.into_iter().map(|v| v / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn m(&self) -> u16 {
        (self.probs.len() - 1) as u16
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u16 {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= u).min(self.probs.len() - 1) as u16
    }
}

/// Everything needed to reproduce one random matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub rows: usize,
    pub cols: usize,
    pub dist: ColorDistribution,
    pub seed: u64,
}

pub fn sample_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    dist: &ColorDistribution,
) -> Result<ColorMatrix> {
    let cells = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    ColorMatrix::new(rows, cols, dist.m(), cells)
}

pub fn gen_matrix(spec: &GenSpec) -> Result<ColorMatrix> {
    sample_matrix(&mut rng_from_seed(spec.seed), spec.rows, spec.cols, &spec.dist)
}

/// Random network with node-layer widths `dims` (input first), i.i.d. colors
/// and a shared codebook.
pub fn gen_network(
    dims: &[usize],
    dist: &ColorDistribution,
    codebook: &Codebook,
    seed: u64,
) -> Result<QuantizedNetwork> {
    if dims.len() < 2 {
        return Err(Error::InvalidNetwork("need at least two layer widths".into()));
    }
    let mut rng = rng_from_seed(seed);
    let layers = dims
        .windows(2)
        .map(|w| Ok((sample_matrix(&mut rng, w[1], w[0], dist)?, codebook.clone())))
        .collect::<Result<Vec<_>>>()?;
    QuantizedNetwork::new(layers)
}
