//! Layer evaluation directly on a compressed stream.
//!
//! The count tree is decoded breadth first while being re-encoded into a
//! fresh stream, so the weights are never materialized. Every node at depth
//! `d` covers a contiguous block of output rows in canonical order; a child of
//! color `i` with value `c` adds `x[d] * w_i` to the next `c` outputs. Only the
//! queue of pending node values is kept, which is `O(N)` integers.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::coder::{elias_decode, elias_encode, elias_len, ArithDecoder, ArithEncoder, BitWriter, Bitstream};
use crate::model::{Codebook, ColorMatrix, EdgeModel};
use crate::plbg::{ChildModel, MAX_DECODED_CELLS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Identity,
    Relu,
    Sigmoid,
    /// Only meaningful on the output layer.
    Softmax,
}

impl ActivationKind {
    pub fn apply(self, y: &mut [f64]) {
        match self {
            Self::Identity => {}
            Self::Relu => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            Self::Sigmoid => y.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp())),
            Self::Softmax => {
                let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in y.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                y.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }
}

/// Size of the pending-node queue, with each entry counted at its Elias gamma
/// length.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueueMetrics {
    pub avg_bits: f64,
    pub max_bits: u64,
    pub entries_max: usize,
    pub samples: u64,
}

impl QueueMetrics {
    /// Combines metrics from several layers; maxima are taken, averages are
    /// weighted by sample count.
    pub fn merge(&self, other: &Self) -> Self {
        let samples = self.samples + other.samples;
        let avg_bits = if samples == 0 {
            0.0
        } else {
            (self.avg_bits * self.samples as f64 + other.avg_bits * other.samples as f64) / samples as f64
        };
        Self {
            avg_bits,
            max_bits: self.max_bits.max(other.max_bits),
            entries_max: self.entries_max.max(other.entries_max),
            samples,
        }
    }
}

/// `2N(m+1) + 4N(m+1) log2((m+2)/(m+1))`, a ceiling on the queue size in bits.
pub fn queue_space_bound(n: usize, m: u16) -> f64 {
    let n = n as f64;
    let c = m as f64 + 1.0;
    2.0 * n * c + 4.0 * n * c * ((c + 1.0) / c).log2()
}

/// Wall time spent in each phase of [`infer_layer_timed`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    /// Building conditional frequency tables.
    pub pmf: Duration,
    /// Arithmetic decoding and re-encoding.
    pub coding: Duration,
    /// Adding weighted inputs into the outputs.
    pub accumulate: Duration,
    pub total: Duration,
}

impl PhaseTimes {
    pub fn add(&mut self, other: &Self) {
        self.pmf += other.pmf;
        self.coding += other.coding;
        self.accumulate += other.accumulate;
        self.total += other.total;
    }

    fn percent(&self, part: Duration) -> f64 {
        if self.total.is_zero() {
            0.0
        } else {
            100.0 * part.as_secs_f64() / self.total.as_secs_f64()
        }
    }

    pub fn pmf_percent(&self) -> f64 {
        self.percent(self.pmf)
    }

    pub fn coding_percent(&self) -> f64 {
        self.percent(self.coding)
    }

    pub fn accumulate_percent(&self) -> f64 {
        self.percent(self.accumulate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutput {
    /// Outputs in canonical row order.
    pub y: Vec<f64>,
    /// The re-encoded stream; always identical to the input stream.
    pub stream: Bitstream,
    pub metrics: QueueMetrics,
}

pub fn infer_layer(
    stream: &Bitstream,
    model: &EdgeModel,
    codebook: &Codebook,
    x: &[f64],
    activation: ActivationKind,
) -> Result<LayerOutput> {
    run(stream, model, codebook, x, activation, None)
}

/// [`infer_layer`] with per-phase timing added into `times`.
pub fn infer_layer_timed(
    stream: &Bitstream,
    model: &EdgeModel,
    codebook: &Codebook,
    x: &[f64],
    activation: ActivationKind,
    times: &mut PhaseTimes,
) -> Result<LayerOutput> {
    let start = Instant::now();
    let out = run(stream, model, codebook, x, activation, Some(times));
    times.total += start.elapsed();
    out
}

struct Queue {
    values: VecDeque<usize>,
    bits: u64,
    metrics: QueueMetrics,
    sum_bits: f64,
}

impl Queue {
    fn push(&mut self, v: usize) {
        self.bits += elias_len(v as u64) as u64;
        self.values.push_back(v);
    }

    fn pop(&mut self) -> Option<usize> {
        let v = self.values.pop_front()?;
        self.bits -= elias_len(v as u64) as u64;
        Some(v)
    }

    fn sample(&mut self) {
        self.metrics.samples += 1;
        self.sum_bits += self.bits as f64;
        self.metrics.max_bits = self.metrics.max_bits.max(self.bits);
        self.metrics.entries_max = self.metrics.entries_max.max(self.values.len());
    }

    fn finish(mut self) -> QueueMetrics {
        if self.metrics.samples > 0 {
            self.metrics.avg_bits = self.sum_bits / self.metrics.samples as f64;
        }
        self.metrics
    }
}

fn timed<T>(
    slot: &mut Option<&mut PhaseTimes>,
    pick: fn(&mut PhaseTimes) -> &mut Duration,
    f: impl FnOnce() -> T,
) -> T {
    match slot {
        Some(times) => {
            let start = Instant::now();
            let out = f();
            *pick(times) += start.elapsed();
            out
        }
        None => f(),
    }
}

fn run(
    stream: &Bitstream,
    model: &EdgeModel,
    codebook: &Codebook,
    x: &[f64],
    activation: ActivationKind,
    mut times: Option<&mut PhaseTimes>,
) -> Result<LayerOutput> {
    if codebook.m() != model.m() {
        return Err(Error::InvalidModel(format!(
            "codebook has {} colors, model has {}",
            codebook.m() as usize + 1,
            model.m() as usize + 1
        )));
    }
    let cols = x.len();
    if cols == 0 {
        return Err(Error::LengthMismatch { expected: 1, actual: 0 });
    }
    let mut reader = stream.reader();
    let n = elias_decode(&mut reader)?;
    if n == 0 || n.saturating_mul(cols as u64) > MAX_DECODED_CELLS {
        return Err(Error::Inconsistent(format!("implausible row count {n}")));
    }
    let n = n as usize;
    let children_model = ChildModel::new(model);
    let last = children_model.colors() - 1;
    let mut dec = ArithDecoder::new(reader);
    let mut w = BitWriter::new();
    elias_encode(&mut w, n as u64);
    let mut enc = ArithEncoder::new(w);

    let mut y = vec![0.0; n];
    let mut queue = Queue {
        values: VecDeque::new(),
        bits: 0,
        metrics: QueueMetrics::default(),
        sum_bits: 0.0,
    };
    queue.push(n);
    let (mut j, mut d) = (0usize, 0usize);
    let mut nonzero_seen = false;
    while d < cols {
        let Some(f) = queue.pop() else { break };
        if f > 0 {
            let mut remaining = f;
            for i in 0..=last {
                let c = if i == last || remaining == 0 {
                    if i == last {
                        remaining
                    } else {
                        0
                    }
                } else {
                    let table = timed(&mut times, |t| &mut t.pmf, || children_model.table(i, remaining))?;
                    timed(
                        &mut times,
                        |t| &mut t.coding,
                        || -> Result<usize> {
                            let c = dec.decode(&table)?;
                            enc.encode(&table, c)?;
                            Ok(c)
                        },
                    )?
                };
                remaining -= c;
                queue.push(c);
                if c > 0 {
                    if j + c > n {
                        return Err(Error::Inconsistent("block runs past the last row".into()));
                    }
                    let v = x[d] * codebook.weight(i);
                    timed(
                        &mut times,
                        |t| &mut t.accumulate,
                        || y[j..j + c].iter_mut().for_each(|acc| *acc += v),
                    );
                    nonzero_seen = true;
                }
                j = (j + c) % n;
                if j == 0 && nonzero_seen {
                    d += 1;
                    nonzero_seen = false;
                }
            }
        }
        queue.sample();
    }
    if d < cols {
        return Err(Error::Inconsistent(format!("stream ended at depth {d} of {cols}")));
    }
    dec.check_consistent()?;
    let out = enc.finish().finish();
    if &out != stream {
        return Err(Error::Inconsistent("stream has trailing data".into()));
    }
    activation.apply(&mut y);
    Ok(LayerOutput {
        y,
        stream: out,
        metrics: queue.finish(),
    })
}

/// Dense reference evaluation `g(W x)`.
pub fn dense_layer(
    matrix: &ColorMatrix,
    codebook: &Codebook,
    x: &[f64],
    activation: ActivationKind,
) -> Result<Vec<f64>> {
    if x.len() != matrix.cols() {
        return Err(Error::LengthMismatch {
            expected: matrix.cols(),
            actual: x.len(),
        });
    }
    if codebook.m() < matrix.m() {
        return Err(Error::InvalidModel("codebook has fewer colors than the matrix".into()));
    }
    let mut y: Vec<f64> = (0..matrix.rows())
        .map(|r| {
            matrix
                .row(r)
                .iter()
                .zip(x)
                .map(|(&c, &xv)| codebook.weight(c as usize) * xv)
                .sum()
        })
        .collect();
    activation.apply(&mut y);
    Ok(y)
}
