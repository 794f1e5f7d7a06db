//! Whole-network compression and inference.
//!
//! The primary scheme compresses every weight matrix except the last as a
//! multiset of rows. Sorting a matrix's rows reorders the hidden nodes it
//! feeds, so the next matrix has its columns permuted to match before it is
//! processed. Hidden layers are first put in canonical order, which settles
//! ties between identical rows. The last matrix keeps the output labels and is stored raw,
//! which undoes all hidden permutations during inference.

mod container;
pub mod ktree;

use std::cmp::Ordering;
use std::time::Instant;

pub use container::{LayerRecord, Mode, NetworkContainer, FORMAT_VERSION, MAGIC};

use crate::infer::{dense_layer, infer_layer_timed, ActivationKind, PhaseTimes, QueueMetrics};
use crate::model::{canonical_sort_rows_by, empirical_model, Codebook, ColorMatrix, EdgeModel, RowPermutation};
use crate::plbg::{encode_sorted, plbg_decode_checked};
use crate::ubg::{canonical_order, Layered};
use crate::{Error, Result};

/// One weight matrix with its codebook. Rows index the layer it feeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub matrix: ColorMatrix,
    pub codebook: Codebook,
}

/// A feedforward network as a chain of quantized weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedNetwork {
    layers: Vec<Layer>,
}

impl QuantizedNetwork {
    pub fn new(layers: Vec<(ColorMatrix, Codebook)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network needs at least one layer".into()));
        }
        for (i, (matrix, codebook)) in layers.iter().enumerate() {
            if matrix.m() != codebook.m() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i}: matrix has m = {}, codebook has m = {}",
                    matrix.m(),
                    codebook.m()
                )));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[1].0.cols() != w[0].0.rows() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {} has {} inputs but layer {i} has {} outputs",
                    i + 1,
                    w[1].0.cols(),
                    w[0].0.rows()
                )));
            }
        }
        Ok(Self {
            layers: layers
                .into_iter()
                .map(|(matrix, codebook)| Layer { matrix, codebook })
                .collect(),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of weight matrices.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Node-layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].matrix.cols())
            .chain(self.layers.iter().map(|l| l.matrix.rows()))
            .collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].matrix.cols()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].matrix.rows()
    }
}

/// Dense evaluation with `activation` on hidden layers and `final_activation`
/// on the output.
pub fn dense_forward(
    net: &QuantizedNetwork,
    x: &[f64],
    activation: ActivationKind,
    final_activation: ActivationKind,
) -> Result<Vec<f64>> {
    let mut v = x.to_vec();
    let last = net.depth() - 1;
    for (i, layer) in net.layers().iter().enumerate() {
        let g = if i == last { final_activation } else { activation };
        v = dense_layer(&layer.matrix, &layer.codebook, &v, g)?;
    }
    Ok(v)
}

/// The network with every hidden layer in canonical order; input and output
/// nodes stay put. Networks that differ only by hidden-layer permutations map
/// to the same result.
fn canonical_hidden(net: &QuantizedNetwork) -> Result<QuantizedNetwork> {
    let k = net.depth();
    if k < 2 {
        return Ok(net.clone());
    }
    let g = Layered {
        widths: net.dims(),
        links: net.layers().iter().map(|l| l.matrix.cells().to_vec()).collect(),
    };
    let pinned: Vec<bool> = (0..=k).map(|l| l == 0 || l == k).collect();
    let order = canonical_order(&g, &pinned);
    let destinations = |l: usize| {
        let mut dst = vec![0; order[l].len()];
        for (pos, &v) in order[l].iter().enumerate() {
            dst[v] = pos;
        }
        RowPermutation::new(dst)
    };
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let mut m = layer.matrix.clone();
            if l + 1 < k {
                m = m.permute_rows(&destinations(l + 1)?)?;
            }
            if l > 0 {
                m = m.permute_cols(&destinations(l)?)?;
            }
            Ok((m, layer.codebook.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    QuantizedNetwork::new(layers)
}

/// Compresses every matrix but the last as a row multiset.
pub fn compress_network_plbg(net: &QuantizedNetwork) -> Result<NetworkContainer> {
    let k = net.depth();
    let net = &canonical_hidden(net)?;
    let mut records = Vec::with_capacity(k);
    let mut matrix = net.layers()[0].matrix.clone();
    for (l, layer) in net.layers().iter().enumerate() {
        if l == k - 1 {
            records.push(LayerRecord::raw(&matrix, &layer.codebook));
            break;
        }
        let (sorted, perm) = canonical_sort_rows_by(&matrix, |a, b| a.cmp(&b));
        let model = empirical_model(&sorted);
        let payload = encode_sorted(&sorted, &model)?;
        records.push(LayerRecord {
            rows: sorted.rows(),
            cols: sorted.cols(),
            codebook: layer.codebook.clone(),
            model,
            payload,
        });
        matrix = net.layers()[l + 1].matrix.permute_cols(&perm)?;
    }
    NetworkContainer::new(Mode::Plbg, records)
}

/// Stores every matrix raw; the uncompressed network file format.
pub fn network_to_raw(net: &QuantizedNetwork) -> Result<NetworkContainer> {
    let records = net
        .layers()
        .iter()
        .map(|l| LayerRecord::raw(&l.matrix, &l.codebook))
        .collect();
    NetworkContainer::new(Mode::Raw, records)
}

/// Rebuilds a network. Hidden nodes come back in canonical order, so the
/// result computes the same function as the original but its matrices may
/// differ by hidden-layer permutations.
pub fn decompress_network(container: &NetworkContainer) -> Result<QuantizedNetwork> {
    match container.mode() {
        Mode::Raw => {
            let layers = container
                .layers()
                .iter()
                .map(|r| Ok((r.raw_matrix()?, r.codebook.clone())))
                .collect::<Result<Vec<_>>>()?;
            QuantizedNetwork::new(layers)
        }
        Mode::Plbg => {
            let k = container.layers().len();
            let layers = container
                .layers()
                .iter()
                .enumerate()
                .map(|(l, r)| {
                    let m = if l + 1 == k {
                        r.raw_matrix()?
                    } else {
                        plbg_decode_checked(&r.payload, &r.model, r.cols, Some(r.rows))?
                    };
                    Ok((m, r.codebook.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            QuantizedNetwork::new(layers)
        }
        Mode::Ktree => ktree::decompress_network_ktree(container),
    }
}

/// Result of evaluating a network without decompressing it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOutput {
    pub y: Vec<f64>,
    /// Queue statistics over all compressed layers.
    pub metrics: QueueMetrics,
    pub times: PhaseTimes,
}

/// Evaluates a network directly from its container.
///
/// Compressed layers run through the streaming decoder, whose re-encoded
/// streams are checked to be identical to the stored payloads; the raw last
/// layer restores the output order.
pub fn infer_network(
    container: &NetworkContainer,
    x: &[f64],
    activation: ActivationKind,
    final_activation: ActivationKind,
) -> Result<NetworkOutput> {
    let start = Instant::now();
    let records = container.layers();
    if x.len() != records[0].cols {
        return Err(Error::LengthMismatch {
            expected: records[0].cols,
            actual: x.len(),
        });
    }
    let last = records.len() - 1;
    let mut times = PhaseTimes::default();
    let mut metrics = QueueMetrics::default();
    let mut v = x.to_vec();
    for (l, r) in records.iter().enumerate() {
        let g = if l == last { final_activation } else { activation };
        v = match container.mode() {
            Mode::Plbg if l < last => {
                let out = infer_layer_timed(&r.payload, &r.model, &r.codebook, &v, g, &mut times)?;
                if out.y.len() != r.rows {
                    return Err(Error::Inconsistent(format!("layer {l} decoded {} rows", out.y.len())));
                }
                metrics = metrics.merge(&out.metrics);
                out.y
            }
            Mode::Plbg | Mode::Raw => dense_layer(&r.raw_matrix()?, &r.codebook, &v, g)?,
            Mode::Ktree => {
                return Err(Error::Unsupported("streaming inference needs a plbg container".into()));
            }
        };
    }
    times.total = start.elapsed();
    Ok(NetworkOutput { y: v, metrics, times })
}

/// Index of the largest component; the first one on ties.
pub fn argmax(v: &[f64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &x)| match best {
            Some((_, b)) if x.partial_cmp(&b) != Some(Ordering::Greater) => best,
            _ => Some((i, x)),
        })
        .map(|(i, _)| i)
}

/// Shared empirical model pooled over every layer of a network.
pub fn pooled_model(net: &QuantizedNetwork) -> Result<EdgeModel> {
    let m = net.layers()[0].matrix.m();
    if net.layers().iter().any(|l| l.matrix.m() != m) {
        return Err(Error::InvalidNetwork("layers use different color counts".into()));
    }
    let mut counts = vec![0u64; m as usize + 1];
    for l in net.layers() {
        for &c in l.matrix.cells() {
            counts[c as usize] += 1;
        }
    }
    EdgeModel::new(counts)
}

#[cfg(test)]
mod tests;
