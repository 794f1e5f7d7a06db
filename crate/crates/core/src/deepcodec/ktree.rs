//! K-layer codec for binary networks with equal layer widths.
//!
//! The whole network is treated as one layered graph and canonically
//! labeled. One binary tree per node layer is grown by the alternating
//! selection/division process; a selected node divides the classes of both
//! neighboring layers into the nodes it is not connected to (left) and those
//! it is (right). Input and output nodes keep their labels through two
//! permutations written in front of the arithmetic payload, each as `N`
//! fixed-width fields of `ceil(log2 N)` bits.

use super::{Layer, LayerRecord, Mode, NetworkContainer, QuantizedNetwork};
use crate::coder::{ArithDecoder, ArithEncoder, BitReader, BitWriter, Bitstream};
use crate::model::{empirical_model, ColorMatrix, EdgeModel, RowPermutation};
use crate::ubg::{canonical_order, run_engine, DecodeSplitter, EncodeSplitter, Layered, Sink, TreeTrace};
use crate::{Error, Result};

fn layered(net: &QuantizedNetwork) -> Result<(Layered, usize)> {
    let n = net.input_width();
    for (i, Layer { matrix, .. }) in net.layers().iter().enumerate() {
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::InvalidNetwork(format!(
                "layer {i} is {}x{}; every layer must be {n}x{n}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.m() != 1 {
            return Err(Error::Unsupported(format!(
                "layer {i} has m = {}; only binary layers are supported",
                matrix.m()
            )));
        }
    }
    let g = Layered {
        widths: net.dims(),
        links: net.layers().iter().map(|l| l.matrix.cells().to_vec()).collect(),
    };
    Ok((g, n))
}

fn binary_model(records: &[LayerRecord]) -> Result<EdgeModel> {
    let mut counts = [0u64; 2];
    for r in records {
        for (c, v) in counts.iter_mut().zip(r.model.counts()) {
            *c = c
                .checked_add(*v)
                .ok_or_else(|| Error::Format("color counts overflow".into()))?;
        }
    }
    EdgeModel::new(counts.to_vec())
}

fn index_width(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

fn encode(net: &QuantizedNetwork, trace: Option<&mut TreeTrace>) -> Result<NetworkContainer> {
    let (g, n) = layered(net)?;
    let order = canonical_order(&g, &vec![false; g.widths.len()]);
    let canon = g.relabel(&order);
    let records: Vec<LayerRecord> = net
        .layers()
        .iter()
        .map(|l| LayerRecord::raw(&l.matrix, &l.codebook))
        .collect();
    let model = binary_model(&records)?;
    let mut splitter = EncodeSplitter {
        graph: &canon,
        actual: canon.widths.iter().map(|&w| (0..w).collect()).collect(),
        left_is_edge: false,
        num: model.counts()[0],
        den: model.total(),
        sink: Sink::Arith(ArithEncoder::new(BitWriter::new())),
    };
    run_engine(&canon.widths, false, &mut splitter, trace)?;
    let Sink::Arith(enc) = splitter.sink else {
        unreachable!("sink kind is preserved")
    };
    let payload = enc.finish().finish();

    let mut w = BitWriter::new();
    let width = index_width(n);
    let last = canon.widths.len() - 1;
    for layer in [0, last] {
        for slot in 0..n {
            w.write_bits(order[layer][splitter.actual[layer][slot]] as u64, width);
        }
    }
    let mut r = payload.reader();
    while let Some(bit) = r.read_bit() {
        w.write_bit(bit);
    }
    let stream = w.finish();

    let mut out = Vec::with_capacity(records.len());
    for (i, mut rec) in records.into_iter().enumerate() {
        rec.payload = if i == 0 {
            stream.clone()
        } else {
            Bitstream::from_bytes(Vec::new(), 0)?
        };
        out.push(rec);
    }
    NetworkContainer::new(Mode::Ktree, out)
}

/// Compresses a binary network whose layers are all `N x N`.
pub fn compress_network_ktree(net: &QuantizedNetwork) -> Result<NetworkContainer> {
    encode(net, None)
}

/// The per-layer trees built while compressing; `trees[0]` is the input
/// layer's.
pub fn ktree_trace(net: &QuantizedNetwork) -> Result<TreeTrace> {
    let mut trace = TreeTrace::default();
    encode(net, Some(&mut trace))?;
    Ok(trace)
}

fn read_permutation(r: &mut BitReader<'_>, n: usize) -> Result<RowPermutation> {
    let width = index_width(n);
    let perm = (0..n)
        .map(|_| Ok(r.read_bits(width)? as usize))
        .collect::<Result<Vec<_>>>()?;
    RowPermutation::new(perm).map_err(|_| Error::Inconsistent("stored node order is not a permutation".into()))
}

/// Rebuilds a network with the original input and output order; hidden
/// layers come back in an arbitrary but consistent order.
pub fn decompress_network_ktree(container: &NetworkContainer) -> Result<QuantizedNetwork> {
    if container.mode() != Mode::Ktree {
        return Err(Error::Unsupported("not a ktree container".into()));
    }
    let records = container.layers();
    let n = records[0].rows;
    let widths = vec![n; records.len() + 1];
    let model = binary_model(records)?;
    let stream = &records[0].payload;
    let mut r = stream.reader();
    let input = read_permutation(&mut r, n)?;
    let output = read_permutation(&mut r, n)?;
    let mut dec = ArithDecoder::new(r);
    let mut splitter = DecodeSplitter {
        dec: &mut dec,
        num: model.counts()[0],
        den: model.total(),
    };
    let g = run_engine(&widths, false, &mut splitter, None)?;
    dec.check_consistent()?;
    let last = records.len() - 1;
    let layers = records
        .iter()
        .enumerate()
        .map(|(l, rec)| {
            let mut m = ColorMatrix::new(n, n, 1, g.links[l].clone())?;
            if l == 0 {
                m = m.permute_cols(&input)?;
            }
            if l == last {
                m = m.permute_rows(&output)?;
            }
            let model = empirical_model(&m);
            if model != rec.model {
                return Err(Error::Inconsistent(format!(
                    "layer {l} color counts do not match the header"
                )));
            }
            Ok((m, rec.codebook.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    QuantizedNetwork::new(layers)
}
