//! Codec for unlabeled bipartite graphs.
//!
//! A square binary adjacency matrix is stored up to row and column
//! permutations. The graph is first brought into canonical form, so every
//! rearrangement of it encodes identically. Two binary trees are then grown
//! by alternating between the sides: a selected column divides the remaining
//! rows into those adjacent to it and the rest, a row is selected from the
//! leftmost nonempty row class, it divides the remaining columns, and so on.
//! Each division size is arithmetic-coded against `Binomial(size, p)`.

mod canon;
mod engine;

pub(crate) use canon::{canonical_order, Layered};
pub(crate) use engine::{run as run_engine, DecodeSplitter, EncodeSplitter, Sink};

use crate::coder::{elias_decode, elias_encode, ArithDecoder, ArithEncoder, BitWriter, Bitstream};
use crate::model::{ColorMatrix, EdgeModel};
use crate::{Error, Result};

/// Largest size accepted by [`bipartite_iso`].
pub const MAX_ISO_N: usize = 8;
/// Largest size accepted from an untrusted stream.
pub const MAX_DECODED_N: u64 = 1 << 15;

/// Square 0/1 matrix; rows and columns are the two sides of the graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryAdjacency {
    n: usize,
    cells: Vec<bool>,
}

impl BinaryAdjacency {
    pub fn new(n: usize, cells: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("graph needs at least one node per side".into()));
        }
        if cells.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: cells.len(),
            });
        }
        Ok(Self { n, cells })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::InvalidMatrix("adjacency must be square".into()));
            }
            cells.extend(r.iter().map(|&v| v != 0));
        }
        Self::new(n, cells)
    }

    pub fn from_matrix(m: &ColorMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::InvalidMatrix(format!(
                "adjacency must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.m() != 1 {
            return Err(Error::Unsupported("only binary graphs are supported".into()));
        }
        Self::new(m.rows(), m.cells().iter().map(|&c| c != 0).collect())
    }

    pub fn to_matrix(&self) -> ColorMatrix {
        ColorMatrix::new(self.n, self.n, 1, self.cells.iter().map(|&b| b as u16).collect()).expect("valid shape")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.n + c]
    }

    pub fn edges(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Graph whose row `k` is row `rows[k]` of `self`, likewise for columns.
    pub fn rearrange(&self, rows: &[usize], cols: &[usize]) -> Self {
        let cells = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self { n: self.n, cells }
    }

    /// Sorted row degrees and sorted column degrees.
    pub fn degree_multisets(&self) -> (Vec<usize>, Vec<usize>) {
        let mut rows: Vec<usize> = (0..self.n)
            .map(|r| (0..self.n).filter(|&c| self.get(r, c)).count())
            .collect();
        let mut cols: Vec<usize> = (0..self.n)
            .map(|c| (0..self.n).filter(|&r| self.get(r, c)).count())
            .collect();
        rows.sort_unstable();
        cols.sort_unstable();
        (rows, cols)
    }

    /// Columns as layer 0 and rows as layer 1.
    fn layered(&self) -> Layered {
        Layered {
            widths: vec![self.n, self.n],
            links: vec![self.cells.iter().map(|&b| b as u16).collect()],
        }
    }

    fn from_layered(g: &Layered) -> Self {
        Self {
            n: g.widths[0],
            cells: g.links[0].iter().map(|&c| c != 0).collect(),
        }
    }

    /// Representative of this graph's isomorphism class; equal for any two
    /// rearrangements of the same graph.
    pub fn canonical_form(&self) -> Self {
        let g = self.layered();
        Self::from_layered(&g.relabel(&canonical_order(&g, &[false, false])))
    }
}

/// One step on a tree: a node taken out of the leftmost nonempty leaf, or a
/// leaf split in two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeEvent {
    Select { before: usize },
    Divide { parent: usize, left: usize, right: usize },
}

/// Events on each tree in the order they happen.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeTrace {
    pub trees: Vec<Vec<TreeEvent>>,
}

impl TreeTrace {
    /// For a single graph: the tree over rows.
    pub fn row_tree(&self) -> &[TreeEvent] {
        &self.trees[1]
    }

    /// For a single graph: the tree over columns.
    pub fn column_tree(&self) -> &[TreeEvent] {
        &self.trees[0]
    }
}

fn check_binary_model(adj: &BinaryAdjacency, model: &EdgeModel) -> Result<()> {
    if model.m() != 1 {
        return Err(Error::InvalidModel("graph codec needs a binary model".into()));
    }
    let edges = adj.edges();
    if edges > 0 && model.counts()[1] == 0 {
        return Err(Error::ModelMismatch { color: 1 });
    }
    if edges < adj.n * adj.n && model.counts()[0] == 0 {
        return Err(Error::ModelMismatch { color: 0 });
    }
    Ok(())
}

fn encode_with(adj: &BinaryAdjacency, model: &EdgeModel, sink: Sink, trace: Option<&mut TreeTrace>) -> Result<Sink> {
    check_binary_model(adj, model)?;
    let g = adj.layered();
    let canon = g.relabel(&canonical_order(&g, &[false, false]));
    let n = adj.n;
    // Seed column: the one holding the first 1 in row-major order.
    let seed = canon.links[0].iter().position(|&b| b != 0).map_or(0, |i| i % n);
    let cols: Vec<usize> = std::iter::once(seed).chain((0..n).filter(|&c| c != seed)).collect();
    let mut splitter = EncodeSplitter {
        graph: &canon,
        actual: vec![cols, (0..n).collect()],
        left_is_edge: true,
        num: model.counts()[1],
        den: model.total(),
        sink,
    };
    run_engine(&[n, n], true, &mut splitter, trace)?;
    Ok(splitter.sink)
}

fn arith_stream(adj: &BinaryAdjacency, model: &EdgeModel, trace: Option<&mut TreeTrace>) -> Result<Bitstream> {
    let mut w = BitWriter::new();
    elias_encode(&mut w, adj.n as u64);
    match encode_with(adj, model, Sink::Arith(ArithEncoder::new(w)), trace)? {
        Sink::Arith(enc) => Ok(enc.finish().finish()),
        Sink::Plain(_) => unreachable!("sink kind is preserved"),
    }
}

/// Compresses the isomorphism class of `adj`: `elias(N)` followed by the
/// arithmetic-coded division sizes.
pub fn ubg_encode(adj: &BinaryAdjacency, model: &EdgeModel) -> Result<Bitstream> {
    arith_stream(adj, model, None)
}

/// [`ubg_encode`] that also records the tree events.
pub fn ubg_encode_traced(adj: &BinaryAdjacency, model: &EdgeModel) -> Result<(Bitstream, TreeTrace)> {
    let mut trace = TreeTrace::default();
    let s = arith_stream(adj, model, Some(&mut trace))?;
    Ok((s, trace))
}

/// The division sizes in plain `ceil(log2(n + 1))`-bit fields, in coding
/// order, without entropy coding. For inspection only.
pub fn ubg_plain_sizes(adj: &BinaryAdjacency) -> Result<Bitstream> {
    let model = EdgeModel::binary(1, 1)?;
    match encode_with(adj, &model, Sink::Plain(BitWriter::new()), None)? {
        Sink::Plain(w) => Ok(w.finish()),
        Sink::Arith(_) => unreachable!("sink kind is preserved"),
    }
}

/// Rebuilds a representative of the encoded graph's isomorphism class.
pub fn ubg_decode(stream: &Bitstream, model: &EdgeModel, n: usize) -> Result<BinaryAdjacency> {
    if model.m() != 1 {
        return Err(Error::InvalidModel("graph codec needs a binary model".into()));
    }
    let mut reader = stream.reader();
    let got = elias_decode(&mut reader)?;
    if got != n as u64 || got == 0 || got > MAX_DECODED_N {
        return Err(Error::Inconsistent(format!(
            "stream holds a graph with {got} nodes per side, expected {n}"
        )));
    }
    let mut dec = ArithDecoder::new(reader);
    let mut splitter = DecodeSplitter {
        dec: &mut dec,
        num: model.counts()[1],
        den: model.total(),
    };
    let g = run_engine(&[n, n], true, &mut splitter, None)?;
    dec.check_consistent()?;
    Ok(BinaryAdjacency::from_layered(&g))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&v| v > p[i]).expect("exists past i");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Exhaustive check for row and column permutations taking `a` to `b`.
pub fn bipartite_iso(a: &BinaryAdjacency, b: &BinaryAdjacency) -> Result<bool> {
    let n = a.n;
    if n > MAX_ISO_N || b.n > MAX_ISO_N {
        return Err(Error::Unsupported(format!(
            "exhaustive search is limited to N <= {MAX_ISO_N}"
        )));
    }
    if b.n != n || a.degree_multisets() != b.degree_multisets() {
        return Ok(false);
    }
    let column = |g: &BinaryAdjacency, order: &[usize], c: usize| -> u16 {
        order
            .iter()
            .enumerate()
            .fold(0u16, |acc, (k, &r)| acc | ((g.get(r, c) as u16) << k))
    };
    let identity: Vec<usize> = (0..n).collect();
    let mut want: Vec<u16> = (0..n).map(|c| column(b, &identity, c)).collect();
    want.sort_unstable();
    let mut perm = identity;
    loop {
        let mut cols: Vec<u16> = (0..n).map(|c| column(a, &perm, c)).collect();
        cols.sort_unstable();
        if cols == want {
            return Ok(true);
        }
        if !next_permutation(&mut perm) {
            return Ok(false);
        }
    }
}
