//! Alternating selection and division over the node layers of a graph.
//!
//! Every layer keeps an ordered list of classes of not-yet-selected nodes,
//! the leaves of its binary tree. Each step selects the first node of the
//! leftmost class of one layer, then divides every class of the neighboring
//! layers into nodes on either side of that node's adjacency. Division sizes
//! are the only coded values; the decoder mirrors the class lists by
//! position and places the first `left` members of each class on the left.

use super::canon::Layered;
use super::{TreeEvent, TreeTrace};
use crate::coder::{binomial_table, ArithDecoder, ArithEncoder, BitWriter};
use crate::Result;

/// Supplies the left size of each division.
pub(crate) trait Splitter {
    /// `slots` are the members of one class of `layer`, split by adjacency to
    /// node `sel` of layer `sel_layer`.
    fn split(&mut self, layer: usize, slots: &[usize], sel_layer: usize, sel: usize) -> Result<usize>;
}

fn set_edge(g: &mut Layered, a_layer: usize, a: usize, b_layer: usize, b: usize, value: bool) {
    let value = value as u16;
    let (l, upper, lower) = if a_layer < b_layer {
        (a_layer, b, a)
    } else {
        (b_layer, a, b)
    };
    let w = g.widths[l];
    g.links[l][upper * w + lower] = value;
}

fn get_edge(g: &Layered, a_layer: usize, a: usize, b_layer: usize, b: usize) -> bool {
    let e = if a_layer < b_layer {
        g.edge(a_layer, b, a)
    } else {
        g.edge(b_layer, a, b)
    };
    e != 0
}

/// Runs the division process; returns the graph in slot coordinates.
pub(crate) fn run<S: Splitter>(
    widths: &[usize],
    left_is_edge: bool,
    splitter: &mut S,
    mut trace: Option<&mut TreeTrace>,
) -> Result<Layered> {
    let layers = widths.len();
    let mut g = Layered {
        widths: widths.to_vec(),
        links: widths.windows(2).map(|w| vec![0; w[0] * w[1]]).collect(),
    };
    let mut classes: Vec<Vec<Vec<usize>>> = widths
        .iter()
        .map(|&w| if w > 0 { vec![(0..w).collect()] } else { Vec::new() })
        .collect();
    if let Some(t) = trace.as_deref_mut() {
        t.trees = vec![Vec::new(); layers];
    }
    while classes.iter().any(|c| !c.is_empty()) {
        for j in 0..layers {
            if classes[j].is_empty() {
                continue;
            }
            let before = classes[j][0].len();
            let sel = classes[j][0].remove(0);
            if classes[j][0].is_empty() {
                classes[j].remove(0);
            }
            if let Some(t) = trace.as_deref_mut() {
                t.trees[j].push(TreeEvent::Select { before });
            }
            let neighbors = [j.checked_sub(1), (j + 1 < layers).then_some(j + 1)];
            for k in neighbors.into_iter().flatten() {
                let mut next = Vec::with_capacity(classes[k].len() * 2);
                for class in std::mem::take(&mut classes[k]) {
                    let left = splitter.split(k, &class, j, sel)?;
                    let (l, r) = class.split_at(left);
                    for &s in l {
                        set_edge(&mut g, k, s, j, sel, left_is_edge);
                    }
                    for &s in r {
                        set_edge(&mut g, k, s, j, sel, !left_is_edge);
                    }
                    if let Some(t) = trace.as_deref_mut() {
                        t.trees[k].push(TreeEvent::Divide {
                            parent: class.len(),
                            left: l.len(),
                            right: r.len(),
                        });
                    }
                    next.extend([l.to_vec(), r.to_vec()].into_iter().filter(|c| !c.is_empty()));
                }
                classes[k] = next;
            }
        }
    }
    Ok(g)
}

/// Where the encoder writes division sizes.
pub(crate) enum Sink {
    Arith(ArithEncoder),
    /// Each size in `ceil(log2(n + 1))` plain bits.
    Plain(BitWriter),
}

/// Encoder side: knows the graph and keeps which node sits in each slot.
pub(crate) struct EncodeSplitter<'a> {
    pub graph: &'a Layered,
    /// `actual[l][slot]` is the node of `graph` held in `slot`.
    pub actual: Vec<Vec<usize>>,
    pub left_is_edge: bool,
    pub num: u64,
    pub den: u64,
    pub sink: Sink,
}

impl Splitter for EncodeSplitter<'_> {
    fn split(&mut self, layer: usize, slots: &[usize], sel_layer: usize, sel: usize) -> Result<usize> {
        let sel_node = self.actual[sel_layer][sel];
        let nodes: Vec<usize> = slots.iter().map(|&s| self.actual[layer][s]).collect();
        let (mut left, right): (Vec<usize>, Vec<usize>) = nodes
            .iter()
            .partition(|&&v| get_edge(self.graph, layer, v, sel_layer, sel_node) == self.left_is_edge);
        let count = left.len();
        left.extend(right);
        for (&s, v) in slots.iter().zip(left) {
            self.actual[layer][s] = v;
        }
        match &mut self.sink {
            Sink::Arith(enc) => enc.encode(&binomial_table(slots.len(), self.num, self.den)?, count)?,
            Sink::Plain(w) => w.write_bits(count as u64, plain_width(slots.len())),
        }
        Ok(count)
    }
}

pub(crate) fn plain_width(n: usize) -> u32 {
    usize::BITS - n.leading_zeros()
}

/// Decoder side.
pub(crate) struct DecodeSplitter<'a, 'b> {
    pub dec: &'a mut ArithDecoder<'b>,
    pub num: u64,
    pub den: u64,
}

impl Splitter for DecodeSplitter<'_, '_> {
    fn split(&mut self, _layer: usize, slots: &[usize], _sel_layer: usize, _sel: usize) -> Result<usize> {
        self.dec.decode(&binomial_table(slots.len(), self.num, self.den)?)
    }
}
