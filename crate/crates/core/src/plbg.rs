//! Codec for partially-labeled bipartite graphs.
//!
//! A layer's rows form a multiset, so only the multiset is stored. Sorting
//! the rows canonically turns the multiset into an `(m+1)`-ary count tree: a
//! node at depth `d` counts the rows that share a color prefix of length `d`,
//! and its children split that count by the color in column `d`. The root
//! count `N` is written with Elias gamma; every nonzero node's children are
//! arithmetic-coded breadth first, left to right, as a chain of binomials
//! (`child_i ~ Binomial(remaining, p_i / (p_i + ... + p_m))`) whose product is
//! the multinomial pmf. The last child of each node is implied.

use std::collections::{BTreeMap, VecDeque};

use crate::bounds::log2_factorial;
use crate::coder::{
    binomial_table, elias_decode, elias_encode, elias_len, ArithDecoder, ArithEncoder, BitWriter, Bitstream,
    FrequencyTable,
};
use crate::model::{canonical_sort_rows, ColorMatrix, EdgeModel};
use crate::{Error, Result};

/// Largest row count accepted from an untrusted stream.
pub const MAX_DECODED_CELLS: u64 = 1 << 31;

/// Builds the conditional tables for splitting a node among colors.
#[derive(Debug, Clone)]
pub struct ChildModel {
    counts: Vec<u64>,
    suffix: Vec<u64>,
}

impl ChildModel {
    pub fn new(model: &EdgeModel) -> Self {
        Self {
            counts: model.counts().to_vec(),
            suffix: model.suffix_totals(),
        }
    }

    /// Number of colors, `m + 1`.
    pub fn colors(&self) -> usize {
        self.counts.len()
    }

    /// Table for the count of color `color` among `remaining` rows whose
    /// colors are all `>= color`. Only valid for `color < m`.
    pub fn table(&self, color: usize, remaining: usize) -> Result<FrequencyTable> {
        let den = self.suffix[color];
        if den == 0 {
            return Err(Error::Inconsistent(format!(
                "{remaining} rows left for colors >= {color}, which all have zero probability"
            )));
        }
        binomial_table(remaining, self.counts[color], den)
    }

    pub fn encode_children(&self, enc: &mut ArithEncoder, children: &[usize]) -> Result<()> {
        let mut remaining: usize = children.iter().sum();
        for (color, &c) in children.iter().enumerate().take(self.colors() - 1) {
            if remaining == 0 {
                break;
            }
            let table = self.table(color, remaining)?;
            enc.encode(&table, c)?;
            remaining -= c;
        }
        Ok(())
    }

    /// Decodes the `m + 1` children of a node with `value` rows into `out`.
    pub fn decode_children(&self, dec: &mut ArithDecoder<'_>, value: usize, out: &mut Vec<usize>) -> Result<()> {
        out.clear();
        let mut remaining = value;
        for color in 0..self.colors() - 1 {
            let c = if remaining == 0 {
                0
            } else {
                dec.decode(&self.table(color, remaining)?)?
            };
            remaining -= c;
            out.push(c);
        }
        out.push(remaining);
        Ok(())
    }
}

/// Values of the count tree, level by level.
///
/// `levels[d]` lists the children of every nonzero node at depth `d`, in
/// breadth-first order, `m + 1` entries per parent (zeros included).
/// `levels[0]` is just the root `[N]`.
pub fn count_tree_levels(matrix: &ColorMatrix) -> Vec<Vec<usize>> {
    let (sorted, _) = canonical_sort_rows(matrix);
    let colors = sorted.m() as usize + 1;
    let mut levels = vec![vec![sorted.rows()]];
    let mut ranges = vec![(0usize, sorted.rows())];
    for depth in 0..sorted.cols() {
        let mut level = Vec::new();
        let mut next = Vec::new();
        for &(start, len) in &ranges {
            let mut children = vec![0usize; colors];
            for r in start..start + len {
                children[sorted.get(r, depth) as usize] += 1;
            }
            let mut s = start;
            for &c in &children {
                if c > 0 {
                    next.push((s, c));
                }
                s += c;
            }
            level.extend_from_slice(&children);
        }
        levels.push(level);
        ranges = next;
    }
    levels
}

/// Compresses the row multiset of `matrix`.
pub fn plbg_encode(matrix: &ColorMatrix, model: &EdgeModel) -> Result<Bitstream> {
    model.check_covers(matrix)?;
    let (sorted, _) = canonical_sort_rows(matrix);
    encode_sorted(&sorted, model)
}

/// Encodes a matrix whose rows are already in canonical order.
pub(crate) fn encode_sorted(sorted: &ColorMatrix, model: &EdgeModel) -> Result<Bitstream> {
    let children_model = ChildModel::new(model);
    let colors = children_model.colors();
    let mut w = BitWriter::new();
    elias_encode(&mut w, sorted.rows() as u64);
    let mut enc = ArithEncoder::new(w);

    let mut queue = VecDeque::from([(0usize, sorted.rows(), 0usize)]);
    let mut children = vec![0usize; colors];
    while let Some((start, len, depth)) = queue.pop_front() {
        if depth == sorted.cols() {
            continue;
        }
        children.iter_mut().for_each(|c| *c = 0);
        for r in start..start + len {
            children[sorted.get(r, depth) as usize] += 1;
        }
        children_model.encode_children(&mut enc, &children)?;
        let mut s = start;
        for &c in &children {
            if c > 0 {
                queue.push_back((s, c, depth + 1));
            }
            s += c;
        }
    }
    Ok(enc.finish().finish())
}

/// Reconstructs the canonical-order matrix from a stream.
pub fn plbg_decode(stream: &Bitstream, model: &EdgeModel, cols: usize) -> Result<ColorMatrix> {
    plbg_decode_checked(stream, model, cols, None)
}

/// Like [`plbg_decode`], but fails unless the stream's row count is `rows`.
pub fn plbg_decode_checked(
    stream: &Bitstream,
    model: &EdgeModel,
    cols: usize,
    rows: Option<usize>,
) -> Result<ColorMatrix> {
    if cols == 0 {
        return Err(Error::InvalidMatrix("cols must be positive".into()));
    }
    let mut reader = stream.reader();
    let n = elias_decode(&mut reader)?;
    if n == 0 || n.saturating_mul(cols as u64) > MAX_DECODED_CELLS {
        return Err(Error::Inconsistent(format!("implausible row count {n}")));
    }
    let n = n as usize;
    if let Some(expected) = rows {
        if n != expected {
            return Err(Error::Inconsistent(format!("stream has {n} rows, expected {expected}")));
        }
    }
    let children_model = ChildModel::new(model);
    let mut dec = ArithDecoder::new(reader);
    let mut cells = vec![0u16; n * cols];
    let mut queue = VecDeque::from([(0usize, n, 0usize)]);
    let mut children = Vec::with_capacity(children_model.colors());
    while let Some((start, len, depth)) = queue.pop_front() {
        if depth == cols {
            continue;
        }
        children_model.decode_children(&mut dec, len, &mut children)?;
        let mut s = start;
        for (color, &c) in children.iter().enumerate() {
            for r in s..s + c {
                cells[r * cols + depth] = color as u16;
            }
            if c > 0 {
                queue.push_back((s, c, depth + 1));
            }
            s += c;
        }
    }
    dec.check_consistent()?;
    ColorMatrix::new(n, cols, model.m(), cells)
}

/// Bits of the stream after the Elias-coded row count.
pub fn arithmetic_payload_bits(stream: &Bitstream) -> Result<u64> {
    let n = elias_decode(&mut stream.reader())?;
    Ok(stream.bit_len() - elias_len(n) as u64)
}

/// Distinct rows of a matrix with multiplicities and log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MultisetStats {
    /// `(row, multiplicity, log2 of the row probability)`, rows ascending.
    pub entries: Vec<(Vec<u16>, usize, f64)>,
    pub n: usize,
}

impl MultisetStats {
    pub fn compute(matrix: &ColorMatrix, model: &EdgeModel) -> Result<Self> {
        model.check_covers(matrix)?;
        let log_p: Vec<f64> = model.probabilities().iter().map(|p| p.log2()).collect();
        let mut counts: BTreeMap<&[u16], usize> = BTreeMap::new();
        for r in 0..matrix.rows() {
            *counts.entry(matrix.row(r)).or_default() += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(row, k)| {
                let lp = row.iter().map(|&c| log_p[c as usize]).sum();
                (row.to_vec(), k, lp)
            })
            .collect();
        Ok(Self {
            entries,
            n: matrix.rows(),
        })
    }

    /// `sum_i log2(k_i!)` over the distinct rows.
    pub fn log2_multiplicity_factorials(&self) -> f64 {
        self.entries.iter().map(|(_, k, _)| log2_factorial(*k as u64)).sum()
    }

    /// `-log2` of the multiset probability `N!/prod k_i! * prod pi_i^k_i`.
    pub fn neg_log2_prob(&self) -> f64 {
        let rows: f64 = self.entries.iter().map(|(_, k, lp)| *k as f64 * lp).sum();
        -log2_factorial(self.n as u64) + self.log2_multiplicity_factorials() - rows
    }
}

/// Ideal code length of the row multiset under `model`, in bits.
pub fn multiset_log_prob(matrix: &ColorMatrix, model: &EdgeModel) -> Result<f64> {
    Ok(MultisetStats::compute(matrix, model)?.neg_log2_prob())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coder::TERMINATION_BUDGET_BITS;
    use crate::model::{empirical_model, RowPermutation};
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half() -> EdgeModel {
        EdgeModel::binary(1, 1).unwrap()
    }

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, m: u16) -> ColorMatrix {
        let cells = (0..rows * cols).map(|_| rng.gen_range(0..=m)).collect();
        ColorMatrix::new(rows, cols, m, cells).unwrap()
    }

    /// Exhaustive oracle: probability of a row multiset, summing over every
    /// labeled matrix whose rows form that multiset.
    fn enumerate_multiset_prob(target: &ColorMatrix, probs: &[f64]) -> f64 {
        let (n, m_cols, colors) = (target.rows(), target.cols(), probs.len());
        let cells = n * m_cols;
        let want = target.sorted_rows();
        let mut total = 0.0;
        let mut assignment = vec![0usize; cells];
        loop {
            let rows: Vec<Vec<u16>> = assignment
                .chunks(m_cols)
                .map(|r| r.iter().map(|&c| c as u16).collect())
                .collect();
            let mut sorted = rows.clone();
            sorted.sort();
            if sorted == want {
                total += assignment.iter().map(|&c| probs[c]).product::<f64>();
            }
            let mut i = 0;
            loop {
                if i == cells {
                    return total;
                }
                assignment[i] += 1;
                if assignment[i] < colors {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn smallest_instance() {
        let w = ColorMatrix::from_rows(&[[0]], 1).unwrap();
        let s = plbg_encode(&w, &half()).unwrap();
        assert!(s.to_bit_string().starts_with("010"));
        assert_eq!(plbg_decode(&s, &half(), 1).unwrap(), w);
    }

    #[test]
    fn two_row_examples_match_enumeration() {
        let mixed = ColorMatrix::from_rows(&[[1], [0]], 1).unwrap();
        let same = ColorMatrix::from_rows(&[[1], [1]], 1).unwrap();
        for (w, bits) in [(&mixed, 1.0), (&same, 2.0)] {
            let exact = -enumerate_multiset_prob(w, &[0.5, 0.5]).log2();
            assert!((exact - bits).abs() < 1e-12);
            assert!((multiset_log_prob(w, &half()).unwrap() - bits).abs() < 1e-12);
            let payload = arithmetic_payload_bits(&plbg_encode(w, &half()).unwrap()).unwrap();
            assert!(payload as f64 <= bits + TERMINATION_BUDGET_BITS);
        }
    }

    #[test]
    fn log_prob_matches_enumeration_on_small_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = EdgeModel::new(vec![3, 2, 1]).unwrap();
        let probs = model.probabilities();
        for _ in 0..40 {
            let rows = rng.gen_range(1..=3);
            let cols = rng.gen_range(1..=2);
            let w = random_matrix(&mut rng, rows, cols, 2);
            let exact = -enumerate_multiset_prob(&w, &probs).log2();
            let got = multiset_log_prob(&w, &model).unwrap();
            assert!((exact - got).abs() < 1e-9, "{exact} vs {got}");
        }
    }

    #[test]
    fn single_row_uniform_costs_full_entropy() {
        let w = ColorMatrix::from_rows(&[[3, 0, 1, 2, 2]], 3).unwrap();
        let bits = multiset_log_prob(&w, &EdgeModel::uniform(3)).unwrap();
        assert!((bits - 5.0 * 4f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn decode_returns_canonical_order() {
        let sorted = ColorMatrix::from_rows(&[[0], [1]], 1).unwrap();
        let reversed = ColorMatrix::from_rows(&[[1], [0]], 1).unwrap();
        for w in [&sorted, &reversed] {
            let s = plbg_encode(w, &half()).unwrap();
            assert_eq!(plbg_decode(&s, &half(), 1).unwrap(), sorted);
        }
    }

    #[test]
    fn random_round_trips_preserve_row_multiset() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let w = random_matrix(&mut rng, 8, 8, 4);
            let model = empirical_model(&w);
            let s = plbg_encode(&w, &model).unwrap();
            let d = plbg_decode(&s, &model, 8).unwrap();
            assert_eq!(d.sorted_rows(), w.sorted_rows());
        }
    }

    #[test]
    fn rejects_model_mismatch() {
        let w = ColorMatrix::from_rows(&[[1, 2]], 2).unwrap();
        let model = EdgeModel::new(vec![1, 1, 0]).unwrap();
        assert_eq!(plbg_encode(&w, &model), Err(Error::ModelMismatch { color: 2 }));
        assert!(multiset_log_prob(&w, &model).is_err());
    }

    #[test]
    fn corrupt_streams_do_not_panic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_matrix(&mut rng, 6, 5, 3);
        let model = empirical_model(&w);
        let s = plbg_encode(&w, &model).unwrap();
        for cut in 0..s.bit_len() {
            let bytes = s.bytes()[..cut.div_ceil(8) as usize].to_vec();
            let mut bytes = bytes;
            if cut % 8 != 0 {
                let last = bytes.len() - 1;
                bytes[last] &= 0xFFu8 << (8 - cut % 8);
            }
            let t = Bitstream::from_bytes(bytes, cut).unwrap();
            let _ = plbg_decode(&t, &model, 5);
        }
        for _ in 0..200 {
            let bytes: Vec<u8> = (0..16).map(|_| rng.gen()).collect();
            let t = Bitstream::from_bytes(bytes, 128).unwrap();
            let _ = plbg_decode(&t, &model, 5);
        }
    }

    #[test]
    fn tree_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = random_matrix(&mut rng, 10, 4, 2);
            let levels = count_tree_levels(&w);
            let colors = 3;
            for d in 1..levels.len() {
                let parents: Vec<usize> = levels[d - 1].iter().copied().filter(|&v| v > 0).collect();
                assert_eq!(levels[d].len(), parents.len() * colors);
                for (p, chunk) in parents.iter().zip(levels[d].chunks(colors)) {
                    assert_eq!(chunk.iter().sum::<usize>(), *p);
                }
            }
            let mut leaves: Vec<usize> = levels[w.cols()].iter().copied().filter(|&v| v > 0).collect();
            let mut mult: Vec<usize> = MultisetStats::compute(&w, &empirical_model(&w))
                .unwrap()
                .entries
                .iter()
                .map(|e| e.1)
                .collect();
            leaves.sort();
            mult.sort();
            assert_eq!(leaves, mult);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn encoding_ignores_row_order(rows in 1usize..12, cols in 1usize..8, m in 1u16..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_matrix(&mut rng, rows, cols, m);
            let model = empirical_model(&w);
            let mut order: Vec<usize> = (0..rows).collect();
            order.shuffle(&mut rng);
            let shuffled = w.permute_rows(&RowPermutation::new(order).unwrap()).unwrap();
            let a = plbg_encode(&w, &model).unwrap();
            let b = plbg_encode(&shuffled, &model).unwrap();
            prop_assert_eq!(&a, &b);
            let d = plbg_decode(&a, &model, cols).unwrap();
            prop_assert_eq!(d.sorted_rows(), w.sorted_rows());
            let payload = arithmetic_payload_bits(&a).unwrap() as f64;
            prop_assert!(payload <= multiset_log_prob(&w, &model).unwrap() + TERMINATION_BUDGET_BITS);
        }
    }
}
