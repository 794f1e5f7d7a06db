//! Core data types shared by every codec.
//!
//! A layer is viewed as a [`ColorMatrix`]: rows are the unlabeled destination
//! nodes, columns the labeled source nodes, and each cell holds an edge color
//! in `0..=m` (color 0 means "no edge"). Because the rows of such a matrix form
//! a multiset, every codec works against the *canonical* row order: ascending
//! lexicographic order of the color sequences with color 0 smallest.

use std::cmp::Ordering;

use crate::{Error, Result};

/// Rows x cols matrix of edge colors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorMatrix {
    rows: usize,
    cols: usize,
    m: u16,
    cells: Vec<u16>,
}

impl ColorMatrix {
    /// Builds a matrix from row-major cells. `m` is the number of nonzero colors.
    pub fn new(rows: usize, cols: usize, m: u16, cells: Vec<u16>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidMatrix("m must be at least 1".into()));
        }
        if cells.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: cells.len(),
            });
        }
        if let Some(&c) = cells.iter().find(|&&c| c > m) {
            return Err(Error::InvalidMatrix(format!("color {c} exceeds m = {m}")));
        }
        Ok(Self { rows, cols, m, cells })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[u16]>>(rows: &[R], m: u16) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            cells.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, m, cells)
    }

    pub fn zeros(rows: usize, cols: usize, m: u16) -> Result<Self> {
        Self::new(rows, cols, m, vec![0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of nonzero colors.
    pub fn m(&self) -> u16 {
        self.m
    }

    pub fn cells(&self) -> &[u16] {
        &self.cells
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> u16 {
        self.cells[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<u16> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Row multiset as a sorted list of rows.
    pub fn sorted_rows(&self) -> Vec<Vec<u16>> {
        let mut rows: Vec<Vec<u16>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        rows.sort();
        rows
    }

    /// Returns the matrix whose row `perm.apply(i)` is row `i` of `self`.
    pub fn permute_rows(&self, perm: &RowPermutation) -> Result<Self> {
        if perm.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: perm.len(),
            });
        }
        let mut cells = vec![0u16; self.cells.len()];
        for r in 0..self.rows {
            let dst = perm.apply(r);
            cells[dst * self.cols..(dst + 1) * self.cols].copy_from_slice(self.row(r));
        }
        Ok(Self { cells, ..self.clone() })
    }

    /// Returns the matrix whose column `perm.apply(i)` is column `i` of `self`.
    pub fn permute_cols(&self, perm: &RowPermutation) -> Result<Self> {
        if perm.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: perm.len(),
            });
        }
        let mut cells = vec![0u16; self.cells.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                cells[r * self.cols + perm.apply(c)] = self.get(r, c);
            }
        }
        Ok(Self { cells, ..self.clone() })
    }

    /// Bytes per cell in raw storage.
    pub fn raw_cell_width(m: u16) -> usize {
        if m < 256 {
            1
        } else {
            2
        }
    }
}

/// Bijection on `0..n` mapping an original index to its new position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RowPermutation {
    perm: Vec<usize>,
}

impl RowPermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidMatrix(format!("not a permutation of 0..{}", perm.len())));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// New position of original index `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { perm: inv }
    }

    /// Reorders `values` so that `out[self.apply(i)] = values[i]`.
    pub fn permute<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        for (i, v) in values.iter().enumerate() {
            out[self.perm[i]] = v.clone();
        }
        out
    }
}

/// Sorts rows into canonical (ascending lexicographic) order.
///
/// The returned permutation maps each input row index to its output position.
/// Equal rows keep their input order.
pub fn canonical_sort_rows(matrix: &ColorMatrix) -> (ColorMatrix, RowPermutation) {
    canonical_sort_rows_by(matrix, |_, _| Ordering::Equal)
}

/// Canonical sort where equal rows are ordered by `tie_break(a, b)` on their
/// original indices.
pub fn canonical_sort_rows_by<F>(matrix: &ColorMatrix, mut tie_break: F) -> (ColorMatrix, RowPermutation)
where
    F: FnMut(usize, usize) -> Ordering,
{
    let mut order: Vec<usize> = (0..matrix.rows()).collect();
    order.sort_by(|&a, &b| matrix.row(a).cmp(matrix.row(b)).then_with(|| tie_break(a, b)));
    let mut perm = vec![0; order.len()];
    for (pos, &orig) in order.iter().enumerate() {
        perm[orig] = pos;
    }
    let perm = RowPermutation { perm };
    let sorted = matrix
        .permute_rows(&perm)
        .expect("permutation length matches row count");
    (sorted, perm)
}

/// Color probabilities stored as exact integer counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeModel {
    counts: Vec<u64>,
    total: u64,
}

impl EdgeModel {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidModel(
                "a model needs at least two colors (0 and 1)".into(),
            ));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::InvalidModel("count total overflows u64".into()))?;
        if total == 0 {
            return Err(Error::InvalidModel("count total must be positive".into()));
        }
        Ok(Self { counts, total })
    }

    /// Binary model with `P(edge) = ones / (zeros + ones)`.
    pub fn binary(zeros: u64, ones: u64) -> Result<Self> {
        Self::new(vec![zeros, ones])
    }

    /// Uniform model over `m + 1` colors.
    pub fn uniform(m: u16) -> Self {
        Self {
            counts: vec![1; m as usize + 1],
            total: m as u64 + 1,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of nonzero colors.
    pub fn m(&self) -> u16 {
        (self.counts.len() - 1) as u16
    }

    pub fn probability(&self, color: usize) -> f64 {
        self.counts[color] as f64 / self.total as f64
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.probability(i)).collect()
    }

    /// `suffix[i] = counts[i] + ... + counts[m]`, with a trailing zero.
    pub fn suffix_totals(&self) -> Vec<u64> {
        let mut suffix = vec![0u64; self.counts.len() + 1];
        for i in (0..self.counts.len()).rev() {
            suffix[i] = suffix[i + 1] + self.counts[i];
        }
        suffix
    }

    /// Fails if the matrix uses a color this model cannot represent.
    pub fn check_covers(&self, matrix: &ColorMatrix) -> Result<()> {
        if matrix.m() != self.m() {
            return Err(Error::InvalidModel(format!(
                "model has m = {}, matrix has m = {}",
                self.m(),
                matrix.m()
            )));
        }
        let mut seen = vec![false; self.counts.len()];
        for &c in matrix.cells() {
            seen[c as usize] = true;
        }
        match seen.iter().zip(&self.counts).position(|(&s, &count)| s && count == 0) {
            Some(color) => Err(Error::ModelMismatch { color }),
            None => Ok(()),
        }
    }
}

/// Counts each color's occurrences in the matrix.
pub fn empirical_model(matrix: &ColorMatrix) -> EdgeModel {
    let mut counts = vec![0u64; matrix.m() as usize + 1];
    for &c in matrix.cells() {
        counts[c as usize] += 1;
    }
    EdgeModel {
        total: (matrix.rows() * matrix.cols()) as u64,
        counts,
    }
}

/// Real weight for each color; color 0 is always weight 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    weights: Vec<f64>,
}

impl Codebook {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidModel("codebook needs at least two entries".into()));
        }
        if weights[0] != 0.0 {
            return Err(Error::InvalidModel("codebook entry 0 must be exactly 0".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidModel("codebook entries must be finite".into()));
        }
        Ok(Self { weights })
    }

    /// Nonzero levels of a uniform grid over `[-clip, clip]`, most negative
    /// first. With even `m` this is the grid of `m + 1` levels minus zero.
    pub fn uniform(m: u16, clip: f64) -> Self {
        let m = m as usize;
        let neg = m.div_ceil(2);
        let pos = m - neg;
        let step = clip / neg.max(pos).max(1) as f64;
        let mut weights = Vec::with_capacity(m + 1);
        weights.push(0.0);
        weights.extend((1..=neg).rev().map(|t| -step * t as f64));
        weights.extend((1..=pos).map(|t| step * t as f64));
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, color: usize) -> f64 {
        self.weights[color]
    }

    pub fn m(&self) -> u16 {
        (self.weights.len() - 1) as u16
    }
}
