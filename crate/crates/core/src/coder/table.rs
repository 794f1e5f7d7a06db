use crate::{Error, Result};

/// Every quantized table sums to exactly this total.
pub const TABLE_TOTAL: u64 = 1 << 30;

/// Static frequency table over the contiguous symbols `base..base + len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    base: usize,
    cumulative: Vec<u64>,
}

impl FrequencyTable {
    /// Table over symbols `0..freqs.len()`.
    pub fn new(freqs: &[u64]) -> Result<Self> {
        Self::with_base(0, freqs)
    }

    pub fn with_base(base: usize, freqs: &[u64]) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::TableOverflow("table has no symbols".into()));
        }
        let mut cumulative = Vec::with_capacity(freqs.len() + 1);
        cumulative.push(0u64);
        let mut acc = 0u64;
        for (i, &f) in freqs.iter().enumerate() {
            if f == 0 {
                return Err(Error::TableOverflow(format!("symbol {} has zero frequency", base + i)));
            }
            acc = acc
                .checked_add(f)
                .filter(|&t| t <= super::arith::MAX_TABLE_TOTAL)
                .ok_or_else(|| Error::TableOverflow("total exceeds the coder range".into()))?;
            cumulative.push(acc);
        }
        Ok(Self { base, cumulative })
    }

    /// Table admitting only `symbol`; coding it costs no bits.
    pub fn single(symbol: usize) -> Self {
        Self {
            base: symbol,
            cumulative: vec![0, 1],
        }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn total(&self) -> u64 {
        *self.cumulative.last().unwrap()
    }

    pub fn freq(&self, symbol: usize) -> u64 {
        let i = symbol - self.base;
        self.cumulative[i + 1] - self.cumulative[i]
    }

    /// `(low, high)` cumulative bounds of `symbol`.
    #[inline]
    pub(crate) fn range(&self, symbol: usize) -> Result<(u64, u64)> {
        match symbol.checked_sub(self.base) {
            Some(i) if i < self.len() => Ok((self.cumulative[i], self.cumulative[i + 1])),
            _ => Err(Error::SymbolOutOfRange {
                symbol,
                len: self.base + self.len(),
            }),
        }
    }

    /// Symbol whose cumulative interval contains `value`.
    #[inline]
    pub(crate) fn lookup(&self, value: u64) -> usize {
        // partition_point over cumulative[1..]: first index with cum > value
        let i = self.cumulative[1..].partition_point(|&c| c <= value);
        self.base + i.min(self.len() - 1)
    }

    /// Ideal code length of `symbol` under this table.
    pub fn cost_bits(&self, symbol: usize) -> f64 {
        -((self.freq(symbol) as f64) / self.total() as f64).log2()
    }
}

/// Quantized Binomial(`n`, `num`/`den`) table over symbols `0..=n`.
///
/// The pmf is built with the multiplicative ratio recurrence outward from the
/// mode, normalised, scaled to [`TABLE_TOTAL`] and floored. Zero entries are
/// raised to 1 and the largest entry absorbs the difference so the total is
/// exact. Only IEEE-754 `+ * /` are used, so tables are bit-identical across
/// platforms. `num == 0` and `num == den` give single-symbol tables.
pub fn binomial_table(n: usize, num: u64, den: u64) -> Result<FrequencyTable> {
    if den == 0 || num > den {
        return Err(Error::InvalidModel(format!("probability {num}/{den} is not in [0, 1]")));
    }
    if num == 0 {
        return Ok(FrequencyTable::single(0));
    }
    if num == den {
        return Ok(FrequencyTable::single(n));
    }
    if n == 0 {
        return Ok(FrequencyTable::single(0));
    }
    if n as u64 + 1 > TABLE_TOTAL {
        return Err(Error::TableOverflow(format!("binomial with {n} trials")));
    }
    let freqs = binomial_freqs(n, num, den);
    FrequencyTable::new(&freqs)
}

fn binomial_freqs(n: usize, num: u64, den: u64) -> Vec<u64> {
    let odds = num as f64 / (den - num) as f64;
    let mode = ((n as u128 + 1) * num as u128 / den as u128).min(n as u128) as usize;

    let mut w = vec![0f64; n + 1];
    w[mode] = 1.0;
    for k in mode..n {
        // P(k+1)/P(k) = (n-k)/(k+1) * p/q
        w[k + 1] = w[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
    }
    for k in (0..mode).rev() {
        // P(k)/P(k+1) = (k+1)/(n-k) * q/p
        w[k] = w[k + 1] * ((k + 1) as f64 / (n - k) as f64) / odds;
    }
    let sum: f64 = w.iter().sum();
    let scale = TABLE_TOTAL as f64 / sum;

    let mut freqs: Vec<u64> = w.iter().map(|&x| ((x * scale) as u64).max(1)).collect();
    let largest = (0..freqs.len())
        .max_by(|&a, &b| freqs[a].cmp(&freqs[b]).then(b.cmp(&a)))
        .unwrap();
    let current: u64 = freqs.iter().sum();
    freqs[largest] = (freqs[largest] + TABLE_TOTAL) - current;
    freqs
}
