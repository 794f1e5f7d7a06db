//! Static binary arithmetic coder with 62-bit state registers.
//!
//! Interval bounds live in `u64` registers; products are formed in `u128`.
//! Carries are resolved with the usual pending-bit (underflow) counter: when
//! the interval straddles the midpoint within the middle half, the next
//! output bit is undecided and is emitted later with its complement run.
//! Termination writes a single `1` bit (plus any pending bits); the decoder
//! reads zeros past the end of the stream.

use super::{BitReader, BitWriter, FrequencyTable};
use crate::{Error, Result};

const STATE_BITS: u32 = 62;
const FULL: u64 = 1 << STATE_BITS;
const HALF: u64 = FULL >> 1;
const QUARTER: u64 = HALF >> 1;
const MASK: u64 = FULL - 1;

/// Largest table total the coder accepts (the minimum interval width).
pub(crate) const MAX_TABLE_TOTAL: u64 = QUARTER + 2;

/// Upper bound on the bits a stream costs beyond the sum of its ideal
/// per-symbol code lengths (termination plus finite-precision loss).
pub const TERMINATION_BUDGET_BITS: f64 = 64.0;

#[derive(Debug)]
pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl ArithEncoder {
    /// Starts a fresh arithmetic segment appended to `out`.
    pub fn new(out: BitWriter) -> Self {
        Self {
            low: 0,
            high: MASK,
            pending: 0,
            out,
        }
    }

    pub fn encode(&mut self, table: &FrequencyTable, symbol: usize) -> Result<()> {
        let (sym_low, sym_high) = table.range(symbol)?;
        if table.len() == 1 {
            return Ok(());
        }
        let total = table.total() as u128;
        let range = (self.high - self.low) as u128 + 1;
        let new_low = self.low + (range * sym_low as u128 / total) as u64;
        let new_high = self.low + (range * sym_high as u128 / total) as u64 - 1;
        self.low = new_low;
        self.high = new_high;

        while (self.low ^ self.high) & HALF == 0 {
            self.shift();
            self.low = (self.low << 1) & MASK;
            self.high = ((self.high << 1) & MASK) | 1;
        }
        while self.low & !self.high & QUARTER != 0 {
            self.pending += 1;
            self.low = (self.low << 1) ^ HALF;
            self.high = ((self.high ^ HALF) << 1) | HALF | 1;
        }
        Ok(())
    }

    fn shift(&mut self) {
        let bit = self.low >> (STATE_BITS - 1) == 1;
        self.out.write_bit(bit);
        for _ in 0..self.pending {
            self.out.write_bit(!bit);
        }
        self.pending = 0;
    }

    /// Bits emitted so far (excluding pending and termination bits).
    pub fn bits_written(&self) -> u64 {
        self.out.bit_len()
    }

    pub fn finish(mut self) -> BitWriter {
        self.out.write_bit(true);
        for _ in 0..self.pending {
            self.out.write_bit(false);
        }
        self.out
    }
}

#[derive(Debug)]
pub struct ArithDecoder<'a> {
    low: u64,
    high: u64,
    code: u64,
    input: BitReader<'a>,
}

impl<'a> ArithDecoder<'a> {
    /// Starts decoding an arithmetic segment at the reader's position.
    pub fn new(mut input: BitReader<'a>) -> Self {
        let mut code = 0u64;
        for _ in 0..STATE_BITS {
            code = (code << 1) | input.read_bit_padded() as u64;
        }
        Self {
            low: 0,
            high: MASK,
            code,
            input,
        }
    }

    pub fn decode(&mut self, table: &FrequencyTable) -> Result<usize> {
        if table.len() == 1 {
            return Ok(table.base());
        }
        self.check_consistent()?;
        let total = table.total() as u128;
        let range = (self.high - self.low) as u128 + 1;
        if self.code < self.low || self.code > self.high {
            return Err(Error::Inconsistent("arithmetic decoder left its interval".into()));
        }
        let offset = (self.code - self.low) as u128;
        let value = ((offset + 1) * total - 1) / range;
        let symbol = table.lookup(value as u64);
        let (sym_low, sym_high) = table.range(symbol)?;
        let new_low = self.low + (range * sym_low as u128 / total) as u64;
        let new_high = self.low + (range * sym_high as u128 / total) as u64 - 1;
        self.low = new_low;
        self.high = new_high;

        while (self.low ^ self.high) & HALF == 0 {
            self.code = ((self.code << 1) & MASK) | self.input.read_bit_padded() as u64;
            self.low = (self.low << 1) & MASK;
            self.high = ((self.high << 1) & MASK) | 1;
        }
        while self.low & !self.high & QUARTER != 0 {
            self.code = (self.code & HALF) | ((self.code << 1) & (MASK >> 1)) | self.input.read_bit_padded() as u64;
            self.low = (self.low << 1) ^ HALF;
            self.high = ((self.high ^ HALF) << 1) | HALF | 1;
        }
        Ok(symbol)
    }

    /// Zero bits read past the end of the stream so far.
    pub fn overrun(&self) -> u64 {
        self.input.overrun()
    }

    /// Fails if the decoder consumed more padding than any valid stream needs.
    pub fn check_consistent(&self) -> Result<()> {
        if self.input.overrun() > STATE_BITS as u64 {
            return Err(Error::Truncated(format!(
                "arithmetic decoder read {} bits past the end",
                self.input.overrun()
            )));
        }
        Ok(())
    }
}
