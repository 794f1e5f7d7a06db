use crate::{Error, Result};

/// An owned, MSB-first packed bit sequence with an exact bit length.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl Bitstream {
    /// Wraps packed bytes. Bits past `bit_len` in the last byte must be zero.
    pub fn from_bytes(bytes: Vec<u8>, bit_len: u64) -> Result<Self> {
        if bit_len.div_ceil(8) != bytes.len() as u64 {
            return Err(Error::Format(format!(
                "{} payload bytes cannot hold exactly {bit_len} bits",
                bytes.len()
            )));
        }
        let tail = bit_len % 8;
        if tail != 0 {
            let last = bytes[bytes.len() - 1];
            if last & (0xFFu8 >> tail) != 0 {
                return Err(Error::Format("nonzero padding bits".into()));
            }
        }
        Ok(Self { bytes, bit_len })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader::new(&self.bytes, self.bit_len)
    }

    /// Renders the stream as a string of `0`/`1` characters.
    pub fn to_bit_string(&self) -> String {
        let mut r = self.reader();
        (0..self.bit_len)
            .map(|_| if r.read_bit().unwrap() { '1' } else { '0' })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn write_bit(&mut self, bit: bool) {
        let shift = 7 - (self.bit_len % 8) as u8;
        if shift == 7 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << shift;
        }
        self.bit_len += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn finish(self) -> Bitstream {
        Bitstream {
            bytes: self.bytes,
            bit_len: self.bit_len,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
    overrun: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        debug_assert!(bit_len <= bytes.len() as u64 * 8);
        Self {
            bytes,
            bit_len,
            pos: 0,
            overrun: 0,
        }
    }

    /// Next bit, or `None` at the end of the stream.
    #[inline]
    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.bit_len {
            return None;
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1 == 1;
        self.pos += 1;
        Some(bit)
    }

    /// Next bit, reading zeros past the end. Overrun bits are counted.
    #[inline]
    pub fn read_bit_padded(&mut self) -> bool {
        match self.read_bit() {
            Some(b) => b,
            None => {
                self.overrun += 1;
                false
            }
        }
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            let bit = self
                .read_bit()
                .ok_or_else(|| Error::Truncated(format!("needed {width} bits at offset {}", self.pos)))?;
            v = (v << 1) | bit as u64;
        }
        Ok(v)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bit_len - self.pos
    }

    /// Number of zero bits synthesised past the end.
    pub fn overrun(&self) -> u64 {
        self.overrun
    }
}
