//! Elias gamma code shifted by one so that zero is representable:
//! `x` is written as the gamma code of `x + 1`.

use super::{BitReader, BitWriter};
use crate::{Error, Result};

/// Code length in bits: `2 * floor(log2(x + 1)) + 1`.
pub fn elias_len(x: u64) -> u32 {
    let v = x as u128 + 1;
    2 * (127 - v.leading_zeros()) + 1
}

pub fn elias_encode(w: &mut BitWriter, x: u64) {
    let v = x as u128 + 1;
    let nbits = 128 - v.leading_zeros();
    for _ in 0..nbits - 1 {
        w.write_bit(false);
    }
    for i in (0..nbits).rev() {
        w.write_bit((v >> i) & 1 == 1);
    }
}

pub fn elias_decode(r: &mut BitReader<'_>) -> Result<u64> {
    let mut zeros = 0u32;
    loop {
        match r.read_bit() {
            Some(true) => break,
            Some(false) => {
                zeros += 1;
                if zeros > 64 {
                    return Err(Error::Inconsistent("Elias gamma prefix longer than 64 bits".into()));
                }
            }
            None => return Err(Error::Truncated("Elias gamma code".into())),
        }
    }
    let mut v: u128 = 1;
    for _ in 0..zeros {
        let bit = r
            .read_bit()
            .ok_or_else(|| Error::Truncated("Elias gamma code".into()))?;
        v = (v << 1) | bit as u128;
    }
    u64::try_from(v - 1).map_err(|_| Error::Inconsistent("Elias gamma value exceeds u64".into()))
}
