//! Bit-level entropy coding primitives.
//!
//! Streams are packed MSB-first into bytes; the final partial byte is
//! zero-padded and the exact length is tracked in bits.

mod arith;
mod bits;
mod elias;
mod table;

pub use arith::{ArithDecoder, ArithEncoder, TERMINATION_BUDGET_BITS};
pub use bits::{BitReader, BitWriter, Bitstream};
pub use elias::{elias_decode, elias_encode, elias_len};
pub use table::{binomial_table, FrequencyTable, TABLE_TOTAL};
