//! The QNNC on-disk format.
//!
//! All integers are little-endian:
//!
//! ```text
//! "QNNC" | version u16 | mode u8 | K u16
//! per layer: rows u32 | cols u32 | m u16 | (m+1) x f64 codebook
//!            | (m+1) x u64 color counts | payload_bits u64 | payload bytes
//! ```
//!
//! Payload bytes are the bitstream zero-padded to a whole byte. Raw layers
//! hold one color per byte (two bytes when `m >= 256`), row-major.

use crate::coder::{elias_decode, Bitstream};
use crate::model::{empirical_model, Codebook, ColorMatrix, EdgeModel};
use crate::plbg::MAX_DECODED_CELLS;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"QNNC";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Raw = 0,
    Plbg = 1,
    Ktree = 2,
}

impl Mode {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Self::Raw),
            1 => Ok(Self::Plbg),
            2 => Ok(Self::Ktree),
            _ => Err(Error::Format(format!("unknown mode {b}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    pub codebook: Codebook,
    pub model: EdgeModel,
    pub payload: Bitstream,
}

impl LayerRecord {
    pub fn raw(matrix: &ColorMatrix, codebook: &Codebook) -> Self {
        let wide = ColorMatrix::raw_cell_width(matrix.m()) == 2;
        let bytes: Vec<u8> = if wide {
            matrix.cells().iter().flat_map(|c| c.to_le_bytes()).collect()
        } else {
            matrix.cells().iter().map(|&c| c as u8).collect()
        };
        let bits = bytes.len() as u64 * 8;
        Self {
            rows: matrix.rows(),
            cols: matrix.cols(),
            codebook: codebook.clone(),
            model: empirical_model(matrix),
            payload: Bitstream::from_bytes(bytes, bits).expect("whole bytes"),
        }
    }

    pub fn m(&self) -> u16 {
        self.codebook.m()
    }

    fn raw_len(&self) -> usize {
        self.rows * self.cols * ColorMatrix::raw_cell_width(self.m())
    }

    /// Unpacks a raw payload.
    pub fn raw_matrix(&self) -> Result<ColorMatrix> {
        let bytes = self.payload.bytes();
        if bytes.len() != self.raw_len() || self.payload.bit_len() != bytes.len() as u64 * 8 {
            return Err(Error::Format(format!(
                "raw layer {}x{} needs {} bytes, has {}",
                self.rows,
                self.cols,
                self.raw_len(),
                bytes.len()
            )));
        }
        let cells: Vec<u16> = if ColorMatrix::raw_cell_width(self.m()) == 2 {
            bytes
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .collect()
        } else {
            bytes.iter().map(|&b| b as u16).collect()
        };
        ColorMatrix::new(self.rows, self.cols, self.m(), cells).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkContainer {
    mode: Mode,
    layers: Vec<LayerRecord>,
}

impl NetworkContainer {
    pub fn new(mode: Mode, layers: Vec<LayerRecord>) -> Result<Self> {
        let c = Self { mode, layers };
        c.validate()?;
        Ok(c)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn layers(&self) -> &[LayerRecord] {
        &self.layers
    }

    /// Node-layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].cols)
            .chain(self.layers.iter().map(|l| l.rows))
            .collect()
    }

    /// Total payload bits over all layers.
    pub fn payload_bits(&self) -> u64 {
        self.layers.iter().map(|l| l.payload.bit_len()).sum()
    }

    fn validate(&self) -> Result<()> {
        let k = self.layers.len();
        if k == 0 || k > u16::MAX as usize {
            return Err(Error::Format(format!("layer count {k} out of range")));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.rows == 0 || l.cols == 0 || l.rows > u32::MAX as usize || l.cols > u32::MAX as usize {
                return Err(Error::Format(format!("layer {i} has shape {}x{}", l.rows, l.cols)));
            }
            if (l.rows as u64).saturating_mul(l.cols as u64) > MAX_DECODED_CELLS {
                return Err(Error::Format(format!("layer {i} is too large")));
            }
            if l.model.m() != l.m() {
                return Err(Error::Format(format!("layer {i}: codebook and counts disagree on m")));
            }
            if i > 0 && l.cols != self.layers[i - 1].rows {
                return Err(Error::Format(format!("layer {i} does not chain onto layer {}", i - 1)));
            }
            let raw = match self.mode {
                Mode::Raw => true,
                Mode::Plbg => i + 1 == k,
                Mode::Ktree => false,
            };
            if raw {
                l.raw_matrix()?;
            } else if self.mode == Mode::Plbg {
                let n = elias_decode(&mut l.payload.reader()).map_err(|e| Error::Format(e.to_string()))?;
                if n != l.rows as u64 {
                    return Err(Error::Format(format!(
                        "layer {i} payload has {n} rows, header says {}",
                        l.rows
                    )));
                }
            } else if i > 0 && !l.payload.is_empty() {
                return Err(Error::Format(
                    "ktree containers keep the whole stream in layer 0".into(),
                ));
            }
        }
        if self.mode == Mode::Ktree
            && (k < 1
                || self
                    .layers
                    .iter()
                    .any(|l| l.m() != 1 || l.rows != self.layers[0].cols || l.cols != l.rows))
        {
            return Err(Error::Format(
                "ktree containers need square binary layers of one width".into(),
            ));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.mode as u8);
        out.extend_from_slice(&(self.layers.len() as u16).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.rows as u32).to_le_bytes());
            out.extend_from_slice(&(l.cols as u32).to_le_bytes());
            out.extend_from_slice(&l.m().to_le_bytes());
            for w in l.codebook.weights() {
                out.extend_from_slice(&w.to_le_bytes());
            }
            for c in l.model.counts() {
                out.extend_from_slice(&c.to_le_bytes());
            }
            out.extend_from_slice(&l.payload.bit_len().to_le_bytes());
            out.extend_from_slice(l.payload.bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mode = Mode::from_byte(r.take(1)?[0])?;
        let k = r.u16()? as usize;
        let mut layers = Vec::with_capacity(k.min(1024));
        for _ in 0..k {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let m = r.u16()? as usize;
            let weights = (0..=m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let counts = (0..=m).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            let bits = r.u64()?;
            let len = bits.div_ceil(8);
            if len > r.remaining() as u64 {
                return Err(Error::Format(format!("payload of {bits} bits runs past the end")));
            }
            let payload = Bitstream::from_bytes(r.take(len as usize)?.to_vec(), bits)
                .map_err(|e| Error::Format(e.to_string()))?;
            let fmt = |e: Error| Error::Format(e.to_string());
            layers.push(LayerRecord {
                rows,
                cols,
                codebook: Codebook::new(weights).map_err(fmt)?,
                model: EdgeModel::new(counts).map_err(fmt)?,
                payload,
            });
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes", r.remaining())));
        }
        Self::new(mode, layers)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Format("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}
