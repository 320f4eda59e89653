//! Bit-exact binary checkpoints of trained parameters.
//!
//! Layout (little-endian): magic, slope as f64 bits, matrix count, then for
//! each matrix its rows and cols as u64 followed by row-major f64 values.

use std::fs;
use std::path::Path;

use crate::blocks::AffineParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Projection, StnParams};

const MAGIC: &[u8; 8] = b"STNCKPT\x01";
const MATRICES: usize = 10;

pub fn encode(params: &StnParams) -> Vec<u8> {
    let mats = params.matrices();
    let payload: usize = mats.iter().map(|m| 16 + 8 * m.as_slice().len()).sum();
    let mut out = Vec::with_capacity(MAGIC.len() + 16 + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&params.slope.to_bits().to_le_bytes());
    out.extend_from_slice(&(MATRICES as u64).to_le_bytes());
    for m in mats {
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u64(&mut self) -> Result<u64> {
        let end = self.pos + 8;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Config("checkpoint is truncated".into()))?;
        self.pos = end;
        Ok(u64::from_le_bytes(bytes.try_into().expect("eight bytes")))
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let len = rows
            .checked_mul(cols)
            .filter(|&n| n <= (self.buf.len() - self.pos) / 8)
            .ok_or_else(|| Error::Config("checkpoint matrix exceeds file size".into()))?;
        let data = (0..len)
            .map(|_| self.u64().map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        Matrix::new(rows, cols, data)
    }
}

pub fn decode(buf: &[u8]) -> Result<StnParams> {
    if buf.len() < MAGIC.len() || &buf[..MAGIC.len()] != MAGIC {
        return Err(Error::Config("not a checkpoint file (bad magic)".into()));
    }
    let mut r = Reader {
        buf,
        pos: MAGIC.len(),
    };
    let slope = f64::from_bits(r.u64()?);
    if r.u64()? != MATRICES as u64 {
        return Err(Error::Config("unexpected matrix count in checkpoint".into()));
    }
    let mut m: Vec<Matrix> = (0..MATRICES).map(|_| r.matrix()).collect::<Result<_>>()?;
    if r.pos != buf.len() {
        return Err(Error::Config("trailing bytes after checkpoint".into()));
    }
    let mut take = || m.remove(0);
    let mut affine = || AffineParams::new(take(), take());
    let phi_s = Projection {
        hidden: affine()?,
        output: affine()?,
    };
    let phi_t = Projection {
        hidden: affine()?,
        output: affine()?,
    };
    let clf = affine()?;
    StnParams::from_parts(phi_s, phi_t, clf, slope)
}

pub fn save(params: &StnParams, path: &Path) -> Result<()> {
    fs::write(path, encode(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<StnParams> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
