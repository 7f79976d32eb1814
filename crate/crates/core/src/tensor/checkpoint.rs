//! Flat binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes   "GCLSCKPT"
//! version   u32       1
//! count     u32       number of tensors
//! table     count ×   { name_len: u16, name: utf-8, rows: u64, cols: u64 }
//! payload   count ×   rows·cols f64, row-major, in table order
//! ```
//!
//! Nothing may follow the payload.

use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GCLSCKPT";
pub const VERSION: u32 = 1;

const WHAT: &str = "checkpoint";

pub fn encode<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Matrix)>) -> Vec<u8> {
    let tensors: Vec<_> = tensors.into_iter().collect();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, m) in &tensors {
        let name = name.as_bytes();
        assert!(name.len() <= u16::MAX as usize, "tensor name too long");
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    }
    for (_, m) in &tensors {
        for x in m.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::Format {
                what: WHAT,
                msg: format!("truncated at byte {}", self.pos),
            });
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Matrix)>> {
    let bad = |msg: String| Error::Format { what: WHAT, msg };
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;

    let mut table = Vec::new();
    let mut payload_len: usize = 0;
    for i in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| bad(format!("tensor {i}: name is not utf-8")))?
            .to_owned();
        let rows = usize::try_from(r.u64()?).map_err(|_| bad(format!("{name}: rows overflow")))?;
        let cols = usize::try_from(r.u64()?).map_err(|_| bad(format!("{name}: cols overflow")))?;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| bad(format!("{name}: shape {rows}x{cols} overflows")))?;
        payload_len = payload_len
            .checked_add(n)
            .ok_or_else(|| bad("payload size overflows".into()))?;
        table.push((name, rows, cols));
    }
    let remaining = bytes.len() - r.pos;
    if remaining != payload_len {
        return Err(bad(format!(
            "payload is {remaining} bytes, shape table needs {payload_len}"
        )));
    }

    let mut out = Vec::with_capacity(table.len());
    for (name, rows, cols) in table {
        let raw = r.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Matrix::from_vec(rows, cols, data)?));
    }
    Ok(out)
}

pub fn save<'a>(
    path: &Path,
    tensors: impl IntoIterator<Item = (&'a str, &'a Matrix)>,
) -> Result<()> {
    std::fs::write(path, encode(tensors)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Vec<(String, Matrix)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
