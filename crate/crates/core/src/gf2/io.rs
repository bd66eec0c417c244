//! The `GF2M` binary matrix format.
//!
//! Layout (all integers little-endian): magic `b"GF2M"`, `u32` version,
//! `u64` nrows, `u64` ncols, then `nrows * ceil(ncols / 64)` row-major
//! `u64` words with zero padding at the end of each row.

use std::io::{Read, Write};

use super::matrix::{words_for, BitMatrix};
use super::Gf2Error;

pub const MAGIC: &[u8; 4] = b"GF2M";
pub const VERSION: u32 = 1;

pub fn write_matrix<W: Write>(m: &BitMatrix, mut w: W) -> Result<(), Gf2Error> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.stride() * 8);
    for i in 0..m.nrows() {
        buf.clear();
        for word in m.row(i) {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<BitMatrix, Gf2Error> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Gf2Error::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Gf2Error::Format(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let nrows = usize::try_from(u64::from_le_bytes(b8))
        .map_err(|_| Gf2Error::Format("row count overflows usize".into()))?;
    r.read_exact(&mut b8)?;
    let ncols = usize::try_from(u64::from_le_bytes(b8))
        .map_err(|_| Gf2Error::Format("column count overflows usize".into()))?;
    let nwords = nrows
        .checked_mul(words_for(ncols))
        .ok_or_else(|| Gf2Error::Format("matrix too large".into()))?;
    let mut bytes = vec![0u8; nwords * 8];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    BitMatrix::from_words(nrows, ncols, data)
}
