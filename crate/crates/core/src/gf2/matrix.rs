//! Bit-packed dense vectors and matrices over GF(2).
//!
//! Column `j` of a row lives in bit `j % 64` of word `j / 64`. Padding bits
//! past the last column are always zero, so word-level equality is bit-level
//! equality.

use std::fmt;

use super::Gf2Error;

pub const WORD_BITS: usize = 64;

#[inline]
pub fn words_for(nbits: usize) -> usize {
    nbits.div_ceil(WORD_BITS)
}

/// Mask with the low `nbits % 64` bits set, or all ones when the count is a
/// multiple of the word size.
#[inline]
pub(crate) fn tail_mask(nbits: usize) -> u64 {
    match nbits % WORD_BITS {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// A bit vector of fixed length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % WORD_BITS == 0 {
                words.push(0);
            }
            if b {
                words[len / WORD_BITS] |= 1 << (len % WORD_BITS);
            }
            len += 1;
        }
        Self { len, words }
    }

    /// Builds a vector from packed words. Bits beyond `len` are cleared.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Result<Self, Gf2Error> {
        if words.len() != words_for(len) {
            return Err(Gf2Error::Dimension(format!(
                "{} words cannot hold exactly {} bits",
                words.len(),
                len
            )));
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Ok(Self { len, words })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of the set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + b)
            })
        })
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[{}](", self.len)?;
        for i in 0..self.len.min(256) {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        if self.len > 256 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

/// Dense row-major GF(2) matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    nrows: usize,
    ncols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        let stride = words_for(ncols);
        Self {
            nrows,
            ncols,
            stride,
            data: vec![0; nrows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Stacks bit vectors as rows. Every row must have exactly `ncols` bits.
    pub fn from_rows<'a, I>(rows: I, ncols: usize) -> Result<Self, Gf2Error>
    where
        I: IntoIterator<Item = &'a BitVector>,
    {
        let stride = words_for(ncols);
        let mut data = Vec::new();
        let mut nrows = 0;
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != ncols {
                return Err(Gf2Error::Dimension(format!(
                    "row {i} has {} bits, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row.words());
            nrows += 1;
        }
        Ok(Self {
            nrows,
            ncols,
            stride,
            data,
        })
    }

    /// Builds a matrix from packed row words (`stride = ceil(ncols / 64)`
    /// words per row). Padding bits must be zero.
    pub fn from_words(nrows: usize, ncols: usize, data: Vec<u64>) -> Result<Self, Gf2Error> {
        let stride = words_for(ncols);
        if data.len() != nrows * stride {
            return Err(Gf2Error::Dimension(format!(
                "{} words for a {nrows}x{ncols} matrix, expected {}",
                data.len(),
                nrows * stride
            )));
        }
        let m = Self {
            nrows,
            ncols,
            stride,
            data,
        };
        let mask = tail_mask(ncols);
        if stride > 0 && (0..nrows).any(|i| m.row(i)[stride - 1] & !mask != 0) {
            return Err(Gf2Error::Format("nonzero padding bits".into()));
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Words per row.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn data(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row_vector(&self, i: usize) -> BitVector {
        BitVector {
            len: self.ncols,
            words: self.row(i).to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.nrows && j < self.ncols, "({i}, {j}) out of range");
        (self.data[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.nrows && j < self.ncols, "({i}, {j}) out of range");
        let w = &mut self.data[i * self.stride + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let s = self.stride;
        let (head, tail) = self.data.split_at_mut(hi * s);
        head[lo * s..(lo + 1) * s].swap_with_slice(&mut tail[..s]);
    }

    pub fn weight(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            let row = self.row(i);
            for (wi, &w) in row.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let j = wi * WORD_BITS + w.trailing_zeros() as usize;
                    w &= w - 1;
                    t.data[j * t.stride + i / WORD_BITS] |= 1 << (i % WORD_BITS);
                }
            }
        }
        t
    }

    /// Matrix-vector product `self * v` with `v` as a column vector.
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(self.ncols, v.len(), "dimension mismatch in mul_vec");
        let mut out = BitVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let parity: u32 = self
                .row(i)
                .iter()
                .zip(v.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            if parity & 1 == 1 {
                out.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        out
    }

    /// Copies the rectangle `rows x [c0, c1)` into a new matrix.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, c0: usize, c1: usize) -> BitMatrix {
        assert!(rows.end <= self.nrows && c0 <= c1 && c1 <= self.ncols);
        let mut out = BitMatrix::zeros(rows.len(), c1 - c0);
        for (oi, i) in rows.enumerate() {
            copy_bits(self.row(i), c0, c1 - c0, out.row_mut(oi));
        }
        out
    }
}

/// Copies `len` bits starting at bit `start` of `src` into `dst` starting at
/// bit 0. `dst` must be zeroed beyond the copied prefix by the caller.
pub(crate) fn copy_bits(src: &[u64], start: usize, len: usize, dst: &mut [u64]) {
    let shift = start % WORD_BITS;
    let w0 = start / WORD_BITS;
    let nw = words_for(len);
    for k in 0..nw {
        let lo = src[w0 + k] >> shift;
        let hi = if shift != 0 && w0 + k + 1 < src.len() {
            src[w0 + k + 1] << (WORD_BITS - shift)
        } else {
            0
        };
        dst[k] = lo | hi;
    }
    if nw > 0 {
        dst[nw - 1] &= tail_mask(len);
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.nrows, self.ncols)?;
        if self.nrows <= 64 && self.ncols <= 128 {
            for i in 0..self.nrows {
                for j in 0..self.ncols {
                    f.write_str(if self.get(i, j) { "1" } else { "." })?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}
