//! Method of Four Russians multiplication over GF(2).
//!
//! The kernel here is shared by the public product and by the Schur
//! complement and triangular-solve updates inside the PLUQ decomposition:
//! it accumulates `C += G * S` where the rows of `C` and `S` are strided word
//! slices restricted to a column span, and `G` is a compact coefficient
//! matrix.

use super::matrix::{tail_mask, words_for, BitMatrix, WORD_BITS};
use super::Gf2Error;

/// Largest table index width.
pub const MAX_TABLE_BITS: usize = 8;

/// Words per column chunk. Eight 256-entry tables of this width stay inside
/// a 512 KiB working set.
const CHUNK: usize = 32;

/// Table index width for a product whose inner dimension is `n`:
/// `ceil(log2 n)` capped at [`MAX_TABLE_BITS`].
pub fn table_bits(n: usize) -> usize {
    let mut k = 1;
    while k < MAX_TABLE_BITS && (1usize << k) < n {
        k += 1;
    }
    k
}

/// A bit range `[lo, hi)` of a row, as a word range plus edge masks.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ColSpan {
    pub w0: usize,
    pub w1: usize,
    first: u64,
    last: u64,
}

impl ColSpan {
    pub fn new(lo: usize, hi: usize) -> Self {
        assert!(lo < hi, "empty column span");
        Self {
            w0: lo / WORD_BITS,
            w1: words_for(hi),
            first: !0u64 << (lo % WORD_BITS),
            last: tail_mask(hi),
        }
    }

    #[inline]
    pub fn mask(&self, w: usize) -> u64 {
        let mut m = !0u64;
        if w == self.w0 {
            m &= self.first;
        }
        if w + 1 == self.w1 {
            m &= self.last;
        }
        m
    }

    /// `dst[span] ^= src[span]` for two full rows.
    #[inline]
    pub fn xor_into(&self, dst: &mut [u64], src: &[u64]) {
        let (w0, w1) = (self.w0, self.w1);
        if w1 - w0 == 1 {
            dst[w0] ^= src[w0] & self.first & self.last;
            return;
        }
        dst[w0] ^= src[w0] & self.first;
        for (d, s) in dst[w0 + 1..w1 - 1].iter_mut().zip(&src[w0 + 1..w1 - 1]) {
            *d ^= s;
        }
        dst[w1 - 1] ^= src[w1 - 1] & self.last;
    }
}

/// Accumulates `dst_i[span] ^= sum_j coeff[i][j] * src_j[span]` for every
/// destination row `i < coeff.nrows()` and source row `j < coeff.ncols()`.
///
/// Row `i` of the destination starts at `dst[i * dst_stride]`; row `j` of the
/// source at `src[j * src_stride]`. Bits of the destination outside the span
/// are untouched.
pub(crate) fn addmul(
    dst: &mut [u64],
    dst_stride: usize,
    coeff: &BitMatrix,
    src: &[u64],
    src_stride: usize,
    span: ColSpan,
    k: usize,
) {
    if coeff.nrows() == 0 || coeff.ncols() == 0 {
        return;
    }
    let args = AddMul {
        dst_stride,
        coeff,
        src,
        src_stride,
        span,
        k: k.clamp(1, MAX_TABLE_BITS),
    };
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            // SAFETY: feature detected at runtime.
            return unsafe { addmul_avx512(dst, &args) };
        }
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: feature detected at runtime.
            return unsafe { addmul_avx2(dst, &args) };
        }
    }
    addmul_body(dst, &args)
}

struct AddMul<'a> {
    dst_stride: usize,
    coeff: &'a BitMatrix,
    src: &'a [u64],
    src_stride: usize,
    span: ColSpan,
    k: usize,
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn addmul_avx512(dst: &mut [u64], args: &AddMul<'_>) {
    addmul_body(dst, args)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn addmul_avx2(dst: &mut [u64], args: &AddMul<'_>) {
    addmul_body(dst, args)
}

#[inline(always)]
fn xor_in<const N: usize>(acc: &mut [u64; N], e: &[u64; N]) {
    for w in 0..N {
        acc[w] ^= e[w];
    }
}

#[inline(always)]
fn addmul_body(dst: &mut [u64], args: &AddMul<'_>) {
    let AddMul {
        dst_stride,
        coeff,
        src,
        src_stride,
        span,
        k,
    } = *args;
    let ndst = coeff.nrows();
    let inner = coeff.ncols();
    let entries = 1usize << k;
    let kmask = (entries - 1) as u64;
    let tables_per_word = WORD_BITS.div_ceil(k);
    let mut tables = vec![0u64; tables_per_word * entries * CHUNK];
    let mut masked = [0u64; CHUNK];

    for cw0 in (span.w0..span.w1).step_by(CHUNK) {
        let cw = (span.w1 - cw0).min(CHUNK);
        for g in 0..words_for(inner) {
            let group_lo = g * WORD_BITS;
            let group_rows = (inner - group_lo).min(WORD_BITS);
            let nt = group_rows.div_ceil(k);

            for t in 0..nt {
                let tab = &mut tables[t * entries * CHUNK..(t + 1) * entries * CHUNK];
                tab[..CHUNK].fill(0);
                let bits_here = (group_rows - t * k).min(k);
                for b in 0..bits_here {
                    let j = group_lo + t * k + b;
                    let srow = &src[j * src_stride + cw0..j * src_stride + cw0 + cw];
                    for (w, m) in masked[..cw].iter_mut().enumerate() {
                        *m = srow[w] & span.mask(cw0 + w);
                    }
                    let half = 1usize << b;
                    let (lo, hi) = tab.split_at_mut(half * CHUNK);
                    for (prev, out) in lo.chunks_exact(CHUNK).zip(hi.chunks_exact_mut(CHUNK)) {
                        for w in 0..CHUNK {
                            out[w] = prev[w] ^ masked[w];
                        }
                    }
                }
            }

            let coeff_stride = coeff.stride();
            let cdata = coeff.data();
            for i in 0..ndst {
                let bits = cdata[i * coeff_stride + g];
                if bits == 0 {
                    continue;
                }
                let mut acc = [0u64; CHUNK];
                for t in 0..nt {
                    let idx = ((bits >> (t * k)) & kmask) as usize;
                    let base = (t * entries + idx) * CHUNK;
                    let e: &[u64; CHUNK] = tables[base..base + CHUNK].try_into().unwrap();
                    xor_in(&mut acc, e);
                }
                let d = &mut dst[i * dst_stride + cw0..i * dst_stride + cw0 + cw];
                for (x, a) in d.iter_mut().zip(acc.iter()) {
                    *x ^= a;
                }
            }
        }
    }
}

/// `A * B` over GF(2) with the Method of Four Russians.
pub fn m4rm_multiply(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    if a.ncols() != b.nrows() {
        return Err(Gf2Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut c = BitMatrix::zeros(a.nrows(), b.ncols());
    if b.ncols() == 0 {
        return Ok(c);
    }
    let stride = c.stride();
    addmul(
        c.data_mut(),
        stride,
        a,
        b.data(),
        b.stride(),
        ColSpan::new(0, b.ncols()),
        table_bits(a.ncols()),
    );
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let one = BitMatrix::identity(1);
        assert_eq!(m4rm_multiply(&one, &one).unwrap(), one);
    }

    #[test]
    fn identity_left() {
        let b = BitMatrix::from_fn(64, 64, |i, j| (i * 31 + j * 17) % 7 < 3);
        assert_eq!(m4rm_multiply(&BitMatrix::identity(64), &b).unwrap(), b);
    }

    #[test]
    fn mismatch() {
        let a = BitMatrix::zeros(3, 4);
        assert!(m4rm_multiply(&a, &a).is_err());
    }

    #[test]
    fn table_bits_caps() {
        assert_eq!(table_bits(1), 1);
        assert_eq!(table_bits(5), 3);
        assert_eq!(table_bits(256), 8);
        assert_eq!(table_bits(100_000), 8);
    }

    #[test]
    fn span_masks() {
        let s = ColSpan::new(3, 70);
        assert_eq!((s.w0, s.w1), (0, 2));
        assert_eq!(s.mask(0), !0u64 << 3);
        assert_eq!(s.mask(1), 0b111111);
        let mut dst = vec![0u64; 2];
        s.xor_into(&mut dst, &[!0, !0]);
        assert_eq!(dst, vec![!0u64 << 3, 0b111111]);
    }
}
