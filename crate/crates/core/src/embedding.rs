//! One-hot space embedding of `(F_2)^{mb}` into `(F_2)^{2^m b t}`.
//!
//! A vector `v` is read as `b` elements of `F_{2^m}` (element `i` is bits
//! `[i*m, (i+1)*m)`, least significant bit first). Each element is sent to
//! the indicator of its discrete logarithm, and the images of
//! `v, Mv, ..., M^{t-1} v` are concatenated: element `i` of power `j` lands in
//! bits `[j*2^m*b + i*2^m, j*2^m*b + (i+1)*2^m)`.

use crate::aes::{self, Block};
use crate::gf2::{rank_in_place, BitMatrix, BitVector, DEFAULT_THRESHOLD, WORD_BITS};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("modulus {modulus:#x} does not have degree {m}")]
    Modulus { modulus: u32, m: usize },
    #[error("{0:#x} is not a primitive element")]
    NotPrimitive(u32),
    #[error("mixing matrix must be {0}x{0}")]
    MixingShape(usize),
    #[error("mixing matrix has no finite order up to {0}")]
    NoOrder(usize),
    #[error("unsupported field size m = {0}")]
    FieldSize(usize),
}

/// Product in `F_2[x] / (modulus)`, with `modulus` of degree `m`.
pub fn field_mul(mut a: u32, mut b: u32, modulus: u32, m: usize) -> u32 {
    let mut r = 0;
    while b != 0 {
        if b & 1 != 0 {
            r ^= a;
        }
        a <<= 1;
        if a >> m & 1 != 0 {
            a ^= modulus;
        }
        b >>= 1;
    }
    r
}

/// The `m x m` GF(2) matrix of `x -> c*x`.
fn mul_block(c: u32, modulus: u32, m: usize) -> Vec<u32> {
    // Column k is c * x^k.
    (0..m).map(|k| field_mul(c, 1 << k, modulus, m)).collect()
}

/// Expands a `b x b` matrix over `F_{2^m}` into the `mb x mb` GF(2) matrix
/// acting on the bit layout described in the module docs.
pub fn field_matrix(coeffs: &[Vec<u32>], modulus: u32, m: usize) -> BitMatrix {
    let b = coeffs.len();
    let blocks: Vec<Vec<Vec<u32>>> = coeffs
        .iter()
        .map(|row| {
            assert_eq!(row.len(), b, "coefficient matrix must be square");
            row.iter().map(|&c| mul_block(c, modulus, m)).collect()
        })
        .collect();
    BitMatrix::from_fn(m * b, m * b, |r, c| {
        let cols = &blocks[r / m][c / m];
        cols[c % m] >> (r % m) & 1 != 0
    })
}

/// Smallest `s >= 1` with `M^s = I`, searching up to `max`.
pub fn matrix_order(mix: &BitMatrix, max: usize) -> Option<usize> {
    let n = mix.nrows();
    if mix.ncols() != n {
        return None;
    }
    let id = BitMatrix::identity(n);
    let mut p = mix.clone();
    for s in 1..=max {
        if p == id {
            return Some(s);
        }
        p = crate::gf2::m4rm_multiply(&p, mix).ok()?;
    }
    None
}

#[derive(Clone, Debug)]
pub struct EmbeddingParams {
    m: usize,
    b: usize,
    t: usize,
    modulus: u32,
    eta: u32,
    /// `M^0, ..., M^{t-1}`.
    powers: Vec<BitMatrix>,
    /// Field element -> one-hot position.
    position: Vec<u32>,
    aes_lambda: bool,
}

impl EmbeddingParams {
    pub fn new(
        m: usize,
        b: usize,
        modulus: u32,
        eta: u32,
        mixing: BitMatrix,
    ) -> Result<Self, EmbeddingError> {
        if !(1..=16).contains(&m) {
            return Err(EmbeddingError::FieldSize(m));
        }
        if modulus >> m != 1 {
            return Err(EmbeddingError::Modulus { modulus, m });
        }
        if mixing.nrows() != m * b || mixing.ncols() != m * b {
            return Err(EmbeddingError::MixingShape(m * b));
        }
        let q = 1usize << m;
        let mut position = vec![u32::MAX; q];
        position[0] = 0;
        let mut x = 1u32;
        for i in 1..q {
            x = field_mul(x, eta, modulus, m);
            if x as usize >= q || position[x as usize] != u32::MAX {
                return Err(EmbeddingError::NotPrimitive(eta));
            }
            position[x as usize] = i as u32;
        }
        const MAX_ORDER: usize = 1 << 12;
        let t = matrix_order(&mixing, MAX_ORDER).ok_or(EmbeddingError::NoOrder(MAX_ORDER))?;
        let mut powers = vec![BitMatrix::identity(m * b)];
        for _ in 1..t {
            let next = crate::gf2::m4rm_multiply(powers.last().unwrap(), &mixing)
                .expect("square matrices");
            powers.push(next);
        }
        Ok(Self {
            m,
            b,
            t,
            modulus,
            eta,
            powers,
            position,
            aes_lambda: false,
        })
    }

    /// `m = 8`, `b = 16`, Rijndael field, `eta = 0x03`, `M` the matrix of
    /// ShiftRows then MixColumns (order 8).
    pub fn aes() -> Self {
        let mut p = Self::new(8, 16, 0x11b, 0x03, aes::lambda_matrix()).expect("AES parameters");
        p.aes_lambda = true;
        p
    }

    /// Parameters for a mixing matrix given by its coefficients over
    /// `F_{2^m}`.
    pub fn byte_oriented(
        m: usize,
        modulus: u32,
        eta: u32,
        coeffs: &[Vec<u32>],
    ) -> Result<Self, EmbeddingError> {
        Self::new(
            m,
            coeffs.len(),
            modulus,
            eta,
            field_matrix(coeffs, modulus, m),
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn mixing(&self) -> &BitMatrix {
        if self.t > 1 {
            &self.powers[1]
        } else {
            &self.powers[0]
        }
    }

    /// Bits of an input vector, `mb`.
    pub fn input_bits(&self) -> usize {
        self.m * self.b
    }

    /// Ambient dimension `2^m * b * t`.
    pub fn dim(&self) -> usize {
        (1 << self.m) * self.b * self.t
    }

    /// Index of the bit `epsilon'` sets for `x`.
    pub fn position(&self, x: u32) -> usize {
        self.position[x as usize] as usize
    }

    pub fn epsilon_prime(&self, x: u32) -> BitVector {
        let mut v = BitVector::zeros(1 << self.m);
        v.set(self.position(x), true);
        v
    }

    /// Calls `f` with the `b*t` set bit positions of `alpha(v)`, in order.
    fn for_each_bit(&self, v: &BitVector, mut f: impl FnMut(usize)) {
        assert_eq!(v.len(), self.input_bits(), "input vector length");
        let q = 1usize << self.m;
        let mut chunk = 0;
        for p in &self.powers {
            let w = p.mul_vec(v);
            for i in 0..self.b {
                let x = (0..self.m).fold(0u32, |acc, k| acc | (w.get(i * self.m + k) as u32) << k);
                f(chunk + i * q + self.position(x));
            }
            chunk += q * self.b;
        }
    }

    pub fn alpha(&self, v: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.dim());
        self.for_each_bit(v, |j| out.set(j, true));
        out
    }

    /// Writes `alpha(v)` into a zeroed row of `dim().div_ceil(64)` words.
    pub fn alpha_into(&self, v: &BitVector, out: &mut [u64]) {
        self.for_each_bit(v, |j| out[j / WORD_BITS] |= 1 << (j % WORD_BITS));
    }

    /// [`alpha_into`](Self::alpha_into) for a 16-byte block; uses the byte
    /// routines directly for the AES parameters.
    pub fn alpha_block_into(&self, v: &Block, out: &mut [u64]) {
        if !self.aes_lambda {
            self.alpha_into(&block_vector(v), out);
            return;
        }
        let mut s = *v;
        for j in 0..self.t {
            for (i, &x) in s.iter().enumerate() {
                let bit = j * 4096 + i * 256 + self.position[x as usize] as usize;
                out[bit / WORD_BITS] |= 1 << (bit % WORD_BITS);
            }
            s = aes::lambda(&s);
        }
    }

    /// `2^m b t - (bt - 1) - mb(t - 1)`, the dimension bound for a mixing
    /// matrix defined over `F_{2^m}`.
    pub fn dimension_bound(&self) -> usize {
        dimension_bound(self.m, self.b, self.t)
    }
}

pub fn dimension_bound(m: usize, b: usize, t: usize) -> usize {
    (1 << m) * b * t - (b * t - 1) - m * b * (t - 1)
}

/// `vec(v)` of a block: bit `8i + k` is bit `k` of byte `i`.
pub fn block_vector(v: &Block) -> BitVector {
    BitVector::from_bits((0..128).map(|j| aes::block_bit(v, j)))
}

/// Rank of the `alpha` images of up to `max_samples` vectors drawn from
/// `sampler`.
pub fn span_dimension(
    params: &EmbeddingParams,
    mut sampler: impl FnMut() -> BitVector,
    max_samples: usize,
) -> usize {
    let mut m = BitMatrix::zeros(max_samples, params.dim());
    let stride = m.stride();
    let data = m.data_mut();
    for i in 0..max_samples {
        params.alpha_into(&sampler(), &mut data[i * stride..(i + 1) * stride]);
    }
    rank_in_place(&mut m, DEFAULT_THRESHOLD)
}

/// Rank of the `alpha` images of a list of blocks.
pub fn block_span_dimension(params: &EmbeddingParams, blocks: &[Block]) -> usize {
    let mut m = embed_blocks(params, blocks);
    rank_in_place(&mut m, DEFAULT_THRESHOLD)
}

/// Matrix whose row `i` is `alpha(blocks[i])`.
pub fn embed_blocks(params: &EmbeddingParams, blocks: &[Block]) -> BitMatrix {
    let mut m = BitMatrix::zeros(blocks.len(), params.dim());
    let stride = m.stride();
    for (row, v) in m.data_mut().chunks_exact_mut(stride.max(1)).zip(blocks) {
        params.alpha_block_into(v, row);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aes_positions() {
        let p = EmbeddingParams::aes();
        assert_eq!(p.position(0), 0);
        assert_eq!(p.position(0x03), 1);
        assert_eq!(p.position(0x05), 2);
        assert_eq!(p.position(1), 255);
        assert_eq!(p.t(), 8);
        assert_eq!(p.dim(), 32768);
    }

    #[test]
    fn x_is_not_primitive_for_rijndael() {
        let err = EmbeddingParams::new(8, 16, 0x11b, 0x02, aes::lambda_matrix()).unwrap_err();
        assert_eq!(err, EmbeddingError::NotPrimitive(2));
    }

    #[test]
    fn bad_modulus() {
        let m = BitMatrix::identity(4);
        assert!(matches!(
            EmbeddingParams::new(2, 2, 0b1011, 2, m),
            Err(EmbeddingError::Modulus { .. })
        ));
    }
}
