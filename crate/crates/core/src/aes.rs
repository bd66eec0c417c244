//! AES-128/192/256 with a configurable number of rounds.
//!
//! A round is split into its three layers: `gamma` (SubBytes), `lambda`
//! (ShiftRows then MixColumns) and `sigma` (round-key addition). Blocks are
//! 16 bytes in FIPS-197 input order, so byte `4c + r` sits in row `r`,
//! column `c` of the state.

use crate::gf2::BitMatrix;

pub type Block = [u8; 16];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AesError {
    #[error("invalid AES key length {0} (expected 16, 24 or 32 bytes)")]
    KeyLength(usize),
    #[error("{rounds} rounds requested but the key schedule has {max}")]
    Rounds { rounds: usize, max: usize },
    #[error("bad hex string: {0}")]
    Hex(String),
}

pub const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

/// Multiplication by `x` modulo the Rijndael polynomial.
#[inline]
pub fn xtime(a: u8) -> u8 {
    (a << 1) ^ if a & 0x80 != 0 { 0x1b } else { 0 }
}

/// Product in GF(2^8) modulo `x^8 + x^4 + x^3 + x + 1`.
pub fn gmul(mut a: u8, mut b: u8) -> u8 {
    let mut r = 0;
    while b != 0 {
        if b & 1 != 0 {
            r ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    r
}

/// An expanded cipher key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherKey {
    bytes: Vec<u8>,
    round_keys: Vec<Block>,
}

impl CipherKey {
    pub fn new(bytes: &[u8]) -> Result<Self, AesError> {
        key_schedule(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self, AesError> {
        let bytes = hex::decode(s).map_err(|e| AesError::Hex(e.to_string()))?;
        key_schedule(&bytes)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// `N`: 10, 12 or 14.
    pub fn rounds(&self) -> usize {
        self.round_keys.len() - 1
    }

    /// `k^(0)..=k^(N)`.
    pub fn round_keys(&self) -> &[Block] {
        &self.round_keys
    }
}

/// Standard AES key expansion.
pub fn key_schedule(key: &[u8]) -> Result<CipherKey, AesError> {
    let nk = match key.len() {
        16 | 24 | 32 => key.len() / 4,
        n => return Err(AesError::KeyLength(n)),
    };
    let nr = nk + 6;
    let total = 4 * (nr + 1);
    let mut w: Vec<[u8; 4]> = key
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect();
    let mut rcon = 1u8;
    for i in nk..total {
        let mut t = w[i - 1];
        if i % nk == 0 {
            t = [
                SBOX[t[1] as usize] ^ rcon,
                SBOX[t[2] as usize],
                SBOX[t[3] as usize],
                SBOX[t[0] as usize],
            ];
            rcon = xtime(rcon);
        } else if nk > 6 && i % nk == 4 {
            t = t.map(|b| SBOX[b as usize]);
        }
        let prev = w[i - nk];
        w.push([
            prev[0] ^ t[0],
            prev[1] ^ t[1],
            prev[2] ^ t[2],
            prev[3] ^ t[3],
        ]);
    }
    let round_keys = w
        .chunks_exact(4)
        .map(|ws| {
            let mut k = [0u8; 16];
            for (c, word) in ws.iter().enumerate() {
                k[4 * c..4 * c + 4].copy_from_slice(word);
            }
            k
        })
        .collect();
    Ok(CipherKey {
        bytes: key.to_vec(),
        round_keys,
    })
}

/// How many rounds to run after the initial key addition, and whether the
/// last of them drops MixColumns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RoundSpec {
    pub rounds: usize,
    pub atypical_last: bool,
}

impl RoundSpec {
    /// `rounds` rounds under `key`; the last one is atypical only when it is
    /// the cipher's final round.
    pub fn new(rounds: usize, key: &CipherKey) -> Self {
        Self {
            rounds,
            atypical_last: rounds == key.rounds(),
        }
    }

    /// Typical rounds only.
    pub fn typical(rounds: usize) -> Self {
        Self {
            rounds,
            atypical_last: false,
        }
    }

    /// `rounds` rounds of reduced-round AES: the last applied round always
    /// drops MixColumns, as the final round of the full cipher does.
    pub fn reduced(rounds: usize) -> Self {
        Self {
            rounds,
            atypical_last: rounds > 0,
        }
    }

    pub fn full(key: &CipherKey) -> Self {
        Self::new(key.rounds(), key)
    }
}

pub fn sub_bytes(v: &Block) -> Block {
    v.map(|b| SBOX[b as usize])
}

pub fn shift_rows(v: &Block) -> Block {
    let mut out = [0u8; 16];
    for c in 0..4 {
        for r in 0..4 {
            out[4 * c + r] = v[4 * ((c + r) % 4) + r];
        }
    }
    out
}

pub fn mix_columns(v: &Block) -> Block {
    let mut out = [0u8; 16];
    for c in 0..4 {
        let a = &v[4 * c..4 * c + 4];
        for r in 0..4 {
            let (a0, a1, a2, a3) = (a[r], a[(r + 1) % 4], a[(r + 2) % 4], a[(r + 3) % 4]);
            out[4 * c + r] = xtime(a0) ^ xtime(a1) ^ a1 ^ a2 ^ a3;
        }
    }
    out
}

pub fn add_round_key(v: &Block, k: &Block) -> Block {
    std::array::from_fn(|i| v[i] ^ k[i])
}

/// The linear layer: MixColumns after ShiftRows.
pub fn lambda(v: &Block) -> Block {
    mix_columns(&shift_rows(v))
}

/// `(gamma(v), lambda(v), sigma_k(v))`, each applied to `v` alone.
pub fn round_components(v: &Block, k: &Block) -> (Block, Block, Block) {
    (sub_bytes(v), lambda(v), add_round_key(v, k))
}

/// One typical round.
pub fn round(v: &Block, k: &Block) -> Block {
    add_round_key(&lambda(&sub_bytes(v)), k)
}

pub fn encrypt(key: &CipherKey, x: &Block, spec: RoundSpec) -> Result<Block, AesError> {
    if spec.rounds > key.rounds() {
        return Err(AesError::Rounds {
            rounds: spec.rounds,
            max: key.rounds(),
        });
    }
    Ok(encrypt_unchecked(key, x, spec))
}

pub(crate) fn encrypt_unchecked(key: &CipherKey, x: &Block, spec: RoundSpec) -> Block {
    let rk = key.round_keys();
    let mut s = add_round_key(x, &rk[0]);
    for r in 1..=spec.rounds {
        s = sub_bytes(&s);
        s = shift_rows(&s);
        if !(spec.atypical_last && r == spec.rounds) {
            s = mix_columns(&s);
        }
        s = add_round_key(&s, &rk[r]);
    }
    s
}

/// `vec(v)`: bit `8i + k` is bit `k` of byte `i`.
pub fn block_bit(v: &Block, j: usize) -> bool {
    v[j / 8] >> (j % 8) & 1 != 0
}

/// The 128x128 matrix of `lambda` acting on column vectors `vec(v)`.
pub fn lambda_matrix() -> BitMatrix {
    let columns: Vec<Block> = (0..128)
        .map(|j| {
            let mut e = [0u8; 16];
            e[j / 8] = 1 << (j % 8);
            lambda(&e)
        })
        .collect();
    BitMatrix::from_fn(128, 128, |i, j| block_bit(&columns[j], i))
}

pub fn parse_block(s: &str) -> Result<Block, AesError> {
    let bytes = hex::decode(s).map_err(|e| AesError::Hex(e.to_string()))?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| AesError::Hex(format!("expected 16 bytes, got {}", b.len())))
}

pub fn block_hex(v: &Block) -> String {
    hex::encode(v)
}
