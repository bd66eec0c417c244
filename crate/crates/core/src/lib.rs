//! Rank statistics of AES encryptions under a one-hot space embedding.

pub mod aes;
pub mod distinguisher;
pub mod embedding;
pub mod gf2;
pub mod prng;
pub mod selftest;
pub mod stats;
