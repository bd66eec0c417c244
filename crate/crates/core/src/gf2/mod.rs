//! Dense linear algebra over GF(2).

mod io;
mod m4rm;
mod matrix;
mod naive;
mod pluq;
mod window;

pub use io::{read_matrix, write_matrix};
pub use m4rm::{m4rm_multiply, table_bits, MAX_TABLE_BITS};
pub use matrix::{words_for, BitMatrix, BitVector, WORD_BITS};
pub use naive::{naive_multiply, naive_rank};
pub use pluq::{pluq_decompose, pluq_in_place, rank, rank_in_place, PluqResult, DEFAULT_THRESHOLD};
pub use window::WindowBasis;

#[derive(Debug, thiserror::Error)]
pub enum Gf2Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("malformed matrix data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
