//! Straightforward reference routines, kept deliberately simple so they can
//! serve as oracles for the blocked code paths.

use super::matrix::BitMatrix;

/// Rank by textbook row reduction, one bit at a time.
pub fn naive_rank(a: &BitMatrix) -> usize {
    let mut rows: Vec<Vec<bool>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a.get(i, j)).collect())
        .collect();
    let mut rank = 0;
    for c in 0..a.ncols() {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][c]) else {
            continue;
        };
        rows.swap(rank, p);
        for i in 0..rows.len() {
            if i != rank && rows[i][c] {
                for j in c..a.ncols() {
                    let v = rows[rank][j];
                    rows[i][j] ^= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Schoolbook triple-loop product.
pub fn naive_multiply(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    assert_eq!(a.ncols(), b.nrows());
    BitMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).fold(false, |acc, l| acc ^ (a.get(i, l) & b.get(l, j)))
    })
}
