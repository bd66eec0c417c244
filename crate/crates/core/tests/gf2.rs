use aesrank::gf2::{
    m4rm_multiply, naive_multiply, naive_rank, pluq_decompose, rank, read_matrix, write_matrix,
    BitMatrix, BitVector, WindowBasis,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, nrows: usize, ncols: usize, density: f64) -> BitMatrix {
    BitMatrix::from_fn(nrows, ncols, |_, _| rng.gen_bool(density))
}

/// Matrices whose rank is far from full are where pivoting bugs hide.
fn low_rank_matrix(rng: &mut impl Rng, nrows: usize, ncols: usize, k: usize) -> BitMatrix {
    let left = random_matrix(rng, nrows, k, 0.5);
    let right = random_matrix(rng, k, ncols, 0.5);
    naive_multiply(&left, &right)
}

#[test]
fn rank_matches_elimination_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let nrows = rng.gen_range(0..=64);
        let ncols = rng.gen_range(0..=64);
        let m = match case % 3 {
            0 => random_matrix(&mut rng, nrows, ncols, 0.5),
            1 => random_matrix(&mut rng, nrows, ncols, 0.08),
            _ => {
                let k = rng.gen_range(0..=8);
                low_rank_matrix(&mut rng, nrows, ncols, k)
            }
        };
        assert_eq!(rank(&m), naive_rank(&m), "case {case}: {m:?}");
    }
}

#[test]
fn rank_invariant_under_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..500 {
        let nrows = rng.gen_range(1..=300);
        let ncols = rng.gen_range(1..=300);
        let m = if case % 2 == 0 {
            random_matrix(&mut rng, nrows, ncols, 0.5)
        } else {
            let k = rng.gen_range(0..=nrows.min(ncols));
            low_rank_matrix(&mut rng, nrows, ncols, k)
        };
        let ranks: Vec<usize> = [8, 64, 512, usize::MAX]
            .iter()
            .map(|&t| pluq_decompose(&m, t).rank)
            .collect();
        assert!(
            ranks.windows(2).all(|w| w[0] == w[1]),
            "case {case}: {ranks:?}"
        );
        if case % 25 == 0 {
            assert_eq!(ranks[0], naive_rank(&m));
        }
    }
}

#[test]
fn larger_blocked_ranks() {
    // Shapes that exercise several recursion levels and panel copies with
    // small thresholds.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(nrows, ncols, k) in &[
        (700, 900, 650),
        (900, 700, 700),
        (640, 640, 200),
        (513, 1031, 513),
    ] {
        let m = low_rank_matrix(&mut rng, nrows, ncols, k);
        let expect = naive_rank(&m);
        for t in [8, 64, 128, 256, usize::MAX] {
            assert_eq!(pluq_decompose(&m, t).rank, expect, "{nrows}x{ncols} t={t}");
        }
    }
}

#[test]
fn m4rm_matches_schoolbook() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let (m, l, n) = (
            rng.gen_range(1..=256),
            rng.gen_range(1..=256),
            rng.gen_range(1..=256),
        );
        let a = random_matrix(&mut rng, m, l, 0.5);
        let b = random_matrix(&mut rng, l, n, 0.5);
        assert_eq!(m4rm_multiply(&a, &b).unwrap(), naive_multiply(&a, &b));
    }
}

#[test]
fn m4rm_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b = random_matrix(&mut rng, 64, 64, 0.5);
    assert_eq!(m4rm_multiply(&BitMatrix::identity(64), &b).unwrap(), b);
}

#[test]
fn m4rm_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 64, 64, 0.5);
        let b = random_matrix(&mut rng, 64, 64, 0.5);
        let c = random_matrix(&mut rng, 64, 64, 0.5);
        let ab_c = m4rm_multiply(&m4rm_multiply(&a, &b).unwrap(), &c).unwrap();
        let a_bc = m4rm_multiply(&a, &m4rm_multiply(&b, &c).unwrap()).unwrap();
        assert_eq!(ab_c, a_bc);
    }
}

#[test]
fn rank_of_product_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (ka, kb) = (rng.gen_range(0..40), rng.gen_range(0..30));
        let a = low_rank_matrix(&mut rng, 40, 50, ka);
        let b = low_rank_matrix(&mut rng, 50, 30, kb);
        let ab = m4rm_multiply(&a, &b).unwrap();
        assert!(rank(&ab) <= rank(&a).min(rank(&b)));
    }
}

#[test]
fn rows_from_seven_dim_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let basis = random_matrix(&mut rng, 7, 256, 0.5);
    assert_eq!(naive_rank(&basis), 7);
    let coeffs = random_matrix(&mut rng, 128, 7, 0.5);
    let m = m4rm_multiply(&coeffs, &basis).unwrap();
    assert_eq!(naive_rank(&m), 7);
    assert_eq!(rank(&m), 7);
}

#[test]
fn basis_rows_give_dimension() {
    for k in [1, 17, 64, 65, 200] {
        let m = BitMatrix::from_fn(k, 300, |i, j| j == i || (j > k && (i + j) % 3 == 0));
        assert_eq!(rank(&m), k);
    }
}

#[test]
fn window_ranks_match_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..6 {
        let ncols = [70, 130, 200][trial % 3];
        let nrows = 400;
        // Low-rank stretches make the window ranks vary.
        let m = if trial % 2 == 0 {
            random_matrix(&mut rng, nrows, ncols, 0.5)
        } else {
            low_rank_matrix(&mut rng, nrows, ncols, 40)
        };
        let window = ncols - 10;
        let mut wb = WindowBasis::new(ncols);
        for t in 0..nrows {
            wb.insert(m.row(t), t as u64);
            if t + 1 >= window {
                let start = t + 1 - window;
                let direct = rank(&m.submatrix(start..t + 1, 0, ncols));
                assert_eq!(
                    wb.rank_since(start as u64),
                    direct,
                    "trial {trial} start {start}"
                );
            }
        }
    }
}

#[test]
fn gf2m_roundtrip_file() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = random_matrix(&mut rng, 33, 100, 0.3);
    let dir = std::env::temp_dir().join(format!("gf2m-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.gf2m");
    write_matrix(&m, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_matrix(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, m);
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn rank_equals_transpose_rank(nrows in 0usize..=128, ncols in 0usize..=128, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, nrows, ncols, 0.3);
        prop_assert_eq!(rank(&m), rank(&m.transpose()));
    }

    #[test]
    fn gf2m_roundtrip(nrows in 0usize..20, ncols in 0usize..200, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, nrows, ncols, 0.5);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        prop_assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn get_returns_set(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
        let v = BitVector::from_bits(bits.iter().copied());
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(v.get(i), b);
        }
        prop_assert_eq!(v.weight(), bits.iter().filter(|&&b| b).count());
    }
}
