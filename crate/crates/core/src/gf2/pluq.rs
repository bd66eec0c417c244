//! Rank-revealing PLUQ decomposition by cache-blocked recursive elimination.
//!
//! The matrix is split by columns into a west and an east half. The west
//! half is decomposed first and yields `r1` pivot rows; those rows and the
//! rows below them cut the matrix into the four blocks
//!
//! ```text
//!     [ A11 A12 ]      A11: r1 pivot rows x west
//!     [ A21 A22 ]      A22: remaining rows x east
//! ```
//!
//! after which `A12 <- L11^-1 A12` (triangular solve) and
//! `A22 <- A22 + L21 A12` (Schur complement, Four Russians product), and the
//! recursion continues on `A22`. Singular leading blocks are handled by
//! letting the west rank `r1` be whatever it is: pivot search swaps rows and
//! skips pivot-free columns, so the leading block is always nonsingular.
//!
//! Once a column panel is no wider than the cache threshold, it is copied
//! into a compact buffer, decomposed there, and written back; the row swaps
//! it performed are replayed on the full rows.
//!
//! On return the working matrix holds `L` and `U` packed together: for
//! pivot `k` at column `p_k`, rows below pivot row `k` carry their `L`
//! multiplier in column `p_k`, and pivot row `k` carries `U` in the columns
//! after `p_k`.

use super::m4rm::{addmul, table_bits, ColSpan};
use super::matrix::{tail_mask, words_for, BitMatrix, WORD_BITS};

/// Default panel width (columns) below which work moves into a compact,
/// cache-resident buffer.
pub const DEFAULT_THRESHOLD: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PluqResult {
    pub rank: usize,
    /// `row_perm[i]` is the input row that ends up at position `i`.
    pub row_perm: Vec<usize>,
    /// Pivot columns first (ascending), then the remaining columns.
    pub col_perm: Vec<usize>,
    /// `(row, col)` of each pivot in the permuted row order; both strictly
    /// increasing.
    pub pivots: Vec<(usize, usize)>,
}

pub fn pluq_decompose(a: &BitMatrix, cache_block_threshold: usize) -> PluqResult {
    let mut work = a.clone();
    pluq_in_place(&mut work, cache_block_threshold)
}

/// Decomposes `a` in place, leaving the packed `L`/`U` factors in it.
pub fn pluq_in_place(a: &mut BitMatrix, cache_block_threshold: usize) -> PluqResult {
    let threshold = cache_block_threshold.max(1);
    let mut ctx = Ctx::new(threshold, false);
    let ncols = a.ncols();
    let rank = ple(a, 0, 0, ncols, &mut ctx);
    debug_assert_eq!(rank, ctx.pivots.len());

    let mut row_perm: Vec<usize> = (0..a.nrows()).collect();
    for &(x, y) in &ctx.swaps {
        row_perm.swap(x, y);
    }
    let mut is_pivot = vec![false; ncols];
    for &c in &ctx.pivots {
        is_pivot[c] = true;
    }
    let col_perm = ctx
        .pivots
        .iter()
        .copied()
        .chain((0..ncols).filter(|&c| !is_pivot[c]))
        .collect();
    let pivots = ctx.pivots.iter().copied().enumerate().collect();
    PluqResult {
        rank,
        row_perm,
        col_perm,
        pivots,
    }
}

pub fn rank(a: &BitMatrix) -> usize {
    pluq_decompose(a, DEFAULT_THRESHOLD).rank
}

/// Rank of `a`, consuming its contents as scratch space.
pub fn rank_in_place(a: &mut BitMatrix, cache_block_threshold: usize) -> usize {
    let mut ctx = Ctx::new(cache_block_threshold.max(1), false);
    let ncols = a.ncols();
    ple(a, 0, 0, ncols, &mut ctx)
}

struct Ctx {
    threshold: usize,
    in_panel: bool,
    pivots: Vec<usize>,
    swaps: Vec<(usize, usize)>,
}

impl Ctx {
    fn new(threshold: usize, in_panel: bool) -> Self {
        Self {
            threshold,
            in_panel,
            pivots: Vec::new(),
            swaps: Vec::new(),
        }
    }

    fn base_width(&self) -> usize {
        self.threshold.min(WORD_BITS)
    }
}

fn ple(m: &mut BitMatrix, r0: usize, c0: usize, c1: usize, ctx: &mut Ctx) -> usize {
    let nrows = m.nrows();
    if r0 >= nrows || c0 >= c1 {
        return 0;
    }
    let width = c1 - c0;
    if !ctx.in_panel
        && ctx.threshold >= WORD_BITS
        && width <= ctx.threshold
        && c0.is_multiple_of(WORD_BITS)
    {
        return panel(m, r0, c0, c1, ctx);
    }
    if width <= ctx.base_width() {
        return eliminate(m, r0, c0, c1, ctx);
    }

    let cm = split_point(c0, c1);
    let p0 = ctx.pivots.len();
    let r1 = ple(m, r0, c0, cm, ctx);
    if r1 > 0 {
        let west_pivots = ctx.pivots[p0..p0 + r1].to_vec();
        update_east(m, r0, &west_pivots, ColSpan::new(cm, c1));
    }
    let r2 = if r0 + r1 < nrows {
        ple(m, r0 + r1, cm, c1, ctx)
    } else {
        0
    };
    r1 + r2
}

fn split_point(c0: usize, c1: usize) -> usize {
    let mid = c0 + (c1 - c0) / 2;
    if c1 - c0 > WORD_BITS {
        // Prefer a word boundary strictly inside (c0, c1).
        let down = mid / WORD_BITS * WORD_BITS;
        let up = down + WORD_BITS;
        if down > c0 {
            return down;
        }
        if up < c1 {
            return up;
        }
    }
    mid
}

/// Decomposes columns `[c0, c1)` of rows `r0..` in a compact copy.
fn panel(m: &mut BitMatrix, r0: usize, c0: usize, c1: usize, ctx: &mut Ctx) -> usize {
    let nrows = m.nrows();
    let mut p = m.submatrix(r0..nrows, c0, c1);
    let mut sub = Ctx::new(ctx.threshold, true);
    let r = ple(&mut p, 0, 0, c1 - c0, &mut sub);
    for &(x, y) in &sub.swaps {
        m.swap_rows(r0 + x, r0 + y);
        ctx.swaps.push((r0 + x, r0 + y));
    }
    ctx.pivots.extend(sub.pivots.iter().map(|&c| c0 + c));

    let w0 = c0 / WORD_BITS;
    let pw = p.stride();
    let keep = !tail_mask(c1 - c0);
    let full_last = (c1 - c0).is_multiple_of(WORD_BITS);
    for i in 0..p.nrows() {
        let src = p.row(i);
        let dst = &mut m.row_mut(r0 + i)[w0..w0 + pw];
        if full_last {
            dst.copy_from_slice(src);
        } else {
            dst[..pw - 1].copy_from_slice(&src[..pw - 1]);
            dst[pw - 1] = (dst[pw - 1] & keep) | src[pw - 1];
        }
    }
    r
}

/// Plain Gaussian elimination on a narrow column block, keeping the `L`
/// multipliers in the pivot columns.
fn eliminate(m: &mut BitMatrix, r0: usize, c0: usize, c1: usize, ctx: &mut Ctx) -> usize {
    let nrows = m.nrows();
    let stride = m.stride();
    if c0 / WORD_BITS == (c1 - 1) / WORD_BITS && nrows - r0 > WORD_BITS {
        return eliminate_word(m, r0, c0, c1, ctx);
    }
    let mut r = 0;
    for c in c0..c1 {
        let pr = r0 + r;
        if pr == nrows {
            break;
        }
        let w = c / WORD_BITS;
        let bit = 1u64 << (c % WORD_BITS);
        let Some(found) = (pr..nrows).find(|&i| m.data()[i * stride + w] & bit != 0) else {
            continue;
        };
        if found != pr {
            m.swap_rows(found, pr);
            ctx.swaps.push((pr, found));
        }
        ctx.pivots.push(c);
        r += 1;
        if c + 1 == c1 {
            continue;
        }
        let span = ColSpan::new(c + 1, c1);
        let data = m.data_mut();
        let (head, tail) = data.split_at_mut((pr + 1) * stride);
        let prow = &head[pr * stride..];
        if span.w1 - span.w0 == 1 {
            let pw = prow[span.w0] & span.mask(span.w0);
            for row in tail.chunks_exact_mut(stride) {
                if row[w] & bit != 0 {
                    row[span.w0] ^= pw;
                }
            }
        } else {
            for row in tail.chunks_exact_mut(stride) {
                if row[w] & bit != 0 {
                    span.xor_into(row, prow);
                }
            }
        }
    }
    r
}

/// [`eliminate`] for a block inside one word column: the column is copied out
/// so the elimination runs over contiguous words, and the row swaps are
/// replayed on the full rows afterwards.
fn eliminate_word(m: &mut BitMatrix, r0: usize, c0: usize, c1: usize, ctx: &mut Ctx) -> usize {
    let nrows = m.nrows();
    let stride = m.stride();
    let w = c0 / WORD_BITS;
    let mut col: Vec<u64> = (r0..nrows).map(|i| m.data()[i * stride + w]).collect();
    let first_swap = ctx.swaps.len();
    let mut r = 0;
    for c in c0..c1 {
        if r == col.len() {
            break;
        }
        let b = c % WORD_BITS;
        let Some(off) = col[r..].iter().position(|&x| (x >> b) & 1 != 0) else {
            continue;
        };
        let found = r + off;
        if found != r {
            col.swap(r, found);
            ctx.swaps.push((r0 + r, r0 + found));
        }
        ctx.pivots.push(c);
        let pw = col[r] & (!1u64 << b) & tail_mask(c1);
        r += 1;
        if c + 1 == c1 {
            continue;
        }
        for x in &mut col[r..] {
            *x ^= pw & ((*x >> b) & 1).wrapping_neg();
        }
    }
    for &(a, b) in &ctx.swaps[first_swap..] {
        m.swap_rows(a, b);
    }
    let data = m.data_mut();
    for (i, x) in col.into_iter().enumerate() {
        data[(r0 + i) * stride + w] = x;
    }
    r
}

/// Applies the west factorization to the east span: triangular solve on the
/// pivot rows, then the Schur complement update on the rows below.
fn update_east(m: &mut BitMatrix, r0: usize, pivots: &[usize], span: ColSpan) {
    let r1 = pivots.len();
    trsm_lower_unit(m, r0, pivots, span);
    let nrows = m.nrows();
    if r0 + r1 >= nrows {
        return;
    }
    let stride = m.stride();
    let coeff = gather_columns(m, r0 + r1..nrows, pivots);
    let (upper, lower) = m.data_mut().split_at_mut((r0 + r1) * stride);
    addmul(
        lower,
        stride,
        &coeff,
        &upper[r0 * stride..],
        stride,
        span,
        table_bits(r1),
    );
}

/// Solves `X <- L^-1 X` on rows `r0..r0+k` restricted to `span`, where `L`
/// is the unit lower triangular matrix read from the pivot columns.
fn trsm_lower_unit(m: &mut BitMatrix, r0: usize, pivots: &[usize], span: ColSpan) {
    let k = pivots.len();
    let stride = m.stride();
    if k <= WORD_BITS {
        for a in 1..k {
            for (b, &pc) in pivots[..a].iter().enumerate() {
                if m.get(r0 + a, pc) {
                    let (head, tail) = m.data_mut().split_at_mut((r0 + a) * stride);
                    span.xor_into(&mut tail[..stride], &head[(r0 + b) * stride..]);
                }
            }
        }
        return;
    }
    let h = (k / 2).next_multiple_of(WORD_BITS).min(k - 1);
    trsm_lower_unit(m, r0, &pivots[..h], span);
    let coeff = gather_columns(m, r0 + h..r0 + k, &pivots[..h]);
    let (upper, lower) = m.data_mut().split_at_mut((r0 + h) * stride);
    addmul(
        lower,
        stride,
        &coeff,
        &upper[r0 * stride..],
        stride,
        span,
        table_bits(h),
    );
    trsm_lower_unit(m, r0 + h, &pivots[h..], span);
}

/// Extracts the given (ascending) columns of a row range into a compact
/// matrix.
pub(crate) fn gather_columns(
    m: &BitMatrix,
    rows: std::ops::Range<usize>,
    cols: &[usize],
) -> BitMatrix {
    debug_assert!(cols.windows(2).all(|w| w[0] < w[1]));
    // (source word, mask, output bit offset)
    let mut plan: Vec<(usize, u64, usize)> = Vec::new();
    for (out, &c) in cols.iter().enumerate() {
        let w = c / WORD_BITS;
        match plan.last_mut() {
            Some((pw, mask, _)) if *pw == w => *mask |= 1 << (c % WORD_BITS),
            _ => plan.push((w, 1 << (c % WORD_BITS), out)),
        }
    }
    let mut out = BitMatrix::zeros(rows.len(), cols.len());
    let ostride = words_for(cols.len());
    let pext = pext_fn();
    let odata = out.data_mut();
    for (oi, i) in rows.enumerate() {
        let row = m.row(i);
        let dst = &mut odata[oi * ostride..(oi + 1) * ostride];
        for &(w, mask, off) in &plan {
            let bits = if mask == !0 {
                row[w]
            } else {
                pext(row[w], mask)
            };
            if bits == 0 {
                continue;
            }
            let (ow, sh) = (off / WORD_BITS, off % WORD_BITS);
            dst[ow] |= bits << sh;
            if sh != 0 && sh + mask.count_ones() as usize > WORD_BITS {
                dst[ow + 1] |= bits >> (WORD_BITS - sh);
            }
        }
    }
    out
}

fn pext_soft(x: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if x & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        mask ^= low;
    }
    out
}

#[cfg(target_arch = "x86_64")]
fn pext_fn() -> fn(u64, u64) -> u64 {
    #[target_feature(enable = "bmi2")]
    unsafe fn pext_bmi2(x: u64, mask: u64) -> u64 {
        std::arch::x86_64::_pext_u64(x, mask)
    }
    fn pext_hw(x: u64, mask: u64) -> u64 {
        // SAFETY: only selected after runtime detection of bmi2.
        unsafe { pext_bmi2(x, mask) }
    }
    if std::is_x86_feature_detected!("bmi2") {
        pext_hw
    } else {
        pext_soft
    }
}

#[cfg(not(target_arch = "x86_64"))]
fn pext_fn() -> fn(u64, u64) -> u64 {
    pext_soft
}
