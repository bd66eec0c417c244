//! Ranks of many overlapping row windows from one pass over the rows.
//!
//! Rows are inserted in order with increasing timestamps into an echelon
//! basis in which every pivot keeps the newest vector that can occupy it.
//! After inserting row `t`, the rank of rows `s..=t` equals the number of
//! basis vectors stamped `>= s`. Each insertion costs one reduction against
//! the current basis, so all windows of a sequence come out for roughly the
//! price of two dense eliminations.

use super::matrix::{words_for, WORD_BITS};

const EMPTY: u32 = u32::MAX;

pub struct WindowBasis {
    ncols: usize,
    stride: usize,
    /// Row pool; slot `s` occupies `pool[s * stride..]`. One spare slot holds
    /// the vector being inserted.
    pool: Vec<u64>,
    stamps: Vec<u64>,
    /// Pivot column -> slot.
    slot_of: Vec<u32>,
    /// Pivot columns currently occupied, in insertion order of the pivot.
    occupied: Vec<u32>,
    free: Vec<u32>,
}

impl WindowBasis {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            stride: words_for(ncols),
            pool: Vec::new(),
            stamps: Vec::new(),
            slot_of: vec![EMPTY; ncols],
            occupied: Vec::new(),
            free: Vec::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Current rank of everything inserted so far.
    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    fn alloc(&mut self) -> u32 {
        if let Some(s) = self.free.pop() {
            return s;
        }
        let s = self.stamps.len() as u32;
        self.pool.resize(self.pool.len() + self.stride, 0);
        self.stamps.push(0);
        s
    }

    /// Inserts a row (packed words, `ceil(ncols / 64)` of them) stamped with
    /// `stamp`. Stamps must not decrease between calls.
    pub fn insert(&mut self, row: &[u64], stamp: u64) {
        assert_eq!(row.len(), self.stride, "row width mismatch");
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx512f") {
            // SAFETY: feature detected at runtime.
            return unsafe { self.insert_avx512(row, stamp) };
        }
        self.insert_body(row, stamp)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx512f")]
    unsafe fn insert_avx512(&mut self, row: &[u64], stamp: u64) {
        self.insert_body(row, stamp)
    }

    #[inline(always)]
    fn insert_body(&mut self, row: &[u64], stamp: u64) {
        let stride = self.stride;
        let mut cur = self.alloc();
        let mut cur_stamp = stamp;
        {
            let c = cur as usize * stride;
            self.pool[c..c + stride].copy_from_slice(row);
        }
        let mut w = 0;
        loop {
            let c = cur as usize * stride;
            while w < stride && self.pool[c + w] == 0 {
                w += 1;
            }
            if w == stride {
                self.free.push(cur);
                return;
            }
            let p = w * WORD_BITS + self.pool[c + w].trailing_zeros() as usize;
            let s = self.slot_of[p];
            if s == EMPTY {
                self.slot_of[p] = cur;
                self.stamps[cur as usize] = cur_stamp;
                self.occupied.push(p as u32);
                return;
            }
            let mut keep = s;
            if self.stamps[s as usize] < cur_stamp {
                // The newer vector takes the pivot; the older one moves on.
                self.slot_of[p] = cur;
                self.stamps[cur as usize] = cur_stamp;
                cur_stamp = self.stamps[s as usize];
                keep = cur;
                cur = s;
            }
            let (a, b) = (cur as usize * stride, keep as usize * stride);
            xor_tail(&mut self.pool, a, b, w, stride);
        }
    }

    /// Rank of the rows stamped `>= since` among those inserted so far.
    pub fn rank_since(&self, since: u64) -> usize {
        self.occupied
            .iter()
            .filter(|&&p| self.stamps[self.slot_of[p as usize] as usize] >= since)
            .count()
    }
}

/// `pool[dst + w..dst + stride] ^= pool[src + w..src + stride]`.
#[inline(always)]
fn xor_tail(pool: &mut [u64], dst: usize, src: usize, w: usize, stride: usize) {
    debug_assert_ne!(dst, src);
    if dst < src {
        let (lo, hi) = pool.split_at_mut(src);
        for (d, s) in lo[dst + w..dst + stride].iter_mut().zip(&hi[w..stride]) {
            *d ^= s;
        }
    } else {
        let (lo, hi) = pool.split_at_mut(dst);
        for (d, s) in hi[w..stride].iter_mut().zip(&lo[src + w..src + stride]) {
            *d ^= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_rows() {
        let mut wb = WindowBasis::new(10);
        wb.insert(&[0b101], 0);
        wb.insert(&[0b101], 1);
        assert_eq!(wb.len(), 1);
        assert_eq!(wb.rank_since(0), 1);
        assert_eq!(wb.rank_since(1), 1);
        assert_eq!(wb.rank_since(2), 0);
    }

    #[test]
    fn newer_vector_wins_pivot() {
        let mut wb = WindowBasis::new(4);
        wb.insert(&[0b0011], 0);
        wb.insert(&[0b0001], 1);
        wb.insert(&[0b0010], 2);
        assert_eq!(wb.rank_since(0), 2);
        assert_eq!(wb.rank_since(1), 2);
        assert_eq!(wb.rank_since(2), 1);
    }
}
