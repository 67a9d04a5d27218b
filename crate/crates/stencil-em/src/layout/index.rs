//! Rank arithmetic inside one region (a band's share of one layer).
//!
//! A region stores its vertices contiguously in sweep order. Two shapes occur:
//!
//! * [`FullIndex`] — every transverse point of the region meets every level
//!   (axis family). Level-major: `rank = σ·F + i`; fiber-major (rows of the
//!   row layouts): `rank = i·K′ + σ`, with the row stride `K′ ≥ k₁` chosen
//!   `≡ 1 (mod B)` so that consecutive rows cross block boundaries at
//!   staggered levels.
//! * [`DiagIndex`] — diagonal families, where fibers start and end at
//!   different levels. The region's transverse points are grouped into runs
//!   (consecutive columns of one row). On levels where no run is clipped by
//!   the grid the in-level offsets are static; only the clipped levels near
//!   the ends of the region keep explicit per-level prefixes.

use super::geometry::Geometry;

/// Index of a region whose fibers all span every level.
#[derive(Clone, Debug)]
pub(crate) struct FullIndex {
    /// Transverse points in the region.
    pub count: u64,
    /// Levels per fiber.
    pub levels: u64,
    /// Row stride for fiber-major storage.
    pub stride: Option<u64>,
}

impl FullIndex {
    #[inline]
    pub fn rank(&self, sigma: i64, sub: u32) -> u64 {
        match self.stride {
            None => sigma as u64 * self.count + u64::from(sub),
            Some(k) => u64::from(sub) * k + sigma as u64,
        }
    }

    /// Address-space length including row padding.
    pub fn len(&self) -> u64 {
        match self.stride {
            None => self.levels * self.count,
            Some(k) => (self.count - 1) * k + self.levels,
        }
    }

    /// `(σ, sub)` of a rank; `None` for padding.
    pub fn inverse(&self, rank: u64) -> Option<(i64, u32)> {
        match self.stride {
            None => Some(((rank / self.count) as i64, (rank % self.count) as u32)),
            Some(k) => {
                let sigma = rank % k;
                (sigma < self.levels).then_some((sigma as i64, (rank / k) as u32))
            }
        }
    }

    /// First rank of level `σ` (level-major only).
    pub fn level_start(&self, sigma: i64) -> u64 {
        sigma.max(0) as u64 * self.count
    }
}

/// `(d / p, d % p)` for the level periods 1, 2 and 3 without a runtime division.
#[inline]
pub(crate) fn divmod_period(d: i64, p: i64) -> (i64, i64) {
    match p {
        1 => (d, 0),
        2 => (d >> 1, d & 1),
        3 => (d.div_euclid(3), d.rem_euclid(3)),
        _ => (d.div_euclid(p), d.rem_euclid(p)),
    }
}

/// A maximal set of consecutive columns of one row, all of one residue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Run {
    pub row: i64,
    pub lo: i64,
    pub hi: i64,
}

impl Run {
    #[inline]
    fn len(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }
}

/// A transverse point handed to [`DiagIndex::build`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct DiagPoint {
    pub residue: usize,
    pub row: i64,
    pub col: i64,
    pub fiber_lo: i64,
    pub fiber_hi: i64,
}

/// Index of a region of a diagonal family.
#[derive(Clone, Debug)]
pub(crate) struct DiagIndex {
    period: i64,
    pub runs: Vec<Run>,
    /// `runs[res_start[ρ] .. res_start[ρ+1]]` have residue `ρ`.
    pub res_start: [u32; 4],
    static_prefix: Vec<u64>,
    sigma_min: i64,
    sigma_max: i64,
    mid_lo: i64,
    mid_hi: i64,
    mid_base: u64,
    mid_end: u64,
    period_total: u64,
    partial: [u64; 4],
    head_len: usize,
    level_base: Vec<u64>,
    pool_off: Vec<u32>,
    pool: Vec<u32>,
    total: u64,
}

#[inline]
fn clipped_len(run: &Run, lo: i64, hi: i64) -> u64 {
    let a = run.lo.max(lo);
    let b = run.hi.min(hi);
    if a > b {
        0
    } else {
        (b - a + 1) as u64
    }
}

impl DiagIndex {
    /// Build from points sorted by `(residue, row, col)`. Returns the index and,
    /// for every input point, its run number.
    pub fn build(geo: &Geometry, pts: &[DiagPoint]) -> (Self, Vec<u32>) {
        let period = geo.period();
        let mut runs: Vec<Run> = Vec::new();
        let mut run_res: Vec<usize> = Vec::new();
        let mut run_of = Vec::with_capacity(pts.len());
        for p in pts {
            let extend = match (runs.last(), run_res.last()) {
                (Some(r), Some(&rr)) => rr == p.residue && r.row == p.row && r.hi + 1 == p.col,
                _ => false,
            };
            if extend {
                runs.last_mut().expect("nonempty").hi = p.col;
            } else {
                runs.push(Run {
                    row: p.row,
                    lo: p.col,
                    hi: p.col,
                });
                run_res.push(p.residue);
            }
            run_of.push((runs.len() - 1) as u32);
        }
        let mut res_start = [runs.len() as u32; 4];
        for rho in (0..period as usize).rev() {
            if let Some(first) = run_res.iter().position(|&r| r == rho) {
                res_start[rho] = first as u32;
            } else {
                res_start[rho] = res_start[rho + 1];
            }
        }
        res_start[period as usize..].fill(runs.len() as u32);
        let mut static_prefix = vec![0u64; runs.len()];
        let mut full_len = [0u64; 4];
        for rho in 0..period as usize {
            let mut acc = 0;
            for i in res_start[rho] as usize..res_start[rho + 1] as usize {
                static_prefix[i] = acc;
                acc += runs[i].len();
            }
            full_len[rho] = acc;
        }
        let sigma_min = pts.iter().map(|p| p.fiber_lo).min().unwrap_or(0);
        let sigma_max = pts.iter().map(|p| p.fiber_hi).max().unwrap_or(-1);
        let mut mid_lo = sigma_min;
        let mut mid_hi = sigma_max;
        for rho in 0..period as usize {
            let group = pts.iter().filter(|p| p.residue == rho);
            for p in group {
                mid_lo = mid_lo.max(p.fiber_lo);
                mid_hi = mid_hi.min(p.fiber_hi);
            }
        }
        if mid_lo > mid_hi {
            mid_lo = sigma_max + 1;
            mid_hi = sigma_max;
        }
        let mut idx = Self {
            period,
            runs,
            res_start,
            static_prefix,
            sigma_min,
            sigma_max,
            mid_lo,
            mid_hi,
            mid_base: 0,
            mid_end: 0,
            period_total: 0,
            partial: [0; 4],
            head_len: (mid_lo - sigma_min).max(0) as usize,
            level_base: Vec::new(),
            pool_off: Vec::new(),
            pool: Vec::new(),
            total: 0,
        };
        let mut acc = 0u64;
        for sigma in sigma_min..mid_lo {
            acc += idx.push_explicit(geo, sigma, acc);
        }
        idx.mid_base = acc;
        if mid_lo <= mid_hi {
            for j in 0..period as usize {
                idx.partial[j + 1] =
                    idx.partial[j] + full_len[(mid_lo + j as i64).rem_euclid(period) as usize];
            }
            idx.period_total = idx.partial[period as usize];
            let nlev = (mid_hi - mid_lo + 1) as u64;
            let q = nlev / period as u64;
            let r = (nlev % period as u64) as usize;
            acc += q * idx.period_total + idx.partial[r];
        }
        idx.mid_end = acc;
        for sigma in mid_hi + 1..=sigma_max {
            acc += idx.push_explicit(geo, sigma, acc);
        }
        idx.total = acc;
        (idx, run_of)
    }

    fn push_explicit(&mut self, geo: &Geometry, sigma: i64, base: u64) -> u64 {
        let rho = sigma.rem_euclid(self.period) as usize;
        self.level_base.push(base);
        self.pool_off.push(self.pool.len() as u32);
        let mut acc = 0u64;
        for i in self.res_start[rho] as usize..self.res_start[rho + 1] as usize {
            let run = self.runs[i];
            self.pool.push(acc as u32);
            let (lo, hi) = geo.clip(sigma, run.row);
            acc += clipped_len(&run, lo, hi);
        }
        acc
    }

    #[inline]
    fn explicit_slot(&self, sigma: i64) -> usize {
        if sigma < self.mid_lo {
            (sigma - self.sigma_min) as usize
        } else {
            self.head_len + (sigma - self.mid_hi - 1) as usize
        }
    }

    /// Number of vertices (= ranks) of the region.
    pub fn len(&self) -> u64 {
        self.total
    }

    /// Rank of column `c` of run `run` on level `σ`.
    #[inline]
    pub fn rank(&self, geo: &Geometry, sigma: i64, run: u32, c: i64) -> u64 {
        let r = &self.runs[run as usize];
        if sigma >= self.mid_lo && sigma <= self.mid_hi {
            let (q, j) = divmod_period(sigma - self.mid_lo, self.period);
            self.mid_base
                + q as u64 * self.period_total
                + self.partial[j as usize]
                + self.static_prefix[run as usize]
                + (c - r.lo) as u64
        } else {
            let slot = self.explicit_slot(sigma);
            let rho = divmod_period(sigma, self.period).1 as usize;
            let off = self.pool_off[slot] as usize + (run - self.res_start[rho]) as usize;
            let (cl, _) = geo.clip(sigma, r.row);
            self.level_base[slot] + u64::from(self.pool[off]) + (c - r.lo.max(cl)) as u64
        }
    }

    /// First rank of level `σ` (clamped to the region's level range).
    pub fn level_start(&self, sigma: i64) -> u64 {
        if sigma < self.sigma_min {
            return 0;
        }
        if sigma > self.sigma_max {
            return self.total;
        }
        if sigma >= self.mid_lo && sigma <= self.mid_hi {
            let (q, j) = divmod_period(sigma - self.mid_lo, self.period);
            self.mid_base + q as u64 * self.period_total + self.partial[j as usize]
        } else {
            self.level_base[self.explicit_slot(sigma)]
        }
    }

    /// `(σ, residue, run, column)` of a rank.
    pub fn inverse(&self, geo: &Geometry, rank: u64) -> (i64, usize, u32, i64) {
        debug_assert!(rank < self.total);
        let (sigma, inlevel, explicit) = if rank >= self.mid_base && rank < self.mid_end {
            let d = rank - self.mid_base;
            let q = d / self.period_total;
            let r = d % self.period_total;
            let mut j = 0usize;
            while j + 1 < self.period as usize && self.partial[j + 1] <= r {
                j += 1;
            }
            (
                self.mid_lo + q as i64 * self.period + j as i64,
                r - self.partial[j],
                None,
            )
        } else {
            let (lo, hi) = if rank < self.mid_base {
                (0, self.head_len)
            } else {
                (self.head_len, self.level_base.len())
            };
            let slot = lo + self.level_base[lo..hi].partition_point(|&b| b <= rank) - 1;
            let sigma = if slot < self.head_len {
                self.sigma_min + slot as i64
            } else {
                self.mid_hi + 1 + (slot - self.head_len) as i64
            };
            (sigma, rank - self.level_base[slot], Some(slot))
        };
        let rho = sigma.rem_euclid(self.period) as usize;
        let (g0, g1) = (self.res_start[rho] as usize, self.res_start[rho + 1] as usize);
        match explicit {
            None => {
                let i = g0 + self.static_prefix[g0..g1].partition_point(|&b| b <= inlevel) - 1;
                let c = self.runs[i].lo + (inlevel - self.static_prefix[i]) as i64;
                (sigma, rho, i as u32, c)
            }
            Some(slot) => {
                let off = self.pool_off[slot] as usize;
                let pool = &self.pool[off..off + (g1 - g0)];
                let j = pool.partition_point(|&b| u64::from(b) <= inlevel) - 1;
                let run = &self.runs[g0 + j];
                let (cl, _) = geo.clip(sigma, run.row);
                let c = run.lo.max(cl) + (inlevel - u64::from(pool[j])) as i64;
                (sigma, rho, (g0 + j) as u32, c)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::geometry::{Family, Geometry, MAX_T};
    use super::*;

    /// Rank order must equal (level, row, column) order of the region's vertices.
    fn check_region(geo: &Geometry, pts_t: &[[i64; MAX_T]]) {
        let mut pts: Vec<DiagPoint> = pts_t
            .iter()
            .filter_map(|p| {
                let (lo, hi) = geo.fiber(p)?;
                let (row, col) = geo.row_col(p);
                Some(DiagPoint {
                    residue: geo.residue(p),
                    row,
                    col,
                    fiber_lo: lo,
                    fiber_hi: hi,
                })
            })
            .collect();
        pts.sort_by_key(|p| (p.residue, p.row, p.col));
        let (idx, run_of) = DiagIndex::build(geo, &pts);
        let mut expected = Vec::new();
        for sigma in 0..geo.levels {
            let mut lvl: Vec<(i64, i64, usize)> = pts
                .iter()
                .enumerate()
                .filter(|(_, p)| {
                    p.residue == sigma.rem_euclid(geo.period()) as usize
                        && p.fiber_lo <= sigma
                        && sigma <= p.fiber_hi
                })
                .map(|(i, p)| (p.row, p.col, i))
                .collect();
            lvl.sort();
            for (_, _, i) in lvl {
                expected.push((sigma, i));
            }
        }
        assert_eq!(idx.len(), expected.len() as u64);
        for (rank, &(sigma, i)) in expected.iter().enumerate() {
            let p = &pts[i];
            assert_eq!(idx.rank(geo, sigma, run_of[i], p.col), rank as u64);
            let (s2, rho, run, c) = idx.inverse(geo, rank as u64);
            assert_eq!((s2, rho, run, c), (sigma, p.residue, run_of[i], p.col));
            if rank == 0 || expected[rank - 1].0 != sigma {
                assert_eq!(idx.level_start(sigma), rank as u64);
            }
        }
    }

    #[test]
    fn diagonal_2d_region_ranks() {
        let geo = Geometry::new(Family::Diag2, &[9, 7], 1);
        let mut all = vec![];
        for u in -6..=8 {
            let mut p = [0; MAX_T];
            p[0] = u;
            all.push(p);
        }
        check_region(&geo, &all);
        check_region(&geo, &all[3..9]);
        check_region(&geo, &all[0..2]);
    }

    #[test]
    fn hexagonal_region_ranks() {
        let geo = Geometry::new(Family::Hex, &[6, 5, 7], 1);
        let mut all = vec![];
        for a in -6..=5 {
            for b in -6..=4 {
                let mut p = [0; MAX_T];
                p[0] = a;
                p[1] = b;
                all.push(p);
            }
        }
        check_region(&geo, &all);
        let band: Vec<_> = all
            .iter()
            .copied()
            .filter(|p| (p[0] - 1).abs() + (p[1] + 1).abs() <= 3)
            .collect();
        check_region(&geo, &band);
        let ring: Vec<_> = all
            .iter()
            .copied()
            .filter(|p| (p[0] - p[1]).abs() == 2 || p[0] == -3)
            .collect();
        check_region(&geo, &ring);
    }

    #[test]
    fn full_index_fiber_major_skips_padding() {
        let f = FullIndex {
            count: 3,
            levels: 5,
            stride: Some(9),
        };
        assert_eq!(f.len(), 23);
        assert_eq!(f.rank(4, 2), 22);
        assert_eq!(f.inverse(22), Some((4, 2)));
        assert_eq!(f.inverse(6), None);
        let g = FullIndex {
            count: 3,
            levels: 5,
            stride: None,
        };
        assert_eq!(g.rank(4, 2), 14);
        assert_eq!(g.inverse(14), Some((4, 2)));
    }
}
