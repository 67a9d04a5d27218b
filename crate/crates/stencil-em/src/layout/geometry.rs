//! Prism coordinates of every layout kind.
//!
//! Each kind sweeps along a *level* function `σ(x)` (a linear form) and
//! partitions the grid into *fibers*: the vertices sharing a transverse point
//! `π(x)` (the projection along the sweep direction).
//!
//! | family | `σ(x)` | `π(x)` | period |
//! |---|---|---|---|
//! | axis | `x₁` | `(x₂, …, xₙ)` | 1 |
//! | 2D diagonal | `x₁ + x₂` | `u = x₁ − x₂` | 2 |
//! | hexagonal | `x₁ + x₂ + x₃` | `(a, b) = (x₁ − x₃, x₂ − x₃)` | 3 |
//!
//! On a diagonal family a transverse point only meets the levels congruent to
//! its *residue* modulo the period. Inside a level, transverse points are
//! grouped in *rows* and addressed by a column `c` that advances by one between
//! consecutive vertices of the level:
//!
//! * 2D diagonal: one row, `c = (−u − ρ)/2` with `ρ = u mod 2`; increasing `c`
//!   is increasing `x₂` along the diagonal.
//! * hexagonal: row `−(a + b)` (increasing `x₃`), column `b` (increasing `x₂`).

use crate::grid::MAX_DIM;

/// Largest transverse dimension.
pub(crate) const MAX_T: usize = MAX_DIM - 1;

/// A transverse point.
pub(crate) type TPoint = [i64; MAX_T];

/// Level function family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Family {
    Axis,
    Diag2,
    Hex,
}

/// Prism coordinates of one kind on one grid.
#[derive(Clone, Debug)]
pub(crate) struct Geometry {
    pub family: Family,
    pub n: usize,
    pub t: usize,
    pub k: [i64; MAX_DIM],
    pub s: i64,
    /// Transverse bounding box: lower corner and side lengths.
    pub tlo: TPoint,
    pub tdim: TPoint,
    pub tcount: u64,
    tstride: TPoint,
    /// Largest level plus one.
    pub levels: i64,
    /// Size of the in-level key space (positions are `σ·keyspan + key`).
    pub keyspan: u64,
}

impl Geometry {
    pub fn new(family: Family, sides: &[u64], s: u32) -> Self {
        let n = sides.len();
        let mut k = [1i64; MAX_DIM];
        for (i, &ki) in sides.iter().enumerate() {
            k[i] = ki as i64;
        }
        let t = n - 1;
        let mut tlo = [0i64; MAX_T];
        let mut tdim = [1i64; MAX_T];
        let s = i64::from(s);
        let (levels, keyspan);
        match family {
            Family::Axis => {
                tdim[..t].copy_from_slice(&k[1..n]);
                levels = k[0];
                keyspan = k[1..n].iter().product::<i64>() as u64;
            }
            Family::Diag2 => {
                tlo[0] = -(k[1] - 1);
                tdim[0] = k[0] + k[1] - 1;
                levels = k[0] + k[1] - 1;
                keyspan = (k[1] + s + 1) as u64;
            }
            Family::Hex => {
                tlo[0] = -(k[2] - 1);
                tlo[1] = -(k[2] - 1);
                tdim[0] = k[0] + k[2] - 1;
                tdim[1] = k[1] + k[2] - 1;
                levels = k[0] + k[1] + k[2] - 2;
                keyspan = ((k[2] + s + 1) * k[1]) as u64;
            }
        }
        let mut tstride = [0i64; MAX_T];
        let mut acc = 1i64;
        for i in (0..t).rev() {
            tstride[i] = acc;
            acc *= tdim[i];
        }
        Self {
            family,
            n,
            t,
            k,
            s,
            tlo,
            tdim,
            tcount: acc as u64,
            tstride,
            levels,
            keyspan,
        }
    }

    /// Residue period of levels along a fiber.
    #[inline]
    pub fn period(&self) -> i64 {
        match self.family {
            Family::Axis => 1,
            Family::Diag2 => 2,
            Family::Hex => 3,
        }
    }

    #[inline]
    pub fn level(&self, x: &[i64; MAX_DIM]) -> i64 {
        match self.family {
            Family::Axis => x[0],
            Family::Diag2 => x[0] + x[1],
            Family::Hex => x[0] + x[1] + x[2],
        }
    }

    #[inline]
    pub fn trans(&self, x: &[i64; MAX_DIM]) -> TPoint {
        let mut p = [0i64; MAX_T];
        match self.family {
            Family::Axis => p[..self.t].copy_from_slice(&x[1..self.n]),
            Family::Diag2 => p[0] = x[0] - x[1],
            Family::Hex => {
                p[0] = x[0] - x[2];
                p[1] = x[1] - x[2];
            }
        }
        p
    }

    /// Vertex on level `σ` of the fiber through `p`, if it exists in the grid.
    #[inline]
    pub fn lift(&self, sigma: i64, p: &TPoint) -> Option<[i64; MAX_DIM]> {
        let mut x = [0i64; MAX_DIM];
        match self.family {
            Family::Axis => {
                x[0] = sigma;
                x[1..self.n].copy_from_slice(&p[..self.t]);
            }
            Family::Diag2 => {
                let u = p[0];
                if (sigma + u).rem_euclid(2) != 0 {
                    return None;
                }
                x[0] = (sigma + u) / 2;
                x[1] = (sigma - u) / 2;
            }
            Family::Hex => {
                let w = p[0] + p[1];
                if (sigma - w).rem_euclid(3) != 0 {
                    return None;
                }
                let z = (sigma - w).div_euclid(3);
                x[0] = z + p[0];
                x[1] = z + p[1];
                x[2] = z;
            }
        }
        if (0..self.n).all(|i| x[i] >= 0 && x[i] < self.k[i]) {
            Some(x)
        } else {
            None
        }
    }

    /// Residue of a transverse point: it meets levels `σ ≡ residue (mod period)`.
    #[inline]
    pub fn residue(&self, p: &TPoint) -> usize {
        match self.family {
            Family::Axis => 0,
            Family::Diag2 => (p[0] & 1) as usize,
            Family::Hex => (p[0] + p[1]).rem_euclid(3) as usize,
        }
    }

    /// Inclusive level range of the fiber through `p` (levels step by the period).
    pub fn fiber(&self, p: &TPoint) -> Option<(i64, i64)> {
        let (lo, hi) = match self.family {
            Family::Axis => {
                if !(0..self.t).all(|i| p[i] >= 0 && p[i] < self.k[i + 1]) {
                    return None;
                }
                (0, self.k[0] - 1)
            }
            Family::Diag2 => {
                let u = p[0];
                (u.abs(), (2 * self.k[0] - 2 - u).min(2 * self.k[1] - 2 + u))
            }
            Family::Hex => {
                let (a, b) = (p[0], p[1]);
                let zlo = 0.max(-a).max(-b);
                let zhi = (self.k[2] - 1).min(self.k[0] - 1 - a).min(self.k[1] - 1 - b);
                if zlo > zhi {
                    return None;
                }
                (3 * zlo + a + b, 3 * zhi + a + b)
            }
        };
        (lo <= hi).then_some((lo, hi))
    }

    /// Row and column of a transverse point (diagonal families).
    #[inline]
    pub fn row_col(&self, p: &TPoint) -> (i64, i64) {
        match self.family {
            Family::Axis => (0, 0),
            Family::Diag2 => {
                let rho = p[0] & 1;
                (0, (-p[0] - rho) >> 1)
            }
            Family::Hex => (-(p[0] + p[1]), p[1]),
        }
    }

    /// Inverse of [`Self::row_col`] for a point of residue `rho`.
    #[inline]
    pub fn from_row_col(&self, rho: usize, row: i64, c: i64) -> TPoint {
        let mut p = [0i64; MAX_T];
        match self.family {
            Family::Axis => {}
            Family::Diag2 => p[0] = -2 * c - rho as i64,
            Family::Hex => {
                let w = -row;
                p[0] = w - c;
                p[1] = c;
            }
        }
        p
    }

    /// Columns of `row` present on level `σ` (possibly empty: `lo > hi`).
    #[inline]
    pub fn clip(&self, sigma: i64, row: i64) -> (i64, i64) {
        match self.family {
            Family::Axis => (i64::MIN, i64::MAX),
            Family::Diag2 => {
                let rho = sigma.rem_euclid(2);
                let half_hi = (sigma + rho) / 2;
                let half_lo = (sigma - rho) / 2;
                (
                    (-half_hi).max(half_lo - self.k[0] + 1),
                    (self.k[1] - 1 - half_hi).min(half_lo),
                )
            }
            Family::Hex => {
                let w = -row;
                if (sigma - w).rem_euclid(3) != 0 {
                    return (1, 0);
                }
                let z = (sigma - w).div_euclid(3);
                if z < 0 || z >= self.k[2] {
                    return (1, 0);
                }
                (
                    (-z).max(z + w - self.k[0] + 1),
                    (self.k[1] - 1 - z).min(z + w),
                )
            }
        }
    }

    /// Change of the table index under a transverse shift `dp`.
    pub fn tindex_delta(&self, dp: &TPoint) -> i64 {
        (0..self.t).map(|i| dp[i] * self.tstride[i]).sum()
    }

    /// Linear index of `p` in the transverse bounding box, if inside.
    #[inline]
    pub fn tindex(&self, p: &TPoint) -> Option<u64> {
        let mut idx = 0i64;
        for i in 0..self.t {
            let d = p[i] - self.tlo[i];
            if d < 0 || d >= self.tdim[i] {
                return None;
            }
            idx += d * self.tstride[i];
        }
        Some(idx as u64)
    }

    /// Inverse of [`Self::tindex`].
    pub fn tpoint(&self, mut idx: u64) -> TPoint {
        let mut p = [0i64; MAX_T];
        for i in (0..self.t).rev() {
            let d = self.tdim[i] as u64;
            p[i] = (idx % d) as i64 + self.tlo[i];
            idx /= d;
        }
        p
    }

    /// In-level evaluation key of vertex `x` (monotone in the sweep order).
    #[inline]
    pub fn key(&self, x: &[i64; MAX_DIM]) -> u64 {
        match self.family {
            Family::Axis => {
                let mut idx = 0i64;
                for i in 0..self.t {
                    idx = idx * self.k[i + 1] + x[i + 1];
                }
                idx as u64
            }
            Family::Diag2 => x[1] as u64,
            Family::Hex => (x[2] * self.k[1] + x[1]) as u64,
        }
    }

    /// Sweep position of evaluating `x`.
    #[inline]
    pub fn position(&self, x: &[i64; MAX_DIM]) -> u64 {
        self.level(x) as u64 * self.keyspan + self.key(x)
    }

    /// Upper bound on the position of the last evaluation that reads input `x`
    /// when the whole fiber neighborhood of `x` is swept by one tile.
    #[inline]
    pub fn death(&self, x: &[i64; MAX_DIM]) -> u64 {
        let s = self.s;
        let key = match self.family {
            Family::Axis => self.key(x),
            Family::Diag2 => (x[1] + s) as u64,
            Family::Hex => ((x[2] + s) * self.k[1] + x[1]) as u64,
        };
        (self.level(x) + s) as u64 * self.keyspan + key
    }

    /// In-row order of transverse points for region sorting: `(residue, row, col)`
    /// for diagonal families, lexicographic coordinates for the axis family.
    pub fn sort_key(&self, p: &TPoint) -> (usize, i64, i64, TPoint) {
        match self.family {
            Family::Axis => (0, 0, 0, *p),
            _ => {
                let (r, c) = self.row_col(p);
                (self.residue(p), r, c, [0; MAX_T])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_vertices(k: &[u64]) -> Vec<[i64; MAX_DIM]> {
        let mut out = vec![];
        let n = k.len();
        let total: u64 = k.iter().product();
        for mut i in 0..total {
            let mut x = [0i64; MAX_DIM];
            for d in (0..n).rev() {
                x[d] = (i % k[d]) as i64;
                i /= k[d];
            }
            out.push(x);
        }
        out
    }

    fn check_family(f: Family, k: &[u64]) {
        let g = Geometry::new(f, k, 1);
        let mut per_fiber = std::collections::HashMap::<TPoint, Vec<i64>>::new();
        for x in all_vertices(k) {
            let sigma = g.level(&x);
            let p = g.trans(&x);
            assert!(sigma >= 0 && sigma < g.levels);
            assert_eq!(g.lift(sigma, &p), Some(x));
            assert_eq!(sigma.rem_euclid(g.period()) as usize, g.residue(&p));
            assert!(g.tindex(&p).is_some());
            assert_eq!(g.tpoint(g.tindex(&p).unwrap()), p);
            if f != Family::Axis {
                let (r, c) = g.row_col(&p);
                assert_eq!(g.from_row_col(g.residue(&p), r, c), p);
                let (lo, hi) = g.clip(sigma, r);
                assert!(lo <= c && c <= hi, "{x:?}");
            }
            per_fiber.entry(p).or_default().push(sigma);
        }
        for (p, mut levels) in per_fiber {
            levels.sort();
            let (lo, hi) = g.fiber(&p).unwrap();
            assert_eq!(levels[0], lo);
            assert_eq!(*levels.last().unwrap(), hi);
            assert_eq!(levels.len() as i64, (hi - lo) / g.period() + 1);
        }
    }

    #[test]
    fn coordinates_are_bijective() {
        check_family(Family::Axis, &[4, 5, 3]);
        check_family(Family::Diag2, &[7, 5]);
        check_family(Family::Diag2, &[4, 9]);
        check_family(Family::Hex, &[5, 4, 6]);
    }

    #[test]
    fn clip_is_exact_on_diagonals() {
        for (f, k) in [(Family::Diag2, vec![6u64, 8]), (Family::Hex, vec![4, 5, 3])] {
            let g = Geometry::new(f, &k, 1);
            for sigma in 0..g.levels {
                for idx in 0..g.tcount {
                    let p = g.tpoint(idx);
                    if g.residue(&p) != sigma.rem_euclid(g.period()) as usize {
                        continue;
                    }
                    let (r, c) = g.row_col(&p);
                    let (lo, hi) = g.clip(sigma, r);
                    assert_eq!(g.lift(sigma, &p).is_some(), lo <= c && c <= hi);
                }
            }
        }
    }

    #[test]
    fn positions_follow_sweep_order() {
        let g = Geometry::new(Family::Hex, &[4, 4, 4], 1);
        // Within a level: increasing x₃, then increasing x₂.
        let a = [2, 1, 0, 0, 0, 0];
        let b = [1, 2, 0, 0, 0, 0];
        let c = [1, 1, 1, 0, 0, 0];
        assert!(g.position(&a) < g.position(&b));
        assert!(g.position(&b) < g.position(&c));
        // Death bounds every reader's position.
        for x in all_vertices(&[4, 4, 4]) {
            for d in crate::grid::star_offsets(3, 1) {
                let y: Vec<i64> = (0..3).map(|i| x[i] - d[i]).collect();
                if y.iter().zip([4, 4, 4]).all(|(&v, k)| v >= 0 && v < k) {
                    let mut yy = [0; MAX_DIM];
                    yy[..3].copy_from_slice(&y);
                    assert!(g.position(&yy) <= g.death(&x));
                }
            }
        }
    }
}
