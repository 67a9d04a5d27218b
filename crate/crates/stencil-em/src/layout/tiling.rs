//! Exact tilings of the transverse plane by translates of one tile.
//!
//! A tiling is a lattice `Λ` of tile origins together with a tile `Q₀` that is
//! a complete residue system of `ℤᵗ/Λ`; the tile owning `p` is then
//! `p − rep(p mod Λ)`. Building the residue table checks that the translates of
//! `Q₀` partition the plane (no overlap, no gap).
//!
//! * boxes of side `L` (axis-aligned, `Λ = Lℤᵗ`);
//! * ℓ¹ diamonds of radius `R` with `Λ = ⟨(R, R+1), (R+1, −R)⟩` (index `2R² + 2R + 1`);
//! * hexagonal tiles `T(m)` of the diagonal 3D sweep with
//!   `Λ = ⟨(3m+1, −1), (3m+2, 3m+1)⟩` (index `3(3m² + 3m + 1)`).
//!
//! The *window* `W` of a tiling is the set of transverse offsets whose union
//! with a tile gives its working band `H = Q ⊕ W`.

use super::geometry::{TPoint, MAX_T};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Scheme {
    Boxes {
        side: i64,
        offset: TPoint,
    },
    Lattice {
        h11: i64,
        h21: i64,
        h22: i64,
        rep: Vec<TPoint>,
        q0: Vec<TPoint>,
    },
}

/// A tiling of `ℤᵗ` plus its window.
#[derive(Clone, Debug)]
pub(crate) struct Tiling {
    pub t: usize,
    scheme: Scheme,
    pub window: Vec<TPoint>,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Offsets of the box `[−s, s]ᵗ`.
pub(crate) fn box_window(t: usize, s: i64) -> Vec<TPoint> {
    let mut out = vec![[0i64; MAX_T]];
    for i in 0..t {
        let mut next = Vec::with_capacity(out.len() * (2 * s as usize + 1));
        for p in &out {
            for d in -s..=s {
                let mut q = *p;
                q[i] = d;
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Offsets of the planar ℓ¹ ball of radius `r`.
pub(crate) fn diamond(r: i64) -> Vec<TPoint> {
    let mut out = Vec::new();
    for x in -r..=r {
        let rest = r - x.abs();
        for y in -rest..=rest {
            let mut p = [0i64; MAX_T];
            p[0] = x;
            p[1] = y;
            out.push(p);
        }
    }
    out
}

/// The two-dimensional projection `P_s` of the s-star onto the hexagonal
/// transverse plane, evaluated from its defining set: the ℓ¹ ball of radius
/// `s` together with the ℓ∞ ball of radius `s` restricted to the closed
/// positive and negative quadrants.
pub(crate) fn hex_window(s: i64) -> Vec<TPoint> {
    let mut out = Vec::new();
    for a in -s..=s {
        for b in -s..=s {
            let l1 = a.abs() + b.abs() <= s;
            let same_sign = (a <= 0 && b <= 0) || (a >= 0 && b >= 0);
            if l1 || same_sign {
                let mut p = [0i64; MAX_T];
                p[0] = a;
                p[1] = b;
                out.push(p);
            }
        }
    }
    out
}

/// The hexagonal tile `T(m)`: residue-0 points whose level-0 preimage has
/// ℓ¹ norm ≤ 2m, plus its translates by `(1,0)` and `(1,1)`.
pub(crate) fn hex_tile(m: i64) -> Vec<TPoint> {
    let mut base = Vec::new();
    for a in -2 * m..=2 * m {
        for b in -2 * m..=2 * m {
            if (a + b).rem_euclid(3) != 0 {
                continue;
            }
            let z = -(a + b) / 3;
            if (z + a).abs() + (z + b).abs() + z.abs() <= 2 * m {
                base.push((a, b));
            }
        }
    }
    let mut out = Vec::with_capacity(3 * base.len());
    for (da, db) in [(0, 0), (1, 0), (1, 1)] {
        for &(a, b) in &base {
            let mut p = [0i64; MAX_T];
            p[0] = a + da;
            p[1] = b + db;
            out.push(p);
        }
    }
    out
}

impl Tiling {
    /// Axis-aligned boxes of side `side` with a tile origin at `offset`.
    pub fn boxes(t: usize, side: i64, offset: TPoint, window: Vec<TPoint>) -> Self {
        Self {
            t,
            scheme: Scheme::Boxes { side, offset },
            window,
        }
    }

    /// Planar lattice tiling; fails unless `q0` is a complete residue system.
    pub fn lattice(v1: (i64, i64), v2: (i64, i64), q0: Vec<TPoint>, window: Vec<TPoint>) -> Result<Self> {
        let det = (v1.0 * v2.1 - v1.1 * v2.0).abs();
        if det == 0 {
            return Err(Error::InvalidConfig("degenerate tiling lattice".into()));
        }
        let (g, i0, j0) = ext_gcd(v1.1, v2.1);
        let (mut w0, mut w1) = (i0 * v1.0 + j0 * v2.0, g);
        if w1 < 0 {
            w0 = -w0;
            w1 = -w1;
        }
        let h22 = w1;
        let h11 = det / h22;
        let h21 = w0.rem_euclid(h11);
        let mut scheme = Scheme::Lattice {
            h11,
            h21,
            h22,
            rep: Vec::new(),
            q0: Vec::new(),
        };
        let mut rep = vec![[i64::MIN; MAX_T]; det as usize];
        if q0.len() as i64 != det {
            return Err(Error::InvalidConfig(format!(
                "tile has {} points but the lattice index is {det}",
                q0.len()
            )));
        }
        let probe = Self {
            t: 2,
            scheme: scheme.clone(),
            window: Vec::new(),
        };
        for q in &q0 {
            let r = probe.residue_index(q);
            if rep[r][0] != i64::MIN {
                return Err(Error::InvalidConfig("tile translates overlap".into()));
            }
            rep[r] = *q;
        }
        if let Scheme::Lattice {
            rep: ref mut r,
            q0: ref mut qq,
            ..
        } = scheme
        {
            *r = rep;
            *qq = q0;
        }
        Ok(Self {
            t: 2,
            scheme,
            window,
        })
    }

    /// ℓ¹ diamonds of radius `r` with window the ℓ¹ ball of radius `s`.
    pub fn lee(r: i64, s: i64) -> Result<Self> {
        Self::lattice((r, r + 1), (r + 1, -r), diamond(r), diamond(s))
    }

    /// Hexagonal tiles `T(m)` with window `P_s`.
    pub fn hex(m: i64, s: i64) -> Result<Self> {
        Self::lattice((3 * m + 1, -1), (3 * m + 2, 3 * m + 1), hex_tile(m), hex_window(s))
    }

    fn residue_index(&self, p: &TPoint) -> usize {
        match &self.scheme {
            Scheme::Boxes { .. } => 0,
            Scheme::Lattice { h11, h21, h22, .. } => {
                let j = p[1].div_euclid(*h22);
                let q0 = p[0] - j * h21;
                let q1 = p[1] - j * h22;
                (q1 * h11 + q0.rem_euclid(*h11)) as usize
            }
        }
    }

    /// Origin of the tile containing `p`.
    #[inline]
    pub fn origin(&self, p: &TPoint) -> TPoint {
        match &self.scheme {
            Scheme::Boxes { side, offset } => {
                let mut o = [0i64; MAX_T];
                for i in 0..self.t {
                    o[i] = offset[i] + (p[i] - offset[i]).div_euclid(*side) * side;
                }
                o
            }
            Scheme::Lattice { rep, .. } => {
                let r = &rep[self.residue_index(p)];
                let mut o = [0i64; MAX_T];
                o[0] = p[0] - r[0];
                o[1] = p[1] - r[1];
                o
            }
        }
    }

    /// Number of points per tile.
    #[cfg(test)]
    pub fn area(&self) -> u64 {
        match &self.scheme {
            Scheme::Boxes { side, .. } => (*side as u64).pow(self.t as u32),
            Scheme::Lattice { q0, .. } => q0.len() as u64,
        }
    }

    /// Points of the tile with origin `o`.
    pub fn tile_points(&self, o: &TPoint) -> Vec<TPoint> {
        match &self.scheme {
            Scheme::Boxes { side, .. } => {
                let mut out = box_window(self.t, 0);
                for i in 0..self.t {
                    let mut next = Vec::with_capacity(out.len() * *side as usize);
                    for p in &out {
                        for d in 0..*side {
                            let mut q = *p;
                            q[i] = o[i] + d;
                            next.push(q);
                        }
                    }
                    out = next;
                }
                out
            }
            Scheme::Lattice { q0, .. } => q0
                .iter()
                .map(|q| {
                    let mut p = [0i64; MAX_T];
                    p[0] = o[0] + q[0];
                    p[1] = o[1] + q[1];
                    p
                })
                .collect(),
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn check_partition(t: &Tiling, span: i64) {
        // Every point of a window of the plane has exactly one owner whose tile contains it.
        let mut owners: HashMap<TPoint, Vec<TPoint>> = HashMap::new();
        for x in -span..=span {
            for y in -span..=span {
                let mut p = [0i64; MAX_T];
                p[0] = x;
                p[1] = y;
                let o = t.origin(&p);
                owners.entry(o).or_default().push(p);
            }
        }
        for (o, pts) in owners {
            let tile: HashSet<TPoint> = t.tile_points(&o).into_iter().collect();
            for p in pts {
                assert!(tile.contains(&p), "{p:?} not in tile {o:?}");
            }
        }
    }

    #[test]
    fn lee_diamonds_tile_the_plane() {
        for r in 1..6 {
            let t = Tiling::lee(r, 1).unwrap();
            assert_eq!(t.area() as i64, 2 * r * r + 2 * r + 1);
            check_partition(&t, 3 * r + 4);
        }
    }

    #[test]
    fn hexagons_tile_the_plane() {
        for m in 1..7 {
            let t = Tiling::hex(m, 1).unwrap();
            assert_eq!(t.area() as i64, 3 * (3 * m * m + 3 * m + 1));
            check_partition(&t, 6 * m + 4);
        }
    }

    #[test]
    fn boxes_tile_with_offset() {
        let mut off = [0i64; MAX_T];
        off[0] = -3;
        let t = Tiling::boxes(2, 4, off, box_window(2, 1));
        let mut p = [0i64; MAX_T];
        p[0] = -4;
        p[1] = 5;
        let o = t.origin(&p);
        assert_eq!(&o[..2], &[-7, 4]);
        assert_eq!(t.area(), 16);
        assert_eq!(t.window.len(), 9);
    }

    #[test]
    fn hex_window_is_the_projected_star() {
        for s in 1..4i64 {
            let from_def: HashSet<TPoint> = hex_window(s).into_iter().collect();
            let mut proj = HashSet::new();
            for d in crate::grid::star_offsets(3, s as u32) {
                let mut p = [0i64; MAX_T];
                p[0] = d[0] - d[2];
                p[1] = d[1] - d[2];
                proj.insert(p);
            }
            assert_eq!(from_def, proj);
        }
        assert_eq!(hex_window(1).len(), 7);
        assert_eq!(hex_window(2).len(), 19);
    }
}
