//! Vertex universe: n-dimensional grids and tori, the s-star stencil, and
//! row-major index arithmetic.
//!
//! Coordinates are 0-based: a vertex of a grid with sides `k₁ … kₙ` has
//! `0 ≤ xᵢ < kᵢ`. Linear indices are row-major with the *last* coordinate
//! varying fastest, so on a 3×4 grid `(1,0)` has index 4.

use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt;

/// Largest dimension supported anywhere in the crate.
pub const MAX_DIM: usize = 6;

/// Boundary behavior of the vertex universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Topology {
    /// A box; vertices outside simply do not exist.
    Grid,
    /// Every coordinate wraps around.
    Torus,
}

/// A grid point. Stored inline so that hot loops never allocate.
#[derive(Clone, Copy)]
pub struct Vertex {
    n: u8,
    c: [i64; MAX_DIM],
}

// Only the first `n` coordinates are meaningful.
impl PartialEq for Vertex {
    #[inline]
    fn eq(&self, other: &Self) -> bool {
        self.coords() == other.coords()
    }
}

impl Eq for Vertex {}

impl std::hash::Hash for Vertex {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coords().hash(state);
    }
}

impl Vertex {
    /// Build a vertex from its coordinates.
    ///
    /// # Panics
    /// If more than [`MAX_DIM`] coordinates are given.
    pub fn new(coords: &[i64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            n: coords.len() as u8,
            c,
        }
    }

    /// Build a vertex from a fixed array whose first `n` entries are used.
    pub(crate) fn from_raw(n: usize, c: [i64; MAX_DIM]) -> Self {
        Self { n: n as u8, c }
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    /// The coordinates.
    pub fn coords(&self) -> &[i64] {
        &self.c[..self.n as usize]
    }

    pub(crate) fn raw(&self) -> &[i64; MAX_DIM] {
        &self.c
    }

    /// `self + d` coordinate-wise (no range check).
    pub(crate) fn offset(&self, d: &[i64; MAX_DIM]) -> Self {
        let mut c = self.c;
        for i in 0..self.n as usize {
            c[i] += d[i];
        }
        Self { n: self.n, c }
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// Dimensions, side lengths and topology of the vertex universe.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    sides: Vec<u64>,
    topology: Topology,
    count: u64,
}

impl GridSpec {
    /// Validate and build a grid description.
    ///
    /// Rejects zero dimensions, more than [`MAX_DIM`] dimensions, zero sides and
    /// vertex counts that overflow a signed 64-bit index.
    pub fn new(sides: &[u64], topology: Topology) -> Result<Self> {
        if sides.is_empty() || sides.len() > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                sides.len()
            )));
        }
        if sides.iter().any(|&k| k == 0) {
            return Err(Error::InvalidGrid("side lengths must be ≥ 1".into()));
        }
        let mut count: u64 = 1;
        for &k in sides {
            count = count
                .checked_mul(k)
                .filter(|&c| c <= i64::MAX as u64)
                .ok_or_else(|| Error::InvalidGrid("vertex count overflows 64 bits".into()))?;
        }
        Ok(Self {
            sides: sides.to_vec(),
            topology,
            count,
        })
    }

    /// Shorthand for a non-periodic grid.
    pub fn grid(sides: &[u64]) -> Result<Self> {
        Self::new(sides, Topology::Grid)
    }

    /// Shorthand for a torus.
    pub fn torus(sides: &[u64]) -> Result<Self> {
        Self::new(sides, Topology::Torus)
    }

    /// Number of dimensions `n`.
    pub fn n(&self) -> usize {
        self.sides.len()
    }

    /// Side lengths in the order given.
    pub fn sides(&self) -> &[u64] {
        &self.sides
    }

    /// Side length `kᵢ` (0-based axis).
    pub fn side(&self, i: usize) -> u64 {
        self.sides[i]
    }

    /// Grid or torus.
    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// `∏ kᵢ`.
    pub fn vertex_count(&self) -> u64 {
        self.count
    }

    /// Whether `k₁ ≥ k₂ ≥ … ≥ kₙ`, the ordering assumed by the analysis.
    pub fn is_canonically_ordered(&self) -> bool {
        self.sides.windows(2).all(|w| w[0] >= w[1])
    }

    /// Whether `x` has the right dimension and lies inside the box.
    pub fn contains(&self, x: &Vertex) -> bool {
        x.dim() == self.n()
            && x
                .coords()
                .iter()
                .zip(&self.sides)
                .all(|(&c, &k)| c >= 0 && (c as u64) < k)
    }

    /// Inside-the-box test on raw coordinates (hot path).
    #[inline]
    pub(crate) fn contains_raw(&self, c: &[i64; MAX_DIM]) -> bool {
        for i in 0..self.sides.len() {
            if c[i] < 0 || c[i] as u64 >= self.sides[i] {
                return false;
            }
        }
        true
    }

    /// Row-major index of `x`.
    pub fn linearize(&self, x: &Vertex) -> Result<u64> {
        if !self.contains(x) {
            return Err(Error::OutOfRange(format!("{x:?} not in grid {:?}", self.sides)));
        }
        Ok(self.linearize_unchecked(x))
    }

    #[inline]
    pub(crate) fn linearize_unchecked(&self, x: &Vertex) -> u64 {
        let mut idx = 0u64;
        for (i, &k) in self.sides.iter().enumerate() {
            idx = idx * k + x.c[i] as u64;
        }
        idx
    }

    /// Inverse of [`GridSpec::linearize`].
    pub fn delinearize(&self, index: u64) -> Result<Vertex> {
        if index >= self.count {
            return Err(Error::OutOfRange(format!(
                "index {index} ≥ vertex count {}",
                self.count
            )));
        }
        let mut c = [0i64; MAX_DIM];
        let mut rest = index;
        for i in (0..self.n()).rev() {
            c[i] = (rest % self.sides[i]) as i64;
            rest /= self.sides[i];
        }
        Ok(Vertex::from_raw(self.n(), c))
    }

    /// All vertices in row-major order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.count).map(move |i| self.delinearize(i).expect("index in range"))
    }
}

/// The s-star stencil `S_s(x) = { y : ‖y − x‖₁ ≤ s }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StencilSpec {
    s: u32,
}

impl StencilSpec {
    /// Radius `s ≥ 1`.
    pub fn new(s: u32) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidStencil("radius must be ≥ 1".into()));
        }
        Ok(Self { s })
    }

    /// The radius.
    pub fn s(&self) -> u32 {
        self.s
    }

    /// Check the standing assumption `2s < min kᵢ`.
    pub fn validate_for(&self, g: &GridSpec) -> Result<()> {
        let min = *g.sides().iter().min().expect("non-empty");
        if 2 * self.s as u64 >= min {
            return Err(Error::InvalidStencil(format!(
                "need 2s < min side, got s = {} and min side {min}",
                self.s
            )));
        }
        Ok(())
    }
}

/// All offsets `δ ∈ ℤⁿ` with `‖δ‖₁ ≤ s`, center included, in lexicographic order.
pub fn star_offsets(n: usize, s: u32) -> Vec<[i64; MAX_DIM]> {
    fn rec(i: usize, n: usize, budget: i64, cur: &mut [i64; MAX_DIM], out: &mut Vec<[i64; MAX_DIM]>) {
        if i == n {
            out.push(*cur);
            return;
        }
        for d in -budget..=budget {
            cur[i] = d;
            rec(i + 1, n, budget - d.abs(), cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(0, n, s as i64, &mut [0; MAX_DIM], &mut out);
    out
}

/// `S_s(x)` on `g`: box-truncated on a grid, wrapped (and deduplicated) on a torus.
/// The center is included.
pub fn stencil_neighbors(g: &GridSpec, st: StencilSpec, x: &Vertex) -> Vec<Vertex> {
    let mut out = Vec::new();
    Neighborhood::new(g, st).collect(g, x, &mut out);
    out
}

/// Precomputed stencil offsets for repeated neighbor enumeration.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    offsets: Vec<[i64; MAX_DIM]>,
    torus_needs_dedup: bool,
}

impl Neighborhood {
    /// Offsets of the s-star in `g`'s dimension.
    pub fn new(g: &GridSpec, st: StencilSpec) -> Self {
        let torus_needs_dedup = g.topology() == Topology::Torus
            && g.sides().iter().any(|&k| k <= 2 * st.s() as u64);
        Self {
            offsets: star_offsets(g.n(), st.s()),
            torus_needs_dedup,
        }
    }

    /// The raw offsets.
    pub fn offsets(&self) -> &[[i64; MAX_DIM]] {
        &self.offsets
    }

    /// Append the neighbors of `x` to `out` (cleared first).
    pub fn collect(&self, g: &GridSpec, x: &Vertex, out: &mut Vec<Vertex>) {
        out.clear();
        let n = g.n();
        match g.topology() {
            Topology::Grid => {
                for d in &self.offsets {
                    let y = x.offset(d);
                    if g.contains_raw(y.raw()) {
                        out.push(y);
                    }
                }
            }
            Topology::Torus => {
                for d in &self.offsets {
                    let mut c = *x.raw();
                    for (i, ci) in c.iter_mut().enumerate().take(n) {
                        *ci = (*ci + d[i]).rem_euclid(g.side(i) as i64);
                    }
                    out.push(Vertex::from_raw(n, c));
                }
                if self.torus_needs_dedup {
                    let mut seen = HashSet::with_capacity(out.len());
                    out.retain(|v| seen.insert(*v));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[i64]) -> Vertex {
        Vertex::new(c)
    }

    #[test]
    fn torus_wraps_in_one_dimension() {
        let g = GridSpec::torus(&[5]).unwrap();
        let mut got: Vec<i64> = stencil_neighbors(&g, StencilSpec::new(1).unwrap(), &v(&[0]))
            .iter()
            .map(|x| x.coords()[0])
            .collect();
        got.sort();
        assert_eq!(got, vec![0, 1, 4]);
    }

    #[test]
    fn interior_and_corner_truncation() {
        let g = GridSpec::grid(&[5, 5]).unwrap();
        let st = StencilSpec::new(1).unwrap();
        assert_eq!(stencil_neighbors(&g, st, &v(&[2, 2])).len(), 5);
        let corner = stencil_neighbors(&g, st, &v(&[0, 0]));
        assert_eq!(corner.len(), 3);
        assert!(corner.contains(&v(&[1, 0])) && corner.contains(&v(&[0, 1])));
    }

    #[test]
    fn three_d_torus_one_star_has_seven_points() {
        // Lattice points with ‖δ‖₁ ≤ 1 in ℤ³: the origin and ±eᵢ.
        let brute = (-1i64..=1)
            .flat_map(|a| (-1i64..=1).flat_map(move |b| (-1i64..=1).map(move |c| [a, b, c])))
            .filter(|d| d.iter().map(|x| x.abs()).sum::<i64>() <= 1)
            .count();
        let g = GridSpec::torus(&[7, 7, 7]).unwrap();
        let st = StencilSpec::new(1).unwrap();
        for x in g.vertices().step_by(37) {
            assert_eq!(stencil_neighbors(&g, st, &x).len(), brute);
        }
    }

    #[test]
    fn tiny_torus_deduplicates() {
        let g = GridSpec::torus(&[2, 3]).unwrap();
        let nb = stencil_neighbors(&g, StencilSpec::new(1).unwrap(), &v(&[0, 0]));
        let set: HashSet<_> = nb.iter().collect();
        assert_eq!(set.len(), nb.len());
        assert_eq!(nb.len(), 4); // (0,0), (1,0), (0,1), (0,2)
    }

    #[test]
    fn counts_and_row_major() {
        assert_eq!(GridSpec::grid(&[3, 4]).unwrap().vertex_count(), 12);
        assert_eq!(GridSpec::grid(&[7]).unwrap().vertex_count(), 7);
        assert_eq!(GridSpec::grid(&[2, 3, 4]).unwrap().vertex_count(), 24);
        let g = GridSpec::grid(&[3, 4]).unwrap();
        assert_eq!(g.linearize(&v(&[0, 0])).unwrap(), 0);
        assert_eq!(g.linearize(&v(&[1, 0])).unwrap(), 4);
        for i in 0..12 {
            assert_eq!(g.linearize(&g.delinearize(i).unwrap()).unwrap(), i);
        }
        assert!(g.delinearize(12).is_err());
        assert!(g.linearize(&v(&[3, 0])).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::grid(&[]).is_err());
        assert!(GridSpec::grid(&[3, 0]).is_err());
        assert!(GridSpec::grid(&[u64::MAX, 2]).is_err());
        assert!(GridSpec::grid(&[1; 7]).is_err());
        assert!(StencilSpec::new(0).is_err());
        let g = GridSpec::grid(&[4, 10]).unwrap();
        assert!(StencilSpec::new(2).unwrap().validate_for(&g).is_err());
        assert!(StencilSpec::new(1).unwrap().validate_for(&g).is_ok());
    }

    #[test]
    fn canonical_order_helper() {
        assert!(GridSpec::grid(&[5, 5, 3]).unwrap().is_canonically_ordered());
        assert!(!GridSpec::grid(&[3, 5]).unwrap().is_canonically_ordered());
    }

    #[test]
    fn star_offsets_are_symmetric() {
        let offs = star_offsets(3, 2);
        for d in &offs {
            let neg = {
                let mut m = *d;
                m.iter_mut().for_each(|x| *x = -*x);
                m
            };
            assert!(offs.contains(&neg));
        }
    }
}
