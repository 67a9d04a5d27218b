//! Exact combinatorics of ℓ¹ balls, plus closure / inner-core / inner-boundary
//! operators on explicit vertex sets.
//!
//! All arithmetic here is exact: weights are `u128` with overflow detection and
//! fractional quantities are `Ratio<i128>`.
//!
//! | quantity | meaning |
//! |---|---|
//! | `ball_weight(n, r)` | `#{x ∈ ℤⁿ : ‖x‖₁ ≤ r}` |
//! | `boundary_weight(n, r)` | `#{x ∈ ℤⁿ : ‖x‖₁ = r}` (the inner boundary of the ball) |
//! | `leading_coefficients(n)` | `(2ⁿ/n!, 2ⁿ/(n−1)!)`, the top two coefficients of `ball_weight` in `r` |

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Neighborhood, StencilSpec, Topology, Vertex, MAX_DIM};
use num_rational::Ratio;
use std::collections::HashSet;

/// Exact rational type used for surpluses and leading coefficients.
pub type Rational = Ratio<i128>;

/// Weight of the radius-`r` ℓ¹ ball in `ℤⁿ`:
/// `b_n^(r) = Σ_{i=0}^{min(n,r)} 2ⁱ·C(n, i)·C(r, i)` (choose the `i` nonzero
/// coordinates, their signs, and a composition of at most `r` into `i`
/// positive parts).
pub fn ball_weight(n: u32, r: u64) -> Result<u128> {
    let overflow = || Error::Overflow("ball_weight");
    let r = u128::from(r);
    let mut total: u128 = 0;
    // term_i = 2ⁱ·C(n, i)·C(r, i), updated incrementally.
    let mut cn: u128 = 1;
    let mut cr: u128 = 1;
    let mut pow: u128 = 1;
    for i in 0..=u128::from(n).min(r) {
        if i > 0 {
            cn = cn.checked_mul(u128::from(n) - i + 1).ok_or_else(overflow)? / i;
            cr = cr.checked_mul(r - i + 1).ok_or_else(overflow)? / i;
            pow = pow.checked_mul(2).ok_or_else(overflow)?;
        }
        let term = pow
            .checked_mul(cn)
            .and_then(|t| t.checked_mul(cr))
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(total)
}

/// Weight of the inner boundary (the sphere) of the radius-`r` ball:
/// `b_{n−1}^(r) + b_{n−1}^(r−1)` for `r ≥ 1`, and `1` for `r = 0`.
pub fn boundary_weight(n: u32, r: u64) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be ≥ 1".into()));
    }
    if r == 0 {
        return Ok(1);
    }
    ball_weight(n - 1, r)?
        .checked_add(ball_weight(n - 1, r - 1)?)
        .ok_or(Error::Overflow("boundary_weight"))
}

/// Number of lattice points at ℓ¹ distance exactly `r` (same as [`boundary_weight`]).
pub fn sphere_weight(n: u32, r: u64) -> Result<u128> {
    boundary_weight(n, r)
}

/// `(2ⁿ/n!, 2ⁿ/(n−1)!)` as exact rationals.
pub fn leading_coefficients(n: u32) -> Result<(Rational, Rational)> {
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be ≥ 1".into()));
    }
    let mut fact_nm1: i128 = 1;
    for i in 1..n as i128 {
        fact_nm1 = fact_nm1
            .checked_mul(i)
            .ok_or(Error::Overflow("leading_coefficients"))?;
    }
    let fact_n = fact_nm1
        .checked_mul(n as i128)
        .ok_or(Error::Overflow("leading_coefficients"))?;
    let pow = 1i128
        .checked_shl(n)
        .filter(|_| n < 127)
        .ok_or(Error::Overflow("leading_coefficients"))?;
    Ok((Ratio::new(pow, fact_n), Ratio::new(pow, fact_nm1)))
}

/// The fractional ball `b^(r,α)`: the radius-`r` ball plus a fraction `α` of
/// every vertex of the radius-`r+1` sphere. Weights are translation invariant,
/// so the center is implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalBall {
    /// Dimension.
    pub n: u32,
    /// Integral radius.
    pub r: u64,
    /// Surplus in `[0, 1)`.
    pub alpha: Rational,
}

impl FractionalBall {
    /// `w(b^(r,0)) + α · sphere_weight(r+1)`.
    pub fn weight(&self) -> Result<Rational> {
        let base = ball_weight(self.n, self.r)?;
        let sphere = sphere_weight(self.n, self.r + 1)?;
        let base = i128::try_from(base).map_err(|_| Error::Overflow("FractionalBall::weight"))?;
        let sphere =
            i128::try_from(sphere).map_err(|_| Error::Overflow("FractionalBall::weight"))?;
        Ok(Rational::from_integer(base) + self.alpha * sphere)
    }
}

/// The unique fractional ball of weight `v`.
pub fn ball_of_weight(n: u32, v: Rational) -> Result<FractionalBall> {
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be ≥ 1".into()));
    }
    if v < Rational::from_integer(0) {
        return Err(Error::InvalidConfig("weight must be ≥ 0".into()));
    }
    if v < Rational::from_integer(1) {
        // Below the single point: a fraction of the radius-0 "sphere".
        return Err(Error::InvalidConfig(
            "weights below 1 are not balls of integral radius".into(),
        ));
    }
    let mut r = 0u64;
    loop {
        let next = ball_weight(n, r + 1)?;
        let next = i128::try_from(next).map_err(|_| Error::Overflow("ball_of_weight"))?;
        if v < Rational::from_integer(next) {
            break;
        }
        r += 1;
    }
    let base = i128::try_from(ball_weight(n, r)?).map_err(|_| Error::Overflow("ball_of_weight"))?;
    let sphere =
        i128::try_from(sphere_weight(n, r + 1)?).map_err(|_| Error::Overflow("ball_of_weight"))?;
    Ok(FractionalBall {
        n,
        r,
        alpha: (v - base) / sphere,
    })
}

/// Where the vertices of a [`VertexSet`] live.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetDomain {
    /// The infinite lattice `ℤⁿ`.
    Lattice(usize),
    /// A torus (or grid) given by its spec.
    Space(GridSpec),
}

impl SetDomain {
    fn n(&self) -> usize {
        match self {
            SetDomain::Lattice(n) => *n,
            SetDomain::Space(g) => g.n(),
        }
    }

    /// Distance-1 neighbors of `x` (excluding `x`).
    fn unit_neighbors(&self, x: &Vertex, out: &mut Vec<Vertex>) {
        match self {
            SetDomain::Lattice(n) => {
                out.clear();
                for i in 0..*n {
                    for d in [-1i64, 1] {
                        let mut off = [0i64; MAX_DIM];
                        off[i] = d;
                        out.push(x.offset(&off));
                    }
                }
            }
            SetDomain::Space(g) => {
                let nb = Neighborhood::new(g, StencilSpec::new(1).expect("radius 1"));
                nb.collect(g, x, out);
                out.retain(|y| y != x);
            }
        }
    }
}

/// An explicit finite vertex set on `ℤⁿ` or on a torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    domain: SetDomain,
    members: HashSet<Vertex>,
}

impl VertexSet {
    /// The empty set on a domain.
    pub fn empty(domain: SetDomain) -> Self {
        Self {
            domain,
            members: HashSet::new(),
        }
    }

    /// A set from explicit vertices (duplicates collapse).
    pub fn from_vertices(domain: SetDomain, vs: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut s = Self::empty(domain);
        for v in vs {
            s.insert(v)?;
        }
        Ok(s)
    }

    /// The integral ball `{x : d(x, center) ≤ r}` on `ℤⁿ`.
    pub fn lattice_ball(center: &Vertex, r: u64) -> Self {
        let n = center.dim();
        let mut s = Self::empty(SetDomain::Lattice(n));
        let r = r as i64;
        let side = (2 * r + 1) as u64;
        let bbox = GridSpec::grid(&vec![side; n]).expect("small box");
        for v in bbox.vertices() {
            let mut c = [0i64; MAX_DIM];
            let mut dist = 0;
            for i in 0..n {
                c[i] = v.coords()[i] - r;
                dist += c[i].abs();
            }
            if dist <= r {
                s.members.insert(center.offset(&c));
            }
        }
        s
    }

    /// Add a vertex; rejects wrong dimensions and vertices outside a finite domain.
    pub fn insert(&mut self, v: Vertex) -> Result<bool> {
        if v.dim() != self.domain.n() {
            return Err(Error::OutOfRange(format!("{v:?} has the wrong dimension")));
        }
        if let SetDomain::Space(g) = &self.domain {
            if !g.contains(&v) {
                return Err(Error::OutOfRange(format!("{v:?} outside domain")));
            }
        }
        Ok(self.members.insert(v))
    }

    /// Membership.
    pub fn contains(&self, v: &Vertex) -> bool {
        self.members.contains(v)
    }

    /// Cardinality (the weight of an integral system).
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Whether the set is empty.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Iterate in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        self.members.iter()
    }

    /// The domain.
    pub fn domain(&self) -> &SetDomain {
        &self.domain
    }
}

/// `∂S = S ∪ {x ∉ S : some y ∈ S has d(x, y) = 1}`.
pub fn closure(s: &VertexSet) -> VertexSet {
    let mut out = s.clone();
    let mut buf = Vec::new();
    for x in &s.members {
        s.domain.unit_neighbors(x, &mut buf);
        out.members.extend(buf.iter().copied());
    }
    out
}

fn core_step(s: &VertexSet) -> VertexSet {
    let mut buf = Vec::new();
    let mut out = VertexSet::empty(s.domain.clone());
    for x in &s.members {
        s.domain.unit_neighbors(x, &mut buf);
        if buf.iter().all(|y| s.members.contains(y)) {
            out.members.insert(*x);
        }
    }
    out
}

/// `Δₛ S`: the vertices whose whole distance-`s` neighborhood lies in `S`,
/// computed as the `s`-fold one-step core.
pub fn inner_core(s: &VertexSet, radius: u32) -> VertexSet {
    let mut cur = s.clone();
    for _ in 0..radius {
        cur = core_step(&cur);
    }
    cur
}

/// `Γₛ S = S \ Δₛ S`.
pub fn inner_boundary(s: &VertexSet, radius: u32) -> VertexSet {
    let core = inner_core(s, radius);
    let mut out = VertexSet::empty(s.domain.clone());
    out.members = s.members.difference(&core.members).copied().collect();
    out
}

/// Whether the domain is a torus (used to document operator hypotheses).
pub fn is_torus(d: &SetDomain) -> bool {
    matches!(d, SetDomain::Space(g) if g.topology() == Topology::Torus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_ball(n: usize, r: i64) -> u128 {
        let side = (2 * r + 1) as u64;
        let g = GridSpec::grid(&vec![side; n]).unwrap();
        g.vertices()
            .filter(|v| v.coords().iter().map(|c| (c - r).abs()).sum::<i64>() <= r)
            .count() as u128
    }

    #[test]
    fn ball_weight_examples() {
        assert_eq!(ball_weight(1, 3).unwrap(), 7);
        assert_eq!(ball_weight(2, 0).unwrap(), 1);
        assert_eq!(ball_weight(2, 1).unwrap(), brute_ball(2, 1));
        assert_eq!(ball_weight(3, 1).unwrap(), brute_ball(3, 1));
        assert_eq!(ball_weight(2, 1).unwrap(), 5);
        assert_eq!(ball_weight(3, 1).unwrap(), 7);
    }

    #[test]
    fn boundary_weight_examples() {
        assert_eq!(boundary_weight(2, 3).unwrap(), 12);
        assert_eq!(boundary_weight(1, 2).unwrap(), 2);
        for n in 1..6 {
            assert_eq!(boundary_weight(n, 0).unwrap(), 1);
        }
    }

    #[test]
    fn ball_weight_overflow_is_reported() {
        assert!(matches!(ball_weight(40, 1 << 40), Err(Error::Overflow(_))));
    }

    #[test]
    fn leading_coefficient_examples() {
        let r = |a, b| Rational::new(a, b);
        assert_eq!(leading_coefficients(2).unwrap(), (r(2, 1), r(4, 1)));
        assert_eq!(leading_coefficients(1).unwrap(), (r(2, 1), r(2, 1)));
        assert_eq!(leading_coefficients(3).unwrap(), (r(4, 3), r(4, 1)));
    }

    #[test]
    fn ball_of_weight_examples() {
        let b = ball_of_weight(2, Rational::from_integer(5)).unwrap();
        assert_eq!((b.r, b.alpha), (1, Rational::from_integer(0)));
        let b = ball_of_weight(2, Rational::from_integer(9)).unwrap();
        assert_eq!((b.r, b.alpha), (1, Rational::new(1, 2)));
        let b = ball_of_weight(1, Rational::from_integer(1)).unwrap();
        assert_eq!((b.r, b.alpha), (0, Rational::from_integer(0)));
        assert_eq!(b.weight().unwrap(), Rational::from_integer(1));
    }

    #[test]
    fn closure_examples() {
        let origin = Vertex::new(&[0, 0]);
        let single = VertexSet::lattice_ball(&origin, 0);
        assert_eq!(closure(&single).len(), 5);
        assert!(closure(&VertexSet::empty(SetDomain::Lattice(2))).is_empty());
        let b1 = VertexSet::lattice_ball(&origin, 1);
        assert_eq!(closure(&b1).len() as u128, ball_weight(2, 2).unwrap());
        assert_eq!(closure(&b1), VertexSet::lattice_ball(&origin, 2));
    }

    #[test]
    fn core_examples() {
        let origin = Vertex::new(&[0, 0]);
        let b2 = VertexSet::lattice_ball(&origin, 2);
        let core = inner_core(&b2, 1);
        assert_eq!(core, VertexSet::lattice_ball(&origin, 1));
        assert_eq!(core.len(), 5);
        // Large radius empties the core, so the boundary is everything.
        assert_eq!(inner_boundary(&b2, 5), b2);
        // A full torus has no boundary.
        let g = GridSpec::torus(&[4, 4]).unwrap();
        let full = VertexSet::from_vertices(SetDomain::Space(g.clone()), g.vertices()).unwrap();
        assert_eq!(inner_core(&full, 1).len(), 16);
        assert!(is_torus(full.domain()));
    }

    #[test]
    fn lemma_directions_on_small_sets() {
        let g = GridSpec::torus(&[4, 4]).unwrap();
        let d = SetDomain::Space(g.clone());
        let verts: Vec<_> = g.vertices().collect();
        // A handful of irregular sets.
        for mask in [0b1011_0110_0001_1100u32, 0x00ff, 0x0f0f, 0x1, 0x8421] {
            let s = VertexSet::from_vertices(
                d.clone(),
                verts.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| *v),
            )
            .unwrap();
            let grown = inner_core(&closure(&s), 1);
            assert!(s.iter().all(|x| grown.contains(x)));
            let shrunk = closure(&inner_core(&s, 1));
            assert!(shrunk.iter().all(|x| s.contains(x)));
        }
    }
}
