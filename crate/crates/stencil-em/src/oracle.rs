//! Brute-force ground truth, independent of the layouts and closed forms it
//! checks.
//!
//! * [`naive_stencil`] — in-core evaluation of the s-star stencil with the
//!   machine's wrapping 64-bit arithmetic;
//! * [`brute_ball_weights`] — ball, inner-boundary and inner-core weights of
//!   ℓ¹ balls by explicit lattice enumeration;
//! * [`exhaustive_isoperimetry`] — every `v`-subset of a small even torus
//!   `ℤₖⁿ`, compared against the fractional ball of the same weight: no set
//!   may have a smaller closure (the torus isoperimetric inequality) or a
//!   larger inner `s`-core (its inner-core version).

use num_rational::Ratio;
use rayon::prelude::*;

use crate::combinatorics::Rational;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Neighborhood, StencilSpec, Vertex};

/// Default number of subset visits an enumeration may spend.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// `output[x] = Σ_{y ∈ S_s(x)} input[y]` (wrapping), both arrays in grid order.
pub fn naive_stencil(g: &GridSpec, st: StencilSpec, input: &[u64]) -> Result<Vec<u64>> {
    if input.len() as u64 != g.vertex_count() {
        return Err(Error::InvalidConfig(format!(
            "input has {} values, grid has {} vertices",
            input.len(),
            g.vertex_count()
        )));
    }
    st.validate_for(g)?;
    let nh = Neighborhood::new(g, st);
    let mut buf = Vec::new();
    let mut out = Vec::with_capacity(input.len());
    for x in g.vertices() {
        nh.collect(g, &x, &mut buf);
        let mut sum = 0u64;
        for y in &buf {
            sum = sum.wrapping_add(input[g.linearize(y)? as usize]);
        }
        out.push(sum);
    }
    Ok(out)
}

/// Weights of one ℓ¹ ball found by enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallWeights {
    pub r: u64,
    /// `w(b^(r))`.
    pub ball: u128,
    /// `w(Γ b^(r))`: ball vertices with a unit neighbor outside the ball.
    pub boundary: u128,
    /// `w(Δ b^(r))`: ball vertices whose unit neighbors are all in the ball.
    pub core: u128,
}

/// Ball / inner-boundary / inner-core weights for `r = 0 ..= r_max` by
/// enumerating the box `[−r−1, r+1]ⁿ`.
pub fn brute_ball_weights(n: u32, r_max: u64) -> Result<Vec<BallWeights>> {
    if !(1..=4).contains(&n) || r_max > 8 {
        return Err(Error::InvalidConfig(format!(
            "brute-force ball weights need 1 ≤ n ≤ 4 and r ≤ 8, got n = {n}, r = {r_max}"
        )));
    }
    let n = n as usize;
    (0..=r_max)
        .map(|r| {
            let ri = r as i64;
            let side = (2 * ri + 3) as u64;
            let bbox = GridSpec::grid(&vec![side; n])?;
            let in_ball = |c: &[i64]| c.iter().map(|v| v.abs()).sum::<i64>() <= ri;
            let mut w = BallWeights {
                r,
                ball: 0,
                boundary: 0,
                core: 0,
            };
            let mut c = vec![0i64; n];
            for v in bbox.vertices() {
                for (ci, vi) in c.iter_mut().zip(v.coords()) {
                    *ci = vi - ri - 1;
                }
                if !in_ball(&c) {
                    continue;
                }
                w.ball += 1;
                let mut interior = true;
                for i in 0..n {
                    for d in [-1, 1] {
                        c[i] += d;
                        interior &= in_ball(&c);
                        c[i] -= d;
                    }
                }
                if interior {
                    w.core += 1;
                } else {
                    w.boundary += 1;
                }
            }
            Ok(w)
        })
        .collect()
}

/// Result of the exhaustive search at one weight.
#[derive(Clone, Debug)]
pub struct IsoperimetryVerdict {
    pub v: u32,
    /// Number of `v`-subsets examined.
    pub subsets: u128,
    /// Smallest closure weight over all `v`-subsets.
    pub min_closure: u32,
    /// Largest inner `s`-core weight over all `v`-subsets.
    pub max_core: u32,
    /// `w(∂ b^v)` of the fractional ball of weight `v`.
    pub ball_closure: Rational,
    /// `w(Δₛ b^v)` of the fractional ball of weight `v`.
    pub ball_core: Rational,
    /// Best closure / core among integral balls: the radius-`r` ball plus
    /// any `v − w(b^(r))` vertices of the next sphere.
    pub integral_ball_closure: u32,
    pub integral_ball_core: u32,
    /// A subset attaining `min_closure` (vertex indices in grid order).
    pub extremal_closure_set: Vec<u32>,
    /// A subset attaining `max_core`.
    pub extremal_core_set: Vec<u32>,
    /// Subsets violating either inequality.
    pub counterexamples: u128,
}

impl IsoperimetryVerdict {
    /// The integral ball attains both extremes and nothing beats the fractional ball.
    pub fn holds(&self) -> bool {
        self.counterexamples == 0
            && self.integral_ball_closure == self.min_closure
            && self.integral_ball_core == self.max_core
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

struct Torus {
    size: usize,
    /// Unit neighbors of each vertex (excluding itself).
    nb: Vec<u128>,
    /// Torus ℓ¹ distance of each vertex from vertex 0.
    dist: Vec<u32>,
}

impl Torus {
    fn new(k: u64, n: usize) -> Result<Self> {
        let g = GridSpec::torus(&vec![k; n])?;
        let size = g.vertex_count() as usize;
        if size > 128 {
            return Err(Error::InvalidConfig(format!("torus of {size} vertices exceeds 128")));
        }
        let nh = Neighborhood::new(&g, StencilSpec::new(1)?);
        let mut buf = Vec::new();
        let mut nb = vec![0u128; size];
        let mut dist = vec![0u32; size];
        for x in g.vertices() {
            let i = g.linearize(&x)? as usize;
            nh.collect(&g, &x, &mut buf);
            for y in &buf {
                let j = g.linearize(y)? as usize;
                if j != i {
                    nb[i] |= 1 << j;
                }
            }
            dist[i] = x
                .coords()
                .iter()
                .map(|&c| c.min(k as i64 - c) as u32)
                .sum();
        }
        Ok(Self { size, nb, dist })
    }

    fn closure(&self, s: u128) -> u128 {
        let mut out = s;
        let mut rest = s;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            out |= self.nb[i];
        }
        out
    }

    fn core(&self, s: u128, radius: u32) -> u128 {
        let mut cur = s;
        for _ in 0..radius {
            let mut next = 0u128;
            let mut rest = cur;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if self.nb[i] & !cur == 0 {
                    next |= 1 << i;
                }
            }
            cur = next;
        }
        cur
    }

    /// The fractional ball of weight `v` centered at vertex 0, as a vector of weights.
    fn fractional_ball(&self, v: u32) -> Vec<Rational> {
        let max_d = *self.dist.iter().max().unwrap_or(&0);
        let count = |d: u32| self.dist.iter().filter(|&&x| x == d).count() as i128;
        let mut r = 0u32;
        let mut inside: i128 = count(0);
        while r < max_d && inside + count(r + 1) <= i128::from(v) {
            r += 1;
            inside += count(r);
        }
        let (r, alpha) = if inside > i128::from(v) {
            // v = 0: an empty ball.
            (None, Rational::from_integer(0))
        } else if r == max_d {
            (Some(r), Rational::from_integer(0))
        } else {
            (Some(r), Ratio::new(i128::from(v) - inside, count(r + 1)))
        };
        self.dist
            .iter()
            .map(|&d| match r {
                Some(r) if d <= r => Rational::from_integer(1),
                Some(r) if d == r + 1 => alpha,
                _ => Rational::from_integer(0),
            })
            .collect()
    }

    fn frac_closure(&self, f: &[Rational]) -> Vec<Rational> {
        let zero = Rational::from_integer(0);
        (0..self.size)
            .map(|i| {
                if f[i] > zero {
                    Rational::from_integer(1)
                } else {
                    self.neighbors(i).map(|j| f[j]).max().unwrap_or(zero)
                }
            })
            .collect()
    }

    fn frac_core(&self, f: &[Rational]) -> Vec<Rational> {
        let one = Rational::from_integer(1);
        (0..self.size)
            .map(|i| {
                if f[i] < one {
                    Rational::from_integer(0)
                } else {
                    self.neighbors(i).map(|j| f[j]).min().unwrap_or(one)
                }
            })
            .collect()
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let mut rest = self.nb[i];
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(j)
            }
        })
    }
}

fn sum(f: &[Rational]) -> Rational {
    f.iter().copied().fold(Rational::from_integer(0), |a, b| a + b)
}

/// Visit every `v`-subset of `0..size` whose smallest element is `first`.
fn for_each_subset(size: usize, v: usize, first: usize, mut f: impl FnMut(u128)) {
    if v == 0 {
        f(0);
        return;
    }
    let mut idx: Vec<usize> = (0..v).map(|i| first + i).collect();
    if *idx.last().expect("v ≥ 1") >= size {
        return;
    }
    loop {
        let mask = idx.iter().fold(0u128, |m, &i| m | 1 << i);
        f(mask);
        // Advance positions 1..v (position 0 stays at `first`).
        let mut p = v;
        loop {
            if p == 1 {
                return;
            }
            p -= 1;
            if idx[p] < size - (v - p) {
                idx[p] += 1;
                for q in p + 1..v {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

fn mask_to_vec(m: u128) -> Vec<u32> {
    (0..128).filter(|i| m >> i & 1 == 1).collect()
}

#[derive(Clone, Copy)]
struct Acc {
    subsets: u128,
    min_closure: (u32, u128),
    max_core: (u32, u128),
    counterexamples: u128,
}

impl Acc {
    fn merge(a: Acc, b: Acc) -> Acc {
        Acc {
            subsets: a.subsets + b.subsets,
            min_closure: if b.min_closure.0 < a.min_closure.0 { b.min_closure } else { a.min_closure },
            max_core: if b.max_core.0 > a.max_core.0 { b.max_core } else { a.max_core },
            counterexamples: a.counterexamples + b.counterexamples,
        }
    }
}

/// Exhaustively check every `v`-subset of `ℤₖⁿ` for `1 ≤ v ≤ weight_cap`
/// against the fractional ball of weight `v` (closure for radius 1, inner
/// core for radius `s`).
pub fn exhaustive_isoperimetry(
    k: u64,
    n: usize,
    weight_cap: u32,
    s: u32,
    budget: u128,
) -> Result<Vec<IsoperimetryVerdict>> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidConfig(format!("the torus side must be even and ≥ 2, got {k}")));
    }
    let torus = Torus::new(k, n)?;
    let size = torus.size;
    let cap = (weight_cap as usize).min(size);
    let needed: u128 = (1..=cap).map(|v| binomial(size as u128, v as u128)).sum();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut out = Vec::with_capacity(cap);
    for v in 1..=cap {
        let ball = torus.fractional_ball(v as u32);
        let ball_closure = sum(&torus.frac_closure(&ball));
        let mut core = ball.clone();
        for _ in 0..s {
            core = torus.frac_core(&core);
        }
        let ball_core = sum(&core);

        let acc = (0..size)
            .into_par_iter()
            .map(|first| {
                let mut a = Acc {
                    subsets: 0,
                    min_closure: (u32::MAX, 0),
                    max_core: (0, 0),
                    counterexamples: 0,
                };
                for_each_subset(size, v, first, |m| {
                    a.subsets += 1;
                    let c = torus.closure(m).count_ones();
                    let d = torus.core(m, s).count_ones();
                    if c < a.min_closure.0 {
                        a.min_closure = (c, m);
                    }
                    if d > a.max_core.0 || a.subsets == 1 {
                        a.max_core = (d, m);
                    }
                    if Rational::from_integer(c.into()) < ball_closure
                        || Rational::from_integer(d.into()) > ball_core
                    {
                        a.counterexamples += 1;
                    }
                });
                a
            })
            .filter(|a| a.subsets > 0)
            .reduce_with(Acc::merge)
            .expect("at least one subset");

        // Integral balls: radius-r ball around vertex 0 plus part of the next sphere.
        let mut r = 0u32;
        let count_le = |r: u32| torus.dist.iter().filter(|&&d| d <= r).count();
        while count_le(r + 1) <= v && count_le(r + 1) > count_le(r) {
            r += 1;
        }
        let base: u128 = (0..size).filter(|&i| torus.dist[i] <= r).fold(0, |m, i| m | 1 << i);
        let sphere: Vec<usize> = (0..size).filter(|&i| torus.dist[i] == r + 1).collect();
        let extra = v - count_le(r);
        let mut ib_closure = u32::MAX;
        let mut ib_core = 0u32;
        for first in 0..sphere.len().max(1) {
            for_each_subset(sphere.len(), extra, first, |m| {
                let mut set = base;
                for (j, &i) in sphere.iter().enumerate() {
                    if m >> j & 1 == 1 {
                        set |= 1 << i;
                    }
                }
                ib_closure = ib_closure.min(torus.closure(set).count_ones());
                ib_core = ib_core.max(torus.core(set, s).count_ones());
            });
            if extra == 0 {
                break;
            }
        }

        out.push(IsoperimetryVerdict {
            v: v as u32,
            subsets: acc.subsets,
            min_closure: acc.min_closure.0,
            max_core: acc.max_core.0,
            ball_closure,
            ball_core,
            integral_ball_closure: ib_closure,
            integral_ball_core: ib_core,
            extremal_closure_set: mask_to_vec(acc.min_closure.1),
            extremal_core_set: mask_to_vec(acc.max_core.1),
            counterexamples: acc.counterexamples,
        });
    }
    Ok(out)
}

/// The vertices of a torus subset returned in a verdict.
pub fn subset_vertices(k: u64, n: usize, set: &[u32]) -> Result<Vec<Vertex>> {
    let g = GridSpec::torus(&vec![k; n])?;
    set.iter().map(|&i| g.delinearize(u64::from(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_stencil_examples() {
        let g = GridSpec::grid(&[5, 5]).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let out = naive_stencil(&g, st, &[1; 25]).unwrap();
        assert_eq!(out[g.linearize(&Vertex::new(&[2, 2])).unwrap() as usize], 5);
        assert_eq!(out[0], 3);
        let t = GridSpec::torus(&[7, 7, 7]).unwrap();
        let out = naive_stencil(&t, st, &[1; 343]).unwrap();
        assert!(out.iter().all(|&v| v == 7));
        let wrap = naive_stencil(&g, st, &[u64::MAX; 25]).unwrap();
        assert_eq!(wrap[0], u64::MAX.wrapping_mul(3));
    }

    #[test]
    fn ball_weight_examples() {
        let w = brute_ball_weights(2, 1).unwrap();
        assert_eq!((w[1].ball, w[1].boundary, w[1].core), (5, 4, 1));
        assert_eq!(brute_ball_weights(3, 2).unwrap()[2].ball, 25);
        for w in brute_ball_weights(1, 8).unwrap().into_iter().skip(1) {
            let r = u128::from(w.r);
            assert_eq!((w.ball, w.boundary, w.core), (2 * r + 1, 2, 2 * r - 1));
        }
        assert!(brute_ball_weights(5, 2).is_err());
        assert!(brute_ball_weights(2, 9).is_err());
    }

    #[test]
    fn subset_enumeration_is_complete() {
        let mut count = 0;
        for first in 0..6 {
            for_each_subset(6, 3, first, |m| {
                assert_eq!(m.count_ones(), 3);
                assert_eq!(m.trailing_zeros() as usize, first);
                count += 1;
            });
        }
        assert_eq!(count, 20);
    }

    #[test]
    fn small_torus_examples() {
        let v = exhaustive_isoperimetry(4, 2, 5, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(v[0].min_closure, 5);
        assert_eq!(v[4].subsets, 4368);
        assert_eq!(v[4].min_closure, v[4].integral_ball_closure);
        assert!(v.iter().all(|x| x.counterexamples == 0));
        let w = exhaustive_isoperimetry(6, 2, 5, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(w[4].max_core, 1);
        assert_eq!(w[4].integral_ball_core, 1);
        assert!(matches!(
            exhaustive_isoperimetry(6, 2, 12, 1, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(exhaustive_isoperimetry(5, 2, 3, 1, DEFAULT_BUDGET).is_err());
    }
}
