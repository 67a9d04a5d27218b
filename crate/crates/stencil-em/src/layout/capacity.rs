//! Sweep-shape sizing.
//!
//! Two derivations of the sweep-shape parameter `m` are offered:
//!
//! * [`Derivation::ClosedForm`] — the conservative closed-form solutions of
//!   each kind's capacity inequality (with its ceiling functions gathered into
//!   a constant `c′`);
//! * [`Derivation::CapacitySearch`] — the largest `m` whose exact
//!   block-granular footprint fits in `M`. The footprint is measured, not
//!   modeled: an interior working band of a probe grid is swept on an
//!   unbounded machine for a window of levels, and for every band touched the
//!   live rank range (first vertex still to be read … last vertex read so
//!   far) is tracked. Rounding each range up to whole blocks plus one for
//!   misalignment, adding one open output block per output band and the
//!   row blocks actually resident for row layouts, bounds the residency of
//!   every interior working band of every grid, whatever the block alignment.
//!
//! The hexagonal closed form needs constants `d′` and `d″` with
//! `dms + 6(2s+1)A′ + 6(2s+1)A″ ≤ d′ms + d″s²`, where `A′` and `A″` are the
//! per-level sizes of a two-way and a three-way wing and `d = 2` covers the
//! extra sweep shape held in memory. With the tiles of this crate
//! `A′ ≤ 4ms/3` and `A″ ≤ 5s²/4` (checked by a unit test against the built
//! layouts). Every wing band is live for `2s + 1` levels, so both constants
//! grow with `s`: `d′ = 2 + 8(2s+1)`, `d″ = 15(2s+1)/2`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::LayoutKind;
use crate::error::{Error, Result};

/// How `m` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    ClosedForm,
    CapacitySearch,
}

/// Sweep-shape parameter (side length or radius) and its derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepShapeSize {
    pub m: u64,
    pub derivation: Derivation,
}

/// Hexagonal wing-size constants `(d′, d″)` for radius `s` (see the module
/// documentation).
pub(crate) fn hex_wing_constants(s: f64) -> (f64, f64) {
    (2.0 + 8.0 * (2.0 * s + 1.0), 7.5 * (2.0 * s + 1.0))
}

/// The closed-form `m` of a kind, before the `m ≥ 4s + 1` check.
pub fn closed_form_m(kind: LayoutKind, n: usize, s: u32, m_cap: u64, b: u64) -> Result<i64> {
    kind.check_dim(n)?;
    let s = f64::from(s);
    let mm = m_cap as f64;
    let bb = b as f64;
    let floor = |v: f64| if v.is_finite() { v.floor() as i64 } else { -1 };
    let sqrt = |v: f64| if v >= 0.0 { v.sqrt() } else { f64::NAN };
    let m = match kind {
        LayoutKind::Row2D => floor((mm - (5.0 + 4.0 * s) * bb + 8.0 * s * s) / (bb + 2.0 * s)),
        LayoutKind::BlockAlignedColumn2D => floor((mm - 9.0 * bb - 5.0 * s) / (2.0 * s)),
        LayoutKind::BlockAlignedDiagonal2D => floor((mm - 9.0 * bb - 3.0 * s) / (2.0 * s)),
        LayoutKind::Row3D => {
            let c = 9.0;
            let q = (bb + 2.0 * s).sqrt();
            floor((sqrt(mm - 32.0 * s.powi(3) - 2.0 * bb - c * bb) - 4.0 * s * bb / q) / q)
        }
        LayoutKind::BlockAlignedColumnPole3D => {
            let c1 = 27.0;
            floor((sqrt(mm - c1 * bb) - 9.0 * s.sqrt() / 2f64.sqrt()) / (2.0 * s).sqrt())
        }
        LayoutKind::BlockAlignedDiagonal2Din3D => {
            let c1 = 27.0;
            floor((sqrt(mm - 11.0 * s - c1 * bb) - 13.0 * s.sqrt() / 4.0) / (2.0 * s.sqrt()))
        }
        LayoutKind::HexagonalAlignedDiagonal3D => {
            let c1 = 39.0;
            let (d1, d2) = hex_wing_constants(s);
            let root = sqrt(mm * s - s * (2.0 * s + d2 * s * s + c1 * bb));
            floor((root - (6.0 * s + d1 * s) / (2.0 * 6f64.sqrt())) / (6.0 * s * s).sqrt())
        }
        LayoutKind::BlockAlignedColumnND => {
            let c1 = 3f64.powi(n as i32);
            let rest = mm - c1 * bb;
            if rest <= 0.0 {
                -1
            } else {
                let mut m = floor((rest / (2.0 * s + 1.0)).powf(1.0 / (n as f64 - 1.0)));
                // Guard the floating-point root.
                while m > 0 && (2.0 * s + 1.0) * (m as f64).powi(n as i32 - 1) > rest {
                    m -= 1;
                }
                m
            }
        }
    };
    Ok(m)
}

type MemoKey = (LayoutKind, usize, u32, u64, u64);

fn memo() -> &'static Mutex<HashMap<MemoKey, u64>> {
    static MEMO: OnceLock<Mutex<HashMap<MemoKey, u64>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Exact block-granular footprint (elements) of an interior working band at `m`.
pub fn footprint(kind: LayoutKind, n: usize, s: u32, m: u64, b: u64) -> Result<u64> {
    crate::sweep::probe_footprint(kind, n, s, m, b)
}

/// The largest `m ≥ 4s + 1` whose footprint fits in `M`.
pub fn search_m(kind: LayoutKind, n: usize, s: u32, m_cap: u64, b: u64) -> Result<u64> {
    kind.check_dim(n)?;
    let key = (kind, n, s, m_cap, b);
    if let Some(&m) = memo().lock().expect("memo lock").get(&key) {
        return Ok(m);
    }
    let fits = |m: u64| -> Result<bool> { Ok(footprint(kind, n, s, m, b)? <= m_cap) };
    let lo0 = 4 * u64::from(s) + 1;
    if !fits(lo0)? {
        return Err(Error::UnusableConfiguration(format!(
            "{kind} with s = {s}: the smallest sweep shape (m = {lo0}) does not fit in M = {m_cap}, B = {b}"
        )));
    }
    // Bracket from the closed form, growing gently so that probes of
    // high-dimensional kinds stay small.
    let start = (closed_form_m(kind, n, s, m_cap, b)?.max(lo0 as i64) as u64).max(lo0 + 1);
    let (mut lo, mut hi) = if fits(start)? {
        let mut lo = start;
        let mut hi = start + start / 4 + 1;
        while fits(hi)? {
            lo = hi;
            hi = hi + hi / 4 + 1;
            if hi > m_cap.max(8) {
                return Err(Error::InvalidConfig(format!(
                    "capacity search for {kind} did not terminate below M"
                )));
            }
        }
        (lo, hi)
    } else {
        (lo0, start)
    };
    // fits(lo) ∧ ¬fits(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    memo().lock().expect("memo lock").insert(key, lo);
    Ok(lo)
}

/// Sweep-shape size for `kind` on an `n`-dimensional grid with machine `(M, B)`.
pub fn sweep_shape_size(
    kind: LayoutKind,
    n: usize,
    s: u32,
    m_cap: u64,
    b: u64,
    derivation: Derivation,
) -> Result<SweepShapeSize> {
    if s == 0 || b == 0 {
        return Err(Error::InvalidConfig("need s ≥ 1 and B ≥ 1".into()));
    }
    let m = match derivation {
        Derivation::ClosedForm => {
            let m = closed_form_m(kind, n, s, m_cap, b)?;
            if m < 4 * i64::from(s) + 1 {
                return Err(Error::UnusableConfiguration(format!(
                    "{kind}: closed-form m = {m} is below 4s + 1 for M = {m_cap}, B = {b}, s = {s}"
                )));
            }
            m as u64
        }
        Derivation::CapacitySearch => search_m(kind, n, s, m_cap, b)?,
    };
    Ok(SweepShapeSize { m, derivation })
}
