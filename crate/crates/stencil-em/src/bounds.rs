//! Closed-form I/O bounds: the isoperimetric lower bound, the leading terms of
//! every layout's upper bound, the round quantities of the lower-bound
//! argument, and the exact (pre-simplification) non-compulsory I/O ceilings
//! of every sweep.
//!
//! Rates are *per grid point* and already include the division by `B`, so the
//! predicted non-compulsory I/O count of a run is `rate · ∏kᵢ`.
//!
//! | layout | rate per point |
//! |---|---|
//! | lower bound | `4(n−1)·(2sⁿ/n!)^{1/(n−1)} / (B·M^{1/(n−1)})` |
//! | `Row2D` | `8s/M` |
//! | `BlockAlignedColumn2D` | `8s²/(BM)` |
//! | `BlockAlignedDiagonal2D` | `4s²/(BM)` |
//! | `Row3D` | `8s/(√B√M)` |
//! | `BlockAlignedColumnPole3D` | `8√2·s^{3/2}/(B√M)` |
//! | `BlockAlignedDiagonal2Din3D` | `8·s^{3/2}/(B√M)` |
//! | `HexagonalAlignedDiagonal3D` | `8√2·s^{3/2}/(√3·B√M)` |
//! | `BlockAlignedColumnND` | `4·2^{1/(n−1)}·s^{n/(n−1)}(n−1)/(B·M^{1/(n−1)})` |

use crate::error::{Error, Result};
use crate::layout::LayoutKind;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn check_common(n: u32, s: u32, m: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig("bounds need n ≥ 2".into()));
    }
    if s < 1 {
        return Err(Error::InvalidConfig("bounds need s ≥ 1".into()));
    }
    if m < 2 {
        return Err(Error::InvalidConfig("bounds need M ≥ 2".into()));
    }
    Ok(())
}

/// Lower bound on non-compulsory I/Os per grid point, *before* division by `B`:
/// `4(n−1)·(2sⁿ/n!)^{1/(n−1)} / M^{1/(n−1)}`.
pub fn lower_bound_constant(n: u32, s: u32, m: u64) -> Result<f64> {
    check_common(n, s, m)?;
    let e = 1.0 / f64::from(n - 1);
    let inner = 2.0 * f64::from(s).powi(n as i32) / factorial(n);
    Ok(4.0 * f64::from(n - 1) * inner.powf(e) / (m as f64).powf(e))
}

/// Round length `c = 2(n−1)M` and round radius `r₀ = (n!/2ⁿ · M/s)^{1/(n−1)}`.
pub fn round_quantities(n: u32, s: u32, m: u64) -> Result<(u128, f64)> {
    check_common(n, s, m)?;
    let c = 2u128 * u128::from(n - 1) * u128::from(m);
    let r0 = (factorial(n) / 2f64.powi(n as i32) * m as f64 / f64::from(s))
        .powf(1.0 / f64::from(n - 1));
    Ok((c, r0))
}

/// Leading non-compulsory I/O rate per grid point (including `1/B`) of a layout.
pub fn upper_bound_leading(kind: LayoutKind, n: u32, s: u32, m: u64, b: u64) -> Result<f64> {
    check_common(n, s, m)?;
    kind.check_dim(n as usize)?;
    let (s, mf, bf) = (f64::from(s), m as f64, b as f64);
    Ok(match kind {
        LayoutKind::Row2D => 8.0 * s / mf,
        LayoutKind::BlockAlignedColumn2D => 8.0 * s * s / (bf * mf),
        LayoutKind::BlockAlignedDiagonal2D => 4.0 * s * s / (bf * mf),
        LayoutKind::Row3D => 8.0 * s / (bf.sqrt() * mf.sqrt()),
        LayoutKind::BlockAlignedColumnPole3D => {
            8.0 * 2f64.sqrt() * s.powf(1.5) / (bf * mf.sqrt())
        }
        LayoutKind::BlockAlignedDiagonal2Din3D => 8.0 * s.powf(1.5) / (bf * mf.sqrt()),
        LayoutKind::HexagonalAlignedDiagonal3D => {
            8.0 * 2f64.sqrt() * s.powf(1.5) / (3f64.sqrt() * bf * mf.sqrt())
        }
        LayoutKind::BlockAlignedColumnND => {
            let e = 1.0 / f64::from(n - 1);
            4.0 * 2f64.powf(e) * s.powf(f64::from(n) * e) * f64::from(n - 1)
                / (bf * mf.powf(e))
        }
    })
}

/// Ratio between the n-D column upper bound and the lower bound: `(n!)^{1/(n−1)}`.
pub fn gap_ratio(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidConfig("gap ratio needs n ≥ 2".into()));
    }
    Ok(factorial(n).powf(1.0 / f64::from(n - 1)))
}

/// Which bound a [`BoundReport`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// The isoperimetric lower bound.
    LowerBound,
    /// The leading term of a layout's sweep.
    UpperBound(LayoutKind),
}

/// The three parts of a bound: compulsory term, leading non-compulsory term and rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    /// Coefficient of `∏kᵢ/B` in the non-compulsory term.
    pub leading_constant: f64,
    /// Coefficient of `∏kᵢ/B` in the compulsory term (read input, write output).
    pub compulsory_constant: f64,
    /// Non-compulsory I/Os per grid point.
    pub per_point_rate: f64,
    /// Which bound this is.
    pub provenance: Provenance,
}

/// The lower bound as a report.
pub fn lower_bound_report(n: u32, s: u32, m: u64, b: u64) -> Result<BoundReport> {
    let c = lower_bound_constant(n, s, m)?;
    Ok(BoundReport {
        leading_constant: c,
        compulsory_constant: 2.0,
        per_point_rate: c / b as f64,
        provenance: Provenance::LowerBound,
    })
}

/// A layout's upper bound as a report.
pub fn upper_bound_report(kind: LayoutKind, n: u32, s: u32, m: u64, b: u64) -> Result<BoundReport> {
    let rate = upper_bound_leading(kind, n, s, m, b)?;
    Ok(BoundReport {
        leading_constant: rate * b as f64,
        compulsory_constant: 2.0,
        per_point_rate: rate,
        provenance: Provenance::UpperBound(kind),
    })
}

/// Rows of the leading-term comparison table (stencil radius 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableRow {
    LowerBound2D,
    LowerBound3D,
    LowerBoundGeneral,
    UpperBound2D,
    UpperBound3D,
    UpperBoundGeneral,
}

impl TableRow {
    /// All rows in display order.
    pub const ALL: [TableRow; 6] = [
        TableRow::LowerBound2D,
        TableRow::LowerBound3D,
        TableRow::LowerBoundGeneral,
        TableRow::UpperBound2D,
        TableRow::UpperBound3D,
        TableRow::UpperBoundGeneral,
    ];

    /// Row label.
    pub fn label(self) -> &'static str {
        match self {
            TableRow::LowerBound2D => "Lower Bound 2D",
            TableRow::LowerBound3D => "Lower Bound 3D",
            TableRow::LowerBoundGeneral => "Lower Bound n-D",
            TableRow::UpperBound2D => "Upper Bound 2D",
            TableRow::UpperBound3D => "Upper Bound 3D",
            TableRow::UpperBoundGeneral => "Upper Bound n-D",
        }
    }

    /// The dimension a fixed-dimension row refers to.
    pub fn fixed_dim(self) -> Option<u32> {
        match self {
            TableRow::LowerBound2D | TableRow::UpperBound2D => Some(2),
            TableRow::LowerBound3D | TableRow::UpperBound3D => Some(3),
            _ => None,
        }
    }
}

/// This crate's value of a table row: per-point rate for `s = 1` computed by
/// the calculators above.
pub fn table_row_value(row: TableRow, n: u32, m: u64, b: u64) -> Result<f64> {
    let n = row.fixed_dim().unwrap_or(n);
    let bf = b as f64;
    match row {
        TableRow::LowerBound2D | TableRow::LowerBound3D | TableRow::LowerBoundGeneral => {
            Ok(lower_bound_constant(n, 1, m)? / bf)
        }
        TableRow::UpperBound2D => {
            upper_bound_leading(LayoutKind::BlockAlignedDiagonal2D, 2, 1, m, b)
        }
        TableRow::UpperBound3D => {
            upper_bound_leading(LayoutKind::HexagonalAlignedDiagonal3D, 3, 1, m, b)
        }
        TableRow::UpperBoundGeneral => {
            upper_bound_leading(LayoutKind::BlockAlignedColumnND, n, 1, m, b)
        }
    }
}

/// Reference values of earlier work for the same rows (per point, `s = 1`),
/// `None` where the earlier work gives no constant. Stored for the comparison
/// report only.
pub fn table_row_reference(row: TableRow, n: u32, m: u64, b: u64) -> [Option<f64>; 2] {
    let (mf, bf) = (m as f64, b as f64);
    let nf = f64::from(row.fixed_dim().unwrap_or(n));
    match row {
        TableRow::LowerBound2D => [Some(8.0 / 9.0 / (bf * mf)), Some(2.0 / (bf * mf))],
        TableRow::LowerBound3D => [
            Some(2.0 / 3f64.sqrt() / (bf * mf.sqrt())),
            Some(2.0 / (bf * mf.sqrt())),
        ],
        TableRow::LowerBoundGeneral => {
            let e = 1.0 / (nf - 1.0);
            let fact = factorial(nf as u32 - 1);
            [
                Some((2.0f64 / 3.0).powf(nf * e) * nf / fact.powf(e) / (bf * mf.powf(e))),
                None,
            ]
        }
        TableRow::UpperBound2D => [None, Some(8.0 / (bf * mf))],
        TableRow::UpperBound3D => [None, Some(4.0 * 6f64.sqrt() / (bf.sqrt() * mf.sqrt()))],
        TableRow::UpperBoundGeneral => [None, None],
    }
}

/// Layout-derived quantities needed by the exact ceilings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CeilingInputs {
    /// Sweep-shape parameter actually used.
    pub m: u64,
    /// Per-level size of a two-way wing (2D-ball-in-3D `A′`, hexagonal `C`).
    pub edge_wing: u64,
    /// Per-level size of a wing shared by three or more bands (`A″`, `C′`).
    pub corner_wing: u64,
}

fn cdiv(a: u128, b: u128) -> u128 {
    a.div_ceil(b)
}

/// Exact non-compulsory I/O ceiling of a sweep before any simplification.
pub fn noncompulsory_ceiling(
    kind: LayoutKind,
    sides: &[u64],
    s: u32,
    b: u64,
    inp: &CeilingInputs,
) -> Result<f64> {
    kind.check_dim(sides.len())?;
    let m = u128::from(inp.m);
    let s = u128::from(s);
    let b = u128::from(b);
    if m <= 4 * s {
        return Err(Error::UnusableConfiguration(format!(
            "sweep shape {m} too small for s = {s}"
        )));
    }
    let k: Vec<u128> = sides.iter().map(|&x| u128::from(x)).collect();
    let v = match kind {
        LayoutKind::Row2D => cdiv(k[1], m - 2 * s) * (2 * m + (cdiv(k[0], b) + 1) * 4 * s),
        LayoutKind::BlockAlignedColumn2D => cdiv(cdiv(k[1], m - 2 * s) * k[0] * 2 * s, b) * 2,
        LayoutKind::BlockAlignedDiagonal2D => {
            cdiv((cdiv(k[0], 2 * m - 2 * s) + 1) * 2 * s * k[1], b) * 2
        }
        LayoutKind::Row3D => {
            cdiv(k[1], m - 2 * s)
                * cdiv(k[2], m - 2 * s)
                * (2 * m * m
                    + (cdiv(k[0], b) + 1) * 4 * (2 * s * (m - 4 * s) + 2 * 2 * s * 2 * s))
        }
        LayoutKind::BlockAlignedColumnPole3D => {
            cdiv(k[1], m - 2 * s)
                * cdiv(k[2], m - 2 * s)
                * ((cdiv(k[0] * (m - 4 * s) * 2 * s, b) + 1) * 4
                    + (cdiv(k[0] * 4 * s * s, b) + 1) * 4 * 2)
        }
        LayoutKind::BlockAlignedDiagonal2Din3D => {
            let a1 = u128::from(inp.edge_wing);
            let a2 = u128::from(inp.corner_wing);
            (cdiv(k[1], 2 * m - 3 * s) + 1)
                * (cdiv(k[2], m) + 1)
                * ((cdiv(k[0] * a1, b) + 1) * 4 + (cdiv(k[0] * a2, b) + 1) * 8)
        }
        LayoutKind::HexagonalAlignedDiagonal3D => {
            let c1 = u128::from(inp.edge_wing);
            let c2 = u128::from(inp.corner_wing);
            let per_band = 6 * (cdiv(k[0] * c1, b) + 1) + 6 * (cdiv(k[0] * c2, b) + 1) * 2;
            // Working bands per plane, with the evaluable part of a band's
            // plane section taken as 9m² (the smallest denominator, so the
            // largest band count the estimate allows).
            let bands = (k[1] + 14 * m) as f64 * (k[2] + 14 * m) as f64 / (9 * m * m) as f64;
            return Ok(bands * per_band as f64);
        }
        LayoutKind::BlockAlignedColumnND => {
            let bands: u128 = k[1..].iter().map(|&ki| cdiv(ki, m - 2 * s)).product();
            // A working band's transverse section is a hypercube of side m whose
            // wing part is everything outside the central (m − 4s)-cube, split
            // into at most 3^{n−1} − 1 wing bands plus the core band.
            let t = (k.len() - 1) as u32;
            let w = m.pow(t) - (m - 4 * s).pow(t);
            bands * 2 * (cdiv(k[0] * w, b) + 3u128.pow(t))
        }
    };
    Ok(v as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() <= 1e-12
    }

    #[test]
    fn lower_bound_examples() {
        for m in [64u64, 4096, 1 << 20] {
            let mf = m as f64;
            assert!(close(lower_bound_constant(2, 1, m).unwrap(), 4.0 / mf));
            assert!(close(
                lower_bound_constant(3, 1, m).unwrap(),
                8.0 / 3f64.sqrt() / mf.sqrt()
            ));
            assert!(close(
                lower_bound_constant(4, 1, m).unwrap(),
                12.0 * (1.0f64 / 12.0).cbrt() / mf.cbrt()
            ));
        }
    }

    #[test]
    fn round_quantity_examples() {
        let (c, r0) = round_quantities(2, 1, 100).unwrap();
        assert_eq!(c, 200);
        assert!(close(r0, 50.0));
        let (c, r0) = round_quantities(3, 1, 96).unwrap();
        assert_eq!(c, 384);
        assert!(close(r0, 72f64.sqrt()));
        assert!(close(round_quantities(2, 2, 100).unwrap().1, 25.0));
    }

    #[test]
    fn upper_bound_examples() {
        let (m, b) = (4096u64, 16u64);
        let (mf, bf) = (m as f64, b as f64);
        let diag = upper_bound_leading(LayoutKind::BlockAlignedDiagonal2D, 2, 1, m, b).unwrap();
        assert!(close(diag, 4.0 / (bf * mf)));
        let hex = upper_bound_leading(LayoutKind::HexagonalAlignedDiagonal3D, 3, 1, m, b).unwrap();
        assert!(close(hex, 8.0 * 2f64.sqrt() / (3f64.sqrt() * bf * mf.sqrt())));
        let row = upper_bound_leading(LayoutKind::Row2D, 2, 3, m, b).unwrap();
        assert!(close(row, 24.0 / mf));
        assert!(upper_bound_leading(LayoutKind::Row3D, 2, 1, m, b).is_err());
    }

    #[test]
    fn gap_examples() {
        assert!(close(gap_ratio(2).unwrap(), 2.0));
        assert!(close(gap_ratio(3).unwrap(), 6f64.sqrt()));
        assert!(close(gap_ratio(4).unwrap(), 24f64.cbrt()));
    }

    #[test]
    fn ratio_identities() {
        for n in 2..=6u32 {
            for s in 1..=3u32 {
                for m in [100u64, 5000, 1 << 16] {
                    let lb = lower_bound_constant(n, s, m).unwrap() / 8.0;
                    let ub = upper_bound_leading(LayoutKind::BlockAlignedColumnND, n, s, m, 8)
                        .unwrap();
                    assert!(lb <= ub);
                    assert!(close(ub / lb, gap_ratio(n).unwrap()));
                }
            }
        }
        for s in 1..=3u32 {
            let m = 9000u64;
            let lb2 = lower_bound_constant(2, s, m).unwrap() / 4.0;
            let d2 = upper_bound_leading(LayoutKind::BlockAlignedDiagonal2D, 2, s, m, 4).unwrap();
            assert!(close(d2 / lb2, 1.0));
            let lb3 = lower_bound_constant(3, s, m).unwrap() / 4.0;
            let h = upper_bound_leading(LayoutKind::HexagonalAlignedDiagonal3D, 3, s, m, 4)
                .unwrap();
            assert!(close(h / lb3, 2f64.sqrt()));
        }
    }

    #[test]
    fn column_2d_ceiling_example() {
        // 64×64, m = 20, s = 1, B = 4: ⌈⌈64/18⌉·64·2/4⌉·2 = 256.
        let inp = CeilingInputs {
            m: 20,
            ..Default::default()
        };
        let c = noncompulsory_ceiling(LayoutKind::BlockAlignedColumn2D, &[64, 64], 1, 4, &inp)
            .unwrap();
        assert_eq!(c, 256.0);
    }
}
