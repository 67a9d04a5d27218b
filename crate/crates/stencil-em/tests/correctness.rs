//! Sweeps against the naive evaluator on randomized Full-fidelity grids.

use proptest::prelude::*;

use stencil_em::layout::{build_layout_with, Derivation};
use stencil_em::sweep::{run_oracle_compare, SweepPlan};
use stencil_em::{Error, GridSpec, LayoutKind, MachineConfig, StencilSpec};

/// Compare one configuration; `Ok(false)` when no sweep shape fits.
fn check(kind: LayoutKind, sides: &[u64], s: u32, mut m: u64, b: u64, seed: u64) -> Result<bool, String> {
    let g = GridSpec::grid(sides).unwrap();
    let st = StencilSpec::new(s).unwrap();
    let layout = loop {
        let cfg = MachineConfig::new(m, b).unwrap();
        match build_layout_with(kind, &g, st, cfg, Derivation::CapacitySearch) {
            Ok(l) => break l,
            Err(Error::UnusableConfiguration(_)) if m < 1 << 15 => m *= 2,
            Err(Error::UnusableConfiguration(_)) => return Ok(false),
            Err(e) => return Err(e.to_string()),
        }
    };
    let cfg = MachineConfig::new(m, b).unwrap();
    let plan = SweepPlan::new(&layout);
    let cmp = run_oracle_compare(&plan, &layout, cfg, seed).map_err(|e| e.to_string())?;
    let label = format!("{kind} {sides:?} s={s} M={m} B={b}");
    if !cmp.equal {
        return Err(format!("{label}: first mismatch {:?}", cmp.first_mismatch));
    }
    if !cmp.complete {
        return Err(format!("{label}: incomplete"));
    }
    if cmp.peak_footprint > m {
        return Err(format!("{label}: peak {} > M", cmp.peak_footprint));
    }
    Ok(true)
}

fn config_2d() -> impl Strategy<Value = (Vec<u64>, u32, u64, u64, u64)> {
    (
        prop::collection::vec(5u64..160, 2),
        1u32..=2,
        64u64..512,
        prop::sample::select(vec![1u64, 2, 4, 8]),
        any::<u64>(),
    )
}

fn config_3d() -> impl Strategy<Value = (Vec<u64>, u32, u64, u64, u64)> {
    (
        prop::collection::vec(5u64..40, 3),
        1u32..=2,
        256u64..2048,
        prop::sample::select(vec![1u64, 2, 4, 8]),
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn two_dimensional_kinds_match_naive((sides, s, m, b, seed) in config_2d()) {
        for kind in [LayoutKind::Row2D, LayoutKind::BlockAlignedColumn2D, LayoutKind::BlockAlignedDiagonal2D] {
            let r = check(kind, &sides, s, m, b, seed);
            prop_assert!(r.is_ok(), "{:?}", r);
        }
    }

    #[test]
    fn three_dimensional_kinds_match_naive((sides, s, m, b, seed) in config_3d()) {
        for kind in [
            LayoutKind::Row3D,
            LayoutKind::BlockAlignedColumnPole3D,
            LayoutKind::BlockAlignedDiagonal2Din3D,
            LayoutKind::HexagonalAlignedDiagonal3D,
        ] {
            let r = check(kind, &sides, s, m, b, seed);
            prop_assert!(r.is_ok(), "{:?}", r);
        }
    }

    #[test]
    fn column_nd_matches_naive(
        sides in prop::collection::vec(5u64..14, 2..=5),
        s in 1u32..=2,
        m in 512u64..4096,
        seed in any::<u64>(),
    ) {
        let r = check(LayoutKind::BlockAlignedColumnND, &sides, s, m, 2, seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

#[test]
fn degenerate_sides_are_handled() {
    // Grids narrower than one sweep shape (but wider than 2s): partial working bands only.
    for (kind, sides) in [
        (LayoutKind::Row2D, vec![5u64, 200]),
        (LayoutKind::BlockAlignedColumn2D, vec![200, 5]),
        (LayoutKind::BlockAlignedDiagonal2D, vec![5, 50]),
        (LayoutKind::Row3D, vec![5, 5, 30]),
        (LayoutKind::BlockAlignedColumnPole3D, vec![30, 5, 5]),
        (LayoutKind::BlockAlignedDiagonal2Din3D, vec![5, 6, 9]),
        (LayoutKind::HexagonalAlignedDiagonal3D, vec![5, 5, 5]),
        (LayoutKind::BlockAlignedColumnND, vec![5, 5]),
    ] {
        for s in 1..=2 {
            assert_eq!(check(kind, &sides, s, 4096, 4, 7), Ok(true), "{kind} {sides:?} s={s}");
        }
    }
}
