//! Run every sweep on random inputs with full values and compare each output
//! with the naive stencil evaluator.
//!
//! ```text
//! cargo run --release --example sweep_vs_oracle
//! ```

use stencil_em::layout::build_layout;
use stencil_em::sweep::{run_oracle_compare, SweepPlan};
use stencil_em::{GridSpec, LayoutKind, MachineConfig, StencilSpec};

fn main() -> stencil_em::Result<()> {
    for s in 1..=2u32 {
        for kind in LayoutKind::ALL {
            let (sides, m): (Vec<u64>, u64) = match kind {
                LayoutKind::BlockAlignedColumnND => (vec![10, 11, 12, 13], 2048 * u64::from(s)),
                k if k.dims().0 == 2 => (vec![120, 100], 256 * u64::from(s)),
                _ => (vec![30, 32, 34], 1024 * u64::from(s)),
            };
            let cfg = MachineConfig::new(m, 4)?;
            let layout = build_layout(kind, &GridSpec::grid(&sides)?, StencilSpec::new(s)?, cfg)?;
            let cmp = run_oracle_compare(&SweepPlan::new(&layout), &layout, cfg, 42)?;
            println!(
                "s = {s} {:<28} {:?}: equal {}, complete {}, peak {:>5} of {m}, non-compulsory {}",
                kind.name(),
                sides,
                cmp.equal,
                cmp.complete,
                cmp.peak_footprint,
                cmp.stats.noncompulsory()
            );
        }
    }
    Ok(())
}
