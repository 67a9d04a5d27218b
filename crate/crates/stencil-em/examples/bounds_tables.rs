//! Bound calculators: the leading-term tables, the gap between lower and
//! upper bounds per dimension, and each layout's exact non-compulsory
//! ceiling for a concrete grid.
//!
//! ```text
//! cargo run --example bounds_tables
//! ```

use stencil_em::bounds::{gap_ratio, lower_bound_report, noncompulsory_ceiling, upper_bound_report};
use stencil_em::experiment::report_tables;
use stencil_em::layout::build_layout;
use stencil_em::{GridSpec, LayoutKind, MachineConfig, StencilSpec};

fn main() -> stencil_em::Result<()> {
    print!("{}", report_tables()?);

    println!("\ngap (upper / lower leading constant) per dimension:");
    for n in 2..=6 {
        println!("  n = {n}: {:.4}", gap_ratio(n)?);
    }

    let (m, b) = (4096u64, 16u64);
    println!("\nM = {m}, B = {b}, s = 1: I/Os per grid point and ceilings");
    for kind in LayoutKind::ALL {
        let n = if kind == LayoutKind::BlockAlignedColumnND { 4 } else { kind.dims().0 };
        let sides = vec![[4096, 256, 64][n - 2]; n];
        let g = GridSpec::grid(&sides)?;
        let layout = build_layout(kind, &g, StencilSpec::new(1)?, MachineConfig::new(m, b)?)?;
        let ub = upper_bound_report(kind, n as u32, 1, m, b)?;
        let lb = lower_bound_report(n as u32, 1, m, b)?;
        let ceiling = noncompulsory_ceiling(kind, &sides, 1, b, &layout.ceiling_inputs())?;
        let points: f64 = sides.iter().map(|&k| k as f64).product();
        println!(
            "  {:<28} m = {:>4}  rate {:.3e}  (lower {:.3e})  ceiling {:>10.0} = {:.3e} per point",
            kind.name(),
            layout.shape().m,
            ub.per_point_rate,
            lb.per_point_rate,
            ceiling,
            ceiling / points
        );
    }
    Ok(())
}
