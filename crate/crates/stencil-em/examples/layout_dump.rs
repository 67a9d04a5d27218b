//! Build a banded layout and dump where every vertex lives: one CSV line per
//! vertex and layer with its band, block and offset. Also lists the bands.
//!
//! ```text
//! cargo run --example layout_dump -- BlockAlignedDiagonal2D 24 20 > layout.csv
//! ```

use stencil_em::layout::build_layout;
use stencil_em::{Error, GridSpec, LayoutKind, MachineConfig, StencilSpec};

fn main() -> stencil_em::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: LayoutKind = args
        .next()
        .unwrap_or_else(|| "BlockAlignedDiagonal2D".into())
        .parse()?;
    let mut sides: Vec<u64> = args
        .map(|a| a.parse().map_err(|_| Error::InvalidConfig(format!("bad side {a:?}"))))
        .collect::<Result<_, _>>()?;
    if sides.is_empty() {
        sides = vec![24; kind.dims().0];
    }
    let g = GridSpec::grid(&sides)?;
    let layout = build_layout(kind, &g, StencilSpec::new(1)?, MachineConfig::new(128, 4)?)?;
    eprintln!(
        "{kind} on {sides:?}: m = {}, {} working bands, {} bands",
        layout.shape().m,
        layout.working_band_count(),
        layout.band_count()
    );
    for b in layout.bands() {
        eprintln!("  {b:?}");
    }
    layout.write_csv(std::io::stdout().lock())
}
