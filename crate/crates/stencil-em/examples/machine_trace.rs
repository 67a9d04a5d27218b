//! Drive the `(M, B)` machine by hand on a row-major layout and print the
//! recorded trace together with the I/O classification.
//!
//! ```text
//! cargo run --example machine_trace
//! ```

use stencil_em::machine::{write_trace, AddressMap, RowMajorMap};
use stencil_em::{Fidelity, GridSpec, Machine, MachineConfig, StencilSpec};

fn main() -> stencil_em::Result<()> {
    // A 4×4 grid, blocks of 4 (one grid row each), room for 4 blocks.
    let g = GridSpec::grid(&[4, 4])?;
    let map = RowMajorMap::new(g.clone(), StencilSpec::new(1)?, 4)?;
    let mut m = Machine::new(&map, MachineConfig::new(16, 4)?, Fidelity::Full)?;
    for (i, x) in g.vertices().enumerate() {
        m.set_input(&x, i as u64)?;
    }
    m.enable_trace();

    // Row by row: keep input rows r−1, r, r+1 and the output row r resident.
    for r in 0..4u64 {
        for b in r.saturating_sub(1)..=(r + 1).min(3) {
            if !m.is_resident(b) {
                m.load(b)?;
            }
        }
        if r >= 2 {
            m.evict(r - 2, false)?;
        }
        let out = map.input_blocks() + r;
        m.allocate(out)?;
        for x in g.vertices().filter(|x| x.coords()[0] == r as i64) {
            m.eval_stencil(&x)?;
        }
        m.evict(out, true)?;
    }
    for b in 2..4 {
        m.evict(b, false)?;
    }

    write_trace(m.trace().unwrap_or_default(), std::io::stdout().lock())?;
    let rep = m.run_report();
    println!("{:?}", rep.stats);
    println!("complete: {}, peak footprint: {} of 16", rep.complete, rep.peak_footprint);
    println!("output at (1, 1): {}", m.output_value(&stencil_em::Vertex::new(&[1, 1]))?);
    Ok(())
}
