//! Load an experiment configuration, run it in parallel and print the CSV
//! report; the library-level counterpart of `stencil-em run`.
//!
//! ```text
//! cargo run --release --example run_experiments -- crates/stencil-em/configs/quick.toml
//! ```

use std::path::PathBuf;

use stencil_em::experiment::{load_config, run_experiments, write_report, RunOptions};

fn main() -> stencil_em::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quick.toml")));
    let file = load_config(&path)?;
    let rows = run_experiments(&file, &RunOptions::default())?;
    write_report(&rows, std::io::stdout().lock())?;
    for r in &rows {
        eprintln!(
            "row {} {:<28} {:?}  ratio {:?}  {}",
            r.index,
            r.config.kind.name(),
            r.status,
            r.ratio.map(|x| (x * 1000.0).round() / 1000.0),
            r.detail()
        );
    }
    Ok(())
}
