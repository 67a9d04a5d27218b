//! Exhaustive isoperimetry on a small torus: for every weight `v`, the
//! smallest closure and largest inner core over all `v`-subsets, against
//! the integral and fractional ℓ¹ balls.
//!
//! ```text
//! cargo run --release --example isoperimetry -- 6 5
//! ```

use stencil_em::oracle::{exhaustive_isoperimetry, subset_vertices, DEFAULT_BUDGET};

fn main() -> stencil_em::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().ok());
    let k = args.next().flatten().unwrap_or(4);
    let cap = args.next().flatten().unwrap_or(8) as u32;
    println!("torus Z_{k}^2, s = 1, weights 1..={cap}");
    println!("{:>3} {:>10} {:>8} {:>8} {:>12} {:>8} {:>8} {:>12}  ok", "v", "subsets", "min ∂", "ball ∂", "frac ∂", "max Δ", "ball Δ", "frac Δ");
    for v in exhaustive_isoperimetry(k, 2, cap, 1, DEFAULT_BUDGET)? {
        println!(
            "{:>3} {:>10} {:>8} {:>8} {:>12} {:>8} {:>8} {:>12}  {}",
            v.v,
            v.subsets,
            v.min_closure,
            v.integral_ball_closure,
            v.ball_closure.to_string(),
            v.max_core,
            v.integral_ball_core,
            v.ball_core.to_string(),
            v.holds()
        );
        if v.v == cap {
            let set = subset_vertices(k, 2, &v.extremal_closure_set)?;
            println!("a closure-minimal set of weight {cap}: {set:?}");
        }
    }
    Ok(())
}
