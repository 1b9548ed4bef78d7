//! Build a small SPD block-tridiagonal system, solve it recursively and check
//! the residual.
//!
//! cargo run --example quickstart

use blocktri::report::residual_report;
use blocktri::synth::generate_spd_btd;
use blocktri::{recursive_factorize, RecursionConfig};

fn main() -> blocktri::Result<()> {
    // 500 diagonal blocks of order 4, two right-hand side columns
    let (a, b) = generate_spd_btd(500, 4, 2, 42);

    // recurse while more than 16 block rows remain, 4 interior blocks per segment
    let cfg = RecursionConfig::new(16, 4);
    let h = recursive_factorize(&a, &cfg)?;
    println!("system sizes per level: {:?}", h.level_sizes());

    let x = h.solve(&b)?;
    let r = residual_report(&a, &x, &b)?;
    println!("relative residual: {:.2e}", r.relative);
    for (c, (abs, rel)) in r.columns.iter().enumerate() {
        println!("  column {c}: |AX-B| = {abs:.2e}, relative {rel:.2e}");
    }

    // the factorization is reusable
    let (_, b2) = generate_spd_btd(500, 4, 1, 7);
    let x2 = h.solve(&b2)?;
    println!("second solve residual: {:.2e}", residual_report(&a, &x2, &b2)?.relative);
    Ok(())
}
