//! Walk the levels of a recursive factorization: the partition chosen at each
//! level, the segment lengths, and the Schur complement passed down.
//!
//! cargo run --example schur_hierarchy

use blocktri::oracle;
use blocktri::synth::generate_spd_btd;
use blocktri::{recursive_factorize, RecursionConfig};

fn main() -> blocktri::Result<()> {
    let (a, _) = generate_spd_btd(60, 2, 1, 3);
    let cfg = RecursionConfig::new(4, 3).keep_schur(true);
    let h = recursive_factorize(&a, &cfg)?;

    for (depth, level) in h.levels().iter().enumerate() {
        let plan = level.plan();
        let lens: Vec<_> = plan.segments().iter().map(|r| r.len()).collect();
        println!("level {depth}: N = {}", level.num_blocks());
        println!("  separators (1-based): {:?}", plan.separators_one_based());
        println!("  segment lengths: {lens:?}");
        if let Some(s) = level.schur_complement() {
            let spd = oracle::dense_cholesky(&s.assemble_dense()).is_ok();
            println!("  Schur complement: {} blocks, SPD: {spd}", s.num_blocks());
        }
    }
    println!("base system: {} blocks", h.base().num_blocks());

    // the nine-block example: separators 1, 5, 9 and interiors 2..4, 6..8
    let plan = blocktri::schur::plan_partition(9, &RecursionConfig::new(1, 3));
    println!("N = 9, rho = 3: separators {:?}", plan.separators_one_based());
    Ok(())
}
