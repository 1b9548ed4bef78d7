//! Factor several independent block-tridiagonal systems of different lengths
//! as one batch and compare with factoring them one at a time.
//!
//! cargo run --example batched_cholesky

use blocktri::report::residual_report;
use blocktri::synth::generate_spd_btd;
use blocktri::{factorize_btd_batch, serial_factorize, serial_solve, solve_btd_batch, BatchPolicy};

fn main() -> blocktri::Result<()> {
    let lengths = [3, 7, 1, 12, 5];
    let systems: Vec<_> = lengths
        .iter()
        .enumerate()
        .map(|(k, &nb)| generate_spd_btd(nb, 3, 1, k as u64))
        .collect();

    let mut factors: Vec<_> = systems.iter().map(|(a, _)| a.clone()).collect();
    let mut solutions: Vec<_> = systems.iter().map(|(_, b)| b.clone()).collect();
    {
        let mut refs: Vec<_> = factors.iter_mut().collect();
        factorize_btd_batch(BatchPolicy::Parallel, &mut refs)?;
    }
    {
        let refs: Vec<_> = factors.iter().collect();
        let mut rhs: Vec<_> = solutions.iter_mut().collect();
        solve_btd_batch(BatchPolicy::Parallel, &refs, &mut rhs)?;
    }

    for (k, ((a, b), x)) in systems.iter().zip(&solutions).enumerate() {
        let mut l = a.clone();
        let mut xs = b.clone();
        serial_factorize(&mut l)?;
        serial_solve(&l, &mut xs)?;
        println!(
            "member {k}: N={:>2}, residual {:.2e}, identical to one-at-a-time: {}",
            a.num_blocks(),
            residual_report(a, x, b)?.relative,
            xs == *x
        );
    }
    Ok(())
}
