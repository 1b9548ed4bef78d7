//! Cross-check the recursive solver against the serial block Cholesky, a
//! dense Cholesky solve and, for scalar blocks, the Thomas algorithm.
//!
//! cargo run --example oracle_check

use blocktri::oracle;
use blocktri::synth::generate_spd_btd;
use blocktri::{recursive_factorize, BlockCholesky, BlockRhs, RecursionConfig};

fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    x.iter().zip(y).fold(0.0f64, |s, (a, b)| s.max((a - b).abs())) / scale
}

fn main() -> blocktri::Result<()> {
    for &(nb, n) in &[(50, 1), (120, 3), (200, 8)] {
        let (a, b) = generate_spd_btd(nb, n, 1, nb as u64);
        let x = recursive_factorize(&a, &RecursionConfig::new(4, 3))?.solve(&b)?;
        let xs = BlockCholesky::factorize(&a)?.solve(&b)?;
        let xd = BlockRhs::from_dense(&oracle::dense_solve(&a.assemble_dense(), &b.to_dense())?, n)?;
        print!(
            "N={nb:>3} n={n}: vs serial {:.1e}, vs dense {:.1e}",
            rel_diff(x.as_slice(), xs.as_slice()),
            rel_diff(x.as_slice(), xd.as_slice())
        );
        if n == 1 {
            let diag = a.diag_arena();
            let off = a.sub_arena();
            let xt = oracle::thomas_scalar(off, diag, off, b.as_slice())?;
            print!(", vs Thomas {:.1e}", rel_diff(x.as_slice(), &xt));
        }
        println!();
    }
    Ok(())
}
