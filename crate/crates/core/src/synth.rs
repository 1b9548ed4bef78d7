//! Seeded generator of well-conditioned SPD block-tridiagonal test systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::types::{BlockRhs, BlockTridiagonalMatrix};

/// Random SPD block-tridiagonal matrix with `N` blocks of order `n` and a
/// standard-normal right-hand side with `d` columns.
///
/// Off-diagonal entries are uniform in `[-1, 1]`. Each diagonal block is a
/// symmetrized uniform block shifted by `1 + r`, where `r` is the largest
/// absolute row sum across its whole block row, which makes the matrix
/// strictly diagonally dominant and hence SPD. Output is a pure function of
/// the arguments.
///
/// # Panics
///
/// If any of `N`, `n`, `d` is zero.
pub fn generate_spd_btd(
    num_blocks: usize,
    block_dim: usize,
    cols: usize,
    seed: u64,
) -> (BlockTridiagonalMatrix, BlockRhs) {
    assert!(
        num_blocks >= 1 && block_dim >= 1 && cols >= 1,
        "generator needs N, n, d >= 1"
    );
    let n = block_dim;
    let bb = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let sub: Vec<f64> = (0..(num_blocks - 1) * bb)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();

    let mut diag = vec![0.0; num_blocks * bb];
    for block in diag.chunks_exact_mut(bb) {
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..=1.0);
                block[i * n + j] = v;
                block[j * n + i] = v;
            }
        }
    }

    for b in 0..num_blocks {
        let mut worst = 0.0_f64;
        for r in 0..n {
            let mut sum: f64 = diag[b * bb + r * n..b * bb + (r + 1) * n].iter().map(|v| v.abs()).sum();
            if b > 0 {
                // row r of A_{b,b-1}
                sum += sub[(b - 1) * bb + r * n..(b - 1) * bb + (r + 1) * n]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>();
            }
            if b + 1 < num_blocks {
                // row r of A_{b+1,b}^T, i.e. column r of A_{b+1,b}
                sum += (0..n).map(|i| sub[b * bb + i * n + r].abs()).sum::<f64>();
            }
            worst = worst.max(sum);
        }
        let shift = 1.0 + worst;
        for i in 0..n {
            diag[b * bb + i * n + i] += shift;
        }
    }

    let rhs: Vec<f64> = (0..num_blocks * n * cols).map(|_| rng.sample(StandardNormal)).collect();

    let a = BlockTridiagonalMatrix::new(num_blocks, n, diag, sub).expect("generated blocks are symmetric");
    let b = BlockRhs::new(num_blocks, n, cols, rhs).expect("generated right-hand side is conformal");
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let (a1, b1) = generate_spd_btd(7, 3, 2, 42);
        let (a2, b2) = generate_spd_btd(7, 3, 2, 42);
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let (a3, _) = generate_spd_btd(7, 3, 2, 43);
        assert_ne!(a1, a3);
    }

    #[test]
    fn strictly_diagonally_dominant() {
        for &(nb, n) in &[(1, 1), (2, 1), (5, 4), (9, 7)] {
            let dense = generate_spd_btd(nb, n, 1, 5).0.assemble_dense();
            for i in 0..dense.rows() {
                let off: f64 = (0..dense.cols()).filter(|&j| j != i).map(|j| dense[(i, j)].abs()).sum();
                assert!(dense[(i, i)] > off, "row {i} not dominant");
            }
        }
    }

    #[test]
    fn off_diagonal_entries_in_unit_interval() {
        let (a, _) = generate_spd_btd(4, 3, 1, 8);
        assert!(a.sub_arena().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
