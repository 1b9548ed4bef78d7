use proptest::prelude::*;

use blocktri::io::{read_btd_from, write_btd_to};
use blocktri::oracle;
use blocktri::report::residual_report;
use blocktri::schur::{assemble_solution, plan_partition, split_rhs};
use blocktri::synth::generate_spd_btd;
use blocktri::{recursive_factorize, BlockCholesky, BlockRhs, BlockTridiagonalMatrix, RecursionConfig};

fn rel_max_abs(x: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    x.iter().zip(reference).fold(0.0f64, |s, (a, b)| s.max((a - b).abs())) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursive_agrees_with_serial_and_dense(
        nb in 1usize..80,
        n in 1usize..5,
        d in 1usize..3,
        n_star in 1usize..6,
        rho in 1usize..6,
        seed in any::<u64>(),
    ) {
        let (a, b) = generate_spd_btd(nb, n, d, seed);
        let h = recursive_factorize(&a, &RecursionConfig::new(n_star, rho)).unwrap();
        let x = h.solve(&b).unwrap();
        let xs = BlockCholesky::factorize(&a).unwrap().solve(&b).unwrap();
        let xd = oracle::dense_solve(&a.assemble_dense(), &b.to_dense()).unwrap();
        let xd = BlockRhs::from_dense(&xd, n).unwrap();
        prop_assert!(rel_max_abs(x.as_slice(), xs.as_slice()) <= 1e-11);
        prop_assert!(rel_max_abs(x.as_slice(), xd.as_slice()) <= 1e-10);
        prop_assert!(residual_report(&a, &x, &b).unwrap().relative <= 1e-12);
    }

    #[test]
    fn level_sizes_shrink(nb in 3usize..2000, n_star in 1usize..16, rho in 1usize..10) {
        let a = BlockTridiagonalMatrix::identity(nb, 1);
        let h = recursive_factorize(&a, &RecursionConfig::new(n_star, rho)).unwrap();
        let sizes = h.level_sizes();
        prop_assert!(sizes.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(*sizes.last().unwrap() <= n_star.max(2));
    }

    #[test]
    fn partition_covers_every_block_once(nb in 3usize..500, rho in 1usize..12) {
        let plan = plan_partition(nb, &RecursionConfig::new(1, rho));
        let mut seen = vec![0u8; nb];
        for &s in plan.separators() {
            seen[s] += 1;
        }
        for r in plan.segments() {
            prop_assert!(!r.is_empty() && r.len() <= 2 * rho);
            for i in r.clone() {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(plan.separators()[0], 0);
        prop_assert_eq!(*plan.separators().last().unwrap(), nb - 1);
    }

    #[test]
    fn split_then_assemble_is_identity(
        nb in 3usize..120,
        n in 1usize..4,
        d in 1usize..4,
        rho in 1usize..9,
        values in proptest::collection::vec(any::<f64>(), 1..8),
    ) {
        let (_, mut b) = generate_spd_btd(nb, n, d, nb as u64);
        for (dst, v) in b.as_mut_slice().iter_mut().zip(values) {
            *dst = v;
        }
        let plan = plan_partition(nb, &RecursionConfig::new(1, rho));
        let (u, l) = split_rhs(&b, &plan).unwrap();
        let back = assemble_solution(&u, &l, &plan).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.as_slice()), bits(b.as_slice()));
    }

    #[test]
    fn file_round_trip_is_bitwise(
        nb in 1usize..30,
        n in 1usize..5,
        d in 1usize..4,
        with_rhs in any::<bool>(),
        sub_values in proptest::collection::vec(prop_oneof![Just(-0.0), Just(0.0), -1e300f64..1e300], 0..6),
    ) {
        let (a, b) = generate_spd_btd(nb, n, d, 17);
        let mut sub = a.sub_arena().to_vec();
        for (dst, v) in sub.iter_mut().zip(sub_values) {
            *dst = v;
        }
        let a = BlockTridiagonalMatrix::new(nb, n, a.diag_arena().to_vec(), sub).unwrap();
        let mut buf = Vec::new();
        write_btd_to(&mut buf, &a, with_rhs.then_some(&b)).unwrap();
        let (a2, b2) = read_btd_from(&mut buf.as_slice()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(a2.sub_arena()), bits(a.sub_arena()));
        prop_assert_eq!(bits(a2.diag_arena()), bits(a.diag_arena()));
        prop_assert_eq!(b2.is_some(), with_rhs);
        if let Some(b2) = b2 {
            prop_assert_eq!(bits(b2.as_slice()), bits(b.as_slice()));
        }
    }
}
