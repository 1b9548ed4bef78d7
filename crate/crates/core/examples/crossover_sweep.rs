//! Time factorization and solve for a range of crossover sizes and segment
//! lengths, next to the serial block Cholesky.
//!
//! cargo run --release --example crossover_sweep

use blocktri::bench::time_runs;
use blocktri::synth::generate_spd_btd;
use blocktri::{recursive_factorize, serial_factorize, Crossover, RecursionConfig};

fn main() -> blocktri::Result<()> {
    let (a, b) = generate_spd_btd(2048, 16, 1, 1);
    let (serial, _) = time_runs(3, || a.clone(), |mut l| serial_factorize(&mut l))?;
    println!("serial factor: {:.2} ms", serial.mean_ms);

    println!(
        "{:>8} {:>4} {:>7} {:>10} {:>10}",
        "N*", "rho", "levels", "factor ms", "solve ms"
    );
    let crossovers = [
        Crossover::Fixed(8),
        Crossover::Fixed(64),
        Crossover::Fixed(256),
        Crossover::Auto,
    ];
    for crossover in crossovers {
        for rho in [2, 4, 8, 16] {
            let cfg = RecursionConfig {
                crossover,
                reduction_factor: rho,
                ..RecursionConfig::default()
            };
            let (tf, h) = time_runs(3, || (), |_| recursive_factorize(&a, &cfg))?;
            let (ts, _) = time_runs(3, || (), |_| h.solve(&b))?;
            let label = match crossover {
                Crossover::Fixed(k) => k.to_string(),
                Crossover::Auto => "auto".into(),
            };
            println!(
                "{label:>8} {rho:>4} {:>7} {:>10.2} {:>10.2}",
                h.levels().len(),
                tf.mean_ms,
                ts.mean_ms
            );
        }
    }
    Ok(())
}
