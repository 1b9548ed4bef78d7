//! Smooth a simulated rotational state-space model by solving its MAP normal
//! equations, and compare the estimate with the true trajectory.
//!
//! cargo run --release --example kalman_smoothing

use std::time::Instant;

use blocktri::kalman::{build_normal_equations, simulate_rotation_model, RotationModelSpec};
use blocktri::report::residual_report;
use blocktri::{recursive_factorize, RecursionConfig};

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

fn main() -> blocktri::Result<()> {
    let spec = RotationModelSpec::new(32, 128, 100, 1);
    let (model, truth) = simulate_rotation_model(&spec)?;
    let truth: Vec<f64> = truth.into_iter().flatten().collect();

    let t0 = Instant::now();
    let (a, b) = build_normal_equations(&model)?;
    let x = recursive_factorize(&a, &RecursionConfig::default())?.solve(&b)?;
    println!(
        "n={} m={} N={} solved in {:.1} ms",
        spec.state_dim,
        spec.obs_dim,
        spec.horizon,
        t0.elapsed().as_secs_f64() * 1e3
    );
    println!("relative residual: {:.2e}", residual_report(&a, &x, &b)?.relative);

    // a naive per-step estimate ignores the dynamics: least squares on z_k = H x_k
    let mut naive = Vec::with_capacity(truth.len());
    for k in 0..spec.horizon {
        let xk = blocktri::oracle::dense_least_squares(&model.observation[k], &model.observations[k])?;
        naive.extend(xk);
    }
    println!("state RMSE, smoothed: {:.3e}", rmse(x.as_slice(), &truth));
    println!("state RMSE, per-step: {:.3e}", rmse(&naive, &truth));
    Ok(())
}
