//! MAP smoothing of a linear-Gaussian state-space model as an SPD
//! block-tridiagonal solve.
//!
//! The model is
//!
//! ```text
//! x_k = G_k x_{k-1} + zeta_k + w_k,   w_k ~ N(0, Q_k),   x_0 = 0
//! z_k = H_k x_k + v_k,                v_k ~ N(0, R_k)
//! ```
//!
//! for `k = 1..N`. Minimizing `1/2 ||Hx - z||^2_{R^-1} + 1/2 ||Gx - zeta||^2_{Q^-1}`
//! over the stacked trajectory gives normal equations whose matrix is block
//! tridiagonal with
//!
//! ```text
//! A_kk     = Q_k^-1 + G_{k+1}^T Q_{k+1}^-1 G_{k+1} + H_k^T R_k^-1 H_k
//! A_{k+1,k} = -Q_{k+1}^-1 G_{k+1}
//! b_k      = H_k^T R_k^-1 z_k + Q_k^-1 zeta_k - G_{k+1}^T Q_{k+1}^-1 zeta_{k+1}
//! ```
//!
//! with `G_{N+1} = 0`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{chol_factor, gemm_acc, trsm_lower, MatMut, MatRef, Op, TriSolve};
use crate::types::{BlockRhs, BlockTridiagonalMatrix, DenseMatrix};

/// Damping applied to every 2x2 rotation of the generated dynamics.
pub const ROTATION_DAMPING: f64 = 0.98;
/// Scale of the generated process covariance.
pub const PROCESS_NOISE_SCALE: f64 = 0.01;
/// Singular values of the generated observation matrix are clamped to this range.
pub const OBSERVATION_SINGULAR_RANGE: (f64, f64) = (0.5, 2.0);
/// Range of the generated diagonal measurement variances.
pub const MEASUREMENT_VARIANCE_RANGE: (f64, f64) = (0.1, 1.0);

/// A covariance matrix, dense or diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Dense(DenseMatrix),
    /// Diagonal entries only.
    Diagonal(Vec<f64>),
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::Dense(m) => m.rows(),
            Covariance::Diagonal(d) => d.len(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Covariance::Dense(m) => m.clone(),
            Covariance::Diagonal(d) => DenseMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 }),
        }
    }

    fn is_square(&self) -> bool {
        match self {
            Covariance::Dense(m) => m.rows() == m.cols(),
            Covariance::Diagonal(_) => true,
        }
    }
}

/// Lower Cholesky factor of a covariance, kept diagonal when the covariance is.
enum Whitener {
    Dense(Vec<f64>, usize),
    Diagonal(Vec<f64>),
}

impl Whitener {
    fn new(c: &Covariance, matrix: &'static str, step: usize) -> Result<Self> {
        match c {
            Covariance::Dense(m) => {
                let n = m.rows();
                let mut l = m.as_slice().to_vec();
                chol_factor(MatMut::new(&mut l, n, n)).map_err(|e| Error::from_kernel(e, matrix, 0, 0, step))?;
                Ok(Whitener::Dense(l, n))
            }
            Covariance::Diagonal(d) => {
                let mut s = Vec::with_capacity(d.len());
                for (i, &v) in d.iter().enumerate() {
                    if v <= 0.0 || v.is_nan() {
                        return Err(Error::from_kernel(
                            crate::error::KernelError::NotPositiveDefinite { pivot: i + 1 },
                            matrix,
                            0,
                            0,
                            step,
                        ));
                    }
                    s.push(v.sqrt());
                }
                Ok(Whitener::Diagonal(s))
            }
        }
    }

    /// `X <- L^-1 X` for a row-major `rows x cols` panel.
    fn whiten(&self, x: &mut [f64], cols: usize) {
        match self {
            Whitener::Dense(l, n) => {
                trsm_lower(MatRef::new(l, *n, *n), MatMut::new(x, *n, cols), TriSolve::Left)
                    .expect("factor has a positive diagonal");
            }
            Whitener::Diagonal(s) => {
                for (row, &si) in x.chunks_exact_mut(cols).zip(s) {
                    row.iter_mut().for_each(|v| *v /= si);
                }
            }
        }
    }
}

/// Linear-Gaussian state-space model over a horizon of `N` steps.
///
/// Per-step vectors hold one entry per time step `k = 1..N` (index `k-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub state_dim: usize,
    pub obs_dim: usize,
    /// Transitions `G_k`, `n x n`. `G_1` must be the identity.
    pub transition: Vec<DenseMatrix>,
    /// Observation matrices `H_k`, `m x n`.
    pub observation: Vec<DenseMatrix>,
    /// Process covariances `Q_k`, `n x n`.
    pub process_cov: Vec<Covariance>,
    /// Measurement covariances `R_k`, `m x m`.
    pub measurement_cov: Vec<Covariance>,
    /// Observations `z_k`.
    pub observations: Vec<Vec<f64>>,
    /// Prior mean offsets `zeta_k`.
    pub prior_offsets: Vec<Vec<f64>>,
}

impl StateSpaceModel {
    pub fn horizon(&self) -> usize {
        self.transition.len()
    }

    /// Checks shapes and that `G_1` is the identity. Positive definiteness of
    /// the covariances is checked when they are factored.
    pub fn validate(&self) -> Result<()> {
        let (nh, n, m) = (self.horizon(), self.state_dim, self.obs_dim);
        if nh == 0 || n == 0 || m == 0 {
            return Err(Error::InvalidDimensions(format!(
                "state-space model needs N, n, m >= 1 (got N={nh}, n={n}, m={m})"
            )));
        }
        let lens = [
            ("observation matrices", self.observation.len()),
            ("process covariances", self.process_cov.len()),
            ("measurement covariances", self.measurement_cov.len()),
            ("observations", self.observations.len()),
            ("prior offsets", self.prior_offsets.len()),
        ];
        for (what, len) in lens {
            if len != nh {
                return Err(Error::InvalidDimensions(format!("{len} {what} for horizon {nh}")));
            }
        }
        for k in 0..nh {
            let bad = |what: &str| {
                Err(Error::InvalidDimensions(format!(
                    "{what} at step {} has wrong shape",
                    k + 1
                )))
            };
            let g = &self.transition[k];
            if g.rows() != n || g.cols() != n {
                return bad("G");
            }
            let h = &self.observation[k];
            if h.rows() != m || h.cols() != n {
                return bad("H");
            }
            if self.process_cov[k].dim() != n || !self.process_cov[k].is_square() {
                return bad("Q");
            }
            if self.measurement_cov[k].dim() != m || !self.measurement_cov[k].is_square() {
                return bad("R");
            }
            if self.observations[k].len() != m {
                return bad("z");
            }
            if self.prior_offsets[k].len() != n {
                return bad("zeta");
            }
        }
        if self.transition[0] != DenseMatrix::identity(n) {
            return Err(Error::InvalidDimensions("G_1 must be the identity".into()));
        }
        Ok(())
    }
}

/// Assembles the MAP normal equations `A x = b` of `model`.
///
/// Covariances enter only through their Cholesky factors: with `Q = L L^T`,
/// `Q^-1 = (L^-1)^T L^-1` and `G^T Q^-1 G = (L^-1 G)^T (L^-1 G)`. A
/// covariance that fails to factor is reported as `NotPositiveDefinite` with
/// the 0-based time step as its block coordinate.
pub fn build_normal_equations(model: &StateSpaceModel) -> Result<(BlockTridiagonalMatrix, BlockRhs)> {
    model.validate()?;
    let (nh, n, m) = (model.horizon(), model.state_dim, model.obs_dim);
    let bb = n * n;

    // per step: W = L_Q^-1, V = L_Q^-1 G, and the whitened offset L_Q^-1 zeta
    let mut w = Vec::with_capacity(nh);
    let mut v = Vec::with_capacity(nh);
    let mut wz = Vec::with_capacity(nh);
    for k in 0..nh {
        let lq = Whitener::new(&model.process_cov[k], "process covariance Q", k)?;
        let mut wk = DenseMatrix::identity(n).into_vec();
        lq.whiten(&mut wk, n);
        let mut vk = model.transition[k].as_slice().to_vec();
        lq.whiten(&mut vk, n);
        let mut zk = model.prior_offsets[k].clone();
        lq.whiten(&mut zk, 1);
        w.push(wk);
        v.push(vk);
        wz.push(zk);
    }

    let mut diag = vec![0.0; nh * bb];
    let mut sub = vec![0.0; nh.saturating_sub(1) * bb];
    let mut rhs = vec![0.0; nh * n];

    for k in 0..nh {
        let lr = Whitener::new(&model.measurement_cov[k], "measurement covariance R", k)?;
        let mut u = model.observation[k].as_slice().to_vec();
        lr.whiten(&mut u, n);
        let mut uz = model.observations[k].clone();
        lr.whiten(&mut uz, 1);

        let dk = &mut diag[k * bb..(k + 1) * bb];
        let bk = &mut rhs[k * n..(k + 1) * n];
        let wk = MatRef::new(&w[k], n, n);
        let u = MatRef::new(&u, m, n);
        gemm(dk, n, n, wk, wk, Op::Trans, 1.0);
        gemm(dk, n, n, u, u, Op::Trans, 1.0);
        gemm(bk, n, 1, u, MatRef::new(&uz, m, 1), Op::Trans, 1.0);
        gemm(bk, n, 1, wk, MatRef::new(&wz[k], n, 1), Op::Trans, 1.0);

        if k + 1 < nh {
            let vn = MatRef::new(&v[k + 1], n, n);
            gemm(dk, n, n, vn, vn, Op::Trans, 1.0);
            gemm(bk, n, 1, vn, MatRef::new(&wz[k + 1], n, 1), Op::Trans, -1.0);
            let sk = &mut sub[k * bb..(k + 1) * bb];
            gemm(sk, n, n, MatRef::new(&w[k + 1], n, n), vn, Op::Trans, -1.0);
        }
    }

    let a = BlockTridiagonalMatrix::new(nh, n, diag, sub)?;
    let b = BlockRhs::new(nh, n, 1, rhs)?;
    Ok((a, b))
}

/// `C += alpha * op(X) Y` on a raw row-major buffer.
fn gemm(c: &mut [f64], rows: usize, cols: usize, x: MatRef<'_>, y: MatRef<'_>, op: Op, alpha: f64) {
    gemm_acc(MatMut::new(c, rows, cols), x, y, op, Op::NoTrans, alpha, 1.0).expect("conforming operands");
}

/// Parameters of the synthetic rotational-dynamics model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationModelSpec {
    pub state_dim: usize,
    pub obs_dim: usize,
    pub horizon: usize,
    /// Step length; rotation angles are `omega * dt` with `omega` drawn
    /// uniformly from `(0, pi/4)` per plane.
    pub dt: f64,
    pub seed: u64,
}

impl RotationModelSpec {
    pub fn new(state_dim: usize, obs_dim: usize, horizon: usize, seed: u64) -> Self {
        RotationModelSpec {
            state_dim,
            obs_dim,
            horizon,
            dt: 1.0,
            seed,
        }
    }

    /// The shape of the large smoothing experiment: `n = 256`, `m = 1024`,
    /// `N = 100`.
    pub fn large(seed: u64) -> Self {
        Self::new(256, 1024, 100, seed)
    }

    fn validate(&self) -> Result<()> {
        let (n, m, nh) = (self.state_dim, self.obs_dim, self.horizon);
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidDimensions(format!(
                "state dimension must be even and positive, got {n}"
            )));
        }
        if m < n {
            return Err(Error::InvalidDimensions(format!(
                "observation dimension {m} is smaller than state dimension {n}"
            )));
        }
        if nh == 0 {
            return Err(Error::InvalidDimensions("horizon must be positive".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidDimensions(format!(
                "step length must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Generates a rotational-dynamics model and returns it with the simulated
/// true trajectory (`N` states of length `n`).
///
/// `G` is block diagonal with damped 2x2 rotations, `H` is a Gaussian matrix
/// whose singular values are clamped to `[0.5, 2]`, `Q = 0.01 (M M^T + n I) / n`
/// for Gaussian `M`, `R` is diagonal with entries uniform in `[0.1, 1]`, and
/// `zeta = 0`. The same `G`, `H`, `Q`, `R` are used at every step after the
/// first (`G_1 = I`). Output is a pure function of `spec`.
pub fn simulate_rotation_model(spec: &RotationModelSpec) -> Result<(StateSpaceModel, Vec<Vec<f64>>)> {
    spec.validate()?;
    let (n, m, nh) = (spec.state_dim, spec.obs_dim, spec.horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut g = DenseMatrix::zeros(n, n);
    for p in 0..n / 2 {
        let omega = loop {
            let w = rng.random_range(0.0..FRAC_PI_4);
            if w > 0.0 {
                break w;
            }
        };
        let (s, c) = (omega * spec.dt).sin_cos();
        let i = 2 * p;
        let mut gv = g.view_mut();
        gv.set(i, i, ROTATION_DAMPING * c);
        gv.set(i, i + 1, -ROTATION_DAMPING * s);
        gv.set(i + 1, i, ROTATION_DAMPING * s);
        gv.set(i + 1, i + 1, ROTATION_DAMPING * c);
    }

    let raw = DMatrix::<f64>::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    let mut svd = raw.svd(true, true);
    let (lo, hi) = OBSERVATION_SINGULAR_RANGE;
    svd.singular_values.iter_mut().for_each(|s| *s = s.clamp(lo, hi));
    let h_na = svd.recompose().expect("both factors were computed");
    let h = DenseMatrix::from_fn(m, n, |i, j| h_na[(i, j)]);

    let mm = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let mmt = &mm * mm.transpose();
    let q = DenseMatrix::from_fn(n, n, |i, j| {
        let v = 0.5 * (mmt[(i, j)] + mmt[(j, i)]) + if i == j { n as f64 } else { 0.0 };
        PROCESS_NOISE_SCALE * v / n as f64
    });
    let (rlo, rhi) = MEASUREMENT_VARIANCE_RANGE;
    let r: Vec<f64> = (0..m).map(|_| rng.random_range(rlo..=rhi)).collect();

    let mut lq = q.as_slice().to_vec();
    chol_factor(MatMut::new(&mut lq, n, n)).map_err(|e| Error::from_kernel(e, "process covariance Q", 0, 0, 0))?;
    let lq = MatRef::new(&lq, n, n);

    let mut states = Vec::with_capacity(nh);
    let mut observations = Vec::with_capacity(nh);
    let mut x = vec![0.0; n];
    for k in 0..nh {
        let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut next = vec![0.0; n];
        if k > 0 {
            gemm(&mut next, n, 1, g.view(), MatRef::new(&x, n, 1), Op::NoTrans, 1.0);
        }
        gemm(&mut next, n, 1, lq, MatRef::new(&eps, n, 1), Op::NoTrans, 1.0);
        x = next;

        let mut z = vec![0.0; m];
        gemm(&mut z, m, 1, h.view(), MatRef::new(&x, n, 1), Op::NoTrans, 1.0);
        for (zi, ri) in z.iter_mut().zip(&r) {
            let e: f64 = rng.sample(StandardNormal);
            *zi += ri.sqrt() * e;
        }
        states.push(x.clone());
        observations.push(z);
    }

    let mut transition = vec![g; nh];
    transition[0] = DenseMatrix::identity(n);
    let model = StateSpaceModel {
        state_dim: n,
        obs_dim: m,
        transition,
        observation: vec![h; nh],
        process_cov: vec![Covariance::Dense(q); nh],
        measurement_cov: vec![Covariance::Diagonal(r); nh],
        observations,
        prior_offsets: vec![vec![0.0; n]; nh],
    };
    Ok((model, states))
}

/// [`simulate_rotation_model`] without the true trajectory.
pub fn generate_rotation_model(
    state_dim: usize,
    obs_dim: usize,
    horizon: usize,
    dt: f64,
    seed: u64,
) -> Result<StateSpaceModel> {
    let spec = RotationModelSpec {
        state_dim,
        obs_dim,
        horizon,
        dt,
        seed,
    };
    Ok(simulate_rotation_model(&spec)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::schur::{recursive_factorize, RecursionConfig};

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::from_row_major(1, 1, vec![v])
    }

    fn scalar_model(g: &[f64], z: &[f64], zeta: &[f64]) -> StateSpaceModel {
        let nh = g.len();
        StateSpaceModel {
            state_dim: 1,
            obs_dim: 1,
            transition: g.iter().map(|&v| scalar(v)).collect(),
            observation: vec![scalar(1.0); nh],
            process_cov: vec![Covariance::Dense(scalar(1.0)); nh],
            measurement_cov: vec![Covariance::Diagonal(vec![1.0]); nh],
            observations: z.iter().map(|&v| vec![v]).collect(),
            prior_offsets: zeta.iter().map(|&v| vec![v]).collect(),
        }
    }

    #[test]
    fn single_step_identity_covariances() {
        let (a, b) = build_normal_equations(&scalar_model(&[1.0], &[0.7], &[-0.2])).unwrap();
        assert_eq!(a.diag_arena(), &[2.0]);
        assert!((b.as_slice()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_scalar_steps_match_stacked_operator() {
        let g = 0.6;
        let (a, _) = build_normal_equations(&scalar_model(&[1.0, g], &[0.0, 0.0], &[0.0, 0.0])).unwrap();
        // stacked G = [[1, 0], [-g, 1]], H = I
        let gs = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, -g, 1.0]);
        let expect = DenseMatrix::from_fn(2, 2, |i, j| {
            let gtg: f64 = (0..2).map(|k| gs[(k, i)] * gs[(k, j)]).sum();
            gtg + if i == j { 1.0 } else { 0.0 }
        });
        assert!(a.assemble_dense().max_abs_diff(&expect) < 1e-15);
        assert!((a.diag_arena()[0] - (2.0 + g * g)).abs() < 1e-15);
        assert!((a.sub_arena()[0] + g).abs() < 1e-15);
        assert!((a.diag_arena()[1] - 2.0).abs() < 1e-15);
    }

    fn random_model(n: usize, m: usize, nh: usize, seed: u64) -> StateSpaceModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rand_mat = |r: usize, c: usize| DenseMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let spd = |x: DenseMatrix| {
            let k = x.rows();
            DenseMatrix::from_fn(k, k, |i, j| {
                (0..k).map(|t| x[(i, t)] * x[(j, t)]).sum::<f64>() + if i == j { 0.5 } else { 0.0 }
            })
        };
        let mut transition: Vec<_> = (0..nh).map(|_| rand_mat(n, n)).collect();
        transition[0] = DenseMatrix::identity(n);
        let observation = (0..nh).map(|_| rand_mat(m, n)).collect();
        let process_cov = (0..nh).map(|_| Covariance::Dense(spd(rand_mat(n, n)))).collect();
        let measurement_cov = (0..nh)
            .map(|k| {
                if k % 2 == 0 {
                    Covariance::Dense(spd(rand_mat(m, m)))
                } else {
                    Covariance::Diagonal((0..m).map(|i| 0.3 + i as f64 * 0.1).collect())
                }
            })
            .collect();
        let observations = (0..nh).map(|_| rand_mat(m, 1).into_vec()).collect();
        let prior_offsets = (0..nh).map(|_| rand_mat(n, 1).into_vec()).collect();
        StateSpaceModel {
            state_dim: n,
            obs_dim: m,
            transition,
            observation,
            process_cov,
            measurement_cov,
            observations,
            prior_offsets,
        }
    }

    #[test]
    fn random_model_matches_least_squares() {
        for (seed, &(n, m, nh)) in [(2, 3, 5), (3, 2, 7), (1, 1, 4), (4, 6, 3)].iter().enumerate() {
            let model = random_model(n, m, nh, seed as u64);
            let (a, b) = build_normal_equations(&model).unwrap();
            let x = recursive_factorize(&a, &RecursionConfig::new(1, 1))
                .unwrap()
                .solve(&b)
                .unwrap();
            let x_ls = oracle::kalman_least_squares(&model).unwrap();
            let scale = x_ls.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let err = x
                .as_slice()
                .iter()
                .zip(&x_ls)
                .fold(0.0f64, |s, (p, q)| s.max((p - q).abs()));
            assert!(err <= 1e-10 * scale, "n={n} m={m} N={nh}: {err}");
        }
    }

    #[test]
    fn rotation_model_normal_equations_are_spd() {
        let model = generate_rotation_model(2, 4, 3, 1.0, 11).unwrap();
        let (a, b) = build_normal_equations(&model).unwrap();
        assert_eq!((a.num_blocks(), a.block_dim(), b.cols()), (3, 2, 1));
        oracle::dense_cholesky(&a.assemble_dense()).unwrap();
    }

    #[test]
    fn rotation_model_structure() {
        let (model, states) = simulate_rotation_model(&RotationModelSpec::new(4, 6, 5, 3)).unwrap();
        assert_eq!(states.len(), 5);
        assert_eq!(model.transition[0], DenseMatrix::identity(4));
        let g = &model.transition[1];
        // each 2x2 block is 0.98 times a rotation; cross-plane entries vanish
        for p in 0..2 {
            let (c, s) = (g[(2 * p, 2 * p)], g[(2 * p + 1, 2 * p)]);
            assert!(((c * c + s * s).sqrt() - ROTATION_DAMPING).abs() < 1e-14);
            assert!(c > 0.0 && s > 0.0 && s < c + 1e-12);
            assert_eq!(g[(2 * p, 2 * p + 1)], -s);
        }
        assert_eq!(g[(0, 2)], 0.0);
        let sv = nalgebra::DMatrix::from_row_slice(6, 4, model.observation[0].as_slice()).singular_values();
        assert!(sv.iter().all(|&s| (0.5 - 1e-12..=2.0 + 1e-12).contains(&s)));
        match &model.measurement_cov[0] {
            Covariance::Diagonal(r) => assert!(r.iter().all(|&v| (0.1..=1.0).contains(&v))),
            other => panic!("expected diagonal R, got {other:?}"),
        }
        assert!(model.prior_offsets.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rotation_model_is_deterministic() {
        let a = generate_rotation_model(4, 8, 6, 0.5, 21).unwrap();
        let b = generate_rotation_model(4, 8, 6, 0.5, 21).unwrap();
        assert_eq!(a, b);
        let c = generate_rotation_model(4, 8, 6, 0.5, 22).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_rejects_bad_shapes() {
        assert!(matches!(
            generate_rotation_model(3, 4, 2, 1.0, 0),
            Err(Error::InvalidDimensions(_))
        ));
        assert!(matches!(
            generate_rotation_model(4, 2, 2, 1.0, 0),
            Err(Error::InvalidDimensions(_))
        ));
        assert!(matches!(
            generate_rotation_model(4, 4, 0, 1.0, 0),
            Err(Error::InvalidDimensions(_))
        ));
        assert!(matches!(
            generate_rotation_model(4, 4, 2, 0.0, 0),
            Err(Error::InvalidDimensions(_))
        ));
    }

    #[test]
    fn indefinite_process_covariance_reports_step() {
        let mut model = generate_rotation_model(2, 2, 4, 1.0, 5).unwrap();
        if let Covariance::Dense(q) = &mut model.process_cov[2] {
            q.as_mut_slice().iter_mut().for_each(|v| *v = -*v);
        }
        let err = build_normal_equations(&model).unwrap_err();
        let loc = err.pivot_location().unwrap();
        assert_eq!((loc.level, loc.member, loc.block, loc.pivot), (0, 0, 2, 1));
    }

    #[test]
    fn non_identity_first_transition_is_rejected() {
        let mut model = scalar_model(&[1.0, 0.5], &[0.0, 0.0], &[0.0, 0.0]);
        model.transition[0] = scalar(0.9);
        assert!(matches!(
            build_normal_equations(&model),
            Err(Error::InvalidDimensions(_))
        ));
    }
}
