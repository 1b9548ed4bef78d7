//! Brute-force references used to validate the structured solver: dense
//! Cholesky solve, dense Schur elimination, the scalar Thomas algorithm and a
//! dense least-squares solve.
//!
//! These are deliberately naive, sharing no code with the block kernels, and
//! only meant for small problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, PivotLocation, Result};
use crate::kalman::{Covariance, StateSpaceModel};
use crate::types::DenseMatrix;

/// Largest order the oracle paths are intended for.
pub const MAX_ORACLE_DIM: usize = 4096;

/// Largest unknown count solved by QR in [`kalman_least_squares`].
pub const KALMAN_QR_MAX_COLS: usize = 1024;

/// Unblocked dense Cholesky; returns the lower factor.
pub fn dense_cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "dense Cholesky of non-square matrix",
            expected: n,
            found: a.cols(),
        });
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || d.is_nan() {
            return Err(Error::NotPositiveDefinite {
                matrix: "dense matrix",
                location: PivotLocation {
                    level: 0,
                    member: 0,
                    block: 0,
                    pivot: j + 1,
                },
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for symmetric positive definite `A` by dense Cholesky
/// and two triangular sweeps.
pub fn dense_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "dense right-hand side rows",
            expected: a.rows(),
            found: b.rows(),
        });
    }
    let l = dense_cholesky(a)?;
    let n = a.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Eliminates the rows/columns listed in `interior` and returns the Schur
/// complement `A_ll - A_lu^T A_uu^{-1} A_lu` over the remaining indices in
/// ascending order.
pub fn dense_schur(a: &DenseMatrix, interior: &[usize]) -> Result<DenseMatrix> {
    let n = a.rows();
    let mut is_interior = vec![false; n];
    for &i in interior {
        is_interior[i] = true;
    }
    let u: Vec<usize> = (0..n).filter(|&i| is_interior[i]).collect();
    let l: Vec<usize> = (0..n).filter(|&i| !is_interior[i]).collect();

    let a_ll = DenseMatrix::from_fn(l.len(), l.len(), |i, j| a[(l[i], l[j])]);
    if u.is_empty() {
        return Ok(a_ll);
    }
    let a_uu = DenseMatrix::from_fn(u.len(), u.len(), |i, j| a[(u[i], u[j])]);
    let a_ul = DenseMatrix::from_fn(u.len(), l.len(), |i, j| a[(u[i], l[j])]);
    let f = dense_solve(&a_uu, &a_ul)?;
    Ok(DenseMatrix::from_fn(l.len(), l.len(), |i, j| {
        let update: f64 = (0..u.len()).map(|k| a_ul[(k, i)] * f[(k, j)]).sum();
        a_ll[(i, j)] - update
    }))
}

/// Thomas algorithm for a scalar tridiagonal system.
///
/// `lower[i]` is `A_{i+1,i}`, `upper[i]` is `A_{i,i+1}`. No pivoting.
pub fn thomas_scalar(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "tridiagonal bands",
            expected: n,
            found: rhs.len(),
        });
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::ZeroPivot { index: 0 });
    }
    c[0] = if n > 1 { upper[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::ZeroPivot { index: i });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Minimizes `||M x - y||_2` with a Householder QR.
pub fn dense_least_squares(m: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            context: "least-squares observations",
            expected: m.rows(),
            found: y.len(),
        });
    }
    if m.rows() < m.cols() {
        return Err(Error::InvalidDimensions(
            "least-squares system is underdetermined".into(),
        ));
    }
    let mat = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let qr = mat.qr();
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let x = qr
        .r()
        .solve_upper_triangular(&qty.rows(0, m.cols()).into_owned())
        .ok_or(Error::ZeroPivot { index: 0 })?;
    Ok(x.iter().copied().collect())
}

/// MAP estimate of a state-space model from the stacked whitened
/// least-squares problem
///
/// ```text
/// min || [L_R^-1 H; L_Q^-1 G] x - [L_R^-1 z; L_Q^-1 zeta] ||_2
/// ```
///
/// where `H` is block diagonal, `G` is block lower bidiagonal with identity
/// diagonal and `-G_k` below it, and `L` are Cholesky factors computed by
/// nalgebra. Returns the trajectory stacked by time step.
///
/// Up to [`KALMAN_QR_MAX_COLS`] unknowns the problem is solved by Householder
/// QR. Beyond that a dense QR of the stacked operator takes minutes, so the
/// dense Gram matrix `M^T M` of the same operator is factored instead, which
/// squares its condition number.
pub fn kalman_least_squares(model: &StateSpaceModel) -> Result<Vec<f64>> {
    model.validate()?;
    let (nh, n, m) = (model.horizon(), model.state_dim, model.obs_dim);
    let rows = nh * (m + n);
    let cols = nh * n;
    if cols > MAX_ORACLE_DIM {
        return Err(Error::InvalidDimensions(format!(
            "oracle limited to {MAX_ORACLE_DIM} unknowns, got {cols}"
        )));
    }
    let mut op = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    let to_na = |d: &DenseMatrix| DMatrix::from_row_slice(d.rows(), d.cols(), d.as_slice());
    let whiten = |c: &Covariance, what: &'static str, k: usize| -> Result<DMatrix<f64>> {
        let cov = to_na(&c.to_dense());
        let chol = cov.cholesky().ok_or(Error::NotPositiveDefinite {
            matrix: what,
            location: PivotLocation {
                level: 0,
                member: 0,
                block: k,
                pivot: 0,
            },
        })?;
        let l = chol.l();
        let inv = l
            .solve_lower_triangular(&DMatrix::identity(c.dim(), c.dim()))
            .ok_or(Error::ZeroPivot { index: 0 })?;
        Ok(inv)
    };
    for k in 0..nh {
        let wr = whiten(&model.measurement_cov[k], "measurement covariance R", k)?;
        let r0 = k * m;
        op.view_mut((r0, k * n), (m, n))
            .copy_from(&(&wr * to_na(&model.observation[k])));
        y.rows_mut(r0, m)
            .copy_from(&(&wr * DVector::from_column_slice(&model.observations[k])));

        let wq = whiten(&model.process_cov[k], "process covariance Q", k)?;
        let q0 = nh * m + k * n;
        op.view_mut((q0, k * n), (n, n)).copy_from(&wq);
        if k > 0 {
            op.view_mut((q0, (k - 1) * n), (n, n))
                .copy_from(&(-(&wq * to_na(&model.transition[k]))));
        }
        y.rows_mut(q0, n)
            .copy_from(&(&wq * DVector::from_column_slice(&model.prior_offsets[k])));
    }
    let x = if cols <= KALMAN_QR_MAX_COLS {
        let qr = op.qr();
        let mut qty = y;
        qr.q_tr_mul(&mut qty);
        qr.r()
            .solve_upper_triangular(&qty.rows(0, cols).into_owned())
            .ok_or(Error::ZeroPivot { index: 0 })?
    } else {
        let op_t = op.transpose();
        let gram = &op_t * &op;
        let rhs = &op_t * y;
        let chol = gram.cholesky().ok_or(Error::NotPositiveDefinite {
            matrix: "stacked least-squares Gram matrix",
            location: PivotLocation {
                level: 0,
                member: 0,
                block: 0,
                pivot: 0,
            },
        })?;
        chol.solve(&rhs)
    };
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut a = matmul(&g, &g.transpose());
        for i in 0..n {
            a[(i, i)] += n as f64;
        }
        a
    }

    #[test]
    fn identity_solve() {
        let b = DenseMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64);
        assert_eq!(dense_solve(&DenseMatrix::identity(4), &b).unwrap(), b);
    }

    #[test]
    fn two_by_two_solve() {
        let a = DenseMatrix::from_row_major(2, 2, vec![4.0, 2.0, 2.0, 5.0]);
        let x = dense_solve(&a, &DenseMatrix::from_row_major(2, 1, vec![6.0, 7.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn random_solve_residual() {
        let a = random_spd(20, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = DenseMatrix::from_fn(20, 1, |_, _| rng.random_range(-1.0..1.0));
        let x = dense_solve(&a, &b).unwrap();
        let r = matmul(&a, &x).max_abs_diff(&b);
        assert!(r <= 1e-12 * b.max_abs());
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        let err = dense_cholesky(&a).unwrap_err();
        assert_eq!(err.pivot_location().unwrap().pivot, 2);
    }

    #[test]
    fn scalar_chain_schur() {
        let a = DenseMatrix::from_row_major(3, 3, vec![4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0]);
        let s = dense_schur(&a, &[1]).unwrap();
        assert_eq!(s.as_slice(), &[3.75, -0.25, -0.25, 3.75]);
    }

    #[test]
    fn empty_interior_restricts() {
        let a = random_spd(5, 3);
        assert_eq!(dense_schur(&a, &[]).unwrap(), a);
    }

    #[test]
    fn thomas_trivial_and_scalar_chain() {
        let x = thomas_scalar(&[0.0; 3], &[1.0; 4], &[0.0; 3], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0]);

        let x = thomas_scalar(&[1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        let a = DenseMatrix::from_row_major(3, 3, vec![4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0]);
        let xd = dense_solve(&a, &DenseMatrix::from_row_major(3, 1, vec![1.0; 3])).unwrap();
        for (p, q) in x.iter().zip(xd.as_slice()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn thomas_zero_pivot() {
        assert!(matches!(
            thomas_scalar(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]),
            Err(Error::ZeroPivot { index: 0 })
        ));
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = DenseMatrix::from_fn(12, 4, |_, _| rng.random_range(-1.0..1.0));
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let y: Vec<f64> = (0..12).map(|i| (0..4).map(|j| m[(i, j)] * x_true[j]).sum()).collect();
        let x = dense_least_squares(&m, &y).unwrap();
        for (p, q) in x.iter().zip(x_true) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
