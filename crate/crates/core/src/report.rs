//! Residual norms of a computed solution.

use crate::error::{Error, Result};
use crate::types::{BlockRhs, BlockTridiagonalMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `max_c ||A x_c - b_c||_2` over right-hand side columns.
    pub absolute: f64,
    /// `max_c ||A x_c - b_c||_2 / ||b_c||_2`.
    pub relative: f64,
    /// `(absolute, relative)` for every column.
    pub columns: Vec<(f64, f64)>,
}

/// Computes the residual of `X` with one block-sparse product.
///
/// A column with `b_c = 0` has relative residual 0 when its residual is also
/// zero and infinity otherwise.
pub fn residual_report(a: &BlockTridiagonalMatrix, x: &BlockRhs, b: &BlockRhs) -> Result<ResidualReport> {
    if x.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "solution and right-hand side columns",
            expected: b.cols(),
            found: x.cols(),
        });
    }
    a.check_conformal(b)?;
    let ax = a.apply(x)?;
    let d = b.cols();
    let mut r2 = vec![0.0; d];
    let mut b2 = vec![0.0; d];
    for (i, (&y, &bv)) in ax.as_slice().iter().zip(b.as_slice()).enumerate() {
        let c = i % d;
        r2[c] += (y - bv) * (y - bv);
        b2[c] += bv * bv;
    }
    let columns: Vec<(f64, f64)> = r2
        .iter()
        .zip(&b2)
        .map(|(&r, &bn)| {
            let (r, bn) = (r.sqrt(), bn.sqrt());
            let rel = if bn > 0.0 {
                r / bn
            } else if r == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            (r, rel)
        })
        .collect();
    Ok(ResidualReport {
        absolute: columns.iter().map(|c| c.0).fold(0.0, f64::max),
        relative: columns.iter().map(|c| c.1).fold(0.0, f64::max),
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_spd_btd;

    #[test]
    fn exact_solution_has_tiny_residual() {
        let (a, x) = generate_spd_btd(12, 3, 2, 1);
        let b = a.apply(&x).unwrap();
        let r = residual_report(&a, &x, &b).unwrap();
        let bnorm = b.column(0).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r.absolute <= 1e-13 * bnorm);
    }

    #[test]
    fn zero_solution_has_unit_relative_residual() {
        let (a, b) = generate_spd_btd(5, 2, 3, 2);
        let r = residual_report(&a, &BlockRhs::zeros(5, 2, 3), &b).unwrap();
        assert_eq!(r.relative, 1.0);
        assert_eq!(r.columns.len(), 3);
    }

    #[test]
    fn column_mismatch() {
        let (a, b) = generate_spd_btd(5, 2, 3, 2);
        assert!(residual_report(&a, &BlockRhs::zeros(5, 2, 1), &b).is_err());
    }
}
