use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

pub const POWER_ITERATION_CAP: usize = 10_000;

pub fn frobenius_distance(x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    x.check_same_shape(y)?;
    Ok(x
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Largest singular value by power iteration on `XᵀX`, started from the
/// normalized all-ones vector. Stops once successive estimates of `σ²`
/// agree to relative tolerance `tol`.
pub fn spectral_norm(x: &DenseMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let n = x.cols();
    if n == 0 || x.rows() == 0 || x.frobenius_norm_sq() == 0.0 {
        return Ok(0.0);
    }
    let xt = x.transpose();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut previous = f64::NAN;
    for _ in 0..POWER_ITERATION_CAP {
        let xv = x.apply(&v)?;
        let lambda: f64 = xv.iter().map(|a| a * a).sum();
        if (lambda - previous).abs() <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        previous = lambda;
        let mut w = xt.apply(&xv)?;
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            // start vector lies in the null space of X; restart from a ramp
            w = (0..n).map(|i| 1.0 + i as f64).collect();
            let nn = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            w.iter_mut().for_each(|a| *a /= nn);
            v = w;
            continue;
        }
        v = w.into_iter().map(|a| a / norm).collect();
    }
    Err(Error::Convergence {
        iterations: POWER_ITERATION_CAP,
    })
}

pub fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Projection onto the closed unit ℓ₂ ball.
pub fn project_unit_ball(u: &[f64]) -> Vec<f64> {
    let n = norm2(u);
    if n <= 1.0 {
        u.to_vec()
    } else {
        u.iter().map(|a| a / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let x = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        assert_eq!(frobenius_distance(&x, &x).unwrap(), 0.0);
        let d = frobenius_distance(&DenseMatrix::identity(2), &DenseMatrix::zeros(2, 2)).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(frobenius_distance(&x, &DenseMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn spectral_examples() {
        assert!((spectral_norm(&DenseMatrix::identity(5), 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::diag(&[3.0, 1.0]);
        assert!((spectral_norm(&d, 1e-14).unwrap() - 3.0).abs() < 1e-10);
        let u = DenseMatrix::column_vector(vec![1.0, 2.0]).unwrap();
        let v = DenseMatrix::column_vector(vec![2.0, 0.0, 1.0]).unwrap();
        let rank1 = u.matmul(&v.transpose()).unwrap();
        assert!((spectral_norm(&rank1, 1e-14).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 3), 1e-12).unwrap(), 0.0);
        assert!(spectral_norm(&rank1, 0.0).is_err());
    }

    #[test]
    fn spectral_start_orthogonal_to_row_space() {
        // all-ones start is annihilated by this matrix
        let x = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        assert!((spectral_norm(&x, 1e-14).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_unit_ball(&[0.3, 0.4]), vec![0.3, 0.4]);
        let p = project_unit_ball(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_unit_ball(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_nonexpansive(u in proptest::collection::vec(-10.0f64..10.0, 1..8)) {
            let p = project_unit_ball(&u);
            prop_assert!(norm2(&p) <= 1.0 + 1e-15);
            prop_assert!(norm2(&p) <= norm2(&u) + 1e-15);
            let pp = project_unit_ball(&p);
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }

        #[test]
        fn distance_symmetric(a in proptest::collection::vec(-5.0f64..5.0, 9), b in proptest::collection::vec(-5.0f64..5.0, 9)) {
            let x = DenseMatrix::new(3, 3, a).unwrap();
            let y = DenseMatrix::new(3, 3, b).unwrap();
            prop_assert_eq!(frobenius_distance(&x, &y).unwrap(), frobenius_distance(&y, &x).unwrap());
        }

        #[test]
        fn spectral_between_max_column_and_frobenius(a in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let x = DenseMatrix::new(3, 4, a).unwrap();
            let s = spectral_norm(&x, 1e-13).unwrap();
            let max_col = x.column_norms().into_iter().fold(0.0, f64::max);
            prop_assert!(s <= x.frobenius_norm() * (1.0 + 1e-9));
            prop_assert!(s >= max_col * (1.0 - 1e-6));
        }
    }
}
