use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Sweeps until the off-diagonal Frobenius norm is at most `1e-12` times the
/// matrix norm.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!("{}x{} is not square", n, a.cols())));
    }
    let mut m: Vec<f64> = a.as_slice().to_vec();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > JACOBI_TOL * scale {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence { iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// `max |λ|` of a symmetric matrix.
pub fn symmetric_spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?
        .into_iter()
        .fold(0.0, |acc: f64, l| acc.max(l.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_spectra() {
        let ones = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let e = symmetric_eigenvalues(&ones).unwrap();
        assert!(e[0].abs() < 1e-14 && (e[1] - 2.0).abs() < 1e-14);
        let d = DenseMatrix::diag(&[3.0, -1.0, 2.0]);
        assert_eq!(symmetric_eigenvalues(&d).unwrap(), vec![-1.0, 2.0, 3.0]);
        assert!(symmetric_eigenvalues(&DenseMatrix::zeros(2, 3)).is_err());
    }

    proptest! {
        #[test]
        fn trace_and_norm_preserved(a in proptest::collection::vec(-3.0f64..3.0, 25)) {
            let m = DenseMatrix::new(5, 5, a).unwrap();
            let sym = m.add(&m.transpose()).unwrap();
            let e = symmetric_eigenvalues(&sym).unwrap();
            let trace: f64 = (0..5).map(|i| sym.get(i, i)).sum();
            prop_assert!((e.iter().sum::<f64>() - trace).abs() <= 1e-10);
            let fro: f64 = e.iter().map(|l| l * l).sum::<f64>().sqrt();
            prop_assert!((fro - sym.frobenius_norm()).abs() <= 1e-10 * sym.frobenius_norm().max(1.0));
        }
    }
}
