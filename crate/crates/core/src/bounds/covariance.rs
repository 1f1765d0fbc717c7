use crate::dictionary::PackingClass;
use crate::error::{Error, Result};
use crate::tensor::{symmetric_spectral_norm, DenseMatrix};

/// `σ_a² D_S D_Sᵀ + σ² I_m`.
pub fn observation_covariance(dl: &DenseMatrix, support: &[usize], sigma_a: f64, sigma: f64) -> Result<DenseMatrix> {
    let ds = dl.select_columns(support)?;
    let mut cov = ds.matmul(&ds.transpose())?.scale(sigma_a * sigma_a);
    for i in 0..cov.rows() {
        cov.set(i, i, cov.get(i, i) + sigma * sigma);
    }
    Ok(cov)
}

/// `σ_a² 3^{2K+1} √(s ε′/r²)`.
pub fn covariance_diff_bound(order: usize, s: usize, eps_prime: f64, r: f64, sigma_a: f64) -> f64 {
    sigma_a * sigma_a * 3f64.powi(2 * order as i32 + 1) * (s as f64 * eps_prime / (r * r)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceReport {
    pub bound: f64,
    pub max_difference: f64,
    /// `max_difference / bound`.
    pub max_ratio: f64,
    pub pairs: usize,
    pub passed: bool,
}

/// Checks `‖Σ_l − Σ_l'‖₂` against [`covariance_diff_bound`] over every member pair.
pub fn covariance_diff_check(class: &PackingClass, support: &[usize], sigma_a: f64, sigma: f64) -> Result<CovarianceReport> {
    let params = &class.params;
    let s = support.len();
    if s as f64 * params.eps_prime / (params.r * params.r) > 1.0 {
        return Err(Error::Precondition(format!(
            "s ε′/r² = {} exceeds one",
            s as f64 * params.eps_prime / (params.r * params.r)
        )));
    }
    let covs = (0..class.len())
        .map(|l| observation_covariance(class.member_matrix(l), support, sigma_a, sigma))
        .collect::<Result<Vec<_>>>()?;
    let bound = covariance_diff_bound(class.order(), s, params.eps_prime, params.r, sigma_a);
    let mut max_difference = 0.0f64;
    let mut pairs = 0;
    for a in 0..covs.len() {
        for b in a..covs.len() {
            max_difference = max_difference.max(symmetric_spectral_norm(&covs[a].sub(&covs[b])?)?);
            pairs += 1;
        }
    }
    let max_ratio = max_difference / bound;
    Ok(CovarianceReport {
        bound,
        max_difference,
        max_ratio,
        pairs,
        passed: max_difference <= bound,
    })
}

/// `Σ_n ‖(D₁ − D₂) x_n‖² / (2σ²)`: KL divergence between the Gaussian
/// observation laws under the two dictionaries given coefficients `x`.
pub fn kl_fixed_coefficients(d1: &DenseMatrix, d2: &DenseMatrix, x: &DenseMatrix, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::Precondition("sigma must be positive".into()));
    }
    let diff = d1.sub(d2)?.matmul(x)?;
    Ok(diff.frobenius_norm_sq() / (2.0 * sigma * sigma))
}

/// `(N/(2σ²)) ‖X Xᵀ/N‖₂ ‖D₁ − D₂‖²_F`.
pub fn kl_covariance_bound(d1: &DenseMatrix, d2: &DenseMatrix, x: &DenseMatrix, sigma: f64) -> Result<f64> {
    let n = x.cols() as f64;
    let cov = x.matmul(&x.transpose())?.scale(1.0 / n);
    let diff = d1.sub(d2)?.frobenius_norm_sq();
    Ok(n / (2.0 * sigma * sigma) * symmetric_spectral_norm(&cov)? * diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{build_packing_class, KsDictionary, PackingParams};
    use crate::tensor::symmetric_eigenvalues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn covariance_examples() {
        let i = DenseMatrix::identity(3);
        assert_eq!(observation_covariance(&i, &[], 1.0, 0.5).unwrap(), i.scale(0.25));
        assert_eq!(observation_covariance(&i, &[0], 1.0, 1.0).unwrap(), DenseMatrix::diag(&[2.0, 1.0, 1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = DenseMatrix::from_fn(4, 6, |_, _| rng.gen_range(-1.0..1.0));
        let c = observation_covariance(&d, &[1, 4, 5], 0.7, 0.3).unwrap();
        assert!(symmetric_eigenvalues(&c).unwrap()[0] >= 0.09 - 1e-12);
        assert!(observation_covariance(&d, &[6], 1.0, 1.0).is_err());
    }

    #[test]
    fn class_difference_within_bound() {
        let d0 = KsDictionary::identity(&[4, 4]).unwrap();
        let class = build_packing_class(&d0, &PackingParams::with_defaults(0.5, 0.5, 2, 16, 8, 1)).unwrap();
        for j in 0..16 {
            let rep = covariance_diff_check(&class, &[j], 1.0, 0.1).unwrap();
            assert!(rep.passed && rep.max_ratio < 1.0, "{rep:?}");
            assert_eq!(rep.pairs, 36);
        }
        let small = covariance_diff_bound(2, 1, 1e-4, 0.5, 1.0);
        let large = covariance_diff_bound(2, 1, 4e-4, 0.5, 1.0);
        assert!((large - 2.0 * small).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d1 = DenseMatrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        let d2 = DenseMatrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        let x = DenseMatrix::from_fn(4, 20, |_, _| rng.gen_range(-1.0..1.0));
        assert_eq!(kl_fixed_coefficients(&d1, &d1, &x, 0.5).unwrap(), 0.0);
        let e1 = DenseMatrix::column_vector(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let col_diff: f64 = d1.column(0).iter().zip(d2.column(0)).map(|(a, b)| (a - b).powi(2)).sum();
        let kl = kl_fixed_coefficients(&d1, &d2, &e1, 0.5).unwrap();
        assert!((kl - col_diff / 0.5).abs() < 1e-12);
        assert!(kl_fixed_coefficients(&d1, &d2, &x, 0.0).is_err());
        for _ in 0..50 {
            let x = DenseMatrix::from_fn(4, 30, |_, _| rng.gen_range(-2.0..2.0));
            let kl = kl_fixed_coefficients(&d1, &d2, &x, 0.3).unwrap();
            assert!(kl <= kl_covariance_bound(&d1, &d2, &x, 0.3).unwrap() * (1.0 + 1e-12));
        }
    }
}
