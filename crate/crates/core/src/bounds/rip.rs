use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{symmetric_eigenvalues, DenseMatrix};

/// Largest number of supports `rip_constant` will enumerate.
pub const SUPPORT_GUARD: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// `δ_s = max_{|S| = s} max(λ_max(D_SᵀD_S) − 1, 1 − λ_min(D_SᵀD_S))` by
/// exhaustive enumeration of supports.
pub fn rip_constant(d: &DenseMatrix, s: usize) -> Result<f64> {
    let p = d.cols();
    if s == 0 || s > p {
        return Err(Error::Precondition(format!("order {s} outside [1, {p}]")));
    }
    let dev = d.unit_norm_deviation();
    if dev > 1e-9 {
        return Err(Error::NotNormalized { deviation: dev });
    }
    let count = binomial(p, s);
    if count > SUPPORT_GUARD {
        return Err(Error::CombinatorialExplosion {
            count,
            guard: SUPPORT_GUARD,
        });
    }
    let gram = d.transpose().matmul(d)?;
    let deltas: Vec<f64> = (0..p)
        .combinations(s)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|support| {
            let sub = DenseMatrix::from_fn(s, s, |i, j| gram.get(support[i], support[j]));
            let eig = symmetric_eigenvalues(&sub)?;
            Ok((eig[s - 1] - 1.0).max(1.0 - eig[0]))
        })
        .collect::<Result<_>>()?;
    Ok(deltas.into_iter().fold(0.0, f64::max))
}
