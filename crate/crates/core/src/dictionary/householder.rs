use crate::error::{Error, Result};
use crate::tensor::{norm2, DenseMatrix};

/// Orthogonal `U` with `U e₁ = col`: the reflection `I − 2vvᵀ/(vᵀv)` with
/// `v = e₁ − col`, or the identity when `col` is within `1e-12` of `e₁`.
pub fn householder_from_e1(col: &[f64]) -> Result<DenseMatrix> {
    let n = col.len();
    if n == 0 {
        return Err(Error::Dimension("empty column".into()));
    }
    let norm = norm2(col);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("column norm {norm} is not one")));
    }
    let mut v: Vec<f64> = col.iter().map(|c| -c).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|a| a * a).sum();
    if vv.sqrt() <= 1e-12 {
        return Ok(DenseMatrix::identity(n));
    }
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * v[i] * v[j] / vv
    }))
}
