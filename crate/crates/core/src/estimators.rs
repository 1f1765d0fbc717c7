//! Two-step estimator for second-order KS dictionaries near the identity,
//! and the unstructured baseline that ignores the Kronecker structure.

use crate::error::{Error, Result};
use crate::tensor::{frobenius_distance, kron, project_unit_ball, DenseMatrix};

/// Factor sizes of `D = A ⊗ B` with `A` of size `p1` and `B` of size `p2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitLayout {
    pub p1: usize,
    pub p2: usize,
}

impl SplitLayout {
    pub fn new(p1: usize, p2: usize) -> Result<Self> {
        if p1 == 0 || p2 == 0 {
            return Err(Error::Dimension("factor sizes must be positive".into()));
        }
        Ok(Self { p1, p2 })
    }

    pub fn p(&self) -> usize {
        self.p1 * self.p2
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.p() {
            return Err(Error::Dimension(format!("vector of length {len}, expected {}", self.p())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorOutput {
    pub a_hat: DenseMatrix,
    pub b_hat: DenseMatrix,
    pub d_hat: DenseMatrix,
    pub x_hat: DenseMatrix,
    /// `‖D̂ − D‖²_F` once a ground truth is supplied.
    pub mse: Option<f64>,
}

impl EstimatorOutput {
    pub fn with_truth(mut self, d: &DenseMatrix) -> Result<Self> {
        self.mse = Some(frobenius_distance(&self.d_hat, d)?.powi(2));
        Ok(self)
    }
}

/// Entrywise `+1` above `0.5`, `−1` below `−0.5`, `0` otherwise.
pub fn threshold_coefficients(y: &DenseMatrix) -> DenseMatrix {
    let data = y
        .as_slice()
        .iter()
        .map(|&v| {
            if v > 0.5 {
                1.0
            } else if v < -0.5 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    DenseMatrix::new(y.rows(), y.cols(), data).expect("same shape")
}

/// `p2` vectors of length `p1`; vector `j` has components `y[p2·i + j]`.
pub fn split_for_a(y: &[f64], layout: SplitLayout) -> Result<Vec<Vec<f64>>> {
    layout.check(y.len())?;
    Ok((0..layout.p2)
        .map(|j| (0..layout.p1).map(|i| y[layout.p2 * i + j]).collect())
        .collect())
}

/// `p1` contiguous blocks of length `p2`.
pub fn split_for_b(y: &[f64], layout: SplitLayout) -> Result<Vec<Vec<f64>>> {
    layout.check(y.len())?;
    Ok(y.chunks(layout.p2).map(<[f64]>::to_vec).collect())
}

/// Column `l` is the projection onto the unit ball of
/// `(dim/(N s)) Σ x_l · y` over all aligned split pairs `(y, x)`.
fn average_columns(ys: &[Vec<f64>], xs: &[Vec<f64>], n: usize, s: usize, dim: usize) -> Result<DenseMatrix> {
    if ys.len() != xs.len() {
        return Err(Error::Dimension(format!("{} observation splits vs {} coefficient splits", ys.len(), xs.len())));
    }
    let rows = ys.first().map_or(dim, Vec::len);
    let mut cols = vec![vec![0.0; rows]; dim];
    for (y, x) in ys.iter().zip(xs) {
        if x.len() != dim || y.len() != rows {
            return Err(Error::Dimension("split lengths disagree".into()));
        }
        for (l, &xl) in x.iter().enumerate() {
            if xl == 0.0 {
                continue;
            }
            for (c, v) in cols[l].iter_mut().zip(y) {
                *c += xl * v;
            }
        }
    }
    scale_and_project(cols, n, s, dim)
}

/// Estimate of `A` from aligned A-splits of observations and coefficients.
pub fn estimate_a(y_splits: &[Vec<f64>], x_splits: &[Vec<f64>], n: usize, s: usize, p1: usize) -> Result<DenseMatrix> {
    average_columns(y_splits, x_splits, n, s, p1)
}

/// Estimate of `B` from aligned B-splits of observations and coefficients.
pub fn estimate_b(y_splits: &[Vec<f64>], x_splits: &[Vec<f64>], n: usize, s: usize, p2: usize) -> Result<DenseMatrix> {
    average_columns(y_splits, x_splits, n, s, p2)
}

fn scale_and_project(cols: Vec<Vec<f64>>, n: usize, s: usize, dim: usize) -> Result<DenseMatrix> {
    if s == 0 || n == 0 {
        return Err(Error::Precondition("N and s must be positive".into()));
    }
    let scale = dim as f64 / (n as f64 * s as f64);
    let projected: Vec<Vec<f64>> = cols
        .into_iter()
        .map(|c| project_unit_ball(&c.iter().map(|v| v * scale).collect::<Vec<_>>()))
        .collect();
    DenseMatrix::from_columns(&projected)
}

/// Thresholds `Y` (`p x N`) to recover coefficients, estimates both
/// factors from the splits, and returns `D̂ = Â ⊗ B̂`.
///
/// Equivalent to [`estimate_a`] and [`estimate_b`] on the stacked splits of
/// every column; only nonzero thresholded coefficients are visited.
pub fn ks_estimate(y: &DenseMatrix, layout: SplitLayout, s: usize) -> Result<EstimatorOutput> {
    layout.check(y.rows())?;
    let (p1, p2) = (layout.p1, layout.p2);
    let n = y.cols();
    let x_hat = threshold_coefficients(y);
    let yt = y.transpose();
    let xt = x_hat.transpose();
    let mut cols_a = vec![vec![0.0; p1]; p1];
    let mut cols_b = vec![vec![0.0; p2]; p2];
    for c in 0..n {
        let yc = yt.row(c);
        for (q, &x) in xt.row(c).iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let (a, b) = (q / p2, q % p2);
            // A-split b pairs x at position a with y[p2·i + b]
            for (i, acc) in cols_a[a].iter_mut().enumerate() {
                *acc += x * yc[p2 * i + b];
            }
            // B-split a pairs x at position b with the block y[p2·a ..]
            for (acc, v) in cols_b[b].iter_mut().zip(&yc[p2 * a..p2 * (a + 1)]) {
                *acc += x * v;
            }
        }
    }
    let a_hat = scale_and_project(cols_a, n, s, p1)?;
    let b_hat = scale_and_project(cols_b, n, s, p2)?;
    let d_hat = kron(&a_hat, &b_hat)?;
    Ok(EstimatorOutput {
        a_hat,
        b_hat,
        d_hat,
        x_hat,
        mse: None,
    })
}

/// Column `l` is the projection of `(p/(N s)) Σ_n x̂_{n,l} y_n`, with `x̂`
/// from thresholding; no Kronecker structure is imposed.
pub fn unstructured_estimate(y: &DenseMatrix, s: usize) -> Result<DenseMatrix> {
    let p = y.rows();
    let n = y.cols();
    let yt = y.transpose();
    let xt = threshold_coefficients(y).transpose();
    let mut cols = vec![vec![0.0; p]; p];
    for c in 0..n {
        let yc = yt.row(c);
        for (l, &x) in xt.row(c).iter().enumerate() {
            if x != 0.0 {
                for (acc, v) in cols[l].iter_mut().zip(yc) {
                    *acc += x * v;
                }
            }
        }
    }
    scale_and_project(cols, n, s, p)
}
