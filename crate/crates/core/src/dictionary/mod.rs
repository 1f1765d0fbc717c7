//! Kronecker-structured dictionaries, their local neighborhood and the
//! packing-class construction used by the minimax lower bounds.

mod concentration;
mod householder;
mod packing;

pub use concentration::{mcdiarmid_bound, mcdiarmid_check, McDiarmidReport};
pub use householder::householder_from_e1;
pub use packing::{
    build_generating_matrix, build_packing_class, coherence_ok, min_distance_detect,
    verify_packing, Check, PackingClass, PackingParams, PackingReport,
};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{frobenius_distance, kron_all, norm2, DenseMatrix};

/// Column norms of the assembled dictionary must be within this of one.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Ordered coordinate dictionaries `D_1, …, D_K`; the full dictionary is
/// `D_1 ⊗ … ⊗ D_K` of shape `(∏ m_k) x (∏ p_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KsDictionary {
    factors: Vec<DenseMatrix>,
}

impl KsDictionary {
    /// Builds a dictionary whose assembled columns have unit ℓ₂ norm.
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        let d = Self::unnormalized(factors)?;
        let deviation = d
            .assembled_column_norms()
            .into_iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max);
        if deviation > UNIT_NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(d)
    }

    /// Builds a dictionary without the unit-norm check.
    pub fn unnormalized(factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Dimension("a dictionary needs at least one factor".into()));
        }
        if factors.iter().any(|f| f.rows() == 0 || f.cols() == 0) {
            return Err(Error::Dimension("empty coordinate dictionary".into()));
        }
        Ok(Self { factors })
    }

    /// `I_{p_1} ⊗ … ⊗ I_{p_K}`.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().map(|&d| DenseMatrix::identity(d)).collect())
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn m_dims(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::rows).collect()
    }

    pub fn p_dims(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::cols).collect()
    }

    pub fn m(&self) -> usize {
        self.m_dims().iter().product()
    }

    pub fn p(&self) -> usize {
        self.p_dims().iter().product()
    }

    /// Column norms of the assembled dictionary, in assembled column order.
    pub fn assembled_column_norms(&self) -> Vec<f64> {
        self.factors.iter().fold(vec![1.0], |acc, f| {
            let norms = f.column_norms();
            acc.iter()
                .flat_map(|a| norms.iter().map(move |n| a * n))
                .collect()
        })
    }

    /// The full `m x p` dictionary.
    pub fn assemble(&self) -> Result<DenseMatrix> {
        kron_all(&self.factors)
    }
}

/// `‖D − D₀‖_F` between two assembled dictionaries.
pub fn membership_radius(d: &KsDictionary, d0: &KsDictionary) -> Result<f64> {
    frobenius_distance(&d.assemble()?, &d0.assemble()?)
}

/// A `p x p` matrix `I + Δ` with unit-norm columns and `‖Δ‖_F ≤ radius`.
///
/// Draws a Gaussian direction `G`, normalizes the columns of `I + cG` and
/// bisects on `c` so that `‖Δ‖_F` approaches `radius` from below.
pub fn perturbed_identity<R: Rng + ?Sized>(p: usize, radius: f64, rng: &mut R) -> Result<DenseMatrix> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Precondition(format!("radius {radius} must be non-negative")));
    }
    let g = DenseMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let eye = DenseMatrix::identity(p);
    let at = |c: f64| -> DenseMatrix {
        let mut a = eye.add(&g.scale(c)).expect("same shape");
        for j in 0..p {
            let col = a.column(j);
            let n = norm2(&col);
            let unit: Vec<f64> = col.iter().map(|v| v / n).collect();
            a.set_column(j, &unit);
        }
        a
    };
    let dist = |a: &DenseMatrix| frobenius_distance(a, &eye).expect("same shape");
    if radius == 0.0 {
        return Ok(eye);
    }
    let (mut lo, mut hi) = (0.0f64, radius / g.frobenius_norm().max(f64::MIN_POSITIVE));
    let mut grow = 0;
    while dist(&at(hi)) <= radius {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            // radius exceeds what column normalization can reach; keep the largest tried
            return Ok(at(lo));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist(&at(mid)) <= radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(lo))
}
