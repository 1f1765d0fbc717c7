//! Coefficient distributions and synthetic observations `Y = D X + N`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::KsDictionary;
use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientModel {
    /// Every entry i.i.d. `N(0, σ_a²)`.
    GeneralDense { sigma_a: f64 },
    /// Uniform size-`s` support, Gaussian values.
    RandomSparse { s: usize, sigma_a: f64 },
    /// Support `S_1 × … × S_K` with `|S_k| = s_k`, Gaussian values.
    SeparableSparse { s_dims: Vec<usize>, sigma_a: f64 },
    /// Uniform size-`s` support, values `±1` with `P(+1) = positive_prob`.
    TernarySparse { s: usize, positive_prob: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub model: CoefficientModel,
    pub p_dims: Vec<usize>,
}

/// Nonzero pattern of one coefficient vector; `support` is sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSample {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl CoefficientSpec {
    pub fn ternary(p_dims: Vec<usize>, s: usize) -> Self {
        Self {
            model: CoefficientModel::TernarySparse { s, positive_prob: 0.5 },
            p_dims,
        }
    }

    pub fn p(&self) -> usize {
        self.p_dims.iter().product()
    }

    /// Number of nonzeros per column.
    pub fn sparsity(&self) -> usize {
        match &self.model {
            CoefficientModel::GeneralDense { .. } => self.p(),
            CoefficientModel::RandomSparse { s, .. } | CoefficientModel::TernarySparse { s, .. } => *s,
            CoefficientModel::SeparableSparse { s_dims, .. } => s_dims.iter().product(),
        }
    }

    /// Standard deviation of a nonzero value (one for ternary values).
    pub fn sigma_a(&self) -> f64 {
        match &self.model {
            CoefficientModel::GeneralDense { sigma_a }
            | CoefficientModel::RandomSparse { sigma_a, .. }
            | CoefficientModel::SeparableSparse { sigma_a, .. } => *sigma_a,
            CoefficientModel::TernarySparse { .. } => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if self.p_dims.is_empty() || self.p_dims.contains(&0) {
            return Err(Error::Precondition(format!("invalid p_dims {:?}", self.p_dims)));
        }
        match &self.model {
            CoefficientModel::GeneralDense { sigma_a } => check_sigma_a(*sigma_a),
            CoefficientModel::RandomSparse { s, sigma_a } => {
                check_sparsity(*s, p)?;
                check_sigma_a(*sigma_a)
            }
            CoefficientModel::TernarySparse { s, positive_prob } => {
                check_sparsity(*s, p)?;
                if !(0.0..=1.0).contains(positive_prob) {
                    return Err(Error::Precondition(format!("positive_prob {positive_prob} outside [0, 1]")));
                }
                Ok(())
            }
            CoefficientModel::SeparableSparse { s_dims, sigma_a } => {
                if s_dims.len() != self.p_dims.len() {
                    return Err(Error::Dimension(format!(
                        "{} per-mode sparsities for {} modes",
                        s_dims.len(),
                        self.p_dims.len()
                    )));
                }
                for (&sk, &pk) in s_dims.iter().zip(&self.p_dims) {
                    check_sparsity(sk, pk)?;
                }
                check_sigma_a(*sigma_a)
            }
        }
    }

    /// Draws one coefficient vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CoefficientSample> {
        let p = self.p();
        let (support, values) = match &self.model {
            CoefficientModel::GeneralDense { sigma_a } => {
                ((0..p).collect(), sample_values_gaussian(p, *sigma_a, rng)?)
            }
            CoefficientModel::RandomSparse { s, sigma_a } => (
                sample_support_random(p, *s, rng)?,
                sample_values_gaussian(*s, *sigma_a, rng)?,
            ),
            CoefficientModel::SeparableSparse { s_dims, sigma_a } => {
                let support = sample_support_separable(&self.p_dims, s_dims, rng)?;
                let values = sample_values_gaussian(support.len(), *sigma_a, rng)?;
                (support, values)
            }
            CoefficientModel::TernarySparse { s, positive_prob } => (
                sample_support_random(p, *s, rng)?,
                sample_values_ternary(*s, *positive_prob, rng),
            ),
        };
        Ok(CoefficientSample { support, values })
    }
}

fn check_sparsity(s: usize, p: usize) -> Result<()> {
    if s == 0 || s > p {
        return Err(Error::Precondition(format!("sparsity {s} outside [1, {p}]")));
    }
    Ok(())
}

fn check_sigma_a(sigma_a: f64) -> Result<()> {
    if !(sigma_a > 0.0 && sigma_a.is_finite()) {
        return Err(Error::Precondition(format!("sigma_a = {sigma_a} must be positive")));
    }
    Ok(())
}

/// Uniformly random size-`s` subset of `0..p`, sorted.
pub fn sample_support_random<R: Rng + ?Sized>(p: usize, s: usize, rng: &mut R) -> Result<Vec<usize>> {
    if s > p {
        return Err(Error::Precondition(format!("sparsity {s} exceeds dimension {p}")));
    }
    let mut support = index::sample(rng, p, s).into_vec();
    support.sort_unstable();
    Ok(support)
}

/// Cartesian product of per-mode uniform subsets, flattened with the last
/// mode fastest (`Σ_k j_k ∏_{k'>k} p_k'`), sorted.
pub fn sample_support_separable<R: Rng + ?Sized>(
    p_dims: &[usize],
    s_dims: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if p_dims.len() != s_dims.len() {
        return Err(Error::Dimension("p_dims and s_dims differ in length".into()));
    }
    let mut support = vec![0usize];
    for (&pk, &sk) in p_dims.iter().zip(s_dims) {
        let sub = sample_support_random(pk, sk, rng)?;
        support = support
            .iter()
            .flat_map(|base| sub.iter().map(move |j| base * pk + j))
            .collect();
    }
    Ok(support)
}

pub fn sample_values_gaussian<R: Rng + ?Sized>(s: usize, sigma_a: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_sigma_a(sigma_a)?;
    Ok((0..s)
        .map(|_| sigma_a * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

pub fn sample_values_ternary<R: Rng + ?Sized>(s: usize, positive_prob: f64, rng: &mut R) -> Vec<f64> {
    (0..s)
        .map(|_| if rng.gen_bool(positive_prob) { 1.0 } else { -1.0 })
        .collect()
}

/// Scalar `c` with `Σ_x = c I_p`: `(s/p) σ_a²`.
pub fn covariance_of(spec: &CoefficientSpec) -> Result<f64> {
    match spec.model {
        CoefficientModel::GeneralDense { .. } => Err(Error::Precondition(
            "dense coefficients need an externally supplied covariance norm".into(),
        )),
        _ => Ok(spec.sparsity() as f64 / spec.p() as f64 * spec.sigma_a().powi(2)),
    }
}

/// `Tr(Σ_x)/(m σ²)`.
pub fn snr(spec: &CoefficientSpec, m: usize, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    Ok(spec.sparsity() as f64 * spec.sigma_a().powi(2) / (m as f64 * sigma * sigma))
}

/// Observations `Y = D X + N` with `N` i.i.d. `N(0, σ²)`; returns `(Y, X)`.
///
/// Column `n` draws its coefficients and noise from its own stream of the
/// seeded generator, so output does not depend on thread scheduling.
pub fn generate_observations(
    d: &KsDictionary,
    spec: &CoefficientSpec,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    spec.validate()?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be non-negative")));
    }
    let full = d.assemble()?;
    generate_with_matrix(&full, spec, n, sigma, seed)
}

/// As [`generate_observations`] for an already assembled dictionary.
pub fn generate_with_matrix(
    full: &DenseMatrix,
    spec: &CoefficientSpec,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let p = spec.p();
    if full.cols() != p {
        return Err(Error::Dimension(format!(
            "dictionary has {} columns, coefficients have {p}",
            full.cols()
        )));
    }
    let m = full.rows();
    let dt = full.transpose();
    let columns: Vec<(Vec<f64>, CoefficientSample)> = (0..n)
        .into_par_iter()
        .map(|col| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(col as u64);
            let x = spec.sample(&mut rng)?;
            let mut y: Vec<f64> = (0..m)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            for (&i, &v) in x.support.iter().zip(&x.values) {
                for (yy, di) in y.iter_mut().zip(dt.row(i)) {
                    *yy += v * di;
                }
            }
            Ok((y, x))
        })
        .collect::<Result<_>>()?;
    let mut ydata = vec![0.0; m * n];
    let mut xdata = vec![0.0; p * n];
    for (col, (y, x)) in columns.iter().enumerate() {
        for (row, v) in y.iter().enumerate() {
            ydata[row * n + col] = *v;
        }
        for (&i, &v) in x.support.iter().zip(&x.values) {
            xdata[i * n + col] = v;
        }
    }
    Ok((DenseMatrix::new(m, n, ydata)?, DenseMatrix::new(p, n, xdata)?))
}
