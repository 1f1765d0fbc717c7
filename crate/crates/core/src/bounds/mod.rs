//! Closed-form minimax lower bounds, the second-order upper bound, and
//! numerical checks of the inequalities behind them.

mod covariance;
mod rip;

pub use covariance::{
    covariance_diff_bound, covariance_diff_check, kl_covariance_bound, kl_fixed_coefficients,
    observation_covariance, CovarianceReport,
};
pub use rip::{rip_constant, SUPPORT_GUARD};

use serde::{Deserialize, Serialize};

use crate::dictionary::Check;
use crate::error::{Error, Result};

/// Scalars entering the bound formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub n: usize,
    pub m_dims: Vec<usize>,
    pub p_dims: Vec<usize>,
    pub s: usize,
    pub sigma: f64,
    pub sigma_a: f64,
    pub r: f64,
    pub t: f64,
    pub c1: f64,
    /// `‖Σ_x‖₂`; only the general-coefficient bound reads it.
    #[serde(default)]
    pub sigma_x_norm: Option<f64>,
}

impl BoundInputs {
    pub fn order(&self) -> usize {
        self.m_dims.len()
    }

    pub fn m(&self) -> usize {
        self.m_dims.iter().product()
    }

    pub fn p(&self) -> usize {
        self.p_dims.iter().product()
    }

    /// `Σ_k (m_k − 1) p_k`.
    pub fn degrees_of_freedom(&self) -> usize {
        self.m_dims
            .iter()
            .zip(&self.p_dims)
            .map(|(m, p)| (m - 1) * p)
            .sum()
    }

    pub fn validate_shape(&self) -> Result<()> {
        if self.m_dims.is_empty() || self.m_dims.len() != self.p_dims.len() {
            return Err(Error::Dimension(format!(
                "m_dims {:?} and p_dims {:?} must be non-empty and of equal length",
                self.m_dims, self.p_dims
            )));
        }
        if self.m_dims.contains(&0) || self.p_dims.contains(&0) || self.n == 0 || self.s == 0 {
            return Err(Error::Precondition("all counts must be positive".into()));
        }
        Ok(())
    }

    fn range_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.t > 0.0 && self.t < 1.0) {
            v.push(format!("t={} outside (0,1)", self.t));
        }
        let c1_max = (1.0 - self.t) / (8.0 * std::f64::consts::LN_2);
        if !(self.c1 > 0.0 && self.c1 < c1_max) {
            v.push(format!("c1={} outside (0,{c1_max})", self.c1));
        }
        if !(self.sigma > 0.0) {
            v.push(format!("sigma={} not positive", self.sigma));
        }
        if !(self.r > 0.0) {
            v.push(format!("r={} not positive", self.r));
        }
        v
    }
}

/// An evaluated bound `(t/4)·min{terms}`; each entry of `terms` already
/// carries the `t/4` factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub terms: [f64; 3],
    /// Index into `terms` of the minimizer (lowest index on ties).
    pub active: usize,
    pub degrees_of_freedom: usize,
    /// Violated preconditions; `"vacuous"` when the third term is not positive.
    pub validity: Vec<String>,
}

impl BoundReport {
    fn new(name: &str, terms: [f64; 3], dof: usize, mut validity: Vec<String>) -> Self {
        let mut active = 0;
        for (i, t) in terms.iter().enumerate() {
            if *t < terms[active] {
                active = i;
            }
        }
        if !(terms[2] > 0.0) {
            validity.push("vacuous".into());
        }
        Self {
            name: name.into(),
            value: terms[active],
            terms,
            active,
            degrees_of_freedom: dof,
            validity,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validity.is_empty()
    }
}

fn log2_2k(order: usize) -> f64 {
    (2.0 * order as f64).log2()
}

/// Lower bound for arbitrary zero-mean coefficients with covariance norm `‖Σ_x‖₂`:
/// `(t/4) min{p, r²/(2K), σ²/(4NK‖Σ_x‖₂)·(c₁·dof − (K/2)log₂2K − 2)}`.
pub fn lower_bound_general(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate_shape()?;
    let mut validity = inp.range_violations();
    let sx = match inp.sigma_x_norm {
        Some(v) => v,
        None => return Err(Error::Precondition("sigma_x_norm is required".into())),
    };
    if !(sx > 0.0) {
        validity.push(format!("sigma_x_norm={sx} not positive"));
    }
    let k = inp.order() as f64;
    let dof = inp.degrees_of_freedom();
    let q = inp.t / 4.0;
    let bracket = inp.c1 * dof as f64 - k / 2.0 * log2_2k(inp.order()) - 2.0;
    let third = inp.sigma * inp.sigma / (4.0 * inp.n as f64 * k * sx) * bracket;
    Ok(BoundReport::new(
        "general",
        [q * inp.p() as f64, q * inp.r * inp.r / (2.0 * k), q * third],
        dof,
        validity,
    ))
}

/// Sparse-coefficient lower bound: the general bound with `‖Σ_x‖₂ = s σ_a²/p`.
pub fn lower_bound_sparse(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate_shape()?;
    let mut sub = inp.clone();
    sub.sigma_x_norm = Some(inp.s as f64 * inp.sigma_a * inp.sigma_a / inp.p() as f64);
    let mut rep = lower_bound_general(&sub)?;
    rep.name = "sparse".into();
    if inp.s > inp.p() {
        rep.validity.push(format!("s={} exceeds p={}", inp.s, inp.p()));
    }
    Ok(rep)
}

/// Sparse-Gaussian lower bound:
/// `(t/4) min{p/s (random) or p (separable), r²/(2K), σ⁴p/(36·3^{4K} N s² σ_a⁴)·(c₁·dof − ½log₂2K − 2)}`.
///
/// With `k_scaled_log_term` the log term is `(K/2)log₂2K` instead of `½log₂2K`.
pub fn lower_bound_sparse_gaussian(inp: &BoundInputs, separable: bool, k_scaled_log_term: bool) -> Result<BoundReport> {
    inp.validate_shape()?;
    let mut validity = inp.range_violations();
    if !(inp.sigma_a > 0.0) {
        validity.push(format!("sigma_a={} not positive", inp.sigma_a));
    }
    let k = inp.order() as f64;
    let p = inp.p() as f64;
    let s = inp.s as f64;
    let dof = inp.degrees_of_freedom();
    let q = inp.t / 4.0;
    let log_coeff = if k_scaled_log_term { k / 2.0 } else { 0.5 };
    let bracket = inp.c1 * dof as f64 - log_coeff * log2_2k(inp.order()) - 2.0;
    let scale = inp.sigma.powi(4) * p
        / (36.0 * 3f64.powi(4 * inp.order() as i32) * inp.n as f64 * s * s * inp.sigma_a.powi(4));
    let first = if separable { p } else { p / s };
    Ok(BoundReport::new(
        if separable { "sparse_gaussian_separable" } else { "sparse_gaussian" },
        [q * first, q * inp.r * inp.r / (2.0 * k), q * scale * bracket],
        dof,
        validity,
    ))
}

/// Upper bound on the MSE of the two-step estimator for `K = 2`:
/// `(8p/N)((p₁m₁ + p₂m₂)/(m·SNR) + 3(p₁ + p₂)) + 8p·exp(−0.08pN/σ²)`.
pub fn mse_upper_bound_k2(p1: usize, p2: usize, m1: usize, m2: usize, n: usize, snr: f64, sigma: f64) -> f64 {
    let p = (p1 * p2) as f64;
    let m = (m1 * m2) as f64;
    let n = n as f64;
    let main = 8.0 * p / n * (((p1 * m1 + p2 * m2) as f64) / (m * snr) + 3.0 * (p1 + p2) as f64);
    main + 8.0 * p * (-0.08 * p * n / (sigma * sigma)).exp()
}

/// Conditions under which [`mse_upper_bound_k2`] holds, in order: radius,
/// sparsity-radius, sample-radius, noise.
#[allow(clippy::too_many_arguments)]
pub fn check_theorem4_conditions(
    r1: f64,
    r2: f64,
    p1: usize,
    p2: usize,
    s: usize,
    n: usize,
    sigma: f64,
    r: f64,
) -> Vec<Check> {
    let (p1f, p2f) = (p1 as f64, p2 as f64);
    vec![
        Check::at_most("radius", r1 * p2f.sqrt() + r2 * p1f.sqrt() + r1 * r2, r),
        Check::at_most("sparsity_radius", (r1 + r2 + r1 * r2) * (s as f64).sqrt(), 0.1),
        Check::at_most("sample_radius", (r1 * r1 / p2f).max(r2 * r2 / p1f), 1.0 / (3.0 * n as f64)),
        Check::at_most("noise", sigma, 0.4),
    ]
}

/// Largest `ρ` such that `r₁ = r₂ = ρ` meets the first three conditions of
/// [`check_theorem4_conditions`], by bisection.
pub fn max_equal_radii(p1: usize, p2: usize, s: usize, n: usize, r: f64) -> f64 {
    let ok = |rho: f64| {
        check_theorem4_conditions(rho, rho, p1, p2, s, n, 0.0, r)
            .iter()
            .take(3)
            .all(|c| c.passed)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// SNR at which the third terms of the sparse and sparse-Gaussian (random
/// support) bounds coincide. Below it the Gaussian bound's term is larger.
/// `None` when either bracket is not positive.
pub fn snr_crossover(inp: &BoundInputs, k_scaled_log_term: bool) -> Option<f64> {
    let k = inp.order() as f64;
    let dof = inp.degrees_of_freedom() as f64;
    let a = inp.c1 * dof - k / 2.0 * log2_2k(inp.order()) - 2.0;
    let log_coeff = if k_scaled_log_term { k / 2.0 } else { 0.5 };
    let b = inp.c1 * dof - log_coeff * log2_2k(inp.order()) - 2.0;
    if !(a > 0.0 && b > 0.0) {
        return None;
    }
    Some(4.0 * k * b / (36.0 * 3f64.powi(4 * inp.order() as i32) * inp.m() as f64 * a))
}
