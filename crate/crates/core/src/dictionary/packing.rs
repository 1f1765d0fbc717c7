use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{householder_from_e1, KsDictionary, UNIT_NORM_TOL};
use crate::error::{Error, Result};
use crate::tensor::{frobenius_distance, DenseMatrix};

/// Rejection sampling gives up after this many draws per requested member.
pub const RETRY_FACTOR: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingParams {
    pub r: f64,
    pub t: f64,
    pub c1: f64,
    pub eps_prime: f64,
    pub count: usize,
    pub seed: u64,
}

impl PackingParams {
    /// Largest admissible `c₁` (exclusive): `t²/(8 ln 2)`.
    pub fn c1_limit(t: f64) -> f64 {
        t * t / (8.0 * std::f64::consts::LN_2)
    }

    /// Largest admissible `ε′` (exclusive): `min{r², r⁴/(2Kp)}`.
    pub fn eps_prime_limit(r: f64, order: usize, p: usize) -> f64 {
        (r * r).min(r.powi(4) / (2.0 * order as f64 * p as f64))
    }

    /// Parameters with `c₁` and `ε′` at half their admissible maxima.
    pub fn with_defaults(r: f64, t: f64, order: usize, p: usize, count: usize, seed: u64) -> Self {
        Self {
            r,
            t,
            c1: 0.5 * Self::c1_limit(t),
            eps_prime: 0.5 * Self::eps_prime_limit(r, order, p),
            count,
            seed,
        }
    }

    pub fn validate(&self, order: usize, p: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Precondition(msg));
        if !(self.r > 0.0 && self.r.is_finite()) {
            return fail(format!("radius r = {} must be positive", self.r));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return fail(format!("t = {} must lie in (0, 1)", self.t));
        }
        let c1_max = Self::c1_limit(self.t);
        if !(self.c1 > 0.0 && self.c1 < c1_max) {
            return fail(format!("c1 = {} must lie in (0, {c1_max})", self.c1));
        }
        let eps_max = Self::eps_prime_limit(self.r, order, p);
        if !(self.eps_prime > 0.0 && self.eps_prime < eps_max) {
            return fail(format!("eps_prime = {} must lie in (0, {eps_max})", self.eps_prime));
        }
        if self.count == 0 {
            return fail("count must be at least 1".into());
        }
        Ok(())
    }

    /// `η = √(1 − ε′/r²)`.
    pub fn eta(&self) -> f64 {
        (1.0 - self.eps_prime / (self.r * self.r)).sqrt()
    }

    /// `ν = √(r^{2/K} ε′ / r²)`.
    pub fn nu(&self, order: usize) -> f64 {
        (self.r.powf(2.0 / order as f64) * self.eps_prime / (self.r * self.r)).sqrt()
    }
}

/// A reference dictionary and a finite set of perturbed KS dictionaries
/// around it, all with unit-norm columns and inside the radius-`r` ball.
#[derive(Clone, Debug)]
pub struct PackingClass {
    pub reference: KsDictionary,
    pub params: PackingParams,
    pub eta: f64,
    pub nu: f64,
    /// `generators[k][l]`: sign matrices of shape `(m_k − 1) x p_k`.
    pub generators: Vec<Vec<DenseMatrix>>,
    /// `directions[k][l]`: lifted generators, orthogonal to the reference factor column by column.
    pub directions: Vec<Vec<DenseMatrix>>,
    /// `selections[l][k]`: which mode-`k` perturbation member `l` uses.
    pub selections: Vec<Vec<usize>>,
    /// `⌊c₁(m_k − 1)p_k − ½ log₂(2K)⌋` per mode; the theoretical class has `2^x` members per mode.
    pub capacity_log2: Vec<i64>,
    members: Vec<KsDictionary>,
    assembled: Vec<DenseMatrix>,
    reference_assembled: DenseMatrix,
}

impl PackingClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[KsDictionary] {
        &self.members
    }

    /// Assembled `m x p` matrix of member `l`.
    pub fn member_matrix(&self, l: usize) -> &DenseMatrix {
        &self.assembled[l]
    }

    pub fn reference_matrix(&self) -> &DenseMatrix {
        &self.reference_assembled
    }

    pub fn order(&self) -> usize {
        self.reference.order()
    }

    /// Copy in which column `column` of member `member`'s first factor is multiplied by `scale`.
    pub fn with_scaled_column(&self, member: usize, column: usize, scale: f64) -> Result<Self> {
        let mut out = self.clone();
        let target = out
            .members
            .get(member)
            .ok_or_else(|| Error::Index(format!("member {member} of {}", self.len())))?;
        let mut factors = target.factors().to_vec();
        if column >= factors[0].cols() {
            return Err(Error::Index(format!("column {column}")));
        }
        let scaled: Vec<f64> = factors[0].column(column).iter().map(|v| v * scale).collect();
        factors[0].set_column(column, &scaled);
        let d = KsDictionary::unnormalized(factors)?;
        out.assembled[member] = d.assemble()?;
        out.members[member] = d;
        Ok(out)
    }
}

/// `(m_k − 1) x p_k` matrix with i.i.d. uniform entries `±1/(r^{1/K}√(m_k − 1))`.
pub fn build_generating_matrix<R: Rng + ?Sized>(
    mk: usize,
    pk: usize,
    r: f64,
    order: usize,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if mk < 2 {
        return Err(Error::Precondition(format!("m_k = {mk} leaves no room for a perturbation")));
    }
    let alpha = 1.0 / (r.powf(1.0 / order as f64) * ((mk - 1) as f64).sqrt());
    Ok(DenseMatrix::from_fn(mk - 1, pk, |_, _| {
        if rng.gen::<bool>() {
            alpha
        } else {
            -alpha
        }
    }))
}

/// `|⟨G₁, G₂⟩| ≤ p_k t / r^{2/K}`.
pub fn coherence_ok(g1: &DenseMatrix, g2: &DenseMatrix, pk: usize, t: f64, r: f64, order: usize) -> bool {
    match g1.inner(g2) {
        Ok(ip) => ip.abs() <= coherence_threshold(pk, t, r, order),
        Err(_) => false,
    }
}

fn coherence_threshold(pk: usize, t: f64, r: f64, order: usize) -> f64 {
    pk as f64 * t / r.powf(2.0 / order as f64)
}

fn capacity_log2(mk: usize, pk: usize, c1: f64, order: usize) -> i64 {
    let exponent = c1 * ((mk - 1) * pk) as f64 - 0.5 * (2.0 * order as f64).log2();
    exponent.floor() as i64
}

/// Builds `count` packing members around `d0`.
///
/// Mode `k` gets `count` generating matrices drawn by rejection sampling
/// (each must be coherent with all previously accepted ones), lifted column
/// by column through a Householder reflection onto the orthogonal complement
/// of the reference column, and mixed as `η D_(k,0) + ν D_(k,1,l)`.
/// Member `l` uses perturbation `l` in every mode.
pub fn build_packing_class(d0: &KsDictionary, params: &PackingParams) -> Result<PackingClass> {
    let order = d0.order();
    params.validate(order, d0.p())?;
    for (k, f) in d0.factors().iter().enumerate() {
        if f.rows() < 2 {
            return Err(Error::Precondition(format!("factor {k} has m_k = {} < 2", f.rows())));
        }
        let dev = f.unit_norm_deviation();
        if dev > UNIT_NORM_TOL {
            return Err(Error::NotNormalized { deviation: dev });
        }
    }
    let eta = params.eta();
    let nu = params.nu(order);
    let mut generators = Vec::with_capacity(order);
    let mut directions = Vec::with_capacity(order);
    let mut mixed = Vec::with_capacity(order);
    let mut capacity = Vec::with_capacity(order);
    for (k, base) in d0.factors().iter().enumerate() {
        let (mk, pk) = base.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(k as u64);
        let limit = RETRY_FACTOR * params.count;
        let mut accepted: Vec<DenseMatrix> = Vec::with_capacity(params.count);
        let mut draws = 0;
        while accepted.len() < params.count {
            if draws == limit {
                return Err(Error::PackingFailure(format!(
                    "mode {k}: only {} of {} coherent generating matrices after {limit} draws",
                    accepted.len(),
                    params.count
                )));
            }
            draws += 1;
            let g = build_generating_matrix(mk, pk, params.r, order, &mut rng)?;
            if accepted
                .iter()
                .all(|h| coherence_ok(&g, h, pk, params.t, params.r, order))
            {
                accepted.push(g);
            }
        }
        let reflections = (0..pk)
            .map(|j| householder_from_e1(&base.column(j)))
            .collect::<Result<Vec<_>>>()?;
        let lifted: Vec<DenseMatrix> = accepted
            .iter()
            .map(|g| lift(g, &reflections, mk))
            .collect::<Result<_>>()?;
        let mixed_k = lifted
            .iter()
            .map(|d1| base.scale(eta).add(&d1.scale(nu)))
            .collect::<Result<Vec<_>>>()?;
        capacity.push(capacity_log2(mk, pk, params.c1, order));
        generators.push(accepted);
        directions.push(lifted);
        mixed.push(mixed_k);
    }
    let selections: Vec<Vec<usize>> = (0..params.count).map(|l| vec![l; order]).collect();
    let members = selections
        .iter()
        .map(|sel| {
            KsDictionary::new(sel.iter().enumerate().map(|(k, &l)| mixed[k][l].clone()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let assembled = members.iter().map(KsDictionary::assemble).collect::<Result<Vec<_>>>()?;
    Ok(PackingClass {
        reference_assembled: d0.assemble()?,
        reference: d0.clone(),
        params: params.clone(),
        eta,
        nu,
        generators,
        directions,
        selections,
        capacity_log2: capacity,
        members,
        assembled,
    })
}

/// Column `j` of the result is `U_j (0, g_j)`.
fn lift(g: &DenseMatrix, reflections: &[DenseMatrix], mk: usize) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(mk, g.cols());
    for (j, u) in reflections.iter().enumerate() {
        let mut padded = Vec::with_capacity(mk);
        padded.push(0.0);
        padded.extend(g.column(j));
        out.set_column(j, &u.apply(&padded)?);
    }
    Ok(out)
}

/// One verified inequality: `observed` compared against `bound`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            bound,
            observed,
            passed: observed <= bound,
        }
    }

    pub fn at_least(name: &str, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            bound,
            observed,
            passed: observed >= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PackingReport {
    pub checks: Vec<Check>,
}

impl PackingReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Relative slack for analytic bounds that hold with equality in exact arithmetic.
const ROUNDING: f64 = 1e-12;

/// Evaluates every inequality the construction guarantees.
pub fn verify_packing(class: &PackingClass) -> Result<PackingReport> {
    let params = &class.params;
    let order = class.order();
    let p = class.reference.p() as f64;
    let k = order as f64;
    let r2 = params.r * params.r;
    let eps = params.eps_prime;
    let mut checks = Vec::new();

    let identity_gap = (class.eta * class.eta + class.nu * class.nu / params.r.powf(2.0 / k) - 1.0).abs();
    checks.push(Check::at_most("eta_nu_identity", identity_gap, 1e-12));

    let unit_dev = class
        .members
        .iter()
        .flat_map(KsDictionary::assembled_column_norms)
        .chain(class.assembled.iter().flat_map(DenseMatrix::column_norms))
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("unit_norm_deviation", unit_dev, UNIT_NORM_TOL));

    let mut max_radius = 0.0f64;
    for m in &class.assembled {
        max_radius = max_radius.max(frobenius_distance(m, &class.reference_assembled)?);
    }
    let chain = 2.0 * k * p * eps / r2;
    checks.push(Check::at_most("membership_sq_distance", max_radius * max_radius, chain * (1.0 + ROUNDING)));
    checks.push(Check::at_most("membership_radius", max_radius, params.r));
    checks.push(Check::at_most("eps_prime_chain", chain, r2));

    let mut orth = 0.0f64;
    for (kk, dirs) in class.directions.iter().enumerate() {
        for d in dirs {
            orth = orth.max(class.reference.factors()[kk].inner(d)?.abs());
        }
    }
    checks.push(Check::at_most("factor_orthogonality", orth, 1e-9));

    let mut coherence = 0.0f64;
    for (kk, gens) in class.generators.iter().enumerate() {
        let pk = class.reference.factors()[kk].cols();
        let threshold = coherence_threshold(pk, params.t, params.r, order);
        for a in 0..gens.len() {
            for b in a + 1..gens.len() {
                coherence = coherence.max(gens[a].inner(&gens[b])?.abs() / threshold);
            }
        }
    }
    if class.generators.iter().any(|g| g.len() > 1) {
        checks.push(Check::at_most("generator_coherence_ratio", coherence, 1.0));
    }

    if class.len() > 1 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in 0..class.len() {
            for b in a + 1..class.len() {
                let d = frobenius_distance(&class.assembled[a], &class.assembled[b])?;
                lo = lo.min(d * d);
                hi = hi.max(d * d);
            }
        }
        let lower = 2.0 * p / r2 * (1.0 - params.t) * eps;
        let upper = 4.0 * k * p / r2 * eps;
        checks.push(Check::at_least("pairwise_min_sq_distance", lo, lower * (1.0 - ROUNDING)));
        checks.push(Check::at_most("pairwise_max_sq_distance", hi, upper * (1.0 + ROUNDING)));
    }
    Ok(PackingReport { checks })
}

/// Index of the member closest to `dhat` in Frobenius norm; ties go to the lowest index.
pub fn min_distance_detect(dhat: &DenseMatrix, class: &PackingClass) -> Result<usize> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    let mut best = (0, f64::INFINITY);
    for (l, m) in class.assembled.iter().enumerate() {
        let d = frobenius_distance(dhat, m)?;
        if d < best.1 {
            best = (l, d);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn suite_params(count: usize) -> PackingParams {
        PackingParams::with_defaults(0.5, 0.5, 2, 16, count, 42)
    }

    fn suite_class(count: usize) -> PackingClass {
        let d0 = KsDictionary::identity(&[4, 4]).unwrap();
        build_packing_class(&d0, &suite_params(count)).unwrap()
    }

    #[test]
    fn generating_matrix_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = build_generating_matrix(2, 1, 1.0, 1, &mut rng).unwrap();
        assert_eq!(g.as_slice()[0].abs(), 1.0);
        let (r, k) = (0.3f64, 3usize);
        let g = build_generating_matrix(5, 4, r, k, &mut rng).unwrap();
        for n in g.column_norms() {
            assert!((n - r.powf(-1.0 / k as f64)).abs() < 1e-14);
        }
        let fro = g.frobenius_norm_sq();
        assert!((fro - 4.0 / r.powf(2.0 / k as f64)).abs() < 1e-12);
        assert!(build_generating_matrix(1, 4, r, k, &mut rng).is_err());
    }

    #[test]
    fn coherence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = build_generating_matrix(4, 4, 0.5, 2, &mut rng).unwrap();
        assert!(!coherence_ok(&g, &g.scale(-1.0), 4, 0.5, 0.5, 2));
        assert!(!coherence_ok(&g, &g, 4, 0.5, 0.5, 2));
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!(coherence_ok(&a, &b, 2, 0.1, 1.0, 1));
    }

    #[test]
    fn eta_nu_relation() {
        let p = suite_params(1);
        let (eta, nu) = (p.eta(), p.nu(2));
        assert!((eta * eta + nu * nu / p.r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_member_class() {
        let class = suite_class(1);
        let rep = verify_packing(&class).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.get("pairwise_min_sq_distance").is_none());
        let sq = frobenius_distance(class.member_matrix(0), class.reference_matrix()).unwrap().powi(2);
        let p = &class.params;
        assert!(sq <= 4.0 * 2.0 * 16.0 / (p.r * p.r) * p.eps_prime);
    }

    #[test]
    fn small_mode_class_of_eight() {
        let d0 = KsDictionary::identity(&[3, 3]).unwrap();
        let d0 = KsDictionary::new(
            d0.factors().iter().map(|f| f.select_columns(&[0, 1]).unwrap()).collect(),
        )
        .unwrap();
        let params = PackingParams::with_defaults(0.5, 0.5, 2, d0.p(), 8, 9);
        let class = build_packing_class(&d0, &params).unwrap();
        let rep = verify_packing(&class).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn suite_class_passes_and_reports_capacity() {
        let class = suite_class(8);
        assert_eq!(class.len(), 8);
        let rep = verify_packing(&class).unwrap();
        assert!(rep.passed(), "{rep:?}");
        // c1 (m_k−1)p_k − ½log₂4 with c1 = t²/(16 ln 2) at t = 0.5
        assert_eq!(class.capacity_log2, vec![-1, -1]);
    }

    #[test]
    fn corrupted_member_flagged() {
        let class = suite_class(3).with_scaled_column(1, 2, 1.1).unwrap();
        let rep = verify_packing(&class).unwrap();
        assert!(!rep.get("unit_norm_deviation").unwrap().passed);
    }

    #[test]
    fn invalid_params_rejected() {
        let d0 = KsDictionary::identity(&[4, 4]).unwrap();
        let mut p = suite_params(2);
        p.c1 = 1.0;
        assert!(matches!(build_packing_class(&d0, &p), Err(Error::Precondition(_))));
        let mut p = suite_params(2);
        p.eps_prime = 1.0;
        assert!(build_packing_class(&d0, &p).is_err());
        let d1 = KsDictionary::identity(&[1, 4]).unwrap();
        assert!(build_packing_class(&d1, &PackingParams::with_defaults(0.5, 0.5, 2, 4, 2, 0)).is_err());
    }

    #[test]
    fn impossible_coherence_is_packing_failure() {
        // one sign per mode: two generators always have |⟨G, G'⟩| = p_k/r^{2/K} > p_k t/r^{2/K}
        let d0 = KsDictionary::identity(&[2]).unwrap();
        let params = PackingParams::with_defaults(0.5, 0.5, 1, 2, 3, 0);
        let d0 = KsDictionary::new(vec![d0.factors()[0].select_columns(&[0]).unwrap()]).unwrap();
        assert!(matches!(build_packing_class(&d0, &params), Err(Error::PackingFailure(_))));
    }

    #[test]
    fn detector_recovers_exact_and_perturbed_members() {
        let class = suite_class(8);
        assert_eq!(min_distance_detect(class.member_matrix(3), &class).unwrap(), 3);
        let mut min_d = f64::INFINITY;
        for a in 0..8 {
            for b in a + 1..8 {
                min_d = min_d.min(frobenius_distance(class.member_matrix(a), class.member_matrix(b)).unwrap());
            }
        }
        let m = class.member_matrix(3);
        let bump = DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
        let bump = bump.scale(0.49 * min_d / bump.frobenius_norm());
        assert_eq!(min_distance_detect(&m.add(&bump).unwrap(), &class).unwrap(), 3);
    }

    #[test]
    fn detector_ties_go_to_lowest_index() {
        let class = suite_class(2);
        let mid = class.member_matrix(0).add(class.member_matrix(1)).unwrap().scale(0.5);
        let d0 = frobenius_distance(&mid, class.member_matrix(0)).unwrap();
        let d1 = frobenius_distance(&mid, class.member_matrix(1)).unwrap();
        if d0 == d1 {
            assert_eq!(min_distance_detect(&mid, &class).unwrap(), 0);
        }
        // duplicate members are exact ties
        let mut dup = class.clone();
        dup.assembled[1] = dup.assembled[0].clone();
        assert_eq!(min_distance_detect(dup.member_matrix(0), &dup).unwrap(), 0);
    }

    #[test]
    fn construction_is_deterministic() {
        let a = suite_class(4);
        let b = suite_class(4);
        for l in 0..4 {
            assert_eq!(a.member_matrix(l), b.member_matrix(l));
        }
    }
}
