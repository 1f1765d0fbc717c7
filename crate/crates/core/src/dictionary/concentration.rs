use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of an empirical concentration check for inner products of
/// random `±α` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct McDiarmidReport {
    pub rows: usize,
    pub cols: usize,
    pub alpha: f64,
    pub beta: f64,
    pub set_size: usize,
    pub trials: usize,
    /// Fraction of trials in which some pair had `|⟨A_l, A_l'⟩| ≥ β`.
    pub empirical: f64,
    /// `2L² exp(−β²/(4α⁴ · rows · cols))`.
    pub bound: f64,
    /// The bound is below one and says something.
    pub informative: bool,
    pub passed: bool,
}

pub fn mcdiarmid_bound(rows: usize, cols: usize, alpha: f64, beta: f64, set_size: usize) -> f64 {
    let l = set_size as f64;
    let mp = (rows * cols) as f64;
    2.0 * l * l * (-beta * beta / (4.0 * alpha.powi(4) * mp)).exp()
}

/// Draws `trials` independent sets of `set_size` sign matrices with entries
/// `±alpha` and counts the sets containing a pair whose inner product reaches `beta`.
pub fn mcdiarmid_check(
    rows: usize,
    cols: usize,
    alpha: f64,
    beta: f64,
    set_size: usize,
    trials: usize,
    seed: u64,
) -> McDiarmidReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rows * cols;
    let threshold = beta * (1.0 - 1e-12);
    let mut hits = 0usize;
    let mut set: Vec<Vec<i8>> = vec![vec![0; len]; set_size];
    for _ in 0..trials {
        for m in set.iter_mut() {
            for e in m.iter_mut() {
                *e = if rng.gen::<bool>() { 1 } else { -1 };
            }
        }
        let hit = (0..set_size).any(|a| {
            (a + 1..set_size).any(|b| {
                let s: i64 = set[a].iter().zip(&set[b]).map(|(x, y)| i64::from(x * y)).sum();
                (alpha * alpha * s as f64).abs() >= threshold
            })
        });
        hits += usize::from(hit);
    }
    let empirical = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
    let bound = mcdiarmid_bound(rows, cols, alpha, beta, set_size);
    let informative = bound < 1.0;
    McDiarmidReport {
        rows,
        cols,
        alpha,
        beta,
        set_size,
        trials,
        empirical,
        bound,
        informative,
        passed: !informative || empirical <= bound,
    }
}
