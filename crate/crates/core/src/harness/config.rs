use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Figure1a,
    Figure1b,
    Bounds,
    Packing,
    Detector,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Figure1a => "figure1a",
            Self::Figure1b => "figure1b",
            Self::Bounds => "bounds",
            Self::Packing => "packing",
            Self::Detector => "detector",
        }
    }
}

/// One dictionary size in a Monte-Carlo sweep. `p1`/`p2` default to the
/// most balanced factorization of `p` with `p1 ≥ p2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub p: usize,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<usize>,
}

impl Problem {
    pub fn factors(&self) -> Result<(usize, usize)> {
        match (self.p1, self.p2) {
            (Some(a), Some(b)) if a * b == self.p => Ok((a, b)),
            (None, None) => Ok(balanced_factors(self.p)),
            _ => Err(Error::Config(format!("problems.p1 * problems.p2 must equal p = {}", self.p))),
        }
    }
}

/// `(p1, p2)` with `p1 · p2 = p`, `p1 ≥ p2` and `p1 − p2` minimal.
pub fn balanced_factors(p: usize) -> (usize, usize) {
    let mut p2 = (p as f64).sqrt() as usize;
    while p2 > 1 && !p.is_multiple_of(p2) {
        p2 -= 1;
    }
    let p2 = p2.max(1);
    (p / p2, p2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub m_dims: Vec<usize>,
    pub p_dims: Vec<usize>,
    pub s: usize,
    #[serde(default = "one")]
    pub sigma_a: f64,
    pub t: f64,
    pub c1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x_norm: Option<f64>,
    /// Use `(K/2)log₂2K` in the sparse-Gaussian bounds.
    #[serde(default)]
    pub k_scaled_log_term: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingConfig {
    pub m_dims: Vec<usize>,
    pub p_dims: Vec<usize>,
    pub r: f64,
    pub t: f64,
    /// Defaults to half of `t²/(8 ln 2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Defaults to half of `min{r², r⁴/(2Kp)}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_prime: Option<f64>,
    pub count: usize,
    #[serde(default = "default_mcdiarmid_trials")]
    pub mcdiarmid_trials: usize,
    /// Support size for the covariance-difference check.
    #[serde(default = "one_usize")]
    pub covariance_s: usize,
    #[serde(default = "one")]
    pub sigma_a: f64,
    /// Scale one column of member 0 to exercise failure reporting.
    #[serde(default)]
    pub corrupt: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub sigma_grid: Vec<f64>,
    pub n: usize,
    pub s: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_mcdiarmid_trials() -> usize {
    10_000
}

/// Complete description of a run; two runs with equal configs produce equal output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub problems: Vec<Problem>,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing: Option<PackingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
}

fn default_r() -> f64 {
    0.1
}

fn default_sigma() -> f64 {
    0.1
}

fn default_trials() -> usize {
    25
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Sweep settings for Monte-Carlo experiments at the given scale:
    /// desk is `p ∈ {16, 64}` with `s = 2, 5`, `N ∈ {500, 1000, 2000, 4000}`,
    /// 25 trials; full is `p ∈ {128, 256, 512}` with `s = 5`, 50 trials.
    pub fn apply_preset(&mut self, preset: Preset) {
        let problem = |p, s| Problem { p, s, p1: None, p2: None };
        match preset {
            Preset::Desk => {
                self.problems = vec![problem(16, 2), problem(64, 5)];
                self.n_grid = vec![500, 1000, 2000, 4000];
                self.trials = 25;
            }
            Preset::Full => {
                self.problems = vec![problem(128, 5), problem(256, 5), problem(512, 5)];
                self.n_grid = vec![1000, 2000, 4000, 8000, 16000];
                self.trials = 50;
            }
        }
        self.r = 0.1;
    }

    /// Stable hash of the canonical JSON form, 16 hex digits. The output
    /// path does not take part: where a table is written does not change it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&Self {
            output_path: None,
            ..self.clone()
        })
        .expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(e) = self.experiment {
            if e != kind {
                return Err(Error::Config(format!(
                    "experiment: config is for {}, subcommand is {}",
                    e.name(),
                    kind.name()
                )));
            }
        }
        let bad = |field: &str, why: String| Err(Error::Config(format!("{field}: {why}")));
        match kind {
            ExperimentKind::Figure1a | ExperimentKind::Figure1b => {
                if self.problems.is_empty() {
                    return bad("problems", "at least one problem is required".into());
                }
                if self.n_grid.is_empty() || self.n_grid.contains(&0) {
                    return bad("n_grid", "must be a non-empty list of positive sizes".into());
                }
                if self.trials == 0 {
                    return bad("trials", "must be positive".into());
                }
                if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
                    return bad("sigma", format!("{} must be non-negative", self.sigma));
                }
                if !(self.r >= 0.0 && self.r.is_finite()) {
                    return bad("r", format!("{} must be non-negative", self.r));
                }
                let n_min = *self.n_grid.iter().min().expect("non-empty");
                for pr in &self.problems {
                    let (p1, p2) = pr.factors()?;
                    if pr.s == 0 || pr.s > pr.p {
                        return bad("problems.s", format!("{} outside [1, {}]", pr.s, pr.p));
                    }
                    if p1.max(p2) > n_min {
                        return bad("n_grid", format!("max(p1, p2) = {} exceeds min N = {n_min}", p1.max(p2)));
                    }
                }
            }
            ExperimentKind::Bounds => {
                let b = self.bounds.as_ref().ok_or_else(|| Error::Config("bounds: section required".into()))?;
                if b.m_dims.is_empty() || b.m_dims.len() != b.p_dims.len() {
                    return bad("bounds.m_dims", "must match bounds.p_dims in length".into());
                }
                if self.n_grid.is_empty() || self.n_grid.contains(&0) {
                    return bad("n_grid", "must be a non-empty list of positive sizes".into());
                }
                if b.s == 0 {
                    return bad("bounds.s", "must be positive".into());
                }
            }
            ExperimentKind::Packing | ExperimentKind::Detector => {
                let p = self.packing.as_ref().ok_or_else(|| Error::Config("packing: section required".into()))?;
                if p.m_dims.is_empty() || p.m_dims.len() != p.p_dims.len() {
                    return bad("packing.m_dims", "must match packing.p_dims in length".into());
                }
                if p.m_dims.iter().zip(&p.p_dims).any(|(m, q)| q > m) {
                    return bad("packing.p_dims", "each p_k must not exceed m_k".into());
                }
                if kind == ExperimentKind::Detector {
                    let d = self.detector.as_ref().ok_or_else(|| Error::Config("detector: section required".into()))?;
                    if p.m_dims.len() != 2 || p.m_dims != p.p_dims {
                        return bad("packing.m_dims", "the detector needs a square second-order class".into());
                    }
                    if d.sigma_grid.is_empty() || d.sigma_grid.iter().any(|s| !(*s >= 0.0)) {
                        return bad("detector.sigma_grid", "must be non-empty and non-negative".into());
                    }
                    if d.n == 0 || d.s == 0 || self.trials == 0 {
                        return bad("detector", "n, s and trials must be positive".into());
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorizations() {
        assert_eq!(balanced_factors(16), (4, 4));
        assert_eq!(balanced_factors(128), (16, 8));
        assert_eq!(balanced_factors(512), (32, 16));
        assert_eq!(balanced_factors(7), (7, 1));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json(r#"{"trials": 3, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn desk_preset_validates() {
        let mut c = ExperimentConfig::from_json("{}").unwrap();
        c.apply_preset(Preset::Desk);
        c.validate(ExperimentKind::Figure1a).unwrap();
        c.n_grid = vec![2];
        let err = c.validate(ExperimentKind::Figure1a).unwrap_err();
        assert!(err.to_string().contains("n_grid"));
    }

    #[test]
    fn experiment_mismatch_rejected() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "bounds"}"#).unwrap();
        assert!(c.validate(ExperimentKind::Packing).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_json(r#"{"seed": 1}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"seed": 2}"#).unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        let moved = ExperimentConfig {
            output_path: Some("elsewhere.csv".into()),
            ..a.clone()
        };
        assert_eq!(moved.hash(), a.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
