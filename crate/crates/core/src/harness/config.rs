//! Experiment configuration: strict-schema JSON, validated before anything
//! runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain_models::{make_setar, NoiseSpec, ScalarModel, SetarParams};
use crate::drift_verifier::{DriftFunction, DEFAULT_INNER_POINTS, DEFAULT_OUTER_POINTS};
use crate::error::{Error, Result};
use crate::monte_carlo::{DEFAULT_BINS, DEFAULT_BURN_IN};
use crate::rate_calculus::{CanonicalRate, PhiParams};
use crate::rate_fit::FitWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Used for the default output directory and in the report.
    #[serde(default)]
    pub name: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub model: ModelBlock,
    pub analysis: AnalysisBlock,
    pub targets: Targets,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitWindow>,
}

/// Exactly one of the model kinds must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setar: Option<SetarBlock>,
    /// Reserved for general `g`; only the SETAR form is executable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlar: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetarBlock {
    #[serde(default)]
    pub thresholds: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    pub noise: NoiseSpec,
}

/// Exactly one engine must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretize: Option<DiscretizeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeBlock {
    /// Grid covers `[-half_width, half_width]`.
    pub half_width: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloBlock {
    pub replicates: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Stationary start points for the beta estimator.
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_starts() -> usize {
    crate::monte_carlo::MIN_STARTS
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifyTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_profile: Option<TvProfileTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaTarget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drift: Vec<DriftTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_checks: Option<RateChecksTarget>,
    /// Rates `r` for which `r(n) beta(n)` is checked for a zero limit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_product: Vec<CanonicalRate>,
}

/// A1 constants; derived from the outer regimes when omitted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyTarget {
    #[serde(default)]
    pub m0: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvProfileTarget {
    pub n_max: usize,
    /// Start state; the exact engine uses the nearest grid point. When
    /// omitted the exact engine averages over `pi` and Monte Carlo starts
    /// at 0.
    #[serde(default)]
    pub start: Option<f64>,
    /// Monte Carlo only: number of log-spaced `n` values.
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaTarget {
    /// Exact engine: `n = 1..n_max`. Monte Carlo: log-spaced up to `n_max`
    /// unless `n_list` is given.
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    30
}

/// Exact engine default `n_max`.
pub const DEFAULT_EXACT_N_MAX: usize = 400;
/// Monte Carlo default `n_max`.
pub const DEFAULT_MC_N_MAX: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftTarget {
    pub v: DriftFunction,
    /// Drift-SubG rate; give either this or `beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiParams>,
    /// Drift-G contraction `beta in (0, 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Small set `[-K, K]`.
    pub c_half_width: f64,
    pub n_mc: usize,
    #[serde(default = "default_inner")]
    pub grid_inner: usize,
    #[serde(default = "default_outer")]
    pub grid_outer: usize,
}

fn default_inner() -> usize {
    DEFAULT_INNER_POINTS
}

fn default_outer() -> usize {
    DEFAULT_OUTER_POINTS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateChecksTarget {
    pub phi: PhiParams,
    #[serde(default = "default_lambda0_n_max")]
    pub lambda0_n_max: u64,
    /// Random `(m, n)` pairs for the submultiplicativity check.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_lambda0_n_max() -> u64 {
    crate::rate_calculus::LAMBDA0_N_MAX
}

fn default_pairs() -> usize {
    500
}

/// Which engine produces the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Exact(DiscretizeBlock),
    MonteCarlo(MonteCarloBlock),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Canonical serialization used for hashing and manifests.
    pub fn to_canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.build_model()?;
        self.engine()?;
        let t = &self.targets;
        if t.classify.is_none()
            && t.tv_profile.is_none()
            && t.beta.is_none()
            && t.drift.is_empty()
            && t.rate_checks.is_none()
        {
            return Err(Error::Config("targets block names no target".into()));
        }
        if !t.rate_product.is_empty() && t.beta.is_none() {
            return Err(Error::Config("targets.rate_product needs targets.beta".into()));
        }
        if let Some(tv) = &t.tv_profile {
            if tv.n_max == 0 || tv.points < 2 {
                return Err(Error::Config("tv_profile needs n_max >= 1 and points >= 2".into()));
            }
        }
        if let Some(b) = &t.beta {
            if b.n_max.is_some() && b.n_list.is_some() {
                return Err(Error::Config("beta takes n_max or n_list, not both".into()));
            }
            if b.n_list.is_some() && matches!(self.engine()?, Engine::Exact(_)) {
                return Err(Error::Config(
                    "beta.n_list needs the monte_carlo engine; use n_max".into(),
                ));
            }
            if b.n_max == Some(0) {
                return Err(Error::Config("beta.n_max must be >= 1".into()));
            }
        }
        for (i, d) in t.drift.iter().enumerate() {
            match (&d.phi, &d.beta) {
                (Some(_), Some(_)) => return Err(Error::Config(format!("drift[{i}] takes phi or beta, not both"))),
                (None, None) => return Err(Error::Config(format!("drift[{i}] needs phi or beta"))),
                _ => {}
            }
            d.v.validate()?;
            if let Some(p) = d.phi {
                crate::rate_calculus::PhiFunction::new(p)?;
            }
            if !(d.c_half_width > 0.0 && d.c_half_width.is_finite()) {
                return Err(Error::Config(format!("drift[{i}].c_half_width must be > 0")));
            }
        }
        if let Some(rc) = &t.rate_checks {
            crate::rate_calculus::PhiFunction::new(rc.phi)?;
        }
        if let Some(f) = &self.fit {
            if let (Some(lo), Some(hi)) = (f.n_lo, f.n_hi) {
                if lo > hi {
                    return Err(Error::Config("fit.n_lo exceeds fit.n_hi".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<ScalarModel> {
        match (&self.model.setar, &self.model.nlar) {
            (Some(_), Some(_)) => Err(Error::Config(
                "model has two model blocks (setar and nlar); exactly one is allowed".into(),
            )),
            (None, None) => Err(Error::Config("model block is missing: give setar or nlar".into())),
            (None, Some(_)) => Err(Error::Config(
                "nlar models are not executable; write g as a setar block".into(),
            )),
            (Some(s), None) => make_setar(
                SetarParams::new(s.thresholds.clone(), s.intercepts.clone(), s.slopes.clone())?,
                s.noise,
            ),
        }
    }

    pub fn engine(&self) -> Result<Engine> {
        match (self.analysis.discretize, self.analysis.monte_carlo) {
            (Some(d), None) => {
                if !(d.half_width > 0.0 && d.half_width.is_finite()) || d.bins < 2 {
                    return Err(Error::Config("discretize needs half_width > 0 and bins >= 2".into()));
                }
                Ok(Engine::Exact(d))
            }
            (None, Some(m)) => Ok(Engine::MonteCarlo(m)),
            (Some(_), Some(_)) => Err(Error::Config(
                "analysis has two engine blocks (discretize and monte_carlo); exactly one is allowed".into(),
            )),
            (None, None) => Err(Error::Config(
                "analysis block is missing: give discretize or monte_carlo".into(),
            )),
        }
    }
}
