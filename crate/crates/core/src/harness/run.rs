//! Executes an experiment config and writes its artifacts.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain_models::{
    a1_constants, check_a1, check_grid, A1Report, SetarRegime, CHECK_GRID_HALF_WIDTH, CHECK_GRID_STEP,
};
use crate::drift_verifier::{grid_with, verify_drift_g, verify_drift_subg, DriftReport};
use crate::error::{Error, Result};
use crate::finite_chain::{beta_stationary_series, discretize, tv_profile, FiniteChain, Initial};
use crate::monte_carlo::{estimate_beta_stationary_mc, estimate_tv_profile_mc, log_spaced_n, BinSpec, McStart};
use crate::rate_calculus::{
    check_submultiplicative, is_lambda0, r_phi_closed_form, CanonicalRate, Lambda0Report, PhiFunction, PhiParams,
    RateFunction, SubmultiplicativeReport, LAMBDA0_TOL,
};
use crate::rate_fit::{fit_rate, verify_rate_product, FitReport, RateProductReport, DEFAULT_DECAY_FACTOR};
use crate::rng::StreamSeed;
use crate::series::MixingSeries;

use super::config::{Engine, ExperimentConfig, DEFAULT_EXACT_N_MAX, DEFAULT_MC_N_MAX};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "MIXRATE_OUTPUT_DIR";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Takes precedence over the environment variable and the config.
    pub output_dir: Option<PathBuf>,
    /// Worker threads; machine parallelism when `None`.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Section {
    pub m0: f64,
    pub r: f64,
    pub report: A1Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub target: String,
    pub file: String,
    pub series: MixingSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub target: String,
    pub residuals_file: String,
    pub report: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub file: String,
    pub report: DriftReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProductEntry {
    pub rate: CanonicalRate,
    pub report: RateProductReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateChecks {
    pub phi: PhiParams,
    pub closed_form: Option<RateFunction>,
    pub lambda0: Lambda0Report,
    pub submultiplicative: SubmultiplicativeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: Option<String>,
    pub seed: u64,
    pub regime: SetarRegime,
    pub noise: String,
    pub a1: Option<A1Section>,
    pub series: Vec<SeriesSummary>,
    pub fits: Vec<FitEntry>,
    pub drift: Vec<DriftEntry>,
    pub rate_products: Vec<RateProductEntry>,
    pub rate_checks: Option<RateChecks>,
    pub assumptions: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn fit(&self, target: &str) -> Option<&FitReport> {
        self.fits.iter().find(|f| f.target == target).map(|f| &f.report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub versions: std::collections::BTreeMap<String, String>,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub artifacts: Vec<Artifact>,
    /// The full config, so the run can be repeated from the manifest.
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        m.config.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub report: Report,
    pub manifest: Manifest,
}

/// Output directory: explicit option, then environment, then config, then
/// `mixrate-out/<name>`.
pub fn resolve_output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(d) = &opts.output_dir {
        return d.clone();
    }
    if let Some(d) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(d);
    }
    if let Some(d) = &cfg.output_dir {
        return d.clone();
    }
    PathBuf::from("mixrate-out").join(cfg.name.as_deref().unwrap_or("run"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects artifact bytes in memory so the report can be assembled before
/// anything is written.
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: String, bytes: Vec<u8>) -> String {
        self.files.push((name.clone(), bytes));
        name
    }

    fn csv(&mut self, name: String, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        Ok(self.add(name, buf))
    }
}

/// Runs `cfg` on a dedicated pool and writes its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let threads = opts
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Error::invalid("threads must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();

    let mut artifacts = Artifacts { files: vec![] };
    let report = pool.install(|| execute(cfg, &mut artifacts))?;
    let report_bytes = serde_json::to_vec_pretty(&report)?;
    artifacts.add(REPORT_FILE.to_string(), report_bytes);

    let dir = resolve_output_dir(cfg, opts);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut listed = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        listed.push(Artifact {
            file: name.clone(),
            sha256: sha256_hex(bytes),
        });
    }
    let canonical = cfg.to_canonical_json()?;
    let mut versions = std::collections::BTreeMap::new();
    versions.insert("mixrate".to_string(), env!("CARGO_PKG_VERSION").to_string());
    versions.insert("report_schema".to_string(), "1".to_string());
    let manifest = Manifest {
        config_sha256: sha256_hex(canonical.as_bytes()),
        seed: cfg.seed,
        versions,
        threads,
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        artifacts: listed,
        config: cfg.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(RunOutcome {
        output_dir: dir,
        report,
        manifest,
    })
}

fn fit_series(
    cfg: &ExperimentConfig,
    target: &str,
    series: &MixingSeries,
    artifacts: &mut Artifacts,
) -> Result<FitEntry> {
    let report = fit_rate(series, cfg.fit)?;
    let residuals_file = artifacts.csv(format!("fit_{target}_residuals.csv"), |b| report.write_residuals_csv(b))?;
    Ok(FitEntry {
        target: target.to_string(),
        residuals_file,
        report,
    })
}

fn nearest_state(chain: &FiniteChain, x: f64) -> usize {
    let s = chain.states();
    let i = s.partition_point(|&y| y < x);
    if i == 0 {
        0
    } else if i == s.len() || (x - s[i - 1]) <= (s[i] - x) {
        i - 1
    } else {
        i
    }
}

fn execute(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Report> {
    let model = cfg.build_model()?;
    let seed = StreamSeed::new(cfg.seed);
    let t = &cfg.targets;
    let mut notes = Vec::new();
    let mut assumptions =
        vec!["noise density bounded away from zero on compacts (built-in families satisfy this)".to_string()];

    let a1 = match t.classify {
        Some(c) => {
            let derived = a1_constants(&model.setar);
            match (c.m0.or(derived.map(|d| d.0)), c.r.or(derived.map(|d| d.1))) {
                (Some(m0), Some(r)) => {
                    let grid = check_grid(&model.setar, CHECK_GRID_HALF_WIDTH.max(4.0 * m0), CHECK_GRID_STEP);
                    Some(A1Section {
                        m0,
                        r,
                        report: check_a1(&model, m0, r, &grid)?,
                    })
                }
                _ => {
                    notes
                        .push("A1 constants cannot be derived for this regime; give classify.m0 and classify.r".into());
                    None
                }
            }
        }
        None => None,
    };

    let mut series = Vec::new();
    let mut fits = Vec::new();
    let mut beta_series = None;
    match cfg.engine()? {
        Engine::Exact(d) => {
            let chain = discretize(&model, d.half_width, d.bins)?;
            if let Some(tv) = &t.tv_profile {
                let initial = match tv.start {
                    Some(x) => Initial::FromState(nearest_state(&chain, x)),
                    None => Initial::AveragePi,
                };
                let s = tv_profile(&chain, &initial, tv.n_max)?;
                let file = artifacts.csv("tv_profile.csv".into(), |b| s.write_csv(b))?;
                fits.push(fit_series(cfg, "tv_profile", &s, artifacts)?);
                series.push(SeriesSummary {
                    target: "tv_profile".into(),
                    file,
                    series: s,
                });
            }
            if let Some(b) = &t.beta {
                let s = beta_stationary_series(&chain, b.n_max.unwrap_or(DEFAULT_EXACT_N_MAX))?;
                beta_series = Some(s);
            }
        }
        Engine::MonteCarlo(m) => {
            let bins = BinSpec::Central { bins: m.bins };
            if let Some(tv) = &t.tv_profile {
                let n_list = log_spaced_n(tv.n_max, tv.points);
                let start = McStart::Point(tv.start.unwrap_or(0.0));
                let s = estimate_tv_profile_mc(
                    &model,
                    &start,
                    &n_list,
                    m.replicates,
                    &bins,
                    m.burn_in,
                    &seed.child("tv_profile", 0),
                )?;
                let file = artifacts.csv("tv_profile.csv".into(), |b| s.write_csv(b))?;
                fits.push(fit_series(cfg, "tv_profile", &s, artifacts)?);
                series.push(SeriesSummary {
                    target: "tv_profile".into(),
                    file,
                    series: s,
                });
            }
            if let Some(b) = &t.beta {
                let n_list = match &b.n_list {
                    Some(l) => l.clone(),
                    None => log_spaced_n(b.n_max.unwrap_or(DEFAULT_MC_N_MAX), b.points),
                };
                let s = estimate_beta_stationary_mc(
                    &model,
                    &n_list,
                    m.starts,
                    m.replicates,
                    &bins,
                    m.burn_in,
                    &seed.child("beta", 0),
                )?;
                beta_series = Some(s);
            }
        }
    }

    let mut rate_products = Vec::new();
    if let Some(s) = beta_series {
        let file = artifacts.csv("beta.csv".into(), |b| s.write_csv(b))?;
        fits.push(fit_series(cfg, "beta", &s, artifacts)?);
        for rate in &t.rate_product {
            let report = verify_rate_product(&s, &RateFunction::canonical(*rate), DEFAULT_DECAY_FACTOR)?;
            rate_products.push(RateProductEntry { rate: *rate, report });
        }
        series.push(SeriesSummary {
            target: "beta".into(),
            file,
            series: s,
        });
    }

    let mut drift = Vec::new();
    for (i, d) in t.drift.iter().enumerate() {
        let k = d.c_half_width;
        let grid = grid_with(k, d.grid_inner, d.grid_outer)?;
        let mut rng = seed.stream("drift", i as u64);
        let report = match (d.phi, d.beta) {
            (Some(p), _) => verify_drift_subg(&model, &d.v, &PhiFunction::new(p)?, [-k, k], &grid, d.n_mc, &mut rng)?,
            (None, Some(b)) => verify_drift_g(&model, &d.v, b, [-k, k], &grid, d.n_mc, &mut rng)?,
            (None, None) => unreachable!("validated"),
        };
        for a in &report.assumptions {
            if !assumptions.contains(a) {
                assumptions.push(a.clone());
            }
        }
        let file = artifacts.csv(format!("drift_{i}.csv"), |b| report.write_csv(b))?;
        drift.push(DriftEntry { file, report });
    }

    let rate_checks = match &t.rate_checks {
        Some(rc) => {
            let phi = PhiFunction::new(rc.phi)?;
            let rate = RateFunction::from_phi(phi);
            let mut rng = seed.stream("rate-pairs", 0);
            let pairs: Vec<(u64, u64)> = (0..rc.pairs)
                .map(|_| (rng.random_range(1..=1000u64), rng.random_range(1..=1000u64)))
                .collect();
            Some(RateChecks {
                phi: rc.phi,
                closed_form: r_phi_closed_form(&phi),
                lambda0: is_lambda0(&rate, rc.lambda0_n_max, LAMBDA0_TOL)?,
                submultiplicative: check_submultiplicative(&rate, &pairs)?,
            })
        }
        None => None,
    };

    Ok(Report {
        name: cfg.name.clone(),
        seed: cfg.seed,
        regime: model.regime(),
        noise: model.noise.describe(),
        a1,
        series,
        fits,
        drift,
        rate_products,
        rate_checks,
        assumptions,
        notes,
    })
}
