//! Built-in experiments: the SETAR model with unit outer slopes and
//! intercepts `(1, -1)` under each of the three noise moment classes, with
//! the matching Lyapunov pair for each class.

use crate::chain_models::NoiseSpec;
use crate::drift_verifier::DriftFunction;
use crate::error::{Error, Result};
use crate::rate_calculus::{CanonicalRate, PhiParams};

use super::config::{
    AnalysisBlock, BetaTarget, ClassifyTarget, DiscretizeBlock, DriftTarget, ExperimentConfig, ModelBlock,
    RateChecksTarget, SetarBlock, Targets,
};

pub const PRESET_NAMES: [&str; 3] = ["setar_7d_gaussian", "setar_7d_weibull_k05", "setar_7d_student_s2"];
pub const DEFAULT_PRESET_SEED: u64 = 20_240_601;

const DRIFT_SAMPLES: usize = 100_000;

fn setar_7d(noise: NoiseSpec) -> ModelBlock {
    ModelBlock {
        setar: Some(SetarBlock {
            thresholds: vec![0.0],
            intercepts: vec![1.0, -1.0],
            slopes: vec![1.0, 1.0],
            noise,
        }),
        nlar: None,
    }
}

fn drift(v: DriftFunction, phi: Option<PhiParams>, beta: Option<f64>, k: f64) -> DriftTarget {
    DriftTarget {
        v,
        phi,
        beta,
        c_half_width: k,
        n_mc: DRIFT_SAMPLES,
        grid_inner: crate::drift_verifier::DEFAULT_INNER_POINTS,
        grid_outer: crate::drift_verifier::DEFAULT_OUTER_POINTS,
    }
}

/// The named preset with the given seed.
pub fn preset(name: &str, seed: u64) -> Result<ExperimentConfig> {
    let (noise, grid, n_max, drift_target, phi_check, product) = match name {
        // Exponential moments: V = exp(b1 |x|) with b1 = z0/10 for z0 = 1,
        // geometric drift.
        "setar_7d_gaussian" => (
            NoiseSpec::gaussian(1.0)?,
            DiscretizeBlock {
                half_width: 40.0,
                bins: 400,
            },
            200,
            drift(DriftFunction::ExpAbs { b1: 0.1 }, None, Some(0.05), 10.0),
            PhiParams::Linear { eta: 1.0 },
            CanonicalRate {
                d: 0.2,
                ..Default::default()
            },
        ),
        // Stretched-exponential moments of order 1/2: V = exp(b1 |x|^{1/2})
        // paired with phi(v) = c (v + v0) / ln(v + v0), alpha = 1/kappa - 1.
        "setar_7d_weibull_k05" => (
            NoiseSpec::weibull_tail(0.5, 1.0)?,
            DiscretizeBlock {
                half_width: 600.0,
                bins: 800,
            },
            250,
            drift(
                DriftFunction::ExpPow { b1: 0.05, kappa: 0.5 },
                Some(PhiParams::SubexpLog {
                    c: 5e-4,
                    v0: std::f64::consts::E * std::f64::consts::E,
                    alpha: 1.0,
                }),
                None,
                200.0,
            ),
            PhiParams::SubexpLog {
                c: 1.0,
                v0: std::f64::consts::E * std::f64::consts::E,
                alpha: 1.0,
            },
            CanonicalRate {
                c: 0.1,
                gamma: 0.5,
                ..Default::default()
            },
        ),
        // Second moment only: V = 1 + x^2 paired with phi(v) = c v^{1/2}.
        "setar_7d_student_s2" => (
            NoiseSpec::student_like(2.0, 1.0)?,
            DiscretizeBlock {
                half_width: 400.0,
                bins: 800,
            },
            250,
            drift(
                DriftFunction::PolyMoment { s0: 2.0 },
                Some(PhiParams::Polynomial { c: 0.05, alpha: 0.5 }),
                None,
                50.0,
            ),
            PhiParams::Polynomial { c: 1.0, alpha: 0.5 },
            CanonicalRate {
                beta: 0.5,
                ..Default::default()
            },
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}'; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let cfg = ExperimentConfig {
        name: Some(name.to_string()),
        seed,
        output_dir: None,
        model: setar_7d(noise),
        analysis: AnalysisBlock {
            discretize: Some(grid),
            monte_carlo: None,
        },
        targets: Targets {
            classify: Some(ClassifyTarget::default()),
            tv_profile: None,
            beta: Some(BetaTarget {
                n_max: Some(n_max),
                n_list: None,
                points: 30,
            }),
            drift: vec![drift_target],
            rate_checks: Some(RateChecksTarget {
                phi: phi_check,
                lambda0_n_max: crate::rate_calculus::LAMBDA0_N_MAX,
                pairs: 500,
            }),
            rate_product: vec![product],
        },
        fit: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in PRESET_NAMES {
            let cfg = preset(name, 7).unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_canonical_json().unwrap()).unwrap();
            assert_eq!(back, cfg);
        }
        assert!(preset("nope", 1).is_err());
    }
}
