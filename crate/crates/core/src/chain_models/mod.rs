//! Scalar threshold autoregressions `X_t = g(X_{t-1}) + e_t`.

pub mod noise;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use noise::{check_moment_condition, MomentEstimate, MomentKind, NoiseFamily, NoiseKind, NoiseSpec};

/// Simulation aborts once a state leaves `[-OVERFLOW_GUARD, OVERFLOW_GUARD]`.
pub const OVERFLOW_GUARD: f64 = 1e12;
/// Half-width of the grid used for drift-decomposition and A1 checks.
pub const CHECK_GRID_HALF_WIDTH: f64 = 1e3;
pub const CHECK_GRID_STEP: f64 = 0.01;

/// Piecewise-affine map with `M` regimes: on `(r_{j-1}, r_j]` the map is
/// `intercepts[j] + slopes[j] x`, with `r_0 = -inf`, `r_M = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetarParams {
    pub thresholds: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl SetarParams {
    pub fn new(thresholds: Vec<f64>, intercepts: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        let p = SetarParams {
            thresholds,
            intercepts,
            slopes,
        };
        p.validate()?;
        Ok(p)
    }

    /// AR(1) `x -> intercept + slope x`.
    pub fn ar1(intercept: f64, slope: f64) -> Self {
        SetarParams {
            thresholds: vec![],
            intercepts: vec![intercept],
            slopes: vec![slope],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.intercepts.len();
        if m == 0 {
            return Err(Error::invalid("SETAR needs at least one regime"));
        }
        if self.slopes.len() != m {
            return Err(Error::invalid(format!(
                "{} intercepts but {} slopes",
                m,
                self.slopes.len()
            )));
        }
        if self.thresholds.len() != m - 1 {
            return Err(Error::invalid(format!(
                "{m} regimes need {} thresholds, got {}",
                m - 1,
                self.thresholds.len()
            )));
        }
        let all = self.thresholds.iter().chain(&self.intercepts).chain(&self.slopes);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("SETAR parameters must be finite"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("thresholds must be strictly increasing"));
        }
        Ok(())
    }

    pub fn regimes(&self) -> usize {
        self.intercepts.len()
    }

    /// Zero-based regime index of `x`.
    pub fn regime_of(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&r| r < x)
    }

    pub fn g(&self, x: f64) -> f64 {
        let j = self.regime_of(x);
        self.intercepts[j] + self.slopes[j] * x
    }
}

/// Ergodicity regimes of the SETAR model, by the outer-regime parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetarRegime {
    #[serde(rename = "7a")]
    A,
    #[serde(rename = "7b")]
    B,
    #[serde(rename = "7c")]
    C,
    #[serde(rename = "7d")]
    D,
    #[serde(rename = "7e")]
    E,
    #[serde(rename = "not_covered")]
    NotCovered,
}

impl fmt::Display for SetarRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetarRegime::A => "7a",
            SetarRegime::B => "7b",
            SetarRegime::C => "7c",
            SetarRegime::D => "7d",
            SetarRegime::E => "7e",
            SetarRegime::NotCovered => "not_covered",
        };
        f.write_str(s)
    }
}

/// First of the five ergodicity conditions that holds. Only the two outer
/// regimes enter; `M = 1` uses its single regime for both.
pub fn classify_setar_regime(p: &SetarParams) -> SetarRegime {
    let m = p.regimes();
    let (t1, tm) = (p.slopes[0], p.slopes[m - 1]);
    let (f1, fm) = (p.intercepts[0], p.intercepts[m - 1]);
    if t1 < 1.0 && tm < 1.0 && t1 * tm < 1.0 {
        SetarRegime::A
    } else if t1 == 1.0 && tm < 1.0 && 0.0 < f1 {
        SetarRegime::B
    } else if t1 < 1.0 && tm == 1.0 && fm < 0.0 {
        SetarRegime::C
    } else if t1 == 1.0 && tm == 1.0 && fm < 0.0 && 0.0 < f1 {
        SetarRegime::D
    } else if t1 < 0.0 && t1 * tm == 1.0 && fm + f1 * tm > 0.0 {
        SetarRegime::E
    } else {
        SetarRegime::NotCovered
    }
}

/// The map `g`, plus `g(x) - x` when that is bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarModel {
    pub setar: SetarParams,
    pub noise: NoiseSpec,
    /// Bound on `|g(x) - x|` when it is bounded, found on the check grid.
    pub drift_bound: Option<f64>,
}

/// `[-half, half]` in steps of `step`, plus each threshold and its
/// `1e-9` neighbours.
pub fn check_grid(p: &SetarParams, half: f64, step: f64) -> Vec<f64> {
    let k = (half / step).round() as i64;
    let mut grid: Vec<f64> = (-k..=k).map(|i| i as f64 * step).collect();
    for &r in &p.thresholds {
        grid.extend([r - 1e-9, r, r + 1e-9]);
    }
    grid
}

pub fn make_setar(params: SetarParams, noise: NoiseSpec) -> Result<ScalarModel> {
    params.validate()?;
    let m = params.regimes();
    let drift_bound = if params.slopes[0] == 1.0 && params.slopes[m - 1] == 1.0 {
        let grid = check_grid(&params, CHECK_GRID_HALF_WIDTH, CHECK_GRID_STEP);
        let sup = grid.iter().map(|&x| (params.g(x) - x).abs()).fold(0.0, f64::max);
        // Outer regimes contribute their intercepts exactly.
        Some(sup.max(params.intercepts[0].abs()).max(params.intercepts[m - 1].abs()))
    } else {
        None
    };
    Ok(ScalarModel {
        setar: params,
        noise,
        drift_bound,
    })
}

impl ScalarModel {
    pub fn g(&self, x: f64) -> f64 {
        self.setar.g(x)
    }

    pub fn regime(&self) -> SetarRegime {
        classify_setar_regime(&self.setar)
    }

    /// One transition from `x` with innovation `e`.
    pub fn step(&self, x: f64, e: f64) -> f64 {
        self.g(x) + e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Report {
    pub holds: bool,
    /// `min (|x| - r - |g(x)|)` over grid points with `|x| >= m0`.
    pub worst_margin: f64,
    pub worst_x: f64,
    /// `max |g(x)|` over grid points with `|x| <= m0`.
    pub sup_inner: f64,
    pub points_checked: usize,
    /// Always false: a grid check does not cover every real.
    pub certifying: bool,
}

/// A1 constants `(m0, r)` read off the outer regimes.
///
/// With unit outer slopes and `phi(M) < 0 < phi(1)` this is
/// `r = min(phi(1), -phi(M))` with `m0` just past the outermost threshold.
/// With contracting outer slopes, `r = 1` and `m0` large enough that
/// `|theta x + phi| <= |x| - 1`. `None` otherwise.
pub fn a1_constants(p: &SetarParams) -> Option<(f64, f64)> {
    let m = p.regimes();
    let (t1, tm) = (p.slopes[0], p.slopes[m - 1]);
    let (f1, fm) = (p.intercepts[0], p.intercepts[m - 1]);
    let outer = p.thresholds.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if t1 == 1.0 && tm == 1.0 && fm < 0.0 && 0.0 < f1 {
        return Some((outer + 1.0, f1.min(-fm)));
    }
    let theta = t1.abs().max(tm.abs());
    if theta < 1.0 {
        let phi = f1.abs().max(fm.abs());
        return Some(((outer + 1.0).max((1.0 + phi) / (1.0 - theta)), 1.0));
    }
    None
}

/// Grid check of `|g(x)| <= |x| - r` for `|x| >= m0`.
pub fn check_a1(model: &ScalarModel, m0: f64, r: f64, grid: &[f64]) -> Result<A1Report> {
    if !(m0 > 0.0 && r > 0.0) {
        return Err(Error::invalid("A1 check needs m0 > 0 and r > 0"));
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_x = f64::NAN;
    let mut sup_inner: f64 = 0.0;
    let mut holds = true;
    let mut outer = 0;
    for &x in grid {
        let gx = model.g(x).abs();
        if x.abs() >= m0 {
            outer += 1;
            let margin = x.abs() - r - gx;
            if margin < worst_margin {
                worst_margin = margin;
                worst_x = x;
            }
            if margin < -1e-12 * x.abs().max(1.0) {
                holds = false;
            }
        } else {
            sup_inner = sup_inner.max(gx);
        }
    }
    if outer == 0 {
        return Err(Error::invalid("grid has no points with |x| >= m0"));
    }
    Ok(A1Report {
        holds,
        worst_margin,
        worst_x,
        sup_inner,
        points_checked: grid.len(),
        certifying: false,
    })
}

/// `[x0, x1, ..., xn]` with `x_t = g(x_{t-1}) + e_t`.
pub fn simulate_path<R: Rng + ?Sized>(model: &ScalarModel, x0: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !x0.is_finite() || x0.abs() > OVERFLOW_GUARD {
        return Err(Error::Overflow { index: 0, value: x0 });
    }
    let mut path = Vec::with_capacity(n + 1);
    path.push(x0);
    let mut x = x0;
    for t in 1..=n {
        x = model.step(x, model.noise.sample(rng));
        if !x.is_finite() || x.abs() > OVERFLOW_GUARD {
            return Err(Error::Overflow { index: t, value: x });
        }
        path.push(x);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;

    #[test]
    fn a1_constants_follow_the_outer_regimes() {
        let p = SetarParams::new(vec![-1.0, 1.0], vec![2.0, 0.0, -0.5], vec![1.0, 3.0, 1.0]).unwrap();
        assert_eq!(a1_constants(&p), Some((2.0, 0.5)));
        let (m0, r) = a1_constants(&SetarParams::ar1(1.0, 0.5)).unwrap();
        assert_eq!(r, 1.0);
        let m = make_setar(SetarParams::ar1(1.0, 0.5), NoiseSpec::gaussian(1.0).unwrap()).unwrap();
        let grid = check_grid(&m.setar, CHECK_GRID_HALF_WIDTH, CHECK_GRID_STEP);
        assert!(check_a1(&m, m0, r, &grid).unwrap().holds);
        assert_eq!(a1_constants(&SetarParams::ar1(0.0, 1.0)), None);
    }

    fn setar_7d() -> SetarParams {
        SetarParams::new(vec![0.0], vec![1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn setar_map() {
        let m = make_setar(setar_7d(), NoiseSpec::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(m.g(-2.0), -1.0);
        assert_eq!(m.g(0.0), 1.0);
        assert_eq!(m.g(0.5), -0.5);
        assert_eq!(m.drift_bound, Some(1.0));

        let ar = make_setar(SetarParams::ar1(0.0, 0.5), NoiseSpec::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(ar.g(3.0), 1.5);
        assert_eq!(ar.drift_bound, None);
    }

    #[test]
    fn middle_regime_drift_bound_on_grid() {
        let p = SetarParams::new(vec![-1.0, 1.0], vec![1.0, 0.0, -1.0], vec![1.0, 2.0, 1.0]).unwrap();
        let m = make_setar(p.clone(), NoiseSpec::gaussian(1.0).unwrap()).unwrap();
        // Oracle: direct sup of |g(x) - x| over a fine independent grid.
        let sup = (-100_000..=100_000)
            .map(|i| i as f64 * 0.01)
            .map(|x| (p.g(x) - x).abs())
            .fold(0.0, f64::max);
        assert_eq!(m.drift_bound, Some(sup.max(1.0)));
        assert!(m.drift_bound.unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn rejects_bad_thresholds() {
        assert!(SetarParams::new(vec![1.0, 1.0], vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(SetarParams::new(vec![2.0, 1.0], vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(SetarParams::new(vec![], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(SetarParams::new(vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn classifier_examples() {
        let p = |f1: f64, fm: f64, t1: f64, tm: f64| SetarParams::new(vec![0.0], vec![f1, fm], vec![t1, tm]).unwrap();
        assert_eq!(classify_setar_regime(&p(0.0, 0.0, 0.5, 0.5)), SetarRegime::A);
        assert_eq!(classify_setar_regime(&p(1.0, 0.0, 1.0, 0.5)), SetarRegime::B);
        assert_eq!(classify_setar_regime(&p(0.0, -1.0, 0.5, 1.0)), SetarRegime::C);
        assert_eq!(classify_setar_regime(&p(1.0, -1.0, 1.0, 1.0)), SetarRegime::D);
        assert_eq!(classify_setar_regime(&p(1.0, 1.0, -2.0, -0.5)), SetarRegime::E);
        assert_eq!(classify_setar_regime(&p(-1.0, -1.0, 1.0, 1.0)), SetarRegime::NotCovered);
        assert_eq!(classify_setar_regime(&SetarParams::ar1(0.0, 0.5)), SetarRegime::A);
        assert_eq!(
            classify_setar_regime(&SetarParams::ar1(0.0, 1.0)),
            SetarRegime::NotCovered
        );
        assert_eq!(SetarRegime::D.to_string(), "7d");
        assert_eq!(serde_json::to_string(&SetarRegime::D).unwrap(), "\"7d\"");
    }

    #[test]
    fn a1_examples() {
        let n = NoiseSpec::gaussian(1.0).unwrap();
        let p = SetarParams::new(vec![-1.0, 1.0], vec![1.0, 0.3, -1.0], vec![1.0, -0.4, 1.0]).unwrap();
        let m = make_setar(p.clone(), n).unwrap();
        let grid = check_grid(&p, CHECK_GRID_HALF_WIDTH, CHECK_GRID_STEP);
        let rep = check_a1(&m, 2.0, 1.0, &grid).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(!rep.certifying);
        assert!(rep.worst_margin.abs() < 1e-9);

        let ar = make_setar(SetarParams::ar1(0.0, 0.5), n).unwrap();
        assert!(check_a1(&ar, 2.0, 1.0, &grid).unwrap().holds);

        let rw = make_setar(SetarParams::ar1(0.0, 1.0), n).unwrap();
        for r in [1e-3, 0.5, 1.0] {
            assert!(!check_a1(&rw, 2.0, r, &grid).unwrap().holds);
        }
        assert!(check_a1(&rw, 1e4, 1.0, &grid).is_err());
    }

    #[test]
    fn simulate_examples() {
        let mut rng = StreamSeed::new(3).stream("path", 0);
        let ar = make_setar(SetarParams::ar1(0.0, 0.5), NoiseSpec::gaussian(0.0).unwrap()).unwrap();
        assert_eq!(simulate_path(&ar, 8.0, 0, &mut rng).unwrap(), vec![8.0]);
        assert_eq!(simulate_path(&ar, 8.0, 3, &mut rng).unwrap(), vec![8.0, 4.0, 2.0, 1.0]);
    }

    #[test]
    fn simulate_reports_overflow() {
        let mut rng = StreamSeed::new(3).stream("path", 0);
        let boom = make_setar(SetarParams::ar1(0.0, 10.0), NoiseSpec::gaussian(1.0).unwrap()).unwrap();
        match simulate_path(&boom, 1.0, 100, &mut rng) {
            Err(Error::Overflow { index, .. }) => assert!(index > 5 && index < 20),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simulate_is_reproducible() {
        let m = make_setar(setar_7d(), NoiseSpec::gaussian(1.0).unwrap()).unwrap();
        let seed = StreamSeed::new(2024);
        let a = simulate_path(&m, 0.0, 50, &mut seed.stream("path", 7)).unwrap();
        let b = simulate_path(&m, 0.0, 50, &mut seed.stream("path", 7)).unwrap();
        assert_eq!(a, b);
    }
}
