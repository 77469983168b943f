//! Monte Carlo checks of Foster-Lyapunov drift inequalities
//! `E[V(X_1) | X_0 = x] <= V(x) - phi(V(x)) + b 1_C(x)` on a state grid.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain_models::{NoiseFamily, NoiseSpec, ScalarModel};
use crate::error::{Error, Result};
use crate::numeric::fmt_f64;
use crate::rate_calculus::{PhiFunction, PhiParams};

pub const MIN_DRIFT_SAMPLES: usize = 1_000;
/// Log-spaced grid points per side outside `C`.
pub const DEFAULT_OUTER_POINTS: usize = 400;
/// Points covering `C` linearly.
pub const DEFAULT_INNER_POINTS: usize = 201;
/// Grid points fail only when `margin < -FAIL_SIGMAS * stderr`.
pub const FAIL_SIGMAS: f64 = 3.0;

pub const PETITE_ASSUMPTION: &str =
    "C is assumed petite: compact intervals are small sets when the noise density is bounded away from zero on compacts; not verified numerically";

/// Lyapunov function `V >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftFunction {
    /// `V(x) = exp(b1 |x|)`.
    ExpAbs { b1: f64 },
    /// `V(x) = exp(b1 |x|^kappa)`.
    ExpPow { b1: f64, kappa: f64 },
    /// `V(x) = 1 + |x|^s0`.
    PolyMoment { s0: f64 },
}

impl DriftFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DriftFunction::ExpAbs { b1 } => b1 > 0.0 && b1.is_finite(),
            DriftFunction::ExpPow { b1, kappa } => b1 > 0.0 && b1.is_finite() && kappa > 0.0 && kappa < 1.0,
            DriftFunction::PolyMoment { s0 } => s0 > 0.0 && s0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid drift function {self:?}")))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            DriftFunction::ExpAbs { b1 } => (b1 * a).exp(),
            DriftFunction::ExpPow { b1, kappa } => (b1 * a.powf(kappa)).exp(),
            DriftFunction::PolyMoment { s0 } => 1.0 + a.powf(s0),
        }
    }

    /// Whether `E V(y + e) < inf` for the given noise law, decided from its
    /// tail class.
    pub fn finite_under(&self, noise: &NoiseSpec) -> bool {
        if noise.is_degenerate() {
            return true;
        }
        match (*self, noise.family()) {
            (_, NoiseFamily::Gaussian) => true,
            (DriftFunction::PolyMoment { .. }, NoiseFamily::WeibullTail { .. }) => true,
            (DriftFunction::PolyMoment { s0 }, NoiseFamily::StudentLike { tail_index, .. }) => s0 < tail_index,
            (DriftFunction::ExpAbs { .. }, _) => false,
            (DriftFunction::ExpPow { b1, kappa }, NoiseFamily::WeibullTail { kappa: k }) => {
                kappa < k || (kappa == k && b1 < noise.scale().powf(-k))
            }
            (DriftFunction::ExpPow { .. }, NoiseFamily::StudentLike { .. }) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftExpectation {
    pub mean: f64,
    pub stderr: f64,
    /// The expectation is infinite (tail class) or overflowed in sampling.
    pub infinite: bool,
}

fn expectation_from_draws(model: &ScalarModel, v: &DriftFunction, x: f64, draws: &[f64]) -> DriftExpectation {
    if !v.finite_under(&model.noise) {
        return DriftExpectation {
            mean: f64::INFINITY,
            stderr: f64::INFINITY,
            infinite: true,
        };
    }
    let gx = model.g(x);
    let n = draws.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &e in draws {
        let val = v.eval(gx + e);
        sum += val;
        sum_sq += val * val;
    }
    let mean = sum / n;
    if !mean.is_finite() {
        return DriftExpectation {
            mean: f64::INFINITY,
            stderr: f64::INFINITY,
            infinite: true,
        };
    }
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    DriftExpectation {
        mean,
        stderr: (var / n).sqrt(),
        infinite: false,
    }
}

/// Monte Carlo mean of `V(g(x) + e)` over `n_mc` fresh draws.
pub fn estimate_drift_expectation<R: Rng + ?Sized>(
    model: &ScalarModel,
    v: &DriftFunction,
    x: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<DriftExpectation> {
    v.validate()?;
    if n_mc < MIN_DRIFT_SAMPLES {
        return Err(Error::invalid(format!("n_mc must be >= {MIN_DRIFT_SAMPLES}")));
    }
    let draws: Vec<f64> = (0..n_mc).map(|_| model.noise.sample(rng)).collect();
    Ok(expectation_from_draws(model, v, x, &draws))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftStatus {
    /// Every point outside `C` has a nonnegative margin.
    Holds,
    /// Some point outside `C` has `margin < -3 stderr`, or the expectation
    /// is infinite.
    Fails,
    /// No failing point, but some negative margins within Monte Carlo noise.
    Inconclusive,
}

/// Which drift-rate pairing a report corresponds to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRule {
    pub rule: String,
    /// Whether the `phi` parameters match the pairing.
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub lhs_stderr: Vec<f64>,
    pub rhs: Vec<f64>,
    pub margin: Vec<f64>,
    /// Small-set interval `[-K, K]` as `[lo, hi]`.
    #[serde(rename = "C")]
    pub c: [f64; 2],
    /// `max over C of (lhs - rhs)^+`.
    pub b: f64,
    pub holds: bool,
    pub status: DriftStatus,
    pub failing_points: usize,
    pub mc_samples: usize,
    pub infinite_expectation: bool,
    pub drift_function: DriftFunction,
    pub phi: PhiParams,
    pub pairing: Option<PairingRule>,
    pub assumptions: Vec<String>,
}

impl DriftReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["x", "lhs", "stderr", "rhs", "margin"])?;
        for i in 0..self.grid.len() {
            out.write_record([
                fmt_f64(self.grid[i]),
                fmt_f64(self.lhs[i]),
                fmt_f64(self.lhs_stderr[i]),
                fmt_f64(self.rhs[i]),
                fmt_f64(self.margin[i]),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<drift csv>", e))?;
        Ok(())
    }

    /// Whether `x` lies in `C`.
    pub fn in_c(&self, x: f64) -> bool {
        x >= self.c[0] && x <= self.c[1]
    }
}

/// `DEFAULT_INNER_POINTS` evenly across `[-k, k]` and `DEFAULT_OUTER_POINTS`
/// log-spaced points on each side out to `10 k`.
pub fn default_grid(k: f64) -> Result<Vec<f64>> {
    grid_with(k, DEFAULT_INNER_POINTS, DEFAULT_OUTER_POINTS)
}

pub fn grid_with(k: f64, inner: usize, outer: usize) -> Result<Vec<f64>> {
    if !(k > 0.0 && k.is_finite()) || inner < 2 || outer < 1 {
        return Err(Error::invalid("drift grid needs K > 0, inner >= 2, outer >= 1"));
    }
    let mut pos = Vec::with_capacity(outer);
    for i in 1..=outer {
        pos.push(k * 10f64.powf(i as f64 / outer as f64));
    }
    let mut grid: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    grid.extend((0..inner).map(|i| -k + 2.0 * k * i as f64 / (inner - 1) as f64));
    grid.extend(pos);
    Ok(grid)
}

fn pairing_for(v: &DriftFunction, phi: &PhiFunction) -> Option<PairingRule> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    match (*v, phi.params()) {
        (DriftFunction::ExpAbs { .. }, PhiParams::Linear { .. }) => Some(PairingRule {
            rule: "ExpAbs(b1) with linear phi: geometric drift".into(),
            matches: true,
        }),
        (DriftFunction::ExpPow { kappa, .. }, PhiParams::SubexpLog { alpha, .. }) => Some(PairingRule {
            rule: "ExpPow(b1, kappa0) with SubexpLog phi, alpha = 1/kappa0 - 1".into(),
            matches: close(alpha, 1.0 / kappa - 1.0),
        }),
        (DriftFunction::PolyMoment { s0 }, PhiParams::Polynomial { alpha, .. }) => Some(PairingRule {
            rule: "PolyMoment(s0) with Polynomial phi, alpha = 1 - 1/s0".into(),
            matches: close(alpha, 1.0 - 1.0 / s0),
        }),
        _ => None,
    }
}

/// Check `E[V(X_1)|x] <= (1 - beta) V(x)` outside `C`.
pub fn verify_drift_g<R: Rng + ?Sized>(
    model: &ScalarModel,
    v: &DriftFunction,
    beta: f64,
    c: [f64; 2],
    grid: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<DriftReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta out of (0,1)"));
    }
    let phi = PhiFunction::new(PhiParams::Linear { eta: beta })?;
    verify(model, v, &phi, c, grid, n_mc, rng)
}

/// Check `E[V(X_1)|x] <= V(x) - phi(V(x))` outside `C`.
pub fn verify_drift_subg<R: Rng + ?Sized>(
    model: &ScalarModel,
    v: &DriftFunction,
    phi: &PhiFunction,
    c: [f64; 2],
    grid: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<DriftReport> {
    verify(model, v, phi, c, grid, n_mc, rng)
}

fn rhs_for(phi: &PhiFunction, v: f64) -> f64 {
    match phi.params() {
        PhiParams::Linear { eta } => (1.0 - eta) * v,
        _ => v - phi.eval(v),
    }
}

fn verify<R: Rng + ?Sized>(
    model: &ScalarModel,
    v: &DriftFunction,
    phi: &PhiFunction,
    c: [f64; 2],
    grid: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<DriftReport> {
    v.validate()?;
    if n_mc < MIN_DRIFT_SAMPLES {
        return Err(Error::invalid(format!("n_mc must be >= {MIN_DRIFT_SAMPLES}")));
    }
    if !(c[0] <= c[1]) {
        return Err(Error::invalid("C must be an interval [lo, hi] with lo <= hi"));
    }
    if !(grid.iter().any(|&x| x < c[0]) && grid.iter().any(|&x| x > c[1])) {
        return Err(Error::invalid("grid must extend beyond C on both sides"));
    }
    // Common random numbers: one draw vector serves every grid point.
    let draws: Vec<f64> = (0..n_mc).map(|_| model.noise.sample(rng)).collect();
    let est: Vec<DriftExpectation> = grid
        .par_iter()
        .map(|&x| expectation_from_draws(model, v, x, &draws))
        .collect();

    let mut lhs = Vec::with_capacity(grid.len());
    let mut lhs_stderr = Vec::with_capacity(grid.len());
    let mut rhs = Vec::with_capacity(grid.len());
    let mut margin = Vec::with_capacity(grid.len());
    let mut b: f64 = 0.0;
    let mut failing = 0;
    let mut negative = 0;
    let mut infinite = false;
    for (i, &x) in grid.iter().enumerate() {
        let e = est[i];
        let r = rhs_for(phi, v.eval(x));
        let m = r - e.mean;
        infinite |= e.infinite;
        if x >= c[0] && x <= c[1] {
            b = b.max(-m);
        } else if e.infinite || m < -FAIL_SIGMAS * e.stderr {
            failing += 1;
        } else if m < 0.0 {
            negative += 1;
        }
        lhs.push(e.mean);
        lhs_stderr.push(e.stderr);
        rhs.push(r);
        margin.push(m);
    }
    let status = if failing > 0 || infinite {
        DriftStatus::Fails
    } else if negative > 0 {
        DriftStatus::Inconclusive
    } else {
        DriftStatus::Holds
    };
    let mut assumptions = vec![PETITE_ASSUMPTION.to_string()];
    if !model.noise.density_positive_on_compacts() {
        assumptions.push("noise is degenerate: the chain is deterministic and C need not be petite".into());
    }
    assumptions.push("grid check only: the inequality is not certified between grid points".into());
    Ok(DriftReport {
        grid: grid.to_vec(),
        lhs,
        lhs_stderr,
        rhs,
        margin,
        c,
        b,
        holds: status != DriftStatus::Fails,
        status,
        failing_points: failing,
        mc_samples: n_mc,
        infinite_expectation: infinite,
        drift_function: *v,
        phi: phi.params(),
        pairing: pairing_for(v, phi),
        assumptions,
    })
}
