//! Decay-class fitting of mixing series.
//!
//! Each candidate shape is fit to `ln value` by weighted least squares on a
//! common window:
//!
//! | class          | model                  |
//! |----------------|------------------------|
//! | Geometric      | `a - d n`              |
//! | Subexponential | `a - c n^gamma`        |
//! | Polynomial     | `a - beta ln n`        |
//! | Logarithmic    | `a - alpha ln ln n`    |
//!
//! Fitted constants are representative values only: rates are defined up to
//! bounded-ratio equivalence, so `c` or `d` depends on the representative.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::fmt_f64;
use crate::rate_calculus::{RateClass, RateFunction};
use crate::series::MixingSeries;

pub const MIN_POINTS: usize = 8;
/// Relative band in which a slower class wins a near tie.
pub const TIE_BAND: f64 = 0.02;
/// `gamma` estimates outside this band are treated as collapsing onto the
/// neighbouring class and the subexponential candidate is not admitted.
pub const GAMMA_ADMISSIBLE: (f64, f64) = (0.3, 0.8);
const GAMMA_GRID_STEP: f64 = 0.05;
const GOLDEN_TOL: f64 = 1e-10;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitClass {
    Geometric,
    Subexponential,
    Polynomial,
    Logarithmic,
    Inconclusive,
}

impl FitClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FitClass::Geometric => "geometric",
            FitClass::Subexponential => "subexponential",
            FitClass::Polynomial => "polynomial",
            FitClass::Logarithmic => "logarithmic",
            FitClass::Inconclusive => "inconclusive",
        }
    }

    pub fn rate_class(self) -> Option<RateClass> {
        match self {
            FitClass::Geometric => Some(RateClass::Geometric),
            FitClass::Subexponential => Some(RateClass::Subexponential),
            FitClass::Polynomial => Some(RateClass::Polynomial),
            FitClass::Logarithmic => Some(RateClass::Logarithmic),
            FitClass::Inconclusive => None,
        }
    }

    fn from_rate_class(c: RateClass) -> Self {
        match c {
            RateClass::Geometric => FitClass::Geometric,
            RateClass::Subexponential => FitClass::Subexponential,
            RateClass::Polynomial => FitClass::Polynomial,
            RateClass::Logarithmic => FitClass::Logarithmic,
        }
    }
}

impl std::fmt::Display for FitClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Point estimate with a symmetric 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    fn new(value: f64, se: f64) -> Self {
        let half = Z95 * se;
        Estimate {
            value,
            ci_low: value - half,
            ci_high: value + half,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum FitParams {
    Geometric { d: Estimate },
    Subexponential { c: Estimate, gamma: Estimate },
    Polynomial { beta: Estimate },
    Logarithmic { alpha: Estimate },
}

impl FitParams {
    /// The decay exponent that characterises the class: `d`, `gamma`, `beta`
    /// or `alpha`.
    pub fn exponent(&self) -> Estimate {
        match *self {
            FitParams::Geometric { d } => d,
            FitParams::Subexponential { gamma, .. } => gamma,
            FitParams::Polynomial { beta } => beta,
            FitParams::Logarithmic { alpha } => alpha,
        }
    }

    /// Rate function matching the fitted decay.
    pub fn rate(&self) -> RateFunction {
        match *self {
            FitParams::Geometric { d } => RateFunction::geometric(d.value),
            FitParams::Subexponential { c, gamma } => RateFunction::subexponential(c.value, gamma.value),
            FitParams::Polynomial { beta } => RateFunction::polynomial(beta.value),
            FitParams::Logarithmic { alpha } => RateFunction::logarithmic(alpha.value),
        }
    }
}

/// One candidate shape fit on the shared window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub class: RateClass,
    pub intercept: f64,
    pub params: FitParams,
    /// Weighted residual sum of squares.
    pub residual: f64,
    pub penalized: f64,
    pub n_params: usize,
    /// False when the decay parameters are not positive or `gamma` left the
    /// admissible band.
    pub admitted: bool,
}

/// Optional overrides of the fitting window and floor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    #[serde(default)]
    pub n_lo: Option<u64>,
    #[serde(default)]
    pub n_hi: Option<u64>,
    /// Replaces the series floor when set.
    #[serde(default)]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub class: FitClass,
    pub params: Option<FitParams>,
    pub window: (u64, u64),
    pub n_points: usize,
    pub candidates: Vec<CandidateFit>,
    pub floor_diagnostic: f64,
    pub note: Option<String>,
}

impl FitReport {
    pub fn candidate(&self, class: RateClass) -> Option<&CandidateFit> {
        self.candidates.iter().find(|c| c.class == class)
    }

    /// Per-class residual table: `class,residual,penalized,n_params,admitted`.
    pub fn write_residuals_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["class", "residual", "penalized", "n_params", "admitted"])?;
        for c in &self.candidates {
            out.write_record([
                FitClass::from_rate_class(c.class).as_str().to_string(),
                fmt_f64(c.residual),
                fmt_f64(c.penalized),
                c.n_params.to_string(),
                c.admitted.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<residual csv>", e))?;
        Ok(())
    }
}

struct Points {
    n: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

/// Points used for fitting: inside the window, with `n >= 2` so that
/// `ln ln n` is finite, stopping at the first value below
/// `max(3 stderr, floor)`.
fn usable_points(series: &MixingSeries, window: &FitWindow, floor: f64) -> (Points, Option<u64>) {
    let lo = window.n_lo.unwrap_or(2).max(2);
    let hi = window.n_hi.unwrap_or(u64::MAX);
    let mut pts = Points {
        n: vec![],
        y: vec![],
        w: vec![],
    };
    let mut cut = None;
    let all_se = series
        .entries
        .iter()
        .filter(|e| e.n >= lo && e.n <= hi)
        .all(|e| e.stderr > 0.0);
    for e in series.entries.iter().filter(|e| e.n >= lo && e.n <= hi) {
        let threshold = (3.0 * e.stderr).max(floor);
        if !(e.value > 0.0) || e.value <= threshold || !e.value.is_finite() {
            cut = Some(e.n);
            break;
        }
        pts.n.push(e.n as f64);
        pts.y.push(e.value.ln());
        // Delta method: sd(ln v) = stderr / v.
        pts.w.push(if all_se { (e.value / e.stderr).powi(2) } else { 1.0 });
    }
    (pts, cut)
}

/// Weighted fit of `y = a - b x`. Returns `(a, b, rss, se_b)`.
fn wls_line(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - mx).powi(2);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    let a = my - slope * mx;
    let rss: f64 = (0..x.len()).map(|i| w[i] * (y[i] - a - slope * x[i]).powi(2)).sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let se = (rss / dof / sxx).sqrt();
    (a, -slope, rss, se)
}

fn penalize(rss: f64, k: usize, n: usize) -> f64 {
    rss * (k as f64 / n as f64).exp()
}

fn fit_linear_shape(class: RateClass, pts: &Points, transform: impl Fn(f64) -> f64) -> CandidateFit {
    let x: Vec<f64> = pts.n.iter().map(|&n| transform(n)).collect();
    let (a, b, rss, se) = wls_line(&x, &pts.y, &pts.w);
    let est = Estimate::new(b, se);
    let params = match class {
        RateClass::Geometric => FitParams::Geometric { d: est },
        RateClass::Polynomial => FitParams::Polynomial { beta: est },
        RateClass::Logarithmic => FitParams::Logarithmic { alpha: est },
        RateClass::Subexponential => unreachable!("subexponential uses the profile fit"),
    };
    CandidateFit {
        class,
        intercept: a,
        params,
        residual: rss,
        penalized: penalize(rss, 2, pts.n.len()),
        n_params: 2,
        admitted: b > 0.0 && b.is_finite(),
    }
}

fn profile_rss(pts: &Points, gamma: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = pts.n.iter().map(|n| n.powf(gamma)).collect();
    let (a, c, rss, _) = wls_line(&x, &pts.y, &pts.w);
    (a, c, rss)
}

/// Solves the symmetric positive system `m x = e_j` for each `j` and
/// returns the diagonal of `m^{-1}`.
#[allow(clippy::needless_range_loop)]
fn inverse_diagonal(m: [[f64; 3]; 3]) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for j in 0..3 {
        let mut a = m;
        let mut b = [0.0; 3];
        b[j] = 1.0;
        for col in 0..3 {
            let piv = (col..3).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
            if a[piv][col].abs() < 1e-300 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..3 {
                let f = a[row][col] / a[col][col];
                for k in col..3 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = [0.0; 3];
        for row in (0..3).rev() {
            let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        out[j] = x[j];
    }
    Some(out)
}

fn fit_subexponential(pts: &Points) -> CandidateFit {
    // Profile over a coarse grid, then golden-section around the best node.
    let grid: Vec<f64> = (1..=19).map(|k| k as f64 * GAMMA_GRID_STEP).collect();
    let (mut best_i, mut best_rss) = (0, f64::INFINITY);
    for (i, &g) in grid.iter().enumerate() {
        let (_, _, rss) = profile_rss(pts, g);
        if rss < best_rss {
            best_rss = rss;
            best_i = i;
        }
    }
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = profile_rss(pts, x1).2;
    let mut f2 = profile_rss(pts, x2).2;
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = profile_rss(pts, x1).2;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = profile_rss(pts, x2).2;
        }
    }
    let mut gamma = 0.5 * (lo + hi);
    let mut fit = profile_rss(pts, gamma);
    if best_rss < fit.2 {
        gamma = grid[best_i];
        fit = profile_rss(pts, gamma);
    }
    let (a, c, rss) = fit;

    // Asymptotic covariance from the Jacobian of (a, c, gamma).
    let n_pts = pts.n.len();
    let mut jtj = [[0.0; 3]; 3];
    for i in 0..n_pts {
        let ng = pts.n[i].powf(gamma);
        let j = [1.0, -ng, -c * ng * pts.n[i].ln()];
        for r in 0..3 {
            for s in 0..3 {
                jtj[r][s] += pts.w[i] * j[r] * j[s];
            }
        }
    }
    let sigma2 = rss / (n_pts as f64 - 3.0).max(1.0);
    let (se_c, se_g) = match inverse_diagonal(jtj) {
        Some(d) => ((sigma2 * d[1]).max(0.0).sqrt(), (sigma2 * d[2]).max(0.0).sqrt()),
        None => (f64::INFINITY, f64::INFINITY),
    };
    let admitted = c > 0.0 && c.is_finite() && gamma >= GAMMA_ADMISSIBLE.0 && gamma <= GAMMA_ADMISSIBLE.1;
    CandidateFit {
        class: RateClass::Subexponential,
        intercept: a,
        params: FitParams::Subexponential {
            c: Estimate::new(c, se_c),
            gamma: Estimate::new(gamma, se_g),
        },
        residual: rss,
        penalized: penalize(rss, 3, n_pts),
        n_params: 3,
        admitted,
    }
}

/// Classifies the decay of `series` into the rate hierarchy.
pub fn fit_rate(series: &MixingSeries, window: Option<FitWindow>) -> Result<FitReport> {
    let window = window.unwrap_or_default();
    let floor = window.floor.unwrap_or(series.floor);
    if !(floor >= 0.0) {
        return Err(Error::invalid("fit floor must be >= 0"));
    }
    if let (Some(lo), Some(hi)) = (window.n_lo, window.n_hi) {
        if lo > hi {
            return Err(Error::invalid(format!("fit window n_lo={lo} exceeds n_hi={hi}")));
        }
    }
    let (pts, cut) = usable_points(series, &window, floor);
    let n_pts = pts.n.len();
    let span = (
        pts.n.first().map_or(0, |&n| n as u64),
        pts.n.last().map_or(0, |&n| n as u64),
    );
    let distinct = pts.n.windows(2).filter(|w| w[1] > w[0]).count() + 1;
    if n_pts < MIN_POINTS || distinct < MIN_POINTS {
        let why = match cut {
            Some(n) => format!("only {n_pts} usable points before n={n} fell below the floor {floor:e}"),
            None => format!("only {n_pts} usable points in the window"),
        };
        return Ok(FitReport {
            class: FitClass::Inconclusive,
            params: None,
            window: span,
            n_points: n_pts,
            candidates: vec![],
            floor_diagnostic: floor,
            note: Some(format!("{why}; at least {MIN_POINTS} are needed")),
        });
    }

    let candidates = vec![
        fit_linear_shape(RateClass::Geometric, &pts, |n| n),
        fit_subexponential(&pts),
        fit_linear_shape(RateClass::Polynomial, &pts, f64::ln),
        fit_linear_shape(RateClass::Logarithmic, &pts, |n| n.ln().ln()),
    ];
    let best = candidates
        .iter()
        .filter(|c| c.admitted)
        .map(|c| c.penalized)
        .fold(f64::INFINITY, f64::min);
    let chosen = candidates
        .iter()
        .filter(|c| c.admitted && c.penalized <= best * (1.0 + TIE_BAND) + f64::MIN_POSITIVE)
        .max_by_key(|c| c.class.speed_rank());
    let (class, params, note) = match chosen {
        Some(c) => (FitClass::from_rate_class(c.class), Some(c.params), None),
        None => (
            FitClass::Inconclusive,
            None,
            Some("no candidate shape has a positive decay parameter".to_string()),
        ),
    };
    Ok(FitReport {
        class,
        params,
        window: span,
        n_points: n_pts,
        candidates,
        floor_diagnostic: floor,
        note,
    })
}

/// Default relative drop of `r(n) value(n)` over the tail decade required
/// for the zero-limit verdict.
pub const DEFAULT_DECAY_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProductReport {
    pub ns: Vec<u64>,
    /// `ln(r(n) value(n))`, finite even when the product under- or overflows.
    pub ln_products: Vec<f64>,
    /// Least-squares slope of the log product against `ln n` over the tail
    /// decade.
    pub tail_slope: f64,
    /// Product at the end of the tail decade over the product at its start.
    pub tail_ratio: f64,
    /// Fraction of consecutive tail steps that decrease.
    pub decreasing_fraction: f64,
    pub decay_factor: f64,
    pub consistent_with_zero_limit: bool,
}

/// Checks whether `r(n) value(n)` trends to zero over the tail decade of the
/// series, i.e. the points with `n >= n_max / 10` and `value > 0`.
pub fn verify_rate_product(series: &MixingSeries, rate: &RateFunction, decay_factor: f64) -> Result<RateProductReport> {
    if !(decay_factor > 0.0 && decay_factor < 1.0) {
        return Err(Error::invalid("decay factor must lie in (0, 1)"));
    }
    let mut ns = vec![];
    let mut ln_products = vec![];
    for e in series
        .entries
        .iter()
        .filter(|e| e.value > 0.0 && e.value > series.floor)
    {
        ns.push(e.n);
        ln_products.push(rate.ln_eval(e.n as f64)? + e.value.ln());
    }
    let mut report = RateProductReport {
        ns,
        ln_products,
        tail_slope: f64::NAN,
        tail_ratio: f64::NAN,
        decreasing_fraction: f64::NAN,
        decay_factor,
        consistent_with_zero_limit: false,
    };
    let Some(&n_max) = report.ns.last() else {
        return Ok(report);
    };
    let start = report.ns.partition_point(|&n| n * 10 < n_max);
    let tail_n = &report.ns[start..];
    let tail = &report.ln_products[start..];
    if tail.len() < 2 {
        return Ok(report);
    }
    let x: Vec<f64> = tail_n.iter().map(|&n| (n as f64).ln()).collect();
    let w = vec![1.0; x.len()];
    let (_, neg_slope, _, _) = wls_line(&x, tail, &w);
    report.tail_slope = -neg_slope;
    let ln_ratio = tail[tail.len() - 1] - tail[0];
    report.tail_ratio = ln_ratio.exp();
    let steps = tail.len() - 1;
    report.decreasing_fraction = tail.windows(2).filter(|p| p[1] < p[0]).count() as f64 / steps as f64;
    report.consistent_with_zero_limit = ln_ratio <= decay_factor.ln() && report.tail_slope < 0.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Provenance, SeriesKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(ns: impl Iterator<Item = u64>, f: impl Fn(f64) -> f64) -> MixingSeries {
        let mut s = MixingSeries::new(SeriesKind::BetaStationary, Provenance::Exact);
        for n in ns {
            s.push(n, f(n as f64), 0.0);
        }
        s
    }

    fn noisy(s: &MixingSeries, sigma: f64, seed: u64) -> MixingSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Normal::new(0.0, sigma).unwrap();
        let mut out = s.clone();
        for e in &mut out.entries {
            e.value *= z.sample(&mut rng).exp();
        }
        out
    }

    #[test]
    fn geometric_recovered() {
        let s = series(1..=60, |n| 0.8f64.powf(n));
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Geometric);
        let d = r.params.unwrap().exponent().value;
        assert!((d / (1.0f64 / 0.8).ln() - 1.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn subexponential_recovered() {
        let s = series(1..=200, |n| (-0.7 * n.sqrt()).exp());
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Subexponential);
        let FitParams::Subexponential { c, gamma } = r.params.unwrap() else {
            panic!()
        };
        assert!((gamma.value - 0.5).abs() < 1e-6, "{gamma:?}");
        assert!((c.value - 0.7).abs() < 1e-5, "{c:?}");
    }

    #[test]
    fn polynomial_recovered() {
        let s = series(1..=200, |n| 1.0 / n);
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Polynomial);
        assert!((r.params.unwrap().exponent().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logarithmic_recovered() {
        let s = series(2..=400, |n| n.ln().powf(-1.5) * 0.9);
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Logarithmic, "{:#?}", r.candidates);
        assert!((r.params.unwrap().exponent().value - 1.5).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn two_state_beta_is_geometric_ln2() {
        let s = series(1..=40, |n| 0.5f64.powf(n + 1.0));
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Geometric);
        let d = r.params.unwrap().exponent().value;
        assert!((d / std::f64::consts::LN_2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn floor_caps_the_window() {
        let mut s = series(1..=80, |n| 0.7f64.powf(n).max(1e-9));
        s.floor = 2e-9;
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Geometric);
        assert!(r.window.1 <= 58, "{:?}", r.window);
        assert!((r.params.unwrap().exponent().value - (1.0f64 / 0.7).ln()).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_is_inconclusive() {
        let mut s = series(1..=30, |n| 0.1f64.powf(n));
        s.floor = 1e-6;
        let r = fit_rate(&s, None).unwrap();
        assert_eq!(r.class, FitClass::Inconclusive);
        assert!(r.note.unwrap().contains("usable points"));
    }

    #[test]
    fn stderr_excludes_noisy_points() {
        let mut s = series(1..=40, |n| 0.8f64.powf(n));
        for e in &mut s.entries {
            e.stderr = 1e-3;
        }
        let r = fit_rate(&s, None).unwrap();
        let cutoff = (3e-3f64).ln() / 0.8f64.ln();
        assert!((r.window.1 as f64) < cutoff);
    }

    #[test]
    fn selected_class_minimises_penalty_up_to_tie_band() {
        for seed in 0..20 {
            let s = noisy(&series(1..=120, |n| (-0.4 * n.powf(0.6)).exp()), 0.05, seed);
            let r = fit_rate(&s, None).unwrap();
            let chosen = r.candidate(r.class.rate_class().unwrap()).unwrap();
            let best = r
                .candidates
                .iter()
                .filter(|c| c.admitted)
                .map(|c| c.penalized)
                .fold(f64::INFINITY, f64::min);
            assert!(chosen.penalized <= best * (1.0 + TIE_BAND));
            assert!(r.params.unwrap().exponent().value > 0.0);
        }
    }

    #[test]
    fn rate_product_verdicts() {
        let beta = series(1..=40, |n| 0.5f64.powf(n + 1.0));
        let slow = verify_rate_product(&beta, &RateFunction::geometric(1.5f64.ln()), DEFAULT_DECAY_FACTOR).unwrap();
        assert!(slow.consistent_with_zero_limit);
        assert!((slow.ln_products[4] - (0.75f64.powi(5) / 2.0).ln()).abs() < 1e-12);
        let fast = verify_rate_product(&beta, &RateFunction::geometric(3f64.ln()), DEFAULT_DECAY_FACTOR).unwrap();
        assert!(!fast.consistent_with_zero_limit);
        assert!(fast.tail_slope > 0.0);

        let poly = series(1..=1000, |n| 1.0 / n);
        let r = verify_rate_product(&poly, &RateFunction::polynomial(0.5), DEFAULT_DECAY_FACTOR).unwrap();
        assert!(r.consistent_with_zero_limit);
        assert!((r.tail_slope + 0.5).abs() < 0.01);
    }

    #[test]
    fn residual_csv_has_one_row_per_class() {
        let r = fit_rate(&series(1..=60, |n| 0.8f64.powf(n)), None).unwrap();
        let mut buf = vec![];
        r.write_residuals_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("class,residual,penalized,n_params,admitted\ngeometric,"));
    }

    fn recovery_rate(clean: &MixingSeries, want: FitClass) -> f64 {
        let hits = (0..200u64)
            .filter(|&seed| fit_rate(&noisy(clean, 0.05, seed), None).unwrap().class == want)
            .count();
        hits as f64 / 200.0
    }

    #[test]
    fn noisy_generators_are_recovered() {
        let geo = recovery_rate(&series(1..=60, |n| 0.8f64.powf(n)), FitClass::Geometric);
        let sub = recovery_rate(&series(1..=200, |n| (-0.7 * n.sqrt()).exp()), FitClass::Subexponential);
        let poly = recovery_rate(&series(1..=200, |n| 1.0 / n), FitClass::Polynomial);
        assert!(geo >= 0.95 && sub >= 0.95 && poly >= 0.95, "{geo} {sub} {poly}");
    }
}
