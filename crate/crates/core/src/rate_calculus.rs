//! Rate-function calculus for drift conditions of the form
//! `E[V(X_1) | X_0 = x] <= V(x) - phi(V(x)) + b 1_C(x)`.
//!
//! A concave drift rate `phi` determines `H_phi(v) = int_1^v dx / phi(x)` and
//! the convergence rate `r_phi(z) = phi(H_phi^{-1}(z))`. This module evaluates
//! both numerically, maps the standard `phi` families onto the canonical rate
//! classes, and provides the finite-horizon checks (Lambda_0 membership,
//! submultiplicativity, halving ratio) used to reason about rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, newton_bisect};

/// Default absolute tolerance for `H_phi` quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// Default tolerance on `|H_phi(v) - z|` for the inverse.
pub const INV_TOL: f64 = 1e-9;
/// Default Lambda_0 horizon.
pub const LAMBDA0_N_MAX: u64 = 100_000;
/// Default Lambda_0 tail threshold.
pub const LAMBDA0_TOL: f64 = 1e-3;
/// Tail log-log slope below which `ln r(n)/n` counts as still decaying.
pub const LAMBDA0_SLOPE: f64 = -0.1;

// ln(f64::MAX); H^{-1} cannot be represented beyond this.
const LN_MAX: f64 = 709.78;
const BISECT_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiFamily {
    Linear,
    Polynomial,
    SubexpLog,
    Logarithmic,
}

impl PhiFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "linear" => Ok(Self::Linear),
            "polynomial" => Ok(Self::Polynomial),
            "subexp_log" | "subexplog" | "subexponential" => Ok(Self::SubexpLog),
            "logarithmic" | "log" => Ok(Self::Logarithmic),
            other => Err(Error::invalid(format!("unknown phi family '{other}'"))),
        }
    }
}

/// Parameters of a drift-rate function `phi : [1, inf) -> (0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiParams {
    /// `phi(v) = eta v`.
    Linear { eta: f64 },
    /// `phi(v) = c v^alpha`.
    Polynomial { c: f64, alpha: f64 },
    /// `phi(v) = c (v + v0) / ln(v + v0)^alpha`.
    SubexpLog { c: f64, v0: f64, alpha: f64 },
    /// `phi(v) = c (1 + ln v)^alpha`.
    Logarithmic { c: f64, alpha: f64 },
}

/// A validated concave drift-rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiParams", into = "PhiParams")]
pub struct PhiFunction {
    params: PhiParams,
}

impl TryFrom<PhiParams> for PhiFunction {
    type Error = Error;
    fn try_from(p: PhiParams) -> Result<Self> {
        PhiFunction::new(p)
    }
}

impl From<PhiFunction> for PhiParams {
    fn from(phi: PhiFunction) -> Self {
        phi.params
    }
}

/// Build a `PhiFunction` from a family tag and a positional parameter tuple:
/// Linear `(eta)`, Polynomial `(c, alpha)`, SubexpLog `(c, v0, alpha)`,
/// Logarithmic `(c, alpha)`.
pub fn make_phi(family: PhiFamily, params: &[f64]) -> Result<PhiFunction> {
    let want = match family {
        PhiFamily::Linear => 1,
        PhiFamily::Polynomial | PhiFamily::Logarithmic => 2,
        PhiFamily::SubexpLog => 3,
    };
    if params.len() != want {
        return Err(Error::invalid(format!(
            "{family:?} takes {want} parameters, got {}",
            params.len()
        )));
    }
    let p = match family {
        PhiFamily::Linear => PhiParams::Linear { eta: params[0] },
        PhiFamily::Polynomial => PhiParams::Polynomial {
            c: params[0],
            alpha: params[1],
        },
        PhiFamily::SubexpLog => PhiParams::SubexpLog {
            c: params[0],
            v0: params[1],
            alpha: params[2],
        },
        PhiFamily::Logarithmic => PhiParams::Logarithmic {
            c: params[0],
            alpha: params[1],
        },
    };
    PhiFunction::new(p)
}

impl PhiFunction {
    pub fn new(params: PhiParams) -> Result<Self> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite")))
            }
        };
        match params {
            PhiParams::Linear { eta } => {
                finite("eta", eta)?;
                if eta <= 0.0 {
                    return Err(Error::invalid("eta must be > 0"));
                }
            }
            PhiParams::Polynomial { c, alpha } => {
                finite("c", c)?;
                finite("alpha", alpha)?;
                if !(c > 0.0 && c <= 1.0) {
                    return Err(Error::invalid("c out of (0,1]"));
                }
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::invalid("alpha out of (0,1)"));
                }
            }
            PhiParams::SubexpLog { c, v0, alpha } => {
                finite("c", c)?;
                finite("v0", v0)?;
                finite("alpha", alpha)?;
                if c <= 0.0 {
                    return Err(Error::invalid("c must be > 0"));
                }
                if v0 <= 0.0 {
                    return Err(Error::invalid("v0 must be > 0"));
                }
                if alpha <= 0.0 {
                    return Err(Error::invalid("alpha must be > 0"));
                }
            }
            PhiParams::Logarithmic { c, alpha } => {
                finite("c", c)?;
                finite("alpha", alpha)?;
                if !(c > 0.0 && c <= 1.0) {
                    return Err(Error::invalid("c out of (0,1]"));
                }
                if alpha <= 0.0 {
                    return Err(Error::invalid("alpha must be > 0"));
                }
            }
        }
        let phi = PhiFunction { params };
        phi.check_shape_on_grid()?;
        Ok(phi)
    }

    fn check_shape_on_grid(&self) -> Result<()> {
        let mut prev_v = 1.0;
        let mut prev_phi = self.eval(1.0);
        let mut prev_d = self.derivative(1.0);
        if !(prev_phi > 0.0) {
            return Err(Error::invalid("phi(1) must be positive"));
        }
        let mut v = 1.0;
        while v < 1e12 {
            v *= 1.05;
            let p = self.eval(v);
            let d = self.derivative(v);
            if !(p > 0.0) || p < prev_phi {
                return Err(Error::invalid(format!(
                    "phi not increasing on [1,inf): phi({v:.4e}) < phi({prev_v:.4e})"
                )));
            }
            if d > prev_d * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::invalid(format!(
                    "phi not concave on [1,inf): phi' increases between {prev_v:.4e} and {v:.4e}"
                )));
            }
            prev_v = v;
            prev_phi = p;
            prev_d = d;
        }
        Ok(())
    }

    pub fn params(&self) -> PhiParams {
        self.params
    }

    pub fn family(&self) -> PhiFamily {
        match self.params {
            PhiParams::Linear { .. } => PhiFamily::Linear,
            PhiParams::Polynomial { .. } => PhiFamily::Polynomial,
            PhiParams::SubexpLog { .. } => PhiFamily::SubexpLog,
            PhiParams::Logarithmic { .. } => PhiFamily::Logarithmic,
        }
    }

    /// Linear `phi` reduces the drift condition to the geometric one.
    pub fn geometric_regime(&self) -> bool {
        matches!(self.params, PhiParams::Linear { .. })
    }

    pub fn eval(&self, v: f64) -> f64 {
        match self.params {
            PhiParams::Linear { eta } => eta * v,
            PhiParams::Polynomial { c, alpha } => c * v.powf(alpha),
            PhiParams::SubexpLog { c, v0, alpha } => {
                let w = v + v0;
                c * w / w.ln().powf(alpha)
            }
            PhiParams::Logarithmic { c, alpha } => c * (1.0 + v.ln()).powf(alpha),
        }
    }

    /// Analytic `phi'(v)`.
    pub fn derivative(&self, v: f64) -> f64 {
        match self.params {
            PhiParams::Linear { eta } => eta,
            PhiParams::Polynomial { c, alpha } => c * alpha * v.powf(alpha - 1.0),
            PhiParams::SubexpLog { c, v0, alpha } => {
                let l = (v + v0).ln();
                c * l.powf(-alpha) * (1.0 - alpha / l)
            }
            PhiParams::Logarithmic { c, alpha } => c * alpha * (1.0 + v.ln()).powf(alpha - 1.0) / v,
        }
    }

    /// `H_phi(v) = int_1^v dx / phi(x)`, by closed form where the family has
    /// one and adaptive quadrature otherwise.
    pub fn h(&self, v: f64) -> Result<f64> {
        check_v(v)?;
        match self.params {
            PhiParams::Linear { eta } => Ok(v.ln() / eta),
            PhiParams::Polynomial { c, alpha } => Ok((v.powf(1.0 - alpha) - 1.0) / (c * (1.0 - alpha))),
            PhiParams::SubexpLog { c, v0, alpha } => {
                let a1 = alpha + 1.0;
                Ok(((v + v0).ln().powf(a1) - (1.0 + v0).ln().powf(a1)) / (c * a1))
            }
            PhiParams::Logarithmic { .. } => self.h_quadrature(v, QUAD_TOL),
        }
    }

    /// `H_phi(v)` by adaptive Simpson regardless of family, integrating
    /// `e^t / phi(e^t)` over `t in [0, ln v]`.
    pub fn h_quadrature(&self, v: f64, tol: f64) -> Result<f64> {
        check_v(v)?;
        self.integral_log_space(0.0, v.ln(), tol)
    }

    fn integral_log_space(&self, t0: f64, t1: f64, tol: f64) -> Result<f64> {
        adaptive_simpson(|t| t.exp() / self.eval(t.exp()), t0, t1, tol)
    }

    /// `H_phi^{-1}(z)`, the `v >= 1` with `H_phi(v) = z`.
    pub fn h_inv(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        let v = match self.params {
            PhiParams::Linear { eta } => (eta * z).exp(),
            PhiParams::Polynomial { c, alpha } => (1.0 + c * (1.0 - alpha) * z).powf(1.0 / (1.0 - alpha)),
            PhiParams::SubexpLog { c, v0, alpha } => {
                let a1 = alpha + 1.0;
                let inner = c * a1 * z + (1.0 + v0).ln().powf(a1);
                inner.powf(1.0 / a1).exp() - v0
            }
            PhiParams::Logarithmic { .. } => return self.h_inv_numeric(z),
        };
        if v.is_finite() {
            Ok(v.max(1.0))
        } else {
            Err(Error::RateHorizonExceeded { z })
        }
    }

    /// `H_phi^{-1}(z)` by bracket growth in `t = ln v` followed by safeguarded
    /// Newton (using `dH/dt = e^t / phi(e^t)`), for any family.
    pub fn h_inv_numeric(&self, z: f64) -> Result<f64> {
        check_z(z)?;
        if z == 0.0 {
            return Ok(1.0);
        }
        let piece_tol = 1e-13;
        let mut t_lo: f64 = 0.0;
        let mut h_lo = 0.0;
        let mut step: f64 = 0.5;
        let (t_hi, h_hi) = loop {
            let t_next = (t_lo + step).min(LN_MAX);
            let h_next = h_lo + self.integral_log_space(t_lo, t_next, piece_tol)?;
            if h_next >= z {
                break (t_next, h_next);
            }
            if t_next >= LN_MAX {
                return Err(Error::RateHorizonExceeded { z });
            }
            t_lo = t_next;
            h_lo = h_next;
            step = (step * 2.0).min(8.0);
        };
        if h_hi == z {
            return Ok(t_hi.exp());
        }
        let ftol = (INV_TOL * 1e-3).max(1e-15 * z);
        let t = newton_bisect(
            |t| Ok(h_lo + self.integral_log_space(t_lo, t, piece_tol)? - z),
            |t| t.exp() / self.eval(t.exp()),
            t_lo,
            t_hi,
            ftol,
            BISECT_ITERS,
        )?;
        Ok(t.exp())
    }

    /// `r_phi(z) = phi(H_phi^{-1}(z))`.
    pub fn r(&self, z: f64) -> Result<f64> {
        Ok(self.eval(self.h_inv(z)?))
    }

    /// `ln r_phi(z)`.
    pub fn ln_r(&self, z: f64) -> Result<f64> {
        match self.params {
            // Stays finite long after r itself overflows.
            PhiParams::Linear { eta } => {
                check_z(z)?;
                Ok(eta.ln() + eta * z)
            }
            PhiParams::Polynomial { c, alpha } => {
                check_z(z)?;
                Ok(c.ln() + alpha / (1.0 - alpha) * (c * (1.0 - alpha) * z).ln_1p())
            }
            // With s = ln(H^{-1}(z) + v0) in closed form, ln r = ln c + s - alpha ln s.
            PhiParams::SubexpLog { c, v0, alpha } => {
                check_z(z)?;
                let a1 = alpha + 1.0;
                let s = (c * a1 * z + (1.0 + v0).ln().powf(a1)).powf(1.0 / a1);
                Ok(c.ln() + s - alpha * s.ln())
            }
            PhiParams::Logarithmic { .. } => Ok(self.r(z)?.ln()),
        }
    }
}

fn check_v(v: f64) -> Result<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("H_phi needs v >= 1, got {v}")))
    }
}

fn check_z(z: f64) -> Result<()> {
    if z >= 0.0 && !z.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("H_phi^-1 needs z >= 0, got {z}")))
    }
}

/// `ln(r_phi(n)) / n^gamma` averaged over the last decade of `[1, n_max]`,
/// the plateau used as the representative subexponential constant.
fn subexp_plateau(phi: &PhiFunction, gamma: f64, n_max: f64) -> Result<f64> {
    let lo = n_max / 10.0;
    let k = 32;
    let mut acc = 0.0;
    for i in 0..k {
        let n = lo * (n_max / lo).powf(i as f64 / (k - 1) as f64);
        acc += phi.ln_r(n)? / n.powf(gamma);
    }
    Ok(acc / k as f64)
}

/// Canonical rate class of `r_phi` for the standard `phi` families.
///
/// SubexpLog carries a numerically estimated constant: the plateau of
/// `ln r_phi(n) / n^{1/(1+alpha)}` over `n in [1e5, 1e6]`.
pub fn r_phi_closed_form(phi: &PhiFunction) -> Option<RateFunction> {
    match phi.params() {
        PhiParams::Linear { eta } => Some(RateFunction::geometric(eta)),
        PhiParams::Polynomial { alpha, .. } => Some(RateFunction::polynomial(alpha / (1.0 - alpha))),
        PhiParams::SubexpLog { alpha, .. } => {
            let gamma = 1.0 / (1.0 + alpha);
            let c = subexp_plateau(phi, gamma, 1e6).ok()?;
            Some(RateFunction::subexponential(c, gamma))
        }
        PhiParams::Logarithmic { alpha, .. } => Some(RateFunction::logarithmic(alpha)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateClass {
    Geometric,
    Subexponential,
    Polynomial,
    Logarithmic,
}

impl RateClass {
    /// Position in the fastest-to-slowest hierarchy.
    pub fn speed_rank(self) -> u8 {
        match self {
            RateClass::Geometric => 0,
            RateClass::Subexponential => 1,
            RateClass::Polynomial => 2,
            RateClass::Logarithmic => 3,
        }
    }

    pub fn is_subgeometric(self) -> bool {
        self != RateClass::Geometric
    }
}

/// Parameters of `r0(n) = (1 + ln n)^alpha (1 + n)^beta e^{c n^gamma} e^{d n}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalRate {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub d: f64,
}

impl CanonicalRate {
    pub fn ln_eval(&self, n: f64) -> f64 {
        let mut acc = 0.0;
        if self.alpha != 0.0 {
            acc += self.alpha * (1.0 + n.max(1.0).ln()).ln();
        }
        if self.beta != 0.0 {
            acc += self.beta * (1.0 + n).ln();
        }
        if self.c != 0.0 {
            acc += self.c * n.powf(self.gamma);
        }
        if self.d != 0.0 {
            acc += self.d * n;
        }
        acc
    }

    /// Class of the dominant factor.
    pub fn class(&self) -> RateClass {
        if self.d > 0.0 {
            RateClass::Geometric
        } else if self.c > 0.0 && self.gamma > 0.0 {
            RateClass::Subexponential
        } else if self.beta > 0.0 {
            RateClass::Polynomial
        } else {
            RateClass::Logarithmic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateForm {
    Canonical(CanonicalRate),
    /// `r_phi` evaluated numerically.
    Phi(PhiFunction),
}

/// An evaluable rate `n -> r(n)` with its class tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub class: RateClass,
    pub form: RateForm,
}

/// A rate value, saturated at `f64::MAX` when it overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateValue {
    pub value: f64,
    pub saturated: bool,
}

impl RateFunction {
    pub fn canonical(params: CanonicalRate) -> Self {
        RateFunction {
            class: params.class(),
            form: RateForm::Canonical(params),
        }
    }

    /// `r(n) = e^{d n}`.
    pub fn geometric(d: f64) -> Self {
        Self::canonical(CanonicalRate {
            d,
            ..Default::default()
        })
    }

    /// `r(n) = e^{c n^gamma}`.
    pub fn subexponential(c: f64, gamma: f64) -> Self {
        Self::canonical(CanonicalRate {
            c,
            gamma,
            ..Default::default()
        })
    }

    /// `r(n) = (1 + n)^beta`.
    pub fn polynomial(beta: f64) -> Self {
        Self::canonical(CanonicalRate {
            beta,
            ..Default::default()
        })
    }

    /// `r(n) = (1 + ln n)^alpha`.
    pub fn logarithmic(alpha: f64) -> Self {
        Self::canonical(CanonicalRate {
            alpha,
            ..Default::default()
        })
    }

    /// `r_phi` itself, classed by its `phi` family.
    pub fn from_phi(phi: PhiFunction) -> Self {
        let class = match phi.family() {
            PhiFamily::Linear => RateClass::Geometric,
            PhiFamily::Polynomial => RateClass::Polynomial,
            PhiFamily::SubexpLog => RateClass::Subexponential,
            PhiFamily::Logarithmic => RateClass::Logarithmic,
        };
        RateFunction {
            class,
            form: RateForm::Phi(phi),
        }
    }

    pub fn ln_eval(&self, n: f64) -> Result<f64> {
        match &self.form {
            RateForm::Canonical(p) => Ok(p.ln_eval(n)),
            RateForm::Phi(phi) => phi.ln_r(n),
        }
    }

    pub fn eval(&self, n: f64) -> Result<RateValue> {
        Ok(saturating_exp(self.ln_eval(n)?))
    }

    pub fn canonical_params(&self) -> Option<CanonicalRate> {
        match self.form {
            RateForm::Canonical(p) => Some(p),
            RateForm::Phi(_) => None,
        }
    }
}

pub(crate) fn saturating_exp(x: f64) -> RateValue {
    let v = x.exp();
    if v.is_finite() {
        RateValue {
            value: v,
            saturated: false,
        }
    } else {
        RateValue {
            value: f64::MAX,
            saturated: true,
        }
    }
}

/// Outcome of the finite-horizon Lambda_0 check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda0Report {
    pub holds: bool,
    /// First `n` at which a monotonicity condition fails.
    pub first_violation: Option<u64>,
    /// `ln r(n_max) / n_max`.
    pub tail_value: f64,
    /// Log-log slope of `ln r(n)/n` over the last decade.
    pub tail_slope: f64,
}

/// Semi-decision for membership in Lambda_0 over `n = 1..n_max`.
///
/// Requires `r(n) >= 1` nondecreasing and `ln r(n)/n` nonincreasing, and that
/// `ln r(n)/n` is still heading to zero at the horizon: either it is already
/// below `tol`, or its last-decade log-log slope is at most `LAMBDA0_SLOPE`.
/// A finite horizon can falsify the limit but never certify it.
pub fn is_lambda0(rate: &RateFunction, n_max: u64, tol: f64) -> Result<Lambda0Report> {
    if n_max < 2 {
        return Err(Error::invalid("n_max must be >= 2"));
    }
    let rel = 1e-12;
    let mut first_violation = None;
    let mut prev_ln = rate.ln_eval(1.0)?;
    let mut prev_ratio = prev_ln;
    if prev_ln < -rel {
        first_violation = Some(1);
    }
    for n in 2..=n_max {
        let ln = rate.ln_eval(n as f64)?;
        let ratio = ln / n as f64;
        let grows = ln >= prev_ln - rel * prev_ln.abs().max(1.0);
        let shrinks = ratio <= prev_ratio + rel * prev_ratio.abs().max(1e-300);
        if first_violation.is_none() && (ln < -rel || !grows || !shrinks) {
            first_violation = Some(n);
        }
        prev_ln = ln;
        prev_ratio = ratio;
    }
    let tail_value = prev_ratio;
    let n_lo = (n_max / 10).max(1);
    let lo_ratio = rate.ln_eval(n_lo as f64)? / n_lo as f64;
    let tail_slope = if lo_ratio > 0.0 && tail_value > 0.0 && n_max > n_lo {
        (tail_value / lo_ratio).ln() / (n_max as f64 / n_lo as f64).ln()
    } else if tail_value <= 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let decaying = tail_value < tol || tail_slope <= LAMBDA0_SLOPE;
    Ok(Lambda0Report {
        holds: first_violation.is_none() && decaying,
        first_violation,
        tail_value,
        tail_slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmultiplicativeReport {
    /// `max r(m+n) / (r(m) r(n))`.
    pub max_ratio: f64,
    pub worst_pair: (u64, u64),
}

pub fn check_submultiplicative(rate: &RateFunction, pairs: &[(u64, u64)]) -> Result<SubmultiplicativeReport> {
    let mut best = f64::NEG_INFINITY;
    let mut worst_pair = (0, 0);
    for &(m, n) in pairs {
        if m == 0 || n == 0 {
            return Err(Error::invalid("submultiplicativity pairs need m, n > 0"));
        }
        let l = rate.ln_eval((m + n) as f64)? - rate.ln_eval(m as f64)? - rate.ln_eval(n as f64)?;
        if l > best {
            best = l;
            worst_pair = (m, n);
        }
    }
    Ok(SubmultiplicativeReport {
        max_ratio: best.exp(),
        worst_pair,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingReport {
    /// `sup_{2 <= n <= n_max} rtilde(n) / r(floor(n/2))`, saturated.
    pub sup: f64,
    pub ln_sup: f64,
    pub argmax: u64,
    /// Max of `ln(rtilde(n)/r(floor(n/2)))` over each dyadic block
    /// `[2^j, 2^{j+1})`, as `(block start, value)`.
    pub block_maxima: Vec<(u64, f64)>,
}

impl HalvingReport {
    /// Whether the dyadic block maxima starting at or after `n0` never
    /// increase. The raw sequence has a sawtooth from the floor, so the
    /// envelope is what can be monotone.
    pub fn nonincreasing_after(&self, n0: u64) -> bool {
        let tail: Vec<f64> = self
            .block_maxima
            .iter()
            .filter(|(start, _)| *start >= n0)
            .map(|(_, v)| *v)
            .collect();
        tail.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

/// Ratio of a candidate mixing rate `rtilde(n)` to the ergodicity rate at the
/// halved horizon, `r(floor(n/2))`, over `n = 2..n_max`.
pub fn ratio_bound_halving(rtilde: &RateFunction, r: &RateFunction, n_max: u64) -> Result<HalvingReport> {
    if n_max < 4 {
        return Err(Error::invalid("n_max must be >= 4"));
    }
    let mut ln_sup = f64::NEG_INFINITY;
    let mut argmax = 2;
    let mut block_maxima: Vec<(u64, f64)> = Vec::new();
    let mut block_start = 2u64;
    let mut block_max = f64::NEG_INFINITY;
    for n in 2..=n_max {
        if n >= 2 * block_start {
            block_maxima.push((block_start, block_max));
            block_start *= 2;
            block_max = f64::NEG_INFINITY;
        }
        let l = rtilde.ln_eval(n as f64)? - r.ln_eval((n / 2) as f64)?;
        if l > ln_sup {
            ln_sup = l;
            argmax = n;
        }
        block_max = block_max.max(l);
    }
    block_maxima.push((block_start, block_max));
    Ok(HalvingReport {
        sup: saturating_exp(ln_sup).value,
        ln_sup,
        argmax,
        block_maxima,
    })
}

/// `(min, max)` of `a(n) / b(n)` over the given horizons; finite positive
/// bounds on a long horizon are the numerical face of rate equivalence.
pub fn ratio_band(a: &RateFunction, b: &RateFunction, ns: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &n in ns {
        let l = a.ln_eval(n)? - b.ln_eval(n)?;
        lo = lo.min(l);
        hi = hi.max(l);
    }
    Ok((lo.exp(), hi.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly_half() -> PhiFunction {
        make_phi(PhiFamily::Polynomial, &[1.0, 0.5]).unwrap()
    }

    #[test]
    fn make_phi_polynomial() {
        let phi = poly_half();
        assert_eq!(phi.eval(4.0), 2.0);
        assert!(!phi.geometric_regime());
    }

    #[test]
    fn make_phi_rejects_alpha_out_of_range() {
        let err = make_phi(PhiFamily::Polynomial, &[1.0, 1.5]).unwrap_err();
        assert!(err.to_string().contains("alpha out of (0,1)"), "{err}");
        assert!(make_phi(PhiFamily::Polynomial, &[0.0, 0.5]).is_err());
        assert!(make_phi(PhiFamily::Logarithmic, &[1.5, 1.0]).is_err());
        assert!(make_phi(PhiFamily::Linear, &[-1.0]).is_err());
        assert!(make_phi(PhiFamily::Polynomial, &[1.0]).is_err());
    }

    #[test]
    fn linear_is_flagged_geometric() {
        let phi = make_phi(PhiFamily::Linear, &[0.3]).unwrap();
        assert!(phi.geometric_regime());
        let r = r_phi_closed_form(&phi).unwrap();
        assert_eq!(r.class, RateClass::Geometric);
    }

    #[test]
    fn subexp_log_rejects_small_v0() {
        // concavity on [1, inf) needs ln(1 + v0) >= alpha + 1
        let err = make_phi(PhiFamily::SubexpLog, &[1.0, 2.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("phi"), "{err}");
        assert!(make_phi(PhiFamily::SubexpLog, &[1.0, 20.0, 1.0]).is_ok());
    }

    #[test]
    fn logarithmic_needs_alpha_at_most_two() {
        assert!(make_phi(PhiFamily::Logarithmic, &[1.0, 2.0]).is_ok());
        assert!(make_phi(PhiFamily::Logarithmic, &[1.0, 3.0]).is_err());
    }

    #[test]
    fn subexp_log_derivative_decreases_by_finite_differences() {
        let phi = make_phi(PhiFamily::SubexpLog, &[1.0, 20.0, 1.0]).unwrap();
        let mut prev = f64::INFINITY;
        let mut v = 1.0;
        while v < 1e9 {
            let h = 1e-5 * v;
            let fd = (phi.eval(v + h) - phi.eval(v - h).max(0.0)) / (2.0 * h);
            assert!(fd > 0.0);
            assert!(fd <= prev * (1.0 + 1e-6), "phi' increased at v={v}");
            prev = fd;
            v *= 1.3;
        }
        assert!(phi.derivative(1e30) < 0.02);
    }

    #[test]
    fn h_phi_polynomial_values() {
        let phi = poly_half();
        assert_eq!(phi.h(1.0).unwrap(), 0.0);
        assert_relative_eq!(phi.h(4.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(phi.h_quadrature(4.0, QUAD_TOL).unwrap(), 2.0, epsilon = 1e-10);
        assert!(phi.h(0.5).is_err());
    }

    #[test]
    fn h_phi_logarithmic_matches_trapezoid_oracle() {
        // Composite trapezoid on [1, e] with 2^20 panels, Richardson-free;
        // its error is far below the 1e-8 comparison.
        let f = |x: f64| 1.0 / (1.0 + x.ln());
        let (a, b) = (1.0, std::f64::consts::E);
        let n = 1 << 20;
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        let oracle = s * h;
        let phi = make_phi(PhiFamily::Logarithmic, &[1.0, 1.0]).unwrap();
        assert!((phi.h(b).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn h_inv_values() {
        let phi = poly_half();
        assert_eq!(phi.h_inv(0.0).unwrap(), 1.0);
        assert_relative_eq!(phi.h_inv(2.0).unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(phi.h_inv_numeric(2.0).unwrap(), 4.0, epsilon = 1e-10);
        for phi in [
            make_phi(PhiFamily::Logarithmic, &[1.0, 1.5]).unwrap(),
            make_phi(PhiFamily::SubexpLog, &[1.0, 20.0, 1.0]).unwrap(),
            make_phi(PhiFamily::Linear, &[0.5]).unwrap(),
        ] {
            assert_eq!(phi.h_inv(0.0).unwrap(), 1.0);
        }
        assert!(poly_half().h_inv(-1.0).is_err());
    }

    #[test]
    fn h_inv_reports_horizon() {
        let phi = make_phi(PhiFamily::Linear, &[1.0]).unwrap();
        assert!(matches!(phi.h_inv(1e4), Err(Error::RateHorizonExceeded { .. })));
        assert!(matches!(phi.h_inv_numeric(1e4), Err(Error::RateHorizonExceeded { .. })));
        // ln r stays available.
        assert_relative_eq!(phi.ln_r(1e4).unwrap(), 1e4);
    }

    #[test]
    fn r_phi_values() {
        let phi = poly_half();
        assert_eq!(phi.r(0.0).unwrap(), 1.0);
        assert_relative_eq!(phi.r(2.0).unwrap(), 2.0, epsilon = 1e-14);
        let big = 1e6;
        assert_relative_eq!(phi.r(big).unwrap() / big, 0.5, epsilon = 1e-5);
    }

    #[test]
    fn closed_form_classes() {
        let r = r_phi_closed_form(&poly_half()).unwrap();
        assert_eq!(r.class, RateClass::Polynomial);
        assert_relative_eq!(r.canonical_params().unwrap().beta, 1.0);

        let phi = make_phi(PhiFamily::SubexpLog, &[1.0, 20.0, 1.0]).unwrap();
        let r = r_phi_closed_form(&phi).unwrap();
        assert_eq!(r.class, RateClass::Subexponential);
        let p = r.canonical_params().unwrap();
        assert_relative_eq!(p.gamma, 0.5);
        // ln r_phi(n)/n^gamma -> ((1+alpha) c)^gamma = sqrt(2); slow convergence
        assert!((p.c - 2f64.sqrt()).abs() < 0.1, "c = {}", p.c);

        let phi = make_phi(PhiFamily::Logarithmic, &[1.0, 2.0]).unwrap();
        let r = r_phi_closed_form(&phi).unwrap();
        assert_eq!(r.class, RateClass::Logarithmic);
        assert_relative_eq!(r.canonical_params().unwrap().alpha, 2.0);
    }

    #[test]
    fn logarithmic_rate_tracks_log_power() {
        // H(v) ~ v / (1 + ln v)^alpha, so H^{-1}(n) ~ v* with v* = n (1 + ln v*)^alpha
        // and r(n) ~ (1 + ln v*)^alpha, a (ln n)^alpha rate up to lower-order terms.
        let phi = make_phi(PhiFamily::Logarithmic, &[1.0, 2.0]).unwrap();
        for n in [1e6, 1e8] {
            let mut v: f64 = n;
            for _ in 0..50 {
                v = n * (1.0 + v.ln()).powi(2);
            }
            let oracle = (1.0 + v.ln()).powi(2);
            let r = phi.r(n).unwrap();
            assert!((r / oracle - 1.0).abs() < 0.02, "n={n}: {r} vs {oracle}");
        }
    }

    #[test]
    fn lambda0_examples() {
        let geo = RateFunction::geometric(0.5);
        let rep = is_lambda0(&geo, 10_000, LAMBDA0_TOL).unwrap();
        assert!(!rep.holds);
        let poly = RateFunction::polynomial(2.0);
        assert!(is_lambda0(&poly, LAMBDA0_N_MAX, LAMBDA0_TOL).unwrap().holds);
        let sub = RateFunction::subexponential(1.0, 0.5);
        let rep = is_lambda0(&sub, LAMBDA0_N_MAX, LAMBDA0_TOL).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!((rep.tail_slope + 0.5).abs() < 0.01);
        assert!(is_lambda0(&poly, 1, LAMBDA0_TOL).is_err());
    }

    #[test]
    fn lambda0_flags_nonmonotone_rate() {
        let shrinking = RateFunction::canonical(CanonicalRate {
            beta: -1.0,
            ..Default::default()
        });
        let rep = is_lambda0(&shrinking, 100, LAMBDA0_TOL).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.first_violation, Some(1));
    }

    #[test]
    fn submultiplicative_geometric_is_exact() {
        let r = RateFunction::geometric(2f64.ln());
        let rep = check_submultiplicative(&r, &[(1, 1)]).unwrap();
        assert_relative_eq!(rep.max_ratio, 1.0, epsilon = 1e-14);
        assert!(check_submultiplicative(&r, &[(0, 1)]).is_err());
    }

    #[test]
    fn halving_examples() {
        let r = RateFunction::subexponential(1.0, 0.5);
        let rt = RateFunction::subexponential(0.3, 0.5);
        let rep = ratio_bound_halving(&rt, &r, 100_000).unwrap();
        assert!(rep.argmax < 100);
        assert!(rep.nonincreasing_after(100));

        let g = RateFunction::geometric(1.0);
        let a = ratio_bound_halving(&g, &g, 100).unwrap();
        let b = ratio_bound_halving(&g, &g, 1000).unwrap();
        assert!(b.ln_sup > a.ln_sup + 400.0);

        let p = RateFunction::polynomial(2.0);
        let rep = ratio_bound_halving(&p, &p, 100_000).unwrap();
        assert!(rep.sup <= 4.0 * (1.0 + 1e-9) * 1.5, "sup {}", rep.sup);
        assert!(rep.sup >= 4.0 * 0.99);
    }

    #[test]
    fn phi_serde_round_trip_validates() {
        let json = r#"{"family":"polynomial","c":1.0,"alpha":0.5}"#;
        let phi: PhiFunction = serde_json::from_str(json).unwrap();
        assert_eq!(phi, poly_half());
        let bad = r#"{"family":"polynomial","c":1.0,"alpha":1.5}"#;
        assert!(serde_json::from_str::<PhiFunction>(bad).is_err());
    }
}
