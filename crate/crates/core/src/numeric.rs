//! Scalar numerical kernels shared by the rate calculus: adaptive Simpson
//! quadrature and a safeguarded Newton/bisection root finder for monotone
//! functions.

use crate::error::{Error, Result};

/// Maximum recursion depth for adaptive Simpson.
pub const MAX_DEPTH: u32 = 60;

/// Shortest text that parses back to the same `f64` (`inf`, `NaN` spelled
/// as Rust prints them).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The per-interval acceptance test is `|S2 - S1| <= 15 * tol`, with the
/// tolerance split in half at each bisection. Once the running estimate is
/// large, a relative floor of a few ulps replaces `tol` so that integrals of
/// size 1e15 do not demand sub-ulp accuracy.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0_f64;
    let value = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut worst);
    if worst > 0.0 || !value.is_finite() {
        return Err(Error::Quadrature {
            residual: if value.is_finite() { worst } else { f64::INFINITY },
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let both = left + right;
    let delta = both - whole;
    let eff_tol = tol.max(4.0 * f64::EPSILON * both.abs());
    if delta.abs() <= 15.0 * eff_tol {
        return both + delta / 15.0;
    }
    if depth == 0 {
        *worst = worst.max(delta.abs() / 15.0);
        return both + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

/// Solve `g(x) = 0` on `[lo, hi]` for a nondecreasing `g` with
/// `g(lo) <= 0 <= g(hi)`, using Newton steps with derivative `dg` and falling
/// back to bisection whenever a step leaves the bracket or fails to shrink it.
///
/// Stops when `|g(x)| <= ftol` or the bracket is narrower than a few ulps.
pub fn newton_bisect<G, D>(g: G, dg: D, mut lo: f64, mut hi: f64, ftol: f64, max_iter: usize) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let gx = g(x)?;
        last = gx;
        if gx.abs() <= ftol {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let slope = dg(x);
        let newton = if slope > 0.0 && slope.is_finite() {
            x - gx / slope
        } else {
            f64::NAN
        };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NonConvergence {
        what: "root bracket",
        iterations: max_iter,
        residual: last.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_oscillatory_smooth_integrand() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn simpson_reports_nonconvergence() {
        // 1/sqrt(x) near zero cannot be resolved to 1e-14 in 60 levels.
        let err = adaptive_simpson(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-14);
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn newton_bisect_finds_cube_root() {
        let r = newton_bisect(|x| Ok(x * x * x - 10.0), |x| 3.0 * x * x, 0.0, 10.0, 1e-14, 200).unwrap();
        assert!((r - 10f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_bisect_survives_flat_derivative() {
        let r = newton_bisect(|x| Ok(x - 0.25), |_| 0.0, 0.0, 1.0, 1e-15, 200).unwrap();
        assert!((r - 0.25).abs() < 1e-14);
    }
}
