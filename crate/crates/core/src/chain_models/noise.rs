//! Innovation distributions for the scalar models, one per moment class:
//! exponential moments (Gaussian), stretched-exponential moments only
//! (Weibull-type tail), and finitely many polynomial moments (symmetrized
//! Pareto tail).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::{erf::erfc, gamma::gamma_ur, gamma::ln_gamma};

use crate::error::{Error, Result};

/// Extra tail index over `s0` used when a StudentLike spec omits it.
pub const DEFAULT_TAIL_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    WeibullTail,
    StudentLike,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFamily {
    Gaussian,
    /// Density proportional to `exp(-|x/scale|^kappa)`, `kappa in (0, 1)`.
    WeibullTail {
        kappa: f64,
    },
    /// `P(|e| > t) = (1 + t/scale)^{-tail_index}`, so `E|e|^s < inf` iff
    /// `s < tail_index`. `s0` is the moment order the family is meant to carry.
    StudentLike {
        s0: f64,
        tail_index: f64,
    },
}

/// A symmetric, mean-zero innovation law. `scale = 0` is the degenerate
/// point mass at zero, useful for deterministic checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpecRaw", into = "NoiseSpecRaw")]
pub struct NoiseSpec {
    family: NoiseFamily,
    scale: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSpecRaw {
    family: NoiseKind,
    scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_index: Option<f64>,
}

impl TryFrom<NoiseSpecRaw> for NoiseSpec {
    type Error = Error;
    fn try_from(raw: NoiseSpecRaw) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::invalid(format!("{:?} noise needs '{name}'", raw.family)))
        };
        let stray = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(Error::invalid(format!("{:?} noise takes no '{name}'", raw.family))),
            None => Ok(()),
        };
        match raw.family {
            NoiseKind::Gaussian => {
                stray(raw.kappa, "kappa")?;
                stray(raw.s0, "s0")?;
                stray(raw.tail_index, "tail_index")?;
                NoiseSpec::gaussian(raw.scale)
            }
            NoiseKind::WeibullTail => {
                stray(raw.s0, "s0")?;
                stray(raw.tail_index, "tail_index")?;
                NoiseSpec::weibull_tail(need(raw.kappa, "kappa")?, raw.scale)
            }
            NoiseKind::StudentLike => {
                stray(raw.kappa, "kappa")?;
                let s0 = need(raw.s0, "s0")?;
                match raw.tail_index {
                    Some(a) => NoiseSpec::student_like_with_tail(s0, a, raw.scale),
                    None => NoiseSpec::student_like(s0, raw.scale),
                }
            }
        }
    }
}

impl From<NoiseSpec> for NoiseSpecRaw {
    fn from(n: NoiseSpec) -> Self {
        let mut raw = NoiseSpecRaw {
            family: n.kind(),
            scale: n.scale,
            kappa: None,
            s0: None,
            tail_index: None,
        };
        match n.family {
            NoiseFamily::Gaussian => {}
            NoiseFamily::WeibullTail { kappa } => raw.kappa = Some(kappa),
            NoiseFamily::StudentLike { s0, tail_index } => {
                raw.s0 = Some(s0);
                raw.tail_index = Some(tail_index);
            }
        }
        raw
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale >= 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "noise scale must be finite and >= 0, got {scale}"
        )))
    }
}

impl NoiseSpec {
    pub fn gaussian(scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(NoiseSpec {
            family: NoiseFamily::Gaussian,
            scale,
        })
    }

    pub fn weibull_tail(kappa: f64, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid("kappa out of (0,1)"));
        }
        Ok(NoiseSpec {
            family: NoiseFamily::WeibullTail { kappa },
            scale,
        })
    }

    /// StudentLike with the default tail index `s0 + DEFAULT_TAIL_MARGIN`.
    pub fn student_like(s0: f64, scale: f64) -> Result<Self> {
        Self::student_like_with_tail(s0, s0 + DEFAULT_TAIL_MARGIN, scale)
    }

    pub fn student_like_with_tail(s0: f64, tail_index: f64, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::invalid("s0 must be > 0"));
        }
        if !(tail_index > s0 && tail_index.is_finite()) {
            return Err(Error::invalid("tail_index must exceed s0"));
        }
        if tail_index <= 1.0 {
            return Err(Error::invalid("tail_index must exceed 1 for a mean-zero law"));
        }
        Ok(NoiseSpec {
            family: NoiseFamily::StudentLike { s0, tail_index },
            scale,
        })
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn kind(&self) -> NoiseKind {
        match self.family {
            NoiseFamily::Gaussian => NoiseKind::Gaussian,
            NoiseFamily::WeibullTail { .. } => NoiseKind::WeibullTail,
            NoiseFamily::StudentLike { .. } => NoiseKind::StudentLike,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_degenerate(&self) -> bool {
        self.scale == 0.0
    }

    /// Whether the density is bounded away from zero on compacts.
    pub fn density_positive_on_compacts(&self) -> bool {
        !self.is_degenerate()
    }

    pub fn describe(&self) -> String {
        match self.family {
            NoiseFamily::Gaussian => format!("Gaussian, sd {}", self.scale),
            NoiseFamily::WeibullTail { kappa } => {
                format!("density ~ exp(-|x/{}|^{kappa})", self.scale)
            }
            NoiseFamily::StudentLike { s0, tail_index } => format!(
                "symmetric Pareto tail (1+|x|/{})^-{tail_index}, E|e|^{s0} finite",
                self.scale
            ),
        }
    }

    /// `Var(e)`, infinite when the tail is too heavy.
    pub fn variance(&self) -> f64 {
        let s2 = self.scale * self.scale;
        match self.family {
            NoiseFamily::Gaussian => s2,
            NoiseFamily::WeibullTail { kappa } => s2 * (ln_gamma(3.0 / kappa) - ln_gamma(1.0 / kappa)).exp(),
            NoiseFamily::StudentLike { tail_index: a, .. } => {
                if a > 2.0 {
                    2.0 * s2 / ((a - 1.0) * (a - 2.0))
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `P(|e| > t)` for `t >= 0`.
    pub fn abs_sf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        if self.is_degenerate() {
            return 0.0;
        }
        let u = t / self.scale;
        match self.family {
            NoiseFamily::Gaussian => erfc(u / std::f64::consts::SQRT_2),
            NoiseFamily::WeibullTail { kappa } => {
                if u == 0.0 {
                    1.0
                } else {
                    gamma_ur(1.0 / kappa, u.powf(kappa))
                }
            }
            NoiseFamily::StudentLike { tail_index, .. } => (1.0 + u).powf(-tail_index),
        }
    }

    /// `P(e > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            return if x < 0.0 { 1.0 } else { 0.0 };
        }
        if x >= 0.0 {
            0.5 * self.abs_sf(x)
        } else {
            1.0 - 0.5 * self.abs_sf(-x)
        }
    }

    /// `P(e <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            return if x < 0.0 { 0.0 } else { 1.0 };
        }
        if x <= 0.0 {
            0.5 * self.abs_sf(-x)
        } else {
            1.0 - 0.5 * self.abs_sf(x)
        }
    }

    /// `P(a < e <= b)`, evaluated on whichever tail avoids cancellation.
    pub fn prob_interval(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let p = if a >= 0.0 {
            self.sf(a) - self.sf(b)
        } else {
            self.cdf(b) - self.cdf(a)
        };
        p.max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        match self.family {
            NoiseFamily::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.scale * z
            }
            NoiseFamily::WeibullTail { kappa } => {
                // |e|/scale = G^{1/kappa} with G ~ Gamma(1/kappa, 1).
                let g = Gamma::new(1.0 / kappa, 1.0).expect("shape is positive").sample(rng);
                self.random_sign(rng) * self.scale * g.powf(1.0 / kappa)
            }
            NoiseFamily::StudentLike { tail_index, .. } => {
                let u = 1.0 - rng.random::<f64>();
                self.random_sign(rng) * self.scale * (u.powf(-1.0 / tail_index) - 1.0)
            }
        }
    }

    fn random_sign<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}

/// Which moment `E f(e)` to probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentKind {
    /// `E exp(z |e|)`.
    ExpAbs { z: f64 },
    /// `E exp(z |e|^kappa)`.
    ExpPow { z: f64, kappa: f64 },
    /// `E |e|^s`.
    Power { s: f64 },
}

impl MomentKind {
    fn ln_term(&self, e: f64) -> f64 {
        let a = e.abs();
        match *self {
            MomentKind::ExpAbs { z } => z * a,
            MomentKind::ExpPow { z, kappa } => z * a.powf(kappa),
            MomentKind::Power { s } => s * a.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    /// Sample mean of the moment terms (infinite on overflow).
    pub estimate: f64,
    pub stderr: f64,
    /// Hill estimate of the tail index of the terms; below 1 means the
    /// sample looks like it comes from an infinite-mean law.
    pub tail_index: f64,
    /// Largest single term as a share of the sum.
    pub max_share: f64,
    pub diverging: bool,
}

pub const MIN_MOMENT_SAMPLES: usize = 10_000;

/// Monte Carlo estimate of `E f(e)` with a divergence heuristic.
///
/// The flag is raised when the upper order statistics of `f(e)` decay like
/// a Pareto law of index below 1 (Hill estimator on the top 1%), which is
/// what a running maximum that keeps dominating the running mean looks like.
pub fn check_moment_condition<R: Rng + ?Sized>(
    noise: &NoiseSpec,
    kind: MomentKind,
    n_mc: usize,
    rng: &mut R,
) -> Result<MomentEstimate> {
    if n_mc < MIN_MOMENT_SAMPLES {
        return Err(Error::invalid(format!("n_mc must be >= {MIN_MOMENT_SAMPLES}")));
    }
    let mut logs: Vec<f64> = (0..n_mc).map(|_| kind.ln_term(noise.sample(rng))).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (estimate, stderr, max_share) = if top.is_finite() && top < 700.0 {
        let terms: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
        let n = n_mc as f64;
        let sum: f64 = terms.iter().sum();
        let mean = sum / n;
        let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt(), top.exp() / sum)
    } else if top.is_finite() {
        (f64::INFINITY, f64::INFINITY, 1.0)
    } else {
        // every term was exp(-inf) = 0, or |e|^s at e = 0
        (0.0, 0.0, 0.0)
    };
    logs.sort_by(|a, b| b.total_cmp(a));
    let k = (n_mc / 100).max(50);
    let base = logs[k];
    let tail_index = if base.is_finite() {
        let h = logs[..k].iter().map(|l| l - base).sum::<f64>() / k as f64;
        if h > 0.0 {
            1.0 / h
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    Ok(MomentEstimate {
        estimate,
        stderr,
        tail_index,
        max_share,
        diverging: !estimate.is_finite() || tail_index < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;
    use approx::assert_relative_eq;

    fn all_specs() -> Vec<NoiseSpec> {
        vec![
            NoiseSpec::gaussian(1.0).unwrap(),
            NoiseSpec::weibull_tail(0.5, 1.0).unwrap(),
            NoiseSpec::student_like(2.0, 1.0).unwrap(),
            NoiseSpec::student_like_with_tail(2.0, 3.0, 0.5).unwrap(),
        ]
    }

    #[test]
    fn validation() {
        assert!(NoiseSpec::gaussian(-1.0).is_err());
        assert!(NoiseSpec::weibull_tail(1.0, 1.0).is_err());
        assert!(NoiseSpec::student_like_with_tail(2.0, 2.0, 1.0).is_err());
        assert!(NoiseSpec::student_like(0.5, 1.0).is_err());
        assert_eq!(
            NoiseSpec::student_like(2.0, 1.0).unwrap().family(),
            NoiseFamily::StudentLike {
                s0: 2.0,
                tail_index: 2.1
            }
        );
    }

    #[test]
    fn cdf_and_sf_are_consistent() {
        for n in all_specs() {
            for x in [-50.0, -3.0, -0.2, 0.0, 0.7, 4.0, 80.0] {
                assert_relative_eq!(n.cdf(x) + n.sf(x), 1.0, epsilon = 1e-12);
                assert_relative_eq!(n.cdf(x), n.sf(-x), epsilon = 1e-12);
            }
            assert_eq!(n.cdf(0.0), 0.5);
            assert!(n.prob_interval(1.0, 2.0) > 0.0);
        }
    }

    #[test]
    fn weibull_cdf_matches_density_quadrature() {
        // Oracle: integrate the density exp(-sqrt|x|) / 4 directly, with x = u^2
        // to remove the cusp at the origin.
        let n = NoiseSpec::weibull_tail(0.5, 1.0).unwrap();
        let dens = |u: f64| (-u).exp() * 2.0 * u / 4.0;
        for b in [0.5f64, 3.0, 20.0] {
            let p = crate::numeric::adaptive_simpson(dens, 0.0, b.sqrt(), 1e-13).unwrap();
            assert_relative_eq!(n.prob_interval(0.0, b), p, epsilon = 1e-9);
        }
    }

    #[test]
    fn samples_match_cdf() {
        let seed = StreamSeed::new(11);
        for (i, n) in all_specs().into_iter().enumerate() {
            let mut rng = seed.stream("noise-cdf", i as u64);
            let draws: Vec<f64> = (0..200_000).map(|_| n.sample(&mut rng)).collect();
            for x in [-2.0, -0.5, 0.3, 1.5] {
                let emp = draws.iter().filter(|&&d| d <= x).count() as f64 / draws.len() as f64;
                let p = n.cdf(x);
                let se = (p * (1.0 - p) / draws.len() as f64).sqrt();
                assert!((emp - p).abs() < 5.0 * se, "{n:?} x={x}: {emp} vs {p}");
            }
        }
    }

    #[test]
    fn variance_matches_samples() {
        let n = NoiseSpec::weibull_tail(0.5, 1.0).unwrap();
        // Gamma(6)/Gamma(2) = 120
        assert_relative_eq!(n.variance(), 120.0, epsilon = 1e-9);
        let s = NoiseSpec::student_like(2.0, 1.0).unwrap();
        assert_relative_eq!(s.variance(), 2.0 / (1.1 * 0.1), epsilon = 1e-12);
        assert!(NoiseSpec::student_like_with_tail(1.5, 1.8, 1.0)
            .unwrap()
            .variance()
            .is_infinite());
    }

    #[test]
    fn degenerate_noise() {
        let n = NoiseSpec::gaussian(0.0).unwrap();
        let mut rng = StreamSeed::new(1).stream("d", 0);
        assert_eq!(n.sample(&mut rng), 0.0);
        assert_eq!(n.cdf(-1e-9), 0.0);
        assert_eq!(n.cdf(0.0), 1.0);
        assert_eq!(n.prob_interval(-0.5, 0.5), 1.0);
        assert!(!n.density_positive_on_compacts());
    }

    #[test]
    fn serde_round_trip() {
        for n in all_specs() {
            let json = serde_json::to_string(&n).unwrap();
            let back: NoiseSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, n);
        }
        let err = serde_json::from_str::<NoiseSpec>(r#"{"family":"gaussian","scale":1,"kappa":0.5}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<NoiseSpec>(r#"{"family":"gaussian","scale":1,"extra":0}"#);
        assert!(err.is_err());
    }

    #[test]
    fn gaussian_exp_abs_moment() {
        let n = NoiseSpec::gaussian(1.0).unwrap();
        let mut rng = StreamSeed::new(5).stream("m", 0);
        let z: f64 = 0.1;
        let est = check_moment_condition(&n, MomentKind::ExpAbs { z }, 100_000, &mut rng).unwrap();
        // E e^{z|e|} = 2 e^{z^2/2} Phi(z)
        let oracle = 2.0 * (z * z / 2.0).exp() * (1.0 - 0.5 * erfc(z / std::f64::consts::SQRT_2));
        assert!(!est.diverging);
        assert!((est.estimate - oracle).abs() < 4.0 * est.stderr, "{est:?} vs {oracle}");
    }

    #[test]
    fn divergence_flags() {
        let seed = StreamSeed::new(9);
        let w = NoiseSpec::weibull_tail(0.5, 1.0).unwrap();
        let est = check_moment_condition(&w, MomentKind::ExpAbs { z: 0.1 }, 100_000, &mut seed.stream("m", 1)).unwrap();
        assert!(est.diverging, "{est:?}");
        let est = check_moment_condition(
            &w,
            MomentKind::ExpPow { z: 0.1, kappa: 0.5 },
            100_000,
            &mut seed.stream("m", 2),
        )
        .unwrap();
        assert!(!est.diverging, "{est:?}");

        let s = NoiseSpec::student_like_with_tail(2.0, 3.0, 1.0).unwrap();
        let est = check_moment_condition(&s, MomentKind::Power { s: 2.0 }, 100_000, &mut seed.stream("m", 3)).unwrap();
        assert!(!est.diverging, "{est:?}");
        // E|e|^2 = 2 / ((a-1)(a-2)) = 1
        assert!((est.estimate - 1.0).abs() < 0.2, "{est:?}");
        let est = check_moment_condition(&s, MomentKind::Power { s: 4.0 }, 100_000, &mut seed.stream("m", 4)).unwrap();
        assert!(est.diverging, "{est:?}");
        assert!(check_moment_condition(&s, MomentKind::Power { s: 1.0 }, 100, &mut seed.stream("m", 5)).is_err());
    }
}
