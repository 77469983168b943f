//! Path-based estimators for the continuous chain: stationary histograms,
//! binned TV profiles, and stationary beta-mixing coefficients.
//!
//! Every TV here is the distance between laws restricted to one fixed
//! partition (the bins plus an out-of-range cell), which lower-bounds the
//! true TV. Empirical distances carry a positive bias of order
//! `sqrt(bins / samples)`; each series reports the same-size two-sample
//! null value as its floor instead of correcting for it.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain_models::{simulate_path, ScalarModel};
use crate::error::{Error, Result};
use crate::numeric::fmt_f64;
use crate::rng::StreamSeed;
use crate::series::{MixingSeries, Provenance, SeriesKind};

pub const DEFAULT_BINS: usize = 128;
pub const DEFAULT_COVERAGE: f64 = 0.999;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_BURN_IN: usize = 1_000;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_STATIONARY_SAMPLES: usize = 10_000;
pub const MIN_REPLICATES: usize = 10_000;
pub const MIN_STARTS: usize = 100;
/// Independent same-size stationary samples averaged for the paired null.
pub const NULL_DRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramEstimate {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub n_samples: usize,
    pub out_of_range_mass: f64,
}

/// How to choose the partition.
#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    /// Equal-width bins over the central `DEFAULT_COVERAGE` of the
    /// stationary reference sample.
    Central {
        bins: usize,
    },
    Edges(Vec<f64>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Central { bins: DEFAULT_BINS }
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::invalid("a partition needs at least two edges"));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("bin edges must be finite and strictly increasing"));
    }
    Ok(())
}

/// Cell of `x`: `Some(k)` for `[e_k, e_{k+1})`, `None` outside.
fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let k = edges.partition_point(|&e| e <= x);
    if k == 0 || k == edges.len() {
        None
    } else {
        Some(k - 1)
    }
}

/// Counts per bin plus an out-of-range count in the last slot.
fn counts(edges: &[f64], samples: impl IntoIterator<Item = f64>) -> Vec<u64> {
    let bins = edges.len() - 1;
    let mut c = vec![0u64; bins + 1];
    for x in samples {
        match bin_of(edges, x) {
            Some(k) => c[k] += 1,
            None => c[bins] += 1,
        }
    }
    c
}

/// `sum |a/na - b/nb|` over the cells, out-of-range cell included.
fn count_tv(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (na, nb) = (na as f64, nb as f64);
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
        .sum()
}

impl HistogramEstimate {
    pub fn from_samples(samples: &[f64], edges: Vec<f64>) -> Result<Self> {
        check_edges(&edges)?;
        if samples.is_empty() {
            return Err(Error::invalid("histogram needs samples"));
        }
        let c = counts(&edges, samples.iter().copied());
        let n = samples.len() as f64;
        let bins = edges.len() - 1;
        Ok(HistogramEstimate {
            masses: c[..bins].iter().map(|&k| k as f64 / n).collect(),
            out_of_range_mass: c[bins] as f64 / n,
            n_samples: samples.len(),
            edges,
        })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.out_of_range_mass
    }

    /// TV on the shared partition, out-of-range cell included.
    pub fn tv(&self, other: &HistogramEstimate) -> Result<f64> {
        if self.edges != other.edges {
            return Err(Error::invalid("histograms are on different partitions"));
        }
        let inner: f64 = self.masses.iter().zip(&other.masses).map(|(a, b)| (a - b).abs()).sum();
        Ok(inner + (self.out_of_range_mass - other.out_of_range_mass).abs())
    }

    /// Draw from the histogram: a bin by mass, then uniform inside it. The
    /// out-of-range mass is ignored.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let inside: f64 = self.masses.iter().sum();
        let mut u = rng.random::<f64>() * inside;
        let mut k = self.bins() - 1;
        for (i, &m) in self.masses.iter().enumerate() {
            if u < m {
                k = i;
                break;
            }
            u -= m;
        }
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        lo + rng.random::<f64>() * (hi - lo)
    }
}

/// Equal-width edges over the central `coverage` of `samples`.
pub fn central_edges(samples: &[f64], bins: usize, coverage: f64) -> Result<Vec<f64>> {
    if bins < 1 {
        return Err(Error::invalid("need at least one bin"));
    }
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::invalid("coverage out of (0,1]"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("no samples to place bins"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - coverage);
    let at = |q: f64| sorted[((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    let (lo, mut hi) = (at(tail), at(1.0 - tail));
    if hi <= lo {
        hi = lo + 1e-9 * lo.abs().max(1.0);
    }
    let w = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * w).collect();
    edges.push(hi);
    Ok(edges)
}

fn resolve_edges(spec: &BinSpec, reference: &[f64]) -> Result<Vec<f64>> {
    match spec {
        BinSpec::Central { bins } => central_edges(reference, *bins, DEFAULT_COVERAGE),
        BinSpec::Edges(e) => {
            check_edges(e)?;
            Ok(e.clone())
        }
    }
}

/// `n_samples` states from one path after `burn_in`, keeping every
/// `stride`-th state.
pub fn stationary_sample(
    model: &ScalarModel,
    n_samples: usize,
    burn_in: usize,
    stride: usize,
    seed: &StreamSeed,
    tag: &str,
) -> Result<Vec<f64>> {
    stationary_sample_indexed(model, n_samples, burn_in, stride, seed, tag, 0)
}

fn stationary_sample_indexed(
    model: &ScalarModel,
    n_samples: usize,
    burn_in: usize,
    stride: usize,
    seed: &StreamSeed,
    tag: &str,
    index: u64,
) -> Result<Vec<f64>> {
    if stride == 0 {
        return Err(Error::invalid("stride must be >= 1"));
    }
    let mut rng = seed.stream(tag, index);
    let mut x = *simulate_path(model, 0.0, burn_in, &mut rng)?
        .last()
        .expect("path has x0");
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        x = *simulate_path(model, x, stride, &mut rng)?.last().expect("path has x0");
        out.push(x);
    }
    Ok(out)
}

/// Histogram of one long thinned path.
pub fn estimate_stationary(
    model: &ScalarModel,
    bins: &BinSpec,
    n_samples: usize,
    burn_in: usize,
    seed: &StreamSeed,
) -> Result<HistogramEstimate> {
    if n_samples < MIN_STATIONARY_SAMPLES {
        return Err(Error::invalid(format!("n_samples must be >= {MIN_STATIONARY_SAMPLES}")));
    }
    if burn_in < DEFAULT_BURN_IN {
        return Err(Error::invalid(format!("burn_in must be >= {DEFAULT_BURN_IN}")));
    }
    let samples = stationary_sample(model, n_samples, burn_in, DEFAULT_STRIDE, seed, "stationary")?;
    let edges = resolve_edges(bins, &samples)?;
    HistogramEstimate::from_samples(&samples, edges)
}

/// Mean and standard error of the TV between the reference counts and
/// `NULL_DRAWS` independent stationary samples of `size` states.
fn paired_null(
    model: &ScalarModel,
    size: usize,
    burn_in: usize,
    edges: &[f64],
    ref_counts: &[u64],
    seed: &StreamSeed,
    tag: &str,
) -> Result<(f64, f64)> {
    let draws: Vec<f64> = (0..NULL_DRAWS as u64)
        .into_par_iter()
        .map(|i| {
            let xs = stationary_sample_indexed(model, size, burn_in, DEFAULT_STRIDE, seed, tag, i)?;
            Ok(count_tv(ref_counts, &counts(edges, xs)))
        })
        .collect::<Result<_>>()?;
    let k = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / k;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok((mean, (var / k).sqrt()))
}

/// Starting point for Monte Carlo profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum McStart {
    Point(f64),
    /// Each replicate starts from an independent draw of the histogram.
    Histogram(HistogramEstimate),
}

fn check_n_list(n_list: &[usize]) -> Result<usize> {
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "n_list must be nonempty, strictly increasing, and start at n >= 1",
        ));
    }
    Ok(*n_list.last().expect("nonempty"))
}

/// States at the times in `n_list` along one path.
fn states_at<R: Rng + ?Sized>(model: &ScalarModel, x0: f64, n_list: &[usize], rng: &mut R) -> Result<Vec<f64>> {
    let path = simulate_path(model, x0, *n_list.last().expect("nonempty"), rng)?;
    Ok(n_list.iter().map(|&n| path[n]).collect())
}

fn bootstrap_stderr<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> f64 {
    let k = values.len();
    let means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..k).map(|_| values[rng.random_range(0..k)]).sum::<f64>() / k as f64)
        .collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt()
}

/// TV between resampled copies of two samples, repeated, for a stderr.
fn bootstrap_tv_stderr<R: Rng + ?Sized>(edges: &[f64], a: &[f64], b: &[f64], rng: &mut R) -> f64 {
    let draws: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let ra = (0..a.len()).map(|_| a[rng.random_range(0..a.len())]);
            let ca = counts(edges, ra);
            let rb = (0..b.len()).map(|_| b[rng.random_range(0..b.len())]);
            let cb = counts(edges, rb);
            count_tv(&ca, &cb)
        })
        .collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    (draws.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt()
}

/// Binned `||P^n(x0, .) - pi||` for each `n` in `n_list`, from `replicates`
/// independent paths against a same-size stationary sample.
///
/// The floor is the TV between two independent same-size stationary
/// samples (paired null), also recorded in the metadata.
pub fn estimate_tv_profile_mc(
    model: &ScalarModel,
    initial: &McStart,
    n_list: &[usize],
    replicates: usize,
    bins: &BinSpec,
    burn_in: usize,
    seed: &StreamSeed,
) -> Result<MixingSeries> {
    check_n_list(n_list)?;
    if replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!("replicates must be >= {MIN_REPLICATES}")));
    }
    let reference = stationary_sample(model, replicates, burn_in, DEFAULT_STRIDE, seed, "tv-reference")?;
    let edges = resolve_edges(bins, &reference)?;
    let ref_counts = counts(&edges, reference.iter().copied());
    let (null_tv, null_se) = paired_null(model, replicates, burn_in, &edges, &ref_counts, seed, "tv-null")?;

    let rows: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.stream("tv-replicate", r as u64);
            let x0 = match initial {
                McStart::Point(x) => *x,
                McStart::Histogram(h) => h.sample(&mut rng),
            };
            states_at(model, x0, n_list, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut series = MixingSeries::new(SeriesKind::TvProfileMu, Provenance::MonteCarlo);
    for (k, &n) in n_list.iter().enumerate() {
        let xs: Vec<f64> = rows.iter().map(|row| row[k]).collect();
        let value = count_tv(&counts(&edges, xs.iter().copied()), &ref_counts);
        let stderr = bootstrap_tv_stderr(&edges, &xs, &reference, &mut seed.stream("tv-bootstrap", n as u64));
        series.push(n as u64, value, stderr);
    }
    series.floor = null_tv;
    series.metadata.insert("paired_null".into(), fmt_f64(null_tv));
    series.metadata.insert("paired_null_stderr".into(), fmt_f64(null_se));
    series.metadata.insert("bins".into(), (edges.len() - 1).to_string());
    series.metadata.insert("replicates".into(), replicates.to_string());
    Ok(series)
}

/// `1/2 * binned TV(P^n(x, .), pi)` averaged over `starts` points drawn from
/// the stationary path, for each `n` in `n_list`.
///
/// Each start gets `replicates_per_start` paths, compared with a
/// stationary reference sample of the same size. The stderr is a bootstrap
/// over starts; the floor is half the same-size paired null.
pub fn estimate_beta_stationary_mc(
    model: &ScalarModel,
    n_list: &[usize],
    starts: usize,
    replicates_per_start: usize,
    bins: &BinSpec,
    burn_in: usize,
    seed: &StreamSeed,
) -> Result<MixingSeries> {
    check_n_list(n_list)?;
    if starts < MIN_STARTS {
        return Err(Error::invalid(format!("starts must be >= {MIN_STARTS}")));
    }
    if replicates_per_start < 2 {
        return Err(Error::invalid("replicates_per_start must be >= 2"));
    }
    let reference = stationary_sample(
        model,
        replicates_per_start,
        burn_in,
        DEFAULT_STRIDE,
        seed,
        "beta-reference",
    )?;
    let start_points = stationary_sample(model, starts, burn_in, DEFAULT_STRIDE, seed, "beta-starts")?;
    let edges = resolve_edges(bins, &reference)?;
    let ref_counts = counts(&edges, reference.iter().copied());
    let (null_tv, null_se) = paired_null(
        model,
        replicates_per_start,
        burn_in,
        &edges,
        &ref_counts,
        seed,
        "beta-null",
    )?;
    let null_beta = 0.5 * null_tv;

    let per_start: Vec<Vec<f64>> = start_points
        .par_iter()
        .enumerate()
        .map(|(s, &x0)| {
            let child = seed.child("beta-start", s as u64);
            let mut cells: Vec<Vec<u64>> = vec![vec![0; edges.len()]; n_list.len()];
            for r in 0..replicates_per_start {
                let mut rng = child.stream("replicate", r as u64);
                let xs = states_at(model, x0, n_list, &mut rng)?;
                for (k, &x) in xs.iter().enumerate() {
                    let cell = bin_of(&edges, x).unwrap_or(edges.len() - 1);
                    cells[k][cell] += 1;
                }
            }
            Ok(cells.iter().map(|c| 0.5 * count_tv(c, &ref_counts)).collect())
        })
        .collect::<Result<_>>()?;

    let mut series = MixingSeries::new(SeriesKind::BetaStationary, Provenance::MonteCarlo);
    for (k, &n) in n_list.iter().enumerate() {
        let vals: Vec<f64> = per_start.iter().map(|v| v[k]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let stderr = bootstrap_stderr(&vals, &mut seed.stream("beta-bootstrap", n as u64));
        series.push(n as u64, mean, stderr);
    }
    series.floor = null_beta;
    series.metadata.insert("paired_null".into(), fmt_f64(null_beta));
    series
        .metadata
        .insert("paired_null_stderr".into(), fmt_f64(0.5 * null_se));
    series.metadata.insert("bins".into(), (edges.len() - 1).to_string());
    series.metadata.insert("starts".into(), starts.to_string());
    series
        .metadata
        .insert("replicates_per_start".into(), replicates_per_start.to_string());
    Ok(series)
}

/// `n = 1..n_max` log-spaced with `points` targets, deduplicated.
pub fn log_spaced_n(n_max: usize, points: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..points)
        .map(|i| {
            let t = if points > 1 {
                i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            (n_max as f64).powf(t).round() as usize
        })
        .collect();
    out.dedup();
    out
}
