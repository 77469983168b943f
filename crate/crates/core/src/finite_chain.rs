//! Exact engine on finite state spaces: discretization of a scalar model,
//! stationary laws, total-variation profiles, and beta-mixing coefficients.
//!
//! TV distances use the factor-2 convention: `||a - b|| = sum |a_i - b_i|`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain_models::ScalarModel;
use crate::error::{Error, Result};
use crate::series::{MixingSeries, Provenance, SeriesKind};

/// Largest transition matrix (in entries) `discretize` will build.
pub const DEFAULT_MAX_ENTRIES: usize = 4000 * 4000;
/// Row tolerance for stochasticity.
pub const ROW_TOL: f64 = 1e-12;
/// Required `||pi P - pi||_1` for the stationary law.
pub const STATIONARY_TOL: f64 = 1e-10;
pub const DEFAULT_M_MAX: usize = 200;
/// Smallest floor ever reported: below this, rounding dominates.
pub const FLOAT_FLOOR: f64 = 1e-12;

// Fixed row-block size for parallel products; results do not depend on the
// number of workers because the blocks do not.
const ROW_BLOCK: usize = 64;
const POWER_MAX_ITER: usize = 100_000;

/// A probability vector on the chain's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution needs at least one state"));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("distribution weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > ROW_TOL {
            return Err(Error::invalid(format!("distribution sums to {total}, not 1")));
        }
        Ok(Distribution { weights })
    }

    /// Scales nonnegative weights to sum to one.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("weights must have a positive finite sum"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn point_mass(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid(format!("state {i} out of range for {n} states")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Self::new(w)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalized(vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `sum |d1 - d2|`, in `[0, 2]`.
pub fn tv_distance(d1: &Distribution, d2: &Distribution) -> Result<f64> {
    if d1.len() != d2.len() {
        return Err(Error::LengthMismatch {
            left: d1.len(),
            right: d2.len(),
        });
    }
    Ok(l1(d1.weights(), d2.weights()))
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn l1_view(a: ArrayView1<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// How a discretized chain was cut from the continuous model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub half_width: f64,
    pub bins: usize,
    /// Largest per-row mass that fell outside `[-L, L]` before folding.
    pub leaked_mass_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    states: Vec<f64>,
    p: Array2<f64>,
    pi: Vec<f64>,
    truncation: Option<Truncation>,
}

/// Serialized chain: states, row-major transition matrix, stationary law.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSnapshot {
    pub states: Vec<f64>,
    pub n_states: usize,
    pub transition_row_major: Vec<f64>,
    pub pi: Vec<f64>,
    pub truncation: Option<Truncation>,
}

impl FiniteChain {
    /// Builds a chain from a row-stochastic matrix and solves for `pi`.
    pub fn from_matrix(states: Vec<f64>, p: Array2<f64>) -> Result<Self> {
        Self::build(states, p, None)
    }

    fn build(states: Vec<f64>, p: Array2<f64>, truncation: Option<Truncation>) -> Result<Self> {
        let n = states.len();
        if n < 1 || p.dim() != (n, n) {
            return Err(Error::invalid(format!(
                "transition matrix {:?} does not match {n} states",
                p.dim()
            )));
        }
        for (i, row) in p.axis_iter(Axis(0)).enumerate() {
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.sum();
            if (total - 1.0).abs() > ROW_TOL {
                return Err(Error::invalid(format!("row {i} sums to {total}")));
            }
        }
        let pi = solve_stationary(&p)?;
        Ok(FiniteChain {
            states,
            p,
            pi,
            truncation,
        })
    }

    /// States `0, 1` with `P(0 -> 1) = p`, `P(1 -> 0) = q`.
    pub fn two_state(p: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid("two-state probabilities must lie in [0, 1]"));
        }
        let m = ndarray::arr2(&[[1.0 - p, p], [q, 1.0 - q]]);
        Self::from_matrix(vec![0.0, 1.0], m)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn transition(&self) -> ArrayView2<'_, f64> {
        self.p.view()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    /// `||pi P - pi||_1`.
    pub fn stationary_residual(&self) -> f64 {
        let next = Array1::from(self.pi.clone()).dot(&self.p);
        l1_view(next.view(), &self.pi)
    }

    /// Truncation-induced floor for decay fits: three times the stationary
    /// mass on the outer half `|x| >= L/2`, and never below `FLOAT_FLOOR`.
    /// Where the far field carries that much mass the boundary folding has
    /// already reshaped the kernel, so decay below it reflects the box.
    pub fn truncation_floor(&self) -> f64 {
        let Some(t) = self.truncation else {
            return FLOAT_FLOOR;
        };
        let outer: f64 = self
            .states
            .iter()
            .zip(&self.pi)
            .filter(|(x, _)| x.abs() >= 0.5 * t.half_width)
            .map(|(_, w)| w)
            .sum();
        (3.0 * outer).max(FLOAT_FLOOR)
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            states: self.states.clone(),
            n_states: self.n_states(),
            transition_row_major: self.p.iter().cloned().collect(),
            pi: self.pi.clone(),
            truncation: self.truncation,
        }
    }

    pub fn from_snapshot(s: ChainSnapshot) -> Result<Self> {
        let n = s.states.len();
        if s.n_states != n || s.transition_row_major.len() != n * n {
            return Err(Error::invalid("snapshot sizes are inconsistent"));
        }
        let p = Array2::from_shape_vec((n, n), s.transition_row_major).expect("checked shape");
        Self::build(s.states, p, s.truncation)
    }

    fn check_dist(&self, mu: &Distribution) -> Result<()> {
        if mu.len() != self.n_states() {
            return Err(Error::LengthMismatch {
                left: mu.len(),
                right: self.n_states(),
            });
        }
        Ok(())
    }

    /// `mu P`.
    pub fn propagate(&self, mu: &[f64]) -> Vec<f64> {
        ArrayView1::from(mu).dot(&self.p).to_vec()
    }

    /// `P^n` by `n` successive products.
    pub fn power(&self, n: usize) -> Array2<f64> {
        let mut q = Array2::eye(self.n_states());
        for _ in 0..n {
            q = blocked_product(&q, &self.p);
        }
        q
    }
}

/// `a b` computed in fixed row blocks, in parallel.
fn blocked_product(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let rows = a.nrows();
    let blocks: Vec<usize> = (0..rows).step_by(ROW_BLOCK).collect();
    let parts: Vec<Array2<f64>> = blocks
        .par_iter()
        .map(|&start| {
            let end = (start + ROW_BLOCK).min(rows);
            a.slice(s![start..end, ..]).dot(b)
        })
        .collect();
    let mut out = Array2::zeros((rows, b.ncols()));
    for (&start, part) in blocks.iter().zip(parts) {
        let end = start + part.nrows();
        out.slice_mut(s![start..end, ..]).assign(&part);
    }
    out
}

/// `sum_x w(x) ||q(x, .) - target||`, rows in parallel, summed in index order.
fn weighted_row_tv(q: &Array2<f64>, w: &[f64], target: &[f64]) -> f64 {
    let per_row: Vec<f64> = (0..q.nrows())
        .into_par_iter()
        .map(|i| {
            if w[i] == 0.0 {
                0.0
            } else {
                w[i] * l1_view(q.row(i), target)
            }
        })
        .collect();
    per_row.iter().sum()
}

/// Stationary law by Grassmann-Taksar-Heyman elimination (subtraction-free,
/// so small probabilities keep full relative accuracy) on the unique closed
/// communicating class, with a Cesaro-damped power-iteration polish if the
/// residual is not yet below tolerance.
fn solve_stationary(p: &Array2<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let closed = closed_classes(p);
    if closed.len() != 1 {
        return Err(Error::NonConvergence {
            what: "stationary distribution (chain is reducible)",
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    let class = &closed[0];
    let sub = Array2::from_shape_fn((class.len(), class.len()), |(a, b)| p[[class[a], class[b]]]);
    let sub_pi = gth(&sub);
    let mut pi = vec![0.0; n];
    for (k, &i) in class.iter().enumerate() {
        pi[i] = sub_pi[k];
    }

    let residual = |pi: &[f64]| l1_view(ArrayView1::from(pi).dot(p).view(), pi);
    let mut r = residual(&pi);
    let mut iter = 0;
    while r > STATIONARY_TOL && iter < POWER_MAX_ITER {
        let next = ArrayView1::from(&pi[..]).dot(p);
        for (v, nv) in pi.iter_mut().zip(next.iter()) {
            *v = 0.5 * (*v + nv);
        }
        iter += 1;
        if iter % 16 == 0 {
            r = residual(&pi);
        }
    }
    if r > STATIONARY_TOL {
        return Err(Error::NonConvergence {
            what: "stationary distribution",
            iterations: iter,
            residual: r,
        });
    }
    Ok(pi)
}

/// GTH elimination for an irreducible stochastic matrix.
fn gth(p: &Array2<f64>) -> Vec<f64> {
    let n = p.nrows();
    let mut a = p.clone();
    for k in (1..n).rev() {
        let s: f64 = a.slice(s![k, ..k]).sum();
        let row_k: Vec<f64> = a.slice(s![k, ..k]).to_vec();
        for i in 0..k {
            let f = a[[i, k]] / s;
            a[[i, k]] = f;
            if f != 0.0 {
                let mut row = a.slice_mut(s![i, ..k]);
                for (dst, &src) in row.iter_mut().zip(&row_k) {
                    *dst += f * src;
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * a[[i, j]]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    pi
}

/// Closed communicating classes of the transition graph, each sorted.
fn closed_classes(p: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = p.nrows();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| p[[i, j]] > 0.0).collect()).collect();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, js) in succ.iter().enumerate() {
        for &j in js {
            pred[j].push(i);
        }
    }
    // Kosaraju: finish order on the graph, then components on the reverse.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            if next < succ[v].len() {
                top.1 += 1;
                let w = succ[v][next];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = n_comp;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &pred[v] {
                if comp[w] == usize::MAX {
                    comp[w] = n_comp;
                    stack.push(w);
                }
            }
        }
        n_comp += 1;
    }
    let mut closed = vec![true; n_comp];
    for (i, js) in succ.iter().enumerate() {
        if js.iter().any(|&j| comp[j] != comp[i]) {
            closed[comp[i]] = false;
        }
    }
    (0..n_comp)
        .filter(|&c| closed[c])
        .map(|c| (0..n).filter(|&i| comp[i] == c).collect())
        .collect()
}

/// Equal bins on `[-L, L]`; row `i` is the law of `g(x_i) + e` binned, with
/// the mass beyond `+-L` folded into the end bins.
pub fn discretize(model: &ScalarModel, half_width: f64, bins: usize) -> Result<FiniteChain> {
    discretize_with_cap(model, half_width, bins, DEFAULT_MAX_ENTRIES)
}

pub fn discretize_with_cap(
    model: &ScalarModel,
    half_width: f64,
    bins: usize,
    max_entries: usize,
) -> Result<FiniteChain> {
    if bins < 2 {
        return Err(Error::invalid("discretization needs N >= 2 bins"));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::invalid("discretization needs L > 0"));
    }
    match bins.checked_mul(bins) {
        Some(e) if e <= max_entries => {}
        _ => {
            return Err(Error::MemoryCap {
                states: bins,
                cap: max_entries,
            })
        }
    }
    let h = 2.0 * half_width / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| -half_width + k as f64 * h).collect();
    let states: Vec<f64> = (0..bins).map(|k| -half_width + (k as f64 + 0.5) * h).collect();
    let noise = model.noise;
    let rows: Vec<(Vec<f64>, f64)> = states
        .par_iter()
        .map(|&x| {
            let y = model.g(x);
            let cdf: Vec<f64> = edges.iter().map(|&e| noise.cdf(e - y)).collect();
            let sf: Vec<f64> = edges.iter().map(|&e| noise.sf(e - y)).collect();
            let mut row = vec![0.0; bins];
            for j in 0..bins {
                // Difference on the side of the law that keeps precision.
                row[j] = if edges[j] - y >= 0.0 {
                    sf[j] - sf[j + 1]
                } else {
                    cdf[j + 1] - cdf[j]
                }
                .max(0.0);
            }
            let leaked = cdf[0] + sf[bins];
            row[0] += cdf[0];
            row[bins - 1] += sf[bins];
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            (row, leaked)
        })
        .collect();
    let mut p = Array2::zeros((bins, bins));
    let mut leaked_mass_max: f64 = 0.0;
    for (i, (row, leaked)) in rows.into_iter().enumerate() {
        p.row_mut(i).assign(&Array1::from(row));
        leaked_mass_max = leaked_mass_max.max(leaked);
    }
    FiniteChain::build(
        states,
        p,
        Some(Truncation {
            half_width,
            bins,
            leaked_mass_max,
        }),
    )
}

pub fn stationary(chain: &FiniteChain) -> Distribution {
    Distribution {
        weights: chain.pi.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    FromState(usize),
    FromDist(Distribution),
    AveragePi,
}

/// Exact TV profile for `n = 1..n_max`, by one pass of iterated products.
///
/// `FromState`/`FromDist` give `||mu P^n - pi||` (kind `TvProfileMu`);
/// `AveragePi` gives `sum_x pi(x) ||P^n(x, .) - pi||` (kind `TvProfilePi`).
/// The series floor is the chain's truncation floor.
pub fn tv_profile(chain: &FiniteChain, initial: &Initial, n_max: usize) -> Result<MixingSeries> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be >= 1"));
    }
    let pi = chain.pi();
    let mut series = match initial {
        Initial::AveragePi => {
            let mut series = MixingSeries::new(SeriesKind::TvProfilePi, Provenance::Exact);
            let mut q = chain.p.clone();
            for n in 1..=n_max {
                if n > 1 {
                    q = blocked_product(&q, &chain.p);
                }
                series.push(n as u64, weighted_row_tv(&q, pi, pi), 0.0);
            }
            series
        }
        Initial::FromState(_) | Initial::FromDist(_) => {
            let mu = match initial {
                Initial::FromState(i) => Distribution::point_mass(chain.n_states(), *i)?,
                Initial::FromDist(d) => {
                    chain.check_dist(d)?;
                    d.clone()
                }
                Initial::AveragePi => unreachable!(),
            };
            let mut series = MixingSeries::new(SeriesKind::TvProfileMu, Provenance::Exact);
            let mut v = mu.weights;
            for n in 1..=n_max {
                v = chain.propagate(&v);
                series.push(n as u64, l1(&v, pi), 0.0);
            }
            series
        }
    };
    series.floor = chain.truncation_floor();
    Ok(series)
}

/// `beta(n) = 1/2 sum_x pi(x) ||P^n(x, .) - pi||`.
pub fn beta_stationary(chain: &FiniteChain, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("beta needs n >= 1"));
    }
    let q = chain.power(n);
    Ok(0.5 * weighted_row_tv(&q, chain.pi(), chain.pi()))
}

/// `beta(n)` for `n = 1..n_max` in one pass, with the truncation floor and a
/// spectral-gap estimate (decay rate over the last decade) in the metadata.
pub fn beta_stationary_series(chain: &FiniteChain, n_max: usize) -> Result<MixingSeries> {
    let tv = tv_profile(chain, &Initial::AveragePi, n_max)?;
    let mut series = MixingSeries::new(SeriesKind::BetaStationary, Provenance::Exact);
    for e in &tv.entries {
        series.push(e.n, 0.5 * e.value, 0.0);
    }
    series.floor = 0.5 * tv.floor.max(2.0 * FLOAT_FLOOR);
    if let Some(gap) = tail_decay_rate(&series) {
        series.metadata.insert("tail_decay_rate".into(), format!("{gap:?}"));
    }
    Ok(series)
}

/// `-(ln v(n_hi) - ln v(n_lo)) / (n_hi - n_lo)` over the last decade of
/// values above `FLOAT_FLOOR`: the geometric rate the truncated chain is
/// settling into.
pub fn tail_decay_rate(series: &MixingSeries) -> Option<f64> {
    let pos: Vec<_> = series.entries.iter().filter(|e| e.value > FLOAT_FLOOR).collect();
    let last = pos.last()?;
    let first = pos.iter().find(|e| e.n >= (last.n / 10).max(1))?;
    if first.n >= last.n {
        return None;
    }
    Some(-(last.value.ln() - first.value.ln()) / (last.n - first.n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaGeneral {
    pub value: f64,
    /// The `m` attaining the maximum.
    pub argmax_m: usize,
    /// Growth of the running maximum at the last `m`; zero means the
    /// truncation at `m_max` changed nothing at the end.
    pub last_increment: f64,
}

/// `max_{m <= m_max} 1/2 sum_x (mu P^m)(x) ||P^n(x, .) - mu P^{n+m}||`.
pub fn beta_general(chain: &FiniteChain, mu: &Distribution, n: usize, m_max: usize) -> Result<BetaGeneral> {
    if n < 1 {
        return Err(Error::invalid("beta needs n >= 1"));
    }
    chain.check_dist(mu)?;
    let pn = chain.power(n);
    Ok(beta_general_with_power(chain, mu, &pn, m_max))
}

fn beta_general_with_power(chain: &FiniteChain, mu: &Distribution, pn: &Array2<f64>, m_max: usize) -> BetaGeneral {
    let mut mu_m = mu.weights.clone();
    let mut best = f64::NEG_INFINITY;
    let mut argmax_m = 0;
    let mut last_increment = 0.0;
    for m in 0..=m_max {
        if m > 0 {
            mu_m = chain.propagate(&mu_m);
        }
        let target = ArrayView1::from(&mu_m[..]).dot(pn).to_vec();
        let val = 0.5 * weighted_row_tv(pn, &mu_m, &target);
        let prev = best;
        if val > best {
            best = val;
            argmax_m = m;
        }
        if m == m_max {
            last_increment = if m == 0 { 0.0 } else { best - prev };
        }
    }
    BetaGeneral {
        value: best,
        argmax_m,
        last_increment,
    }
}

/// `beta_general` for `n = 1..n_max`, sharing the matrix powers.
pub fn beta_general_series(chain: &FiniteChain, mu: &Distribution, n_max: usize, m_max: usize) -> Result<MixingSeries> {
    chain.check_dist(mu)?;
    let mut series = MixingSeries::new(SeriesKind::BetaGeneral, Provenance::Exact);
    let mut q = chain.p.clone();
    let mut worst_increment: f64 = 0.0;
    for n in 1..=n_max {
        if n > 1 {
            q = blocked_product(&q, &chain.p);
        }
        let b = beta_general_with_power(chain, mu, &q, m_max);
        worst_increment = worst_increment.max(b.last_increment);
        series.push(n as u64, b.value, 0.0);
    }
    series.floor = chain.truncation_floor();
    series.metadata.insert("m_max".into(), m_max.to_string());
    series
        .metadata
        .insert("max_last_increment".into(), format!("{worst_increment:?}"));
    Ok(series)
}

/// `1/2 sum_{x,y} |Pr(X_m = x, X_{n+m} = y) - Pr(X_m = x) Pr(X_{n+m} = y)|`
/// with `X_0 ~ mu`, by plain loops over the joint law. For small chains only.
pub fn brute_force_beta_oracle(chain: &FiniteChain, n: usize, mu: &Distribution, m: usize) -> Result<f64> {
    chain.check_dist(mu)?;
    let k = chain.n_states();
    if k > 50 {
        return Err(Error::invalid("brute-force oracle is limited to 50 states"));
    }
    let p: Vec<Vec<f64>> = chain.p.outer_iter().map(|r| r.to_vec()).collect();
    let step = |v: &[f64]| -> Vec<f64> { (0..k).map(|y| (0..k).map(|x| v[x] * p[x][y]).sum()).collect() };
    let mut a = mu.weights.clone();
    for _ in 0..m {
        a = step(&a);
    }
    // rows of P^n from unit vectors
    let pn: Vec<Vec<f64>> = (0..k)
        .map(|x| {
            let mut e = vec![0.0; k];
            e[x] = 1.0;
            for _ in 0..n {
                e = step(&e);
            }
            e
        })
        .collect();
    let b: Vec<f64> = (0..k).map(|y| (0..k).map(|x| a[x] * pn[x][y]).sum()).collect();
    let mut total = 0.0;
    for x in 0..k {
        for y in 0..k {
            total += (a[x] * pn[x][y] - a[x] * b[y]).abs();
        }
    }
    Ok(0.5 * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiebscherReport {
    pub n: usize,
    pub n1: usize,
    pub bound: f64,
    pub beta_exact: f64,
}

/// Both sides of `beta(n) <= 1/2 int pi ||P^{n1} - pi|| + 3/2 int mu ||P^{n1} - pi||`
/// with `n1 = floor(n/2)`; `beta_exact` is `beta_general` with `m_max`.
pub fn liebscher_bound(chain: &FiniteChain, mu: &Distribution, n: usize, m_max: usize) -> Result<LiebscherReport> {
    if n < 1 {
        return Err(Error::invalid("Liebscher bound needs n >= 1"));
    }
    chain.check_dist(mu)?;
    let n1 = n / 2;
    let q = chain.power(n1);
    let pi = chain.pi();
    let s_pi = weighted_row_tv(&q, pi, pi);
    let s_mu = weighted_row_tv(&q, mu.weights(), pi);
    let beta = beta_general(chain, mu, n, m_max)?;
    Ok(LiebscherReport {
        n,
        n1,
        bound: 0.5 * s_pi + 1.5 * s_mu,
        beta_exact: beta.value,
    })
}
