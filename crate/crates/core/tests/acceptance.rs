//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mixrate::chain_models::{make_setar, NoiseSpec, SetarParams};
use mixrate::drift_verifier::{default_grid, verify_drift_subg, DriftFunction};
use mixrate::finite_chain::{
    beta_stationary, brute_force_beta_oracle, liebscher_bound, Distribution, FiniteChain, DEFAULT_M_MAX,
};
use mixrate::harness::{preset, run_experiment, RunOptions, DEFAULT_PRESET_SEED};
use mixrate::rate_calculus::{check_submultiplicative, ratio_bound_halving, PhiFunction, PhiParams, RateFunction};
use mixrate::rate_fit::{fit_rate, FitClass};
use mixrate::rng::StreamSeed;
use mixrate::series::{MixingSeries, Provenance, SeriesKind};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_chain(rng: &mut impl Rng, n: usize) -> FiniteChain {
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let t: f64 = row.iter().sum();
        for j in 0..n {
            p[[i, j]] = row[j] / t;
        }
    }
    FiniteChain::from_matrix((0..n).map(|i| i as f64).collect(), p).unwrap()
}

fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (k - 1) as f64).exp())
        .collect()
}

fn rate_calculus_exactness() -> Check {
    let phi = PhiFunction::new(PhiParams::Polynomial { c: 1.0, alpha: 0.5 }).unwrap();
    let mut zs = vec![0.0];
    zs.extend(log_space(1e-3, 1e4, 99));
    let mut worst = 0.0f64;
    for &z in &zs {
        let numeric = phi.eval(phi.h_inv_numeric(z).map_err(|e| e.to_string())?);
        let exact = 1.0 + z / 2.0;
        worst = worst.max((numeric - exact).abs() / exact);
    }
    ensure(worst <= 1e-6, format!("closed form rel err {worst:e}"))?;
    let ns = log_space(1e2, 1e6, 200);
    let mut bands = vec![];
    for alpha in [0.25, 0.5, 0.75] {
        let phi = PhiFunction::new(PhiParams::Polynomial { c: 1.0, alpha }).unwrap();
        let p = alpha / (1.0 - alpha);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &n in &ns {
            let q = (phi.ln_r(n).map_err(|e| e.to_string())? - p * n.ln()).exp();
            lo = lo.min(q);
            hi = hi.max(q);
        }
        ensure(lo > 0.0 && hi < 2.0 * lo, format!("alpha {alpha}: band [{lo}, {hi}]"))?;
        bands.push(format!("{alpha}:[{lo:.3},{hi:.3}]"));
    }
    Ok(format!("max rel err {worst:.1e}; bands {}", bands.join(" ")))
}

fn submultiplicativity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(u64, u64)> = (0..500)
        .map(|_| (rng.random_range(1..=1000), rng.random_range(1..=1000)))
        .collect();
    let mut out = vec![];
    for params in [
        PhiParams::Polynomial { c: 1.0, alpha: 0.5 },
        PhiParams::SubexpLog {
            c: 1.0,
            v0: std::f64::consts::E.powi(2),
            alpha: 1.0,
        },
        PhiParams::Logarithmic { c: 1.0, alpha: 1.0 },
    ] {
        let rate = RateFunction::from_phi(PhiFunction::new(params).unwrap());
        let rep = check_submultiplicative(&rate, &pairs).map_err(|e| e.to_string())?;
        ensure(
            rep.max_ratio <= 1.0 + 1e-10,
            format!("{params:?}: max ratio {}", rep.max_ratio),
        )?;
        out.push(format!("{:.6}", rep.max_ratio));
    }
    Ok(format!("max ratios {}", out.join(", ")))
}

fn two_state_beta() -> Check {
    let chain = FiniteChain::two_state(0.25, 0.25).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=40 {
        let b = beta_stationary(&chain, n).map_err(|e| e.to_string())?;
        worst = worst.max((b - 0.5f64.powi(n as i32 + 1)).abs());
    }
    ensure(worst <= 1e-12, format!("max abs err {worst:e}"))?;
    Ok(format!("max abs err {worst:.1e}"))
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let k = rng.random_range(2..=50);
        let chain = random_chain(&mut rng, k);
        let pi = Distribution::normalized(chain.pi().to_vec()).unwrap();
        for n in [1, 2, 3, 5, 8] {
            let oracle = brute_force_beta_oracle(&chain, n, &pi, 0).map_err(|e| e.to_string())?;
            let fast = beta_stationary(&chain, n).map_err(|e| e.to_string())?;
            worst = worst.max((oracle - fast).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max abs diff {worst:e}"))?;
    Ok(format!("max abs diff {worst:.1e}"))
}

fn mixing_bound_inequality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..20 {
        let chain = random_chain(&mut rng, 6);
        for _ in 0..5 {
            let mu = Distribution::normalized((0..6).map(|_| rng.random::<f64>()).collect()).unwrap();
            for n in 1..=12 {
                let rep = liebscher_bound(&chain, &mu, n, DEFAULT_M_MAX).map_err(|e| e.to_string())?;
                ensure(
                    rep.beta_exact <= rep.bound,
                    format!("n={n}: beta {} > bound {}", rep.beta_exact, rep.bound),
                )?;
                min_gap = min_gap.min(rep.bound - rep.beta_exact);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases, min slack {min_gap:.2e}"))
}

fn ratio_halving() -> Check {
    let r = RateFunction::subexponential(1.0, 0.5);
    let n_max = 1_000_000;
    let small = ratio_bound_halving(&RateFunction::subexponential(0.3, 0.5), &r, n_max).map_err(|e| e.to_string())?;
    ensure(small.argmax < 100, format!("c~=0.3: argmax {}", small.argmax))?;
    ensure(
        small.nonincreasing_after(100),
        "c~=0.3: block maxima increase after n=100",
    )?;
    let big = ratio_bound_halving(&RateFunction::subexponential(0.9, 0.5), &r, n_max).map_err(|e| e.to_string())?;
    let cap = 1e12f64;
    ensure(
        big.ln_sup > cap.ln(),
        format!("c~=0.9: ln sup {} below cap", big.ln_sup),
    )?;
    Ok(format!(
        "c~=0.3 sup {:.3} at n={}; c~=0.9 ln sup {:.1}",
        small.sup, small.argmax, big.ln_sup
    ))
}

fn student_drift() -> Check {
    let params = SetarParams::new(vec![0.0], vec![1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let model = make_setar(params, NoiseSpec::student_like(2.0, 1.0).unwrap()).unwrap();
    let phi = PhiFunction::new(PhiParams::Polynomial { c: 0.05, alpha: 0.5 }).unwrap();
    let grid = default_grid(50.0).unwrap();
    let mut rng = StreamSeed::new(DEFAULT_PRESET_SEED).stream("drift", 0);
    let rep = verify_drift_subg(
        &model,
        &DriftFunction::PolyMoment { s0: 2.0 },
        &phi,
        [-50.0, 50.0],
        &grid,
        100_000,
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        rep.holds && rep.failing_points == 0,
        format!("status {:?}, {} failing", rep.status, rep.failing_points),
    )?;
    Ok(format!("holds over {} grid points, b = {:.3}", rep.grid.len(), rep.b))
}

/// CSV artifact hashes of each preset at the default seed, shared between
/// the class-recovery and determinism criteria.
type CsvHashes = BTreeMap<&'static str, BTreeMap<String, String>>;

fn csv_hashes(outcome: &mixrate::harness::RunOutcome) -> BTreeMap<String, String> {
    outcome
        .manifest
        .artifacts
        .iter()
        .filter(|a| a.file.ends_with(".csv"))
        .map(|a| (a.file.clone(), a.sha256.clone()))
        .collect()
}

fn run_preset(name: &str, seed: u64, threads: usize) -> Result<mixrate::harness::RunOutcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = preset(name, seed).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        output_dir: Some(dir.path().to_path_buf()),
        threads: Some(threads),
    };
    run_experiment(&cfg, &opts).map_err(|e| e.to_string())
}

fn preset_recovery(hashes: &mut CsvHashes) -> Check {
    let mut lines = vec![];
    for name in ["setar_7d_gaussian", "setar_7d_weibull_k05", "setar_7d_student_s2"] {
        let mut classes = vec![];
        for k in 0..3 {
            let seed = DEFAULT_PRESET_SEED + k;
            let t = Instant::now();
            let out = run_preset(name, seed, 4)?;
            let elapsed = t.elapsed();
            ensure(elapsed < Duration::from_secs(600), format!("{name}: {elapsed:?}"))?;
            if k == 0 {
                hashes.insert(name, csv_hashes(&out));
            }
            let fit = out.report.fit("beta").ok_or(format!("{name}: no beta fit"))?;
            let exponent = fit.params.as_ref().map(|p| p.exponent().value).unwrap_or(f64::NAN);
            let ok = match name {
                "setar_7d_gaussian" => fit.class == FitClass::Geometric,
                "setar_7d_weibull_k05" => fit.class == FitClass::Subexponential && (0.35..=0.65).contains(&exponent),
                _ => fit.class == FitClass::Polynomial && (0.5..=1.5).contains(&exponent),
            };
            ensure(ok, format!("{name} seed {seed}: {} exponent {exponent}", fit.class))?;
            ensure(
                out.report.regime.to_string() == "7d",
                format!("{name}: regime {}", out.report.regime),
            )?;
            classes.push(format!("{}({exponent:.3})", fit.class));
        }
        lines.push(format!("{name} {}", classes.join("/")));
    }
    Ok(lines.join("; "))
}

fn determinism(hashes: &CsvHashes) -> Check {
    let mut compared = 0;
    for (name, want) in hashes {
        let out = run_preset(name, DEFAULT_PRESET_SEED, 1)?;
        let got = csv_hashes(&out);
        ensure(!got.is_empty(), format!("{name}: no CSV artifacts"))?;
        ensure(
            &got == want,
            format!("{name}: CSV artifacts differ between 4 threads and 1 thread"),
        )?;
        compared += got.len();
    }
    ensure(hashes.len() == 3, "preset runs missing")?;
    Ok(format!("{compared} CSV files identical at 1 and 4 threads"))
}

fn synthetic_calibration() -> Check {
    fn series(ns: std::ops::RangeInclusive<u64>, f: impl Fn(f64) -> f64) -> MixingSeries {
        let mut s = MixingSeries::new(SeriesKind::BetaStationary, Provenance::Exact);
        for n in ns {
            s.push(n, f(n as f64), 0.0);
        }
        s
    }
    let noise = Normal::<f64>::new(0.0, 0.05).unwrap();
    let mut rates = vec![];
    for (clean, want) in [
        (series(1..=60, |n| 0.8f64.powf(n)), FitClass::Geometric),
        (series(1..=200, |n| (-0.7 * n.sqrt()).exp()), FitClass::Subexponential),
        (series(1..=200, |n| 1.0 / n), FitClass::Polynomial),
    ] {
        let mut hits = 0;
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut s = clean.clone();
            for e in &mut s.entries {
                e.value *= noise.sample(&mut rng).exp();
            }
            if fit_rate(&s, None).map_err(|e| e.to_string())?.class == want {
                hits += 1;
            }
        }
        let rate = hits as f64 / 200.0;
        ensure(rate >= 0.95, format!("{want}: recovered {rate}"))?;
        rates.push(format!("{want} {rate:.3}"));
    }
    Ok(rates.join(", "))
}

fn main() {
    let mut hashes = CsvHashes::new();
    let mut failed = 0;
    let mut report = |id: usize, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {id}: PASS ({secs:.1}s) {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id}: FAIL ({secs:.1}s) {why}");
            }
        }
    };
    report(1, &mut rate_calculus_exactness);
    report(2, &mut submultiplicativity);
    report(3, &mut two_state_beta);
    report(4, &mut oracle_equivalence);
    report(5, &mut mixing_bound_inequality);
    report(6, &mut ratio_halving);
    report(7, &mut student_drift);
    report(8, &mut || preset_recovery(&mut hashes));
    report(9, &mut synthetic_calibration);
    report(10, &mut || determinism(&hashes));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
