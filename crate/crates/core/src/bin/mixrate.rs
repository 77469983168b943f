use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mixrate::chain_models::{a1_constants, check_a1, check_grid, make_setar, NoiseSpec, ScalarModel, SetarParams};
use mixrate::finite_chain::{beta_stationary_series, discretize, DEFAULT_MAX_ENTRIES};
use mixrate::harness::{preset, run_experiment, ExperimentConfig, Manifest, RunOptions, DEFAULT_PRESET_SEED};
use mixrate::monte_carlo::{
    estimate_beta_stationary_mc, log_spaced_n, BinSpec, DEFAULT_BINS, DEFAULT_BURN_IN, MIN_STARTS,
};
use mixrate::numeric::fmt_f64;
use mixrate::rate_calculus::{is_lambda0, make_phi, r_phi_closed_form, PhiFamily, RateFunction, LAMBDA0_TOL};
use mixrate::rate_fit::{fit_rate, FitWindow};
use mixrate::rng::StreamSeed;
use mixrate::series::MixingSeries;
use mixrate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mixrate",
    version,
    about = "Ergodicity rates and beta-mixing of scalar Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate r_phi for a drift-rate family.
    Rate(RateArgs),
    /// SETAR regime and the A1 grid check.
    Classify(ClassifyArgs),
    /// Emit the discretized chain as JSON.
    Discretize(DiscretizeArgs),
    /// Stationary beta-mixing series as CSV.
    Beta(BetaArgs),
    /// Fit the decay class of a series CSV.
    Fit(FitArgs),
    /// Run a config file, a preset, or a manifest.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Linear,
    Polynomial,
    SubexpLog,
    Logarithmic,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    /// Points at which to evaluate r_phi; one value per line.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    n: Vec<f64>,
    /// Also print the closed-form rate class.
    #[arg(long)]
    closed_form: bool,
    /// Also run the Lambda_0 check up to this horizon.
    #[arg(long, num_args = 0..=1, default_missing_value = "100000")]
    lambda0: Option<u64>,
}

#[derive(Args)]
struct SetarArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thresholds: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    intercepts: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    slopes: Vec<f64>,
}

impl SetarArgs {
    fn params(&self) -> Result<SetarParams> {
        SetarParams::new(self.thresholds.clone(), self.intercepts.clone(), self.slopes.clone())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Gaussian,
    WeibullTail,
    StudentLike,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    setar: SetarArgs,
    #[arg(long, value_enum, default_value = "gaussian")]
    noise: NoiseArg,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    tail_index: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<ScalarModel> {
        let need =
            |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("--{name} is required for this noise")));
        let noise = match self.noise {
            NoiseArg::Gaussian => NoiseSpec::gaussian(self.scale)?,
            NoiseArg::WeibullTail => NoiseSpec::weibull_tail(need(self.kappa, "kappa")?, self.scale)?,
            NoiseArg::StudentLike => match self.tail_index {
                Some(a) => NoiseSpec::student_like_with_tail(need(self.s0, "s0")?, a, self.scale)?,
                None => NoiseSpec::student_like(need(self.s0, "s0")?, self.scale)?,
            },
        };
        make_setar(self.setar.params()?, noise)
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    setar: SetarArgs,
    #[arg(long)]
    m0: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    half_width: f64,
    #[arg(long)]
    bins: usize,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BetaArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Exact engine grid half-width; omit for Monte Carlo.
    #[arg(long)]
    half_width: Option<f64>,
    /// Exact engine grid size, or histogram bins for Monte Carlo.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, default_value_t = 200)]
    n_max: usize,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long, default_value_t = MIN_STARTS)]
    starts: usize,
    #[arg(long, default_value_t = 30)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_PRESET_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Series CSV with columns n,value,stderr,kind,provenance.
    csv: PathBuf,
    #[arg(long)]
    n_lo: Option<u64>,
    #[arg(long)]
    n_hi: Option<u64>,
    #[arg(long)]
    floor: Option<f64>,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Config path; same as --config.
    #[arg(conflicts_with_all = ["config", "preset", "manifest"])]
    path: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn rate(a: &RateArgs) -> Result<()> {
    let need =
        |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("--{name} is required for this family")));
    let phi = match a.family {
        Family::Linear => make_phi(PhiFamily::Linear, &[need(a.eta, "eta")?])?,
        Family::Polynomial => make_phi(PhiFamily::Polynomial, &[a.c, need(a.alpha, "alpha")?])?,
        Family::SubexpLog => make_phi(PhiFamily::SubexpLog, &[a.c, need(a.v0, "v0")?, need(a.alpha, "alpha")?])?,
        Family::Logarithmic => make_phi(PhiFamily::Logarithmic, &[a.c, need(a.alpha, "alpha")?])?,
    };
    for &n in &a.n {
        println!("{}", fmt_f64(phi.r(n)?));
    }
    if a.closed_form {
        match r_phi_closed_form(&phi) {
            Some(r) => println!("closed form: {}", serde_json::to_string(&r)?),
            None => println!("closed form: none"),
        }
    }
    if let Some(n_max) = a.lambda0 {
        let rep = is_lambda0(&RateFunction::from_phi(phi), n_max.max(2), LAMBDA0_TOL)?;
        println!("lambda0: {}", serde_json::to_string(&rep)?);
    }
    Ok(())
}

fn classify(a: &ClassifyArgs) -> Result<()> {
    let p = a.setar.params()?;
    let model = make_setar(p.clone(), NoiseSpec::gaussian(1.0)?)?;
    println!("{}", model.regime());
    let derived = a1_constants(&p);
    match (a.m0.or(derived.map(|d| d.0)), a.r.or(derived.map(|d| d.1))) {
        (Some(m0), Some(r)) => {
            let grid = check_grid(
                &p,
                mixrate::chain_models::CHECK_GRID_HALF_WIDTH.max(4.0 * m0),
                mixrate::chain_models::CHECK_GRID_STEP,
            );
            let rep = check_a1(&model, m0, r, &grid)?;
            println!(
                "A1 M0={} r={} holds={} worst_margin={} sup_inner={} (grid check, not a certificate)",
                fmt_f64(m0),
                fmt_f64(r),
                rep.holds,
                fmt_f64(rep.worst_margin),
                fmt_f64(rep.sup_inner)
            );
        }
        _ => println!("A1 constants not derivable for this regime; pass --m0 and --r"),
    }
    Ok(())
}

fn discretize_cmd(a: &DiscretizeArgs) -> Result<()> {
    let model = a.model.model()?;
    if a.bins * a.bins > DEFAULT_MAX_ENTRIES {
        return Err(Error::MemoryCap {
            states: a.bins,
            cap: DEFAULT_MAX_ENTRIES,
        });
    }
    let chain = discretize(&model, a.half_width, a.bins)?;
    let mut bytes = serde_json::to_vec(&chain.snapshot())?;
    bytes.push(b'\n');
    write_output(&a.out, &bytes)
}

fn beta_cmd(a: &BetaArgs) -> Result<()> {
    let model = a.model.model()?;
    let series = match a.half_width {
        Some(l) => {
            let bins = a
                .bins
                .ok_or_else(|| Error::Config("--bins is required with --half-width".into()))?;
            beta_stationary_series(&discretize(&model, l, bins)?, a.n_max)?
        }
        None => estimate_beta_stationary_mc(
            &model,
            &log_spaced_n(a.n_max, a.points),
            a.starts,
            a.replicates,
            &BinSpec::Central {
                bins: a.bins.unwrap_or(DEFAULT_BINS),
            },
            DEFAULT_BURN_IN,
            &StreamSeed::new(a.seed),
        )?,
    };
    write_output(&a.out, series.to_csv_string()?.as_bytes())
}

fn fit_cmd(a: &FitArgs) -> Result<()> {
    let file = std::fs::File::open(&a.csv).map_err(|e| Error::Io {
        path: a.csv.clone(),
        source: e,
    })?;
    let series = MixingSeries::read_csv(file)?;
    let window = FitWindow {
        n_lo: a.n_lo,
        n_hi: a.n_hi,
        floor: a.floor,
    };
    let rep = fit_rate(&series, Some(window))?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
        return Ok(());
    }
    println!("{}", rep.class);
    if let Some(p) = rep.params {
        println!("{}", serde_json::to_string(&p)?);
    }
    println!(
        "window {}..{} ({} points, floor {})",
        rep.window.0,
        rep.window.1,
        rep.n_points,
        fmt_f64(rep.floor_diagnostic)
    );
    if let Some(note) = rep.note {
        println!("{note}");
    }
    Ok(())
}

fn run_cmd(a: &RunArgs) -> Result<()> {
    let mut threads = a.threads;
    let mut cfg = if let Some(p) = a.path.as_ref().or(a.config.as_ref()) {
        ExperimentConfig::load(p)?
    } else if let Some(name) = &a.preset {
        preset(name, DEFAULT_PRESET_SEED)?
    } else if let Some(m) = &a.manifest {
        let m = Manifest::load(m)?;
        threads = threads.or(Some(m.threads));
        m.config
    } else {
        return Err(Error::Config("run needs a config path, --preset, or --manifest".into()));
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = run_experiment(
        &cfg,
        &RunOptions {
            output_dir: a.out.clone(),
            threads,
        },
    )?;
    let r = &out.report;
    println!("regime {}", r.regime);
    for f in &r.fits {
        let exp = f
            .report
            .params
            .map(|p| fmt_f64(p.exponent().value))
            .unwrap_or_else(|| "-".into());
        println!("fit {} {} exponent {}", f.target, f.report.class, exp);
    }
    for d in &r.drift {
        println!("drift {} holds={}", d.file, d.report.holds);
    }
    println!("artifacts in {}", out.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rate(a) => rate(a),
        Command::Classify(a) => classify(a),
        Command::Discretize(a) => discretize_cmd(a),
        Command::Beta(a) => beta_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Run(a) => run_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
