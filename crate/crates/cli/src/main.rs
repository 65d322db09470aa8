//! `calib`: simultaneous calibration bands and calibration tests for mean
//! estimates of exponential dispersion family responses.

use anyhow::Context;
use calib_cli::config::{read_config_file, DispersionSpec, RunConfig};
use calib_cli::io::{read_input_csv, write_band_csv};
use calib_cli::presets::{run_simulate, Preset, SimulateArgs};
use calib_cli::run::run_band;
use calib_cli::svg::{render_plot, PlotScale};
use calib_core::EdfFamily;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "calib",
    about = "Simultaneous calibration bands and tests for EDF mean estimates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a calibration band from a CSV of responses and mean estimates.
    Band(BandArgs),
    /// Run a seeded simulation preset and emit a metrics CSV.
    Simulate(SimArgs),
}

#[derive(clap::Args)]
struct BandArgs {
    /// Input CSV with header: y[,v],mu_hat[,rank]
    input: PathBuf,
    /// Response family: binomial|poisson|negbinomial|gamma|normal|inverse-gaussian
    #[arg(long)]
    family: Option<String>,
    /// Confidence complement in (0,1)
    #[arg(long)]
    alpha: Option<f64>,
    /// Pair strategy: full|distinct|nbh:<s>|dist:<d>
    #[arg(long)]
    pairs: Option<String>,
    /// Bin responses into this many volume-balanced bins first
    #[arg(long)]
    bins: Option<usize>,
    /// Dispersion: fixed:<phi>|pearson|deviance|mle-ig
    #[arg(long)]
    dispersion: Option<String>,
    /// Number of fitted parameters used by pearson/deviance denominators
    #[arg(long)]
    q: Option<usize>,
    /// Repair band crossings with the isotonic fit
    #[arg(long)]
    repair: bool,
    /// Also run the epsilon-miscalibration test at this tolerance
    #[arg(long)]
    epsilon: Option<f64>,
    /// Write the band table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a calibration plot (SVG)
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Plot scale
    #[arg(long, default_value = "linear")]
    scale: String,
    /// Flat key = value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SimArgs {
    /// example1 | example3 | example5
    #[arg(long)]
    preset: String,
    /// Number of replications
    #[arg(long)]
    reps: u64,
    /// Base RNG seed; replication r uses stream (seed, r)
    #[arg(long)]
    seed: u64,
    /// Sample size override
    #[arg(long)]
    n: Option<usize>,
    /// Confidence complement override
    #[arg(long)]
    alpha: Option<f64>,
    /// Also run the alpha / pair-set / binning sweeps (example1)
    #[arg(long)]
    sweeps: bool,
    /// Write the metrics CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    if let Ok(threads) = std::env::var("CALIB_THREADS") {
        if let Ok(t) = threads.trim().parse::<usize>() {
            if t >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
        }
    }
    match dispatch() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn dispatch() -> anyhow::Result<i32> {
    match Cli::parse().command {
        Command::Band(args) => band_command(args),
        Command::Simulate(args) => simulate_command(args),
    }
}

fn band_command(args: BandArgs) -> anyhow::Result<i32> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Default::default(),
    };
    let pick = |flag: Option<String>, key: &str| -> Option<String> {
        flag.or_else(|| file.get(key).cloned())
    };

    let family_str = pick(args.family, "family")
        .ok_or_else(|| anyhow::anyhow!("--family is required (or set family = ... in --config)"))?;
    let family = EdfFamily::parse(&family_str)?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => match file.get("alpha") {
            Some(s) => s.parse().context("alpha in config file")?,
            None => 0.05,
        },
    };
    let pairs = calib_cli::config::parse_pairs(
        &pick(args.pairs, "pairs").unwrap_or_else(|| "full".to_string()),
    )?;
    let dispersion = DispersionSpec::parse(
        &pick(args.dispersion, "dispersion").unwrap_or_else(|| "pearson".to_string()),
    )?;
    let bins = match args.bins {
        Some(b) => Some(b),
        None => match file.get("bins") {
            Some(s) => Some(s.parse().context("bins in config file")?),
            None => None,
        },
    };
    let epsilon = match args.epsilon {
        Some(e) => Some(e),
        None => match file.get("epsilon") {
            Some(s) => Some(s.parse().context("epsilon in config file")?),
            None => None,
        },
    };
    let q = match args.q {
        Some(q) => q,
        None => match file.get("q") {
            Some(s) => s.parse().context("q in config file")?,
            None => 0,
        },
    };
    let repair = args.repair
        || file
            .get("repair")
            .map(|s| s == "true" || s == "1")
            .unwrap_or(false);

    let cfg = RunConfig {
        family,
        alpha,
        dispersion,
        pairs,
        bins,
        repair,
        epsilon,
        q,
    };

    let rows = read_input_csv(&args.input)?;
    let outcome = run_band(rows, &cfg)?;

    if outcome.binned {
        eprintln!(
            "note: binned responses are aggregates; they follow the {} family exactly only \
             when means within each bin coincide",
            family.name()
        );
    }
    if outcome.band.crossed {
        eprintln!("note: band crosses (lower > upper somewhere); consider --repair");
    }
    eprintln!(
        "dispersion phi = {:.6}; calibration test: {}{}",
        outcome.phi,
        if outcome.calibration.rejected() { "REJECT" } else { "fail-to-reject" },
        match &outcome.epsilon {
            Some(rep) => format!(
                "; epsilon test: {}",
                if rep.rejected() { "REJECT" } else { "fail-to-reject" }
            ),
            None => String::new(),
        }
    );

    match &args.out {
        Some(path) => {
            let f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_band_csv(&outcome.records, f)?;
        }
        None => write_band_csv(&outcome.records, std::io::stdout().lock())?,
    }

    if let Some(path) = &args.plot {
        let scale = match args.scale.as_str() {
            "linear" => PlotScale::Linear,
            "log" => PlotScale::Log,
            other => anyhow::bail!("unknown scale '{other}' (expected linear|log)"),
        };
        let svg = render_plot(&outcome.records, scale)?;
        std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    }

    Ok(outcome.exit_code())
}

fn simulate_command(args: SimArgs) -> anyhow::Result<i32> {
    let sim = SimulateArgs {
        preset: Preset::parse(&args.preset)?,
        reps: args.reps,
        seed: args.seed,
        n: args.n,
        alpha: args.alpha,
        sweeps: args.sweeps,
    };
    let csv = run_simulate(&sim)?;
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(0)
}
