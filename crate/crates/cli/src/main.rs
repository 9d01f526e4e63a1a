use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eopda::evaluation::{self, Comparison};
use eopda::scenario::{Scenario, SCHEMA_HELP};
use eopda::seed::{self, Purpose};
use eopda::tracker::{self, FilterConfig, Variant};
use eopda::{io, synthesis};

/// Simulate, track and compare extended-object trackers with a radio device
/// mounted on the object.
#[derive(Parser, Debug)]
#[command(name = "eopda", version, after_long_help = SCHEMA_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate ground truth and a measurement dataset.
    Simulate(SimulateArgs),
    /// Run one tracker variant on a dataset.
    Track(TrackArgs),
    /// Monte-Carlo comparison of tracker variants.
    Compare(CompareArgs),
    /// Write the reference scenario as JSON.
    Scenario {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario JSON file; the reference scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Top-level seed; every random stream is derived from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrackArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset CSV (`n,type,j,j2,d,u`).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 1000)]
    particles: usize,
    /// One of geo, idl, a-eopda, ap-pda.
    #[arg(long, default_value = "geo")]
    variant: String,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    particles: usize,
    /// Number of Monte-Carlo runs.
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Comma-separated variant keys.
    #[arg(long, value_delimiter = ',', default_value = "geo,idl,a-eopda,ap-pda")]
    variants: Vec<String>,
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario> {
    let s = match path {
        Some(p) => Scenario::load(p).with_context(|| format!("loading scenario {}", p.display()))?,
        None => Scenario::reference(),
    };
    s.validate()?;
    Ok(s)
}

fn prepare(common: &Common) -> Result<Scenario> {
    if common.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    load_scenario(common.scenario.as_deref())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let c = &args.common;
    let scenario = prepare(c)?;
    let (truth, data) = synthesis::simulate(&scenario, c.seed)?;
    io::write_truth(&c.out.join("truth.csv"), &truth)?;
    io::write_dataset(&c.out.join("dataset.csv"), &data)?;
    scenario.save(&c.out.join("scenario.json"))?;
    let total: usize = data.frames.iter().map(|f| f.measurement_count()).sum();
    log::info!("{} steps, {} measurements", data.frames.len(), total);
    Ok(())
}

fn track(args: &TrackArgs) -> Result<()> {
    let c = &args.common;
    let scenario = prepare(c)?;
    let variant = Variant::parse(&args.variant, scenario.tracker.ideal_samples)?;
    let data = io::read_dataset(&args.dataset, &scenario)
        .with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    let mut config = FilterConfig::new(variant, args.particles);
    config.ess_threshold = scenario.tracker.ess_threshold;
    let out = tracker::run_filter(&data, &scenario, &config, seed::derive_seed(c.seed, Purpose::Run, 0))?;
    io::write_track(&c.out.join(format!("track_{}.csv", variant.key())), &out)?;
    if !out.degeneracy_steps.is_empty() {
        log::warn!("weights were reset at steps {:?}", out.degeneracy_steps);
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let c = &args.common;
    let scenario = prepare(c)?;
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let mut variants = Vec::new();
    for key in &args.variants {
        let v = Variant::parse(key, scenario.tracker.ideal_samples)?;
        if !variants.contains(&v) {
            variants.push(v);
        }
    }
    let cmp = Comparison {
        variants,
        particles: args.particles,
        runs: args.runs,
        seed: c.seed,
    };
    let batches = evaluation::run_comparison(&scenario, &cmp)?;
    let report = evaluation::summarize(&batches, &evaluation::olos_windows(&scenario))?;
    io::write_report(&c.out.join("report.json"), &report)?;
    io::write_rmse_csv(&c.out.join("rmse.csv"), &report)?;
    for v in &report.variants {
        io::write_cdf_csv(&c.out.join(format!("cdf_{}.csv", v.key)), &v.cdf)?;
        println!(
            "{:<14} avg RMSE {:.4} m  p95 {:.4} m  step {:.3} ms  resets {}",
            v.variant,
            v.avg_rmse_m,
            v.percentiles.p95,
            v.mean_step_seconds * 1e3,
            v.degeneracy_events
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Track(a) => track(a),
        Command::Compare(a) => compare(a),
        Command::Scenario { out } => Scenario::reference().save(out).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
