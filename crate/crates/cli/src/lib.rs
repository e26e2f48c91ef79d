//! Command-line front end: network and demand generation, single runs,
//! fleet-size sweeps and the analytic model.

use std::fs;
use std::path::{Path, PathBuf};
use std::ffi::OsString;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fleetsim::demand::{generate_demand, load_requests, write_requests, DemandError, OdMatrix, OdSampling, TripRequest};
use fleetsim::engine::{run_simulation, write_result, SimConfig, SimError};
use fleetsim::exec::Execution;
use fleetsim::experiment::{sweep, write_sweep, ExperimentError, FleetSizes, SizeOutcome, StabilityCriteria, SweepSpec};
use fleetsim::network::{generate_grid, load_network, save_network, NetworkError, RoadNetwork};
use fleetsim::queueing::{analyze, QueueError, QueueParams};

#[derive(Parser)]
#[command(name = "fleetsim", version, about = "Ride-sourcing fleet simulator and M/M/c fleet-sizing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a rectangular grid road network.
    GenNetwork(GenNetwork),
    /// Sample Poisson trip requests on a network.
    GenDemand(GenDemand),
    /// Run one simulation and write its trace, traveller and summary files.
    Simulate(Simulate),
    /// Run a fleet-size sweep or a critical-size bisection.
    Sweep(Sweep),
    /// Evaluate the analytic queueing model for a parameter file.
    Analytic(Analytic),
}

#[derive(Args)]
struct GenNetwork {
    /// Grid size as ROWSxCOLS, e.g. 40x40.
    #[arg(long, value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long)]
    block_m: f64,
    #[arg(long)]
    speed_kmh: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OdMode {
    Uniform,
    Zonal,
}

#[derive(Args)]
struct GenDemand {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    lambda_per_h: f64,
    #[arg(long)]
    horizon_h: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    od: OdMode,
    /// Zone matrix file, required with `--od zonal`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunOptions {
    /// Simulated hours; defaults to the whole hours covering every request.
    #[arg(long)]
    horizon_h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    dt_s: f64,
    #[arg(long, default_value_t = 0.0)]
    dwell_load_s: f64,
    #[arg(long, default_value_t = 0.0)]
    dwell_unload_s: f64,
    /// Straight-line candidates kept before routing; 0 routes every idle vehicle.
    #[arg(long, default_value_t = fleetsim::agents::DEFAULT_PREFILTER_K)]
    prefilter_k: usize,
    /// Steady-state tail window in seconds; defaults to the last third.
    #[arg(long)]
    tail_window_s: Option<f64>,
}

#[derive(Args)]
struct Simulate {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    req: PathBuf,
    #[arg(long)]
    fleet: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["sizes", "range", "bisect"])))]
struct Sweep {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    req: PathBuf,
    /// Comma-separated fleet sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Fleet sizes as MIN:MAX:STRIDE.
    #[arg(long, value_parser = parse_range)]
    range: Option<(usize, usize, usize)>,
    /// Bisect for the critical fleet size.
    #[arg(long)]
    bisect: bool,
    /// Unstable lower end of the bisection bracket.
    #[arg(long, requires = "bisect")]
    lo: Option<usize>,
    /// Stable upper end of the bisection bracket.
    #[arg(long, requires = "bisect")]
    hi: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    replications: u32,
    /// Stability window in seconds; defaults to the run's tail window.
    #[arg(long)]
    window_s: Option<f64>,
    #[arg(long, default_value_t = fleetsim::experiment::DEFAULT_SLOPE_FRACTION)]
    slope_fraction: f64,
    #[arg(long, default_value_t = fleetsim::experiment::DEFAULT_LEVEL_FACTOR)]
    level_factor: f64,
    /// Run sweep members one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Args)]
struct Analytic {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    fluid_trace: Option<PathBuf>,
}

/// Bad user input caught before reaching the library.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r = r.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("cols: {e}"))?;
    Ok((r, c))
}

fn parse_range(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, stride] = parts[..] else {
        return Err(format!("expected MIN:MAX:STRIDE, got {s:?}"));
    };
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(min)?, p(max)?, p(stride)?))
}

fn load_net(path: &Path) -> Result<RoadNetwork> {
    let (net, dropped) = load_network(path).with_context(|| format!("loading network {}", path.display()))?;
    if dropped.nodes_dropped > 0 {
        eprintln!(
            "note: kept the largest strongly connected component ({} nodes and {} links dropped)",
            dropped.nodes_dropped, dropped.links_dropped
        );
    }
    Ok(net)
}

fn load_req(path: &Path) -> Result<Vec<TripRequest>> {
    load_requests(path).with_context(|| format!("loading requests {}", path.display()))
}

fn base_config(run: &RunOptions, requests: &[TripRequest], fleet: usize, seed: u64) -> Result<SimConfig> {
    let horizon_h = match run.horizon_h {
        Some(h) => h,
        None => requests.last().map_or(1.0, |r| (r.request_time_s / 3600.0).floor() + 1.0),
    };
    if !(horizon_h.is_finite() && horizon_h > 0.0) {
        bail!(Invalid(format!("horizon must be positive, got {horizon_h} h")));
    }
    let mut cfg = SimConfig::new(fleet, horizon_h * 3600.0, seed);
    cfg.dt_s = run.dt_s;
    cfg.dwell_load_s = run.dwell_load_s;
    cfg.dwell_unload_s = run.dwell_unload_s;
    cfg.prefilter_k = run.prefilter_k;
    cfg.tail_window_s = run.tail_window_s;
    Ok(cfg)
}

fn gen_network(a: GenNetwork) -> Result<()> {
    let (rows, cols) = a.grid;
    let net = generate_grid(rows, cols, a.block_m, a.speed_kmh)?;
    save_network(&a.out, &net)?;
    println!("wrote {} nodes and {} links to {}", net.node_count(), net.link_count(), a.out.display());
    Ok(())
}

fn gen_demand(a: GenDemand) -> Result<()> {
    let net = load_net(&a.net)?;
    let matrix = match (a.od, &a.matrix) {
        (OdMode::Uniform, None) => None,
        (OdMode::Zonal, Some(path)) => Some(OdMatrix::load(path).with_context(|| format!("loading {}", path.display()))?),
        (OdMode::Uniform, Some(_)) => bail!(Invalid("--matrix only applies to --od zonal".into())),
        (OdMode::Zonal, None) => bail!(Invalid("--od zonal requires --matrix".into())),
    };
    let od = matrix.as_ref().map_or(OdSampling::Uniform, OdSampling::Zonal);
    let requests = generate_demand(&net, a.lambda_per_h, a.horizon_h, a.seed, od)?;
    write_requests(&a.out, &requests)?;
    println!("wrote {} requests to {}", requests.len(), a.out.display());
    Ok(())
}

fn simulate(a: Simulate) -> Result<()> {
    let net = load_net(&a.net)?;
    let requests = load_req(&a.req)?;
    let cfg = base_config(&a.run, &requests, a.fleet, a.seed)?;
    let result = run_simulation(&net, &requests, &cfg)?;
    write_result(&a.out_dir, &result)?;
    let s = &result.summary;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "served {} / {} (in flight {}, unserved {}); mean queue {:.2}, max queue {}",
        s.served, s.total_requests, s.in_flight, s.unserved, s.mean_queue_length, s.max_queue_length
    );
    Ok(())
}

fn dump_outcome(dir: &Path, label: &str, outcome: &SizeOutcome) -> Result<()> {
    for (rep, result) in outcome.results.iter().enumerate() {
        let sub = dir.join(format!("{label}_c{}_r{rep}", outcome.fleet_size));
        write_result(&sub, result)?;
        eprintln!("  run for c = {} written to {}", outcome.fleet_size, sub.display());
    }
    Ok(())
}

fn run_sweep(a: Sweep) -> Result<()> {
    let net = load_net(&a.net)?;
    let requests = load_req(&a.req)?;
    let sizes = match (a.sizes, a.range, a.bisect) {
        (Some(v), None, false) => FleetSizes::List(v),
        (None, Some((min, max, stride)), false) => FleetSizes::Range { min, max, stride },
        (None, None, true) => FleetSizes::Bisect { lo: a.lo, hi: a.hi },
        _ => bail!(Invalid("choose exactly one of --sizes, --range, --bisect".into())),
    };
    let mut spec = SweepSpec::new(sizes, base_config(&a.run, &requests, 0, a.seed)?);
    spec.replications = a.replications;
    spec.criteria = StabilityCriteria {
        window_s: a.window_s,
        slope_fraction: a.slope_fraction,
        level_factor: a.level_factor,
    };
    spec.execution = if a.sequential { Execution::Sequential } else { Execution::Parallel };

    let report = match sweep(&net, &requests, &spec) {
        Ok(r) => r,
        Err(ExperimentError::InvertedBracket { lo, lo_stable, hi, hi_stable, outcomes }) => {
            if let Some(pair) = outcomes {
                fs::create_dir_all(&a.out_dir)?;
                dump_outcome(&a.out_dir, "bracket_lo", &pair.0)?;
                dump_outcome(&a.out_dir, "bracket_hi", &pair.1)?;
            }
            return Err(ExperimentError::InvertedBracket { lo, lo_stable, hi, hi_stable, outcomes: None }.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_sweep(&a.out_dir, &report)?;

    for s in &report.sizes {
        let word = if s.stable { "stable" } else { "unstable" };
        match &s.error {
            Some(e) => println!("c = {:>5}  error: {e}", s.fleet_size),
            None => println!("c = {:>5}  {word}", s.fleet_size),
        }
    }
    if let Some(b) = &report.critical {
        println!("critical fleet size: {} (largest unstable: {})", b.stable, b.unstable);
    }
    if let Some((stable, unstable)) = report.monotonicity_violation {
        let find = |c: usize| report.sizes.iter().find(|s| s.fleet_size == c).expect("swept size");
        eprintln!("stability is not monotone in fleet size:");
        dump_outcome(&a.out_dir, "stable", find(stable))?;
        dump_outcome(&a.out_dir, "unstable", find(unstable))?;
        bail!("c = {stable} is stable but the larger c = {unstable} is unstable");
    }
    if let Some(e) = report.sizes.iter().find_map(|s| s.error.as_ref()) {
        bail!("at least one run failed: {e}");
    }
    Ok(())
}

fn analytic(a: Analytic) -> Result<()> {
    let text = fs::read_to_string(&a.params).with_context(|| format!("reading {}", a.params.display()))?;
    let params: QueueParams =
        serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", a.params.display())))?;
    let (report, trace) = analyze(&params)?;
    fs::write(&a.out, serde_json::to_string_pretty(&report)? + "\n")?;
    if let Some(path) = &a.fluid_trace {
        fs::write(path, trace.to_csv())?;
    }
    println!(
        "rho = {:.6} ({}), base fleet {}, fluid fleet {}",
        report.rho,
        if report.stable { "stable" } else { "unstable" },
        report.base_fleet.ceiling,
        report.fluid_fleet.c0
    );
    Ok(())
}

/// 1 for invalid input, 2 for anything that failed while running.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let validation = if cause.is::<Invalid>() {
            Some(true)
        } else if let Some(e) = cause.downcast_ref::<NetworkError>() {
            Some(e.is_validation())
        } else if let Some(e) = cause.downcast_ref::<DemandError>() {
            Some(e.is_validation())
        } else if let Some(e) = cause.downcast_ref::<SimError>() {
            Some(e.is_validation())
        } else if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            Some(e.is_validation())
        } else {
            cause
                .downcast_ref::<QueueError>()
                .map(|e| !matches!(e, QueueError::BracketFailure { .. }))
        };
        if let Some(v) = validation {
            return if v { 1 } else { 2 };
        }
    }
    2
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::GenNetwork(a) => gen_network(a),
        Command::GenDemand(a) => gen_demand(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Analytic(a) => analytic(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests;
