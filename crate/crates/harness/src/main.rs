use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use oqbm_harness::config::ExperimentKind as K;
use oqbm_harness::{load_config, report, run_kind, with_threads};

#[derive(Parser)]
#[command(name = "oqbm", version, about = "Open quantum random walk and Brownian motion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo trajectories of an open quantum walk against its channel.
    SimulateOqw(Common),
    /// Belavkin SDE ensemble against the Lindblad semigroup.
    SimulateBelavkin(Common),
    /// Position-resolved Lindblad equation on a grid.
    SolveLindblad(Common),
    /// Dilation audit: dense dilation and toy Fock register against the lattice step.
    Dilate(Common),
    /// Trajectory or channel convergence along a tau sweep.
    Converge(Common),
    /// Ballistic speeds over a coupling grid.
    Regimes(Common),
    /// Unraveling consistency on a dilated open quantum walk.
    Consistency(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "OQBM_THREADS", default_value_t = 1)]
    threads: usize,
}

impl Command {
    fn parts(&self) -> (&'static str, &'static [K], &Common) {
        match self {
            Self::SimulateOqw(c) => ("simulate-oqw", &[K::SimulateOqw], c),
            Self::SimulateBelavkin(c) => ("simulate-belavkin", &[K::SimulateBelavkin], c),
            Self::SolveLindblad(c) => ("solve-lindblad", &[K::SolveLindblad], c),
            Self::Dilate(c) => ("dilate", &[K::DilationAudit], c),
            Self::Converge(c) => ("converge", &[K::TrajectoryConvergence, K::ChannelConvergence], c),
            Self::Regimes(c) => ("regimes", &[K::RegimeMap], c),
            Self::Consistency(c) => ("consistency", &[K::ConsistencyAudit], c),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (name, kinds, common) = cli.command.parts();
    let cfg = load_config(&common.config).with_context(|| format!("config {}", common.config.display()))?;
    let kind = cfg.resolve_kind(kinds).with_context(|| format!("config {}", common.config.display()))?;
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    anyhow::ensure!(common.threads > 0, "--threads must be positive");
    let rep = with_threads(common.threads, || run_kind(&cfg, kind, seed))??;
    let out = report::emit(&rep, &common.out, &cfg.output.csv, &cfg.output.manifest, name, &common.config, common.threads)
        .with_context(|| format!("writing to {}", common.out.display()))?;
    for r in rep.failures() {
        eprintln!("FAIL {} point {} ({} = {}): {} = {:e}", rep.kind, r.point, r.parameter, r.value, r.metric, r.measured);
    }
    println!(
        "{}: {} rows, {} failed, {:.2}s -> {}",
        rep.kind,
        rep.rows.len(),
        rep.failures().count(),
        rep.wall_clock.as_secs_f64(),
        out.csv.display()
    );
    Ok(rep.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
