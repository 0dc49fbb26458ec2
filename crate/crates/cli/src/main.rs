mod job;
mod launch;
mod report;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use shardsim::density::DensityMode;
use shardsim::grover::GroverConfig;
use shardsim::multiverse::{Algorithm, MultiverseConfig};
use shardsim::noise::{read_plan, write_plan, NoiseConfig, NoiseKind};
use shardsim::selftest::SelftestConfig;
use shardsim::shor::{ShorConfig, ShorMode};
use shardsim::state::write_state_dump;
use shardsim::{Error, Schedule};

use job::{Context, Job, Outcome, Task};
use launch::Transport;
use report::Format;

/// Distributed state-vector quantum simulator.
#[derive(Debug, Parser)]
#[command(name = "shardsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Search for one marked basis state.
    Grover {
        #[arg(long)]
        nq: usize,
        #[arg(long)]
        marked: usize,
        /// Defaults to round(pi/4 * sqrt(2^nq)).
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Factor M by period finding.
    Shor {
        #[arg(long)]
        m: u64,
        /// Drawn from the seed when omitted.
        #[arg(long)]
        xguess: Option<u64>,
        /// Measure register two once instead of enumerating every outcome.
        #[arg(long)]
        sample: bool,
    },
    /// Compare the distributed Fourier transform with the dense DFT.
    QftCheck {
        #[arg(long, default_value_t = 6)]
        nq: usize,
    },
    /// Compare every distributed kernel with the dense reference.
    Selftest {
        #[arg(long, default_value_t = 6)]
        nq: usize,
        /// Random gates per qubit and per qubit pair.
        #[arg(long, default_value_t = 50)]
        gates: usize,
    },
}

#[derive(Debug, Args)]
struct Opts {
    /// Ranks per run, a power of two.
    #[arg(long, global = true, default_value_t = 1)]
    ranks: usize,
    /// Rank groups, each running its own replica.
    #[arg(long, global = true, default_value_t = 1)]
    groups: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// 0: no density matrix, 1: assembled at the root, 2: assembled in row blocks.
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    ientropy: u8,
    /// Comma-separated group weights; uniform by default.
    #[arg(long, global = true, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Noise events per noisy group.
    #[arg(long, global = true, default_value_t = 1)]
    noise_count: usize,
    /// one or two.
    #[arg(long, global = true, default_value = "one")]
    noise_kind: NoiseKind,
    /// Replay the noise events in this file.
    #[arg(long, global = true, value_name = "PATH")]
    noise_plan: Option<PathBuf>,
    /// Write the noise events used to this file.
    #[arg(long, global = true, value_name = "PATH")]
    save_noise_plan: Option<PathBuf>,
    /// Write group 0's final amplitudes to this file.
    #[arg(long, global = true, value_name = "PATH")]
    dump_state: Option<PathBuf>,
    /// Write every density-matrix eigenvalue to this file.
    #[arg(long, global = true, value_name = "PATH")]
    dump_eigenvalues: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Transport::Inproc)]
    transport: Transport,
    /// First port for the socket transport; rank r listens on port + r.
    #[arg(long, global = true, default_value_t = 47000)]
    port: u16,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Leave out rank count, transport and timing.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true, hide = true)]
    worker_rank: Option<usize>,
    #[arg(long, global = true, hide = true)]
    inject_fault: bool,
}

fn build_job(cli: &Cli) -> anyhow::Result<Job> {
    let o = &cli.opts;
    let task = match &cli.command {
        Cmd::Grover { nq, marked, iterations } => {
            let mut cfg = GroverConfig::new(*nq, *marked)?;
            if let Some(t) = iterations {
                cfg = cfg.with_iterations(*t);
            }
            Task::Run(Algorithm::Grover(cfg))
        }
        Cmd::Shor { m, xguess, sample } => {
            let cfg = match xguess {
                Some(x) => ShorConfig::new(*m, *x)?,
                None => ShorConfig::with_seed(*m, o.seed)?,
            };
            let mode = if *sample { ShorMode::Sample } else { ShorMode::Enumerate };
            Task::Run(Algorithm::Shor(cfg.with_mode(mode)))
        }
        Cmd::QftCheck { nq } => Task::QftCheck(selftest_config(*nq, o, 50)?),
        Cmd::Selftest { nq, gates } => Task::Selftest(selftest_config(*nq, o, *gates)?),
    };
    let mut multiverse = MultiverseConfig::new(o.groups, o.seed).with_noise(NoiseConfig {
        count: o.noise_count,
        kind: o.noise_kind,
    });
    if let Some(w) = &o.weights {
        multiverse = multiverse.with_weights(w.clone());
    }
    if let Some(path) = &o.noise_plan {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        multiverse = multiverse.with_plan(read_plan(BufReader::new(file))?);
    }
    if let Task::Run(alg) = &task {
        multiverse.resolve_plan(alg)?;
    }
    Ok(Job {
        task,
        multiverse,
        density: match o.ientropy {
            0 => None,
            1 => Some(DensityMode::Root),
            _ => Some(DensityMode::Partitioned),
        },
        dump_state: o.dump_state.is_some(),
    })
}

fn selftest_config(nq: usize, o: &Opts, gates: usize) -> anyhow::Result<SelftestConfig> {
    let mut cfg = SelftestConfig::new(nq, o.seed)?;
    cfg.gates_per_target = gates;
    cfg.inject_fault = o.inject_fault;
    Ok(cfg)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_outputs(o: &Opts, outcome: &Outcome) -> anyhow::Result<()> {
    let Outcome::Run(run) = outcome else {
        return Ok(());
    };
    if let (Some(path), Some(state)) = (&o.dump_state, &run.state) {
        let mut w = create(path)?;
        write_state_dump(&mut w, state)?;
        w.flush()?;
    }
    if let Some(path) = &o.save_noise_plan {
        let mut w = create(path)?;
        write_plan(&mut w, &run.plan)?;
        w.flush()?;
    }
    if let Some(path) = &o.dump_eigenvalues {
        let Some(d) = &run.density else {
            anyhow::bail!("--dump-eigenvalues needs --ientropy 1 or 2");
        };
        let mut w = create(path)?;
        for l in &d.eigenvalues {
            writeln!(w, "{l:?}")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let o = &cli.opts;
    if !o.ranks.is_power_of_two() {
        return Err(Error::Config(format!("rank count {} is not a power of two", o.ranks)).into());
    }
    let job = build_job(cli)?;
    let start = Instant::now();
    let outcome = match (o.transport, o.worker_rank) {
        (Transport::Socket, Some(rank)) => {
            launch::run_socket_rank(&job, rank, o.ranks, o.port)?;
            return Ok(ExitCode::SUCCESS);
        }
        (_, Some(_)) => anyhow::bail!("--worker-rank needs --transport socket"),
        (Transport::Inproc, None) => launch::run_local(&job, o.ranks, Schedule::Sequential)?,
        (Transport::Threads, None) => launch::run_local(&job, o.ranks, Schedule::Threaded)?,
        (Transport::Socket, None) => {
            let args: Vec<String> = std::env::args().skip(1).collect();
            launch::run_socket_world(&job, o.ranks, o.port, &args)?
        }
    };
    let outcome = outcome.context("world root returned no result")?;
    write_outputs(o, &outcome)?;
    let ctx = Context {
        ranks: o.ranks,
        transport: o.transport.name(),
        deterministic: o.deterministic,
        elapsed: (!o.deterministic).then(|| start.elapsed()),
    };
    print!("{}", outcome.report(&ctx).render(o.format));
    Ok(if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

/// 2 for anything the user can fix by changing the command line.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Index { .. }
            | Error::Input(_)
            | Error::Config(_)
            | Error::Rejected { .. }
            | Error::ZeroProbability { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
