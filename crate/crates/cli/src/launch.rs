//! Starting the ranks: in this process, on threads, or as socket-connected
//! worker processes.

use std::net::{Ipv4Addr, SocketAddr};
use std::process::{Child, Command};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context as _};
use clap::ValueEnum;
use shardsim::comm::SocketTransport;
use shardsim::{Comm, LocalWorld, Schedule};

use crate::job::{rank_main, Job, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Transport {
    /// All ranks interleaved on the calling thread.
    #[default]
    Inproc,
    /// One thread per rank.
    Threads,
    /// One process per rank, connected over loopback TCP.
    Socket,
}

impl Transport {
    pub fn name(self) -> &'static str {
        match self {
            Transport::Inproc => "inproc",
            Transport::Threads => "threads",
            Transport::Socket => "socket",
        }
    }
}

const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);

pub fn run_local(job: &Job, ranks: usize, schedule: Schedule) -> anyhow::Result<Option<Outcome>> {
    let world = LocalWorld::new(ranks)?;
    let mut out = world.run(schedule, |comm| async move { rank_main(comm, job).await })?;
    Ok(out.swap_remove(0))
}

fn addresses(port: u16, ranks: usize) -> anyhow::Result<Vec<SocketAddr>> {
    (0..ranks)
        .map(|r| {
            let p = u16::try_from(port as usize + r).context("port range overflows")?;
            Ok(SocketAddr::from((Ipv4Addr::LOCALHOST, p)))
        })
        .collect()
}

/// Run one socket rank in this process.
pub fn run_socket_rank(job: &Job, rank: usize, ranks: usize, port: u16) -> anyhow::Result<Option<Outcome>> {
    let addrs = addresses(port, ranks)?;
    let transport = SocketTransport::connect(rank, &addrs, CONNECT_TIMEOUT)
        .with_context(|| format!("rank {rank} could not join the socket world"))?;
    let comm = Comm::world(Arc::new(transport));
    Ok(futures::executor::block_on(rank_main(comm, job))?)
}

/// Spawn ranks `1..ranks` as copies of this executable and run rank 0 here.
pub fn run_socket_world(job: &Job, ranks: usize, port: u16, args: &[String]) -> anyhow::Result<Option<Outcome>> {
    addresses(port, ranks)?;
    let exe = std::env::current_exe().context("cannot locate own executable")?;
    let mut children: Vec<(usize, Child)> = Vec::new();
    for rank in 1..ranks {
        let child = Command::new(&exe)
            .arg("--worker-rank")
            .arg(rank.to_string())
            .args(args)
            .spawn()
            .with_context(|| format!("spawning rank {rank}"));
        match child {
            Ok(c) => children.push((rank, c)),
            Err(e) => {
                reap(children);
                return Err(e);
            }
        }
    }
    let result = run_socket_rank(job, 0, ranks, port);
    if result.is_err() {
        reap(children);
        return result;
    }
    for (rank, mut child) in children {
        let status = child.wait()?;
        if !status.success() {
            bail!("rank {rank} exited with {status}");
        }
    }
    result
}

fn reap(children: Vec<(usize, Child)>) {
    for (_, mut c) in children {
        let _ = c.kill();
        let _ = c.wait();
    }
}
