//! Message passing between logical ranks.
//!
//! A [`Transport`] moves blocks of complex amplitudes between ranks of one
//! world. [`Comm`] scopes a transport to a set of member ranks (the whole
//! world, or one contiguous group after [`Comm::split`]) and builds the
//! collectives every gate kernel needs on top of plain point-to-point
//! messages.
//!
//! All collectives are `async`: a receive that has no matching message yet
//! returns `Pending`, which lets the in-process [`LocalWorld`] drive every
//! rank from a single thread in a fixed order. Each rank must call the same
//! collectives in the same order.

mod local;
mod socket;
pub mod wire;

use std::future::poll_fn;
use std::sync::Arc;
use std::task::{Context, Poll};

use num_complex::Complex64;
use thiserror::Error;

use crate::error::{config, Result};
use crate::topology::{group_assignment, Topology};

pub use local::{LocalWorld, MessageStats, Schedule};
pub use socket::SocketTransport;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("peer rank {peer} out of range for {size} ranks")]
    PeerOutOfRange { peer: usize, size: usize },

    #[error("exchanged block length mismatch: sent {sent}, received {received}")]
    LengthMismatch { sent: usize, received: usize },

    #[error("run aborted by another rank")]
    Aborted,

    #[error("all ranks blocked waiting for messages")]
    Deadlock,

    #[error("peer {0} closed the connection")]
    Disconnected(usize),

    #[error("malformed frame: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Point-to-point delivery of amplitude blocks between world ranks.
///
/// Messages from a fixed source to a fixed destination with the same tag
/// are received in the order they were sent. Sends never wait for the
/// matching receive.
pub trait Transport: Send + Sync {
    fn rank(&self) -> usize;

    fn size(&self) -> usize;

    fn send(&self, dest: usize, tag: u32, payload: Vec<Complex64>) -> Result<(), TransportError>;

    fn poll_recv(
        &self,
        src: usize,
        tag: u32,
        cx: &mut Context<'_>,
    ) -> Poll<Result<Vec<Complex64>, TransportError>>;

    /// Messages sent by this rank so far.
    fn sent_messages(&self) -> u64;
}

#[derive(Clone, Copy)]
#[repr(u8)]
enum Kind {
    Exchange = 1,
    Broadcast = 2,
    Gather = 3,
}

/// A transport scoped to a contiguous set of member ranks.
#[derive(Clone)]
pub struct Comm {
    transport: Arc<dyn Transport>,
    first: usize,
    size: usize,
    index: usize,
    context: u32,
    group_id: usize,
    group_count: usize,
}

impl Comm {
    /// Communicator over every rank of `transport`'s world.
    pub fn world(transport: Arc<dyn Transport>) -> Self {
        let size = transport.size();
        let index = transport.rank();
        Comm {
            transport,
            first: 0,
            size,
            index,
            context: 0,
            group_id: 0,
            group_count: 1,
        }
    }

    pub fn rank(&self) -> usize {
        self.index
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_root(&self) -> bool {
        self.index == 0
    }

    pub fn world_rank(&self) -> usize {
        self.transport.rank()
    }

    pub fn world_size(&self) -> usize {
        self.transport.size()
    }

    pub fn group_id(&self) -> usize {
        self.group_id
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// Messages sent through the underlying transport by this rank.
    pub fn sent_messages(&self) -> u64 {
        self.transport.sent_messages()
    }

    /// Layout of an `nq`-qubit state over this communicator's world and groups.
    pub fn topology(&self, nq: usize) -> Result<Topology> {
        Topology::with_groups(nq, self.world_size(), self.world_rank(), self.group_count)
    }

    /// Split the world into `group_count` contiguous rank blocks.
    ///
    /// Purely local: every rank derives its group from its own rank, so no
    /// messages are exchanged.
    pub fn split(&self, group_count: usize) -> Result<Comm> {
        if self.context != 0 {
            return Err(config("only the world communicator can be split"));
        }
        let (group_id, group_rank) = group_assignment(self.index, self.size, group_count)?;
        let size = self.size / group_count;
        Ok(Comm {
            transport: Arc::clone(&self.transport),
            first: group_id * size,
            size,
            index: group_rank,
            context: group_id as u32 + 1,
            group_id,
            group_count,
        })
    }

    fn tag(&self, kind: Kind) -> u32 {
        (self.context << 8) | kind as u32
    }

    fn check_peer(&self, peer: usize) -> Result<(), TransportError> {
        if peer >= self.size {
            Err(TransportError::PeerOutOfRange {
                peer,
                size: self.size,
            })
        } else {
            Ok(())
        }
    }

    fn send(&self, dest: usize, kind: Kind, payload: Vec<Complex64>) -> Result<(), TransportError> {
        self.check_peer(dest)?;
        self.transport.send(self.first + dest, self.tag(kind), payload)
    }

    async fn recv(&self, src: usize, kind: Kind) -> Result<Vec<Complex64>, TransportError> {
        self.check_peer(src)?;
        let world_src = self.first + src;
        let tag = self.tag(kind);
        poll_fn(|cx| self.transport.poll_recv(world_src, tag, cx)).await
    }

    /// Swap equal-length blocks with `peer`; both sides must call this.
    ///
    /// The lower rank sends first and the higher rank receives first.
    /// Exchanging with oneself returns the block untouched, and an empty
    /// block sends nothing.
    pub async fn exchange(
        &self,
        peer: usize,
        block: Vec<Complex64>,
    ) -> Result<Vec<Complex64>, TransportError> {
        self.check_peer(peer)?;
        if peer == self.index || block.is_empty() {
            return Ok(block);
        }
        let sent = block.len();
        let received = if self.index < peer {
            self.send(peer, Kind::Exchange, block)?;
            self.recv(peer, Kind::Exchange).await?
        } else {
            let received = self.recv(peer, Kind::Exchange).await?;
            self.send(peer, Kind::Exchange, block)?;
            received
        };
        if received.len() != sent {
            return Err(TransportError::LengthMismatch {
                sent,
                received: received.len(),
            });
        }
        Ok(received)
    }

    /// Every rank returns the root's block.
    pub async fn broadcast(
        &self,
        root: usize,
        block: Vec<Complex64>,
    ) -> Result<Vec<Complex64>, TransportError> {
        self.check_peer(root)?;
        if self.index == root {
            for dest in (0..self.size).filter(|&d| d != root) {
                self.send(dest, Kind::Broadcast, block.clone())?;
            }
            Ok(block)
        } else {
            self.recv(root, Kind::Broadcast).await
        }
    }

    /// Concatenation of every rank's block in rank order, at the root only.
    pub async fn gather(
        &self,
        root: usize,
        block: Vec<Complex64>,
    ) -> Result<Option<Vec<Complex64>>, TransportError> {
        Ok(self.gather_parts(root, block).await?.map(|parts| parts.concat()))
    }

    /// Per-rank blocks in rank order, at the root only.
    pub async fn gather_parts(
        &self,
        root: usize,
        block: Vec<Complex64>,
    ) -> Result<Option<Vec<Vec<Complex64>>>, TransportError> {
        self.check_peer(root)?;
        if self.index != root {
            self.send(root, Kind::Gather, block)?;
            return Ok(None);
        }
        let mut own = Some(block);
        let mut parts = Vec::with_capacity(self.size);
        for src in 0..self.size {
            if src == root {
                parts.push(own.take().unwrap_or_default());
            } else {
                parts.push(self.recv(src, Kind::Gather).await?);
            }
        }
        Ok(Some(parts))
    }

    /// Every rank returns the rank-ordered concatenation of all blocks.
    pub async fn allgather(&self, block: Vec<Complex64>) -> Result<Vec<Complex64>, TransportError> {
        let gathered = self.gather(0, block).await?.unwrap_or_default();
        self.broadcast(0, gathered).await
    }

    pub async fn barrier(&self) -> Result<(), TransportError> {
        self.gather(0, Vec::new()).await?;
        self.broadcast(0, Vec::new()).await?;
        Ok(())
    }

    /// Component-wise sum of per-rank partial sums, identical on every rank.
    ///
    /// Partials are combined with [`tree_sum`] in rank order. When each
    /// partial is itself the tree sum of an aligned power-of-two block, the
    /// result is bit-identical to a tree sum over the whole vector, whatever
    /// the rank count.
    pub async fn allreduce_tree_sum(&self, partials: &[f64]) -> Result<Vec<f64>, TransportError> {
        let parts = self.gather_parts(0, pack_f64(partials)).await?;
        let reduced = match parts {
            Some(parts) => {
                let columns: Vec<Vec<f64>> = parts.iter().map(|p| unpack_f64(p)).collect();
                let mut sums = Vec::with_capacity(partials.len());
                let mut column = vec![0.0; columns.len()];
                for i in 0..partials.len() {
                    for (slot, col) in column.iter_mut().zip(&columns) {
                        *slot = col.get(i).copied().unwrap_or(0.0);
                    }
                    sums.push(tree_sum(&column));
                }
                pack_f64(&sums)
            }
            None => Vec::new(),
        };
        Ok(unpack_f64(&self.broadcast(0, reduced).await?))
    }

    pub async fn broadcast_f64(&self, root: usize, values: &[f64]) -> Result<Vec<f64>, TransportError> {
        Ok(unpack_f64(&self.broadcast(root, pack_f64(values)).await?))
    }

    pub async fn broadcast_u64(&self, root: usize, values: &[u64]) -> Result<Vec<u64>, TransportError> {
        let packed = values
            .iter()
            .map(|&v| Complex64::new(f64::from_bits(v), 0.0))
            .collect();
        let block = self.broadcast(root, packed).await?;
        Ok(block.iter().map(|c| c.re.to_bits()).collect())
    }
}

fn pack_f64(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn unpack_f64(block: &[Complex64]) -> Vec<f64> {
    block.iter().map(|c| c.re).collect()
}

/// Pairwise summation by recursive halving.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            tree_sum(lo) + tree_sum(hi)
        }
    }
}
