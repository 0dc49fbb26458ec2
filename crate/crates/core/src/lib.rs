//! Rank-sharded state-vector simulation of quantum circuits.
//!
//! A state of `nq` qubits is split across `2^p` ranks, each holding one
//! contiguous slice of amplitudes. Ranks are async tasks that talk through a
//! [`comm::Comm`]; the same rank program runs in-process or across OS
//! processes over sockets.

pub mod arith;
pub mod comm;
pub mod dense;
pub mod density;
pub mod error;
pub mod gates;
pub mod grover;
pub mod multiverse;
pub mod noise;
pub mod qft;
pub mod rng;
pub mod selftest;
pub mod shor;
pub mod state;
pub mod topology;

pub use comm::{Comm, LocalWorld, Schedule};
pub use error::{Error, Rejection, Result};
pub use num_complex::Complex64;
pub use state::Shard;
pub use topology::Topology;
