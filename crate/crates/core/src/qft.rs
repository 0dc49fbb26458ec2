//! Quantum Fourier transform on the leading qubits and measurement of the
//! trailing register.
//!
//! A state of `nq` qubits is viewed as `|n>|k>`, with register one on qubits
//! `1..=n1` (index `n`) and register two on the remaining `n2` qubits
//! (index `k`), so the global index is `n * 2^n2 + k`.

use num_complex::Complex64;
use rand::Rng;

use crate::comm::{tree_sum, Comm};
use crate::error::{input, Error, Result};
use crate::gates::{controlled_phase, one_op, phase_k, swap, Gate2};
use crate::state::Shard;

/// Outcomes with probability at or below this are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Split of the qubits into the two registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterSpec {
    n1: usize,
    n2: usize,
}

impl RegisterSpec {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(input(format!("both registers need at least one qubit, got n1={n1}, n2={n2}")));
        }
        Ok(RegisterSpec { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn nq(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index >> self.n2, index & ((1 << self.n2) - 1))
    }

    pub fn join(&self, n: usize, k: usize) -> usize {
        (n << self.n2) | k
    }

    fn check(&self, shard: &Shard) -> Result<()> {
        if shard.nq() != self.nq() {
            return Err(input(format!(
                "registers cover {} qubits but the state has {}",
                self.nq(),
                shard.nq()
            )));
        }
        Ok(())
    }
}

fn check_n1(n1: usize, nq: usize) -> Result<()> {
    if n1 == 0 || n1 > nq {
        return Err(input(format!("QFT register size {n1} outside 1..={nq}")));
    }
    Ok(())
}

/// Fourier transform of qubits `1..=n1`:
/// `|n> -> 2^(-n1/2) sum_n' exp(2 pi i n n' / 2^n1) |n'>`.
pub async fn qft(comm: &Comm, shard: &mut Shard, n1: usize) -> Result<()> {
    check_n1(n1, shard.nq())?;
    let h = Gate2::hadamard();
    for ic in 1..n1 {
        one_op(comm, shard, ic, &h).await?;
        for k in ic + 1..=n1 {
            controlled_phase(comm, shard, k, ic, phase_k((k + 1 - ic) as u32)?)?;
        }
    }
    one_op(comm, shard, n1, &h).await?;
    for i in 1..=n1 / 2 {
        swap(comm, shard, i, n1 + 1 - i).await?;
    }
    Ok(())
}

/// Inverse of [`qft`]: the same circuit reversed with conjugate phases.
pub async fn inverse_qft(comm: &Comm, shard: &mut Shard, n1: usize) -> Result<()> {
    check_n1(n1, shard.nq())?;
    let h = Gate2::hadamard();
    for i in (1..=n1 / 2).rev() {
        swap(comm, shard, i, n1 + 1 - i).await?;
    }
    one_op(comm, shard, n1, &h).await?;
    for ic in (1..n1).rev() {
        for k in (ic + 1..=n1).rev() {
            controlled_phase(comm, shard, k, ic, phase_k((k + 1 - ic) as u32)?.conj())?;
        }
        one_op(comm, shard, ic, &h).await?;
    }
    Ok(())
}

/// Probability of every register-two outcome, identical on every rank.
pub async fn register2_marginals(comm: &Comm, shard: &Shard, regs: RegisterSpec) -> Result<Vec<f64>> {
    shard.check_comm(comm)?;
    regs.check(shard)?;
    let k_count = 1usize << regs.n2();
    let base = shard.base();
    let mut per_k: Vec<Vec<f64>> = vec![Vec::new(); k_count];
    for (seat, c) in shard.amps().iter().enumerate() {
        per_k[regs.split(base + seat).1].push(c.norm_sqr());
    }
    let partials: Vec<f64> = per_k.iter().map(|v| tree_sum(v)).collect();
    Ok(comm.allreduce_tree_sum(&partials).await?)
}

/// Project register two onto `|k>` and renormalize.
///
/// Returns the probability of `k` before projection. An impossible `k`
/// leaves the state untouched and yields [`Error::ZeroProbability`].
pub async fn project_register2(comm: &Comm, shard: &mut Shard, regs: RegisterSpec, k: usize) -> Result<f64> {
    shard.check_comm(comm)?;
    regs.check(shard)?;
    if k >= 1 << regs.n2() {
        return Err(Error::Index {
            what: "register-two outcome",
            index: k as u64,
            limit: 1 << regs.n2(),
        });
    }
    let base = shard.base();
    let keep = |seat: usize| regs.split(base + seat).1 == k;
    let kept: Vec<f64> = shard
        .amps()
        .iter()
        .enumerate()
        .map(|(seat, c)| if keep(seat) { c.norm_sqr() } else { 0.0 })
        .collect();
    let prob = comm.allreduce_tree_sum(&[tree_sum(&kept)]).await?[0];
    if prob <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { outcome: k as u64 });
    }
    let scale = 1.0 / prob.sqrt();
    for (seat, c) in shard.amps_mut().iter_mut().enumerate() {
        *c = if keep(seat) { *c * scale } else { Complex64::new(0.0, 0.0) };
    }
    Ok(prob)
}

/// Draw a register-two outcome from the Born distribution.
///
/// Only the communicator root consumes randomness; the outcome is broadcast
/// so every rank returns the same `k`.
pub async fn sample_register2<R: Rng + ?Sized>(
    comm: &Comm,
    shard: &Shard,
    regs: RegisterSpec,
    rng: &mut R,
) -> Result<usize> {
    let marginals = register2_marginals(comm, shard, regs).await?;
    let drawn = if comm.is_root() {
        vec![draw(&marginals, rng.gen::<f64>()) as u64]
    } else {
        Vec::new()
    };
    Ok(comm.broadcast_u64(0, &drawn).await?[0] as usize)
}

/// Index selected by a uniform `u` in `[0, 1)` against unnormalized weights.
fn draw(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}
