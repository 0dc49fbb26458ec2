//! One- and two-qubit operators on a sharded state.
//!
//! Every operation here is collective over the communicator that owns the
//! shard: all ranks call it with the same arguments in the same order.
//!
//! A gate on qubit `i_s` mixes amplitude pairs one stride `2^(nq - i_s)`
//! apart. When the stride is shorter than a slice both partners are local.
//! Otherwise the partner lives on the rank whose id differs in bit
//! `stride / n_x`, and the two ranks swap whole slices; each then computes
//! the outputs for its own seats. A two-qubit gate needs at most two such
//! swap rounds, one per qubit that is a rank bit.
//!
//! Each output amplitude is computed by the same expression whether its
//! inputs were local or received, so results are bit-identical for any
//! rank count.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::comm::Comm;
use crate::error::{input, Error, Result};
use crate::state::{check_qubit, stride, Shard};

/// Tolerance for `m^dagger m = I` in the checked constructors.
pub const UNITARY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn is_unitary<const N: usize>(m: &[[Complex64; N]; N], tol: f64) -> bool {
    (0..N).all(|i| {
        (0..N).all(|j| {
            let dot: Complex64 = (0..N).map(|k| m[k][i].conj() * m[k][j]).sum();
            let expected = if i == j { ONE } else { ZERO };
            (dot - expected).norm() <= tol
        })
    })
}

fn dagger<const N: usize>(m: &[[Complex64; N]; N]) -> [[Complex64; N]; N] {
    let mut out = [[ZERO; N]; N];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = v.conj();
        }
    }
    out
}

/// A 2x2 operator with `m[a][b] = <a|op|b>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate2(pub [[Complex64; 2]; 2]);

impl Gate2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        Gate2(m)
    }

    /// Checked constructor; rejects matrices that are not unitary.
    pub fn unitary(m: [[Complex64; 2]; 2]) -> Result<Self> {
        if is_unitary(&m, UNITARY_TOL) {
            Ok(Gate2(m))
        } else {
            Err(input("2x2 matrix is not unitary"))
        }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Gate2(m.map(|row| row.map(|v| Complex64::new(v, 0.0))))
    }

    pub fn identity() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn hadamard() -> Self {
        Self::from_real([[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]])
    }

    pub fn not() -> Self {
        Self::pauli_x()
    }

    pub fn pauli_x() -> Self {
        Self::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        Gate2([[ZERO, -i], [i, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        is_unitary(&self.0, tol)
    }

    pub fn dagger(&self) -> Self {
        Gate2(dagger(&self.0))
    }
}

/// A 4x4 two-qubit operator; row and column `2i + j` label `|i j>`, where
/// `i` is the bit of the first struck qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate4(pub [[Complex64; 4]; 4]);

impl Gate4 {
    pub fn new(m: [[Complex64; 4]; 4]) -> Self {
        Gate4(m)
    }

    pub fn unitary(m: [[Complex64; 4]; 4]) -> Result<Self> {
        if is_unitary(&m, UNITARY_TOL) {
            Ok(Gate4(m))
        } else {
            Err(input("4x4 matrix is not unitary"))
        }
    }

    pub fn diagonal(d: [Complex64; 4]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, v) in d.into_iter().enumerate() {
            m[i][i] = v;
        }
        Gate4(m)
    }

    /// Permutation matrix sending `|col>` to `|perm[col]>`.
    fn permutation(perm: [usize; 4]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (col, row) in perm.into_iter().enumerate() {
            m[row][col] = ONE;
        }
        Gate4(m)
    }

    pub fn identity() -> Self {
        Self::diagonal([ONE; 4])
    }

    pub fn cnot() -> Self {
        Self::permutation([0, 1, 3, 2])
    }

    pub fn cphase() -> Self {
        Self::diagonal([ONE, ONE, ONE, -ONE])
    }

    pub fn cphasek(k: u32) -> Result<Self> {
        Ok(Self::diagonal([ONE, ONE, ONE, phase_k(k)?]))
    }

    pub fn swap() -> Self {
        Self::permutation([0, 2, 1, 3])
    }

    /// `a (x) b`, with `a` acting on the first struck qubit.
    pub fn kron(a: &Gate2, b: &Gate2) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a.0[r >> 1][c >> 1] * b.0[r & 1][c & 1];
            }
        }
        Gate4(m)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        is_unitary(&self.0, tol)
    }

    pub fn dagger(&self) -> Self {
        Gate4(dagger(&self.0))
    }
}

/// `exp(2 pi i / 2^k)`, exact for `k = 1, 2`.
pub fn phase_k(k: u32) -> Result<Complex64> {
    match k {
        0 => Err(input("controlled-phase index k must be at least 1")),
        1 => Ok(-ONE),
        2 => Ok(Complex64::i()),
        _ => Ok(Complex64::from_polar(1.0, 2.0 * PI / 2f64.powi(k as i32))),
    }
}

/// Apply `gate` to qubit `i_s`.
pub async fn one_op(comm: &Comm, shard: &mut Shard, i_s: usize, gate: &Gate2) -> Result<()> {
    shard.check_comm(comm)?;
    check_qubit(i_s, shard.nq())?;
    let s = stride(shard.nq(), i_s);
    let n_x = shard.n_x();
    let m = &gate.0;
    if s < n_x {
        let amps = shard.amps_mut();
        for block in (0..n_x).step_by(2 * s) {
            for i in block..block + s {
                let (a, b) = (amps[i], amps[i + s]);
                amps[i] = m[0][0] * a + m[0][1] * b;
                amps[i + s] = m[1][0] * a + m[1][1] * b;
            }
        }
        return Ok(());
    }
    let rank_bit = s / n_x;
    let upper = shard.rank() & rank_bit != 0;
    let other = comm.exchange(comm.rank() ^ rank_bit, shard.amps().to_vec()).await?;
    let row = &m[upper as usize];
    for (mine, theirs) in shard.amps_mut().iter_mut().zip(other) {
        let (a, b) = if upper { (theirs, *mine) } else { (*mine, theirs) };
        *mine = row[0] * a + row[1] * b;
    }
    Ok(())
}

/// Apply `gate` to the qubit pair `(i_s1, i_s2)`; either order is allowed.
pub async fn two_op(
    comm: &Comm,
    shard: &mut Shard,
    i_s1: usize,
    i_s2: usize,
    gate: &Gate4,
) -> Result<()> {
    let m = &gate.0;
    apply_quartets(comm, shard, i_s1, i_s2, |row, a| {
        m[row][0] * a[0] + m[row][1] * a[1] + m[row][2] * a[2] + m[row][3] * a[3]
    })
    .await
}

pub async fn cnot(comm: &Comm, shard: &mut Shard, control: usize, target: usize) -> Result<()> {
    two_op(comm, shard, control, target, &Gate4::cnot()).await
}

pub async fn swap(comm: &Comm, shard: &mut Shard, i: usize, j: usize) -> Result<()> {
    two_op(comm, shard, i, j, &Gate4::swap()).await
}

pub async fn cphase(comm: &Comm, shard: &mut Shard, control: usize, target: usize) -> Result<()> {
    controlled_phase(comm, shard, control, target, -ONE)
}

/// Multiply `|11>` on `(control, target)` by `exp(2 pi i / 2^k)`. Local.
pub async fn cphasek(
    comm: &Comm,
    shard: &mut Shard,
    control: usize,
    target: usize,
    k: u32,
) -> Result<()> {
    controlled_phase(comm, shard, control, target, phase_k(k)?)
}

/// Multiply every amplitude whose bits `q1` and `q2` are both set by `phase`.
///
/// Diagonal, so it never communicates.
pub fn controlled_phase(
    comm: &Comm,
    shard: &mut Shard,
    q1: usize,
    q2: usize,
    phase: Complex64,
) -> Result<()> {
    shard.check_comm(comm)?;
    check_pair(q1, q2, shard.nq())?;
    let mask = stride(shard.nq(), q1) | stride(shard.nq(), q2);
    let base = shard.base();
    for (seat, amp) in shard.amps_mut().iter_mut().enumerate() {
        if (base + seat) & mask == mask {
            *amp *= phase;
        }
    }
    Ok(())
}

/// Hadamard on every qubit, one qubit at a time.
pub async fn hall(comm: &Comm, shard: &mut Shard) -> Result<()> {
    let h = Gate2::hadamard();
    for i_s in 1..=shard.nq() {
        one_op(comm, shard, i_s, &h).await?;
    }
    Ok(())
}

/// Sign `(-1)^(number of positions where n and np both have a 1 bit)`.
pub fn sh(nq: usize, n: usize, np: usize) -> i32 {
    let shared = (n & np) & ((1usize << nq) - 1);
    if shared.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Hadamard on every qubit as one dense signed sum over the whole state.
///
/// Every output needs every input, so each rank first collects the full
/// vector.
pub async fn hall2(comm: &Comm, shard: &mut Shard) -> Result<()> {
    shard.check_comm(comm)?;
    let nq = shard.nq();
    let full = comm.allgather(shard.amps().to_vec()).await?;
    let scale = (-(nq as f64) / 2.0).exp2();
    let base = shard.base();
    let out = (0..shard.n_x())
        .map(|seat| {
            let n = base + seat;
            let acc = full.iter().enumerate().fold(ZERO, |acc, (np, c)| {
                if sh(nq, n, np) > 0 {
                    acc + c
                } else {
                    acc - c
                }
            });
            acc * scale
        })
        .collect();
    shard.replace_amps(out);
    Ok(())
}

fn check_pair(q1: usize, q2: usize, nq: usize) -> Result<()> {
    check_qubit(q1, nq)?;
    check_qubit(q2, nq)?;
    if q1 == q2 {
        return Err(input(format!("two-qubit operation needs distinct qubits, got {q1} twice")));
    }
    Ok(())
}

/// Slices received while resolving rank-bit strides, keyed by the xor
/// between the holder's rank and ours.
struct Neighborhood<'a> {
    own: &'a [Complex64],
    others: Vec<(usize, Vec<Complex64>)>,
}

impl<'a> Neighborhood<'a> {
    async fn fetch(comm: &Comm, own: &'a [Complex64], rank_bits: &[usize]) -> Result<Self> {
        let n_x = own.len();
        let mut hood = Neighborhood {
            own,
            others: Vec::new(),
        };
        for &bit in rank_bits {
            let mut outgoing = own.to_vec();
            for (_, slice) in &hood.others {
                outgoing.extend_from_slice(slice);
            }
            let incoming = comm.exchange(comm.rank() ^ bit, outgoing).await?;
            // The peer packed the same key sequence, each shifted by `bit`.
            let keys: Vec<usize> = std::iter::once(0)
                .chain(hood.others.iter().map(|(k, _)| *k))
                .collect();
            for (key, chunk) in keys.into_iter().zip(incoming.chunks_exact(n_x)) {
                hood.others.push((key ^ bit, chunk.to_vec()));
            }
        }
        Ok(hood)
    }

    fn get(&self, key: usize, seat: usize) -> Result<Complex64> {
        if key == 0 {
            return Ok(self.own[seat]);
        }
        self.others
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, slice)| slice[seat])
            .ok_or_else(|| Error::Contract(format!("no slice for rank offset {key}")))
    }
}

/// Replace each amplitude by `row_fn(row, quartet)`, where `row` is the
/// amplitude's own `(bit qa, bit qb)` label and `quartet` holds the four
/// amplitudes of its quartet ordered by that label.
async fn apply_quartets<F>(comm: &Comm, shard: &mut Shard, qa: usize, qb: usize, row_fn: F) -> Result<()>
where
    F: Fn(usize, &[Complex64; 4]) -> Complex64,
{
    shard.check_comm(comm)?;
    let nq = shard.nq();
    check_pair(qa, qb, nq)?;
    let n_x = shard.n_x();
    let (sa, sb) = (stride(nq, qa), stride(nq, qb));
    let rank_bits: Vec<usize> = [sa, sb].into_iter().filter(|&s| s >= n_x).map(|s| s / n_x).collect();
    let rank = shard.rank();
    let base = shard.base();

    let out = {
        let hood = Neighborhood::fetch(comm, shard.amps(), &rank_bits).await?;
        let mut out = Vec::with_capacity(n_x);
        let mut quartet = [ZERO; 4];
        for seat in 0..n_x {
            let n = base + seat;
            let (ba, bb) = (n & sa != 0, n & sb != 0);
            for (label, amp) in quartet.iter_mut().enumerate() {
                let flip_a = if (label >> 1 == 1) != ba { sa } else { 0 };
                let flip_b = if (label & 1 == 1) != bb { sb } else { 0 };
                let m = n ^ flip_a ^ flip_b;
                *amp = hood.get((m / n_x) ^ rank, m % n_x)?;
            }
            out.push(row_fn(2 * ba as usize + bb as usize, &quartet));
        }
        out
    };
    shard.replace_amps(out);
    Ok(())
}
