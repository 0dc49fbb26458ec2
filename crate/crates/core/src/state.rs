//! Sharded state vectors and computational-basis index arithmetic.
//!
//! Qubits are numbered `1..=nq` with qubit 1 the most significant bit of
//! the basis index, so basis state `|q_1 q_2 .. q_nq>` has index
//! `n = sum_i q_i * 2^(nq - i)`.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;

use crate::comm::{tree_sum, Comm};
use crate::error::{input, Error, Result};
use crate::topology::{Topology, MAX_QUBITS};

/// Binary digits `B(1)..B(nq)` of a basis index, most significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(input(format!("non-binary digit {b}")));
        }
        if bits.is_empty() || bits.len() > MAX_QUBITS {
            return Err(input(format!("bit string length {} outside 1..={MAX_QUBITS}", bits.len())));
        }
        Ok(BitString(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn value(&self) -> usize {
        self.0.iter().fold(0, |n, &b| (n << 1) | b as usize)
    }
}

pub fn bintodec(nq: usize, bits: &[u8]) -> Result<usize> {
    if bits.len() != nq {
        return Err(input(format!("expected {nq} bits, got {}", bits.len())));
    }
    Ok(BitString::new(bits.to_vec())?.value())
}

pub fn dectobin(nq: usize, n: usize) -> Result<BitString> {
    check_nq(nq)?;
    check_index(n, nq)?;
    Ok(BitString((1..=nq).map(|i| ((n >> (nq - i)) & 1) as u8).collect()))
}

/// Index distance between the two amplitudes mixed by a gate on qubit `i_s`.
pub fn stride(nq: usize, i_s: usize) -> usize {
    1 << (nq - i_s)
}

/// The `|1>` partner of index `n0` for qubit `i_s`.
pub fn partner(n0: usize, i_s: usize, nq: usize) -> Result<usize> {
    check_qubit(i_s, nq)?;
    check_index(n0, nq)?;
    let s = stride(nq, i_s);
    if n0 & s != 0 {
        return Err(Error::Contract(format!("bit {i_s} of {n0} is already set")));
    }
    Ok(n0 + s)
}

/// The other three members `(n01, n10, n11)` of the quartet based at `n00`.
pub fn quartet(n00: usize, i_s1: usize, i_s2: usize, nq: usize) -> Result<(usize, usize, usize)> {
    check_qubit(i_s1, nq)?;
    check_qubit(i_s2, nq)?;
    check_index(n00, nq)?;
    if i_s1 >= i_s2 {
        return Err(input(format!("quartet needs i_s1 < i_s2, got {i_s1}, {i_s2}")));
    }
    let (s1, s2) = (stride(nq, i_s1), stride(nq, i_s2));
    if n00 & (s1 | s2) != 0 {
        return Err(Error::Contract(format!(
            "bits {i_s1}, {i_s2} of {n00} must both be zero"
        )));
    }
    Ok((n00 + s2, n00 + s1, n00 + s1 + s2))
}

pub(crate) fn check_nq(nq: usize) -> Result<()> {
    if nq == 0 || nq > MAX_QUBITS {
        return Err(input(format!("qubit count {nq} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

pub(crate) fn check_qubit(i_s: usize, nq: usize) -> Result<()> {
    if i_s == 0 || i_s > nq {
        return Err(Error::Index {
            what: "qubit",
            index: i_s as u64,
            limit: nq as u64,
        });
    }
    Ok(())
}

pub(crate) fn check_index(n: usize, nq: usize) -> Result<()> {
    if n >> nq != 0 {
        return Err(Error::Index {
            what: "basis index",
            index: n as u64,
            limit: 1u64 << nq,
        });
    }
    Ok(())
}

/// One rank's contiguous slice of the state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    nq: usize,
    rank: usize,
    ranks: usize,
    amps: Vec<Complex64>,
}

impl Shard {
    /// All-zero slice for this rank's position within its group.
    pub fn zeros(topology: &Topology) -> Self {
        Shard {
            nq: topology.nq(),
            rank: topology.group_rank(),
            ranks: topology.group_size(),
            amps: vec![Complex64::new(0.0, 0.0); topology.n_x()],
        }
    }

    /// Basis state `|n>`: amplitude one on the rank that owns `n`.
    pub fn basis(topology: &Topology, n: usize) -> Result<Self> {
        let mut shard = Self::zeros(topology);
        let (section, seat) = topology.section_seat(n)?;
        if section == shard.rank {
            shard.amps[seat] = Complex64::new(1.0, 0.0);
        }
        Ok(shard)
    }

    pub fn from_amps(nq: usize, rank: usize, ranks: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_nq(nq)?;
        if !ranks.is_power_of_two() || rank >= ranks || amps.len() * ranks != 1 << nq {
            return Err(input(format!(
                "slice of {} amplitudes does not fit rank {rank} of {ranks} for {nq} qubits",
                amps.len()
            )));
        }
        Ok(Shard {
            nq,
            rank,
            ranks,
            amps,
        })
    }

    /// This rank's slice of a full standard-order state vector.
    pub fn scatter(full: &[Complex64], rank: usize, ranks: usize) -> Result<Self> {
        let nq = full.len().trailing_zeros() as usize;
        if !full.len().is_power_of_two() || ranks == 0 || ranks > full.len() {
            return Err(input("state length must be a power of two no smaller than the rank count"));
        }
        let n_x = full.len() / ranks;
        Self::from_amps(nq, rank, ranks, full[rank * n_x..(rank + 1) * n_x].to_vec())
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ranks(&self) -> usize {
        self.ranks
    }

    pub fn n_x(&self) -> usize {
        self.amps.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.nq
    }

    /// Global index of the first local amplitude.
    pub fn base(&self) -> usize {
        self.rank * self.amps.len()
    }

    pub fn owns(&self, n: usize) -> bool {
        n / self.amps.len() == self.rank && n < self.dim()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub(crate) fn replace_amps(&mut self, amps: Vec<Complex64>) {
        debug_assert_eq!(amps.len(), self.amps.len());
        self.amps = amps;
    }

    /// Tree sum of `|C|^2` over the local slice.
    pub fn local_norm_sqr(&self) -> f64 {
        let probs: Vec<f64> = self.amps.iter().map(|c| c.norm_sqr()).collect();
        tree_sum(&probs)
    }

    pub(crate) fn check_comm(&self, comm: &Comm) -> Result<()> {
        if comm.size() != self.ranks || comm.rank() != self.rank {
            return Err(input(format!(
                "shard for rank {} of {} used on rank {} of {}",
                self.rank,
                self.ranks,
                comm.rank(),
                comm.size()
            )));
        }
        Ok(())
    }
}

/// Full state vector in standard order, at the communicator root only.
pub async fn gather_state(comm: &Comm, shard: &Shard) -> Result<Option<Vec<Complex64>>> {
    shard.check_comm(comm)?;
    Ok(comm.gather(0, shard.amps.clone()).await?)
}

/// `sum |C_n|^2` over the whole distributed state, identical on every rank.
pub async fn norm_sqr(comm: &Comm, shard: &Shard) -> Result<f64> {
    shard.check_comm(comm)?;
    Ok(comm.allreduce_tree_sum(&[shard.local_norm_sqr()]).await?[0])
}

/// Write `index re im` lines in standard order.
pub fn write_state_dump<W: Write>(w: &mut W, amps: &[Complex64]) -> io::Result<()> {
    for (n, c) in amps.iter().enumerate() {
        writeln!(w, "{n} {:?} {:?}", c.re, c.im)?;
    }
    Ok(())
}

pub fn parse_state_dump<R: BufRead>(r: R) -> Result<Vec<Complex64>> {
    let mut amps = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| input(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || input(format!("malformed state dump line {}: {line:?}", lineno + 1));
        let mut fields = line.split_whitespace();
        let n: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let re: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let im: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        if n != amps.len() || fields.next().is_some() {
            return Err(bad());
        }
        amps.push(Complex64::new(re, im));
    }
    Ok(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::{LocalWorld, Schedule};
    use proptest::prelude::*;

    #[test]
    fn bintodec_examples() {
        assert_eq!(bintodec(3, &[0, 0, 1]).unwrap(), 1);
        assert_eq!(bintodec(3, &[0, 1, 1]).unwrap(), 3);
        assert_eq!(bintodec(3, &[0, 0, 0]).unwrap(), 0);
        assert!(matches!(bintodec(3, &[0, 2, 1]), Err(Error::Input(_))));
        assert!(bintodec(3, &[0, 1]).is_err());
    }

    #[test]
    fn dectobin_examples() {
        assert_eq!(dectobin(3, 4).unwrap().bits(), &[1, 0, 0]);
        assert_eq!(dectobin(3, 7).unwrap().bits(), &[1, 1, 1]);
        assert_eq!(dectobin(1, 1).unwrap().bits(), &[1]);
        assert!(matches!(dectobin(3, 8), Err(Error::Index { .. })));
    }

    #[test]
    fn partner_examples() {
        assert_eq!(partner(1, 2, 3).unwrap(), 3);
        assert_eq!(partner(0, 1, 3).unwrap(), 4);
        assert_eq!(partner(0, 3, 3).unwrap(), 1);
        assert!(matches!(partner(4, 1, 3), Err(Error::Contract(_))));
        assert!(matches!(partner(0, 4, 3), Err(Error::Index { .. })));
    }

    #[test]
    fn quartet_examples() {
        assert_eq!(quartet(0, 2, 3, 3).unwrap(), (1, 2, 3));
        assert_eq!(quartet(0, 1, 2, 3).unwrap(), (2, 4, 6));
        assert_eq!(quartet(0, 1, 2, 2).unwrap(), (1, 2, 3));
        assert!(matches!(quartet(0, 2, 2, 3), Err(Error::Input(_))));
        assert!(matches!(quartet(1, 2, 3, 3), Err(Error::Contract(_))));
    }

    #[test]
    fn pairs_and_quartets_partition_the_basis() {
        let nq = 5;
        for i_s in 1..=nq {
            let mut hit = vec![0; 1 << nq];
            let mut pairs = 0;
            for n0 in (0..1 << nq).filter(|n| n & stride(nq, i_s) == 0) {
                let n1 = partner(n0, i_s, nq).unwrap();
                hit[n0] += 1;
                hit[n1] += 1;
                pairs += 1;
            }
            assert_eq!(pairs, (1 << nq) / 2);
            assert!(hit.iter().all(|&h| h == 1));
        }
        for i1 in 1..=nq {
            for i2 in i1 + 1..=nq {
                let mask = stride(nq, i1) | stride(nq, i2);
                let mut hit = vec![0; 1 << nq];
                let mut count = 0;
                for n00 in (0..1 << nq).filter(|n| n & mask == 0) {
                    let (a, b, c) = quartet(n00, i1, i2, nq).unwrap();
                    for n in [n00, a, b, c] {
                        hit[n] += 1;
                    }
                    count += 1;
                }
                assert_eq!(count, (1 << nq) / 4);
                assert!(hit.iter().all(|&h| h == 1));
            }
        }
    }

    #[test]
    fn basis_states_land_on_owner() {
        let t0 = Topology::new(3, 2, 0).unwrap();
        let t1 = Topology::new(3, 2, 1).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(Shard::basis(&t0, 0).unwrap().amps(), &[one, zero, zero, zero]);
        assert_eq!(Shard::basis(&t1, 0).unwrap().amps(), &[zero; 4]);
        let s = Shard::basis(&t1, 5).unwrap();
        assert_eq!(s.amps()[1], one);
        assert_eq!(s.base(), 4);
        let single = Topology::new(1, 1, 0).unwrap();
        assert_eq!(Shard::basis(&single, 1).unwrap().amps(), &[zero, one]);
        assert!(Shard::basis(&t0, 8).is_err());
    }

    #[test]
    fn gathered_norm_and_state() {
        let world = LocalWorld::new(4).unwrap();
        let out = world
            .run(Schedule::Sequential, |comm| async move {
                let topo = comm.topology(4)?;
                let shard = Shard::basis(&topo, 9)?;
                Ok((norm_sqr(&comm, &shard).await?, gather_state(&comm, &shard).await?))
            })
            .unwrap();
        assert_eq!(out[2].0, 1.0);
        let full = out[0].1.as_ref().unwrap();
        assert_eq!(full.len(), 16);
        assert_eq!(full[9], Complex64::new(1.0, 0.0));
        assert!(out[1].1.is_none());
    }

    #[test]
    fn state_dump_round_trips() {
        let amps = vec![Complex64::new(0.1, -1e-300), Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0)];
        let mut buf = Vec::new();
        write_state_dump(&mut buf, &amps).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("0 0.1 -1e-300\n"));
        assert_eq!(parse_state_dump(buf.as_slice()).unwrap(), amps);
        assert!(parse_state_dump("1 0.0 0.0\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn binary_conversions_round_trip(nq in 1usize..20, raw in any::<usize>()) {
            let n = raw % (1 << nq);
            let bits = dectobin(nq, n).unwrap();
            prop_assert_eq!(bintodec(nq, bits.bits()).unwrap(), n);
            let expected: usize = bits.bits().iter().enumerate().map(|(i, &b)| (b as usize) << (nq - 1 - i)).sum();
            prop_assert_eq!(expected, n);
        }
    }
}
