//! Rank layout of a sharded state vector.
//!
//! The `2^nq` amplitudes are split into `2^p` equal contiguous slices in
//! standard order, so rank `r` owns global indices `r * n_x .. (r + 1) * n_x`.
//! With that layout the top `p` bits of a global index name the owning rank
//! (its *section*) and the remaining bits are the offset inside the slice
//! (its *seat*). Qubit `i` (1-based, qubit 1 most significant) is therefore
//! a rank bit when `i <= p` and a local bit otherwise.
//!
//! Rank groups ("multiverses") are contiguous blocks of ranks. Every group
//! holds a complete copy of the state, sharded over its own members.

use crate::error::{config, Error, Result};

/// Largest qubit count addressable with 64-bit global indices.
pub const MAX_QUBITS: usize = 62;

/// Returns `log2(n)` when `n` is a positive power of two.
pub fn log2_exact(n: usize) -> Option<usize> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros() as usize)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    nq: usize,
    p: usize,
    rank: usize,
    group_count: usize,
    group_id: usize,
    group_rank: usize,
}

impl Topology {
    /// A single-group topology of `ranks` ranks holding an `nq`-qubit state.
    pub fn new(nq: usize, ranks: usize, rank: usize) -> Result<Self> {
        Self::with_groups(nq, ranks, rank, 1)
    }

    pub fn with_groups(nq: usize, ranks: usize, rank: usize, group_count: usize) -> Result<Self> {
        if nq == 0 || nq > MAX_QUBITS {
            return Err(config(format!("qubit count {nq} outside 1..={MAX_QUBITS}")));
        }
        let p = log2_exact(ranks)
            .ok_or_else(|| config(format!("rank count {ranks} is not a power of two")))?;
        if rank >= ranks {
            return Err(Error::Index {
                what: "rank",
                index: rank as u64,
                limit: ranks as u64,
            });
        }
        let (group_id, group_rank) = group_assignment(rank, ranks, group_count)?;
        let topo = Topology {
            nq,
            p,
            rank,
            group_count,
            group_id,
            group_rank,
        };
        if topo.local_p() > nq {
            return Err(config(format!(
                "{} ranks per group exceed the {} amplitudes of a {nq}-qubit state",
                topo.group_size(),
                topo.dim()
            )));
        }
        Ok(topo)
    }

    /// Re-split the ranks of this topology into `group_count` contiguous groups.
    pub fn split_groups(&self, group_count: usize) -> Result<Self> {
        Self::with_groups(self.nq, self.ranks(), self.rank, group_count)
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    /// log2 of the total rank count.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ranks(&self) -> usize {
        1 << self.p
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn group_id(&self) -> usize {
        self.group_id
    }

    pub fn group_rank(&self) -> usize {
        self.group_rank
    }

    pub fn group_size(&self) -> usize {
        self.ranks() / self.group_count
    }

    /// log2 of the number of ranks sharing one copy of the state.
    pub fn local_p(&self) -> usize {
        self.group_size().trailing_zeros() as usize
    }

    /// Amplitudes held by each rank.
    pub fn n_x(&self) -> usize {
        1 << (self.nq - self.local_p())
    }

    pub fn dim(&self) -> usize {
        1 << self.nq
    }

    pub fn section_seat(&self, n: usize) -> Result<(usize, usize)> {
        section_seat(n, self.n_x(), self.dim())
    }

    /// Whether qubit `i_s` pairs amplitudes within a single rank's slice.
    pub fn same_section(&self, i_s: usize) -> Result<bool> {
        if i_s == 0 || i_s > self.nq {
            return Err(Error::Index {
                what: "qubit",
                index: i_s as u64,
                limit: self.nq as u64,
            });
        }
        Ok(same_section(i_s, self.local_p()))
    }
}

/// Owning rank and local offset of global amplitude `n`.
pub fn section_seat(n: usize, n_x: usize, dim: usize) -> Result<(usize, usize)> {
    if n >= dim {
        return Err(Error::Index {
            what: "amplitude",
            index: n as u64,
            limit: dim as u64,
        });
    }
    Ok((n / n_x, n % n_x))
}

/// True iff both amplitudes of every pair struck by qubit `i_s` live on one rank.
pub fn same_section(i_s: usize, p: usize) -> bool {
    i_s > p
}

/// Contiguous block assignment of `rank` to one of `group_count` groups.
pub fn group_assignment(rank: usize, ranks: usize, group_count: usize) -> Result<(usize, usize)> {
    if !group_count.is_power_of_two() || group_count > ranks || !ranks.is_multiple_of(group_count) {
        return Err(config(format!(
            "group count {group_count} must be a power of two dividing {ranks} ranks"
        )));
    }
    let per_group = ranks / group_count;
    Ok((rank / per_group, rank % per_group))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn section_seat_examples() {
        assert_eq!(section_seat(0, 4, 8).unwrap(), (0, 0));
        assert_eq!(section_seat(5, 4, 8).unwrap(), (1, 1));
        assert_eq!(section_seat(7, 4, 8).unwrap(), (1, 3));
        assert!(matches!(section_seat(8, 4, 8), Err(Error::Index { .. })));
    }

    #[test]
    fn same_section_examples() {
        assert!(same_section(2, 1));
        assert!(!same_section(1, 1));
        for i_s in 1..=5 {
            assert!(same_section(i_s, 0));
        }
    }

    #[test]
    fn split_examples() {
        let groups: Vec<_> = (0..4).map(|r| group_assignment(r, 4, 2).unwrap()).collect();
        assert_eq!(groups, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        for r in 0..8 {
            assert_eq!(group_assignment(r, 8, 1).unwrap(), (0, r));
            assert_eq!(group_assignment(r, 8, 8).unwrap(), (r, 0));
        }
        assert!(group_assignment(0, 8, 3).is_err());
        assert!(group_assignment(0, 4, 8).is_err());
    }

    #[test]
    fn rejects_bad_rank_counts() {
        assert!(matches!(Topology::new(4, 3, 0), Err(Error::Config(_))));
        assert!(matches!(Topology::new(2, 8, 0), Err(Error::Config(_))));
        assert!(Topology::new(3, 8, 7).is_ok());
        assert!(Topology::new(3, 2, 2).is_err());
        // groups may push the world rank count past 2^nq as long as each group fits
        let t = Topology::with_groups(2, 16, 13, 4).unwrap();
        assert_eq!((t.group_id(), t.group_rank(), t.n_x()), (3, 1, 1));
    }

    #[test]
    fn slice_length_covers_state() {
        for nq in 1..8 {
            for p in 0..=nq {
                let t = Topology::new(nq, 1 << p, 0).unwrap();
                assert_eq!(t.n_x() * t.ranks(), t.dim());
            }
        }
    }

    proptest! {
        #[test]
        fn section_seat_inverts(nq in 1usize..12, p_frac in 0usize..12, n_raw in any::<usize>()) {
            let p = p_frac % (nq + 1);
            let t = Topology::new(nq, 1 << p, 0).unwrap();
            let n = n_raw % t.dim();
            let (section, seat) = t.section_seat(n).unwrap();
            prop_assert_eq!(section * t.n_x() + seat, n);
            prop_assert!(seat < t.n_x());
        }

        #[test]
        fn same_section_matches_stride(nq in 1usize..12, p_frac in 0usize..12, i_frac in 0usize..12) {
            let p = p_frac % (nq + 1);
            let i_s = 1 + i_frac % nq;
            let t = Topology::new(nq, 1 << p, 0).unwrap();
            let stride = 1usize << (nq - i_s);
            prop_assert_eq!(t.same_section(i_s).unwrap(), stride < t.n_x());
        }

        #[test]
        fn groups_partition_ranks(p in 0usize..6, g_frac in 0usize..6) {
            let ranks = 1usize << p;
            let group_count = 1usize << (g_frac % (p + 1));
            let mut seen = vec![vec![false; ranks / group_count]; group_count];
            for r in 0..ranks {
                let (g, gr) = group_assignment(r, ranks, group_count).unwrap();
                prop_assert!(!seen[g][gr]);
                seen[g][gr] = true;
            }
            prop_assert!(seen.iter().flatten().all(|&s| s));
        }
    }
}
