//! Grover search for a single marked basis state.

use std::f64::consts::PI;

use crate::comm::Comm;
use crate::error::{Error, Result};
use crate::gates::hall;
use crate::noise::{inject, NoiseEvent};
use crate::state::{check_index, check_nq, Shard};

/// `round(pi/4 * sqrt(2^nq))`.
pub fn optimal_iterations(nq: usize) -> usize {
    (PI / 4.0 * 2f64.powf(nq as f64 / 2.0)).round() as usize
}

/// `sin^2((2t + 1) asin(2^(-nq/2)))`, the success probability after `t`
/// iterations.
pub fn closed_form_probability(nq: usize, t: usize) -> f64 {
    let theta = 2f64.powf(-(nq as f64) / 2.0).asin();
    ((2 * t + 1) as f64 * theta).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroverConfig {
    pub nq: usize,
    pub marked: usize,
    pub iterations: usize,
}

impl GroverConfig {
    /// Search `2^nq` items for `marked` with the optimal iteration count.
    pub fn new(nq: usize, marked: usize) -> Result<Self> {
        check_nq(nq)?;
        check_index(marked, nq).map_err(|_| Error::Index {
            what: "marked item",
            index: marked as u64,
            limit: 1u64 << nq,
        })?;
        Ok(GroverConfig {
            nq,
            marked,
            iterations: optimal_iterations(nq),
        })
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    /// Noise may strike after iteration `t` for `t = 1..=iterations`.
    pub fn injection_points(&self) -> Vec<usize> {
        (1..=self.iterations).collect()
    }
}

/// Flip the sign of the marked amplitude. Local to its owner.
pub fn grover_oracle(comm: &Comm, shard: &mut Shard, marked: usize) -> Result<()> {
    shard.check_comm(comm)?;
    check_index(marked, shard.nq())?;
    if shard.owns(marked) {
        let seat = marked - shard.base();
        shard.amps_mut()[seat] = -shard.amps()[seat];
    }
    Ok(())
}

/// Flip the sign of every amplitude except `C_0`.
pub fn grover_inversion(comm: &Comm, shard: &mut Shard) -> Result<()> {
    shard.check_comm(comm)?;
    let base = shard.base();
    for (seat, c) in shard.amps_mut().iter_mut().enumerate() {
        if base + seat != 0 {
            *c = -*c;
        }
    }
    Ok(())
}

/// `|C_marked|^2`, identical on every rank.
pub async fn marked_probability(comm: &Comm, shard: &Shard, marked: usize) -> Result<f64> {
    shard.check_comm(comm)?;
    let local = if shard.owns(marked) {
        shard.amps()[marked - shard.base()].norm_sqr()
    } else {
        0.0
    };
    Ok(comm.allreduce_tree_sum(&[local]).await?[0])
}

#[derive(Debug, Clone)]
pub struct GroverRun {
    pub shard: Shard,
    /// Success probability after `t` iterations, `t = 0..=iterations`.
    pub history: Vec<f64>,
}

impl GroverRun {
    pub fn success(&self) -> f64 {
        *self.history.last().expect("history holds t = 0")
    }
}

/// Run the search on `comm`, applying this group's events from `plan`
/// after the iterations they name.
pub async fn grover_run(comm: &Comm, cfg: &GroverConfig, plan: &[NoiseEvent]) -> Result<GroverRun> {
    let topology = comm.topology(cfg.nq)?;
    let mut shard = Shard::basis(&topology, 0)?;
    hall(comm, &mut shard).await?;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(marked_probability(comm, &shard, cfg.marked).await?);
    for t in 1..=cfg.iterations {
        grover_oracle(comm, &mut shard, cfg.marked)?;
        hall(comm, &mut shard).await?;
        grover_inversion(comm, &mut shard)?;
        hall(comm, &mut shard).await?;
        inject(comm, &mut shard, plan, comm.group_id(), t).await?;
        history.push(marked_probability(comm, &shard, cfg.marked).await?);
    }
    Ok(GroverRun { shard, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::{LocalWorld, Schedule};
    use crate::state::{gather_state, norm_sqr};
    use num_complex::Complex64;

    fn run(ranks: usize, cfg: GroverConfig) -> (Vec<f64>, Vec<Complex64>) {
        let world = LocalWorld::new(ranks).unwrap();
        let mut out = world
            .run(Schedule::Sequential, |comm| async move {
                let r = grover_run(&comm, &cfg, &[]).await?;
                assert!((norm_sqr(&comm, &r.shard).await? - 1.0).abs() < 1e-10);
                let full = gather_state(&comm, &r.shard).await?;
                Ok((r.history, full))
            })
            .unwrap();
        let (h, full) = out.remove(0);
        (h, full.unwrap())
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(optimal_iterations(2), 2);
        assert_eq!(optimal_iterations(10), 25);
        assert_eq!(optimal_iterations(4), 3);
        assert!(GroverConfig::new(3, 8).is_err());
    }

    #[test]
    fn oracle_and_inversion_examples() {
        let world = LocalWorld::new(2).unwrap();
        let out = world
            .run(Schedule::Sequential, |comm| async move {
                let topo = comm.topology(2)?;
                let mut s = Shard::basis(&topo, 0)?;
                hall(&comm, &mut s).await?;
                let uniform = s.clone();
                grover_oracle(&comm, &mut s, 2)?;
                let flipped = gather_state(&comm, &s).await?;
                grover_oracle(&comm, &mut s, 2)?;
                assert_eq!(s, uniform);
                grover_inversion(&comm, &mut s)?;
                let inverted = gather_state(&comm, &s).await?;
                grover_inversion(&comm, &mut s)?;
                assert_eq!(s, uniform);
                let mut zero = Shard::basis(&topo, 0)?;
                grover_inversion(&comm, &mut zero)?;
                assert_eq!(zero, Shard::basis(&topo, 0)?);
                Ok((flipped, inverted))
            })
            .unwrap();
        let (flipped, inverted) = out[0].clone();
        let re = |v: Option<Vec<Complex64>>| v.unwrap().iter().map(|c| c.re).collect::<Vec<_>>();
        let close = |a: Vec<f64>, b: [f64; 4]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(re(flipped), [0.5, 0.5, -0.5, 0.5]));
        assert!(close(re(inverted), [0.5, -0.5, -0.5, -0.5]));
    }

    #[test]
    fn oracle_touches_only_owner() {
        let world = LocalWorld::new(2).unwrap();
        let changed = world
            .run(Schedule::Sequential, |comm| async move {
                let mut s = Shard::basis(&comm.topology(3)?, 6)?;
                let before = s.clone();
                grover_oracle(&comm, &mut s, 6)?;
                Ok(s != before)
            })
            .unwrap();
        assert_eq!(changed, vec![false, true]);
        assert_eq!(world.stats().total(), 0);
    }

    #[test]
    fn two_qubits_one_iteration_is_exact() {
        for marked in 0..4 {
            let (h, _) = run(2, GroverConfig::new(2, marked).unwrap().with_iterations(1));
            assert!((h[0] - 0.25).abs() < 1e-15);
            assert!((h[1] - 1.0).abs() < 1e-12);
        }
        let (h, _) = run(1, GroverConfig::new(3, 5).unwrap().with_iterations(0));
        assert_eq!(h.len(), 1);
        assert!((h[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn matches_closed_form_and_rank_count() {
        let cfg = GroverConfig::new(6, 13).unwrap();
        let (h1, s1) = run(1, cfg);
        for (t, p) in h1.iter().enumerate() {
            assert!((p - closed_form_probability(6, t)).abs() < 1e-10);
        }
        for ranks in [2, 4, 8] {
            let (h, s) = run(ranks, cfg);
            assert_eq!(h, h1);
            assert_eq!(s, s1);
        }
    }
}
