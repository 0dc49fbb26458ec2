mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shardsim::gates::{cphasek, hall, hall2, one_op, two_op, Gate2, Gate4};
use shardsim::grover::grover_oracle;
use shardsim::state::{gather_state, norm_sqr};
use shardsim::{Complex64, LocalWorld, Schedule, Shard};

#[derive(Debug, Clone)]
enum Op {
    One(usize, Gate2),
    Two(usize, usize, Gate4),
}

fn circuit(nq: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<Op> {
    (0..len)
        .map(|_| {
            let a = rng.gen_range(1..=nq);
            if nq >= 2 && rng.gen::<bool>() {
                let mut b = rng.gen_range(1..nq);
                if b >= a {
                    b += 1;
                }
                Op::Two(a, b, gate4(&random_unitary(4, rng)))
            } else {
                Op::One(a, gate2(&random_unitary(2, rng)))
            }
        })
        .collect()
}

fn oracle(nq: usize, ops: &[Op], v: &[Complex64]) -> Vec<Complex64> {
    ops.iter().fold(v.to_vec(), |v, op| match op {
        Op::One(q, g) => apply(&embed_one(nq, *q, &to_mat(&g.0)), &v),
        Op::Two(a, b, g) => apply(&embed_two(nq, *a, *b, &to_mat(&g.0)), &v),
    })
}

/// Gathered final state and the norm seen by every rank.
fn distributed(ranks: usize, ops: &[Op], v: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
    let world = LocalWorld::new(ranks).unwrap();
    let out = world
        .run(Schedule::Sequential, |comm| async move {
            let mut s = Shard::scatter(v, comm.rank(), comm.size())?;
            for op in ops {
                match op {
                    Op::One(q, g) => one_op(&comm, &mut s, *q, g).await?,
                    Op::Two(a, b, g) => two_op(&comm, &mut s, *a, *b, g).await?,
                }
            }
            Ok((gather_state(&comm, &s).await?, norm_sqr(&comm, &s).await?))
        })
        .unwrap();
    let norms = out.iter().map(|o| o.1).collect();
    (out.into_iter().next().unwrap().0.unwrap(), norms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circuits_match_oracle_preserve_norm_and_ignore_rank_count(nq in 1usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_state(nq, &mut rng);
        let ops = circuit(nq, 12, &mut rng);
        let want = oracle(nq, &ops, &v);
        let (base, _) = distributed(1, &ops, &v);
        prop_assert!(max_diff(&base, &want) < 1e-12);
        for p in 1..=nq.min(4) {
            let (got, norms) = distributed(1 << p, &ops, &v);
            prop_assert!(max_diff(&got, &base) < 1e-12, "p = {}", p);
            for n in norms {
                prop_assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hall_variants_agree_and_are_involutions(nq in 1usize..=7, p in 0usize..=3, seed in any::<u64>()) {
        prop_assume!(p <= nq);
        let v = random_state(nq, &mut ChaCha8Rng::seed_from_u64(seed));
        let want = apply(&hadamard_all(nq), &v);
        let v = &v;
        let (a, b, aa, bb) = on_root(1 << p, |comm| async move {
            let mut a = Shard::scatter(v, comm.rank(), comm.size())?;
            let mut b = a.clone();
            hall(&comm, &mut a).await?;
            hall2(&comm, &mut b).await?;
            let (ga, gb) = (gather_state(&comm, &a).await?, gather_state(&comm, &b).await?);
            hall(&comm, &mut a).await?;
            hall2(&comm, &mut b).await?;
            let (gaa, gbb) = (gather_state(&comm, &a).await?, gather_state(&comm, &b).await?);
            Ok(ga.map(|ga| (ga, gb.unwrap(), gaa.unwrap(), gbb.unwrap())))
        });
        prop_assert!(max_diff(&a, &want) < 1e-12);
        prop_assert!(max_diff(&a, &b) < 1e-12);
        prop_assert!(max_diff(&aa, v) < 1e-12);
        prop_assert!(max_diff(&bb, v) < 1e-12);
    }
}

#[test]
fn diagonal_gates_send_nothing() {
    let nq = 6;
    let v = random_state(nq, &mut ChaCha8Rng::seed_from_u64(4));
    let v = &v;
    let world = LocalWorld::new(8).unwrap();
    world
        .run(Schedule::Sequential, |comm| async move {
            let mut s = Shard::scatter(v, comm.rank(), comm.size())?;
            for (a, b) in [(1, 2), (2, 6), (6, 1), (3, 5)] {
                cphasek(&comm, &mut s, a, b, 3).await?;
            }
            grover_oracle(&comm, &mut s, 37)?;
            Ok(())
        })
        .unwrap();
    assert_eq!(world.stats().total(), 0);
}

#[test]
fn named_gates_match_their_matrices() {
    let nq = 4;
    let v = random_state(nq, &mut ChaCha8Rng::seed_from_u64(8));
    let i = c(0.0, 1.0);
    let (o, l) = (c(1.0, 0.0), c(0.0, 0.0));
    let cnot = Mat::from_row_slice(4, 4, &[o, l, l, l, l, o, l, l, l, l, l, o, l, l, o, l]);
    let cp2 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![o, o, o, i]));
    for (a, b) in [(1, 4), (4, 1), (2, 3)] {
        let v = &v;
        let got = on_root(4, |comm| async move {
            let mut s = Shard::scatter(v, comm.rank(), comm.size())?;
            shardsim::gates::cnot(&comm, &mut s, a, b).await?;
            cphasek(&comm, &mut s, a, b, 2).await?;
            gather_state(&comm, &s).await
        });
        let want = apply(&embed_two(nq, a, b, &(&cp2 * &cnot)), v);
        assert!(max_diff(&got, &want) < 1e-12);
    }
}
