mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shardsim::density::{assemble_density, entropy, DensityMode, Ensemble};
use shardsim::grover::{grover_run, GroverConfig};
use shardsim::multiverse::{run_multiverse, Algorithm, MultiverseConfig};
use shardsim::noise::{NoiseConfig, NoiseKind};
use shardsim::state::{gather_state, norm_sqr};
use shardsim::{Complex64, LocalWorld, Schedule};

/// Run the multiverse twice: once alone to count cross-group traffic and
/// record group norms, once followed by density assembly.
fn assembled(ranks: usize, alg: Algorithm, cfg: &MultiverseConfig, mode: DensityMode) -> (Ensemble, u64, Vec<f64>) {
    let world = LocalWorld::new(ranks).unwrap();
    let norms = world
        .run(Schedule::Sequential, |comm| async move {
            let run = run_multiverse(&comm, &alg, cfg).await?;
            norm_sqr(&comm.split(cfg.group_count)?, run.result.shard()).await
        })
        .unwrap();
    let cross = world.stats().cross_group(cfg.group_count);
    let e = on_root(ranks, |comm| async move {
        let run = run_multiverse(&comm, &alg, cfg).await?;
        assemble_density(&comm, run.result.shard(), &cfg.weights, mode).await
    });
    (e, cross, norms)
}

#[test]
fn noisy_grover_ensemble() {
    let g = GroverConfig::new(6, 9).unwrap();
    let alg = Algorithm::Grover(g);
    let cfg = MultiverseConfig::new(2, 3).with_noise(NoiseConfig { count: 2, kind: NoiseKind::TwoQubit });
    let plain = on_root(2, |comm| async move {
        let r = grover_run(&comm, &g, &[]).await?;
        gather_state(&comm, &r.shard).await
    });
    let (root, cross, norms) = assembled(4, alg, &cfg, DensityMode::Root);
    assert_eq!(cross, 0);
    assert!(max_diff(&root.states[0], &plain) < 1e-12);
    assert!(max_diff(&root.states[1], &plain) > 1e-3);
    assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
    assert!((root.rho.trace() - 1.0).abs() < 1e-10);

    let brute = mixture(&root.states, &root.weights);
    assert!(max_diff(root.rho.data(), brute.transpose().as_slice()) < 1e-12);

    let (part, _, _) = assembled(4, alg, &cfg, DensityMode::Partitioned);
    assert!(max_diff(part.rho.data(), root.rho.data()) < 1e-12);

    let eigs = root.spectrum().unwrap();
    let want = hermitian_spectrum(&brute);
    for (a, b) in eigs.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((eigs.iter().sum::<f64>() - root.rho.trace()).abs() < 1e-8);
    let s = entropy(&eigs).unwrap();
    assert!((s - entropy_bits(&want)).abs() < 1e-8);
    assert!(s > 0.0 && s <= 1.0 + 1e-12);
    assert!(root.rho.purity() < 1.0);
}

#[test]
fn rank_layouts_give_the_same_ensemble() {
    let alg = Algorithm::Grover(GroverConfig::new(7, 100).unwrap());
    let cfg = MultiverseConfig::new(4, 11).with_noise(NoiseConfig { count: 3, kind: NoiseKind::OneQubit });
    let (base, _, _) = assembled(4, alg, &cfg, DensityMode::Root);
    for ranks in [8, 16] {
        let (other, cross, _) = assembled(ranks, alg, &cfg, DensityMode::Partitioned);
        assert_eq!(cross, 0);
        assert!(max_diff(other.rho.data(), base.rho.data()) < 1e-12);
    }
    let eigs = base.spectrum().unwrap();
    let want = hermitian_spectrum(&mixture(&base.states, &base.weights));
    for (a, b) in eigs.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn weight_on_the_noiseless_group_gives_a_pure_state() {
    let alg = Algorithm::Grover(GroverConfig::new(5, 3).unwrap());
    let cfg = MultiverseConfig::new(2, 1).with_weights(vec![1.0, 0.0]);
    let (e, _, _) = assembled(2, alg, &cfg, DensityMode::Partitioned);
    let eigs = e.spectrum().unwrap();
    assert!((eigs[0] - 1.0).abs() < 1e-10);
    assert!(eigs[1..].iter().all(|l| l.abs() < 1e-10));
    assert!(entropy(&eigs).unwrap().abs() < 1e-8);
    assert!((e.rho.purity() - 1.0).abs() < 1e-8);
}

#[test]
fn orthogonal_pair_carries_one_bit() {
    let mut a = vec![Complex64::default(); 8];
    let mut b = a.clone();
    a[1] = c(1.0, 0.0);
    b[6] = c(0.0, 1.0);
    let e = Ensemble::from_states(vec![a, b], vec![0.5, 0.5]).unwrap();
    assert!((entropy(&e.spectrum().unwrap()).unwrap() - 1.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_mixtures(nq in 1usize..=5, g in 1usize..=4, seed in any::<u64>(), raw in prop::collection::vec(0.01f64..1.0, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states: Vec<_> = (0..g).map(|_| random_state(nq, &mut rng)).collect();
        let total: f64 = raw[..g].iter().sum();
        let weights: Vec<f64> = raw[..g].iter().map(|w| w / total).collect();
        let e = Ensemble::from_states(states.clone(), weights.clone()).unwrap();
        prop_assert!((e.rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(e.rho.purity() <= 1.0 + 1e-10);
        let eigs = e.spectrum().unwrap();
        prop_assert!((eigs.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        let want = hermitian_spectrum(&mixture(&states, &weights));
        for (a, b) in eigs.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let s = entropy(&eigs).unwrap();
        prop_assert!(s >= 0.0 && s <= (g as f64).log2() + 1e-9);
    }
}
