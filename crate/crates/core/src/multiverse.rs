//! Replicas of one algorithm run side by side in rank groups, each under
//! its own noise.
//!
//! The world splits into `group_count` contiguous rank blocks. Group 0 is
//! always noiseless; every other group draws its own noise events. Groups
//! never talk to each other while the algorithm runs, only afterwards when
//! their states are combined into a density matrix and results are
//! reported.

use num_complex::Complex64;

use crate::comm::Comm;
use crate::density::{uniform_weights, validate_weights};
use crate::error::{config, Result};
use crate::grover::{grover_run, GroverConfig, GroverRun};
use crate::noise::{draw_full_plan, validate_plan, NoiseConfig, NoiseEvent};
use crate::shor::{shor_run, ShorConfig, ShorRun};
use crate::state::Shard;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Grover(GroverConfig),
    Shor(ShorConfig),
}

impl Algorithm {
    pub fn nq(&self) -> usize {
        match self {
            Algorithm::Grover(g) => g.nq,
            Algorithm::Shor(s) => s.nq(),
        }
    }

    pub fn injection_points(&self) -> Vec<usize> {
        match self {
            Algorithm::Grover(g) => g.injection_points(),
            Algorithm::Shor(s) => s.injection_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiverseConfig {
    pub group_count: usize,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub noise: NoiseConfig,
    /// Replay these events instead of drawing new ones.
    pub plan: Option<Vec<NoiseEvent>>,
}

impl MultiverseConfig {
    /// Uniform weights, one one-qubit intrusion per noisy group.
    pub fn new(group_count: usize, seed: u64) -> Self {
        MultiverseConfig {
            group_count,
            weights: uniform_weights(group_count.max(1)),
            seed,
            noise: NoiseConfig::default(),
            plan: None,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_plan(mut self, plan: Vec<NoiseEvent>) -> Self {
        self.plan = Some(plan);
        self
    }

    /// The events every group will apply, checked against the algorithm.
    pub fn resolve_plan(&self, alg: &Algorithm) -> Result<Vec<NoiseEvent>> {
        if self.group_count == 0 || !self.group_count.is_power_of_two() {
            return Err(config(format!("group count {} is not a power of two", self.group_count)));
        }
        validate_weights(&self.weights, self.group_count)?;
        let points = alg.injection_points();
        match &self.plan {
            Some(plan) => {
                validate_plan(plan, self.group_count, alg.nq(), &points)?;
                Ok(plan.clone())
            }
            None if self.group_count == 1 => Ok(Vec::new()),
            None => draw_full_plan(self.group_count, self.seed, alg.nq(), &points, self.noise),
        }
    }
}

#[derive(Debug, Clone)]
pub enum GroupResult {
    Grover(GroverRun),
    Shor(ShorRun),
}

impl GroupResult {
    pub fn shard(&self) -> &Shard {
        match self {
            GroupResult::Grover(r) => &r.shard,
            GroupResult::Shor(r) => &r.shard,
        }
    }
}

/// One world rank's share of a multiverse run.
#[derive(Debug, Clone)]
pub struct MultiverseRun {
    pub group_count: usize,
    pub group_id: usize,
    pub group_rank: usize,
    pub plan: Vec<NoiseEvent>,
    pub result: GroupResult,
}

/// Run `alg` in every group of `world`. Collective over `world`, but all
/// traffic stays inside each group.
pub async fn run_multiverse(world: &Comm, alg: &Algorithm, cfg: &MultiverseConfig) -> Result<MultiverseRun> {
    let plan = cfg.resolve_plan(alg)?;
    let group = world.split(cfg.group_count)?;
    group.topology(alg.nq())?;
    let result = match alg {
        Algorithm::Grover(g) => GroupResult::Grover(grover_run(&group, g, &plan).await?),
        Algorithm::Shor(s) => GroupResult::Shor(shor_run(&group, s, &plan, cfg.seed).await?),
    };
    Ok(MultiverseRun {
        group_count: cfg.group_count,
        group_id: group.group_id(),
        group_rank: group.rank(),
        plan,
        result,
    })
}

/// Per-group headline numbers, collected at the world root.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupSummary {
    /// Success probability after each iteration.
    Grover { history: Vec<f64> },
    /// Recovered period and factors, if any.
    Shor {
        period: Option<u64>,
        factors: Option<(u64, u64)>,
    },
}

fn encode(run: &MultiverseRun) -> Vec<Complex64> {
    if run.group_rank != 0 {
        return Vec::new();
    }
    let values: Vec<f64> = match &run.result {
        GroupResult::Grover(g) => g.history.clone(),
        GroupResult::Shor(s) => {
            let o = s.outcome.as_ref().expect("group root holds the outcome");
            let (f1, f2) = o.factors.unwrap_or((0, 0));
            vec![o.period.unwrap_or(0) as f64, f1 as f64, f2 as f64]
        }
    };
    values.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

fn decode(result: &GroupResult, block: &[Complex64]) -> GroupSummary {
    let values: Vec<f64> = block.iter().map(|c| c.re).collect();
    match result {
        GroupResult::Grover(_) => GroupSummary::Grover { history: values },
        GroupResult::Shor(_) => {
            let nonzero = |v: f64| (v != 0.0).then_some(v as u64);
            GroupSummary::Shor {
                period: nonzero(values[0]),
                factors: nonzero(values[1]).zip(nonzero(values[2])),
            }
        }
    }
}

/// Gather every group's summary at the world root, in group order.
pub async fn gather_summaries(world: &Comm, run: &MultiverseRun) -> Result<Option<Vec<GroupSummary>>> {
    let Some(parts) = world.gather_parts(0, encode(run)).await? else {
        return Ok(None);
    };
    let group_size = world.size() / run.group_count;
    Ok(Some(
        parts
            .iter()
            .step_by(group_size)
            .map(|block| decode(&run.result, block))
            .collect(),
    ))
}
