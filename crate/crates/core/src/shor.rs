//! Period finding for factoring an odd composite `M`.
//!
//! Register one (`n1` qubits) holds the exponent `n`, register two (`n2`
//! qubits) holds `f(n) = xguess^n mod M`. The function values are loaded
//! classically; the quantum part is the Fourier transform of register one
//! and the measurement statistics that follow.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::{check_factorable, continued_fraction_period, extract_factors, gcd, modpow, pick_xguess};
use crate::comm::Comm;
use crate::error::{input, Error, Rejection, Result};
use crate::noise::{inject, NoiseEvent};
use crate::qft::{project_register2, qft, sample_register2, RegisterSpec, ZERO_PROBABILITY};
use crate::rng::{stream, Purpose};
use crate::state::{gather_state, Shard};

/// Largest total qubit count a factoring run may request.
pub const MAX_SHOR_QUBITS: usize = 30;

/// Injection point right after loading `f`.
pub const ELOC_LOAD: usize = 0;
/// Injection point right after projecting register two (sampling mode).
pub const ELOC_PROJECT: usize = 1;
/// Injection point right after the Fourier transform.
pub const ELOC_QFT: usize = 2;

fn ceil_log2(x: u128) -> usize {
    (128 - (x - 1).leading_zeros()) as usize
}

/// `(n1, n2, Q)` with `Q = 2^n1` the least power of two `>= M^2` and
/// `2^n2` the least power of two `>= M`.
pub fn shor_register_sizes(m: u64) -> Result<(usize, usize, u64)> {
    if m < 3 {
        return Err(Error::Rejected {
            m,
            reason: Rejection::TooSmall,
        });
    }
    let n1 = ceil_log2(m as u128 * m as u128);
    let n2 = ceil_log2(m as u128);
    if n1 + n2 > MAX_SHOR_QUBITS {
        return Err(Error::Rejected {
            m,
            reason: Rejection::TooLarge,
        });
    }
    Ok((n1, n2, 1u64 << n1))
}

/// How register two is handled before reading register one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShorMode {
    /// Transform first, then analyse every possible register-two outcome.
    #[default]
    Enumerate,
    /// Draw one register-two outcome, project onto it, then transform.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShorConfig {
    pub m: u64,
    pub xguess: u64,
    pub regs: RegisterSpec,
    pub mode: ShorMode,
}

impl ShorConfig {
    pub fn new(m: u64, xguess: u64) -> Result<Self> {
        check_factorable(m)?;
        let (n1, n2, _) = shor_register_sizes(m)?;
        if !(2..m).contains(&xguess) || gcd(xguess, m) != 1 {
            return Err(input(format!("xguess {xguess} must lie in 2..{m} and be coprime to {m}")));
        }
        Ok(ShorConfig {
            m,
            xguess,
            regs: RegisterSpec::new(n1, n2)?,
            mode: ShorMode::Enumerate,
        })
    }

    /// Like [`new`](Self::new) with `xguess` drawn from the seeded stream.
    pub fn with_seed(m: u64, seed: u64) -> Result<Self> {
        check_factorable(m)?;
        shor_register_sizes(m)?;
        let x = pick_xguess(m, &mut stream(seed, Purpose::Xguess, 0))?;
        Self::new(m, x)
    }

    pub fn with_mode(mut self, mode: ShorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn n1(&self) -> usize {
        self.regs.n1()
    }

    pub fn n2(&self) -> usize {
        self.regs.n2()
    }

    pub fn nq(&self) -> usize {
        self.regs.nq()
    }

    pub fn big_n(&self) -> u64 {
        1 << self.n1()
    }

    pub fn f(&self, n: u64) -> u64 {
        modpow(self.xguess, n, self.m)
    }

    pub fn injection_points(&self) -> Vec<usize> {
        match self.mode {
            ShorMode::Enumerate => vec![ELOC_LOAD, ELOC_QFT],
            ShorMode::Sample => vec![ELOC_LOAD, ELOC_PROJECT, ELOC_QFT],
        }
    }
}

/// `2^(-n1/2) sum_n |n>|f(n)>`, written directly into each rank's slice.
pub fn load_shor_state(comm: &Comm, cfg: &ShorConfig) -> Result<Shard> {
    let topology = comm.topology(cfg.nq())?;
    let mut shard = Shard::zeros(&topology);
    let amp = Complex64::new((-(cfg.n1() as f64) / 2.0).exp2(), 0.0);
    let base = shard.base();
    let n_x = shard.n_x();
    let (first, last) = (cfg.regs.split(base).0, cfg.regs.split(base + n_x - 1).0);
    for n in first..=last {
        let index = cfg.regs.join(n, cfg.f(n as u64) as usize);
        if shard.owns(index) {
            shard.amps_mut()[index - base] = amp;
        }
    }
    Ok(shard)
}

/// `[sin(D pi n r / N) / sin(pi n r / N)]^2 / (N D)` with `N = 2^n1`, equal
/// to `D / N` when `n r / N` is an integer.
pub fn shor_peak_probability(n: u64, r: u64, d: u64, n1: usize) -> f64 {
    let big_n = 1u128 << n1;
    let reduced = (n as u128 * r as u128) % big_n;
    let (big_n, d) = (big_n as f64, d as f64);
    if reduced == 0 {
        return d / big_n;
    }
    let x = PI * reduced as f64 / big_n;
    ((d * x).sin() / x.sin()).powi(2) / (big_n * d)
}

/// Indices whose value beats both cyclic neighbours and `0.5 / len`.
pub fn local_maxima(probs: &[f64]) -> Vec<usize> {
    let len = probs.len();
    let floor = 0.5 / len as f64;
    (0..len)
        .filter(|&i| {
            let (prev, next) = (probs[(i + len - 1) % len], probs[(i + 1) % len]);
            probs[i] > floor && probs[i] > prev && probs[i] > next
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub nbar: u64,
    /// `p(nbar | k)` read off the simulated state.
    pub probability: f64,
    pub period: Option<u64>,
    pub factors: Option<(u64, u64)>,
}

/// Analysis of register one given register-two outcome `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub k: u64,
    /// Probability of observing `k`.
    pub probability: f64,
    /// Smallest `n` with `f(n) = k`.
    pub n_k: Option<u64>,
    /// Number of `n < 2^n1` with `f(n) = k`.
    pub d: u64,
    pub peaks: Vec<Peak>,
    /// `p(n | k)` for every `n`.
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShorOutcome {
    pub m: u64,
    pub xguess: u64,
    pub n1: usize,
    pub n2: usize,
    pub mode: ShorMode,
    pub branches: Vec<Branch>,
    /// Period from the first peak that produced a nontrivial factor.
    pub period: Option<u64>,
    /// Nontrivial factor pair `(f, M / f)`, smaller first.
    pub factors: Option<(u64, u64)>,
}

impl ShorOutcome {
    /// `floor(2^n1 / r)` for the recovered period.
    pub fn d_floor(&self) -> Option<u64> {
        self.period.map(|r| (1u64 << self.n1) / r)
    }

    /// Upper bound `floor((2^n1 + r - 1 - n_k) / r)` on `D` for a branch,
    /// using the recovered period.
    pub fn d_bound(&self, branch: &Branch) -> Option<u64> {
        let r = self.period?;
        let n_k = branch.n_k?;
        ((1u64 << self.n1) + r - 1).checked_sub(n_k).map(|x| x / r)
    }
}

#[derive(Debug, Clone)]
pub struct ShorRun {
    pub shard: Shard,
    /// Present on the communicator root only.
    pub outcome: Option<ShorOutcome>,
}

fn nontrivial(f: u64, m: u64) -> bool {
    f > 1 && f < m
}

/// Per-`k` occurrence count and first occurrence of `f` over register one.
fn occurrences(cfg: &ShorConfig) -> (Vec<u64>, Vec<Option<u64>>) {
    let k_count = 1usize << cfg.n2();
    let mut d = vec![0u64; k_count];
    let mut first = vec![None; k_count];
    for n in 0..cfg.big_n() {
        let k = cfg.f(n) as usize;
        d[k] += 1;
        first[k].get_or_insert(n);
    }
    (d, first)
}

/// Read peaks, periods and factors off the full final state.
///
/// `measured` is the register-two outcome already projected onto, with its
/// probability before projection; without it every outcome is analysed.
pub fn analyse(cfg: &ShorConfig, full: &[Complex64], measured: Option<(usize, f64)>) -> ShorOutcome {
    let big_n = cfg.big_n() as usize;
    let k_count = 1usize << cfg.n2();
    let (d, first) = occurrences(cfg);
    let ks: Vec<usize> = match measured {
        Some((k, _)) => vec![k],
        None => (0..k_count).collect(),
    };
    let mut branches = Vec::new();
    for k in ks {
        let column: Vec<f64> = (0..big_n).map(|n| full[cfg.regs.join(n, k)].norm_sqr()).collect();
        let pk: f64 = column.iter().sum();
        if pk <= ZERO_PROBABILITY {
            continue;
        }
        let distribution: Vec<f64> = column.iter().map(|p| p / pk).collect();
        let peaks = local_maxima(&distribution)
            .into_iter()
            .map(|i| {
                let nbar = i as u64;
                let period = continued_fraction_period(nbar, cfg.big_n(), cfg.m, cfg.xguess);
                let factors = period.and_then(|r| extract_factors(cfg.xguess, r, cfg.m).ok().flatten());
                Peak {
                    nbar,
                    probability: distribution[i],
                    period,
                    factors,
                }
            })
            .collect();
        branches.push(Branch {
            k: k as u64,
            probability: measured.map_or(pk, |m| m.1),
            n_k: first[k],
            d: d[k],
            peaks,
            distribution,
        });
    }
    let found = branches.iter().flat_map(|b| &b.peaks).find_map(|p| {
        let (f1, f2) = p.factors?;
        let f = [f1, f2].into_iter().find(|&f| nontrivial(f, cfg.m))?;
        let pair = (f.min(cfg.m / f), f.max(cfg.m / f));
        Some((p.period?, pair))
    });
    ShorOutcome {
        m: cfg.m,
        xguess: cfg.xguess,
        n1: cfg.n1(),
        n2: cfg.n2(),
        mode: cfg.mode,
        branches,
        period: found.map(|f| f.0),
        factors: found.map(|f| f.1),
    }
}

/// Run period finding on `comm`, applying this group's noise events.
///
/// In sampling mode `seed` drives the register-two draw on the root.
pub async fn shor_run(comm: &Comm, cfg: &ShorConfig, plan: &[NoiseEvent], seed: u64) -> Result<ShorRun> {
    let group = comm.group_id();
    let mut shard = load_shor_state(comm, cfg)?;
    inject(comm, &mut shard, plan, group, ELOC_LOAD).await?;
    let measured = match cfg.mode {
        ShorMode::Enumerate => None,
        ShorMode::Sample => {
            let mut rng = stream(seed, Purpose::Measurement, group);
            let k = sample_register2(comm, &shard, cfg.regs, &mut rng).await?;
            let pk = project_register2(comm, &mut shard, cfg.regs, k).await?;
            inject(comm, &mut shard, plan, group, ELOC_PROJECT).await?;
            Some((k, pk))
        }
    };
    qft(comm, &mut shard, cfg.n1()).await?;
    inject(comm, &mut shard, plan, group, ELOC_QFT).await?;
    let outcome = gather_state(comm, &shard)
        .await?
        .map(|full| analyse(cfg, &full, measured));
    Ok(ShorRun { shard, outcome })
}
