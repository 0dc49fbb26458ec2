//! Distributed kernels checked against the dense reference on random input.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comm::Comm;
use crate::dense::{
    dft_operator, hadamard_all, max_abs_diff, one_qubit_operator, random_gate2, random_gate4, random_state,
    two_qubit_operator,
};
use crate::error::{input, Result};
use crate::gates::{cnot, cphase, cphasek, hall, hall2, one_op, swap, two_op, Gate4};
use crate::grover::{closed_form_probability, grover_run, GroverConfig};
use crate::qft::{inverse_qft, qft};
use crate::state::{gather_state, Shard};

/// Largest register the dense reference is asked to handle.
pub const MAX_SELFTEST_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestConfig {
    pub nq: usize,
    pub seed: u64,
    /// Random gates per qubit and per qubit pair.
    pub gates_per_target: usize,
    /// Perturb every distributed result before comparing.
    pub inject_fault: bool,
}

impl SelftestConfig {
    pub fn new(nq: usize, seed: u64) -> Result<Self> {
        if !(1..=MAX_SELFTEST_QUBITS).contains(&nq) {
            return Err(input(format!("selftest needs 1..={MAX_SELFTEST_QUBITS} qubits, got {nq}")));
        }
        Ok(SelftestConfig {
            nq,
            seed,
            gates_per_target: 50,
            inject_fault: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check {
            name,
            cases: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        if error.is_nan() || error > self.max_error {
            self.max_error = if error.is_nan() { f64::INFINITY } else { error };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed()).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

struct Ctx<'a> {
    comm: &'a Comm,
    cfg: SelftestConfig,
    rng: ChaCha8Rng,
}

impl Ctx<'_> {
    fn scatter(&self, full: &[Complex64]) -> Result<Shard> {
        let topo = self.comm.topology(self.cfg.nq)?;
        Shard::scatter(full, topo.group_rank(), topo.group_size())
    }

    /// Gather `shard` and compare with `want()`, evaluated on the root only.
    async fn compare(&self, check: &mut Check, shard: &Shard, want: impl FnOnce() -> Vec<Complex64>) -> Result<()> {
        if let Some(mut got) = gather_state(self.comm, shard).await? {
            if self.cfg.inject_fault {
                got[0] += Complex64::new(1e-6, 0.0);
            }
            check.record(max_abs_diff(&got, &want()));
        }
        Ok(())
    }
}

async fn one_qubit_gates(ctx: &mut Ctx<'_>) -> Result<Check> {
    let mut check = Check::new("one-qubit gates", 1e-12);
    let nq = ctx.cfg.nq;
    for i_s in 1..=nq {
        let mut v = random_state(nq, &mut ctx.rng);
        let mut shard = ctx.scatter(&v)?;
        for _ in 0..ctx.cfg.gates_per_target {
            let g = random_gate2(&mut ctx.rng);
            one_op(ctx.comm, &mut shard, i_s, &g).await?;
            ctx.compare(&mut check, &shard, || {
                v = one_qubit_operator(nq, i_s, &g).apply(&v);
                v.clone()
            })
            .await?;
        }
    }
    Ok(check)
}

async fn two_qubit_gates(ctx: &mut Ctx<'_>) -> Result<Check> {
    let mut check = Check::new("two-qubit gates", 1e-12);
    let nq = ctx.cfg.nq;
    for a in 1..=nq {
        for b in a + 1..=nq {
            let mut v = random_state(nq, &mut ctx.rng);
            let mut shard = ctx.scatter(&v)?;
            for _ in 0..ctx.cfg.gates_per_target {
                let g = random_gate4(&mut ctx.rng);
                let (i1, i2) = if ctx.rng.gen::<bool>() { (a, b) } else { (b, a) };
                two_op(ctx.comm, &mut shard, i1, i2, &g).await?;
                ctx.compare(&mut check, &shard, || {
                    v = two_qubit_operator(nq, i1, i2, &g).apply(&v);
                    v.clone()
                })
                .await?;
            }
        }
    }
    Ok(check)
}

async fn named_gates(ctx: &mut Ctx<'_>) -> Result<Check> {
    let mut check = Check::new("named two-qubit gates", 1e-12);
    let nq = ctx.cfg.nq;
    for i in 1..=nq {
        for j in (1..=nq).filter(|&j| j != i) {
            let v = random_state(nq, &mut ctx.rng);
            let cases: [(Gate4, u32); 6] = [
                (Gate4::cnot(), 0),
                (Gate4::swap(), 1),
                (Gate4::cphase(), 2),
                (Gate4::cphasek(1)?, 3),
                (Gate4::cphasek(2)?, 4),
                (Gate4::cphasek(3)?, 5),
            ];
            for (g, which) in cases {
                let mut shard = ctx.scatter(&v)?;
                match which {
                    0 => cnot(ctx.comm, &mut shard, i, j).await?,
                    1 => swap(ctx.comm, &mut shard, i, j).await?,
                    2 => cphase(ctx.comm, &mut shard, i, j).await?,
                    k => cphasek(ctx.comm, &mut shard, i, j, k - 2).await?,
                }
                ctx.compare(&mut check, &shard, || two_qubit_operator(nq, i, j, &g).apply(&v))
                    .await?;
            }
        }
    }
    Ok(check)
}

async fn hadamard_all_checks(ctx: &mut Ctx<'_>) -> Result<Vec<Check>> {
    let mut agree = Check::new("hall matches hall2", 1e-12);
    let mut involution = Check::new("hall and hall2 square to identity", 1e-12);
    let nq = ctx.cfg.nq;
    for _ in 0..3 {
        let v = random_state(nq, &mut ctx.rng);
        let mut a = ctx.scatter(&v)?;
        hall(ctx.comm, &mut a).await?;
        let mut b = ctx.scatter(&v)?;
        hall2(ctx.comm, &mut b).await?;
        let dense = || hadamard_all(nq).apply(&v);
        ctx.compare(&mut agree, &a, dense).await?;
        ctx.compare(&mut agree, &b, dense).await?;
        hall(ctx.comm, &mut a).await?;
        hall2(ctx.comm, &mut b).await?;
        ctx.compare(&mut involution, &a, || v.clone()).await?;
        ctx.compare(&mut involution, &b, || v.clone()).await?;
    }
    Ok(vec![agree, involution])
}

async fn qft_checks(ctx: &mut Ctx<'_>) -> Result<Vec<Check>> {
    let mut forward = Check::new("qft matches dft", 1e-10);
    let mut round_trip = Check::new("inverse qft undoes qft", 1e-10);
    let nq = ctx.cfg.nq;
    for n1 in 1..=nq {
        let v = random_state(nq, &mut ctx.rng);
        let mut shard = ctx.scatter(&v)?;
        qft(ctx.comm, &mut shard, n1).await?;
        ctx.compare(&mut forward, &shard, || dft_operator(nq, n1).apply(&v)).await?;
        inverse_qft(ctx.comm, &mut shard, n1).await?;
        ctx.compare(&mut round_trip, &shard, || v.clone()).await?;
    }
    Ok(vec![forward, round_trip])
}

async fn grover_check(ctx: &mut Ctx<'_>) -> Result<Check> {
    let mut check = Check::new("grover closed form", 1e-10);
    let nq = ctx.cfg.nq;
    let marked = ctx.rng.gen_range(0..1usize << nq);
    let run = grover_run(ctx.comm, &GroverConfig::new(nq, marked)?, &[]).await?;
    for (t, p) in run.history.iter().enumerate() {
        let fault = if ctx.cfg.inject_fault { 1e-6 } else { 0.0 };
        check.record((p + fault - closed_form_probability(nq, t)).abs());
    }
    Ok(check)
}

/// Every check; the report is returned on the communicator root.
pub async fn run_selftest(comm: &Comm, cfg: SelftestConfig) -> Result<Option<SelftestReport>> {
    let mut ctx = Ctx {
        comm,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let mut checks = vec![one_qubit_gates(&mut ctx).await?];
    if cfg.nq >= 2 {
        checks.push(two_qubit_gates(&mut ctx).await?);
        checks.push(named_gates(&mut ctx).await?);
    }
    checks.extend(hadamard_all_checks(&mut ctx).await?);
    checks.extend(qft_checks(&mut ctx).await?);
    checks.push(grover_check(&mut ctx).await?);
    Ok(comm.is_root().then_some(SelftestReport { checks }))
}

/// Fourier-transform checks only.
pub async fn run_qft_check(comm: &Comm, cfg: SelftestConfig) -> Result<Option<SelftestReport>> {
    let mut ctx = Ctx {
        comm,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let checks = qft_checks(&mut ctx).await?;
    Ok(comm.is_root().then_some(SelftestReport { checks }))
}
