//! The rank program shared by every transport, and its report.

use shardsim::density::{assemble_density, entropy, DensityMode};
use shardsim::multiverse::{gather_summaries, run_multiverse, Algorithm, GroupResult, GroupSummary, MultiverseConfig};
use shardsim::noise::NoiseEvent;
use shardsim::selftest::{run_qft_check, run_selftest, SelftestConfig, SelftestReport};
use shardsim::shor::{shor_peak_probability, ShorMode, ShorOutcome};
use shardsim::state::gather_state;
use shardsim::{Comm, Complex64, Result};

use crate::report::Report;

#[derive(Debug, Clone)]
pub enum Task {
    Run(Algorithm),
    Selftest(SelftestConfig),
    QftCheck(SelftestConfig),
}

#[derive(Debug, Clone)]
pub struct Job {
    pub task: Task,
    pub multiverse: MultiverseConfig,
    pub density: Option<DensityMode>,
    pub dump_state: bool,
}

#[derive(Debug, Clone)]
pub struct DensitySummary {
    pub mode: DensityMode,
    pub trace: f64,
    pub purity: f64,
    pub eigenvalues: Vec<f64>,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub alg: Algorithm,
    pub multiverse: MultiverseConfig,
    pub plan: Vec<NoiseEvent>,
    pub group0: GroupResult,
    pub summaries: Vec<GroupSummary>,
    pub density: Option<DensitySummary>,
    pub state: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Run(Box<RunOutcome>),
    Checks { name: &'static str, report: SelftestReport },
}

/// Executed by every rank; the outcome comes back on the world root.
pub async fn rank_main(world: Comm, job: &Job) -> Result<Option<Outcome>> {
    let alg = match &job.task {
        Task::Selftest(cfg) => {
            return Ok(run_selftest(&world, *cfg)
                .await?
                .map(|report| Outcome::Checks { name: "selftest", report }));
        }
        Task::QftCheck(cfg) => {
            return Ok(run_qft_check(&world, *cfg)
                .await?
                .map(|report| Outcome::Checks { name: "qft-check", report }));
        }
        Task::Run(alg) => alg,
    };
    let mcfg = &job.multiverse;
    let run = run_multiverse(&world, alg, mcfg).await?;
    let group = world.split(mcfg.group_count)?;
    let state = if job.dump_state && run.group_id == 0 {
        gather_state(&group, run.result.shard()).await?
    } else {
        None
    };
    let ensemble = match job.density {
        Some(mode) => assemble_density(&world, run.result.shard(), &mcfg.weights, mode)
            .await?
            .map(|e| (mode, e)),
        None => None,
    };
    let summaries = gather_summaries(&world, &run).await?;
    let Some(summaries) = summaries else {
        return Ok(None);
    };
    let density = match ensemble {
        Some((mode, e)) => {
            let eigenvalues = e.spectrum()?;
            Some(DensitySummary {
                mode,
                trace: e.rho.trace(),
                purity: e.rho.purity(),
                entropy: entropy(&eigenvalues)?,
                eigenvalues,
            })
        }
        None => None,
    };
    Ok(Some(Outcome::Run(Box::new(RunOutcome {
        alg: *alg,
        multiverse: mcfg.clone(),
        plan: run.plan,
        group0: run.result,
        summaries,
        density,
        state,
    }))))
}

/// Fixed 12 decimals; rounding residue below the last digit prints as zero.
fn num(x: f64) -> String {
    let x = if x.abs() < 5e-13 { 0.0 } else { x };
    format!("{x:.12}")
}

fn exact(x: f64) -> String {
    format!("{x:?}")
}

pub struct Context {
    pub ranks: usize,
    pub transport: &'static str,
    pub deterministic: bool,
    pub elapsed: Option<std::time::Duration>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        match self {
            Outcome::Checks { report, .. } => report.all_passed(),
            Outcome::Run(_) => true,
        }
    }

    pub fn report(&self, ctx: &Context) -> Report {
        let mut r = Report::default();
        match self {
            Outcome::Checks { name, report } => checks_report(&mut r, name, report),
            Outcome::Run(run) => run_report(&mut r, run),
        }
        if !ctx.deterministic {
            r.heading("run");
            r.field("run.ranks", "ranks", ctx.ranks);
            r.field("run.transport", "transport", ctx.transport);
            if let Some(t) = ctx.elapsed {
                r.note("elapsed", format!("{:.3} s", t.as_secs_f64()));
            }
        }
        r
    }
}

fn checks_report(r: &mut Report, name: &str, report: &SelftestReport) {
    r.heading(name);
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                c.cases.to_string(),
                format!("{:.3e}", c.max_error),
                format!("{:.0e}", c.tolerance),
                if c.passed() { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    r.table("check", &["name", "cases", "max_error", "tolerance", "result"], rows);
    r.field("passed", "passed", report.passed());
    r.field("failed", "failed", report.failed());
}

fn run_report(r: &mut Report, run: &RunOutcome) {
    match (&run.alg, &run.group0) {
        (Algorithm::Grover(cfg), GroupResult::Grover(g)) => {
            r.heading("grover");
            r.field("nq", "qubits", cfg.nq);
            r.field("marked", "marked item", cfg.marked);
            r.field("iterations", "iterations", cfg.iterations);
            r.field("success", "success probability", num(g.success()));
            r.field("success_exact", "success (exact)", exact(g.success()));
        }
        (Algorithm::Shor(cfg), GroupResult::Shor(s)) => {
            let outcome = s.outcome.as_ref().expect("world root holds group 0's outcome");
            shor_report(r, outcome, cfg.mode);
        }
        _ => unreachable!("group result matches the algorithm"),
    }
    multiverse_report(r, run);
    if let Some(d) = &run.density {
        r.heading("density matrix");
        r.field(
            "density.mode",
            "assembly",
            match d.mode {
                DensityMode::Root => "root",
                DensityMode::Partitioned => "partitioned",
            },
        );
        r.field("density.trace", "trace", num(d.trace));
        r.field("density.purity", "trace(rho^2)", num(d.purity));
        let top: Vec<Vec<String>> = d
            .eigenvalues
            .iter()
            .take(8)
            .enumerate()
            .map(|(i, l)| vec![i.to_string(), num(*l)])
            .collect();
        r.table("eigenvalue", &["index", "value"], top);
        r.field("entropy", "entropy (bits)", num(d.entropy));
    }
}

fn shor_report(r: &mut Report, o: &ShorOutcome, mode: ShorMode) {
    r.heading("shor");
    r.field("m", "M", o.m);
    r.field("xguess", "xguess", o.xguess);
    r.field("n1", "n1", o.n1);
    r.field("n2", "n2", o.n2);
    r.field("q", "Q", 1u64 << o.n1);
    r.field(
        "mode",
        "register two",
        match mode {
            ShorMode::Enumerate => "enumerated",
            ShorMode::Sample => "sampled",
        },
    );
    let mut rows = Vec::new();
    for b in &o.branches {
        for p in &b.peaks {
            let (f1, f2) = p
                .factors
                .map_or(("-".into(), "-".into()), |(a, c)| (a.min(c).to_string(), a.max(c).to_string()));
            let formula = o
                .period
                .map_or("-".to_string(), |r| num(shor_peak_probability(p.nbar, r, b.d, o.n1)));
            rows.push(vec![
                b.k.to_string(),
                num(b.probability),
                b.d.to_string(),
                p.nbar.to_string(),
                num(p.probability),
                formula,
                p.period.map_or("-".into(), |r| r.to_string()),
                f1,
                f2,
            ]);
        }
    }
    r.table("peak", &["k", "p_k", "D", "nbar", "p", "p_formula", "r", "f1", "f2"], rows);
    match (o.period, o.factors) {
        (Some(period), Some((a, b))) => {
            r.field("period", "period r", period);
            r.field("d_floor", "floor(Q/r)", o.d_floor().unwrap_or(0));
            r.field("factors", "factors", format!("{a} {b}"));
            r.note("verdict", format!("{} = {a} x {b}", o.m));
        }
        _ => {
            r.field("period", "period r", "none");
            r.field("factors", "factors", "none");
            r.note("verdict", "no factors found");
        }
    }
}

fn multiverse_report(r: &mut Report, run: &RunOutcome) {
    let g = run.multiverse.group_count;
    if g == 1 && run.plan.is_empty() {
        return;
    }
    r.heading("multiverse");
    r.field("groups", "groups", g);
    let rows = run
        .summaries
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let noise = run.plan.iter().filter(|e| e.group == i).count();
            let headline = match s {
                GroupSummary::Grover { history } => num(*history.last().unwrap_or(&0.0)),
                GroupSummary::Shor { factors, .. } => {
                    factors.map_or("none".to_string(), |(a, b)| format!("{a}x{b}"))
                }
            };
            vec![i.to_string(), num(run.multiverse.weights[i]), noise.to_string(), headline]
        })
        .collect();
    let last = match run.alg {
        Algorithm::Grover(_) => "success",
        Algorithm::Shor(_) => "factors",
    };
    r.table("group", &["group", "weight", "noise_events", last], rows);
    let plan_rows = run
        .plan
        .iter()
        .map(|e| {
            vec![
                e.group.to_string(),
                e.kind().to_string(),
                e.qhit.to_string(),
                e.eloc.to_string(),
                format!("{:.6}", e.alpha),
                format!("{:.6}", e.beta),
                format!("{:.6}", e.gamma),
            ]
        })
        .collect();
    r.table("noise", &["group", "kind", "qhit", "eloc", "alpha", "beta", "gamma"], plan_rows);
}
