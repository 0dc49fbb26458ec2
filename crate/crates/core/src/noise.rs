//! Unitary noise from Wigner rotations.
//!
//! A one-qubit hit applies the spin-1/2 rotation `D^(1/2)` to a qubit, a
//! two-qubit hit applies the spin-3/2 rotation `D^(3/2)` to a qubit pair.
//! Both use `D_{m'm} = exp(-i m' alpha) d_{m'm}(beta) exp(-i m gamma)` with
//! rows and columns ordered `m = j, j-1, ..., -j`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::comm::Comm;
use crate::error::{input, Error, Result};
use crate::gates::{one_op, two_op, Gate2, Gate4};
use crate::rng::{stream, Purpose};
use crate::state::{check_qubit, Shard};

fn phases(ms: &[f64], angle: f64) -> Vec<Complex64> {
    ms.iter().map(|m| Complex64::from_polar(1.0, -m * angle)).collect()
}

fn wigner<const N: usize>(d: [[f64; N]; N], ms: [f64; N], alpha: f64, gamma: f64) -> [[Complex64; N]; N] {
    let (pa, pg) = (phases(&ms, alpha), phases(&ms, gamma));
    let mut out = [[Complex64::new(0.0, 0.0); N]; N];
    for r in 0..N {
        for c in 0..N {
            out[r][c] = pa[r] * d[r][c] * pg[c];
        }
    }
    out
}

/// Spin-1/2 Wigner rotation.
pub fn d2(alpha: f64, beta: f64, gamma: f64) -> Gate2 {
    let (s, c) = (beta / 2.0).sin_cos();
    Gate2::new(wigner([[c, -s], [s, c]], [0.5, -0.5], alpha, gamma))
}

/// Spin-3/2 Wigner rotation.
pub fn d4(alpha: f64, beta: f64, gamma: f64) -> Gate4 {
    let (s, c) = (beta / 2.0).sin_cos();
    let r3 = 3f64.sqrt();
    let d = [
        [c * c * c, -r3 * c * c * s, r3 * c * s * s, -s * s * s],
        [r3 * c * c * s, c * (c * c - 2.0 * s * s), -s * (2.0 * c * c - s * s), r3 * c * s * s],
        [r3 * c * s * s, s * (2.0 * c * c - s * s), c * (c * c - 2.0 * s * s), -r3 * c * c * s],
        [s * s * s, r3 * c * s * s, r3 * c * c * s, c * c * c],
    ];
    Gate4::new(wigner(d, [1.5, 0.5, -0.5, -1.5], alpha, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    OneQubit,
    TwoQubit,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::OneQubit => "one",
            NoiseKind::TwoQubit => "two",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(NoiseKind::OneQubit),
            "two" | "2" => Ok(NoiseKind::TwoQubit),
            _ => Err(input(format!("unknown noise kind {s:?} (expected one or two)"))),
        }
    }
}

/// Struck qubit or qubit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qhit {
    One(usize),
    Two(usize, usize),
}

impl Qhit {
    pub fn kind(&self) -> NoiseKind {
        match self {
            Qhit::One(_) => NoiseKind::OneQubit,
            Qhit::Two(..) => NoiseKind::TwoQubit,
        }
    }
}

impl fmt::Display for Qhit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qhit::One(q) => write!(f, "{q}"),
            Qhit::Two(a, b) => write!(f, "{a},{b}"),
        }
    }
}

/// One noise intrusion: rotate `qhit` at injection point `eloc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEvent {
    pub group: usize,
    pub qhit: Qhit,
    pub eloc: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl NoiseEvent {
    pub fn kind(&self) -> NoiseKind {
        self.qhit.kind()
    }

    fn check(&self, nq: usize) -> Result<()> {
        match self.qhit {
            Qhit::One(q) => check_qubit(q, nq),
            Qhit::Two(a, b) => {
                check_qubit(a, nq)?;
                check_qubit(b, nq)?;
                if a == b {
                    return Err(input(format!("two-qubit noise on qubit {a} twice")));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for NoiseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {:?} {:?} {:?}",
            self.group,
            self.kind(),
            self.qhit,
            self.eloc,
            self.alpha,
            self.beta,
            self.gamma
        )
    }
}

impl FromStr for NoiseEvent {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [group, kind, qhit, eloc, alpha, beta, gamma] = fields[..] else {
            return Err(input(format!("noise line needs 7 fields: {line:?}")));
        };
        let int = |s: &str| s.parse::<usize>().map_err(|e| input(format!("{s:?}: {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| input(format!("{s:?}: {e}")));
        let qhit = match (kind.parse::<NoiseKind>()?, qhit.split_once(',')) {
            (NoiseKind::OneQubit, None) => Qhit::One(int(qhit)?),
            (NoiseKind::TwoQubit, Some((a, b))) => Qhit::Two(int(a)?, int(b)?),
            _ => return Err(input(format!("qubit field {qhit:?} does not match kind {kind}"))),
        };
        Ok(NoiseEvent {
            group: int(group)?,
            qhit,
            eloc: int(eloc)?,
            alpha: float(alpha)?,
            beta: float(beta)?,
            gamma: float(gamma)?,
        })
    }
}

/// How many intrusions each noisy group receives, and of which kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseConfig {
    pub count: usize,
    pub kind: NoiseKind,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            count: 1,
            kind: NoiseKind::OneQubit,
        }
    }
}

/// Noise events for one group. Group 0 is always noiseless.
///
/// Each event takes a uniform qubit (or distinct pair), a uniform injection
/// point, `alpha` in `[0, 2 pi)`, `beta` in `[0, pi)` and `gamma = 0`, drawn
/// from the stream keyed by `(seed, group)`.
pub fn draw_noise_plan(
    group: usize,
    seed: u64,
    nq: usize,
    injection_points: &[usize],
    config: NoiseConfig,
) -> Result<Vec<NoiseEvent>> {
    if group == 0 || config.count == 0 {
        return Ok(Vec::new());
    }
    if injection_points.is_empty() {
        return Err(input("no injection points available for noise"));
    }
    if nq == 0 || (config.kind == NoiseKind::TwoQubit && nq < 2) {
        return Err(input(format!("{} qubit(s) cannot host {}-qubit noise", nq, config.kind)));
    }
    let mut rng = stream(seed, Purpose::NoisePlan, group);
    let mut plan = Vec::with_capacity(config.count);
    for _ in 0..config.count {
        let qhit = match config.kind {
            NoiseKind::OneQubit => Qhit::One(rng.gen_range(1..=nq)),
            NoiseKind::TwoQubit => {
                let a = rng.gen_range(1..=nq);
                let mut b = rng.gen_range(1..nq);
                if b >= a {
                    b += 1;
                }
                Qhit::Two(a, b)
            }
        };
        let eloc = injection_points[rng.gen_range(0..injection_points.len())];
        plan.push(NoiseEvent {
            group,
            qhit,
            eloc,
            alpha: rng.gen_range(0.0..2.0 * PI),
            beta: rng.gen_range(0.0..PI),
            gamma: 0.0,
        });
    }
    Ok(plan)
}

/// Plans for groups `0..group_count`, concatenated in group order.
pub fn draw_full_plan(
    group_count: usize,
    seed: u64,
    nq: usize,
    injection_points: &[usize],
    config: NoiseConfig,
) -> Result<Vec<NoiseEvent>> {
    let mut plan = Vec::new();
    for g in 0..group_count {
        plan.extend(draw_noise_plan(g, seed, nq, injection_points, config)?);
    }
    Ok(plan)
}

/// Reject events outside the run's groups, qubits or injection points.
pub fn validate_plan(plan: &[NoiseEvent], group_count: usize, nq: usize, injection_points: &[usize]) -> Result<()> {
    for ev in plan {
        if ev.group >= group_count {
            return Err(input(format!("noise event for group {} but only {group_count} groups", ev.group)));
        }
        if ev.group == 0 {
            return Err(input("group 0 runs without noise"));
        }
        ev.check(nq)?;
        if !injection_points.contains(&ev.eloc) {
            return Err(input(format!(
                "injection point {} not among {injection_points:?}",
                ev.eloc
            )));
        }
    }
    Ok(())
}

pub fn write_plan<W: Write>(w: &mut W, plan: &[NoiseEvent]) -> io::Result<()> {
    for ev in plan {
        writeln!(w, "{ev}")?;
    }
    Ok(())
}

/// Parse plan lines; blank lines and `#` comments are skipped.
pub fn read_plan<R: BufRead>(r: R) -> Result<Vec<NoiseEvent>> {
    let mut plan = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| input(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        plan.push(line.parse()?);
    }
    Ok(plan)
}

pub async fn apply_event(comm: &Comm, shard: &mut Shard, ev: &NoiseEvent) -> Result<()> {
    ev.check(shard.nq())?;
    match ev.qhit {
        Qhit::One(q) => one_op(comm, shard, q, &d2(ev.alpha, ev.beta, ev.gamma)).await,
        Qhit::Two(a, b) => two_op(comm, shard, a, b, &d4(ev.alpha, ev.beta, ev.gamma)).await,
    }
}

/// Apply, in plan order, every event of `group` scheduled at `eloc`.
pub async fn inject(comm: &Comm, shard: &mut Shard, plan: &[NoiseEvent], group: usize, eloc: usize) -> Result<()> {
    for ev in plan.iter().filter(|e| e.group == group && e.eloc == eloc) {
        apply_event(comm, shard, ev).await?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::UNITARY_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matmul4(a: &Gate4, b: &Gate4) -> [[Complex64; 4]; 4] {
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (row, a_row) in out.iter_mut().zip(&a.0) {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a_row.iter().zip(&b.0).map(|(l, b_row)| l * b_row[j]).sum();
            }
        }
        out
    }

    #[test]
    fn wigner_special_cases() {
        assert!(d2(0.0, 0.0, 0.0).0.iter().flatten().zip(Gate2::identity().0.iter().flatten()).all(|(a, b)| (a - b).norm() < 1e-15));
        let flip = d2(0.0, PI, 0.0).0;
        assert!(flip[0][0].norm() < 1e-15 && flip[1][1].norm() < 1e-15);
        assert!((flip[0][1].norm() - 1.0).abs() < 1e-15 && (flip[1][0].norm() - 1.0).abs() < 1e-15);
        assert_eq!(d4(0.0, 0.0, 0.0), Gate4::identity());
    }

    #[test]
    fn wigner_matrices_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (a, b, g) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
            assert!(d2(a, b, g).is_unitary(UNITARY_TOL));
            let m = d4(a, b, g);
            assert!(m.is_unitary(UNITARY_TOL));
            let id = matmul4(&m, &m.dagger());
            for (i, row) in id.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plans_are_deterministic_and_group_keyed() {
        let points = [1, 2, 3, 4, 5, 6];
        let cfg = NoiseConfig { count: 3, kind: NoiseKind::OneQubit };
        assert!(draw_noise_plan(0, 7, 6, &points, cfg).unwrap().is_empty());
        let a = draw_noise_plan(1, 7, 6, &points, cfg).unwrap();
        assert_eq!(a, draw_noise_plan(1, 7, 6, &points, cfg).unwrap());
        assert_ne!(a, draw_noise_plan(2, 7, 6, &points, cfg).unwrap());
        for ev in &a {
            assert_eq!(ev.gamma, 0.0);
            assert!((0.0..2.0 * PI).contains(&ev.alpha) && (0.0..PI).contains(&ev.beta));
            assert!(matches!(ev.qhit, Qhit::One(q) if (1..=6).contains(&q)));
            assert!(points.contains(&ev.eloc));
        }
        let two = draw_noise_plan(3, 7, 2, &points, NoiseConfig { count: 50, kind: NoiseKind::TwoQubit }).unwrap();
        assert!(two.iter().all(|e| matches!(e.qhit, Qhit::Two(a, b) if a != b && a <= 2 && b <= 2)));
    }

    #[test]
    fn plan_text_round_trips() {
        let mut plan = draw_full_plan(4, 99, 5, &[0, 1, 2], NoiseConfig { count: 2, kind: NoiseKind::TwoQubit }).unwrap();
        plan.extend(draw_noise_plan(1, 3, 5, &[0], NoiseConfig::default()).unwrap());
        let mut buf = Vec::new();
        write_plan(&mut buf, &plan).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().starts_with("1 two "));
        let back = read_plan(&buf[..]).unwrap();
        assert_eq!(back, plan);
        for (a, b) in back.iter().zip(&plan) {
            assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
        }
        assert!(validate_plan(&plan, 4, 5, &[0, 1, 2]).is_ok());
        assert!(validate_plan(&plan, 2, 5, &[0, 1, 2]).is_err());
        assert!(read_plan(&b"1 one 2,3 0 0 0 0\n"[..]).is_err());
        assert!(read_plan(&b"1 one 2 0 0 0\n"[..]).is_err());
    }
}
