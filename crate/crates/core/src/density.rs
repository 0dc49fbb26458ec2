//! Ensemble density matrix over the group states and its entropy.

use num_complex::Complex64;

use crate::comm::Comm;
use crate::error::{config, input, Error, Result};
use crate::state::Shard;

/// Largest qubit count for which a density matrix is stored.
pub const MAX_DENSITY_QUBITS: usize = 12;
/// Above this qubit count the spectrum comes from the ensemble Gram matrix
/// instead of rotating the full matrix.
pub const JACOBI_MAX_QUBITS: usize = 8;
/// Eigenvalues down to this are rounded up to zero.
pub const NEGATIVE_CLAMP: f64 = -1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Where the matrix is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityMode {
    /// Every group state is gathered to the root, which builds all rows.
    #[default]
    Root,
    /// Each rank builds a contiguous block of rows; the root collects them.
    Partitioned,
}

/// Dense row-major Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(input(format!("{} entries do not form a {dim}x{dim} matrix", data.len())));
        }
        Ok(DensityMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    /// `tr(rho^2)`, which for a Hermitian matrix is the sum of `|rho_ij|^2`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// `sum_a P_a C_a(n) conj(C_a(np))`, summed in group order.
pub fn rho_entry(states: &[Vec<Complex64>], weights: &[f64], n: usize, np: usize) -> Complex64 {
    states
        .iter()
        .zip(weights)
        .fold(ZERO, |acc, (s, &w)| acc + s[n] * s[np].conj() * w)
}

pub fn validate_weights(weights: &[f64], group_count: usize) -> Result<()> {
    if weights.len() != group_count {
        return Err(config(format!("{} weights for {group_count} groups", weights.len())));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(config("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(config(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Uniform weights `1 / group_count`.
pub fn uniform_weights(group_count: usize) -> Vec<f64> {
    vec![1.0 / group_count as f64; group_count]
}

fn check_states(states: &[Vec<Complex64>]) -> Result<usize> {
    let dim = states.first().map_or(0, Vec::len);
    if dim == 0 || !dim.is_power_of_two() || states.iter().any(|s| s.len() != dim) {
        return Err(input("group states must share one power-of-two dimension"));
    }
    let nq = dim.trailing_zeros() as usize;
    if nq > MAX_DENSITY_QUBITS {
        return Err(config(format!(
            "density matrix needs {nq} qubits; at most {MAX_DENSITY_QUBITS} are supported"
        )));
    }
    Ok(dim)
}

fn rows(states: &[Vec<Complex64>], weights: &[f64], range: std::ops::Range<usize>, dim: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(range.len() * dim);
    for n in range {
        out.extend((0..dim).map(|np| rho_entry(states, weights, n, np)));
    }
    out
}

/// Weighted group states together with their density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub states: Vec<Vec<Complex64>>,
    pub weights: Vec<f64>,
    pub rho: DensityMatrix,
}

impl Ensemble {
    /// Build on one thread; reference for the distributed assembly.
    pub fn from_states(states: Vec<Vec<Complex64>>, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, states.len())?;
        let dim = check_states(&states)?;
        let data = rows(&states, &weights, 0..dim, dim);
        Ok(Ensemble {
            rho: DensityMatrix { dim, data },
            states,
            weights,
        })
    }

    pub fn nq(&self) -> usize {
        self.rho.dim.trailing_zeros() as usize
    }

    /// All eigenvalues of `rho`, descending.
    ///
    /// Small matrices are diagonalized directly. Larger ones use the
    /// nonzero spectrum of the weighted Gram matrix of the group states,
    /// which equals that of `rho`, padded with zeros.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        if self.nq() <= JACOBI_MAX_QUBITS {
            hermitian_eigenvalues(&self.rho)
        } else {
            gram_eigenvalues(&self.states, &self.weights)
        }
    }
}

/// Assemble `rho` from every group's final shard; collective over `world`.
///
/// Groups are contiguous rank blocks of `world` of `shard.ranks()` ranks
/// each. The result is returned on the world root only.
pub async fn assemble_density(
    world: &Comm,
    shard: &Shard,
    weights: &[f64],
    mode: DensityMode,
) -> Result<Option<Ensemble>> {
    let group_size = shard.ranks();
    if !world.size().is_multiple_of(group_size) {
        return Err(config("group size does not divide the world"));
    }
    let group_count = world.size() / group_size;
    validate_weights(weights, group_count)?;
    if shard.nq() > MAX_DENSITY_QUBITS {
        return Err(config(format!(
            "density matrix needs {} qubits; at most {MAX_DENSITY_QUBITS} are supported",
            shard.nq()
        )));
    }
    let split = |flat: Vec<Complex64>| -> Vec<Vec<Complex64>> {
        flat.chunks(flat.len() / group_count).map(<[Complex64]>::to_vec).collect()
    };
    match mode {
        DensityMode::Root => {
            let Some(flat) = world.gather(0, shard.amps().to_vec()).await? else {
                return Ok(None);
            };
            Ensemble::from_states(split(flat), weights.to_vec()).map(Some)
        }
        DensityMode::Partitioned => {
            let states = split(world.allgather(shard.amps().to_vec()).await?);
            let dim = check_states(&states)?;
            let (w, r) = (world.size(), world.rank());
            let block = rows(&states, weights, r * dim / w..(r + 1) * dim / w, dim);
            let Some(data) = world.gather(0, block).await? else {
                return Ok(None);
            };
            Ok(Some(Ensemble {
                rho: DensityMatrix::from_rows(dim, data)?,
                states,
                weights: weights.to_vec(),
            }))
        }
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// descending.
pub fn hermitian_eigenvalues(m: &DensityMatrix) -> Result<Vec<f64>> {
    if m.hermitian_deviation() > 1e-9 {
        return Err(input("matrix is not Hermitian"));
    }
    jacobi(m.data.clone(), m.dim)
}

fn off_diagonal_norm(a: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: Vec<Complex64>, n: usize) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 100;
    let tol = 1e-12 * n as f64;
    let mut sweeps = 0;
    while off_diagonal_norm(&a, n) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NotConverged("Jacobi eigenvalue iteration"));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                // Phase e^{-i phi} on q makes the (p, q) block real, then a
                // real rotation zeroes it.
                let phase = (apq / mag).conj();
                let (app, aqq) = (a[p * n + p].re, a[q * n + q].re);
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (upp, upq) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
                let (uqp, uqq) = (phase * -s, phase * c);
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = akp * upp + akq * uqp;
                    a[k * n + q] = akp * upq + akq * uqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = upp.conj() * apk + uqp.conj() * aqk;
                    a[q * n + k] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Spectrum of `sum_a P_a |a><a|` from the `G x G` matrix
/// `sqrt(P_a P_b) <a|b>`, padded with zeros to the state dimension.
pub fn gram_eigenvalues(states: &[Vec<Complex64>], weights: &[f64]) -> Result<Vec<f64>> {
    let dim = check_states(states)?;
    let g = states.len();
    let mut gram = vec![ZERO; g * g];
    for a in 0..g {
        for b in 0..g {
            let dot: Complex64 = states[a].iter().zip(&states[b]).map(|(x, y)| x.conj() * y).sum();
            gram[a * g + b] = dot * (weights[a] * weights[b]).sqrt();
        }
    }
    let mut eig = jacobi(gram, g)?;
    eig.resize(dim.max(g), 0.0);
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Von Neumann entropy in bits.
pub fn entropy(eigenvalues: &[f64]) -> Result<f64> {
    let trace: f64 = eigenvalues.iter().sum();
    if (trace - 1.0).abs() > 1e-6 {
        return Err(input(format!("eigenvalues sum to {trace}, not 1")));
    }
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < NEGATIVE_CLAMP {
            return Err(input(format!("negative eigenvalue {l}")));
        }
        if l > 1e-14 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}
