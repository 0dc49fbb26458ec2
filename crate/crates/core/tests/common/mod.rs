//! Reference computations built without the simulator's own kernels.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::future::Future;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use shardsim::gates::{Gate2, Gate4};
use shardsim::{Comm, Complex64, LocalWorld, Schedule};

pub type Mat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Run `f` on `ranks` in-process ranks and return rank 0's value.
pub fn on_root<T: Send, F, Fut>(ranks: usize, f: F) -> T
where
    F: Fn(Comm) -> Fut + Sync,
    Fut: Future<Output = shardsim::Result<Option<T>>>,
{
    LocalWorld::new(ranks)
        .unwrap()
        .run(Schedule::Sequential, f)
        .unwrap()
        .swap_remove(0)
        .expect("root returns a value")
}

pub fn random_state(nq: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..1 << nq).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|a| a / norm).collect()
}

/// Unitary from the QR factorization of a random complex matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> Mat {
    let m = Mat::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m.qr().q()
}

pub fn gate2(u: &Mat) -> Gate2 {
    Gate2::new([[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]])
}

pub fn gate4(u: &Mat) -> Gate4 {
    let mut g = [[Complex64::default(); 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = u[(i, j)];
        }
    }
    Gate4::new(g)
}

pub fn to_mat<const N: usize>(g: &[[Complex64; N]; N]) -> Mat {
    Mat::from_fn(N, N, |i, j| g[i][j])
}

/// `I (x) .. (x) u (x) .. (x) I` with `u` on qubit `q` (1-based, leftmost is 1).
pub fn embed_one(nq: usize, q: usize, u: &Mat) -> Mat {
    let eye = |k: usize| Mat::identity(1 << k, 1 << k);
    eye(q - 1).kronecker(u).kronecker(&eye(nq - q))
}

/// Permutation sending basis state `n` to the state whose two leading bits
/// are bits `a` and `b` of `n`, followed by the remaining bits in order.
fn leading_pair(nq: usize, a: usize, b: usize) -> Mat {
    let dim = 1 << nq;
    let mut p = Mat::zeros(dim, dim);
    for n in 0..dim {
        let bit = |q: usize| (n >> (nq - q)) & 1;
        let mut m = (bit(a) << 1) | bit(b);
        for q in (1..=nq).filter(|&q| q != a && q != b) {
            m = (m << 1) | bit(q);
        }
        p[(m, n)] = c(1.0, 0.0);
    }
    p
}

/// Two-qubit unitary `u` on qubits `(a, b)`, with `a` as the high label bit.
pub fn embed_two(nq: usize, a: usize, b: usize, u: &Mat) -> Mat {
    let p = leading_pair(nq, a, b);
    let core = u.kronecker(&Mat::identity(1 << (nq - 2), 1 << (nq - 2)));
    p.transpose() * core * p
}

pub fn hadamard_all(nq: usize) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Mat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
    (0..nq).fold(Mat::identity(1, 1), |acc, _| acc.kronecker(&h))
}

/// DFT with `+` sign on the leading `n1` qubits.
pub fn dft(nq: usize, n1: usize) -> Mat {
    let n = 1usize << n1;
    let f = Mat::from_fn(n, n, |a, b| Complex64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * (a * b) as f64 / n as f64));
    f.kronecker(&Mat::identity(1 << (nq - n1), 1 << (nq - n1)))
}

pub fn apply(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// `sin^2((2t+1) asin(2^(-nq/2)))`.
pub fn grover_closed_form(nq: usize, t: usize) -> f64 {
    let half = (0.5f64).powf(nq as f64 / 2.0).asin();
    ((2 * t + 1) as f64 * half).sin().powi(2)
}

pub fn grover_iterations(nq: usize) -> usize {
    (PI / 4.0 * ((1u64 << nq) as f64).sqrt()).round() as usize
}

/// Multiplicative order of `x` modulo `m` by repeated multiplication.
pub fn order(x: u64, m: u64) -> u64 {
    let mut y = x % m;
    let mut r = 1;
    while y != 1 {
        y = y * x % m;
        r += 1;
    }
    r
}

/// `p(n | k)` after the transform on register one, summed term by term
/// over the `n` with `x^n = k (mod m)`.
pub fn shor_conditional(n1: usize, m: u64, x: u64, k: u64) -> Vec<f64> {
    let q = 1u64 << n1;
    let hits: Vec<u64> = (0..q).filter(|&n| modpow(x, n, m) == k).collect();
    let d = hits.len() as f64;
    (0..q)
        .map(|nbar| {
            let amp: Complex64 = hits
                .iter()
                .map(|&n| Complex64::from_polar(1.0, 2.0 * PI * ((nbar * n) % q) as f64 / q as f64))
                .sum();
            amp.norm_sqr() / (q as f64 * d)
        })
        .collect()
}

pub fn modpow(x: u64, e: u64, m: u64) -> u64 {
    (0..e).fold(1 % m, |acc, _| acc * x % m)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `sum_a w_a |a><a|`.
pub fn mixture(states: &[Vec<Complex64>], weights: &[f64]) -> Mat {
    let dim = states[0].len();
    states.iter().zip(weights).fold(Mat::zeros(dim, dim), |acc, (s, &w)| {
        let v = DVector::from_column_slice(s);
        acc + (&v * v.adjoint()).scale(w)
    })
}

/// Eigenvalues of a Hermitian matrix, descending, via the real symmetric
/// embedding `[[A, -B], [B, A]]` whose spectrum repeats each value twice.
pub fn hermitian_spectrum(m: &Mat) -> Vec<f64> {
    let n = m.nrows();
    let big = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eigen = big.try_symmetric_eigen(1e-15, 100_000).expect("oracle eigensolver converges");
    let mut eig: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig.into_iter().step_by(2).collect()
}

pub fn entropy_bits(eigs: &[f64]) -> f64 {
    eigs.iter().filter(|&&l| l > 1e-14).map(|&l| -l * l.log2()).sum()
}
