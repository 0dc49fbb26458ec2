//! Single-process dense reference: explicit full operators applied by
//! matrix-vector products. Slow and simple, used to cross-check the
//! distributed kernels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::gates::{Gate2, Gate4};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl Operator {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Operator { dim, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            data.extend((0..dim).map(|j| f(i, j)));
        }
        Operator { dim, data }
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        let d = other.dim;
        Operator::from_fn(self.dim * d, |i, j| {
            self.data[(i / d) * self.dim + j / d] * other.data[(i % d) * d + j % d]
        })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).fold(ZERO, |acc, (a, b)| acc + a * b))
            .collect()
    }
}

impl From<&Gate2> for Operator {
    fn from(g: &Gate2) -> Self {
        Operator::from_fn(2, |i, j| g.0[i][j])
    }
}

/// `I (x) ... (x) g (x) ... (x) I` with `g` in slot `i_s` (1-based, qubit 1
/// leftmost).
pub fn one_qubit_operator(nq: usize, i_s: usize, g: &Gate2) -> Operator {
    let g = Operator::from(g);
    (1..=nq).fold(Operator::identity(1), |acc, q| {
        if q == i_s {
            acc.kron(&g)
        } else {
            acc.kron(&Operator::identity(2))
        }
    })
}

/// Full operator of `g` on qubits `(i1, i2)`: the entry between `|n>` and
/// `|m>` is `g[(b1(n), b2(n))][(b1(m), b2(m))]` when all other bits agree.
pub fn two_qubit_operator(nq: usize, i1: usize, i2: usize, g: &Gate4) -> Operator {
    let bit = |n: usize, q: usize| (n >> (nq - q)) & 1;
    let mask = (1 << (nq - i1)) | (1 << (nq - i2));
    Operator::from_fn(1 << nq, |n, m| {
        if n & !mask != m & !mask {
            ZERO
        } else {
            g.0[2 * bit(n, i1) + bit(n, i2)][2 * bit(m, i1) + bit(m, i2)]
        }
    })
}

/// `H (x) ... (x) H` on `nq` qubits.
pub fn hadamard_all(nq: usize) -> Operator {
    let h = Operator::from(&Gate2::hadamard());
    (0..nq).fold(Operator::identity(1), |acc, _| acc.kron(&h))
}

/// `DFT_{2^n1} (x) I_{2^(nq-n1)}`.
pub fn dft_operator(nq: usize, n1: usize) -> Operator {
    let n = 1usize << n1;
    let dft = Operator::from_fn(n, |a, b| {
        Complex64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * ((a * b) % n) as f64 / n as f64)
    });
    dft.kron(&Operator::identity(1 << (nq - n1)))
}

pub fn random_state<R: Rng + ?Sized>(nq: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..1usize << nq)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

/// Columns of a random complex matrix orthonormalized by Gram-Schmidt.
fn random_unitary<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> [[Complex64; N]; N] {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(N);
    while cols.len() < N {
        let mut v: Vec<Complex64> = (0..N)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|c| c / norm).collect());
        }
    }
    let mut m = [[ZERO; N]; N];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            m[i][j] = *v;
        }
    }
    m
}

pub fn random_gate2<R: Rng + ?Sized>(rng: &mut R) -> Gate2 {
    Gate2::new(random_unitary(rng))
}

pub fn random_gate4<R: Rng + ?Sized>(rng: &mut R) -> Gate4 {
    Gate4::new(random_unitary(rng))
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::UNITARY_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_gates_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert!(random_gate2(&mut rng).is_unitary(UNITARY_TOL));
            assert!(random_gate4(&mut rng).is_unitary(UNITARY_TOL));
        }
    }

    #[test]
    fn two_qubit_operator_agrees_with_kron_for_adjacent_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (random_gate2(&mut rng), random_gate2(&mut rng));
        let via_pair = two_qubit_operator(3, 2, 3, &Gate4::kron(&a, &b));
        let via_kron = Operator::identity(2).kron(&Operator::from(&a)).kron(&Operator::from(&b));
        assert!(max_abs_diff(&via_pair.data, &via_kron.data) < 1e-15);
        let swapped = two_qubit_operator(3, 3, 2, &Gate4::kron(&b, &a));
        assert!(max_abs_diff(&swapped.data, &via_kron.data) < 1e-15);
    }
}
