//! Classical number theory around period finding.

use rand::Rng;

use crate::error::{Error, Rejection, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod m` by square-and-multiply.
pub fn modpow(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mulmod(result, b, m);
        }
        b = mulmod(b, b, m);
        exp >>= 1;
    }
    result
}

pub fn is_power_of_two(m: u64) -> bool {
    m.is_power_of_two()
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = modpow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Count of `1 <= a <= m` coprime to `m`.
pub fn euler_phi(m: u64) -> u64 {
    let mut n = m;
    let mut phi = m;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if n > 1 {
        phi -= phi / n;
    }
    phi
}

/// Reject numbers the period-finding route cannot or need not handle,
/// checked in the order small, power of 2, prime, even.
pub fn check_factorable(m: u64) -> Result<()> {
    let reason = if m < 3 {
        Some(Rejection::TooSmall)
    } else if is_power_of_two(m) {
        Some(Rejection::PowerOfTwo)
    } else if is_prime(m) {
        Some(Rejection::Prime)
    } else if m.is_multiple_of(2) {
        Some(Rejection::Even)
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::Rejected { m, reason }),
        None => Ok(()),
    }
}

/// Uniform draw from the residues in `2..m` that are coprime to `m`.
pub fn pick_xguess<R: Rng + ?Sized>(m: u64, rng: &mut R) -> Result<u64> {
    if m < 3 {
        return Err(Error::Rejected {
            m,
            reason: Rejection::TooSmall,
        });
    }
    loop {
        let x = rng.gen_range(2..m);
        if gcd(x, m) == 1 {
            return Ok(x);
        }
    }
}

/// Convergents `p/q` of the continued fraction of `num/den`, in order.
pub fn convergents(num: u64, den: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if den == 0 {
        return out;
    }
    let (mut a, mut b) = (num as u128, den as u128);
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    while b != 0 {
        let t = a / b;
        (a, b) = (b, a % b);
        let (p, q) = (t * p1 + p0, t * q1 + q0);
        out.push((p as u64, q as u64));
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    out
}

/// First convergent denominator of `nbar / big_n` that is even, below `m`,
/// and a period of `xguess` modulo `m`.
pub fn continued_fraction_period(nbar: u64, big_n: u64, m: u64, xguess: u64) -> Option<u64> {
    if nbar == 0 {
        return None;
    }
    convergents(nbar, big_n)
        .into_iter()
        .map(|(_, q)| q)
        .find(|&q| q > 0 && q % 2 == 0 && q < m && modpow(xguess, q, m) == 1)
}

/// `(gcd(x^(r/2) + 1, m), gcd(x^(r/2) - 1, m))`, or `None` when
/// `x^(r/2)` is `+1` or `-1` modulo `m`.
pub fn extract_factors(xguess: u64, r: u64, m: u64) -> Result<Option<(u64, u64)>> {
    if r == 0 || r % 2 == 1 {
        return Err(Error::Contract(format!("period {r} is not a positive even number")));
    }
    let y = modpow(xguess, r / 2, m);
    if y == 1 || y == m - 1 {
        return Ok(None);
    }
    Ok(Some((gcd(y + 1, m), gcd(y + m - 1, m))))
}
