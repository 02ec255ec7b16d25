//! Overflow-free 64-bit modular arithmetic and deterministic Miller–Rabin.

use crate::error::{Error, Result};

/// The first twelve primes. Testing these as strong-probable-prime bases is
/// a proof of primality for every 64-bit integer.
pub const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `(a * b) mod m` through a 128-bit product.
pub fn mulmod(a: u64, b: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidModulus { m });
    }
    Ok(mul_mod(a, b, m))
}

/// `a^e mod m` by square-and-multiply.
pub fn powmod(a: u64, e: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidModulus { m });
    }
    Ok(pow_mod(a, e, m))
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

#[inline]
fn pow_mod(base: u64, mut e: u64, m: u64) -> u64 {
    let mut result = 1 % m;
    let mut b = base % m;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    result
}

/// Deterministic primality for every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    for &p in &WITNESSES[1..] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }

    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &w in &WITNESSES {
        let a = w % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
