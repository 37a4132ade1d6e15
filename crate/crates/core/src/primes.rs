//! Prime generation and trial-division factorisation.
//!
//! Every integer this crate factors (factorials, primorials, small
//! numerators) is smooth over a few thousand primes, so a sieve that grows on
//! demand plus trial division is all that is needed.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Trial division bound for big-integer factorisation.
const TRIAL_LIMIT: u64 = 1 << 20;

/// Primes strictly below `limit`, by the sieve of Eratosthenes.
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n];
    let mut out = Vec::new();
    for i in 2..n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j < n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// The first `count` primes, `[2, 3, 5, ...]`.
///
/// The sieve bound starts from the Rosser upper estimate for the
/// `count`-th prime and doubles until it covers enough primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    let n = count.max(6) as f64;
    let mut limit = (n * (n.ln() + n.ln().ln())).ceil() as u64 + 3;
    loop {
        let mut ps = primes_below(limit);
        if ps.len() >= count {
            ps.truncate(count);
            return ps;
        }
        limit *= 2;
    }
}

/// The `i`-th prime, 1-based (`nth_prime(1) == 2`).
pub fn nth_prime(i: usize) -> u64 {
    assert!(i >= 1, "primes are indexed from 1");
    first_primes(i)[i - 1]
}

/// Prime factorisation of a machine integer as ascending `(prime, exponent)`.
pub fn factorize_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Prime factorisation of a big integer by trial division.
///
/// Succeeds whenever the integer is a product of primes below 2^20 times at
/// most one cofactor below 2^40 (which is then necessarily prime).
pub fn factorize(n: &BigUint) -> Result<Vec<(BigUint, u32)>> {
    if n.is_zero() {
        return Err(Error::domain("cannot factor zero"));
    }
    let mut rest = n.clone();
    let mut out = Vec::new();
    for p in primes_below(TRIAL_LIMIT) {
        if rest.is_one() {
            break;
        }
        let bp = BigUint::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            out.push((bp, e));
        }
    }
    if !rest.is_one() {
        let bound = BigUint::from(TRIAL_LIMIT) * BigUint::from(TRIAL_LIMIT);
        match rest.to_u64() {
            Some(_) if rest < bound => out.push((rest, 1)),
            _ => return Err(Error::Unfactorable(n.to_string())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_primes_small() {
        assert_eq!(first_primes(10), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(nth_prime(1000), 7919);
        assert_eq!(nth_prime(35), 149);
    }

    #[test]
    fn factor_machine_ints() {
        assert_eq!(factorize_u64(1), vec![]);
        assert_eq!(factorize_u64(1680), vec![(2, 4), (3, 1), (5, 1), (7, 1)]);
        assert_eq!(factorize_u64(97), vec![(97, 1)]);
    }

    #[test]
    fn factor_big_smooth_and_large_cofactor() {
        let n = BigUint::from(2u64).pow(70) * BigUint::from(1_000_003u64);
        let f = factorize(&n).unwrap();
        assert_eq!(f[0], (BigUint::from(2u64), 70));
        assert_eq!(f[1], (BigUint::from(1_000_003u64), 1));
    }

    #[test]
    fn factor_rejects_zero() {
        assert!(factorize(&BigUint::zero()).is_err());
    }
}
