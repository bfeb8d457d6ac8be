//! Integer factorization: trial division up to a configurable bound, then
//! Brent's cycle-finding variant of Pollard rho with an iteration budget.
//! Unfactored cofactors are a hard error because the bad-reduction machinery
//! needs the exact set of prime divisors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{gcd, is_prime, mulmod, sieve};

use super::CurveError;

/// Effort knobs for factoring discriminant cores.
#[derive(Clone, Copy, Debug)]
pub struct FactorEffort {
    pub trial_bound: u64,
    pub rho_iterations: u64,
}

impl Default for FactorEffort {
    fn default() -> Self {
        FactorEffort {
            trial_bound: 1_000_000,
            rho_iterations: 4_000_000,
        }
    }
}

/// Full factorization of a `u64`; ascending primes with multiplicities.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for p in [2u64, 3, 5] {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut d = 7u64;
    let inc = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while d * d <= n && d < 100_000 {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += inc[i];
        i = (i + 1) % 8;
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut primes = Vec::new();
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime(m) {
                primes.push(m);
                continue;
            }
            let f = rho_u64(m);
            stack.push(f);
            stack.push(m / f);
        }
        primes.sort_unstable();
        let mut i = 0;
        while i < primes.len() {
            let p = primes[i];
            let mut e = 0;
            while i < primes.len() && primes[i] == p {
                e += 1;
                i += 1;
            }
            out.push((p, e));
        }
    }
    out.sort_unstable();
    out
}

/// Brent's rho on a composite u64 (no small factors). Always finds a factor.
fn rho_u64(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        let mut count = 0u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
            count += 1;
            if count > n.isqrt() + 1000 {
                break;
            }
        }
        if d != n && d != 1 {
            return d;
        }
        c += 1;
    }
}

/// Miller-Rabin on a positive BigInt. Deterministic for inputs below
/// 3.3 * 10^24; for larger inputs the fixed witness set makes an error
/// astronomically unlikely.
pub fn is_prime_bigint(n: &BigInt) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime(v);
    }
    if n.is_negative() || n.is_zero() || n.is_one() {
        return false;
    }
    let two = BigInt::from(2);
    if (n % &two).is_zero() {
        return false;
    }
    let n_minus_1 = n - BigInt::one();
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        s += 1;
    }
    'witness: for &a in &[
        2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
    ] {
        let a = BigInt::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Factorization of |n| for a BigInt, honoring the effort budget.
pub fn factor_bigint(n: &BigInt, effort: &FactorEffort) -> Result<Vec<(BigInt, u32)>, CurveError> {
    let mut n = n.abs();
    if n.is_zero() {
        panic!("cannot factor zero");
    }
    let mut out: Vec<(BigInt, u32)> = Vec::new();
    // Trial division by small primes, cheap even on big integers.
    for p in sieve(effort.trial_bound.min(1_000_000)) {
        let pb = BigInt::from(p);
        if (&n % &pb).is_zero() {
            let mut e = 0;
            while (&n % &pb).is_zero() {
                n /= &pb;
                e += 1;
            }
            out.push((pb.clone(), e));
        }
        if n.is_one() {
            break;
        }
        // Stop early once the remaining cofactor is below the square of the
        // trial point: it is then prime.
        if &pb * &pb > n {
            break;
        }
    }
    if !n.is_one() {
        if let Some(v) = n.to_u64() {
            for (p, e) in factor_u64(v) {
                out.push((BigInt::from(p), e));
            }
        } else {
            let mut stack = vec![n];
            while let Some(m) = stack.pop() {
                if m.is_one() {
                    continue;
                }
                if is_prime_bigint(&m) {
                    merge_factor(&mut out, m);
                    continue;
                }
                let f = rho_bigint(&m, effort.rho_iterations)
                    .ok_or(CurveError::FactorizationTimeout)?;
                stack.push(&m / &f);
                stack.push(f);
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    // Merge duplicates produced by the recursive path.
    let mut merged: Vec<(BigInt, u32)> = Vec::new();
    for (p, e) in out {
        match merged.last_mut() {
            Some((q, f)) if *q == p => *f += e,
            _ => merged.push((p, e)),
        }
    }
    Ok(merged)
}

fn merge_factor(out: &mut Vec<(BigInt, u32)>, p: BigInt) {
    for (q, e) in out.iter_mut() {
        if *q == p {
            *e += 1;
            return;
        }
    }
    out.push((p, 1));
}

fn rho_bigint(n: &BigInt, budget: u64) -> Option<BigInt> {
    let one = BigInt::one();
    let mut c = BigInt::one();
    let mut spent = 0u64;
    while spent < budget {
        let f = |x: &BigInt| (x * x + &c) % n;
        let mut x = BigInt::from(2);
        let mut y = x.clone();
        let mut d = BigInt::one();
        while d.is_one() && spent < budget {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x >= y { &x - &y } else { &y - &x };
            d = diff.gcd(n);
            spent += 1;
        }
        if !d.is_one() && &d != n {
            return Some(d);
        }
        c += &one;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_u64_basics() {
        assert_eq!(factor_u64(1), vec![]);
        assert_eq!(factor_u64(62), vec![(2, 1), (31, 1)]);
        assert_eq!(factor_u64(3888), vec![(2, 4), (3, 5)]);
        assert_eq!(
            factor_u64(600_851_475_143),
            vec![(71, 1), (839, 1), (1471, 1), (6857, 1)]
        );
        // Semiprime with two large factors.
        assert_eq!(
            factor_u64(1_000_003 * 1_000_033),
            vec![(1_000_003, 1), (1_000_033, 1)]
        );
    }

    #[test]
    fn factor_bigint_matches_u64() {
        let effort = FactorEffort::default();
        for n in [2u64, 31, 62, 126_976, 4_736_381, 600_851_475_143] {
            let big = factor_bigint(&BigInt::from(n), &effort).unwrap();
            let small = factor_u64(n);
            assert_eq!(big.len(), small.len());
            for ((bp, be), (sp, se)) in big.iter().zip(small.iter()) {
                assert_eq!(bp, &BigInt::from(*sp));
                assert_eq!(be, se);
            }
        }
    }

    #[test]
    fn factor_bigint_beyond_u64() {
        // 2^70 = 1180591620717411303424
        let n = BigInt::from(2).pow(70);
        let f = factor_bigint(&n, &FactorEffort::default()).unwrap();
        assert_eq!(f, vec![(BigInt::from(2), 70)]);
    }
}
