//! Modular arithmetic helpers shared across the crate: deterministic
//! Miller-Rabin, Jacobi symbols, Tonelli-Shanks square roots, Hensel lifting,
//! and prime sieves.

/// `a * b mod m` without overflow for any `u64` operands.
#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
pub fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

pub fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m`, when it exists.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        let r = r0 - q * r1;
        r0 = r1;
        r1 = r;
        let t = t0 - q * t1;
        t0 = t1;
        t1 = t;
    }
    if r0 != 1 {
        return None;
    }
    let mut t = t0 % m as i128;
    if t < 0 {
        t += m as i128;
    }
    Some(t as u64)
}

/// Deterministic Miller-Rabin for `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    // This base set decides primality for all n < 3.3 * 10^24.
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
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

/// All primes `<= limit`, ascending.
pub fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Iterator over primes in ascending order, sieved in segments so that very
/// large search bounds do not require a single monolithic sieve.
pub struct PrimeIter {
    base: Vec<u64>,
    segment: Vec<u64>,
    seg_lo: u64,
    seg_len: u64,
    idx: usize,
}

impl PrimeIter {
    pub fn new() -> Self {
        PrimeIter {
            base: sieve(1 << 16),
            segment: Vec::new(),
            seg_lo: 0,
            seg_len: 1 << 18,
            idx: 0,
        }
    }

    fn fill_segment(&mut self, lo: u64) {
        let hi = lo + self.seg_len;
        while self
            .base
            .last()
            .map(|&p| p.saturating_mul(p) < hi)
            .unwrap_or(true)
        {
            let new_limit = self.base.last().copied().unwrap_or(2) * 2;
            self.base = sieve(new_limit.max(1 << 16));
        }
        let len = self.seg_len as usize;
        let mut composite = vec![false; len];
        for &p in &self.base {
            if p * p >= hi {
                break;
            }
            let mut j = lo.div_ceil(p).max(p) * p;
            while j < hi {
                composite[(j - lo) as usize] = true;
                j += p;
            }
        }
        self.segment.clear();
        for (off, &c) in composite.iter().enumerate() {
            let v = lo + off as u64;
            if v >= 2 && !c {
                self.segment.push(v);
            }
        }
        self.seg_lo = lo;
        self.idx = 0;
    }
}

impl Default for PrimeIter {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for PrimeIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        loop {
            if self.idx < self.segment.len() {
                let p = self.segment[self.idx];
                self.idx += 1;
                return Some(p);
            }
            let next_lo = if self.segment.is_empty() && self.seg_lo == 0 {
                0
            } else {
                self.seg_lo + self.seg_len
            };
            self.fill_segment(next_lo);
        }
    }
}

/// Jacobi symbol (a | n) for odd n >= 1.
pub fn jacobi(a: i64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut sign = 1i32;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Square root of `a` modulo an odd prime `p` (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if jacobi(a as i64, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(a, (p + 1) / 4, p));
    }
    // Tonelli-Shanks.
    let mut q = p - 1;
    let mut s = 0u32;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2u64;
    while jacobi(z as i64, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0u32;
        let mut tt = t;
        while tt != 1 {
            tt = mulmod(tt, tt, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r)
}

/// Square root of `a` modulo `p^n`, Hensel-lifted from a root mod p.
/// Requires `a` to be a unit mod p.
pub fn sqrt_mod_prime_power(a: u64, p: u64, n: u32) -> Option<u64> {
    debug_assert!(p % 2 == 1);
    let modulus = p.checked_pow(n)?;
    let a = a % modulus;
    if a.is_multiple_of(p) {
        return None;
    }
    let mut x = sqrt_mod_prime(a % p, p)?;
    let mut pk = p;
    while pk < modulus {
        pk = pk
            .checked_mul(pk)
            .map(|v| v.min(modulus))
            .unwrap_or(modulus);
        // Newton step: x <- x - (x^2 - a) / (2x) mod pk.
        let inv = invmod(mulmod(2, x, pk), pk).expect("2x is a unit");
        let fx = submod(mulmod(x, x, pk), a % pk, pk);
        x = submod(x, mulmod(fx, inv, pk), pk);
    }
    Some(x % modulus)
}

pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.saturating_mul(x) > n {
        x -= 1;
    }
    while (x + 1).saturating_mul(x + 1) <= n {
        x += 1;
    }
    x
}
