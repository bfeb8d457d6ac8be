//! Elliptic curves y^2 = x^3 + ax + b over Q: discriminant core, j-invariant
//! and its logarithmic height, a conservative bad-reduction radical, traces
//! of Frobenius, and the counting function pi_{E,r}(x).

mod factor;
mod points;

pub use factor::{factor_bigint, factor_u64, is_prime_bigint, FactorEffort};
pub use points::{ap_bsgs, ap_naive, count_points_naive, group_order_bsgs};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::sieve;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("singular curve: 4a^3 + 27b^2 = 0")]
    SingularCurve,
    #[error("discriminant factorization exceeded the configured effort")]
    FactorizationTimeout,
    #[error("prime {0} is of bad reduction for this curve")]
    BadReduction(u64),
    #[error("a bad-reduction prime exceeds 64 bits; character machinery cannot proceed")]
    PrimeTooLarge,
}

/// An integral short Weierstrass curve y^2 = x^3 + ax + b with nonzero
/// discriminant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    a: BigInt,
    b: BigInt,
}

impl Curve {
    pub fn new(a: BigInt, b: BigInt) -> Result<Self, CurveError> {
        let curve = Curve { a, b };
        if curve.disc_core().is_zero() {
            return Err(CurveError::SingularCurve);
        }
        Ok(curve)
    }

    pub fn from_i64(a: i64, b: i64) -> Result<Self, CurveError> {
        Curve::new(BigInt::from(a), BigInt::from(b))
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    /// 4a^3 + 27b^2; the discriminant is -16 times this.
    pub fn disc_core(&self) -> BigInt {
        4 * self.a.pow(3) + 27 * self.b.pow(2)
    }
}

/// j-invariant as a reduced fraction, plus the logarithmic height
/// h(j) = log max(|num|, den).
#[derive(Clone, Debug)]
pub struct CurveData {
    pub disc_core: BigInt,
    pub j_num: BigInt,
    pub j_den: BigInt,
    pub height_j: f64,
}

/// Natural log of a positive BigInt, exact enough for heights: uses the top
/// bits plus a power-of-two shift so magnitudes beyond f64 range still work.
pub fn log_bigint(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 53 {
        return (x.to_f64().unwrap()).ln();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn curve_data(curve: &Curve) -> CurveData {
    let disc_core = curve.disc_core();
    // j = c4^3 / Delta = 6912 a^3 / (4a^3 + 27b^2), then reduced with a
    // positive denominator.
    let raw_num: BigInt = 6912 * curve.a.pow(3);
    let raw_den = disc_core.clone();
    let g = raw_num.gcd(&raw_den);
    let (mut j_num, mut j_den) = (&raw_num / &g, &raw_den / &g);
    if j_den.is_negative() {
        j_num = -j_num;
        j_den = -j_den;
    }
    let h_arg = if j_num.abs() > j_den {
        j_num.abs()
    } else {
        j_den.clone()
    };
    CurveData {
        disc_core,
        height_j: log_bigint(&h_arg),
        j_num,
        j_den,
    }
}

/// Conservative bad-reduction data. Short Weierstrass models cannot certify
/// good reduction at 2 (nor at 3 when it divides the discriminant core)
/// without running Tate's algorithm, so 2 is always included and 3 is
/// included when it divides the core. N is therefore a conservative multiple
/// of the true bad-reduction product; every bound downstream stays valid.
#[derive(Clone, Debug)]
pub struct ReductionData {
    pub bad_primes: Vec<u64>,
    pub n: BigInt,
    pub omega: usize,
    /// Model after removing (p^4 | a, p^6 | b) scalings at p >= 5.
    pub reduced_a: BigInt,
    pub reduced_b: BigInt,
    pub disc_core_reduced: BigInt,
    pub disc_factors: Vec<(BigInt, u32)>,
}

pub const N_CONVENTION: &str =
    "N is a conservative multiple of the bad-reduction product: 2 is always included, \
     and 3 is included whenever it divides the discriminant core";

pub fn bad_primes(curve: &Curve, effort: &FactorEffort) -> Result<ReductionData, CurveError> {
    let mut a = curve.a.clone();
    let mut b = curve.b.clone();
    // Strip (a, b) -> (a/p^4, b/p^6) for p >= 5 whenever possible.
    let g = a.abs().gcd(&b.abs());
    if g > BigInt::from(1) {
        for (p, _) in factor_bigint(&g, effort)? {
            if p < BigInt::from(5) {
                continue;
            }
            let p4 = p.pow(4);
            let p6 = p.pow(6);
            loop {
                let a_ok = a.is_zero() || (&a % &p4).is_zero();
                let b_ok = b.is_zero() || (&b % &p6).is_zero();
                if a_ok && b_ok && !(a.is_zero() && b.is_zero()) {
                    a /= &p4;
                    b /= &p6;
                } else {
                    break;
                }
            }
        }
    }
    let disc: BigInt = 4 * a.pow(3) + 27 * b.pow(2);
    debug_assert!(!disc.is_zero());
    let disc_factors = factor_bigint(&disc, effort)?;
    let mut bad: Vec<u64> = vec![2];
    for (p, _) in &disc_factors {
        let p = p.to_u64().ok_or(CurveError::PrimeTooLarge)?;
        if p >= 3 && !bad.contains(&p) {
            bad.push(p);
        }
    }
    bad.sort_unstable();
    let n = bad.iter().map(|&p| BigInt::from(p)).product();
    Ok(ReductionData {
        omega: bad.len(),
        bad_primes: bad,
        n,
        reduced_a: a,
        reduced_b: b,
        disc_core_reduced: disc,
        disc_factors,
    })
}

impl ReductionData {
    pub fn is_good(&self, p: u64) -> bool {
        self.bad_primes.binary_search(&p).is_err()
    }
}

/// A computed trace of Frobenius at a good prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApRecord {
    pub p: u64,
    pub ap: i64,
}

impl ApRecord {
    pub fn satisfies_hasse(&self) -> bool {
        (self.ap as i128) * (self.ap as i128) <= 4 * self.p as i128
    }
}

fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().expect("mod_floor of a u64 modulus fits")
}

/// Threshold below which a_p is computed by naive enumeration.
pub const NAIVE_AP_LIMIT: u64 = 1 << 10;

/// a_p = p + 1 - |E(F_p)| at a good prime: naive counting below 2^10,
/// baby-step/giant-step order resolution above.
pub fn ap(red: &ReductionData, p: u64) -> Result<i64, CurveError> {
    if !red.is_good(p) {
        return Err(CurveError::BadReduction(p));
    }
    let a = reduce_mod(&red.reduced_a, p);
    let b = reduce_mod(&red.reduced_b, p);
    Ok(if p < NAIVE_AP_LIMIT {
        ap_naive(p, a, b)
    } else {
        ap_bsgs(p, a, b)
    })
}

/// a_p for all good primes p <= x, ascending. Primes fan out across workers;
/// the result order is fixed by the prime order, so output is deterministic.
pub fn ap_range(red: &ReductionData, x: u64) -> Result<Vec<ApRecord>, CurveError> {
    let good: Vec<u64> = sieve(x).into_iter().filter(|&p| red.is_good(p)).collect();
    good.into_par_iter()
        .map(|p| ap(red, p).map(|ap| ApRecord { p, ap }))
        .collect()
}

/// Number of good primes p <= x with a_p = r.
pub fn pi_e_r(red: &ReductionData, r: i64, x: u64) -> Result<u64, CurveError> {
    Ok(ap_range(red, x)?
        .into_iter()
        .filter(|rec| rec.ap == r)
        .count() as u64)
}
