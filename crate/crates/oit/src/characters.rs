//! Quadratic Dirichlet characters modulo the bad-reduction product N, the
//! witness-prime search with its Kraus-style bound, the greedy
//! exceptional-modulus elimination, index bounds derived from it, and a
//! witness-based mod-l surjectivity test.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::arith::{invmod, is_prime, jacobi, PrimeIter};
use crate::curve::{ap, ap_range, log_bigint, Curve, CurveError, ReductionData};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CharError {
    #[error("modulus is not squarefree")]
    NotSquarefree,
    #[error("character is ramified at {0}")]
    Ramified(u64),
    #[error("witness search needs a non-trivial character")]
    TrivialCharacter,
    #[error("{0} is not an admissible prime here")]
    BadPrime(u64),
    #[error("witness bound violated: smallest witness prime {p} exceeds the Kraus bound {bound}")]
    BoundViolation { p: u64, bound: u64 },
    #[error(
        "no witness prime up to {searched_to} (Kraus bound {bound}); the curve is likely CM, \
         where the twisting character kills every candidate"
    )]
    NoWitnessWithinBound { searched_to: u64, bound: u64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// One basis character: the non-trivial character mod 4, or the Legendre
/// symbol mod an odd prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisChar {
    Mod4,
    Legendre(u64),
}

impl BasisChar {
    fn eval(&self, p: u64) -> i8 {
        match self {
            BasisChar::Mod4 => {
                if p % 4 == 1 {
                    1
                } else {
                    -1
                }
            }
            BasisChar::Legendre(q) => jacobi(p as i64, *q) as i8,
        }
    }

    fn label(&self) -> String {
        match self {
            BasisChar::Mod4 => "chi4".to_string(),
            BasisChar::Legendre(q) => format!("chi{q}"),
        }
    }
}

/// The F_2-vector space of quadratic Dirichlet characters modulo
/// N0 = N (N odd) or 2N (N even), with one basis character per prime
/// dividing N. Its dimension is omega(N).
#[derive(Clone, Debug)]
pub struct CharSpace {
    n: BigInt,
    n0: BigInt,
    primes: Vec<u64>,
    basis: Vec<BasisChar>,
}

impl CharSpace {
    /// Builds the space from the sorted distinct prime divisors of N.
    pub fn new(primes: &[u64]) -> Result<Self, CharError> {
        if primes.is_empty()
            || primes.windows(2).any(|w| w[0] >= w[1])
            || primes.iter().any(|&p| !is_prime(p))
        {
            return Err(CharError::NotSquarefree);
        }
        let mut basis = Vec::with_capacity(primes.len());
        for &p in primes {
            basis.push(if p == 2 {
                BasisChar::Mod4
            } else {
                BasisChar::Legendre(p)
            });
        }
        let n: BigInt = primes.iter().map(|&p| BigInt::from(p)).product();
        let n0 = if primes[0] == 2 { 2 * &n } else { n.clone() };
        Ok(CharSpace {
            n,
            n0,
            primes: primes.to_vec(),
            basis,
        })
    }

    /// Builds the space from a squarefree modulus N >= 2.
    pub fn from_modulus(n: u64) -> Result<Self, CharError> {
        if n < 2 {
            return Err(CharError::NotSquarefree);
        }
        let factors = crate::curve::factor_u64(n);
        if factors.iter().any(|&(_, e)| e > 1) {
            return Err(CharError::NotSquarefree);
        }
        let primes: Vec<u64> = factors.into_iter().map(|(p, _)| p).collect();
        CharSpace::new(&primes)
    }

    pub fn from_reduction(red: &ReductionData) -> Result<Self, CharError> {
        CharSpace::new(&red.bad_primes)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn n0(&self) -> &BigInt {
        &self.n0
    }

    pub fn basis(&self) -> &[BasisChar] {
        &self.basis
    }

    pub fn basis_char(&self, index: usize) -> QuadChar {
        QuadChar { mask: 1 << index }
    }

    pub fn trivial(&self) -> QuadChar {
        QuadChar { mask: 0 }
    }

    pub fn is_ramified(&self, p: u64) -> bool {
        self.primes.contains(&p)
    }

    pub fn label(&self, chi: &QuadChar) -> String {
        if chi.mask == 0 {
            return "1".to_string();
        }
        let parts: Vec<String> = self
            .basis
            .iter()
            .enumerate()
            .filter(|(i, _)| chi.mask >> i & 1 == 1)
            .map(|(_, b)| b.label())
            .collect();
        parts.join("*")
    }

    pub fn all_characters(&self) -> impl Iterator<Item = QuadChar> + '_ {
        (0..(1u32 << self.dim())).map(|mask| QuadChar { mask })
    }
}

/// A quadratic character as an exponent vector over the space's basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadChar {
    mask: u32,
}

impl QuadChar {
    pub fn is_trivial(&self) -> bool {
        self.mask == 0
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }
}

/// Evaluates a character at a prime coprime to N0.
pub fn char_eval(space: &CharSpace, chi: &QuadChar, p: u64) -> Result<i8, CharError> {
    if space.is_ramified(p) {
        return Err(CharError::Ramified(p));
    }
    let mut value = 1i8;
    for (i, basis) in space.basis.iter().enumerate() {
        if chi.mask >> i & 1 == 1 {
            value *= basis.eval(p);
        }
    }
    Ok(value)
}

/// 1152 N^2 (1 + loglog N), with the (1 + loglog N) factor clamped to at
/// least 1 so the bound stays monotone for tiny N (enlarging a bound is
/// always safe).
pub fn kraus_bound(n: &BigInt) -> f64 {
    let ln_n = log_bigint(&n.abs());
    let factor = if ln_n <= 1.0 {
        1.0
    } else {
        (1.0 + ln_n.ln()).max(1.0)
    };
    1152.0 * (ln_n * 2.0).exp() * factor
}

/// How far past the Kraus bound the witness search keeps going before
/// declaring that no witness exists. A witness found in the overshoot zone is
/// a bound violation; none at all points at a CM curve.
const WITNESS_OVERSHOOT: f64 = 4.0;

/// The smallest prime p not dividing N with chi(p) = -1 and a_p != 0.
pub fn witness_prime(
    red: &ReductionData,
    space: &CharSpace,
    chi: &QuadChar,
) -> Result<(u64, i64), CharError> {
    if chi.is_trivial() {
        return Err(CharError::TrivialCharacter);
    }
    let bound_f = kraus_bound(space.n());
    let bound = if bound_f.is_finite() {
        bound_f as u64
    } else {
        u64::MAX
    };
    let extended_f = bound_f * WITNESS_OVERSHOOT;
    let extended = if extended_f.is_finite() {
        extended_f as u64
    } else {
        u64::MAX
    };
    for p in PrimeIter::new() {
        if p > extended {
            break;
        }
        if space.is_ramified(p) || !red.is_good(p) {
            continue;
        }
        if char_eval(space, chi, p)? != -1 {
            continue;
        }
        let a = ap(red, p)?;
        if a == 0 {
            continue;
        }
        if p <= bound {
            return Ok((p, a));
        }
        return Err(CharError::BoundViolation { p, bound });
    }
    Err(CharError::NoWitnessWithinBound {
        searched_to: extended,
        bound,
    })
}

#[derive(Clone, Debug)]
pub struct WitnessStep {
    pub alpha: QuadChar,
    pub alpha_label: String,
    pub p: u64,
    pub ap: i64,
    /// Dimension of the character space before this elimination step.
    pub dim_before: usize,
}

/// Transcript of the greedy elimination together with the exceptional
/// modulus M and the bounds built from it.
#[derive(Clone, Debug)]
pub struct ExceptionalModulusReport {
    pub curve_a: BigInt,
    pub curve_b: BigInt,
    pub n: BigInt,
    pub n0: BigInt,
    pub omega: usize,
    pub steps: Vec<WitnessStep>,
    pub m: BigInt,
    pub m24: BigInt,
    pub kraus_bound: f64,
    pub closed_form: ClosedFormBound,
}

/// (68 N (1 + loglog N)^{1/2})^{24 omega(N)}, carried in log form because the
/// value overflows any fixed-width float for moderate N.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormBound {
    pub log10: f64,
    pub base: f64,
    pub exponent: u32,
}

impl ClosedFormBound {
    pub fn new(n: &BigInt, omega: usize) -> Self {
        let ln_n = log_bigint(&n.abs());
        let factor = if ln_n <= 1.0 {
            1.0
        } else {
            (1.0 + ln_n.ln()).max(1.0)
        };
        let base = 68.0 * ln_n.exp() * factor.sqrt();
        let exponent = 24 * omega as u32;
        ClosedFormBound {
            log10: exponent as f64 * base.log10(),
            base,
            exponent,
        }
    }

    /// Decimal rendering like "3.807e52".
    pub fn display(&self) -> String {
        let e = self.log10.floor();
        let mantissa = 10f64.powf(self.log10 - e);
        format!("{mantissa:.6}e{e}")
    }
}

/// Lexicographically first non-trivial element of the span of `basis`
/// (masks over the space's basis characters).
fn lex_first_nontrivial(basis: &[u32]) -> u32 {
    let mut best = u32::MAX;
    for combo in 1u32..(1 << basis.len()) {
        let mut v = 0u32;
        for (i, b) in basis.iter().enumerate() {
            if combo >> i & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 && v < best {
            best = v;
        }
    }
    best
}

/// Runs the greedy elimination: starting from the full character space,
/// repeatedly pick the lexicographically first non-trivial character, find
/// its witness prime, and pass to the kernel of evaluation at that prime.
/// After omega(N) steps the space is trivial and M is the product of the
/// |a_p| collected along the way.
pub fn exceptional_modulus(
    curve: &Curve,
    red: &ReductionData,
) -> Result<ExceptionalModulusReport, CharError> {
    let space = CharSpace::from_reduction(red)?;
    let mut basis: Vec<u32> = (0..space.dim()).map(|i| 1u32 << i).collect();
    let mut steps = Vec::new();
    let mut m = BigInt::one();
    while !basis.is_empty() {
        let alpha = QuadChar {
            mask: lex_first_nontrivial(&basis),
        };
        let dim_before = basis.len();
        let (p, a) = witness_prime(red, &space, &alpha)?;
        steps.push(WitnessStep {
            alpha,
            alpha_label: space.label(&alpha),
            p,
            ap: a,
            dim_before,
        });
        m *= BigInt::from(a.unsigned_abs());
        // Kernel of evaluation-at-p: fold the basis vectors that evaluate to
        // -1 into one pivot, then drop the pivot.
        let parity = |mask: u32| -> bool {
            let chi = QuadChar { mask };
            char_eval(&space, &chi, p).expect("witness prime is unramified") == -1
        };
        let pivot_pos = basis
            .iter()
            .position(|&b| parity(b))
            .expect("alpha evaluates to -1, so some basis vector does");
        let pivot = basis.remove(pivot_pos);
        for b in &mut basis {
            if parity(*b) {
                *b ^= pivot;
            }
        }
    }
    let m24 = m.pow(24);
    Ok(ExceptionalModulusReport {
        curve_a: curve.a().clone(),
        curve_b: curve.b().clone(),
        n: red.n.clone(),
        n0: space.n0().clone(),
        omega: red.omega,
        steps,
        m,
        m24,
        kraus_bound: kraus_bound(space.n()),
        closed_form: ClosedFormBound::new(space.n(), red.omega),
    })
}

/// 37 times the product of the primes up to 17.
pub const REMARK_COPRIME_MODULUS: u64 = 37 * 2 * 3 * 5 * 7 * 11 * 13 * 17;

/// The index bounds packaged for reporting: M^24 up to an absolute constant,
/// the unconditional closed form, and the statement restricted to moduli
/// coprime to 37 * prod_{l <= 17} l, where no constant is needed.
#[derive(Clone, Debug)]
pub struct IndexBounds {
    pub m24: BigInt,
    pub m24_note: &'static str,
    pub closed_form: ClosedFormBound,
    pub remark_modulus: u64,
    pub remark: String,
}

pub fn index_bounds(report: &ExceptionalModulusReport) -> IndexBounds {
    IndexBounds {
        m24: report.m24.clone(),
        m24_note: "bounds the adelic index up to an absolute constant that absorbs the \
                   contribution of the primes l <= 17 and l = 37",
        closed_form: report.closed_form,
        remark_modulus: REMARK_COPRIME_MODULUS,
        remark: format!(
            "for every m coprime to {REMARK_COPRIME_MODULUS}, the index of the mod-m image in \
             GL_2(Z/mZ) is at most {}",
            report.closed_form.display()
        ),
    }
}

/// The prime divisors of M above 17 and different from 37: the range where a
/// divisor of the exceptional modulus could reflect a genuinely exceptional
/// image. Recorded for diagnostics; nothing is asserted about them because
/// the twisting character itself is not computable from this data.
pub fn large_prime_divisors_of_m(report: &ExceptionalModulusReport) -> Vec<u64> {
    let mut out = Vec::new();
    if let Some(m) = report.m.to_u64() {
        for (p, _) in crate::curve::factor_u64(m) {
            if p > 17 && p != 37 {
                out.push(p);
            }
        }
    } else {
        for (p, _) in crate::curve::factor_bigint(&report.m, &crate::curve::FactorEffort::default())
            .unwrap_or_default()
        {
            if let Some(p) = p.to_u64() {
                if p > 17 && p != 37 {
                    out.push(p);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessClass {
    /// a_p^2 - 4p a non-square mod l with a_p nonzero mod l: rules out the
    /// Borel and split-normalizer cases.
    NonSquareDisc,
    /// a_p^2 - 4p a nonzero square mod l with a_p nonzero mod l: rules out
    /// the non-split-normalizer case.
    SquareDisc,
    /// u = a_p^2 / p mod l outside {0, 1, 2, 4} with u^2 - 3u + 1 != 0:
    /// rules out the exceptional images.
    ExceptionalTrace,
}

impl WitnessClass {
    pub fn tag(&self) -> &'static str {
        match self {
            WitnessClass::NonSquareDisc => "nonsquare-disc",
            WitnessClass::SquareDisc => "square-disc",
            WitnessClass::ExceptionalTrace => "exceptional-trace",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurjectivityStatus {
    Surjective,
    Undecided,
}

/// Verdict of the sampling test; the criteria are sufficient only, so there
/// is no "not surjective" state.
#[derive(Clone, Debug)]
pub struct SurjectivityVerdict {
    pub ell: u64,
    pub x: u64,
    pub status: SurjectivityStatus,
    pub witnesses: Vec<(WitnessClass, u64, i64)>,
}

/// Scans good primes p <= x (skipping p = l) and classifies Frobenius data
/// until all three witness classes are seen, which certifies that the mod-l
/// image is all of GL_2(Z/lZ).
pub fn surjectivity_test(
    red: &ReductionData,
    ell: u64,
    x: u64,
) -> Result<SurjectivityVerdict, CharError> {
    if ell < 5 || !is_prime(ell) || !red.is_good(ell) {
        return Err(CharError::BadPrime(ell));
    }
    let mut found: [Option<(u64, i64)>; 3] = [None; 3];
    for rec in ap_range(red, x)? {
        if rec.p == ell {
            continue;
        }
        let a = rec.ap.rem_euclid(ell as i64) as u64;
        let p = rec.p % ell;
        let disc = ((a * a) as i64 - 4 * p as i64).rem_euclid(ell as i64) as u64;
        if found[0].is_none() && a != 0 && jacobi(disc as i64, ell) == -1 {
            found[0] = Some((rec.p, rec.ap));
        }
        if found[1].is_none() && a != 0 && disc != 0 && jacobi(disc as i64, ell) == 1 {
            found[1] = Some((rec.p, rec.ap));
        }
        if found[2].is_none() && p != 0 {
            let u = a * a % ell * invmod(p, ell).expect("p is a unit mod l") % ell;
            let char_poly = ((u * u) as i64 - 3 * u as i64 + 1).rem_euclid(ell as i64);
            if ![0, 1, 2, 4].contains(&u) && char_poly != 0 {
                found[2] = Some((rec.p, rec.ap));
            }
        }
        if found.iter().all(Option::is_some) {
            break;
        }
    }
    let mut witnesses = Vec::new();
    for (class, slot) in [
        (WitnessClass::NonSquareDisc, found[0]),
        (WitnessClass::SquareDisc, found[1]),
        (WitnessClass::ExceptionalTrace, found[2]),
    ] {
        if let Some((p, a)) = slot {
            witnesses.push((class, p, a));
        }
    }
    let status = if witnesses.len() == 3 {
        SurjectivityStatus::Surjective
    } else {
        SurjectivityStatus::Undecided
    };
    Ok(SurjectivityVerdict {
        ell,
        x,
        status,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{bad_primes, FactorEffort};
    use num_traits::ToPrimitive;

    fn red(a: i64, b: i64) -> ReductionData {
        bad_primes(&Curve::from_i64(a, b).unwrap(), &FactorEffort::default()).unwrap()
    }

    #[test]
    fn char_space_examples() {
        let s = CharSpace::from_modulus(15).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.basis(), &[BasisChar::Legendre(3), BasisChar::Legendre(5)]);
        assert_eq!(s.n0().to_i64().unwrap(), 15);

        let s = CharSpace::from_modulus(62).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.basis(), &[BasisChar::Mod4, BasisChar::Legendre(31)]);
        assert_eq!(s.n0().to_i64().unwrap(), 124);

        let s = CharSpace::from_modulus(2).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.basis(), &[BasisChar::Mod4]);

        assert_eq!(
            CharSpace::from_modulus(12).unwrap_err(),
            CharError::NotSquarefree
        );
    }

    #[test]
    fn char_eval_examples() {
        let s = CharSpace::from_modulus(15).unwrap();
        let chi3 = s.basis_char(0);
        assert_eq!(char_eval(&s, &chi3, 2).unwrap(), -1);
        assert_eq!(char_eval(&s, &s.trivial(), 7).unwrap(), 1);
        assert_eq!(char_eval(&s, &chi3, 3), Err(CharError::Ramified(3)));

        let s = CharSpace::from_modulus(2).unwrap();
        let chi4 = s.basis_char(0);
        assert_eq!(char_eval(&s, &chi4, 5).unwrap(), 1);
        assert_eq!(char_eval(&s, &chi4, 7).unwrap(), -1);
    }

    #[test]
    fn legendre_31_matches_square_table() {
        // Oracle: the squares modulo 31 by direct enumeration.
        let squares: std::collections::HashSet<u64> = (1..31u64).map(|x| x * x % 31).collect();
        let s = CharSpace::from_modulus(62).unwrap();
        let chi31 = s.basis_char(1);
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 37] {
            let want = if squares.contains(&(p % 31)) { 1 } else { -1 };
            assert_eq!(char_eval(&s, &chi31, p).unwrap(), want, "p={p}");
        }
    }

    #[test]
    fn char_eval_is_multiplicative() {
        let s = CharSpace::from_modulus(62).unwrap();
        for chi in s.all_characters() {
            for (p, q) in [(3u64, 7u64), (5, 11), (7, 13), (3, 47)] {
                let pq = p * q;
                let direct: i8 = s
                    .basis()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| chi.mask() >> i & 1 == 1)
                    .map(|(_, b)| match b {
                        BasisChar::Mod4 => {
                            if pq % 4 == 1 {
                                1
                            } else {
                                -1
                            }
                        }
                        BasisChar::Legendre(m) => jacobi(pq as i64, *m) as i8,
                    })
                    .product();
                let split = char_eval(&s, &chi, p).unwrap() * char_eval(&s, &chi, q).unwrap();
                assert_eq!(direct, split);
            }
        }
    }

    #[test]
    fn witness_prime_examples() {
        let r = red(1, 1);
        let s = CharSpace::from_reduction(&r).unwrap();
        let chi4 = s.basis_char(0);
        let chi31 = s.basis_char(1);
        // chi4: p = 3 is skipped because a_3 = 0; p = 7 has chi4(7) = -1 and
        // a_7 = 3.
        assert_eq!(witness_prime(&r, &s, &chi4).unwrap(), (7, 3));
        // chi31: 3 skipped (a_3 = 0), 5 and 7 are squares mod 31, 11 is not,
        // and counting points over F_11 gives a_11 = -2.
        assert_eq!(crate::curve::ap(&r, 11).unwrap(), -2);
        assert_eq!(witness_prime(&r, &s, &chi31).unwrap(), (11, -2));
        assert!(matches!(
            witness_prime(&r, &s, &s.trivial()),
            Err(CharError::TrivialCharacter)
        ));
    }

    #[test]
    fn witness_prime_cm_curve_exhausts_bound() {
        // y^2 = x^3 + x has a_p = 0 exactly when p = 3 mod 4, which is the
        // chi4 = -1 condition: no witness can exist.
        let r = red(1, 0);
        let s = CharSpace::from_reduction(&r).unwrap();
        let chi4 = s.basis_char(0);
        match witness_prime(&r, &s, &chi4) {
            Err(CharError::NoWitnessWithinBound { bound, .. }) => {
                assert_eq!(bound, 4608); // 1152 * 2^2 with the clamped factor
            }
            other => panic!("expected NoWitnessWithinBound, got {other:?}"),
        }
    }

    #[test]
    fn exceptional_modulus_transcript() {
        let curve = Curve::from_i64(1, 1).unwrap();
        let r = red(1, 1);
        let report = exceptional_modulus(&curve, &r).unwrap();
        let summary: Vec<(&str, u64, i64)> = report
            .steps
            .iter()
            .map(|s| (s.alpha_label.as_str(), s.p, s.ap))
            .collect();
        assert_eq!(summary, vec![("chi4", 7, 3), ("chi31", 11, -2)]);
        assert_eq!(report.m.to_i64().unwrap(), 6);
        assert_eq!(report.m24, BigInt::from(6).pow(24));
        // Dimension drops by one per step.
        assert_eq!(
            report
                .steps
                .iter()
                .map(|s| s.dim_before)
                .collect::<Vec<_>>(),
            vec![2, 1]
        );
        // Every selected prime stays below the Kraus bound.
        for s in &report.steps {
            assert!((s.p as f64) < report.kraus_bound);
        }
        assert!((report.kraus_bound - 1.0705755e7).abs() / 1e7 < 1e-3);
    }

    #[test]
    fn greedy_coverage_for_small_omega() {
        // Every non-trivial character of the space must evaluate to -1 at
        // one of the chosen witness primes.
        let curve = Curve::from_i64(1, 1).unwrap();
        let r = red(1, 1);
        let report = exceptional_modulus(&curve, &r).unwrap();
        let s = CharSpace::from_reduction(&r).unwrap();
        for chi in s.all_characters() {
            if chi.is_trivial() {
                continue;
            }
            assert!(
                report
                    .steps
                    .iter()
                    .any(|st| char_eval(&s, &chi, st.p).unwrap() == -1),
                "character {} not covered",
                s.label(&chi)
            );
        }
    }

    #[test]
    fn twelve_pow_24_matches_decimal_string() {
        // Big-integer power cross-checked against u128 repeated multiply.
        let big = BigInt::from(12).pow(24);
        assert_eq!(big.to_string(), "79496847203390844133441536");
        let mut u: u128 = 1;
        for _ in 0..24 {
            u *= 12;
        }
        assert_eq!(big, BigInt::from(u));
        assert_eq!(BigInt::from(1).pow(24), BigInt::one());
    }

    #[test]
    fn closed_form_for_n_62() {
        // (68 * 62 * (1 + loglog 62)^{1/2})^{24 * 2}, evaluated directly.
        let cf = ClosedFormBound::new(&BigInt::from(62), 2);
        let base = 68.0 * 62.0 * (1.0 + (62.0f64).ln().ln()).sqrt();
        assert_eq!(cf.exponent, 48);
        assert!((cf.log10 - 48.0 * base.log10()).abs() < 1e-9);
        // loglog 62 = 1.4176...
        assert!(((62.0f64).ln().ln() - 1.4176).abs() < 1e-3);
    }

    #[test]
    fn no_large_exceptional_prime_divisors_at_desk_scale() {
        // For E = (1,1), M = 6 has no prime divisor above 17; if one ever
        // appeared the diagnostics would surface it for a_p scanning.
        let curve = Curve::from_i64(1, 1).unwrap();
        let r = red(1, 1);
        let report = exceptional_modulus(&curve, &r).unwrap();
        let large = large_prime_divisors_of_m(&report);
        assert!(large.is_empty(), "unexpected large divisors: {large:?}");
        // The harness itself: any such divisor would be checked against
        // sampled traces (recorded, never asserted).
        for ell in large {
            for rec in crate::curve::ap_range(&r, 500).unwrap() {
                let _ = rec.ap.rem_euclid(ell as i64);
            }
        }
    }

    #[test]
    fn index_bounds_dim1_closed_form() {
        // N = 2: the (1 + loglog N) factor clamps to 1, so the closed form is
        // (68 * 2)^24.
        let cf = ClosedFormBound::new(&BigInt::from(2), 1);
        let want = 24.0 * (136.0f64).log10();
        assert!((cf.log10 - want).abs() < 1e-9);
        assert_eq!(REMARK_COPRIME_MODULUS, 18_888_870);
    }

    #[test]
    fn one_step_elimination_in_dimension_one() {
        // omega = 1: one elimination step kills the whole space.
        let s = CharSpace::from_modulus(2).unwrap();
        assert_eq!(s.dim(), 1);
        let alpha = QuadChar {
            mask: lex_first_nontrivial(&[1]),
        };
        assert_eq!(alpha, s.basis_char(0));
        // Evaluation at any p = 3 mod 4 is -1, so the kernel is trivial.
        assert_eq!(char_eval(&s, &alpha, 7).unwrap(), -1);
    }

    #[test]
    fn surjectivity_cm_curve_is_undecided() {
        // CM by Z[i]: mod 7 the image sits in a non-split Cartan normalizer,
        // so the nonzero-square-discriminant witness never appears.
        let verdict = surjectivity_test(&red(1, 0), 7, 3000).unwrap();
        assert_eq!(verdict.status, SurjectivityStatus::Undecided);
        assert!(verdict
            .witnesses
            .iter()
            .all(|(c, _, _)| *c != WitnessClass::SquareDisc));
    }

    #[test]
    fn surjectivity_generic_curve() {
        let verdict = surjectivity_test(&red(1, 1), 5, 1000).unwrap();
        assert_eq!(verdict.status, SurjectivityStatus::Surjective);
        assert_eq!(verdict.witnesses.len(), 3);
    }

    #[test]
    fn surjectivity_no_data_is_undecided() {
        let verdict = surjectivity_test(&red(1, 1), 5, 2).unwrap();
        assert_eq!(verdict.status, SurjectivityStatus::Undecided);
        assert!(verdict.witnesses.is_empty());
    }

    #[test]
    fn surjectivity_rejects_bad_ell() {
        assert_eq!(
            surjectivity_test(&red(1, 1), 31, 100).unwrap_err(),
            CharError::BadPrime(31)
        );
        assert_eq!(
            surjectivity_test(&red(1, 1), 4, 100).unwrap_err(),
            CharError::BadPrime(4)
        );
    }
}
