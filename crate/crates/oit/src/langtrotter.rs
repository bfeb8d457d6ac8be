//! Lang-Trotter constants and their finite-level counterparts: exact local
//! Euler factors, the truncated product for C_r with a rigorous tail bound,
//! trace censuses over explicit matrix groups modulo m, the finite-level
//! index inequality, and the averaged counting experiment over boxes of
//! curves.

use std::collections::HashSet;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::arith::{gcd, sieve};
use crate::curve::{bad_primes, pi_e_r, Curve, CurveError, FactorEffort};
use crate::matgroup::MatGroup;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtError {
    #[error("element set is not closed under multiplication")]
    NotAGroup,
    #[error("cutoff must be at least 3")]
    CutoffTooSmall,
    #[error("modulus {0} is too large for an exhaustive census")]
    ModulusTooLarge(u64),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// One Euler factor of C_r: l^2/(l^2-1) when l divides r, and
/// l(l^2-l-1)/((l-1)(l^2-1)) otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalFactor {
    pub ell: u64,
    pub r_class: u64,
    pub value: Rational64,
}

pub fn local_factor(ell: u64, r: i64) -> LocalFactor {
    let l = ell as i64;
    let r_class = r.rem_euclid(l) as u64;
    let value = if r_class == 0 {
        Rational64::new(l * l, l * l - 1)
    } else {
        Rational64::new(l * (l * l - l - 1), (l - 1) * (l * l - 1))
    };
    LocalFactor {
        ell,
        r_class,
        value,
    }
}

// ---------------------------------------------------------------------------
// Double-double arithmetic: the truncated Euler product multiplies thousands
// of factors, and a plain f64 product can lose the last couple of digits.
// Two-float compensation keeps ~31 significant digits through the product.

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::new(q3))
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

const PI_DD: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};

/// Truncated Lang-Trotter constant: (2/pi) times the product of local
/// factors over primes l <= cutoff, plus a tail bound dominating the
/// logarithm of the neglected factors.
#[derive(Clone, Copy, Debug)]
pub struct LtConstant {
    pub r: i64,
    pub cutoff: u64,
    pub value: f64,
    pub tail_bound: f64,
}

pub fn lt_constant(r: i64, cutoff: u64) -> Result<LtConstant, LtError> {
    if cutoff < 3 {
        return Err(LtError::CutoffTooSmall);
    }
    let mut product = Dd::new(1.0);
    for ell in sieve(cutoff) {
        let l = Dd::new(ell as f64);
        let l2 = l.mul(l);
        let one = Dd::new(1.0);
        let factor = if (r.rem_euclid(ell as i64)) == 0 {
            l2.div(l2.sub(one))
        } else {
            let num = l.mul(l2.sub(l).sub(one));
            let den = l.sub(one).mul(l2.sub(one));
            num.div(den)
        };
        product = product.mul(factor);
    }
    let value = Dd::new(2.0).div(PI_DD).mul(product).to_f64();
    Ok(LtConstant {
        r,
        cutoff,
        value,
        tail_bound: tail_bound(cutoff),
    })
}

/// Sum over n > cutoff of 2/n^2, slightly rounded up: each neglected log
/// factor is below 2/l^2 in magnitude, so this dominates the truncation
/// error of log C_r.
fn tail_bound(cutoff: u64) -> f64 {
    let horizon = cutoff + 100_000;
    let mut sum = 0.0f64;
    for n in (cutoff + 1)..=horizon {
        sum += 1.0 / (n as f64 * n as f64);
    }
    2.0 * (sum + 1.0 / horizon as f64)
}

// ---------------------------------------------------------------------------
// Finite-level trace censuses.

/// An explicit set of invertible 2x2 matrices modulo m.
#[derive(Clone, Debug)]
pub struct ElementSet {
    modulus: u64,
    elements: Vec<[u64; 4]>,
    /// Set when the source guarantees closure (e.g. a matgroup closure).
    closure_guaranteed: bool,
}

impl ElementSet {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[[u64; 4]] {
        &self.elements
    }

    pub fn from_elements(modulus: u64, elements: Vec<[u64; 4]>) -> Self {
        ElementSet {
            modulus,
            elements,
            closure_guaranteed: false,
        }
    }

    pub fn from_matgroup(group: &MatGroup) -> Self {
        let elements = group.elements().iter().map(|m| m.entries()).collect();
        ElementSet {
            modulus: group.level().modulus(),
            elements,
            closure_guaranteed: true,
        }
    }

    /// All of GL_2(Z/mZ) by enumeration; m is capped to keep m^4 tractable.
    pub fn full_gl2(modulus: u64) -> Result<Self, LtError> {
        if !(2..=64).contains(&modulus) {
            return Err(LtError::ModulusTooLarge(modulus));
        }
        let mut elements = Vec::new();
        for a in 0..modulus {
            for b in 0..modulus {
                for c in 0..modulus {
                    for d in 0..modulus {
                        let det = (a * d % modulus + modulus - b * c % modulus) % modulus;
                        if gcd(det, modulus) == 1 {
                            elements.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        Ok(ElementSet {
            modulus,
            elements,
            closure_guaranteed: true,
        })
    }

    fn mul(&self, x: [u64; 4], y: [u64; 4]) -> [u64; 4] {
        let m = self.modulus;
        [
            (x[0] * y[0] + x[1] * y[2]) % m,
            (x[0] * y[1] + x[1] * y[3]) % m,
            (x[2] * y[0] + x[3] * y[2]) % m,
            (x[2] * y[1] + x[3] * y[3]) % m,
        ]
    }

    /// Identity present plus sampled products staying inside the set.
    fn closure_check(&self) -> Result<(), LtError> {
        if self.closure_guaranteed {
            return Ok(());
        }
        let set: HashSet<[u64; 4]> = self.elements.iter().copied().collect();
        if !set.contains(&[1, 0, 0, 1]) {
            return Err(LtError::NotAGroup);
        }
        let n = self.elements.len() as u64;
        // Deterministic sampling; exhaustive when the set is small.
        if n * n <= 4096 {
            for x in &self.elements {
                for y in &self.elements {
                    if !set.contains(&self.mul(*x, *y)) {
                        return Err(LtError::NotAGroup);
                    }
                }
            }
            return Ok(());
        }
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..4096 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let i = (state >> 33) % n;
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let j = (state >> 33) % n;
            let prod = self.mul(self.elements[i as usize], self.elements[j as usize]);
            if !set.contains(&prod) {
                return Err(LtError::NotAGroup);
            }
        }
        Ok(())
    }
}

/// Exact ratio m * #{A in G : tr A = r mod m} / |G|.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRatio {
    pub modulus: u64,
    pub group_order: u64,
    pub trace_count: u64,
    pub ratio: Rational64,
}

pub fn trace_count_ratio(set: &ElementSet, r: i64) -> Result<TraceRatio, LtError> {
    set.closure_check()?;
    let m = set.modulus();
    let target = r.rem_euclid(m as i64) as u64;
    let count = set
        .elements()
        .iter()
        .filter(|e| (e[0] + e[3]) % m == target)
        .count() as u64;
    Ok(TraceRatio {
        modulus: m,
        group_order: set.len() as u64,
        trace_count: count,
        ratio: Rational64::new((m * count) as i64, set.len() as i64),
    })
}

/// Finite-level index inequality: the trace ratio of a subgroup is at most
/// the index times the trace ratio of the full group. Set-theoretically this
/// is just "a subgroup holds no more matrices of trace r than the whole
/// group", so a `false` here would expose an implementation bug.
pub fn lt_inequality_check(set: &ElementSet, r: i64) -> Result<bool, LtError> {
    let sub = trace_count_ratio(set, r)?;
    let full = ElementSet::full_gl2(set.modulus())?;
    let full_ratio = trace_count_ratio(&full, r)?;
    let index = Rational64::new(full.len() as i64, set.len() as i64);
    Ok(sub.ratio <= index * full_ratio.ratio)
}

/// Every subgroup of the group given by `full`, found by closing each
/// one-element extension of each known subgroup until a fixed point.
pub fn subgroup_lattice(full: &ElementSet) -> Result<Vec<ElementSet>, LtError> {
    full.closure_check()?;
    let m = full.modulus();
    let key = |e: &[u64; 4]| ((e[0] * m + e[1]) * m + e[2]) * m + e[3];
    let closure = |gens: &[[u64; 4]]| -> Vec<[u64; 4]> {
        let mut set: HashSet<[u64; 4]> = HashSet::new();
        let id = [1u64, 0, 0, 1];
        set.insert(id);
        let mut queue = vec![id];
        while let Some(x) = queue.pop() {
            for g in gens {
                let y = full.mul(x, *g);
                if set.insert(y) {
                    queue.push(y);
                }
            }
        }
        let mut v: Vec<[u64; 4]> = set.into_iter().collect();
        v.sort_by_key(key);
        v
    };
    // Each known subgroup is kept as (elements, generators).
    type SubgroupEntry = (Vec<[u64; 4]>, Vec<[u64; 4]>);
    let mut sigs: HashSet<Vec<u64>> = HashSet::new();
    let mut subgroups: Vec<SubgroupEntry> = Vec::new();
    let trivial = closure(&[]);
    sigs.insert(trivial.iter().map(key).collect());
    subgroups.push((trivial, Vec::new()));
    let mut frontier = vec![0usize];
    while let Some(idx) = frontier.pop() {
        let (elems, gens) = subgroups[idx].clone();
        let member: HashSet<[u64; 4]> = elems.iter().copied().collect();
        for g in full.elements() {
            if member.contains(g) {
                continue;
            }
            let mut new_gens = gens.clone();
            new_gens.push(*g);
            let new_elems = closure(&new_gens);
            let sig: Vec<u64> = new_elems.iter().map(key).collect();
            if sigs.insert(sig) {
                subgroups.push((new_elems, new_gens));
                frontier.push(subgroups.len() - 1);
            }
        }
    }
    Ok(subgroups
        .into_iter()
        .map(|(elements, _)| ElementSet {
            modulus: m,
            elements,
            closure_guaranteed: true,
        })
        .collect())
}

// ---------------------------------------------------------------------------
// The averaged counting experiment.

#[derive(Clone, Copy, Debug)]
pub struct AverageParams {
    pub a_bound: i64,
    pub b_bound: i64,
    pub r: i64,
    pub x: u64,
    pub sample_size: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct AverageReport {
    pub params: AverageParams,
    /// Empirical mean of pi_{E,r}(x) over the sample.
    pub mean: f64,
    /// C_r sqrt(x) / log x with C_r truncated at the stated cutoff.
    pub reference: f64,
    pub ratio: f64,
    pub c_r: f64,
    pub c_r_cutoff: u64,
}

pub const AVERAGE_CR_CUTOFF: u64 = 10_000;

/// Draws a reproducible uniform sample from the box |a| <= A, |b| <= B with
/// 4a^3 + 27b^2 != 0 (singular pairs are rejected and redrawn), averages
/// pi_{E,r}(x) over it, and compares with C_r sqrt(x)/log x. Reporting only;
/// no pass/fail judgement is made here.
pub fn average_experiment(params: AverageParams) -> Result<AverageReport, LtError> {
    if params.a_bound < 2 || params.b_bound < 2 {
        return Err(LtError::BadParams(
            "box half-widths must be at least 2".into(),
        ));
    }
    if params.x < 10 {
        return Err(LtError::BadParams("x must be at least 10".into()));
    }
    if params.sample_size == 0 {
        return Err(LtError::BadParams("sample size must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let mut sample = Vec::with_capacity(params.sample_size);
    while sample.len() < params.sample_size {
        let a = rng.gen_range(-params.a_bound..=params.a_bound);
        let b = rng.gen_range(-params.b_bound..=params.b_bound);
        if 4 * (a as i128).pow(3) + 27 * (b as i128).pow(2) != 0 {
            sample.push((a, b));
        }
    }
    // Per-curve counts are reduced in sample order, so the result does not
    // depend on how the work is scheduled.
    let counts: Result<Vec<u64>, LtError> = sample
        .par_iter()
        .map(|&(a, b)| {
            let curve = Curve::new(a.into(), b.into()).expect("singular pairs were rejected");
            let red = bad_primes(&curve, &FactorEffort::default())?;
            Ok(pi_e_r(&red, params.r, params.x)?)
        })
        .collect();
    let counts = counts?;
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let c_r = lt_constant(params.r, AVERAGE_CR_CUTOFF)?.value;
    let reference = c_r * (params.x as f64).sqrt() / (params.x as f64).ln();
    Ok(AverageReport {
        params,
        mean,
        reference,
        ratio: mean / reference,
        c_r,
        c_r_cutoff: AVERAGE_CR_CUTOFF,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_factor_values() {
        assert_eq!(local_factor(3, 1).value, Rational64::new(15, 16));
        assert_eq!(local_factor(3, 0).value, Rational64::new(9, 8));
        assert_eq!(local_factor(5, 10).value, Rational64::new(25, 24));
        assert_eq!(local_factor(2, 1).value, Rational64::new(2, 3));
    }

    #[test]
    fn census_matches_local_factor_mod3() {
        let full = ElementSet::full_gl2(3).unwrap();
        assert_eq!(full.len(), 48);
        let r1 = trace_count_ratio(&full, 1).unwrap();
        assert_eq!(r1.trace_count, 15);
        assert_eq!(r1.ratio, local_factor(3, 1).value);
        let r0 = trace_count_ratio(&full, 0).unwrap();
        assert_eq!(r0.trace_count, 18);
        assert_eq!(r0.ratio, local_factor(3, 0).value);
    }

    #[test]
    fn census_partition_and_symmetry() {
        for m in [3u64, 5, 7] {
            let full = ElementSet::full_gl2(m).unwrap();
            let total: u64 = (0..m as i64)
                .map(|r| trace_count_ratio(&full, r).unwrap().trace_count)
                .sum();
            assert_eq!(total, full.len() as u64);
            for r in 0..m as i64 {
                // A -> -A matches trace r with trace -r.
                let plus = trace_count_ratio(&full, r).unwrap().trace_count;
                let minus = trace_count_ratio(&full, -r).unwrap().trace_count;
                assert_eq!(plus, minus);
            }
        }
    }

    #[test]
    fn trivial_group_ratio() {
        let set = ElementSet::from_elements(3, vec![[1, 0, 0, 1]]);
        let r = trace_count_ratio(&set, 2).unwrap();
        assert_eq!(r.ratio, Rational64::new(3, 1));
    }

    #[test]
    fn not_a_group_detected() {
        let set = ElementSet::from_elements(3, vec![[1, 0, 0, 1], [1, 1, 0, 1]]);
        assert_eq!(trace_count_ratio(&set, 0).unwrap_err(), LtError::NotAGroup);
        let no_id = ElementSet::from_elements(3, vec![[2, 0, 0, 2]]);
        assert_eq!(
            trace_count_ratio(&no_id, 0).unwrap_err(),
            LtError::NotAGroup
        );
    }

    #[test]
    fn lt_constant_examples() {
        // Two factors below 3: l = 2 gives 2/3, l = 3 with r = 0 gives 9/8.
        let c = lt_constant(0, 3).unwrap();
        let want = 2.0 / std::f64::consts::PI * (4.0 / 3.0) * (9.0 / 8.0);
        assert!((c.value - want).abs() < 1e-15);
        assert!(lt_constant(0, 2).is_err());
        // C_0 converges to pi/3.
        let c = lt_constant(0, 100_000).unwrap();
        assert!((c.value - std::f64::consts::PI / 3.0).abs() < 1e-5);
        // Positivity for a few r.
        for r in [-5i64, -1, 0, 1, 2, 12] {
            assert!(lt_constant(r, 1000).unwrap().value > 0.0);
        }
    }

    #[test]
    fn lt_constant_monotone_refinement() {
        for r in [0i64, 1, 2, 6] {
            let small = lt_constant(r, 1000).unwrap();
            let large = lt_constant(r, 10_000).unwrap();
            assert!(
                (large.value - small.value).abs() < small.tail_bound,
                "r={r}: |{} - {}| vs tail {}",
                large.value,
                small.value,
                small.tail_bound
            );
        }
    }

    #[test]
    fn tail_bound_dominates_neglected_logs() {
        // Directly compare the tail bound at T with the actual log-difference
        // out to a much larger cutoff.
        let t = 50u64;
        let c_t = lt_constant(1, t).unwrap();
        let c_big = lt_constant(1, 100_000).unwrap();
        let log_diff = (c_big.value / c_t.value).ln().abs();
        assert!(log_diff < c_t.tail_bound);
    }

    #[test]
    fn inequality_on_sl2_f3_and_full_group() {
        use crate::matgroup::{group_closure, Level, ModMatrix};
        let l = Level::new(3, 1).unwrap();
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let sl2 = ElementSet::from_matgroup(&group_closure(&[s, t], 100).unwrap());
        for r in 0..3 {
            assert!(lt_inequality_check(&sl2, r).unwrap());
        }
        // Full group: equality (index 1).
        let full = ElementSet::full_gl2(3).unwrap();
        let ratio = trace_count_ratio(&full, 1).unwrap().ratio;
        assert_eq!(ratio, local_factor(3, 1).value);
        assert!(lt_inequality_check(&full, 1).unwrap());
    }

    #[test]
    fn subgroup_lattice_of_gl2_f3() {
        let full = ElementSet::full_gl2(3).unwrap();
        let subs = subgroup_lattice(&full).unwrap();
        // Orders must divide 48, the identity subgroup and the full group
        // both appear, and Lagrange-consistent counts hold.
        assert!(subs.iter().any(|s| s.len() == 1));
        assert!(subs.iter().any(|s| s.len() == 48));
        for s in &subs {
            assert_eq!(48 % s.len(), 0);
        }
        // 55 subgroups of GL_2(F_3), a classical count; the lattice search
        // must find them all.
        assert_eq!(subs.len(), 55);
    }

    #[test]
    fn average_experiment_is_reproducible() {
        let params = AverageParams {
            a_bound: 20,
            b_bound: 20,
            r: 1,
            x: 100,
            sample_size: 8,
            seed: 42,
        };
        let a = average_experiment(params).unwrap();
        let b = average_experiment(params).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.ratio, b.ratio);
    }

    #[test]
    fn average_experiment_x_too_small_rejected() {
        let params = AverageParams {
            a_bound: 5,
            b_bound: 5,
            r: 1,
            x: 2,
            sample_size: 1,
            seed: 0,
        };
        assert!(matches!(
            average_experiment(params),
            Err(LtError::BadParams(_))
        ));
    }

    #[test]
    fn average_experiment_pinned_single_curve() {
        // Seed 4 draws (1, 1) as the first non-singular pair in the box
        // |a|, |b| <= 2 (found by scanning seeds once; frozen here).
        let params = AverageParams {
            a_bound: 2,
            b_bound: 2,
            r: 3,
            x: 10,
            sample_size: 1,
            seed: PINNED_SEED_FOR_1_1,
        };
        let report = average_experiment(params).unwrap();
        // pi_{E(1,1),3}(10) = 1 (only p = 7).
        assert_eq!(report.mean, 1.0);
    }

    /// Seed that makes the sampler draw (a, b) = (1, 1) first; computed by
    /// the seed_hunt test below and frozen.
    const PINNED_SEED_FOR_1_1: u64 = 4;

    #[test]
    #[ignore = "one-off helper used to pin PINNED_SEED_FOR_1_1"]
    fn seed_hunt() {
        for seed in 0..50_000u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            loop {
                let a = rng.gen_range(-2i64..=2);
                let b = rng.gen_range(-2i64..=2);
                if 4 * a.pow(3) + 27 * b.pow(2) != 0 {
                    if (a, b) == (1, 1) {
                        panic!("seed {seed} pins (1,1)");
                    }
                    break;
                }
            }
        }
        panic!("no seed found");
    }
}
