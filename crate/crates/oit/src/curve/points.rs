//! Point counting on y^2 = x^3 + ax + b over F_p: naive enumeration for
//! small p, and baby-step/giant-step group-order resolution in the Hasse
//! interval for larger p, with the quadratic twist used to disambiguate when
//! a point order admits several multiples in the interval.

use std::collections::HashMap;
use std::collections::HashSet;

use crate::arith::{addmod, invmod, isqrt, jacobi, mulmod, sqrt_mod_prime, submod};

use super::factor::factor_u64;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
enum Point {
    Inf,
    Aff(u64, u64),
}

#[derive(Clone, Copy)]
struct FpCurve {
    p: u64,
    a: u64,
    b: u64,
}

impl FpCurve {
    fn neg(&self, q: Point) -> Point {
        match q {
            Point::Inf => Point::Inf,
            Point::Aff(x, y) => Point::Aff(x, if y == 0 { 0 } else { self.p - y }),
        }
    }

    fn add(&self, q: Point, r: Point) -> Point {
        let p = self.p;
        match (q, r) {
            (Point::Inf, s) | (s, Point::Inf) => s,
            (Point::Aff(x1, y1), Point::Aff(x2, y2)) => {
                if x1 == x2 {
                    if addmod(y1, y2, p) == 0 {
                        return Point::Inf;
                    }
                    // doubling
                    let num = addmod(mulmod(3, mulmod(x1, x1, p), p), self.a, p);
                    let den = invmod(mulmod(2, y1, p), p).expect("2y is a unit");
                    let s = mulmod(num, den, p);
                    let x3 = submod(mulmod(s, s, p), addmod(x1, x2, p), p);
                    let y3 = submod(mulmod(s, submod(x1, x3, p), p), y1, p);
                    Point::Aff(x3, y3)
                } else {
                    let s = mulmod(
                        submod(y2, y1, p),
                        invmod(submod(x2, x1, p), p).expect("x2 - x1 is a unit"),
                        p,
                    );
                    let x3 = submod(submod(mulmod(s, s, p), x1, p), x2, p);
                    let y3 = submod(mulmod(s, submod(x1, x3, p), p), y1, p);
                    Point::Aff(x3, y3)
                }
            }
        }
    }

    fn mul(&self, mut k: u64, q: Point) -> Point {
        let mut acc = Point::Inf;
        let mut base = q;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// The point with the given x, if x^3 + ax + b is a square; the root with
    /// even y is chosen for determinism.
    fn lift_x(&self, x: u64) -> Option<Point> {
        let p = self.p;
        let fx = addmod(
            mulmod(x, mulmod(x, x, p), p),
            addmod(mulmod(self.a, x, p), self.b, p),
            p,
        );
        let y = sqrt_mod_prime(fx, p)?;
        let y = if y % 2 == 0 { y } else { p - y };
        Some(Point::Aff(x, y))
    }
}

/// Exact number of points via a residue table; O(p) time and memory.
pub fn count_points_naive(p: u64, a: u64, b: u64) -> u64 {
    debug_assert!(p % 2 == 1);
    let mut is_square = vec![false; p as usize];
    for y in 0..p {
        is_square[mulmod(y, y, p) as usize] = true;
    }
    let mut count = 1u64; // point at infinity
    for x in 0..p {
        let fx = addmod(
            mulmod(x, mulmod(x, x, p), p),
            addmod(mulmod(a, x, p), b, p),
            p,
        );
        if fx == 0 {
            count += 1;
        } else if is_square[fx as usize] {
            count += 2;
        }
    }
    count
}

/// All m in the Hasse interval [p+1-w, p+1+w] with m * q = O.
fn annihilators_in_interval(curve: &FpCurve, q: Point, w: u64) -> Vec<u64> {
    let p = curve.p;
    if q == Point::Inf {
        return ((p + 1 - w)..=(p + 1 + w)).collect();
    }
    // Solve s*q = -(p+1)q for s in [-w, w], writing s = k(2m'+1) + j.
    let target = curve.neg(curve.mul(p + 1, q));
    let stride = isqrt(2 * w) + 1;
    let mut baby: HashMap<u64, Vec<(u64, u64)>> = HashMap::new(); // x -> (j, y)
    let mut jq = Point::Inf;
    for j in 0..=stride {
        if let Point::Aff(x, y) = jq {
            baby.entry(x).or_default().push((j, y));
        }
        jq = curve.add(jq, q);
    }
    let span = 2 * stride + 1;
    let k_max = (w + stride) / span + 1;
    let step = curve.mul(span, q);
    let mut solutions = Vec::new();
    let mut record = |s: i64| {
        if s.unsigned_abs() <= w {
            let m = (p + 1) as i64 + s;
            solutions.push(m as u64);
        }
    };
    // walk k from -k_max to k_max incrementally
    let mut t = curve.add(target, curve.mul(k_max * span, q)); // target - (-k_max)*span*q
    for idx in 0..=(2 * k_max) {
        let k = idx as i64 - k_max as i64;
        match t {
            Point::Inf => record(k * span as i64),
            Point::Aff(x, y) => {
                if let Some(hits) = baby.get(&x) {
                    for &(j, yj) in hits {
                        if y == yj {
                            record(k * span as i64 + j as i64);
                        }
                        if y == (if yj == 0 { 0 } else { p - yj }) && j != 0 {
                            record(k * span as i64 - j as i64);
                        }
                    }
                }
            }
        }
        t = curve.add(t, curve.neg(step));
    }
    solutions.sort_unstable();
    solutions.dedup();
    debug_assert!(
        !solutions.is_empty(),
        "Hasse interval must contain a multiple"
    );
    solutions
}

/// Exact order of a point, given the annihilator multiples found in the
/// Hasse interval.
fn point_order(curve: &FpCurve, q: Point, hits: &[u64]) -> u64 {
    let mut m = hits[0];
    for window in hits.windows(2) {
        m = crate::arith::gcd(m, window[1] - window[0]);
    }
    for (p, _) in factor_u64(m) {
        while m.is_multiple_of(p) && curve.mul(m / p, q) == Point::Inf {
            m /= p;
        }
    }
    m
}

fn lcm(a: u64, b: u64) -> u64 {
    a / crate::arith::gcd(a, b) * b
}

/// Group order |E(F_p)| by baby-step/giant-step order resolution; correct for
/// every odd prime of good reduction. Point orders from the curve and its
/// quadratic twist are combined until exactly one candidate survives in the
/// Hasse interval; tiny fields where ambiguity can persist fall back to a
/// closure over all sampled points, which then is the whole group.
pub fn group_order_bsgs(p: u64, a: u64, b: u64) -> u64 {
    debug_assert!(p % 2 == 1 && p >= 3);
    let w = isqrt(4 * p);
    let lo = p + 1 - w;
    let hi = p + 1 + w;
    let curve = FpCurve { p, a, b };
    // Quadratic twist by the smallest non-residue d: y^2 = x^3 + a d^2 x + b d^3.
    let d = (2..p)
        .find(|&d| jacobi(d as i64, p) == -1)
        .expect("non-residue exists");
    let twist = FpCurve {
        p,
        a: mulmod(a, mulmod(d, d, p), p),
        b: mulmod(b, mulmod(d, mulmod(d, d, p), p), p),
    };

    let mut l_curve = 1u64; // divides N
    let mut l_twist = 1u64; // divides N' = 2p + 2 - N
    let mut curve_points: Vec<Point> = Vec::new();
    let mut x_curve = 0u64;
    let mut x_twist = 0u64;

    let candidates = |lc: u64, lt: u64| -> Vec<u64> {
        let start = lo.div_ceil(lc) * lc;
        (start..=hi)
            .step_by(lc as usize)
            .filter(|n| (2 * p + 2 - n).is_multiple_of(lt))
            .collect()
    };

    loop {
        let exhausted = x_curve >= p && x_twist >= p;
        for (is_twist, x_counter) in [(false, &mut x_curve), (true, &mut x_twist)] {
            let c = if is_twist { &twist } else { &curve };
            let q = loop {
                if *x_counter >= p {
                    break None;
                }
                let x = *x_counter;
                *x_counter += 1;
                if let Some(pt) = c.lift_x(x) {
                    break Some(pt);
                }
            };
            let Some(q) = q else { continue };
            if !is_twist {
                curve_points.push(q);
            }
            let hits = annihilators_in_interval(c, q, w);
            let ord = point_order(c, q, &hits);
            if is_twist {
                l_twist = lcm(l_twist, ord);
            } else {
                l_curve = lcm(l_curve, ord);
            }
            let cands = candidates(l_curve, l_twist);
            if cands.len() == 1 {
                return cands[0];
            }
        }
        if exhausted {
            // Every x has been scanned, so the closure of the sampled points
            // is the full group.
            let mut set: HashSet<Point> = HashSet::new();
            set.insert(Point::Inf);
            let mut queue: Vec<Point> = vec![Point::Inf];
            while let Some(s) = queue.pop() {
                for &g in curve_points.iter() {
                    for t in [curve.add(s, g), curve.add(s, curve.neg(g))] {
                        if set.insert(t) {
                            queue.push(t);
                        }
                    }
                }
            }
            return set.len() as u64;
        }
    }
}

/// Trace of Frobenius via the BSGS group order.
pub fn ap_bsgs(p: u64, a: u64, b: u64) -> i64 {
    (p as i64) + 1 - group_order_bsgs(p, a, b) as i64
}

/// Trace of Frobenius via naive counting.
pub fn ap_naive(p: u64, a: u64, b: u64) -> i64 {
    (p as i64) + 1 - count_points_naive(p, a, b) as i64
}
