use crate::arith::{invmod, mulmod, submod};

use super::cartan::{CartanKind, CartanSet, CartanSubgroup};
use super::{Level, MatGroup, MatGroupError, ModMatrix};

/// A subspace of the 4-dimensional trace-form space gl_2(F_l), stored as a
/// reduced row-echelon basis in coordinates with respect to the ordered basis
/// (I, E12, E21, diag(1,-1)). Echelonization makes equality of subspaces a
/// plain comparison of bases.
#[derive(Clone, PartialEq, Eq)]
pub struct LieSubspace {
    ell: u64,
    basis: Vec<[u64; 4]>,
}

impl std::fmt::Debug for LieSubspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LieSubspace(dim {} mod {}: {:?})",
            self.dim(),
            self.ell,
            self.basis
        )
    }
}

impl LieSubspace {
    pub fn zero(ell: u64) -> Self {
        LieSubspace {
            ell,
            basis: Vec::new(),
        }
    }

    pub fn full(ell: u64) -> Self {
        let mut s = Self::zero(ell);
        for i in 0..4 {
            let mut v = [0u64; 4];
            v[i] = 1;
            s.insert_coords(v);
        }
        s
    }

    /// The trace-zero subspace sl_2(F_l): everything with no I-component.
    pub fn sl2(ell: u64) -> Self {
        let mut s = Self::zero(ell);
        for i in 1..4 {
            let mut v = [0u64; 4];
            v[i] = 1;
            s.insert_coords(v);
        }
        s
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[[u64; 4]] {
        &self.basis
    }

    /// Coordinates of a matrix [a, b; c, d] in the (I, E12, E21, D) basis:
    /// ((a+d)/2, b, c, (a-d)/2).
    pub fn matrix_coords(ell: u64, e: [u64; 4]) -> [u64; 4] {
        let inv2 = invmod(2, ell).expect("odd l");
        let a = e[0] % ell;
        let b = e[1] % ell;
        let c = e[2] % ell;
        let d = e[3] % ell;
        [
            mulmod((a + d) % ell, inv2, ell),
            b,
            c,
            mulmod(submod(a, d, ell), inv2, ell),
        ]
    }

    pub fn coords_matrix(ell: u64, v: [u64; 4]) -> [u64; 4] {
        let [x, y, z, w] = v;
        [
            (x + w) % ell,
            y % ell,
            z % ell,
            submod(x % ell, w % ell, ell),
        ]
    }

    /// Inserts a matrix (entries mod l) into the span; returns true if the
    /// dimension grew.
    pub fn insert_matrix(&mut self, e: [u64; 4]) -> bool {
        self.insert_coords(Self::matrix_coords(self.ell, e))
    }

    pub fn insert_coords(&mut self, mut v: [u64; 4]) -> bool {
        let ell = self.ell;
        for x in &mut v {
            *x %= ell;
        }
        for row in &self.basis {
            let pivot = row.iter().position(|&x| x != 0).unwrap();
            if v[pivot] != 0 {
                let c = v[pivot];
                for i in 0..4 {
                    v[i] = submod(v[i], mulmod(c, row[i], ell), ell);
                }
            }
        }
        if v == [0, 0, 0, 0] {
            return false;
        }
        let pivot = v.iter().position(|&x| x != 0).unwrap();
        let inv = invmod(v[pivot], ell).unwrap();
        for x in &mut v {
            *x = mulmod(*x, inv, ell);
        }
        // Clear the new pivot column from existing rows, then order rows by
        // pivot for a canonical reduced echelon form.
        for row in &mut self.basis {
            if row[pivot] != 0 {
                let c = row[pivot];
                for i in 0..4 {
                    row[i] = submod(row[i], mulmod(c, v[i], ell), ell);
                }
            }
        }
        self.basis.push(v);
        self.basis
            .sort_by_key(|r| r.iter().position(|&x| x != 0).unwrap());
        true
    }

    pub fn contains_coords(&self, mut v: [u64; 4]) -> bool {
        let ell = self.ell;
        for x in &mut v {
            *x %= ell;
        }
        for row in &self.basis {
            let pivot = row.iter().position(|&x| x != 0).unwrap();
            if v[pivot] != 0 {
                let c = v[pivot];
                for i in 0..4 {
                    v[i] = submod(v[i], mulmod(c, row[i], ell), ell);
                }
            }
        }
        v == [0, 0, 0, 0]
    }

    pub fn contains_matrix(&self, e: [u64; 4]) -> bool {
        self.contains_coords(Self::matrix_coords(self.ell, e))
    }

    pub fn contains_subspace(&self, other: &LieSubspace) -> bool {
        other.basis.iter().all(|&v| self.contains_coords(v))
    }

    /// Whether the trace functional is onto F_l on this space; tr = 2x in the
    /// chosen coordinates, so this holds iff some basis vector has x != 0.
    pub fn trace_is_onto(&self) -> bool {
        self.basis.iter().any(|v| v[0] != 0)
    }

    /// The intersection with the trace-zero subspace. In reduced echelon form
    /// at most one basis row carries the x pivot; the rest already lie in
    /// sl_2.
    pub fn intersect_sl2(&self) -> LieSubspace {
        let mut out = LieSubspace::zero(self.ell);
        for v in &self.basis {
            if v[0] == 0 {
                out.insert_coords(*v);
            }
        }
        out
    }

    /// Closure under the bracket [A, B] = AB - BA.
    pub fn is_bracket_closed(&self) -> bool {
        let ell = self.ell;
        for a in &self.basis {
            for b in &self.basis {
                let ma = Self::coords_matrix(ell, *a);
                let mb = Self::coords_matrix(ell, *b);
                if !self.contains_matrix(bracket(ell, ma, mb)) {
                    return false;
                }
            }
        }
        true
    }
}

pub(crate) fn bracket(ell: u64, a: [u64; 4], b: [u64; 4]) -> [u64; 4] {
    let mul = |x: [u64; 4], y: [u64; 4]| -> [u64; 4] {
        [
            (mulmod(x[0], y[0], ell) + mulmod(x[1], y[2], ell)) % ell,
            (mulmod(x[0], y[1], ell) + mulmod(x[1], y[3], ell)) % ell,
            (mulmod(x[2], y[0], ell) + mulmod(x[3], y[2], ell)) % ell,
            (mulmod(x[2], y[1], ell) + mulmod(x[3], y[3], ell)) % ell,
        ]
    };
    let ab = mul(a, b);
    let ba = mul(b, a);
    [
        submod(ab[0], ba[0], ell),
        submod(ab[1], ba[1], ell),
        submod(ab[2], ba[2], ell),
        submod(ab[3], ba[3], ell),
    ]
}

/// The congruence filtration of a group at level l^n: for 1 <= i <= n-1, the
/// image g_i of {A in G : A = I mod l^i} under I + l^i B -> B mod l, and the
/// analogous s_i for the determinant-one part of G.
#[derive(Clone, Debug)]
pub struct FiltrationTable {
    pub level: Level,
    /// g_1 .. g_{n-1}
    pub g_spaces: Vec<LieSubspace>,
    /// s_1 .. s_{n-1}
    pub s_spaces: Vec<LieSubspace>,
}

impl FiltrationTable {
    pub fn g(&self, i: u32) -> &LieSubspace {
        &self.g_spaces[i as usize - 1]
    }

    pub fn s(&self, i: u32) -> &LieSubspace {
        &self.s_spaces[i as usize - 1]
    }
}

pub fn filtration(group: &MatGroup) -> Result<FiltrationTable, MatGroupError> {
    let level = group.level();
    if level.n() < 2 {
        return Err(MatGroupError::LevelTooLow);
    }
    let ell = level.ell();
    let layers = level.n() - 1;
    match group {
        MatGroup::Materialized { elements, .. } => {
            let mut g_spaces = vec![LieSubspace::zero(ell); layers as usize];
            let mut s_spaces = vec![LieSubspace::zero(ell); layers as usize];
            let modulus = level.modulus();
            for &key in elements {
                let m = ModMatrix::unpack(level, key);
                let e = m.entries();
                let is_sl = m.det() == 1;
                let off = [
                    submod(e[0], 1, modulus),
                    e[1],
                    e[2],
                    submod(e[3], 1, modulus),
                ];
                for i in 1..=layers {
                    let li = ell.pow(i);
                    if off.iter().all(|&x| x % li == 0) {
                        let b = [
                            off[0] / li % ell,
                            off[1] / li % ell,
                            off[2] / li % ell,
                            off[3] / li % ell,
                        ];
                        g_spaces[i as usize - 1].insert_matrix(b);
                        if is_sl {
                            s_spaces[i as usize - 1].insert_matrix(b);
                        }
                    } else {
                        break;
                    }
                }
            }
            Ok(FiltrationTable {
                level,
                g_spaces,
                s_spaces,
            })
        }
        MatGroup::BallPreimage { base, .. } => {
            // Below the base level the filtration agrees with the base; from
            // the base level up, the preimage contains the full congruence
            // ball and every layer is all of gl_2 (resp. sl_2).
            let k = base.level().n();
            let mut g_spaces = Vec::with_capacity(layers as usize);
            let mut s_spaces = Vec::with_capacity(layers as usize);
            if k >= 2 {
                let base_table = filtration(base)?;
                for i in 1..k {
                    g_spaces.push(base_table.g(i).clone());
                    s_spaces.push(base_table.s(i).clone());
                }
            }
            for _ in k..=layers {
                g_spaces.push(LieSubspace::full(ell));
                s_spaces.push(LieSubspace::sl2(ell));
            }
            Ok(FiltrationTable {
                level,
                g_spaces,
                s_spaces,
            })
        }
        MatGroup::CartanSub { cartan, set } => match set {
            CartanSet::Elements { .. } => {
                filtration(&group.materialize(super::DEFAULT_CLOSURE_CAP)?)
            }
            CartanSet::FullCartan | CartanSet::FullNormalizer => {
                // Elements of C congruent to I mod l^i form I + l^i R, so
                // every layer is the image of R mod l; coset elements have
                // trace 0 and are never congruent to I. The determinant-one
                // part contributes the trace-zero line of R.
                let mut g_layer = LieSubspace::zero(ell);
                g_layer.insert_matrix([1, 0, 0, 1]);
                let beta = cartan_trace_zero_generator(cartan);
                g_layer.insert_matrix(beta);
                let mut s_layer = LieSubspace::zero(ell);
                s_layer.insert_matrix(beta);
                Ok(FiltrationTable {
                    level,
                    g_spaces: vec![g_layer; layers as usize],
                    s_spaces: vec![s_layer; layers as usize],
                })
            }
        },
    }
}

/// The image mod l of the trace-zero generator of the Cartan's algebra.
fn cartan_trace_zero_generator(cartan: &CartanSubgroup) -> [u64; 4] {
    let m = cartan.level().modulus();
    let gen = match cartan.kind() {
        CartanKind::Split => cartan.element(1, m - 1, false),
        CartanKind::NonSplit => {
            // 0*I + 1*omega is not invertible as written only when epsilon is
            // not a unit, which cannot happen; use params (0, 1).
            cartan.element(0, 1, false)
        }
    };
    gen.reduce(1).entries()
}

/// The decomposition gl_2(F_l) = V1 + V2 + V3 attached to a Cartan at level
/// (l, 1): V1 = scalars, V2 = the trace-zero line of the Cartan's algebra,
/// V3 a complementary plane stable under conjugation by C^+.
#[derive(Clone, Debug)]
pub struct RepDecomposition {
    pub v1: LieSubspace,
    pub v2: LieSubspace,
    pub v3: LieSubspace,
}

pub fn rep_decomposition(cartan: &CartanSubgroup) -> Result<RepDecomposition, MatGroupError> {
    let level = cartan.level();
    if level.n() != 1 {
        return Err(MatGroupError::PreconditionFailed(
            "representation decomposition is defined at level (l, 1)".into(),
        ));
    }
    if level.ell() < 5 {
        return Err(MatGroupError::PreconditionFailed(
            "representation decomposition needs l >= 5".into(),
        ));
    }
    let ell = level.ell();
    let g = cartan.conjugator();
    let g_inv = g.inv().expect("unit det");
    let conj = |e: [i64; 4]| -> [u64; 4] {
        ModMatrix::from_signed(level, e)
            .conjugate_by(&g, &g_inv)
            .entries()
    };
    let mut v1 = LieSubspace::zero(ell);
    v1.insert_matrix([1, 0, 0, 1]);
    let mut v2 = LieSubspace::zero(ell);
    let mut v3 = LieSubspace::zero(ell);
    match cartan.kind() {
        CartanKind::Split => {
            v2.insert_matrix(conj([1, 0, 0, -1]));
            v3.insert_matrix(conj([0, 1, 0, 0]));
            v3.insert_matrix(conj([0, 0, 1, 0]));
        }
        CartanKind::NonSplit => {
            let eps = cartan.epsilon().unwrap() as i64;
            v2.insert_matrix(conj([0, eps, 1, 0]));
            v3.insert_matrix(conj([1, 0, 0, -1]));
            v3.insert_matrix(conj([0, eps, -1, 0]));
        }
    }
    Ok(RepDecomposition { v1, v2, v3 })
}

/// span{ g B g^{-1} - B : g in Gbar, B in gl_2(F_l) } for a materialized
/// group at level (l, 1). Every spanning element has trace zero, so the
/// result sits inside sl_2 and the span is complete once it reaches
/// dimension 3.
pub fn twisted_commutator_span(gbar: &MatGroup) -> Result<LieSubspace, MatGroupError> {
    let level = gbar.level();
    if level.n() != 1 {
        return Err(MatGroupError::PreconditionFailed(
            "twisted commutator span is defined at level (l, 1)".into(),
        ));
    }
    let ell = level.ell();
    let basis = [
        ModMatrix::new(level, [1, 0, 0, 1]),
        ModMatrix::new(level, [0, 1, 0, 0]),
        ModMatrix::new(level, [0, 0, 1, 0]),
        ModMatrix::from_signed(level, [1, 0, 0, -1]),
    ];
    let mut span = LieSubspace::zero(ell);
    for g in gbar.elements() {
        let g_inv = g.inv().ok_or(MatGroupError::NonUnitDet)?;
        for b in &basis {
            let t = b.conjugate_by(&g, &g_inv).sub(b);
            span.insert_matrix(t.entries());
        }
        if span.dim() == 3 {
            break;
        }
    }
    Ok(span)
}

#[cfg(test)]
mod tests {
    use super::super::cartan::cartan_standard;
    use super::super::group::{ball_preimage, group_closure};
    use super::*;

    fn lv(ell: u64, n: u32) -> Level {
        Level::new(ell, n).unwrap()
    }

    #[test]
    fn echelon_is_canonical() {
        let mut a = LieSubspace::zero(5);
        a.insert_matrix([1, 2, 0, 4]);
        a.insert_matrix([0, 1, 1, 0]);
        let mut b = LieSubspace::zero(5);
        // Same span, different spanning set.
        b.insert_matrix([1, 3, 1, 4]);
        b.insert_matrix([2, 4, 0, 3]);
        assert_eq!(a, b);
        assert_eq!(a.dim(), 2);
    }

    #[test]
    fn sl2_is_bracket_closed_but_planes_need_not_be() {
        assert!(LieSubspace::sl2(5).is_bracket_closed());
        assert!(LieSubspace::full(5).is_bracket_closed());
        let mut v3 = LieSubspace::zero(5);
        v3.insert_matrix([0, 1, 0, 0]);
        v3.insert_matrix([0, 0, 1, 0]);
        assert!(!v3.is_bracket_closed());
    }

    #[test]
    fn filtration_of_ball_preimage_of_identity() {
        let base = group_closure(&[ModMatrix::identity(lv(3, 1))], 4).unwrap();
        let pre = ball_preimage(base, 2).unwrap();
        let table = filtration(&pre).unwrap();
        assert_eq!(table.g(1).dim(), 4);
        assert_eq!(*table.g(1), LieSubspace::full(3));
        // Cross-check against the materialized group.
        let mat = pre.materialize(1 << 10).unwrap();
        let table2 = filtration(&mat).unwrap();
        assert_eq!(*table2.g(1), *table.g(1));
        assert_eq!(*table2.s(1), LieSubspace::sl2(3));
    }

    #[test]
    fn filtration_scalar_group_mod9() {
        let l = lv(3, 2);
        let g = group_closure(&[ModMatrix::new(l, [4, 0, 0, 4])], 1 << 8).unwrap();
        // <4I> mod 9: contains 4I, 7I, I; elements = I mod 3 are I+3(tI).
        let table = filtration(&g).unwrap();
        assert_eq!(table.g(1).dim(), 1);
        assert!(table.g(1).contains_matrix([1, 0, 0, 1]));
    }

    #[test]
    fn filtration_two_nilpotents_mod9() {
        let l = lv(3, 2);
        let g = group_closure(
            &[
                ModMatrix::new(l, [1, 3, 0, 1]),
                ModMatrix::new(l, [1, 0, 3, 1]),
            ],
            1 << 10,
        )
        .unwrap();
        let table = filtration(&g).unwrap();
        let mut want = LieSubspace::zero(3);
        want.insert_matrix([0, 1, 0, 0]);
        want.insert_matrix([0, 0, 1, 0]);
        assert_eq!(table.g(1).dim(), 2);
        assert!(table.g(1).contains_subspace(&want) && want.contains_subspace(table.g(1)));
    }

    #[test]
    fn rep_decomposition_split_mod5() {
        let c = cartan_standard(lv(5, 1), CartanKind::Split, None).unwrap();
        let d = rep_decomposition(&c).unwrap();
        assert_eq!((d.v1.dim(), d.v2.dim(), d.v3.dim()), (1, 1, 2));
        assert!(d.v2.contains_matrix([1, 0, 0, 4]));
        assert!(d.v3.contains_matrix([0, 1, 0, 0]));
        assert!(d.v3.contains_matrix([0, 0, 1, 0]));
        // Direct sum: inserting all bases reaches dimension 4.
        let mut all = LieSubspace::zero(5);
        for s in [&d.v1, &d.v2, &d.v3] {
            for v in s.basis() {
                all.insert_coords(*v);
            }
        }
        assert_eq!(all.dim(), 4);
        assert!(!d.v3.is_bracket_closed());
    }

    #[test]
    fn rep_decomposition_nonsplit_mod5() {
        let c = cartan_standard(lv(5, 1), CartanKind::NonSplit, Some(2)).unwrap();
        let d = rep_decomposition(&c).unwrap();
        assert_eq!((d.v1.dim(), d.v2.dim(), d.v3.dim()), (1, 1, 2));
        assert!(d.v3.contains_matrix([1, 0, 0, 4]));
        // (0, eps; -1, 0) with eps = 2: [0, 2, 4, 0] mod 5.
        assert!(d.v3.contains_matrix([0, 2, 4, 0]));
        assert!(!d.v3.is_bracket_closed());
    }

    #[test]
    fn twisted_span_trivial_cases() {
        let l = lv(5, 1);
        let trivial = group_closure(&[ModMatrix::identity(l)], 4).unwrap();
        assert_eq!(twisted_commutator_span(&trivial).unwrap().dim(), 0);
        let scalars = group_closure(&[ModMatrix::scalar(l, 2)], 16).unwrap();
        assert_eq!(twisted_commutator_span(&scalars).unwrap().dim(), 0);
    }

    #[test]
    fn twisted_span_of_nonsplit_normalizer_is_sl2() {
        let l = lv(5, 1);
        let c = cartan_standard(l, CartanKind::NonSplit, Some(2)).unwrap();
        let full = MatGroup::CartanSub {
            cartan: c,
            set: CartanSet::FullNormalizer,
        };
        let g = group_closure(&full.generators(), 1 << 10).unwrap();
        assert_eq!(g.order(), 48);
        let span = twisted_commutator_span(&g).unwrap();
        assert_eq!(span.dim(), 3);
        assert_eq!(span, LieSubspace::sl2(5));
    }
}
