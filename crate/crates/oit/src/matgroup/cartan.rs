use std::collections::HashSet;

use crate::arith::{invmod, jacobi, mulmod, sqrt_mod_prime_power, submod};

use super::group::KeySet;
use super::{Level, MatGroup, MatGroupError, ModMatrix};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CartanKind {
    Split,
    NonSplit,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CartanPosition {
    InCartan,
    InNormalizerOnly,
    Outside,
}

/// A Cartan subgroup C(l^n) of GL_2(Z/l^n): a conjugate g C_std g^{-1} of one
/// of the two standard forms. The split standard form is the diagonal torus;
/// the non-split one is {(a, eps*b; b, a)} for a fixed non-square unit eps.
#[derive(Clone)]
pub struct CartanSubgroup {
    level: Level,
    kind: CartanKind,
    epsilon: u64,
    conjugator: ModMatrix,
    conjugator_inv: ModMatrix,
}

impl std::fmt::Debug for CartanSubgroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            CartanKind::Split => write!(
                f,
                "split Cartan at {:?} via {:?}",
                self.level, self.conjugator
            ),
            CartanKind::NonSplit => write!(
                f,
                "non-split Cartan (eps={}) at {:?} via {:?}",
                self.epsilon, self.level, self.conjugator
            ),
        }
    }
}

impl CartanSubgroup {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn kind(&self) -> CartanKind {
        self.kind
    }

    /// The non-square unit parametrizing a non-split Cartan.
    pub fn epsilon(&self) -> Option<u64> {
        match self.kind {
            CartanKind::Split => None,
            CartanKind::NonSplit => Some(self.epsilon),
        }
    }

    pub fn conjugator(&self) -> ModMatrix {
        self.conjugator
    }

    /// |C(l^n)|: (l-1)^2 l^{2(n-1)} split, (l^2-1) l^{2(n-1)} non-split.
    pub fn order(&self) -> u128 {
        let l = self.level.ell() as u128;
        let tail = l.pow(2 * (self.level.n() - 1));
        match self.kind {
            CartanKind::Split => (l - 1) * (l - 1) * tail,
            CartanKind::NonSplit => (l * l - 1) * tail,
        }
    }

    /// |C^+(l^n)| = 2 |C(l^n)|.
    pub fn normalizer_order(&self) -> u128 {
        2 * self.order()
    }

    fn std_param(&self, a: u64, b: u64) -> ModMatrix {
        match self.kind {
            CartanKind::Split => ModMatrix::new(self.level, [a, 0, 0, b]),
            CartanKind::NonSplit => {
                let m = self.level.modulus();
                ModMatrix::new(self.level, [a, mulmod(self.epsilon, b, m), b, a])
            }
        }
    }

    fn std_coset_rep(&self) -> ModMatrix {
        match self.kind {
            CartanKind::Split => ModMatrix::new(self.level, [0, 1, 1, 0]),
            CartanKind::NonSplit => ModMatrix::from_signed(self.level, [1, 0, 0, -1]),
        }
    }

    /// The element g (w^coset phi(a, b)) g^{-1}.
    pub fn element(&self, a: u64, b: u64, coset: bool) -> ModMatrix {
        let mut m = self.std_param(a, b);
        if coset {
            m = self.std_coset_rep().mul(&m);
        }
        m.conjugate_by(&self.conjugator, &self.conjugator_inv)
    }

    /// A representative of the non-identity coset of C^+/C.
    pub fn coset_rep(&self) -> ModMatrix {
        self.std_coset_rep()
            .conjugate_by(&self.conjugator, &self.conjugator_inv)
    }

    /// Recovers the parameters of a matrix in C^+, if it lies there.
    pub fn params_of(&self, a: &ModMatrix) -> Option<(u64, u64, bool)> {
        if a.level() != self.level || !a.has_unit_det() {
            return None;
        }
        let b = a.conjugate_by(&self.conjugator_inv, &self.conjugator);
        let e = b.entries();
        let m = self.level.modulus();
        match self.kind {
            CartanKind::Split => {
                if e[1] == 0 && e[2] == 0 {
                    Some((e[0], e[3], false))
                } else if e[0] == 0 && e[3] == 0 {
                    // w * diag(a, b) = [0, b; a, 0]
                    Some((e[2], e[1], true))
                } else {
                    None
                }
            }
            CartanKind::NonSplit => {
                if e[0] == e[3] && e[1] == mulmod(self.epsilon, e[2], m) {
                    Some((e[0], e[2], false))
                } else if e[3] == submod(0, e[0], m)
                    && e[1] == submod(0, mulmod(self.epsilon, e[2], m), m)
                {
                    // w * (a, eps b; b, a) = [a, eps b; -b, -a]
                    Some((e[0], submod(0, e[2], m), true))
                } else {
                    None
                }
            }
        }
    }

    /// Reduction of the Cartan datum to level l^k.
    pub fn reduce(&self, k: u32) -> CartanSubgroup {
        CartanSubgroup {
            level: self.level.reduce(k),
            kind: self.kind,
            epsilon: self.epsilon % self.level.ell().pow(k),
            conjugator: self.conjugator.reduce(k),
            conjugator_inv: self.conjugator_inv.reduce(k),
        }
    }

    /// Iterates over all elements of C (and of the w-coset when
    /// `with_normalizer` is set). Intended for small levels.
    pub fn for_each_element<F: FnMut(ModMatrix)>(&self, with_normalizer: bool, mut f: F) {
        let m = self.level.modulus();
        let ell = self.level.ell();
        for a in 0..m {
            for b in 0..m {
                let valid = match self.kind {
                    CartanKind::Split => a % ell != 0 && b % ell != 0,
                    CartanKind::NonSplit => a % ell != 0 || b % ell != 0,
                };
                if !valid {
                    continue;
                }
                f(self.element(a, b, false));
                if with_normalizer {
                    f(self.element(a, b, true));
                }
            }
        }
    }

    /// Canonical signature of the underlying 2-dimensional algebra, used to
    /// deduplicate Cartans found through different witnesses.
    pub(crate) fn algebra_key(&self) -> (u64, u64, u64) {
        let beta = match self.kind {
            CartanKind::Split => ModMatrix::from_signed(self.level, [1, 0, 0, -1])
                .conjugate_by(&self.conjugator, &self.conjugator_inv),
            CartanKind::NonSplit => self
                .std_param(0, 1)
                .conjugate_by(&self.conjugator, &self.conjugator_inv),
        };
        trace_zero_key(&beta).expect("Cartan generator has a unit entry")
    }
}

/// Canonical form of a trace-zero matrix up to unit scaling: scale so the
/// first unit entry (in order a, b, c) becomes 1.
fn trace_zero_key(beta: &ModMatrix) -> Option<(u64, u64, u64)> {
    let level = beta.level();
    let m = level.modulus();
    let e = beta.entries();
    debug_assert_eq!(e[3], submod(0, e[0], m));
    let lead = [e[0], e[1], e[2]].into_iter().find(|&x| level.is_unit(x))?;
    let inv = invmod(lead, m)?;
    Some((
        mulmod(e[0], inv, m),
        mulmod(e[1], inv, m),
        mulmod(e[2], inv, m),
    ))
}

/// The standard split or non-split Cartan subgroup at the given level, with
/// the identity conjugator. For the non-split kind, `epsilon` defaults to the
/// smallest non-square unit when not given.
pub fn cartan_standard(
    level: Level,
    kind: CartanKind,
    epsilon: Option<u64>,
) -> Result<CartanSubgroup, MatGroupError> {
    let id = ModMatrix::identity(level);
    let epsilon = match kind {
        CartanKind::Split => 0,
        CartanKind::NonSplit => match epsilon {
            Some(e) => {
                if e % level.ell() == 0 || jacobi((e % level.ell()) as i64, level.ell()) != -1 {
                    return Err(MatGroupError::BadEpsilon);
                }
                e % level.modulus()
            }
            None => (2..level.ell())
                .find(|&e| jacobi(e as i64, level.ell()) == -1)
                .expect("odd prime has a non-square unit"),
        },
    };
    Ok(CartanSubgroup {
        level,
        kind,
        epsilon,
        conjugator: id,
        conjugator_inv: id,
    })
}

/// The unique Cartan subgroup containing a regular semisimple `alpha`,
/// realized as its full centralizer in GL_2(Z/l^n). Split iff tr^2 - 4 det is
/// a square modulo l.
pub fn cartan_centralizer(alpha: &ModMatrix) -> Result<CartanSubgroup, MatGroupError> {
    let level = alpha.level();
    let m = level.modulus();
    let ell = level.ell();
    let disc = alpha.disc();
    if !level.is_unit(disc) {
        return Err(MatGroupError::NotRegularSemisimple);
    }
    let inv2 = invmod(2, m).expect("2 is a unit for odd l");
    if jacobi((disc % ell) as i64, ell) == 1 {
        // Split: diagonalize. The characteristic polynomial has two unit-
        // distance roots, Hensel-lifted from the residue field.
        let sq = sqrt_mod_prime_power(disc % m, ell, level.n()).expect("square disc");
        let tr = alpha.trace();
        let mut r1 = mulmod(tr + sq, inv2, m);
        let mut r2 = mulmod(submod(tr, sq, m), inv2, m);
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        let id = ModMatrix::identity(level);
        let m1 = alpha.sub(&id.scale(r2)); // columns span the r1 eigenspace
        let m2 = alpha.sub(&id.scale(r1));
        let col = |mm: &ModMatrix| -> [u64; 2] {
            let e = mm.entries();
            if level.is_unit(e[0]) || level.is_unit(e[2]) {
                [e[0], e[2]]
            } else {
                [e[1], e[3]]
            }
        };
        let v1 = col(&m1);
        let v2 = col(&m2);
        let g = ModMatrix::new(level, [v1[0], v2[0], v1[1], v2[1]]);
        let g_inv = g
            .inv()
            .expect("eigenvectors of distinct eigenvalues are independent");
        debug_assert_eq!(
            alpha.conjugate_by(&g_inv, &g).entries(),
            [r1, 0, 0, r2],
            "conjugation must diagonalize alpha"
        );
        Ok(CartanSubgroup {
            level,
            kind: CartanKind::Split,
            epsilon: 0,
            conjugator: g,
            conjugator_inv: g_inv,
        })
    } else {
        // Non-split: beta = alpha - (tr/2) I satisfies beta^2 = (disc/4) I
        // with disc/4 a non-square unit, and [e1, beta e1] conjugates the
        // standard generator onto beta.
        let inv4 = mulmod(inv2, inv2, m);
        let epsilon = mulmod(disc, inv4, m);
        let half_tr = mulmod(alpha.trace(), inv2, m);
        let beta = alpha.sub(&ModMatrix::scalar(level, half_tr));
        let be = beta.entries();
        let g = ModMatrix::new(level, [1, be[0], 0, be[2]]);
        let g_inv = g
            .inv()
            .expect("beta is non-split so its lower-left entry is a unit");
        debug_assert_eq!(beta.conjugate_by(&g_inv, &g).entries(), [0, epsilon, 1, 0]);
        Ok(CartanSubgroup {
            level,
            kind: CartanKind::NonSplit,
            epsilon,
            conjugator: g,
            conjugator_inv: g_inv,
        })
    }
}

/// Decides membership of `a` in C, in C^+ - C, or outside C^+, algebraically
/// from the conjugated standard form.
pub fn cartan_position(cartan: &CartanSubgroup, a: &ModMatrix) -> CartanPosition {
    match cartan.params_of(a) {
        Some((_, _, false)) => CartanPosition::InCartan,
        Some((_, _, true)) => CartanPosition::InNormalizerOnly,
        None => CartanPosition::Outside,
    }
}

fn group_inside_normalizer(cartan: &CartanSubgroup, group: &MatGroup) -> bool {
    match group {
        MatGroup::Materialized {
            level, elements, ..
        } => elements
            .iter()
            .all(|&k| cartan.params_of(&ModMatrix::unpack(*level, k)).is_some()),
        _ => group
            .elements()
            .iter()
            .all(|m| cartan.params_of(m).is_some()),
    }
}

fn sorted_elements(level: Level, elements: &KeySet) -> Vec<ModMatrix> {
    let mut keys: Vec<u64> = elements.iter().copied().collect();
    keys.sort_unstable();
    keys.into_iter()
        .map(|k| ModMatrix::unpack(level, k))
        .collect()
}

/// All Cartan subgroups of GL_2(F_l), one per underlying quadratic algebra.
pub(crate) fn enumerate_all_cartans(level: Level) -> Vec<CartanSubgroup> {
    assert_eq!(level.n(), 1);
    let m = level.modulus();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let x = ModMatrix::new(level, [a, b, c, d]);
                    if !x.has_unit_det() || !x.is_regular_semisimple() {
                        continue;
                    }
                    let cartan = cartan_centralizer(&x).expect("regular semisimple");
                    if seen.insert(cartan.algebra_key()) {
                        out.push(cartan);
                    }
                }
            }
        }
    }
    out
}

const WITNESS_CANDIDATE_CAP: usize = 1 << 16;

/// A Cartan whose normalizer provably contains the group, together with the
/// regular semisimple witness whose centralizer produced it (absent for the
/// all-scalar and exhaustive-search paths).
#[derive(Clone, Debug)]
pub struct CartanWitness {
    pub cartan: CartanSubgroup,
    pub witness: Option<ModMatrix>,
}

/// Searches for a Cartan subgroup whose normalizer contains G.
///
/// Strategy: every regular semisimple element of G determines a unique
/// Cartan (its centralizer); those are tried as candidates. At level (l, 1)
/// this is complete: if G lies in some C^+ then either G meets the Cartan in
/// a non-scalar (hence regular) element whose centralizer is that Cartan, or
/// G consists of scalars and one involution coset, in which case the
/// centralizer of any coset element already contains G. For l <= 7 an
/// exhaustive sweep over all Cartans confirms negative answers. At level
/// n >= 2 a failed witness search is not conclusive and is reported as such.
pub fn find_cartan_normalizer(group: &MatGroup) -> Result<Option<CartanWitness>, MatGroupError> {
    let level = group.level();
    match group {
        MatGroup::CartanSub { cartan, .. } => {
            return Ok(Some(CartanWitness {
                cartan: cartan.clone(),
                witness: None,
            }))
        }
        MatGroup::BallPreimage { base, .. } => {
            if base.level().n() < level.n() {
                // Contains a full congruence ball, whose filtration layer has
                // dimension 4; a Cartan normalizer's layers have dimension
                // at most 2.
                return Ok(None);
            }
        }
        MatGroup::Materialized { .. } => {}
    }
    let materialized;
    let group = match group {
        MatGroup::Materialized { .. } => group,
        _ => {
            materialized = group.materialize(super::DEFAULT_CLOSURE_CAP)?;
            &materialized
        }
    };
    let (elements, _) = match group {
        MatGroup::Materialized {
            elements,
            generators,
            ..
        } => (elements, generators),
        _ => unreachable!(),
    };

    // Order precheck: nothing bigger than a normalizer fits in one.
    let max_normalizer = {
        let l = level.ell() as u128;
        2 * (l * l - 1) * l.pow(2 * (level.n() - 1))
    };
    if elements.len() as u128 > max_normalizer {
        return Ok(None);
    }

    let elems = sorted_elements(level, elements);
    if elems.iter().all(|m| m.is_scalar()) {
        // Scalars lie in every Cartan.
        return Ok(Some(CartanWitness {
            cartan: cartan_standard(level, CartanKind::Split, None)?,
            witness: None,
        }));
    }

    let mut tried = HashSet::new();
    let mut had_witness = false;
    for alpha in &elems {
        if !alpha.is_regular_semisimple() {
            continue;
        }
        had_witness = true;
        let cartan = cartan_centralizer(alpha)?;
        if !tried.insert(cartan.algebra_key()) {
            continue;
        }
        if tried.len() > WITNESS_CANDIDATE_CAP {
            return Err(MatGroupError::Inconclusive(format!(
                "more than {WITNESS_CANDIDATE_CAP} candidate Cartans"
            )));
        }
        if group_inside_normalizer(&cartan, group) {
            return Ok(Some(CartanWitness {
                cartan,
                witness: Some(*alpha),
            }));
        }
    }

    if level.n() == 1 {
        if level.ell() <= 7 {
            // Exhaustive confirmation over every Cartan of GL_2(F_l).
            for cartan in enumerate_all_cartans(level) {
                if group_inside_normalizer(&cartan, group) {
                    return Ok(Some(CartanWitness {
                        cartan,
                        witness: None,
                    }));
                }
            }
        }
        return Ok(None);
    }
    if !had_witness {
        return Err(MatGroupError::Inconclusive(
            "group has no regular semisimple element and the level exceeds 1".into(),
        ));
    }
    Err(MatGroupError::Inconclusive(
        "all witness centralizers failed at level >= 2; containment undecided".into(),
    ))
}

/// Subgroups of a Cartan normalizer tracked in parameter space instead of as
/// matrices, so closures stay cheap at large levels.
#[derive(Clone, Debug)]
pub enum CartanSet {
    FullCartan,
    FullNormalizer,
    Elements {
        set: HashSet<(u64, u64, bool)>,
        generators: Vec<(u64, u64, bool)>,
    },
}

impl CartanSet {
    pub fn order(&self, cartan: &CartanSubgroup) -> u128 {
        match self {
            CartanSet::FullCartan => cartan.order(),
            CartanSet::FullNormalizer => cartan.normalizer_order(),
            CartanSet::Elements { set, .. } => set.len() as u128,
        }
    }

    pub fn contains(&self, cartan: &CartanSubgroup, a: &ModMatrix) -> bool {
        match (self, cartan.params_of(a)) {
            (_, None) => false,
            (CartanSet::FullCartan, Some((_, _, coset))) => !coset,
            (CartanSet::FullNormalizer, Some(_)) => true,
            (CartanSet::Elements { set, .. }, Some(p)) => set.contains(&p),
        }
    }

    pub fn generators(&self, cartan: &CartanSubgroup) -> Vec<ModMatrix> {
        match self {
            CartanSet::Elements { generators, .. } => generators
                .iter()
                .map(|&(a, b, c)| cartan.element(a, b, c))
                .collect(),
            CartanSet::FullCartan | CartanSet::FullNormalizer => {
                let mut gens = cartan_param_generators(cartan);
                if matches!(self, CartanSet::FullNormalizer) {
                    let id = param_identity(cartan);
                    gens.push((id.0, id.1, true));
                }
                gens.into_iter()
                    .map(|(a, b, c)| cartan.element(a, b, c))
                    .collect()
            }
        }
    }

    pub fn det_image_is_all_units(&self, cartan: &CartanSubgroup) -> bool {
        let level = cartan.level();
        match self {
            // The norm map of either quadratic algebra is onto the units.
            CartanSet::FullCartan | CartanSet::FullNormalizer => true,
            CartanSet::Elements { set, .. } => {
                let mut dets = HashSet::new();
                for &(a, b, coset) in set {
                    dets.insert(param_det(cartan, a, b, coset));
                    if dets.len() as u64 == level.unit_count() {
                        return true;
                    }
                }
                dets.len() as u64 == level.unit_count()
            }
        }
    }

    pub fn reduce(&self, cartan: &CartanSubgroup, k: u32) -> CartanSet {
        match self {
            CartanSet::FullCartan => CartanSet::FullCartan,
            CartanSet::FullNormalizer => CartanSet::FullNormalizer,
            CartanSet::Elements { set, generators } => {
                let m = cartan.level().ell().pow(k);
                CartanSet::Elements {
                    set: set.iter().map(|&(a, b, c)| (a % m, b % m, c)).collect(),
                    generators: generators
                        .iter()
                        .map(|&(a, b, c)| (a % m, b % m, c))
                        .collect(),
                }
            }
        }
    }

    pub fn for_each_element<F: FnMut(ModMatrix)>(&self, cartan: &CartanSubgroup, mut f: F) {
        match self {
            CartanSet::FullCartan => cartan.for_each_element(false, f),
            CartanSet::FullNormalizer => cartan.for_each_element(true, f),
            CartanSet::Elements { set, .. } => {
                for &(a, b, c) in set {
                    f(cartan.element(a, b, c));
                }
            }
        }
    }
}

/// Parameter-space product in C^+: w^c1 phi1 * w^c2 phi2
/// = w^(c1 xor c2) sigma^c2(phi1) phi2.
pub fn param_mul(
    cartan: &CartanSubgroup,
    x: (u64, u64, bool),
    y: (u64, u64, bool),
) -> (u64, u64, bool) {
    let m = cartan.level().modulus();
    let (a1, b1) = if y.2 {
        param_sigma(cartan, x.0, x.1)
    } else {
        (x.0, x.1)
    };
    let (a2, b2) = (y.0, y.1);
    let prod = match cartan.kind() {
        CartanKind::Split => (mulmod(a1, a2, m), mulmod(b1, b2, m)),
        CartanKind::NonSplit => (
            (mulmod(a1, a2, m) as u128 + mulmod(cartan.epsilon, mulmod(b1, b2, m), m) as u128)
                as u64
                % m,
            (mulmod(a1, b2, m) as u128 + mulmod(b1, a2, m) as u128) as u64 % m,
        ),
    };
    (prod.0, prod.1, x.2 ^ y.2)
}

fn param_sigma(cartan: &CartanSubgroup, a: u64, b: u64) -> (u64, u64) {
    let m = cartan.level().modulus();
    match cartan.kind() {
        CartanKind::Split => (b, a),
        CartanKind::NonSplit => (a, submod(0, b, m)),
    }
}

pub fn param_identity(cartan: &CartanSubgroup) -> (u64, u64, bool) {
    match cartan.kind() {
        CartanKind::Split => (1, 1, false),
        CartanKind::NonSplit => (1, 0, false),
    }
}

pub fn param_pow(cartan: &CartanSubgroup, x: (u64, u64, bool), mut e: u64) -> (u64, u64, bool) {
    let mut acc = param_identity(cartan);
    let mut base = x;
    while e > 0 {
        if e & 1 == 1 {
            acc = param_mul(cartan, acc, base);
        }
        base = param_mul(cartan, base, base);
        e >>= 1;
    }
    acc
}

/// The scalar sI as a Cartan parameter.
pub fn param_scalar(cartan: &CartanSubgroup, s: u64) -> (u64, u64, bool) {
    match cartan.kind() {
        CartanKind::Split => (s, s, false),
        CartanKind::NonSplit => (s, 0, false),
    }
}

pub fn param_det(cartan: &CartanSubgroup, a: u64, b: u64, coset: bool) -> u64 {
    let m = cartan.level().modulus();
    let norm = match cartan.kind() {
        CartanKind::Split => mulmod(a, b, m),
        CartanKind::NonSplit => submod(
            mulmod(a, a, m),
            mulmod(cartan.epsilon, mulmod(b, b, m), m),
            m,
        ),
    };
    if coset {
        submod(0, norm, m)
    } else {
        norm
    }
}

/// Closure of parameter generators inside C^+; the Cartan algebra makes this
/// a cheap abelian-by-involution closure.
pub fn cartan_param_closure(
    cartan: &CartanSubgroup,
    generators: &[(u64, u64, bool)],
    cap: usize,
) -> Result<MatGroup, MatGroupError> {
    let mut set = HashSet::new();
    let id = param_identity(cartan);
    set.insert(id);
    let mut queue = vec![id];
    while let Some(x) = queue.pop() {
        for g in generators {
            let y = param_mul(cartan, x, *g);
            if set.insert(y) {
                if set.len() > cap {
                    return Err(MatGroupError::CapExceeded(cap));
                }
                queue.push(y);
            }
        }
    }
    Ok(MatGroup::CartanSub {
        cartan: cartan.clone(),
        set: CartanSet::Elements {
            set,
            generators: generators.to_vec(),
        },
    })
}

/// Parameter generators of the full Cartan C(l^n).
fn cartan_param_generators(cartan: &CartanSubgroup) -> Vec<(u64, u64, bool)> {
    let level = cartan.level();
    let ell = level.ell();
    match cartan.kind() {
        CartanKind::Split => {
            let r = primitive_root_mod_prime_power(ell, level.n());
            vec![(r, 1, false), (1, r, false)]
        }
        CartanKind::NonSplit => {
            // A generator of the residue group F_{l^2}^*, found by order
            // search in the parameter algebra mod l, plus the two kernel
            // generators 1 + l and 1 + l*omega.
            let c1 = cartan.reduce(1);
            let target = (ell * ell - 1) as u128;
            let mut gamma = None;
            'search: for a in 0..ell {
                for b in 1..ell {
                    let mut x = (a, b, false);
                    let mut ord = 1u128;
                    while x != param_identity(&c1) {
                        x = param_mul(&c1, x, (a, b, false));
                        ord += 1;
                        if ord > target {
                            break;
                        }
                    }
                    if ord == target {
                        gamma = Some((a, b, false));
                        break 'search;
                    }
                }
            }
            let (ga, gb, _) = gamma.expect("F_{l^2}^* is cyclic");
            let mut gens = vec![(ga, gb, false)];
            if level.n() > 1 {
                gens.push((1 + ell, 0, false));
                gens.push((1, ell, false));
            }
            gens
        }
    }
}

fn primitive_root_mod_prime_power(ell: u64, n: u32) -> u64 {
    let m = ell.pow(n);
    let phi = m / ell * (ell - 1);
    let mut factors = Vec::new();
    let mut x = phi;
    let mut d = 2;
    while d * d <= x {
        if x.is_multiple_of(d) {
            factors.push(d);
            while x.is_multiple_of(d) {
                x /= d;
            }
        }
        d += 1;
    }
    if x > 1 {
        factors.push(x);
    }
    'g: for g in 2..m {
        if g % ell == 0 {
            continue;
        }
        for &q in &factors {
            if crate::arith::powmod(g, phi / q, m) == 1 {
                continue 'g;
            }
        }
        return g;
    }
    unreachable!("(Z/l^n)^* is cyclic for odd l")
}

#[cfg(test)]
mod tests {
    use super::super::group_closure;
    use super::*;

    fn lv(ell: u64, n: u32) -> Level {
        Level::new(ell, n).unwrap()
    }

    /// Oracle: centralizer of alpha by scanning all invertible matrices.
    fn centralizer_scan(alpha: &ModMatrix) -> Vec<ModMatrix> {
        let level = alpha.level();
        let m = level.modulus();
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let x = ModMatrix::new(level, [a, b, c, d]);
                        if x.has_unit_det() && x.mul(alpha) == alpha.mul(&x) {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn standard_split_orders() {
        let c = cartan_standard(lv(3, 1), CartanKind::Split, None).unwrap();
        assert_eq!(c.order(), 4);
        assert_eq!(c.normalizer_order(), 8);
        let c = cartan_standard(lv(3, 2), CartanKind::Split, None).unwrap();
        assert_eq!(c.order(), 36);
        // Enumeration oracle mod 9.
        let mut count = 0;
        c.for_each_element(false, |_| count += 1);
        assert_eq!(count, 36);
    }

    #[test]
    fn standard_nonsplit_orders() {
        let c = cartan_standard(lv(3, 1), CartanKind::NonSplit, Some(2)).unwrap();
        assert_eq!(c.order(), 8);
        let mut members = std::collections::HashSet::new();
        c.for_each_element(false, |m| {
            members.insert(m.entries());
        });
        assert_eq!(members.len(), 8);
        // The parametrized set really is a group: closed under products.
        let mats: Vec<ModMatrix> = members
            .iter()
            .map(|&e| ModMatrix::new(lv(3, 1), e))
            .collect();
        for x in &mats {
            for y in &mats {
                assert!(members.contains(&x.mul(y).entries()));
            }
        }
    }

    #[test]
    fn bad_epsilon_rejected() {
        assert_eq!(
            cartan_standard(lv(5, 1), CartanKind::NonSplit, Some(4)).unwrap_err(),
            MatGroupError::BadEpsilon
        );
        assert!(cartan_standard(lv(5, 1), CartanKind::NonSplit, Some(2)).is_ok());
    }

    #[test]
    fn centralizer_diag_is_split() {
        let l = lv(3, 1);
        let alpha = ModMatrix::new(l, [1, 0, 0, 2]);
        let c = cartan_centralizer(&alpha).unwrap();
        assert_eq!(c.kind(), CartanKind::Split);
        assert_eq!(c.order(), 4);
        let scan = centralizer_scan(&alpha);
        assert_eq!(scan.len(), 4);
        for m in scan {
            assert_eq!(cartan_position(&c, &m), CartanPosition::InCartan);
        }
    }

    #[test]
    fn centralizer_nonsplit_mod3() {
        let l = lv(3, 1);
        // disc = 8 = 2 mod 3, a non-square.
        let alpha = ModMatrix::new(l, [0, 2, 1, 0]);
        let c = cartan_centralizer(&alpha).unwrap();
        assert_eq!(c.kind(), CartanKind::NonSplit);
        assert_eq!(c.order(), 8);
        let scan = centralizer_scan(&alpha);
        assert_eq!(scan.len(), 8);
        for m in &scan {
            assert_eq!(cartan_position(&c, m), CartanPosition::InCartan);
        }
    }

    #[test]
    fn centralizer_mod9_split() {
        let l = lv(3, 2);
        let alpha = ModMatrix::new(l, [1, 0, 0, 2]);
        let c = cartan_centralizer(&alpha).unwrap();
        assert_eq!(c.kind(), CartanKind::Split);
        assert_eq!(c.order(), 36);
        let scan = centralizer_scan(&alpha);
        assert_eq!(scan.len(), 36);
        for m in &scan {
            assert_eq!(cartan_position(&c, m), CartanPosition::InCartan);
            assert_eq!(m.mul(&alpha), alpha.mul(m));
        }
    }

    #[test]
    fn position_examples_level_three() {
        let c = cartan_standard(lv(3, 1), CartanKind::Split, None).unwrap();
        let l = lv(3, 1);
        assert_eq!(
            cartan_position(&c, &ModMatrix::new(l, [2, 0, 0, 1])),
            CartanPosition::InCartan
        );
        assert_eq!(
            cartan_position(&c, &ModMatrix::new(l, [0, 1, 1, 0])),
            CartanPosition::InNormalizerOnly
        );
        assert_eq!(
            cartan_position(&c, &ModMatrix::new(l, [1, 1, 0, 1])),
            CartanPosition::Outside
        );
    }

    #[test]
    fn find_normalizer_for_cartan_itself() {
        let c = cartan_standard(lv(3, 2), CartanKind::Split, None).unwrap();
        let mut gens = Vec::new();
        let r = 2u64; // 2 generates (Z/9)^*
        gens.push(c.element(r, 1, false));
        gens.push(c.element(1, r, false));
        let g = group_closure(&gens, 1 << 10).unwrap();
        assert_eq!(g.order(), 36);
        let found = find_cartan_normalizer(&g).unwrap().unwrap();
        assert!(found.witness.is_some());
        for m in g.elements() {
            assert_ne!(cartan_position(&found.cartan, &m), CartanPosition::Outside);
        }
    }

    #[test]
    fn find_normalizer_rejects_gl2_f3() {
        let l = lv(3, 1);
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let d = ModMatrix::new(l, [2, 0, 0, 1]);
        let g = group_closure(&[s, t, d], 1 << 10).unwrap();
        assert!(find_cartan_normalizer(&g).unwrap().is_none());
    }

    #[test]
    fn find_normalizer_split_with_involution_mod5() {
        let l = lv(5, 1);
        let c = cartan_standard(l, CartanKind::Split, None).unwrap();
        let mut gens = vec![c.element(2, 1, false), c.element(1, 2, false)];
        gens.push(ModMatrix::new(l, [0, 1, 1, 0]));
        let g = group_closure(&gens, 1 << 10).unwrap();
        assert_eq!(g.order(), 32); // |C^+(5)| for the split kind
        let found = find_cartan_normalizer(&g).unwrap().unwrap();
        assert_eq!(found.cartan.kind(), CartanKind::Split);
    }

    #[test]
    fn param_closure_matches_matrix_closure() {
        let c = cartan_standard(lv(5, 2), CartanKind::NonSplit, Some(2)).unwrap();
        let gens = [(2u64, 3u64, false), (1, 0, true)];
        let by_params = cartan_param_closure(&c, &gens, 1 << 16).unwrap();
        let mats: Vec<ModMatrix> = gens.iter().map(|&(a, b, w)| c.element(a, b, w)).collect();
        let by_matrices = group_closure(&mats, 1 << 16).unwrap();
        assert_eq!(by_params.order(), by_matrices.order());
        for m in by_matrices.elements() {
            assert!(by_params.contains(&m));
        }
    }

    #[test]
    fn full_cartan_generators_generate() {
        for kind in [CartanKind::Split, CartanKind::NonSplit] {
            for (ell, n) in [(3u64, 1u32), (3, 2), (5, 1), (7, 1)] {
                let c = cartan_standard(lv(ell, n), kind, None).unwrap();
                let full = MatGroup::CartanSub {
                    cartan: c.clone(),
                    set: CartanSet::FullNormalizer,
                };
                let gens = full.generators();
                let g = group_closure(&gens, 1 << 18).unwrap();
                assert_eq!(g.order(), c.normalizer_order(), "{kind:?} {ell}^{n}");
            }
        }
    }
}
