use std::collections::{HashSet, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};

use super::cartan::{CartanSet, CartanSubgroup};
use super::{Level, MatGroupError, ModMatrix};

/// Default cap on materialized closures: 2^24 elements.
pub const DEFAULT_CLOSURE_CAP: usize = 1 << 24;

/// Multiply-xor hasher for packed element keys; sets of 10^7 elements are in
/// scope, so hashing must stay cheap.
#[derive(Default)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }
    #[inline]
    fn write_u64(&mut self, k: u64) {
        let mut h = self.0 ^ k;
        h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 32;
        self.0 = h;
    }
}

pub type KeySet = HashSet<u64, BuildHasherDefault<KeyHasher>>;

/// A subgroup of GL_2(Z/l^n) in one of three representations: a materialized
/// element set, the full preimage of a materialized group at a lower level,
/// or a subgroup of a Cartan normalizer tracked by algebraic parameters.
#[derive(Clone, Debug)]
pub enum MatGroup {
    Materialized {
        level: Level,
        elements: KeySet,
        generators: Vec<ModMatrix>,
    },
    /// The full preimage modulo l^n of `base` (materialized, at level l^k).
    BallPreimage { level: Level, base: Box<MatGroup> },
    /// A subgroup of the normalizer C^+ of `cartan`, given by parameters.
    CartanSub {
        cartan: CartanSubgroup,
        set: CartanSet,
    },
}

impl MatGroup {
    pub fn level(&self) -> Level {
        match self {
            MatGroup::Materialized { level, .. } => *level,
            MatGroup::BallPreimage { level, .. } => *level,
            MatGroup::CartanSub { cartan, .. } => cartan.level(),
        }
    }

    pub fn order(&self) -> u128 {
        match self {
            MatGroup::Materialized { elements, .. } => elements.len() as u128,
            MatGroup::BallPreimage { level, base } => {
                let k = base.level().n();
                base.order() * (level.ell() as u128).pow(4 * (level.n() - k))
            }
            MatGroup::CartanSub { cartan, set } => set.order(cartan),
        }
    }

    pub fn generators(&self) -> Vec<ModMatrix> {
        match self {
            MatGroup::Materialized { generators, .. } => generators.clone(),
            MatGroup::BallPreimage { level, base } => {
                // Lifts of the base generators together with the four
                // elementary ball generators I + l^k E_ij generate the
                // preimage.
                let k = base.level().n();
                let lk = level.ell().pow(k);
                let mut gens: Vec<ModMatrix> = base
                    .generators()
                    .iter()
                    .map(|g| ModMatrix::new(*level, g.entries()))
                    .collect();
                for idx in 0..4 {
                    let mut e = ModMatrix::identity(*level).entries();
                    e[idx] = (e[idx] + lk) % level.modulus();
                    gens.push(ModMatrix::new(*level, e));
                }
                gens
            }
            MatGroup::CartanSub { cartan, set } => set.generators(cartan),
        }
    }

    pub fn contains(&self, a: &ModMatrix) -> bool {
        if a.level() != self.level() {
            return false;
        }
        match self {
            MatGroup::Materialized { elements, .. } => elements.contains(&a.pack()),
            MatGroup::BallPreimage { base, .. } => base.contains(&a.reduce(base.level().n())),
            MatGroup::CartanSub { cartan, set } => set.contains(cartan, a),
        }
    }

    /// The image of the group under reduction to level l^k.
    pub fn reduce(&self, k: u32) -> MatGroup {
        assert!(k >= 1 && k <= self.level().n());
        if k == self.level().n() {
            return self.clone();
        }
        match self {
            MatGroup::Materialized {
                level,
                elements,
                generators,
            } => {
                let new_level = level.reduce(k);
                let mut set = KeySet::default();
                set.reserve(elements.len().min(new_level.gl2_order() as usize));
                for &key in elements {
                    set.insert(ModMatrix::unpack(*level, key).reduce(k).pack());
                }
                MatGroup::Materialized {
                    level: new_level,
                    elements: set,
                    generators: generators.iter().map(|g| g.reduce(k)).collect(),
                }
            }
            MatGroup::BallPreimage { level, base } => {
                let kb = base.level().n();
                if k <= kb {
                    base.reduce(k)
                } else {
                    MatGroup::BallPreimage {
                        level: level.reduce(k),
                        base: base.clone(),
                    }
                }
            }
            MatGroup::CartanSub { cartan, set } => MatGroup::CartanSub {
                cartan: cartan.reduce(k),
                set: set.reduce(cartan, k),
            },
        }
    }

    /// Materializes the group as an explicit element set.
    pub fn materialize(&self, cap: usize) -> Result<MatGroup, MatGroupError> {
        match self {
            MatGroup::Materialized { .. } => Ok(self.clone()),
            MatGroup::BallPreimage { level, base } => {
                ModMatrix::check_packable(*level)?;
                if self.order() > cap as u128 {
                    return Err(MatGroupError::CapExceeded(cap));
                }
                let base_mat = base.materialize(cap)?;
                let base_elems = match &base_mat {
                    MatGroup::Materialized { elements, .. } => elements,
                    _ => unreachable!(),
                };
                let k = base.level().n();
                let lk = level.ell().pow(k);
                let fiber = level.modulus() / lk;
                let mut set = KeySet::default();
                set.reserve(self.order() as usize);
                for &key in base_elems {
                    let b = ModMatrix::unpack(base.level(), key).entries();
                    let mut off = [0u64; 4];
                    loop {
                        let e = [
                            b[0] + off[0] * lk,
                            b[1] + off[1] * lk,
                            b[2] + off[2] * lk,
                            b[3] + off[3] * lk,
                        ];
                        set.insert(ModMatrix::new(*level, e).pack());
                        // odometer over the fiber
                        let mut i = 0;
                        loop {
                            off[i] += 1;
                            if off[i] < fiber {
                                break;
                            }
                            off[i] = 0;
                            i += 1;
                            if i == 4 {
                                break;
                            }
                        }
                        if i == 4 {
                            break;
                        }
                    }
                }
                Ok(MatGroup::Materialized {
                    level: *level,
                    elements: set,
                    generators: self.generators(),
                })
            }
            MatGroup::CartanSub { cartan, set } => {
                ModMatrix::check_packable(cartan.level())?;
                if self.order() > cap as u128 {
                    return Err(MatGroupError::CapExceeded(cap));
                }
                let mut out = KeySet::default();
                out.reserve(self.order() as usize);
                set.for_each_element(cartan, |m| {
                    out.insert(m.pack());
                });
                Ok(MatGroup::Materialized {
                    level: cartan.level(),
                    elements: out,
                    generators: self.generators(),
                })
            }
        }
    }

    /// Determinant image equals the full unit group (Z/l^n)^*.
    pub fn det_image_is_all_units(&self) -> bool {
        match self {
            MatGroup::Materialized {
                level, elements, ..
            } => {
                let mut dets = HashSet::new();
                for &key in elements {
                    dets.insert(ModMatrix::unpack(*level, key).det());
                    if dets.len() as u64 == level.unit_count() {
                        return true;
                    }
                }
                dets.len() as u64 == level.unit_count()
            }
            // det of the ball at exponent k is all of 1 + l^k Z, so the
            // preimage hits every unit iff the base does.
            MatGroup::BallPreimage { base, .. } => base.det_image_is_all_units(),
            MatGroup::CartanSub { cartan, set } => set.det_image_is_all_units(cartan),
        }
    }

    pub(crate) fn elements_materialized(&self) -> Option<&KeySet> {
        match self {
            MatGroup::Materialized { elements, .. } => Some(elements),
            _ => None,
        }
    }

    pub fn elements(&self) -> Vec<ModMatrix> {
        match self {
            MatGroup::Materialized {
                level, elements, ..
            } => elements
                .iter()
                .map(|&k| ModMatrix::unpack(*level, k))
                .collect(),
            _ => self
                .materialize(DEFAULT_CLOSURE_CAP)
                .expect("materialization within cap")
                .elements(),
        }
    }
}

/// Closure of `gens` under multiplication: the smallest subgroup of
/// GL_2(Z/l^n) containing them. Every generator must share one level and have
/// unit determinant.
pub fn group_closure(gens: &[ModMatrix], cap: usize) -> Result<MatGroup, MatGroupError> {
    let level = match gens.first() {
        Some(g) => g.level(),
        None => return Err(MatGroupError::NonUnitDet),
    };
    ModMatrix::check_packable(level)?;
    for g in gens {
        if g.level() != level {
            return Err(MatGroupError::LevelMismatch);
        }
        if !g.has_unit_det() {
            return Err(MatGroupError::NonUnitDet);
        }
    }
    let mut elements = KeySet::default();
    let mut queue = VecDeque::new();
    let id = ModMatrix::identity(level);
    elements.insert(id.pack());
    queue.push_back(id);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.mul(g);
            if elements.insert(y.pack()) {
                if elements.len() > cap {
                    return Err(MatGroupError::CapExceeded(cap));
                }
                queue.push_back(y);
            }
        }
    }
    Ok(MatGroup::Materialized {
        level,
        elements,
        generators: gens.to_vec(),
    })
}

/// Builds the full preimage of a materialized `base` at level l^n.
pub fn ball_preimage(base: MatGroup, n: u32) -> Result<MatGroup, MatGroupError> {
    let base_level = base.level();
    if base.elements_materialized().is_none() {
        return Err(MatGroupError::PreconditionFailed(
            "ball preimage requires a materialized base".into(),
        ));
    }
    if n < base_level.n() {
        return Err(MatGroupError::LevelTooLow);
    }
    let level = Level::new(base_level.ell(), n)?;
    Ok(MatGroup::BallPreimage {
        level,
        base: Box::new(base),
    })
}

/// Whether G contains every matrix congruent to I modulo l^k (k < n).
pub fn contains_ball(group: &MatGroup, k: u32) -> bool {
    let level = group.level();
    assert!(k >= 1 && k < level.n(), "contains_ball needs 1 <= k < n");
    match group {
        MatGroup::BallPreimage { base, .. } => {
            let kb = base.level().n();
            if k >= kb {
                true
            } else {
                contains_ball(base, k)
            }
        }
        MatGroup::CartanSub { .. } => {
            // A Cartan normalizer never contains a ball: its congruence
            // filtration has dimension at most 2 while the ball needs 4.
            false
        }
        MatGroup::Materialized {
            level, elements, ..
        } => {
            let fiber = level.modulus() / level.ell().pow(k);
            let ball_size = (fiber as u128).pow(4);
            if ball_size > elements.len() as u128 {
                return false;
            }
            let lk = level.ell().pow(k);
            let mut off = [0u64; 4];
            loop {
                let m = ModMatrix::new(
                    *level,
                    [1 + off[0] * lk, off[1] * lk, off[2] * lk, 1 + off[3] * lk],
                );
                if !elements.contains(&m.pack()) {
                    return false;
                }
                let mut i = 0;
                loop {
                    off[i] += 1;
                    if off[i] < fiber {
                        break;
                    }
                    off[i] = 0;
                    i += 1;
                    if i == 4 {
                        break;
                    }
                }
                if i == 4 {
                    return true;
                }
            }
        }
    }
}

/// The commutator subgroup [G, G]: the smallest normal subgroup with abelian
/// quotient, computed as the closure of pairwise generator commutators under
/// multiplication and conjugation by the generators of G.
pub fn commutator_subgroup(group: &MatGroup, cap: usize) -> Result<MatGroup, MatGroupError> {
    let level = group.level();
    ModMatrix::check_packable(level)?;
    let outer: Vec<ModMatrix> = {
        let gens = group.generators();
        if !gens.is_empty() {
            gens
        } else if let Some(elements) = group.elements_materialized() {
            elements
                .iter()
                .map(|&k| ModMatrix::unpack(level, k))
                .collect()
        } else {
            return Err(MatGroupError::PreconditionFailed(
                "commutator subgroup needs generators or a materialized group".into(),
            ));
        }
    };
    let outer_inv: Vec<ModMatrix> = outer
        .iter()
        .map(|g| g.inv().ok_or(MatGroupError::NonUnitDet))
        .collect::<Result<_, _>>()?;

    // Seed: commutators of all generator pairs.
    let mut seed: Vec<ModMatrix> = Vec::new();
    let mut seen = KeySet::default();
    for (i, a) in outer.iter().enumerate() {
        for (j, b) in outer.iter().enumerate() {
            let c = a.mul(b).mul(&outer_inv[i]).mul(&outer_inv[j]);
            if seen.insert(c.pack()) {
                seed.push(c);
            }
        }
    }

    loop {
        let sub = group_closure_from(&seed, level, cap)?;
        // Conjugating the generating set into the subgroup suffices for
        // normality under the whole group.
        let mut grew = false;
        let elements = sub.elements_materialized().unwrap();
        let mut new_seed = seed.clone();
        for (i, g) in outer.iter().enumerate() {
            for t in &seed {
                let c = g.mul(t).mul(&outer_inv[i]);
                if !elements.contains(&c.pack()) && seen.insert(c.pack()) {
                    new_seed.push(c);
                    grew = true;
                }
            }
        }
        if !grew {
            return Ok(sub);
        }
        seed = new_seed;
    }
}

fn group_closure_from(
    gens: &[ModMatrix],
    level: Level,
    cap: usize,
) -> Result<MatGroup, MatGroupError> {
    if gens.is_empty() {
        let mut elements = KeySet::default();
        elements.insert(ModMatrix::identity(level).pack());
        return Ok(MatGroup::Materialized {
            level,
            elements,
            generators: vec![ModMatrix::identity(level)],
        });
    }
    group_closure(gens, cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(ell: u64, n: u32) -> Level {
        Level::new(ell, n).unwrap()
    }

    /// Brute-force oracle: all matrices over Z/m with det = 1 (or any unit).
    fn enumerate_gl2(level: Level, det_one: bool) -> Vec<ModMatrix> {
        let m = level.modulus();
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let x = ModMatrix::new(level, [a, b, c, d]);
                        let keep = if det_one {
                            x.det() == 1
                        } else {
                            x.has_unit_det()
                        };
                        if keep {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn closure_identity_only() {
        let l = lv(3, 1);
        let g = group_closure(&[ModMatrix::identity(l)], 10).unwrap();
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn closure_sl2_f3() {
        let l = lv(3, 1);
        // S = [[0,-1],[1,0]], T = [[1,1],[0,1]] generate SL_2(Z).
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let g = group_closure(&[t, s], 1 << 12).unwrap();
        // Oracle: enumerate all det-1 matrices mod 3.
        let oracle = enumerate_gl2(l, true);
        assert_eq!(oracle.len(), 24);
        assert_eq!(g.order(), 24);
        for m in &oracle {
            assert!(g.contains(m));
        }
    }

    #[test]
    fn closure_gl2_mod9() {
        let l = lv(3, 2);
        // GL_2(Z/9): generated by SL_2 generators and a determinant
        // generator diag(g, 1) with g generating (Z/9)^*.
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let d = ModMatrix::new(l, [2, 0, 0, 1]);
        let g = group_closure(&[s, t, d], 1 << 14).unwrap();
        assert_eq!(g.order(), 3888);
        // Cross-check against full enumeration of invertible matrices mod 9.
        assert_eq!(enumerate_gl2(l, false).len(), 3888);
        assert_eq!(g.order(), l.gl2_order());
    }

    #[test]
    fn closure_rejects_singular_generator() {
        let l = lv(3, 1);
        let bad = ModMatrix::new(l, [1, 1, 1, 1]);
        assert!(matches!(
            group_closure(&[bad], 10),
            Err(MatGroupError::NonUnitDet)
        ));
    }

    #[test]
    fn closure_cap_exceeded() {
        let l = lv(5, 1);
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        assert!(matches!(
            group_closure(&[s, t], 100),
            Err(MatGroupError::CapExceeded(100))
        ));
    }

    #[test]
    fn ball_preimage_order_and_membership() {
        let l1 = lv(3, 1);
        let base = group_closure(&[ModMatrix::identity(l1)], 10).unwrap();
        let pre = ball_preimage(base, 2).unwrap();
        // Preimage of {I} mod 3 inside GL_2(Z/9) has order 3^4.
        assert_eq!(pre.order(), 81);
        let l2 = lv(3, 2);
        assert!(pre.contains(&ModMatrix::new(l2, [4, 3, 6, 7])));
        assert!(!pre.contains(&ModMatrix::new(l2, [2, 0, 0, 1])));
        assert!(contains_ball(&pre, 1));
        let mat = pre.materialize(1 << 10).unwrap();
        assert_eq!(mat.order(), 81);
        assert!(contains_ball(&mat, 1));
    }

    #[test]
    fn contains_ball_full_group_mod9() {
        let l = lv(3, 2);
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let d = ModMatrix::new(l, [2, 0, 0, 1]);
        let g = group_closure(&[s, t, d], 1 << 14).unwrap();
        assert!(contains_ball(&g, 1));
    }

    #[test]
    fn contains_ball_cartan_and_preimage_examples() {
        use super::super::cartan::{cartan_standard, CartanKind, CartanSet};
        // A Cartan at (3,2) misses the ball at exponent 1.
        let cartan = cartan_standard(lv(3, 2), CartanKind::Split, None).unwrap();
        let c = MatGroup::CartanSub {
            cartan: cartan.clone(),
            set: CartanSet::FullCartan,
        };
        assert!(!contains_ball(&c, 1));
        assert!(!contains_ball(&c.materialize(1 << 10).unwrap(), 1));
        // A full preimage of C+(5) at level 5^5 contains it by construction.
        let one = lv(5, 1);
        let base = MatGroup::CartanSub {
            cartan: cartan_standard(one, CartanKind::NonSplit, None).unwrap(),
            set: CartanSet::FullNormalizer,
        }
        .materialize(1 << 10)
        .unwrap();
        let pre = ball_preimage(base, 5).unwrap();
        assert!(contains_ball(&pre, 1));
        assert!(contains_ball(&pre, 4));
    }

    #[test]
    fn commutator_of_gl2_f3_is_sl2() {
        let l = lv(3, 1);
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let d = ModMatrix::new(l, [2, 0, 0, 1]);
        let g = group_closure(&[s, t, d], 1 << 10).unwrap();
        assert_eq!(g.order(), 48);
        let comm = commutator_subgroup(&g, 1 << 10).unwrap();
        assert_eq!(comm.order(), 24);
        for m in enumerate_gl2(l, true) {
            assert!(comm.contains(&m));
        }
    }

    #[test]
    fn commutator_of_gl2_f5_is_sl2() {
        let l = lv(5, 1);
        let s = ModMatrix::from_signed(l, [0, -1, 1, 0]);
        let t = ModMatrix::new(l, [1, 1, 0, 1]);
        let d = ModMatrix::new(l, [2, 0, 0, 1]);
        let g = group_closure(&[s, t, d], 1 << 12).unwrap();
        assert_eq!(g.order(), 480);
        let comm = commutator_subgroup(&g, 1 << 12).unwrap();
        assert_eq!(comm.order(), 120);
    }

    #[test]
    fn commutator_of_abelian_group_is_trivial() {
        let l = lv(5, 2);
        let d1 = ModMatrix::new(l, [2, 0, 0, 1]);
        let d2 = ModMatrix::new(l, [1, 0, 0, 7]);
        let g = group_closure(&[d1, d2], 1 << 12).unwrap();
        let comm = commutator_subgroup(&g, 1 << 12).unwrap();
        assert_eq!(comm.order(), 1);
    }

    #[test]
    fn closure_order_divides_gl2_order() {
        use rand::{Rng, SeedableRng};
        let l = lv(3, 2);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..40 {
            let mut gens = Vec::new();
            while gens.len() < 2 {
                let m = ModMatrix::new(
                    l,
                    [
                        rng.gen_range(0..9),
                        rng.gen_range(0..9),
                        rng.gen_range(0..9),
                        rng.gen_range(0..9),
                    ],
                );
                if m.has_unit_det() {
                    gens.push(m);
                }
            }
            let g = group_closure(&gens, 1 << 14).unwrap();
            assert_eq!(l.gl2_order() % g.order(), 0);
        }
    }
}
