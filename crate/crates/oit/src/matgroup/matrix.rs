use crate::arith::{self, invmod, mulmod, submod};

use super::{Level, MatGroupError};

/// Largest modulus representable by the packed 14-bit-per-entry element key.
pub(crate) const PACK_LIMIT: u64 = 1 << 14;

/// A 2x2 matrix over Z/l^n, stored row-major as [a, b; c, d].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModMatrix {
    level: Level,
    e: [u64; 4],
}

impl ModMatrix {
    pub fn new(level: Level, entries: [u64; 4]) -> Self {
        let m = level.modulus();
        ModMatrix {
            level,
            e: [
                entries[0] % m,
                entries[1] % m,
                entries[2] % m,
                entries[3] % m,
            ],
        }
    }

    pub fn from_signed(level: Level, entries: [i64; 4]) -> Self {
        let m = level.modulus() as i64;
        let red = |x: i64| x.rem_euclid(m) as u64;
        ModMatrix {
            level,
            e: [
                red(entries[0]),
                red(entries[1]),
                red(entries[2]),
                red(entries[3]),
            ],
        }
    }

    pub fn identity(level: Level) -> Self {
        ModMatrix {
            level,
            e: [1, 0, 0, 1],
        }
    }

    pub fn scalar(level: Level, s: u64) -> Self {
        let s = s % level.modulus();
        ModMatrix {
            level,
            e: [s, 0, 0, s],
        }
    }

    #[inline]
    pub fn level(&self) -> Level {
        self.level
    }

    #[inline]
    pub fn entries(&self) -> [u64; 4] {
        self.e
    }

    #[inline]
    pub fn trace(&self) -> u64 {
        arith::addmod(self.e[0], self.e[3], self.level.modulus())
    }

    #[inline]
    pub fn det(&self) -> u64 {
        let m = self.level.modulus();
        submod(
            mulmod(self.e[0], self.e[3], m),
            mulmod(self.e[1], self.e[2], m),
            m,
        )
    }

    /// tr^2 - 4 det, the discriminant of the characteristic polynomial.
    pub fn disc(&self) -> u64 {
        let m = self.level.modulus();
        let t = self.trace();
        submod(mulmod(t, t, m), mulmod(4 % m, self.det(), m), m)
    }

    #[inline]
    pub fn has_unit_det(&self) -> bool {
        self.level.is_unit(self.det())
    }

    /// Regular semisimple: the characteristic polynomial has distinct roots
    /// modulo l, i.e. tr^2 - 4 det is a unit.
    pub fn is_regular_semisimple(&self) -> bool {
        self.level.is_unit(self.disc())
    }

    pub fn is_scalar(&self) -> bool {
        self.e[1] == 0 && self.e[2] == 0 && self.e[0] == self.e[3]
    }

    pub fn mul(&self, rhs: &ModMatrix) -> ModMatrix {
        debug_assert!(self.level == rhs.level);
        let m = self.level.modulus();
        let [a, b, c, d] = self.e;
        let [e, f, g, h] = rhs.e;
        ModMatrix {
            level: self.level,
            e: [
                arith::addmod(mulmod(a, e, m), mulmod(b, g, m), m),
                arith::addmod(mulmod(a, f, m), mulmod(b, h, m), m),
                arith::addmod(mulmod(c, e, m), mulmod(d, g, m), m),
                arith::addmod(mulmod(c, f, m), mulmod(d, h, m), m),
            ],
        }
    }

    pub fn add(&self, rhs: &ModMatrix) -> ModMatrix {
        let m = self.level.modulus();
        let e = std::array::from_fn(|i| arith::addmod(self.e[i], rhs.e[i], m));
        ModMatrix {
            level: self.level,
            e,
        }
    }

    pub fn sub(&self, rhs: &ModMatrix) -> ModMatrix {
        let m = self.level.modulus();
        let e = std::array::from_fn(|i| submod(self.e[i], rhs.e[i], m));
        ModMatrix {
            level: self.level,
            e,
        }
    }

    pub fn scale(&self, s: u64) -> ModMatrix {
        let m = self.level.modulus();
        let s = s % m;
        let e = std::array::from_fn(|i| mulmod(self.e[i], s, m));
        ModMatrix {
            level: self.level,
            e,
        }
    }

    pub fn inv(&self) -> Option<ModMatrix> {
        let m = self.level.modulus();
        let det_inv = invmod(self.det(), m)?;
        let [a, b, c, d] = self.e;
        Some(ModMatrix {
            level: self.level,
            e: [
                mulmod(d, det_inv, m),
                mulmod(submod(0, b, m), det_inv, m),
                mulmod(submod(0, c, m), det_inv, m),
                mulmod(a, det_inv, m),
            ],
        })
    }

    pub fn pow(&self, mut k: u64) -> ModMatrix {
        let mut acc = ModMatrix::identity(self.level);
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// g * self * g^{-1}.
    pub fn conjugate_by(&self, g: &ModMatrix, g_inv: &ModMatrix) -> ModMatrix {
        g.mul(self).mul(g_inv)
    }

    /// Entrywise reduction to the level l^k.
    pub fn reduce(&self, k: u32) -> ModMatrix {
        let level = self.level.reduce(k);
        let m = level.modulus();
        ModMatrix {
            level,
            e: [self.e[0] % m, self.e[1] % m, self.e[2] % m, self.e[3] % m],
        }
    }

    /// Smallest k >= 1 with self^k scalar, i.e. the order of the image in
    /// PGL_2. Intended for matrices at level (l, 1).
    pub fn pgl_order(&self) -> u64 {
        let mut x = *self;
        let bound = self.level.modulus().pow(2) + self.level.modulus() + 1;
        for k in 1..=bound {
            if x.is_scalar() {
                return k;
            }
            x = x.mul(self);
        }
        unreachable!("PGL_2 element order exceeded the group order bound")
    }

    /// Packs the four residues little-endian, 14 bits per entry. Requires the
    /// modulus to be at most 16384.
    #[inline]
    pub fn pack(&self) -> u64 {
        debug_assert!(self.level.modulus() <= PACK_LIMIT);
        self.e[0] | self.e[1] << 14 | self.e[2] << 28 | self.e[3] << 42
    }

    #[inline]
    pub fn unpack(level: Level, key: u64) -> ModMatrix {
        const MASK: u64 = (1 << 14) - 1;
        ModMatrix {
            level,
            e: [
                key & MASK,
                key >> 14 & MASK,
                key >> 28 & MASK,
                key >> 42 & MASK,
            ],
        }
    }

    pub(crate) fn check_packable(level: Level) -> Result<(), MatGroupError> {
        if level.modulus() > PACK_LIMIT {
            Err(MatGroupError::ModulusTooLarge(level.modulus(), PACK_LIMIT))
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Debug for ModMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{} {}; {} {}] mod {}",
            self.e[0],
            self.e[1],
            self.e[2],
            self.e[3],
            self.level.modulus()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(ell: u64, n: u32) -> Level {
        Level::new(ell, n).unwrap()
    }

    #[test]
    fn mul_inv_det() {
        let l = lv(7, 2);
        let a = ModMatrix::new(l, [1, 2, 3, 4]);
        assert_eq!(a.det(), 47); // 4 - 6 mod 49
        let b = a.inv().unwrap();
        assert_eq!(a.mul(&b), ModMatrix::identity(l));
        assert_eq!(b.mul(&a), ModMatrix::identity(l));
    }

    #[test]
    fn singular_has_no_inverse() {
        let l = lv(3, 2);
        let a = ModMatrix::new(l, [3, 0, 0, 1]);
        assert!(a.inv().is_none());
        assert!(!a.has_unit_det());
    }

    #[test]
    fn pgl_orders_level_one() {
        let l = lv(5, 1);
        assert_eq!(ModMatrix::identity(l).pgl_order(), 1);
        assert_eq!(ModMatrix::scalar(l, 2).pgl_order(), 1);
        // diag(2, 1): 2 has order 4 in F_5^*.
        assert_eq!(ModMatrix::new(l, [2, 0, 0, 1]).pgl_order(), 4);
        // [[1,1],[0,1]] is unipotent of order 5.
        assert_eq!(ModMatrix::new(l, [1, 1, 0, 1]).pgl_order(), 5);
    }

    proptest! {
        #[test]
        fn pack_roundtrip(e0 in 0u64..243, e1 in 0u64..243, e2 in 0u64..243, e3 in 0u64..243) {
            let l = lv(3, 5);
            let a = ModMatrix::new(l, [e0, e1, e2, e3]);
            prop_assert_eq!(ModMatrix::unpack(l, a.pack()), a);
        }

        #[test]
        fn det_is_multiplicative(xs in prop::array::uniform8(0u64..125)) {
            let l = lv(5, 3);
            let a = ModMatrix::new(l, [xs[0], xs[1], xs[2], xs[3]]);
            let b = ModMatrix::new(l, [xs[4], xs[5], xs[6], xs[7]]);
            prop_assert_eq!(a.mul(&b).det(), mulmod(a.det(), b.det(), 125));
        }
    }
}
