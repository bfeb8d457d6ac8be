use crate::arith;

use super::MatGroupError;

/// A prime-power level l^n with l an odd prime.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    ell: u64,
    n: u32,
    modulus: u64,
}

impl Level {
    pub fn new(ell: u64, n: u32) -> Result<Self, MatGroupError> {
        if ell < 3 || ell.is_multiple_of(2) || !arith::is_prime(ell) {
            return Err(MatGroupError::NotOddPrime(ell));
        }
        if n == 0 {
            return Err(MatGroupError::ZeroExponent);
        }
        let modulus = ell
            .checked_pow(n)
            .ok_or(MatGroupError::ModulusOverflow(ell))?;
        Ok(Level { ell, n, modulus })
    }

    #[inline]
    pub fn ell(&self) -> u64 {
        self.ell
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The level l^k for k <= n.
    pub fn reduce(&self, k: u32) -> Level {
        assert!(
            k >= 1 && k <= self.n,
            "cannot reduce level {} to {}",
            self.n,
            k
        );
        Level {
            ell: self.ell,
            n: k,
            modulus: self.ell.pow(k),
        }
    }

    /// phi(l^n), the number of units.
    pub fn unit_count(&self) -> u64 {
        self.modulus / self.ell * (self.ell - 1)
    }

    /// |GL_2(Z/l^n)| = (l^2 - 1)(l^2 - l) l^{4(n-1)}.
    pub fn gl2_order(&self) -> u128 {
        let l = self.ell as u128;
        (l * l - 1) * (l * l - l) * l.pow(4 * (self.n - 1))
    }

    /// |SL_2(Z/l^n)| = (l^2 - 1) l^{3n - 2}.
    pub fn sl2_order(&self) -> u128 {
        let l = self.ell as u128;
        (l * l - 1) * l * l.pow(3 * (self.n - 1))
    }

    #[inline]
    pub fn is_unit(&self, x: u64) -> bool {
        !x.is_multiple_of(self.ell)
    }
}

impl std::fmt::Debug for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}^{}", self.ell, self.n)
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        <Self as std::fmt::Debug>::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_two_and_composites() {
        assert!(Level::new(2, 1).is_err());
        assert!(Level::new(9, 1).is_err());
        assert!(Level::new(1, 1).is_err());
        assert!(Level::new(3, 0).is_err());
        assert!(Level::new(3, 1).is_ok());
    }

    #[test]
    fn gl2_orders() {
        // |GL_2(F_3)| = 48 and |GL_2(Z/9)| = 48 * 81 = 3888.
        assert_eq!(Level::new(3, 1).unwrap().gl2_order(), 48);
        assert_eq!(Level::new(3, 2).unwrap().gl2_order(), 3888);
        assert_eq!(Level::new(5, 1).unwrap().gl2_order(), 480);
        assert_eq!(Level::new(3, 1).unwrap().sl2_order(), 24);
        assert_eq!(Level::new(5, 1).unwrap().sl2_order(), 120);
    }

    #[test]
    fn reduce_and_units() {
        let lv = Level::new(5, 3).unwrap();
        assert_eq!(lv.modulus(), 125);
        assert_eq!(lv.reduce(1).modulus(), 5);
        assert_eq!(lv.unit_count(), 100);
    }
}
