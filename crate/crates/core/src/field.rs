//! Prime-field arithmetic.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// GF(q) for a prime `q >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if q < 3 {
            return Err(Error::FieldTooSmall(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(PrimeField { q })
    }

    /// Smallest prime field with more than `n` elements.
    pub fn smallest_above(n: u64) -> Self {
        let mut q = (n + 1).max(3);
        while !is_prime(q) {
            q += 1;
        }
        PrimeField { q }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn elem(&self, v: u64) -> FieldElement {
        FieldElement { value: v % self.q, q: self.q }
    }

    /// Map a signed integer into the field.
    pub fn from_i64(&self, v: i64) -> FieldElement {
        self.elem((v as i128).rem_euclid(self.q as i128) as u64)
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    // Raw arithmetic on canonical representatives; the hot paths in linalg use these.
    #[inline]
    pub(crate) fn add_raw(&self, a: u64, b: u64) -> u64 {
        let (s, over) = a.overflowing_add(b);
        if over || s >= self.q {
            s.wrapping_sub(self.q)
        } else {
            s
        }
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.q)
        }
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        if self.q <= u32::MAX as u64 {
            return a * b % self.q;
        }
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub(crate) fn inv_raw(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.q) {
            return Err(Error::ZeroInverse);
        }
        // extended Euclid on (a, q)
        let (mut r0, mut r1) = (self.q as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let quo = r0 / r1;
            (r0, r1) = (r1, r0 - quo * r1);
            (t0, t1) = (t1, t0 - quo * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.q as i128) as u64)
    }

    pub(crate) fn pow_raw(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An element of GF(q). Carries its modulus so cross-field mixing is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    q: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same(&self, o: &FieldElement) -> Result<()> {
        if self.q == o.q {
            Ok(())
        } else {
            Err(Error::FieldMismatch(self.q, o.q))
        }
    }

    pub fn try_add(self, o: FieldElement) -> Result<FieldElement> {
        self.same(&o)?;
        Ok(FieldElement { value: self.field().add_raw(self.value, o.value), q: self.q })
    }

    pub fn try_sub(self, o: FieldElement) -> Result<FieldElement> {
        self.same(&o)?;
        Ok(FieldElement { value: self.field().sub_raw(self.value, o.value), q: self.q })
    }

    pub fn try_mul(self, o: FieldElement) -> Result<FieldElement> {
        self.same(&o)?;
        Ok(FieldElement { value: self.field().mul_raw(self.value, o.value), q: self.q })
    }

    pub fn inv(self) -> Result<FieldElement> {
        Ok(FieldElement { value: self.field().inv_raw(self.value)?, q: self.q })
    }

    pub fn pow(self, e: u64) -> FieldElement {
        FieldElement { value: self.field().pow_raw(self.value, e), q: self.q }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator forms panic on a field mismatch; use the `try_*` methods where
// operands may come from different fields.
impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, o: FieldElement) -> FieldElement {
        self.try_add(o).expect("field mismatch")
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, o: FieldElement) -> FieldElement {
        self.try_sub(o).expect("field mismatch")
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, o: FieldElement) -> FieldElement {
        self.try_mul(o).expect("field mismatch")
    }
}

impl Div for FieldElement {
    type Output = FieldElement;
    fn div(self, o: FieldElement) -> FieldElement {
        self * o.inv().expect("division by zero")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { value: self.field().sub_raw(0, self.value), q: self.q }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let f7 = PrimeField::new(7).unwrap();
        assert_eq!((f7.elem(5) + f7.elem(4)).value(), 2);
        assert_eq!((f7.elem(3) * f7.elem(5)).value(), 1);
        assert_eq!(f7.elem(3).inv().unwrap().value(), 5);
        let f11 = PrimeField::new(11).unwrap();
        assert_eq!((f11.elem(10) + f11.elem(10)).value(), 9);
        assert_eq!(f11.elem(2).inv().unwrap().value(), 6);
        let f5 = PrimeField::new(5).unwrap();
        assert_eq!((f5.elem(4) * f5.elem(4)).value(), 1);
        for x in 0..7 {
            assert_eq!(f7.elem(x) + f7.zero(), f7.elem(x));
            assert_eq!(f7.elem(x) * f7.one(), f7.elem(x));
        }
        assert_eq!(f7.one().inv().unwrap(), f7.one());
    }

    #[test]
    fn construction_rules() {
        assert_eq!(PrimeField::new(2), Err(Error::FieldTooSmall(2)));
        assert_eq!(PrimeField::new(9), Err(Error::NotPrime(9)));
        assert!(PrimeField::new(1_000_000_007).is_ok());
        assert_eq!(PrimeField::smallest_above(6).modulus(), 7);
        assert_eq!(PrimeField::smallest_above(7).modulus(), 11);
        assert_eq!(PrimeField::smallest_above(1).modulus(), 3);
    }

    #[test]
    fn mixing_fields_is_rejected() {
        let a = PrimeField::new(7).unwrap().elem(1);
        let b = PrimeField::new(11).unwrap().elem(1);
        assert_eq!(a.try_add(b), Err(Error::FieldMismatch(7, 11)));
        assert_eq!(a.try_mul(b), Err(Error::FieldMismatch(7, 11)));
    }

    #[test]
    fn zero_has_no_inverse() {
        assert_eq!(PrimeField::new(13).unwrap().zero().inv(), Err(Error::ZeroInverse));
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        let naive = |n: u64| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        for n in 0..5000 {
            assert_eq!(is_prime(n), naive(n), "n = {n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }

    fn field_and_triple() -> impl Strategy<Value = (u64, u64, u64, u64)> {
        prop::sample::select(vec![3u64, 5, 7, 11, 13, 101, 65_537, 1_000_000_007, 18_446_744_073_709_551_557])
            .prop_flat_map(|q| (Just(q), 0..q, 0..q, 0..q))
    }

    proptest! {
        #[test]
        fn axioms((q, a, b, c) in field_and_triple()) {
            let f = PrimeField::new(q).unwrap();
            let (a, b, c) = (f.elem(a), f.elem(b), f.elem(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a - a, f.zero());
            prop_assert_eq!(a + (-a), f.zero());
            if !a.is_zero() {
                prop_assert_eq!(a * a.inv().unwrap(), f.one());
                prop_assert_eq!(a.pow(q - 1), f.one());
            }
        }
    }
}
