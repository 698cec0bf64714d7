//! Exact rational with an inline i64 fast path, used inside the simplex tableau.
//!
//! Values stay in lowest terms with a positive denominator. Any operation whose
//! result does not fit in i64 falls back to [`BigRational`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

#[derive(Clone, Debug)]
pub(crate) enum Q {
    S(i64, i64),
    B(BigRational),
}

fn gcd128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Q {
    pub(crate) const ZERO: Q = Q::S(0, 1);
    pub(crate) const ONE: Q = Q::S(1, 1);

    fn from_i128(n: i128, d: i128) -> Q {
        debug_assert!(d != 0);
        let (mut n, mut d) = if d < 0 { (-n, -d) } else { (n, d) };
        if d != 1 {
            let g = gcd128(n, d);
            if g > 1 {
                n /= g;
                d /= g;
            }
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Q::S(n, d),
            _ => Q::B(BigRational::new(BigInt::from(n), BigInt::from(d))),
        }
    }

    fn from_big(r: BigRational) -> Q {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Q::S(n, d),
            _ => Q::B(r),
        }
    }

    pub(crate) fn from_rational(r: &BigRational) -> Q {
        Q::from_big(r.clone())
    }

    pub(crate) fn to_rational(&self) -> BigRational {
        match self {
            Q::S(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Q::B(r) => r.clone(),
        }
    }

    fn big(&self) -> BigRational {
        self.to_rational()
    }

    pub(crate) fn is_zero(&self) -> bool {
        match self {
            Q::S(n, _) => *n == 0,
            Q::B(r) => r.is_zero(),
        }
    }

    pub(crate) fn is_one(&self) -> bool {
        match self {
            Q::S(n, d) => *n == 1 && *d == 1,
            Q::B(r) => r.is_one(),
        }
    }

    pub(crate) fn is_positive(&self) -> bool {
        match self {
            Q::S(n, _) => *n > 0,
            Q::B(r) => r.is_positive(),
        }
    }

    pub(crate) fn neg(&self) -> Q {
        match self {
            Q::S(n, d) if *n != i64::MIN => Q::S(-n, *d),
            _ => Q::from_big(-self.big()),
        }
    }

    pub(crate) fn add(&self, o: &Q) -> Q {
        if let (Q::S(a, b), Q::S(c, d)) = (self, o) {
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if b == d {
                return Q::from_i128(a + c, b);
            }
            if let Some(n) = (a * d).checked_add(c * b) {
                return Q::from_i128(n, b * d);
            }
        }
        Q::from_big(self.big() + o.big())
    }

    pub(crate) fn sub(&self, o: &Q) -> Q {
        self.add(&o.neg())
    }

    pub(crate) fn mul(&self, o: &Q) -> Q {
        if let (Q::S(a, b), Q::S(c, d)) = (self, o) {
            return Q::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128);
        }
        Q::from_big(self.big() * o.big())
    }

    pub(crate) fn div(&self, o: &Q) -> Q {
        if let (Q::S(a, b), Q::S(c, d)) = (self, o) {
            return Q::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128);
        }
        Q::from_big(self.big() / o.big())
    }

    /// self − f·p
    pub(crate) fn sub_mul(&mut self, f: &Q, p: &Q) {
        if let (Q::S(a, b), Q::S(fc, fd), Q::S(pc, pd)) = (&*self, f, p) {
            if *b == 1 && *fd == 1 && *pd == 1 {
                if let Some(v) = (*fc).checked_mul(*pc).and_then(|x| a.checked_sub(x)) {
                    *self = Q::S(v, 1);
                    return;
                }
            }
        }
        *self = self.sub(&f.mul(p));
    }

    pub(crate) fn cmp(&self, o: &Q) -> Ordering {
        if let (Q::S(a, b), Q::S(c, d)) = (self, o) {
            return (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128));
        }
        self.big().cmp(&o.big())
    }
}

impl PartialEq for Q {
    fn eq(&self, o: &Q) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    proptest! {
        #[test]
        fn agrees_with_bigrational(a in any::<i64>(), b in 1..i64::MAX, c in any::<i64>(), d in 1..i64::MAX) {
            let (x, y) = (r(a, b), r(c, d));
            let (qx, qy) = (Q::from_rational(&x), Q::from_rational(&y));
            prop_assert_eq!(qx.add(&qy).to_rational(), &x + &y);
            prop_assert_eq!(qx.sub(&qy).to_rational(), &x - &y);
            prop_assert_eq!(qx.mul(&qy).to_rational(), &x * &y);
            if !y.is_zero() {
                prop_assert_eq!(qx.div(&qy).to_rational(), &x / &y);
            }
            let mut z = qx.clone();
            z.sub_mul(&qy, &qx);
            prop_assert_eq!(z.to_rational(), &x - &y * &x);
            prop_assert_eq!(qx.cmp(&qy), x.cmp(&y));
        }

        #[test]
        fn small_integers(a in -1000i64..1000, c in -1000i64..1000, e in -1000i64..1000) {
            let mut z = Q::S(a, 1);
            z.sub_mul(&Q::S(c, 1), &Q::S(e, 1));
            prop_assert_eq!(z.to_rational(), r(a - c * e, 1));
        }
    }

    #[test]
    fn overflow_falls_back() {
        let x = Q::S(i64::MAX, 1);
        let y = x.add(&x);
        assert!(matches!(y, Q::B(_)));
        assert_eq!(
            y.to_rational(),
            r(i64::MAX, 1) * BigRational::from_integer(BigInt::from(2))
        );
        assert_eq!(Q::S(i64::MIN, 1).neg().to_rational(), -r(i64::MIN, 1));
    }
}
