//! Exact nonnegative rationals over arbitrary-precision integers.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// A nonnegative rational number kept in lowest terms.
///
/// Every probability, abundance and density in this crate is a `Rational`, so
/// identities between different computation routes can be checked with `==`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(Ratio<BigUint>);

impl Rational {
    /// Builds `num / den`, reducing to lowest terms. Panics if `den` is zero.
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Self {
        let den = den.into();
        assert!(!den.is_zero(), "rational with zero denominator");
        Rational(Ratio::new(num.into(), den))
    }

    pub fn zero() -> Self {
        Rational(Ratio::zero())
    }

    pub fn one() -> Self {
        Rational(Ratio::one())
    }

    pub fn from_integer(n: impl Into<BigUint>) -> Self {
        Rational(Ratio::from_integer(n.into()))
    }

    pub fn numer(&self) -> &BigUint {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigUint {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    /// `self - rhs`, or `None` when the result would be negative.
    pub fn checked_sub(&self, rhs: &Rational) -> Option<Rational> {
        if self < rhs {
            None
        } else {
            Some(Rational(&self.0 - &rhs.0))
        }
    }

    /// `|self - rhs|`.
    pub fn abs_diff(&self, rhs: &Rational) -> Rational {
        match self.cmp(rhs) {
            Ordering::Less => Rational(&rhs.0 - &self.0),
            _ => Rational(&self.0 - &rhs.0),
        }
    }

    pub fn pow(&self, exp: u32) -> Rational {
        Rational(Ratio::new_raw(
            self.numer().pow(exp),
            self.denom().pow(exp),
        ))
    }

    /// Nearest `f64`. Correct for magnitudes far outside the `f64` range of
    /// the numerator and denominator taken separately.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.0.to_f64().unwrap_or_else(|| {
            // Fall back to an exponent-shifted quotient of the top bits.
            let nb = self.numer().bits() as i64;
            let db = self.denom().bits() as i64;
            let shift_n = (nb - 64).max(0) as u64;
            let shift_d = (db - 64).max(0) as u64;
            let n = (self.numer() >> shift_n).to_f64().unwrap_or(f64::INFINITY);
            let d = (self.denom() >> shift_d).to_f64().unwrap_or(f64::INFINITY);
            (n / d) * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
        })
    }

    /// Sums `weight / den` over the given terms with a single common
    /// denominator built from the prime factorisation of the denominators.
    ///
    /// Pairwise `Ratio` addition reduces after every step, which is
    /// quadratic in the size of the running denominator; this is linear per
    /// term once the lcm is known.
    pub fn sum_over_small_denominators(terms: &[(BigUint, u64)]) -> Rational {
        let lcm = lcm_of_small(terms.iter().map(|(_, d)| *d));
        let mut num = BigUint::zero();
        for (weight, den) in terms {
            if weight.is_zero() {
                continue;
            }
            num += weight * (&lcm / *den);
        }
        Rational::new(num, lcm)
    }
}

/// Least common multiple of a list of positive `u64` values, computed from
/// their factorisations so that the big integer is only ever multiplied by
/// machine words.
fn lcm_of_small(dens: impl Iterator<Item = u64>) -> BigUint {
    use std::collections::BTreeMap;
    let mut max_power: BTreeMap<u64, u32> = BTreeMap::new();
    for d in dens {
        assert!(d > 0, "zero denominator");
        for (p, e) in factorize(d) {
            let slot = max_power.entry(p).or_insert(0);
            *slot = (*slot).max(e);
        }
    }
    let mut lcm = BigUint::one();
    let mut acc: u64 = 1;
    for (p, e) in max_power {
        for _ in 0..e {
            match acc.checked_mul(p) {
                Some(v) => acc = v,
                None => {
                    lcm *= acc;
                    acc = p;
                }
            }
        }
    }
    lcm * acc
}

fn factorize(mut d: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= d {
        if d.is_multiple_of(p) {
            let mut e = 0;
            while d.is_multiple_of(p) {
                d /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if d > 1 {
        out.push((d, 1));
    }
    out
}

/// `log2` of a big integer: bit length plus the fractional part taken from
/// the top 64 bits.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 bits after shift") as f64;
    shift as f64 + top.log2()
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigUint> for Rational {
    fn from(n: BigUint) -> Self {
        Rational::from_integer(n)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Mul, mul);

impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(&self.0 / &rhs.0)
    }
}

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

/// Panics on a negative result; use [`Rational::checked_sub`] when the sign
/// is not known in advance.
impl Sub<&Rational> for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        self.checked_sub(rhs)
            .expect("rational subtraction went negative")
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Serialises as `{"num": "...", "den": "...", "approx": f64}`; big integers
/// are decimal strings.
impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Rational", 3)?;
        st.serialize_field("num", &self.numer().to_string())?;
        st.serialize_field("den", &self.denom().to_string())?;
        st.serialize_field("approx", &self.to_f64())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowest_terms() {
        let r = Rational::new(6u32, 8u32);
        assert_eq!(r.numer(), &BigUint::from(3u32));
        assert_eq!(r.denom(), &BigUint::from(4u32));
        assert_eq!(r.to_string(), "3/4");
        assert_eq!(Rational::new(4u32, 2u32).to_string(), "2");
    }

    #[test]
    #[should_panic]
    fn zero_denominator_panics() {
        let _ = Rational::new(1u32, 0u32);
    }

    #[test]
    fn checked_sub_refuses_negative() {
        let a = Rational::new(1u32, 3u32);
        let b = Rational::new(1u32, 2u32);
        assert!(a.checked_sub(&b).is_none());
        assert_eq!(b.checked_sub(&a), Some(Rational::new(1u32, 6u32)));
        assert_eq!(a.abs_diff(&b), Rational::new(1u32, 6u32));
    }

    #[test]
    fn huge_values_convert_to_f64() {
        let big = BigUint::one() << 5000u32;
        let r = Rational::new(big.clone() * 3u32, big << 1u32);
        assert!((r.to_f64() - 1.5).abs() < 1e-15);
        let tiny = Rational::new(1u32, BigUint::one() << 2000u32);
        assert_eq!(tiny.to_f64(), 0.0);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(Rational::new(4u32, 9u32)).unwrap();
        assert_eq!(v["num"], "4");
        assert_eq!(v["den"], "9");
        assert!((v["approx"].as_f64().unwrap() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(97), vec![(97, 1)]);
    }

    proptest! {
        #[test]
        fn small_denominator_sum_matches_pairwise(
            terms in prop::collection::vec((0u64..1_000_000, 1u64..5_000), 0..60)
        ) {
            let big: Vec<(BigUint, u64)> =
                terms.iter().map(|&(w, d)| (BigUint::from(w), d)).collect();
            let fast = Rational::sum_over_small_denominators(&big);
            let slow: Rational = terms.iter().map(|&(w, d)| Rational::new(w, d)).sum();
            prop_assert_eq!(fast, slow);
        }
    }
}
