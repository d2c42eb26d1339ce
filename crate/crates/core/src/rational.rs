//! Exact rationals over `i128`, always kept in lowest terms.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, LabError, Result};

/// A reduced fraction `num/den` with `den > 0` and `gcd(num, den) = 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i128,
    den: i128,
}

/// The lowest-terms representative used throughout the arc arithmetic.
pub type ReducedFraction = Rational;

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(invalid("zero denominator"));
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = n.checked_neg().ok_or(LabError::Overflow("rational sign"))?;
            d = d.checked_neg().ok_or(LabError::Overflow("rational sign"))?;
        }
        Ok(Rational { num: n, den: d })
    }

    /// Panicking constructor for literals and values known to be valid.
    pub fn frac(num: i128, den: i128) -> Self {
        Self::new(num, den).expect("valid fraction")
    }

    pub const fn from_int(n: i128) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        let int = self.floor();
        let rem = self.num - int * self.den;
        int as f64 + rem as f64 / self.den as f64
    }

    pub fn floor(&self) -> i128 {
        Integer::div_floor(&self.num, &self.den)
    }

    pub fn ceil(&self) -> i128 {
        -Integer::div_floor(&-self.num, &self.den)
    }

    /// Representative of `self mod 1` in `[0, 1)`.
    pub fn fract(&self) -> Self {
        Rational {
            num: self.num.mod_floor(&self.den),
            den: self.den,
        }
    }

    /// Representative of `self mod 1` in `[-1/2, 1/2)`.
    pub fn centered(&self) -> Self {
        let r = self.num.mod_floor(&self.den);
        if 2 * r >= self.den {
            Rational {
                num: r - self.den,
                den: self.den,
            }
        } else {
            Rational {
                num: r,
                den: self.den,
            }
        }
    }

    pub fn abs(&self) -> Self {
        Rational {
            num: self.num.abs(),
            den: self.den,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        Rational::new(self.den, self.num)
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        let g = self.den.gcd(&o.den);
        let (l, r) = (self.den / g, o.den / g);
        let n = self
            .num
            .checked_mul(r)
            .and_then(|a| o.num.checked_mul(l).and_then(|b| a.checked_add(b)))
            .ok_or(LabError::Overflow("rational add"))?;
        let d = self
            .den
            .checked_mul(r)
            .ok_or(LabError::Overflow("rational add"))?;
        Rational::new(n, d)
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        self.checked_add(&o.neg())
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        let g1 = self.num.gcd(&o.den).max(1);
        let g2 = o.num.gcd(&self.den).max(1);
        let n = (self.num / g1)
            .checked_mul(o.num / g2)
            .ok_or(LabError::Overflow("rational mul"))?;
        let d = (self.den / g2)
            .checked_mul(o.den / g1)
            .ok_or(LabError::Overflow("rational mul"))?;
        Rational::new(n, d)
    }

    pub fn checked_div(&self, o: &Self) -> Result<Self> {
        self.checked_mul(&o.recip()?)
    }

    /// `|self - a/q|` for an integer fraction, exactly.
    pub fn dist_to(&self, a: i128, q: i128) -> Result<Self> {
        Ok(self.checked_sub(&Rational::new(a, q)?)?.abs())
    }

    /// Distance on the circle `R/Z`.
    pub fn torus_dist(&self, o: &Self) -> Result<Self> {
        Ok(self.checked_sub(o)?.centered().abs())
    }
}

fn cmp_frac(mut a: i128, mut b: i128, mut c: i128, mut d: i128) -> Ordering {
    // a/b vs c/d with b, d > 0; falls back to continued-fraction comparison on overflow.
    let mut flip = false;
    loop {
        if let (Some(x), Some(y)) = (a.checked_mul(d), c.checked_mul(b)) {
            let o = x.cmp(&y);
            return if flip { o.reverse() } else { o };
        }
        let (fa, fc) = (Integer::div_floor(&a, &b), Integer::div_floor(&c, &d));
        if fa != fc {
            let o = fa.cmp(&fc);
            return if flip { o.reverse() } else { o };
        }
        let (ra, rc) = (a - fa * b, c - fc * d);
        match (ra == 0, rc == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => {
                return if flip {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            (false, true) => {
                return if flip {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            _ => {}
        }
        // ra/b vs rc/d in (0,1): compare reciprocals in reverse.
        (a, b, c, d) = (b, ra, d, rc);
        flip = !flip;
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Self) -> Ordering {
        cmp_frac(self.num, self.den, o.num, o.den)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, o: Rational) -> Rational {
        self.checked_add(&o).expect("rational overflow")
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, o: Rational) -> Rational {
        self.checked_sub(&o).expect("rational overflow")
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, o: Rational) -> Rational {
        self.checked_mul(&o).expect("rational overflow")
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n as i128)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |p: &str| {
            p.trim()
                .parse::<i128>()
                .map_err(|_| invalid(format!("not a rational: {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Rational::new(parse(n)?, parse(d)?),
            None => Ok(Rational::from_int(parse(s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lowest-terms representative of `num/den`.
pub fn reduce_fraction(num: i64, den: i64) -> Result<ReducedFraction> {
    Rational::new(num as i128, den as i128)
}

/// Closed interval `[lo, hi]` with exact endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn centered_at(c: Rational, radius: Rational) -> Self {
        Interval {
            lo: c - radius,
            hi: c + radius,
        }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn width(&self) -> Rational {
        self.hi - self.lo
    }
}
