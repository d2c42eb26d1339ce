//! Integer machinery behind the difference labels: gcd profiles, Gauss sums,
//! totients, primes and modular inverses.

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::rational::{Rational, ReducedFraction};

/// Label `(a, b, q)` attached to a difference of two configuration points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledDiff {
    pub a: i64,
    pub b: i64,
    pub q: i64,
}

impl LabeledDiff {
    pub fn new(a: i64, b: i64, q: i64) -> Result<Self> {
        let l = LabeledDiff { a, b, q };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(invalid(format!("label q = {} is not positive", self.q)));
        }
        if self.a.abs() > self.q - 1 {
            return Err(invalid(format!(
                "label |a| = {} exceeds q - 1 = {}",
                self.a.abs(),
                self.q - 1
            )));
        }
        if self.b.abs() > self.q - 1 {
            return Err(invalid(format!(
                "label |b| = {} exceeds q - 1 = {}",
                self.b.abs(),
                self.q - 1
            )));
        }
        if self.a.gcd(&self.q) != 1 {
            return Err(invalid(format!(
                "gcd(a, q) = gcd({}, {}) != 1",
                self.a, self.q
            )));
        }
        Ok(())
    }

    pub fn negate(&self) -> Self {
        LabeledDiff {
            a: -self.a,
            b: -self.b,
            q: self.q,
        }
    }

    pub fn t_frac(&self) -> Rational {
        Rational::frac(self.a as i128, self.q as i128)
    }

    pub fn x_frac(&self) -> Rational {
        Rational::frac(self.b as i128, self.q as i128)
    }
}

/// The invariants `d, m1, m2, p, f` of a pair of labels together with the
/// reduced fraction sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcdProfile {
    pub d: i64,
    pub m1: i64,
    pub m2: i64,
    pub p: i64,
    pub f: i64,
    pub t_sum: ReducedFraction,
    /// Numerator `B` of `b1/q1 + b2/q2 = B / x_sum_den`, with `gcd(B, p/f) = 1`.
    pub x_sum_num: i64,
    /// `(p/f)·(d/p)·m1·m2`.
    pub x_sum_den: i64,
    /// Set when `B = 0`, in which case `f = p`.
    pub degenerate: bool,
}

impl GcdProfile {
    pub fn x_sum(&self) -> Rational {
        Rational::frac(self.x_sum_num as i128, self.x_sum_den as i128)
    }

    /// Dyadic blocks `(D, P, F)` containing `(d, p, f)`.
    pub fn dyadic_key(&self) -> (u64, u64, u64) {
        (
            dyadic_block(self.d as u64),
            dyadic_block(self.p as u64),
            dyadic_block(self.f as u64),
        )
    }
}

fn ck(v: Option<i128>) -> Result<i128> {
    v.ok_or(LabError::Overflow("gcd profile"))
}

/// Integer core of the profile: `p = gcd(s, d m1 m2)` for `s = a1 m2 + a2 m1`.
#[inline]
pub fn p_of(s: i128, dm1m2: i128) -> i128 {
    if s == 0 {
        dm1m2
    } else {
        s.gcd(&dm1m2)
    }
}

/// `f = gcd(u, p)` for `u = b1 m2 + b2 m1`, with `f = p` when `u = 0`.
#[inline]
pub fn f_of(u: i128, p: i128) -> i128 {
    if u == 0 {
        p
    } else {
        u.gcd(&p)
    }
}

/// Computes `d, p, f` and the reduced sums of two labels.
pub fn gcd_profile(l1: &LabeledDiff, l2: &LabeledDiff) -> Result<GcdProfile> {
    l1.validate()
        .map_err(|e| invalid(format!("first label: {e}")))?;
    l2.validate()
        .map_err(|e| invalid(format!("second label: {e}")))?;
    let (q1, q2) = (l1.q as i128, l2.q as i128);
    let d = q1.gcd(&q2);
    let (m1, m2) = (q1 / d, q2 / d);
    let s = ck((l1.a as i128).checked_mul(m2).and_then(|x| {
        (l2.a as i128)
            .checked_mul(m1)
            .and_then(|y| x.checked_add(y))
    }))?;
    let u = ck((l1.b as i128).checked_mul(m2).and_then(|x| {
        (l2.b as i128)
            .checked_mul(m1)
            .and_then(|y| x.checked_add(y))
    }))?;
    let den = ck(d.checked_mul(m1).and_then(|x| x.checked_mul(m2)))?;
    let p = p_of(s, den);
    let f = f_of(u, p);
    let t_sum = Rational::new(s / p, den / p)?;
    let x_sum_num = u / f;
    let x_sum_den = den / f;
    let narrow = |v: i128| i64::try_from(v).map_err(|_| LabError::Overflow("gcd profile"));
    Ok(GcdProfile {
        d: narrow(d)?,
        m1: narrow(m1)?,
        m2: narrow(m2)?,
        p: narrow(p)?,
        f: narrow(f)?,
        t_sum,
        x_sum_num: narrow(x_sum_num)?,
        x_sum_den: narrow(x_sum_den)?,
        degenerate: u == 0,
    })
}

/// `e(θ) = exp(2πiθ)`.
#[inline]
pub fn e(theta: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * theta).sin_cos();
    Complex64::new(c, s)
}

/// Complete Gauss sum `Σ_{n=0}^{q-1} e(a n²/q)` by direct summation.
pub fn exact_gauss_sum(a: i64, q: i64) -> Result<Complex64> {
    if q < 1 {
        return Err(invalid("q must be positive"));
    }
    if a.gcd(&q) != 1 {
        return Err(invalid(format!("gcd({a}, {q}) != 1")));
    }
    let (a, q) = (a as i128, q as i128);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..q {
        let r = (a * n * n).rem_euclid(q);
        acc += e(r as f64 / q as f64);
    }
    Ok(acc)
}

/// Largest power of two not exceeding `v` (`v ≥ 1`).
pub fn dyadic_block(v: u64) -> u64 {
    assert!(v >= 1, "dyadic block of 0");
    1u64 << (63 - v.leading_zeros())
}

pub fn is_power_of_two(v: u64) -> bool {
    v != 0 && v & (v - 1) == 0
}

pub fn totient(n: u64) -> u64 {
    let mut n = n;
    let mut out = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Primes in `[lo, hi)` in ascending order.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..hi).filter(|&n| is_prime(n)).collect()
}

/// Inverse of `a` modulo `m` (`m ≥ 1`), if it exists. Modulo 1 the inverse is 0.
pub fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let g = a.extended_gcd(&m);
    (g.gcd == 1).then(|| g.x.rem_euclid(m))
}

/// Reduced residues modulo `q` in the signed range `|a| ≤ q - 1`.
/// For `q = 1` this is `{0}`.
pub fn signed_units(q: i64) -> Vec<i64> {
    if q == 1 {
        return vec![0];
    }
    (-(q - 1)..=q - 1).filter(|a| a.gcd(&q) == 1).collect()
}

/// Admissible numerators `A(q)`: `{0}` for `q = 1`, else `1 ≤ a ≤ q-1` coprime to `q`.
pub fn unit_numerators(q: u64) -> Vec<u64> {
    if q == 1 {
        return vec![0];
    }
    (1..q).filter(|a| a.gcd(&q) == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(a: i64, b: i64, q: i64) -> LabeledDiff {
        LabeledDiff::new(a, b, q).unwrap()
    }

    #[test]
    fn profile_of_six_and_ten() {
        let g = gcd_profile(&lab(1, 1, 6), &lab(3, 1, 10)).unwrap();
        assert_eq!((g.d, g.m1, g.m2, g.p, g.f), (2, 3, 5, 2, 2));
        assert_eq!(g.t_sum, Rational::frac(1, 6) + Rational::frac(3, 10));
        assert_eq!(g.t_sum.denom(), 15);
        assert_eq!(g.x_sum(), Rational::frac(1, 6) + Rational::frac(1, 10));
    }

    #[test]
    fn cancelling_labels_force_p_equal_d() {
        let g = gcd_profile(&lab(2, 1, 5), &lab(3, 4, 5)).unwrap();
        assert_eq!((g.d, g.p, g.f), (5, 5, 5));
        assert_eq!(g.t_sum, Rational::ONE);
    }

    #[test]
    fn coprime_denominators_collapse() {
        let g = gcd_profile(&lab(1, 1, 3), &lab(1, 1, 5)).unwrap();
        assert_eq!((g.d, g.p, g.f), (1, 1, 1));
        assert_eq!(g.t_sum, Rational::frac(8, 15));
    }

    #[test]
    fn degenerate_x_sum_sets_f_to_p() {
        let g = gcd_profile(&lab(1, 2, 6), &lab(1, -3, 9)).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.f, g.p);
        assert_eq!(g.x_sum_num, 0);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(LabeledDiff::new(2, 0, 4).is_err());
        assert!(LabeledDiff::new(1, 4, 4).is_err());
        assert!(LabeledDiff::new(0, 0, 0).is_err());
        let bad = LabeledDiff { a: 2, b: 0, q: 4 };
        let err = gcd_profile(&bad, &lab(1, 0, 3)).unwrap_err();
        assert!(err.to_string().contains("gcd"));
    }

    #[test]
    fn gauss_sum_magnitudes() {
        assert!((exact_gauss_sum(0, 1).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((exact_gauss_sum(1, 5).unwrap().norm() - 5f64.sqrt()).abs() < 1e-10);
        assert!((exact_gauss_sum(1, 4).unwrap().norm() - 8f64.sqrt()).abs() < 1e-10);
        assert!(exact_gauss_sum(2, 4).is_err());
    }

    #[test]
    fn totients_and_primes() {
        let phis: Vec<u64> = (1..=10).map(totient).collect();
        assert_eq!(phis, vec![1, 1, 2, 2, 4, 2, 6, 4, 6, 4]);
        assert_eq!(primes_in(8, 16), vec![11, 13]);
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(2, 4), None);
        assert_eq!(dyadic_block(17), 16);
        assert_eq!(dyadic_block(1), 1);
    }
}
