use levelset_core::arith::{exact_gauss_sum, gcd_profile, LabeledDiff};
use levelset_core::rational::reduce_fraction;
use levelset_core::Rational;
use proptest::prelude::*;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lab(a: i64, b: i64, q: i64) -> LabeledDiff {
    LabeledDiff::new(a, b, q).unwrap()
}

/// A valid label with `q ≤ max_q`, either sign of `a` and `b`.
fn label(max_q: i64) -> impl Strategy<Value = LabeledDiff> {
    (1..=max_q)
        .prop_flat_map(|q| (Just(q), -(q - 1)..=(q - 1), -(q - 1)..=(q - 1)))
        .prop_filter_map("a must be a unit", |(q, a, b)| {
            (gcd(a, q) == 1).then_some(LabeledDiff { a, b, q })
        })
}

#[test]
fn reduce_fraction_examples() {
    assert_eq!(reduce_fraction(0, 5).unwrap(), Rational::frac(0, 1));
    let f = reduce_fraction(14, 30).unwrap();
    assert_eq!((f.numer(), f.denom()), (7, 15));
    let f = reduce_fraction(-4, -6).unwrap();
    assert_eq!((f.numer(), f.denom()), (2, 3));
    assert!(reduce_fraction(1, 0).is_err());
}

#[test]
fn profile_examples() {
    let p = gcd_profile(&lab(1, 1, 6), &lab(3, 1, 10)).unwrap();
    assert_eq!((p.d, p.m1, p.m2, p.p, p.f), (2, 3, 5, 2, 2));
    assert_eq!(p.t_sum, Rational::frac(7, 15));

    let p = gcd_profile(&lab(2, 1, 5), &lab(3, 4, 5)).unwrap();
    assert_eq!((p.d, p.m1, p.m2, p.p, p.f), (5, 1, 1, 5, 5));
    assert_eq!(p.t_sum, Rational::frac(1, 1));

    let p = gcd_profile(&lab(1, 1, 3), &lab(1, 1, 5)).unwrap();
    assert_eq!((p.d, p.p, p.f), (1, 1, 1));
    assert_eq!(p.t_sum, Rational::frac(8, 15));
}

#[test]
fn invalid_labels_are_rejected() {
    assert!(LabeledDiff::new(2, 0, 4).is_err());
    assert!(LabeledDiff::new(5, 0, 5).is_err());
    assert!(LabeledDiff::new(1, 7, 5).is_err());
    assert!(LabeledDiff::new(1, 0, 0).is_err());
    let bad = LabeledDiff { a: 3, b: 0, q: 6 };
    assert!(gcd_profile(&bad, &lab(1, 0, 5)).is_err());
}

#[test]
fn gauss_sum_magnitudes() {
    assert!((exact_gauss_sum(0, 1).unwrap() - 1.0).norm() < 1e-12);
    assert!((exact_gauss_sum(1, 5).unwrap().norm() - 5f64.sqrt()).abs() < 1e-10);
    assert!((exact_gauss_sum(1, 4).unwrap().norm() - 8f64.sqrt()).abs() < 1e-10);
    // Odd q gives √q, q ≡ 2 mod 4 gives 0.
    for q in [3i64, 7, 9, 15, 21] {
        assert!((exact_gauss_sum(2, q).unwrap().norm() - (q as f64).sqrt()).abs() < 1e-9);
    }
    assert!(exact_gauss_sum(1, 6).unwrap().norm() < 1e-9);
    assert!(exact_gauss_sum(2, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn profile_invariants(l1 in label(200), l2 in label(200)) {
        let p = gcd_profile(&l1, &l2).unwrap();
        prop_assert_eq!(p.d, gcd(l1.q, l2.q));
        prop_assert_eq!((l1.q, l2.q), (p.d * p.m1, p.d * p.m2));
        prop_assert_eq!(gcd(p.m1, p.m2), 1);
        prop_assert_eq!(p.d % p.p, 0);
        prop_assert_eq!(gcd(p.p, p.m1), 1);
        prop_assert_eq!(gcd(p.p, p.m2), 1);
        prop_assert_eq!(p.p % p.f, 0);

        // Sums re-expanded over q1 q2.
        let t = Rational::frac((l1.a * l2.q + l2.a * l1.q) as i128, (l1.q * l2.q) as i128);
        prop_assert_eq!(p.t_sum, t);
        prop_assert_eq!(p.t_sum.denom() as i64, p.d / p.p * p.m1 * p.m2);
        let x = Rational::frac((l1.b * l2.q + l2.b * l1.q) as i128, (l1.q * l2.q) as i128);
        prop_assert_eq!(p.x_sum(), x);
        prop_assert_eq!(p.x_sum_den, p.p / p.f * (p.d / p.p) * p.m1 * p.m2);
        prop_assert_eq!(gcd(p.x_sum_num, p.p / p.f), 1);
        if p.x_sum_num == 0 {
            prop_assert!(p.degenerate);
            prop_assert_eq!(p.f, p.p);
        }
        if p.d == 1 {
            prop_assert_eq!((p.p, p.f), (1, 1));
        }
    }

    #[test]
    fn profile_is_symmetric(l1 in label(120), l2 in label(120)) {
        let a = gcd_profile(&l1, &l2).unwrap();
        let b = gcd_profile(&l2, &l1).unwrap();
        prop_assert_eq!((a.d, a.p, a.f, a.t_sum, a.x_sum()), (b.d, b.p, b.f, b.t_sum, b.x_sum()));
        prop_assert_eq!((a.m1, a.m2), (b.m2, b.m1));
    }

    #[test]
    fn profile_survives_negation(l1 in label(120), l2 in label(120)) {
        let a = gcd_profile(&l1, &l2).unwrap();
        let b = gcd_profile(&l1.negate(), &l2.negate()).unwrap();
        prop_assert_eq!((a.d, a.p, a.f), (b.d, b.p, b.f));
        prop_assert_eq!(a.t_sum, -b.t_sum);
    }

    #[test]
    fn profile_depends_on_residues_only(l1 in label(120), l2 in label(120)) {
        // Swap a1 and b1 for the other representative of the same residue.
        let shift = |v: i64, q: i64| if v > 0 { v - q } else { v + q };
        let moved = LabeledDiff { a: shift(l1.a, l1.q), b: shift(l1.b, l1.q), q: l1.q };
        prop_assume!(moved.validate().is_ok());
        let a = gcd_profile(&l1, &l2).unwrap();
        let b = gcd_profile(&moved, &l2).unwrap();
        prop_assert_eq!((a.d, a.p, a.f), (b.d, b.p, b.f));
        prop_assert_eq!(a.t_sum.fract(), b.t_sum.fract());
    }
}
