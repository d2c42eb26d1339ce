mod common;

use std::collections::BTreeMap;

use common::{gen, r, units};
use levelset_core::arcs::DyadicLevel;
use levelset_core::constructions::build_sqrt_admissible;
use levelset_core::counting::{
    b_witness_set, box_census, count_l_separated, count_system_solutions, enumerate_admissible,
    lemma_bound, AdmissibleQuery, BoxVariants, SystemQuery,
};
use levelset_core::{LabError, Rational};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn as_map(qy: &AdmissibleQuery) -> BTreeMap<(u64, u64), Vec<common::OracleWitness>> {
    enumerate_admissible(qy)
        .unwrap()
        .into_iter()
        .map(|p| {
            let ws = p
                .witnesses
                .iter()
                .map(|w| (w.a1, w.a2, w.b1, w.b2, w.p, w.f))
                .collect();
            ((p.q1, p.q2), ws)
        })
        .collect()
}

fn all_keys() -> BoxVariants {
    BoxVariants { keys: true }
}

#[test]
fn far_target_has_no_admissible_pairs() {
    let level = DyadicLevel::new(4, 2).unwrap();
    let n = 1024u64;
    let base = AdmissibleQuery::new(Rational::ZERO, Rational::ZERO, n, level, 1, 1, 1).unwrap();
    let w = base.t_window();
    let sums: Vec<Rational> = (4..8i64)
        .flat_map(|q1| {
            (4..8i64).flat_map(move |q2| {
                units(q1)
                    .into_iter()
                    .flat_map(move |a1| units(q2).into_iter().map(move |a2| r(a1, q1) + r(a2, q2)))
            })
        })
        .collect();
    let t = (0..4096)
        .map(|k| r(k, 4096))
        .find(|t| sums.iter().all(|s| (*s - *t).abs() > w))
        .expect("a target away from every window");
    for (d, p, f) in [(1, 1, 1), (2, 1, 1), (4, 2, 1), (4, 4, 4)] {
        let qy = AdmissibleQuery {
            t,
            d_block: d,
            p_block: p,
            f_block: f,
            ..base
        };
        assert!(enumerate_admissible(&qy).unwrap().is_empty());
        assert_eq!(count_l_separated(&qy).unwrap().count, 0);
    }
}

#[test]
fn square_root_instance_is_found() {
    let w = build_sqrt_admissible(11, 13, 17, 1, 1, 1, 1).unwrap();
    assert_eq!((w.profile.d, w.profile.p, w.profile.f), (17, 17, 17));
    assert_eq!(w.t, r(1, 13) - r(1, 11));
    let level = DyadicLevel::new(128, 0).unwrap();
    let qy = AdmissibleQuery::new(w.x, w.t, 1024, level, 16, 16, 16).unwrap();
    let pairs = enumerate_admissible(&qy).unwrap();
    let hit = pairs
        .iter()
        .find(|p| (p.q1, p.q2) == (187, 221))
        .expect("(187, 221) is admissible");
    assert_eq!((hit.d, hit.p), (17, 17));
    assert!(hit
        .witnesses
        .iter()
        .any(|x| (x.a1, x.a2) == (w.l1.a, w.l2.a) && (x.b1, x.b2) == (w.l1.b, w.l2.b)));

    // Both primes 17 and 19 in [16, 32) give a pair (11 r3, 13 r3) in the block.
    let rep = count_l_separated(&qy).unwrap();
    assert!(rep.count >= 2, "{rep:?}");
    assert!(pairs.iter().any(|p| (p.q1, p.q2) == (209, 247)));
}

#[test]
fn fixed_denominator_b_witnesses() {
    // q1 = q2 = 7 with x = 0: every b1 pairs with b2 = -b1.
    let level = DyadicLevel::new(4, 0).unwrap();
    let qy =
        AdmissibleQuery::new(Rational::ZERO, r(1, 7) + r(2, 7), 1 << 10, level, 4, 1, 1).unwrap();
    let set = b_witness_set(7, 7, &qy).unwrap();
    assert!(set.len() < 7 * 2);
    let oracle = common::admissible(&qy);
    let want: std::collections::BTreeSet<i64> = oracle[&(7, 7)].iter().map(|w| w.2).collect();
    assert_eq!(set, want);
    assert!(set.contains(&0) && set.contains(&3) && set.contains(&-3));
    assert!(matches!(
        b_witness_set(5, 6, &qy),
        Err(LabError::Precondition(_))
    ));
}

#[test]
fn census_of_the_unit_block() {
    let g = box_census(16, DyadicLevel::new(1, 0).unwrap(), all_keys()).unwrap();
    assert_eq!(g.aggregates.tuples, 1);
    assert_eq!(g.n_tuples.iter().map(|&v| v as u64).sum::<u64>(), 1);
    assert_eq!(g.n_tuples[0], 1);
}

#[test]
fn census_totals_and_variant_order() {
    for (q, l, n) in [
        (2u64, 0u32, 8u64),
        (4, 1, 16),
        (8, 0, 64),
        (8, 2, 32),
        (16, 1, 64),
    ] {
        let level = DyadicLevel::new(q, l).unwrap();
        let g = box_census(n, level, all_keys()).unwrap();
        let per_q = |q: i64| units(q).len() as u64 * (2 * q - 1) as u64;
        let side: u64 = (q as i64..2 * q as i64).map(per_q).sum();
        assert_eq!(g.aggregates.tuples, side * side, "Q = {q}");
        assert_eq!(
            g.n_tuples.iter().map(|&v| v as u64).sum::<u64>(),
            side * side
        );
        for i in 0..g.n_tuples.len() {
            assert!(g.n_tuples_star[i] <= g.n_tuples[i]);
            assert!(g.n_keys[i] <= g.n_tuples[i]);
            assert!(g.n_keys_star[i] <= g.n_keys[i]);
            assert!(g.n_sep[i] <= g.n_keys[i]);
            assert_eq!(g.n_keys[i] == 0, g.n_tuples[i] == 0);
        }
    }
}

#[test]
fn census_boxes_locate_their_corners() {
    let level = DyadicLevel::new(4, 1).unwrap();
    let g = box_census(16, level, BoxVariants { keys: false }).unwrap();
    for idx in [0usize, 7, 100, g.n_tuples.len() - 1] {
        let (x, t) = g.box_corner(idx);
        assert_eq!(g.box_index(x, t), idx);
    }
}

#[test]
fn system_rejects_coincident_targets() {
    let level = DyadicLevel::new(8, 1).unwrap();
    let qy = SystemQuery::new(r(1, 3), r(1, 3), 1024, level, 4);
    assert!(matches!(
        count_system_solutions(&qy),
        Err(LabError::Precondition(_))
    ));
    let qy = SystemQuery::new(r(1, 3), r(1, 3) + r(1, 1 << 20), 1024, level, 4);
    assert!(matches!(
        count_system_solutions(&qy),
        Err(LabError::Precondition(_))
    ));
}

#[test]
fn system_with_empty_windows_counts_zero() {
    // No difference a1/q1 - a2/q2 with q ∈ [2, 4) lies within 1/4096 of 1/2 + 1/97.
    let level = DyadicLevel::new(2, 0).unwrap();
    let qy = SystemQuery::new(r(1, 2) + r(1, 97), r(1, 97), 2048, level, 8);
    assert_eq!(common::system_nested(&qy), 0);
    assert_eq!(count_system_solutions(&qy).unwrap(), 0);
}

#[test]
fn generic_system_median_stays_small() {
    let n = 1024u64;
    let level = DyadicLevel::new(32, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = Vec::new();
    while counts.len() < 100 {
        use rand::Rng;
        let t = r(rng.gen_range(0..(n * n) as i64), (n * n) as i64);
        let tp = r(rng.gen_range(0..(n * n) as i64), (n * n) as i64);
        let qy = SystemQuery::new(t, tp, n, level, 4);
        if qy.validate().is_err() {
            continue;
        }
        counts.push(count_system_solutions(&qy).unwrap());
    }
    counts.sort_unstable();
    let median = counts[50] as f64;
    let bound = 16.0 * (1.0 + 32f64.powi(3) / (8.0 * n as f64));
    assert!(median <= bound, "median {median} > {bound}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn admissible_matches_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qy = gen::admissible(&mut rng, 16, 1 << 10);
        let got = as_map(&qy);
        prop_assert_eq!(&got, &common::admissible(&qy));
        for pair in enumerate_admissible(&qy).unwrap() {
            prop_assert!(pair.p_invariant, "p varies on {:?}", (pair.q1, pair.q2));
            prop_assert_eq!(pair.d, num_integer::gcd(pair.q1, pair.q2));
            prop_assert!(pair.p >= qy.p_block && pair.p < 2 * qy.p_block);
            let bs = b_witness_set(pair.q1, pair.q2, &qy).unwrap();
            let proj: std::collections::BTreeSet<i64> = pair.witnesses.iter().map(|w| w.b1).collect();
            prop_assert_eq!(bs, proj);
        }
    }

    #[test]
    fn widening_windows_keeps_every_pair(seed in any::<u64>(), grow_t in 1i128..4, grow_x in 1i128..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qy = gen::admissible(&mut rng, 32, 1 << 12);
        let wide = qy
            .with_constants(qy.c_t * Rational::from_int(grow_t), qy.c_x * Rational::from_int(grow_x))
            .unwrap();
        let (small, big) = (as_map(&qy), as_map(&wide));
        for (k, ws) in &small {
            let bigger = big.get(k);
            prop_assert!(bigger.is_some(), "pair {:?} lost", k);
            let bigger = bigger.unwrap();
            prop_assert!(ws.iter().all(|w| bigger.binary_search(w).is_ok()));
        }
    }

    #[test]
    fn admissible_count_within_lemma_budget(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1u64 << 12;
        let qy = gen::admissible(&mut rng, 64, n);
        let count = enumerate_admissible(&qy).unwrap().len() as f64;
        let budget = 64.0 * (n as f64).log2().powi(3);
        prop_assert!(count / lemma_bound(&qy) <= budget);
    }

    #[test]
    fn system_matches_oracles(seed in any::<u64>(), with_x in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_q = if with_x { 8 } else { 16 };
        let qy = gen::system(&mut rng, max_q, 1 << 10, with_x);
        let got = count_system_solutions(&qy).unwrap();
        prop_assert_eq!(got, common::system(&qy));
        if qy.level.q_block <= 4 {
            prop_assert_eq!(got, common::system_nested(&qy));
        }
    }
}
