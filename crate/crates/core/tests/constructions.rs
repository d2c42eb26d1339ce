use levelset_core::arcs::DyadicLevel;
use levelset_core::arith::{is_prime, primes_in};
use levelset_core::constructions::{
    build_bipartite, build_enemies, build_fixed_denominator, build_prime_reciprocal,
    build_prime_reciprocal_modified, build_random_baseline, build_sharp_c1, build_sqrt_admissible,
    random_density, Construction,
};
use levelset_core::graph::check_separation;
use levelset_core::{LabError, Rational};

fn all_small() -> Vec<Construction> {
    vec![
        build_sharp_c1(1 << 12, 13, 6, 2).unwrap(),
        build_fixed_denominator(5, 1024, 2).unwrap(),
        build_fixed_denominator(31, 4096, 3).unwrap(),
        build_prime_reciprocal(64, 1 << 14, 0).unwrap(),
        build_prime_reciprocal_modified(64, 5, 1 << 14, 0).unwrap(),
        build_bipartite(4, 8, 1 << 12, 0).unwrap(),
        build_random_baseline(128, 1024, DyadicLevel::new(8, 2).unwrap(), 9).unwrap(),
    ]
}

#[test]
fn every_construction_is_separated_and_serializable() {
    for c in all_small() {
        check_separation(&c.points, c.n).unwrap();
        c.level.validate(c.n).unwrap();
        assert!(
            c.spec.predicted.iter().all(|p| !p.source.is_empty()),
            "{:?}",
            c.spec.kind
        );
        let json = serde_json::to_string(&c).unwrap();
        let back: Construction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}

#[test]
fn constructions_are_deterministic() {
    assert_eq!(all_small(), all_small());
    let lvl = DyadicLevel::new(8, 2).unwrap();
    let a = build_random_baseline(64, 1024, lvl, 1).unwrap();
    let b = build_random_baseline(64, 1024, lvl, 2).unwrap();
    assert_ne!(a.points, b.points);
}

#[test]
fn sharp_example_size_and_density() {
    // M = 2^{l/2} leaves J = 1.
    assert!(matches!(
        build_sharp_c1(1 << 12, 13, 6, 8),
        Err(LabError::Infeasible(_))
    ));
    let c = build_sharp_c1(1 << 12, 13, 6, 2).unwrap();
    let predicted = c.spec.prediction("R").unwrap();
    assert_eq!(predicted, 128.0);
    let r = c.r() as f64;
    assert!(r >= predicted / 2.0 && r <= predicted * 2.0, "R = {r}");
    let g = c.graph().unwrap();
    let pairs = r * (r - 1.0) / 2.0;
    let j = c.spec.parameters["J"] as f64;
    assert!(
        g.edge_count() as f64 / pairs >= 1.0 / (2.0 * j),
        "{} edges",
        g.edge_count()
    );
}

#[test]
fn enemies_family_sizes() {
    // r = 1 and q near the block size: the single denominator 2q gives φ(2q) = 30 fractions.
    let f = build_enemies(4096, 32, 31, 1, 1, 1).unwrap();
    assert_eq!(f.members.len(), 30);
    assert!(f.members.iter().all(|m| m.q1 == 62));
    f.verify().unwrap();

    let f = build_enemies(4096, 32, 4, 2, 1, 1).unwrap();
    assert!(f.members.len() as f64 >= 32.0 * 32.0 / 8.0 / (8.0 * 5.0));
    let gap = f.min_gap.unwrap();
    assert!(gap >= Rational::frac(8, 4 * 32 * 32) && gap >= Rational::frac(1, 4096));
    assert_eq!((f.x, f.t), (Rational::frac(1, 8), Rational::frac(1, 4)));

    assert!(build_enemies(4096, 32, 4, 16, 1, 1).is_err());
    assert!(build_enemies(16, 32, 4, 2, 1, 1).is_err());
}

#[test]
fn fixed_denominator_five() {
    let c = build_fixed_denominator(5, 1024, 2).unwrap();
    assert_eq!(c.r(), 9);
    let g = c.graph().unwrap();
    let mut want = 0;
    for u in 0..9i64 {
        for v in u + 1..9 {
            let joined = (v - u) % 5 != 0;
            assert_eq!(
                g.graph.has_edge(u as usize, v as usize),
                joined,
                "({u}, {v})"
            );
            want += joined as u64;
        }
    }
    assert_eq!(g.edge_count(), want);
    for q in [5u64, 7, 13, 31] {
        let g = build_fixed_denominator(q, 4096, 1)
            .unwrap()
            .graph()
            .unwrap();
        let r = g.r() as u64;
        assert!(4 * g.edge_count() >= r * r, "q = {q}");
    }
    assert!(build_fixed_denominator(9, 1024, 0).is_err());
}

#[test]
fn prime_reciprocal_sizes() {
    let c = build_prime_reciprocal(64, 1 << 14, 0).unwrap();
    assert_eq!(primes_in(8, 16), vec![11, 13]);
    assert_eq!(c.r(), 2 * 10 + 2 * 12);
    assert_eq!(c.spec.prediction("D"), Some(8.0));

    let m = build_prime_reciprocal_modified(64, 5, 1 << 14, 0).unwrap();
    let (d, p) = (
        m.spec.prediction("D").unwrap(),
        m.spec.prediction("P").unwrap(),
    );
    assert!((d - 320f64.sqrt()).abs() < 1e-9 && (p - 12.8f64.sqrt()).abs() < 1e-9);
    assert_eq!(m.spec.prediction("F"), Some(p));
    assert!(build_prime_reciprocal_modified(64, 6, 1 << 14, 0).is_err());
}

#[test]
fn bipartite_cross_pairs_are_edges() {
    let c = build_bipartite(4, 8, 1 << 12, 0).unwrap();
    let sides = c.sides.clone().unwrap();
    let half = sides.iter().filter(|&&s| s == 0).count();
    assert_eq!(half * 2, c.r());
    let g = c.graph().unwrap();
    assert_eq!(g.edge_count() as usize, half * half);
    assert_eq!(c.spec.prediction("edges"), Some((half * half) as f64));
    assert!(matches!(
        build_bipartite(4, 1, 1 << 12, 0),
        Err(LabError::Infeasible(_))
    ));
    assert!(build_bipartite(4, 4, 1 << 12, 0).is_err());
}

#[test]
fn square_root_witnesses() {
    let w = build_sqrt_admissible(11, 13, 17, 1, 1, 1, 1).unwrap();
    assert_eq!((w.profile.d, w.profile.p, w.profile.f), (17, 17, 17));
    assert_eq!((w.l1.q, w.l2.q), (187, 221));
    assert_eq!(num_integer::gcd(w.l1.a, w.l1.q), 1);
    assert_eq!(num_integer::gcd(w.l2.a, w.l2.q), 1);
    assert_eq!(w.l1.t_frac() + w.l2.t_frac(), w.t);
    assert_eq!(w.l1.x_frac() + w.l2.x_frac(), w.x);
    assert!(build_sqrt_admissible(11, 11, 17, 1, 1, 1, 1).is_err());
    assert!(build_sqrt_admissible(11, 13, 15, 1, 1, 1, 1).is_err());

    // Every prime r3 with 11 r3 and 13 r3 in [Q, 2Q) gives its own pair.
    let q = 1u64 << 12;
    let pairs: Vec<_> = primes_in(q / 11 + 1, 2 * q / 13)
        .into_iter()
        .filter(|&r3| is_prime(r3) && 11 * r3 >= q && 13 * r3 < 2 * q)
        .map(|r3| build_sqrt_admissible(11, 13, r3 as i64, 1, 1, 1, 1).unwrap())
        .map(|w| (w.l1.q, w.l2.q))
        .collect();
    let floor = (q as f64).sqrt() / (q as f64).log2();
    assert!(pairs.len() as f64 >= floor, "{} pairs", pairs.len());
}

#[test]
fn random_baseline_density() {
    let n = 1024u64;
    let level = DyadicLevel::new(8, 2).unwrap();
    let predicted = random_density(n, level);
    let mut total = 0.0;
    for seed in 0..20 {
        let c = build_random_baseline(512, n, level, seed).unwrap();
        let g = c.graph().unwrap();
        total += g.edge_count() as f64 / (512.0 * 511.0 / 2.0);
    }
    let mean = total / 20.0;
    assert!(
        mean >= predicted / 4.0 && mean <= predicted * 4.0,
        "{mean} vs {predicted}"
    );
    assert!(mean < (level.two_l() as f64).sqrt().recip());
}
