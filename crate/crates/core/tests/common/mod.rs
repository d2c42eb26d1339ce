//! Exhaustive-loop oracles written straight from the definitions, with no
//! CRT lifting, histogram factoring or modular inverses.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use levelset_core::arcs::DyadicLevel;
use levelset_core::counting::{AdmissibleQuery, SystemQuery};
use levelset_core::Rational;
use num_integer::Integer;

pub fn r(n: i64, d: i64) -> Rational {
    Rational::frac(n as i128, d as i128)
}

fn in_block(v: i64, block: u64) -> bool {
    v >= block as i64 && v < 2 * block as i64
}

/// `gcd(v, m)` with `gcd(0, m) = m`.
fn g(v: i64, m: i64) -> i64 {
    v.gcd(&m)
}

pub fn units(q: i64) -> Vec<i64> {
    (-(q - 1)..=q - 1).filter(|a| a.gcd(&q) == 1).collect()
}

fn qs(level: &DyadicLevel) -> Vec<i64> {
    (level.q_lo() as i64..level.q_hi() as i64).collect()
}

pub type OracleWitness = (i64, i64, i64, i64, u64, u64);

/// `(q1, q2) → sorted (a1, a2, b1, b2, p, f)` for every solution of the window
/// conditions with the prescribed dyadic blocks of `d`, `p` and `f`.
pub fn admissible(qy: &AdmissibleQuery) -> BTreeMap<(u64, u64), Vec<OracleWitness>> {
    let (wt, wx) = (qy.t_window(), qy.x_window());
    let mut out = BTreeMap::new();
    for &q1 in &qs(&qy.level) {
        for &q2 in &qs(&qy.level) {
            let d = q1.gcd(&q2);
            if !in_block(d, qy.d_block) {
                continue;
            }
            let mut ws = Vec::new();
            for &a1 in &units(q1) {
                for &a2 in &units(q2) {
                    if (r(a1, q1) + r(a2, q2) - qy.t).abs() > wt {
                        continue;
                    }
                    let p = g((a1 * q2 + a2 * q1) / d, q1 * q2 / d);
                    if !in_block(p, qy.p_block) {
                        continue;
                    }
                    for b1 in -(q1 - 1)..=q1 - 1 {
                        for b2 in -(q2 - 1)..=q2 - 1 {
                            if (r(b1, q1) + r(b2, q2) - qy.x).abs() > wx {
                                continue;
                            }
                            let f = g((b1 * q2 + b2 * q1) / d, p);
                            if in_block(f, qy.f_block) {
                                ws.push((a1, a2, b1, b2, p as u64, f as u64));
                            }
                        }
                    }
                }
            }
            if !ws.is_empty() {
                ws.sort_unstable();
                out.insert((q1 as u64, q2 as u64), ws);
            }
        }
    }
    out
}

/// Per-box counters keyed by `row · cols + col`.
#[derive(Debug, Default, PartialEq)]
pub struct Census {
    pub tuples: HashMap<usize, u32>,
    pub tuples_star: HashMap<usize, u32>,
    pub keys: HashMap<usize, u32>,
    pub keys_star: HashMap<usize, u32>,
    pub separated: HashMap<usize, u32>,
}

fn cell_of(v: Rational, parts: u64) -> u64 {
    (v.fract() * Rational::from_int(parts as i128)).floor() as u64
}

pub fn census(n: u64, level: DyadicLevel) -> Census {
    let cols = level.two_l() * level.q_block;
    let rows = n * cols;
    let mut c = Census::default();
    let mut key_sets: HashMap<usize, BTreeSet<(i64, i64)>> = HashMap::new();
    let mut key_sets_star: HashMap<usize, BTreeSet<(i64, i64)>> = HashMap::new();
    for &q1 in &qs(&level) {
        for &q2 in &qs(&level) {
            let coprime = q1.gcd(&q2) == 1;
            for &a1 in &units(q1) {
                for &a2 in &units(q2) {
                    let row = cell_of(r(a1, q1) + r(a2, q2), rows);
                    for b1 in -(q1 - 1)..=q1 - 1 {
                        for b2 in -(q2 - 1)..=q2 - 1 {
                            let col = cell_of(r(b1, q1) + r(b2, q2), cols);
                            let idx = (row * cols + col) as usize;
                            *c.tuples.entry(idx).or_default() += 1;
                            key_sets.entry(idx).or_default().insert((b1, q1));
                            if coprime {
                                *c.tuples_star.entry(idx).or_default() += 1;
                                key_sets_star.entry(idx).or_default().insert((b1, q1));
                            }
                        }
                    }
                }
            }
        }
    }
    let step = Rational::frac(1, n as i128);
    for (idx, set) in &key_sets {
        c.keys.insert(*idx, set.len() as u32);
        let mut vals: Vec<Rational> = set.iter().map(|&(b, q)| r(b, q)).collect();
        vals.sort();
        let mut last: Option<Rational> = None;
        let mut count = 0;
        for v in vals {
            if last.is_none_or(|l| v - l >= step) {
                last = Some(v);
                count += 1;
            }
        }
        c.separated.insert(*idx, count);
    }
    for (idx, set) in key_sets_star {
        c.keys_star.insert(idx, set.len() as u32);
    }
    c
}

/// Counts of `|v1/q1 - v/q - c| ≤ w` over `v` for fixed `(v1, q1, q)`.
fn matches(v1: i64, q1: i64, q: i64, c: Rational, w: Rational, vs: &[i64]) -> u64 {
    let base = r(v1, q1) - c;
    vs.iter().filter(|&&v| (base - r(v, q)).abs() <= w).count() as u64
}

/// Solutions of the two-target system. For fixed `(q1, a1[, b1])` the two
/// targets involve disjoint variables, so the count is a product.
pub fn system(qy: &SystemQuery) -> u64 {
    let (wt, wx) = (qy.t_window(), qy.x_window());
    let qset = qs(&qy.level);
    let cap = qy.alpha_cap as i64;
    let bs = |q: i64| -> Vec<i64> { (-(q - 1)..=q - 1).collect() };
    let mut total = 0u64;
    for &q1 in &qset {
        let b1s: Vec<Option<i64>> = match qy.x {
            Some(_) => bs(q1).into_iter().map(Some).collect(),
            None => vec![None],
        };
        for &a1 in &units(q1) {
            for &b1 in &b1s {
                let mut per = [0u64; 2];
                for (slot, (t, x)) in [(qy.t, qy.x), (qy.t_prime, qy.x_prime)]
                    .into_iter()
                    .enumerate()
                {
                    for &qj in &qset {
                        if q1.gcd(&qj) > cap {
                            continue;
                        }
                        let na = matches(a1, q1, qj, t, wt, &units(qj));
                        let nb = match (b1, x) {
                            (Some(b1), Some(x)) => matches(b1, q1, qj, x, wx, &bs(qj)),
                            _ => 1,
                        };
                        per[slot] += na * nb;
                    }
                }
                total += per[0] * per[1];
            }
        }
    }
    total
}

/// Fully nested six- or nine-fold loop, for tiny blocks only.
pub fn system_nested(qy: &SystemQuery) -> u64 {
    let (wt, wx) = (qy.t_window(), qy.x_window());
    let qset = qs(&qy.level);
    let cap = qy.alpha_cap as i64;
    let bs = |q: i64| -> Vec<Option<i64>> {
        if qy.x.is_some() {
            (-(q - 1)..=q - 1).map(Some).collect()
        } else {
            vec![None]
        }
    };
    let x_ok =
        |b1: Option<i64>, q1: i64, b: Option<i64>, q: i64, x: Option<Rational>| match (b1, b, x) {
            (Some(b1), Some(b), Some(x)) => (r(b1, q1) - r(b, q) - x).abs() <= wx,
            _ => true,
        };
    let mut total = 0;
    for &q1 in &qset {
        for &q2 in qset.iter().filter(|&&q| q1.gcd(&q) <= cap) {
            for &q3 in qset.iter().filter(|&&q| q1.gcd(&q) <= cap) {
                for &a1 in &units(q1) {
                    for &a2 in &units(q2) {
                        if (r(a1, q1) - r(a2, q2) - qy.t).abs() > wt {
                            continue;
                        }
                        for &a3 in &units(q3) {
                            if (r(a1, q1) - r(a3, q3) - qy.t_prime).abs() > wt {
                                continue;
                            }
                            for &b1 in &bs(q1) {
                                for &b2 in &bs(q2) {
                                    if !x_ok(b1, q1, b2, q2, qy.x) {
                                        continue;
                                    }
                                    for &b3 in &bs(q3) {
                                        if x_ok(b1, q1, b3, q3, qy.x_prime) {
                                            total += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    total
}

pub mod gen {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn block(v: i64) -> u64 {
        1 << (63 - (v as u64).leading_zeros())
    }

    /// A random level with `Q ≤ max_q` valid at scale `n`.
    pub fn level<R: Rng>(rng: &mut R, max_q: u64, n: u64) -> DyadicLevel {
        let q = 1u64 << rng.gen_range(0..=max_q.trailing_zeros());
        let max_l = DyadicLevel::max_l(q, n).min(3);
        DyadicLevel::new(q, rng.gen_range(0..=max_l)).unwrap()
    }

    fn pick<R: Rng>(rng: &mut R, level: &DyadicLevel) -> (i64, i64, i64) {
        let q = rng.gen_range(level.q_lo()..level.q_hi()) as i64;
        let a = *units(q).choose(rng).unwrap();
        let b = rng.gen_range(-(q - 1)..=q - 1);
        (q, a, b)
    }

    fn jitter<R: Rng>(rng: &mut R, w: Rational) -> Rational {
        w * Rational::frac(rng.gen_range(-4..=4), 3)
    }

    /// Admissibility query planted around a random pair of arc points, or a
    /// uniformly random target a quarter of the time.
    pub fn admissible<R: Rng>(rng: &mut R, max_q: u64, n: u64) -> AdmissibleQuery {
        let level = level(rng, max_q, n);
        let (q1, a1, b1) = pick(rng, &level);
        let (q2, a2, b2) = pick(rng, &level);
        let d = q1.gcd(&q2);
        let p = ((a1 * q2 + a2 * q1) / d).gcd(&(q1 * q2 / d));
        let f = ((b1 * q2 + b2 * q1) / d).gcd(&p);
        let c = [1, 1, 2, 3][rng.gen_range(0..4)];
        let mut qy = AdmissibleQuery::new(
            Rational::ZERO,
            Rational::ZERO,
            n,
            level,
            block(d),
            block(p),
            block(f),
        )
        .unwrap()
        .with_constants(Rational::from_int(c), Rational::from_int(c))
        .unwrap();
        if rng.gen_ratio(1, 4) {
            qy.t = Rational::frac(rng.gen_range(0..1 << 20), 1 << 20);
            qy.x = Rational::frac(rng.gen_range(0..1 << 10), 1 << 10);
        } else {
            qy.t = r(a1, q1) + r(a2, q2) + jitter(rng, qy.t_window());
            qy.x = r(b1, q1) + r(b2, q2) + jitter(rng, qy.x_window());
        }
        qy
    }

    /// Two-target system planted on a shared `(q1, a1, b1)`, retried until the
    /// targets are separated.
    pub fn system<R: Rng>(rng: &mut R, max_q: u64, n: u64, with_x: bool) -> SystemQuery {
        loop {
            let level = level(rng, max_q, n);
            let (q1, a1, b1) = pick(rng, &level);
            let (q2, a2, b2) = pick(rng, &level);
            let (q3, a3, b3) = pick(rng, &level);
            let cap = [1, 2, 4, 64][rng.gen_range(0..4)];
            let mut qy = SystemQuery::new(Rational::ZERO, Rational::ZERO, n, level, cap);
            qy.c_t = Rational::from_int([1, 2, 8][rng.gen_range(0..3)]);
            qy.t = r(a1, q1) - r(a2, q2) + jitter(rng, qy.t_window());
            qy.t_prime = r(a1, q1) - r(a3, q3) + jitter(rng, qy.t_window());
            if with_x {
                let wx = qy.x_window();
                qy = qy.with_x(
                    r(b1, q1) - r(b2, q2) + jitter(rng, wx),
                    r(b1, q1) - r(b3, q3) + jitter(rng, wx),
                );
            }
            if qy.validate().is_ok() {
                return qy;
            }
        }
    }
}
