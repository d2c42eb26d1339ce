use std::collections::BTreeSet;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{lifts, window_range, AdmissibleQuery, ADMISSIBLE_MAX_Q};
use crate::arith::{f_of, mod_inverse, p_of};
use crate::error::{guard, LabError, Result};
use crate::rational::{Interval, Rational};

/// Largest number of witness tuples collected by one enumeration.
pub const WITNESS_GUARD: u64 = 20_000_000;

/// One solution `(a1, a2, b1, b2)` of the window conditions with its `p` and `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Witness {
    pub a1: i64,
    pub a2: i64,
    pub b1: i64,
    pub b2: i64,
    pub p: u64,
    pub f: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub q1: u64,
    pub q2: u64,
    pub d: u64,
    pub p: u64,
    /// Whether every witness carries the same `p`.
    pub p_invariant: bool,
    pub witnesses: Vec<Witness>,
}

pub(crate) fn pair_witnesses(
    q1: u64,
    q2: u64,
    qy: &AdmissibleQuery,
    budget: &mut u64,
) -> Result<Vec<Witness>> {
    let (q1, q2) = (q1 as i128, q2 as i128);
    let d = q1.gcd(&q2);
    if !AdmissibleQuery::in_block(d, qy.d_block) {
        return Ok(Vec::new());
    }
    let (m1, m2) = (q1 / d, q2 / d);
    let den = d * m1 * m2;
    let cap = (q1 - 1) * m2 + (q2 - 1) * m1;
    let inv = mod_inverse(m2.rem_euclid(m1), m1).ok_or(LabError::Overflow("modular inverse"))?;

    let (slo, shi) = window_range(qy.t, qy.t_window(), den, cap)?;
    let mut avals = Vec::new();
    for s in slo..=shi {
        let p = p_of(s, den);
        if !AdmissibleQuery::in_block(p, qy.p_block) {
            continue;
        }
        for a1 in lifts((s * inv).rem_euclid(m1), m1, q1 - 1) {
            let a2 = (s - a1 * m2) / m1;
            if a2.abs() < q2 && a1.gcd(&q1) == 1 && a2.gcd(&q2) == 1 {
                avals.push((a1, a2, p));
            }
        }
    }
    if avals.is_empty() {
        return Ok(Vec::new());
    }

    let (ulo, uhi) = window_range(qy.x, qy.x_window(), den, cap)?;
    let mut bvals = Vec::new();
    for u in ulo..=uhi {
        for b1 in lifts((u * inv).rem_euclid(m1), m1, q1 - 1) {
            let b2 = (u - b1 * m2) / m1;
            if b2.abs() < q2 {
                bvals.push((b1, b2, u));
            }
        }
    }

    let mut out = Vec::new();
    for &(a1, a2, p) in &avals {
        for &(b1, b2, u) in &bvals {
            let f = f_of(u, p);
            if AdmissibleQuery::in_block(f, qy.f_block) {
                if *budget == 0 {
                    return Err(guard(format!("more than {WITNESS_GUARD} witnesses")));
                }
                *budget -= 1;
                out.push(Witness {
                    a1: a1 as i64,
                    a2: a2 as i64,
                    b1: b1 as i64,
                    b2: b2 as i64,
                    p: p as u64,
                    f: f as u64,
                });
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn check_q(qy: &AdmissibleQuery) -> Result<()> {
    qy.validate()?;
    if qy.level.q_hi() > 2 * ADMISSIBLE_MAX_Q {
        return Err(guard(format!("Q = {} exceeds 2^10", qy.level.q_block)));
    }
    Ok(())
}

/// All admissible pairs `(q1, q2)` for the query, with their witnesses.
pub fn enumerate_admissible(qy: &AdmissibleQuery) -> Result<Vec<AdmissiblePair>> {
    check_q(qy)?;
    let mut budget = WITNESS_GUARD;
    let mut out = Vec::new();
    let range = qy.level.q_lo()..qy.level.q_hi();
    for q1 in range.clone() {
        for q2 in range.clone() {
            let w = pair_witnesses(q1, q2, qy, &mut budget)?;
            if w.is_empty() {
                continue;
            }
            let p = w[0].p;
            out.push(AdmissiblePair {
                q1,
                q2,
                d: q1.gcd(&q2),
                p,
                p_invariant: w.iter().all(|x| x.p == p),
                witnesses: w,
            });
        }
    }
    Ok(out)
}

/// Every `b1` admitting a witness for the pair `(q1, q2)`.
pub fn b_witness_set(q1: u64, q2: u64, qy: &AdmissibleQuery) -> Result<BTreeSet<i64>> {
    check_q(qy)?;
    if !qy.level.contains_q(q1) || !qy.level.contains_q(q2) {
        return Err(LabError::Precondition(format!(
            "({q1}, {q2}) is outside the denominator block"
        )));
    }
    let mut budget = WITNESS_GUARD;
    let w = pair_witnesses(q1, q2, qy, &mut budget)?;
    if w.is_empty() {
        return Err(LabError::Precondition(format!(
            "({q1}, {q2}) is not admissible"
        )));
    }
    Ok(w.into_iter().map(|x| x.b1).collect())
}

/// `D + Q/(2^l F)`, the scale of a b-witness set.
pub fn b_witness_bound(qy: &AdmissibleQuery) -> f64 {
    qy.d_block as f64 + qy.level.q_block as f64 / (qy.level.two_l() * qy.f_block) as f64
}

/// `F + QP/(DF 2^l) + Q³/(2^l N D² P)`, the scale of the admissible-pair count.
pub fn lemma_bound(qy: &AdmissibleQuery) -> f64 {
    let (q, d, p, f) = (
        qy.level.q_block as f64,
        qy.d_block as f64,
        qy.p_block as f64,
        qy.f_block as f64,
    );
    let (tl, n) = (qy.level.two_l() as f64, qy.n as f64);
    f + q * p / (d * f * tl) + q.powi(3) / (tl * n * d * d * p)
}

/// Maximum number of `1/N`-separated points `x_{m,1}` over all representations
/// of `(x, t)` as a sum of two arc points, with the ratio to its predicted scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LReport {
    pub count: u64,
    pub witnesses: u64,
    pub pairs: u64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn count_l_separated(qy: &AdmissibleQuery) -> Result<LReport> {
    check_q(qy)?;
    // Each point carries its own window, so the sums may drift by twice as much.
    let wide = qy.with_constants(
        qy.c_t * Rational::from_int(2),
        qy.c_x * Rational::from_int(2),
    )?;
    let hx = qy.x_window();
    let mut intervals = Vec::new();
    let mut witnesses = 0u64;
    let pairs = enumerate_admissible(&wide)?;
    for pair in &pairs {
        let (q1, q2) = (pair.q1 as i128, pair.q2 as i128);
        for w in &pair.witnesses {
            witnesses += 1;
            let c1 = Rational::new(w.b1 as i128, q1)?;
            let c2 = qy.x.checked_sub(&Rational::new(w.b2 as i128, q2)?)?;
            let i1 = Interval {
                lo: c1.checked_sub(&hx)?,
                hi: c1.checked_add(&hx)?,
            };
            let i2 = Interval {
                lo: c2.checked_sub(&hx)?,
                hi: c2.checked_add(&hx)?,
            };
            if let Some(iv) = i1.intersect(&i2) {
                intervals.push(iv);
            }
        }
    }
    let count = max_separated_points(intervals, qy.n)?;
    let ln = (qy.n as f64).log2();
    let q = qy.level.q_block as f64;
    let tl = qy.level.two_l() as f64;
    let bound =
        ln.powi(3) * lemma_bound(qy) * (q / tl + qy.d_block as f64) * qy.n as f64 / (q * tl);
    Ok(LReport {
        count,
        witnesses,
        pairs: pairs.len() as u64,
        bound,
        ratio: count as f64 / bound,
    })
}

/// Largest set of points in the union of closed intervals with gaps `≥ 1/N`,
/// by leftmost greedy placement.
pub(crate) fn max_separated_points(mut iv: Vec<Interval>, n: u64) -> Result<u64> {
    iv.sort_by_key(|a| a.lo);
    let step = Rational::frac(1, n as i128);
    let ni = Rational::from_int(n as i128);
    let mut merged: Vec<Interval> = Vec::new();
    for i in iv {
        match merged.last_mut() {
            Some(m) if i.lo <= m.hi => m.hi = m.hi.max(i.hi),
            _ => merged.push(i),
        }
    }
    let mut last: Option<Rational> = None;
    let mut count = 0u64;
    for m in merged {
        let first = match last {
            Some(l) => m.lo.max(l.checked_add(&step)?),
            None => m.lo,
        };
        if first > m.hi {
            continue;
        }
        let k = m.hi.checked_sub(&first)?.checked_mul(&ni)?.floor() as u64;
        count += k + 1;
        last = Some(first.checked_add(&Rational::frac(k as i128, n as i128))?);
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn lifts_cover_the_range() {
        let v: Vec<i128> = super::super::lifts(2, 5, 7).collect();
        assert_eq!(v, vec![-3, 2, 7]);
        let v: Vec<i128> = super::super::lifts(0, 1, 2).collect();
        assert_eq!(v, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn separated_points_greedy() {
        let iv = vec![
            Interval {
                lo: r(0, 1),
                hi: r(3, 10),
            },
            Interval {
                lo: r(1, 10),
                hi: r(2, 10),
            },
            Interval {
                lo: r(9, 10),
                hi: r(9, 10),
            },
        ];
        // step 1/10: 0, 1/10, 2/10, 3/10, then 9/10
        assert_eq!(max_separated_points(iv, 10).unwrap(), 5);
        assert_eq!(max_separated_points(vec![], 10).unwrap(), 0);
        let single = vec![Interval {
            lo: r(1, 3),
            hi: r(1, 3),
        }];
        assert_eq!(max_separated_points(single, 10).unwrap(), 1);
    }
}
