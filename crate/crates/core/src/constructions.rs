//! Explicit point configurations with their predicted graph parameters.

use std::collections::BTreeMap;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arcs::{DyadicLevel, TorusPoint};
use crate::arith::{
    dyadic_block, gcd_profile, is_prime, primes_in, totient, GcdProfile, LabeledDiff,
};
use crate::error::{invalid, LabError, Result};
use crate::graph::{build_graph_with, check_separation, ConfigGraph, GraphOptions};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionKind {
    SharpC1,
    Enemies,
    FixedDenominator,
    PrimeReciprocal,
    PrimeReciprocalModified,
    Bipartite,
    SqrtAdmissible,
    RandomBaseline,
}

/// An expected metric and where the expectation comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub metric: String,
    pub value: f64,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    pub kind: ConstructionKind,
    pub parameters: BTreeMap<String, i64>,
    pub predicted: Vec<Prediction>,
}

impl ConstructionSpec {
    fn new(kind: ConstructionKind, params: &[(&str, i64)]) -> Self {
        ConstructionSpec {
            kind,
            parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            predicted: Vec::new(),
        }
    }

    fn predict(&mut self, metric: &str, value: f64, source: &str) {
        self.predicted.push(Prediction {
            metric: metric.into(),
            value,
            source: source.into(),
        });
    }

    pub fn prediction(&self, metric: &str) -> Option<f64> {
        self.predicted
            .iter()
            .find(|p| p.metric == metric)
            .map(|p| p.value)
    }
}

/// Vertex set together with the scale and level at which to build its graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub spec: ConstructionSpec,
    #[serde(rename = "N")]
    pub n: u64,
    pub level: DyadicLevel,
    pub points: Vec<TorusPoint>,
    #[serde(default)]
    pub sides: Option<Vec<u8>>,
}

impl Construction {
    pub fn r(&self) -> usize {
        self.points.len()
    }

    pub fn graph(&self) -> Result<ConfigGraph> {
        let opts = GraphOptions {
            sides: self.sides.clone(),
            ..GraphOptions::default()
        };
        build_graph_with(&self.points, self.n, self.level, opts)
    }

    fn finish(self) -> Result<Self> {
        check_separation(&self.points, self.n)?;
        self.level.validate(self.n)?;
        Ok(self)
    }
}

fn pt(x: Rational, t: Rational) -> TorusPoint {
    TorusPoint::new(x, t)
}

fn ilog2(v: u64) -> u32 {
    63 - v.leading_zeros()
}

/// Smallest level spanning every denominator in `[lo, hi]`.
fn spanning_level(lo: u64, hi: u64, l: u32) -> Result<DyadicLevel> {
    let q = dyadic_block(lo);
    let mut span = 1;
    while q << span <= hi {
        span += 1;
    }
    DyadicLevel::new(q, l)?.with_span(span)
}

/// `z_{i,j} = (x_i + j/(Q 2^l), b/q)` for `2 ≤ j ≤ J = ⌊2^{l/2}/M²⌋`, with
/// `x_i` packed `1/N` apart in the half-width `1/(2Q2^l)` neighbourhoods of `b/q`.
pub fn build_sharp_c1(n: u64, q: u64, l: u32, m: u64) -> Result<Construction> {
    if !is_prime(q) {
        return Err(invalid(format!("{q} is not prime")));
    }
    if m == 0 {
        return Err(invalid("M must be positive"));
    }
    let level = DyadicLevel::new(dyadic_block(q), l)?;
    level.validate(n)?;
    let j_max = ((level.two_l() as f64).sqrt() / (m * m) as f64).floor() as u64;
    if j_max < 2 {
        return Err(LabError::Infeasible(format!(
            "J = {j_max} leaves no shift 2 ≤ j ≤ J"
        )));
    }
    let step = Rational::frac(1, (level.q_block * level.two_l()) as i128);
    if Rational::from_int(j_max as i128) * step >= Rational::frac(1, q as i128) {
        return Err(LabError::Infeasible(format!(
            "J = {j_max} shifts overrun the gap 1/{q}"
        )));
    }
    let half = step * Rational::frac(1, 2);
    let gap = Rational::frac(1, n as i128);
    let mut points = Vec::new();
    for b in 0..q as i128 {
        let c = Rational::frac(b, q as i128);
        let t = c;
        let mut x = c - half;
        while x < c + half {
            for j in 2..=j_max as i128 {
                points.push(pt(x + Rational::from_int(j) * step, t));
            }
            x = x + gap;
        }
    }
    let mut spec = ConstructionSpec::new(
        ConstructionKind::SharpC1,
        &[
            ("N", n as i64),
            ("q", q as i64),
            ("l", l as i64),
            ("M", m as i64),
            ("J", j_max as i64),
        ],
    );
    let r = j_max as f64 * n as f64 / level.two_l() as f64;
    spec.predict("R", r, "sharp example: R ~ J N / 2^l");
    spec.predict(
        "cross_pairs",
        r * r / j_max as f64,
        "sharp example: ~ R^2 / J pairs",
    );
    Construction {
        spec,
        n,
        level,
        points,
        sides: None,
    }
    .finish()
}

/// One member `b1/q1` of the enemies family with its full representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyMember {
    pub q1: i64,
    pub a1: i64,
    pub a2: i64,
    pub b1: i64,
    pub b2: i64,
}

impl EnemyMember {
    pub fn fraction(&self) -> Rational {
        Rational::frac(self.b1 as i128, self.q1 as i128)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnemiesFamily {
    pub spec: ConstructionSpec,
    pub x: Rational,
    pub t: Rational,
    pub members: Vec<EnemyMember>,
    /// Smallest gap between consecutive distinct fractions `b1/q1`.
    pub min_gap: Option<Rational>,
}

impl EnemiesFamily {
    /// Checks every member solves `t = a1/q1 + a2/q2`, `x = b1/q1 + b2/q2`
    /// with `q1 = q2` and coprime numerators.
    pub fn verify(&self) -> Result<()> {
        for m in &self.members {
            let q = m.q1 as i128;
            let l1 = LabeledDiff::new(m.a1, m.b1, m.q1)?;
            let l2 = LabeledDiff::new(m.a2, m.b2, m.q1)?;
            gcd_profile(&l1, &l2)?;
            let t = Rational::new(m.a1 as i128 + m.a2 as i128, q)?;
            let x = Rational::new(m.b1 as i128 + m.b2 as i128, q)?;
            if t != self.t || x != self.x {
                return Err(LabError::Infeasible(format!(
                    "member {m:?} does not represent ({}, {})",
                    self.x, self.t
                )));
            }
        }
        Ok(())
    }
}

/// Representations of `(x, t) = (b/(rq), a/q)` through denominators `nq`
/// with `n = rm ∈ [Q/q, 2Q/q)`, keeping the fractions `b1/(nq)` in lowest terms.
pub fn build_enemies(
    n_scale: u64,
    q_block: u64,
    q: u64,
    r: u64,
    a: u64,
    b: u64,
) -> Result<EnemiesFamily> {
    if !(1 <= q && q <= q_block) {
        return Err(invalid("need 1 ≤ q ≤ Q"));
    }
    if !(1 <= r && r * q <= q_block) {
        return Err(invalid("need 1 ≤ r ≤ Q/q"));
    }
    if ((r * q) as u128 * n_scale as u128) < (q_block as u128).pow(2) {
        return Err(invalid("need rq ≥ Q²/N"));
    }
    if a >= q || b >= q {
        return Err(invalid("need 0 ≤ a, b ≤ q - 1"));
    }
    let (qi, ri, ai, bi) = (q as i64, r as i64, a as i64, b as i64);
    let t = Rational::frac(ai as i128, qi as i128);
    let x = Rational::frac(bi as i128, (ri * qi) as i128);
    let lo = Integer::div_ceil(&(q_block as i64), &qi);
    let hi = (2 * q_block as i64 - 1) / qi;
    let mut members = Vec::new();
    for nn in lo..=hi {
        if nn % ri != 0 {
            continue;
        }
        let m = nn / ri;
        let q1 = nn * qi;
        let Some(a1) = (1..q1).find(|&a1| a1.gcd(&q1) == 1 && (nn * ai - a1).gcd(&q1) == 1) else {
            continue;
        };
        for b1 in 1..q1 {
            if b1.gcd(&q1) == 1 {
                members.push(EnemyMember {
                    q1,
                    a1,
                    a2: nn * ai - a1,
                    b1,
                    b2: m * bi - b1,
                });
            }
        }
    }
    let mut fracs: Vec<Rational> = members.iter().map(EnemyMember::fraction).collect();
    fracs.sort();
    fracs.dedup();
    let min_gap = fracs.windows(2).map(|w| w[1] - w[0]).min();
    let mut spec = ConstructionSpec::new(
        ConstructionKind::Enemies,
        &[
            ("N", n_scale as i64),
            ("Q", q_block as i64),
            ("q", qi),
            ("r", ri),
            ("a", ai),
            ("b", bi),
        ],
    );
    let qf = q_block as f64;
    spec.predict(
        "family_size",
        qf * qf / (r * q) as f64,
        "enemies example: ~ Q^2/(rq) fractions",
    );
    spec.predict(
        "min_gap",
        (q * r) as f64 / (4.0 * qf * qf),
        "enemies example: gap ~ qr/Q^2",
    );
    let fam = EnemiesFamily {
        spec,
        x,
        t,
        members,
        min_gap,
    };
    fam.verify()?;
    Ok(fam)
}

/// `(a/q, a/q)` for `|a| ≤ q - 1`.
pub fn build_fixed_denominator(q: u64, n: u64, l: u32) -> Result<Construction> {
    if !is_prime(q) {
        return Err(invalid(format!("{q} is not prime")));
    }
    if q > 1 << 10 {
        return Err(invalid("q must be at most 2^10"));
    }
    let qi = q as i128;
    let points = (-(qi - 1)..qi)
        .map(|a| pt(Rational::frac(a, qi), Rational::frac(a, qi)))
        .collect();
    let level = DyadicLevel::new(dyadic_block(q), l)?;
    let mut spec = ConstructionSpec::new(
        ConstructionKind::FixedDenominator,
        &[("q", q as i64), ("N", n as i64), ("l", l as i64)],
    );
    spec.predict(
        "R",
        (2 * q - 1) as f64,
        "fixed-denominator example: 2q - 1 vertices",
    );
    spec.predict(
        "D",
        level.q_block as f64,
        "fixed-denominator example: D = Q",
    );
    spec.predict("P", 1.0, "fixed-denominator example: P = 1");
    spec.predict("F", 1.0, "fixed-denominator example: F = 1");
    spec.predict("K", 1.0, "fixed-denominator example: K ~ 1");
    Construction {
        spec,
        n,
        level,
        points,
        sides: None,
    }
    .finish()
}

/// Dyadic block of `√Q` for a power of two `Q`.
pub fn sqrt_block(q_block: u64) -> u64 {
    1 << (ilog2(q_block) / 2)
}

/// `(c/r, c/r)` for primes `r` in the block of `√Q` and `1 ≤ |c| ≤ r - 1`.
pub fn build_prime_reciprocal(q_block: u64, n: u64, l: u32) -> Result<Construction> {
    let s = sqrt_block(q_block);
    let primes = primes_in(s, 2 * s);
    if primes.len() < 2 {
        return Err(LabError::Infeasible(format!(
            "fewer than two primes in [{s}, {})",
            2 * s
        )));
    }
    let mut points = Vec::new();
    for &r in &primes {
        let r = r as i128;
        for c in (-(r - 1)..r).filter(|&c| c != 0) {
            points.push(pt(Rational::frac(c, r), Rational::frac(c, r)));
        }
    }
    let level = spanning_level(
        primes[0] * primes[1],
        primes[primes.len() - 1] * primes[primes.len() - 2],
        l,
    )?;
    let mut spec = ConstructionSpec::new(
        ConstructionKind::PrimeReciprocal,
        &[("Q", q_block as i64), ("N", n as i64), ("l", l as i64)],
    );
    spec.predict(
        "R",
        primes.iter().map(|r| 2.0 * (*r as f64 - 1.0)).sum(),
        "prime-reciprocal example: sum of 2(r - 1)",
    );
    for m in ["D", "P", "F"] {
        spec.predict(m, s as f64, "prime-reciprocal example: D = P = F ~ sqrt(Q)");
    }
    spec.predict("K", 1.0, "prime-reciprocal example: K = 1");
    Construction {
        spec,
        n,
        level,
        points,
        sides: None,
    }
    .finish()
}

/// `(b/(dq), 1/(dq))` for primes `q` in the block of `√(Q/d)` and `gcd(b, dq) = 1`.
pub fn build_prime_reciprocal_modified(
    q_block: u64,
    d: u64,
    n: u64,
    l: u32,
) -> Result<Construction> {
    if !is_prime(d) {
        return Err(invalid(format!("d = {d} is not prime")));
    }
    if d > q_block {
        return Err(invalid("need d ≤ Q"));
    }
    let s = dyadic_block(((q_block as f64 / d as f64).sqrt()).max(1.0) as u64);
    let primes: Vec<u64> = primes_in(s, 2 * s)
        .into_iter()
        .filter(|&p| p != d)
        .collect();
    if primes.len() < 2 {
        return Err(LabError::Infeasible(format!(
            "fewer than two usable primes in [{s}, {})",
            2 * s
        )));
    }
    let mut points = Vec::new();
    for &q in &primes {
        let den = (d * q) as i128;
        for b in (1..den).filter(|b| b.gcd(&den) == 1) {
            points.push(pt(Rational::frac(b, den), Rational::frac(1, den)));
        }
    }
    let k = primes.len();
    let level = spanning_level(
        d * primes[0] * primes[1],
        d * primes[k - 1] * primes[k - 2],
        l,
    )?;
    let mut spec = ConstructionSpec::new(
        ConstructionKind::PrimeReciprocalModified,
        &[
            ("Q", q_block as i64),
            ("d", d as i64),
            ("N", n as i64),
            ("l", l as i64),
        ],
    );
    let qf = q_block as f64;
    spec.predict(
        "D",
        (qf * d as f64).sqrt(),
        "modified prime-reciprocal example: D ~ sqrt(Qd)",
    );
    spec.predict(
        "P",
        (qf / d as f64).sqrt(),
        "modified prime-reciprocal example: P ~ sqrt(Q/d)",
    );
    spec.predict(
        "F",
        (qf / d as f64).sqrt(),
        "modified prime-reciprocal example: F ~ sqrt(Q/d)",
    );
    Construction {
        spec,
        n,
        level,
        points,
        sides: None,
    }
    .finish()
}

/// Two sides of points `(b/r, b/r)` with `r` prime in the blocks `Q1` and
/// `Q2`, truncated to equal size; edges only cross between sides.
pub fn build_bipartite(q1: u64, q2: u64, n: u64, l: u32) -> Result<Construction> {
    if q1 == q2 {
        return Err(invalid("need Q1 ≠ Q2"));
    }
    // Round-robin over the primes so truncation keeps every denominator.
    let side = |qb: u64| -> Vec<TorusPoint> {
        let cols: Vec<Vec<TorusPoint>> = primes_in(qb, 2 * qb)
            .into_iter()
            .map(|r| {
                let r = r as i128;
                (1..r)
                    .flat_map(|b| [b, -b])
                    .map(|b| pt(Rational::frac(b, r), Rational::frac(b, r)))
                    .collect()
            })
            .collect();
        let depth = cols.iter().map(Vec::len).max().unwrap_or(0);
        (0..depth)
            .flat_map(|i| cols.iter().filter_map(move |c| c.get(i).copied()))
            .collect()
    };
    let (mut v1, mut v2) = (side(q1), side(q2));
    let size = v1.len().min(v2.len());
    if size == 0 {
        return Err(LabError::Infeasible(format!(
            "no primes in the block of {}",
            if v1.is_empty() { q1 } else { q2 }
        )));
    }
    v1.truncate(size);
    v2.truncate(size);
    let (p1, p2) = (primes_in(q1, 2 * q1), primes_in(q2, 2 * q2));
    let lo = p1[0] * p2[0];
    let hi = p1[p1.len() - 1] * p2[p2.len() - 1];
    let level = spanning_level(lo, hi, l)?;
    let sides = [vec![0u8; size], vec![1u8; size]].concat();
    let mut spec = ConstructionSpec::new(
        ConstructionKind::Bipartite,
        &[
            ("Q1", q1 as i64),
            ("Q2", q2 as i64),
            ("N", n as i64),
            ("l", l as i64),
        ],
    );
    spec.predict(
        "edges",
        (size * size) as f64,
        "bipartite example: every cross pair is an edge",
    );
    spec.predict("D", q1 as f64, "bipartite example: P = D = Q1 reading");
    spec.predict("D_alt", q2 as f64, "bipartite example: P = D = Q2 reading");
    spec.predict("K", 1.0, "bipartite example: K = 1");
    Construction {
        spec,
        n,
        level,
        points: [v1, v2].concat(),
        sides: Some(sides),
    }
    .finish()
}

/// Target `(x, t)` and the labelled pair `(r1 r3, r2 r3)` representing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtWitness {
    pub spec: ConstructionSpec,
    pub x: Rational,
    pub t: Rational,
    pub l1: LabeledDiff,
    pub l2: LabeledDiff,
    pub profile: GcdProfile,
}

/// `t = c2/r2 - c1/r1`, `x = d2/r2 - d1/r1` split through `r3` with `c3 = d3 = 1`.
#[allow(clippy::too_many_arguments)]
pub fn build_sqrt_admissible(
    r1: i64,
    r2: i64,
    r3: i64,
    c1: i64,
    c2: i64,
    d1: i64,
    d2: i64,
) -> Result<SqrtWitness> {
    for r in [r1, r2, r3] {
        if r < 2 || !is_prime(r as u64) {
            return Err(invalid(format!("{r} is not prime")));
        }
    }
    if r1 == r2 || r1 == r3 || r2 == r3 {
        return Err(invalid("the three primes must be distinct"));
    }
    if !(1..r1).contains(&c1) || !(1..r2).contains(&c2) {
        return Err(invalid("need 1 ≤ c_i ≤ r_i - 1"));
    }
    if d1.abs() >= r1 || d2.abs() >= r2 {
        return Err(invalid("need |d_i| ≤ r_i - 1"));
    }
    let (c3, d3) = (1, 1);
    let l1 = LabeledDiff::new(c3 * r1 - c1 * r3, d3 * r1 - d1 * r3, r1 * r3)?;
    let l2 = LabeledDiff::new(c2 * r3 - c3 * r2, d2 * r3 - d3 * r2, r2 * r3)?;
    let profile = gcd_profile(&l1, &l2)?;
    let t = Rational::frac(c2 as i128, r2 as i128) - Rational::frac(c1 as i128, r1 as i128);
    let x = Rational::frac(d2 as i128, r2 as i128) - Rational::frac(d1 as i128, r1 as i128);
    let mut spec = ConstructionSpec::new(
        ConstructionKind::SqrtAdmissible,
        &[
            ("r1", r1),
            ("r2", r2),
            ("r3", r3),
            ("c1", c1),
            ("c2", c2),
            ("d1", d1),
            ("d2", d2),
        ],
    );
    for m in ["d", "p", "f"] {
        spec.predict(m, r3 as f64, "square-root example: d = p = f = r3");
    }
    Ok(SqrtWitness {
        spec,
        x,
        t,
        l1,
        l2,
        profile,
    })
}

/// `R` points `(t_r, t_r)`, one uniformly jittered point per cell of width `1/R`,
/// kept `1/N` apart.
pub fn build_random_baseline(
    r: usize,
    n: u64,
    level: DyadicLevel,
    seed: u64,
) -> Result<Construction> {
    if r == 0 || r > 1 << 12 {
        return Err(invalid("need 1 ≤ R ≤ 2^12"));
    }
    if r as u64 > n {
        return Err(invalid("need R ≤ N"));
    }
    const FINE: i128 = 64;
    let (ri, ni) = (r as i128, n as i128);
    let den = ri * ni * FINE;
    let cell = ni * FINE;
    let jitter = (ni - ri) * FINE;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..ri)
        .map(|k| {
            let t = Rational::frac(k * cell + rng.gen_range(0..=jitter), den);
            pt(t, t)
        })
        .collect();
    let mut spec = ConstructionSpec::new(
        ConstructionKind::RandomBaseline,
        &[
            ("R", r as i64),
            ("N", n as i64),
            ("Q", level.q_block as i64),
            ("l", level.l as i64),
            ("seed", seed as i64),
        ],
    );
    spec.predict(
        "density",
        random_density(n, level),
        "random graph: density ~ Q/(N 2^l)",
    );
    Construction {
        spec,
        n,
        level,
        points,
        sides: None,
    }
    .finish()
}

/// `Q/(N 2^l)`, the generic edge density of random vertices.
pub fn random_density(n: u64, level: DyadicLevel) -> f64 {
    level.q_block as f64 / (n as f64 * level.two_l() as f64)
}

/// Exact measure of the `t`-set of `S_{Q,l}`: `Σ φ(q)·2/(2^l q N)`.
pub fn arc_t_measure(n: u64, level: DyadicLevel) -> f64 {
    (level.q_lo()..level.q_hi())
        .map(|q| totient(q) as f64 * 2.0 / (level.two_l() as f64 * q as f64 * n as f64))
        .sum()
}
