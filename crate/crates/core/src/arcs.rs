//! Major arcs: rational approximation of `t`, the cells of `S_{Q,l}` and
//! their dyadic refinement, and empirical kernel bounds on and off the arcs.

use num_integer::Integer;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{dyadic_block, is_power_of_two, totient, unit_numerators, LabeledDiff};
use crate::error::{guard, invalid, LabError, Result};
use crate::expsum::Kernel;
use crate::rational::{Interval, Rational, ReducedFraction};

/// Slack `c` in the level constraint `2^l ≤ c·N/Q`.
pub const LEVEL_SLACK: u64 = 1;

/// Largest number of cells [`enumerate_arcs`] will produce.
pub const ARC_ENUM_GUARD: u64 = 100_000_000;

/// Dyadic denominator block `[Q, 2^span·Q)` and distance level `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicLevel {
    #[serde(rename = "Q")]
    pub q_block: u64,
    pub l: u32,
    #[serde(default = "one")]
    pub span: u32,
}

fn one() -> u32 {
    1
}

impl DyadicLevel {
    pub fn new(q_block: u64, l: u32) -> Result<Self> {
        if !is_power_of_two(q_block) {
            return Err(invalid(format!("Q = {q_block} is not a power of two")));
        }
        if l > 40 {
            return Err(invalid(format!("l = {l} is out of range")));
        }
        Ok(DyadicLevel {
            q_block,
            l,
            span: 1,
        })
    }

    /// Widens the denominator range to `span` consecutive dyadic blocks.
    pub fn with_span(mut self, span: u32) -> Result<Self> {
        if span == 0 || span > 8 {
            return Err(invalid(format!("span = {span} is out of range")));
        }
        self.span = span;
        Ok(self)
    }

    pub fn two_l(&self) -> u64 {
        1u64 << self.l
    }

    pub fn q_lo(&self) -> u64 {
        self.q_block
    }

    /// Exclusive upper end of the denominator range.
    pub fn q_hi(&self) -> u64 {
        self.q_block << self.span
    }

    pub fn contains_q(&self, q: u64) -> bool {
        (self.q_lo()..self.q_hi()).contains(&q)
    }

    pub fn validate(&self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(invalid("N must be positive"));
        }
        if self.q_block > n {
            return Err(invalid(format!("Q = {} exceeds N = {n}", self.q_block)));
        }
        if self.two_l() * self.q_block > LEVEL_SLACK * n {
            return Err(invalid(format!(
                "level 2^l = {} violates 2^l·Q ≤ N for Q = {}, N = {n}",
                self.two_l(),
                self.q_block
            )));
        }
        Ok(())
    }

    /// Whether the annulus refinement applies (`2^l < N/Q`).
    pub fn has_annulus(&self, n: u64) -> bool {
        self.two_l() * self.q_block < n
    }

    /// Largest `l` with `2^l·Q ≤ N`.
    pub fn max_l(q_block: u64, n: u64) -> u32 {
        let mut l = 0;
        while (q_block << (l + 1)) <= n {
            l += 1;
        }
        l
    }
}

/// Witness `(q, a, b)` of a cell, with `0 ≤ a, b ≤ q - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcLabel {
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

impl ArcLabel {
    pub fn to_diff(&self) -> LabeledDiff {
        LabeledDiff {
            a: self.a as i64,
            b: self.b as i64,
            q: self.q as i64,
        }
    }
}

/// One rectangle of `S_{Q,l}` (or of its dyadic refinement).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcCell {
    pub level: DyadicLevel,
    pub q: u64,
    pub a: u64,
    pub b: u64,
    pub x_interval: Interval,
    pub t_interval: Interval,
    /// Inner radius of the dyadic annulus (zero at the top level); the outer
    /// edge is then open, so the levels partition `[0, 1/(qN))`.
    pub t_inner_radius: Option<Rational>,
}

impl ArcCell {
    pub fn label(&self) -> ArcLabel {
        ArcLabel {
            q: self.q,
            a: self.a,
            b: self.b,
        }
    }
}

/// A point of the torus, or of the plane when produced by constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: Rational,
    pub t: Rational,
}

impl TorusPoint {
    pub fn new(x: Rational, t: Rational) -> Self {
        TorusPoint { x, t }
    }

    /// Difference reduced modulo 1 into `[-1/2, 1/2)²`.
    pub fn torus_sub(&self, o: &TorusPoint) -> Result<TorusPoint> {
        Ok(TorusPoint {
            x: self.x.checked_sub(&o.x)?.centered(),
            t: self.t.checked_sub(&o.t)?.centered(),
        })
    }
}

/// Geometry of `S_{Q,l}` at scale `N`: membership tests and cell construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcGeometry {
    pub n: u64,
    pub level: DyadicLevel,
    /// Width multiplier of the `x`-intervals.
    pub eps_c: Rational,
    /// Use the annulus in `t` whenever `2^l < N/Q`.
    pub dyadic: bool,
}

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(LabError::Overflow("arc membership"))
}

impl ArcGeometry {
    pub fn new(n: u64, level: DyadicLevel, dyadic: bool) -> Result<Self> {
        level.validate(n)?;
        Ok(ArcGeometry {
            n,
            level,
            eps_c: Rational::ONE,
            dyadic,
        })
    }

    pub fn with_eps(mut self, eps_c: Rational) -> Result<Self> {
        if eps_c <= Rational::ZERO {
            return Err(invalid("eps_c must be positive"));
        }
        self.eps_c = eps_c;
        Ok(self)
    }

    fn annulus(&self) -> bool {
        self.dyadic && self.level.has_annulus(self.n)
    }

    fn scale(&self) -> i128 {
        (self.level.two_l() * self.n) as i128
    }

    /// `t = tn/td ∈ [0,1)` lies in the `t`-set of `(q, a)` for an integer `a`.
    fn t_ok(&self, tn: i128, td: i128, q: i128, a: i128) -> Result<bool> {
        let dlt = (mul(tn, q)? - mul(a, td)?).abs();
        let s = mul(dlt, self.scale())?;
        Ok(if self.annulus() {
            2 * s >= td && s < td
        } else if self.dyadic {
            s < td
        } else {
            s <= td
        })
    }

    fn x_ok(&self, xn: i128, xd: i128, q: i128, b: i128) -> Result<bool> {
        let dlt = (mul(xn, q)? - mul(b, xd)?).abs();
        let lhs = mul(mul(dlt, self.level.two_l() as i128)?, self.eps_c.denom())?;
        Ok(lhs <= mul(self.eps_c.numer(), xd)?)
    }

    fn numerators_t(&self, tn: i128, td: i128, q: i128) -> Result<Vec<u64>> {
        let a0 = Integer::div_floor(&mul(tn, q)?, &td);
        let mut out = Vec::with_capacity(2);
        for a in [a0, a0 + 1] {
            let r = a.rem_euclid(q);
            let unit = if q == 1 {
                true
            } else {
                r != 0 && r.gcd(&q) == 1
            };
            if unit && self.t_ok(tn, td, q, a)? && !out.contains(&(r as u64)) {
                out.push(r as u64);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    fn numerators_x(&self, xn: i128, xd: i128, q: i128) -> Result<Vec<u64>> {
        // |xq - b| ≤ eps/2^l
        let w = self
            .eps_c
            .checked_div(&Rational::from_int(self.level.two_l() as i128))?;
        let xq = Rational::new(mul(xn, q)?, xd)?;
        let lo = xq.checked_sub(&w)?.ceil();
        let hi = xq.checked_add(&w)?.floor();
        let mut out = Vec::new();
        let mut b = lo;
        while b <= hi && (out.len() as i128) < q {
            if self.x_ok(xn, xd, q, b)? {
                let r = b.rem_euclid(q) as u64;
                if !out.contains(&r) {
                    out.push(r);
                }
            }
            b += 1;
        }
        out.sort_unstable();
        Ok(out)
    }

    fn scan(&self, z: &TorusPoint, all: bool) -> Result<Vec<ArcLabel>> {
        let (x, t) = (z.x.fract(), z.t.fract());
        let (xn, xd, tn, td) = (x.numer(), x.denom(), t.numer(), t.denom());
        let mut out = Vec::new();
        for q in self.level.q_lo()..self.level.q_hi() {
            let qi = q as i128;
            let avals = self.numerators_t(tn, td, qi)?;
            if avals.is_empty() {
                continue;
            }
            let bvals = self.numerators_x(xn, xd, qi)?;
            for &a in &avals {
                for &b in &bvals {
                    out.push(ArcLabel { q, a, b });
                    if !all {
                        return Ok(out);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Lexicographically smallest `(q, a, b)` whose cell contains `z` modulo 1.
    pub fn classify(&self, z: &TorusPoint) -> Result<Option<ArcLabel>> {
        Ok(self.scan(z, false)?.into_iter().next())
    }

    /// Every cell containing `z` modulo 1, in lexicographic order.
    pub fn all_witnesses(&self, z: &TorusPoint) -> Result<Vec<ArcLabel>> {
        self.scan(z, true)
    }

    pub fn cell(&self, lab: ArcLabel) -> ArcCell {
        let (q, two_l, n) = (lab.q as i128, self.level.two_l() as i128, self.n as i128);
        let xr = self.eps_c * Rational::frac(1, two_l * q);
        let tr = Rational::frac(1, two_l * q * n);
        ArcCell {
            level: self.level,
            q: lab.q,
            a: lab.a,
            b: lab.b,
            x_interval: Interval::centered_at(Rational::frac(lab.b as i128, q), xr),
            t_interval: Interval::centered_at(Rational::frac(lab.a as i128, q), tr),
            t_inner_radius: match (self.dyadic, self.annulus()) {
                (true, true) => Some(Rational::frac(1, 2 * two_l * q * n)),
                (true, false) => Some(Rational::ZERO),
                (false, _) => None,
            },
        }
    }

    /// Exact check that `z` (modulo 1) lies in the given cell.
    pub fn cell_contains(&self, cell: &ArcCell, z: &TorusPoint) -> Result<bool> {
        let q = cell.q as i128;
        let dx =
            z.x.checked_sub(&Rational::new(cell.b as i128, q)?)?
                .centered()
                .abs();
        let dt =
            z.t.checked_sub(&Rational::new(cell.a as i128, q)?)?
                .centered()
                .abs();
        let xr = cell.x_interval.width() * Rational::frac(1, 2);
        let tr = cell.t_interval.width() * Rational::frac(1, 2);
        let t_in = match cell.t_inner_radius {
            Some(inner) => dt >= inner && dt < tr,
            None => dt <= tr,
        };
        Ok(dx <= xr && t_in)
    }

    pub fn membership(&self, z: &TorusPoint) -> Result<Option<ArcCell>> {
        Ok(self.classify(z)?.map(|l| self.cell(l)))
    }
}

/// Witness cell of `z` at `level`, with the default width multiplier.
pub fn arc_membership(
    z: &TorusPoint,
    level: DyadicLevel,
    n: u64,
    dyadic: bool,
) -> Result<Option<ArcCell>> {
    ArcGeometry::new(n, level, dyadic)?.membership(z)
}

/// Number of cells of `S_{Q,l}`: `Σ_{q} |A(q)|·q`.
pub fn arc_count(level: &DyadicLevel) -> u64 {
    (level.q_lo()..level.q_hi())
        .map(|q| if q == 1 { 1 } else { totient(q) * q })
        .sum()
}

/// Every cell of `S_{Q,l}` exactly once, ordered by `(q, a, b)`.
pub fn enumerate_arcs(level: DyadicLevel, n: u64) -> Result<impl Iterator<Item = ArcCell>> {
    let geo = ArcGeometry::new(n, level, false)?;
    let count = arc_count(&level);
    if count > ARC_ENUM_GUARD {
        return Err(guard(format!("{count} cells exceed the enumeration guard")));
    }
    Ok((level.q_lo()..level.q_hi()).flat_map(move |q| {
        unit_numerators(q)
            .into_iter()
            .flat_map(move |a| (0..q).map(move |b| geo.cell(ArcLabel { q, a, b })))
    }))
}

/// Convergent `a/q` of `t` with the smallest `q` satisfying `|t - a/q| ≤ 1/(Nq)`,
/// and the dyadic level of the distance.
pub fn best_rational_t(t: Rational, n: u64) -> Result<(ReducedFraction, DyadicLevel)> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    let ni = n as i128;
    let mut t = t.fract();
    if t >= Rational::frac(ni - 1, ni) {
        t = t - Rational::ONE;
    }
    let (mut num, mut den) = (t.numer(), t.denom());
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    loop {
        let c = Integer::div_floor(&num, &den);
        let (p2, q2) = (c * p1 + p0, c * q1 + q0);
        if q2 > ni {
            break;
        }
        let dist = t.dist_to(p2, q2)?;
        if dist.checked_mul(&Rational::from_int(ni * q2))? <= Rational::ONE {
            let frac = Rational::new(p2, q2)?;
            return Ok((frac, level_of(dist, q2 as u64, n)?));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let rem = num - c * den;
        if rem == 0 {
            break;
        }
        (num, den) = (den, rem);
    }
    Err(LabError::Precondition(format!(
        "no convergent of {t} within 1/(Nq) for N = {n}"
    )))
}

fn level_of(dist: Rational, q: u64, n: u64) -> Result<DyadicLevel> {
    let qb = dyadic_block(q);
    let cap = DyadicLevel::max_l(qb, n);
    let mut l = 0u32;
    if dist.is_zero() {
        l = cap;
    } else {
        let base = dist.checked_mul(&Rational::from_int((n as i128) * q as i128))?;
        while l < cap && base.checked_mul(&Rational::from_int(1i128 << (l + 1)))? <= Rational::ONE {
            l += 1;
        }
    }
    DyadicLevel::new(qb, l)
}

/// Sampling knobs for [`kernel_bound_report`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReportConfig {
    /// `x`-width multiplier for on-arc samples.
    pub eps_c: Rational,
    /// Off-arc samples keep `|x - b/q| > off_arc_eps/(2^l Q)` for every `b`.
    pub off_arc_eps: Rational,
    /// Rejection attempts per off-arc sample.
    pub max_attempts: u32,
}

impl Default for KernelReportConfig {
    fn default() -> Self {
        KernelReportConfig {
            eps_c: Rational::ONE,
            off_arc_eps: Rational::ONE,
            max_attempts: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: Rational,
    pub t: Rational,
    pub q: u64,
    pub a: u64,
    pub b: u64,
    pub l: u32,
    #[serde(rename = "Q")]
    pub q_block: u64,
    pub abs_k: f64,
    pub ratio: f64,
    pub on_arc: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(mut v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let at = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
        Some(Quantiles {
            p50: at(0.5),
            p90: at(0.9),
            p99: at(0.99),
            max: *v.last().unwrap(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub n: u64,
    pub level: DyadicLevel,
    pub config: KernelReportConfig,
    pub samples: Vec<KernelSample>,
    /// `|K|/(2^{l/2}√N)` over on-arc samples.
    pub on_arc: Option<Quantiles>,
    /// `|K|/√N` over off-arc samples.
    pub off_arc: Option<Quantiles>,
    pub off_arc_failures: u64,
}

impl KernelReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "x", "t", "q", "a", "b", "l", "Q", "abs_K", "ratio", "on_arc",
        ])?;
        for s in &self.samples {
            wr.write_record([
                s.x.to_string(),
                s.t.to_string(),
                s.q.to_string(),
                s.a.to_string(),
                s.b.to_string(),
                s.l.to_string(),
                s.q_block.to_string(),
                format!("{:.12e}", s.abs_k),
                format!("{:.12e}", s.ratio),
                s.on_arc.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

const FINE: i128 = 1 << 20;

fn sample_tau(rng: &mut ChaCha8Rng, two_l: i128, q: i128, n: i128, annulus: bool) -> Rational {
    let sign = if rng.gen::<bool>() { 1 } else { -1 };
    let mag = if annulus {
        Rational::frac(FINE + rng.gen_range(0..FINE), 2 * two_l * q * n * FINE)
    } else {
        Rational::frac(rng.gen_range(0..FINE), two_l * q * n * FINE)
    };
    if sign > 0 {
        mag
    } else {
        -mag
    }
}

/// Samples `|K|` on the cells of `level` and away from them, seeded.
pub fn kernel_bound_report(
    n: u64,
    level: DyadicLevel,
    sample_count: u64,
    rng_seed: u64,
) -> Result<KernelReport> {
    kernel_bound_report_with(
        n,
        level,
        sample_count,
        rng_seed,
        KernelReportConfig::default(),
    )
}

pub fn kernel_bound_report_with(
    n: u64,
    level: DyadicLevel,
    sample_count: u64,
    rng_seed: u64,
    config: KernelReportConfig,
) -> Result<KernelReport> {
    if sample_count == 0 {
        return Err(invalid("sample_count must be at least 1"));
    }
    let geo = ArcGeometry::new(n, level, true)?.with_eps(config.eps_c)?;
    let kernel = Kernel::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let annulus = level.has_annulus(n);
    let (two_l, ni) = (level.two_l() as i128, n as i128);
    let sqrt_n = (n as f64).sqrt();
    let on_norm = sqrt_n * (level.two_l() as f64).sqrt();
    let qs: Vec<u64> = (level.q_lo()..level.q_hi().min(n + 1)).collect();
    let mut samples = Vec::with_capacity(2 * sample_count as usize);
    let mut failures = 0;

    let pick = |rng: &mut ChaCha8Rng| {
        let q = qs[rng.gen_range(0..qs.len())];
        let units = unit_numerators(q);
        (q, units[rng.gen_range(0..units.len())])
    };

    for _ in 0..sample_count {
        let (q, a) = pick(&mut rng);
        let b = rng.gen_range(0..q);
        let qi = q as i128;
        let tau = sample_tau(&mut rng, two_l, qi, ni, annulus);
        let u = Rational::frac(2 * rng.gen_range(0..=FINE) - FINE, FINE);
        let off = u * config.eps_c * Rational::frac(1, two_l * qi);
        let x = (Rational::frac(b as i128, qi) + off).fract();
        let t = (Rational::frac(a as i128, qi) + tau).fract();
        debug_assert!(geo.cell_contains(&geo.cell(ArcLabel { q, a, b }), &TorusPoint::new(x, t))?);
        let abs_k = kernel.eval(x.to_f64(), t.to_f64())?.norm();
        samples.push(KernelSample {
            x,
            t,
            q,
            a,
            b,
            l: level.l,
            q_block: level.q_block,
            abs_k,
            ratio: abs_k / on_norm,
            on_arc: true,
        });
    }

    let radius = config.off_arc_eps * Rational::frac(1, two_l * level.q_block as i128);
    for _ in 0..sample_count {
        let (q, a) = pick(&mut rng);
        let qi = q as i128;
        let tau = sample_tau(&mut rng, two_l, qi, ni, annulus);
        let t = (Rational::frac(a as i128, qi) + tau).fract();
        let mut found = None;
        for _ in 0..config.max_attempts {
            let x = Rational::frac(rng.gen_range(0..(1i128 << 30)), 1 << 30);
            let b = (x * Rational::from_int(qi)).floor();
            let near = [b, b + 1]
                .into_iter()
                .min_by_key(|&bb| x.torus_dist(&Rational::frac(bb, qi)).unwrap())
                .unwrap();
            if x.torus_dist(&Rational::frac(near, qi))? > radius {
                found = Some((x, near.rem_euclid(qi) as u64));
                break;
            }
        }
        let Some((x, b)) = found else {
            failures += 1;
            continue;
        };
        let abs_k = kernel.eval(x.to_f64(), t.to_f64())?.norm();
        samples.push(KernelSample {
            x,
            t,
            q,
            a,
            b,
            l: level.l,
            q_block: level.q_block,
            abs_k,
            ratio: abs_k / sqrt_n,
            on_arc: false,
        });
    }

    let on = Quantiles::of(
        samples
            .iter()
            .filter(|s| s.on_arc)
            .map(|s| s.ratio)
            .collect(),
    );
    let off = Quantiles::of(
        samples
            .iter()
            .filter(|s| !s.on_arc)
            .map(|s| s.ratio)
            .collect(),
    );
    Ok(KernelReport {
        n,
        level,
        config,
        samples,
        on_arc: on,
        off_arc: off,
        off_arc_failures: failures,
    })
}
