//! Phase sums `Σ a_n e(nx + n²t)`, the weighted kernel, and maximal-function
//! sweeps over the `(x, t)` grid.

mod sweep;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{e, is_prime};
use crate::error::{invalid, LabError, Result};
use crate::rational::Rational;

pub use sweep::{sup_profile, SupProfile};

/// Largest `N` accepted by the evaluators.
pub const MAX_N: u64 = 1 << 24;

/// Terms between exact reseeds of the phase recurrence.
const RESEED: usize = 64;

/// Scale `N` and threshold `λ = M·N^{1/4}`. Only `λ` is stored so `M` can
/// never disagree with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub n: u64,
    pub lambda: f64,
    #[serde(default = "default_eps")]
    pub epsilon_c: f64,
}

fn default_eps() -> f64 {
    1.0
}

impl ScaleParams {
    pub fn from_lambda(n: u64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N must be positive"));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(ScaleParams {
            n,
            lambda,
            epsilon_c: 1.0,
        })
    }

    pub fn from_m(n: u64, m: f64) -> Result<Self> {
        Self::from_lambda(n, m * (n as f64).powf(0.25))
    }

    pub fn m(&self) -> f64 {
        self.lambda / (self.n as f64).powf(0.25)
    }

    /// Whether `1 ≤ M ≤ N^{1/4}`, the range the level-set theory addresses.
    pub fn in_theorem_range(&self) -> bool {
        let m = self.m();
        (1.0..=(self.n as f64).powf(0.25) * (1.0 + 1e-12)).contains(&m)
    }
}

/// How a coefficient vector was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    ConstantNormalized,
    UnimodularRandom { seed: u64 },
    SingleFrequency { freq: i64 },
    PrimeSupportCubic { theta: f64 },
    Custom,
}

/// Coefficients `a_n` for `n_min ≤ n ≤ n_min + len - 1`, zero elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub n_min: i64,
    pub values: Vec<Complex64>,
    pub scheme: Scheme,
}

impl CoefficientVector {
    /// `a_n = N^{-1/2}` for `1 ≤ n ≤ N`.
    pub fn constant(n: u64) -> Self {
        let v = 1.0 / (n as f64).sqrt();
        CoefficientVector {
            n_min: 1,
            values: vec![Complex64::new(v, 0.0); n as usize],
            scheme: Scheme::ConstantNormalized,
        }
    }

    /// `a_n = 1` for `1 ≤ n ≤ len`.
    pub fn ones(len: u64) -> Self {
        CoefficientVector {
            n_min: 1,
            values: vec![Complex64::new(1.0, 0.0); len as usize],
            scheme: Scheme::Custom,
        }
    }

    /// `a_n = e(θ_n)/√N` with `θ_n` drawn from a seeded ChaCha stream.
    pub fn unimodular_random(n: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = 1.0 / (n as f64).sqrt();
        let values = (0..n).map(|_| e(rng.gen::<f64>()) * s).collect();
        CoefficientVector {
            n_min: 1,
            values,
            scheme: Scheme::UnimodularRandom { seed },
        }
    }

    pub fn single_frequency(freq: i64) -> Self {
        CoefficientVector {
            n_min: freq,
            values: vec![Complex64::new(1.0, 0.0)],
            scheme: Scheme::SingleFrequency { freq },
        }
    }

    /// `a_p = e(p³θ)/√π(N)` on primes `p ≤ N`.
    pub fn prime_support_cubic(n: u64, theta: f64) -> Result<Self> {
        let count = (2..=n).filter(|&p| is_prime(p)).count();
        if count == 0 {
            return Err(invalid("no primes up to N"));
        }
        let s = 1.0 / (count as f64).sqrt();
        let values = (1..=n)
            .map(|k| {
                if is_prime(k) {
                    let k3 = (k as f64).powi(3);
                    e(frac_mul(k3, theta)) * s
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(CoefficientVector {
            n_min: 1,
            values,
            scheme: Scheme::PrimeSupportCubic { theta },
        })
    }

    pub fn custom(n_min: i64, values: Vec<Complex64>) -> Self {
        CoefficientVector {
            n_min,
            values,
            scheme: Scheme::Custom,
        }
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.values.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> Complex64 {
        if n < self.n_min || n > self.n_max() {
            return Complex64::new(0.0, 0.0);
        }
        self.values[(n - self.n_min) as usize]
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }
}

/// The smooth bump `w(u) = exp(1 - 1/(1 - (u/2)²))` on `|u| < 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile;

impl WeightProfile {
    pub fn eval(&self, u: f64) -> f64 {
        let v = u / 2.0;
        if v.abs() >= 1.0 {
            return 0.0;
        }
        (1.0 - 1.0 / (1.0 - v * v)).exp()
    }

    /// `w(n/N)` for `n` from `lo` to `hi` inclusive.
    pub fn samples(&self, n: u64, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|k| self.eval(k as f64 / n as f64)).collect()
    }
}

/// Uniform grid `x_j = j/N`, `t_k = k/(c_t N²)` covering `[0,1)²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: u64,
    pub c_t: u64,
}

impl GridSpec {
    pub fn new(n: u64, c_t: u64) -> Result<Self> {
        if n == 0 || c_t == 0 {
            return Err(invalid("grid needs N ≥ 1 and c_t ≥ 1"));
        }
        if n > MAX_N {
            return Err(invalid(format!("N = {n} exceeds 2^24")));
        }
        Ok(GridSpec { n, c_t })
    }

    pub fn x_count(&self) -> u64 {
        self.n
    }

    pub fn t_count(&self) -> u64 {
        self.c_t * self.n * self.n
    }

    pub fn x_step(&self) -> Rational {
        Rational::frac(1, self.n as i128)
    }

    pub fn t_step(&self) -> Rational {
        Rational::frac(1, self.t_count() as i128)
    }

    pub fn x_at(&self, j: u64) -> Rational {
        Rational::frac(j as i128, self.n as i128)
    }

    pub fn t_at(&self, k: u64) -> Rational {
        Rational::frac(k as i128, self.t_count() as i128)
    }
}

/// Fractional part of `n·x` with the rounding error of the product folded back in.
#[inline]
pub fn frac_mul(n: f64, x: f64) -> f64 {
    let p = n * x;
    let err = n.mul_add(x, -p);
    let r = (p - p.floor()) + err;
    r - r.floor()
}

/// Neumaier-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

fn check_point(n: u64, x: f64, t: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    if n > MAX_N {
        return Err(LabError::Guard(format!("N = {n} exceeds 2^24")));
    }
    if !x.is_finite() || !t.is_finite() {
        return Err(invalid("x and t must be finite"));
    }
    Ok(())
}

/// `Σ c_i e(n x + n² t)` over `n = n0, n0+1, …` by the second-order recurrence
/// `u_{n+1} = u_n r_n`, `r_{n+1} = r_n e(2t)`, reseeded exactly every few terms.
pub(crate) fn quad_phase_sum(
    n0: i64,
    coeffs: impl Iterator<Item = Complex64>,
    x: f64,
    t: f64,
) -> Complex64 {
    let x = x - x.floor();
    let t = t - t.floor();
    let rot = e(frac_mul(2.0, t));
    let mut acc = CompensatedSum::default();
    let mut term = Complex64::new(0.0, 0.0);
    let mut step = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.enumerate() {
        let n = n0 + i as i64;
        if i % RESEED == 0 {
            let nf = n as f64;
            term = e(frac_mul(nf, x) + frac_mul(nf * nf, t));
            step = e(x + frac_mul(2.0 * nf + 1.0, t));
        }
        if c.re != 0.0 || c.im != 0.0 {
            acc.add(c * term);
        }
        term *= step;
        step *= rot;
    }
    acc.value()
}

/// `Σ a_n [w(n/N)] e(nx + n²t)`.
pub fn eval_phase_sum(
    coeffs: &CoefficientVector,
    weighted: bool,
    n: u64,
    x: f64,
    t: f64,
) -> Result<Complex64> {
    check_point(n, x, t)?;
    if weighted {
        let w = WeightProfile;
        let nn = n as f64;
        let it = coeffs
            .values
            .iter()
            .enumerate()
            .map(|(i, &a)| a * w.eval((coeffs.n_min + i as i64) as f64 / nn));
        Ok(quad_phase_sum(coeffs.n_min, it, x, t))
    } else {
        Ok(quad_phase_sum(
            coeffs.n_min,
            coeffs.values.iter().copied(),
            x,
            t,
        ))
    }
}

/// Reusable evaluator for the kernel `K(x,t) = Σ_{|n| ≤ 2N} w(n/N)² e(nx + n²t)`.
#[derive(Clone, Debug)]
pub struct Kernel {
    n: u64,
    w2: Vec<f64>,
}

impl Kernel {
    pub fn new(n: u64) -> Result<Self> {
        check_point(n, 0.0, 0.0)?;
        let two_n = 2 * n as i64;
        let w2 = WeightProfile
            .samples(n, -two_n, two_n)
            .into_iter()
            .map(|w| w * w)
            .collect();
        Ok(Kernel { n, w2 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `Σ w(n/N)²`, the value at the origin and a cap on `|K|`.
    pub fn mass(&self) -> f64 {
        self.w2.iter().sum()
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        check_point(self.n, x, t)?;
        let it = self.w2.iter().map(|&w| Complex64::new(w, 0.0));
        Ok(quad_phase_sum(-2 * self.n as i64, it, x, t))
    }
}

pub fn eval_kernel(n: u64, x: f64, t: f64) -> Result<Complex64> {
    Kernel::new(n)?.eval(x, t)
}

/// Table of `e(m/L)` for `0 ≤ m < L` split into two levels of size about `√L`.
pub(crate) struct PhaseTable {
    l: u64,
    block: u64,
    hi: Vec<Complex64>,
    lo: Vec<Complex64>,
}

impl PhaseTable {
    pub(crate) fn new(l: u64) -> Self {
        let block = ((l as f64).sqrt().ceil() as u64).max(1);
        let lf = l as f64;
        let lo = (0..block).map(|r| e(r as f64 / lf)).collect();
        let hi = (0..=l / block)
            .map(|h| e(((h * block) % l) as f64 / lf))
            .collect();
        PhaseTable { l, block, hi, lo }
    }

    #[inline]
    pub(crate) fn get(&self, m: u64) -> Complex64 {
        debug_assert!(m < self.l);
        self.hi[(m / self.block) as usize] * self.lo[(m % self.block) as usize]
    }
}

/// Largest `t_count · (number of coefficients)` accepted by [`sup_over_t`].
pub const SUP_COST_GUARD: u128 = 1 << 36;

/// `max_k |Σ a_n e(n x + n² t_k)|` over the grid's `t`-points at a single `x`,
/// returning the value and the smallest maximizing `t`.
pub fn sup_over_t(
    coeffs: &CoefficientVector,
    n: u64,
    x: f64,
    grid: &GridSpec,
) -> Result<(f64, Rational)> {
    check_point(n, x, 0.0)?;
    if grid.t_count() == 0 {
        return Err(invalid("empty grid"));
    }
    if grid.t_count() < n * n {
        return Err(invalid("grid t-step exceeds 1/N²"));
    }
    let l = grid.t_count();
    let cost = l as u128 * coeffs.values.len() as u128;
    if cost > SUP_COST_GUARD {
        return Err(LabError::Guard(format!(
            "sup over {l} t-points × {} terms",
            coeffs.values.len()
        )));
    }
    let x = x - x.floor();
    let table = PhaseTable::new(l);
    let mut b = Vec::new();
    let mut idx = Vec::new();
    let mut inc = Vec::new();
    for (i, &a) in coeffs.values.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let m = coeffs.n_min + i as i64;
        b.push(a * e(frac_mul(m as f64, x)));
        let sq = ((m as i128 * m as i128) % l as i128) as u64;
        inc.push(sq);
        idx.push(0u64);
    }
    let mut best = -1.0f64;
    let mut arg = 0u64;
    for k in 0..l {
        let mut acc = CompensatedSum::default();
        for ((bi, ix), &st) in b.iter().zip(idx.iter_mut()).zip(&inc) {
            acc.add(*bi * table.get(*ix));
            *ix += st;
            if *ix >= l {
                *ix -= l;
            }
        }
        let v = acc.value().norm();
        if v > best * (1.0 + 1e-12) {
            best = v;
            arg = k;
        }
    }
    Ok((best, grid.t_at(arg)))
}

/// Riemann-sum estimate `(1/N)·#{x_j : sup_t ≥ λ}` of the level-set measure.
pub fn level_set_measure(
    coeffs: &CoefficientVector,
    params: &ScaleParams,
    grid: &GridSpec,
) -> Result<f64> {
    let prof = sup_profile(coeffs, grid)?;
    Ok(prof.level_set_measure(params.lambda))
}

/// `(Σ_x sup_t(x)^p / N)^{1/p}` over the `x`-grid.
pub fn lp_norm_of_sup(coeffs: &CoefficientVector, n: u64, p: f64, grid: &GridSpec) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("p must be ≥ 1, got {p}")));
    }
    if grid.n != n {
        return Err(invalid("grid N differs from N"));
    }
    Ok(sup_profile(coeffs, grid)?.lp_norm(p))
}
