//! Full-grid maximal function: for every `x_j = j/N`, the maximum over the
//! `t`-grid of `|Σ a_n e(n x_j + n² t_k)|`.
//!
//! Each `t_k` costs one length-`N` inverse FFT over residues `n mod N`.
//! When `4 | N`, one FFT also yields the eight shifts `t_k + m/8`, since
//! `e(n²/8)` depends only on `n mod 4`. Real coefficients add the symmetry
//! `|S(-x,-t)| = |S(x,t)|`, halving the remaining work.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{CoefficientVector, GridSpec, PhaseTable};
use crate::error::{invalid, LabError, Result};
use crate::rational::Rational;

/// Largest `N · t_count` the sweep accepts.
pub const SWEEP_GUARD: u128 = 1 << 40;

const RESEED_STEPS: u64 = 1024;

/// Per-`x` maxima over the `t`-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupProfile {
    pub grid: GridSpec,
    pub sup: Vec<f64>,
    /// `t`-index of a maximizer for each `x_j`.
    pub argmax_k: Vec<u64>,
}

impl SupProfile {
    pub fn argmax_t(&self, j: usize) -> Rational {
        self.grid.t_at(self.argmax_k[j])
    }

    pub fn level_set_measure(&self, lambda: f64) -> f64 {
        let hits = self.sup.iter().filter(|&&v| v >= lambda).count();
        hits as f64 / self.sup.len() as f64
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.sup.iter().map(|v| v.powf(p)).sum();
        (s / self.sup.len() as f64).powf(1.0 / p)
    }

    pub fn max(&self) -> f64 {
        self.sup.iter().copied().fold(0.0, f64::max)
    }
}

/// Index of `-j` modulo `nu`, for `j < nu`.
#[inline]
fn mirror(j: usize, nu: usize) -> usize {
    if j == 0 {
        0
    } else {
        nu - j
    }
}

struct Best {
    val: Vec<f64>,
    arg: Vec<u64>,
}

impl Best {
    /// Squared value below which a candidate cannot change any of the slots it feeds.
    #[inline]
    fn floor2(&self, j1: usize, j2: usize, real: bool, nu: usize) -> f64 {
        let mut m = self.val[j1].min(self.val[j2]);
        if real {
            m = m
                .min(self.val[mirror(j1, nu)])
                .min(self.val[mirror(j2, nu)]);
        }
        if m < 0.0 {
            -1.0
        } else {
            m * m * (1.0 - 1e-11)
        }
    }

    #[inline]
    fn offer(&mut self, j: usize, v: f64, k: u64) {
        let b = self.val[j];
        if v > b * (1.0 + 1e-12) || (v >= b * (1.0 - 1e-12) && k < self.arg[j]) {
            self.val[j] = v;
            self.arg[j] = k;
        }
    }
}

fn argmax8(ev: Complex64, od: Complex64, c: Complex64, omega: &[Complex64; 4]) -> u64 {
    let mut bv = -1.0;
    let mut bm = 0u64;
    for m in 0..8u64 {
        let base = if m % 2 == 0 { ev } else { od };
        let w = omega[(m % 4) as usize];
        let z = if m < 4 { base + w * c } else { base - w * c };
        let v = z.norm_sqr();
        if v > bv * (1.0 + 1e-12) {
            bv = v;
            bm = m;
        }
    }
    bm
}

/// Nonzero terms `a_m e(m² t_k)` stepped along the `t`-grid, kept as parallel arrays.
struct Terms {
    bin: Vec<usize>,
    cur: Vec<Complex64>,
    mult: Vec<Complex64>,
    a: Vec<Complex64>,
    sq: Vec<u64>,
    /// `Some(b)` when the bins are `b, b + 1, ...` wrapping once around all `N`
    /// residues, so the buffer can be copied rather than accumulated.
    rotation: Option<usize>,
}

impl Terms {
    fn new(coeffs: &CoefficientVector, n: u64, l: u64, table: &PhaseTable) -> Self {
        let mut t = Terms {
            bin: Vec::new(),
            cur: Vec::new(),
            mult: Vec::new(),
            a: Vec::new(),
            sq: Vec::new(),
            rotation: None,
        };
        for (i, &a) in coeffs.values.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let m = coeffs.n_min as i128 + i as i128;
            let sq = ((m * m) % l as i128) as u64;
            t.bin.push(m.rem_euclid(n as i128) as usize);
            t.cur.push(a);
            t.mult.push(table.get(sq));
            t.a.push(a);
            t.sq.push(sq);
        }
        let nu = n as usize;
        if t.bin.len() == nu
            && t.bin
                .iter()
                .enumerate()
                .all(|(i, &b)| b == (t.bin[0] + i) % nu)
        {
            t.rotation = Some(t.bin[0]);
        }
        t
    }

    fn reseed(&mut self, k: u64, l: u64, table: &PhaseTable) {
        for ((c, &a), &sq) in self.cur.iter_mut().zip(&self.a).zip(&self.sq) {
            *c = a * table.get((sq as u128 * k as u128 % l as u128) as u64);
        }
    }

    /// Writes the current residue sums into `buf` and steps every term once.
    fn load_and_step(&mut self, buf: &mut [Complex64]) {
        match self.rotation {
            Some(b) => {
                let split = buf.len() - b;
                buf[b..].copy_from_slice(&self.cur[..split]);
                buf[..b].copy_from_slice(&self.cur[split..]);
            }
            None => {
                buf.fill(Complex64::new(0.0, 0.0));
                for (&bin, &c) in self.bin.iter().zip(&self.cur) {
                    buf[bin] += c;
                }
            }
        }
        for (c, &m) in self.cur.iter_mut().zip(&self.mult) {
            *c *= m;
        }
    }
}

/// Sweeps the whole grid and returns `sup_t |S(x_j, t)|` for every `j`.
pub fn sup_profile(coeffs: &CoefficientVector, grid: &GridSpec) -> Result<SupProfile> {
    let n = grid.n;
    let l = grid.t_count();
    if n == 0 || l == 0 {
        return Err(invalid("empty grid"));
    }
    if n as u128 * l as u128 > SWEEP_GUARD {
        return Err(LabError::Guard(format!("grid of {n} × {l} points")));
    }
    let nu = n as usize;
    let table = PhaseTable::new(l);
    let mut terms = Terms::new(coeffs, n, l, &table);

    let fold8 = n.is_multiple_of(4) && l.is_multiple_of(8);
    let real = coeffs.is_real();
    let period = if fold8 { l / 8 } else { l };
    let last = if real { period / 2 } else { period - 1 };

    let mut best = Best {
        val: vec![-1.0; nu],
        arg: vec![u64::MAX; nu],
    };
    let fft = FftPlanner::new().plan_fft_inverse(nu);
    let mut buf = vec![Complex64::new(0.0, 0.0); nu];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let omega = [
        Complex64::new(1.0, 0.0),
        Complex64::new(
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ),
        Complex64::new(0.0, 1.0),
        Complex64::new(
            -std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ),
    ];
    let (q4, h2) = (nu / 4, nu / 2);

    for k in 0..=last {
        if k % RESEED_STEPS == 0 {
            terms.reseed(k, l, &table);
        }
        terms.load_and_step(&mut buf);
        fft.process_with_scratch(&mut buf, &mut scratch);

        if fold8 {
            // x_j and x_j + 1/2 see the same eight values, shifted by four in m.
            // Slot j reads the quarters starting at j, j + N/4, j + N/2, j + 3N/4.
            let (lo, hi) = buf.split_at(h2);
            let ((b0, b1), (b2, b3)) = (lo.split_at(q4), hi.split_at(q4));
            for (r, [p0, p1, p2, p3]) in [(0, [b0, b1, b2, b3]), (q4, [b1, b2, b3, b0])] {
                let quads = p0.iter().zip(p1).zip(p2).zip(p3);
                for (i, (((&s0, &s1), &s2), &s3)) in quads.enumerate() {
                    let j = r + i;
                    let ev = (s0 + s2) * 0.5;
                    let od = (s1 + s3) * 0.5;
                    let c = (s0 - s2) * 0.5;
                    let g = ev * c.conj();
                    let h = od * c.conj();
                    let cn = c.norm_sqr();
                    let even = ev.norm_sqr() + 2.0 * g.re.abs().max(g.im.abs());
                    let odd = od.norm_sqr()
                        + std::f64::consts::SQRT_2 * (h.re + h.im).abs().max((h.im - h.re).abs());
                    let v2 = cn + even.max(odd);
                    if v2 <= best.floor2(j, j + h2, real, nu) {
                        continue;
                    }
                    let m = argmax8(ev, od, c, &omega);
                    let v = v2.max(0.0).sqrt();
                    for (jj, mm) in [(j, m), (j + h2, (m + 4) % 8)] {
                        let kf = k + mm * period;
                        best.offer(jj, v, kf);
                        if real {
                            best.offer(mirror(jj, nu), v, (l - kf) % l);
                        }
                    }
                }
            }
        } else {
            for (j, z) in buf.iter().enumerate() {
                let v = z.norm();
                best.offer(j, v, k);
                if real {
                    best.offer(mirror(j, nu), v, (l - k) % l);
                }
            }
        }
    }
    Ok(SupProfile {
        grid: *grid,
        sup: best.val,
        argmax_k: best.arg,
    })
}
