use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{lifts, window_range};
use crate::arcs::DyadicLevel;
use crate::arith::mod_inverse;
use crate::error::{guard, invalid, LabError, Result};
use crate::rational::Rational;

/// Largest `Q` for the `t`-only system.
pub const SYSTEM_MAX_Q: u64 = 256;

/// Largest `Q` when the `x`-inequalities are included.
pub const SYSTEM_MAX_Q_WITH_X: u64 = 64;

/// Two targets `t, t'` (and optionally `x, x'`) for the joint system
/// `a1/q1 - a2/q2 ≈ t`, `a1/q1 - a3/q3 ≈ t'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemQuery {
    pub t: Rational,
    pub t_prime: Rational,
    #[serde(default)]
    pub x: Option<Rational>,
    #[serde(default)]
    pub x_prime: Option<Rational>,
    #[serde(rename = "N")]
    pub n: u64,
    pub level: DyadicLevel,
    pub alpha_cap: u64,
    #[serde(rename = "C_t", default = "unit")]
    pub c_t: Rational,
    #[serde(rename = "C_x", default = "unit")]
    pub c_x: Rational,
}

fn unit() -> Rational {
    Rational::ONE
}

impl SystemQuery {
    pub fn new(t: Rational, t_prime: Rational, n: u64, level: DyadicLevel, alpha_cap: u64) -> Self {
        SystemQuery {
            t,
            t_prime,
            x: None,
            x_prime: None,
            n,
            level,
            alpha_cap,
            c_t: Rational::ONE,
            c_x: Rational::ONE,
        }
    }

    pub fn with_x(mut self, x: Rational, x_prime: Rational) -> Self {
        self.x = Some(x);
        self.x_prime = Some(x_prime);
        self
    }

    /// Half-width `C_t/(N Q 2^l)`.
    pub fn t_window(&self) -> Rational {
        self.c_t
            * Rational::frac(
                1,
                (self.n * self.level.q_block * self.level.two_l()) as i128,
            )
    }

    /// Half-width `C_x/(Q 2^l)`.
    pub fn x_window(&self) -> Rational {
        self.c_x * Rational::frac(1, (self.level.q_block * self.level.two_l()) as i128)
    }

    fn xs(&self) -> Result<Option<(Rational, Rational)>> {
        match (self.x, self.x_prime) {
            (Some(x), Some(xp)) => Ok(Some((x, xp))),
            (None, None) => Ok(None),
            _ => Err(invalid("x and x' must be given together")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("N must be positive"));
        }
        if self.c_t <= Rational::ZERO || self.c_x <= Rational::ZERO {
            return Err(invalid("window constants must be positive"));
        }
        let with_x = self.xs()?.is_some();
        let cap = if with_x {
            SYSTEM_MAX_Q_WITH_X
        } else {
            SYSTEM_MAX_Q
        };
        if self.level.q_hi() > 2 * cap {
            return Err(guard(format!("Q = {} exceeds {cap}", self.level.q_block)));
        }
        let w = self.t_window();
        let sep = self.t.torus_dist(&self.t_prime)?;
        if sep <= w.checked_add(&w)? {
            return Err(LabError::Precondition(format!(
                "t and t' are {sep} apart, need more than twice the window {w}"
            )));
        }
        Ok(())
    }
}

/// Solutions `(a1, a2)` or `(b1, b2)` of `|v1/q1 - v2/q2 - c| ≤ w` with
/// `|v_i| ≤ q_i - 1`, bucketed by `v1 + q1 - 1`.
fn pair_counts(q1: i128, q2: i128, c: Rational, w: Rational, units: bool) -> Result<Vec<u32>> {
    let d = q1.gcd(&q2);
    let (m1, m2) = (q1 / d, q2 / d);
    let den = d * m1 * m2;
    let cap = (q1 - 1) * m2 + (q2 - 1) * m1;
    let inv = mod_inverse(m2.rem_euclid(m1), m1).ok_or(LabError::Overflow("modular inverse"))?;
    let mut out = vec![0u32; (2 * q1 - 1) as usize];
    let (lo, hi) = window_range(c, w, den, cap)?;
    for s in lo..=hi {
        // s = v1 m2 - v2 m1
        for v1 in lifts((s * inv).rem_euclid(m1), m1, q1 - 1) {
            let v2 = (v1 * m2 - s) / m1;
            if v2.abs() > q2 - 1 {
                continue;
            }
            if units && (v1.gcd(&q1) != 1 || v2.gcd(&q2) != 1) {
                continue;
            }
            out[(v1 + q1 - 1) as usize] += 1;
        }
    }
    Ok(out)
}

/// Number of tuples `(a1, a2, a3, q1, q2, q3)`, or `(a, b, q)` nonuples when
/// `x, x'` are given, solving the joint system with `gcd(q1, q_j) ≤ alpha_cap`.
pub fn count_system_solutions(qy: &SystemQuery) -> Result<u64> {
    qy.validate()?;
    let xs = qy.xs()?;
    let (wt, wx) = (qy.t_window(), qy.x_window());
    let qs: Vec<i128> = (qy.level.q_lo() as i128..qy.level.q_hi() as i128).collect();
    let cap = qy.alpha_cap as i128;
    let mut total: u128 = 0;

    for &q1 in &qs {
        let width = (2 * q1 - 1) as usize;
        // Per target: Σ over q_j of (#a_j per a1) ⊗ (#b_j per b1).
        let mut acc: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
        for (slot, (t, x)) in [(qy.t, xs.map(|v| v.0)), (qy.t_prime, xs.map(|v| v.1))]
            .into_iter()
            .enumerate()
        {
            let dim = if x.is_some() { width * width } else { width };
            let mut m = vec![0u64; dim];
            for &qj in &qs {
                if q1.gcd(&qj) > cap {
                    continue;
                }
                let a = pair_counts(q1, qj, t, wt, true)?;
                if a.iter().all(|&c| c == 0) {
                    continue;
                }
                match x {
                    None => m.iter_mut().zip(&a).for_each(|(s, &c)| *s += c as u64),
                    Some(x) => {
                        let b = pair_counts(q1, qj, x, wx, false)?;
                        for (ia, &ca) in a.iter().enumerate().filter(|e| *e.1 > 0) {
                            let row = &mut m[ia * width..(ia + 1) * width];
                            row.iter_mut()
                                .zip(&b)
                                .for_each(|(s, &cb)| *s += ca as u64 * cb as u64);
                        }
                    }
                }
            }
            acc[slot] = m;
        }
        for (u, v) in acc[0].iter().zip(&acc[1]) {
            total += *u as u128 * *v as u128;
        }
    }
    u64::try_from(total).map_err(|_| LabError::Overflow("solution count"))
}
