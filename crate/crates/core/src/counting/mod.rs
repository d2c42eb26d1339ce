//! Enumeration of admissible pairs, b-witness sets, separated representation
//! counts, box censuses and two-target system counts.

mod admissible;
mod census;
mod system;

pub use admissible::{
    b_witness_bound, b_witness_set, count_l_separated, enumerate_admissible, lemma_bound,
    AdmissiblePair, LReport, Witness, WITNESS_GUARD,
};
pub use census::{box_census, BoxAggregates, BoxGrid, BoxVariants, CENSUS_MAX_Q};
pub use system::{count_system_solutions, SystemQuery, SYSTEM_MAX_Q, SYSTEM_MAX_Q_WITH_X};

use serde::{Deserialize, Serialize};

use crate::arcs::DyadicLevel;
use crate::arith::is_power_of_two;
use crate::error::{invalid, Result};
use crate::rational::Rational;

/// Largest `Q` accepted by the admissible-pair enumeration.
pub const ADMISSIBLE_MAX_Q: u64 = 1 << 10;

/// Target `(x, t)` and the parameters defining admissibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleQuery {
    pub x: Rational,
    pub t: Rational,
    #[serde(rename = "N")]
    pub n: u64,
    pub level: DyadicLevel,
    #[serde(rename = "D")]
    pub d_block: u64,
    #[serde(rename = "P")]
    pub p_block: u64,
    #[serde(rename = "F")]
    pub f_block: u64,
    #[serde(rename = "C_t", default = "unit")]
    pub c_t: Rational,
    #[serde(rename = "C_x", default = "unit")]
    pub c_x: Rational,
}

fn unit() -> Rational {
    Rational::ONE
}

impl AdmissibleQuery {
    pub fn new(
        x: Rational,
        t: Rational,
        n: u64,
        level: DyadicLevel,
        d: u64,
        p: u64,
        f: u64,
    ) -> Result<Self> {
        let q = AdmissibleQuery {
            x,
            t,
            n,
            level,
            d_block: d,
            p_block: p,
            f_block: f,
            c_t: Rational::ONE,
            c_x: Rational::ONE,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_constants(mut self, c_t: Rational, c_x: Rational) -> Result<Self> {
        self.c_t = c_t;
        self.c_x = c_x;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("D", self.d_block),
            ("P", self.p_block),
            ("F", self.f_block),
        ] {
            if !is_power_of_two(v) {
                return Err(invalid(format!("{name} = {v} is not a power of two")));
            }
        }
        if !(self.f_block <= self.p_block && self.p_block <= self.d_block) {
            return Err(invalid("need F ≤ P ≤ D"));
        }
        if self.d_block > 2 * self.level.q_block {
            return Err(invalid("need D ≤ 2Q"));
        }
        if self.c_t <= Rational::ZERO || self.c_x <= Rational::ZERO {
            return Err(invalid("window constants must be positive"));
        }
        if self.n == 0 {
            return Err(invalid("N must be positive"));
        }
        Ok(())
    }

    /// Half-width `C_t/(2^l N Q)` of the `t`-window.
    pub fn t_window(&self) -> Rational {
        self.c_t
            * Rational::frac(
                1,
                (self.level.two_l() * self.n * self.level.q_block) as i128,
            )
    }

    /// Half-width `C_x/(2^l Q)` of the `x`-window.
    pub fn x_window(&self) -> Rational {
        self.c_x * Rational::frac(1, (self.level.two_l() * self.level.q_block) as i128)
    }

    pub(crate) fn in_block(v: i128, block: u64) -> bool {
        v >= block as i128 && v < 2 * block as i128
    }
}

/// Integers `s` with `|s/den - center| ≤ width`, clipped to `|s| ≤ cap`.
pub(crate) fn window_range(
    center: Rational,
    width: Rational,
    den: i128,
    cap: i128,
) -> Result<(i128, i128)> {
    let d = Rational::from_int(den);
    let lo = center
        .checked_sub(&width)?
        .checked_mul(&d)?
        .ceil()
        .max(-cap);
    let hi = center
        .checked_add(&width)?
        .checked_mul(&d)?
        .floor()
        .min(cap);
    Ok((lo, hi))
}

/// Values `v` with `|v| ≤ bound` and `v ≡ r (mod m)`, ascending.
pub(crate) fn lifts(r: i128, m: i128, bound: i128) -> impl Iterator<Item = i128> {
    let start = -bound + (r + bound).rem_euclid(m);
    (0..)
        .map(move |k| start + k * m)
        .take_while(move |&v| v <= bound)
}
