use std::collections::BTreeMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arcs::DyadicLevel;
use crate::arith::signed_units;
use crate::error::{guard, invalid, Result};
use crate::rational::Rational;

/// Largest `Q` the census enumerates.
pub const CENSUS_MAX_Q: u64 = 32;

/// Largest number of boxes the census allocates.
pub const CENSUS_MAX_BOXES: u64 = 1 << 25;

/// Which per-box counters to fill. `N_B` and `N_B*` are always computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxVariants {
    /// Distinct `(b1, q1)` keys: `n_B`, `n_B*` and the separated `ñ_B`.
    pub keys: bool,
}

impl Default for BoxVariants {
    fn default() -> Self {
        BoxVariants { keys: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxAggregates {
    pub boxes: u64,
    pub tuples: u64,
    pub sum_n_tuples: u64,
    pub sum_n_tuples_star: u64,
    pub sum_n_keys: u64,
    pub sum_n_keys_star: u64,
    pub sum_n_sep: u64,
    pub max_n_keys: u64,
    /// `Σ N_B / Q^6`.
    pub tuples_over_q6: f64,
    /// `(Σ n_B / #boxes) / Q`.
    pub mean_keys_over_q: f64,
}

/// Boxes `[i/(2^l Q), (i+1)/(2^l Q)) × [k/(N 2^l Q), (k+1)/(N 2^l Q))` anchored
/// at the origin, with dense counters indexed by `k·cols + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    #[serde(rename = "N")]
    pub n: u64,
    pub level: DyadicLevel,
    pub cols: u64,
    pub rows: u64,
    pub n_tuples: Vec<u32>,
    pub n_tuples_star: Vec<u32>,
    pub n_keys: Vec<u32>,
    pub n_keys_star: Vec<u32>,
    pub n_sep: Vec<u32>,
    pub aggregates: BoxAggregates,
}

impl BoxGrid {
    pub fn box_index(&self, x: Rational, t: Rational) -> usize {
        let (x, t) = (x.fract(), t.fract());
        let i = (x * Rational::from_int(self.cols as i128)).floor() as u64;
        let k = (t * Rational::from_int(self.rows as i128)).floor() as u64;
        (k * self.cols + i) as usize
    }

    pub fn box_corner(&self, idx: usize) -> (Rational, Rational) {
        let (k, i) = ((idx as u64) / self.cols, (idx as u64) % self.cols);
        (
            Rational::frac(i as i128, self.cols as i128),
            Rational::frac(k as i128, self.rows as i128),
        )
    }

    /// One CSV row per non-empty box.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "x_lo", "t_lo", "N_B", "N_B_star", "n_B", "n_B_star", "n_B_sep",
        ])?;
        for idx in 0..self.n_tuples.len() {
            if self.n_tuples[idx] == 0 {
                continue;
            }
            let (x, t) = self.box_corner(idx);
            let g = |v: &Vec<u32>| v.get(idx).copied().unwrap_or(0).to_string();
            wr.write_record([
                x.to_string(),
                t.to_string(),
                g(&self.n_tuples),
                g(&self.n_tuples_star),
                g(&self.n_keys),
                g(&self.n_keys_star),
                g(&self.n_sep),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Index of `frac(num/den)` in a partition of `[0,1)` into `parts` cells.
#[inline]
fn cell(num: i64, den: i64, parts: u64) -> u64 {
    let r = num.rem_euclid(den) as u128;
    (r * parts as u128 / den as u128) as u64
}

/// Bins every `(a1, a2, b1, b2, q1, q2)` by its fraction sums.
pub fn box_census(n: u64, level: DyadicLevel, variants: BoxVariants) -> Result<BoxGrid> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    if level.q_hi() > 2 * CENSUS_MAX_Q {
        return Err(guard(format!(
            "Q = {} exceeds {CENSUS_MAX_Q}",
            level.q_block
        )));
    }
    let cols = level.two_l() * level.q_block;
    let rows = n * cols;
    let boxes = cols * rows;
    if boxes > CENSUS_MAX_BOXES {
        return Err(guard(format!("{boxes} boxes exceed the census guard")));
    }
    let nb = boxes as usize;
    let qs: Vec<i64> = (level.q_lo() as i64..level.q_hi() as i64).collect();
    let units: BTreeMap<i64, Vec<i64>> = qs.iter().map(|&q| (q, signed_units(q))).collect();

    let mut n_tuples = vec![0u32; nb];
    let mut n_tuples_star = vec![0u32; nb];
    let mut tuples = 0u64;
    let mut t_sets: BTreeMap<(i64, i64), Vec<u64>> = BTreeMap::new();

    for &q1 in &qs {
        for &q2 in &qs {
            let den = q1 * q2;
            let mut hx = vec![0u64; cols as usize];
            for b1 in -(q1 - 1)..=q1 - 1 {
                for b2 in -(q2 - 1)..=q2 - 1 {
                    hx[cell(b1 * q2 + b2 * q1, den, cols) as usize] += 1;
                }
            }
            let mut ht: BTreeMap<u64, u64> = BTreeMap::new();
            for &a1 in &units[&q1] {
                for &a2 in &units[&q2] {
                    *ht.entry(cell(a1 * q2 + a2 * q1, den, rows)).or_default() += 1;
                }
            }
            let coprime = q1.gcd(&q2) == 1;
            for (&it, &ct) in &ht {
                for (ix, &cx) in hx.iter().enumerate() {
                    if cx == 0 {
                        continue;
                    }
                    let idx = (it * cols) as usize + ix;
                    let add = (cx * ct) as u32;
                    n_tuples[idx] += add;
                    if coprime {
                        n_tuples_star[idx] += add;
                    }
                    tuples += cx * ct;
                }
            }
            if variants.keys {
                t_sets.insert((q1, q2), ht.keys().copied().collect());
            }
        }
    }

    let (mut n_keys, mut n_keys_star, mut n_sep) = (Vec::new(), Vec::new(), Vec::new());
    if variants.keys {
        n_keys = vec![0u32; nb];
        n_keys_star = vec![0u32; nb];
        n_sep = vec![0u32; nb];
        let mut stamp = vec![0u32; nb];
        let mut stamp_star = vec![0u32; nb];
        let mut last = vec![0u32; nb];
        let mut keys: Vec<(i64, i64)> = qs
            .iter()
            .flat_map(|&q| (-(q - 1)..=q - 1).map(move |b| (b, q)))
            .collect();
        keys.sort_by(|&(b, q), &(b2, q2)| {
            (b as i128 * q2 as i128)
                .cmp(&(b2 as i128 * q as i128))
                .then((q, b).cmp(&(q2, b2)))
        });
        let ni = n as i128;
        let mut xs = Vec::new();
        for (id, &(b1, q1)) in keys.iter().enumerate() {
            let id = id as u32 + 1;
            for &q2 in &qs {
                let den = q1 * q2;
                xs.clear();
                xs.extend((-(q2 - 1)..=q2 - 1).map(|b2| cell(b1 * q2 + b2 * q1, den, cols)));
                xs.sort_unstable();
                xs.dedup();
                let coprime = q1.gcd(&q2) == 1;
                for &it in &t_sets[&(q1, q2)] {
                    let row = (it * cols) as usize;
                    for &ix in &xs {
                        let idx = row + ix as usize;
                        if stamp[idx] != id {
                            stamp[idx] = id;
                            n_keys[idx] += 1;
                            let sep = match last[idx] {
                                0 => true,
                                prev => {
                                    let (pb, pq) = keys[prev as usize - 1];
                                    // b1/q1 - pb/pq ≥ 1/N
                                    (b1 as i128 * pq as i128 - pb as i128 * q1 as i128) * ni
                                        >= (q1 * pq) as i128
                                }
                            };
                            if sep {
                                last[idx] = id;
                                n_sep[idx] += 1;
                            }
                        }
                        if coprime && stamp_star[idx] != id {
                            stamp_star[idx] = id;
                            n_keys_star[idx] += 1;
                        }
                    }
                }
            }
        }
    }

    let sum = |v: &Vec<u32>| v.iter().map(|&c| c as u64).sum::<u64>();
    let q6 = (level.q_block as f64).powi(6);
    let sum_n_keys = sum(&n_keys);
    let aggregates = BoxAggregates {
        boxes,
        tuples,
        sum_n_tuples: sum(&n_tuples),
        sum_n_tuples_star: sum(&n_tuples_star),
        sum_n_keys,
        sum_n_keys_star: sum(&n_keys_star),
        sum_n_sep: sum(&n_sep),
        max_n_keys: n_keys.iter().copied().max().unwrap_or(0) as u64,
        tuples_over_q6: sum(&n_tuples) as f64 / q6,
        mean_keys_over_q: sum_n_keys as f64 / boxes as f64 / level.q_block as f64,
    };
    Ok(BoxGrid {
        n,
        level,
        cols,
        rows,
        n_tuples,
        n_tuples_star,
        n_keys,
        n_keys_star,
        n_sep,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_family_at_q_one() {
        let g = box_census(16, DyadicLevel::new(1, 0).unwrap(), BoxVariants::default()).unwrap();
        assert_eq!(g.aggregates.sum_n_tuples, 1);
        assert_eq!(g.aggregates.sum_n_keys, 1);
        assert_eq!(g.n_tuples[0], 1);
    }

    #[test]
    fn guard_rejects_large_q() {
        assert!(box_census(
            1 << 12,
            DyadicLevel::new(64, 0).unwrap(),
            BoxVariants::default()
        )
        .is_err());
    }
}
