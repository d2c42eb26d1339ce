//! Experiment drivers: level sets, `L^p` norms of the maximal function and
//! two-target solution counts, with configurable bounds and tabular reports.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arcs::DyadicLevel;
use crate::counting::{count_system_solutions, SystemQuery, SYSTEM_MAX_Q};
use crate::error::{invalid, LabError, Result};
use crate::expsum::{sup_profile, CoefficientVector, GridSpec, Scheme, SupProfile, MAX_N};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Levelset,
    Lp,
    Conditional,
}

impl std::str::FromStr for ProbeKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levelset" => Ok(ProbeKind::Levelset),
            "lp" => Ok(ProbeKind::Lp),
            "conditional" => Ok(ProbeKind::Conditional),
            _ => Err(invalid(format!("unknown probe kind {s:?}"))),
        }
    }
}

/// Everything a probe run depends on. Missing fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    /// Scales to sweep; the level-set and conditional probes use the first.
    #[serde(rename = "N")]
    pub n_ladder: Vec<u64>,
    /// `t`-oversampling factor of the grid.
    pub c_t: u64,
    pub schemes: Vec<Scheme>,
    /// Level-set probe: `Q = N/λ²` values.
    pub q_ladder: Vec<u64>,
    /// Level-set probe: extra `λ` exponents `λ = N^e`.
    pub lambda_exponents: Vec<f64>,
    /// `L^p` probe exponent.
    pub p: f64,
    /// Fitted exponent window asserted for the constant scheme in the `L^p` probe.
    pub exponent_window: Option<(f64, f64)>,
    /// Conditional probe: denominator block and level.
    pub level: DyadicLevel,
    pub alpha_cap: u64,
    pub samples: u64,
    pub adversarial: u64,
    pub betas: Vec<f64>,
    #[serde(rename = "C_t")]
    pub window_t: Rational,
    #[serde(rename = "C_x")]
    pub window_x: Rational,
    /// Constant in front of the generic-count bound.
    pub slack: f64,
    /// Constant in front of the level-set ceiling `(log₂ N)^c`.
    pub ceiling: f64,
    /// Power `c` of the `(log₂ N)^c` budget.
    pub log_power: i32,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            kind: ProbeKind::Levelset,
            n_ladder: vec![1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12],
            c_t: 4,
            schemes: vec![Scheme::ConstantNormalized],
            q_ladder: vec![8, 16],
            lambda_exponents: Vec::new(),
            p: 6.0,
            exponent_window: None,
            level: DyadicLevel {
                q_block: 32,
                l: 3,
                span: 1,
            },
            alpha_cap: 4,
            samples: 100,
            adversarial: 8,
            betas: vec![0.05, 0.1, 0.2],
            window_t: Rational::ONE,
            window_x: Rational::ONE,
            slack: 16.0,
            ceiling: 32.0,
            log_power: 3,
            seed: 1,
        }
    }
}

impl ProbeConfig {
    pub fn for_kind(kind: ProbeKind) -> Self {
        ProbeConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ProbeConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() {
            return Err(invalid("the N ladder is empty"));
        }
        for &n in &self.n_ladder {
            if !(2..=MAX_N).contains(&n) {
                return Err(invalid(format!("N = {n} is outside [2, {MAX_N}]")));
            }
        }
        if self.c_t == 0 {
            return Err(invalid("c_t must be positive"));
        }
        if self.log_power < 0 || self.slack <= 0.0 || self.ceiling <= 0.0 {
            return Err(invalid("slack, ceiling and log power must be positive"));
        }
        match self.kind {
            ProbeKind::Levelset => {
                let n = self.n_ladder[0];
                for &q in &self.q_ladder {
                    if q == 0 || q * q > n {
                        return Err(invalid(format!(
                            "Q = {q} puts λ = √(N/Q) outside [N^(1/4), N^(1/2)]"
                        )));
                    }
                }
                for &e in &self.lambda_exponents {
                    if !(0.25..=0.5).contains(&e) {
                        return Err(invalid(format!("λ = N^{e} is outside [N^(1/4), N^(1/2)]")));
                    }
                }
            }
            ProbeKind::Lp => {
                if ![2.0, 4.0, 6.0].contains(&self.p) {
                    return Err(invalid("p must be 2, 4 or 6"));
                }
            }
            ProbeKind::Conditional => {
                if self.level.q_hi() > 2 * SYSTEM_MAX_Q {
                    return Err(invalid(format!(
                        "Q = {} exceeds {SYSTEM_MAX_Q}",
                        self.level.q_block
                    )));
                }
                self.level.validate(self.n_ladder[0])?;
            }
        }
        Ok(())
    }
}

/// One asserted bound with its numeric ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub anchor: String,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Tabular output with one header line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(cols: &[&str]) -> Self {
        Table {
            columns: cols.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub config: ProbeConfig,
    pub table: Table,
    pub assertions: Vec<Assertion>,
    /// Kept out of the serialized report so repeated runs compare equal.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json` and `table.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        self.table
            .write_csv(std::fs::File::create(dir.join("table.csv"))?)
    }
}

fn assertion(name: String, anchor: &str, value: f64, bound: f64, upper: bool) -> Assertion {
    let pass = if upper {
        value <= bound
    } else {
        value >= bound
    };
    Assertion {
        name,
        anchor: anchor.into(),
        value,
        bound,
        ratio: value / bound,
        pass,
    }
}

fn f(v: f64) -> String {
    format!("{v:.9e}")
}

/// Coefficients of `scheme` at scale `n`.
pub fn coefficients(scheme: &Scheme, n: u64) -> Result<CoefficientVector> {
    Ok(match scheme {
        Scheme::ConstantNormalized => CoefficientVector::constant(n),
        Scheme::UnimodularRandom { seed } => CoefficientVector::unimodular_random(n, *seed),
        Scheme::SingleFrequency { freq } => CoefficientVector::single_frequency(*freq),
        Scheme::PrimeSupportCubic { theta } => CoefficientVector::prime_support_cubic(n, *theta)?,
        Scheme::Custom => return Err(invalid("custom coefficients cannot be built from a config")),
    })
}

fn scheme_name(s: &Scheme) -> String {
    match s {
        Scheme::ConstantNormalized => "constant".into(),
        Scheme::UnimodularRandom { seed } => format!("random_{seed}"),
        Scheme::SingleFrequency { freq } => format!("single_{freq}"),
        Scheme::PrimeSupportCubic { theta } => format!("prime_cubic_{theta}"),
        Scheme::Custom => "custom".into(),
    }
}

/// Sup profile for one scheme and scale.
pub fn profile_for(scheme: &Scheme, n: u64, c_t: u64) -> Result<SupProfile> {
    sup_profile(&coefficients(scheme, n)?, &GridSpec::new(n, c_t)?)
}

/// Level-set measure against `N/λ⁴` along a `λ` ladder.
pub fn probe_levelset(cfg: &ProbeConfig) -> Result<ProbeReport> {
    probe_levelset_with(cfg, profile_for)
}

/// As [`probe_levelset`], with a caller-supplied profile source.
pub fn probe_levelset_with(
    cfg: &ProbeConfig,
    mut profile: impl FnMut(&Scheme, u64, u64) -> Result<SupProfile>,
) -> Result<ProbeReport> {
    let start = Instant::now();
    cfg.validate()?;
    let n = cfg.n_ladder[0];
    let nf = n as f64;
    let logn = nf.log2();
    let budget = logn.powi(cfg.log_power);
    let mut lambdas: Vec<(String, f64)> = cfg
        .q_ladder
        .iter()
        .map(|&q| (format!("Q={q}"), (nf / q as f64).sqrt()))
        .collect();
    lambdas.extend(
        cfg.lambda_exponents
            .iter()
            .map(|&e| (format!("N^{e}"), nf.powf(e))),
    );

    let mut table = Table::new(&[
        "scheme",
        "N",
        "point",
        "lambda",
        "measure",
        "N_over_lambda4",
        "ratio",
    ]);
    let mut asserts = Vec::new();
    for scheme in &cfg.schemes {
        let prof = profile(scheme, n, cfg.c_t)?;
        for (label, lambda) in &lambdas {
            let measure = prof.level_set_measure(*lambda);
            let scale = nf / lambda.powi(4);
            let ratio = measure / scale;
            table.push(vec![
                scheme_name(scheme),
                n.to_string(),
                label.clone(),
                f(*lambda),
                f(measure),
                f(scale),
                f(ratio),
            ]);
            if *scheme != Scheme::ConstantNormalized {
                continue;
            }
            if label.starts_with("Q=") {
                asserts.push(assertion(
                    format!("sharpness floor at {label}"),
                    "sharp example: level set has measure ~ N/lambda^4",
                    ratio,
                    1.0 / (8.0 * logn),
                    false,
                ));
            }
            if *lambda >= nf.powf(0.35) * (1.0 - 1e-12) {
                asserts.push(assertion(
                    format!("level-set ceiling at {label}"),
                    "level-set estimate: measure <~ N/lambda^4",
                    ratio,
                    cfg.ceiling * budget,
                    true,
                ));
            }
        }
    }
    Ok(ProbeReport {
        kind: ProbeKind::Levelset,
        config: cfg.clone(),
        table,
        assertions: asserts,
        wall_clock: start.elapsed(),
    })
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("a fit needs at least two paired points"));
    }
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("fit abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `‖sup_t |S|‖_p` along the `N` ladder with a fitted growth exponent.
pub fn probe_lp(cfg: &ProbeConfig) -> Result<ProbeReport> {
    probe_lp_with(cfg, profile_for)
}

pub fn probe_lp_with(
    cfg: &ProbeConfig,
    mut profile: impl FnMut(&Scheme, u64, u64) -> Result<SupProfile>,
) -> Result<ProbeReport> {
    let start = Instant::now();
    cfg.validate()?;
    let reference = if cfg.p == 6.0 { 1.0 / 3.0 } else { 0.25 };
    let mut table = Table::new(&["scheme", "N", "p", "norm", "ratio", "fitted_exponent"]);
    let mut asserts = Vec::new();
    for scheme in &cfg.schemes {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut rows = Vec::new();
        for &n in &cfg.n_ladder {
            let norm = profile(scheme, n, cfg.c_t)?.lp_norm(cfg.p);
            xs.push((n as f64).ln());
            ys.push(norm.ln());
            rows.push(vec![
                scheme_name(scheme),
                n.to_string(),
                cfg.p.to_string(),
                f(norm),
                f(norm / (n as f64).powf(reference)),
            ]);
        }
        let slope = if xs.len() >= 2 {
            fit_line(&xs, &ys)?.0
        } else {
            f64::NAN
        };
        for mut r in rows {
            r.push(f(slope));
            table.push(r);
        }
        if let (Scheme::ConstantNormalized, Some((lo, hi))) = (scheme, cfg.exponent_window) {
            let anchor = "sharp N^(1/3) growth of the L^6 norm";
            asserts.push(assertion(
                "fitted exponent lower".into(),
                anchor,
                slope,
                lo,
                false,
            ));
            asserts.push(assertion(
                "fitted exponent upper".into(),
                anchor,
                slope,
                hi,
                true,
            ));
        }
    }
    Ok(ProbeReport {
        kind: ProbeKind::Lp,
        config: cfg.clone(),
        table,
        assertions: asserts,
        wall_clock: start.elapsed(),
    })
}

fn median(v: &mut [u64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    }
}

/// Two-target system counts on random and near-rational `(t, t')` pairs.
pub fn probe_conditional(cfg: &ProbeConfig) -> Result<ProbeReport> {
    let start = Instant::now();
    cfg.validate()?;
    let n = cfg.n_ladder[0];
    let level = cfg.level;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t_den = (n * n) as i128;
    let grid = |rng: &mut ChaCha8Rng| Rational::frac(rng.gen_range(0..t_den), t_den);
    let x_grid = |rng: &mut ChaCha8Rng| Rational::frac(rng.gen_range(0..n as i128), n as i128);
    let query = |t: Rational, tp: Rational| {
        let mut q = SystemQuery::new(t, tp, n, level, cfg.alpha_cap);
        q.c_t = cfg.window_t;
        q.c_x = cfg.window_x;
        q
    };

    let mut table = Table::new(&[
        "sample", "kind", "t", "t_prime", "x", "x_prime", "count_t", "count_tx",
    ]);
    let (mut generic_t, mut generic_tx) = (Vec::new(), Vec::new());
    let total = cfg.samples + cfg.adversarial;
    let mut idx = 0u64;
    while idx < total {
        let adversarial = idx >= cfg.samples;
        let t = if adversarial {
            let q = rng.gen_range(1..=4i128);
            Rational::frac(rng.gen_range(0..q), q)
        } else {
            grid(&mut rng)
        };
        let tp = if adversarial {
            let q = rng.gen_range(2..=5i128);
            Rational::frac(rng.gen_range(1..q), q)
        } else {
            grid(&mut rng)
        };
        let (x, xp) = (x_grid(&mut rng), x_grid(&mut rng));
        let q2 = query(t, tp);
        let count_t = match count_system_solutions(&q2) {
            Err(LabError::Precondition(_)) => continue,
            r => r?,
        };
        let with_x = level.q_hi() <= 2 * crate::counting::SYSTEM_MAX_Q_WITH_X;
        let count_tx = if with_x {
            Some(count_system_solutions(&q2.with_x(x, xp))?)
        } else {
            None
        };
        if !adversarial {
            generic_t.push(count_t);
            generic_tx.extend(count_tx);
        }
        table.push(vec![
            idx.to_string(),
            if adversarial {
                "adversarial"
            } else {
                "generic"
            }
            .into(),
            t.to_string(),
            tp.to_string(),
            x.to_string(),
            xp.to_string(),
            count_t.to_string(),
            count_tx.map_or_else(String::new, |c| c.to_string()),
        ]);
        idx += 1;
    }

    let (q, tl, nf) = (level.q_block as f64, level.two_l() as f64, n as f64);
    let generic_scale = 1.0 + q.powi(3) / (tl * nf);
    let max_t = generic_t.iter().copied().max().unwrap_or(0) as f64;
    let med_t = median(&mut generic_t);
    let mut asserts = vec![assertion(
        "generic median count".into(),
        "generic pairs: about Q^4/(N^2 4^l) solutions",
        med_t,
        cfg.slack * generic_scale,
        true,
    )];
    let mut summary = Table::new(&[
        "beta",
        "template",
        "max_over_template",
        "median_over_template",
    ]);
    for &beta in &cfg.betas {
        let tmpl = cfg.alpha_cap as f64 + q.powi(3) / (tl * nf.powf(1.0 + beta));
        summary.push(vec![
            beta.to_string(),
            f(tmpl),
            f(max_t / tmpl),
            f(med_t / tmpl),
        ]);
    }
    if !generic_tx.is_empty() {
        let med_tx = median(&mut generic_tx);
        asserts.push(Assertion {
            name: "generic median count with x".into(),
            anchor: "four-inequality system, reported only".into(),
            value: med_tx,
            bound: f64::INFINITY,
            ratio: 0.0,
            pass: true,
        });
    }
    for r in summary.rows {
        let mut row = vec![format!("beta={}", r[0]), "template".into()];
        row.extend(r[1..].iter().cloned());
        row.extend([String::new(), String::new(), String::new()]);
        row.truncate(8);
        table.push(row);
    }
    Ok(ProbeReport {
        kind: ProbeKind::Conditional,
        config: cfg.clone(),
        table,
        assertions: asserts,
        wall_clock: start.elapsed(),
    })
}

pub fn run_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    match cfg.kind {
        ProbeKind::Levelset => probe_levelset(cfg),
        ProbeKind::Lp => probe_lp(cfg),
        ProbeKind::Conditional => probe_conditional(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let mut c = ProbeConfig::for_kind(ProbeKind::Lp);
        c.schemes.push(Scheme::PrimeSupportCubic { theta: 0.3 });
        c.exponent_window = Some((0.28, 0.4));
        let back = ProbeConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fit_recovers_slope() {
        let x = [1.0, 2.0, 3.0];
        let y = [0.5, 0.8, 1.1];
        let (s, b) = fit_line(&x, &y).unwrap();
        assert!((s - 0.3).abs() < 1e-12 && (b - 0.2).abs() < 1e-12);
    }

    #[test]
    fn low_lambda_rejected() {
        let mut c = ProbeConfig::for_kind(ProbeKind::Levelset);
        c.n_ladder = vec![256];
        c.q_ladder = vec![32];
        assert!(probe_levelset(&c).is_err());
    }
}
