//! Command-line front end: parses arguments, dispatches to `levelset-core`
//! and writes CSV/JSON artifacts.
//!
//! Without `--out`, each command prints its primary artifact on stdout. With
//! `--out DIR`, every artifact is written into `DIR` once the command finishes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use levelset_core::arcs::{
    enumerate_arcs, kernel_bound_report_with, ArcGeometry, DyadicLevel, KernelReportConfig,
    TorusPoint,
};
use levelset_core::arith::{gcd_profile, LabeledDiff};
use levelset_core::constructions::{self as cons, Construction, ConstructionKind};
use levelset_core::counting::{
    box_census, count_l_separated, enumerate_admissible, AdmissibleQuery, BoxVariants,
};
use levelset_core::expsum::eval_kernel;
use levelset_core::graph::{
    dominant_triple, extract_fork, fork_structure_check, popular_pairs, ConfigGraph, SimpleGraph,
};
use levelset_core::probes::{run_probe, ProbeConfig, ProbeKind};
use levelset_core::{LabError, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "levelset",
    version,
    about = "Level sets of quadratic Weyl sums and the arithmetic of major arcs"
)]
struct Cli {
    /// Directory receiving CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct LevelArgs {
    /// Scale N.
    #[arg(long = "N", default_value_t = 1024)]
    n: u64,
    /// Denominator block Q (power of two).
    #[arg(long = "Q", default_value_t = 4)]
    q_block: u64,
    /// Dyadic level l.
    #[arg(long = "l", default_value_t = 0)]
    l: u32,
    /// Number of consecutive dyadic blocks in the denominator range.
    #[arg(long, default_value_t = 1)]
    span: u32,
}

impl LevelArgs {
    fn level(&self) -> Result<DyadicLevel, LabError> {
        let lv = DyadicLevel::new(self.q_block, self.l)?.with_span(self.span)?;
        lv.validate(self.n)?;
        Ok(lv)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the smoothed kernel at a point, or sample it on and off the arcs.
    Kernel {
        #[command(flatten)]
        lv: LevelArgs,
        #[arg(long)]
        x: Option<Rational>,
        #[arg(long)]
        t: Option<Rational>,
        /// Sample |K| against its bound instead of evaluating one point.
        #[arg(long)]
        report: bool,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Off-arc exclusion multiplier.
        #[arg(long, default_value = "1")]
        off_arc_eps: Rational,
    },
    /// List the major-arc cells of a level, or classify a point.
    Arcs {
        #[command(flatten)]
        lv: LevelArgs,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        x: Option<Rational>,
        #[arg(long)]
        t: Option<Rational>,
        /// Use the full t-window instead of the dyadic annulus.
        #[arg(long)]
        no_dyadic: bool,
    },
    /// gcd profiles of label pairs read from a CSV with columns a1,b1,q1,a2,b2,q2.
    Profile {
        #[arg(long)]
        labels: PathBuf,
    },
    /// Admissible denominator pairs for a target point.
    Admissible {
        #[command(flatten)]
        lv: LevelArgs,
        #[arg(long)]
        x: Rational,
        #[arg(long)]
        t: Rational,
        #[arg(long = "D")]
        d: u64,
        #[arg(long = "P")]
        p: u64,
        #[arg(long = "F")]
        f: u64,
        #[arg(long = "C_t", default_value = "1")]
        c_t: Rational,
        #[arg(long = "C_x", default_value = "1")]
        c_x: Rational,
        /// Also count separated first coordinates.
        #[arg(long)]
        separated: bool,
    },
    /// Box census of sums of two arc points.
    Boxes {
        #[command(flatten)]
        lv: LevelArgs,
        /// Skip the key-distinct counters.
        #[arg(long)]
        no_keys: bool,
    },
    /// Build a configuration graph and optionally analyze it.
    Graph(GraphArgs),
    /// Build one of the named point configurations.
    Construct(ConstructArgs),
    /// Run a probe from a JSON config with flag overrides.
    Probe(ProbeArgs),
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Construction JSON written by `construct`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Random abstract graph with this many vertices instead of a construction.
    #[arg(long)]
    random: Option<usize>,
    /// Edge count of the random graph; defaults to R²/(2K).
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Edge-density parameter K.
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,
    /// Report popular pairs and the dominant (D,P,F) triple.
    #[arg(long)]
    analyze: bool,
    /// Extract a fork for the dominant triple and check its structure.
    #[arg(long)]
    fork: bool,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long)]
    kind: String,
    #[arg(long = "N", default_value_t = 4096)]
    n: u64,
    #[arg(long = "l", default_value_t = 2)]
    l: u32,
    /// Denominator for fixed_denominator, sharp_c1 and enemies.
    #[arg(long = "q")]
    q: Option<u64>,
    /// Denominator block.
    #[arg(long = "Q")]
    q_block: Option<u64>,
    #[arg(long = "M", default_value_t = 2)]
    m: u64,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    q1: Option<u64>,
    #[arg(long)]
    q2: Option<u64>,
    #[arg(long)]
    r: Option<u64>,
    #[arg(long, default_value_t = 1)]
    a: u64,
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// Primes r1,r2,r3 for sqrt_admissible.
    #[arg(long, value_delimiter = ',')]
    primes: Vec<i64>,
    /// Residues c1,c2,d1,d2 for sqrt_admissible.
    #[arg(long, value_delimiter = ',')]
    residues: Vec<i64>,
    /// Vertex count for random_baseline.
    #[arg(long = "R")]
    count: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long)]
    kind: Option<ProbeKind>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the N ladder.
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    c_t: Option<u64>,
}

enum Failure {
    Usage(String),
    Assertion(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Artifacts are buffered and flushed once at the end.
struct Sink {
    dir: Option<PathBuf>,
    files: Vec<(String, Vec<u8>)>,
}

impl Sink {
    fn json(&mut self, name: &str, v: &impl Serialize) -> Outcome {
        let mut s = serde_json::to_vec_pretty(v)?;
        s.push(b'\n');
        self.files.push((name.into(), s));
        Ok(())
    }

    fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> Result<(), LabError>,
    ) -> Outcome {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    fn flush(self) -> Outcome {
        match self.dir {
            Some(dir) => {
                fs::create_dir_all(&dir)?;
                for (name, data) in self.files {
                    fs::write(dir.join(name), data)?;
                }
            }
            None => {
                if let Some((_, data)) = self.files.into_iter().next() {
                    std::io::stdout().write_all(&data)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run_cli(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut sink = Sink {
        dir: cli.out.clone(),
        files: Vec::new(),
    };
    let result = dispatch(cli.command, &mut sink);
    // Assertion failures still emit their reports.
    let flushed = match &result {
        Ok(()) | Err(Failure::Assertion(_)) => sink.flush(),
        Err(Failure::Usage(_)) => Ok(()),
    };
    match result.and(flushed) {
        Ok(()) => EXIT_OK,
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            EXIT_ASSERTION
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command, sink: &mut Sink) -> Outcome {
    match cmd {
        Command::Kernel {
            lv,
            x,
            t,
            report,
            samples,
            seed,
            off_arc_eps,
        } => {
            if report {
                let cfg = KernelReportConfig {
                    off_arc_eps,
                    ..KernelReportConfig::default()
                };
                let rep = kernel_bound_report_with(lv.n, lv.level()?, samples, seed, cfg)?;
                sink.csv("kernel_samples.csv", |w| rep.write_csv(w))?;
                #[derive(Serialize)]
                struct Summary<'a> {
                    #[serde(rename = "N")]
                    n: u64,
                    level: DyadicLevel,
                    config: &'a KernelReportConfig,
                    on_arc: Option<levelset_core::arcs::Quantiles>,
                    off_arc: Option<levelset_core::arcs::Quantiles>,
                    off_arc_failures: u64,
                }
                sink.json(
                    "kernel_summary.json",
                    &Summary {
                        n: rep.n,
                        level: rep.level,
                        config: &rep.config,
                        on_arc: rep.on_arc,
                        off_arc: rep.off_arc,
                        off_arc_failures: rep.off_arc_failures,
                    },
                )
            } else {
                let (x, t) = match (x, t) {
                    (Some(x), Some(t)) => (x, t),
                    _ => {
                        return Err(Failure::Usage(
                            "kernel needs --x and --t, or --report".into(),
                        ))
                    }
                };
                let k = eval_kernel(lv.n, x.to_f64(), t.to_f64())?;
                sink.json(
                    "kernel.json",
                    &serde_json::json!({ "N": lv.n, "x": x, "t": t, "K": [k.re, k.im], "abs": k.norm() }),
                )
            }
        }
        Command::Arcs {
            lv,
            list,
            x,
            t,
            no_dyadic,
        } => {
            let level = lv.level()?;
            if list {
                let cells: Vec<_> = enumerate_arcs(level, lv.n)?.collect();
                sink.csv("arcs.csv", |w| {
                    let mut wr = csv::Writer::from_writer(w);
                    wr.write_record([
                        "q",
                        "a",
                        "b",
                        "x_lo",
                        "x_hi",
                        "t_lo",
                        "t_hi",
                        "t_inner_radius",
                    ])?;
                    for c in &cells {
                        wr.write_record([
                            c.q.to_string(),
                            c.a.to_string(),
                            c.b.to_string(),
                            c.x_interval.lo.to_string(),
                            c.x_interval.hi.to_string(),
                            c.t_interval.lo.to_string(),
                            c.t_interval.hi.to_string(),
                            c.t_inner_radius.map_or_else(String::new, |r| r.to_string()),
                        ])?;
                    }
                    wr.flush()?;
                    Ok(())
                })
            } else {
                let (x, t) = match (x, t) {
                    (Some(x), Some(t)) => (x, t),
                    _ => return Err(Failure::Usage("arcs needs --list, or --x and --t".into())),
                };
                let geo = ArcGeometry::new(lv.n, level, !no_dyadic)?;
                let z = TorusPoint::new(x, t);
                let label = geo.classify(&z)?;
                let all = geo.all_witnesses(&z)?;
                sink.json(
                    "classify.json",
                    &serde_json::json!({ "x": x, "t": t, "label": label, "witnesses": all }),
                )
            }
        }
        Command::Profile { labels } => {
            let mut rd = csv::Reader::from_path(&labels)
                .map_err(|e| Failure::Usage(format!("{}: {e}", labels.display())))?;
            let mut rows = Vec::new();
            for rec in rd.records() {
                let rec = rec?;
                let v: Vec<i64> = rec
                    .iter()
                    .map(|s| s.trim().parse::<i64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| Failure::Usage(format!("bad label row {:?}: {e}", rec)))?;
                if v.len() != 6 {
                    return Err(Failure::Usage(format!(
                        "label rows need 6 fields, got {}",
                        v.len()
                    )));
                }
                let l1 = LabeledDiff::new(v[0], v[1], v[2])?;
                let l2 = LabeledDiff::new(v[3], v[4], v[5])?;
                rows.push((l1, l2, gcd_profile(&l1, &l2)?));
            }
            sink.csv("profiles.csv", |w| {
                let mut wr = csv::Writer::from_writer(w);
                wr.write_record([
                    "a1",
                    "b1",
                    "q1",
                    "a2",
                    "b2",
                    "q2",
                    "d",
                    "m1",
                    "m2",
                    "p",
                    "f",
                    "t_sum",
                    "x_sum",
                    "degenerate",
                ])?;
                for (l1, l2, p) in &rows {
                    wr.write_record([
                        l1.a.to_string(),
                        l1.b.to_string(),
                        l1.q.to_string(),
                        l2.a.to_string(),
                        l2.b.to_string(),
                        l2.q.to_string(),
                        p.d.to_string(),
                        p.m1.to_string(),
                        p.m2.to_string(),
                        p.p.to_string(),
                        p.f.to_string(),
                        p.t_sum.to_string(),
                        p.x_sum().to_string(),
                        p.degenerate.to_string(),
                    ])?;
                }
                wr.flush()?;
                Ok(())
            })
        }
        Command::Admissible {
            lv,
            x,
            t,
            d,
            p,
            f,
            c_t,
            c_x,
            separated,
        } => {
            let qy =
                AdmissibleQuery::new(x, t, lv.n, lv.level()?, d, p, f)?.with_constants(c_t, c_x)?;
            let pairs = enumerate_admissible(&qy)?;
            sink.csv("admissible.csv", |w| {
                let mut wr = csv::Writer::from_writer(w);
                wr.write_record(["q1", "q2", "d", "a1", "a2", "b1", "b2", "p", "f"])?;
                for pr in &pairs {
                    for wt in &pr.witnesses {
                        wr.write_record([
                            pr.q1.to_string(),
                            pr.q2.to_string(),
                            pr.d.to_string(),
                            wt.a1.to_string(),
                            wt.a2.to_string(),
                            wt.b1.to_string(),
                            wt.b2.to_string(),
                            wt.p.to_string(),
                            wt.f.to_string(),
                        ])?;
                    }
                }
                wr.flush()?;
                Ok(())
            })?;
            let sep = if separated {
                Some(count_l_separated(&qy)?)
            } else {
                None
            };
            sink.json(
                "admissible_summary.json",
                &serde_json::json!({
                    "query": qy,
                    "pairs": pairs.len(),
                    "bound": levelset_core::counting::lemma_bound(&qy),
                    "p_invariant": pairs.iter().all(|p| p.p_invariant),
                    "separated": sep,
                }),
            )
        }
        Command::Boxes { lv, no_keys } => {
            let grid = box_census(lv.n, lv.level()?, BoxVariants { keys: !no_keys })?;
            sink.csv("boxes.csv", |w| grid.write_csv(w))?;
            sink.json("boxes_summary.json", &serde_json::json!({ "N": grid.n, "level": grid.level, "aggregates": grid.aggregates }))
        }
        Command::Graph(args) => graph_cmd(args, sink),
        Command::Construct(args) => construct_cmd(args, sink),
        Command::Probe(args) => probe_cmd(args, sink),
    }
}

fn read_construction(path: &Path) -> Result<Construction, Failure> {
    let s =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&s)?)
}

fn graph_cmd(args: GraphArgs, sink: &mut Sink) -> Outcome {
    #[derive(Serialize)]
    struct Analysis {
        #[serde(rename = "R")]
        r: usize,
        edges: u64,
        #[serde(rename = "K")]
        k: f64,
        popular_pairs: usize,
        sum_common: u64,
        lemma_floor: f64,
        dominant: Option<((u64, u64, u64), f64)>,
        predicted: Option<(Option<f64>, Option<f64>, Option<f64>)>,
    }

    let (built, spec) = match (&args.input, args.random) {
        (Some(p), None) => {
            let c = read_construction(p)?;
            (Some(c.graph()?), Some(c.spec))
        }
        (None, Some(r)) => {
            let m = args
                .edges
                .unwrap_or(((r * r) as f64 / (2.0 * args.k)) as usize);
            let g = SimpleGraph::random(r, m, args.seed)?;
            let pop = popular_pairs(&g, args.k)?;
            sink.json(
                "analysis.json",
                &Analysis {
                    r,
                    edges: g.edge_count(),
                    k: args.k,
                    popular_pairs: pop.pairs.len(),
                    sum_common: pop.sum_common,
                    lemma_floor: pop.lemma_floor,
                    dominant: None,
                    predicted: None,
                },
            )?;
            return if pop.hypothesis && !pop.lemma_holds(1.0) {
                Err(Failure::Assertion("popular-pair lower bound".into()))
            } else {
                Ok(())
            };
        }
        _ => {
            return Err(Failure::Usage(
                "graph needs exactly one of --input and --random".into(),
            ))
        }
    };
    let g: ConfigGraph = built.expect("construction graph");
    sink.json("graph.json", &g.export())?;
    if !(args.analyze || args.fork) {
        return Ok(());
    }
    let pop = popular_pairs(&g.graph, args.k)?;
    let dom = dominant_triple(&g, args.k)?;
    sink.json(
        "analysis.json",
        &Analysis {
            r: g.r(),
            edges: g.edge_count(),
            k: args.k,
            popular_pairs: pop.pairs.len(),
            sum_common: pop.sum_common,
            lemma_floor: pop.lemma_floor,
            dominant: Some((dom.key(), dom.ratio)),
            predicted: spec
                .as_ref()
                .map(|s| (s.prediction("D"), s.prediction("P"), s.prediction("F"))),
        },
    )?;
    sink.json("dominant.json", &dom)?;
    if args.fork {
        let fork = extract_fork(&g, dom.key(), args.k)?;
        let rep = fork_structure_check(&fork)?;
        sink.json("fork.json", &fork)?;
        sink.json("fork_structure.json", &rep)?;
        if !rep.violations.is_empty() {
            return Err(Failure::Assertion(format!(
                "{} fork structure violations",
                rep.violations.len()
            )));
        }
    }
    Ok(())
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("{kind} needs --{flag}")))
}

fn construct_cmd(a: ConstructArgs, sink: &mut Sink) -> Outcome {
    let kind: ConstructionKind = serde_json::from_value(serde_json::Value::String(a.kind.clone()))
        .map_err(|_| Failure::Usage(format!("unknown construction kind {:?}", a.kind)))?;
    let k = a.kind.as_str();
    let c = match kind {
        ConstructionKind::FixedDenominator => {
            cons::build_fixed_denominator(need(a.q, "q", k)?, a.n, a.l)?
        }
        ConstructionKind::PrimeReciprocal => {
            cons::build_prime_reciprocal(need(a.q_block, "Q", k)?, a.n, a.l)?
        }
        ConstructionKind::PrimeReciprocalModified => cons::build_prime_reciprocal_modified(
            need(a.q_block, "Q", k)?,
            need(a.d, "d", k)?,
            a.n,
            a.l,
        )?,
        ConstructionKind::Bipartite => {
            cons::build_bipartite(need(a.q1, "q1", k)?, need(a.q2, "q2", k)?, a.n, a.l)?
        }
        ConstructionKind::SharpC1 => cons::build_sharp_c1(a.n, need(a.q, "q", k)?, a.l, a.m)?,
        ConstructionKind::RandomBaseline => {
            let level = DyadicLevel::new(need(a.q_block, "Q", k)?, a.l)?;
            cons::build_random_baseline(need(a.count, "R", k)?, a.n, level, a.seed)?
        }
        ConstructionKind::Enemies => {
            let fam = cons::build_enemies(
                a.n,
                need(a.q_block, "Q", k)?,
                need(a.q, "q", k)?,
                need(a.r, "r", k)?,
                a.a,
                a.b,
            )?;
            return sink.json("enemies.json", &fam);
        }
        ConstructionKind::SqrtAdmissible => {
            let (p, r) = (&a.primes, &a.residues);
            if p.len() != 3 || r.len() != 4 {
                return Err(Failure::Usage(
                    "sqrt_admissible needs --primes r1,r2,r3 and --residues c1,c2,d1,d2".into(),
                ));
            }
            let w = cons::build_sqrt_admissible(p[0], p[1], p[2], r[0], r[1], r[2], r[3])?;
            return sink.json("sqrt_admissible.json", &w);
        }
    };
    sink.json("construction.json", &c)
}

fn probe_cmd(a: ProbeArgs, sink: &mut Sink) -> Outcome {
    let mut cfg = match &a.config {
        Some(p) => ProbeConfig::load(p)?,
        None => ProbeConfig::for_kind(
            a.kind
                .ok_or_else(|| Failure::Usage("probe needs --kind or --config".into()))?,
        ),
    };
    if let Some(k) = a.kind {
        cfg.kind = k;
    }
    if !a.n.is_empty() {
        cfg.n_ladder = a.n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.samples {
        cfg.samples = s;
    }
    if let Some(c) = a.c_t {
        cfg.c_t = c;
    }
    cfg.validate()?;
    let rep = run_probe(&cfg)?;
    sink.csv("table.csv", |w| rep.table.write_csv(w))?;
    sink.json("report.json", &rep)?;
    for x in &rep.assertions {
        eprintln!(
            "{} {}: value {:.6e}, bound {:.6e}, ratio {:.4} [{}]",
            if x.pass { "PASS" } else { "FAIL" },
            x.name,
            x.value,
            x.bound,
            x.ratio,
            x.anchor
        );
    }
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "{} probe bound exceeded",
            rep.assertions.iter().filter(|x| !x.pass).count()
        )))
    }
}
