//! Configuration graphs on torus points: popular pairs, the `(D, P, F)`
//! partition of common neighbourhoods, and forks.

use std::collections::{BTreeMap, HashMap};

use num_integer::Integer;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arcs::{ArcGeometry, ArcLabel, DyadicLevel, TorusPoint};
use crate::arith::{gcd_profile, LabeledDiff};
use crate::error::{guard, invalid, LabError, Result};
use crate::rational::Rational;

/// Largest vertex count accepted by [`build_graph`].
pub const GRAPH_MAX_VERTICES: usize = 1 << 14;

/// Undirected simple graph stored as bitset rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    edges: u64,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        SimpleGraph {
            n,
            words,
            rows: vec![0; n * words],
            edges: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = SimpleGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    /// Uniform graph with exactly `m` edges.
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        let total = n * n.saturating_sub(1) / 2;
        if m > total {
            return Err(invalid(format!("{m} edges do not fit on {n} vertices")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = SimpleGraph::new(n);
        for idx in sample(&mut rng, total, m) {
            let (u, v) = unrank_pair(idx, n);
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v || self.has_edge(u, v) {
            return;
        }
        self.rows[u * self.words + v / 64] |= 1 << (v % 64);
        self.rows[v * self.words + u / 64] |= 1 << (u % 64);
        self.edges += 1;
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn degree(&self, u: usize) -> u32 {
        self.row(u).iter().map(|w| w.count_ones()).sum()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.row(u).iter().copied())
    }

    /// `|𝒩(u, v)|`, the number of common neighbours.
    pub fn common_count(&self, u: usize, v: usize) -> u32 {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn common_neighbors(&self, u: usize, v: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.row(u).iter().zip(self.row(v)).map(|(a, b)| a & b))
    }
}

fn bits(words: impl Iterator<Item = u64>) -> impl Iterator<Item = usize> {
    words.enumerate().flat_map(|(i, mut w)| {
        std::iter::from_fn(move || {
            (w != 0).then(|| {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                i * 64 + b
            })
        })
    })
}

fn unrank_pair(mut idx: usize, n: usize) -> (usize, usize) {
    let mut u = 0;
    while idx >= n - 1 - u {
        idx -= n - 1 - u;
        u += 1;
    }
    (u, u + 1 + idx)
}

/// Options for [`build_graph_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    /// Use the dyadic annulus in `t`.
    #[serde(default)]
    pub dyadic: bool,
    #[serde(default = "unit")]
    pub eps_c: Rational,
    /// Side of each vertex; edges then only join different sides.
    #[serde(default)]
    pub sides: Option<Vec<u8>>,
}

fn unit() -> Rational {
    Rational::ONE
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            dyadic: false,
            eps_c: Rational::ONE,
            sides: None,
        }
    }
}

/// Graph whose vertices are configuration points, with an edge whenever the
/// difference lies in `S_{Q,l}`. Each edge keeps the smallest witness of
/// `z_u - z_v` for `u < v`.
#[derive(Clone, Debug)]
pub struct ConfigGraph {
    pub vertices: Vec<TorusPoint>,
    pub n: u64,
    pub level: DyadicLevel,
    pub options: GraphOptions,
    pub graph: SimpleGraph,
    geometry: ArcGeometry,
    labels: HashMap<(u32, u32), ArcLabel>,
}

/// Checks pairwise `1/N` separation of the `x`-coordinates on the line.
pub fn check_separation(points: &[TorusPoint], n: u64) -> Result<()> {
    let mut xs: Vec<(Rational, usize)> = points.iter().enumerate().map(|(i, p)| (p.x, i)).collect();
    xs.sort();
    let gap = Rational::frac(1, n as i128);
    for w in xs.windows(2) {
        let d = w[1].0.checked_sub(&w[0].0)?;
        if d.is_zero() {
            return Err(invalid(format!(
                "vertices {} and {} share x = {}",
                w[0].1, w[1].1, w[0].0
            )));
        }
        if d < gap {
            return Err(invalid(format!(
                "vertices {} and {} are {d} apart in x, below 1/{n}",
                w[0].1, w[1].1
            )));
        }
    }
    Ok(())
}

pub fn build_graph(points: &[TorusPoint], n: u64, level: DyadicLevel) -> Result<ConfigGraph> {
    build_graph_with(points, n, level, GraphOptions::default())
}

pub fn build_graph_with(
    points: &[TorusPoint],
    n: u64,
    level: DyadicLevel,
    options: GraphOptions,
) -> Result<ConfigGraph> {
    if points.len() > GRAPH_MAX_VERTICES {
        return Err(guard(format!(
            "{} vertices exceed {GRAPH_MAX_VERTICES}",
            points.len()
        )));
    }
    if let Some(s) = &options.sides {
        if s.len() != points.len() {
            return Err(invalid("sides must list one entry per vertex"));
        }
    }
    check_separation(points, n)?;
    let geometry = ArcGeometry::new(n, level, options.dyadic)?.with_eps(options.eps_c)?;
    let r = points.len();

    let threads = std::thread::available_parallelism()
        .map_or(1, |c| c.get())
        .min(r.max(1));
    let found: Vec<Vec<(u32, u32, ArcLabel)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let (geometry, options) = (&geometry, &options);
                scope.spawn(move || -> Result<Vec<(u32, u32, ArcLabel)>> {
                    let mut out = Vec::new();
                    for u in (w..r).step_by(threads) {
                        for v in u + 1..r {
                            if let Some(s) = &options.sides {
                                if s[u] == s[v] {
                                    continue;
                                }
                            }
                            let z = points[u].torus_sub(&points[v])?;
                            if let Some(lab) = geometry.classify(&z)? {
                                out.push((u as u32, v as u32, lab));
                            }
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("graph worker panicked"))
            .collect::<Result<_>>()
    })?;

    let mut graph = SimpleGraph::new(r);
    let mut labels = HashMap::new();
    for (u, v, lab) in found.into_iter().flatten() {
        graph.add_edge(u as usize, v as usize);
        labels.insert((u, v), lab);
    }
    Ok(ConfigGraph {
        vertices: points.to_vec(),
        n,
        level,
        options,
        graph,
        geometry,
        labels,
    })
}

impl ConfigGraph {
    pub fn r(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.graph.edge_count()
    }

    /// `R²/(2E)`, or `None` for an edgeless graph.
    pub fn k_emp(&self) -> Option<f64> {
        let e = self.edge_count();
        (e > 0).then(|| (self.r() as f64).powi(2) / (2.0 * e as f64))
    }

    /// Witness of `z_u - z_v`, if the two vertices are joined.
    pub fn label(&self, u: usize, v: usize) -> Option<LabeledDiff> {
        if u < v {
            self.labels.get(&(u as u32, v as u32)).map(|l| l.to_diff())
        } else {
            self.labels
                .get(&(v as u32, u as u32))
                .map(|l| l.to_diff().negate())
        }
    }

    /// Every cell containing `z_u - z_v`.
    pub fn all_labels(&self, u: usize, v: usize) -> Result<Vec<ArcLabel>> {
        self.geometry
            .all_witnesses(&self.vertices[u].torus_sub(&self.vertices[v])?)
    }

    pub fn export(&self) -> GraphExport {
        let mut edges: Vec<EdgeExport> = self
            .labels
            .iter()
            .map(|(&(u, v), l)| EdgeExport {
                u,
                v,
                q: l.q,
                a: l.a,
                b: l.b,
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        GraphExport {
            n: self.n,
            level: self.level,
            r: self.r(),
            edge_count: self.edge_count(),
            k_emp: self.k_emp(),
            vertices: self.vertices.clone(),
            edges,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeExport {
    pub u: u32,
    pub v: u32,
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

/// JSON shape of a configuration graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    #[serde(rename = "N")]
    pub n: u64,
    pub level: DyadicLevel,
    #[serde(rename = "R")]
    pub r: usize,
    pub edge_count: u64,
    #[serde(rename = "K_emp")]
    pub k_emp: Option<f64>,
    pub vertices: Vec<TorusPoint>,
    pub edges: Vec<EdgeExport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularPairs {
    /// Unordered pairs `(v1, v2, |𝒩(v1, v2)|)` with `v1 < v2`.
    pub pairs: Vec<(u32, u32, u32)>,
    pub sum_common: u64,
    /// `R/(4K²)`.
    pub threshold: f64,
    /// `E ≥ R²/(2K)` and `K ≤ √R/4`.
    pub hypothesis: bool,
    /// `R³/(16K²)`.
    pub lemma_floor: f64,
}

impl PopularPairs {
    /// Whether the lemma's conclusion holds with the given slack factor.
    pub fn lemma_holds(&self, slack: f64) -> bool {
        self.sum_common as f64 >= slack * self.lemma_floor
    }
}

/// Unordered pairs with at least `R/(4K²)` common neighbours.
pub fn popular_pairs(g: &SimpleGraph, k: f64) -> Result<PopularPairs> {
    if k.is_nan() || k <= 0.0 {
        return Err(invalid("K must be positive"));
    }
    let r = g.vertex_count();
    let rf = r as f64;
    let threshold = rf / (4.0 * k * k);
    let mut pairs = Vec::new();
    let mut sum = 0u64;
    for u in 0..r {
        for v in u + 1..r {
            let c = g.common_count(u, v);
            if c as f64 >= threshold && c > 0 {
                pairs.push((u as u32, v as u32, c));
                sum += c as u64;
            }
        }
    }
    Ok(PopularPairs {
        pairs,
        sum_common: sum,
        threshold,
        hypothesis: g.edge_count() as f64 >= rf * rf / (2.0 * k) && k <= rf.sqrt() / 4.0,
        lemma_floor: rf.powi(3) / (16.0 * k * k),
    })
}

/// Common neighbours of `(v1, v2)` binned by the dyadic blocks of the gcd
/// profile of the labels of `v1 - v3` and `v3 - v2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriplePartition {
    pub v1: u32,
    pub v2: u32,
    pub classes: BTreeMap<(u64, u64, u64), Vec<u32>>,
}

impl TriplePartition {
    pub fn total(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    /// Largest class, smallest key on ties.
    pub fn heaviest(&self) -> Option<((u64, u64, u64), usize)> {
        self.classes
            .iter()
            .map(|(k, v)| (*k, v.len()))
            .fold(None, |best, (k, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((k, c)),
            })
    }
}

fn edge_label(g: &ConfigGraph, u: usize, v: usize) -> Result<LabeledDiff> {
    g.label(u, v)
        .ok_or_else(|| LabError::Precondition(format!("no edge between {u} and {v}")))
}

pub fn dpf_partition(g: &ConfigGraph, v1: usize, v2: usize) -> Result<TriplePartition> {
    if v1 == v2 {
        return Err(invalid("the two vertices must differ"));
    }
    if v1.max(v2) >= g.r() {
        return Err(invalid("vertex index out of range"));
    }
    let mut classes: BTreeMap<_, Vec<u32>> = BTreeMap::new();
    for v3 in g.graph.common_neighbors(v1, v2) {
        let prof = gcd_profile(&edge_label(g, v1, v3)?, &edge_label(g, v3, v2)?)?;
        classes
            .entry(prof.dyadic_key())
            .or_default()
            .push(v3 as u32);
    }
    Ok(TriplePartition {
        v1: v1 as u32,
        v2: v2 as u32,
        classes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominantTriple {
    #[serde(rename = "D")]
    pub d_block: u64,
    #[serde(rename = "P")]
    pub p_block: u64,
    #[serde(rename = "F")]
    pub f_block: u64,
    /// Popular pairs assigned to the winning key.
    pub pairs: Vec<(u32, u32)>,
    /// `Σ |𝒩_{D,P,F}|` over those pairs.
    pub group_sum: u64,
    /// Group sum of every occupied key.
    pub groups: Vec<((u64, u64, u64), u64)>,
    /// `group_sum / (R³/K²)`.
    pub ratio: f64,
}

impl DominantTriple {
    pub fn key(&self) -> (u64, u64, u64) {
        (self.d_block, self.p_block, self.f_block)
    }
}

type PairList = Vec<(u32, u32)>;

pub fn dominant_triple(g: &ConfigGraph, k: f64) -> Result<DominantTriple> {
    let pop = popular_pairs(&g.graph, k)?;
    if pop.pairs.is_empty() {
        return Err(LabError::Empty("no popular pairs".into()));
    }
    // Per key: summed class sizes and the pairs whose heaviest class it is.
    let mut groups: BTreeMap<(u64, u64, u64), (u64, PairList)> = BTreeMap::new();
    for &(u, v, _) in &pop.pairs {
        let part = dpf_partition(g, u as usize, v as usize)?;
        if let Some((key, c)) = part.heaviest() {
            let e = groups.entry(key).or_default();
            e.0 += c as u64;
            e.1.push((u, v));
        }
    }
    // Heaviest total wins; ties go to the smallest key.
    let (key, (sum, pairs)) = groups
        .iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.0.cmp(a.0)))
        .expect("popular pairs have common neighbours");
    let r = g.r() as f64;
    Ok(DominantTriple {
        d_block: key.0,
        p_block: key.1,
        f_block: key.2,
        pairs: pairs.clone(),
        group_sum: *sum,
        groups: groups.iter().map(|(k, v)| (*k, v.0)).collect(),
        ratio: *sum as f64 / (r.powi(3) / (k * k)),
    })
}

/// One tine `v3 → v2` of a fork.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tine {
    pub v2: u32,
    pub point: TorusPoint,
    /// Label of `v2 - v3`.
    pub label: LabeledDiff,
    pub d: i64,
    pub p: i64,
    pub f: i64,
}

/// Handle `(v1, v3)` and the nested refinements `S ⊇ S' ⊇ S'' ⊇ S'''`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForkChain {
    #[serde(rename = "N")]
    pub n: u64,
    pub key: (u64, u64, u64),
    pub handle: (u32, u32),
    /// Label of `v3 - v1`.
    pub handle_label: LabeledDiff,
    pub s: Vec<Tine>,
    pub s_prime: Vec<Tine>,
    pub s_dprime: Vec<Tine>,
    pub s_tprime: Vec<Tine>,
    pub fixed_d: i64,
    pub fixed_p: i64,
    pub fixed_f: i64,
}

/// Most populated class of `key`, smallest value on ties.
fn pigeonhole(tines: &[Tine], key: impl Fn(&Tine) -> i64) -> (i64, Vec<Tine>) {
    let mut classes: BTreeMap<i64, Vec<Tine>> = BTreeMap::new();
    for t in tines {
        classes.entry(key(t)).or_default().push(*t);
    }
    classes.into_iter().fold((0, Vec::new()), |best, (k, v)| {
        if v.len() > best.1.len() {
            (k, v)
        } else {
            best
        }
    })
}

pub fn extract_fork(g: &ConfigGraph, key: (u64, u64, u64), k: f64) -> Result<ForkChain> {
    let pop = popular_pairs(&g.graph, k)?;
    // Tines per ordered handle (v1, v3).
    let mut handles: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for &(u, v, _) in &pop.pairs {
        let part = dpf_partition(g, u as usize, v as usize)?;
        if part.heaviest().map(|h| h.0) != Some(key) {
            continue;
        }
        for &v3 in part.classes.get(&key).into_iter().flatten() {
            handles.entry((u, v3)).or_default().push(v);
            handles.entry((v, v3)).or_default().push(u);
        }
    }
    let (handle, members) = handles
        .into_iter()
        .fold(
            None,
            |best: Option<((u32, u32), Vec<u32>)>, cur| match &best {
                Some(b) if b.1.len() >= cur.1.len() => best,
                _ => Some(cur),
            },
        )
        .ok_or_else(|| LabError::Empty(format!("no fork for key {key:?}")))?;
    let (v1, v3) = (handle.0 as usize, handle.1 as usize);
    let handle_label = edge_label(g, v3, v1)?;
    let mut s = Vec::with_capacity(members.len());
    for v2 in members {
        let label = edge_label(g, v2 as usize, v3)?;
        let prof = gcd_profile(&handle_label, &label)?;
        s.push(Tine {
            v2,
            point: g.vertices[v2 as usize],
            label,
            d: prof.d,
            p: prof.p,
            f: prof.f,
        });
    }
    s.sort_by_key(|t| t.v2);
    let (fixed_d, s_prime) = pigeonhole(&s, |t| t.d);
    let (fixed_p, s_dprime) = pigeonhole(&s_prime, |t| t.p);
    let (fixed_f, s_tprime) = pigeonhole(&s_dprime, |t| t.f);
    Ok(ForkChain {
        n: g.n,
        key,
        handle,
        handle_label,
        s,
        s_prime,
        s_dprime,
        s_tprime,
        fixed_d,
        fixed_p,
        fixed_f,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureViolation {
    pub v2: u32,
    pub v2_prime: u32,
    pub difference: Rational,
    pub modulus: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub pairs_checked: u64,
    pub violations: Vec<StructureViolation>,
}

/// For every pair of `S''` checks that the denominator of
/// `a2/q2 - a2'/q2'` divides `(d/p)·m2·m2'`.
pub fn fork_structure_check(fork: &ForkChain) -> Result<StructureReport> {
    let (d, p) = (fork.fixed_d as i128, fork.fixed_p as i128);
    let mut report = StructureReport {
        pairs_checked: 0,
        violations: Vec::new(),
    };
    for (i, t) in fork.s_dprime.iter().enumerate() {
        for u in &fork.s_dprime[i + 1..] {
            let diff = t.label.t_frac().checked_sub(&u.label.t_frac())?;
            let modulus = (d / p)
                .checked_mul(t.label.q as i128 / d)
                .and_then(|x| x.checked_mul(u.label.q as i128 / d))
                .ok_or(LabError::Overflow("fork modulus"))?;
            report.pairs_checked += 1;
            if !modulus.is_multiple_of(&diff.denom()) {
                report.violations.push(StructureViolation {
                    v2: t.v2,
                    v2_prime: u.v2,
                    difference: diff,
                    modulus: modulus as i64,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborCount {
    pub max_count: u64,
    /// `max_count / (N/2^{l1} · log³N)`.
    pub bound_ratio: f64,
}

/// Largest number of `v2' ∈ S''` with `v2 - v2'` in the dyadic set at `level1`.
pub fn fork_dyadic_neighbor_count(fork: &ForkChain, level1: DyadicLevel) -> Result<NeighborCount> {
    let geo = ArcGeometry::new(fork.n, level1, true)?;
    let mut max_count = 0;
    for t in &fork.s_dprime {
        let mut c = 0;
        for u in &fork.s_dprime {
            if t.v2 != u.v2 && geo.classify(&t.point.torus_sub(&u.point)?)?.is_some() {
                c += 1;
            }
        }
        max_count = max_count.max(c);
    }
    let ln = (fork.n as f64).log2();
    let scale = fork.n as f64 / level1.two_l() as f64 * ln.powi(3);
    Ok(NeighborCount {
        max_count,
        bound_ratio: max_count as f64 / scale,
    })
}
