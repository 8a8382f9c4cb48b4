//! Thorup–Zwick distance sketches: the exact sequential baseline, the
//! limited-scale construction over a hopset, and the combined oracle.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use num::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bellman_ford::{multi_source_bf, restricted_bf, Bound, Network};
use crate::emulator::{emulator_sssp, Emulator};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graph::{Graph, Vertex};
use crate::hopset::Hopset;
use crate::mpc::Engine;
use crate::rng;
use crate::shortest_paths::Pipeline;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchMode {
    ExactTz,
    Limited,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BunchEntry {
    pub w: Vertex,
    /// level at which `w` entered the bunch
    pub level: usize,
    pub dist: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexTable {
    /// `pivots[i] = (p_i(v), stored distance)`, `None` when absent
    pub pivots: Vec<Option<(Vertex, u64)>>,
    /// sorted by `w`, one entry per `w` (minimum stored distance)
    pub bunch: Vec<BunchEntry>,
}

impl VertexTable {
    pub fn lookup(&self, w: Vertex) -> Option<u64> {
        self.bunch.binary_search_by_key(&w, |e| e.w).ok().map(|i| self.bunch[i].dist)
    }

    fn from_entries(pivots: Vec<Option<(Vertex, u64)>>, entries: BTreeMap<Vertex, (usize, u64)>) -> Self {
        let bunch = entries.into_iter().map(|(w, (level, dist))| BunchEntry { w, level, dist }).collect();
        VertexTable { pivots, bunch }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitedMeta {
    #[serde(with = "exact::serde_rational")]
    pub eps_h: Rational,
    #[serde(with = "exact::serde_big")]
    pub beta_h: BigUint,
    #[serde(with = "exact::serde_big")]
    pub t: BigUint,
    /// `⌊t/((1+ε_H)²(k+1))⌋`
    #[serde(with = "exact::serde_big")]
    pub d: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sketch {
    pub version: u32,
    pub mode: SketchMode,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    /// `A_0..A_k`, `A_k = ∅`
    pub levels: Vec<Vec<Vertex>>,
    pub limited: Option<LimitedMeta>,
    pub tables: Vec<VertexTable>,
}

impl Sketch {
    /// Pivot entries plus bunch entries.
    pub fn entry_count(&self) -> usize {
        self.tables.iter().map(|t| t.bunch.len() + t.pivots.iter().flatten().count()).sum()
    }

    pub fn mean_bunch_size(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.tables.iter().map(|t| t.bunch.len()).sum::<usize>() as f64 / self.n as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: Sketch = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if s.version != FORMAT_VERSION {
            return Err(Error::Format(format!("sketch version {} not supported", s.version)));
        }
        Ok(s)
    }
}

/// Samples `A_1..A_{k-1}` with probability `n^{-1/k}` per level.
///
/// A connected component with no `A_{k-1}` vertex gets the smallest id of its
/// deepest non-empty level promoted, so every query inside it terminates.
pub fn sample_levels(g: &Graph, k: usize, seed: u64) -> Vec<Vec<Vertex>> {
    let n = g.n();
    let p = (n.max(1) as f64).powf(-1.0 / k as f64);
    let mut rng = rng::stream(seed, rng::streams::TZ_SAMPLING);
    let mut top = vec![0usize; n];
    let mut levels: Vec<Vec<Vertex>> = vec![(0..n).collect()];
    for i in 1..k {
        let next: Vec<Vertex> = levels[i - 1].iter().copied().filter(|_| rng.gen_bool(p)).collect();
        for &v in &next {
            top[v] = i;
        }
        levels.push(next);
    }
    for comp in components(g) {
        let deepest = comp.iter().copied().max_by_key(|&v| (top[v], std::cmp::Reverse(v))).expect("non-empty");
        for level in levels.iter_mut().take(k).skip(top[deepest] + 1) {
            level.push(deepest);
        }
    }
    for level in levels.iter_mut() {
        level.sort_unstable();
    }
    levels.push(Vec::new());
    levels
}

fn components(g: &Graph) -> Vec<Vec<Vertex>> {
    let mut seen = vec![false; g.n()];
    let mut out = Vec::new();
    for s in 0..g.n() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            for &v in g.neighbors(comp[i]) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
            i += 1;
        }
        out.push(comp);
    }
    out
}

fn validate_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("k must be >= 2, got {k}")));
    }
    Ok(())
}

/// Lexicographically smallest `(d_G(s, v), s)` over `s ∈ sources`.
fn nearest_exact(g: &Graph, sources: &[Vertex]) -> Vec<Option<(u64, Vertex)>> {
    let mut best: Vec<Option<(u64, Vertex)>> = vec![None; g.n()];
    let mut frontier: Vec<Vertex> = Vec::new();
    for &s in sources {
        best[s] = Some((0, s));
        frontier.push(s);
    }
    let mut dist = 0;
    while !frontier.is_empty() {
        dist += 1;
        let mut next: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        for &u in &frontier {
            let src = best[u].expect("frontier reached").1;
            for &v in g.neighbors(u) {
                if best[v].is_none() {
                    let e = next.entry(v).or_insert(src);
                    *e = (*e).min(src);
                }
            }
        }
        frontier = next.keys().copied().collect();
        for (v, s) in next {
            best[v] = Some((dist, s));
        }
    }
    best
}

/// Vertices `v` with `d(w, v) < limit[v]`, by BFS pruned at the limit.
fn cluster(g: &Graph, w: Vertex, limit: &[Option<u64>]) -> Vec<(Vertex, u64)> {
    let admits = |v: Vertex, d: u64| limit[v].is_none_or(|l| d < l);
    let mut out = Vec::new();
    if !admits(w, 0) {
        return out;
    }
    let mut seen = vec![false; g.n()];
    let mut queue = VecDeque::from([(w, 0u64)]);
    seen[w] = true;
    while let Some((u, d)) = queue.pop_front() {
        out.push((u, d));
        for &v in g.neighbors(u) {
            if !seen[v] && admits(v, d + 1) {
                seen[v] = true;
                queue.push_back((v, d + 1));
            }
        }
    }
    out
}

/// Exact Thorup–Zwick preprocessing by breadth-first search.
pub fn tz_preprocess(g: &Graph, k: usize, seed: u64) -> Result<Sketch> {
    validate_k(k)?;
    let n = g.n();
    let levels = sample_levels(g, k, seed);
    let nearest: Vec<Vec<Option<(u64, Vertex)>>> = (0..=k).map(|i| nearest_exact(g, &levels[i])).collect();

    let mut entries: Vec<BTreeMap<Vertex, (usize, u64)>> = vec![BTreeMap::new(); n];
    for i in 0..k {
        let limit: Vec<Option<u64>> = nearest[i + 1].iter().map(|e| e.map(|(d, _)| d)).collect();
        for &w in &levels[i] {
            if levels[i + 1].binary_search(&w).is_ok() {
                continue;
            }
            for (v, d) in cluster(g, w, &limit) {
                entries[v].insert(w, (i, d));
            }
        }
    }
    let tables = entries
        .into_iter()
        .enumerate()
        .map(|(v, e)| {
            let pivots = (0..k).map(|i| nearest[i][v].map(|(d, p)| (p, d))).collect();
            VertexTable::from_entries(pivots, e)
        })
        .collect();
    Ok(Sketch { version: FORMAT_VERSION, mode: SketchMode::ExactTz, k, n, seed, levels, limited: None, tables })
}

/// One step of a query: level, `w_i`, stored `(w_i, u_i)` distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub i: usize,
    pub w: Vertex,
    pub dist_to_u: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryOutcome {
    Estimate(u64),
    OutOfRange,
}

impl QueryOutcome {
    pub fn value(self) -> Option<u64> {
        match self {
            QueryOutcome::Estimate(x) => Some(x),
            QueryOutcome::OutOfRange => None,
        }
    }
}

/// The shared query loop. Roles swap every iteration and `w_i = p_i(u_i)`;
/// a missing pivot ends the query.
pub fn query_traced(sketch: &Sketch, u: Vertex, v: Vertex) -> (QueryOutcome, Vec<TraceStep>) {
    let (mut ui, mut vi) = (u, v);
    let (mut w, mut du) = (u, 0u64);
    let mut trace = vec![TraceStep { i: 0, w, dist_to_u: 0 }];
    for i in 0..sketch.k {
        if i > 0 {
            std::mem::swap(&mut ui, &mut vi);
            match sketch.tables[ui].pivots.get(i).copied().flatten() {
                Some((p, d)) => {
                    w = p;
                    du = d;
                    trace.push(TraceStep { i, w, dist_to_u: d });
                }
                None => return (QueryOutcome::OutOfRange, trace),
            }
        }
        if let Some(dv) = sketch.tables[vi].lookup(w) {
            return (QueryOutcome::Estimate(du + dv), trace);
        }
    }
    (QueryOutcome::OutOfRange, trace)
}

/// Exact-mode query; `None` only for pairs in different components.
pub fn tz_query(sketch: &Sketch, u: Vertex, v: Vertex) -> Option<u64> {
    query_traced(sketch, u, v).0.value()
}

pub fn limited_query(sketch: &Sketch, u: Vertex, v: Vertex) -> QueryOutcome {
    query_traced(sketch, u, v).0
}

/// `⌊t/((1+ε_H)²(k+1))⌋`.
pub fn limited_range(t: &BigUint, eps_h: &Rational, k: usize) -> BigUint {
    let one_plus = exact::one() + eps_h;
    let denom = &one_plus * &one_plus * exact::int(k as i64 + 1);
    (exact::from_big(t) / denom).floor().to_integer().to_biguint().unwrap_or_default()
}

/// Limited-scale preprocessing over `G ∪ H` with `iβ_H`-hop explorations.
pub fn limited_preprocess(engine: &mut Engine, g: &Graph, hopset: &Hopset, k: usize, seed: u64) -> Result<Sketch> {
    validate_k(k)?;
    let n = g.n();
    let levels = sample_levels(g, k, seed);
    let t = exact::big_to_u64_sat(&hopset.t);
    let beta = hopset.hop_budget();
    let mu = engine.config().mu_for((n.max(1) as f64).powf(1.0 / k as f64));
    let net = Network::prepare(engine, g, &hopset.edges, mu)?;

    let mut pivots: Vec<Vec<Option<(Vertex, u64)>>> = (0..n).map(|v| vec![Some((v, 0))]).collect();
    let mut entries: Vec<BTreeMap<Vertex, (usize, u64)>> = vec![BTreeMap::new(); n];
    let record = |entries: &mut Vec<BTreeMap<Vertex, (usize, u64)>>, v: Vertex, w: Vertex, level: usize, d: u64| {
        let e = entries[v].entry(w).or_insert((level, d));
        if d < e.1 {
            *e = (level, d);
        }
    };

    for i in 1..=k {
        let hops = beta.saturating_mul(i as u64);
        let thresholds: Vec<Bound> = if i < k {
            let found = restricted_bf(engine, &net, &levels[i], hops, Bound::Inclusive(t))?;
            for v in 0..n {
                pivots[v].push(found.nearest[v]);
                if let Some((p, d)) = found.nearest[v] {
                    record(&mut entries, v, p, i, d);
                }
            }
            found.nearest.iter().map(|e| Bound::Below(e.map_or(t, |(_, d)| d.min(t)))).collect()
        } else {
            vec![Bound::Below(t); n]
        };
        let sources: Vec<Vertex> = levels[i - 1].iter().copied().filter(|w| levels[i].binary_search(w).is_err()).collect();
        let explored = multi_source_bf(engine, &net, &sources, hops, &thresholds, mu)?;
        for (v, members) in explored.multi.iter().enumerate() {
            for (&w, &d) in members {
                record(&mut entries, v, w, i - 1, d);
            }
        }
    }

    let tables = pivots.into_iter().zip(entries).map(|(p, e)| VertexTable::from_entries(p, e)).collect();
    let limited = LimitedMeta {
        eps_h: hopset.eps_h.clone(),
        beta_h: hopset.beta_h.clone(),
        t: hopset.t.clone(),
        d: limited_range(&hopset.t, &hopset.eps_h, k),
    };
    Ok(Sketch { version: FORMAT_VERSION, mode: SketchMode::Limited, k, n, seed, levels, limited: Some(limited), tables })
}

/// Charges the `O(k)`-round distributed query variant.
pub fn charge_distributed_query(engine: &mut Engine, k: usize) {
    let unit = engine.config().round_unit();
    engine.charge(k as u64 * unit);
}

/// Emulator, hopset and limited sketch; answers queries without the graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oracle {
    pub version: u32,
    pub k: usize,
    #[serde(with = "exact::serde_rational")]
    pub eps: Rational,
    pub emulator: Emulator,
    pub hopset: Hopset,
    pub sketch: Sketch,
}

pub fn build_oracle(engine: &mut Engine, g: &Graph, k: usize, eps: &Rational, rho: &Rational, seed: u64) -> Result<Oracle> {
    validate_k(k)?;
    if eps <= &exact::int(0) || eps >= &exact::ratio(1, 2) {
        return Err(Error::InvalidParams(format!("eps must be in (0,1/2), got {}", exact::render(eps))));
    }
    let max_k = exact::ceil_u64(&rho.recip()) as usize;
    if k > max_k {
        return Err(Error::InvalidParams(format!("k = {k} exceeds ceil(1/rho) = {max_k}")));
    }
    let pipeline = Pipeline::build(engine, g, eps, rho, seed)?;
    let sketch = limited_preprocess(engine, g, &pipeline.hopset, k, seed)?;
    Ok(Oracle { version: FORMAT_VERSION, k, eps: eps.clone(), emulator: pipeline.emulator, hopset: pipeline.hopset, sketch })
}

impl Oracle {
    pub fn n(&self) -> usize {
        self.sketch.n
    }

    /// Emulator edges, hopset edges and sketch entries.
    pub fn entry_count(&self) -> usize {
        self.emulator.len() + self.hopset.len() + self.sketch.entry_count()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let o: Oracle = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if o.version != FORMAT_VERSION {
            return Err(Error::Format(format!("oracle version {} not supported", o.version)));
        }
        Ok(o)
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    /// Sketch answer if in range, else none.
    pub fn sketch_estimate(&self, u: Vertex, v: Vertex) -> Option<u64> {
        limited_query(&self.sketch, u, v).value()
    }

    /// `min(d_M(u, ·), sketch)` for every target, one emulator search.
    pub fn query_row(&self, u: Vertex) -> Vec<Option<u64>> {
        let dm = emulator_sssp(&self.emulator, u).dist;
        (0..self.n()).map(|v| min_opt(dm[v], self.sketch_estimate(u, v))).collect()
    }
}

fn min_opt(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

pub fn oracle_query(oracle: &Oracle, u: Vertex, v: Vertex) -> Option<u64> {
    let dm = emulator_sssp(&oracle.emulator, u).dist[v];
    min_opt(dm, oracle.sketch_estimate(u, v))
}

/// Empirical bound on oracle entries: `64·k·n^{1+1/k}·log₂²n`.
pub fn oracle_size_bound(n: usize, k: usize) -> f64 {
    let nf = n.max(2) as f64;
    64.0 * k as f64 * nf.powf(1.0 + 1.0 / k as f64) * nf.log2().powi(2)
}
