//! Input graphs, auxiliary weighted edge sets and the sequential distance
//! routines every distributed result is checked against.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Vertex = usize;
pub type Weight = u64;

/// Unweighted undirected graph on dense ids `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    adj: Vec<Vec<Vertex>>,
}

impl Graph {
    /// Builds a graph from arbitrary pairs; orientation and duplicates collapse.
    ///
    /// Panics on a self-loop or an endpoint `>= n`.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (Vertex, Vertex)>) -> Self {
        let mut edges: Vec<(Vertex, Vertex)> = pairs
            .into_iter()
            .map(|(u, v)| {
                assert!(u != v, "self-loop on {u}");
                assert!(u < n && v < n, "edge ({u},{v}) outside 0..{n}");
                (u.min(v), u.max(v))
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Normalized edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// Edge-list text: one `u v` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n={} m={}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

fn parse_lines(text: &str) -> Result<Vec<(u64, u64)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let malformed = || Error::MalformedLine { line: line_no, text: raw.to_string() };
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(malformed());
        };
        let u: u64 = a.parse().map_err(|_| malformed())?;
        let v: u64 = b.parse().map_err(|_| malformed())?;
        if u == v {
            return Err(Error::SelfLoop { line: line_no, vertex: u as usize });
        }
        pairs.push((u, v));
    }
    Ok(pairs)
}

/// Parses an edge list; `n = 1 + max id`.
pub fn load_graph(text: &str) -> Result<Graph> {
    let pairs = parse_lines(text)?;
    let n = pairs.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    Ok(Graph::from_edges(n, pairs.into_iter().map(|(u, v)| (u as usize, v as usize))))
}

/// Parses an edge list with arbitrary (sparse) ids and relabels them densely
/// in increasing id order. Returns the graph and `dense id -> original id`.
pub fn load_graph_compacted(text: &str) -> Result<(Graph, Vec<u64>)> {
    let pairs = parse_lines(text)?;
    let mut ids: Vec<u64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let g = Graph::from_edges(ids.len(), pairs.iter().map(|(u, v)| (index[u], index[v])));
    Ok((g, ids))
}

/// Synthetic graph families.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphKind {
    Path { n: usize },
    Cycle { n: usize },
    Grid { rows: usize, cols: usize },
    Gnp { n: usize, p: f64 },
    Star { n: usize },
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Path { n } => write!(f, "path:{n}"),
            GraphKind::Cycle { n } => write!(f, "cycle:{n}"),
            GraphKind::Grid { rows, cols } => write!(f, "grid:{rows}x{cols}"),
            GraphKind::Gnp { n, p } => write!(f, "gnp:{n}:{p}"),
            GraphKind::Star { n } => write!(f, "star:{n}"),
        }
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    /// `path:16`, `cycle:200`, `grid:12x12`, `gnp:512:0.02`, `star:5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("bad generator spec {s:?}"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let first = parts.next().ok_or_else(bad)?;
        let parse_n = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let out = match kind {
            "path" => GraphKind::Path { n: parse_n(first)? },
            "cycle" => GraphKind::Cycle { n: parse_n(first)? },
            "star" => GraphKind::Star { n: parse_n(first)? },
            "grid" => {
                let (r, c) = first.split_once('x').ok_or_else(bad)?;
                GraphKind::Grid { rows: parse_n(r)?, cols: parse_n(c)? }
            }
            "gnp" => {
                let p = parts.next().ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
                GraphKind::Gnp { n: parse_n(first)?, p }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(out)
    }
}

/// Deterministic for fixed `(kind, seed)`.
pub fn generate_graph(kind: &GraphKind, seed: u64) -> Result<Graph> {
    let invalid = |msg: &str| Err(Error::InvalidParams(format!("{kind}: {msg}")));
    match *kind {
        GraphKind::Path { n } => {
            if n == 0 {
                return invalid("n must be >= 1");
            }
            Ok(Graph::from_edges(n, (1..n).map(|v| (v - 1, v))))
        }
        GraphKind::Cycle { n } => {
            if n < 3 {
                return invalid("a cycle needs n >= 3");
            }
            Ok(Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))))
        }
        GraphKind::Star { n } => {
            if n == 0 {
                return invalid("n must be >= 1");
            }
            Ok(Graph::from_edges(n, (1..n).map(|v| (0, v))))
        }
        GraphKind::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return invalid("rows and cols must be >= 1");
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut pairs = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        pairs.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        pairs.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Ok(Graph::from_edges(rows * cols, pairs))
        }
        GraphKind::Gnp { n, p } => {
            if n == 0 || !(0.0..=1.0).contains(&p) {
                return invalid("need n >= 1 and 0 <= p <= 1");
            }
            let mut rng = rng::stream(seed, rng::streams::GENERATOR);
            let mut pairs = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(p) {
                        pairs.push((u, v));
                    }
                }
            }
            Ok(Graph::from_edges(n, pairs))
        }
    }
}

/// Weighted auxiliary edges (hopset, emulator, framework output).
///
/// At most one entry per unordered pair; inserting a duplicate keeps the
/// minimum weight.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightedEdgeSet {
    entries: BTreeMap<(Vertex, Vertex), Weight>,
}

impl WeightedEdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the set changed. Self-pairs are ignored.
    pub fn insert(&mut self, u: Vertex, v: Vertex, w: Weight) -> bool {
        if u == v {
            return false;
        }
        let key = (u.min(v), u.max(v));
        match self.entries.get_mut(&key) {
            Some(old) if *old <= w => false,
            Some(old) => {
                *old = w;
                true
            }
            None => {
                self.entries.insert(key, w);
                true
            }
        }
    }

    pub fn extend_from(&mut self, other: &WeightedEdgeSet) {
        for (u, v, w) in other.iter() {
            self.insert(u, v, w);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, u: Vertex, v: Vertex) -> Option<Weight> {
        self.entries.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, Vertex, Weight)> + '_ {
        self.entries.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn max_vertex(&self) -> Option<Vertex> {
        self.entries.keys().map(|&(_, v)| v).max()
    }
}

impl FromIterator<(Vertex, Vertex, Weight)> for WeightedEdgeSet {
    fn from_iter<I: IntoIterator<Item = (Vertex, Vertex, Weight)>>(iter: I) -> Self {
        let mut set = WeightedEdgeSet::new();
        for (u, v, w) in iter {
            set.insert(u, v, w);
        }
        set
    }
}

impl Serialize for WeightedEdgeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let triples: Vec<[u64; 3]> = self.iter().map(|(u, v, w)| [u as u64, v as u64, w]).collect();
        triples.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightedEdgeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<[u64; 3]>::deserialize(d)?;
        Ok(triples.into_iter().map(|[u, v, w]| (u as usize, v as usize, w)).collect())
    }
}

/// Single-source distances; `None` is UNREACHED.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceVector {
    pub source: Vertex,
    pub dist: Vec<Option<Weight>>,
}

impl DistanceVector {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.dist).expect("distance vectors always serialize")
    }
}

/// Weighted adjacency of `G ∪ extra`; graph edges have weight 1.
#[derive(Clone, Debug)]
pub struct UnionAdjacency {
    adj: Vec<Vec<(Vertex, Weight)>>,
}

impl UnionAdjacency {
    pub fn new(g: &Graph, extra: &WeightedEdgeSet) -> Self {
        Self::with_n(g.n(), g, extra)
    }

    fn with_n(n: usize, g: &Graph, extra: &WeightedEdgeSet) -> Self {
        let mut adj: Vec<Vec<(Vertex, Weight)>> = vec![Vec::new(); n];
        for &(u, v) in g.edges() {
            adj[u].push((v, 1));
            adj[v].push((u, 1));
        }
        for (u, v, w) in extra.iter() {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        UnionAdjacency { adj }
    }

    /// Adjacency of a weighted edge set alone on `n` vertices.
    pub fn weighted_only(n: usize, edges: &WeightedEdgeSet) -> Self {
        let mut adj: Vec<Vec<(Vertex, Weight)>> = vec![Vec::new(); n];
        for (u, v, w) in edges.iter() {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        UnionAdjacency { adj }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, Weight)] {
        &self.adj[v]
    }
}

/// Breadth-first exact distances from `s`.
pub fn exact_distances(g: &Graph, s: Vertex) -> DistanceVector {
    let mut dist = vec![None; g.n()];
    let mut queue = VecDeque::new();
    dist[s] = Some(0);
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued vertices are reached");
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    DistanceVector { source: s, dist }
}

/// Dijkstra over a weighted adjacency.
pub fn weighted_distances(adj: &UnionAdjacency, s: Vertex) -> DistanceVector {
    let mut dist: Vec<Option<Weight>> = vec![None; adj.n()];
    let mut heap = BinaryHeap::new();
    dist[s] = Some(0);
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u] != Some(d) {
            continue;
        }
        for &(v, w) in adj.neighbors(u) {
            let nd = d.saturating_add(w);
            if dist[v].is_none_or(|old| nd < old) {
                dist[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    DistanceVector { source: s, dist }
}

/// Minimum weight of an `s`-`v` path in `G ∪ extra` using at most `h` edges,
/// reported only if it is `<= cap` (`None` = no cap).
pub fn hop_limited_distances(
    g: &Graph,
    extra: &WeightedEdgeSet,
    s: Vertex,
    h: u64,
    cap: Option<Weight>,
) -> DistanceVector {
    hop_limited_on(&UnionAdjacency::new(g, extra), s, h, cap)
}

/// Synchronous (layered) Bellman-Ford: round `r` only reads round `r-1` values.
pub fn hop_limited_on(adj: &UnionAdjacency, s: Vertex, h: u64, cap: Option<Weight>) -> DistanceVector {
    let within = |d: Weight| cap.is_none_or(|c| d <= c);
    let mut dist: Vec<Option<Weight>> = vec![None; adj.n()];
    dist[s] = Some(0);
    let mut frontier = vec![s];
    let mut hop = 0;
    while hop < h && !frontier.is_empty() {
        hop += 1;
        let mut next = dist.clone();
        let mut changed = Vec::new();
        for &u in &frontier {
            let du = dist[u].expect("frontier vertices are reached");
            for &(v, w) in adj.neighbors(u) {
                let nd = du.saturating_add(w);
                if within(nd) && next[v].is_none_or(|old| nd < old) {
                    if next[v] == dist[v] {
                        changed.push(v);
                    }
                    next[v] = Some(nd);
                }
            }
        }
        dist = next;
        frontier = changed;
    }
    DistanceVector { source: s, dist }
}

/// All-pairs BFS, row per source.
pub fn all_pairs_exact(g: &Graph) -> Vec<Vec<Option<Weight>>> {
    (0..g.n()).map(|s| exact_distances(g, s).dist).collect()
}
