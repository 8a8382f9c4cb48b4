//! Hop-limited explorations run as real message exchanges on the engine.
//!
//! Edges of `G ∪ H` sit on machines as tuples with μ implicit copies each
//! ([`CopyLayout`]). In every hop, a vertex whose `j`-th estimate changed
//! sends it from copy `j` of each edge `(u, v)` to copy `j` of `(v, u)`; the
//! engine checks per-machine sent/received words against `S`.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graph::{Graph, Vertex, Weight, WeightedEdgeSet};
use crate::mpc::{directed_union, CopyLayout, Engine, EDGE_TUPLE_WIDTH};

/// Words per distance message: source id and distance.
const MESSAGE_WIDTH: usize = 2;

/// Distance threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Unbounded,
    /// `d <= b`
    Inclusive(Weight),
    /// `d < b`
    Below(Weight),
}

impl Bound {
    pub fn admits(&self, d: Weight) -> bool {
        match *self {
            Bound::Unbounded => true,
            Bound::Inclusive(b) => d <= b,
            Bound::Below(b) => d < b,
        }
    }

    /// `d <= q` for a rational `q`; a negative `q` admits nothing.
    pub fn at_most(q: &Rational) -> Bound {
        match exact::floor_u64(q) {
            Some(b) => Bound::Inclusive(b),
            None => Bound::Below(0),
        }
    }

    /// The tighter of two bounds.
    pub fn meet(self, other: Bound) -> Bound {
        let key = |b: Bound| match b {
            Bound::Unbounded => u128::MAX,
            Bound::Inclusive(x) => x as u128 + 1,
            Bound::Below(x) => x as u128,
        };
        if key(self) <= key(other) {
            self
        } else {
            other
        }
    }
}

/// `G ∪ H` laid out on the engine with μ copies per directed edge.
#[derive(Clone, Debug)]
pub struct Network {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<Vertex>,
    weights: Vec<Weight>,
    /// rank of `(v, u)` among `v`'s edges, for each edge `(u, v)`
    reverse_rank: Vec<usize>,
    layout: CopyLayout,
}

impl Network {
    /// Distributes, sorts and builds tuples for the edges of `G ∪ H`, then
    /// charges the μ-copy step (copies stay implicit in the layout).
    pub fn prepare(engine: &mut Engine, g: &Graph, h: &WeightedEdgeSet, mu: usize) -> Result<Self> {
        if mu == 0 {
            return Err(Error::InvalidParams("mu must be >= 1".into()));
        }
        let n = g.n().max(h.max_vertex().map_or(0, |v| v + 1));
        let edges = directed_union(g, h);
        let pool = engine.distribute(edges.clone())?;
        let pool = engine.sorted_redistribute(pool, |e| (e.u, e.v))?;
        let tuples = engine.compute_edge_tuples(pool)?;

        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(tuples.record_count());
        let mut weights = Vec::with_capacity(tuples.record_count());
        let mut reverse_rank = Vec::with_capacity(tuples.record_count());
        for t in tuples.records() {
            offsets[t.u + 1] += 1;
            targets.push(t.v);
            weights.push(t.w);
            reverse_rank.push(t.i_v);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }

        let layout = CopyLayout::new(n, &edges, mu, engine.capacity());
        if mu > 1 {
            let needed = layout.record_count() as u128 * EDGE_TUPLE_WIDTH as u128;
            let budget = engine.config().total_capacity;
            if needed > budget {
                return Err(Error::CapacityExceeded { needed, budget });
            }
            engine.charge(engine.sort_and_broadcast_cost());
        }
        engine.observe_loads(layout.max_load(), layout.total_words())?;
        Ok(Network { n, offsets, targets, weights, reverse_rank, layout })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> usize {
        self.layout.mu()
    }

    pub fn layout(&self) -> &CopyLayout {
        &self.layout
    }

    fn edges_of(&self, u: Vertex) -> impl Iterator<Item = (usize, Vertex, Weight, usize)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        range.clone().map(move |e| (e - self.offsets[u], self.targets[e], self.weights[e], self.reverse_rank[e]))
    }

    fn charge_hop(&self, engine: &mut Engine, traffic: &HashMap<usize, (usize, usize)>) -> Result<()> {
        engine.record_round_io(traffic)?;
        engine.charge(1 + engine.sort_and_broadcast_cost());
        Ok(())
    }
}

/// Nearest-source exploration from a virtual source joined to `sources`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearestResult {
    /// `(source, distance)`; ties go to the smaller source id.
    pub nearest: Vec<Option<(Vertex, Weight)>>,
    pub hops: u64,
}

/// Per-vertex source sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiResult {
    pub multi: Vec<BTreeMap<Vertex, Weight>>,
    pub hops: u64,
}

/// For every `v`, the lexicographically smallest `(d, s)` over `s ∈ sources`
/// with `d = d^{(h)}(s, v)` admitted by `cap`.
pub fn restricted_bf(
    engine: &mut Engine,
    net: &Network,
    sources: &[Vertex],
    h: u64,
    cap: Bound,
) -> Result<NearestResult> {
    let mut state: Vec<Option<(Weight, Vertex)>> = vec![None; net.n];
    let mut fresh: Vec<Vertex> = Vec::new();
    for &s in sources {
        if s >= net.n {
            return Err(Error::VertexOutOfRange { vertex: s, n: net.n });
        }
        if cap.admits(0) && state[s].is_none() {
            state[s] = Some((0, s));
            fresh.push(s);
        }
    }
    fresh.sort_unstable();
    let mut hops = 0;
    while hops < h && !fresh.is_empty() {
        hops += 1;
        let mut traffic: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut proposals: BTreeMap<Vertex, (Weight, Vertex)> = BTreeMap::new();
        for &u in &fresh {
            let (d, s) = state[u].expect("fresh vertices hold an estimate");
            for (rank, v, w, back) in net.edges_of(u) {
                let nd = d.saturating_add(w);
                if !cap.admits(nd) {
                    continue;
                }
                let from = net.layout.machine(u, rank, 0);
                let to = net.layout.machine(v, back, 0);
                traffic.entry(from).or_default().0 += MESSAGE_WIDTH;
                traffic.entry(to).or_default().1 += MESSAGE_WIDTH;
                let best = proposals.entry(v).or_insert((nd, s));
                if (nd, s) < *best {
                    *best = (nd, s);
                }
            }
        }
        net.charge_hop(engine, &traffic)?;
        fresh.clear();
        for (v, cand) in proposals {
            if state[v].is_none_or(|cur| cand < cur) {
                state[v] = Some(cand);
                fresh.push(v);
            }
        }
    }
    Ok(NearestResult { nearest: state.into_iter().map(|e| e.map(|(d, s)| (s, d))).collect(), hops })
}

/// For every `v`, `{(s, d^{(h)}(s, v)) : s ∈ sources}` restricted by
/// `thresholds[v]`. A message is suppressed at the sender when its target's
/// threshold rejects it, so a vertex only relays estimates it keeps itself.
///
/// Fails with [`Error::MuOverflow`] when a vertex would hold more than `mu`
/// sources.
pub fn multi_source_bf(
    engine: &mut Engine,
    net: &Network,
    sources: &[Vertex],
    h: u64,
    thresholds: &[Bound],
    mu: usize,
) -> Result<MultiResult> {
    if thresholds.len() != net.n {
        return Err(Error::InvalidParams(format!("{} thresholds for {} vertices", thresholds.len(), net.n)));
    }
    if mu == 0 || mu > net.mu() {
        return Err(Error::InvalidParams(format!("mu = {mu} but the network holds {} copies", net.mu())));
    }
    let mut state: Vec<BTreeMap<Vertex, Weight>> = vec![BTreeMap::new(); net.n];
    let mut fresh: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for &s in sources {
        if s >= net.n {
            return Err(Error::VertexOutOfRange { vertex: s, n: net.n });
        }
        if thresholds[s].admits(0) && state[s].insert(s, 0).is_none() {
            fresh.entry(s).or_default().push(s);
        }
    }
    check_mu(&state, fresh.keys().copied(), mu)?;
    let mut hops = 0;
    while hops < h && !fresh.is_empty() {
        hops += 1;
        let mut traffic: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut proposals: BTreeMap<Vertex, BTreeMap<Vertex, Weight>> = BTreeMap::new();
        for (&u, changed) in &fresh {
            for &s in changed {
                let d = state[u][&s];
                let j = state[u].range(..s).count();
                for (rank, v, w, back) in net.edges_of(u) {
                    let nd = d.saturating_add(w);
                    if !thresholds[v].admits(nd) {
                        continue;
                    }
                    let from = net.layout.machine(u, rank, j);
                    let to = net.layout.machine(v, back, j);
                    traffic.entry(from).or_default().0 += MESSAGE_WIDTH;
                    traffic.entry(to).or_default().1 += MESSAGE_WIDTH;
                    let best = proposals.entry(v).or_default().entry(s).or_insert(nd);
                    if nd < *best {
                        *best = nd;
                    }
                }
            }
        }
        net.charge_hop(engine, &traffic)?;
        fresh.clear();
        for (v, cands) in proposals {
            for (s, nd) in cands {
                if state[v].get(&s).is_none_or(|&cur| nd < cur) {
                    state[v].insert(s, nd);
                    fresh.entry(v).or_default().push(s);
                }
            }
        }
        check_mu(&state, fresh.keys().copied(), mu)?;
    }
    Ok(MultiResult { multi: state, hops })
}

fn check_mu(state: &[BTreeMap<Vertex, Weight>], touched: impl Iterator<Item = Vertex>, mu: usize) -> Result<()> {
    for v in touched {
        if state[v].len() > mu {
            return Err(Error::MuOverflow { vertex: v, count: state[v].len(), mu });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, hop_limited_distances, GraphKind};
    use crate::mpc::MpcConfig;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn engine_for(g: &Graph) -> Engine {
        Engine::new(MpcConfig::for_graph(g, exact::ratio(1, 2), exact::ratio(1, 2)).unwrap())
    }

    fn path4() -> Graph {
        generate_graph(&GraphKind::Path { n: 4 }, 0).unwrap()
    }

    fn random_subset(n: usize, k: usize, seed: u64) -> Vec<Vertex> {
        let mut all: Vec<Vertex> = (0..n).collect();
        all.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        all.truncate(k);
        all.sort_unstable();
        all
    }

    /// Sequential oracle: per-source hop-limited distances, minimized by (d, s).
    fn nearest_oracle(g: &Graph, h: &WeightedEdgeSet, a: &[Vertex], hops: u64, cap: Option<u64>) -> Vec<Option<(Vertex, Weight)>> {
        let mut best: Vec<Option<(Weight, Vertex)>> = vec![None; g.n()];
        for &s in a {
            let dv = hop_limited_distances(g, h, s, hops, cap);
            for (v, d) in dv.dist.iter().enumerate() {
                if let Some(d) = *d {
                    if best[v].is_none_or(|b| (d, s) < b) {
                        best[v] = Some((d, s));
                    }
                }
            }
        }
        best.into_iter().map(|b| b.map(|(d, s)| (s, d))).collect()
    }

    fn multi_oracle(g: &Graph, h: &WeightedEdgeSet, sources: &[Vertex], hops: u64, delta: u64) -> Vec<BTreeMap<Vertex, Weight>> {
        let mut out = vec![BTreeMap::new(); g.n()];
        for &s in sources {
            let dv = hop_limited_distances(g, h, s, hops, None);
            for (v, d) in dv.dist.iter().enumerate() {
                if let Some(d) = *d {
                    if d <= delta {
                        out[v].insert(s, d);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn bound_semantics() {
        assert!(Bound::Inclusive(3).admits(3));
        assert!(!Bound::Below(3).admits(3));
        assert!(Bound::Unbounded.admits(u64::MAX));
        assert_eq!(Bound::at_most(&exact::ratio(7, 2)), Bound::Inclusive(3));
        assert!(!Bound::at_most(&exact::ratio(-1, 2)).admits(0));
        assert_eq!(Bound::Inclusive(3).meet(Bound::Below(3)), Bound::Below(3));
        assert_eq!(Bound::Unbounded.meet(Bound::Below(9)), Bound::Below(9));
    }

    #[test]
    fn single_source_on_path() {
        let g = path4();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 1).unwrap();
        let r = restricted_bf(&mut e, &net, &[0], 3, Bound::Unbounded).unwrap();
        assert_eq!(r.nearest, vec![Some((0, 0)), Some((0, 1)), Some((0, 2)), Some((0, 3))]);
    }

    #[test]
    fn two_sources_one_hop() {
        let g = path4();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 1).unwrap();
        let r = restricted_bf(&mut e, &net, &[0, 3], 1, Bound::Unbounded).unwrap();
        assert_eq!(r.nearest[1], Some((0, 1)));
        assert_eq!(r.nearest[2], Some((3, 1)));
    }

    #[test]
    fn ties_go_to_smaller_source() {
        let g = generate_graph(&GraphKind::Path { n: 3 }, 0).unwrap();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 1).unwrap();
        let r = restricted_bf(&mut e, &net, &[2, 0], 5, Bound::Unbounded).unwrap();
        assert_eq!(r.nearest[1], Some((0, 1)));
    }

    #[test]
    fn restricted_matches_sequential_oracle_on_gnp() {
        let g = generate_graph(&GraphKind::Gnp { n: 128, p: 0.05 }, 3).unwrap();
        let a = random_subset(128, 8, 11);
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 1).unwrap();
        let before = e.stats().rounds;
        let r = restricted_bf(&mut e, &net, &a, 6, Bound::Inclusive(10)).unwrap();
        assert_eq!(r.nearest, nearest_oracle(&g, &WeightedEdgeSet::new(), &a, 6, Some(10)));
        let c = e.config();
        assert!(e.stats().rounds - before <= c.c_bf * 6 * c.round_unit());
        assert!(e.stats().max_round_io <= c.machine_capacity as u64);
    }

    #[test]
    fn restricted_uses_weighted_edges() {
        let g = path4();
        let h: WeightedEdgeSet = [(0, 3, 3)].into_iter().collect();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &h, 1).unwrap();
        let r = restricted_bf(&mut e, &net, &[0], 1, Bound::Unbounded).unwrap();
        assert_eq!(r.nearest, vec![Some((0, 0)), Some((0, 1)), None, Some((0, 3))]);
    }

    #[test]
    fn star_leaves_reach_center() {
        let g = generate_graph(&GraphKind::Star { n: 5 }, 0).unwrap();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 8).unwrap();
        let unbounded = vec![Bound::Unbounded; 5];
        let r = multi_source_bf(&mut e, &net, &[1, 2, 3, 4], 2, &unbounded, 8).unwrap();
        let expected: BTreeMap<Vertex, Weight> = [(1, 1), (2, 1), (3, 1), (4, 1)].into_iter().collect();
        assert_eq!(r.multi[0], expected);

        let mut tight = unbounded.clone();
        tight[0] = Bound::Inclusive(0);
        let r = multi_source_bf(&mut e, &net, &[1, 2, 3, 4], 2, &tight, 8).unwrap();
        assert!(r.multi[0].is_empty());
    }

    #[test]
    fn multi_matches_filtered_oracle_on_gnp() {
        let g = generate_graph(&GraphKind::Gnp { n: 128, p: 0.05 }, 3).unwrap();
        let s = random_subset(128, 16, 5);
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 64).unwrap();
        let before = e.stats().rounds;
        let r = multi_source_bf(&mut e, &net, &s, 5, &vec![Bound::Inclusive(7); 128], 64).unwrap();
        assert_eq!(r.multi, multi_oracle(&g, &WeightedEdgeSet::new(), &s, 5, 7));
        let c = e.config();
        assert!(e.stats().rounds - before <= c.c_bf * 5 * c.round_unit());
        assert!(e.stats().max_round_io <= c.machine_capacity as u64);
    }

    #[test]
    fn mu_overflow_is_reported() {
        let g = generate_graph(&GraphKind::Star { n: 5 }, 0).unwrap();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 2).unwrap();
        let err = multi_source_bf(&mut e, &net, &[1, 2, 3, 4], 2, &[Bound::Unbounded; 5], 2).unwrap_err();
        assert!(matches!(err, Error::MuOverflow { vertex: 0, mu: 2, .. }));
    }

    #[test]
    fn io_cap_violation_is_detected() {
        let g = generate_graph(&GraphKind::Star { n: 5 }, 0).unwrap();
        let mut e = engine_for(&g);
        let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 1).unwrap();
        let mut traffic = HashMap::new();
        traffic.insert(0usize, (65usize, 0usize));
        assert!(matches!(net.charge_hop(&mut e, &traffic), Err(Error::IoCapExceeded { machine: 0, .. })));
    }

    /// Oracle for per-vertex thresholds: an estimate enters a vertex only if
    /// that vertex's threshold admits it.
    fn constrained_oracle(g: &Graph, sources: &[Vertex], hops: u64, th: &[Bound]) -> Vec<BTreeMap<Vertex, Weight>> {
        let mut out = vec![BTreeMap::new(); g.n()];
        for &s in sources {
            if !th[s].admits(0) {
                continue;
            }
            let mut dist: Vec<Option<u64>> = vec![None; g.n()];
            dist[s] = Some(0);
            for _ in 0..hops {
                let prev = dist.clone();
                for u in 0..g.n() {
                    if let Some(d) = prev[u] {
                        for &v in g.neighbors(u) {
                            if th[v].admits(d + 1) && dist[v].is_none_or(|x| d + 1 < x) {
                                dist[v] = Some(d + 1);
                            }
                        }
                    }
                }
            }
            for (v, d) in dist.into_iter().enumerate() {
                if let Some(d) = d {
                    out[v].insert(s, d);
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn restricted_equals_oracle(n in 2usize..40, p in 0.05f64..0.4, seed in 0u64..1000, k in 1usize..5, hops in 0u64..6, cap in 0u64..8) {
            let g = generate_graph(&GraphKind::Gnp { n, p }, seed).unwrap();
            let a = random_subset(n, k.min(n), seed);
            let mut e = engine_for(&g);
            let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), 1).unwrap();
            let r = restricted_bf(&mut e, &net, &a, hops, Bound::Inclusive(cap)).unwrap();
            prop_assert_eq!(r.nearest, nearest_oracle(&g, &WeightedEdgeSet::new(), &a, hops, Some(cap)));
        }

        #[test]
        fn multi_equals_oracle_with_uniform_threshold(n in 2usize..40, p in 0.05f64..0.4, seed in 0u64..1000, k in 1usize..8, hops in 0u64..6, delta in 0u64..8, wseed in 0u64..50) {
            let g = generate_graph(&GraphKind::Gnp { n, p }, seed).unwrap();
            let h: WeightedEdgeSet = random_subset(n, 4.min(n), wseed)
                .windows(2).map(|w| (w[0], w[1], 1 + (wseed % 4))).collect();
            let s = random_subset(n, k.min(n), seed + 1);
            let mut e = engine_for(&g);
            let net = Network::prepare(&mut e, &g, &h, n).unwrap();
            let r = multi_source_bf(&mut e, &net, &s, hops, &vec![Bound::Inclusive(delta); n], n).unwrap();
            let expected = multi_oracle(&g, &h, &s, hops, delta);
            prop_assert_eq!(&r.multi, &expected);
            for (v, m) in r.multi.iter().enumerate() {
                prop_assert!(m.values().all(|&d| d <= delta), "vertex {} exceeds threshold", v);
            }
            prop_assert!(e.stats().max_round_io <= e.config().machine_capacity as u64);
        }

        #[test]
        fn multi_respects_per_vertex_thresholds(n in 2usize..30, p in 0.05f64..0.4, seed in 0u64..1000, hops in 0u64..6) {
            let g = generate_graph(&GraphKind::Gnp { n, p }, seed).unwrap();
            let th: Vec<Bound> = (0..n).map(|v| match v % 3 {
                0 => Bound::Unbounded,
                1 => Bound::Below((v % 5) as u64),
                _ => Bound::Inclusive((v % 4) as u64),
            }).collect();
            let s = random_subset(n, (n / 3).max(1), seed);
            let mut e = engine_for(&g);
            let net = Network::prepare(&mut e, &g, &WeightedEdgeSet::new(), n).unwrap();
            let r = multi_source_bf(&mut e, &net, &s, hops, &th, n).unwrap();
            for (v, m) in r.multi.iter().enumerate() {
                prop_assert!(m.values().all(|&d| th[v].admits(d)));
            }
            prop_assert_eq!(r.multi, constrained_oracle(&g, &s, hops, &th));
        }
    }
}
