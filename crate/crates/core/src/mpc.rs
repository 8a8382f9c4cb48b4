//! Simulated MPC substrate: machines with a word capacity, synchronous
//! rounds and round/memory/I-O accounting.
//!
//! Sort, tuple computation, broadcast and copying produce their results
//! directly and charge their round cost. Only the Bellman-Ford hops in
//! [`crate::bellman_ford`] exchange real per-round messages.

use std::collections::{BTreeMap, HashMap};

use num::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graph::{Graph, Vertex, Weight, WeightedEdgeSet};

/// Minimum machine capacity in words.
pub const MIN_CAPACITY: usize = 64;

/// Words per [`EdgeTuple`]: u, v, j, deg_u, deg_v, r_u, r_v, i_u, i_v, w and
/// a two-word payload.
pub const EDGE_TUPLE_WIDTH: usize = 12;

/// Words per [`DirEdge`].
pub const DIR_EDGE_WIDTH: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MpcConfig {
    pub n: usize,
    pub gamma: Rational,
    pub rho: Rational,
    pub machine_capacity: usize,
    pub total_capacity: u128,
    pub whp_constant: u32,
    pub c_sort: u64,
    pub c_bcast: u64,
    pub c_bf: u64,
}

impl MpcConfig {
    /// `m` is the number of undirected edges the budget is sized for.
    pub fn new(n: usize, m: usize, gamma: Rational, rho: Rational) -> Result<Self> {
        if !gamma.is_positive() || gamma > exact::one() {
            return Err(Error::InvalidParams(format!("gamma must be in (0,1], got {}", exact::render(&gamma))));
        }
        if !rho.is_positive() || rho > exact::ratio(1, 2) {
            return Err(Error::InvalidParams(format!("rho must be in (0,1/2], got {}", exact::render(&rho))));
        }
        let nf = n.max(1) as f64;
        let s = (nf.powf(exact::to_f64(&gamma)) - 1e-9).ceil().max(0.0) as usize;
        let machine_capacity = s.max(MIN_CAPACITY);
        let log = log2_ceil(n).max(1) as u128;
        let n_rho = nf.powf(exact::to_f64(&rho)).ceil() as u128;
        let total_capacity = 64 * log * log * n_rho * (n.max(m).max(1) as u128) * EDGE_TUPLE_WIDTH as u128;
        Ok(MpcConfig {
            n,
            gamma,
            rho,
            machine_capacity,
            total_capacity,
            whp_constant: 4,
            c_sort: 1,
            c_bcast: 1,
            c_bf: 4,
        })
    }

    pub fn for_graph(g: &Graph, gamma: Rational, rho: Rational) -> Result<Self> {
        Self::new(g.n(), g.m(), gamma, rho)
    }

    pub fn with_capacity(mut self, machine_capacity: usize) -> Self {
        self.machine_capacity = machine_capacity.max(MIN_CAPACITY);
        self
    }

    pub fn with_total_capacity(mut self, words: u128) -> Self {
        self.total_capacity = words;
        self
    }

    pub fn with_whp_constant(mut self, c: u32) -> Self {
        self.whp_constant = c;
        self
    }

    /// `⌈1/γ⌉`.
    pub fn round_unit(&self) -> u64 {
        exact::ceil_u64(&self.gamma.recip())
    }

    /// `⌈c · base · ln n⌉`, at least 1.
    pub fn mu_for(&self, base: f64) -> usize {
        let ln = (self.n.max(2) as f64).ln();
        ((self.whp_constant as f64 * base * ln).ceil() as usize).max(1)
    }
}

pub fn log2_ceil(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub rounds: u64,
    pub max_residency: u64,
    pub max_round_io: u64,
    pub total_words: u64,
}

impl RoundStats {
    /// Component-wise combination for runs on separate engines.
    pub fn absorb(&mut self, other: &RoundStats) {
        self.rounds += other.rounds;
        self.max_residency = self.max_residency.max(other.max_residency);
        self.max_round_io = self.max_round_io.max(other.max_round_io);
        self.total_words = self.total_words.max(other.total_words);
    }
}

/// Anything stored on a machine; its width is its word count.
pub trait Record: Clone {
    fn width(&self) -> usize;
}

impl Record for u64 {
    fn width(&self) -> usize {
        1
    }
}

/// Directed weighted edge before tuples are attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirEdge {
    pub u: Vertex,
    pub v: Vertex,
    pub w: Weight,
}

impl Record for DirEdge {
    fn width(&self) -> usize {
        DIR_EDGE_WIDTH
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeTuple {
    pub u: Vertex,
    pub v: Vertex,
    pub j: usize,
    pub deg_u: usize,
    pub deg_v: usize,
    pub r_u: usize,
    pub r_v: usize,
    pub i_u: usize,
    pub i_v: usize,
    pub w: Weight,
    pub payload: Option<(Vertex, Weight)>,
}

impl Record for EdgeTuple {
    fn width(&self) -> usize {
        EDGE_TUPLE_WIDTH
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachinePool<R> {
    machines: Vec<Vec<R>>,
    inbox: Vec<Vec<u64>>,
    capacity: usize,
}

impl<R: Record> MachinePool<R> {
    /// Greedy packing in input order.
    fn pack(records: Vec<R>, capacity: usize) -> Result<Self> {
        let mut machines: Vec<Vec<R>> = Vec::new();
        let mut load = 0;
        for r in records {
            let w = r.width();
            if w > capacity {
                return Err(Error::RecordTooLarge { words: w, capacity });
            }
            if machines.is_empty() || load + w > capacity {
                machines.push(Vec::new());
                load = 0;
            }
            load += w;
            machines.last_mut().expect("just pushed").push(r);
        }
        let inbox = vec![Vec::new(); machines.len()];
        Ok(MachinePool { machines, inbox, capacity })
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn machine(&self, i: usize) -> &[R] {
        &self.machines[i]
    }

    pub fn residency(&self, i: usize) -> usize {
        self.machines[i].iter().map(Record::width).sum()
    }

    pub fn loads(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.residency(i)).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &R> + '_ {
        self.machines.iter().flatten()
    }

    pub fn record_count(&self) -> usize {
        self.machines.iter().map(Vec::len).sum()
    }

    pub fn into_records(self) -> Vec<R> {
        self.machines.into_iter().flatten().collect()
    }

    /// Machine index holding each record, in global order.
    pub fn placement(&self) -> Vec<usize> {
        self.machines.iter().enumerate().flat_map(|(i, m)| std::iter::repeat_n(i, m.len())).collect()
    }

    /// Messages delivered by broadcasts.
    pub fn inbox(&self, i: usize) -> &[u64] {
        &self.inbox[i]
    }
}

/// Owns the accounting for one execution.
#[derive(Clone, Debug)]
pub struct Engine {
    config: MpcConfig,
    stats: RoundStats,
}

impl Engine {
    pub fn new(config: MpcConfig) -> Self {
        Engine { config, stats: RoundStats::default() }
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    pub fn stats(&self) -> RoundStats {
        self.stats
    }

    pub fn capacity(&self) -> usize {
        self.config.machine_capacity
    }

    pub fn charge(&mut self, rounds: u64) {
        self.stats.rounds += rounds;
    }

    /// Records the per-machine load of a round boundary.
    pub fn observe_loads(&mut self, max_machine_words: usize, total_words: u64) -> Result<()> {
        if max_machine_words > self.capacity() {
            return Err(Error::ResidencyExceeded {
                machine: usize::MAX,
                words: max_machine_words,
                capacity: self.capacity(),
            });
        }
        self.stats.max_residency = self.stats.max_residency.max(max_machine_words as u64);
        self.stats.total_words = self.stats.total_words.max(total_words);
        Ok(())
    }

    pub fn observe_pool<R: Record>(&mut self, pool: &MachinePool<R>) -> Result<()> {
        let mut total = 0u64;
        for i in 0..pool.len() {
            let words = pool.residency(i);
            if words > self.capacity() {
                return Err(Error::ResidencyExceeded { machine: i, words, capacity: self.capacity() });
            }
            total += words as u64;
            self.stats.max_residency = self.stats.max_residency.max(words as u64);
        }
        self.stats.total_words = self.stats.total_words.max(total);
        Ok(())
    }

    /// Checks one round's traffic: `machine -> (sent, received)` words.
    pub fn record_round_io(&mut self, traffic: &HashMap<usize, (usize, usize)>) -> Result<()> {
        let cap = self.capacity();
        let mut ordered: Vec<_> = traffic.iter().collect();
        ordered.sort_unstable_by_key(|(m, _)| **m);
        for (&machine, &(sent, recv)) in ordered {
            let words = sent.max(recv);
            if words > cap {
                return Err(Error::IoCapExceeded { machine, words, capacity: cap });
            }
            self.stats.max_round_io = self.stats.max_round_io.max(words as u64);
        }
        Ok(())
    }

    fn sort_cost(&self) -> u64 {
        self.config.c_sort * self.config.round_unit()
    }

    fn bcast_cost(&self) -> u64 {
        self.config.c_bcast * self.config.round_unit()
    }

    /// Rounds charged for one sort plus one broadcast.
    pub fn sort_and_broadcast_cost(&self) -> u64 {
        self.sort_cost() + self.bcast_cost()
    }

    pub fn distribute<R: Record>(&mut self, records: Vec<R>) -> Result<MachinePool<R>> {
        let pool = MachinePool::pack(records, self.capacity())?;
        self.observe_pool(&pool)?;
        Ok(pool)
    }

    /// Stable global sort by `key`, then re-packing.
    pub fn sorted_redistribute<R: Record, K: Ord>(
        &mut self,
        pool: MachinePool<R>,
        key: impl FnMut(&R) -> K,
    ) -> Result<MachinePool<R>> {
        let capacity = pool.capacity;
        let mut records = pool.into_records();
        records.sort_by_cached_key(key);
        let out = MachinePool::pack(records, capacity)?;
        self.charge(self.sort_cost());
        self.observe_pool(&out)?;
        Ok(out)
    }

    /// Attaches degrees, ranks and first-machine indices to every directed edge.
    pub fn compute_edge_tuples(&mut self, pool: MachinePool<DirEdge>) -> Result<MachinePool<EdgeTuple>> {
        let capacity = pool.capacity;
        let edges = pool.into_records();
        if edges.windows(2).any(|p| (p[0].u, p[0].v) > (p[1].u, p[1].v)) {
            return Err(Error::InvalidParams("edge pool is not sorted by (u, v)".into()));
        }
        let mut first: BTreeMap<Vertex, usize> = BTreeMap::new();
        let mut deg: HashMap<Vertex, usize> = HashMap::new();
        let mut index: HashMap<(Vertex, Vertex), usize> = HashMap::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            first.entry(e.u).or_insert(k);
            *deg.entry(e.u).or_insert(0) += 1;
            index.insert((e.u, e.v), k);
        }
        let per_machine = capacity / EDGE_TUPLE_WIDTH;
        if per_machine == 0 {
            return Err(Error::RecordTooLarge { words: EDGE_TUPLE_WIDTH, capacity });
        }
        let mut tuples = Vec::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            let Some(&rev) = index.get(&(e.v, e.u)) else {
                return Err(Error::MissingReverseEdge { u: e.u, v: e.v });
            };
            tuples.push(EdgeTuple {
                u: e.u,
                v: e.v,
                j: 0,
                deg_u: deg[&e.u],
                deg_v: deg[&e.v],
                r_u: first[&e.u] / per_machine,
                r_v: first[&e.v] / per_machine,
                i_u: k - first[&e.u],
                i_v: rev - first[&e.v],
                w: e.w,
                payload: None,
            });
        }
        let out = MachinePool::pack(tuples, capacity)?;
        self.charge(self.sort_and_broadcast_cost());
        self.observe_pool(&out)?;
        Ok(out)
    }

    /// Places `message` on machines `x..=y` through an S-ary dissemination tree.
    pub fn broadcast_range<R: Record>(
        &mut self,
        pool: &mut MachinePool<R>,
        message: &[u64],
        x: usize,
        y: usize,
    ) -> Result<u64> {
        self.broadcast_many(pool, &[(message.to_vec(), x, y)])
    }

    /// Runs several broadcasts on disjoint ranges in the same rounds.
    /// Returns the dissemination depth.
    pub fn broadcast_many<R: Record>(
        &mut self,
        pool: &mut MachinePool<R>,
        jobs: &[(Vec<u64>, usize, usize)],
    ) -> Result<u64> {
        let cap = self.capacity();
        let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(jobs.len());
        for (msg, x, y) in jobs {
            if x > y || *y >= pool.len() {
                return Err(Error::InvalidParams(format!("bad broadcast range {x}..={y} over {} machines", pool.len())));
            }
            if msg.len() > cap {
                return Err(Error::RecordTooLarge { words: msg.len(), capacity: cap });
            }
            ranges.push((*x, *y));
        }
        ranges.sort_unstable();
        if ranges.windows(2).any(|p| p[0].1 >= p[1].0) {
            return Err(Error::InvalidParams("concurrent broadcast ranges overlap".into()));
        }
        // informed[k] = how many machines of job k hold the message
        let mut informed: Vec<usize> = vec![1; jobs.len()];
        let mut depth = 0u64;
        loop {
            let mut traffic: HashMap<usize, (usize, usize)> = HashMap::new();
            let mut progressed = false;
            for (k, (msg, x, y)) in jobs.iter().enumerate() {
                let size = y - x + 1;
                let have = informed[k];
                if have >= size {
                    continue;
                }
                progressed = true;
                let b = msg.len().max(1);
                let fanout = (cap / b).max(1);
                let mut next = have;
                for sender in 0..have {
                    if next >= size {
                        break;
                    }
                    let count = fanout.min(size - next);
                    traffic.entry(x + sender).or_default().0 += count * b;
                    for r in next..next + count {
                        traffic.entry(x + r).or_default().1 += b;
                    }
                    next += count;
                }
                informed[k] = next;
            }
            if !progressed {
                break;
            }
            depth += 1;
            self.record_round_io(&traffic)?;
        }
        for (msg, x, y) in jobs {
            for m in *x..=*y {
                pool.inbox[m].extend_from_slice(msg);
            }
        }
        self.charge(self.bcast_cost().max(depth));
        Ok(depth)
    }

    /// Materializes `mu` copies of every tuple, copies of one edge adjacent.
    pub fn copy_edges(&mut self, pool: MachinePool<EdgeTuple>, mu: usize) -> Result<MachinePool<EdgeTuple>> {
        if mu == 0 {
            return Err(Error::InvalidParams("mu must be >= 1".into()));
        }
        let capacity = pool.capacity;
        let needed = pool.record_count() as u128 * mu as u128 * EDGE_TUPLE_WIDTH as u128;
        if needed > self.config.total_capacity {
            return Err(Error::CapacityExceeded { needed, budget: self.config.total_capacity });
        }
        let per_machine = capacity / EDGE_TUPLE_WIDTH;
        let tuples = pool.into_records();
        let mut first: HashMap<Vertex, usize> = HashMap::new();
        for (k, t) in tuples.iter().enumerate() {
            first.entry(t.u).or_insert(k);
        }
        let mut out = Vec::with_capacity(tuples.len() * mu);
        for t in &tuples {
            for j in 0..mu {
                out.push(EdgeTuple {
                    j,
                    deg_u: t.deg_u * mu,
                    deg_v: t.deg_v * mu,
                    r_u: first[&t.u] * mu / per_machine,
                    r_v: first[&t.v] * mu / per_machine,
                    i_u: t.i_u * mu + j,
                    i_v: t.i_v * mu + j,
                    ..*t
                });
            }
        }
        let out = MachinePool::pack(out, capacity)?;
        self.charge(self.sort_and_broadcast_cost());
        self.observe_pool(&out)?;
        Ok(out)
    }
}

/// Both orientations of every edge of `G ∪ H`, minimum weight per pair,
/// sorted by `(u, v)`.
pub fn directed_union(g: &Graph, h: &WeightedEdgeSet) -> Vec<DirEdge> {
    let mut merged = h.clone();
    for &(u, v) in g.edges() {
        merged.insert(u, v, 1);
    }
    let mut out: Vec<DirEdge> = merged
        .iter()
        .flat_map(|(u, v, w)| [DirEdge { u, v, w }, DirEdge { u: v, v: u, w }])
        .collect();
    out.sort_unstable();
    out
}

/// Arithmetic form of the μ-copy layout: global slot of copy `j` of the
/// `rank`-th edge of `u` is `(offset[u] + rank)·μ + j`; machine = slot / R.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CopyLayout {
    offsets: Vec<usize>,
    mu: usize,
    per_machine: usize,
}

impl CopyLayout {
    /// `edges` sorted by `(u, v)`; `n` bounds the vertex ids.
    pub fn new(n: usize, edges: &[DirEdge], mu: usize, capacity: usize) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for e in edges {
            offsets[e.u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        CopyLayout { offsets, mu, per_machine: (capacity / EDGE_TUPLE_WIDTH).max(1) }
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn records_per_machine(&self) -> usize {
        self.per_machine
    }

    pub fn slot(&self, u: Vertex, rank: usize, j: usize) -> usize {
        (self.offsets[u] + rank) * self.mu + j
    }

    pub fn machine(&self, u: Vertex, rank: usize, j: usize) -> usize {
        self.slot(u, rank, j) / self.per_machine
    }

    pub fn record_count(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) * self.mu
    }

    pub fn machine_count(&self) -> usize {
        self.record_count().div_ceil(self.per_machine)
    }

    /// Largest machine load in words.
    pub fn max_load(&self) -> usize {
        self.per_machine.min(self.record_count()) * EDGE_TUPLE_WIDTH
    }

    pub fn total_words(&self) -> u64 {
        (self.record_count() * EDGE_TUPLE_WIDTH) as u64
    }
}
