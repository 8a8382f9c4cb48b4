//! `(1+ε)`-approximate single- and multi-source shortest paths: the minimum
//! of a `β_H`-hop exploration in `G ∪ H` and exact distances in the emulator.

use std::str::FromStr;

use num::BigUint;
use serde::Serialize;

use crate::bellman_ford::{multi_source_bf, restricted_bf, Bound, Network};
use crate::emulator::{build_emulator, emulator_sssp, Emulator};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graph::{Graph, Vertex, WeightedEdgeSet};
use crate::hopset::Hopset;
use crate::mpc::{Engine, RoundStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Hopset,
    Emulator,
    Both,
    Unreached,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SsspResult {
    pub source: Vertex,
    pub estimate: Vec<Option<u64>>,
    pub branch: Vec<Branch>,
    pub stats: RoundStats,
}

/// Emulator and hopset shared by every source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pipeline {
    pub eps: Rational,
    pub emulator: Emulator,
    pub hopset: Hopset,
}

impl Pipeline {
    /// `ε_H = ε_M = ε/3`.
    pub fn build(engine: &mut Engine, g: &Graph, eps: &Rational, rho: &Rational, seed: u64) -> Result<Self> {
        if eps <= &exact::int(0) || eps >= &exact::one() {
            return Err(Error::InvalidParams(format!("eps must be in (0,1), got {}", exact::render(eps))));
        }
        let third = eps / exact::int(3);
        let (emulator, hopset) = build_emulator(engine, g, &third, rho, seed)?;
        Ok(Pipeline { eps: eps.clone(), emulator, hopset })
    }

    pub fn beta_h(&self) -> &BigUint {
        &self.hopset.beta_h
    }

    /// Words of the near-linear machine holding `M`, and its capacity `⌈n·log₂²n⌉`.
    pub fn near_linear_usage(&self) -> (u64, u64) {
        let n = self.emulator.n.max(2) as f64;
        let cap = (n * n.log2().powi(2)).ceil() as u64;
        (3 * self.emulator.len() as u64, cap)
    }
}

fn combine(source: Vertex, bf: &[Option<u64>], em: &[Option<u64>], stats: RoundStats) -> SsspResult {
    let mut estimate = Vec::with_capacity(bf.len());
    let mut branch = Vec::with_capacity(bf.len());
    for (a, b) in bf.iter().zip(em) {
        let (value, which) = match (*a, *b) {
            (None, None) => (None, Branch::Unreached),
            (Some(x), None) => (Some(x), Branch::Hopset),
            (None, Some(y)) => (Some(y), Branch::Emulator),
            (Some(x), Some(y)) if x < y => (Some(x), Branch::Hopset),
            (Some(x), Some(y)) if y < x => (Some(y), Branch::Emulator),
            (Some(x), Some(_)) => (Some(x), Branch::Both),
        };
        estimate.push(value);
        branch.push(which);
    }
    SsspResult { source, estimate, branch, stats }
}

pub fn sssp(engine: &mut Engine, g: &Graph, s: Vertex, eps: &Rational, rho: &Rational, seed: u64) -> Result<SsspResult> {
    g.check_vertex(s)?;
    let pipeline = Pipeline::build(engine, g, eps, rho, seed)?;
    sssp_with(engine, g, &pipeline, s)
}

/// Single-source query on an already built pipeline.
pub fn sssp_with(engine: &mut Engine, g: &Graph, pipeline: &Pipeline, s: Vertex) -> Result<SsspResult> {
    g.check_vertex(s)?;
    let net = Network::prepare(engine, g, &pipeline.hopset.edges, 1)?;
    let bf = restricted_bf(engine, &net, &[s], pipeline.hopset.hop_budget(), Bound::Unbounded)?;
    let bf: Vec<Option<u64>> = bf.nearest.iter().map(|e| e.map(|(_, d)| d)).collect();
    let em = emulator_sssp(&pipeline.emulator, s).dist;
    Ok(combine(s, &bf, &em, engine.stats()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Heterogeneous,
    NearLinear,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heterogeneous" => Ok(Mode::Heterogeneous),
            "near_linear" | "near-linear" => Ok(Mode::NearLinear),
            _ => Err(Error::InvalidParams(format!("unknown mode {s:?}"))),
        }
    }
}

/// `⌈log₂²n⌉` for heterogeneous mode, `⌈n^ρ·log₂ n⌉` for near-linear mode.
pub fn source_limit(n: usize, rho: &Rational, mode: Mode) -> usize {
    let nf = n.max(2) as f64;
    match mode {
        Mode::Heterogeneous => (nf.log2().powi(2) - 1e-9).ceil() as usize,
        Mode::NearLinear => (nf.powf(exact::to_f64(rho)) * nf.log2() - 1e-9).ceil() as usize,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiSsspResult {
    pub mode: Mode,
    pub rows: Vec<SsspResult>,
    /// near-linear machines holding a copy of `M`
    pub near_linear_slots: usize,
    pub stats: RoundStats,
}

pub fn multi_source(
    engine: &mut Engine,
    g: &Graph,
    sources: &[Vertex],
    eps: &Rational,
    rho: &Rational,
    mode: Mode,
    seed: u64,
) -> Result<MultiSsspResult> {
    let limit = source_limit(g.n(), rho, mode);
    if sources.len() > limit {
        return Err(Error::TooManySources { count: sources.len(), limit });
    }
    for &s in sources {
        g.check_vertex(s)?;
    }
    let pipeline = Pipeline::build(engine, g, eps, rho, seed)?;
    multi_source_with(engine, g, &pipeline, sources, mode)
}

pub fn multi_source_with(
    engine: &mut Engine,
    g: &Graph,
    pipeline: &Pipeline,
    sources: &[Vertex],
    mode: Mode,
) -> Result<MultiSsspResult> {
    let mut distinct: Vec<Vertex> = sources.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mu = distinct.len().max(1);
    let net = Network::prepare(engine, g, &pipeline.hopset.edges, mu)?;
    let explored = multi_source_bf(engine, &net, &distinct, pipeline.hopset.hop_budget(), &vec![Bound::Unbounded; net.n()], mu)?;

    let slots = match mode {
        Mode::Heterogeneous => 1,
        Mode::NearLinear => {
            // |S| copies of M, one per near-linear machine
            let empty = Graph::from_edges(g.n(), std::iter::empty());
            Network::prepare(engine, &empty, &pipeline.emulator.edges, mu)?;
            distinct.len()
        }
    };
    let stats = engine.stats();
    let rows = sources
        .iter()
        .map(|&s| {
            let bf: Vec<Option<u64>> = explored.multi.iter().map(|m| m.get(&s).copied()).collect();
            let em = emulator_sssp(&pipeline.emulator, s).dist;
            combine(s, &bf, &em, stats)
        })
        .collect();
    Ok(MultiSsspResult { mode, rows, near_linear_slots: slots, stats })
}

/// `d <= est <= (1+ε)·d` for every vertex, unreachable exactly where BFS is.
pub fn within_stretch(exact_row: &[Option<u64>], estimate: &[Option<u64>], eps: &Rational) -> bool {
    let mult = exact::one() + eps;
    exact_row.iter().zip(estimate).all(|(d, e)| match (d, e) {
        (None, None) => true,
        (Some(d), Some(e)) => e >= d && Rational::from_integer((*e).into()) <= &mult * Rational::from_integer((*d).into()),
        _ => false,
    })
}

/// Largest `est/d` over reached vertices with `d > 0`.
pub fn max_stretch(exact_row: &[Option<u64>], estimate: &[Option<u64>]) -> f64 {
    exact_row
        .iter()
        .zip(estimate)
        .filter_map(|(d, e)| match (d, e) {
            (Some(d), Some(e)) if *d > 0 => Some(*e as f64 / *d as f64),
            (Some(_), None) => Some(f64::INFINITY),
            _ => None,
        })
        .fold(1.0, f64::max)
}

/// Hopset-free view used by tests that mask one branch.
pub fn emulator_only(pipeline: &Pipeline, s: Vertex) -> Vec<Option<u64>> {
    emulator_sssp(&pipeline.emulator, s).dist
}

/// `β_H`-hop distances in `G ∪ H` alone.
pub fn hopset_only(g: &Graph, h: &WeightedEdgeSet, s: Vertex, hops: u64) -> Vec<Option<u64>> {
    crate::graph::hop_limited_distances(g, h, s, hops, None).dist
}
