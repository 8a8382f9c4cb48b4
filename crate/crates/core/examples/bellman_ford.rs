//! Hop-limited Bellman-Ford on the engine: nearest-source exploration with a
//! distance cap, and a multi-source exploration that keeps every source.

use std::collections::BTreeMap;

use mpc_hopsets::bellman_ford::{multi_source_bf, restricted_bf, Bound, Network};
use mpc_hopsets::exact;
use mpc_hopsets::graph::{generate_graph, hop_limited_distances, GraphKind, WeightedEdgeSet};
use mpc_hopsets::mpc::{Engine, MpcConfig};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Grid { rows: 8, cols: 8 }, 0)?;
    let mut h = WeightedEdgeSet::new();
    h.insert(0, 63, 10);

    let mut engine = Engine::new(MpcConfig::for_graph(&g, exact::ratio(1, 2), exact::ratio(1, 2))?);
    let sources = [0, 27, 63];
    let net = Network::prepare(&mut engine, &g, &h, sources.len())?;

    let near = restricted_bf(&mut engine, &net, &sources, 4, Bound::Inclusive(3))?;
    let covered = near.nearest.iter().flatten().count();
    println!("within 3 of a source in 4 hops: {covered} of {}", g.n());

    let multi = multi_source_bf(&mut engine, &net, &sources, 6, &vec![Bound::Unbounded; g.n()], sources.len())?;
    for &s in &sources {
        let oracle = hop_limited_distances(&g, &h, s, 6, None).dist;
        let got: Vec<Option<u64>> = multi.multi.iter().map(|m: &BTreeMap<usize, u64>| m.get(&s).copied()).collect();
        assert_eq!(got, oracle);
    }
    println!("multi-source rows match the sequential oracle; rounds = {}", engine.stats().rounds);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
