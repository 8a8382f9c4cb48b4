//! The simulated MPC engine: distribute edges, sort them, derive per-edge
//! tuples, broadcast along sorted ranges and read the round accounting.

use mpc_hopsets::exact;
use mpc_hopsets::graph::{generate_graph, GraphKind, WeightedEdgeSet};
use mpc_hopsets::mpc::{directed_union, DirEdge, Engine, MpcConfig};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Gnp { n: 200, p: 0.05 }, 3)?;
    let config = MpcConfig::for_graph(&g, exact::ratio(1, 2), exact::ratio(1, 2))?;
    println!("S = {} words, total budget = {} words", config.machine_capacity, config.total_capacity);

    let mut engine = Engine::new(config);
    let edges = directed_union(&g, &WeightedEdgeSet::new());
    let pool = engine.distribute(edges)?;
    let sorted = engine.sorted_redistribute(pool, |e: &DirEdge| (e.u, e.v))?;
    println!("{} directed edges over {} machines", sorted.record_count(), sorted.len());

    let mut tuples = engine.compute_edge_tuples(sorted)?;
    println!("{} edge tuples", tuples.record_count());

    // one message fanned out to every machine holding tuples
    let last = tuples.len() - 1;
    let depth = engine.broadcast_range(&mut tuples, &[42, 7], 0, last)?;
    println!("broadcast tree depth = {depth}");

    let stats = engine.stats();
    println!(
        "rounds = {}, max residency = {}, max round io = {}",
        stats.rounds, stats.max_residency, stats.max_round_io
    );
    assert!(stats.max_residency as usize <= engine.capacity() && stats.max_round_io as usize <= engine.capacity());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
