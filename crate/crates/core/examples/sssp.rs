//! Approximate single-source shortest paths, compared with BFS.

use mpc_hopsets::exact;
use mpc_hopsets::graph::{exact_distances, generate_graph, GraphKind};
use mpc_hopsets::mpc::{Engine, MpcConfig};
use mpc_hopsets::shortest_paths::{max_stretch, sssp, within_stretch, Branch};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Gnp { n: 128, p: 0.05 }, 2)?;
    let eps = exact::ratio(1, 2);
    let mut engine = Engine::new(MpcConfig::for_graph(&g, exact::ratio(1, 2), exact::ratio(1, 2))?);
    let r = sssp(&mut engine, &g, 0, &eps, &exact::ratio(1, 2), 9)?;

    let bfs = exact_distances(&g, 0).dist;
    assert!(within_stretch(&bfs, &r.estimate, &eps));
    let from_emulator = r.branch.iter().filter(|b| **b == Branch::Emulator).count();
    println!(
        "max stretch {:.3}; {from_emulator} vertices won by the emulator; {} rounds",
        max_stretch(&bfs, &r.estimate),
        r.stats.rounds
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
