//! Build a distance oracle, save it, reload it and answer queries without
//! the graph.

use mpc_hopsets::exact;
use mpc_hopsets::graph::{exact_distances, generate_graph, GraphKind};
use mpc_hopsets::mpc::{Engine, MpcConfig};
use mpc_hopsets::sketch::{build_oracle, oracle_query, Oracle};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Grid { rows: 14, cols: 14 }, 0)?;
    let mut engine = Engine::new(MpcConfig::for_graph(&g, exact::ratio(1, 2), exact::ratio(1, 2))?);
    let oracle = build_oracle(&mut engine, &g, 2, &exact::ratio(2, 5), &exact::ratio(1, 2), 3)?;
    println!("{} entries ({} in the sketch)", oracle.entry_count(), oracle.sketch.entry_count());

    let path = std::env::temp_dir().join(format!("oracle-example-{}.json", std::process::id()));
    oracle.save(&path)?;
    let loaded = Oracle::load(&path)?;
    std::fs::remove_file(&path)?;

    let bfs = exact_distances(&g, 0).dist;
    for v in [1, 15, 100, 195] {
        println!("d(0, {v}) = {:?}, oracle says {:?}", bfs[v], oracle_query(&loaded, 0, v));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
