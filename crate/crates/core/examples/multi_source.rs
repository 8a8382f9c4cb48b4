//! Shortest paths from several sources at once, in both machine modes.

use mpc_hopsets::exact;
use mpc_hopsets::graph::{exact_distances, generate_graph, GraphKind};
use mpc_hopsets::mpc::{Engine, MpcConfig};
use mpc_hopsets::shortest_paths::{multi_source, source_limit, within_stretch, Mode};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Grid { rows: 12, cols: 12 }, 0)?;
    let eps = exact::ratio(1, 2);
    let rho = exact::ratio(1, 2);
    let sources = [0, 11, 77, 143];
    for mode in [Mode::Heterogeneous, Mode::NearLinear] {
        let mut engine = Engine::new(MpcConfig::for_graph(&g, exact::ratio(1, 2), rho.clone())?);
        let r = multi_source(&mut engine, &g, &sources, &eps, &rho, mode, 4)?;
        for row in &r.rows {
            assert!(within_stretch(&exact_distances(&g, row.source).dist, &row.estimate, &eps));
        }
        println!(
            "{mode:?}: limit {} sources, {} near-linear machines, {} rounds",
            source_limit(g.n(), &rho, mode),
            r.near_linear_slots,
            r.stats.rounds
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
