//! Generate graphs from specs, round-trip them through the edge-list format
//! and compute exact distances.

use mpc_hopsets::graph::{exact_distances, generate_graph, load_graph, load_graph_compacted, GraphKind};

pub fn run() -> mpc_hopsets::Result<()> {
    for spec in ["path:8", "cycle:10", "grid:4x5", "star:6", "gnp:40:0.1"] {
        let kind: GraphKind = spec.parse()?;
        let g = generate_graph(&kind, 7)?;
        let back = load_graph(&g.to_edge_list())?;
        assert_eq!(back.edges(), g.edges());
        let far = exact_distances(&g, 0).dist.iter().flatten().max().copied().unwrap_or(0);
        println!("{spec:>10}: n = {:3} m = {:3} eccentricity(0) = {far}", g.n(), g.m());
    }

    // sparse ids are relabeled densely on request
    let (g, ids) = load_graph_compacted("# comment\n10 500\n500 7\n")?;
    println!("compacted: n = {}, ids = {ids:?}", g.n());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
