//! Build a near-additive emulator and measure its stretch on every pair.

use mpc_hopsets::emulator::{build_emulator, emulator_sssp, size_bound};
use mpc_hopsets::exact;
use mpc_hopsets::graph::{all_pairs_exact, generate_graph, GraphKind};
use mpc_hopsets::mpc::{Engine, MpcConfig};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Grid { rows: 10, cols: 10 }, 0)?;
    let mut engine = Engine::new(MpcConfig::for_graph(&g, exact::ratio(1, 2), exact::ratio(1, 2))?);
    let (m, _hopset) = build_emulator(&mut engine, &g, &exact::ratio(3, 10), &exact::ratio(1, 2), 5)?;
    println!("|M| = {} (bound {:.0}), beta_M = {}", m.len(), size_bound(g.n()), m.beta_m);

    let d = all_pairs_exact(&g);
    let mut worst = 1.0f64;
    for u in 0..g.n() {
        let row = emulator_sssp(&m, u).dist;
        for v in 0..g.n() {
            if let (Some(a), Some(b)) = (d[u][v], row[v]) {
                assert!(b >= a);
                if a > 0 {
                    worst = worst.max(b as f64 / a as f64);
                }
            }
        }
    }
    println!("worst multiplicative stretch over all pairs: {worst:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
