//! Exact Thorup-Zwick sketches: bunch sizes and stretch for k = 2 and 3.

use mpc_hopsets::graph::{all_pairs_exact, generate_graph, GraphKind};
use mpc_hopsets::sketch::{tz_preprocess, tz_query};

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Gnp { n: 120, p: 0.04 }, 1)?;
    let d = all_pairs_exact(&g);
    for k in [2, 3] {
        let sketch = tz_preprocess(&g, k, 11)?;
        let mut worst = 1.0f64;
        for u in 0..g.n() {
            for v in 0..g.n() {
                if let (Some(duv), Some(est)) = (d[u][v], tz_query(&sketch, u, v)) {
                    if duv > 0 {
                        worst = worst.max(est as f64 / duv as f64);
                    }
                }
            }
        }
        println!("k = {k}: mean bunch {:.1}, worst stretch {worst:.2} (limit {})", sketch.mean_bunch_size(), 2 * k - 1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
