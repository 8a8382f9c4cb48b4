//! Build a limited-scale hopset and check it against BFS.

use mpc_hopsets::exact;
use mpc_hopsets::graph::{generate_graph, GraphKind};
use mpc_hopsets::hopset::{build_hopset, build_hopset_from_plan, plan_hopset, verify_hopset};
use mpc_hopsets::mpc::{Engine, MpcConfig};
use num::BigUint;

pub fn run() -> mpc_hopsets::Result<()> {
    let g = generate_graph(&GraphKind::Cycle { n: 200 }, 0)?;
    let eps = exact::ratio(1, 2);
    let rho = exact::ratio(1, 2);
    let t = BigUint::from(64u32);

    let plan = plan_hopset(&eps, &rho, &t)?;
    println!("levels = {}, beta_H = {}, scales {:?}", plan.ell, plan.beta_h, plan.scales());

    let mut engine = Engine::new(MpcConfig::for_graph(&g, exact::ratio(1, 2), rho.clone())?);
    let h = build_hopset(&mut engine, &g, &eps, &rho, &t, 1)?;
    let report = verify_hopset(&g, &h, 500, 1);
    println!(
        "{} hopset edges; {} pairs checked, max stretch {:.3}: {}",
        h.len(),
        report.pairs_checked,
        report.max_stretch,
        report.verdict
    );

    // At this size the hopbound already exceeds t, so no scale runs. Shrinking
    // the hop budget by hand makes the scales visible.
    let path = generate_graph(&GraphKind::Path { n: 64 }, 0)?;
    let mut small = plan_hopset(&exact::ratio(9, 10), &rho, &BigUint::from(64u32))?;
    small.internal_eps = exact::ratio(1, 10);
    small.beta_h = BigUint::from(2u32);
    small.k0 = 1;
    let mut engine = Engine::new(MpcConfig::for_graph(&path, exact::ratio(1, 2), rho)?);
    let h = build_hopset_from_plan(&mut engine, &path, &small, 4)?;
    for scale in &h.scales {
        println!("scale {}: {} edges", scale.k, scale.edges);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run().unwrap();
}
