//! Limited-scale near-exact hopsets: one hierarchy, one framework run per
//! distance scale `(2^k, 2^{k+1}]`, each run using the edges of the earlier
//! scales as its input hopset.

use std::collections::HashMap;

use num::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::framework::{compute_level_count, connect_vertices, sample_hierarchy, ConnectParams};
use crate::graph::{exact_distances, hop_limited_on, weighted_distances, Graph, UnionAdjacency, Vertex, WeightedEdgeSet};
use crate::mpc::Engine;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopsetPlan {
    pub eps_h: Rational,
    pub rho: Rational,
    pub t: BigUint,
    pub kappa: u64,
    pub ell: usize,
    pub internal_eps: Rational,
    pub beta_h: BigUint,
    pub k0: u64,
    pub lambda: u64,
}

impl HopsetPlan {
    /// Scales `k0..=λ`; empty when `λ < k0`.
    pub fn scales(&self) -> std::ops::RangeInclusive<u64> {
        self.k0..=self.lambda
    }

    /// `ε_k = 70·ε·k/ρ`.
    pub fn eps_k(&self, k: u64) -> Rational {
        exact::int(70) * &self.internal_eps * exact::int(k as i64) / &self.rho
    }

    /// `α = 2^{k+1}·ε^ℓ`.
    pub fn alpha(&self, k: u64) -> Rational {
        exact::pow_u(&exact::int(2), k + 1) * exact::pow_u(&self.internal_eps, self.ell as u64)
    }

    pub fn hop_budget(&self) -> u64 {
        exact::big_to_u64_sat(&self.beta_h)
    }
}

/// `6·(1/ε + 3)^ℓ`, rounded up.
pub fn hopbound(eps: &Rational, ell: usize) -> BigUint {
    exact::ceil_big(&(exact::int(6) * exact::pow_u(&(eps.recip() + exact::int(3)), ell as u64)))
}

pub fn plan_hopset(eps_h_target: &Rational, rho: &Rational, t: &BigUint) -> Result<HopsetPlan> {
    if eps_h_target <= &exact::int(0) || eps_h_target >= &exact::one() {
        return Err(Error::InvalidParams(format!("eps_H must be in (0,1), got {}", exact::render(eps_h_target))));
    }
    if t < &BigUint::from(2u32) {
        return Err(Error::InvalidParams(format!("t must be an integer >= 2, got {t}")));
    }
    if rho <= &exact::int(0) || rho > &exact::ratio(1, 2) {
        return Err(Error::InvalidParams(format!("rho must be in (0,1/2], got {}", exact::render(rho))));
    }
    let log_t = exact::ceil_log2_big(t);
    let scaled = eps_h_target * rho / exact::int(70 * log_t as i64);
    let internal_eps = scaled.min(exact::ratio(1, 10));
    let kappa = exact::ceil_u64(&rho.recip());
    let ell = compute_level_count(kappa, rho)?;
    let beta_h = hopbound(&internal_eps, ell);
    let k0 = exact::floor_log2_big(&beta_h);
    Ok(HopsetPlan {
        eps_h: eps_h_target.clone(),
        rho: rho.clone(),
        t: t.clone(),
        kappa,
        ell,
        internal_eps,
        beta_h,
        k0,
        lambda: log_t - 1,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSize {
    pub k: u64,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hopset {
    pub n: usize,
    #[serde(with = "exact::serde_rational")]
    pub eps_h: Rational,
    #[serde(with = "exact::serde_big")]
    pub beta_h: BigUint,
    #[serde(with = "exact::serde_big")]
    pub t: BigUint,
    #[serde(with = "exact::serde_rational")]
    pub internal_eps: Rational,
    #[serde(with = "exact::serde_rational")]
    pub rho: Rational,
    pub ell: usize,
    pub hierarchy_seed: u64,
    pub scales: Vec<ScaleSize>,
    pub edges: WeightedEdgeSet,
}

impl Hopset {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn hop_budget(&self) -> u64 {
        exact::big_to_u64_sat(&self.beta_h)
    }
}

pub fn build_hopset(
    engine: &mut Engine,
    g: &Graph,
    eps_h_target: &Rational,
    rho: &Rational,
    t: &BigUint,
    seed: u64,
) -> Result<Hopset> {
    let plan = plan_hopset(eps_h_target, rho, t)?;
    build_hopset_from_plan(engine, g, &plan, seed)
}

/// Runs the scales of `plan`; exposed so tests can drive small hop budgets.
pub fn build_hopset_from_plan(engine: &mut Engine, g: &Graph, plan: &HopsetPlan, seed: u64) -> Result<Hopset> {
    let mut edges = WeightedEdgeSet::new();
    let mut scales = Vec::new();
    if plan.k0 <= plan.lambda {
        let hier = sample_hierarchy(g.n().max(1), plan.kappa, &plan.rho, seed)?;
        for k in plan.scales() {
            let params = ConnectParams {
                eps: plan.internal_eps.clone(),
                eps_h: plan.eps_k(k.saturating_sub(1)),
                beta: plan.beta_h.clone(),
                alpha: plan.alpha(k),
            };
            let out = connect_vertices(engine, g, &edges, &hier, &params)?;
            scales.push(ScaleSize { k, edges: out.q.len() });
            edges.extend_from(&out.q);
        }
    }
    Ok(Hopset {
        n: g.n(),
        eps_h: plan.eps_h.clone(),
        beta_h: plan.beta_h.clone(),
        t: plan.t.clone(),
        internal_eps: plan.internal_eps.clone(),
        rho: plan.rho.clone(),
        ell: plan.ell,
        hierarchy_seed: seed,
        scales,
        edges,
    })
}

/// Empirical size bound `64·n^{1+ρ}·log₂²n`.
pub fn size_bound(n: usize, rho: &Rational) -> f64 {
    let nf = n.max(2) as f64;
    64.0 * nf.powf(1.0 + exact::to_f64(rho)) * nf.log2().powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopsetReport {
    pub pairs_checked: usize,
    pub max_stretch: f64,
    pub stretch_violations: usize,
    pub shortening_violations: usize,
    pub size: usize,
    pub size_bound: f64,
    pub size_within_bound: bool,
    pub verdict: String,
}

impl HopsetReport {
    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}

/// `est <= mult · d` exactly.
pub fn within_factor(est: u64, d: u64, mult: &Rational) -> bool {
    Rational::from_integer(est.into()) <= mult * Rational::from_integer(d.into())
}

/// Samples pairs with `d_G <= t` and checks `d^{(β_H)}_{G∪H} <= (1+ε_H)·d_G`;
/// checks `d_{G∪H} = d_G` on every row touched (all rows when `n <= 128`).
pub fn verify_hopset(g: &Graph, hopset: &Hopset, pair_sample_size: usize, seed: u64) -> HopsetReport {
    let n = g.n();
    let adj = UnionAdjacency::new(g, &hopset.edges);
    let t = exact::big_to_u64_sat(&hopset.t);
    let mult = exact::one() + &hopset.eps_h;
    let hops = hopset.hop_budget();
    let mut rng = rng::stream(seed, rng::streams::PAIRS);

    let mut rows: HashMap<Vertex, (Vec<Option<u64>>, Vec<Option<u64>>)> = HashMap::new();
    let mut shortening = 0;
    let mut check_row = |u: Vertex, rows: &mut HashMap<Vertex, (Vec<Option<u64>>, Vec<Option<u64>>)>| {
        rows.entry(u).or_insert_with(|| {
            let bfs = exact_distances(g, u).dist;
            let full = weighted_distances(&adj, u).dist;
            shortening += bfs.iter().zip(&full).filter(|(a, b)| a != b).count();
            let limited = hop_limited_on(&adj, u, hops, None).dist;
            (bfs, limited)
        });
    };
    if n <= 128 {
        for u in 0..n {
            check_row(u, &mut rows);
        }
    }

    let mut pairs_checked = 0;
    let mut violations = 0;
    let mut max_stretch: f64 = 1.0;
    let mut attempts = 0;
    while n > 1 && pairs_checked < pair_sample_size && attempts < 50 * pair_sample_size.max(1) {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        check_row(u, &mut rows);
        let (bfs, limited) = &rows[&u];
        let Some(d) = bfs[v] else { continue };
        if d > t {
            continue;
        }
        pairs_checked += 1;
        match limited[v] {
            Some(est) => {
                max_stretch = max_stretch.max(est as f64 / d as f64);
                if !within_factor(est, d, &mult) {
                    violations += 1;
                }
            }
            None => {
                max_stretch = f64::INFINITY;
                violations += 1;
            }
        }
    }
    let bound = size_bound(n, &hopset.rho);
    let pass = violations == 0 && shortening == 0;
    HopsetReport {
        pairs_checked,
        max_stretch,
        stretch_violations: violations,
        shortening_violations: shortening,
        size: hopset.len(),
        size_bound: bound,
        size_within_bound: (hopset.len() as f64) <= bound,
        verdict: if pass { "PASS" } else { "FAIL" }.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_exact, generate_graph, GraphKind};
    use crate::mpc::MpcConfig;
    use proptest::prelude::*;

    fn half() -> Rational {
        exact::ratio(1, 2)
    }

    fn engine_for(g: &Graph) -> Engine {
        Engine::new(MpcConfig::for_graph(g, half(), half()).unwrap())
    }

    fn gen(kind: GraphKind) -> Graph {
        generate_graph(&kind, 0).unwrap()
    }

    #[test]
    fn plan_examples() {
        let p = plan_hopset(&exact::ratio(1, 2), &half(), &BigUint::from(1u64 << 20)).unwrap();
        assert_eq!(p.internal_eps, exact::ratio(1, 5600));
        assert_eq!(p.ell, 2);
        assert_eq!(p.lambda, 19);
        assert!(p.lambda < p.k0);

        // internal_eps = 1/10 needs a target large enough to hit the cap
        let mut p = plan_hopset(&exact::ratio(9, 10), &half(), &BigUint::from(4u32)).unwrap();
        assert!(p.internal_eps < exact::ratio(1, 10));
        p.internal_eps = exact::ratio(1, 10);
        assert_eq!(hopbound(&p.internal_eps, p.ell), BigUint::from(1014u32));
        assert_eq!(p.eps_k(3), exact::int(70) * exact::ratio(1, 10) * exact::int(3) * exact::int(2));
    }

    #[test]
    fn plan_rejects_bad_params() {
        assert!(plan_hopset(&exact::one(), &half(), &BigUint::from(8u32)).is_err());
        assert!(plan_hopset(&half(), &half(), &BigUint::from(1u32)).is_err());
        assert!(plan_hopset(&half(), &exact::ratio(3, 4), &BigUint::from(8u32)).is_err());
    }

    #[test]
    fn short_range_gives_empty_hopset() {
        let g = gen(GraphKind::Path { n: 16 });
        let h = build_hopset(&mut engine_for(&g), &g, &half(), &half(), &BigUint::from(8u32), 1).unwrap();
        assert!(h.is_empty());
        assert!(h.scales.is_empty());
        let report = verify_hopset(&g, &h, 200, 1);
        assert!(report.passed());
        assert_eq!(report.max_stretch, 1.0);
    }

    #[test]
    fn cycle_and_grid_certificates() {
        let cycle = gen(GraphKind::Cycle { n: 200 });
        let h = build_hopset(&mut engine_for(&cycle), &cycle, &exact::ratio(9, 10), &half(), &BigUint::from(64u32), 3).unwrap();
        let r = verify_hopset(&cycle, &h, 2000, 3);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.pairs_checked, 2000);

        let grid = gen(GraphKind::Grid { rows: 16, cols: 16 });
        let h = build_hopset(&mut engine_for(&grid), &grid, &exact::ratio(9, 10), &half(), &BigUint::from(32u32), 3).unwrap();
        assert!(verify_hopset(&grid, &h, 500, 3).passed());
    }

    #[test]
    fn injected_shortcut_is_detected() {
        let g = gen(GraphKind::Path { n: 10 });
        let mut h = build_hopset(&mut engine_for(&g), &g, &half(), &half(), &BigUint::from(16u32), 1).unwrap();
        h.edges.insert(0, 9, 3);
        let r = verify_hopset(&g, &h, 100, 1);
        assert!(!r.passed());
        assert!(r.shortening_violations > 0);
    }

    /// A plan with a tiny hop budget so that scales actually run.
    fn forced_plan(t: u64, beta: u32) -> HopsetPlan {
        let mut p = plan_hopset(&exact::ratio(9, 10), &half(), &BigUint::from(t)).unwrap();
        p.internal_eps = exact::ratio(1, 10);
        p.beta_h = BigUint::from(beta);
        p.k0 = exact::floor_log2_big(&p.beta_h);
        p
    }

    #[test]
    fn forced_scales_add_exact_shortcuts() {
        let g = gen(GraphKind::Path { n: 64 });
        let plan = forced_plan(64, 2);
        assert_eq!(plan.scales(), 1..=5);
        let h = build_hopset_from_plan(&mut engine_for(&g), &g, &plan, 4).unwrap();
        assert_eq!(h.scales.len(), 5);
        assert!(!h.is_empty());
        for (u, v, w) in h.edges.iter() {
            assert_eq!(w, v.abs_diff(u) as u64);
        }
        let r = verify_hopset(&g, &h, 300, 1);
        assert_eq!(r.shortening_violations, 0);
    }

    #[test]
    fn hop_distances_shrink_as_scales_accumulate() {
        let g = gen(GraphKind::Grid { rows: 8, cols: 8 });
        let plan = forced_plan(32, 3);
        let h = build_hopset_from_plan(&mut engine_for(&g), &g, &plan, 2).unwrap();
        let mut partial = WeightedEdgeSet::new();
        let mut prev: Vec<Vec<Option<u64>>> = (0..64).map(|u| hop_limited_on(&UnionAdjacency::new(&g, &partial), u, 3, None).dist).collect();
        for (u, v, w) in h.edges.iter() {
            partial.insert(u, v, w);
            for s in [0usize, 9, 63] {
                let now = hop_limited_on(&UnionAdjacency::new(&g, &partial), s, 3, None).dist;
                for x in 0..64 {
                    match (prev[s][x], now[x]) {
                        (Some(a), Some(b)) => assert!(b <= a),
                        (Some(_), None) => panic!("lost reachability"),
                        _ => {}
                    }
                }
                prev[s] = now;
            }
        }
    }

    #[test]
    fn hopset_json_round_trip() {
        let g = gen(GraphKind::Path { n: 32 });
        let h = build_hopset_from_plan(&mut engine_for(&g), &g, &forced_plan(32, 2), 1).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        let back: Hopset = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn never_shortens(n in 8usize..60, p in 0.03f64..0.2, seed in 0u64..300, beta in 2u32..5) {
            let g = generate_graph(&GraphKind::Gnp { n, p }, seed).unwrap();
            let h = build_hopset_from_plan(&mut engine_for(&g), &g, &forced_plan(64, beta), seed).unwrap();
            let adj = UnionAdjacency::new(&g, &h.edges);
            let exact_d = all_pairs_exact(&g);
            for s in 0..n {
                prop_assert_eq!(&weighted_distances(&adj, s).dist, &exact_d[s]);
            }
            prop_assert!((h.len() as f64) <= size_bound(n, &half()));
        }
    }
}
