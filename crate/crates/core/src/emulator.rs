//! Near-additive emulators: one framework run with `κ = ⌈log₂ n⌉` on top of
//! a hopset for distances up to `t`.

use num::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::framework::{compute_level_count, connect_vertices, sample_hierarchy, ConnectParams};
use crate::graph::{weighted_distances, DistanceVector, Graph, UnionAdjacency, Vertex, WeightedEdgeSet};
use crate::hopset::{build_hopset, Hopset};
use crate::mpc::{log2_ceil, Engine};

/// Seed offset separating the emulator hierarchy from the hopset hierarchy.
const EMULATOR_SEED_SALT: u64 = 0x656d_756c;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmulatorPlan {
    pub n: usize,
    pub eps_m: Rational,
    /// ρ after clamping for small `n`
    pub rho: Rational,
    pub kappa: u64,
    pub ell: usize,
    pub internal_eps: Rational,
    pub t: BigUint,
    pub beta_m: BigUint,
}

/// Clamp `ρ` to `[max(1/⌈log₂log₂ max(n,16)⌉, 1/8), 1/2]`.
pub fn clamp_rho(n: usize, rho: &Rational) -> Rational {
    let loglog = log2_ceil(log2_ceil(n.max(16)) as usize).max(1);
    let low = exact::ratio(1, loglog as i64).max(exact::ratio(1, 8));
    rho.clone().max(low).min(exact::ratio(1, 2))
}

pub fn plan_emulator(n: usize, eps_m_target: &Rational, rho: &Rational) -> Result<EmulatorPlan> {
    if n < 4 {
        return Err(Error::InvalidParams(format!("emulator needs n >= 4, got {n}")));
    }
    if eps_m_target <= &exact::int(0) || eps_m_target >= &exact::ratio(1, 3) {
        return Err(Error::InvalidParams(format!("eps_M must be in (0,1/3), got {}", exact::render(eps_m_target))));
    }
    if rho <= &exact::int(0) || rho > &exact::ratio(1, 2) {
        return Err(Error::InvalidParams(format!("rho must be in (0,1/2], got {}", exact::render(rho))));
    }
    let rho = clamp_rho(n, rho);
    let kappa = log2_ceil(n) as u64;
    let ell = compute_level_count(kappa, &rho)?;
    let base = exact::int(28 * (ell as i64 + 1)) / eps_m_target;
    let internal_eps = base.recip();
    let t = exact::ceil_big(&exact::pow_u(&base, ell as u64 + 1));
    let beta_m = exact::ceil_big(&(exact::int(28) * exact::pow_u(&base, ell as u64)));
    assert!(exact::from_big(&beta_m) <= exact::from_big(&t) * eps_m_target, "beta_M exceeds t·eps_M");
    Ok(EmulatorPlan { n, eps_m: eps_m_target.clone(), rho, kappa, ell, internal_eps, t, beta_m })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emulator {
    pub n: usize,
    #[serde(with = "exact::serde_rational")]
    pub eps_m: Rational,
    #[serde(with = "exact::serde_big")]
    pub beta_m: BigUint,
    #[serde(with = "exact::serde_big")]
    pub t: BigUint,
    pub ell_em: usize,
    pub kappa: u64,
    #[serde(with = "exact::serde_rational")]
    pub rho: Rational,
    pub edges: WeightedEdgeSet,
}

impl Emulator {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn adjacency(&self) -> UnionAdjacency {
        UnionAdjacency::weighted_only(self.n, &self.edges)
    }
}

/// Builds the hopset (`ε_H = ε_M`, distances up to `t`) and then the emulator.
pub fn build_emulator(
    engine: &mut Engine,
    g: &Graph,
    eps_m_target: &Rational,
    rho: &Rational,
    seed: u64,
) -> Result<(Emulator, Hopset)> {
    let plan = plan_emulator(g.n(), eps_m_target, rho)?;
    let hopset = build_hopset(engine, g, eps_m_target, &plan.rho, &plan.t, seed)?;
    let hier = sample_hierarchy(g.n(), plan.kappa, &plan.rho, seed ^ EMULATOR_SEED_SALT)?;
    let params = ConnectParams {
        eps: plan.internal_eps.clone(),
        eps_h: eps_m_target.clone(),
        beta: hopset.beta_h.clone(),
        alpha: exact::int(2),
    };
    let out = connect_vertices(engine, g, &hopset.edges, &hier, &params)?;
    let emulator = Emulator {
        n: g.n(),
        eps_m: plan.eps_m,
        beta_m: plan.beta_m,
        t: plan.t,
        ell_em: plan.ell,
        kappa: plan.kappa,
        rho: plan.rho,
        edges: out.q,
    };
    Ok((emulator, hopset))
}

/// Exact distances in the weighted emulator graph, computed on one machine.
pub fn emulator_sssp(m: &Emulator, s: Vertex) -> DistanceVector {
    weighted_distances(&m.adjacency(), s)
}

/// Empirical size bound `64·n·log₂²n`.
pub fn size_bound(n: usize) -> f64 {
    let nf = n.max(2) as f64;
    64.0 * nf * nf.log2().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_exact, exact_distances, generate_graph, GraphKind};
    use crate::mpc::MpcConfig;

    fn half() -> Rational {
        exact::ratio(1, 2)
    }

    fn engine_for(g: &Graph) -> Engine {
        Engine::new(MpcConfig::for_graph(g, half(), half()).unwrap())
    }

    #[test]
    fn plan_examples() {
        let p = plan_emulator(256, &exact::ratio(3, 10), &half()).unwrap();
        assert_eq!(p.kappa, 8);
        assert_eq!(p.ell, 4);
        assert_eq!(p.internal_eps, exact::ratio(3, 1400));
        assert!(exact::from_big(&p.beta_m) <= exact::from_big(&p.t) * exact::ratio(3, 10));
        assert!(plan_emulator(3, &exact::ratio(1, 10), &half()).is_err());
        assert!(plan_emulator(64, &exact::ratio(1, 3), &half()).is_err());
    }

    #[test]
    fn rho_is_clamped() {
        assert_eq!(clamp_rho(16, &exact::ratio(1, 8)), half());
        assert_eq!(clamp_rho(256, &exact::ratio(1, 8)), exact::ratio(1, 3));
        assert_eq!(clamp_rho(1 << 20, &exact::ratio(1, 100)), exact::ratio(1, 5));
    }

    #[test]
    fn complete_graph_emulator() {
        let pairs: Vec<(usize, usize)> = (0..16).flat_map(|u| ((u + 1)..16).map(move |v| (u, v))).collect();
        let g = Graph::from_edges(16, pairs);
        let (m, _) = build_emulator(&mut engine_for(&g), &g, &exact::ratio(3, 10), &half(), 1).unwrap();
        for u in 0..16 {
            let d = emulator_sssp(&m, u).dist;
            for (v, dv) in d.iter().enumerate() {
                let dv = dv.expect("connected");
                assert_eq!(dv == 0, u == v);
            }
        }
    }

    fn check_stretch(g: &Graph, m: &Emulator) {
        let mult = exact::one() + exact::int(2) * &m.eps_m;
        let add = exact::from_big(&m.beta_m);
        let exact_d = all_pairs_exact(g);
        for u in 0..g.n() {
            let dm = emulator_sssp(m, u).dist;
            for v in 0..g.n() {
                match (exact_d[u][v], dm[v]) {
                    (None, None) => {}
                    (Some(d), Some(e)) => {
                        assert!(e >= d);
                        assert!(exact::int(e as i64) <= &mult * exact::int(d as i64) + &add);
                    }
                    other => panic!("reachability differs for ({u},{v}): {other:?}"),
                }
            }
        }
    }

    #[test]
    fn grid_emulator_stretch() {
        let g = generate_graph(&GraphKind::Grid { rows: 12, cols: 12 }, 0).unwrap();
        let (m, _) = build_emulator(&mut engine_for(&g), &g, &exact::ratio(3, 10), &half(), 2).unwrap();
        check_stretch(&g, &m);
    }

    #[test]
    fn emulator_size_on_gnp() {
        let g = generate_graph(&GraphKind::Gnp { n: 512, p: 0.02 }, 1).unwrap();
        let (m, _) = build_emulator(&mut engine_for(&g), &g, &exact::ratio(3, 10), &half(), 1).unwrap();
        assert!((m.len() as f64) <= size_bound(512));
    }

    #[test]
    fn emulator_sssp_examples() {
        let m = Emulator {
            n: 2,
            eps_m: exact::ratio(1, 10),
            beta_m: BigUint::from(1u32),
            t: BigUint::from(2u32),
            ell_em: 0,
            kappa: 1,
            rho: half(),
            edges: [(0, 1, 5)].into_iter().collect(),
        };
        assert_eq!(emulator_sssp(&m, 0).dist, vec![Some(0), Some(5)]);
        let g = Graph::from_edges(5, [(0, 1), (1, 2)]);
        let (m, _) = build_emulator(&mut engine_for(&g), &g, &exact::ratio(1, 10), &half(), 1).unwrap();
        let d = emulator_sssp(&m, 4).dist;
        assert_eq!(d, vec![None, None, None, None, Some(0)]);
    }

    #[test]
    fn emulator_never_shortens_on_small_grid() {
        let g = generate_graph(&GraphKind::Grid { rows: 8, cols: 8 }, 0).unwrap();
        let (m, _) = build_emulator(&mut engine_for(&g), &g, &exact::ratio(1, 5), &half(), 3).unwrap();
        for s in [0, 7, 27, 63] {
            let bfs = exact_distances(&g, s).dist;
            let em = emulator_sssp(&m, s).dist;
            assert!(bfs.iter().zip(&em).all(|(a, b)| b >= a));
        }
    }

    #[test]
    fn emulator_json_round_trip() {
        let g = generate_graph(&GraphKind::Cycle { n: 20 }, 0).unwrap();
        let (m, _) = build_emulator(&mut engine_for(&g), &g, &exact::ratio(1, 5), &half(), 3).unwrap();
        let back: Emulator = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
