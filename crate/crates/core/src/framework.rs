//! Vertex hierarchy sampling and the edge-selection procedure shared by the
//! hopset and the emulator.

use num::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bellman_ford::{multi_source_bf, restricted_bf, Bound, Network};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::graph::{Graph, Vertex, WeightedEdgeSet};
use crate::mpc::Engine;
use crate::rng;

/// `⌊log₂(κρ)⌋ + ⌈(κ+1)/(κρ)⌉ − 1`, exactly.
pub fn compute_level_count(kappa: u64, rho: &Rational) -> Result<usize> {
    let kr = exact::int(kappa as i64) * rho;
    if kr < exact::one() || *rho > exact::ratio(1, 2) || rho <= &exact::int(0) {
        return Err(Error::InvalidParams(format!(
            "need kappa >= 1/rho and rho in (0,1/2], got kappa={kappa}, rho={}",
            exact::render(rho)
        )));
    }
    let first = exact::floor_log2(&kr);
    let second = exact::ceil_u64(&(exact::int(kappa as i64 + 1) / &kr)) as i64;
    Ok((first + second - 1) as usize)
}

/// Sampled levels `A_0 ⊇ … ⊇ A_ℓ ⊇ A_{ℓ+1} = ∅`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub n: usize,
    pub kappa: u64,
    #[serde(with = "exact::serde_rational")]
    pub rho: Rational,
    pub ell: usize,
    /// `deg_i = n^{e_i}` with `e_i = min(2^i/κ, ρ)`
    pub deg: Vec<f64>,
    pub seed: u64,
    /// `ℓ + 2` sorted id arrays; the last is empty.
    pub levels: Vec<Vec<Vertex>>,
}

impl Hierarchy {
    /// Hierarchy with given levels; used for hand-built test instances.
    pub fn from_levels(n: usize, kappa: u64, rho: Rational, mut levels: Vec<Vec<Vertex>>) -> Result<Self> {
        let ell = levels.len().checked_sub(2).ok_or_else(|| Error::InvalidParams("need at least two levels".into()))?;
        for level in &mut levels {
            level.sort_unstable();
            level.dedup();
        }
        if levels[0] != (0..n).collect::<Vec<_>>() || !levels[ell + 1].is_empty() {
            return Err(Error::InvalidParams("need A_0 = V and A_{l+1} empty".into()));
        }
        for i in 0..=ell {
            if !levels[i + 1].iter().all(|v| levels[i].binary_search(v).is_ok()) {
                return Err(Error::InvalidParams(format!("A_{} is not a subset of A_{i}", i + 1)));
            }
        }
        let deg = degree_sequence(n, kappa, &rho, ell);
        Ok(Hierarchy { n, kappa, rho, ell, deg, seed: 0, levels })
    }

    /// Largest `i` with `v ∈ A_i`.
    pub fn level_of(&self, v: Vertex) -> usize {
        (0..=self.ell).rev().find(|&i| self.levels[i].binary_search(&v).is_ok()).unwrap_or(0)
    }

    pub fn contains(&self, i: usize, v: Vertex) -> bool {
        self.levels[i].binary_search(&v).is_ok()
    }
}

fn degree_sequence(n: usize, kappa: u64, rho: &Rational, ell: usize) -> Vec<f64> {
    let nf = n.max(1) as f64;
    (0..=ell)
        .map(|i| {
            let e = if i >= 63 {
                rho.clone()
            } else {
                let e = Rational::new((1u64 << i).into(), kappa.into());
                if &e < rho {
                    e
                } else {
                    rho.clone()
                }
            };
            nf.powf(exact::to_f64(&e))
        })
        .collect()
}

/// Each vertex of `A_i` joins `A_{i+1}` with probability `1/deg_i`.
pub fn sample_hierarchy(n: usize, kappa: u64, rho: &Rational, seed: u64) -> Result<Hierarchy> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let ell = compute_level_count(kappa, rho)?;
    let deg = degree_sequence(n, kappa, rho, ell);
    let mut rng = rng::stream(seed, rng::streams::HIERARCHY);
    let mut levels: Vec<Vec<Vertex>> = vec![(0..n).collect()];
    for d in deg.iter().take(ell) {
        let p = (1.0 / d).min(1.0);
        let next: Vec<Vertex> = levels.last().expect("A_0 exists").iter().copied().filter(|_| rng.gen_bool(p)).collect();
        levels.push(next);
    }
    levels.push(Vec::new());
    Ok(Hierarchy { n, kappa, rho: rho.clone(), ell, deg, seed, levels })
}

/// `R_0..R_ℓ` and `δ_0..δ_ℓ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thresholds {
    pub r: Vec<Rational>,
    pub delta: Vec<Rational>,
}

pub fn compute_thresholds(eps: &Rational, eps_h: &Rational, alpha: &Rational, ell: usize) -> Result<Thresholds> {
    let zero = exact::int(0);
    if eps <= &zero || eps > &exact::ratio(1, 10) {
        return Err(Error::InvalidParams(format!("eps must be in (0, 1/10], got {}", exact::render(eps))));
    }
    if eps_h < &zero || alpha <= &zero {
        return Err(Error::InvalidParams("need eps_H >= 0 and alpha > 0".into()));
    }
    let inv = eps.recip();
    let one_plus = exact::one() + eps_h;
    let mut r = vec![zero];
    let mut delta = vec![alpha.clone()];
    for i in 1..=ell {
        let ri = &one_plus * &delta[i - 1] + &r[i - 1];
        let di = alpha * exact::pow_u(&inv, i as u64) + exact::int(4) * &ri;
        r.push(ri);
        delta.push(di);
    }
    if eps_h <= &exact::ratio(1, 10) {
        for i in 1..=ell {
            let bound = exact::ratio(22, 10) * alpha * exact::pow_u(&inv, i as u64 - 1);
            assert!(r[i] <= bound, "R_{i} exceeds 2.2·alpha·(1/eps)^{}", i - 1);
        }
    }
    Ok(Thresholds { r, delta })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectParams {
    pub eps: Rational,
    pub eps_h: Rational,
    /// hop budget of the supplied hopset; explorations use `4β` hops
    pub beta: BigUint,
    pub alpha: Rational,
}

impl ConnectParams {
    /// `⌈α(1/ε)^ℓ/2⌉`: the hop budget for which `H = ∅` is trivially a hopset.
    pub fn empty_hopset_beta(alpha: &Rational, eps: &Rational, ell: usize) -> BigUint {
        exact::ceil_big(&(alpha * exact::pow_u(&eps.recip(), ell as u64) / exact::int(2)))
    }

    pub fn hop_budget(&self) -> u64 {
        exact::big_to_u64_sat(&(&self.beta * 4u32))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelSummary {
    pub dense: usize,
    pub sparse: usize,
    pub bunch_edges: usize,
    pub mu: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connected {
    pub q: WeightedEdgeSet,
    pub thresholds: Thresholds,
    pub levels: Vec<LevelSummary>,
}

/// Per level `i`: every `u ∈ A_i∖A_{i+1}` with an `A_{i+1}` vertex within
/// `(1+ε_H)δ_i` over `4β` hops links to it (dense); every other such `u`
/// links to all `v ∈ A_i` within `(1+ε_H)δ_i/2` (sparse).
pub fn connect_vertices(
    engine: &mut Engine,
    g: &Graph,
    h: &WeightedEdgeSet,
    hier: &Hierarchy,
    params: &ConnectParams,
) -> Result<Connected> {
    let thresholds = compute_thresholds(&params.eps, &params.eps_h, &params.alpha, hier.ell)?;
    let hops = params.hop_budget();
    let one_plus = exact::one() + &params.eps_h;
    let mus: Vec<usize> = hier.deg.iter().map(|&d| engine.config().mu_for(d)).collect();
    let net = Network::prepare(engine, g, h, mus.iter().copied().max().unwrap_or(1))?;
    let n = net.n();

    let mut q = WeightedEdgeSet::new();
    let mut levels = Vec::with_capacity(hier.ell + 1);
    for i in 0..=hier.ell {
        let radius = &one_plus * &thresholds.delta[i];
        let upper = &hier.levels[i + 1];
        let here: Vec<Vertex> = hier.levels[i].iter().copied().filter(|v| !hier.contains(i + 1, *v)).collect();

        let mut sparse = Vec::new();
        let mut dense = 0;
        if upper.is_empty() {
            sparse = here;
        } else {
            let found = restricted_bf(engine, &net, upper, hops, Bound::at_most(&radius))?;
            for u in here {
                match found.nearest[u] {
                    Some((p, d)) => {
                        q.insert(u, p, d);
                        dense += 1;
                    }
                    None => sparse.push(u),
                }
            }
        }

        let mut bunch_edges = 0;
        if !sparse.is_empty() {
            let cap = Bound::at_most(&(&radius / exact::int(2)));
            let explored = multi_source_bf(engine, &net, &sparse, hops, &vec![cap; n], mus[i])?;
            for &v in &hier.levels[i] {
                for (&s, &d) in &explored.multi[v] {
                    if s != v {
                        q.insert(s, v, d);
                        bunch_edges += 1;
                    }
                }
            }
        }
        levels.push(LevelSummary { dense, sparse: sparse.len(), bunch_edges, mu: mus[i] });
    }
    Ok(Connected { q, thresholds, levels })
}

/// Empirical size bound `64·n^{1+1/κ}·log₂(κρ+2)·log₂²n`.
pub fn size_bound(n: usize, kappa: u64, rho: &Rational) -> f64 {
    let nf = n.max(2) as f64;
    let l = nf.log2();
    64.0 * nf.powf(1.0 + 1.0 / kappa as f64) * (kappa as f64 * exact::to_f64(rho) + 2.0).log2() * l * l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_exact, generate_graph, hop_limited_on, weighted_distances, GraphKind, UnionAdjacency};
    use crate::mpc::MpcConfig;
    use proptest::prelude::*;

    fn half() -> Rational {
        exact::ratio(1, 2)
    }

    fn engine_for(g: &Graph) -> Engine {
        Engine::new(MpcConfig::for_graph(g, exact::ratio(1, 2), half()).unwrap())
    }

    #[test]
    fn level_count_examples() {
        assert_eq!(compute_level_count(2, &half()).unwrap(), 2);
        assert_eq!(compute_level_count(4, &half()).unwrap(), 3);
        assert_eq!(compute_level_count(16, &exact::ratio(1, 4)).unwrap(), 6);
        assert!(compute_level_count(1, &half()).is_err());
    }

    #[test]
    fn single_vertex_hierarchy() {
        let h = sample_hierarchy(1, 2, &half(), 9).unwrap();
        assert_eq!(h.levels[0], vec![0]);
        assert!(h.levels[h.ell + 1].is_empty());
        assert_eq!(h.levels.len(), h.ell + 2);
    }

    #[test]
    fn degree_sequence_on_256() {
        let h = sample_hierarchy(256, 8, &half(), 1).unwrap();
        assert_eq!(h.ell, 4);
        let rounded: Vec<f64> = h.deg.iter().map(|d| d.round()).collect();
        assert_eq!(rounded, vec![2.0, 4.0, 16.0, 16.0, 16.0]);
    }

    #[test]
    fn first_level_size_is_binomial() {
        let n = 256;
        let trials = 200;
        let p = 0.5; // deg_0 = 2
        let total: usize = (0..trials).map(|s| sample_hierarchy(n, 8, &half(), s).unwrap().levels[1].len()).sum();
        let mean = total as f64 / trials as f64;
        let sigma = (n as f64 * p * (1.0 - p) / trials as f64).sqrt();
        assert!((mean - n as f64 * p).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn hierarchy_is_deterministic_and_serializes() {
        let a = sample_hierarchy(64, 4, &half(), 5).unwrap();
        assert_eq!(a, sample_hierarchy(64, 4, &half(), 5).unwrap());
        let json = serde_json::to_string(&a).unwrap();
        let back: Hierarchy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn threshold_examples() {
        let t = compute_thresholds(&exact::ratio(1, 10), &exact::int(0), &exact::int(1), 2).unwrap();
        assert_eq!(t.r, vec![exact::int(0), exact::int(1), exact::int(15)]);
        assert_eq!(t.delta[..2], [exact::int(1), exact::int(14)]);
        let t = compute_thresholds(&exact::ratio(1, 10), &exact::ratio(1, 10), &exact::int(1), 2).unwrap();
        assert_eq!(t.delta[0], exact::int(1));
        assert_eq!(t.r[1], exact::ratio(11, 10));
        assert_eq!(t.delta[1], exact::ratio(144, 10));
        assert_eq!(t.r[2], exact::ratio(1694, 100));
        assert!(compute_thresholds(&exact::ratio(1, 5), &exact::int(0), &exact::int(1), 1).is_err());
    }

    fn flat(n: usize) -> Hierarchy {
        Hierarchy::from_levels(n, 2, half(), vec![(0..n).collect(), vec![]]).unwrap()
    }

    #[test]
    fn collapsed_hierarchy_links_everything_within_cap() {
        let g = generate_graph(&GraphKind::Path { n: 10 }, 0).unwrap();
        let hier = flat(10);
        let params = ConnectParams { eps: exact::ratio(1, 10), eps_h: exact::int(0), beta: BigUint::from(1u32), alpha: exact::int(6) };
        let out = connect_vertices(&mut engine_for(&g), &g, &WeightedEdgeSet::new(), &hier, &params).unwrap();
        // cap = 3, hop budget 4
        let expected: WeightedEdgeSet = (0..10usize)
            .flat_map(|u| ((u + 1)..10).map(move |v| (u, v, (v - u) as u64)))
            .filter(|&(_, _, d)| d <= 3)
            .collect();
        assert_eq!(out.q, expected);
        assert_eq!(out.levels[0].sparse, 10);
    }

    #[test]
    fn complete_graph_close_bunches() {
        let pairs: Vec<(usize, usize)> = (0..8).flat_map(|u| ((u + 1)..8).map(move |v| (u, v))).collect();
        let g = Graph::from_edges(8, pairs.clone());
        for alpha in [1, 2, 5] {
            let params = ConnectParams { eps: exact::ratio(1, 10), eps_h: exact::int(0), beta: BigUint::from(2u32), alpha: exact::int(alpha) };
            let out = connect_vertices(&mut engine_for(&g), &g, &WeightedEdgeSet::new(), &flat(8), &params).unwrap();
            // brute force: close-bunch = vertices within alpha/2
            let expected: WeightedEdgeSet = pairs.iter().filter(|_| 1 <= alpha / 2).map(|&(u, v)| (u, v, 1)).collect();
            assert_eq!(out.q, expected, "alpha = {alpha}");
        }
    }

    /// `d^{(hops)}_Q` for all pairs, by layered relaxation.
    fn stretch_holds(g: &Graph, q: &WeightedEdgeSet, hops: u64, eps: &Rational, eps_h: &Rational, alpha: &Rational, ell: usize) -> bool {
        let exact_d = all_pairs_exact(g);
        let adj = UnionAdjacency::weighted_only(g.n(), q);
        let mult = exact::one() + eps_h + exact::int(28) * eps * exact::int(ell as i64);
        let add = exact::int(28) * alpha * exact::pow_i(&eps.recip(), ell as i64 - 1);
        let range = alpha * exact::pow_u(&eps.recip(), ell as u64);
        for u in 0..g.n() {
            let dq = hop_limited_on(&adj, u, hops, None).dist;
            for v in 0..g.n() {
                let Some(d) = exact_d[u][v] else { continue };
                if exact::int(d as i64) > range {
                    continue;
                }
                let Some(got) = dq[v] else { return false };
                if got < d || exact::int(got as i64) > &mult * exact::int(d as i64) + &add {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn path_stretch_within_additive_bound() {
        let g = generate_graph(&GraphKind::Path { n: 32 }, 0).unwrap();
        let eps = exact::ratio(1, 10);
        for seed in 0..20 {
            let hier = sample_hierarchy(32, 2, &half(), seed).unwrap();
            assert_eq!(hier.ell, 2);
            // alpha >= 2 so that adjacent pairs fall inside level-0 close-bunches
            let params = ConnectParams { eps: eps.clone(), eps_h: exact::int(0), beta: BigUint::from(32u32), alpha: exact::int(2) };
            let out = connect_vertices(&mut engine_for(&g), &g, &WeightedEdgeSet::new(), &hier, &params).unwrap();
            assert!(stretch_holds(&g, &out.q, 6 * 13 * 13, &eps, &exact::int(0), &exact::int(2), 2), "seed {seed}");
        }
    }

    #[test]
    fn small_beta_exercises_dense_and_sparse() {
        let g = generate_graph(&GraphKind::Grid { rows: 8, cols: 8 }, 0).unwrap();
        let hier = sample_hierarchy(64, 2, &half(), 3).unwrap();
        let params = ConnectParams { eps: exact::ratio(1, 10), eps_h: exact::int(0), beta: BigUint::from(1u32), alpha: exact::int(2) };
        let out = connect_vertices(&mut engine_for(&g), &g, &WeightedEdgeSet::new(), &hier, &params).unwrap();
        let total_dense: usize = out.levels.iter().map(|l| l.dense).sum();
        assert!(total_dense > 0);
        assert!(out.levels.iter().any(|l| l.bunch_edges > 0));
        for (i, l) in out.levels.iter().enumerate() {
            let here = hier.levels[i].len() - hier.levels[i + 1].len();
            assert_eq!(l.dense + l.sparse, here);
        }
        // every Q weight is at least the graph distance and at most a 4-hop path
        for (u, v, w) in out.q.iter() {
            let d = crate::graph::exact_distances(&g, u).dist[v].unwrap();
            assert!(w >= d && w <= 4);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn union_preserves_distances(n in 4usize..40, p in 0.05f64..0.3, seed in 0u64..500, beta in 1u32..6) {
            let g = generate_graph(&GraphKind::Gnp { n, p }, seed).unwrap();
            let hier = sample_hierarchy(n, 2, &half(), seed).unwrap();
            let params = ConnectParams { eps: exact::ratio(1, 10), eps_h: exact::int(0), beta: BigUint::from(beta), alpha: exact::int(2) };
            let out = connect_vertices(&mut engine_for(&g), &g, &WeightedEdgeSet::new(), &hier, &params).unwrap();
            let adj = UnionAdjacency::new(&g, &out.q);
            let exact_d = all_pairs_exact(&g);
            for s in 0..n {
                prop_assert_eq!(&weighted_distances(&adj, s).dist, &exact_d[s]);
            }
            prop_assert!((out.q.len() as f64) <= size_bound(n, 2, &half()));
        }

        #[test]
        fn hierarchy_levels_nest(n in 1usize..200, kappa in 2u64..10, seed in 0u64..100) {
            let h = sample_hierarchy(n, kappa, &half(), seed).unwrap();
            prop_assert_eq!(&h.levels[0], &(0..n).collect::<Vec<_>>());
            prop_assert!(h.levels[h.ell + 1].is_empty());
            for i in 0..=h.ell {
                prop_assert!(h.levels[i + 1].iter().all(|v| h.levels[i].binary_search(v).is_ok()));
            }
        }
    }
}
