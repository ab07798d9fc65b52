//! Instance factories: the complete bipartite lower-bound hosts, random
//! minimum-degree graphs and digraphs, and dense small-α graphs.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, UndirectedGraph, Vertex};
use crate::oracles::{exact_independence, LIMITS};
use crate::sample::{rng_from_seed, EdgeStream, Ground, SampleMode, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFamily {
    CompleteBipartite,
    BidirectedCompleteBipartite,
    RandomMinDegree,
    RandomMinDegreeDigraph,
    DenseSmallAlpha,
}

/// `density` is `d` for the minimum-degree families and the bipartite
/// hosts, and the edge probability `q` for `DenseSmallAlpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: InstanceFamily,
    pub n: usize,
    pub density: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum Instance {
    Undirected(UndirectedGraph),
    Directed(Digraph),
}

impl InstanceSpec {
    pub fn is_directed(&self) -> bool {
        matches!(
            self.family,
            InstanceFamily::BidirectedCompleteBipartite | InstanceFamily::RandomMinDegreeDigraph
        )
    }

    pub fn build(&self) -> Result<Instance> {
        Ok(match self.family {
            InstanceFamily::CompleteBipartite => Instance::Undirected(complete_bipartite(self.n, self.density)?),
            InstanceFamily::BidirectedCompleteBipartite => {
                Instance::Directed(bidirected_complete_bipartite(self.n, self.density)?)
            }
            InstanceFamily::RandomMinDegree => {
                Instance::Undirected(random_min_degree_graph(self.n, self.density, self.seed)?)
            }
            InstanceFamily::RandomMinDegreeDigraph => {
                Instance::Directed(random_min_degree_digraph(self.n, self.density, self.seed)?)
            }
            InstanceFamily::DenseSmallAlpha => {
                Instance::Undirected(dense_small_alpha(self.n, self.density, self.seed)?.graph)
            }
        })
    }
}

/// Size of the small side `A` of `K_{A,B}`: `floor(d n)`.
pub fn small_side(n: usize, d: f64) -> usize {
    (d * n as f64).floor() as usize
}

fn check_bipartite_density(n: usize, d: f64) -> Result<usize> {
    if !(d > 0.0 && d <= 0.5) {
        return Err(Error::Domain(format!("need 0 < d <= 1/2, got d = {d}")));
    }
    let a = small_side(n, d);
    if a == 0 {
        return Err(Error::Domain(format!("d n = {} < 1", d * n as f64)));
    }
    Ok(a)
}

/// `K_{A,B}` with `A = 0..floor(dn)` and `B` the remaining vertices.
pub fn complete_bipartite(n: usize, d: f64) -> Result<UndirectedGraph> {
    let a = check_bipartite_density(n, d)?;
    let mut g = UndirectedGraph::new(n);
    for u in 0..a {
        for v in a..n {
            g.add_edge(u, v);
        }
    }
    debug_assert_eq!(g.edge_count(), a * (n - a));
    debug_assert_eq!(g.min_degree(), a);
    Ok(g)
}

/// `K_{A,B}` with every edge replaced by both arcs.
pub fn bidirected_complete_bipartite(n: usize, d: f64) -> Result<Digraph> {
    let g = complete_bipartite(n, d)?;
    let dg = Digraph::bidirected(&g);
    debug_assert_eq!(dg.min_degree(), small_side(n, d));
    Ok(dg)
}

fn target_degree(n: usize, d: f64) -> Result<usize> {
    if !(d > 0.0 && d < 1.0) || n < 2 {
        return Err(Error::Domain(format!(
            "need 0 < d < 1 and n >= 2, got d = {d}, n = {n}"
        )));
    }
    Ok(((d * n as f64).ceil() as usize).min(n - 1))
}

/// Independent edges at rate `1.2 d`, then repaired: every vertex of degree
/// below `ceil(d n)` gains edges to uniformly chosen non-neighbors.
pub fn random_min_degree_graph(n: usize, d: f64, seed: u64) -> Result<UndirectedGraph> {
    let k = target_degree(n, d)?;
    let mut g = UndirectedGraph::new(n);
    let rate = (1.2 * d).min(1.0);
    let empty = UndirectedGraph::new(n);
    for (u, v) in EdgeStream::new(Ground::Edges(&empty), SampleMode::Bernoulli(rate), seed)? {
        g.add_edge(u, v);
    }
    let mut rng = rng_from_seed(seed ^ 0x5E_ED0F_BEEF);
    for v in 0..n {
        while g.degree(v) < k {
            let candidates: Vec<Vertex> = (0..n).filter(|&w| w != v && !g.has_edge(v, w)).collect();
            let &w = candidates
                .choose(&mut rng)
                .expect("a deficient vertex has non-neighbors");
            g.add_edge(v, w);
        }
    }
    assert!(g.min_degree() >= k);
    Ok(g)
}

fn repair_digraph(d: &mut Digraph, k: usize, rng: &mut StreamRng) {
    let n = d.n();
    for v in 0..n {
        while d.out_neighbors(v).len() < k {
            let c: Vec<Vertex> = (0..n).filter(|&w| w != v && !d.has_arc(v, w)).collect();
            d.add_arc(v, *c.choose(rng).unwrap());
        }
        while d.in_neighbors(v).len() < k {
            let c: Vec<Vertex> = (0..n).filter(|&w| w != v && !d.has_arc(w, v)).collect();
            d.add_arc(*c.choose(rng).unwrap(), v);
        }
    }
}

/// Digraph analog of [`random_min_degree_graph`]; certifies
/// `min(delta+, delta-) >= ceil(d n)`.
pub fn random_min_degree_digraph(n: usize, d: f64, seed: u64) -> Result<Digraph> {
    let k = target_degree(n, d)?;
    let mut dg = Digraph::new(n);
    let empty = Digraph::new(n);
    let rate = (1.2 * d).min(1.0);
    for (u, v) in EdgeStream::new(Ground::Arcs(&empty), SampleMode::Bernoulli(rate), seed)? {
        dg.add_arc(u, v);
    }
    let mut rng = rng_from_seed(seed ^ 0x5E_ED0F_BEEF);
    repair_digraph(&mut dg, k, &mut rng);
    assert!(dg.min_degree() >= k);
    Ok(dg)
}

#[derive(Clone, Debug)]
pub struct DenseInstance {
    pub graph: UndirectedGraph,
    /// Exact independence number, or a greedy lower bound when inexact.
    pub alpha: usize,
    pub alpha_exact: bool,
    /// `delta / n`.
    pub d: f64,
}

impl DenseInstance {
    /// `alpha < d^2 n / 2`; only meaningful when `alpha_exact`.
    pub fn hypothesis_holds(&self) -> bool {
        self.alpha_exact && (self.alpha as f64) < self.d * self.d * self.graph.n() as f64 / 2.0
    }
}

/// A `G(n, q)` sample with its independence number (exact for `n <= 40`).
///
/// For larger `n` only a greedy independent set is available; its size is a
/// lower bound on α and the instance is flagged inexact, so it can never
/// pass the hypothesis filter.
pub fn dense_small_alpha(n: usize, q: f64, seed: u64) -> Result<DenseInstance> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} not in [0, 1]")));
    }
    let empty = UndirectedGraph::new(n);
    let mut g = UndirectedGraph::new(n);
    for (u, v) in EdgeStream::new(Ground::Edges(&empty), SampleMode::Bernoulli(q), seed)? {
        g.add_edge(u, v);
    }
    let (alpha, exact) = if n <= LIMITS.alpha_max_n {
        (exact_independence(&g)?, true)
    } else {
        (greedy_alpha(&g), false)
    };
    let d = if n == 0 { 0.0 } else { g.min_degree() as f64 / n as f64 };
    Ok(DenseInstance {
        graph: g,
        alpha,
        alpha_exact: exact,
        d,
    })
}

fn greedy_alpha(g: &UndirectedGraph) -> usize {
    let mut order: Vec<Vertex> = (0..g.n()).collect();
    order.sort_by_key(|&v| g.degree(v));
    let mut blocked = vec![false; g.n()];
    let mut size = 0;
    for v in order {
        if !blocked[v] {
            size += 1;
            blocked[v] = true;
            for &w in g.neighbors(v) {
                blocked[w] = true;
            }
        }
    }
    size
}
