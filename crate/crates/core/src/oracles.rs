//! Exact brute-force references for small inputs.
//!
//! Each oracle refuses inputs beyond its limit instead of degrading.

use crate::directed::BipartiteDouble;
use crate::error::{Error, Result};
use crate::graph::{Digraph, UndirectedGraph, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub ham_max_n: usize,
    pub alpha_max_n: usize,
    pub matching_exhaustive_max_n: usize,
    pub permutation_max_n: usize,
}

pub const LIMITS: OracleLimits = OracleLimits {
    ham_max_n: 18,
    alpha_max_n: 40,
    matching_exhaustive_max_n: 6,
    permutation_max_n: 10,
};

fn refuse(oracle: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::OracleLimit { oracle, n, limit })
    } else {
        Ok(())
    }
}

fn undirected_rows(g: &UndirectedGraph) -> Vec<u32> {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect()
}

fn out_rows(d: &Digraph) -> Vec<u32> {
    (0..d.n())
        .map(|v| d.out_neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect()
}

/// Subset DP over (visited set, last vertex), paths rooted at vertex 0.
/// `ends[mask]` is the set of last vertices of paths from 0 covering `mask`.
fn hamilton_dp(n: usize, out: &[u32], min_len: usize) -> Option<Vec<Vertex>> {
    if n < min_len {
        return None;
    }
    let full = (1u32 << n) - 1;
    let mut ends = vec![0u32; 1 << n];
    ends[1] = 1;
    for mask in (1..=full).filter(|m| m & 1 == 1) {
        let mut cur = ends[mask as usize];
        while cur != 0 {
            let v = cur.trailing_zeros() as usize;
            cur &= cur - 1;
            let mut next = out[v] & !mask;
            while next != 0 {
                let w = next.trailing_zeros();
                next &= next - 1;
                ends[(mask | 1 << w) as usize] |= 1 << w;
            }
        }
    }
    let closing = (0..n).find(|&v| ends[full as usize] >> v & 1 == 1 && out[v] & 1 == 1)?;
    let mut cycle = vec![closing];
    let mut mask = full;
    let mut cur = closing;
    while mask != 1 {
        let prev_mask = mask & !(1 << cur);
        let prev = (0..n)
            .find(|&u| ends[prev_mask as usize] >> u & 1 == 1 && out[u] >> cur & 1 == 1)
            .expect("DP table is consistent");
        cycle.push(prev);
        mask = prev_mask;
        cur = prev;
    }
    cycle.reverse();
    Some(cycle)
}

/// Exact Hamiltonicity of an undirected graph (`n <= 18`), with a witness
/// cycle starting at vertex 0.
pub fn brute_hamiltonian(g: &UndirectedGraph) -> Result<Option<Vec<Vertex>>> {
    refuse("brute_hamiltonian", g.n(), LIMITS.ham_max_n)?;
    Ok(hamilton_dp(g.n(), &undirected_rows(g), 3))
}

/// Exact Hamiltonicity of a digraph (`n <= 18`); 2-cycles count for `n = 2`.
pub fn brute_hamiltonian_digraph(d: &Digraph) -> Result<Option<Vec<Vertex>>> {
    refuse("brute_hamiltonian_digraph", d.n(), LIMITS.ham_max_n)?;
    Ok(hamilton_dp(d.n(), &out_rows(d), 2))
}

fn next_permutation(xs: &mut [Vertex]) -> bool {
    let Some(i) = xs.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = xs.iter().rposition(|&x| x > xs[i]).unwrap();
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

fn permutation_search(n: usize, min_len: usize, arc: impl Fn(Vertex, Vertex) -> bool) -> Option<Vec<Vertex>> {
    if n < min_len {
        return None;
    }
    let mut rest: Vec<Vertex> = (1..n).collect();
    loop {
        let cycle: Vec<Vertex> = std::iter::once(0).chain(rest.iter().copied()).collect();
        if (0..n).all(|i| arc(cycle[i], cycle[(i + 1) % n])) {
            return Some(cycle);
        }
        if !next_permutation(&mut rest) {
            return None;
        }
    }
}

/// Hamiltonicity by enumerating all `(n-1)!` orders (`n <= 10`); an
/// independent cross-check of the subset DP.
pub fn permutation_hamiltonian(g: &UndirectedGraph) -> Result<Option<Vec<Vertex>>> {
    refuse("permutation_hamiltonian", g.n(), LIMITS.permutation_max_n)?;
    Ok(permutation_search(g.n(), 3, |u, v| g.has_edge(u, v)))
}

pub fn permutation_hamiltonian_digraph(d: &Digraph) -> Result<Option<Vec<Vertex>>> {
    refuse("permutation_hamiltonian_digraph", d.n(), LIMITS.permutation_max_n)?;
    Ok(permutation_search(d.n(), 2, |u, v| d.has_arc(u, v)))
}

/// Exact independence number (`n <= 40`) by branch and bound on bitmasks.
pub fn exact_independence(g: &UndirectedGraph) -> Result<usize> {
    refuse("exact_independence", g.n(), LIMITS.alpha_max_n)?;
    let n = g.n();
    let adj: Vec<u64> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
        .collect();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = greedy_independent(&adj, all);
    mis(&adj, all, 0, &mut best);
    Ok(best)
}

fn greedy_independent(adj: &[u64], mut cand: u64) -> usize {
    let mut size = 0;
    while cand != 0 {
        // Minimum-degree vertex within the candidates.
        let mut rest = cand;
        let mut pick = rest.trailing_zeros() as usize;
        let mut best_deg = u32::MAX;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let deg = (adj[v] & cand).count_ones();
            if deg < best_deg {
                best_deg = deg;
                pick = v;
            }
        }
        size += 1;
        cand &= !(adj[pick] | 1 << pick);
    }
    size
}

fn mis(adj: &[u64], cand: u64, size: usize, best: &mut usize) {
    if cand == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + cand.count_ones() as usize <= *best {
        return;
    }
    // Vertices with at most one candidate neighbor can always be taken.
    let mut rest = cand;
    let mut branch = usize::MAX;
    let mut branch_deg = 0;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let deg = (adj[v] & cand).count_ones();
        if deg <= 1 {
            mis(adj, cand & !(adj[v] | 1 << v), size + 1, best);
            return;
        }
        if deg > branch_deg {
            branch_deg = deg;
            branch = v;
        }
    }
    mis(adj, cand & !(adj[branch] | 1 << branch), size + 1, best);
    mis(adj, cand & !(1 << branch), size, best);
}

/// Maximum matching size by exhaustive search (`n <= 6` per side).
pub fn exhaustive_matching(b: &BipartiteDouble) -> Result<usize> {
    refuse("exhaustive_matching", b.n(), LIMITS.matching_exhaustive_max_n)?;
    fn go(b: &BipartiteDouble, left: usize, used: u32) -> usize {
        if left == b.n() {
            return 0;
        }
        let mut best = go(b, left + 1, used);
        for &r in b.right_of(left) {
            if used >> r & 1 == 0 {
                best = best.max(1 + go(b, left + 1, used | 1 << r));
            }
        }
        best
    }
    Ok(go(b, 0, 0))
}

/// Length of a longest cycle by exhaustive DFS over simple cycles
/// (`n <= 10`); `None` for acyclic graphs.
pub fn brute_longest_cycle(g: &UndirectedGraph) -> Result<Option<usize>> {
    refuse("brute_longest_cycle", g.n(), LIMITS.permutation_max_n)?;
    fn dfs(g: &UndirectedGraph, start: Vertex, v: Vertex, seen: u32, len: usize, best: &mut usize) {
        for &w in g.neighbors(v) {
            if w == start && len >= 3 {
                *best = (*best).max(len);
            } else if w > start && seen >> w & 1 == 0 {
                dfs(g, start, w, seen | 1 << w, len + 1, best);
            }
        }
    }
    let mut best = 0;
    for s in 0..g.n() {
        dfs(g, s, s, 1 << s, 1, &mut best);
    }
    Ok((best >= 3).then_some(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::verify_hamilton_cycle;

    fn graph(n: usize, edges: &[(usize, usize)]) -> UndirectedGraph {
        UndirectedGraph::from_edge_list(n, edges).unwrap()
    }

    fn cycle(n: usize) -> UndirectedGraph {
        graph(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn complete(n: usize) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    fn complete_bipartite(a: usize, b: usize) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(a + b);
        for u in 0..a {
            for v in a..a + b {
                g.add_edge(u, v);
            }
        }
        g
    }

    fn petersen() -> UndirectedGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        graph(10, &edges)
    }

    #[test]
    fn hamiltonicity_examples() {
        let c = brute_hamiltonian(&cycle(5)).unwrap().unwrap();
        assert!(verify_hamilton_cycle(&cycle(5), &c));
        assert!(brute_hamiltonian(&petersen()).unwrap().is_none());
        assert!(permutation_hamiltonian(&petersen()).unwrap().is_none());
        assert!(brute_hamiltonian(&complete_bipartite(2, 3)).unwrap().is_none());
        assert!(brute_hamiltonian(&complete(2)).unwrap().is_none());
        let w = brute_hamiltonian(&complete(18)).unwrap().unwrap();
        assert!(verify_hamilton_cycle(&complete(18), &w));
        assert!(matches!(
            brute_hamiltonian(&complete(19)),
            Err(Error::OracleLimit { limit: 18, .. })
        ));
    }

    #[test]
    fn digraph_hamiltonicity() {
        let two = Digraph::from_arc_list(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(brute_hamiltonian_digraph(&two).unwrap(), Some(vec![0, 1]));
        let path = Digraph::from_arc_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(brute_hamiltonian_digraph(&path).unwrap().is_none());
        let tri = Digraph::from_arc_list(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(brute_hamiltonian_digraph(&tri).unwrap(), Some(vec![0, 1, 2]));
        assert_eq!(permutation_hamiltonian_digraph(&tri).unwrap(), Some(vec![0, 1, 2]));
    }

    #[test]
    fn independence_examples() {
        assert_eq!(exact_independence(&cycle(5)).unwrap(), 2);
        assert_eq!(exact_independence(&complete(7)).unwrap(), 1);
        assert_eq!(exact_independence(&complete_bipartite(3, 7)).unwrap(), 7);
        assert_eq!(exact_independence(&petersen()).unwrap(), 4);
        assert_eq!(exact_independence(&UndirectedGraph::new(40)).unwrap(), 40);
        assert!(exact_independence(&UndirectedGraph::new(41)).is_err());
    }

    #[test]
    fn longest_cycle_examples() {
        assert_eq!(brute_longest_cycle(&cycle(6)).unwrap(), Some(6));
        let mut k4e = complete(4);
        k4e = graph(4, &k4e.edges().filter(|&e| e != (0, 1)).collect::<Vec<_>>());
        assert_eq!(brute_longest_cycle(&k4e).unwrap(), Some(4));
        let tree = graph(5, &[(0, 1), (0, 2), (2, 3), (2, 4)]);
        assert_eq!(brute_longest_cycle(&tree).unwrap(), None);
        assert_eq!(brute_longest_cycle(&petersen()).unwrap(), Some(9));
    }

    #[test]
    fn permutation_stepper() {
        let mut xs = vec![0, 1, 2];
        let mut count = 1;
        while next_permutation(&mut xs) {
            count += 1;
        }
        assert_eq!(count, 6);
        assert_eq!(xs, vec![2, 1, 0]);
    }
}
