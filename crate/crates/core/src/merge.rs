//! Cycle partitions of graphs with small independence number, and the
//! round-based merge of those cycles into a Hamilton cycle.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, UndirectedGraph, Vertex};
use crate::oracles::LIMITS;
use crate::rotation::{end_closure, maximal_path, verify_hamilton_cycle, EndClosure, PathState, SECOND_LEVEL_SCAN};
use crate::sample::{derive_seed, EdgeStream, Ground, SampleMode};

/// Largest `n` for the branch-and-bound longest cycle search.
pub const EXACT_CYCLE_MAX_N: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    Exact,
    Heuristic,
}

/// Longest cycle as a vertex sequence, or `None` when `g` is acyclic.
///
/// Exact mode uses a subset DP for `n <= 18` and branch-and-bound seeded
/// with the heuristic cycle up to [`EXACT_CYCLE_MAX_N`]. Heuristic mode
/// closes the rotation witnesses of a maximal path and falls back to any
/// cycle found by depth-first search.
pub fn longest_cycle(g: &UndirectedGraph, mode: CycleMode) -> Result<Option<Vec<Vertex>>> {
    let out = match mode {
        CycleMode::Heuristic => heuristic_cycle(g),
        CycleMode::Exact if g.n() <= LIMITS.ham_max_n => dp_longest_cycle(g),
        CycleMode::Exact if g.n() <= EXACT_CYCLE_MAX_N => bb_longest_cycle(g),
        CycleMode::Exact => {
            return Err(Error::OracleLimit {
                oracle: "longest_cycle",
                n: g.n(),
                limit: EXACT_CYCLE_MAX_N,
            })
        }
    };
    debug_assert!(out.as_ref().is_none_or(|c| is_cycle(g, c)));
    Ok(out)
}

/// At least three distinct vertices, consecutive ones adjacent, closed.
pub fn is_cycle(g: &UndirectedGraph, c: &[Vertex]) -> bool {
    let k = c.len();
    if k < 3 {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    c.iter().all(|&v| v < g.n() && seen.insert(v)) && (0..k).all(|i| g.has_edge(c[i], c[(i + 1) % k]))
}

/// `reach[mask]` holds the possible last vertices of paths that start at
/// the lowest vertex of `mask` and visit exactly `mask`.
fn dp_longest_cycle(g: &UndirectedGraph) -> Option<Vec<Vertex>> {
    let n = g.n();
    if n < 3 {
        return None;
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect();
    let full = 1usize << n;
    let mut reach = vec![0u32; full];
    let mut best: Option<(u32, usize)> = None;
    for mask in 1..full {
        let s = mask.trailing_zeros() as usize;
        if mask == 1 << s {
            reach[mask] = 1 << s;
        }
        let ends = reach[mask];
        if ends == 0 {
            continue;
        }
        let size = mask.count_ones();
        if size >= 3 && ends & adj[s] != 0 && best.is_none_or(|(b, _)| size > b) {
            best = Some((size, mask));
        }
        let mut e = ends;
        while e != 0 {
            let v = e.trailing_zeros() as usize;
            e &= e - 1;
            // Only vertices above the start may join.
            let mut next = adj[v] & !(mask as u32) & !((1u32 << (s + 1)) - 1);
            while next != 0 {
                let w = next.trailing_zeros();
                next &= next - 1;
                reach[mask | 1 << w] |= 1 << w;
            }
        }
    }
    let (_, mask) = best?;
    let s = mask.trailing_zeros() as usize;
    let mut last = (reach[mask] & adj[s]).trailing_zeros() as usize;
    let mut cur = mask;
    let mut cycle = vec![last];
    while cur != 1 << s {
        let prev_mask = cur & !(1 << last);
        let prev = (reach[prev_mask] & adj[last]).trailing_zeros() as usize;
        cycle.push(prev);
        cur = prev_mask;
        last = prev;
    }
    cycle.reverse();
    Some(cycle)
}

fn bb_longest_cycle(g: &UndirectedGraph) -> Option<Vec<Vertex>> {
    let n = g.n();
    let adj: Vec<u64> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
        .collect();
    let mut best = heuristic_cycle(g).unwrap_or_default();

    struct Search<'a> {
        adj: &'a [u64],
        s: usize,
        allowed: u64,
        path: Vec<usize>,
        best: &'a mut Vec<Vertex>,
        n: usize,
    }

    impl Search<'_> {
        fn reachable(&self, v: usize, used: u64) -> u32 {
            let free = self.allowed & !used;
            let mut seen = 0u64;
            let mut frontier = self.adj[v] & free;
            while frontier != 0 {
                seen |= frontier;
                let mut next = 0u64;
                let mut f = frontier;
                while f != 0 {
                    let w = f.trailing_zeros() as usize;
                    f &= f - 1;
                    next |= self.adj[w];
                }
                frontier = next & free & !seen;
            }
            seen.count_ones()
        }

        fn dfs(&mut self, v: usize, used: u64) {
            let len = self.path.len();
            if len >= 3 && self.adj[v] >> self.s & 1 == 1 && len > self.best.len() {
                *self.best = self.path.clone();
            }
            if self.best.len() == self.n || len + self.reachable(v, used) as usize <= self.best.len() {
                return;
            }
            let mut next = self.adj[v] & self.allowed & !used;
            while next != 0 {
                let w = next.trailing_zeros() as usize;
                next &= next - 1;
                self.path.push(w);
                self.dfs(w, used | 1 << w);
                self.path.pop();
            }
        }
    }

    for s in 0..n {
        // Cycles whose smallest vertex is s use only s..n.
        if n - s <= best.len() {
            break;
        }
        let allowed = if s + 1 >= 64 { 0 } else { !0u64 << (s + 1) } & ((1u64 << n) - 1);
        let mut search = Search {
            adj: &adj,
            s,
            allowed,
            path: vec![s],
            best: &mut best,
            n,
        };
        search.dfs(s, 1 << s);
    }
    (best.len() >= 3).then_some(best)
}

/// Closes the representative paths of a maximal path's END closure: the
/// longest cycle among `x0 ~ e` closures and chords from each end `e` back
/// into its witness.
fn heuristic_cycle(g: &UndirectedGraph) -> Option<Vec<Vertex>> {
    let n = g.n();
    if n < 3 {
        return None;
    }
    let path = maximal_path(g, 0);
    let closure = end_closure(g, &path, path.x0()).expect("x0 is an endpoint");
    let mut best: Vec<Vertex> = Vec::new();
    for &e in &closure.ends {
        let w = closure.witness(e).unwrap().vertices();
        let k = w.len();
        let i = g
            .neighbors(e)
            .iter()
            .filter_map(|&u| w.iter().position(|&x| x == u))
            .min();
        if let Some(i) = i {
            if k - i >= 3 && k - i > best.len() {
                best = w[i..].to_vec();
                if best.len() == n {
                    break;
                }
            }
        }
    }
    if best.len() >= 3 {
        Some(best)
    } else {
        any_cycle(g)
    }
}

/// A cycle from the first back edge of an iterative DFS.
fn any_cycle(g: &UndirectedGraph) -> Option<Vec<Vertex>> {
    const NONE: usize = usize::MAX;
    let n = g.n();
    let mut parent = vec![NONE; n];
    let mut depth = vec![NONE; n];
    for root in 0..n {
        if depth[root] != NONE {
            continue;
        }
        depth[root] = 0;
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut it)) = stack.last_mut() {
            let Some(&w) = g.neighbors(v).get(*it) else {
                stack.pop();
                continue;
            };
            *it += 1;
            if depth[w] == NONE {
                depth[w] = depth[v] + 1;
                parent[w] = v;
                stack.push((w, 0));
            } else if w != parent[v] && depth[w] < depth[v] {
                let mut c = vec![v];
                let mut u = v;
                while u != w {
                    u = parent[u];
                    c.push(u);
                }
                return Some(c);
            }
        }
    }
    None
}

/// Vertex-disjoint cycles from repeated longest-cycle extraction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclePartition {
    pub cycles: Vec<Vec<Vertex>>,
    /// `floor(2 / d)`.
    pub k0: usize,
    /// Vertices left when the residual graph became acyclic; empty on
    /// success.
    pub leftover: Vec<Vertex>,
    pub mode: CycleMode,
}

impl CyclePartition {
    pub fn is_complete(&self) -> bool {
        self.leftover.is_empty()
    }

    pub fn within_bound(&self) -> bool {
        self.cycles.len() <= self.k0
    }

    /// Disjoint cycles of `g` covering every vertex.
    pub fn verify(&self, g: &UndirectedGraph) -> bool {
        let mut seen = vec![false; g.n()];
        for c in &self.cycles {
            if !is_cycle(g, c) {
                return false;
            }
            for &v in c {
                if std::mem::replace(&mut seen[v], true) {
                    return false;
                }
            }
        }
        self.is_complete() && seen.into_iter().all(|s| s)
    }
}

pub fn k0(d: f64) -> usize {
    (2.0 / d).floor() as usize
}

/// Extracts a longest cycle of the residual graph until no vertex remains
/// or the residual is acyclic.
pub fn cycle_partition(g: &UndirectedGraph, d: f64, mode: CycleMode) -> Result<CyclePartition> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Domain(format!("need 0 < d < 1, got {d}")));
    }
    let mut remaining: Vec<Vertex> = (0..g.n()).collect();
    let mut cycles = Vec::new();
    while !remaining.is_empty() {
        let (sub, map) = g.induced(&remaining);
        let Some(c) = longest_cycle(&sub, mode)? else { break };
        let c: Vec<Vertex> = c.into_iter().map(|v| map[v]).collect();
        let mut taken = vec![false; g.n()];
        for &v in &c {
            taken[v] = true;
        }
        remaining.retain(|&v| !taken[v]);
        cycles.push(c);
    }
    Ok(CyclePartition {
        cycles,
        k0: k0(d),
        leftover: remaining,
        mode,
    })
}

/// Predecessors (in the listed orientation) of the neighbors of `w` on
/// `cycle`. For a longest cycle and `w` off it, this set is independent.
pub fn neighbor_predecessors(g: &UndirectedGraph, cycle: &[Vertex], w: Vertex) -> Vec<Vertex> {
    let k = cycle.len();
    let mut out: Vec<Vertex> = (0..k)
        .filter(|&i| g.has_edge(w, cycle[i]))
        .map(|i| cycle[(i + k - 1) % k])
        .collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundSchedule {
    /// Number of cycles in the partition.
    pub r: usize,
    /// Per-round inclusion probability with `1 - (1 - p)^r = m / |Ē|`.
    pub p: f64,
    pub m: u64,
    pub complement: u64,
    /// Rounds available: `2 r`, one per possible Case 2 and Case 3 attempt.
    pub max_rounds: usize,
}

impl RoundSchedule {
    pub fn new(r: usize, m: u64, complement: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::Precondition("schedule needs at least one cycle".into()));
        }
        let q = if complement == 0 {
            1.0
        } else {
            (m as f64 / complement as f64).min(1.0)
        };
        let p = if q >= 1.0 {
            1.0
        } else {
            -((-q).ln_1p() / r as f64).exp_m1()
        };
        Ok(Self {
            r,
            p,
            m,
            complement,
            max_rounds: 2 * r,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeCase {
    Case1,
    Case2,
    Case3,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub hamiltonian: bool,
    pub cycle: Option<Vec<Vertex>>,
    pub schedule: RoundSchedule,
    pub rounds_used: usize,
    pub case1: u64,
    pub case2: u64,
    pub case3: u64,
    /// Case 3 closures found with edges already present.
    pub free_closures: u64,
    pub failure: Option<MergeCase>,
    /// Every edge of every drawn round.
    pub consumed: Vec<Edge>,
}

/// `A_z = END(z, Q_z)`, computed on first use.
fn a_z<'c>(
    work: &UndirectedGraph,
    z: &EndClosure,
    cache: &'c mut HashMap<Vertex, EndClosure>,
    zv: Vertex,
) -> &'c EndClosure {
    cache.entry(zv).or_insert_with(|| {
        let qz = z.witness(zv).unwrap();
        end_closure(work, qz, zv).expect("z is an endpoint of Q_z")
    })
}

struct Merge<'a> {
    h: &'a UndirectedGraph,
    work: UndirectedGraph,
    path: Vec<Vertex>,
    cycles: Vec<Vec<Vertex>>,
    seed: u64,
    out: MergeOutcome,
}

impl Merge<'_> {
    fn on_path(&self) -> Vec<bool> {
        let mut on = vec![false; self.h.n()];
        for &v in &self.path {
            on[v] = true;
        }
        on
    }

    /// Replaces the path by `Q, (z1, z2), C_i - (z2, pred(z2))`.
    fn absorb(&mut self, closure: &EndClosure, z1: Vertex, z2: Vertex) {
        let ci = self.cycles.iter().position(|c| c.contains(&z2)).unwrap();
        let c = self.cycles.remove(ci);
        let p = c.iter().position(|&v| v == z2).unwrap();
        let mut path = closure.witness(z1).unwrap().vertices().to_vec();
        path.extend((0..c.len()).map(|k| c[(p + k) % c.len()]));
        self.path = path;
        debug_assert!(PathState::new(self.path.clone()).is_valid_in(&self.work));
    }

    fn draw_round(&mut self) -> Vec<Edge> {
        let t = self.out.rounds_used as u64;
        self.out.rounds_used += 1;
        let mode = SampleMode::Bernoulli(self.out.schedule.p);
        let round = EdgeStream::new(Ground::Edges(self.h), mode, derive_seed(self.seed, t, "round"))
            .expect("p is a probability")
            .collect_all();
        self.out.consumed.extend_from_slice(&round);
        round
    }

    fn add_round(&mut self, round: &[Edge]) {
        for &(u, v) in round {
            self.work.add_edge(u, v);
        }
    }

    /// Closes the path through `cycle`; returns false once Hamiltonian.
    fn closed(&mut self, cycle: Vec<Vertex>) -> bool {
        debug_assert!(is_cycle(&self.work, &cycle));
        if self.cycles.is_empty() {
            self.out.hamiltonian = true;
            self.out.cycle = Some(cycle);
            return false;
        }
        self.cycles.push(cycle);
        let i = (0..self.cycles.len() - 1).min_by_key(|&i| self.cycles[i][0]).unwrap();
        self.path = self.cycles.remove(i);
        true
    }

    fn free_closure(&self, z: &EndClosure, x: Vertex, second: &mut HashMap<Vertex, EndClosure>) -> Option<Vec<Vertex>> {
        let work = &self.work;
        if let Some(&zv) = z.ends.iter().find(|&&zv| work.has_edge(zv, x)) {
            return Some(z.witness(zv).unwrap().vertices().to_vec());
        }
        z.ends.iter().take(SECOND_LEVEL_SCAN).find_map(|&zv| {
            let a = a_z(work, z, second, zv);
            a.ends
                .iter()
                .find(|&&b| work.has_edge(zv, b))
                .map(|&b| a.witness(b).unwrap().vertices().to_vec())
        })
    }

    fn step(&mut self) -> bool {
        let n = self.h.n();
        let path = PathState::new(self.path.clone());
        let z = end_closure(&self.work, &path, path.x0()).expect("x0 is an endpoint");
        let on = self.on_path();
        let off = |v: &Vertex| !on[*v];

        // Case 1: an existing edge from Z to a vertex off the path.
        let hit = z
            .ends
            .iter()
            .find_map(|&z1| self.work.neighbors(z1).iter().copied().find(off).map(|z2| (z1, z2)));
        if let Some((z1, z2)) = hit {
            self.out.case1 += 1;
            self.absorb(&z, z1, z2);
            return true;
        }

        if 2 * self.path.len() <= n {
            if self.out.rounds_used == self.out.schedule.max_rounds {
                self.out.failure = Some(MergeCase::Case2);
                return false;
            }
            self.out.case2 += 1;
            let round = self.draw_round();
            let hit = round.iter().find_map(|&(u, v)| {
                if z.contains(u) && off(&v) {
                    Some((u, v))
                } else if z.contains(v) && off(&u) {
                    Some((v, u))
                } else {
                    None
                }
            });
            self.add_round(&round);
            return match hit {
                Some((z1, z2)) => {
                    self.absorb(&z, z1, z2);
                    true
                }
                None => {
                    self.out.failure = Some(MergeCase::Case2);
                    false
                }
            };
        }

        // Case 3: close P using a pair (z, z') with z' in A_z = END(z, Q_z).
        let mut second: HashMap<Vertex, EndClosure> = HashMap::new();
        let x = path.x0();
        let free = self.free_closure(&z, x, &mut second);
        if let Some(c) = free {
            self.out.free_closures += 1;
            return self.closed(c);
        }
        if self.out.rounds_used == self.out.schedule.max_rounds {
            self.out.failure = Some(MergeCase::Case3);
            return false;
        }
        self.out.case3 += 1;
        let round = self.draw_round();
        let mut cycle = None;
        for &(u, v) in &round {
            for (a, b) in [(u, v), (v, u)] {
                if cycle.is_none() && z.contains(a) {
                    let closure = a_z(&self.work, &z, &mut second, a);
                    if closure.contains(b) {
                        cycle = Some(closure.witness(b).unwrap().vertices().to_vec());
                    }
                }
            }
            if cycle.is_some() {
                break;
            }
        }
        self.add_round(&round);
        match cycle {
            Some(c) => self.closed(c),
            None => {
                self.out.failure = Some(MergeCase::Case3);
                false
            }
        }
    }
}

/// Merges the cycles of `partition` into a Hamilton cycle of `H ∪ R`,
/// drawing round `R_t` from the complement of `H` only when Case 2 or
/// Case 3 needs it. The path starts as the last cycle minus its closing
/// edge.
pub fn merge_run(h: &UndirectedGraph, partition: &CyclePartition, m: u64, seed: u64) -> Result<MergeOutcome> {
    if !partition.verify(h) {
        return Err(Error::Precondition("partition is not a cycle cover of H".into()));
    }
    let schedule = RoundSchedule::new(partition.cycles.len(), m, h.complement_size())?;
    let mut cycles = partition.cycles.clone();
    let path = cycles.pop().unwrap();
    let mut run = Merge {
        h,
        work: h.clone(),
        path,
        cycles,
        seed,
        out: MergeOutcome {
            hamiltonian: false,
            cycle: None,
            schedule,
            rounds_used: 0,
            case1: 0,
            case2: 0,
            case3: 0,
            free_closures: 0,
            failure: None,
            consumed: Vec::new(),
        },
    };
    if run.cycles.is_empty() {
        run.out.hamiltonian = true;
        run.out.cycle = Some(run.path.clone());
        return Ok(run.out);
    }
    while run.step() {}
    if let Some(c) = &run.out.cycle {
        debug_assert!(verify_hamilton_cycle(&run.work, c));
    }
    Ok(run.out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub partition: CyclePartition,
    /// Absent when the partition left vertices uncovered.
    pub merge: Option<MergeOutcome>,
}

impl PipelineOutcome {
    pub fn hamiltonian(&self) -> bool {
        self.merge.as_ref().is_some_and(|m| m.hamiltonian)
    }
}

/// Partition then merge.
pub fn decompose_and_merge(h: &UndirectedGraph, d: f64, m: u64, mode: CycleMode, seed: u64) -> Result<PipelineOutcome> {
    let partition = cycle_partition(h, d, mode)?;
    let merge = if partition.is_complete() {
        Some(merge_run(h, &partition, m, seed)?)
    } else {
        None
    };
    Ok(PipelineOutcome { partition, merge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::brute_longest_cycle;

    fn graph(n: usize, edges: &[Edge]) -> UndirectedGraph {
        UndirectedGraph::from_edge_list(n, edges).unwrap()
    }

    fn cycle_graph(n: usize) -> UndirectedGraph {
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

    #[test]
    fn longest_cycle_examples() {
        for mode in [CycleMode::Exact, CycleMode::Heuristic] {
            assert_eq!(longest_cycle(&cycle_graph(6), mode).unwrap().unwrap().len(), 6);
            let tree = graph(5, &[(0, 1), (0, 2), (1, 3), (1, 4)]);
            assert!(longest_cycle(&tree, mode).unwrap().is_none());
        }
        let k4e = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        let c = longest_cycle(&k4e, CycleMode::Exact).unwrap().unwrap();
        assert_eq!(c.len(), 4);
        assert!(is_cycle(&k4e, &c));
        assert!(longest_cycle(&complete(41), CycleMode::Exact).is_err());
    }

    #[test]
    fn exact_engines_agree_with_brute_force() {
        for seed in 0..40 {
            let n = 5 + (seed as usize % 6);
            let g = crate::generators::dense_small_alpha(n, 0.4, seed).unwrap().graph;
            let brute = brute_longest_cycle(&g).unwrap();
            let dp = dp_longest_cycle(&g).map(|c| c.len());
            let bb = bb_longest_cycle(&g).map(|c| c.len());
            assert_eq!(dp, brute, "seed {seed}");
            assert_eq!(bb, brute, "seed {seed}");
        }
    }

    #[test]
    fn partition_examples() {
        let p = cycle_partition(&cycle_graph(9), 0.2, CycleMode::Exact).unwrap();
        assert_eq!(p.cycles.len(), 1);
        let p = cycle_partition(&complete(6), 0.5, CycleMode::Exact).unwrap();
        assert_eq!(p.cycles.len(), 1);
        assert_eq!(p.cycles[0].len(), 6);
        assert!(p.verify(&complete(6)));
        // A triangle with a pendant path cannot be fully covered.
        let g = graph(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]);
        let p = cycle_partition(&g, 0.2, CycleMode::Exact).unwrap();
        assert_eq!(p.leftover, vec![3, 4]);
        assert!(!p.verify(&g));
    }

    #[test]
    fn schedule_solves_for_p() {
        for (r, m, e) in [(1, 10, 100), (3, 200, 435), (5, 7, 10_000), (7, 1, 1_000_000_000)] {
            let s = RoundSchedule::new(r, m, e).unwrap();
            let q = m as f64 / e as f64;
            let back = -(r as f64 * (-s.p).ln_1p()).exp_m1();
            assert!(((back - q) / q).abs() <= 1e-12, "{r} {m} {e}");
        }
        assert_eq!(RoundSchedule::new(2, 50, 40).unwrap().p, 1.0);
    }

    fn two_triangles(cross: &[Edge]) -> (UndirectedGraph, CyclePartition) {
        let mut edges = vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)];
        edges.extend_from_slice(cross);
        let g = graph(6, &edges);
        let p = CyclePartition {
            cycles: vec![vec![0, 1, 2], vec![3, 4, 5]],
            k0: 2,
            leftover: vec![],
            mode: CycleMode::Exact,
        };
        (g, p)
    }

    #[test]
    fn single_cycle_needs_no_rounds() {
        let g = cycle_graph(7);
        let p = cycle_partition(&g, 0.3, CycleMode::Exact).unwrap();
        let out = merge_run(&g, &p, 10, 1).unwrap();
        assert!(out.hamiltonian);
        assert_eq!(out.rounds_used, 0);
        assert!(verify_hamilton_cycle(&g, out.cycle.as_ref().unwrap()));
    }

    #[test]
    fn case_one_merges_joined_triangles() {
        let cross: Vec<Edge> = (0..3).flat_map(|u| (3..6).map(move |v| (u, v))).collect();
        let (g, p) = two_triangles(&cross);
        let out = merge_run(&g, &p, 5, 3).unwrap();
        assert!(out.hamiltonian);
        assert_eq!(out.case1, 1);
        assert_eq!(out.rounds_used, 0);
        assert!(out.consumed.is_empty());
        assert!(verify_hamilton_cycle(&g, out.cycle.as_ref().unwrap()));
    }

    #[test]
    fn disjoint_triangles_need_random_edges() {
        let (g, p) = two_triangles(&[]);
        for seed in 0..10 {
            let out = merge_run(&g, &p, 9, seed).unwrap();
            assert_eq!(out.schedule.p, 1.0);
            assert!(out.hamiltonian, "{seed}: {:?}", out.failure);
            let mut aug = g.clone();
            for &(u, v) in &out.consumed {
                aug.add_edge(u, v);
            }
            assert!(verify_hamilton_cycle(&aug, out.cycle.as_ref().unwrap()));
        }
        let out = merge_run(&g, &p, 0, 0).unwrap();
        assert!(!out.hamiltonian);
        assert_eq!(out.failure, Some(MergeCase::Case2));
        assert_eq!(out.rounds_used, 1);
    }

    #[test]
    fn predecessors_of_longest_cycle_are_independent() {
        for seed in 0..60 {
            let n = 6 + seed as usize % 7;
            let g = crate::generators::dense_small_alpha(n, 0.5, seed).unwrap().graph;
            let Some(c) = longest_cycle(&g, CycleMode::Exact).unwrap() else {
                continue;
            };
            for w in (0..n).filter(|w| !c.contains(w)) {
                let preds = neighbor_predecessors(&g, &c, w);
                for (i, &a) in preds.iter().enumerate() {
                    assert!(!g.has_edge(w, a), "seed {seed}");
                    for &b in &preds[i + 1..] {
                        assert!(!g.has_edge(a, b), "seed {seed}");
                    }
                }
            }
        }
    }
}
