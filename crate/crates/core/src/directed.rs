//! Digraph pipeline: cycle covers from perfect matchings of the bipartite
//! double, near-cycle-cover surgery, two-arc rotation families and closure
//! with random arcs.
//!
//! Paths and cycles are vertex sequences; a cycle `[c0, .., cm]` uses the arcs
//! `c_i -> c_{i+1}` and `cm -> c0`. Covers are kept normalized: each cycle
//! starts at its smallest vertex and cycles are sorted by that vertex.

use std::collections::{BTreeMap, VecDeque};

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, Edge, Vertex};
use crate::sample::{derive_seed, rng_from_seed, EdgeStream, Ground, SampleMode};

/// Bipartite graph with left side `0..n` and right side `n..2n`; left `x`
/// is joined to right `n + y` for every arc `x -> y`.
#[derive(Clone, Debug)]
pub struct BipartiteDouble {
    n: usize,
    right_of: Vec<Vec<usize>>,
}

impl BipartiteDouble {
    /// Builds a double from explicit adjacency (right ids in `0..n`).
    pub fn from_adjacency(right_of: Vec<Vec<usize>>) -> Self {
        let n = right_of.len();
        assert!(right_of.iter().flatten().all(|&r| r < n));
        Self { n, right_of }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Right partners of left vertex `x`, as ids in `0..n`.
    pub fn right_of(&self, x: usize) -> &[usize] {
        &self.right_of[x]
    }

    pub fn edge_count(&self) -> usize {
        self.right_of.iter().map(Vec::len).sum()
    }

    /// Edges as `(x, n + y)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.right_of
            .iter()
            .enumerate()
            .flat_map(|(x, rs)| rs.iter().map(move |&y| (x, self.n + y)))
            .collect()
    }
}

pub fn bipartite_double(d: &Digraph) -> BipartiteDouble {
    BipartiteDouble {
        n: d.n(),
        right_of: (0..d.n()).map(|v| d.out_neighbors(v).to_vec()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    /// Right partner (in `0..n`) of each left vertex.
    pub pair_of_left: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.pair_of_left.iter().flatten().count()
    }

    pub fn is_perfect(&self) -> bool {
        self.pair_of_left.iter().all(Option::is_some)
    }
}

/// Maximum-cardinality matching by Hopcroft-Karp phases: BFS layering from
/// free left vertices, then vertex-disjoint shortest augmenting paths.
pub fn max_matching(b: &BipartiteDouble) -> Matching {
    const FREE: usize = usize::MAX;
    let n = b.n;
    let mut left = vec![FREE; n];
    let mut right = vec![FREE; n];
    let mut dist = vec![0usize; n];
    loop {
        let mut queue = VecDeque::new();
        for x in 0..n {
            if left[x] == FREE {
                dist[x] = 0;
                queue.push_back(x);
            } else {
                dist[x] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(x) = queue.pop_front() {
            for &y in &b.right_of[x] {
                match right[y] {
                    FREE => found = true,
                    x2 if dist[x2] == usize::MAX => {
                        dist[x2] = dist[x] + 1;
                        queue.push_back(x2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; n];
        for x in 0..n {
            if left[x] == FREE {
                augment(b, x, &mut left, &mut right, &mut dist, &mut it);
            }
        }
    }
    Matching {
        pair_of_left: left.into_iter().map(|r| (r != FREE).then_some(r)).collect(),
    }
}

/// Iterative DFS along the layered graph; returns whether `root` was matched.
fn augment(
    b: &BipartiteDouble,
    root: usize,
    left: &mut [usize],
    right: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    const FREE: usize = usize::MAX;
    let mut stack = vec![root];
    while let Some(&x) = stack.last() {
        if it[x] == b.right_of[x].len() {
            dist[x] = usize::MAX;
            stack.pop();
            continue;
        }
        let y = b.right_of[x][it[x]];
        it[x] += 1;
        let x2 = right[y];
        if x2 == FREE {
            // Flip the alternating path recorded on the stack.
            let mut y = y;
            while let Some(x) = stack.pop() {
                let prev = left[x];
                left[x] = y;
                right[y] = x;
                y = prev;
            }
            return true;
        }
        if dist[x2] == dist[x] + 1 {
            stack.push(x2);
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCover {
    pub cycles: Vec<Vec<Vertex>>,
}

fn normalize_cycle(mut c: Vec<Vertex>) -> Vec<Vertex> {
    let i = (0..c.len()).min_by_key(|&i| c[i]).unwrap_or(0);
    c.rotate_left(i);
    c
}

impl CycleCover {
    pub fn new(cycles: Vec<Vec<Vertex>>) -> Self {
        let mut cycles: Vec<_> = cycles.into_iter().map(normalize_cycle).collect();
        cycles.sort_by_key(|c| c[0]);
        Self { cycles }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Disjoint, covering, and every consecutive pair an arc of `d`.
    pub fn verify(&self, d: &Digraph) -> bool {
        let mut seen = FixedBitSet::with_capacity(d.n());
        let mut count = 0;
        for c in &self.cycles {
            if c.len() < 2 || !closed_walk_ok(d, c) {
                return false;
            }
            for &v in c {
                if v >= d.n() || seen.put(v) {
                    return false;
                }
                count += 1;
            }
        }
        count == d.n()
    }

    /// The matching this cover corresponds to: `x` is matched to its
    /// successor.
    pub fn to_matching(&self, n: usize) -> Matching {
        let mut pair = vec![None; n];
        for c in &self.cycles {
            for i in 0..c.len() {
                pair[c[i]] = Some(c[(i + 1) % c.len()]);
            }
        }
        Matching { pair_of_left: pair }
    }
}

fn closed_walk_ok(d: &Digraph, c: &[Vertex]) -> bool {
    (0..c.len()).all(|i| d.has_arc(c[i], c[(i + 1) % c.len()]))
}

/// Follows `x -> M(x)` to split a perfect matching into directed cycles.
pub fn cycle_cover(d: &Digraph, m: &Matching) -> Result<CycleCover> {
    if !m.is_perfect() || m.pair_of_left.len() != d.n() {
        return Err(Error::Precondition("matching is not perfect".into()));
    }
    let n = d.n();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut c = Vec::new();
        let mut v = s;
        while !seen[v] {
            seen[v] = true;
            c.push(v);
            v = m.pair_of_left[v].unwrap();
        }
        if v != s {
            return Err(Error::Precondition("matching is not a permutation".into()));
        }
        cycles.push(c);
    }
    let cover = CycleCover::new(cycles);
    if !cover.verify(d) {
        return Err(Error::Precondition("matching uses non-arcs".into()));
    }
    Ok(cover)
}

/// One forward and one backward search from vertex 0.
pub fn is_strongly_connected(d: &Digraph) -> bool {
    let n = d.n();
    if n == 0 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            let next = if forward { d.out_neighbors(v) } else { d.in_neighbors(v) };
            for &w in next {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

/// A directed path plus vertex-disjoint cycles covering every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearCycleCover {
    pub path: Vec<Vertex>,
    pub cycles: Vec<Vec<Vertex>>,
}

impl NearCycleCover {
    pub fn verify(&self, d: &Digraph) -> bool {
        let mut seen = FixedBitSet::with_capacity(d.n());
        let mut count = 0;
        for &v in self.path.iter().chain(self.cycles.iter().flatten()) {
            if v >= d.n() || seen.put(v) {
                return false;
            }
            count += 1;
        }
        count == d.n()
            && !self.path.is_empty()
            && self.path.windows(2).all(|w| d.has_arc(w[0], w[1]))
            && self.cycles.iter().all(|c| c.len() >= 2 && closed_walk_ok(d, c))
    }

    fn cycle_index(&self, n: usize) -> Vec<Option<(usize, usize)>> {
        let mut at = vec![None; n];
        for (ci, c) in self.cycles.iter().enumerate() {
            for (p, &v) in c.iter().enumerate() {
                at[v] = Some((ci, p));
            }
        }
        at
    }
}

/// Merges two cycles of `cover` into a path: takes the first cycle (by
/// smallest vertex) that has an arc `(y, z)` to another cycle, with the
/// lexicographically smallest such arc, deletes `(y, sigma(y))` and the arc
/// entering `z`, and adds `(y, z)`.
pub fn ncc_init(d: &Digraph, cover: &CycleCover) -> Result<NearCycleCover> {
    if cover.len() < 2 {
        return Err(Error::Precondition("cover has fewer than two cycles".into()));
    }
    let n = d.n();
    let mut owner = vec![usize::MAX; n];
    for (ci, c) in cover.cycles.iter().enumerate() {
        for &v in c {
            owner[v] = ci;
        }
    }
    for (ci, c) in cover.cycles.iter().enumerate() {
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_unstable_by_key(|&i| c[i]);
        for yi in order {
            let y = c[yi];
            let Some(&z) = d.out_neighbors(y).iter().find(|&&z| owner[z] != ci) else {
                continue;
            };
            let other = &cover.cycles[owner[z]];
            let zi = other.iter().position(|&v| v == z).unwrap();
            let mut path: Vec<Vertex> = (1..=c.len()).map(|k| c[(yi + k) % c.len()]).collect();
            path.extend((0..other.len()).map(|k| other[(zi + k) % other.len()]));
            let cycles = cover
                .cycles
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != ci && k != owner[z])
                .map(|(_, c)| c.clone())
                .collect();
            return Ok(NearCycleCover { path, cycles });
        }
    }
    Err(Error::Precondition("no arc joins two cycles of the cover".into()))
}

/// Splices a cycle onto the end of the path through an arc from the
/// terminal vertex (smallest target first).
pub fn out_extend(d: &Digraph, ncc: &NearCycleCover) -> Option<NearCycleCover> {
    let at = ncc.cycle_index(d.n());
    let t = *ncc.path.last()?;
    let (ci, p) = d.out_neighbors(t).iter().find_map(|&v| at[v])?;
    let c = &ncc.cycles[ci];
    let mut out = ncc.clone();
    out.path.extend((0..c.len()).map(|k| c[(p + k) % c.len()]));
    out.cycles.remove(ci);
    Some(out)
}

/// Splices a cycle in front of the path through an arc into the start
/// vertex (smallest source first).
pub fn in_extend(d: &Digraph, ncc: &NearCycleCover) -> Option<NearCycleCover> {
    let at = ncc.cycle_index(d.n());
    let s = *ncc.path.first()?;
    let (ci, p) = d.in_neighbors(s).iter().find_map(|&w| at[w])?;
    let c = &ncc.cycles[ci];
    let mut path: Vec<Vertex> = (1..=c.len()).map(|k| c[(p + k) % c.len()]).collect();
    path.extend_from_slice(&ncc.path);
    let mut cycles = ncc.cycles.clone();
    cycles.remove(ci);
    Some(NearCycleCover { path, cycles })
}

/// Two-arc rotations at the terminal end of `path` under the arc predicate
/// `arc`. Returns `(S, T, T', lambda, paths)` with vertices given as ids.
struct TailRotations {
    s: Vec<Vertex>,
    t: Vec<Vertex>,
    t_prime: Vec<Vertex>,
    lambda: BTreeMap<Vertex, Vertex>,
    paths: BTreeMap<Vertex, Vec<Vertex>>,
}

fn tail_rotations(path: &[Vertex], h: usize, arc: impl Fn(Vertex, Vertex) -> bool) -> TailRotations {
    let k = path.len() - 1;
    let uk = path[k];
    let split = k.saturating_sub(h);
    // S holds u_{i-1} for 1 <= i <= k - h with (u_k, u_i) an arc.
    let s_idx: Vec<usize> = (1..=split).filter(|&i| arc(uk, path[i])).map(|i| i - 1).collect();
    let t_idx: Vec<usize> = (split..=k).collect();
    let mut t_prime = Vec::new();
    let mut lambda = BTreeMap::new();
    let mut paths = BTreeMap::new();
    for &j in &t_idx {
        let v = path[j];
        if s_idx.iter().all(|&si| !arc(path[si], v)) {
            continue;
        }
        t_prime.push(v);
        // The path arc (u_{j-1}, u_j) cannot serve as (lambda(v), v).
        let Some(&si) = s_idx
            .iter()
            .filter(|&&si| si + 1 < j && arc(path[si], v))
            .min_by_key(|&&si| path[si])
        else {
            continue;
        };
        let i = si + 1;
        lambda.insert(v, path[si]);
        let mut q = Vec::with_capacity(path.len());
        q.extend_from_slice(&path[..i]);
        q.extend_from_slice(&path[j..]);
        q.extend_from_slice(&path[i..j]);
        paths.insert(v, q);
    }
    t_prime.sort_unstable();
    TailRotations {
        s: s_idx.iter().map(|&i| path[i]).collect(),
        t: t_idx.iter().map(|&i| path[i]).collect(),
        t_prime,
        lambda,
        paths,
    }
}

/// Rotation family of a stuck near cycle cover path `Q = (u0, .., uk)`.
#[derive(Clone, Debug)]
pub struct RotationFamily {
    /// `ceil(d n / 2)`.
    pub threshold: usize,
    pub s: Vec<Vertex>,
    pub t: Vec<Vertex>,
    /// `N+(S) ∩ T`, sorted.
    pub t_prime: Vec<Vertex>,
    pub lambda: BTreeMap<Vertex, Vertex>,
    /// `Q_v` for every `v` in `T'` with a usable `lambda(v)`.
    pub paths: BTreeMap<Vertex, Vec<Vertex>>,
    second: BTreeMap<Vertex, Vec<Vec<Vertex>>>,
    cap: usize,
}

impl RotationFamily {
    /// `sigma^{-1}(v)`: the common end vertex of `Q_v` and of `𝒬_v`.
    pub fn end_of(&self, v: Vertex) -> Option<Vertex> {
        self.paths.get(&v).map(|q| *q.last().unwrap())
    }

    /// The second-level family `𝒬_v`: `Q_v` itself plus the mirrored
    /// rotations at its start, one path per distinct start vertex, ordered
    /// by start vertex and capped at `n` paths. Built on first use.
    pub fn second_level(&mut self, d: &Digraph, v: Vertex) -> &[Vec<Vertex>] {
        let Some(qv) = self.paths.get(&v) else {
            return &[];
        };
        let threshold = self.threshold;
        let cap = self.cap;
        self.second.entry(v).or_insert_with(|| {
            let reversed: Vec<Vertex> = qv.iter().rev().copied().collect();
            let mirrored = tail_rotations(&reversed, threshold, |a, b| d.has_arc(b, a));
            let mut family: Vec<Vec<Vertex>> = std::iter::once(qv.clone())
                .chain(mirrored.paths.into_values().map(|mut p| {
                    p.reverse();
                    p
                }))
                .collect();
            family.sort_by_key(|p| p[0]);
            family.truncate(cap);
            family
        })
    }
}

/// Builds `S`, `T`, `T' = N+(S) ∩ T`, `lambda` and every `Q_v`. Expects no
/// out or in extension to be available. Fails when `T'` has no usable
/// vertex.
pub fn rotation_family(d: &Digraph, ncc: &NearCycleCover, density: f64) -> Result<RotationFamily> {
    let n = d.n();
    let threshold = (density * n as f64 / 2.0).ceil() as usize;
    let tr = tail_rotations(&ncc.path, threshold, |a, b| d.has_arc(a, b));
    if tr.paths.is_empty() {
        return Err(Error::Precondition(format!(
            "no usable rotation: |S| = {}, |T'| = {}",
            tr.s.len(),
            tr.t_prime.len()
        )));
    }
    for q in tr.paths.values() {
        debug_assert!(q.len() == ncc.path.len() && q.windows(2).all(|w| d.has_arc(w[0], w[1])));
    }
    Ok(RotationFamily {
        threshold,
        s: tr.s,
        t: tr.t,
        t_prime: tr.t_prime,
        lambda: tr.lambda,
        paths: tr.paths,
        second: BTreeMap::new(),
        cap: n.max(1),
    })
}

/// Outcome of closing one path of the family into a cycle.
#[derive(Clone, Debug)]
pub struct Closure {
    pub cover: Option<CycleCover>,
    /// Stream arcs drawn, in order.
    pub consumed: Vec<Edge>,
}

fn closing_hit(d: &Digraph, family: &mut RotationFamily, (a, b): Edge) -> Option<Vec<Vertex>> {
    let v = family
        .paths
        .iter()
        .find(|(_, q)| *q.last().unwrap() == a)
        .map(|(&v, _)| v)?;
    family.second_level(d, v).iter().find(|p| p[0] == b).cloned()
}

/// Looks for an arc of `d` that already closes a path of some `𝒬_v`
/// (ascending `v`, then ascending start vertex).
pub fn close_for_free(d: &Digraph, ncc: &NearCycleCover, family: &mut RotationFamily) -> Option<CycleCover> {
    let vs: Vec<Vertex> = family.paths.keys().copied().collect();
    for v in vs {
        let end = family.end_of(v).unwrap();
        if let Some(p) = family.second_level(d, v).iter().find(|p| d.has_arc(end, p[0])) {
            return Some(cover_with(p.clone(), ncc));
        }
    }
    None
}

fn cover_with(cycle: Vec<Vertex>, ncc: &NearCycleCover) -> CycleCover {
    let mut cycles = ncc.cycles.clone();
    cycles.push(cycle);
    CycleCover::new(cycles)
}

/// Draws arcs until one runs from the end of some path in some `𝒬_v` to
/// that path's start, closing it into a cycle.
pub fn close_with_stream(
    d: &Digraph,
    ncc: &NearCycleCover,
    family: &mut RotationFamily,
    stream: &mut EdgeStream<'_>,
    budget: u64,
) -> Closure {
    let mut consumed = Vec::new();
    while (consumed.len() as u64) < budget {
        let Some(arc) = stream.next() else { break };
        consumed.push(arc);
        if let Some(p) = closing_hit(d, family, arc) {
            return Closure {
                cover: Some(cover_with(p, ncc)),
                consumed,
            };
        }
    }
    Closure { cover: None, consumed }
}

/// True iff `cycle` visits every vertex once along arcs of `d` (`n >= 2`).
pub fn verify_directed_hamilton_cycle(d: &Digraph, cycle: &[Vertex]) -> bool {
    let n = d.n();
    if n < 2 || cycle.len() != n {
        return false;
    }
    let mut seen = FixedBitSet::with_capacity(n);
    !cycle.iter().any(|&v| v >= n || seen.put(v)) && closed_walk_ok(d, cycle)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigraphStage {
    Degenerate,
    Matching,
    Connectivity,
    RotationFamily,
    Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigraphPhase {
    pub cycles_before: usize,
    pub cycles_after: usize,
    pub extensions: usize,
    pub t_prime: usize,
    pub stream_cost: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DigraphOutcome {
    pub hamiltonian: bool,
    pub cycle: Option<Vec<Vertex>>,
    pub failure: Option<DigraphStage>,
    pub matching_size: usize,
    pub strongly_connected: bool,
    pub initial_cycles: usize,
    /// The first random batch, added before matching.
    pub r1: Vec<Edge>,
    /// Closure-stream arcs consumed, in draw order.
    pub consumed: Vec<Edge>,
    pub phases: Vec<DigraphPhase>,
}

impl DigraphOutcome {
    pub fn r2_consumed(&self) -> u64 {
        self.consumed.len() as u64
    }
}

/// Full digraph pipeline: `H1 = H + R1` with `|R1| = ceil(rho1 n)` (capped
/// at the complement), cycle cover from a perfect matching of the double,
/// then repeated surgery phases drawing closure arcs with replacement from
/// the complement of `H1` under one global budget `ceil(rho2 n)`.
pub fn hamilton(h: &Digraph, density: f64, seed: u64, rho1: f64, rho2: f64) -> DigraphOutcome {
    let n = h.n();
    let mut out = DigraphOutcome {
        hamiltonian: false,
        cycle: None,
        failure: None,
        matching_size: 0,
        strongly_connected: false,
        initial_cycles: 0,
        r1: Vec::new(),
        consumed: Vec::new(),
        phases: Vec::new(),
    };
    if n < 2 {
        out.failure = Some(DigraphStage::Degenerate);
        return out;
    }
    let r1_size = ((rho1 * n as f64).ceil() as u64).min(h.complement_size());
    out.r1 = EdgeStream::new(Ground::Arcs(h), SampleMode::ExactM(r1_size), derive_seed(seed, 0, "r1"))
        .expect("R1 is capped at the complement")
        .collect_all();
    let mut h1 = h.clone();
    for &(u, v) in &out.r1 {
        h1.add_arc(u, v);
    }

    let m = max_matching(&bipartite_double(&h1));
    out.matching_size = m.size();
    if !m.is_perfect() {
        out.failure = Some(DigraphStage::Matching);
        return out;
    }
    out.strongly_connected = is_strongly_connected(&h1);
    let mut cover = cycle_cover(&h1, &m).expect("perfect matching gives a cover");
    out.initial_cycles = cover.len();
    if cover.len() > 1 && !out.strongly_connected {
        out.failure = Some(DigraphStage::Connectivity);
        return out;
    }

    let budget = (rho2 * n as f64).ceil() as u64;
    let mut stream = EdgeStream::replacement(Ground::Arcs(&h1), derive_seed(seed, 0, "r2"));
    let mut work = h1.clone();
    while cover.len() > 1 {
        let before = cover.len();
        let mut ncc = match ncc_init(&work, &cover) {
            Ok(ncc) => ncc,
            Err(_) => {
                out.failure = Some(DigraphStage::Connectivity);
                return out;
            }
        };
        let mut extensions = 0;
        let mut family = loop {
            while let Some(next) = out_extend(&work, &ncc).or_else(|| in_extend(&work, &ncc)) {
                debug_assert!(next.verify(&work));
                ncc = next;
                extensions += 1;
            }
            let mut family = match rotation_family(&work, &ncc, density) {
                Ok(f) => f,
                Err(_) => {
                    out.failure = Some(DigraphStage::RotationFamily);
                    return out;
                }
            };
            if ncc.cycles.is_empty() {
                break family;
            }
            let at = ncc.cycle_index(n);
            let reaches_cycle = |v: Vertex| work.out_neighbors(v).iter().any(|&w| at[w].is_some());
            let entered_from_cycle = |v: Vertex| work.in_neighbors(v).iter().any(|&w| at[w].is_some());
            if let Some(q) = family.paths.values().find(|q| reaches_cycle(*q.last().unwrap())) {
                ncc.path = q.clone();
                continue;
            }
            let vs: Vec<Vertex> = family.paths.keys().copied().collect();
            let mut switched = false;
            for v in vs {
                if let Some(q) = family.second_level(&work, v).iter().find(|q| entered_from_cycle(q[0])) {
                    ncc.path = q.clone();
                    switched = true;
                    break;
                }
            }
            if !switched {
                break family;
            }
        };

        let (next, cost) = match close_for_free(&work, &ncc, &mut family) {
            Some(c) => (c, 0),
            None => {
                let remaining = budget - out.consumed.len() as u64;
                let closure = close_with_stream(&work, &ncc, &mut family, &mut stream, remaining);
                for &(u, v) in &closure.consumed {
                    work.add_arc(u, v);
                }
                let cost = closure.consumed.len() as u64;
                out.consumed.extend(closure.consumed);
                match closure.cover {
                    Some(c) => (c, cost),
                    None => {
                        out.failure = Some(DigraphStage::Budget);
                        return out;
                    }
                }
            }
        };
        debug_assert!(next.verify(&work));
        out.phases.push(DigraphPhase {
            cycles_before: before,
            cycles_after: next.len(),
            extensions,
            t_prime: family.t_prime.len(),
            stream_cost: cost,
        });
        cover = next;
    }
    let cycle = cover.cycles.pop().unwrap();
    debug_assert!(verify_directed_hamilton_cycle(&work, &cycle));
    out.hamiltonian = true;
    out.cycle = Some(cycle);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Q2Report {
    pub samples: u64,
    /// `min |N±(S) ∩ T| / |T|` over samples and both directions.
    pub min_ratio: f64,
    pub below_half: u64,
}

/// Samples disjoint `S`, `T` with `|S|, |T| >= ceil(d n / 2)` and measures
/// `|N+(S) ∩ T| / |T|` and `|N-(S) ∩ T| / |T|`.
pub fn q2_check(dg: &Digraph, trials: u64, density: f64, seed: u64) -> Q2Report {
    let n = dg.n();
    let h = ((density * n as f64 / 2.0).ceil() as usize).max(1);
    let mut report = Q2Report {
        samples: 0,
        min_ratio: f64::INFINITY,
        below_half: 0,
    };
    if 2 * h > n {
        return report;
    }
    let rows: Vec<FixedBitSet> = (0..n)
        .map(|v| {
            let mut row = FixedBitSet::with_capacity(n);
            for &w in dg.out_neighbors(v) {
                row.insert(w);
            }
            row
        })
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut pool: Vec<Vertex> = (0..n).collect();
    for _ in 0..trials {
        let s_size = rng.gen_range(h..=n - h);
        let t_size = rng.gen_range(h..=n - s_size);
        for i in 0..s_size + t_size {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        let (s, rest) = pool.split_at(s_size);
        let t = &rest[..t_size];
        let mut s_set = FixedBitSet::with_capacity(n);
        let mut out_union = FixedBitSet::with_capacity(n);
        for &v in s {
            s_set.insert(v);
            out_union.union_with(&rows[v]);
        }
        let plus = t.iter().filter(|&&v| out_union.contains(v)).count();
        let minus = t.iter().filter(|&&v| !rows[v].is_disjoint(&s_set)).count();
        let ratio = plus.min(minus) as f64 / t_size as f64;
        report.samples += 1;
        if 2 * plus.min(minus) < t_size {
            report.below_half += 1;
        }
        report.min_ratio = report.min_ratio.min(ratio);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digraph(n: usize, arcs: &[Edge]) -> Digraph {
        Digraph::from_arc_list(n, arcs).unwrap()
    }

    fn complete(n: usize) -> Digraph {
        let mut d = Digraph::new(n);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    d.add_arc(u, v);
                }
            }
        }
        d
    }

    #[test]
    fn doubles() {
        let tri = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(bipartite_double(&tri).edges(), vec![(0, 4), (1, 5), (2, 3)]);
        let pair = digraph(2, &[(0, 1), (1, 0)]);
        assert_eq!(bipartite_double(&pair).edges(), vec![(0, 3), (1, 2)]);
        assert_eq!(bipartite_double(&Digraph::new(4)).edge_count(), 0);
    }

    #[test]
    fn matchings() {
        let tri = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let m = max_matching(&bipartite_double(&tri));
        assert_eq!(m.size(), 3);
        assert_eq!(m.pair_of_left, vec![Some(1), Some(2), Some(0)]);
        // Vertex 0 has no in-arcs.
        let src = digraph(3, &[(0, 1), (1, 2), (2, 1)]);
        let m = max_matching(&bipartite_double(&src));
        assert!(m.size() < 3);
        assert!(!m.is_perfect());
    }

    #[test]
    fn covers_from_matchings() {
        let tri = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let m = max_matching(&bipartite_double(&tri));
        let c = cycle_cover(&tri, &m).unwrap();
        assert_eq!(c.cycles, vec![vec![0, 1, 2]]);
        assert_eq!(c.to_matching(3), m);
        let pair = digraph(2, &[(0, 1), (1, 0)]);
        let c = cycle_cover(&pair, &max_matching(&bipartite_double(&pair))).unwrap();
        assert_eq!(c.cycles, vec![vec![0, 1]]);
        assert!(c.verify(&pair));
        let bad = Matching {
            pair_of_left: vec![Some(1), None, Some(0)],
        };
        assert!(cycle_cover(&tri, &bad).is_err());
    }

    #[test]
    fn strong_connectivity() {
        assert!(is_strongly_connected(&digraph(3, &[(0, 1), (1, 2), (2, 0)])));
        assert!(!is_strongly_connected(&digraph(3, &[(0, 1), (1, 2)])));
        let kab = crate::generators::bidirected_complete_bipartite(10, 0.3).unwrap();
        assert!(is_strongly_connected(&kab));
    }

    fn two_triangles() -> (Digraph, CycleCover) {
        let d = digraph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]);
        let cover = CycleCover::new(vec![vec![0, 1, 2], vec![3, 4, 5]]);
        (d, cover)
    }

    #[test]
    fn ncc_init_merges_two_cycles() {
        let (d, cover) = two_triangles();
        let ncc = ncc_init(&d, &cover).unwrap();
        assert_eq!(ncc.path, vec![0, 1, 2, 3, 4, 5]);
        assert!(ncc.cycles.is_empty());
        assert!(ncc.verify(&d));
        let single = CycleCover::new(vec![vec![0, 1, 2, 3, 4, 5]]);
        assert!(ncc_init(&d, &single).is_err());
    }

    #[test]
    fn ncc_init_picks_smallest_bridge() {
        let d = Digraph::bidirected(&crate::generators::complete_bipartite(4, 0.5).unwrap());
        // 2-cycles {0,2} and {1,3}; smallest bridging arc is (0, 3).
        let cover = CycleCover::new(vec![vec![0, 2], vec![1, 3]]);
        assert!(cover.verify(&d));
        let ncc = ncc_init(&d, &cover).unwrap();
        assert_eq!(ncc.path, vec![2, 0, 3, 1]);
    }

    #[test]
    fn path_extensions() {
        let d = digraph(5, &[(0, 1), (2, 3), (3, 4), (4, 2), (1, 3)]);
        let ncc = NearCycleCover {
            path: vec![0, 1],
            cycles: vec![vec![2, 3, 4]],
        };
        let ext = out_extend(&d, &ncc).unwrap();
        assert_eq!(ext.path, vec![0, 1, 3, 4, 2]);
        assert!(ext.cycles.is_empty());
        assert!(ext.verify(&d));
        assert!(in_extend(&d, &ncc).is_none());

        let d = digraph(5, &[(0, 1), (2, 3), (3, 4), (4, 2), (4, 0)]);
        assert!(out_extend(&d, &ncc).is_none());
        let ext = in_extend(&d, &ncc).unwrap();
        assert_eq!(ext.path, vec![2, 3, 4, 0, 1]);
        assert!(ext.verify(&d));
    }

    /// Path 0..9 with arcs (9, 3) and (2, 8): i = 3, j = 8.
    fn planted() -> (Digraph, NearCycleCover) {
        let mut arcs: Vec<Edge> = (0..9).map(|i| (i, i + 1)).collect();
        arcs.extend([(9, 3), (2, 8)]);
        let d = digraph(10, &arcs);
        let ncc = NearCycleCover {
            path: (0..10).collect(),
            cycles: vec![],
        };
        (d, ncc)
    }

    #[test]
    fn rotation_family_matches_two_arc_formula() {
        let (d, ncc) = planted();
        // d n / 2 = 2 -> T = {u7, u8, u9}.
        let fam = rotation_family(&d, &ncc, 0.4).unwrap();
        assert_eq!(fam.threshold, 2);
        assert_eq!(fam.s, vec![2]);
        assert_eq!(fam.t, vec![7, 8, 9]);
        assert_eq!(fam.t_prime, vec![8]);
        assert_eq!(fam.lambda[&8], 2);
        // Q + (u9, u3) - (u2, u3) + (u2, u8) - (u7, u8).
        let expected = vec![0, 1, 2, 8, 9, 3, 4, 5, 6, 7];
        assert_eq!(fam.paths[&8], expected);
        assert_eq!(fam.end_of(8), Some(7));
        let mut vs = fam.paths[&8].clone();
        vs.sort();
        assert_eq!(vs, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn rotation_family_needs_back_arcs() {
        let d = digraph(6, &(0..5).map(|i| (i, i + 1)).collect::<Vec<_>>());
        let ncc = NearCycleCover {
            path: (0..6).collect(),
            cycles: vec![],
        };
        assert!(rotation_family(&d, &ncc, 0.3).is_err());
    }

    #[test]
    fn second_level_family_has_distinct_starts() {
        let (mut d, ncc) = planted();
        // Q_8 = [0,1,2,8,9,3,4,5,6,7]; arcs into its start from position
        // i >= 2 and a matching (start-side) arc give a mirrored rotation.
        d.add_arc(3, 0);
        d.add_arc(0, 8);
        d.add_arc(1, 4);
        let mut fam = rotation_family(&d, &ncc, 0.4).unwrap();
        let family = fam.second_level(&d, 8).to_vec();
        assert!(!family.is_empty());
        let starts: Vec<_> = family.iter().map(|p| p[0]).collect();
        let mut dedup = starts.clone();
        dedup.dedup();
        assert_eq!(starts, dedup);
        for p in &family {
            assert_eq!(*p.last().unwrap(), 7);
            assert!(p.windows(2).all(|w| d.has_arc(w[0], w[1])), "{p:?}");
            let mut vs = p.clone();
            vs.sort();
            assert_eq!(vs, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn closure_with_planted_arc() {
        let (d, ncc) = planted();
        let mut fam = rotation_family(&d, &ncc, 0.4).unwrap();
        assert!(close_for_free(&d, &ncc, &mut fam).is_none());
        // Closing arc for Q_8 itself: (7, 0).
        let mut ground = d.clone();
        let all: Vec<Edge> = (0..10)
            .flat_map(|u| (0..10).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && !d.has_arc(u, v) && (u, v) != (7, 0))
            .collect();
        for (u, v) in all {
            ground.add_arc(u, v);
        }
        // Only (7, 0) remains in the complement, so the first draw closes.
        let mut stream = EdgeStream::replacement(Ground::Arcs(&ground), 5);
        let closure = close_with_stream(&d, &ncc, &mut fam, &mut stream, 10);
        assert_eq!(closure.consumed, vec![(7, 0)]);
        let cover = closure.cover.unwrap();
        assert_eq!(cover.len(), 1);
        let mut aug = d.clone();
        aug.add_arc(7, 0);
        assert!(cover.verify(&aug));

        let mut stream = EdgeStream::replacement(Ground::Arcs(&ground), 5);
        let closure = close_with_stream(&d, &ncc, &mut fam, &mut stream, 0);
        assert!(closure.cover.is_none());
        assert!(closure.consumed.is_empty());
    }

    #[test]
    fn bidirected_complete_is_free() {
        let h = complete(12);
        for seed in 0..5 {
            let out = hamilton(&h, 0.5, seed, 10.0, 10.0);
            assert!(out.hamiltonian, "{:?}", out.failure);
            assert!(out.r1.is_empty());
            assert_eq!(out.r2_consumed(), 0);
            assert!(verify_directed_hamilton_cycle(&h, out.cycle.as_ref().unwrap()));
        }
    }

    #[test]
    fn matching_stage_failure() {
        // Vertex 0 has no in-arcs and every other arc is present: H itself
        // has no cover, and with no random arcs none can appear.
        let mut h = complete(6);
        h = digraph(6, &h.arcs().filter(|&(_, v)| v != 0).collect::<Vec<_>>());
        let out = hamilton(&h, 0.5, 1, 0.0, 10.0);
        assert_eq!(out.failure, Some(DigraphStage::Matching));
        assert!(!out.hamiltonian);
    }

    #[test]
    fn q2_extremes() {
        let r = q2_check(&complete(20), 200, 0.3, 1);
        assert_eq!(r.min_ratio, 1.0);
        assert_eq!(r.samples, 200);
        let r = q2_check(&Digraph::new(20), 50, 0.3, 1);
        assert_eq!(r.min_ratio, 0.0);
        assert_eq!(r.below_half, 50);
    }
}
