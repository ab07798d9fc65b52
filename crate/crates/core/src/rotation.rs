//! Pósa rotations, END closures and the random-edge sprinkling process.
//!
//! A rotation of a path `x0 .. v w .. y` along an edge `{y, v}` (with `v`
//! internal and not the predecessor of `y`) yields `x0 .. v y .. w`: the
//! suffix after `v` is reversed and `w` becomes the new free endpoint. END
//! closures explore rotations breadth-first, keeping one representative path
//! per newly discovered endpoint (ties broken by ascending pivot id); the
//! representative is stored as a parent pointer so it can be replayed.

use std::collections::{HashMap, VecDeque};
use std::ops::ControlFlow;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, UndirectedGraph, Vertex};
use crate::sample::{derive_seed, rng_from_seed, EdgeStream};

const NONE: Vertex = usize::MAX;

/// Second-level closures examined per stuck phase when looking for a
/// closing edge that is already present in the working graph.
pub const SECOND_LEVEL_SCAN: usize = 8;

/// A simple path; the first vertex is the fixed endpoint `x0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathState {
    vertices: Vec<Vertex>,
}

impl PathState {
    /// Wraps a vertex sequence. Panics on an empty sequence.
    pub fn new(vertices: Vec<Vertex>) -> Self {
        assert!(!vertices.is_empty(), "a path has at least one vertex");
        Self { vertices }
    }

    /// Wraps a vertex sequence after checking it is a simple path of `g`.
    pub fn checked(g: &UndirectedGraph, vertices: Vec<Vertex>) -> Result<Self> {
        let p = Self::new(vertices);
        if !p.is_valid_in(g) {
            return Err(Error::Precondition(format!(
                "{:?} is not a simple path of the host graph",
                p.vertices
            )));
        }
        Ok(p)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vertex> {
        self.vertices
    }

    pub fn x0(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn end(&self) -> Vertex {
        *self.vertices.last().unwrap()
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of edges.
    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    pub fn is_valid_in(&self, g: &UndirectedGraph) -> bool {
        let mut seen = FixedBitSet::with_capacity(g.n());
        for &v in &self.vertices {
            if v >= g.n() || seen.put(v) {
                return false;
            }
        }
        self.vertices.windows(2).all(|w| g.has_edge(w[0], w[1]))
    }
}

/// Rotates `path` (free endpoint `y`) along the edge `{y, v}`.
pub fn rotate(g: &UndirectedGraph, path: &PathState, y: Vertex, v: Vertex) -> Result<PathState> {
    let verts = path.vertices();
    let len = verts.len();
    if path.end() != y || len < 2 {
        return Err(Error::Precondition(format!("{y} is not the free endpoint of the path")));
    }
    if !g.has_edge(y, v) {
        return Err(Error::Precondition(format!("{{{y}, {v}}} is not an edge")));
    }
    let i = verts
        .iter()
        .position(|&u| u == v)
        .ok_or_else(|| Error::Precondition(format!("{v} is not on the path")))?;
    if i == 0 {
        return Err(Error::Precondition(format!(
            "{v} is the fixed endpoint; the edge closes a cycle instead"
        )));
    }
    if i + 2 >= len {
        return Err(Error::Precondition(format!(
            "{v} is {y} or its predecessor on the path"
        )));
    }
    let mut out = verts.to_vec();
    out[i + 1..].reverse();
    Ok(PathState { vertices: out })
}

/// Breadth-first rotation tree rooted at a path with fixed first vertex.
#[derive(Clone, Debug)]
pub(crate) struct RotationTree {
    root: Vec<Vertex>,
    /// Endpoints in discovery order; the root's endpoint comes first.
    order: Vec<Vertex>,
    /// `parent[e] = (parent endpoint, pivot)`; `(NONE, NONE)` for the root
    /// endpoint and for undiscovered vertices.
    parent: Vec<(Vertex, Vertex)>,
    member: FixedBitSet,
}

impl RotationTree {
    pub(crate) fn contains(&self, e: Vertex) -> bool {
        self.member.contains(e)
    }

    pub(crate) fn order(&self) -> &[Vertex] {
        &self.order
    }

    pub(crate) fn root(&self) -> &[Vertex] {
        &self.root
    }

    /// Pivots applied from the root to reach `e`'s representative path.
    pub(crate) fn pivots(&self, e: Vertex) -> Vec<Vertex> {
        let mut out = Vec::new();
        let mut cur = e;
        while self.parent[cur].0 != NONE {
            out.push(self.parent[cur].1);
            cur = self.parent[cur].0;
        }
        out.reverse();
        out
    }

    /// Replays the rotation sequence that discovered `e`.
    pub(crate) fn witness(&self, e: Vertex) -> Vec<Vertex> {
        debug_assert!(self.contains(e));
        let mut path = self.root.clone();
        for v in self.pivots(e) {
            let i = path.iter().position(|&u| u == v).unwrap();
            path[i + 1..].reverse();
        }
        path
    }
}

/// Explores rotations from `root` (first vertex fixed). `visit` sees every
/// newly discovered endpoint together with its representative path and may
/// stop the search early.
pub(crate) fn explore<B>(
    g: &UndirectedGraph,
    root: Vec<Vertex>,
    mut visit: impl FnMut(Vertex, &[Vertex]) -> ControlFlow<B>,
) -> (RotationTree, Option<B>) {
    let n = g.n();
    let mut tree = RotationTree {
        root: Vec::new(),
        order: Vec::new(),
        parent: vec![(NONE, NONE); n],
        member: FixedBitSet::with_capacity(n),
    };
    let len = root.len();
    if len < 2 {
        tree.root = root;
        return (tree, None);
    }
    let first = *root.last().unwrap();
    tree.member.insert(first);
    tree.order.push(first);
    if let ControlFlow::Break(b) = visit(first, &root) {
        tree.root = root;
        return (tree, Some(b));
    }
    let mut pos = vec![NONE; n];
    let mut queue = VecDeque::new();
    queue.push_back(root.clone());
    tree.root = root;
    while let Some(path) = queue.pop_front() {
        for (i, &v) in path.iter().enumerate() {
            pos[v] = i;
        }
        let y = path[len - 1];
        for &v in g.neighbors(y) {
            let i = pos[v];
            // Internal pivots only, excluding the predecessor of y.
            if i == NONE || i == 0 || i + 2 >= len {
                continue;
            }
            let w = path[i + 1];
            if tree.member.put(w) {
                continue;
            }
            let mut child = path.clone();
            child[i + 1..].reverse();
            tree.parent[w] = (y, v);
            tree.order.push(w);
            if let ControlFlow::Break(b) = visit(w, &child) {
                return (tree, Some(b));
            }
            queue.push_back(child);
        }
        for &v in &path {
            pos[v] = NONE;
        }
    }
    (tree, None)
}

/// Endpoints reachable by rotations with `x0` fixed, with one replayable
/// representative path each.
#[derive(Clone, Debug)]
pub struct EndClosure {
    pub x0: Vertex,
    /// Endpoints in breadth-first discovery order; never contains `x0`.
    pub ends: Vec<Vertex>,
    witness: HashMap<Vertex, PathState>,
    pivots: HashMap<Vertex, Vec<Vertex>>,
}

impl EndClosure {
    pub fn contains(&self, e: Vertex) -> bool {
        self.witness.contains_key(&e)
    }

    /// Representative path from `x0` to `e`.
    pub fn witness(&self, e: Vertex) -> Option<&PathState> {
        self.witness.get(&e)
    }

    /// Pivot vertices of the rotation sequence that produced `e`'s witness.
    pub fn rotation_sequence(&self, e: Vertex) -> Option<&[Vertex]> {
        self.pivots.get(&e).map(Vec::as_slice)
    }

    /// `END(P) = {x0} ∪ ends`, sorted.
    pub fn end_set(&self) -> Vec<Vertex> {
        let mut out = self.ends.clone();
        out.push(self.x0);
        out.sort_unstable();
        out
    }
}

fn oriented(path: &PathState, x0: Vertex) -> Result<Vec<Vertex>> {
    if path.x0() == x0 {
        Ok(path.vertices().to_vec())
    } else if path.end() == x0 {
        Ok(path.reversed().into_vertices())
    } else {
        Err(Error::Precondition(format!("{x0} is not an endpoint of the path")))
    }
}

/// Representative-path END closure of `path` with `x0` fixed.
pub fn end_closure(g: &UndirectedGraph, path: &PathState, x0: Vertex) -> Result<EndClosure> {
    let root = oriented(path, x0)?;
    let (tree, _) = explore::<()>(g, root, |_, _| ControlFlow::Continue(()));
    Ok(closure_from_tree(x0, &tree))
}

fn closure_from_tree(x0: Vertex, tree: &RotationTree) -> EndClosure {
    let mut witness = HashMap::new();
    let mut pivots = HashMap::new();
    for &e in tree.order() {
        witness.insert(e, PathState::new(tree.witness(e)));
        pivots.insert(e, tree.pivots(e));
    }
    EndClosure {
        x0,
        ends: tree.order().to_vec(),
        witness,
        pivots,
    }
}

/// Exhaustive END closure: every path reachable by any rotation sequence.
/// Exponential; intended for `n <= 12`.
pub fn end_closure_exhaustive(g: &UndirectedGraph, path: &PathState, x0: Vertex) -> Result<Vec<Vertex>> {
    if g.n() > 12 {
        return Err(Error::OracleLimit {
            oracle: "exhaustive END closure",
            n: g.n(),
            limit: 12,
        });
    }
    let root = PathState::new(oriented(path, x0)?);
    if root.vertex_count() < 2 {
        return Ok(Vec::new());
    }
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![root.clone()];
    seen.insert(root);
    let mut ends = std::collections::BTreeSet::new();
    while let Some(p) = stack.pop() {
        let y = p.end();
        ends.insert(y);
        for &v in g.neighbors(y) {
            if let Ok(q) = rotate(g, &p, y, v) {
                if seen.insert(q.clone()) {
                    stack.push(q);
                }
            }
        }
    }
    Ok(ends.into_iter().collect())
}

/// For each `a` in `END(x0, P)`: its witness `Q_a` and `END(a, Q_a)`.
///
/// Every `b` listed under `a` is certified: the witness in the second-level
/// closure runs from `a` to `b` through `V(P)`, so `{a, b}` closes a cycle.
/// Paths with fewer than three vertices yield nothing.
pub fn end_pairs(
    g: &UndirectedGraph,
    path: &PathState,
) -> std::collections::BTreeMap<Vertex, (PathState, Vec<Vertex>)> {
    let mut out = std::collections::BTreeMap::new();
    if path.vertex_count() < 3 {
        return out;
    }
    let first = end_closure(g, path, path.x0()).expect("x0 is an endpoint");
    for &a in &first.ends {
        let qa = first.witness(a).unwrap().clone();
        let second = end_closure(g, &qa, a).expect("a is an endpoint of its witness");
        out.insert(a, (qa, second.ends));
    }
    out
}

/// Appends off-path neighbors of the last vertex (smallest id first) until
/// none remain.
fn extend_greedily(g: &UndirectedGraph, path: &mut Vec<Vertex>, on_path: &mut FixedBitSet) -> bool {
    let mut grew = false;
    while let Some(&u) = g
        .neighbors(*path.last().unwrap())
        .iter()
        .find(|&&u| !on_path.contains(u))
    {
        on_path.insert(u);
        path.push(u);
        grew = true;
    }
    grew
}

fn first_off_path(g: &UndirectedGraph, v: Vertex, on_path: &FixedBitSet) -> Option<Vertex> {
    g.neighbors(v).iter().copied().find(|&u| !on_path.contains(u))
}

/// Rotations (first vertex fixed) until some endpoint has an off-path
/// neighbor; returns the extended path.
fn rotate_extend(g: &UndirectedGraph, root: Vec<Vertex>, on_path: &FixedBitSet) -> (RotationTree, Option<Vec<Vertex>>) {
    explore(g, root, |e, path| match first_off_path(g, e, on_path) {
        Some(u) => {
            let mut p = path.to_vec();
            p.push(u);
            ControlFlow::Break(p)
        }
        None => ControlFlow::Continue(()),
    })
}

/// A non-extendable path: greedy two-sided extension, restarted through
/// rotations from either end until neither endpoint has an off-path neighbor.
pub fn maximal_path(g: &UndirectedGraph, seed: u64) -> PathState {
    assert!(g.n() > 0, "maximal_path needs a nonempty graph");
    let mut rng = rng_from_seed(seed);
    let start = rng.gen_range(0..g.n());
    let mut on_path = FixedBitSet::with_capacity(g.n());
    on_path.insert(start);
    let mut path = vec![start];
    loop {
        extend_greedily(g, &mut path, &mut on_path);
        path.reverse();
        extend_greedily(g, &mut path, &mut on_path);
        path.reverse();
        if let (_, Some(p)) = rotate_extend(g, path.clone(), &on_path) {
            on_path.insert(*p.last().unwrap());
            path = p;
            continue;
        }
        let rev: Vec<_> = path.iter().rev().copied().collect();
        if let (_, Some(p)) = rotate_extend(g, rev, &on_path) {
            on_path.insert(*p.last().unwrap());
            path = p;
            continue;
        }
        return PathState::new(path);
    }
}

/// True iff `cycle` is a permutation of `V` and consecutive vertices
/// (including last-to-first) are adjacent. Needs `n >= 3`.
pub fn verify_hamilton_cycle(g: &UndirectedGraph, cycle: &[Vertex]) -> bool {
    let n = g.n();
    if n < 3 || cycle.len() != n {
        return false;
    }
    let mut seen = FixedBitSet::with_capacity(n);
    if cycle.iter().any(|&v| v >= n || seen.put(v)) {
        return false;
    }
    (0..n).all(|i| g.has_edge(cycle[i], cycle[(i + 1) % n]))
}

/// How a phase of the sprinkling process improved the current structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    /// Extension found with edges already present.
    GraphExtension,
    /// Closing pair found with edges already present.
    GraphClosure,
    /// A stream edge from an END vertex to an off-path vertex.
    StreamExtension,
    /// A stream edge joining a certified closing pair.
    StreamClosure,
    /// A stream edge leaving an isolated non-spanning cycle.
    StreamReopen,
    /// The budget (or the ground set) ran out before a hit.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub kind: PhaseKind,
    /// Vertices on the path when the phase started.
    pub path_vertices: usize,
    /// `|END(P)| = 1 + |END(x0, P)|`, when a complete first-level closure
    /// was computed during the phase.
    pub end_size: Option<usize>,
    /// Stream edges consumed in this phase (the `Y_i`).
    pub stream_cost: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SprinkleOutcome {
    pub hamiltonian: bool,
    pub cycle: Option<Vec<Vertex>>,
    /// Total stream edges consumed (`Z`).
    pub edges_consumed: u64,
    /// One entry per phase; sums to `edges_consumed`.
    pub phase_costs: Vec<u64>,
    pub phases: Vec<PhaseRecord>,
    /// Edges of the longest path held at the end (n - 1 on success).
    pub final_path_len: usize,
    /// The consumed stream prefix, in draw order.
    pub consumed: Vec<Edge>,
}

enum Step {
    Extend(Vec<Vertex>, PhaseKind),
    Close(Vec<Vertex>, PhaseKind),
    Stuck(Box<StuckPath>),
}

struct StuckPath {
    path_len: usize,
    x0: Vertex,
    first: RotationTree,
    on_path: FixedBitSet,
    second: HashMap<Vertex, RotationTree>,
}

impl StuckPath {
    fn second_level(&mut self, g: &UndirectedGraph, a: Vertex) -> &RotationTree {
        let first = &self.first;
        self.second.entry(a).or_insert_with(|| {
            let mut root = first.witness(a);
            root.reverse();
            explore::<()>(g, root, |_, _| ControlFlow::Continue(())).0
        })
    }

    fn in_end_set(&self, v: Vertex) -> bool {
        v == self.x0 || self.first.contains(v)
    }

    /// Path oriented to end at `a`, for `a` in `END(P)`.
    fn path_ending_at(&self, a: Vertex) -> Vec<Vertex> {
        if a == self.x0 {
            self.first.root().iter().rev().copied().collect()
        } else {
            self.first.witness(a)
        }
    }

    /// Tests a stream edge against the structure of the graph `g` it was
    /// drawn into (before it is added).
    fn hit(&mut self, g: &UndirectedGraph, (u, v): Edge) -> Option<Step> {
        for (a, b) in [(u, v), (v, u)] {
            if self.in_end_set(a) && !self.on_path.contains(b) {
                let mut p = self.path_ending_at(a);
                p.push(b);
                return Some(Step::Extend(p, PhaseKind::StreamExtension));
            }
        }
        if self.path_len < 3 {
            return None;
        }
        for (a, b) in [(u, v), (v, u)] {
            if a == self.x0 && self.first.contains(b) {
                return Some(Step::Close(self.first.witness(b), PhaseKind::StreamClosure));
            }
        }
        for (a, b) in [(u, v), (v, u)] {
            if a != self.x0 && self.first.contains(a) {
                let tree = self.second_level(g, a);
                if tree.contains(b) {
                    return Some(Step::Close(tree.witness(b), PhaseKind::StreamClosure));
                }
            }
        }
        None
    }
}

/// Looks for an improvement using only edges already in `g`.
fn analyze(g: &UndirectedGraph, path: &[Vertex], end_size: &mut Option<usize>) -> Step {
    let n = g.n();
    let mut on_path = FixedBitSet::with_capacity(n);
    for &v in path {
        on_path.insert(v);
    }
    let mut p = path.to_vec();
    let mut grown = on_path.clone();
    let mut grew = extend_greedily(g, &mut p, &mut grown);
    p.reverse();
    grew |= extend_greedily(g, &mut p, &mut grown);
    if grew {
        p.reverse();
        return Step::Extend(p, PhaseKind::GraphExtension);
    }

    let x0 = path[0];
    let (first, ext) = rotate_extend(g, path.to_vec(), &on_path);
    if let Some(p) = ext {
        return Step::Extend(p, PhaseKind::GraphExtension);
    }
    *end_size = Some(1 + first.order().len());
    if path.len() >= 3 {
        if let Some(&e) = first.order().iter().find(|&&e| g.has_edge(x0, e)) {
            return Step::Close(first.witness(e), PhaseKind::GraphClosure);
        }
    }

    let mut stuck = StuckPath {
        path_len: path.len(),
        x0,
        first,
        on_path,
        second: HashMap::new(),
    };
    if path.len() >= 3 {
        let scan: Vec<Vertex> = stuck.first.order().iter().take(SECOND_LEVEL_SCAN).copied().collect();
        for a in scan {
            let mut root = stuck.first.witness(a);
            root.reverse();
            let (tree, ext) = rotate_extend(g, root, &stuck.on_path);
            if let Some(p) = ext {
                return Step::Extend(p, PhaseKind::GraphExtension);
            }
            if let Some(&b) = tree.order().iter().find(|&&b| g.has_edge(a, b)) {
                return Step::Close(tree.witness(b), PhaseKind::GraphClosure);
            }
            stuck.second.insert(a, tree);
        }
    }
    Step::Stuck(Box::new(stuck))
}

/// Opens a non-spanning cycle through an edge to an outside vertex
/// (smallest cycle vertex, then smallest outside neighbor).
fn reopen(g: &UndirectedGraph, cycle: &[Vertex]) -> Option<Vec<Vertex>> {
    let mut inside = FixedBitSet::with_capacity(g.n());
    for &v in cycle {
        inside.insert(v);
    }
    let mut order: Vec<usize> = (0..cycle.len()).collect();
    order.sort_unstable_by_key(|&i| cycle[i]);
    order
        .into_iter()
        .find_map(|i| first_off_path(g, cycle[i], &inside).map(|u| open_at(cycle, i, u)))
}

/// The cycle as a path ending at `cycle[i]`, followed by `u`.
fn open_at(cycle: &[Vertex], i: usize, u: Vertex) -> Vec<Vertex> {
    let mut p: Vec<Vertex> = cycle[i + 1..].iter().chain(&cycle[..=i]).copied().collect();
    p.push(u);
    p
}

/// Runs the sprinkling process on `g`, drawing from `stream` only when the
/// edges already present cannot extend the path or close a cycle.
///
/// The stream should draw with replacement from the complement of the
/// original host; drawn edges already present still count as consumed.
pub fn sprinkle(g: &UndirectedGraph, stream: &mut EdgeStream<'_>, budget: u64) -> SprinkleOutcome {
    let n = g.n();
    let mut out = SprinkleOutcome {
        hamiltonian: false,
        cycle: None,
        edges_consumed: 0,
        phase_costs: Vec::new(),
        phases: Vec::new(),
        final_path_len: 0,
        consumed: Vec::new(),
    };
    if n == 0 {
        return out;
    }
    let mut work = g.clone();
    let mut path = maximal_path(&work, derive_seed(stream.seed(), 0, "start")).into_vertices();
    if n < 3 {
        out.final_path_len = path.len() - 1;
        return out;
    }

    loop {
        let mut end_size = None;
        let step = analyze(&work, &path, &mut end_size);
        let phase_start = path.len();
        let record = |out: &mut SprinkleOutcome, kind, cost| {
            out.phases.push(PhaseRecord {
                kind,
                path_vertices: phase_start,
                end_size,
                stream_cost: cost,
            });
            out.phase_costs.push(cost);
        };

        // Either an improvement from graph edges, or a stuck structure to
        // test stream edges against.
        let (improvement, cost) = match step {
            Step::Stuck(mut stuck) => {
                let mut cost = 0;
                let hit = loop {
                    if out.edges_consumed >= budget {
                        break None;
                    }
                    let Some(e) = stream.next() else { break None };
                    cost += 1;
                    out.edges_consumed += 1;
                    out.consumed.push(e);
                    let hit = stuck.hit(&work, e);
                    work.add_edge(e.0, e.1);
                    if hit.is_some() {
                        break hit;
                    }
                };
                match hit {
                    Some(step) => (step, cost),
                    None => {
                        if cost > 0 {
                            record(&mut out, PhaseKind::Exhausted, cost);
                        }
                        out.final_path_len = path.len() - 1;
                        return out;
                    }
                }
            }
            other => (other, 0),
        };

        match improvement {
            Step::Extend(p, kind) => {
                debug_assert!(p.len() > path.len());
                debug_assert!(PathState::new(p.clone()).is_valid_in(&work));
                record(&mut out, kind, cost);
                path = p;
            }
            Step::Close(cycle, kind) => {
                debug_assert_eq!(cycle.len(), path.len());
                record(&mut out, kind, cost);
                if cycle.len() == n {
                    debug_assert!(verify_hamilton_cycle(&work, &cycle));
                    out.hamiltonian = true;
                    out.final_path_len = n - 1;
                    out.cycle = Some(cycle);
                    return out;
                }
                match reopen(&work, &cycle) {
                    Some(p) => path = p,
                    None => match reopen_from_stream(&mut work, &cycle, stream, budget, &mut out) {
                        Some(p) => path = p,
                        None => {
                            out.final_path_len = path.len() - 1;
                            return out;
                        }
                    },
                }
            }
            Step::Stuck(_) => unreachable!(),
        }
    }
}

/// Consumes stream edges until one leaves the (isolated) cycle.
fn reopen_from_stream(
    work: &mut UndirectedGraph,
    cycle: &[Vertex],
    stream: &mut EdgeStream<'_>,
    budget: u64,
    out: &mut SprinkleOutcome,
) -> Option<Vec<Vertex>> {
    let mut inside = FixedBitSet::with_capacity(work.n());
    for &v in cycle {
        inside.insert(v);
    }
    let mut cost = 0;
    let result = loop {
        if out.edges_consumed >= budget {
            break None;
        }
        let Some((u, v)) = stream.next() else { break None };
        cost += 1;
        out.edges_consumed += 1;
        out.consumed.push((u, v));
        work.add_edge(u, v);
        let (a, b) = match (inside.contains(u), inside.contains(v)) {
            (true, false) => (u, v),
            (false, true) => (v, u),
            _ => continue,
        };
        let i = cycle.iter().position(|&c| c == a).unwrap();
        break Some(open_at(cycle, i, b));
    };
    if cost > 0 {
        out.phases.push(PhaseRecord {
            kind: if result.is_some() {
                PhaseKind::StreamReopen
            } else {
                PhaseKind::Exhausted
            },
            path_vertices: cycle.len(),
            end_size: None,
            stream_cost: cost,
        });
        out.phase_costs.push(cost);
    }
    result
}

/// Result of sampling vertex sets and measuring `|N(S)| / |S|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub samples: u64,
    pub exhaustive: bool,
    pub size_cap: usize,
    pub min_ratio: f64,
    /// A set attaining `min_ratio`.
    pub worst_set: Vec<Vertex>,
    /// Samples with `|N(S)| < 3|S|`.
    pub below_three: u64,
}

/// Samples random `S` with `1 <= |S| <= size_cap` (size uniform, then a
/// uniform subset) and reports the smallest expansion ratio seen. For
/// `n <= 20` every such subset is enumerated instead.
pub fn expansion_check(g: &UndirectedGraph, trials: u64, size_cap: Option<usize>, seed: u64) -> ExpansionReport {
    let n = g.n();
    let cap = size_cap.unwrap_or(n / 5).min(n);
    let mut report = ExpansionReport {
        samples: 0,
        exhaustive: n <= 20,
        size_cap: cap,
        min_ratio: f64::INFINITY,
        worst_set: Vec::new(),
        below_three: 0,
    };
    if cap == 0 {
        return report;
    }
    let observe = |set: &[Vertex], report: &mut ExpansionReport| {
        let k = g.neighborhood_size(set);
        let ratio = k as f64 / set.len() as f64;
        report.samples += 1;
        if k < 3 * set.len() {
            report.below_three += 1;
        }
        if ratio < report.min_ratio {
            report.min_ratio = ratio;
            report.worst_set = set.to_vec();
        }
    };
    if report.exhaustive {
        for mask in 1u32..(1u32 << n) {
            if mask.count_ones() as usize <= cap {
                let set: Vec<Vertex> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                observe(&set, &mut report);
            }
        }
        return report;
    }
    let mut rng = rng_from_seed(seed);
    let mut pool: Vec<Vertex> = (0..n).collect();
    for _ in 0..trials {
        let size = rng.gen_range(1..=cap);
        // Partial Fisher-Yates for a uniform `size`-subset.
        for i in 0..size {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        let mut set = pool[..size].to_vec();
        set.sort_unstable();
        observe(&set, &mut report);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Ground;

    fn graph(n: usize, edges: &[Edge]) -> UndirectedGraph {
        UndirectedGraph::from_edge_list(n, edges).unwrap()
    }

    fn cycle(n: usize) -> UndirectedGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graph(n, &edges)
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
    fn rotate_reverses_suffix() {
        // 1-indexed example shifted: P = [1,2,3,4,5] with edge {5,2}.
        let mut g = UndirectedGraph::new(6);
        for (u, v) in [(1, 2), (2, 3), (3, 4), (4, 5), (5, 2)] {
            g.add_edge(u, v);
        }
        let p = PathState::new(vec![1, 2, 3, 4, 5]);
        let q = rotate(&g, &p, 5, 2).unwrap();
        assert_eq!(q.vertices(), &[1, 2, 5, 4, 3]);
        assert_eq!(q.end(), 3);
    }

    #[test]
    fn rotate_rejections() {
        let mut g = UndirectedGraph::new(5);
        for (u, v) in [(1, 2), (2, 3), (3, 1), (3, 4)] {
            g.add_edge(u, v);
        }
        let p = PathState::new(vec![1, 2, 3]);
        assert!(rotate(&g, &p, 3, 1).is_err());
        let p = PathState::new(vec![1, 2, 3, 4]);
        assert!(rotate(&g, &p, 4, 3).is_err());
        assert!(rotate(&g, &p, 2, 1).is_err());
    }

    #[test]
    fn closure_on_c5_is_trivial() {
        let c = end_closure(&cycle(5), &PathState::new(vec![0, 1, 2, 3, 4]), 0).unwrap();
        assert_eq!(c.ends, vec![4]);
        assert!(!c.contains(0));
    }

    #[test]
    fn closure_on_k4_matches_exhaustive_search() {
        let k4 = complete(4);
        let p = PathState::new(vec![0, 1, 2, 3]);
        let c = end_closure(&k4, &p, 0).unwrap();
        let mut ends = c.ends.clone();
        ends.sort();
        assert_eq!(ends, vec![2, 3]);
        assert_eq!(end_closure_exhaustive(&k4, &p, 0).unwrap(), vec![2, 3]);
        assert_eq!(c.witness(2).unwrap().vertices(), &[0, 1, 3, 2]);
        assert_eq!(c.rotation_sequence(2).unwrap(), &[1]);
    }

    #[test]
    fn closure_on_bare_path() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let c = end_closure(&g, &PathState::new(vec![0, 1, 2, 3]), 3).unwrap();
        assert_eq!(c.ends, vec![0]);
        assert!(end_closure(&g, &PathState::new(vec![0, 1, 2, 3]), 1).is_err());
    }

    #[test]
    fn end_pairs_on_c5() {
        let pairs = end_pairs(&cycle(5), &PathState::new(vec![0, 1, 2, 3, 4]));
        assert_eq!(pairs.len(), 1);
        let (qa, ends) = &pairs[&4];
        assert_eq!(qa.vertices(), &[0, 1, 2, 3, 4]);
        assert_eq!(ends, &vec![0]);
    }

    #[test]
    fn end_pairs_on_k4_close_spanning_cycles() {
        let k4 = complete(4);
        let p = PathState::new(vec![0, 1, 2, 3]);
        let pairs = end_pairs(&k4, &p);
        assert!(!pairs.is_empty());
        for (a, (qa, ends)) in &pairs {
            for &b in ends {
                let second = end_closure(&k4, qa, *a).unwrap();
                let w = second.witness(b).unwrap();
                assert_eq!(w.x0(), *a);
                assert_eq!(w.end(), b);
                let mut vs = w.vertices().to_vec();
                vs.sort();
                assert_eq!(vs, vec![0, 1, 2, 3]);
                assert!(verify_hamilton_cycle(&k4, w.vertices()));
            }
        }
    }

    #[test]
    fn end_pairs_degenerate_edge() {
        let k2 = graph(2, &[(0, 1)]);
        assert!(end_pairs(&k2, &PathState::new(vec![0, 1])).is_empty());
    }

    #[test]
    fn maximal_paths() {
        for seed in 0..10 {
            let p = maximal_path(&complete(4), seed);
            assert_eq!(p.length(), 3);
            let p = maximal_path(&cycle(5), seed);
            assert_eq!(p.length(), 4);
            assert!(p.is_valid_in(&cycle(5)));
            let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
            let p = maximal_path(&star, seed);
            assert_eq!(p.length(), 2);
            assert_eq!(p.vertices()[1], 0);
        }
    }

    #[test]
    fn hamilton_cycle_verification() {
        assert!(verify_hamilton_cycle(&cycle(5), &[0, 1, 2, 3, 4]));
        assert!(!verify_hamilton_cycle(&cycle(5), &[0, 2, 1, 3, 4]));
        assert!(!verify_hamilton_cycle(&complete(4), &[0, 1, 2]));
        assert!(!verify_hamilton_cycle(&complete(4), &[0, 1, 2, 2]));
    }

    #[test]
    fn sprinkle_uses_no_stream_on_hamiltonian_hosts() {
        for g in [complete(12), cycle(15)] {
            for seed in 0..5 {
                let mut stream = EdgeStream::replacement(Ground::Edges(&g), seed);
                let out = sprinkle(&g, &mut stream, 100);
                assert!(out.hamiltonian);
                assert_eq!(out.edges_consumed, 0);
                assert!(verify_hamilton_cycle(&g, out.cycle.as_ref().unwrap()));
            }
        }
    }

    #[test]
    fn sprinkle_completes_a_path_with_stream_edges() {
        let g = graph(10, &(0..9).map(|i| (i, i + 1)).collect::<Vec<_>>());
        for seed in 0..20 {
            let mut stream = EdgeStream::replacement(Ground::Edges(&g), seed);
            let out = sprinkle(&g, &mut stream, 10_000);
            assert!(out.hamiltonian);
            assert_eq!(out.edges_consumed, out.phase_costs.iter().sum::<u64>());
            assert_eq!(out.edges_consumed as usize, out.consumed.len());
            let mut aug = g.clone();
            for &(u, v) in &out.consumed {
                aug.add_edge(u, v);
            }
            assert!(verify_hamilton_cycle(&aug, out.cycle.as_ref().unwrap()));
            let sizes: Vec<_> = out.phases.iter().map(|p| p.path_vertices).collect();
            assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn sprinkle_budget_exhaustion_is_an_outcome() {
        let g = UndirectedGraph::new(8);
        let mut stream = EdgeStream::replacement(Ground::Edges(&g), 3);
        let out = sprinkle(&g, &mut stream, 5);
        assert!(!out.hamiltonian);
        assert_eq!(out.edges_consumed, 5);
        assert_eq!(out.phase_costs.iter().sum::<u64>(), 5);
    }

    #[test]
    fn sprinkle_reopens_isolated_cycles() {
        // Two disjoint triangles: any cycle found is isolated.
        let g = graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        for seed in 0..20 {
            let mut stream = EdgeStream::replacement(Ground::Edges(&g), seed);
            let out = sprinkle(&g, &mut stream, 10_000);
            assert!(out.hamiltonian);
            let mut aug = g.clone();
            for &(u, v) in &out.consumed {
                aug.add_edge(u, v);
            }
            assert!(verify_hamilton_cycle(&aug, out.cycle.as_ref().unwrap()));
        }
    }

    #[test]
    fn expansion_on_small_graphs() {
        let r = expansion_check(&complete(10), 0, Some(2), 0);
        assert!(r.exhaustive);
        assert!(r.min_ratio >= 3.0);
        assert_eq!(r.samples, 10 + 45);
        let r = expansion_check(&cycle(10), 0, Some(2), 0);
        assert_eq!(r.min_ratio, 1.0);
        assert_eq!(r.worst_set.len(), 2);
        assert_eq!(cycle(10).neighborhood_size(&[3, 4]), 2);
    }

    #[test]
    fn expansion_sampling_path() {
        let g = complete(40);
        let r = expansion_check(&g, 500, None, 1);
        assert!(!r.exhaustive);
        assert_eq!(r.samples, 500);
        assert_eq!(r.size_cap, 8);
        assert!(r.min_ratio >= 4.0);
        assert_eq!(r.below_three, 0);
    }
}
