//! Adjacency-set graphs and digraphs over dense vertex ids `0..n`.
//!
//! Neighbor lists are kept sorted so membership is a binary search; for
//! `n <= BITSET_MAX_N` every vertex additionally carries a bitset row so the
//! rotation and neighborhood loops can test adjacency in O(1).

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type Edge = (Vertex, Vertex);

/// Largest `n` for which bitset rows are built.
pub const BITSET_MAX_N: usize = 4096;

fn insert_sorted(list: &mut Vec<Vertex>, v: Vertex) -> bool {
    match list.binary_search(&v) {
        Ok(_) => false,
        Err(pos) => {
            list.insert(pos, v);
            true
        }
    }
}

fn bitset_rows(n: usize) -> Option<Vec<FixedBitSet>> {
    (n <= BITSET_MAX_N).then(|| vec![FixedBitSet::with_capacity(n); n])
}

/// Orders an undirected pair so the smaller id comes first.
#[inline]
pub fn normalize(u: Vertex, v: Vertex) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Clone, Debug)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<Vec<Vertex>>,
    rows: Option<Vec<FixedBitSet>>,
    edge_count: usize,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            adj: vec![Vec::new(); n],
            rows: bitset_rows(n),
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list, rejecting out-of-range ids,
    /// self-loops and duplicates (after normalizing to `u < v`).
    pub fn from_edge_list(n: usize, edges: &[Edge]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.try_add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Adds `{u, v}`; errors on invalid or duplicate edges.
    pub fn try_add_edge(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        for w in [u, v] {
            if w >= self.n {
                return Err(Error::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if !self.add_edge(u, v) {
            let (a, b) = normalize(u, v);
            return Err(Error::DuplicateEdge(a, b));
        }
        Ok(())
    }

    /// Adds `{u, v}` and returns whether it was new. Panics on a self-loop
    /// or an out-of-range id.
    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> bool {
        assert!(u < self.n && v < self.n, "vertex out of range");
        assert_ne!(u, v, "self-loop");
        if !insert_sorted(&mut self.adj[u], v) {
            return false;
        }
        insert_sorted(&mut self.adj[v], u);
        if let Some(rows) = self.rows.as_mut() {
            rows[u].insert(v);
            rows[v].insert(u);
        }
        self.edge_count += 1;
        true
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        match &self.rows {
            Some(rows) => rows[u].contains(v),
            None => self.adj[u].binary_search(&v).is_ok(),
        }
    }

    #[inline]
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    /// Bitset row of `v`, when rows are maintained.
    pub fn row(&self, v: Vertex) -> Option<&FixedBitSet> {
        self.rows.as_ref().map(|rows| &rows[v])
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Number of unordered non-edges `|[n]^(2) \ E|`.
    pub fn complement_size(&self) -> u64 {
        let n = self.n as u64;
        n * n.saturating_sub(1) / 2 - self.edge_count as u64
    }

    /// External neighborhood `{w not in S : w ~ s for some s in S}`, sorted.
    pub fn neighborhood(&self, set: &[Vertex]) -> Vec<Vertex> {
        let mut inside = FixedBitSet::with_capacity(self.n);
        for &s in set {
            inside.insert(s);
        }
        let mut out = FixedBitSet::with_capacity(self.n);
        match &self.rows {
            Some(rows) => {
                for &s in set {
                    out.union_with(&rows[s]);
                }
            }
            None => {
                for &s in set {
                    for &w in &self.adj[s] {
                        out.insert(w);
                    }
                }
            }
        }
        out.difference_with(&inside);
        out.ones().collect()
    }

    /// Size of the external neighborhood, without materializing it.
    pub fn neighborhood_size(&self, set: &[Vertex]) -> usize {
        self.neighborhood(set).len()
    }

    /// Subgraph induced on `vertices`; returns the graph together with the
    /// map from new ids back to original ids.
    pub fn induced(&self, vertices: &[Vertex]) -> (UndirectedGraph, Vec<Vertex>) {
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let mut sub = UndirectedGraph::new(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && i < j {
                    sub.add_edge(i, j);
                }
            }
        }
        (sub, vertices.to_vec())
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

#[derive(Clone, Debug)]
pub struct Digraph {
    n: usize,
    out_adj: Vec<Vec<Vertex>>,
    in_adj: Vec<Vec<Vertex>>,
    out_rows: Option<Vec<FixedBitSet>>,
    arc_count: usize,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            out_adj: vec![Vec::new(); n],
            in_adj: vec![Vec::new(); n],
            out_rows: bitset_rows(n),
            arc_count: 0,
        }
    }

    pub fn from_arc_list(n: usize, arcs: &[Edge]) -> Result<Self> {
        let mut d = Self::new(n);
        for &(u, v) in arcs {
            d.try_add_arc(u, v)?;
        }
        Ok(d)
    }

    /// Replaces every edge by an arc in both directions.
    pub fn bidirected(g: &UndirectedGraph) -> Self {
        let mut d = Self::new(g.n());
        for (u, v) in g.edges() {
            d.add_arc(u, v);
            d.add_arc(v, u);
        }
        d
    }

    pub fn try_add_arc(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        for w in [u, v] {
            if w >= self.n {
                return Err(Error::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if !self.add_arc(u, v) {
            return Err(Error::DuplicateEdge(u, v));
        }
        Ok(())
    }

    /// Adds the arc `u -> v` and returns whether it was new.
    pub fn add_arc(&mut self, u: Vertex, v: Vertex) -> bool {
        assert!(u < self.n && v < self.n, "vertex out of range");
        assert_ne!(u, v, "self-loop");
        if !insert_sorted(&mut self.out_adj[u], v) {
            return false;
        }
        insert_sorted(&mut self.in_adj[v], u);
        if let Some(rows) = self.out_rows.as_mut() {
            rows[u].insert(v);
        }
        self.arc_count += 1;
        true
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    #[inline]
    pub fn has_arc(&self, u: Vertex, v: Vertex) -> bool {
        match &self.out_rows {
            Some(rows) => rows[u].contains(v),
            None => self.out_adj[u].binary_search(&v).is_ok(),
        }
    }

    #[inline]
    pub fn out_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.out_adj[v]
    }

    #[inline]
    pub fn in_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.in_adj[v]
    }

    /// `min(delta+, delta-)`.
    pub fn min_degree(&self) -> usize {
        let out = self.out_adj.iter().map(Vec::len).min().unwrap_or(0);
        let inn = self.in_adj.iter().map(Vec::len).min().unwrap_or(0);
        out.min(inn)
    }

    pub fn arcs(&self) -> impl Iterator<Item = Edge> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    /// Number of ordered non-arcs `|[n]^2 \ A|` (loops excluded).
    pub fn complement_size(&self) -> u64 {
        let n = self.n as u64;
        n * n.saturating_sub(1) - self.arc_count as u64
    }

    pub fn transpose(&self) -> Digraph {
        let mut t = Digraph::new(self.n);
        for (u, v) in self.arcs() {
            t.add_arc(v, u);
        }
        t
    }

    pub fn out_neighborhood(&self, set: &[Vertex]) -> Vec<Vertex> {
        directed_neighborhood(self.n, set, &self.out_adj)
    }

    pub fn in_neighborhood(&self, set: &[Vertex]) -> Vec<Vertex> {
        directed_neighborhood(self.n, set, &self.in_adj)
    }
}

fn directed_neighborhood(n: usize, set: &[Vertex], adj: &[Vec<Vertex>]) -> Vec<Vertex> {
    let mut inside = FixedBitSet::with_capacity(n);
    for &s in set {
        inside.insert(s);
    }
    let mut out = FixedBitSet::with_capacity(n);
    for &s in set {
        for &t in &adj[s] {
            out.insert(t);
        }
    }
    out.difference_with(&inside);
    out.ones().collect()
}
