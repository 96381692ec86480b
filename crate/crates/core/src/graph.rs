//! Finite simple graphs, the niceness predicate, nice-graph search and
//! brute-force isomorphism.
//!
//! Vertices are `0..n`; their index order doubles as the fixed enumeration
//! used when building the Mekler group of a graph.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_VERTICES: usize = 64;
pub const MAX_SEARCH_VERTICES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("graph has {0} vertices; at most {MAX_VERTICES} are supported")]
    TooManyVertices(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) refers to a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("exhaustive search is limited to {MAX_SEARCH_VERTICES} vertices, got {0}")]
    SearchTooLarge(usize),
}

/// An undirected simple graph on `0..n`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n: usize,
    adj: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = GraphError;

    fn try_from(raw: GraphJson) -> Result<Self, GraphError> {
        Graph::from_edges(raw.n, raw.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson { n: g.n, edges: g.edges().map(|(a, b)| [a, b]).collect() }
    }
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if n > MAX_VERTICES {
            return Err(GraphError::TooManyVertices(n));
        }
        Ok(Graph { n, adj: vec![0; n] })
    }

    /// Builds a graph from unordered edges; duplicates (in either
    /// orientation) and self-loops are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n)?;
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::VertexOutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if g.adjacent(a, b) {
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
    }

    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
    }

    pub fn complete(n: usize) -> Self {
        Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
            .expect("complete graph is simple")
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&u| self.adjacent(v, u))
    }

    /// Edges as normalized `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).filter(move |&j| self.adjacent(i, j)).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    /// Pairs `(i, j)`, `i < j`, that are not edges, in lexicographic order.
    pub fn nonedges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.adjacent(i, j))
            .collect()
    }

    /// `perm[v]` is the new label of vertex `v`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n);
        Graph::from_edges(self.n, self.edges().map(|(a, b)| (perm[a], perm[b])))
            .expect("relabeling a simple graph by a bijection")
    }

    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len()).expect("nonempty vertex list");
        for (i, &a) in vertices.iter().enumerate() {
            for (j, &b) in vertices.iter().enumerate().skip(i + 1) {
                if self.adjacent(a, b) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }

    /// Upper-triangle adjacency bits in `(0,1), (0,2), …` order under `perm`.
    fn adjacency_bits(&self, perm: &[usize]) -> Vec<bool> {
        let mut inv = vec![0; self.n];
        for (v, &img) in perm.iter().enumerate() {
            inv[img] = v;
        }
        let mut bits = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                bits.push(self.adjacent(inv[i], inv[j]));
            }
        }
        bits
    }

    /// Lexicographically least adjacency bit string over all relabelings.
    pub fn canonical_form(&self) -> Vec<bool> {
        let mut perm: Vec<usize> = (0..self.n).collect();
        let mut best = self.adjacency_bits(&perm);
        // Heap's algorithm
        let mut c = vec![0usize; self.n];
        let mut i = 0;
        while i < self.n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                let bits = self.adjacency_bits(&perm);
                if bits < best {
                    best = bits;
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        best
    }

    fn from_bits(n: usize, bits: &[bool]) -> Graph {
        let mut g = Graph::empty(n).expect("n >= 1");
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if bits[k] {
                    g.add_edge(i, j);
                }
                k += 1;
            }
        }
        g
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges().collect::<Vec<_>>())
    }
}

/// Why a graph fails to be nice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewVertices,
    /// No `c ∉ {a, b}` adjacent to `a` but not to `b`.
    NoSeparator { a: usize, b: usize },
    Triangle { vertices: [usize; 3] },
    Square { vertices: [usize; 4] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NicenessReport {
    pub nice: bool,
    pub violation: Option<Violation>,
}

fn find_triangle(g: &Graph) -> Option<[usize; 3]> {
    let n = g.n;
    for a in 0..n {
        for b in a + 1..n {
            if !g.adjacent(a, b) {
                continue;
            }
            for c in b + 1..n {
                if g.adjacent(a, c) && g.adjacent(b, c) {
                    return Some([a, b, c]);
                }
            }
        }
    }
    None
}

/// A 4-cycle `a-b-c-d-a` on four distinct vertices, chords allowed.
fn find_square(g: &Graph) -> Option<[usize; 4]> {
    let n = g.n;
    for a in 0..n {
        for c in a + 1..n {
            // two distinct common neighbours of a and c close a square
            let common = g.adj[a] & g.adj[c];
            if common.count_ones() >= 2 {
                let b = common.trailing_zeros() as usize;
                let d = (common & !(1 << b)).trailing_zeros() as usize;
                return Some([a, b, c, d]);
            }
        }
    }
    None
}

pub fn is_nice(g: &Graph) -> NicenessReport {
    let violation = if g.n < 2 {
        Some(Violation::TooFewVertices)
    } else if let Some(vertices) = find_triangle(g) {
        Some(Violation::Triangle { vertices })
    } else if let Some(vertices) = find_square(g) {
        Some(Violation::Square { vertices })
    } else {
        separator_violation(g)
    };
    NicenessReport { nice: violation.is_none(), violation }
}

fn separator_violation(g: &Graph) -> Option<Violation> {
    for a in 0..g.n {
        for b in 0..g.n {
            if a == b {
                continue;
            }
            let separated =
                (0..g.n).any(|c| c != a && c != b && g.adjacent(a, c) && !g.adjacent(b, c));
            if !separated {
                return Some(Violation::NoSeparator { a, b });
            }
        }
    }
    None
}

/// Returns `map` with `map[v]` the image in `g2` of vertex `v` of `g1`, if
/// the graphs are isomorphic.
pub fn graph_iso(g1: &Graph, g2: &Graph) -> Option<Vec<usize>> {
    if g1.n != g2.n || g1.edge_count() != g2.edge_count() {
        return None;
    }
    if g1.degree_sequence() != g2.degree_sequence() {
        return None;
    }
    // most constrained (highest degree) vertices first
    let mut order: Vec<usize> = (0..g1.n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g1.degree(v)));
    let mut map = vec![usize::MAX; g1.n];
    let mut used = vec![false; g2.n];
    if iso_extend(g1, g2, &order, 0, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

fn iso_extend(
    g1: &Graph,
    g2: &Graph,
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&v) = order.get(depth) else {
        return true;
    };
    for w in 0..g2.n {
        if used[w] || g1.degree(v) != g2.degree(w) {
            continue;
        }
        let consistent = order[..depth]
            .iter()
            .all(|&u| g1.adjacent(u, v) == g2.adjacent(map[u], w));
        if !consistent {
            continue;
        }
        map[v] = w;
        used[w] = true;
        if iso_extend(g1, g2, order, depth + 1, map, used) {
            return true;
        }
        used[w] = false;
        map[v] = usize::MAX;
    }
    false
}

/// Checks that `map` is a bijection preserving adjacency and non-adjacency.
pub fn verify_iso(g1: &Graph, g2: &Graph, map: &[usize]) -> bool {
    if g1.n != g2.n || map.len() != g1.n {
        return false;
    }
    let mut seen = vec![false; g2.n];
    for &w in map {
        if w >= g2.n || seen[w] {
            return false;
        }
        seen[w] = true;
    }
    (0..g1.n).all(|a| (0..g1.n).all(|b| g1.adjacent(a, b) == g2.adjacent(map[a], map[b])))
}

/// All nice graphs on at most `n_max` vertices, one per isomorphism class,
/// each given in its canonical labeling and ordered by `(n, canonical form)`.
pub fn find_nice_graphs(n_max: usize) -> Result<Vec<Graph>, GraphError> {
    if n_max > MAX_SEARCH_VERTICES {
        return Err(GraphError::SearchTooLarge(n_max));
    }
    let mut out = Vec::new();
    for n in 2..=n_max {
        let mut reps: Vec<Graph> = Vec::new();
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut g = Graph::empty(n)?;
        search_girth5(&mut g, &pairs, 0, &mut |cand: &Graph| {
            if !is_nice(cand).nice {
                return;
            }
            let known = reps.iter().any(|r| graph_iso(r, cand).is_some());
            if !known {
                reps.push(cand.clone());
            }
        });
        let canon: BTreeSet<Vec<bool>> = reps.iter().map(Graph::canonical_form).collect();
        out.extend(canon.iter().map(|bits| Graph::from_bits(n, bits)));
    }
    Ok(out)
}

/// Enumerates labeled graphs with no 3- or 4-cycles and minimum degree 2.
/// Both are necessary for niceness, so the search loses nothing.
fn search_girth5(g: &mut Graph, pairs: &[(usize, usize)], k: usize, visit: &mut dyn FnMut(&Graph)) {
    if k > 0 {
        // vertex i's row is complete once pair (i, n-1) has been decided
        let (i, j) = pairs[k - 1];
        if j == g.n - 1 && g.degree(i) < 2 {
            return;
        }
    }
    if k == pairs.len() {
        if g.n >= 1 && g.degree(g.n - 1) >= 2 {
            visit(g);
        }
        return;
    }
    let (a, b) = pairs[k];
    search_girth5(g, pairs, k + 1, visit);
    // adding a-b must not close a path of length 2 or 3 between a and b
    let closes_triangle = g.adj[a] & g.adj[b] != 0;
    let closes_square = g.neighbors(a).any(|c| g.adj[c] & g.adj[b] & !(1 << a) != 0);
    if !closes_triangle && !closes_square {
        g.add_edge(a, b);
        search_girth5(g, pairs, k + 1, visit);
        g.adj[a] &= !(1 << b);
        g.adj[b] &= !(1 << a);
    }
}
