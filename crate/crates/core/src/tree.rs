//! Finite trees `^{<h}b` in the strong language `{⊲, ∧, <_lex}`.
//!
//! A node is a digit string of length `< h` over `0..b`. The derived `Ord`
//! on digit vectors (prefixes first, then first differing digit) is
//! exactly `<_lex`, so sorted node lists are lex-sorted.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_NODES: usize = 1 << 17;
pub const MAX_BRANCHING: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree ^{{<{height}}}{branching} is outside the supported range (h ≥ 1, 1 ≤ b ≤ {MAX_BRANCHING}, < {MAX_NODES} nodes)")]
    BadDomain { height: usize, branching: usize },
    #[error("invalid node {0:?}")]
    BadNode(String),
    #[error("node {node} is not in ^{{<{height}}}{branching}")]
    NodeOutsideDomain { node: TreeNode, height: usize, branching: usize },
    #[error("tuples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("levels {levels:?} must be strictly increasing and below {height}")]
    LevelsOutOfRange { levels: Vec<usize>, height: usize },
    #[error("level map {f:?} must be strictly increasing with f(k) + 1 < {height}")]
    RangeOverflow { f: Vec<usize>, height: usize },
    #[error("operation needs a binary tree, got branching {0}")]
    ShapeMismatch(usize),
    #[error("coloring is missing node {0}")]
    ColoringNotTotal(TreeNode),
}

/// A finite digit string; `⟨⟩` is the empty string.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TreeNode(pub Vec<u8>);

impl TreeNode {
    pub fn root() -> Self {
        TreeNode(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    /// `self⌢i`.
    pub fn child(&self, i: u8) -> TreeNode {
        let mut d = self.0.clone();
        d.push(i);
        TreeNode(d)
    }

    pub fn concat(&self, tail: &[u8]) -> TreeNode {
        let mut d = self.0.clone();
        d.extend_from_slice(tail);
        TreeNode(d)
    }

    /// `self⌈k`.
    pub fn restrict(&self, k: usize) -> TreeNode {
        TreeNode(self.0[..k.min(self.len())].to_vec())
    }

    pub fn zeros(k: usize) -> TreeNode {
        TreeNode(vec![0; k])
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("⟨⟩");
        }
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self.to_key())
    }
}

impl TreeNode {
    /// Serialized form: plain digits, the root as `""`.
    pub fn to_key(&self) -> String {
        self.0.iter().map(|d| char::from(b'0' + d)).collect()
    }
}

impl FromStr for TreeNode {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, TreeError> {
        let s = s.trim();
        if s == "⟨⟩" {
            return Ok(TreeNode::root());
        }
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<Vec<u8>>>()
            .map(TreeNode)
            .ok_or_else(|| TreeError::BadNode(s.to_string()))
    }
}

impl Serialize for TreeNode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_key())
    }
}

impl<'de> Deserialize<'de> for TreeNode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `η ⊴ ν`.
pub fn prec(eta: &TreeNode, nu: &TreeNode) -> bool {
    nu.0.starts_with(&eta.0)
}

/// `η ⊲ ν`.
pub fn strict_prec(eta: &TreeNode, nu: &TreeNode) -> bool {
    eta.len() < nu.len() && prec(eta, nu)
}

/// Longest common prefix.
pub fn meet(eta: &TreeNode, nu: &TreeNode) -> TreeNode {
    let k = eta.0.iter().zip(&nu.0).take_while(|(a, b)| a == b).count();
    eta.restrict(k)
}

pub fn incomparable(eta: &TreeNode, nu: &TreeNode) -> bool {
    !prec(eta, nu) && !prec(nu, eta)
}

/// `η <_lex ν`: `η ⊲ ν`, or incomparable with `η` smaller at position
/// `|η ∧ ν|`.
pub fn lex_less(eta: &TreeNode, nu: &TreeNode) -> bool {
    if strict_prec(eta, nu) {
        return true;
    }
    if !incomparable(eta, nu) {
        return false;
    }
    let k = meet(eta, nu).len();
    eta.0[k] < nu.0[k]
}

/// `{η_i ∧ η_j}` over all pairs including `i = j`, deduplicated and
/// lex-sorted.
pub fn meet_closure(tuple: &[TreeNode]) -> Vec<TreeNode> {
    let mut out: Vec<TreeNode> = Vec::with_capacity(tuple.len() * tuple.len());
    for (i, a) in tuple.iter().enumerate() {
        for b in &tuple[i..] {
            out.push(meet(a, b));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// The finite tree `^{<h}b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeDomain {
    pub height: usize,
    pub branching: usize,
}

impl TreeDomain {
    pub fn new(height: usize, branching: usize) -> Result<Self, TreeError> {
        let bad = TreeError::BadDomain { height, branching };
        if height == 0 || branching == 0 || branching > MAX_BRANCHING {
            return Err(bad);
        }
        let mut total: usize = 0;
        let mut level: usize = 1;
        for _ in 0..height {
            total = total.checked_add(level).ok_or(bad.clone())?;
            if total > MAX_NODES {
                return Err(bad);
            }
            level = level.saturating_mul(branching);
        }
        Ok(TreeDomain { height, branching })
    }

    pub fn binary(height: usize) -> Result<Self, TreeError> {
        Self::new(height, 2)
    }

    pub fn is_binary(&self) -> bool {
        self.branching == 2
    }

    pub fn contains(&self, node: &TreeNode) -> bool {
        node.len() < self.height && node.0.iter().all(|&d| (d as usize) < self.branching)
    }

    pub fn check(&self, node: &TreeNode) -> Result<(), TreeError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(TreeError::NodeOutsideDomain {
                node: node.clone(),
                height: self.height,
                branching: self.branching,
            })
        }
    }

    /// Nodes with `b^k` at level `k`.
    pub fn node_count(&self) -> usize {
        (0..self.height).map(|k| self.branching.pow(k as u32)).sum()
    }

    fn level_offset(&self, k: usize) -> usize {
        (0..k).map(|j| self.branching.pow(j as u32)).sum()
    }

    /// Dense index: levels in order, lex within a level.
    pub fn index(&self, node: &TreeNode) -> usize {
        let within = node.0.iter().fold(0usize, |acc, &d| acc * self.branching + d as usize);
        self.level_offset(node.len()) + within
    }

    pub fn node_at(&self, mut idx: usize) -> TreeNode {
        let mut k = 0;
        while idx >= self.branching.pow(k as u32) {
            idx -= self.branching.pow(k as u32);
            k += 1;
        }
        let mut d = vec![0u8; k];
        for slot in d.iter_mut().rev() {
            *slot = (idx % self.branching) as u8;
            idx /= self.branching;
        }
        TreeNode(d)
    }

    /// All nodes in `<_lex` (preorder) order.
    pub fn nodes(&self) -> Vec<TreeNode> {
        let mut out = Vec::with_capacity(self.node_count());
        self.subtree_into(&TreeNode::root(), &mut out);
        out
    }

    /// Nodes `⊵ start` in `<_lex` order.
    pub fn subtree(&self, start: &TreeNode) -> Vec<TreeNode> {
        let mut out = Vec::new();
        if self.contains(start) {
            self.subtree_into(start, &mut out);
        }
        out
    }

    fn subtree_into(&self, node: &TreeNode, out: &mut Vec<TreeNode>) {
        out.push(node.clone());
        if node.len() + 1 < self.height {
            for i in 0..self.branching as u8 {
                self.subtree_into(&node.child(i), out);
            }
        }
    }

    /// Maximal nodes (length `h - 1`) in lex order.
    pub fn leaves(&self) -> Vec<TreeNode> {
        self.nodes().into_iter().filter(|n| n.len() + 1 == self.height).collect()
    }

    /// `⟨⟩ = ℓ⌈0 ⊲ ℓ⌈1 ⊲ … ⊲ ℓ` for a leaf `ℓ`.
    pub fn branch(&self, leaf: &TreeNode) -> Vec<TreeNode> {
        (0..=leaf.len()).map(|k| leaf.restrict(k)).collect()
    }
}

/// Relation between two distinct closure elements `i < j` (so
/// `closure[i] <_lex closure[j]`); `⊳` cannot occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairRelation {
    Below,
    Incomparable,
}

/// Canonical code of the quantifier-free `L₀`-type of a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QfFingerprint {
    pub closure_size: usize,
    /// Closure index of each tuple position.
    pub positions: Vec<usize>,
    /// For `i < j`, in row-major order.
    pub relations: Vec<PairRelation>,
    /// Closure index of `closure[i] ∧ closure[j]`, for `i < j`.
    pub meets: Vec<usize>,
}

pub fn qftp_fingerprint(tuple: &[TreeNode]) -> QfFingerprint {
    let closure = meet_closure(tuple);
    let pos_of = |n: &TreeNode| closure.binary_search(n).expect("closure contains its meets");
    let mut relations = Vec::new();
    let mut meets = Vec::new();
    for i in 0..closure.len() {
        for j in i + 1..closure.len() {
            relations.push(if strict_prec(&closure[i], &closure[j]) {
                PairRelation::Below
            } else {
                PairRelation::Incomparable
            });
            meets.push(pos_of(&meet(&closure[i], &closure[j])));
        }
    }
    QfFingerprint {
        closure_size: closure.len(),
        positions: tuple.iter().map(pos_of).collect(),
        relations,
        meets,
    }
}

pub fn qftp_equal(a: &[TreeNode], b: &[TreeNode]) -> Result<bool, TreeError> {
    if a.len() != b.len() {
        return Err(TreeError::LengthMismatch(a.len(), b.len()));
    }
    Ok(qftp_fingerprint(a) == qftp_fingerprint(b))
}

/// All pairwise meets of distinct members coincide and lie strictly below
/// every member. Requires at least two nodes.
pub fn is_distant_siblings(nodes: &[TreeNode]) -> bool {
    if nodes.len() < 2 {
        return false;
    }
    let m = meet(&nodes[0], &nodes[1]);
    for (i, a) in nodes.iter().enumerate() {
        if !strict_prec(&m, a) {
            return false;
        }
        for b in &nodes[i + 1..] {
            if meet(a, b) != m {
                return false;
            }
        }
    }
    true
}

/// Embeds `^{<d}b` into a taller tree along chosen levels: the root goes to
/// `0^{α_0}` and `η⌢j` goes to `ρ⌢0^δ⌢j` of length `α_{|η|+1}`.
#[derive(Debug, Clone)]
pub struct LevelEmbedding {
    levels: Vec<usize>,
    branching: usize,
}

pub fn level_subsequence_embed(host: &TreeDomain, levels: &[usize]) -> Result<LevelEmbedding, TreeError> {
    let increasing = levels.windows(2).all(|w| w[0] < w[1]);
    if levels.is_empty() || !increasing || *levels.last().unwrap() >= host.height {
        return Err(TreeError::LevelsOutOfRange { levels: levels.to_vec(), height: host.height });
    }
    Ok(LevelEmbedding { levels: levels.to_vec(), branching: host.branching })
}

impl LevelEmbedding {
    pub fn source(&self) -> TreeDomain {
        TreeDomain { height: self.levels.len(), branching: self.branching }
    }

    pub fn apply(&self, eta: &TreeNode) -> TreeNode {
        assert!(self.source().contains(eta), "{eta} outside the source tree");
        let mut out = vec![0u8; self.levels[0]];
        for (i, &digit) in eta.0.iter().enumerate() {
            out.resize(self.levels[i + 1] - 1, 0);
            out.push(digit);
        }
        TreeNode(out)
    }
}

/// The stretch map: `g(⟨⟩) = ⟨⟩`, `|g(η)| = f(|η|-1) + 1`, digit `η(j)`
/// at index `f(j)` and `0` elsewhere.
#[derive(Debug, Clone)]
pub struct StretchMap {
    f: Vec<usize>,
    branching: usize,
}

pub fn gmap(host: &TreeDomain, f: &[usize]) -> Result<StretchMap, TreeError> {
    let increasing = f.windows(2).all(|w| w[0] < w[1]);
    if !increasing || f.last().is_some_and(|&last| last + 1 >= host.height) {
        return Err(TreeError::RangeOverflow { f: f.to_vec(), height: host.height });
    }
    Ok(StretchMap { f: f.to_vec(), branching: host.branching })
}

impl StretchMap {
    /// Nodes of length at most `|f|`.
    pub fn source(&self) -> TreeDomain {
        TreeDomain { height: self.f.len() + 1, branching: self.branching }
    }

    pub fn apply(&self, eta: &TreeNode) -> TreeNode {
        assert!(self.source().contains(eta), "{eta} outside the source tree");
        if eta.is_root() {
            return TreeNode::root();
        }
        let mut out = vec![0u8; self.f[eta.len() - 1] + 1];
        for (j, &digit) in eta.0.iter().enumerate() {
            out[self.f[j]] = digit;
        }
        TreeNode(out)
    }
}

/// A total coloring of a tree domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    domain: TreeDomain,
    colors: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct ColoringJson {
    height: usize,
    branching: usize,
    colors: BTreeMap<String, u32>,
}

impl Serialize for Coloring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let colors = self.domain.nodes().into_iter().map(|n| (n.to_key(), self.color(&n))).collect();
        ColoringJson { height: self.domain.height, branching: self.domain.branching, colors }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coloring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = ColoringJson::deserialize(d)?;
        let domain = TreeDomain::new(raw.height, raw.branching).map_err(serde::de::Error::custom)?;
        let mut map = BTreeMap::new();
        for (k, c) in raw.colors {
            let node: TreeNode = k.parse().map_err(serde::de::Error::custom)?;
            domain.check(&node).map_err(serde::de::Error::custom)?;
            map.insert(node, c);
        }
        Coloring::from_map(domain, &map).map_err(serde::de::Error::custom)
    }
}

impl Coloring {
    pub fn from_fn(domain: TreeDomain, f: impl Fn(&TreeNode) -> u32) -> Self {
        let colors = (0..domain.node_count()).map(|i| f(&domain.node_at(i))).collect();
        Coloring { domain, colors }
    }

    pub fn from_map(domain: TreeDomain, map: &BTreeMap<TreeNode, u32>) -> Result<Self, TreeError> {
        let mut colors = Vec::with_capacity(domain.node_count());
        for i in 0..domain.node_count() {
            let node = domain.node_at(i);
            colors.push(*map.get(&node).ok_or(TreeError::ColoringNotTotal(node))?);
        }
        Ok(Coloring { domain, colors })
    }

    pub fn domain(&self) -> &TreeDomain {
        &self.domain
    }

    pub fn color(&self, node: &TreeNode) -> u32 {
        self.colors[self.domain.index(node)]
    }

    /// Number of colors `θ`: one more than the largest color id used.
    pub fn num_colors(&self) -> u32 {
        self.colors.iter().max().map_or(0, |m| m + 1)
    }
}

/// Finds `(c, ν*)` such that every `ν ⊵ ν*` extends to some `ρ` colored
/// `c`. Colors are tried in increasing order, then `ν*` in `<_lex` order.
pub fn find_cofinal_color(coloring: &Coloring) -> Result<Option<(u32, TreeNode)>, TreeError> {
    let dom = coloring.domain;
    if !dom.is_binary() {
        return Err(TreeError::ShapeMismatch(dom.branching));
    }
    let by_depth = nodes_deepest_first(&dom);
    for c in 0..coloring.num_colors() {
        // reaches[v]: some extension of v has color c
        // cofinal[v]: every extension of v reaches c
        let mut reaches = vec![false; dom.node_count()];
        let mut cofinal = vec![false; dom.node_count()];
        for node in &by_depth {
            let idx = dom.index(node);
            let kids: Vec<usize> = children(&dom, node).map(|k| dom.index(&k)).collect();
            reaches[idx] = coloring.color(node) == c || kids.iter().any(|&k| reaches[k]);
            cofinal[idx] = reaches[idx] && kids.iter().all(|&k| cofinal[k]);
        }
        if let Some(star) = dom.nodes().into_iter().find(|n| cofinal[dom.index(n)]) {
            return Ok(Some((c, star)));
        }
    }
    Ok(None)
}

fn children<'a>(dom: &'a TreeDomain, node: &'a TreeNode) -> impl Iterator<Item = TreeNode> + 'a {
    let has = node.len() + 1 < dom.height;
    (0..dom.branching as u8).filter(move |_| has).map(move |i| node.child(i))
}

fn nodes_deepest_first(dom: &TreeDomain) -> Vec<TreeNode> {
    (0..dom.node_count()).rev().map(|i| dom.node_at(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape")]
pub enum Shape {
    Sop2,
    Sop1,
    Tp1 { width: usize },
}

/// A map from a small tree into the host, all images sharing one color.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub source: TreeDomain,
    pub color: u32,
    /// `(source node, image)` in source `<_lex` order.
    pub map: Vec<(TreeNode, TreeNode)>,
}

impl Embedding {
    pub fn image(&self, node: &TreeNode) -> Option<&TreeNode> {
        self.map.iter().find(|(s, _)| s == node).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorAttempt {
    pub color: u32,
    pub found: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoReport {
    pub shape: Shape,
    pub depth: usize,
    pub attempts: Vec<ColorAttempt>,
    pub embedding: Option<Embedding>,
}

/// `feasible[k][v]`: a depth-`k` embedding in color `c` can be rooted at
/// `v`. `below[k][v]`: one can be rooted somewhere in the subtree of `v`.
type Table = Vec<Vec<bool>>;

fn sop2_tables(col: &Coloring, c: u32, depth: usize) -> Table {
    let dom = col.domain;
    let order = nodes_deepest_first(&dom);
    let size = dom.node_count();
    let mut feasible = vec![vec![false; size]; depth + 1];
    let mut below = vec![vec![false; size]; depth + 1];
    for k in 1..=depth {
        for node in &order {
            let idx = dom.index(node);
            let f = col.color(node) == c
                && (k == 1
                    || (0..2u8).all(|i| {
                        let ch = node.child(i);
                        dom.contains(&ch) && below[k - 1][dom.index(&ch)]
                    }));
            feasible[k][idx] = f;
            below[k][idx] = f || children(&dom, node).any(|ch| below[k][dom.index(&ch)]);
        }
    }
    feasible
}

/// `good[k][ξ]`: `ξ⌢1` roots a depth-`(k-1)` embedding and one is rooted
/// below `ξ⌢0`; `feasible[k][v]` needs color `c` and a good `ξ ⊵ v`.
fn sop1_tables(col: &Coloring, c: u32, depth: usize) -> (Table, Table) {
    let dom = col.domain;
    let order = nodes_deepest_first(&dom);
    let size = dom.node_count();
    let mut feasible = vec![vec![false; size]; depth + 1];
    let mut below = vec![vec![false; size]; depth + 1];
    let mut good = vec![vec![false; size]; depth + 1];
    let mut good_below = vec![vec![false; size]; depth + 1];
    for k in 1..=depth {
        for node in &order {
            let idx = dom.index(node);
            if k > 1 {
                let (zero, one) = (node.child(0), node.child(1));
                good[k][idx] = dom.contains(&one)
                    && feasible[k - 1][dom.index(&one)]
                    && below[k - 1][dom.index(&zero)];
                good_below[k][idx] =
                    good[k][idx] || children(&dom, node).any(|ch| good_below[k][dom.index(&ch)]);
            }
            let f = col.color(node) == c && (k == 1 || good_below[k][idx]);
            feasible[k][idx] = f;
            below[k][idx] = f || children(&dom, node).any(|ch| below[k][dom.index(&ch)]);
        }
    }
    (feasible, good)
}

fn first_in_subtree(dom: &TreeDomain, start: &TreeNode, ok: impl Fn(&TreeNode) -> bool) -> Option<TreeNode> {
    dom.subtree(start).into_iter().find(|n| ok(n))
}

fn require_binary(col: &Coloring) -> Result<(), TreeError> {
    if col.domain.is_binary() {
        Ok(())
    } else {
        Err(TreeError::ShapeMismatch(col.domain.branching))
    }
}

fn sop2_for_color(col: &Coloring, c: u32, depth: usize) -> Option<Embedding> {
    let dom = col.domain;
    let t = sop2_tables(col, c, depth);
    let root = dom.nodes().into_iter().find(|n| t[depth][dom.index(n)])?;
    let source = TreeDomain { height: depth, branching: 2 };
    let mut map = vec![(TreeNode::root(), root)];
    let mut k = 0;
    while k < map.len() {
        let (src, img) = map[k].clone();
        let remaining = depth - src.len();
        if remaining > 1 {
            for i in 0..2u8 {
                let child_img = first_in_subtree(&dom, &img.child(i), |n| {
                    t[remaining - 1][dom.index(n)]
                })
                .expect("feasibility table guarantees a child");
                map.push((src.child(i), child_img));
            }
        }
        k += 1;
    }
    map.sort();
    Some(Embedding { source, color: c, map })
}

fn sop1_for_color(col: &Coloring, c: u32, depth: usize) -> Option<Embedding> {
    let dom = col.domain;
    let (t, good) = sop1_tables(col, c, depth);
    let root = dom.nodes().into_iter().find(|n| t[depth][dom.index(n)])?;
    let source = TreeDomain { height: depth, branching: 2 };
    let mut map = vec![(TreeNode::root(), root)];
    let mut k = 0;
    while k < map.len() {
        let (src, img) = map[k].clone();
        let remaining = depth - src.len();
        if remaining > 1 {
            // e(η⌢1) = ξ⌢1 strictly above e(η), then e(η⌢0) ⊵ ξ⌢0
            let one = first_in_subtree(&dom, &img, |n| {
                n.len() > img.len()
                    && n.0.last() == Some(&1)
                    && good[remaining][dom.index(&n.restrict(n.len() - 1))]
            })
            .expect("feasibility table guarantees a right child");
            let xi = one.restrict(one.len() - 1);
            let zero = first_in_subtree(&dom, &xi.child(0), |n| t[remaining - 1][dom.index(n)])
                .expect("feasibility table guarantees a left child");
            map.push((src.child(0), zero));
            map.push((src.child(1), one));
        }
        k += 1;
    }
    map.sort();
    Some(Embedding { source, color: c, map })
}

fn search(
    col: &Coloring,
    shape: Shape,
    depth: usize,
    per_color: impl Fn(u32) -> Option<Embedding>,
) -> MonoReport {
    let mut attempts = Vec::new();
    let mut embedding = None;
    for c in 0..col.num_colors() {
        let found = per_color(c);
        attempts.push(ColorAttempt { color: c, found: found.is_some() });
        if found.is_some() {
            embedding = found;
            break;
        }
    }
    MonoReport { shape, depth, attempts, embedding }
}

/// Monochromatic `e : ^{<d}2 → host` with `e(η⌢i) ⊵ e(η)⌢i`.
pub fn mono_subtree_sop2(col: &Coloring, depth: usize) -> Result<MonoReport, TreeError> {
    require_binary(col)?;
    Ok(search(col, Shape::Sop2, depth, |c| if depth == 0 { None } else { sop2_for_color(col, c, depth) }))
}

/// Monochromatic `e : ^{<d}2 → host` with `e(η⌢1) = ξ⌢1` for some
/// `ξ ⊵ e(η)` and `e(η⌢0) ⊵ ξ⌢0`.
pub fn mono_subtree_sop1(col: &Coloring, depth: usize) -> Result<MonoReport, TreeError> {
    require_binary(col)?;
    Ok(search(col, Shape::Sop1, depth, |c| if depth == 0 { None } else { sop1_for_color(col, c, depth) }))
}

/// Monochromatic `e'' : ^{<d}w → host`, read off a binary `SOP₂`-shape
/// embedding `e'` of depth `(d-1)·w + 1` via `e''(η⌢i) = e'(ρ⌢1^i⌢0)`
/// where `e''(η) = e'(ρ)`.
pub fn mono_subtree_tp1(col: &Coloring, depth: usize, width: usize) -> Result<MonoReport, TreeError> {
    require_binary(col)?;
    let shape = Shape::Tp1 { width };
    if depth == 0 || width == 0 || width > MAX_BRANCHING {
        return Ok(MonoReport { shape, depth, attempts: Vec::new(), embedding: None });
    }
    let binary_depth = (depth - 1) * width + 1;
    Ok(search(col, shape, depth, |c| {
        let inner = sop2_for_color(col, c, binary_depth)?;
        let source = TreeDomain { height: depth, branching: width };
        let mut map = Vec::new();
        let mut stack = vec![(TreeNode::root(), TreeNode::root())];
        while let Some((eta, rho)) = stack.pop() {
            map.push((eta.clone(), inner.image(&rho).expect("ρ within inner depth").clone()));
            if eta.len() + 1 < depth {
                for i in 0..width {
                    let mut tail = vec![1u8; i];
                    tail.push(0);
                    stack.push((eta.child(i as u8), rho.concat(&tail)));
                }
            }
        }
        map.sort();
        Some(Embedding { source, color: c, map })
    }))
}

/// Shape checks for embeddings returned by the extractors. They only use
/// the tree relations, never the search tables.
pub mod validate {
    use super::*;

    fn common(col: &Coloring, e: &Embedding) -> Result<(), String> {
        let dom = col.domain();
        let expected = e.source.nodes();
        let got: Vec<&TreeNode> = e.map.iter().map(|(s, _)| s).collect();
        if got.len() != expected.len() || got.iter().zip(&expected).any(|(a, b)| *a != b) {
            return Err("map does not cover the source tree".into());
        }
        for (s, t) in &e.map {
            if !dom.contains(t) {
                return Err(format!("image {t} of {s} is outside the host"));
            }
            if col.color(t) != e.color {
                return Err(format!("image {t} of {s} has color {} not {}", col.color(t), e.color));
            }
        }
        for (s1, t1) in &e.map {
            for (s2, t2) in &e.map {
                if s1 != s2 && t1 == t2 {
                    return Err(format!("{s1} and {s2} share image {t1}"));
                }
                if strict_prec(s1, s2) && !strict_prec(t1, t2) {
                    return Err(format!("⊲ not preserved on {s1}, {s2}"));
                }
            }
        }
        Ok(())
    }

    fn img<'a>(e: &'a Embedding, n: &TreeNode) -> &'a TreeNode {
        e.image(n).expect("covered source")
    }

    pub fn sop2_shape(col: &Coloring, e: &Embedding) -> Result<(), String> {
        common(col, e)?;
        for (s, t) in &e.map {
            for i in 0..2u8 {
                let ch = s.child(i);
                if e.source.contains(&ch) && !prec(&t.child(i), img(e, &ch)) {
                    return Err(format!("e({ch}) does not extend e({s})⌢{i}"));
                }
            }
        }
        for (s1, t1) in &e.map {
            for (s2, t2) in &e.map {
                if incomparable(s1, s2) && !incomparable(t1, t2) {
                    return Err(format!("⊥ not preserved on {s1}, {s2}"));
                }
            }
        }
        Ok(())
    }

    pub fn sop1_shape(col: &Coloring, e: &Embedding) -> Result<(), String> {
        common(col, e)?;
        for (s, t) in &e.map {
            let (zero, one) = (s.child(0), s.child(1));
            if !e.source.contains(&one) {
                continue;
            }
            let right = img(e, &one);
            if right.0.last() != Some(&1) {
                return Err(format!("e({one}) = {right} does not end in 1"));
            }
            let xi = right.restrict(right.len() - 1);
            if !prec(t, &xi) {
                return Err(format!("e({s}) is not below ξ = {xi}"));
            }
            if !prec(&xi.child(0), img(e, &zero)) {
                return Err(format!("e({zero}) does not extend ξ⌢0 = {}", xi.child(0)));
            }
        }
        // the pattern the shape exists for: ζ, ν ⊵ ζ⌢0 give an incomparable
        // pair ξ⌢1, ρ ⊵ ξ⌢0 in the host
        for (z, _) in &e.map {
            let one = z.child(1);
            if !e.source.contains(&one) {
                continue;
            }
            let right = img(e, &one);
            let xi = right.restrict(right.len() - 1);
            for (nu, t) in &e.map {
                if prec(&z.child(0), nu) && !prec(&xi.child(0), t) {
                    return Err(format!("e({nu}) escapes ξ⌢0 for ζ = {z}"));
                }
            }
        }
        Ok(())
    }

    pub fn tp1_shape(col: &Coloring, e: &Embedding) -> Result<(), String> {
        common(col, e)?;
        for (s1, t1) in &e.map {
            for (s2, t2) in &e.map {
                if incomparable(s1, s2) && !incomparable(t1, t2) {
                    return Err(format!("⊥ not preserved on {s1}, {s2}"));
                }
            }
        }
        Ok(())
    }

    pub fn shape(col: &Coloring, shape: Shape, e: &Embedding) -> Result<(), String> {
        match shape {
            Shape::Sop2 => sop2_shape(col, e),
            Shape::Sop1 => sop1_shape(col, e),
            Shape::Tp1 { .. } => tp1_shape(col, e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> TreeNode {
        s.parse().unwrap()
    }

    fn ns(list: &[&str]) -> Vec<TreeNode> {
        list.iter().map(|s| n(s)).collect()
    }

    #[test]
    fn basic_relations() {
        assert_eq!(meet(&n("010"), &n("011")), n("01"));
        assert!(lex_less(&n(""), &n("0")));
        assert!(lex_less(&n("0"), &n("1")));
        assert!(lex_less(&n("01"), &n("1")));
        assert!(!lex_less(&n("1"), &n("01")));
        assert!(incomparable(&n("00"), &n("01")));
        assert!(!incomparable(&n("0"), &n("00")));
        assert!(strict_prec(&n("0"), &n("00")) && !strict_prec(&n("0"), &n("0")) && prec(&n("0"), &n("0")));
    }

    #[test]
    fn derived_order_is_lex() {
        let d = TreeDomain::new(4, 3).unwrap();
        let nodes = d.nodes();
        for a in &nodes {
            for b in &nodes {
                assert_eq!(lex_less(a, b), a < b, "{a} {b}");
            }
        }
        let mut sorted = nodes.clone();
        sorted.sort();
        assert_eq!(sorted, nodes);
        for (i, node) in (0..d.node_count()).map(|i| (i, d.node_at(i))) {
            assert_eq!(d.index(&node), i);
        }
    }

    #[test]
    fn closures() {
        assert_eq!(meet_closure(&ns(&["00", "01"])), ns(&["0", "00", "01"]));
        assert_eq!(meet_closure(&ns(&["0110"])), ns(&["0110"]));
        // pairwise meets by hand: 000∧010 = 0, 000∧011 = 0, 010∧011 = 01
        assert_eq!(meet_closure(&ns(&["000", "010", "011"])), ns(&["0", "000", "01", "010", "011"]));
        let c = meet_closure(&ns(&["000", "010", "011", "1"]));
        assert_eq!(meet_closure(&c), c);
    }

    #[test]
    fn fingerprints() {
        assert!(qftp_equal(&ns(&["0", "1"]), &ns(&["10", "11"])).unwrap());
        assert!(!qftp_equal(&ns(&["0", "1"]), &ns(&["0", "00"])).unwrap());
        assert!(!qftp_equal(&ns(&["0", "1"]), &ns(&["1", "0"])).unwrap());
        // meet is the root on one side and a proper node on the other: both
        // closures are {m, a, b} with m below a and b
        assert!(qftp_equal(&ns(&["00", "1"]), &ns(&["110", "111"])).unwrap());
        assert!(!qftp_equal(&ns(&["00", "1"]), &ns(&["00", "00"])).unwrap());
        assert_eq!(qftp_equal(&ns(&["0"]), &ns(&["0", "1"])), Err(TreeError::LengthMismatch(1, 2)));
    }

    #[test]
    fn distant_siblings() {
        assert!(is_distant_siblings(&ns(&["10", "11", "12"])));
        assert!(is_distant_siblings(&ns(&["0", "1"])));
        assert!(!is_distant_siblings(&ns(&["0", "00"])));
        assert!(!is_distant_siblings(&ns(&["00", "01", "1"])));
        assert!(is_distant_siblings(&ns(&["000", "01", "02"])));
        assert!(!is_distant_siblings(&ns(&["0"])));
    }

    #[test]
    fn level_embedding_examples() {
        let host = TreeDomain::new(5, 2).unwrap();
        let id = level_subsequence_embed(&host, &[0, 1, 2]).unwrap();
        for node in id.source().nodes() {
            assert_eq!(id.apply(&node), node);
        }
        let e = level_subsequence_embed(&host, &[1, 3]).unwrap();
        assert_eq!(e.apply(&n("")), n("0"));
        assert_eq!(e.apply(&n("1")), n("001"));
        assert!(level_subsequence_embed(&host, &[1, 5]).is_err());
        assert!(level_subsequence_embed(&host, &[2, 2]).is_err());
    }

    #[test]
    fn stretch_map_examples() {
        let host = TreeDomain::new(6, 3).unwrap();
        let id = gmap(&host, &[0, 1, 2]).unwrap();
        assert_eq!(id.apply(&n("1")), n("1"));
        assert_eq!(id.apply(&n("")), n(""));
        let g = gmap(&host, &[1, 3]).unwrap();
        assert_eq!(g.apply(&n("12")), n("0102"));
        assert_eq!(g.apply(&n("2")), n("02"));
        assert!(matches!(gmap(&host, &[1, 5]), Err(TreeError::RangeOverflow { .. })));
        assert!(gmap(&host, &[3, 3]).is_err());
    }

    #[test]
    fn cofinal_colors() {
        let d = TreeDomain::binary(4).unwrap();
        let constant = Coloring::from_fn(d, |_| 2);
        assert_eq!(find_cofinal_color(&constant).unwrap(), Some((2, n(""))));
        let leaves = Coloring::from_fn(d, |v| (v.len() == 3) as u32);
        assert_eq!(find_cofinal_color(&leaves).unwrap(), Some((1, n(""))));
        let first = Coloring::from_fn(d, |v| v.0.first().copied().unwrap_or(0) as u32);
        assert_eq!(find_cofinal_color(&first).unwrap(), Some((0, n("0"))));
        let ternary = Coloring::from_fn(TreeDomain::new(3, 3).unwrap(), |_| 0);
        assert!(find_cofinal_color(&ternary).is_err());
    }

    /// Brute-force cofinality check straight from the definition.
    fn cofinal_oracle(col: &Coloring, c: u32, star: &TreeNode) -> bool {
        let d = col.domain();
        d.subtree(star).iter().all(|nu| d.subtree(nu).iter().any(|rho| col.color(rho) == c))
    }

    #[test]
    fn cofinal_color_matches_oracle_on_random_colorings() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let d = TreeDomain::binary(4).unwrap();
        for _ in 0..200 {
            let colors: Vec<u32> = (0..d.node_count()).map(|_| rng.gen_range(0..3)).collect();
            let col = Coloring::from_fn(d, |v| colors[d.index(v)]);
            let expected = (0..col.num_colors())
                .flat_map(|c| d.nodes().into_iter().map(move |s| (c, s)))
                .find(|(c, s)| cofinal_oracle(&col, *c, s));
            assert_eq!(find_cofinal_color(&col).unwrap(), expected);
        }
    }

    #[test]
    fn mono_constant_coloring() {
        let col = Coloring::from_fn(TreeDomain::binary(8).unwrap(), |_| 0);
        for report in [
            mono_subtree_sop2(&col, 3).unwrap(),
            mono_subtree_sop1(&col, 3).unwrap(),
            mono_subtree_tp1(&col, 3, 2).unwrap(),
            mono_subtree_tp1(&col, 3, 3).unwrap(),
        ] {
            let e = report.embedding.as_ref().expect("constant coloring embeds");
            validate::shape(&col, report.shape, e).unwrap();
        }
        let sop2 = mono_subtree_sop2(&col, 3).unwrap().embedding.unwrap();
        // leftmost embedding: the identity on ^{<3}2
        assert!(sop2.map.iter().all(|(s, t)| s == t));
    }

    #[test]
    fn mono_parity_coloring() {
        let col = Coloring::from_fn(TreeDomain::binary(16).unwrap(), |v| (v.len() % 2) as u32);
        for report in [
            mono_subtree_sop2(&col, 3).unwrap(),
            mono_subtree_sop1(&col, 3).unwrap(),
            mono_subtree_tp1(&col, 3, 2).unwrap(),
        ] {
            let e = report.embedding.as_ref().unwrap();
            assert_eq!(e.color, 0);
            validate::shape(&col, report.shape, e).unwrap();
        }
    }

    #[test]
    fn left_spine_coloring_fails_color_zero() {
        let col = Coloring::from_fn(TreeDomain::binary(8).unwrap(), |v| v.0.iter().any(|&d| d != 0) as u32);
        let report = mono_subtree_sop2(&col, 2).unwrap();
        assert_eq!(
            report.attempts,
            vec![ColorAttempt { color: 0, found: false }, ColorAttempt { color: 1, found: true }]
        );
        let e = report.embedding.unwrap();
        validate::sop2_shape(&col, &e).unwrap();
        assert_eq!(e.image(&n("")), Some(&n("000001")));
    }

    /// Exhaustive search for a depth-2 SOP₂ shape with one color, used to
    /// cross-check the table-driven search on small hosts.
    fn sop2_depth2_oracle(col: &Coloring, c: u32) -> bool {
        let d = col.domain();
        d.nodes().iter().any(|r| {
            col.color(r) == c
                && (0..2u8).all(|i| d.subtree(&r.child(i)).iter().any(|x| col.color(x) == c))
        })
    }

    #[test]
    fn sop2_search_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let d = TreeDomain::binary(5).unwrap();
        for _ in 0..200 {
            let colors: Vec<u32> = (0..d.node_count()).map(|_| rng.gen_range(0..4)).collect();
            let col = Coloring::from_fn(d, |v| colors[d.index(v)]);
            let report = mono_subtree_sop2(&col, 2).unwrap();
            for a in &report.attempts {
                assert_eq!(a.found, sop2_depth2_oracle(&col, a.color));
            }
            if let Some(e) = &report.embedding {
                validate::sop2_shape(&col, e).unwrap();
            }
            if let Some(e) = &mono_subtree_sop1(&col, 3).unwrap().embedding {
                validate::sop1_shape(&col, e).unwrap();
            }
        }
    }

    #[test]
    fn validators_reject_broken_maps() {
        let col = Coloring::from_fn(TreeDomain::binary(6).unwrap(), |_| 0);
        let mut e = mono_subtree_sop2(&col, 3).unwrap().embedding.unwrap();
        // e("00") must extend e("0")⌢0 = "00"
        e.map[2].1 = n("10");
        assert!(validate::sop2_shape(&col, &e).is_err());
        let mut s1 = mono_subtree_sop1(&col, 3).unwrap().embedding.unwrap();
        // e("0") leaves the ξ⌢0 cone below e("1")
        let right = s1.image(&n("1")).unwrap().clone();
        s1.map[1].1 = right.restrict(right.len() - 1).child(1).child(0);
        assert!(validate::sop1_shape(&col, &s1).is_err());
    }

    #[test]
    fn coloring_json_checks_totality() {
        let ok = r#"{"height":2,"branching":2,"colors":{"":0,"0":1,"1":0}}"#;
        let col: Coloring = serde_json::from_str(ok).unwrap();
        assert_eq!(col.color(&n("0")), 1);
        let back: Coloring = serde_json::from_str(&serde_json::to_string(&col).unwrap()).unwrap();
        assert_eq!(back, col);
        let missing = r#"{"height":2,"branching":2,"colors":{"":0,"0":1}}"#;
        assert!(serde_json::from_str::<Coloring>(missing).is_err());
        let outside = r#"{"height":2,"branching":2,"colors":{"":0,"0":1,"1":0,"2":0}}"#;
        assert!(serde_json::from_str::<Coloring>(outside).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn node(h: usize, b: u8) -> impl Strategy<Value = TreeNode> {
            proptest::collection::vec(0..b, 0..h).prop_map(TreeNode)
        }

        proptest! {
            #[test]
            fn meet_is_a_semilattice(a in node(5, 3), b in node(5, 3), c in node(5, 3)) {
                prop_assert_eq!(meet(&a, &b), meet(&b, &a));
                prop_assert_eq!(meet(&a, &a), a.clone());
                prop_assert_eq!(meet(&meet(&a, &b), &c), meet(&a, &meet(&b, &c)));
                let m = meet(&a, &b);
                prop_assert!(prec(&m, &a) && prec(&m, &b));
            }

            #[test]
            fn lex_is_strict_total_order(a in node(5, 3), b in node(5, 3)) {
                prop_assert!(!lex_less(&a, &a));
                if a != b {
                    prop_assert!(lex_less(&a, &b) ^ lex_less(&b, &a));
                }
                if strict_prec(&a, &b) {
                    prop_assert!(lex_less(&a, &b));
                }
            }

            #[test]
            fn fingerprint_invariant_under_prefixing(
                t in proptest::collection::vec(node(4, 3), 1..4),
                prefix in node(3, 3),
            ) {
                let shifted: Vec<TreeNode> = t.iter().map(|x| prefix.concat(&x.0)).collect();
                prop_assert_eq!(qftp_fingerprint(&t), qftp_fingerprint(&shifted));
            }

            #[test]
            fn proof_maps_preserve_order(a in node(4, 2), b in node(4, 2)) {
                let host = TreeDomain::binary(12).unwrap();
                let e = level_subsequence_embed(&host, &[1, 3, 6, 10]).unwrap();
                let g = gmap(&host, &[2, 5, 9]).unwrap();
                for (x, y) in [(e.apply(&a), e.apply(&b)), (g.apply(&a), g.apply(&b))] {
                    prop_assert_eq!(prec(&a, &b), prec(&x, &y));
                    prop_assert_eq!(lex_less(&a, &b), lex_less(&x, &y));
                }
                let m = g.apply(&meet(&a, &b));
                let gm = meet(&g.apply(&a), &g.apply(&b));
                prop_assert!(prec(&m, &gm) && gm.0[m.len()..].iter().all(|&d| d == 0));
            }
        }
    }
}
