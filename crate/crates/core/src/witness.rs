//! Checkers for tree-indexed witness families and two-column arrays.
//!
//! A family assigns a parameter tuple `a_η` to every node and fixes a
//! formula `φ(x̄; ȳ)`. Instances `φ(x̄, a_η)` are compared through their
//! solution sets in one finite structure, so "consistent" means "has a
//! common solution there".

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fo::{self, Compiled, FinStructure, FoError, Formula};
use crate::tree::{
    incomparable, is_distant_siblings, prec, qftp_fingerprint, QfFingerprint, TreeDomain, TreeError,
    TreeNode,
};

/// Object tuples per instance are enumerated; keep the count bounded.
pub const MAX_OBJECT_TUPLES: usize = 1 << 20;
pub const MAX_INDISCERNIBLE_SIZE: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Fo(#[from] FoError),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid family: {0}")]
    BadFamily(String),
    #[error("{what}: {got} exceeds the limit {limit}")]
    TooLarge { what: &'static str, got: usize, limit: usize },
}

type Result<T> = std::result::Result<T, WitnessError>;

/// `φ(x̄; ȳ)` with the variable split and a compiled form.
#[derive(Debug, Clone)]
struct Instance {
    formula: Formula,
    object_vars: Vec<String>,
    param_vars: Vec<String>,
    compiled: Compiled,
    tuple_count: usize,
}

impl Instance {
    fn new(s: &FinStructure, formula: Formula, object_vars: Vec<String>, param_vars: Vec<String>) -> Result<Self> {
        let mut vars = object_vars.clone();
        vars.extend(param_vars.iter().cloned());
        let mut seen = std::collections::BTreeSet::new();
        if let Some(v) = vars.iter().find(|v| !seen.insert(*v)) {
            return Err(WitnessError::BadFamily(format!("variable {v} listed twice")));
        }
        let compiled = fo::compile(s, &formula, &vars)?;
        let tuple_count = (0..object_vars.len())
            .try_fold(1usize, |acc, _| acc.checked_mul(s.size()))
            .filter(|&c| c <= MAX_OBJECT_TUPLES)
            .ok_or(WitnessError::TooLarge {
                what: "object tuples",
                got: s.size().saturating_pow(object_vars.len() as u32),
                limit: MAX_OBJECT_TUPLES,
            })?;
        Ok(Instance { formula, object_vars, param_vars, compiled, tuple_count })
    }

    fn decode(&self, m: usize, mut idx: usize) -> Vec<usize> {
        let mut t = vec![0; self.object_vars.len()];
        for slot in t.iter_mut().rev() {
            *slot = idx % m;
            idx /= m;
        }
        t
    }

    fn solutions(&self, s: &FinStructure, params: &[usize]) -> Bitset {
        let mut bits = Bitset::new(self.tuple_count);
        let mut values = vec![0; self.object_vars.len() + params.len()];
        values[self.object_vars.len()..].copy_from_slice(params);
        for idx in 0..self.tuple_count {
            let obj = self.decode(s.size(), idx);
            values[..obj.len()].copy_from_slice(&obj);
            if self.compiled.holds(s, &values) {
                bits.set(idx);
            }
        }
        bits
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bitset(Vec<u64>);

impl Bitset {
    fn new(len: usize) -> Self {
        Bitset(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn full_like(other: &Bitset, len: usize) -> Self {
        let mut b = Bitset(vec![u64::MAX; other.0.len()]);
        if !len.is_multiple_of(64) {
            if let Some(last) = b.0.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        b
    }

    fn and_with(&mut self, other: &Bitset) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= b;
        }
    }

    fn first(&self) -> Option<usize> {
        self.0.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Solution sets cached by parameter tuple.
struct Solver<'a> {
    s: &'a FinStructure,
    inst: &'a Instance,
    cache: HashMap<Vec<usize>, Bitset>,
}

impl<'a> Solver<'a> {
    fn new(s: &'a FinStructure, inst: &'a Instance) -> Self {
        Solver { s, inst, cache: HashMap::new() }
    }

    /// First common solution of the instances at `params`, if any.
    fn common<'p>(&mut self, params: impl IntoIterator<Item = &'p Vec<usize>>) -> Option<Vec<usize>> {
        let mut acc: Option<Bitset> = None;
        for p in params {
            if !self.cache.contains_key(p) {
                let bits = self.inst.solutions(self.s, p);
                self.cache.insert(p.clone(), bits);
            }
            let bits = &self.cache[p];
            match &mut acc {
                None => acc = Some(bits.clone()),
                Some(a) => a.and_with(bits),
            }
        }
        let acc = acc.unwrap_or_else(|| {
            let template = Bitset::new(self.inst.tuple_count);
            Bitset::full_like(&template, self.inst.tuple_count)
        });
        acc.first().map(|i| self.inst.decode(self.s.size(), i))
    }
}

#[derive(Debug, Clone)]
pub struct WitnessFamily {
    domain: TreeDomain,
    structure: FinStructure,
    instance: Instance,
    /// Indexed by `TreeDomain::index`.
    params: Vec<Vec<usize>>,
}

impl WitnessFamily {
    pub fn new(
        domain: TreeDomain,
        structure: FinStructure,
        formula: Formula,
        object_vars: Vec<String>,
        param_vars: Vec<String>,
        params: &BTreeMap<TreeNode, Vec<usize>>,
    ) -> Result<Self> {
        let instance = Instance::new(&structure, formula, object_vars, param_vars)?;
        for node in params.keys() {
            domain.check(node)?;
        }
        let mut table = Vec::with_capacity(domain.node_count());
        for i in 0..domain.node_count() {
            let node = domain.node_at(i);
            let p = params.get(&node).ok_or_else(|| WitnessError::BadFamily(format!("no parameter for node {node}")))?;
            check_tuple(&structure, &instance, p, &format!("node {node}"))?;
            table.push(p.clone());
        }
        Ok(WitnessFamily { domain, structure, instance, params: table })
    }

    pub fn domain(&self) -> &TreeDomain {
        &self.domain
    }

    pub fn structure(&self) -> &FinStructure {
        &self.structure
    }

    pub fn formula(&self) -> &Formula {
        &self.instance.formula
    }

    pub fn object_vars(&self) -> &[String] {
        &self.instance.object_vars
    }

    pub fn param_vars(&self) -> &[String] {
        &self.instance.param_vars
    }

    pub fn param(&self, node: &TreeNode) -> &Vec<usize> {
        &self.params[self.domain.index(node)]
    }

    pub fn params(&self) -> BTreeMap<TreeNode, Vec<usize>> {
        self.domain.nodes().into_iter().map(|n| { let p = self.param(&n).clone(); (n, p) }).collect()
    }

    /// Same family with `a_node` replaced.
    pub fn with_param(&self, node: &TreeNode, p: Vec<usize>) -> Result<Self> {
        self.domain.check(node)?;
        check_tuple(&self.structure, &self.instance, &p, &format!("node {node}"))?;
        let mut out = self.clone();
        out.params[self.domain.index(node)] = p;
        Ok(out)
    }

    /// Same parameters over a different structure on the same universe
    /// (or a larger one).
    pub fn with_structure(&self, structure: FinStructure) -> Result<Self> {
        WitnessFamily::new(
            self.domain,
            structure,
            self.instance.formula.clone(),
            self.instance.object_vars.clone(),
            self.instance.param_vars.clone(),
            &self.params(),
        )
    }
}

fn check_tuple(s: &FinStructure, inst: &Instance, p: &[usize], what: &str) -> Result<()> {
    if p.len() != inst.param_vars.len() {
        return Err(WitnessError::BadFamily(format!(
            "{what}: parameter tuple has length {}, expected {}",
            p.len(),
            inst.param_vars.len()
        )));
    }
    if let Some(x) = p.iter().find(|&&x| x >= s.size()) {
        return Err(WitnessError::BadFamily(format!("{what}: element {x} outside the universe")));
    }
    Ok(())
}

/// On-disk family layout; the structure is inline or a path resolved by
/// the caller.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub domain: TreeDomain,
    pub structure: StructureSource,
    pub formula: String,
    pub object_vars: Vec<String>,
    pub param_vars: Vec<String>,
    pub params: BTreeMap<TreeNode, Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StructureSource {
    Path(String),
    Inline(FinStructure),
}

impl FamilyFile {
    pub fn into_family(self, structure: FinStructure) -> Result<WitnessFamily> {
        let domain = TreeDomain::new(self.domain.height, self.domain.branching)?;
        let formula = fo::parse_formula(&self.formula)?;
        WitnessFamily::new(domain, structure, formula, self.object_vars, self.param_vars, &self.params)
    }

    pub fn from_family(f: &WitnessFamily) -> Self {
        FamilyFile {
            domain: f.domain,
            structure: StructureSource::Inline(f.structure.clone()),
            formula: f.formula().to_string(),
            object_vars: f.object_vars().to_vec(),
            param_vars: f.param_vars().to_vec(),
            params: f.params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// The maximal branch ending at `leaf` has no common solution.
    Branch { leaf: TreeNode },
    /// Two instances that should be inconsistent share `solution`.
    Pair { first: TreeNode, second: TreeNode, solution: Vec<usize> },
    /// Distant siblings whose instances share `solution`.
    Siblings { nodes: Vec<TreeNode>, solution: Vec<usize> },
    /// Array row whose two cells are not conjugate over earlier rows.
    Row { row: usize },
    /// Column-0 instances with no common solution.
    Column,
    /// Column-1 rows whose instances share `solution`.
    Rows { rows: Vec<usize>, solution: Vec<usize> },
    /// Increasing row tuple not conjugate to the initial one.
    RowTuple { rows: Vec<usize> },
    /// Node tuples with equal quantifier-free types but non-conjugate
    /// parameter tuples.
    Tuples { first: Vec<TreeNode>, second: Vec<TreeNode> },
    /// No index tuple of `A` with the type of `nodes` matches `B` on the
    /// formula with the given position.
    Unmatched { formula: usize, nodes: Vec<TreeNode>, value: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub description: String,
    pub pass: bool,
    pub checked: usize,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    pub clauses: Vec<Clause>,
}

impl CheckReport {
    fn new(check: &str, clauses: Vec<Clause>) -> Self {
        CheckReport { check: check.to_string(), pass: clauses.iter().all(|c| c.pass), clauses }
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    /// Names of the failing clauses.
    pub fn failing(&self) -> Vec<&str> {
        self.clauses.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn first_counterexample(&self) -> Option<&Counterexample> {
        self.clauses.iter().find_map(|c| c.counterexample.as_ref())
    }
}

fn clause(name: &str, description: &str, checked: usize, counterexample: Option<Counterexample>) -> Clause {
    Clause {
        name: name.to_string(),
        description: description.to_string(),
        pass: counterexample.is_none(),
        checked,
        counterexample,
    }
}

fn branch_clause(f: &WitnessFamily, solver: &mut Solver) -> Clause {
    let leaves = f.domain.leaves();
    let bad = leaves.iter().find(|leaf| {
        let branch = f.domain.branch(leaf);
        solver.common(branch.iter().map(|n| f.param(n))).is_none()
    });
    clause(
        "a",
        "every maximal branch is consistent",
        leaves.len(),
        bad.map(|leaf| Counterexample::Branch { leaf: leaf.clone() }),
    )
}

fn require_binary(f: &WitnessFamily) -> Result<()> {
    if f.domain.is_binary() {
        Ok(())
    } else {
        Err(WitnessError::ShapeMismatch(format!("needs a binary tree, got branching {}", f.domain.branching)))
    }
}

fn pairwise_clause(f: &WitnessFamily, solver: &mut Solver, pairs: impl Iterator<Item = (TreeNode, TreeNode)>, description: &str) -> Clause {
    let mut checked = 0;
    for (a, b) in pairs {
        checked += 1;
        if let Some(solution) = solver.common([f.param(&a), f.param(&b)]) {
            return clause("b", description, checked, Some(Counterexample::Pair { first: a, second: b, solution }));
        }
    }
    clause("b", description, checked, None)
}

/// `(ξ⌢1, ν)` for every `ν ⊵ ξ⌢0`, in lex order of `ξ` then `ν`.
fn sop1_pairs(dom: &TreeDomain) -> impl Iterator<Item = (TreeNode, TreeNode)> + '_ {
    dom.nodes().into_iter().filter(|xi| dom.contains(&xi.child(1))).flat_map(move |xi| {
        let one = xi.child(1);
        dom.subtree(&xi.child(0)).into_iter().map(move |nu| (one.clone(), nu))
    })
}

fn incomparable_pairs(dom: &TreeDomain) -> Vec<(TreeNode, TreeNode)> {
    let nodes = dom.nodes();
    let mut out = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if incomparable(a, b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

pub fn check_sop1(f: &WitnessFamily) -> Result<CheckReport> {
    require_binary(f)?;
    let mut solver = Solver::new(&f.structure, &f.instance);
    let a = branch_clause(f, &mut solver);
    let b = pairwise_clause(f, &mut solver, sop1_pairs(&f.domain), "ξ⌢1 is inconsistent with every ν ⊵ ξ⌢0");
    Ok(CheckReport::new("sop1", vec![a, b]))
}

pub fn check_sop2(f: &WitnessFamily) -> Result<CheckReport> {
    require_binary(f)?;
    let mut solver = Solver::new(&f.structure, &f.instance);
    let a = branch_clause(f, &mut solver);
    let b = pairwise_clause(f, &mut solver, incomparable_pairs(&f.domain).into_iter(), "incomparable nodes are inconsistent");
    Ok(CheckReport::new("sop2", vec![a, b]))
}

pub fn check_tp1(f: &WitnessFamily) -> Result<CheckReport> {
    let mut solver = Solver::new(&f.structure, &f.instance);
    let a = branch_clause(f, &mut solver);
    let b = pairwise_clause(f, &mut solver, incomparable_pairs(&f.domain).into_iter(), "incomparable nodes are inconsistent");
    Ok(CheckReport::new("tp1", vec![a, b]))
}

/// Distant-sibling sets of size `k` in lex order. Subsets of such sets are
/// again distant siblings, so partial sets that fail are pruned.
pub fn distant_sibling_sets(dom: &TreeDomain, k: usize) -> Vec<Vec<TreeNode>> {
    fn grow(nodes: &[TreeNode], start: usize, k: usize, cur: &mut Vec<TreeNode>, out: &mut Vec<Vec<TreeNode>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..nodes.len() {
            cur.push(nodes[i].clone());
            if cur.len() < 2 || is_distant_siblings(cur) {
                grow(nodes, i + 1, k, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k >= 2 {
        grow(&dom.nodes(), 0, k, &mut Vec::new(), &mut out);
    }
    out
}

pub fn check_weak_ktp1(f: &WitnessFamily, k: usize) -> Result<CheckReport> {
    if k < 2 {
        return Err(WitnessError::ShapeMismatch(format!("k must be at least 2, got {k}")));
    }
    let mut solver = Solver::new(&f.structure, &f.instance);
    let a = branch_clause(f, &mut solver);
    let sets = distant_sibling_sets(&f.domain, k);
    let mut bad = None;
    let mut checked = 0;
    for set in sets {
        checked += 1;
        if let Some(solution) = solver.common(set.iter().map(|n| f.param(n))) {
            bad = Some(Counterexample::Siblings { nodes: set, solution });
            break;
        }
    }
    let b = clause("b", "every set of k distant siblings is inconsistent", checked, bad);
    Ok(CheckReport::new("weak_ktp1", vec![a, b]))
}

/// Recomputes the consistency fact a counterexample claims.
pub fn revalidate(f: &WitnessFamily, cx: &Counterexample) -> bool {
    let mut solver = Solver::new(&f.structure, &f.instance);
    match cx {
        Counterexample::Branch { leaf } => {
            f.domain.contains(leaf) && solver.common(f.domain.branch(leaf).iter().map(|n| f.param(n))).is_none()
        }
        Counterexample::Pair { first, second, solution } => {
            let mut values = solution.clone();
            let ok = |p: &Vec<usize>, values: &mut Vec<usize>| {
                values.truncate(solution.len());
                values.extend(p);
                f.instance.compiled.holds(&f.structure, values)
            };
            ok(f.param(first), &mut values) && ok(f.param(second), &mut values)
        }
        Counterexample::Siblings { nodes, solution } => {
            is_distant_siblings(nodes)
                && nodes.iter().all(|n| {
                    let mut values = solution.clone();
                    values.extend(f.param(n));
                    f.instance.compiled.holds(&f.structure, &values)
                })
        }
        _ => false,
    }
}

pub fn restrict_to_binary(f: &WitnessFamily) -> Result<WitnessFamily> {
    if f.domain.branching < 2 {
        return Err(WitnessError::ShapeMismatch(format!("branching {} is below 2", f.domain.branching)));
    }
    let domain = TreeDomain::new(f.domain.height, 2)?;
    let params = domain.nodes().into_iter().map(|n| { let p = f.param(&n).clone(); (n, p) }).collect();
    let inst = &f.instance;
    WitnessFamily::new(
        domain,
        f.structure.clone(),
        inst.formula.clone(),
        inst.object_vars.clone(),
        inst.param_vars.clone(),
        &params,
    )
}

/// `η_i = 0^{i+1}`, `ν_i = 0^i⌢1` for `i < d`.
pub fn comb_paths(d: usize) -> Vec<(TreeNode, TreeNode)> {
    (0..d).map(|i| (TreeNode::zeros(i + 1), TreeNode::zeros(i).child(1))).collect()
}

/// Rows of two parameter tuples over one structure and formula.
#[derive(Debug, Clone)]
pub struct ArrayFamily {
    structure: FinStructure,
    instance: Instance,
    rows: Vec<[Vec<usize>; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayFile {
    pub structure: StructureSource,
    pub formula: String,
    pub object_vars: Vec<String>,
    pub param_vars: Vec<String>,
    pub rows: Vec<[Vec<usize>; 2]>,
}

impl ArrayFile {
    pub fn into_array(self, structure: FinStructure) -> Result<ArrayFamily> {
        let formula = fo::parse_formula(&self.formula)?;
        ArrayFamily::new(structure, formula, self.object_vars, self.param_vars, self.rows)
    }

    pub fn from_array(a: &ArrayFamily) -> Self {
        ArrayFile {
            structure: StructureSource::Inline(a.structure.clone()),
            formula: a.instance.formula.to_string(),
            object_vars: a.instance.object_vars.clone(),
            param_vars: a.instance.param_vars.clone(),
            rows: a.rows.clone(),
        }
    }
}

impl ArrayFamily {
    pub fn new(
        structure: FinStructure,
        formula: Formula,
        object_vars: Vec<String>,
        param_vars: Vec<String>,
        rows: Vec<[Vec<usize>; 2]>,
    ) -> Result<Self> {
        let instance = Instance::new(&structure, formula, object_vars, param_vars)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                check_tuple(&structure, &instance, cell, &format!("cell ({i},{j})"))?;
            }
        }
        Ok(ArrayFamily { structure, instance, rows })
    }

    /// Rows `(a_{η_i}, a_{ν_i})` along `comb_paths(d)`.
    pub fn from_comb(f: &WitnessFamily, d: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for (eta, nu) in comb_paths(d) {
            f.domain.check(&eta)?;
            f.domain.check(&nu)?;
            rows.push([f.param(&eta).clone(), f.param(&nu).clone()]);
        }
        Ok(ArrayFamily { structure: f.structure.clone(), instance: f.instance.clone(), rows })
    }

    pub fn rows(&self) -> &[[Vec<usize>; 2]] {
        &self.rows
    }

    pub fn with_cell(&self, row: usize, col: usize, p: Vec<usize>) -> Result<Self> {
        check_tuple(&self.structure, &self.instance, &p, &format!("cell ({row},{col})"))?;
        let mut out = self.clone();
        out.rows[row][col] = p;
        Ok(out)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Clauses: (a) row cells conjugate over earlier rows, (b) column 0
/// consistent, (c) column 1 `k`-inconsistent, and with `indiscernible`
/// (d) increasing row tuples of size at most three conjugate to the initial
/// one.
pub fn check_sop1_array(a: &ArrayFamily, k: usize, indiscernible: bool) -> Result<CheckReport> {
    let n = a.rows.len();
    if n < 2 || k < 2 {
        return Err(WitnessError::ShapeMismatch(format!("needs at least 2 rows and k ≥ 2, got {n} rows and k = {k}")));
    }
    let s = &a.structure;
    let mut bad = None;
    for i in 0..n {
        let fixed: Vec<usize> = a.rows[..i].iter().flat_map(|r| r.iter().flatten().copied()).collect();
        if !fo::orbit_equivalent(s, &a.rows[i][0], &a.rows[i][1], &fixed)? {
            bad = Some(Counterexample::Row { row: i });
            break;
        }
    }
    let mut clauses = vec![clause("a", "row cells have the same type over earlier rows", n, bad)];

    let mut solver = Solver::new(s, &a.instance);
    let col0 = solver.common(a.rows.iter().map(|r| &r[0]));
    clauses.push(clause("b", "column 0 is consistent", 1, col0.is_none().then_some(Counterexample::Column)));

    let subsets = combinations(n, k);
    let mut bad = None;
    let mut checked = 0;
    for rows in subsets {
        checked += 1;
        if let Some(solution) = solver.common(rows.iter().map(|&i| &a.rows[i][1])) {
            bad = Some(Counterexample::Rows { rows, solution });
            break;
        }
    }
    clauses.push(clause("c", "column 1 is k-inconsistent", checked, bad));

    if indiscernible {
        let flat = |rows: &[usize]| -> Vec<usize> { rows.iter().flat_map(|&i| a.rows[i].iter().flatten().copied()).collect() };
        let mut bad = None;
        let mut checked = 0;
        'sizes: for r in 1..=n.min(MAX_INDISCERNIBLE_SIZE) {
            let base = flat(&(0..r).collect::<Vec<_>>());
            for rows in combinations(n, r) {
                checked += 1;
                if !fo::orbit_equivalent(s, &base, &flat(&rows), &[])? {
                    bad = Some(Counterexample::RowTuple { rows });
                    break 'sizes;
                }
            }
        }
        clauses.push(clause("d", "rows form an indiscernible sequence", checked, bad));
    }
    Ok(CheckReport::new("sop1_array", clauses))
}

/// All `r`-tuples of nodes (repetitions allowed) in lex order.
fn node_tuples(dom: &TreeDomain, r: usize) -> Vec<Vec<TreeNode>> {
    let nodes = dom.nodes();
    fo::all_tuples(nodes.len(), r).map(|t| t.into_iter().map(|i| nodes[i].clone()).collect()).collect()
}

fn flat_params(f: &WitnessFamily, tuple: &[TreeNode]) -> Vec<usize> {
    tuple.iter().flat_map(|n| f.param(n).iter().copied()).collect()
}

/// Node tuples of size at most `s` with equal quantifier-free types carry
/// conjugate parameter tuples.
pub fn check_strong_indiscernible(f: &WitnessFamily, s: usize) -> Result<CheckReport> {
    if s > MAX_INDISCERNIBLE_SIZE {
        return Err(WitnessError::TooLarge { what: "tuple size", got: s, limit: MAX_INDISCERNIBLE_SIZE });
    }
    let mut bad = None;
    let mut checked = 0;
    'sizes: for r in 1..=s {
        // conjugacy is an equivalence, so comparing with the first member of
        // each type class suffices
        let mut reps: HashMap<QfFingerprint, (Vec<TreeNode>, Vec<usize>)> = HashMap::new();
        for tuple in node_tuples(&f.domain, r) {
            checked += 1;
            let p = flat_params(f, &tuple);
            match reps.get(&qftp_fingerprint(&tuple)) {
                None => {
                    reps.insert(qftp_fingerprint(&tuple), (tuple, p));
                }
                Some((rep, rp)) => {
                    if !fo::orbit_equivalent(&f.structure, rp, &p, &[])? {
                        bad = Some(Counterexample::Tuples { first: rep.clone(), second: tuple });
                        break 'sizes;
                    }
                }
            }
        }
    }
    Ok(CheckReport::new("strong_indiscernible", vec![clause("a", "equal node types give conjugate parameters", checked, bad)]))
}

/// `B` is based on `A` for the listed formulas: every truth value of
/// `φ(b_{η̄})` is attained by some `φ(a_{ν̄})` with `ν̄` of the same
/// quantifier-free type as `η̄`. Each formula comes with its variable list,
/// split into consecutive blocks of one parameter tuple each (at most 3).
pub fn check_based_on(b: &WitnessFamily, a: &WitnessFamily, formulas: &[(Formula, Vec<String>)]) -> Result<CheckReport> {
    if b.domain != a.domain || b.structure != a.structure {
        return Err(WitnessError::BadFamily("families must share domain and structure".into()));
    }
    let len = a.param_vars().len();
    if b.param_vars().len() != len || len == 0 {
        return Err(WitnessError::BadFamily("families must use nonempty parameter tuples of one length".into()));
    }
    let s = &a.structure;
    let mut clauses = Vec::new();
    for (fi, (phi, vars)) in formulas.iter().enumerate() {
        if vars.len() % len != 0 || vars.is_empty() {
            return Err(WitnessError::BadFamily(format!("formula {fi}: {} variables do not split into blocks of {len}", vars.len())));
        }
        let r = vars.len() / len;
        if r > MAX_INDISCERNIBLE_SIZE {
            return Err(WitnessError::TooLarge { what: "node tuple size", got: r, limit: MAX_INDISCERNIBLE_SIZE });
        }
        let c = fo::compile(s, phi, vars)?;
        let tuples = node_tuples(&a.domain, r);
        let mut attained: HashMap<QfFingerprint, [bool; 2]> = HashMap::new();
        for nu in &tuples {
            let v = c.holds(s, &flat_params(a, nu));
            attained.entry(qftp_fingerprint(nu)).or_default()[v as usize] = true;
        }
        let bad = tuples.iter().find_map(|eta| {
            let v = c.holds(s, &flat_params(b, eta));
            (!attained[&qftp_fingerprint(eta)][v as usize])
                .then(|| Counterexample::Unmatched { formula: fi, nodes: eta.clone(), value: v })
        });
        clauses.push(Clause {
            name: format!("{}", fi),
            description: format!("{phi}"),
            pass: bad.is_none(),
            checked: tuples.len(),
            counterexample: bad,
        });
    }
    Ok(CheckReport::new("based_on", clauses))
}

/// The branch structure `B_h` over `^{<h}b`: node elements in domain
/// index order, then one branch element per leaf in lex order.
/// `P(x, a)` holds when node `a` is a prefix of the branch `x`; unary
/// `Node` and `Branch` tag the two sorts.
#[derive(Debug, Clone)]
pub struct BranchStructure {
    pub domain: TreeDomain,
    pub structure: FinStructure,
    leaves: Vec<TreeNode>,
}

impl BranchStructure {
    pub fn new(height: usize, branching: usize) -> Result<Self> {
        let domain = TreeDomain::new(height, branching)?;
        let nodes = domain.node_count();
        let leaves = domain.leaves();
        let mut s = FinStructure::new(nodes + leaves.len());
        let mut p = Vec::new();
        for (j, leaf) in leaves.iter().enumerate() {
            for node in domain.branch(leaf) {
                p.push(vec![nodes + j, domain.index(&node)]);
            }
        }
        s.add_relation("P", 2, p)?;
        s.add_relation("Node", 1, (0..nodes).map(|i| vec![i]))?;
        s.add_relation("Branch", 1, (nodes..nodes + leaves.len()).map(|i| vec![i]))?;
        Ok(BranchStructure { domain, structure: s, leaves })
    }

    pub fn node_element(&self, node: &TreeNode) -> usize {
        self.domain.index(node)
    }

    pub fn branch_element(&self, leaf: &TreeNode) -> Option<usize> {
        self.leaves.binary_search(leaf).ok().map(|j| self.domain.node_count() + j)
    }

    /// `a_η = η` with `φ = P(x, y)`.
    pub fn family(&self) -> WitnessFamily {
        let params = self.domain.nodes().into_iter().map(|n| { let e = vec![self.node_element(&n)]; (n, e) }).collect();
        WitnessFamily::new(
            self.domain,
            self.structure.clone(),
            Formula::atom("P", &["x", "y"]),
            vec!["x".into()],
            vec!["y".into()],
            &params,
        )
        .expect("branch family is well formed")
    }
}

fn rebuild(s: &FinStructure, extra: usize, edit: impl Fn(&str, &mut Vec<Vec<usize>>)) -> FinStructure {
    let mut out = FinStructure::new(s.size() + extra);
    for (name, r) in s.relations() {
        let mut tuples: Vec<Vec<usize>> = r.tuples().iter().cloned().collect();
        edit(name, &mut tuples);
        out.add_relation(name, r.arity(), tuples).expect("edited tuples stay in range");
    }
    out
}

/// Adds one element satisfying `P(u, a)` for every node element `a`, which
/// makes every pair of instances consistent.
pub fn mutate_universal_branch(b: &BranchStructure, f: &WitnessFamily) -> Result<WitnessFamily> {
    let u = b.structure.size();
    let nodes = b.domain.node_count();
    let s = rebuild(&b.structure, 1, |name, t| match name {
        "P" => t.extend((0..nodes).map(|a| vec![u, a])),
        "Branch" => t.push(vec![u]),
        _ => {}
    });
    f.with_structure(s)
}

/// Gives the sibling of the leftmost leaf the leftmost leaf's parameter.
pub fn mutate_duplicate_param(b: &BranchStructure, f: &WitnessFamily) -> Result<WitnessFamily> {
    let h = b.domain.height;
    if h < 2 {
        return Err(WitnessError::ShapeMismatch("needs height at least 2".into()));
    }
    let source = TreeNode::zeros(h - 1);
    let target = TreeNode::zeros(h - 2).child(1);
    f.with_param(&target, f.param(&source).clone())
}

/// Removes every `P` tuple of the branch through `leaf`.
pub fn mutate_delete_branch(b: &BranchStructure, f: &WitnessFamily, leaf: &TreeNode) -> Result<WitnessFamily> {
    let x = b.branch_element(leaf).ok_or_else(|| WitnessError::BadFamily(format!("{leaf} is not a leaf")))?;
    let s = rebuild(&b.structure, 0, |name, t| {
        if name == "P" {
            t.retain(|tuple| tuple[0] != x);
        }
    });
    f.with_structure(s)
}

/// A perturbed branch family: starts from `B_h` over `^{<h}b` and applies
/// up to three random edits (reassigned parameters, a universal element,
/// a deleted branch, or a stray `P` tuple).
pub fn random_branch_family(rng: &mut impl Rng, height: usize, branching: usize) -> Result<WitnessFamily> {
    let b = BranchStructure::new(height, branching)?;
    let mut f = b.family();
    let nodes = b.domain.nodes();
    let leaves = b.domain.leaves();
    let edits = rng.gen_range(0..=3);
    let mut extra_p: Vec<Vec<usize>> = Vec::new();
    let mut deleted: Vec<usize> = Vec::new();
    let mut universal = false;
    for _ in 0..edits {
        match rng.gen_range(0..4) {
            0 => {
                let node = &nodes[rng.gen_range(0..nodes.len())];
                let target = &nodes[rng.gen_range(0..nodes.len())];
                f = f.with_param(node, vec![b.node_element(target)])?;
            }
            1 => universal = true,
            2 => deleted.push(b.branch_element(&leaves[rng.gen_range(0..leaves.len())]).unwrap()),
            _ => {
                let x = b.branch_element(&leaves[rng.gen_range(0..leaves.len())]).unwrap();
                extra_p.push(vec![x, rng.gen_range(0..nodes.len())]);
            }
        }
    }
    let u = b.structure.size();
    let count = b.domain.node_count();
    let s = rebuild(&b.structure, universal as usize, |name, t| match name {
        "P" => {
            t.retain(|tuple| !deleted.contains(&tuple[0]));
            t.extend(extra_p.iter().cloned());
            if universal {
                t.extend((0..count).map(|a| vec![u, a]));
            }
        }
        "Branch" if universal => t.push(vec![u]),
        _ => {}
    });
    f.with_structure(s)
}

/// Checks that `prec` orders comb rows as expected; used by tests and the
/// reproduction driver alike.
pub fn comb_shape_holds(paths: &[(TreeNode, TreeNode)]) -> bool {
    paths.iter().enumerate().all(|(i, (eta, nu))| {
        paths.iter().enumerate().all(|(j, (eta2, nu2))| {
            (i >= j || (prec(eta, eta2) && incomparable(nu, nu2) && prec(&TreeNode::zeros(i).child(0), eta2)))
                && (i != j || (nu.restrict(i) == TreeNode::zeros(i) && eta.restrict(i) == nu.restrict(i)))
        })
    })
}
