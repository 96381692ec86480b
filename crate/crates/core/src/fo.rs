//! Finite relational structures and first-order evaluation by enumeration.
//!
//! "Consistent" throughout means jointly satisfiable inside the given
//! finite structure. Type equality of tuples over a parameter set is
//! decided exactly by orbit equivalence under automorphisms fixing the set.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Full automorphism listings are limited to this universe size.
pub const MAX_LISTING: usize = 16;
/// Existence-only orbit searches are limited to this universe size.
pub const MAX_ORBIT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {name} has arity {expected}, used with {got} arguments")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("variable {0} is not bound")]
    UnboundVariable(String),
    #[error("invalid structure: {0}")]
    BadStructure(String),
    #[error("{what} needs a universe of at most {limit} elements, got {m}")]
    TooLarge { what: &'static str, limit: usize, m: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Vec<usize>>,
    lookup: Lookup,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lookup {
    Dense(Vec<bool>),
    Sparse(HashSet<Vec<usize>>),
}

const DENSE_LIMIT: usize = 1 << 22;

impl Relation {
    fn new(m: usize, arity: usize, tuples: BTreeSet<Vec<usize>>) -> Self {
        let dense_size = (0..arity).try_fold(1usize, |acc, _| acc.checked_mul(m.max(1)));
        let lookup = match dense_size {
            Some(size) if size <= DENSE_LIMIT => {
                let mut bits = vec![false; size];
                for t in &tuples {
                    bits[dense_index(m, t)] = true;
                }
                Lookup::Dense(bits)
            }
            _ => Lookup::Sparse(tuples.iter().cloned().collect()),
        };
        Relation { arity, tuples, lookup }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<usize>> {
        &self.tuples
    }
}

fn dense_index(m: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &x| acc * m + x)
}

/// A finite universe `0..m` with named relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinStructure {
    m: usize,
    relations: BTreeMap<String, Relation>,
}

#[derive(Serialize, Deserialize)]
struct RelationJson {
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    m: usize,
    relations: BTreeMap<String, RelationJson>,
}

impl Serialize for FinStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let relations = self
            .relations
            .iter()
            .map(|(k, r)| (k.clone(), RelationJson { arity: r.arity, tuples: r.tuples.iter().cloned().collect() }))
            .collect();
        StructureJson { m: self.m, relations }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = StructureJson::deserialize(d)?;
        let mut s = FinStructure::new(raw.m);
        for (name, r) in raw.relations {
            s.add_relation(&name, r.arity, r.tuples).map_err(serde::de::Error::custom)?;
        }
        Ok(s)
    }
}

impl FinStructure {
    pub fn new(m: usize) -> Self {
        FinStructure { m, relations: BTreeMap::new() }
    }

    /// Adds (or replaces) a relation after checking arity and range.
    pub fn add_relation(
        &mut self,
        name: &str,
        arity: usize,
        tuples: impl IntoIterator<Item = Vec<usize>>,
    ) -> Result<(), FoError> {
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') || is_keyword(name) {
            return Err(FoError::BadStructure(format!("bad relation name {name:?}")));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(FoError::BadStructure(format!("{name}: tuple {t:?} does not have arity {arity}")));
            }
            if let Some(&x) = t.iter().find(|&&x| x >= self.m) {
                return Err(FoError::BadStructure(format!("{name}: element {x} outside universe of size {}", self.m)));
            }
            set.insert(t);
        }
        self.relations.insert(name.to_string(), Relation::new(self.m, arity, set));
        Ok(())
    }

    /// `E` symmetric from an undirected graph.
    pub fn from_graph(g: &crate::graph::Graph) -> Self {
        let mut s = FinStructure::new(g.n());
        let tuples = g.edges().flat_map(|(a, b)| [vec![a, b], vec![b, a]]);
        s.add_relation("E", 2, tuples).expect("graph edges are in range");
        s
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&String, &Relation)> {
        self.relations.iter()
    }

    pub fn holds(&self, name: &str, t: &[usize]) -> bool {
        self.relations.get(name).is_some_and(|r| r.contains(self.m, t))
    }
}

impl Relation {
    fn contains(&self, m: usize, t: &[usize]) -> bool {
        match &self.lookup {
            Lookup::Dense(bits) => bits[dense_index(m, t)],
            Lookup::Sparse(set) => set.contains(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom { rel: String, args: Vec<String> },
    Eq(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "and" | "or" | "not" | "implies" | "exists" | "forall" | "=")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, parts: &[Formula]| {
            write!(f, "({head}")?;
            for p in parts {
                write!(f, " {p}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::Atom { rel, args } => {
                write!(f, "({rel}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Not(p) => write!(f, "(not {p})"),
            Formula::And(ps) => list(f, "and", ps),
            Formula::Or(ps) => list(f, "or", ps),
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(v, p) => write!(f, "(exists {v} {p})"),
            Formula::Forall(v, p) => write!(f, "(forall {v} {p})"),
        }
    }
}

impl Formula {
    pub fn atom(rel: &str, args: &[&str]) -> Self {
        Formula::Atom { rel: rel.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let var = |v: &String, out: &mut BTreeSet<String>| {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(|a| var(a, out)),
            Formula::Eq(a, b) => {
                var(a, out);
                var(b, out);
            }
            Formula::Not(p) => p.collect_free(bound, out),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.collect_free(bound, out)),
            Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, p) | Formula::Forall(v, p) => {
                bound.push(v.clone());
                p.collect_free(bound, out);
                bound.pop();
            }
        }
    }
}

// ---- parsing ----

enum Sexp {
    Symbol(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn offset(&self) -> usize {
        match self {
            Sexp::Symbol(_, o) | Sexp::List(_, o) => *o,
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> FoError {
    FoError::Syntax { offset, message: message.into() }
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn read(&mut self) -> Result<Sexp, FoError> {
        self.skip_ws();
        let start = self.pos;
        match self.text[self.pos..].chars().next() {
            None => Err(syntax(start, "unexpected end of input")),
            Some(')') => Err(syntax(start, "unexpected ')'")),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.text[self.pos..].chars().next() {
                        None => return Err(syntax(self.pos, "unclosed '('")),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let len = self.text[self.pos..]
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                    .unwrap_or(self.text.len() - self.pos);
                self.pos += len;
                Ok(Sexp::Symbol(self.text[start..self.pos].to_string(), start))
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, FoError> {
    let mut r = Reader { text, pos: 0 };
    let sexp = r.read()?;
    r.skip_ws();
    if r.pos != text.len() {
        return Err(syntax(r.pos, "trailing input"));
    }
    to_formula(&sexp)
}

fn variable(s: &Sexp) -> Result<String, FoError> {
    match s {
        Sexp::Symbol(name, o) if !is_keyword(name) => {
            if name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                Ok(name.clone())
            } else {
                Err(syntax(*o, format!("bad variable name {name:?}")))
            }
        }
        other => Err(syntax(other.offset(), "expected a variable")),
    }
}

fn to_formula(s: &Sexp) -> Result<Formula, FoError> {
    let (items, offset) = match s {
        Sexp::Symbol(_, o) => return Err(syntax(*o, "expected a parenthesized formula")),
        Sexp::List(items, o) => (items, *o),
    };
    let Some(Sexp::Symbol(head, _)) = items.first() else {
        return Err(syntax(offset, "expected an operator or relation name"));
    };
    let args = &items[1..];
    let count = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(syntax(offset, format!("{head} takes {n} arguments, got {}", args.len())))
        }
    };
    Ok(match head.as_str() {
        "=" => {
            count(2)?;
            Formula::Eq(variable(&args[0])?, variable(&args[1])?)
        }
        "not" => {
            count(1)?;
            Formula::Not(Box::new(to_formula(&args[0])?))
        }
        "and" => Formula::And(args.iter().map(to_formula).collect::<Result<_, _>>()?),
        "or" => Formula::Or(args.iter().map(to_formula).collect::<Result<_, _>>()?),
        "implies" => {
            count(2)?;
            Formula::Implies(Box::new(to_formula(&args[0])?), Box::new(to_formula(&args[1])?))
        }
        "exists" | "forall" => {
            count(2)?;
            let v = variable(&args[0])?;
            let body = Box::new(to_formula(&args[1])?);
            if head == "exists" {
                Formula::Exists(v, body)
            } else {
                Formula::Forall(v, body)
            }
        }
        rel => Formula::Atom { rel: rel.to_string(), args: args.iter().map(variable).collect::<Result<_, _>>()? },
    })
}

// ---- evaluation ----

#[derive(Debug, Clone)]
enum Node {
    Atom(usize, Vec<usize>),
    Eq(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Exists(usize, Box<Node>),
    Forall(usize, Box<Node>),
}

/// A formula bound to a structure, with free variables in a fixed order.
#[derive(Debug, Clone)]
pub struct Compiled {
    root: Node,
    vars: Vec<String>,
    slots: usize,
    relations: Vec<String>,
}

pub fn compile(s: &FinStructure, phi: &Formula, vars: &[String]) -> Result<Compiled, FoError> {
    let mut scope: Vec<(String, usize)> = vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut c = Compiled { root: Node::And(Vec::new()), vars: vars.to_vec(), slots: vars.len(), relations: Vec::new() };
    c.root = bind(s, phi, &mut scope, &mut c)?;
    Ok(c)
}

fn bind(s: &FinStructure, phi: &Formula, scope: &mut Vec<(String, usize)>, c: &mut Compiled) -> Result<Node, FoError> {
    let lookup = |scope: &Vec<(String, usize)>, v: &String| {
        scope.iter().rev().find(|(n, _)| n == v).map(|(_, i)| *i).ok_or_else(|| FoError::UnboundVariable(v.clone()))
    };
    Ok(match phi {
        Formula::Atom { rel, args } => {
            let r = s.relation(rel).ok_or_else(|| FoError::UnknownRelation(rel.clone()))?;
            if r.arity != args.len() {
                return Err(FoError::ArityMismatch { name: rel.clone(), expected: r.arity, got: args.len() });
            }
            let idx = match c.relations.iter().position(|n| n == rel) {
                Some(i) => i,
                None => {
                    c.relations.push(rel.clone());
                    c.relations.len() - 1
                }
            };
            Node::Atom(idx, args.iter().map(|a| lookup(scope, a)).collect::<Result<_, _>>()?)
        }
        Formula::Eq(a, b) => Node::Eq(lookup(scope, a)?, lookup(scope, b)?),
        Formula::Not(p) => Node::Not(Box::new(bind(s, p, scope, c)?)),
        Formula::And(ps) => Node::And(ps.iter().map(|p| bind(s, p, scope, c)).collect::<Result<_, _>>()?),
        Formula::Or(ps) => Node::Or(ps.iter().map(|p| bind(s, p, scope, c)).collect::<Result<_, _>>()?),
        Formula::Implies(a, b) => Node::Implies(Box::new(bind(s, a, scope, c)?), Box::new(bind(s, b, scope, c)?)),
        Formula::Exists(v, p) | Formula::Forall(v, p) => {
            let slot = c.slots;
            c.slots += 1;
            scope.push((v.clone(), slot));
            let body = Box::new(bind(s, p, scope, c)?);
            scope.pop();
            if matches!(phi, Formula::Exists(..)) {
                Node::Exists(slot, body)
            } else {
                Node::Forall(slot, body)
            }
        }
    })
}

impl Compiled {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Truth value with `values[i]` assigned to `vars()[i]`.
    pub fn holds(&self, s: &FinStructure, values: &[usize]) -> bool {
        assert_eq!(values.len(), self.vars.len(), "one value per free variable");
        let rels: Vec<&Relation> = self.relations.iter().map(|n| &s.relations[n]).collect();
        let mut env = vec![0; self.slots];
        env[..values.len()].copy_from_slice(values);
        let mut buf = Vec::new();
        eval_node(&self.root, s.m, &rels, &mut env, &mut buf)
    }
}

fn eval_node(n: &Node, m: usize, rels: &[&Relation], env: &mut Vec<usize>, buf: &mut Vec<usize>) -> bool {
    match n {
        Node::Atom(r, args) => {
            buf.clear();
            buf.extend(args.iter().map(|&i| env[i]));
            rels[*r].contains(m, buf)
        }
        Node::Eq(a, b) => env[*a] == env[*b],
        Node::Not(p) => !eval_node(p, m, rels, env, buf),
        Node::And(ps) => ps.iter().all(|p| eval_node(p, m, rels, env, buf)),
        Node::Or(ps) => ps.iter().any(|p| eval_node(p, m, rels, env, buf)),
        Node::Implies(a, b) => !eval_node(a, m, rels, env, buf) || eval_node(b, m, rels, env, buf),
        Node::Exists(slot, p) => (0..m).any(|x| {
            env[*slot] = x;
            eval_node(p, m, rels, env, buf)
        }),
        Node::Forall(slot, p) => (0..m).all(|x| {
            env[*slot] = x;
            eval_node(p, m, rels, env, buf)
        }),
    }
}

pub fn eval(s: &FinStructure, phi: &Formula, asg: &BTreeMap<String, usize>) -> Result<bool, FoError> {
    let vars: Vec<String> = asg.keys().cloned().collect();
    if let Some(&x) = asg.values().find(|&&x| x >= s.m) {
        return Err(FoError::BadStructure(format!("assigned element {x} outside universe")));
    }
    let c = compile(s, phi, &vars)?;
    let values: Vec<usize> = asg.values().copied().collect();
    Ok(c.holds(s, &values))
}

/// Every `m^k` tuple in lexicographic order.
pub fn all_tuples(m: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (0..k).fold(1usize, |acc, _| acc.saturating_mul(m));
    (0..total).map(move |mut idx| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = idx % m;
            idx /= m;
        }
        t
    })
}

/// Satisfying assignments to `vars`, lexicographically sorted.
pub fn solutions(s: &FinStructure, phi: &Formula, vars: &[String]) -> Result<Vec<Vec<usize>>, FoError> {
    let c = compile(s, phi, vars)?;
    Ok(all_tuples(s.m, vars.len()).filter(|t| c.holds(s, t)).collect())
}

// ---- automorphisms ----

/// Colour refinement: elements in different classes are never swapped by
/// an automorphism.
/// Colour, then per-tuple (relation, position and equality mask, colour pattern).
type Signature = (usize, Vec<(usize, usize, Vec<usize>)>);

fn refined_colors(s: &FinStructure) -> Vec<usize> {
    let m = s.m;
    let mut colors = vec![0usize; m];
    let mut classes = 1;
    loop {
        let mut sigs: Vec<Signature> = (0..m).map(|v| (colors[v], Vec::new())).collect();
        for (ri, (_, r)) in s.relations.iter().enumerate() {
            for t in &r.tuples {
                let pattern: Vec<usize> = t.iter().map(|&x| colors[x]).collect();
                for (pos, &v) in t.iter().enumerate() {
                    // the equality pattern is folded into the position list
                    let same: usize = t.iter().enumerate().filter(|&(_, &x)| x == v).fold(0, |acc, (i, _)| acc | 1 << i);
                    sigs[v].1.push((ri, pos + (same << 8), pattern.clone()));
                }
            }
        }
        for s in &mut sigs {
            s.1.sort();
        }
        let mut ids: BTreeMap<&Signature, usize> = BTreeMap::new();
        for sig in &sigs {
            let next = ids.len();
            ids.entry(sig).or_insert(next);
        }
        let next: Vec<usize> = sigs.iter().map(|sig| ids[sig]).collect();
        let stable = ids.len() == classes;
        classes = ids.len();
        colors = next;
        if stable {
            return colors;
        }
    }
}

struct Search<'a> {
    s: &'a FinStructure,
    colors: Vec<usize>,
    /// Tuples containing each element, tagged with their relation.
    incident: Vec<Vec<(&'a Relation, &'a Vec<usize>)>>,
    order: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(s: &'a FinStructure, seeds: &[usize]) -> Self {
        let m = s.m;
        let mut incident: Vec<Vec<(&Relation, &Vec<usize>)>> = vec![Vec::new(); m];
        for r in s.relations.values() {
            for t in &r.tuples {
                let mut seen = Vec::new();
                for &x in t {
                    if !seen.contains(&x) {
                        seen.push(x);
                        incident[x].push((r, t));
                    }
                }
            }
        }
        // constrained elements first, then breadth-first through shared
        // tuples so each new element is checked against assigned neighbours
        let mut order: Vec<usize> = Vec::new();
        let mut placed = vec![false; m];
        let mut queue = std::collections::VecDeque::new();
        for x in seeds.iter().copied().chain(0..m) {
            if placed[x] {
                continue;
            }
            placed[x] = true;
            queue.push_back(x);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for (_, t) in &incident[v] {
                    for &y in t.iter() {
                        if !placed[y] {
                            placed[y] = true;
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        Search { s, colors: refined_colors(s), incident, order }
    }

    /// Assigning `v ↦ w` keeps every fully assigned tuple inside its relation.
    fn consistent(&self, v: usize, sigma: &[Option<usize>]) -> bool {
        let mut img = Vec::new();
        self.incident[v].iter().all(|(r, t)| {
            img.clear();
            for &x in t.iter() {
                match sigma[x] {
                    Some(y) => img.push(y),
                    None => return true,
                }
            }
            r.contains(self.s.m, &img)
        })
    }

    /// Depth-first over `order[depth..]`; `visit` returns false to stop.
    fn extend(
        &self,
        depth: usize,
        sigma: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[Option<usize>]) -> bool,
    ) -> bool {
        if depth == self.order.len() {
            return visit(sigma);
        }
        let v = self.order[depth];
        if sigma[v].is_some() {
            // pre-assigned by a constraint
            return self.extend(depth + 1, sigma, used, visit);
        }
        for w in 0..self.s.m {
            if used[w] || self.colors[w] != self.colors[v] {
                continue;
            }
            sigma[v] = Some(w);
            used[w] = true;
            if self.consistent(v, sigma) && !self.extend(depth + 1, sigma, used, visit) {
                return false;
            }
            sigma[v] = None;
            used[w] = false;
        }
        true
    }
}

/// All automorphisms, sorted lexicographically as image lists.
pub fn automorphisms(s: &FinStructure) -> Result<Vec<Vec<usize>>, FoError> {
    if s.m > MAX_LISTING {
        return Err(FoError::TooLarge { what: "automorphism listing", limit: MAX_LISTING, m: s.m });
    }
    let search = Search::new(s, &[]);
    let mut out = Vec::new();
    let mut sigma = vec![None; s.m];
    let mut used = vec![false; s.m];
    search.extend(0, &mut sigma, &mut used, &mut |sg| {
        out.push(sg.iter().map(|x| x.unwrap()).collect());
        true
    });
    out.sort();
    Ok(out)
}

/// True iff some automorphism fixes `fixed` pointwise and sends `a` to `b`.
pub fn orbit_equivalent(s: &FinStructure, a: &[usize], b: &[usize], fixed: &[usize]) -> Result<bool, FoError> {
    if s.m > MAX_ORBIT {
        return Err(FoError::TooLarge { what: "orbit search", limit: MAX_ORBIT, m: s.m });
    }
    if a.len() != b.len() {
        return Ok(false);
    }
    if let Some(&x) = a.iter().chain(b).chain(fixed).find(|&&x| x >= s.m) {
        return Err(FoError::BadStructure(format!("element {x} outside universe")));
    }
    let mut constraint: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in fixed.iter().zip(fixed).chain(a.iter().zip(b)) {
        if *constraint.entry(x).or_insert(y) != y {
            return Ok(false);
        }
    }
    let mut targets = HashSet::new();
    if !constraint.values().all(|&y| targets.insert(y)) {
        return Ok(false);
    }
    let seeds: Vec<usize> = fixed.iter().chain(a).copied().collect();
    let search = Search::new(s, &seeds);
    let mut sigma = vec![None; s.m];
    let mut used = vec![false; s.m];
    for (&x, &y) in &constraint {
        if search.colors[x] != search.colors[y] {
            return Ok(false);
        }
        sigma[x] = Some(y);
        used[y] = true;
    }
    // check constraint-only tuples before searching
    let assigned: Vec<usize> = constraint.keys().copied().collect();
    if !assigned.iter().all(|&x| search.consistent(x, &sigma)) {
        return Ok(false);
    }
    let mut found = false;
    search.extend(0, &mut sigma, &mut used, &mut |_| {
        found = true;
        false
    });
    Ok(found)
}
