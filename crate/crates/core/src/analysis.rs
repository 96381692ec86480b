//! Centralizers, the equivalences `∼`, `≈`, `≡_Z`, the type classification
//! of non-central elements, handles, transversals, the central complement,
//! and the interpretation of the graph back out of the group.
//!
//! Commutation in a class-2 group only sees generator exponents, so every
//! relation here is decided on the `u`-part of an element by linear algebra
//! over `Z/p`. The `Analyzer` sweeps all of `(Z/p)^n` once and buckets
//! vectors by their centralizer subspace.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{graph_iso, Graph};
use crate::group::{base_p_index, GroupContext, GroupElement, GroupError, Subgroup};
use crate::linalg::Subspace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("element is of type {0:?}, not of type p")]
    NotTypeP(TypeKind),
    #[error("no type-1ν element commutes with the given type-p element")]
    NoHandleFound,
    #[error("type-p element has {0} pairwise ∼-inequivalent handles")]
    AmbiguousHandle(usize),
    #[error("transversal does not generate G modulo the center: {0}")]
    NoComplement(String),
    #[error("commutation is not ∼-class invariant between classes {0} and {1}")]
    GammaNotWellDefined(usize, usize),
}

/// `K(x) = {y : x_i y_j - x_j y_i = 0 for every non-edge (i, j)}`, the
/// image of the centralizer of any element with generator part `x` in
/// `G/Z(G)`-coordinates.
pub fn centralizer_of_u(ctx: &GroupContext, x: &[u32]) -> Subspace {
    let p = ctx.p();
    let n = ctx.n();
    let rows: Vec<Vec<u32>> = ctx
        .nonedges()
        .iter()
        .map(|&(i, j)| {
            let mut r = vec![0u32; n];
            r[j] = (r[j] + x[i]) % p;
            r[i] = (r[i] + p - x[j]) % p;
            r
        })
        .collect();
    Subspace::nullspace_of(p, n, &rows)
}

pub fn centralizer_subspace(ctx: &GroupContext, g: &GroupElement) -> Subspace {
    centralizer_of_u(ctx, &g.u)
}

/// `g ∼ h`: equal centralizers.
pub fn sim_equivalent(ctx: &GroupContext, g: &GroupElement, h: &GroupElement) -> bool {
    centralizer_of_u(ctx, &g.u) == centralizer_of_u(ctx, &h.u)
}

/// `g ≈ h`: `h = g^r · c` with `c` central. For non-central `g` only
/// `r ∈ 1..p` is admitted; with `r = 0` every central element would be
/// `≈`-below `g` and `≈ ⇒ ∼` would fail.
pub fn approx_equivalent(ctx: &GroupContext, g: &GroupElement, h: &GroupElement) -> bool {
    let zu = ctx.center_u_projection();
    let p = ctx.p();
    if zu.contains(&g.u) {
        return zu.contains(&h.u);
    }
    (1..p).any(|r| {
        let diff: Vec<u32> = h.u.iter().zip(&g.u).map(|(&b, &a)| (b + p - r * a % p) % p).collect();
        zu.contains(&diff)
    })
}

/// `g ≡_Z h`: same coset of the center.
pub fn z_equivalent(ctx: &GroupContext, g: &GroupElement, h: &GroupElement) -> bool {
    let p = ctx.p();
    let diff: Vec<u32> = h.u.iter().zip(&g.u).map(|(&b, &a)| (b + p - a) % p).collect();
    ctx.center_u_projection().contains(&diff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeKind {
    Central,
    /// Type 1, not isolated.
    OneNu,
    /// Type 1, isolated.
    OneIota,
    PMinusOne,
    TypeP,
    /// Any other `≈`-class count; cannot happen for nice graphs.
    Anomalous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeLabel {
    pub kind: TypeKind,
    /// Number of `≈`-classes in the `∼`-class (0 for central elements).
    pub q: usize,
    pub isolated: bool,
}

impl TypeLabel {
    fn from_counts(q: usize, isolated: bool, p: u32) -> Self {
        let kind = match q {
            1 if isolated => TypeKind::OneIota,
            1 => TypeKind::OneNu,
            q if q == p as usize - 1 => TypeKind::PMinusOne,
            q if q == p as usize => TypeKind::TypeP,
            _ => TypeKind::Anomalous,
        };
        TypeLabel { kind, q, isolated }
    }

    const CENTRAL: TypeLabel = TypeLabel { kind: TypeKind::Central, q: 0, isolated: false };
}

/// One `∼`-class of non-central generator-exponent vectors.
#[derive(Debug, Clone)]
pub struct SimClass {
    pub kernel: Subspace,
    /// Lexicographically least member.
    pub representative: Vec<u32>,
    pub size: usize,
    pub label: TypeLabel,
}

/// Which subgroup the `1ι`-transversal is taken independent modulo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IotaMode {
    /// Elements of types `1ν` and `p`, together with the center.
    #[default]
    NuAndP,
    /// Elements of types `1ι` and `p`, together with the center, read
    /// literally. Every `1ι` element lies in that subgroup, so the
    /// resulting `1ι`-transversal is always empty.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transversal {
    pub x_nu: Vec<GroupElement>,
    pub x_p: Vec<GroupElement>,
    pub x_iota: Vec<GroupElement>,
    /// For each `x_p[k]`, the index in `x_nu` of its handle's class.
    pub handle_of_xp: Vec<usize>,
}

impl Transversal {
    pub fn all(&self) -> impl Iterator<Item = &GroupElement> {
        self.x_nu.iter().chain(&self.x_p).chain(&self.x_iota)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: usize,
    pub name: String,
    pub pass: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransversalReport {
    pub pass: bool,
    pub clauses: Vec<ClauseResult>,
}

impl TransversalReport {
    pub fn clause(&self, k: usize) -> &ClauseResult {
        &self.clauses[k - 1]
    }
}

/// `G = ⟨X⟩ × H` with `H` central.
#[derive(Debug, Clone)]
pub struct Complement {
    /// Basis of `H` in `(u, w)` coordinates (length `n + |non-edges|`).
    pub h: Subspace,
    pub generated: Subgroup,
}

impl Complement {
    pub fn h_elements(&self, ctx: &GroupContext) -> Vec<GroupElement> {
        self.h.elements().into_iter().map(|v| split_uw(ctx, &v)).collect()
    }

    pub fn h_basis(&self, ctx: &GroupContext) -> Vec<GroupElement> {
        self.h.basis().iter().map(|v| split_uw(ctx, v)).collect()
    }
}

fn split_uw(ctx: &GroupContext, v: &[u32]) -> GroupElement {
    GroupElement { u: v[..ctx.n()].to_vec(), w: v[ctx.n()..].to_vec() }
}

fn join_uw(g: &GroupElement) -> Vec<u32> {
    g.u.iter().chain(&g.w).copied().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// `(kind, ∼-classes, vectors)` for every kind present.
    pub kinds: Vec<(TypeKind, usize, usize)>,
    pub center_dim: usize,
    pub v_nu_dim: usize,
}

/// Sweep-backed analysis of one context. Building it visits all `p^n`
/// generator-exponent vectors once.
pub struct Analyzer<'a> {
    ctx: &'a GroupContext,
    center_u: Subspace,
    classes: Vec<SimClass>,
    class_of: Vec<Option<u32>>,
    v_nu: Subspace,
}

impl<'a> Analyzer<'a> {
    pub fn new(ctx: &'a GroupContext) -> Result<Self, AnalysisError> {
        let p = ctx.p();
        let center_u = ctx.center_u_projection();
        let total = ctx.u_sweep_size()? as usize;
        let mut class_of = vec![None; total];
        let mut classes: Vec<SimClass> = Vec::new();
        let mut by_kernel: HashMap<Subspace, u32> = HashMap::new();
        for (idx, x) in ctx.u_vectors()?.enumerate() {
            if center_u.contains(&x) {
                continue;
            }
            let kernel = centralizer_of_u(ctx, &x);
            let id = *by_kernel.entry(kernel.clone()).or_insert_with(|| {
                classes.push(SimClass {
                    kernel,
                    representative: x.clone(),
                    size: 0,
                    label: TypeLabel::CENTRAL,
                });
                (classes.len() - 1) as u32
            });
            classes[id as usize].size += 1;
            class_of[idx] = Some(id);
        }
        // each ≈-class is {r·y + z : r ≠ 0, z ∈ Z_u}
        let approx_size = (p as usize - 1) * (p as usize).pow(center_u.dim() as u32);
        for c in &mut classes {
            let isolated = c.kernel.dim() == center_u.dim() + 1;
            let label = if c.size % approx_size == 0 {
                TypeLabel::from_counts(c.size / approx_size, isolated, p)
            } else {
                TypeLabel { kind: TypeKind::Anomalous, q: c.size / approx_size, isolated }
            };
            c.label = label;
        }
        let mut an = Analyzer { ctx, center_u, classes, class_of, v_nu: Subspace::zero(p, ctx.n()) };
        an.v_nu = Subspace::span(
            p,
            ctx.n(),
            an.vectors_of_kind(TypeKind::OneNu).map(|(x, _)| x),
        );
        Ok(an)
    }

    pub fn context(&self) -> &GroupContext {
        self.ctx
    }

    pub fn center_u(&self) -> &Subspace {
        &self.center_u
    }

    /// `∼`-classes ordered by their lexicographically least member.
    pub fn classes(&self) -> &[SimClass] {
        &self.classes
    }

    pub fn class_index(&self, u: &[u32]) -> Option<usize> {
        self.class_of[base_p_index(u, self.ctx.p()) as usize].map(|c| c as usize)
    }

    pub fn label_of_u(&self, u: &[u32]) -> TypeLabel {
        self.class_index(u).map_or(TypeLabel::CENTRAL, |c| self.classes[c].label)
    }

    pub fn classify(&self, g: &GroupElement) -> TypeLabel {
        self.label_of_u(&g.u)
    }

    /// All non-central vectors of a kind with their class, in lex order.
    pub fn vectors_of_kind(&self, kind: TypeKind) -> impl Iterator<Item = (Vec<u32>, usize)> + '_ {
        self.ctx
            .u_vectors()
            .expect("sweep bound checked at construction")
            .zip(self.class_of.iter())
            .filter_map(move |(x, c)| {
                let c = (*c)? as usize;
                (self.classes[c].label.kind == kind).then_some((x, c))
            })
    }

    /// Span of the generator parts of all type-`1ν` elements.
    pub fn v_nu(&self) -> &Subspace {
        &self.v_nu
    }

    /// Not a product of type-`1ν` elements.
    pub fn is_proper(&self, g: &GroupElement) -> bool {
        !self.v_nu.contains(&g.u)
    }

    pub fn summary(&self) -> SweepSummary {
        let mut map: std::collections::BTreeMap<TypeKind, (usize, usize)> = Default::default();
        for c in &self.classes {
            let e = map.entry(c.label.kind).or_default();
            e.0 += 1;
            e.1 += c.size;
        }
        SweepSummary {
            kinds: map.into_iter().map(|(k, (a, b))| (k, a, b)).collect(),
            center_dim: self.center_u.dim() + self.ctx.nonedges().len(),
            v_nu_dim: self.v_nu.dim(),
        }
    }

    /// The `∼`-class of type-`1ν` elements commuting with a type-`p`
    /// element, returned as that class's index.
    pub fn handle_class(&self, g: &GroupElement) -> Result<usize, AnalysisError> {
        let label = self.classify(g);
        if label.kind != TypeKind::TypeP {
            return Err(AnalysisError::NotTypeP(label.kind));
        }
        let k = centralizer_of_u(self.ctx, &g.u);
        let mut found: Vec<usize> = k
            .elements()
            .iter()
            .filter_map(|y| self.class_index(y))
            .filter(|&c| self.classes[c].label.kind == TypeKind::OneNu)
            .collect();
        found.sort_unstable();
        found.dedup();
        match found.len() {
            0 => Err(AnalysisError::NoHandleFound),
            1 => Ok(found[0]),
            m => Err(AnalysisError::AmbiguousHandle(m)),
        }
    }

    /// Representative (lex-least member) of the handle class of `g`.
    pub fn handle_of(&self, g: &GroupElement) -> Result<GroupElement, AnalysisError> {
        let c = self.handle_class(g)?;
        Ok(self.ctx.from_u(&self.classes[c].representative))
    }

    fn p_span(&self) -> Subspace {
        Subspace::span(self.ctx.p(), self.ctx.n(), self.vectors_of_kind(TypeKind::TypeP).map(|(x, _)| x))
    }

    fn iota_modulus(&self, mode: IotaMode) -> Subspace {
        let base = match mode {
            IotaMode::NuAndP => self.v_nu.clone(),
            IotaMode::Literal => Subspace::span(
                self.ctx.p(),
                self.ctx.n(),
                self.vectors_of_kind(TypeKind::OneIota).map(|(x, _)| x),
            ),
        };
        base.sum(&self.p_span()).sum(&self.center_u)
    }

    /// Greedy lexicographic construction of a transversal.
    pub fn build_transversal(&self, mode: IotaMode) -> Result<Transversal, AnalysisError> {
        let ctx = self.ctx;
        let mut x_nu = Vec::new();
        let mut nu_slot: HashMap<usize, usize> = HashMap::new();
        for (c, class) in self.classes.iter().enumerate() {
            if class.label.kind == TypeKind::OneNu {
                nu_slot.insert(c, x_nu.len());
                x_nu.push(ctx.from_u(&class.representative));
            }
        }

        let nu_mod = self.v_nu.sum(&self.center_u);
        let mut x_p = Vec::new();
        let mut handle_of_xp = Vec::new();
        let mut used_classes: Vec<usize> = Vec::new();
        let mut per_handle: HashMap<usize, Subspace> = HashMap::new();
        for (x, c) in self.vectors_of_kind(TypeKind::TypeP) {
            if self.v_nu.contains(&x) || used_classes.contains(&c) {
                continue;
            }
            let g = ctx.from_u(&x);
            let h = self.handle_class(&g)?;
            let span = per_handle.entry(h).or_insert_with(|| nu_mod.clone());
            if span.contains(&x) {
                continue;
            }
            *span = span.with_vector(x.clone());
            used_classes.push(c);
            handle_of_xp.push(nu_slot[&h]);
            x_p.push(g);
        }

        let mut iota_span = self.iota_modulus(mode);
        let mut x_iota = Vec::new();
        let mut iota_classes: Vec<usize> = Vec::new();
        for (x, c) in self.vectors_of_kind(TypeKind::OneIota) {
            if self.v_nu.contains(&x) || iota_classes.contains(&c) || iota_span.contains(&x) {
                continue;
            }
            iota_span = iota_span.with_vector(x.clone());
            iota_classes.push(c);
            x_iota.push(ctx.from_u(&x));
        }
        Ok(Transversal { x_nu, x_p, x_iota, handle_of_xp })
    }

    /// Re-checks every transversal clause from scratch.
    pub fn verify_transversal(&self, t: &Transversal, mode: IotaMode) -> TransversalReport {
        let clauses = vec![
            self.check_nu_clause(t),
            self.check_p_clause(t),
            self.check_iota_clause(t, mode),
            self.check_handle_clause(t),
        ];
        TransversalReport { pass: clauses.iter().all(|c| c.pass), clauses }
    }

    fn clause(k: usize, name: &str, failure: Option<String>) -> ClauseResult {
        ClauseResult { clause: k, name: name.to_string(), pass: failure.is_none(), detail: failure }
    }

    fn check_nu_clause(&self, t: &Transversal) -> ClauseResult {
        let mut seen = Vec::new();
        let failure = (|| {
            for g in &t.x_nu {
                let c = self.class_index(&g.u).ok_or_else(|| format!("{:?} is central", g.u))?;
                if self.classes[c].label.kind != TypeKind::OneNu {
                    return Err(format!("{:?} is not of type 1ν", g.u));
                }
                if seen.contains(&c) {
                    return Err(format!("{:?} repeats a ∼-class", g.u));
                }
                seen.push(c);
            }
            for (c, class) in self.classes.iter().enumerate() {
                if class.label.kind == TypeKind::OneNu && !seen.contains(&c) {
                    return Err(format!("∼-class of {:?} has no representative", class.representative));
                }
            }
            Ok(())
        })()
        .err();
        Self::clause(1, "1ν-transversal", failure)
    }

    fn check_p_clause(&self, t: &Transversal) -> ClauseResult {
        let nu_mod = self.v_nu.sum(&self.center_u);
        let failure = (|| {
            let mut classes = Vec::new();
            let mut groups: HashMap<usize, Vec<Vec<u32>>> = HashMap::new();
            for g in &t.x_p {
                let c = self.class_index(&g.u).ok_or_else(|| format!("{:?} is central", g.u))?;
                if self.classes[c].label.kind != TypeKind::TypeP || !self.is_proper(g) {
                    return Err(format!("{:?} is not a proper type-p element", g.u));
                }
                if classes.contains(&c) {
                    return Err(format!("{:?} repeats a ∼-class", g.u));
                }
                classes.push(c);
                let h = self.handle_class(g).map_err(|e| e.to_string())?;
                groups.entry(h).or_default().push(g.u.clone());
            }
            for (h, vecs) in &groups {
                let span = Subspace::span(self.ctx.p(), self.ctx.n(), vecs.iter().cloned()).sum(&nu_mod);
                if span.dim() != nu_mod.dim() + vecs.len() {
                    return Err(format!("elements with handle class {h} are dependent modulo V_ν"));
                }
            }
            // maximality
            for (x, c) in self.vectors_of_kind(TypeKind::TypeP) {
                if self.v_nu.contains(&x) || classes.contains(&c) {
                    continue;
                }
                let h = self.handle_class(&self.ctx.from_u(&x)).map_err(|e| e.to_string())?;
                let span = Subspace::span(
                    self.ctx.p(),
                    self.ctx.n(),
                    groups.get(&h).into_iter().flatten().cloned(),
                )
                .sum(&nu_mod);
                if !span.contains(&x) {
                    return Err(format!("{x:?} could be added: not maximal"));
                }
            }
            Ok(())
        })()
        .err();
        Self::clause(2, "p-transversal", failure)
    }

    fn check_iota_clause(&self, t: &Transversal, mode: IotaMode) -> ClauseResult {
        let modulus = self.iota_modulus(mode);
        let failure = (|| {
            let mut classes = Vec::new();
            for g in &t.x_iota {
                let c = self.class_index(&g.u).ok_or_else(|| format!("{:?} is central", g.u))?;
                if self.classes[c].label.kind != TypeKind::OneIota || !self.is_proper(g) {
                    return Err(format!("{:?} is not a proper type-1ι element", g.u));
                }
                if classes.contains(&c) {
                    return Err(format!("{:?} repeats a ∼-class", g.u));
                }
                classes.push(c);
            }
            let span = Subspace::span(self.ctx.p(), self.ctx.n(), t.x_iota.iter().map(|g| g.u.clone()))
                .sum(&modulus);
            if span.dim() != modulus.dim() + t.x_iota.len() {
                return Err("1ι-transversal is dependent modulo the reference subgroup".into());
            }
            for (x, c) in self.vectors_of_kind(TypeKind::OneIota) {
                if !self.v_nu.contains(&x) && !classes.contains(&c) && !span.contains(&x) {
                    return Err(format!("{x:?} could be added: not maximal"));
                }
            }
            Ok(())
        })()
        .err();
        Self::clause(3, "1ι-transversal", failure)
    }

    fn check_handle_clause(&self, t: &Transversal) -> ClauseResult {
        let failure = (|| {
            if t.handle_of_xp.len() != t.x_p.len() {
                return Err("handle map length differs from x_p".to_string());
            }
            for (g, &slot) in t.x_p.iter().zip(&t.handle_of_xp) {
                let rep = t.x_nu.get(slot).ok_or_else(|| format!("handle index {slot} out of range"))?;
                let h = self.handle_class(g).map_err(|e| e.to_string())?;
                if self.class_index(&rep.u) != Some(h) {
                    return Err(format!("handle of {:?} is not x_nu[{slot}]", g.u));
                }
            }
            Ok(())
        })()
        .err();
        Self::clause(4, "handles", failure)
    }

    /// A central `H` with `G = ⟨X⟩ × H`.
    pub fn complement_h(&self, t: &Transversal) -> Result<Complement, AnalysisError> {
        let ctx = self.ctx;
        let (p, n, m) = (ctx.p(), ctx.n(), ctx.nonedges().len());
        let gens: Vec<GroupElement> = t.all().cloned().collect();
        let generated = Subgroup::generated_by(ctx, &gens);
        let ux = generated.u_projection(ctx);
        if ux.sum(&self.center_u).dim() != n {
            return Err(AnalysisError::NoComplement(format!(
                "⟨X⟩Z(G) has generator rank {} < {n}",
                ux.sum(&self.center_u).dim()
            )));
        }
        // ⟨X⟩ ∩ Z(G) in (u, w) coordinates
        let mut meet: Vec<Vec<u32>> = Vec::new();
        for z in ux.intersection(&self.center_u).basis() {
            let lifted = generated.lift(ctx, z).expect("vector lies in the u-projection");
            meet.push(join_uw(&lifted));
        }
        for w in generated.kernel().basis() {
            meet.push(std::iter::repeat_n(0, n).chain(w.iter().copied()).collect());
        }
        let mut span = Subspace::span(p, n + m, meet);
        let base_dim = span.dim();
        let center_basis = self
            .center_u
            .basis()
            .iter()
            .map(|z| z.iter().copied().chain(std::iter::repeat_n(0, m)).collect::<Vec<u32>>())
            .chain((0..m).map(|k| {
                let mut v = vec![0u32; n + m];
                v[n + k] = 1;
                v
            }));
        let mut chosen = Vec::new();
        for v in center_basis {
            if !span.contains(&v) {
                span = span.with_vector(v.clone());
                chosen.push(v);
            }
        }
        debug_assert_eq!(span.dim(), base_dim + chosen.len());
        Ok(Complement { h: Subspace::span(p, n + m, chosen), generated })
    }

    /// Graph on the `∼`-classes of type-`1ν` elements, adjacent when their
    /// members commute. Vertex order follows class order.
    pub fn gamma(&self) -> Result<Graph, AnalysisError> {
        let nu: Vec<usize> = (0..self.classes.len())
            .filter(|&c| self.classes[c].label.kind == TypeKind::OneNu)
            .collect();
        let members: HashMap<usize, Vec<Vec<u32>>> = {
            let mut map: HashMap<usize, Vec<Vec<u32>>> = HashMap::new();
            for (x, c) in self.vectors_of_kind(TypeKind::OneNu) {
                map.entry(c).or_default().push(x);
            }
            map
        };
        let mut edges = Vec::new();
        for (a, &ca) in nu.iter().enumerate() {
            for (b, &cb) in nu.iter().enumerate().skip(a + 1) {
                let rep_commute = self.classes[ca].kernel.contains(&self.classes[cb].representative);
                // commutation must not depend on the chosen members
                for x in &members[&ca] {
                    let kx = centralizer_of_u(self.ctx, x);
                    if members[&cb].iter().any(|y| kx.contains(y) != rep_commute) {
                        return Err(AnalysisError::GammaNotWellDefined(ca, cb));
                    }
                }
                if rep_commute {
                    edges.push((a, b));
                }
            }
        }
        if nu.is_empty() {
            return Err(AnalysisError::NoComplement("no type-1ν elements".into()));
        }
        Ok(Graph::from_edges(nu.len(), edges).expect("class graph is simple"))
    }

    pub fn gamma_roundtrip(&self) -> Result<Option<Vec<usize>>, AnalysisError> {
        Ok(graph_iso(&self.gamma()?, self.ctx.graph()))
    }
}
