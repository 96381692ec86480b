//! Normal-form arithmetic in the Mekler group of a graph: the free
//! nilpotent group of class 2 and exponent `p` on the vertices, modulo the
//! commutators of adjacent vertices.
//!
//! Every element is written uniquely as
//! `a_0^{u_0} ⋯ a_{n-1}^{u_{n-1}} · ∏ c_(i,j)^{w_(i,j)}` where `c_(i,j)` is
//! the commutator `[a_i, a_j] = a_i⁻¹ a_j⁻¹ a_i a_j` of a non-edge `i < j`.
//! Moving `a_i` left past `a_j` (`i < j`) uses
//! `a_j a_i = a_i a_j c_(i,j)⁻¹`, so the product picks up the bilinear
//! correction `w_(i,j) -= u_j(g) · u_i(h)`.

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{is_nice, Graph};
use crate::linalg::{is_prime, neg_mod, Subspace};

pub const MAX_PRIME: u32 = 17;
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("{0} is not an odd prime ≤ {MAX_PRIME}")]
    NotAnOddPrime(u32),
    #[error("graph is not nice: {0}")]
    GraphNotNice(String),
    #[error("element does not belong to this context: {0}")]
    ContextMismatch(String),
    #[error("{what} needs {count} steps, above the limit of {ENUMERATION_LIMIT}")]
    TooLarge { what: &'static str, count: u128 },
}

/// Fixes `p`, the graph, and the non-edge coordinate system.
#[derive(Debug, Clone)]
pub struct GroupContext {
    p: u32,
    graph: Graph,
    nonedges: Vec<(usize, usize)>,
    /// `pair_index[i * n + j]` is the non-edge coordinate of `(i, j)`, `i < j`.
    pair_index: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub u: Vec<u32>,
    pub w: Vec<u32>,
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        self.u.iter().chain(&self.w).all(|&x| x == 0)
    }
}

impl GroupContext {
    pub fn new(p: u32, graph: Graph, allow_non_nice: bool) -> Result<Self, GroupError> {
        if p == 2 || p > MAX_PRIME || !is_prime(p) {
            return Err(GroupError::NotAnOddPrime(p));
        }
        if !allow_non_nice {
            let report = is_nice(&graph);
            if !report.nice {
                return Err(GroupError::GraphNotNice(format!("{:?}", report.violation)));
            }
        }
        let n = graph.n();
        let nonedges = graph.nonedges();
        let mut pair_index = vec![None; n * n];
        for (k, &(i, j)) in nonedges.iter().enumerate() {
            pair_index[i * n + j] = Some(k);
        }
        Ok(GroupContext { p, graph, nonedges, pair_index })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Number of generators.
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn nonedges(&self) -> &[(usize, usize)] {
        &self.nonedges
    }

    /// Coordinate of the commutator `c_(i,j)` for `i < j`, absent for edges.
    pub fn nonedge_index(&self, i: usize, j: usize) -> Option<usize> {
        debug_assert!(i < j);
        self.pair_index[i * self.n() + j]
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { u: vec![0; self.n()], w: vec![0; self.nonedges.len()] }
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        let mut g = self.identity();
        g.u[i] = 1;
        g
    }

    /// The basis commutator `c_(i,j)` at non-edge coordinate `k`.
    pub fn commutator_basis(&self, k: usize) -> GroupElement {
        let mut g = self.identity();
        g.w[k] = 1;
        g
    }

    pub fn element(&self, u: Vec<u32>, w: Vec<u32>) -> Result<GroupElement, GroupError> {
        let g = GroupElement { u, w };
        self.validate(&g)?;
        Ok(g)
    }

    /// Element with the given generator exponents and trivial commutator part.
    pub fn from_u(&self, u: &[u32]) -> GroupElement {
        GroupElement { u: u.iter().map(|&x| x % self.p).collect(), w: vec![0; self.nonedges.len()] }
    }

    pub fn validate(&self, g: &GroupElement) -> Result<(), GroupError> {
        if g.u.len() != self.n() || g.w.len() != self.nonedges.len() {
            return Err(GroupError::ContextMismatch(format!(
                "expected |u| = {}, |w| = {}, got {} and {}",
                self.n(),
                self.nonedges.len(),
                g.u.len(),
                g.w.len()
            )));
        }
        if let Some(x) = g.u.iter().chain(&g.w).find(|&&x| x >= self.p) {
            return Err(GroupError::ContextMismatch(format!("entry {x} is not a residue mod {}", self.p)));
        }
        Ok(())
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.validate(g)?;
        self.validate(h)?;
        Ok(self.mul(g, h))
    }

    /// Product of two elements already known to be valid for this context.
    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        let p = self.p;
        let u = g.u.iter().zip(&h.u).map(|(a, b)| (a + b) % p).collect();
        let w = self
            .nonedges
            .iter()
            .zip(g.w.iter().zip(&h.w))
            .map(|(&(i, j), (a, b))| {
                let corr = g.u[j] * h.u[i] % p;
                (a + b + p - corr) % p
            })
            .collect();
        GroupElement { u, w }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        self.validate(g)?;
        Ok(self.inv(g))
    }

    pub fn inv(&self, g: &GroupElement) -> GroupElement {
        // g·g⁻¹ = e forces w' = -w - u_i·u_j on each non-edge (i, j)
        let p = self.p;
        let u = g.u.iter().map(|&a| neg_mod(a, p)).collect();
        let w = self
            .nonedges
            .iter()
            .zip(&g.w)
            .map(|(&(i, j), &a)| neg_mod((a + g.u[i] * g.u[j]) % p, p))
            .collect();
        GroupElement { u, w }
    }

    /// `g^k` by repeated squaring; `k` is reduced mod `p` (exponent `p`).
    pub fn power(&self, g: &GroupElement, k: i64) -> Result<GroupElement, GroupError> {
        self.validate(g)?;
        Ok(self.pow(g, k))
    }

    pub(crate) fn pow(&self, g: &GroupElement, k: i64) -> GroupElement {
        let mut e = k.rem_euclid(self.p as i64) as u64;
        let mut base = g.clone();
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// `[g, h] = g⁻¹ h⁻¹ g h`.
    pub fn commutator(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
        self.validate(g)?;
        self.validate(h)?;
        Ok(self.comm(g, h))
    }

    pub fn comm(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        let gi = self.inv(g);
        let hi = self.inv(h);
        self.mul(&self.mul(&gi, &hi), &self.mul(g, h))
    }

    /// The commutator-part coordinates of `[x, y]` for generator-exponent
    /// vectors: `x_i y_j - x_j y_i` at each non-edge.
    pub fn commutator_form(&self, x: &[u32], y: &[u32]) -> Vec<u32> {
        let p = self.p;
        self.nonedges
            .iter()
            .map(|&(i, j)| (x[i] * y[j] % p + p - x[j] * y[i] % p) % p)
            .collect()
    }

    /// Vertices adjacent to every other vertex. Their generator directions
    /// span the projection of the center to `G/[G,G]`.
    pub fn universal_vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.graph.degree(v) == self.n() - 1).collect()
    }

    pub fn center_u_projection(&self) -> Subspace {
        let n = self.n();
        Subspace::span(
            self.p,
            n,
            self.universal_vertices().into_iter().map(|v| {
                let mut e = vec![0; n];
                e[v] = 1;
                e
            }),
        )
    }

    /// Central iff the generator exponent vanishes on every vertex with a
    /// non-neighbour.
    pub fn is_central(&self, g: &GroupElement) -> bool {
        let universal = self.universal_vertices();
        (0..self.n()).all(|v| g.u[v] == 0 || universal.contains(&v))
    }

    /// Central iff `g` commutes with every generator, checked by multiplying.
    pub fn is_central_by_definition(&self, g: &GroupElement) -> bool {
        (0..self.n()).all(|i| {
            let a = self.generator(i);
            self.mul(g, &a) == self.mul(&a, g)
        })
    }

    /// `log_p` of the group order: `n + |non-edges|`.
    pub fn order_exponent(&self) -> usize {
        self.n() + self.nonedges.len()
    }

    pub fn group_order(&self) -> BigUint {
        BigUint::from(self.p).pow(self.order_exponent() as u32)
    }

    fn bounded_count(&self, dims: usize, what: &'static str) -> Result<u64, GroupError> {
        let count = (self.p as u128).checked_pow(dims as u32).unwrap_or(u128::MAX);
        if count > ENUMERATION_LIMIT as u128 {
            return Err(GroupError::TooLarge { what, count });
        }
        Ok(count as u64)
    }

    /// Every element exactly once, in lexicographic order of `(u, w)`.
    pub fn enumerate_elements(&self) -> Result<impl Iterator<Item = GroupElement> + '_, GroupError> {
        let total = self.bounded_count(self.order_exponent(), "element enumeration")?;
        let n = self.n();
        Ok((0..total).map(move |idx| {
            let digits = base_p_digits(idx, self.p, self.order_exponent());
            GroupElement { u: digits[..n].to_vec(), w: digits[n..].to_vec() }
        }))
    }

    /// Every generator-exponent vector of `(Z/p)^n` in lexicographic order.
    pub fn u_vectors(&self) -> Result<impl Iterator<Item = Vec<u32>> + '_, GroupError> {
        let total = self.bounded_count(self.n(), "generator-space sweep")?;
        Ok((0..total).map(move |idx| base_p_digits(idx, self.p, self.n())))
    }

    pub fn u_sweep_size(&self) -> Result<u64, GroupError> {
        self.bounded_count(self.n(), "generator-space sweep")
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        GroupElement {
            u: (0..self.n()).map(|_| rng.gen_range(0..self.p)).collect(),
            w: (0..self.nonedges.len()).map(|_| rng.gen_range(0..self.p)).collect(),
        }
    }
}

/// Most significant digit first, so index order is lexicographic order.
pub fn base_p_digits(mut idx: u64, p: u32, len: usize) -> Vec<u32> {
    let mut d = vec![0u32; len];
    for slot in d.iter_mut().rev() {
        *slot = (idx % p as u64) as u32;
        idx /= p as u64;
    }
    d
}

pub fn base_p_index(digits: &[u32], p: u32) -> u64 {
    digits.iter().fold(0u64, |acc, &x| acc * p as u64 + x as u64)
}

/// The naive collection process: words in the generators are sorted by
/// adjacent transpositions, each swap `a_j a_i → a_i a_j` (`i < j`)
/// contributing `c_(i,j)⁻¹`.
pub mod rewrite {
    use super::{GroupContext, GroupElement};

    /// Letters of the normal-form word of `g` (central part excluded).
    pub fn word(g: &GroupElement) -> Vec<usize> {
        g.u.iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect()
    }

    /// Collects `letters · central` into normal form.
    pub fn collect(ctx: &GroupContext, letters: &[usize], central: &[u32]) -> GroupElement {
        let p = ctx.p();
        let mut word = letters.to_vec();
        let mut w: Vec<u32> = central.iter().map(|&x| x % p).collect();
        let mut swapped = true;
        while swapped {
            swapped = false;
            for k in 1..word.len() {
                let (j, i) = (word[k - 1], word[k]);
                if j > i {
                    word.swap(k - 1, k);
                    if let Some(idx) = ctx.nonedge_index(i, j) {
                        w[idx] = (w[idx] + p - 1) % p;
                    }
                    swapped = true;
                }
            }
        }
        let mut u = vec![0u32; ctx.n()];
        for letter in word {
            u[letter] = (u[letter] + 1) % p;
        }
        GroupElement { u, w }
    }

    pub fn product(ctx: &GroupContext, g: &GroupElement, h: &GroupElement) -> GroupElement {
        let mut letters = word(g);
        letters.extend(word(h));
        let central: Vec<u32> = g.w.iter().zip(&h.w).map(|(a, b)| a + b).collect();
        collect(ctx, &letters, &central)
    }
}

/// A subgroup, stored as echelonized generators plus the commutator-part
/// subspace it meets in `{u = 0}`.
#[derive(Debug, Clone)]
pub struct Subgroup {
    pivots: Vec<(usize, GroupElement)>,
    kernel: Subspace,
}

impl Subgroup {
    pub fn generated_by(ctx: &GroupContext, gens: &[GroupElement]) -> Subgroup {
        let mut sg = Subgroup { pivots: Vec::new(), kernel: Subspace::zero(ctx.p(), ctx.nonedges().len()) };
        for g in gens {
            let r = sg.sift(ctx, g);
            sg.absorb(ctx, r);
        }
        let mut comms = Vec::new();
        for (a, (_, x)) in sg.pivots.iter().enumerate() {
            for (_, y) in &sg.pivots[a + 1..] {
                comms.push(ctx.comm(x, y).w);
            }
        }
        sg.kernel = Subspace::span(
            ctx.p(),
            ctx.nonedges().len(),
            sg.kernel.basis().iter().cloned().chain(comms),
        );
        sg
    }

    fn absorb(&mut self, ctx: &GroupContext, r: GroupElement) {
        match r.u.iter().position(|&x| x != 0) {
            None => self.kernel = self.kernel.with_vector(r.w),
            Some(lead) => {
                let inv = crate::linalg::inv_mod(r.u[lead], ctx.p());
                let normalized = ctx.pow(&r, inv as i64);
                let at = self.pivots.partition_point(|(c, _)| *c < lead);
                self.pivots.insert(at, (lead, normalized));
            }
        }
    }

    /// Divides out pivots in order of leading column; the residual is
    /// trivial exactly for members.
    pub fn sift(&self, ctx: &GroupContext, g: &GroupElement) -> GroupElement {
        let mut r = g.clone();
        for (col, piv) in &self.pivots {
            let c = r.u[*col];
            if c != 0 {
                r = ctx.mul(&r, &ctx.pow(piv, -(c as i64)));
            }
        }
        r
    }

    pub fn contains(&self, ctx: &GroupContext, g: &GroupElement) -> bool {
        let r = self.sift(ctx, g);
        r.u.iter().all(|&x| x == 0) && self.kernel.contains(&r.w)
    }

    /// `log_p` of the subgroup order.
    pub fn order_exponent(&self) -> usize {
        self.pivots.len() + self.kernel.dim()
    }

    pub fn u_projection(&self, ctx: &GroupContext) -> Subspace {
        Subspace::span(ctx.p(), ctx.n(), self.pivots.iter().map(|(_, g)| g.u.clone()))
    }

    pub fn pivots(&self) -> impl Iterator<Item = &GroupElement> {
        self.pivots.iter().map(|(_, g)| g)
    }

    /// Commutator parts of members with trivial generator part.
    pub fn kernel(&self) -> &Subspace {
        &self.kernel
    }

    /// A member with generator part `u`, if one exists.
    pub fn lift(&self, ctx: &GroupContext, u: &[u32]) -> Option<GroupElement> {
        let mut acc = ctx.identity();
        let mut rest = ctx.from_u(u);
        for (col, piv) in &self.pivots {
            let c = rest.u[*col];
            if c != 0 {
                let step = ctx.pow(piv, c as i64);
                acc = ctx.mul(&acc, &step);
                rest = ctx.mul(&ctx.inv(&step), &rest);
            }
        }
        rest.u.iter().all(|&x| x == 0).then_some(acc)
    }
}
