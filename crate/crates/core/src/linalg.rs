//! Linear algebra over the prime field `Z/p`.
//!
//! Vectors are plain `Vec<u32>` with every entry reduced into `0..p`.
//! [`Subspace`] keeps its basis in reduced row-echelon form, so two
//! subspaces are equal exactly when their bases are equal.

use std::fmt;

/// Multiplicative inverse of a nonzero residue modulo a prime.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p), "zero has no inverse");
    pow_mod(a, p - 2, p)
}

pub fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let p64 = p as u64;
    let mut acc = 1u64 % p64;
    let mut b = (base % p) as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p64;
        }
        b = b * b % p64;
        exp >>= 1;
    }
    acc as u32
}

#[inline]
pub fn neg_mod(a: u32, p: u32) -> u32 {
    (p - a % p) % p
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Reduces `rows` in place to reduced row-echelon form and drops zero rows.
/// Returns the pivot column of each surviving row.
pub fn rref(rows: &mut Vec<Vec<u32>>, p: u32) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = inv_mod(rows[r][col], p);
        for x in rows[r].iter_mut() {
            *x = (*x as u64 * inv as u64 % p as u64) as u32;
        }
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[col] != 0 {
                let f = row[col];
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    let sub = (f as u64 * y as u64 % p as u64) as u32;
                    *x = (*x + p - sub) % p;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// Basis of the solution space `{y : M·y = 0}` for a matrix given by rows
/// over `ncols` columns.
pub fn nullspace(rows: &[Vec<u32>], ncols: usize, p: u32) -> Vec<Vec<u32>> {
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let pivots = rref(&mut m, p);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u32; ncols];
        v[free] = 1;
        for (row, &pc) in m.iter().zip(&pivots) {
            v[pc] = neg_mod(row[free], p);
        }
        basis.push(v);
    }
    basis
}

/// A linear subspace of `(Z/p)^n` in canonical RREF.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    p: u32,
    n: usize,
    basis: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(p: u32, n: usize) -> Self {
        Subspace { p, n, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(p: u32, n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut v = vec![0; n];
                v[i] = 1;
                v
            })
            .collect();
        Subspace { p, n, basis, pivots: (0..n).collect() }
    }

    pub fn span<I>(p: u32, n: usize, vectors: I) -> Self
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let mut rows: Vec<Vec<u32>> = vectors
            .into_iter()
            .map(|v| {
                assert_eq!(v.len(), n, "vector length does not match ambient dimension");
                v.into_iter().map(|x| x % p).collect()
            })
            .collect();
        let pivots = rref(&mut rows, p);
        Subspace { p, n, basis: rows, pivots }
    }

    pub fn nullspace_of(p: u32, n: usize, rows: &[Vec<u32>]) -> Self {
        Self::span(p, n, nullspace(rows, n, p))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Ambient dimension.
    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Subtracts basis rows to clear pivot columns; the residual is zero
    /// exactly when `v` is a member.
    pub fn reduce(&self, v: &[u32]) -> Vec<u32> {
        let p = self.p as u64;
        let mut r: Vec<u32> = v.iter().map(|&x| x % self.p).collect();
        for (row, &pc) in self.basis.iter().zip(&self.pivots) {
            let f = r[pc] as u64;
            if f != 0 {
                for (x, &b) in r.iter_mut().zip(row) {
                    *x = ((*x as u64 + p - f * b as u64 % p) % p) as u32;
                }
            }
        }
        r
    }

    /// Coordinates of a member in terms of the RREF basis.
    pub fn coordinates(&self, v: &[u32]) -> Option<Vec<u32>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&pc| v[pc] % self.p).collect())
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::span(
            self.p,
            self.n,
            self.basis.iter().chain(other.basis.iter()).cloned(),
        )
    }

    pub fn with_vector(&self, v: Vec<u32>) -> Subspace {
        Subspace::span(self.p, self.n, self.basis.iter().cloned().chain(std::iter::once(v)))
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        // Solve a·A = b·B: nullspace of the stacked transpose.
        let (da, db) = (self.dim(), other.dim());
        if da == 0 || db == 0 {
            return Subspace::zero(self.p, self.n);
        }
        let rows: Vec<Vec<u32>> = (0..self.n)
            .map(|c| {
                self.basis
                    .iter()
                    .map(|r| r[c])
                    .chain(other.basis.iter().map(|r| neg_mod(r[c], self.p)))
                    .collect()
            })
            .collect();
        let sols = nullspace(&rows, da + db, self.p);
        let p = self.p as u64;
        let vecs = sols.into_iter().map(|s| {
            let mut v = vec![0u32; self.n];
            for (coef, row) in s[..da].iter().zip(&self.basis) {
                for (x, &b) in v.iter_mut().zip(row) {
                    *x = ((*x as u64 + *coef as u64 * b as u64) % p) as u32;
                }
            }
            v
        });
        Subspace::span(self.p, self.n, vecs)
    }

    /// Every member, in increasing coefficient order. Caller bounds `p^dim`.
    pub fn elements(&self) -> Vec<Vec<u32>> {
        let p = self.p as u64;
        let mut out = vec![vec![0u32; self.n]];
        for row in &self.basis {
            let mut next = Vec::with_capacity(out.len() * self.p as usize);
            for v in &out {
                for c in 0..self.p as u64 {
                    next.push(
                        v.iter()
                            .zip(row)
                            .map(|(&x, &b)| ((x as u64 + c * b as u64) % p) as u32)
                            .collect(),
                    );
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(p={}, n={}, basis={:?})", self.p, self.n, self.basis)
    }
}
