//! Finite symplectic spaces, lagrangians in canonical form, enhanced
//! (sign-decorated) lagrangians and the symplectic group action.
//!
//! Coordinates: a vector of `M = F_p^{2d}` lists its `e`-coordinates, then its
//! `f`-coordinates, and `ω(u, v) = Σ u_{e_i} v_{f_i} − u_{f_i} v_{e_i}`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::ControlFlow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, Fp, Matrix};
use crate::values::{check_prime, legendre, Sign};

/// Default cap on the number of lagrangians [`enumerate_lagrangians`] will materialize.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymplecticSpace {
    p: u32,
    d: usize,
}

impl SymplecticSpace {
    pub fn new(p: u32, d: usize) -> Result<Self> {
        check_prime(p)?;
        Ok(SymplecticSpace { p, d })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        2 * self.d
    }

    pub fn field(&self) -> Fp {
        Fp::new(self.p)
    }

    /// dim 𝓛(M) = d(d+1)/2.
    pub fn lag_dim(&self) -> i64 {
        (self.d * (self.d + 1) / 2) as i64
    }

    /// |M| = p^{2d}.
    pub fn size(&self) -> usize {
        (self.p as usize).pow(2 * self.d as u32)
    }

    #[inline]
    pub fn omega(&self, u: &[u32], v: &[u32]) -> u32 {
        let d = self.d;
        let p = self.p as u64;
        let mut acc = 0u64;
        for i in 0..d {
            acc += u[i] as u64 * v[d + i] as u64 + (p - u[d + i] as u64) * v[i] as u64;
        }
        (acc % p) as u32
    }

    /// Gram matrix of ω on the given rows.
    pub fn gram(&self, a: &Matrix, b: &Matrix) -> Matrix {
        let mut g = Matrix::zeros(a.rows(), b.rows());
        for i in 0..a.rows() {
            for j in 0..b.rows() {
                g.set(i, j, self.omega(a.row(i), b.row(j)));
            }
        }
        g
    }

    pub fn e(&self, i: usize) -> Vec<u32> {
        let mut v = vec![0; self.dim()];
        v[i] = 1;
        v
    }

    pub fn f(&self, i: usize) -> Vec<u32> {
        let mut v = vec![0; self.dim()];
        v[self.d + i] = 1;
        v
    }

    /// Π_{i=1..d} (p^i + 1).
    pub fn lagrangian_count(&self) -> u128 {
        (1..=self.d as u32).map(|i| (self.p as u128).pow(i) + 1).product()
    }

    pub fn is_isotropic(&self, rows: &Matrix) -> bool {
        self.gram(rows, rows).is_zero()
    }

    /// Basis of the ω-orthogonal of the row space.
    pub fn perp(&self, rows: &Matrix) -> Matrix {
        if rows.rows() == 0 {
            return Matrix::identity(self.dim());
        }
        // ω(x, v) = x · J v with J v = (v_f, −v_e)
        let f = self.field();
        let jv: Vec<Vec<u32>> = (0..rows.rows())
            .map(|r| {
                let v = rows.row(r);
                let mut w = v[self.d..].to_vec();
                w.extend(v[..self.d].iter().map(|&x| f.neg(x)));
                w
            })
            .collect();
        Matrix::from_rows(self.dim(), &jv).right_kernel(f).rref(f).0
    }
}

/// A lagrangian subspace, stored by its RREF basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lagrangian {
    space: SymplecticSpace,
    basis: Matrix,
    pivots: Vec<usize>,
}

impl Lagrangian {
    /// Canonicalizes a spanning set; fails unless it spans a lagrangian.
    pub fn from_rows(space: SymplecticSpace, rows: &Matrix) -> Result<Self> {
        if rows.cols() != space.dim() {
            return Err(Error::Dimension(format!("expected {} columns, got {}", space.dim(), rows.cols())));
        }
        let (basis, pivots) = rows.rref(space.field());
        if pivots.len() != space.d() {
            return Err(Error::NotLagrangian(format!("rank {} != {}", pivots.len(), space.d())));
        }
        if !space.is_isotropic(&basis) {
            return Err(Error::NotLagrangian("not isotropic".into()));
        }
        Ok(Lagrangian { space, basis, pivots })
    }

    pub fn from_vectors(space: SymplecticSpace, rows: &[Vec<u32>]) -> Result<Self> {
        Self::from_rows(space, &Matrix::from_rows(space.dim(), rows))
    }

    /// span(e_1, …, e_d).
    pub fn standard_e(space: SymplecticSpace) -> Self {
        let rows: Vec<Vec<u32>> = (0..space.d()).map(|i| space.e(i)).collect();
        Self::from_vectors(space, &rows).expect("standard lagrangian")
    }

    /// span(f_1, …, f_d).
    pub fn standard_f(space: SymplecticSpace) -> Self {
        let rows: Vec<Vec<u32>> = (0..space.d()).map(|i| space.f(i)).collect();
        Self::from_vectors(space, &rows).expect("standard lagrangian")
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Non-pivot columns; the standard vectors there span a complement.
    pub fn complement_cols(&self) -> Vec<usize> {
        (0..self.space.dim()).filter(|c| !self.pivots.contains(c)).collect()
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        let f = self.space.field();
        let coords = self.coords(v);
        self.basis.vec_mul(f, &coords) == v
    }

    /// Coordinates of a vector of `L` in the canonical basis (read at the pivots).
    pub fn coords(&self, v: &[u32]) -> Vec<u32> {
        self.pivots.iter().map(|&c| v[c]).collect()
    }

    /// λ with `wedge(rows) = λ · t_L`, for `d` rows lying in `L`.
    pub fn wedge_coefficient(&self, rows: &Matrix) -> u32 {
        rows.select_cols(&self.pivots).det(self.space.field())
    }

    /// Row-major residues, used for stable ordering and serialization.
    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.basis.row_vecs()
    }

    pub fn to_record(&self) -> LagrangianRecord {
        LagrangianRecord { p: self.space.p(), d: self.space.d(), rows: self.rows() }
    }

    pub fn from_record(rec: &LagrangianRecord) -> Result<Self> {
        let space = SymplecticSpace::new(rec.p, rec.d)?;
        let l = Self::from_vectors(space, &rec.rows)?;
        if l.rows() != rec.rows {
            return Err(Error::NotLagrangian("record is not in canonical form".into()));
        }
        Ok(l)
    }
}

impl PartialOrd for Lagrangian {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Enumeration order: pivot set, then basis entries row-major.
impl Ord for Lagrangian {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.space, &self.pivots, self.basis.data()).cmp(&(other.space, &other.pivots, other.basis.data()))
    }
}

impl fmt::Display for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "span[{}]", rows.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagrangianRecord {
    pub p: u32,
    pub d: usize,
    pub rows: Vec<Vec<u32>>,
}

/// A lagrangian with the square class of a square root of its determinant line.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnhancedLagrangian {
    pub lag: Lagrangian,
    pub eps: Sign,
}

impl EnhancedLagrangian {
    pub fn new(lag: Lagrangian, eps: Sign) -> Self {
        EnhancedLagrangian { lag, eps }
    }

    pub fn plus(lag: Lagrangian) -> Self {
        Self::new(lag, Sign::Plus)
    }

    pub fn flipped(&self) -> Self {
        Self::new(self.lag.clone(), self.eps.flip())
    }

    pub fn space(&self) -> SymplecticSpace {
        self.lag.space()
    }
}

impl fmt::Display for EnhancedLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lag, self.eps)
    }
}

/// Visits all lagrangians in enumeration order until `visit` breaks.
pub fn visit_lagrangians<B>(space: SymplecticSpace, mut visit: impl FnMut(&Lagrangian) -> ControlFlow<B>) -> ControlFlow<B> {
    let d = space.d();
    let n = space.dim();
    for pivots in combinations(n, d) {
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(d);
        visit_rows(space, &pivots, &mut rows, &mut visit)?;
    }
    ControlFlow::Continue(())
}

fn visit_rows<B>(
    space: SymplecticSpace,
    pivots: &[usize],
    rows: &mut Vec<Vec<u32>>,
    visit: &mut impl FnMut(&Lagrangian) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let r = rows.len();
    if r == pivots.len() {
        let basis = Matrix::from_rows(space.dim(), rows);
        let lag = Lagrangian { space, basis, pivots: pivots.to_vec() };
        return visit(&lag);
    }
    let pc = pivots[r];
    let free: Vec<usize> = (pc + 1..space.dim()).filter(|c| !pivots.contains(c)).collect();
    let p = space.p() as usize;
    let total = p.pow(free.len() as u32);
    for idx in 0..total {
        let mut row = vec![0u32; space.dim()];
        row[pc] = 1;
        // last free column varies fastest
        let mut rem = idx;
        for &c in free.iter().rev() {
            row[c] = (rem % p) as u32;
            rem /= p;
        }
        if rows.iter().all(|prev| space.omega(prev, &row) == 0) {
            rows.push(row);
            let flow = visit_rows(space, pivots, rows, visit);
            rows.pop();
            flow?;
        }
    }
    ControlFlow::Continue(())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// All lagrangians, in enumeration order.
pub fn enumerate_lagrangians(space: SymplecticSpace, budget: u128) -> Result<Vec<Lagrangian>> {
    let count = space.lagrangian_count();
    if count > budget {
        return Err(Error::Budget { count, budget });
    }
    let mut out = Vec::with_capacity(count as usize);
    let _ = visit_lagrangians::<()>(space, |l| {
        out.push(l.clone());
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// Both signs of every lagrangian, in enumeration order.
pub fn enumerate_enhanced(space: SymplecticSpace, budget: u128) -> Result<Vec<EnhancedLagrangian>> {
    Ok(enumerate_lagrangians(space, budget)?
        .into_iter()
        .flat_map(|l| Sign::all().map(|s| EnhancedLagrangian::new(l.clone(), s)))
        .collect())
}

pub fn intersect_dim(l1: &Lagrangian, l2: &Lagrangian) -> usize {
    let f = l1.space.field();
    2 * l1.space.d() - l1.basis.stack(&l2.basis).rank(f)
}

pub fn intersection(l1: &Lagrangian, l2: &Lagrangian) -> Matrix {
    field::intersect(l1.space.field(), &l1.basis, &l2.basis)
}

pub fn is_transverse(l1: &Lagrangian, l2: &Lagrangian) -> bool {
    intersect_dim(l1, l2) == 0
}

/// Splits `v = a + b` along `M = A ⊕ B` for transverse lagrangians; returns `(a, b)`.
pub fn split_along(a: &Lagrangian, b: &Lagrangian, v: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let f = a.space.field();
    let stacked = a.basis.stack(&b.basis);
    let x = stacked.solve_left(f, v).expect("transverse lagrangians span M");
    let d = a.space.d();
    (a.basis.vec_mul(f, &x[..d]), b.basis.vec_mul(f, &x[d..]))
}

/// The map `b: L → N` with `R = {l + b(l)}`, as a matrix acting on row coordinates:
/// `coords_N(b(l)) = coords_L(l) · B`.
pub fn graph_map(r: &Lagrangian, n: &Lagrangian, l: &Lagrangian) -> Result<Matrix> {
    if !is_transverse(n, l) {
        return Err(Error::NotTransverse("graph_map needs N ∩ L = 0".into()));
    }
    if !is_transverse(n, r) {
        return Err(Error::NotTransverse("graph_map needs N ∩ R = 0".into()));
    }
    let space = l.space;
    let f = space.field();
    let d = space.d();
    let stacked = l.basis.stack(&n.basis);
    let mut x = Matrix::zeros(d, d);
    let mut y = Matrix::zeros(d, d);
    for j in 0..d {
        let c = stacked.solve_left(f, r.basis.row(j)).expect("basis of M");
        for k in 0..d {
            x.set(j, k, c[k]);
            y.set(j, k, c[d + k]);
        }
    }
    let xinv = x.inverse(f).expect("R is a graph over L");
    Ok(xinv.mul(f, &y))
}

/// The form `(l_i, l_j) ↦ ω(l_i, b(l_j))` on the canonical basis of `L`.
pub fn graph_gram(n: &Lagrangian, l: &Lagrangian, b: &Matrix) -> Matrix {
    let f = l.space.field();
    let images = b.mul(f, n.basis());
    l.space.gram(l.basis(), &images)
}

/// First lagrangian in enumeration order transverse to every member of `avoid`.
pub fn pick_transverse(space: SymplecticSpace, avoid: &[&Lagrangian]) -> Result<Lagrangian> {
    match visit_lagrangians(space, |l| {
        if avoid.iter().all(|a| is_transverse(a, l)) {
            ControlFlow::Break(l.clone())
        } else {
            ControlFlow::Continue(())
        }
    }) {
        ControlFlow::Break(l) => Ok(l),
        ControlFlow::Continue(()) => Err(Error::NoTransverse),
    }
}

/// λ with `ε(t_L) = λ·t_N` for `ε: L → N`, `l ↦` the `N`-component of `l` along `S`.
pub fn projection_scalar(l: &Lagrangian, n: &Lagrangian, s: &Lagrangian) -> u32 {
    let images: Vec<Vec<u32>> = l.rows().iter().map(|row| split_along(n, s, row).0).collect();
    n.wedge_coefficient(&Matrix::from_rows(l.space.dim(), &images))
}

/// A square-class comparison for a pair of lagrangians of the same space.
///
/// With `K = R ∩ L`, write `t_R = α⁻¹·t_K ∧ r'` and `t_L = β⁻¹·t_K ∧ l'` for
/// complements `r'`, `l'`, and pair `R/K` with `L/K` by `⟨r, l⟩ = ω(r, l)`,
/// with Gram determinant `γ`. The result is `legendre(αβγ)`; it does not
/// depend on the complements. Swapping the arguments multiplies it by
/// `legendre(−1)^{d − dim K}`.
pub fn stratum_sign(r: &Lagrangian, l: &Lagrangian) -> Sign {
    let space = r.space;
    let f = space.field();
    let k = intersection(r, l);
    let extend = |lag: &Lagrangian| -> (Matrix, Matrix) {
        let mut full = k.clone();
        let mut extra = Matrix::zeros(0, space.dim());
        for row in lag.rows() {
            let cand = full.stack(&Matrix::from_rows(space.dim(), &[row.clone()]));
            if cand.rank(f) > full.rows() {
                full = cand;
                extra = extra.stack(&Matrix::from_rows(space.dim(), &[row]));
            }
        }
        (full, extra)
    };
    let (zr, r_extra) = extend(r);
    let (zl, l_extra) = extend(l);
    let alpha = r.wedge_coefficient(&zr);
    let beta = l.wedge_coefficient(&zl);
    let gamma = if r_extra.rows() == 0 { 1 } else { space.gram(&r_extra, &l_extra).det(f) };
    legendre(space.p(), f.mul(f.mul(alpha, beta), gamma)).expect("nonzero comparison scalar")
}

/// τ-composition of pair classes.
pub fn pair_sign_compose(eps1: Sign, eps2: Sign) -> Sign {
    eps1 * eps2
}

/// An element of Sp(M), acting on column vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpElement {
    space: SymplecticSpace,
    mat: Matrix,
}

impl SpElement {
    pub fn new(space: SymplecticSpace, mat: Matrix) -> Result<Self> {
        if mat.rows() != space.dim() || mat.cols() != space.dim() {
            return Err(Error::Dimension("symplectic matrix shape".into()));
        }
        let g = SpElement { space, mat };
        if !g.is_symplectic() {
            return Err(Error::NotSymplectic);
        }
        Ok(g)
    }

    fn is_symplectic(&self) -> bool {
        let cols = self.mat.transpose();
        let n = self.space.dim();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let expect = self.space.omega(&self.space_basis(i), &self.space_basis(j));
                self.space.omega(cols.row(i), cols.row(j)) == expect
            })
        })
    }

    fn space_basis(&self, i: usize) -> Vec<u32> {
        let mut v = vec![0; self.space.dim()];
        v[i] = 1;
        v
    }

    pub fn identity(space: SymplecticSpace) -> Self {
        SpElement { space, mat: Matrix::identity(space.dim()) }
    }

    /// `x ↦ x + c·ω(x, v)·v`.
    pub fn transvection(space: SymplecticSpace, v: &[u32], c: u32) -> Self {
        let f = space.field();
        let d = space.d();
        let n = space.dim();
        // ω(x, v) = x · w with w = (v_f, −v_e)
        let mut w = v[d..].to_vec();
        w.extend(v[..d].iter().map(|&x| f.neg(x)));
        let mut mat = Matrix::identity(n);
        for r in 0..n {
            for col in 0..n {
                let extra = f.mul(c, f.mul(v[r], w[col]));
                mat.set(r, col, f.add(mat.get(r, col), extra));
            }
        }
        SpElement { space, mat }
    }

    /// A product of `steps` random nontrivial transvections.
    pub fn random<R: Rng + ?Sized>(space: SymplecticSpace, rng: &mut R, steps: usize) -> Self {
        let mut g = Self::identity(space);
        if space.dim() == 0 {
            return g;
        }
        let p = space.p();
        for _ in 0..steps {
            let v: Vec<u32> = loop {
                let v: Vec<u32> = (0..space.dim()).map(|_| rng.gen_range(0..p)).collect();
                if v.iter().any(|&x| x != 0) {
                    break v;
                }
            };
            let c = rng.gen_range(1..p);
            g = g.compose(&Self::transvection(space, &v, c));
        }
        g
    }

    /// Every element of Sp(M), by brute force; only for `2d = 2`.
    pub fn all_elements(space: SymplecticSpace) -> Result<Vec<SpElement>> {
        if space.d() != 1 {
            return Err(Error::Dimension("brute-force enumeration of Sp only for d = 1".into()));
        }
        let p = space.p();
        let f = space.field();
        let mut out = Vec::new();
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for dd in 0..p {
                        if f.sub(f.mul(a, dd), f.mul(b, c)) == 1 {
                            out.push(SpElement { space, mat: Matrix::from_rows(2, &[vec![a, b], vec![c, dd]]) });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SpElement) -> SpElement {
        SpElement { space: self.space, mat: self.mat.mul(self.space.field(), &other.mat) }
    }

    pub fn inverse(&self) -> SpElement {
        SpElement { space: self.space, mat: self.mat.inverse(self.space.field()).expect("symplectic matrices are invertible") }
    }

    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        self.mat.mul_vec(self.space.field(), v)
    }

    /// `(gL, λ)` with `g(t_L) = λ·t_{gL}`.
    pub fn act_lagrangian(&self, l: &Lagrangian) -> (Lagrangian, u32) {
        let f = self.space.field();
        let moved = l.basis.mul(f, &self.mat.transpose());
        let gl = Lagrangian::from_rows(self.space, &moved).expect("symplectic maps preserve lagrangians");
        let lambda = gl.wedge_coefficient(&moved);
        (gl, lambda)
    }
}

/// `g·(L, ε) = (gL, ε·legendre(λ))` where `g(t_L) = λ·t_{gL}`.
pub fn act(g: &SpElement, l0: &EnhancedLagrangian) -> EnhancedLagrangian {
    let (gl, lambda) = g.act_lagrangian(&l0.lag);
    let cls = legendre(g.space.p(), lambda).expect("λ is a unit");
    EnhancedLagrangian::new(gl, l0.eps * cls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp(p: u32, d: usize) -> SymplecticSpace {
        SymplecticSpace::new(p, d).unwrap()
    }

    fn line(space: SymplecticSpace, v: Vec<u32>) -> Lagrangian {
        Lagrangian::from_vectors(space, &[v]).unwrap()
    }

    #[test]
    fn counts_match_product_formula() {
        for (p, d, n) in [(3, 1, 4), (3, 2, 40), (5, 1, 6), (5, 2, 156), (3, 3, 1120), (7, 1, 8)] {
            let s = sp(p, d);
            let all = enumerate_lagrangians(s, DEFAULT_ENUMERATION_BUDGET).unwrap();
            assert_eq!(all.len(), n);
            assert_eq!(s.lagrangian_count(), n as u128);
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, all, "enumeration order is strictly increasing");
        }
        assert!(matches!(enumerate_lagrangians(sp(3, 2), 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn intersect_dim_examples() {
        let s = sp(3, 2);
        let a = Lagrangian::from_vectors(s, &[s.e(0), s.e(1)]).unwrap();
        let b = Lagrangian::from_vectors(s, &[s.e(0), s.f(1)]).unwrap();
        assert_eq!(intersect_dim(&a, &a), 2);
        assert_eq!(intersect_dim(&a, &b), 1);
        let s1 = sp(3, 1);
        assert_eq!(intersect_dim(&Lagrangian::standard_e(s1), &Lagrangian::standard_f(s1)), 0);
    }

    #[test]
    fn graph_map_examples() {
        let s = sp(3, 1);
        let l = Lagrangian::standard_e(s);
        let n = Lagrangian::standard_f(s);
        let r = line(s, vec![1, 1]);
        assert_eq!(graph_map(&l, &n, &l).unwrap(), Matrix::zeros(1, 1));
        assert_eq!(graph_map(&r, &n, &l).unwrap(), Matrix::identity(1));
        assert!(graph_map(&r, &l, &l).is_err());
    }

    #[test]
    fn graph_gram_symmetric_exhaustive() {
        for d in 1..=2 {
            let s = sp(3, d);
            let all = enumerate_lagrangians(s, DEFAULT_ENUMERATION_BUDGET).unwrap();
            for n in &all {
                for l in all.iter().filter(|l| is_transverse(n, l)) {
                    for r in all.iter().filter(|r| is_transverse(n, r)) {
                        let b = graph_map(r, n, l).unwrap();
                        let g = graph_gram(n, l, &b);
                        assert_eq!(g, g.transpose());
                        for (i, row) in l.rows().iter().enumerate() {
                            let img = b.vec_mul(s.field(), &Matrix::identity(d).row(i).to_vec());
                            let v = s.field().add_vec(row, &n.basis().vec_mul(s.field(), &img));
                            assert!(r.contains(&v));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pick_transverse_examples() {
        let s = sp(3, 1);
        let e = Lagrangian::standard_e(s);
        let f = Lagrangian::standard_f(s);
        assert_eq!(pick_transverse(s, &[&e, &f]).unwrap(), line(s, vec![1, 1]));
        let all = enumerate_lagrangians(s, 100).unwrap();
        assert_eq!(pick_transverse(s, &[]).unwrap(), all[0]);
        let s2 = sp(3, 2);
        let all2 = enumerate_lagrangians(s2, 100).unwrap();
        for a in &all2 {
            for b in all2.iter().filter(|b| is_transverse(a, b)) {
                for c in all2.iter().filter(|c| is_transverse(a, c) && is_transverse(b, c)).take(3) {
                    let t = pick_transverse(s2, &[a, b, c]).unwrap();
                    assert!(is_transverse(&t, a) && is_transverse(&t, b) && is_transverse(&t, c));
                }
            }
        }
    }

    #[test]
    fn act_examples() {
        let s = sp(3, 1);
        let l0 = EnhancedLagrangian::plus(Lagrangian::standard_e(s));
        assert_eq!(act(&SpElement::identity(s), &l0), l0);
        let g = SpElement::new(s, Matrix::from_rows(2, &[vec![2, 0], vec![0, 2]])).unwrap();
        let moved = act(&g, &l0);
        assert_eq!(moved.lag, l0.lag);
        assert_eq!(moved.eps, Sign::Minus);
        assert!(SpElement::new(s, Matrix::from_rows(2, &[vec![2, 0], vec![0, 1]])).is_err());
    }

    #[test]
    fn sp2_f3_has_24_elements() {
        assert_eq!(SpElement::all_elements(sp(3, 1)).unwrap().len(), 24);
        assert_eq!(SpElement::all_elements(sp(5, 1)).unwrap().len(), 120);
    }

    #[test]
    fn stratum_sign_examples() {
        let s = sp(3, 1);
        let e = Lagrangian::standard_e(s);
        let f = Lagrangian::standard_f(s);
        assert_eq!(stratum_sign(&e, &e), Sign::Plus);
        assert_eq!(stratum_sign(&e, &f), Sign::Plus);
        // ω(f, e) = −1, a non-square mod 3
        assert_eq!(stratum_sign(&f, &e), Sign::Minus);
    }

    #[test]
    fn stratum_sign_transport_and_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, d) in [(3, 1), (5, 1), (3, 2)] {
            let s = sp(p, d);
            let all = enumerate_lagrangians(s, 1000).unwrap();
            let lm1 = legendre(p, p - 1).unwrap();
            for _ in 0..4 {
                let g = SpElement::random(s, &mut rng, 6);
                for r in &all {
                    for l in &all {
                        let (gr, lr) = g.act_lagrangian(r);
                        let (gl, ll) = g.act_lagrangian(l);
                        let transport = legendre(p, s.field().mul(lr, ll)).unwrap();
                        assert_eq!(stratum_sign(&gr, &gl) * transport, stratum_sign(r, l));
                        let i = intersect_dim(r, l);
                        assert_eq!(stratum_sign(l, r), stratum_sign(r, l) * lm1.pow((d - i) as u64));
                    }
                }
            }
        }
    }

    #[test]
    fn permuted_sign_law() {
        // λ0 = (−1)^d λ1 λ2 for pairwise transverse (R, N, L)
        for (p, d) in [(3, 1), (5, 1), (3, 2)] {
            let s = sp(p, d);
            let all = enumerate_lagrangians(s, 1000).unwrap();
            let lm1 = legendre(p, p - 1).unwrap();
            for r in &all {
                for n in all.iter().filter(|n| is_transverse(r, n)) {
                    for l in all.iter().filter(|l| is_transverse(r, l) && is_transverse(n, l)) {
                        let l0 = legendre(p, projection_scalar(l, r, n)).unwrap();
                        let l1 = legendre(p, projection_scalar(n, r, l)).unwrap();
                        let l2 = legendre(p, projection_scalar(l, n, r)).unwrap();
                        assert_eq!(l0, lm1.pow(d as u64) * pair_sign_compose(l1, l2));
                    }
                }
            }
        }
    }

    #[test]
    fn random_element_of_the_zero_space_is_the_identity() {
        let s = sp(3, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(SpElement::random(s, &mut rng, 5), SpElement::identity(s));
    }

    #[test]
    fn pair_sign_compose_table() {
        assert_eq!(pair_sign_compose(Sign::Plus, Sign::Plus), Sign::Plus);
        assert_eq!(pair_sign_compose(Sign::Plus, Sign::Minus), Sign::Minus);
        assert_eq!(pair_sign_compose(Sign::Minus, Sign::Minus), Sign::Plus);
    }

    #[test]
    fn record_round_trip() {
        let s = sp(5, 2);
        for l in enumerate_lagrangians(s, 1000).unwrap() {
            assert_eq!(Lagrangian::from_record(&l.to_record()).unwrap(), l);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn act_is_a_group_action(seed in any::<u64>(), idx in 0usize..40, eps in any::<bool>()) {
            let s = sp(3, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let all = enumerate_lagrangians(s, 100).unwrap();
            let l0 = EnhancedLagrangian::new(all[idx].clone(), if eps { Sign::Plus } else { Sign::Minus });
            let g1 = SpElement::random(s, &mut rng, 5);
            let g2 = SpElement::random(s, &mut rng, 5);
            prop_assert_eq!(act(&g1, &act(&g2, &l0)), act(&g1.compose(&g2), &l0));
            let other = &all[(idx * 7 + 3) % 40];
            let (a, _) = g1.act_lagrangian(&l0.lag);
            let (b, _) = g1.act_lagrangian(other);
            prop_assert_eq!(intersect_dim(&a, &b), intersect_dim(&l0.lag, other));
        }

        #[test]
        fn canonical_form_ignores_basis_change(seed in any::<u64>(), idx in 0usize..40) {
            let s = sp(3, 2);
            let f = s.field();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let all = enumerate_lagrangians(s, 100).unwrap();
            let l = &all[idx];
            let change = loop {
                let m = Matrix::from_flat(2, 2, (0..4).map(|_| rng.gen_range(0..3)).collect());
                if m.det(f) != 0 { break m; }
            };
            let rows = change.mul(f, l.basis());
            let again = Lagrangian::from_rows(s, &rows).unwrap();
            prop_assert_eq!(&again, l);
            prop_assert_eq!(l.wedge_coefficient(&rows), change.det(f));
        }

        #[test]
        fn random_elements_are_symplectic(seed in any::<u64>()) {
            let s = sp(5, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = SpElement::random(s, &mut rng, 8);
            prop_assert!(SpElement::new(s, g.matrix().clone()).is_ok());
            prop_assert_eq!(g.compose(&g.inverse()), SpElement::identity(s));
        }
    }
}
