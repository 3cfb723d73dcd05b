//! Reduction by an isotropic subspace `V ⊂ M` to `M0 = V⊥/V`, the transition
//! operators between lagrangian models of `M0` and of `M`, and executable
//! checks of their compatibility with the canonical kernels.
//!
//! Explicit formulas go through a symplectic section `σ: M0 → V⊥`; in
//! coordinates, `α_V(m) = (ω(m, σf'_i))_i ⊕ (ω(σe'_i, m))_i` for `m ∈ V⊥`.
//!
//! Two regimes are supported for a lagrangian `L`: *split* (`L ∩ V = 0`,
//! reduced to the image of `L ∩ V⊥`) and *contain* (`V ⊆ L`, reduced to `L/V`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{decode, in_span, intersect, Matrix};
use crate::heisenberg::{HeisenbergElement, ModelElement};
use crate::intertwiner::{apply_pair, kernel, EnhancedPair};
use crate::symplectic::{intersect_dim, EnhancedLagrangian, Lagrangian, SpElement, SymplecticSpace};
use crate::values::{c_shift, e_value, legendre, RingValue, Sign};

/// Position of a lagrangian relative to `V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `L ∩ V = 0`.
    Split,
    /// `V ⊆ L`.
    Contain,
}

/// Scalar convention for the split-regime transition.
///
/// `Classical` is the function-level formula `f1 = p^{dim V}·f0∘α_V`;
/// `Geometric` is the trace of the sheaf-level functor, `c_shift(2·dim V)·f0∘α_V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Classical,
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropicReduction {
    space: SymplecticSpace,
    v: Matrix,
    vperp: Matrix,
    reduced: SymplecticSpace,
    section: Matrix,
}

impl IsotropicReduction {
    /// Reduction by the span of `rows`, with the echelon-complement section.
    /// The rows are kept as the ordered basis of `V`; it fixes the
    /// trivialization of `det V` used by the sign transport.
    pub fn new(space: SymplecticSpace, rows: &Matrix) -> Result<Self> {
        let f = space.field();
        let (v, vperp) = Self::spaces(space, rows)?;
        let k = v.rows();
        let mut acc = v.clone();
        let mut complement = Vec::new();
        for r in 0..vperp.rows() {
            let w = vperp.row(r);
            if !in_span(f, &acc, w) {
                complement.push(w.to_vec());
                acc = acc.stack(&Matrix::from_rows(space.dim(), &[w.to_vec()]));
            }
        }
        debug_assert_eq!(complement.len(), space.dim() - 2 * k);
        let section = symplectic_gram_schmidt(space, complement);
        Self::with_section(space, &v, &section)
    }

    /// Reduction with a caller-supplied section, given as rows
    /// `σe'_1, …, σe'_{d0}, σf'_1, …, σf'_{d0}`.
    pub fn with_section(space: SymplecticSpace, rows: &Matrix, section: &Matrix) -> Result<Self> {
        let (v, vperp) = Self::spaces(space, rows)?;
        let d0 = space.d() - v.rows();
        if section.rows() != 2 * d0 || section.cols() != space.dim() {
            return Err(Error::Dimension(format!("section needs {} rows of length {}", 2 * d0, space.dim())));
        }
        if !space.gram(section, &v).is_zero() {
            return Err(Error::Dimension("section leaves V⊥".into()));
        }
        let reduced = SymplecticSpace::new(space.p(), d0)?;
        let std = Matrix::identity(2 * d0);
        if space.gram(section, section) != reduced.gram(&std, &std) {
            return Err(Error::NotSymplectic);
        }
        Ok(IsotropicReduction { space, v, vperp, reduced, section: section.clone() })
    }

    /// `V` spanned by standard basis vectors; index `i < d` is `e_i`, `d + i` is `f_i`.
    /// The section is the identity on the untouched coordinate pairs.
    pub fn monomial(space: SymplecticSpace, indices: &[usize]) -> Result<Self> {
        let d = space.d();
        let mut rows = Vec::new();
        let mut touched = vec![false; d];
        for &i in indices {
            if i >= 2 * d {
                return Err(Error::Dimension(format!("basis index {i} out of range")));
            }
            let mut r = vec![0; 2 * d];
            r[i] = 1;
            rows.push(r);
            touched[i % d] = true;
        }
        let free: Vec<usize> = (0..d).filter(|&i| !touched[i]).collect();
        let section: Vec<Vec<u32>> = free.iter().map(|&i| space.e(i)).chain(free.iter().map(|&i| space.f(i))).collect();
        Self::with_section(space, &Matrix::from_rows(2 * d, &rows), &Matrix::from_rows(2 * d, &section))
    }

    fn spaces(space: SymplecticSpace, rows: &Matrix) -> Result<(Matrix, Matrix)> {
        if rows.cols() != space.dim() {
            return Err(Error::Dimension(format!("expected {} columns", space.dim())));
        }
        if rows.rank(space.field()) != rows.rows() {
            return Err(Error::Dimension("basis of V is not linearly independent".into()));
        }
        if !space.is_isotropic(rows) {
            return Err(Error::Dimension("V is not isotropic".into()));
        }
        Ok((rows.clone(), space.perp(rows)))
    }

    /// The same `V` with section `x ↦ σ(g0·x) + τ(x)` for a random `g0 ∈ Sp(M0)`
    /// and a random linear `τ: M0 → V`.
    pub fn randomized<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let f = self.space.field();
        let p = self.space.p();
        let g0 = SpElement::random(self.reduced, rng, 4 * self.reduced.dim() + 2);
        let mut rows = Vec::new();
        for j in 0..self.reduced.dim() {
            let img = g0.apply(&unit(self.reduced.dim(), j));
            let mut r = self.lift(&img);
            let coeffs: Vec<u32> = (0..self.v.rows()).map(|_| rng.gen_range(0..p)).collect();
            r = f.add_vec(&r, &self.v.vec_mul(f, &coeffs));
            rows.push(r);
        }
        Self::with_section(self.space, &self.v, &Matrix::from_rows(self.space.dim(), &rows))
            .expect("randomized section is symplectic")
    }

    /// Reduction of `M` by `V + σ(V2)`, where `inner` reduces `M0` by `V2`.
    pub fn compose(&self, inner: &IsotropicReduction) -> Result<Self> {
        if inner.space != self.reduced {
            return Err(Error::Dimension("inner reduction must act on the reduced space".into()));
        }
        let f = self.space.field();
        let lifted: Vec<Vec<u32>> = inner.v.row_vecs().iter().map(|r| self.lift(r)).collect();
        let v = self.v.stack(&Matrix::from_rows(self.space.dim(), &lifted));
        let section = inner.section.mul(f, &self.section);
        Self::with_section(self.space, &v, &section)
    }

    pub fn space(&self) -> SymplecticSpace {
        self.space
    }

    pub fn reduced(&self) -> SymplecticSpace {
        self.reduced
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn vperp(&self) -> &Matrix {
        &self.vperp
    }

    pub fn section(&self) -> &Matrix {
        &self.section
    }

    pub fn dim_v(&self) -> usize {
        self.v.rows()
    }

    pub fn in_vperp(&self, m: &[u32]) -> bool {
        self.v.row_vecs().iter().all(|v| self.space.omega(m, v) == 0)
    }

    /// `α_V(m)` in the coordinates of `M0`; `m` must lie in `V⊥`.
    pub fn alpha(&self, m: &[u32]) -> Vec<u32> {
        let d0 = self.reduced.d();
        let mut x = Vec::with_capacity(2 * d0);
        for i in 0..d0 {
            x.push(self.space.omega(m, self.section.row(d0 + i)));
        }
        for i in 0..d0 {
            x.push(self.space.omega(self.section.row(i), m));
        }
        x
    }

    pub fn alpha_h(&self, h: &HeisenbergElement) -> HeisenbergElement {
        HeisenbergElement::new(self.alpha(&h.m), h.a)
    }

    /// `σ(x)`.
    pub fn lift(&self, x: &[u32]) -> Vec<u32> {
        if x.is_empty() {
            return vec![0; self.space.dim()];
        }
        self.section.vec_mul(self.space.field(), x)
    }

    pub fn lift_h(&self, h: &HeisenbergElement) -> HeisenbergElement {
        HeisenbergElement::new(self.lift(&h.m), h.a)
    }

    /// All `p^{dim V}` vectors of `V`.
    pub fn v_points(&self) -> Vec<Vec<u32>> {
        let p = self.space.p();
        let k = self.dim_v();
        let f = self.space.field();
        (0..(p as usize).pow(k as u32)).map(|i| self.v.vec_mul(f, &decode(p, i, k))).collect()
    }

    /// All elements of `H^V = V⊥ × A¹`, as `σ(x) + v` with `x ∈ M0`, `v ∈ V`.
    pub fn h_v_elements(&self) -> Vec<HeisenbergElement> {
        let p = self.space.p();
        let f = self.space.field();
        let vs = self.v_points();
        let mut out = Vec::new();
        for xi in 0..self.reduced.size() {
            let base = self.lift(&decode(p, xi, self.reduced.dim()));
            for v in &vs {
                let m = f.add_vec(&base, v);
                for a in 0..p {
                    out.push(HeisenbergElement::new(m.clone(), a));
                }
            }
        }
        out
    }

    pub fn regime(&self, l: &Lagrangian) -> Result<Regime> {
        let i = if self.v.rows() == 0 { 0 } else { intersect_dim_rows(self.space, l.basis(), &self.v) };
        if i == 0 {
            Ok(Regime::Split)
        } else if i == self.dim_v() {
            Ok(Regime::Contain)
        } else {
            Err(Error::Regime(format!("dim(L ∩ V) = {i} is neither 0 nor {}", self.dim_v())))
        }
    }

    /// `L_V`: the image of `L ∩ V⊥` in `M0`.
    pub fn reduce_lagrangian(&self, l: &Lagrangian) -> Result<Lagrangian> {
        let rows = match self.regime(l)? {
            Regime::Split => intersect(self.space.field(), l.basis(), &self.vperp),
            Regime::Contain => l.basis().clone(),
        };
        let images: Vec<Vec<u32>> = rows.row_vecs().iter().map(|r| self.alpha(r)).collect();
        Lagrangian::from_rows(self.reduced, &Matrix::from_rows(self.reduced.dim(), &images))
    }

    /// `μ` with `Z = μ·t_L`, where `Z` is the wedge built from the section-free
    /// lifts of the canonical basis of `L_V`:
    /// split: `Z = ŷ_1 ∧ … ∧ ŷ_{d0} ∧ w_k ∧ … ∧ w_1` with `ŷ_j ∈ L ∩ V⊥`, `w_i ∈ L`, `ω(v_i, w_j) = δ_ij`;
    /// contain: `Z = ŷ_1 ∧ … ∧ ŷ_{d0} ∧ v_k ∧ … ∧ v_1` with `ŷ_j ∈ L`.
    /// The reversed order makes the transport transitive along [`compose`](Self::compose).
    pub fn comparison_scalar(&self, l: &Lagrangian) -> Result<u32> {
        let f = self.space.field();
        let regime = self.regime(l)?;
        let lv = self.reduce_lagrangian(l)?;
        let ambient = match regime {
            Regime::Split => intersect(f, l.basis(), &self.vperp),
            Regime::Contain => l.basis().clone(),
        };
        let images: Vec<Vec<u32>> = ambient.row_vecs().iter().map(|r| self.alpha(r)).collect();
        let img = Matrix::from_rows(self.reduced.dim(), &images);
        let lifts: Vec<Vec<u32>> = lv
            .rows()
            .iter()
            .map(|y| {
                let c = img.solve_left(f, y).expect("L_V is the image of L");
                ambient.vec_mul(f, &c)
            })
            .collect();
        let k = self.dim_v();
        let rows: Vec<Vec<u32>> = match regime {
            Regime::Split => {
                let pairing = l.space().gram(&self.v, l.basis()).transpose();
                let duals = (0..k).rev().map(|i| {
                    let c = pairing.solve_left(f, &unit(k, i)).expect("L pairs perfectly with V");
                    l.basis().vec_mul(f, &c)
                });
                lifts.into_iter().chain(duals).collect()
            }
            Regime::Contain => lifts.into_iter().chain(self.v.row_vecs().into_iter().rev()).collect(),
        };
        Ok(l.wedge_coefficient(&Matrix::from_rows(self.space.dim(), &rows)))
    }

    /// The enhanced lagrangian `(L_V, eps·legendre(μ))`.
    pub fn reduce_enhanced(&self, l0: &EnhancedLagrangian) -> Result<EnhancedLagrangian> {
        let mu = self.comparison_scalar(&l0.lag)?;
        let lv = self.reduce_lagrangian(&l0.lag)?;
        Ok(EnhancedLagrangian::new(lv, l0.eps * legendre(self.space.p(), mu)?))
    }

    /// The reduced pair when both lagrangians meet `V` trivially.
    pub fn pi_v_sign(&self, pair: &EnhancedPair) -> Result<EnhancedPair> {
        for l in [&pair.n0.lag, &pair.l0.lag] {
            if self.regime(l)? != Regime::Split {
                return Err(Error::Regime("both lagrangians must meet V trivially".into()));
            }
        }
        self.reduce_pair(pair)
    }

    /// The reduced pair when the source contains `V` and the target meets it trivially.
    pub fn pi_0v_sign(&self, pair: &EnhancedPair) -> Result<EnhancedPair> {
        if self.regime(&pair.n0.lag)? != Regime::Split || self.regime(&pair.l0.lag)? != Regime::Contain {
            return Err(Error::Regime("need N ∩ V = 0 and V ⊆ L".into()));
        }
        self.reduce_pair(pair)
    }

    fn reduce_pair(&self, pair: &EnhancedPair) -> Result<EnhancedPair> {
        Ok(EnhancedPair::new(self.reduce_enhanced(&pair.n0)?, self.reduce_enhanced(&pair.l0)?))
    }

    /// `dim 𝓛(M) − dim 𝓛(M0)`.
    pub fn lag_drop(&self) -> i64 {
        self.space.lag_dim() - self.reduced.lag_dim()
    }

    /// Relative dimension of the reduction of pairs in the split regime.
    pub fn dimrel_split(&self) -> i64 {
        2 * self.lag_drop()
    }

    pub fn transition_scale(&self, regime: Regime, norm: Normalization) -> RingValue {
        let p = self.space.p();
        let k = self.dim_v() as i64;
        match (regime, norm) {
            (Regime::Split, Normalization::Classical) => RingValue::from_int(p, (p as i64).pow(k as u32)),
            (Regime::Split, Normalization::Geometric) => c_shift(p, 2 * k),
            (Regime::Contain, _) => c_shift(p, k),
        }
    }

    /// `T^L f0` for either regime of `L`.
    pub fn transition(&self, f0: &ModelElement, l: &Lagrangian, norm: Normalization) -> Result<ModelElement> {
        let regime = self.regime(l)?;
        let lv = self.reduce_lagrangian(l)?;
        if f0.lagrangian() != &lv {
            return Err(Error::Certificate("source model is not over L_V".into()));
        }
        let scale = self.transition_scale(regime, norm);
        let space = self.space;
        let fp = space.field();
        match regime {
            Regime::Split => {
                // c = l + w with w ∈ V⊥; (c, 0) = (l, −½ω(l, w))·(w, 0)
                let stacked = l.basis().stack(&self.vperp);
                let d = space.d();
                Ok(ModelElement::from_evaluator(l.clone(), |x| {
                    let coeffs = stacked.solve_left(fp, &x.m).expect("L + V⊥ = M");
                    let lpart = l.basis().vec_mul(fp, &coeffs[..d]);
                    let w = fp.sub_vec(&x.m, &lpart);
                    let shift = fp.neg(fp.mul(fp.half(), space.omega(&lpart, &w)));
                    let inner = f0.eval(&HeisenbergElement::new(self.alpha(&w), fp.add(x.a, shift)));
                    &inner * &scale
                }))
            }
            Regime::Contain => Ok(ModelElement::from_evaluator(l.clone(), |x| {
                if self.in_vperp(&x.m) {
                    &f0.eval(&self.alpha_h(x)) * &scale
                } else {
                    RingValue::zero(space.p())
                }
            })),
        }
    }

    pub fn transition_split(&self, f0: &ModelElement, l: &Lagrangian) -> Result<ModelElement> {
        if self.regime(l)? != Regime::Split {
            return Err(Error::Regime("transition_split needs L ∩ V = 0".into()));
        }
        self.transition(f0, l, Normalization::Classical)
    }

    pub fn transition_contain(&self, f0: &ModelElement, l: &Lagrangian) -> Result<ModelElement> {
        if self.regime(l)? != Regime::Contain {
            return Err(Error::Regime("transition_contain needs V ⊆ L".into()));
        }
        self.transition(f0, l, Normalization::Geometric)
    }

    /// Left inverse of [`transition`](Self::transition): `f0(x) = f1(σx) / scale`.
    pub fn restrict(&self, f1: &ModelElement, norm: Normalization) -> Result<ModelElement> {
        let l = f1.lagrangian();
        let regime = self.regime(l)?;
        let lv = self.reduce_lagrangian(l)?;
        let inv = self.transition_scale(regime, norm).inverse().expect("transition scale is a unit");
        Ok(ModelElement::from_evaluator(lv, |x| &f1.eval(&self.lift_h(x)) * &inv))
    }
}

fn unit(n: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

fn intersect_dim_rows(space: SymplecticSpace, a: &Matrix, b: &Matrix) -> usize {
    let f = space.field();
    a.rank(f) + b.rank(f) - a.stack(b).rank(f)
}

/// A symplectic basis `e'_1, …, e'_n, f'_1, …, f'_n` of the span of `vectors`,
/// assumed nondegenerate.
fn symplectic_gram_schmidt(space: SymplecticSpace, mut vectors: Vec<Vec<u32>>) -> Matrix {
    let f = space.field();
    let mut es = Vec::new();
    let mut fs = Vec::new();
    while let Some(e) = vectors.first().cloned() {
        vectors.remove(0);
        let j = vectors.iter().position(|w| space.omega(&e, w) != 0).expect("nondegenerate span");
        let w = vectors.remove(j);
        let fv = f.scale_vec(f.inv(space.omega(&e, &w)), &w);
        for u in vectors.iter_mut() {
            let a = space.omega(u, &fv);
            let b = space.omega(u, &e);
            *u = f.add_vec(&f.sub_vec(u, &f.scale_vec(a, &e)), &f.scale_vec(b, &fv));
        }
        es.push(e);
        fs.push(fv);
    }
    es.extend(fs);
    Matrix::from_rows(space.dim(), &es)
}

/// A mismatch between the two sides of a compatibility identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatWitness {
    pub h: HeisenbergElement,
    pub lhs: RingValue,
    pub rhs: RingValue,
}

/// Outcome of a kernel compatibility check over all of `H^V`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatReport {
    pub pair: String,
    pub reduced_pair: String,
    pub cases: usize,
    /// The constant is `unit · c_shift(exponent)`.
    pub unit: RingValue,
    pub exponent: i64,
    pub brute_force_exponent: Option<i64>,
    pub failure: Option<CompatWitness>,
}

impl CompatReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.brute_force_exponent.map_or(true, |e| e == self.exponent)
    }
}

const EXPONENT_SEARCH: i64 = 40;

fn compat_check(
    red: &IsotropicReduction,
    pair: &EnhancedPair,
    reduced: EnhancedPair,
    unit: RingValue,
    exponent: i64,
) -> Result<CompatReport> {
    let space = red.space;
    let p = space.p();
    let k = kernel(pair)?;
    let k0 = kernel(&reduced)?;
    let fp = space.field();
    let vs = red.v_points();
    let c = &c_shift(p, exponent) * &unit;
    let mut cases = 0;
    let mut failure = None;
    let mut brute = None;
    for h in red.h_v_elements() {
        // h·(v, 0) = (m + v, a) since ω(m, v) = 0 on H^V
        let mut lhs = RingValue::zero(p);
        for v in &vs {
            lhs = &lhs + k.table.get(&HeisenbergElement::new(fp.add_vec(&h.m, v), h.a));
        }
        let base = k0.table.get(&red.alpha_h(&h));
        if brute.is_none() && !lhs.is_zero() {
            let ub = &unit * base;
            brute = (-EXPONENT_SEARCH..=EXPONENT_SEARCH).find(|&e| lhs == &c_shift(p, e) * &ub);
        }
        let rhs = &c * base;
        cases += 1;
        if lhs != rhs && failure.is_none() {
            failure = Some(CompatWitness { h, lhs, rhs });
        }
    }
    Ok(CompatReport {
        pair: pair.to_string(),
        reduced_pair: reduced.to_string(),
        cases,
        unit,
        exponent,
        brute_force_exponent: brute,
        failure,
    })
}

/// `Σ_{v∈V} F(h·(v,0)) = c_shift(dimrel + dim V)·F0(α_V h)` on `H^V`, both lagrangians split.
pub fn check_compat_split(pair: &EnhancedPair, red: &IsotropicReduction) -> Result<CompatReport> {
    let reduced = red.pi_v_sign(pair)?;
    compat_check(red, pair, reduced, RingValue::one(red.space.p()), red.dimrel_split() + red.dim_v() as i64)
}

/// `Σ_{v∈V} F(h·(v,0)) = u^{dim V}·c_shift(2·(dim 𝓛(M) − dim 𝓛(M0)))·F0(α_V h)` on `H^V`,
/// for `N ∩ V = 0` and `V ⊆ L`, with `u = legendre(2)·e_value(1)` (see [`contain_unit`]).
pub fn check_compat_contain(pair: &EnhancedPair, red: &IsotropicReduction) -> Result<CompatReport> {
    let reduced = red.pi_0v_sign(pair)?;
    compat_check(red, pair, reduced, contain_unit(red)?, 2 * red.lag_drop())
}

/// `(legendre(2)·e_value(1))^{dim V}`: the transverse kernels of `M` and `M0`
/// carry `Θ_U` with these factors to the powers `d` and `d0`, and in the contain
/// regime no Gauss sum over `V` absorbs the difference.
pub fn contain_unit(red: &IsotropicReduction) -> Result<RingValue> {
    let p = red.space.p();
    let k = red.dim_v() as u32;
    Ok(e_value(p, k).scale_sign(legendre(p, 2)?.pow(k as u64)))
}

/// Outcome of an operator-square check on a model basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareReport {
    pub pair: String,
    pub basis_size: usize,
    pub factor: RingValue,
    pub failure: Option<usize>,
}

impl SquareReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// `F_{N⁰,L⁰} ∘ T^L = factor · T^N ∘ F_{N⁰_V,L⁰_V}` on the basis of `𝓗_{L_V}`,
/// with the given normalization on the split side and `factor` from [`square_factor`].
pub fn check_operator_square(pair: &EnhancedPair, red: &IsotropicReduction, norm: Normalization) -> Result<SquareReport> {
    if red.regime(&pair.n0.lag)? != Regime::Split {
        return Err(Error::Regime("the target lagrangian must meet V trivially".into()));
    }
    let reduced = red.reduce_pair(pair)?;
    let factor = square_factor(red, red.regime(&pair.l0.lag)?, norm)?;
    let basis = ModelElement::basis(&reduced.l0.lag);
    let mut failure = None;
    for (i, f0) in basis.iter().enumerate() {
        let lhs = apply_pair(pair, &red.transition(f0, &pair.l0.lag, norm)?)?;
        let rhs = red.transition(&apply_pair(&reduced, f0)?, &pair.n0.lag, norm)?.scale(&factor);
        if lhs != rhs {
            failure = Some(i);
            break;
        }
    }
    Ok(SquareReport { pair: pair.to_string(), basis_size: basis.len(), factor, failure })
}

/// Constant in the operator square: 1 when both lagrangians are split; for a
/// contained source it is [`contain_unit`], times `c_shift(4·dim V)` under the
/// classical split normalization.
pub fn square_factor(red: &IsotropicReduction, source: Regime, norm: Normalization) -> Result<RingValue> {
    let p = red.space.p();
    Ok(match (source, norm) {
        (Regime::Split, _) => RingValue::one(p),
        (Regime::Contain, Normalization::Geometric) => contain_unit(red)?,
        (Regime::Contain, Normalization::Classical) => &contain_unit(red)? * &c_shift(p, 4 * red.dim_v() as i64),
    })
}

/// One representative of each `Sp(M)`-orbit of isotropic subspaces of dimension `k`:
/// `span(e_1, …, e_k)`.
pub fn standard_reduction(space: SymplecticSpace, k: usize) -> Result<IsotropicReduction> {
    if k > space.d() {
        return Err(Error::Dimension(format!("isotropic dimension {k} exceeds {}", space.d())));
    }
    IsotropicReduction::monomial(space, &(0..k).collect::<Vec<_>>())
}

/// All `dim V = 1` reductions, one per line of `M`.
pub fn all_line_reductions(space: SymplecticSpace) -> Vec<IsotropicReduction> {
    let p = space.p();
    let mut out = Vec::new();
    for i in 1..space.size() {
        let v = decode(p, i, space.dim());
        let lead = v.iter().rev().find(|&&x| x != 0).copied().unwrap_or(0);
        if lead == 1 {
            out.push(IsotropicReduction::new(space, &Matrix::from_rows(space.dim(), &[v])).expect("lines are isotropic"));
        }
    }
    out
}

/// Enhanced pairs whose lagrangians are in the given regimes relative to `red`.
pub fn pairs_in_regime(red: &IsotropicReduction, n_regime: Regime, l_regime: Regime, budget: u128) -> Result<Vec<EnhancedPair>> {
    let all = crate::symplectic::enumerate_enhanced(red.space(), budget)?;
    let filter = |r: Regime| -> Vec<EnhancedLagrangian> {
        all.iter().filter(|l| red.regime(&l.lag).ok() == Some(r)).cloned().collect()
    };
    let ns = filter(n_regime);
    let ls = filter(l_regime);
    Ok(ns.iter().flat_map(|n| ls.iter().map(move |l| EnhancedPair::new(n.clone(), l.clone()))).collect())
}

/// Whether reducing preserves transversality for this pair.
pub fn preserves_transversality(red: &IsotropicReduction, n: &Lagrangian, l: &Lagrangian) -> Result<bool> {
    if intersect_dim(n, l) != 0 {
        return Ok(true);
    }
    let (nv, lv) = (red.reduce_lagrangian(n)?, red.reduce_lagrangian(l)?);
    Ok(intersect_dim(&nv, &lv) == 0)
}

/// Sign transported by a flip of the input: always a flip of the output.
pub fn transported_flip(red: &IsotropicReduction, l0: &EnhancedLagrangian) -> Result<Sign> {
    let a = red.reduce_enhanced(l0)?.eps;
    let b = red.reduce_enhanced(&l0.flipped())?.eps;
    Ok(a * b)
}
