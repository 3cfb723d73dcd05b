//! Normalized canonical kernels `F_{N⁰,L⁰}` on enhanced pairs, the operators
//! they induce between lagrangian models, the Weil representation of
//! Sp(M) and the grassmannian transform.
//!
//! Transverse kernels are `Θ_U · F̃_U`; all others are defined by composing
//! through the first lagrangian transverse to both.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{decode, encode};
use crate::heisenberg::{
    convolve_raw, decompose, group_order, h_inv, h_mul, theta_sum, HeisenbergElement, HeisenbergFunction, ModelElement,
};
use crate::symplectic::{
    act, enumerate_enhanced, is_transverse, pick_transverse, projection_scalar, EnhancedLagrangian, Lagrangian,
    SpElement, SymplecticSpace, DEFAULT_ENUMERATION_BUDGET,
};
use crate::values::{c_shift, legendre, psi, Rational, RingValue, Sign};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnhancedPair {
    pub n0: EnhancedLagrangian,
    pub l0: EnhancedLagrangian,
}

impl EnhancedPair {
    pub fn new(n0: EnhancedLagrangian, l0: EnhancedLagrangian) -> Self {
        EnhancedPair { n0, l0 }
    }

    pub fn space(&self) -> SymplecticSpace {
        self.n0.space()
    }

    /// The class `eps_N · eps_L`.
    pub fn class(&self) -> Sign {
        self.n0.eps * self.l0.eps
    }

    pub fn is_transverse(&self) -> bool {
        is_transverse(&self.n0.lag, &self.l0.lag)
    }

    pub fn swapped(&self) -> Self {
        EnhancedPair::new(self.l0.clone(), self.n0.clone())
    }
}

impl fmt::Display for EnhancedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- {}", self.n0, self.l0)
    }
}

/// A kernel table attached to its enhanced pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kernel {
    pub pair: EnhancedPair,
    pub table: HeisenbergFunction,
}

/// `c_shift(d + 1 − 2·lag_dim) · (f1 ∗ f2)`.
pub fn convolve_norm(f1: &HeisenbergFunction, f2: &HeisenbergFunction) -> HeisenbergFunction {
    let space = f1.space();
    convolve_raw(f1, f2).scale(&convolution_twist(space))
}

fn convolution_twist(space: SymplecticSpace) -> RingValue {
    c_shift(space.p(), space.d() as i64 + 1 - 2 * space.lag_dim())
}

/// [`convolve_norm`] for `f1` right- and `f2` left-equivariant under `S̄`
/// (characters `χ_S^{−1}`, `χ_S`): sums over a transversal of `S̄`.
pub fn convolve_norm_through(f1: &HeisenbergFunction, f2: &HeisenbergFunction, s: &Lagrangian) -> HeisenbergFunction {
    let space = f1.space();
    let p = space.p();
    let fp = space.field();
    let reps: Vec<(Vec<u32>, RingValue)> = (0..(p as usize).pow(space.d() as u32))
        .map(|i| {
            let w = ModelElement::complement_vector(s, i);
            let v = f2.get(&HeisenbergElement::new(w.clone(), 0)).clone();
            (w, v)
        })
        .filter(|(_, v)| !v.is_zero())
        .collect();
    let factor = convolution_twist(space).scale(&Rational::from_int((p as i64).pow(space.d() as u32 + 1)));
    HeisenbergFunction::from_fn(space, |h| {
        let mut acc = RingValue::zero(p);
        for (w, v) in &reps {
            // h·(w, 0)^{-1} = (m − w, a − ½ω(m, w))
            let m = fp.sub_vec(&h.m, w);
            let a = fp.sub(h.a, fp.mul(fp.half(), space.omega(&h.m, w)));
            let x = f1.get_index(a as usize + p as usize * encode(p, &m));
            if !x.is_zero() {
                acc = &acc + &(x * v);
            }
        }
        &acc * &factor
    })
}

/// `h ↦ ψ(α_U(h))·c_shift(2d + 1 + 2·lag_dim)` with `α_U(n + l, a) = a + ½ω(l, n)`.
pub fn f_tilde_u(n: &Lagrangian, l: &Lagrangian) -> Result<HeisenbergFunction> {
    if !is_transverse(n, l) {
        return Err(Error::NotTransverse("F̃_U needs N ∩ L = 0".into()));
    }
    let space = n.space();
    let c = f_tilde_twist(space);
    Ok(HeisenbergFunction::from_fn(space, |h| psi(space.p(), alpha_u(n, l, h) as i64).mul_ref(&c)))
}

fn f_tilde_twist(space: SymplecticSpace) -> RingValue {
    c_shift(space.p(), 2 * space.d() as i64 + 1 + 2 * space.lag_dim())
}

fn alpha_u(n: &Lagrangian, l: &Lagrangian, h: &HeisenbergElement) -> u32 {
    let space = n.space();
    let f = space.field();
    let (nv, lv) = decompose(n, l, &h.m).expect("transverse lagrangians span M");
    f.add(h.a, f.mul(f.half(), space.omega(&lv, &nv)))
}

trait MulRef {
    fn mul_ref(&self, other: &Self) -> Self;
}

impl MulRef for RingValue {
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
}

/// `Θ_U` computed with a given auxiliary `S` transverse to both `N` and `L`.
pub fn theta_u_with_aux(pair: &EnhancedPair, s: &Lagrangian) -> Result<RingValue> {
    let (n, l) = (&pair.n0.lag, &pair.l0.lag);
    if !is_transverse(n, l) {
        return Err(Error::NotTransverse("Θ_U needs N ∩ L = 0".into()));
    }
    if !is_transverse(s, n) || !is_transverse(s, l) {
        return Err(Error::NotTransverse("auxiliary lagrangian must be transverse to both".into()));
    }
    let space = pair.space();
    let p = space.p();
    let lambda = projection_scalar(l, n, s);
    let cls = pair.class() * legendre(p, lambda).expect("ε₀ is an isomorphism");
    let theta = theta_sum(n, s, l)?;
    Ok((&theta * &c_shift(p, space.d() as i64)).scale_sign(cls))
}

/// `eps_N · eps_L · legendre(λ) · θ(N, S, L) · c_shift(d)` with `S` the first
/// lagrangian transverse to `N` and `L`, and `ε₀(t_L) = λ·t_N` for the
/// projection `ε₀: L → N` along `S`.
pub fn theta_u(pair: &EnhancedPair) -> Result<RingValue> {
    let space = pair.space();
    let s = pick_transverse(space, &[&pair.n0.lag, &pair.l0.lag])?;
    theta_u_with_aux(pair, &s)
}

/// The diagonal value `ψ(a)·c_shift(d + 1 + 2·lag_dim)` on `L̄`, times `eps_N·eps_L`.
pub fn diagonal_kernel(l0: &EnhancedLagrangian, eps_n: Sign) -> HeisenbergFunction {
    let l = &l0.lag;
    let space = l.space();
    let c = c_shift(space.p(), space.d() as i64 + 1 + 2 * space.lag_dim()).scale_sign(eps_n * l0.eps);
    HeisenbergFunction::from_fn(space, |h| {
        if l.contains(&h.m) {
            c.mul_zeta(h.a as i64)
        } else {
            RingValue::zero(space.p())
        }
    })
}

/// The canonical kernel of a pair.
pub fn kernel(pair: &EnhancedPair) -> Result<Kernel> {
    if pair.is_transverse() {
        let theta = theta_u(pair)?;
        let table = f_tilde_u(&pair.n0.lag, &pair.l0.lag)?.scale(&theta);
        return Ok(Kernel { pair: pair.clone(), table });
    }
    let s = pick_transverse(pair.space(), &[&pair.n0.lag, &pair.l0.lag])?;
    kernel_with_aux(pair, &EnhancedLagrangian::plus(s))
}

/// `convolve_norm(kernel(N⁰, S⁰), kernel(S⁰, L⁰))` for an auxiliary `S⁰` transverse to both.
pub fn kernel_with_aux(pair: &EnhancedPair, s0: &EnhancedLagrangian) -> Result<Kernel> {
    let left = kernel(&EnhancedPair::new(pair.n0.clone(), s0.clone()))?;
    let right = kernel(&EnhancedPair::new(s0.clone(), pair.l0.clone()))?;
    if !left.pair.is_transverse() || !right.pair.is_transverse() {
        return Err(Error::NotTransverse("auxiliary lagrangian must be transverse to both".into()));
    }
    let table = convolve_norm_through(&left.table, &right.table, &s0.lag);
    Ok(Kernel { pair: pair.clone(), table })
}

/// Kernel tables memoized by pair; reads are concurrent, inserts serialized.
#[derive(Default)]
pub struct KernelCache {
    map: RwLock<HashMap<EnhancedPair, Arc<Kernel>>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, pair: &EnhancedPair) -> Result<Arc<Kernel>> {
        if let Some(k) = self.map.read().expect("cache lock").get(pair) {
            return Ok(Arc::clone(k));
        }
        let k = Arc::new(kernel(pair)?);
        let mut w = self.map.write().expect("cache lock");
        Ok(Arc::clone(w.entry(pair.clone()).or_insert(k)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Kernel of `(R⁰, L⁰)` from kernels of `(R⁰, N⁰)` and `(N⁰, L⁰)`.
pub fn compose(k1: &Kernel, k2: &Kernel) -> Result<Kernel> {
    if k1.pair.l0 != k2.pair.n0 {
        return Err(Error::MiddleMismatch);
    }
    Ok(Kernel { pair: EnhancedPair::new(k1.pair.n0.clone(), k2.pair.l0.clone()), table: convolve_norm(&k1.table, &k2.table) })
}

/// `K ∗ f` for `f ∈ 𝓗_L`, given any evaluator of the kernel.
fn apply_with(
    space: SymplecticSpace,
    n: &Lagrangian,
    f: &ModelElement,
    kernel_at: impl Fn(&HeisenbergElement) -> RingValue + Sync,
) -> ModelElement {
    let p = space.p();
    let fp = space.field();
    let l = f.lagrangian();
    let reps: Vec<(Vec<u32>, &RingValue)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| (ModelElement::complement_vector(l, i), v))
        .collect();
    let factor = convolution_twist(space).scale(&Rational::from_int((p as i64).pow(space.d() as u32 + 1)));
    ModelElement::from_evaluator(n.clone(), |x| {
        let mut acc = RingValue::zero(p);
        for (w, v) in &reps {
            let m = fp.sub_vec(&x.m, w);
            let a = fp.sub(x.a, fp.mul(fp.half(), space.omega(&x.m, w)));
            let k = kernel_at(&HeisenbergElement::new(m, a));
            if !k.is_zero() {
                acc = &acc + &(&k * v);
            }
        }
        &acc * &factor
    })
}

/// `F_{N⁰,L⁰} ∗ f` using the kernel table.
pub fn apply(k: &Kernel, f: &ModelElement) -> Result<ModelElement> {
    if f.lagrangian() != &k.pair.l0.lag {
        return Err(Error::Certificate("model lagrangian differs from the kernel's source".into()));
    }
    Ok(apply_with(k.pair.space(), &k.pair.n0.lag, f, |h| k.table.get(h).clone()))
}

/// `F_{N⁰,L⁰} ∗ f` without tabulating the kernel: closed form when transverse,
/// otherwise through the auxiliary lagrangian.
pub fn apply_pair(pair: &EnhancedPair, f: &ModelElement) -> Result<ModelElement> {
    if f.lagrangian() != &pair.l0.lag {
        return Err(Error::Certificate("model lagrangian differs from the kernel's source".into()));
    }
    let space = pair.space();
    if pair.n0 == pair.l0 {
        return Ok(f.clone());
    }
    if pair.is_transverse() {
        let c = &theta_u(pair)? * &f_tilde_twist(space);
        let (n, l) = (&pair.n0.lag, &pair.l0.lag);
        return Ok(apply_with(space, n, f, |h| c.mul_zeta(alpha_u(n, l, h) as i64)));
    }
    let s0 = EnhancedLagrangian::plus(pick_transverse(space, &[&pair.n0.lag, &pair.l0.lag])?);
    let mid = apply_pair(&EnhancedPair::new(s0.clone(), pair.l0.clone()), f)?;
    apply_pair(&EnhancedPair::new(pair.n0.clone(), s0), &mid)
}

/// `g·f`, `(g·f)(h) = f(g^{−1}h)`, a model for `gL`.
pub fn transport_model(g: &SpElement, f: &ModelElement) -> ModelElement {
    let (gl, _) = g.act_lagrangian(f.lagrangian());
    let ginv = g.inverse();
    ModelElement::from_evaluator(gl, |h| f.eval(&HeisenbergElement::new(ginv.apply(&h.m), h.a)))
}

/// A square matrix over the value ring acting on model coordinates; column `j`
/// is the image of the `j`-th basis vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operator {
    dim: usize,
    entries: Vec<RingValue>,
}

impl Operator {
    pub fn from_columns(cols: Vec<Vec<RingValue>>) -> Self {
        let dim = cols.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in &cols {
                entries.push(c[r].clone());
            }
        }
        Operator { dim, entries }
    }

    pub fn identity(p: u32, dim: usize) -> Self {
        let mut cols = vec![vec![RingValue::zero(p); dim]; dim];
        for (i, c) in cols.iter_mut().enumerate() {
            c[i] = RingValue::one(p);
        }
        Self::from_columns(cols)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &RingValue {
        &self.entries[r * self.dim + c]
    }

    pub fn compose(&self, other: &Operator) -> Operator {
        let n = self.dim;
        let p = self.entries[0].p();
        let entries = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (r, c) = (idx / n, idx % n);
                let mut acc = RingValue::zero(p);
                for k in 0..n {
                    let (a, b) = (self.get(r, k), other.get(k, c));
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                acc
            })
            .collect();
        Operator { dim: n, entries }
    }

    pub fn apply(&self, v: &[RingValue]) -> Vec<RingValue> {
        let p = v[0].p();
        (0..self.dim)
            .map(|r| (0..self.dim).fold(RingValue::zero(p), |acc, c| &acc + &(self.get(r, c) * &v[c])))
            .collect()
    }
}

/// `ρ(g) f = F_{L⁰, g·L⁰} ∗ (g·f)`.
pub fn weil_apply(g: &SpElement, l0: &EnhancedLagrangian, f: &ModelElement) -> Result<ModelElement> {
    let moved = act(g, l0);
    apply_pair(&EnhancedPair::new(l0.clone(), moved), &transport_model(g, f))
}

/// Matrix of `ρ(g)` on the standard basis of `𝓗_L`.
pub fn weil_operator(g: &SpElement, l0: &EnhancedLagrangian) -> Result<Operator> {
    let cols = ModelElement::basis(&l0.lag)
        .iter()
        .map(|b| weil_apply(g, l0, b).map(|m| m.values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Operator::from_columns(cols))
}

/// Bases of the even and odd parts of `𝓗_L` under `f(m, a) ↦ f(−m, a)`.
pub fn even_odd_decompose(l: &Lagrangian) -> (Vec<ModelElement>, Vec<ModelElement>) {
    let space = l.space();
    let p = space.p();
    let fp = space.field();
    let n = (p as usize).pow(space.d() as u32);
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    let zero = ModelElement::zero(l.clone());
    for i in 0..n {
        let c = decode(p, i, space.d());
        let j = encode(p, &fp.neg_vec(&c));
        if j < i {
            continue;
        }
        let mut vals = zero.values().to_vec();
        vals[i] = RingValue::one(p);
        if i == j {
            even.push(ModelElement::new(l.clone(), vals).expect("basis vector"));
            continue;
        }
        let mut odd_vals = vals.clone();
        vals[j] = RingValue::one(p);
        odd_vals[j] = RingValue::from_int(p, -1);
        even.push(ModelElement::new(l.clone(), vals).expect("basis vector"));
        odd.push(ModelElement::new(l.clone(), odd_vals).expect("basis vector"));
    }
    (even, odd)
}

/// `(F_{N⁰,L⁰} ∗ f)(0, 0) · c_shift(lag_dim − 2d − 1)`.
pub fn grassmannian_value(f: &ModelElement, l0: &EnhancedLagrangian, n0: &EnhancedLagrangian) -> Result<RingValue> {
    let space = l0.space();
    let out = apply_pair(&EnhancedPair::new(n0.clone(), l0.clone()), f)?;
    let twist = c_shift(space.p(), space.lag_dim() - 2 * space.d() as i64 - 1);
    Ok(&out.eval(&HeisenbergElement::identity(space)) * &twist)
}

/// The grassmannian transform over all enhanced lagrangians, in enumeration order.
pub fn grassmannian_transform(f: &ModelElement, l0: &EnhancedLagrangian) -> Result<Vec<(EnhancedLagrangian, RingValue)>> {
    let all = enumerate_enhanced(l0.space(), DEFAULT_ENUMERATION_BUDGET)?;
    all.into_par_iter()
        .map(|n0| grassmannian_value(f, l0, &n0).map(|v| (n0, v)))
        .collect()
}

/// `conj(F_{N⁰,L⁰}(h^{−1}))`, the candidate for the kernel of the swapped pair.
pub fn adjoint_kernel(k: &Kernel) -> HeisenbergFunction {
    let space = k.pair.space();
    HeisenbergFunction::from_fn(space, |h| k.table.get(&h_inv(space, h)).conj())
}

/// Total number of table entries of one kernel.
pub fn kernel_size(space: SymplecticSpace) -> usize {
    group_order(space)
}

/// `(g, h) ↦ (g m, a)`.
pub fn act_on_h(g: &SpElement, h: &HeisenbergElement) -> HeisenbergElement {
    HeisenbergElement::new(g.apply(&h.m), h.a)
}

/// Left translate, used by the bi-equivariance checks.
pub fn left_translate(space: SymplecticSpace, x: &HeisenbergElement, h: &HeisenbergElement) -> HeisenbergElement {
    h_mul(space, x, h)
}
