//! Finite truncations of the Laurent-series symplectic space `M(F) = F^{2d}`,
//! `F = F_p((t))`, with `M = O^{2d}` and the residue form
//! `⟨t^{j1}e_i, t^{j2}f_i⟩ = [j1 + j2 = −1]`.
//!
//! Level `a` is `t^{−a}M/t^aM`, a symplectic space of dimension `4da`. Its
//! coordinates are `e'_k = t^j e_i` with `k = (j+a)d + i` and
//! `f'_k = t^{−1−j} f_i`, so `t^j f_i` is `f'_{(a−1−j)d + i}`. In these
//! coordinates the image of `M` is spanned by the `e'_k`, `k ≥ ad`, and the
//! `f'_k`, `k < ad`; the canonical discrete lagrangian by the complementary
//! monomials.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Matrix;
use crate::heisenberg::{HeisenbergElement, ModelElement};
use crate::intertwiner::{apply_pair, grassmannian_transform, EnhancedPair};
use crate::reduction::{IsotropicReduction, Regime, SquareReport};
use crate::symplectic::{act, intersect_dim, stratum_sign, EnhancedLagrangian, Lagrangian, SpElement, SymplecticSpace};
use crate::values::{c_shift, check_prime, e_value, legendre, RingValue, Sign};

/// Prime, rank and truncation window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaurentParams {
    p: u32,
    d: usize,
    window: usize,
}

/// Which half of the canonical basis a coordinate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    E,
    F,
}

/// The basis vector `t^power · e_index` or `t^power · f_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub kind: BasisKind,
    pub power: i64,
    pub index: usize,
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match self.kind {
            BasisKind::E => 'e',
            BasisKind::F => 'f',
        };
        write!(f, "t^{}{}{}", self.power, k, self.index)
    }
}

impl LaurentParams {
    pub fn new(p: u32, d: usize, window: usize) -> Result<Self> {
        check_prime(p)?;
        if d == 0 {
            return Err(Error::Dimension("rank d must be positive".into()));
        }
        Ok(LaurentParams { p, d, window })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn check_level(&self, a: usize) -> Result<()> {
        if a > self.window {
            return Err(Error::Window(format!("level {a} exceeds window {}", self.window)));
        }
        Ok(())
    }

    /// `t^{−a}M/t^aM`.
    pub fn truncate(&self, a: usize) -> Result<SymplecticSpace> {
        self.check_level(a)?;
        SymplecticSpace::new(self.p, 2 * self.d * a)
    }

    /// Coordinate of `t^j e_i` at level `a`, if `−a ≤ j < a`.
    pub fn e_index(&self, a: usize, j: i64, i: usize) -> Option<usize> {
        let a = a as i64;
        (-a..a).contains(&j).then(|| ((j + a) as usize) * self.d + i)
    }

    /// Coordinate of `t^j f_i` at level `a`, if `−a ≤ j < a`.
    pub fn f_index(&self, a: usize, j: i64, i: usize) -> Option<usize> {
        let a = a as i64;
        (-a..a).contains(&j).then(|| 2 * self.d * a as usize + ((a - 1 - j) as usize) * self.d + i)
    }

    /// Inverse of [`e_index`](Self::e_index) and [`f_index`](Self::f_index).
    pub fn label(&self, a: usize, idx: usize) -> BasisLabel {
        let half = 2 * self.d * a;
        let (k, kind) = if idx < half { (idx, BasisKind::E) } else { (idx - half, BasisKind::F) };
        let block = (k / self.d) as i64;
        let power = match kind {
            BasisKind::E => block - a as i64,
            BasisKind::F => a as i64 - 1 - block,
        };
        BasisLabel { kind, power, index: k % self.d }
    }

    /// Coordinates at level `a` of the monomials with `t`-power in `[lo, hi)`.
    fn monomials(&self, a: usize, lo: i64, hi: i64) -> Vec<usize> {
        let mut out = Vec::new();
        for j in lo..hi {
            for i in 0..self.d {
                out.extend(self.e_index(a, j, i));
            }
        }
        for j in lo..hi {
            for i in 0..self.d {
                out.extend(self.f_index(a, j, i));
            }
        }
        out
    }

    fn monomial_lagrangian(&self, a: usize, idx: &[usize]) -> Result<Lagrangian> {
        let space = self.truncate(a)?;
        let rows: Vec<Vec<u32>> = idx
            .iter()
            .map(|&k| {
                let mut r = vec![0; space.dim()];
                r[k] = 1;
                r
            })
            .collect();
        Lagrangian::from_vectors(space, &rows)
    }

    /// Image of `M` at level `a`.
    pub fn m_image(&self, a: usize) -> Result<Lagrangian> {
        self.monomial_lagrangian(a, &self.monomials(a, 0, a as i64))
    }

    /// Image of the canonical discrete lagrangian at level `a`.
    pub fn disc_image(&self, a: usize) -> Result<Lagrangian> {
        self.monomial_lagrangian(a, &self.monomials(a, -(a as i64), 0))
    }

    /// Image of `U = O-span(e_i)` at level `a`: all `e'` coordinates.
    pub fn u_image(&self, a: usize) -> Result<Lagrangian> {
        Ok(Lagrangian::standard_e(self.truncate(a)?))
    }

    /// Reduction of level `a2` by `t^{a1}M/t^{a2}M`, landing on level `a1`.
    pub fn level_reduction(&self, a1: usize, a2: usize) -> Result<IsotropicReduction> {
        self.check_level(a2)?;
        if a1 > a2 {
            return Err(Error::Window(format!("cannot lower level {a1} to {a2}")));
        }
        let space = self.truncate(a2)?;
        let indices: Vec<usize> = monomial_order(self, a1, a2)
            .iter()
            .map(|l| match l.kind {
                BasisKind::E => self.e_index(a2, l.power, l.index),
                BasisKind::F => self.f_index(a2, l.power, l.index),
            })
            .collect::<Option<_>>()
            .expect("powers lie in the window");
        IsotropicReduction::monomial(space, &indices)
    }
}

pub fn truncate(params: &LaurentParams, a: usize) -> Result<SymplecticSpace> {
    params.truncate(a)
}

/// The chain `t^{a_1}M ⊃ t^{a_2}M ⊃ …` of c-lattices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CLatticeChain {
    params: LaurentParams,
    exponents: Vec<usize>,
}

impl CLatticeChain {
    pub fn new(params: LaurentParams, exponents: Vec<usize>) -> Result<Self> {
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Dimension("exponents must increase strictly".into()));
        }
        for &a in &exponents {
            params.check_level(a)?;
        }
        Ok(CLatticeChain { params, exponents })
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    /// `R⊥/R` for `R = t^aM`.
    pub fn quotient(&self, i: usize) -> Result<SymplecticSpace> {
        self.params.truncate(self.exponents[i])
    }

    /// `det(t^{a_i}M : t^{a_j}M)`.
    pub fn rel_det(&self, i: usize, j: usize) -> RelDet {
        RelDet::between(&self.params, self.exponents[i], self.exponents[j])
    }
}

/// `det(M1 : M2)` for chain lattices: the degree `dim M1/R − dim M2/R` and the
/// square class of the monomial trivialization, ordered by increasing `t`-power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelDet {
    pub degree: i64,
    pub square_class: Sign,
}

impl RelDet {
    pub fn between(params: &LaurentParams, a1: usize, a2: usize) -> RelDet {
        RelDet { degree: 2 * params.d as i64 * (a2 as i64 - a1 as i64), square_class: Sign::Plus }
    }

    pub fn compose(self, other: RelDet) -> RelDet {
        RelDet { degree: self.degree + other.degree, square_class: self.square_class * other.square_class }
    }

    /// Square class of `det(A/C) ≅ det(A/B) ⊗ det(B/C)` in monomial bases,
    /// for `A = t^{a1}M ⊃ B = t^{a2}M ⊃ C = t^{a3}M`.
    pub fn gluing_class(params: &LaurentParams, a1: usize, a2: usize, a3: usize) -> Sign {
        let mut glued = monomial_order(params, a1, a2);
        glued.extend(monomial_order(params, a2, a3));
        let whole = monomial_order(params, a1, a3);
        if permutation_parity(&glued, &whole) == 0 {
            Sign::Plus
        } else {
            crate::values::legendre(params.p, params.p - 1).expect("−1 is a unit")
        }
    }
}

/// Basis of `t^{lo}M/t^{hi}M`, by `t`-power, then `e` before `f`, then index.
fn monomial_order(params: &LaurentParams, lo: usize, hi: usize) -> Vec<BasisLabel> {
    let mut out = Vec::new();
    for j in lo as i64..hi as i64 {
        for kind in [BasisKind::E, BasisKind::F] {
            for index in 0..params.d {
                out.push(BasisLabel { kind, power: j, index });
            }
        }
    }
    out
}

fn permutation_parity(from: &[BasisLabel], to: &[BasisLabel]) -> usize {
    let pos: Vec<usize> = from.iter().map(|l| to.iter().position(|m| m == l).expect("same basis")).collect();
    let mut inversions = 0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i] > pos[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2
}

/// `x ↦ x + c·ω(x, v)·v` with `v ∈ M` and `c ∈ O`, both truncated power series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transvection {
    /// `v[n]` is the coefficient of `t^n`, a vector of length `2d`.
    pub v: Vec<Vec<u32>>,
    /// `c[n]` is the coefficient of `t^n`.
    pub c: Vec<u32>,
}

/// A truncated element of `Sp(2d, O)`, as a product of transvections.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedSp {
    params: LaurentParams,
    factors: Vec<Transvection>,
}

impl TruncatedSp {
    pub fn identity(params: LaurentParams) -> Self {
        TruncatedSp { params, factors: Vec::new() }
    }

    pub fn new(params: LaurentParams, factors: Vec<Transvection>) -> Result<Self> {
        for t in &factors {
            if t.v.iter().any(|x| x.len() != 2 * params.d) {
                return Err(Error::Dimension("transvection vector has the wrong length".into()));
            }
        }
        Ok(TruncatedSp { params, factors })
    }

    /// `steps` transvections with series of `depth` terms.
    pub fn random<R: Rng + ?Sized>(params: LaurentParams, rng: &mut R, steps: usize, depth: usize) -> Self {
        let p = params.p;
        let factors = (0..steps)
            .map(|_| Transvection {
                v: (0..depth.max(1)).map(|_| (0..2 * params.d).map(|_| rng.gen_range(0..p)).collect()).collect(),
                c: (0..depth.max(1)).map(|_| rng.gen_range(0..p)).collect(),
            })
            .collect();
        TruncatedSp { params, factors }
    }

    pub fn factors(&self) -> &[Transvection] {
        &self.factors
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &TruncatedSp) -> TruncatedSp {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        TruncatedSp { params: self.params, factors }
    }

    /// The induced automorphism of level `a`.
    pub fn at_level(&self, a: usize) -> Result<SpElement> {
        let space = self.params.truncate(a)?;
        let f = space.field();
        let mut g = Matrix::identity(space.dim());
        for t in &self.factors {
            let m = self.transvection_matrix(a, t);
            g = g.mul(f, &m);
        }
        SpElement::new(space, g)
    }

    fn transvection_matrix(&self, a: usize, t: &Transvection) -> Matrix {
        let params = self.params;
        let d = params.d;
        let space = params.truncate(a).expect("checked level");
        let f = space.field();
        let unit = SymplecticSpace::new(params.p, d).expect("valid rank");
        // (c·v)(t) as a series
        let cv: Vec<Vec<u32>> = (0..t.v.len() + t.c.len())
            .map(|n| {
                let mut acc = vec![0; 2 * d];
                for (m, cm) in t.c.iter().enumerate() {
                    if n >= m && n - m < t.v.len() {
                        acc = f.add_vec(&acc, &f.scale_vec(*cm, &t.v[n - m]));
                    }
                }
                acc
            })
            .collect();
        let mut mat = Matrix::identity(space.dim());
        for col in 0..space.dim() {
            let lab = params.label(a, col);
            let mut b = vec![0; 2 * d];
            b[match lab.kind {
                BasisKind::E => lab.index,
                BasisKind::F => d + lab.index,
            }] = 1;
            // ω(x, v)(t) = t^j Σ_n ω(b, v_n) t^n
            let w: Vec<u32> = t.v.iter().map(|vn| unit.omega(&b, vn)).collect();
            for (n1, &w1) in w.iter().enumerate() {
                if w1 == 0 {
                    continue;
                }
                for (n2, x) in cv.iter().enumerate() {
                    let power = lab.power + (n1 + n2) as i64;
                    if power >= a as i64 {
                        break;
                    }
                    for i in 0..d {
                        for (kind, coeff) in [(BasisKind::E, x[i]), (BasisKind::F, x[d + i])] {
                            if coeff == 0 {
                                continue;
                            }
                            let row = match kind {
                                BasisKind::E => params.e_index(a, power, i),
                                BasisKind::F => params.f_index(a, power, i),
                            }
                            .expect("power in window");
                            mat.set(row, col, f.add(mat.get(row, col), f.mul(w1, coeff)));
                        }
                    }
                }
            }
        }
        mat
    }
}

/// `g·L_disc` for a truncated `g ∈ Sp(2d, O)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteLagrangian {
    params: LaurentParams,
    translate: Option<TruncatedSp>,
}

impl DiscreteLagrangian {
    pub fn canonical(params: LaurentParams) -> Self {
        DiscreteLagrangian { params, translate: None }
    }

    pub fn translated(g: TruncatedSp) -> Self {
        DiscreteLagrangian { params: g.params, translate: Some(g) }
    }

    pub fn params(&self) -> &LaurentParams {
        &self.params
    }

    /// `L ∩ t^{−a}M` modulo `t^aM`.
    pub fn at_level(&self, a: usize) -> Result<Lagrangian> {
        let base = self.params.disc_image(a)?;
        let l = match &self.translate {
            None => base,
            Some(g) => g.at_level(a)?.act_lagrangian(&base).0,
        };
        if a > 0 && intersect_dim(&l, &self.params.m_image(a)?) != 0 {
            return Err(Error::NotTransverse(format!("discrete lagrangian meets t^{a}M")));
        }
        Ok(l)
    }

    /// The image with its distinguished sign, see [`distinguished`].
    pub fn enhanced_at_level(&self, a: usize) -> Result<EnhancedLagrangian> {
        distinguished(&self.params, &self.at_level(a)?)
    }
}

pub fn reduce_d_lattice(l: &DiscreteLagrangian, a: usize) -> Result<Lagrangian> {
    l.at_level(a)
}

/// A lagrangian of level `a` with the sign `stratum_sign(M_a, L)·legendre(−1)^{da}`.
///
/// The second factor makes these signs correspond under the level reductions.
pub fn distinguished(params: &LaurentParams, l: &Lagrangian) -> Result<EnhancedLagrangian> {
    let a = level_of(params, l.space())?;
    let m = params.m_image(a)?;
    let twist = legendre(params.p, params.p - 1)?.pow((params.d * a) as u64);
    Ok(EnhancedLagrangian::new(l.clone(), stratum_sign(&m, l) * twist))
}

fn level_of(params: &LaurentParams, space: SymplecticSpace) -> Result<usize> {
    let two_d = 2 * params.d;
    if space.p() != params.p || space.d() % two_d != 0 {
        return Err(Error::Dimension("space is not a truncation of these parameters".into()));
    }
    let a = space.d() / two_d;
    params.check_level(a)?;
    Ok(a)
}

/// `T^L f` from the level of `f` up to the level of `target`, with
/// `target ∩ t^{a}M/t^{a'}M = 0` and `f` over the reduction of `target`.
pub fn level_transition(params: &LaurentParams, f: &ModelElement, target: &Lagrangian) -> Result<ModelElement> {
    let a1 = level_of(params, f.lagrangian().space())?;
    let a2 = level_of(params, target.space())?;
    let red = params.level_reduction(a1, a2)?;
    red.transition_split(f, target)
}

/// `ψ` on the centre at level 0, carried up to level `a` over `L`.
pub fn theta_vector(l: &DiscreteLagrangian, a: usize) -> Result<ModelElement> {
    let params = l.params;
    let base = ModelElement::new(Lagrangian::standard_e(params.truncate(0)?), vec![RingValue::one(params.p)])?;
    level_transition(&params, &base, &l.at_level(a)?)
}

/// One row of the theta table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaEntry {
    pub lagrangian: EnhancedLagrangian,
    /// `dim N ∩ M_a`.
    pub stratum: usize,
    pub value: RingValue,
}

/// The grassmannian transform of the theta vector of `L_disc` over all
/// enhanced lagrangians of level `a`, in enumeration order.
pub fn theta_table(params: &LaurentParams, a: usize) -> Result<Vec<ThetaEntry>> {
    let l = DiscreteLagrangian::canonical(*params);
    let theta = theta_vector(&l, a)?;
    let l0 = l.enhanced_at_level(a)?;
    let m = params.m_image(a)?;
    Ok(grassmannian_transform(&theta, &l0)?
        .into_iter()
        .map(|(n0, value)| ThetaEntry { stratum: intersect_dim(&n0.lag, &m), lagrangian: n0, value })
        .collect())
}

/// `value · stratum_sign(M_a, N) · eps_N`.
pub fn normalized_theta_value(params: &LaurentParams, entry: &ThetaEntry) -> Result<RingValue> {
    let m = params.m_image(level_of(params, entry.lagrangian.space())?)?;
    let sign = stratum_sign(&m, &entry.lagrangian.lag) * entry.lagrangian.eps;
    Ok(entry.value.scale_sign(sign))
}

/// Outcome of the stratum test on a theta table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaStructure {
    /// Normalized value on each stratum `i = 0, 1, …`, if constant there.
    pub stratum_values: Vec<Option<RingValue>>,
    /// Shift degree `n` of each stratum value, read through `|v| = |c_shift(n)|`,
    /// i.e. `v·v̄ = p^{−n}`.
    pub degrees: Vec<Option<i64>>,
    /// A lagrangian breaking stratum-only dependence, if any.
    pub failure: Option<String>,
}

impl ThetaStructure {
    /// Stratum-only dependence and a shift-degree drop of 1 per unit of `i`.
    pub fn passed(&self) -> bool {
        self.failure.is_none()
            && self.degrees.iter().all(Option::is_some)
            && self.degrees.windows(2).all(|w| match (w[0], w[1]) {
                (Some(x), Some(y)) => x - y == 1,
                _ => false,
            })
    }
}

pub fn theta_structure(params: &LaurentParams, table: &[ThetaEntry]) -> Result<ThetaStructure> {
    let top = table.iter().map(|e| e.stratum).max().unwrap_or(0);
    let mut stratum_values: Vec<Option<RingValue>> = vec![None; top + 1];
    let mut failure = None;
    for e in table {
        let v = normalized_theta_value(params, e)?;
        match &stratum_values[e.stratum] {
            None => stratum_values[e.stratum] = Some(v),
            Some(w) if *w == v => {}
            Some(w) => {
                failure.get_or_insert_with(|| format!("{}: {} vs {}", e.lagrangian.lag, v, w));
            }
        }
    }
    let degrees = stratum_values.iter().map(|v| v.as_ref().and_then(RingValue::norm_exponent).map(|n| -n)).collect();
    Ok(ThetaStructure { stratum_values, degrees, failure })
}

/// `𝓗_{U_a}` as functions on the `U*⊗Ω` block `{f'_k}` of level `a`, through
/// the multiplication map `(ū, y) ↦ ū·y` with twist `c_shift(dim Ū_a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchrodingerModel {
    params: LaurentParams,
    level: usize,
    u: Lagrangian,
}

pub fn schrodinger_iso(params: &LaurentParams, a: usize) -> Result<SchrodingerModel> {
    Ok(SchrodingerModel { params: *params, level: a, u: params.u_image(a)? })
}

impl SchrodingerModel {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.u
    }

    pub fn space(&self) -> SymplecticSpace {
        self.u.space()
    }

    /// `p^{2da}`.
    pub fn dim(&self) -> usize {
        (self.params.p as usize).pow(self.space().d() as u32)
    }

    fn twist(&self) -> RingValue {
        c_shift(self.params.p, self.space().d() as i64 + 1)
    }

    /// The model element whose pullback along the multiplication map is `χ ⊠ K`.
    pub fn to_model(&self, k: &[RingValue]) -> Result<ModelElement> {
        if k.len() != self.dim() {
            return Err(Error::Dimension(format!("expected {} values", self.dim())));
        }
        let tw = self.twist();
        ModelElement::new(self.u.clone(), k.iter().map(|v| v * &tw).collect())
    }

    pub fn from_model(&self, f: &ModelElement) -> Result<Vec<RingValue>> {
        if f.lagrangian() != &self.u {
            return Err(Error::Certificate("model is not over U".into()));
        }
        let inv = self.twist().inverse().expect("twist is a unit");
        Ok(f.values().iter().map(|v| v * &inv).collect())
    }

    /// The Schrödinger action of `h = (m_U + m_F, a)`:
    /// `K(y) ↦ ψ(a + ½ω(y, m) − ½ω(m_U, y + m_F))·K(y + m_F)`.
    pub fn act(&self, h: &HeisenbergElement, k: &[RingValue]) -> Vec<RingValue> {
        let space = self.space();
        let fp = space.field();
        let n = space.d();
        let mut m_u = h.m.clone();
        m_u[n..].iter_mut().for_each(|x| *x = 0);
        let m_f = fp.sub_vec(&h.m, &m_u);
        (0..self.dim())
            .map(|i| {
                let y = ModelElement::complement_vector(&self.u, i);
                let shifted = fp.add_vec(&y, &m_f);
                let (j, _) = ModelElement::split(&self.u, &shifted);
                let phase = fp.sub(
                    fp.add(h.a, fp.mul(fp.half(), space.omega(&y, &h.m))),
                    fp.mul(fp.half(), space.omega(&m_u, &shifted)),
                );
                k[j].mul_zeta(phase as i64)
            })
            .collect()
    }
}

/// `i_! p^* K` with factor `c_shift(dimrel p)`, from level `a` to `a2`.
///
/// `p` forgets the `t^{a}…t^{a2−1}` part of `t^{−a}(U*⊗Ω)/t^{a2}(U*⊗Ω)` and `i`
/// includes it into `t^{−a2}(U*⊗Ω)/t^{a2}(U*⊗Ω)`.
pub fn schrodinger_transition(params: &LaurentParams, k: &[RingValue], a: usize, a2: usize) -> Result<Vec<RingValue>> {
    params.check_level(a2)?;
    if a > a2 {
        return Err(Error::Window(format!("cannot lower level {a} to {a2}")));
    }
    let src = schrodinger_iso(params, a)?;
    let dst = schrodinger_iso(params, a2)?;
    if k.len() != src.dim() {
        return Err(Error::Dimension(format!("expected {} values", src.dim())));
    }
    let d = params.d;
    let twist = c_shift(params.p, (d * (a2 - a)) as i64);
    let zero = RingValue::zero(params.p);
    let src_space = src.space();
    Ok((0..dst.dim())
        .map(|i| {
            let y = ModelElement::complement_vector(&dst.u, i);
            let n2 = dst.space().d();
            let mut z = vec![0; src_space.dim()];
            for (idx, &val) in y.iter().enumerate().skip(n2) {
                if val == 0 {
                    continue;
                }
                let lab = params.label(a2, idx);
                if lab.power < -(a as i64) {
                    return zero.clone();
                }
                if lab.power < a as i64 {
                    z[params.f_index(a, lab.power, lab.index).expect("in window")] = val;
                }
            }
            let (j, _) = ModelElement::split(&src.u, &z);
            &k[j] * &twist
        })
        .collect())
}

/// Outcome of the Schrödinger square on a basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchrodingerSquare {
    pub lagrangian: String,
    pub basis_size: usize,
    pub factor: RingValue,
    pub failure: Option<usize>,
}

impl SchrodingerSquare {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// The constant in [`check_schrodinger_square`] from level `a` to `a2`:
/// `(legendre(2)·e_value(1))^k · c_shift(8k)` with `k = d(a2 − a)`.
///
/// The first factor is the unit of the contained square through
/// `W = t^{a2}U ⊕ t^{a}(U*⊗Ω)`, of dimension `k` over `t^{a}M/t^{a2}M`; the
/// second converts the geometric level transition into the classical one.
pub fn schrodinger_square_factor(params: &LaurentParams, a: usize, a2: usize) -> Result<RingValue> {
    let k = params.d * (a2 - a);
    let unit = e_value(params.p, 1).scale_sign(legendre(params.p, 2)?);
    Ok(&unit.pow(k as u32) * &c_shift(params.p, 8 * k as i64))
}

/// `F_{L⁰, U⁰} ∘ iso ∘ i_!p^* = factor · T^L ∘ F_{L⁰_a, U⁰_a} ∘ iso` on the
/// basis of functions on the level-`a` block, with distinguished signs
/// and the classical level transition.
pub fn check_schrodinger_square(l: &DiscreteLagrangian, a: usize, a2: usize) -> Result<SchrodingerSquare> {
    let params = l.params;
    let (src, dst) = (schrodinger_iso(&params, a)?, schrodinger_iso(&params, a2)?);
    let u1 = distinguished(&params, src.lagrangian())?;
    let u2 = distinguished(&params, dst.lagrangian())?;
    let (l1, l2) = (l.enhanced_at_level(a)?, l.enhanced_at_level(a2)?);
    let factor = schrodinger_square_factor(&params, a, a2)?;
    let one = RingValue::one(params.p);
    let zero = RingValue::zero(params.p);
    let mut failure = None;
    for i in 0..src.dim() {
        let mut k = vec![zero.clone(); src.dim()];
        k[i] = one.clone();
        let lhs = apply_pair(&EnhancedPair::new(l2.clone(), u2.clone()), &dst.to_model(&schrodinger_transition(&params, &k, a, a2)?)?)?;
        let low = apply_pair(&EnhancedPair::new(l1.clone(), u1.clone()), &src.to_model(&k)?)?;
        let rhs = level_transition(&params, &low, &l2.lag)?.scale(&factor);
        if lhs != rhs {
            failure = Some(i);
            break;
        }
    }
    Ok(SchrodingerSquare { lagrangian: l2.lag.to_string(), basis_size: src.dim(), factor, failure })
}

/// The square of kernels against the level transition `a → a2` for a pair of
/// level `a2` whose lagrangians meet `t^aM/t^{a2}M` trivially.
pub fn check_tower_square(params: &LaurentParams, pair: &EnhancedPair, a: usize) -> Result<SquareReport> {
    let a2 = level_of(params, pair.space())?;
    let red = params.level_reduction(a, a2)?;
    crate::reduction::check_operator_square(pair, &red, crate::reduction::Normalization::Classical)
}

/// Up to `count` enhanced pairs of level `a2` in the split regime for
/// `t^aM/t^{a2}M`, from random automorphisms of level `a2` applied to `L_disc`.
pub fn sample_tower_pairs<R: Rng + ?Sized>(params: &LaurentParams, a: usize, a2: usize, count: usize, rng: &mut R) -> Result<Vec<EnhancedPair>> {
    let red = params.level_reduction(a, a2)?;
    let space = params.truncate(a2)?;
    let base = EnhancedLagrangian::plus(params.disc_image(a2)?);
    let draw = |rng: &mut R| -> EnhancedLagrangian {
        loop {
            let g = SpElement::random(space, rng, 3 * space.dim());
            let mut l = act(&g, &base);
            if rng.gen_bool(0.5) {
                l = l.flipped();
            }
            if red.regime(&l.lag).ok() == Some(Regime::Split) {
                return l;
            }
        }
    };
    Ok((0..count)
        .map(|_| {
            let n = draw(rng);
            let l = draw(rng);
            EnhancedPair::new(n, l)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{enumerate_lagrangians, is_transverse};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(p: u32, d: usize) -> LaurentParams {
        LaurentParams::new(p, d, 3).unwrap()
    }

    fn unit(n: usize, i: usize) -> Vec<u32> {
        let mut v = vec![0; n];
        v[i] = 1;
        v
    }

    #[test]
    fn residue_form_and_distinguished_lattices() {
        let pr = params(3, 1);
        assert_eq!(pr.truncate(0).unwrap().dim(), 0);
        let space = pr.truncate(1).unwrap();
        assert_eq!(space.dim(), 4);
        let n = space.dim();
        let e = |j| unit(n, pr.e_index(1, j, 0).unwrap());
        let f = |j| unit(n, pr.f_index(1, j, 0).unwrap());
        assert_eq!(space.omega(&e(-1), &f(0)), 1);
        assert_eq!(space.omega(&f(0), &e(-1)), 2);
        assert_eq!(space.omega(&e(0), &f(-1)), 1);
        assert_eq!(space.omega(&e(0), &f(0)), 0);
        assert_eq!(space.omega(&e(-1), &f(-1)), 0);
        assert_eq!(space.lagrangian_count(), 40);
        assert_eq!(enumerate_lagrangians(space, 1000).unwrap().len(), 40);
        for a in 0..=3 {
            let (m, l) = (pr.m_image(a).unwrap(), pr.disc_image(a).unwrap());
            assert!(is_transverse(&m, &l));
        }
        assert!(matches!(pr.truncate(4), Err(Error::Window(_))));
        let l1 = reduce_d_lattice(&DiscreteLagrangian::canonical(pr), 1).unwrap();
        assert_eq!(l1, Lagrangian::from_vectors(space, &[e(-1), f(-1)]).unwrap());
    }

    #[test]
    fn labels_round_trip() {
        let pr = params(5, 2);
        for a in 0..=3 {
            let n = 4 * 2 * a;
            for idx in 0..n {
                let l = pr.label(a, idx);
                let back = match l.kind {
                    BasisKind::E => pr.e_index(a, l.power, l.index),
                    BasisKind::F => pr.f_index(a, l.power, l.index),
                };
                assert_eq!(back, Some(idx), "{l}");
            }
        }
    }

    #[test]
    fn rel_det_is_additive_over_chains() {
        for d in 1..=2 {
            let pr = LaurentParams::new(3, d, 4).unwrap();
            for a1 in 0..=4 {
                for a2 in a1..=4 {
                    for a3 in a2..=4 {
                        let glued = RelDet::between(&pr, a1, a2).compose(RelDet::between(&pr, a2, a3));
                        assert_eq!(glued, RelDet::between(&pr, a1, a3));
                        assert_eq!(RelDet::gluing_class(&pr, a1, a2, a3), Sign::Plus);
                        assert_eq!(RelDet::between(&pr, a1, a3).degree, (2 * d * (a3 - a1)) as i64);
                    }
                }
            }
            let chain = CLatticeChain::new(pr, vec![0, 1, 3]).unwrap();
            assert_eq!(chain.rel_det(0, 2), chain.rel_det(0, 1).compose(chain.rel_det(1, 2)));
            assert_eq!(chain.rel_det(2, 0).degree, -(6 * d as i64));
            assert_eq!(chain.quotient(2).unwrap().dim(), 12 * d);
        }
        assert!(CLatticeChain::new(params(3, 1), vec![1, 1]).is_err());
        assert!(CLatticeChain::new(params(3, 1), vec![0, 5]).is_err());
    }

    #[test]
    fn truncated_automorphisms_preserve_the_lattice_and_the_tower() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, d) in [(3, 1), (5, 1), (3, 2)] {
            let pr = params(p, d);
            for _ in 0..5 {
                let g = TruncatedSp::random(pr, &mut rng, 3, 3);
                for a in 0..=2 {
                    let ga = g.at_level(a).unwrap();
                    let m = pr.m_image(a).unwrap();
                    assert_eq!(ga.act_lagrangian(&m).0, m);
                }
                let (g1, g2) = (g.at_level(1).unwrap(), g.at_level(2).unwrap());
                let red = pr.level_reduction(1, 2).unwrap();
                for i in 0..red.reduced().dim() {
                    let x = red.lift(&unit(red.reduced().dim(), i));
                    assert_eq!(red.alpha(&g2.apply(&x)), g1.apply(&red.alpha(&x)));
                }
            }
        }
    }

    #[test]
    fn distinguished_signs_match_across_levels_and_under_automorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, d) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let pr = params(p, d);
            let top = if d == 1 { 3 } else { 2 };
            for t in 0..4 {
                let l = if t == 0 {
                    DiscreteLagrangian::canonical(pr)
                } else {
                    DiscreteLagrangian::translated(TruncatedSp::random(pr, &mut rng, 3, 2))
                };
                for a2 in 0..=top {
                    for a in 0..=a2 {
                        let red = pr.level_reduction(a, a2).unwrap();
                        let moved = red.reduce_enhanced(&l.enhanced_at_level(a2).unwrap()).unwrap();
                        assert_eq!(moved, l.enhanced_at_level(a).unwrap(), "p={p} d={d} {a}→{a2}");
                    }
                }
                let g = TruncatedSp::random(pr, &mut rng, 3, 2);
                let gl = match &l.translate {
                    None => DiscreteLagrangian::translated(g.clone()),
                    Some(h) => DiscreteLagrangian::translated(g.compose(h)),
                };
                for a in 1..=2 {
                    let moved = act(&g.at_level(a).unwrap(), &l.enhanced_at_level(a).unwrap());
                    assert_eq!(moved, gl.enhanced_at_level(a).unwrap());
                }
            }
        }
    }

    #[test]
    fn level_transitions_compose() {
        let pr = params(3, 1);
        let l = DiscreteLagrangian::canonical(pr);
        let (l0, l1, l2) = (l.at_level(0).unwrap(), l.at_level(1).unwrap(), l.at_level(2).unwrap());
        for f in ModelElement::basis(&l1) {
            assert_eq!(level_transition(&pr, &f, &l1).unwrap(), f);
        }
        for f in ModelElement::basis(&l0) {
            let two = level_transition(&pr, &level_transition(&pr, &f, &l1).unwrap(), &l2).unwrap();
            assert_eq!(two, level_transition(&pr, &f, &l2).unwrap());
        }
        for f in ModelElement::basis(&l1).into_iter().step_by(2) {
            let mid = level_transition(&pr, &f, &l2).unwrap();
            assert_eq!(pr.level_reduction(1, 2).unwrap().restrict(&mid, crate::reduction::Normalization::Classical).unwrap(), f);
        }
        assert!(matches!(pr.level_reduction(2, 1), Err(Error::Window(_))));
        assert!(matches!(pr.level_reduction(1, 4), Err(Error::Window(_))));
    }

    #[test]
    fn theta_vector_is_even_and_invariant() {
        let pr = params(3, 1);
        let l = DiscreteLagrangian::canonical(pr);
        let theta = theta_vector(&l, 1).unwrap();
        assert!(theta.values().iter().all(|v| *v == RingValue::from_int(3, 9)));
        assert_eq!(theta.parity_sign(), Some(Sign::Plus));
        let l0 = l.enhanced_at_level(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            let g = TruncatedSp::random(pr, &mut rng, 3, 2).at_level(1).unwrap();
            assert_eq!(crate::intertwiner::weil_apply(&g, &l0, &theta).unwrap(), theta);
        }
    }

    #[test]
    fn schrodinger_model_round_trip_and_shape() {
        let pr = params(3, 1);
        let s = schrodinger_iso(&pr, 1).unwrap();
        assert_eq!(s.dim(), 9);
        assert_eq!(ModelElement::basis(s.lagrangian()).len(), 9);
        let k: Vec<RingValue> = (0..9).map(|i| RingValue::from_int(3, i as i64 + 1).mul_zeta(i as i64)).collect();
        assert_eq!(s.from_model(&s.to_model(&k).unwrap()).unwrap(), k);
        let up = schrodinger_transition(&pr, &k, 1, 2).unwrap();
        assert_eq!(up.len(), 81);
        let dst = schrodinger_iso(&pr, 2).unwrap();
        let space = dst.space();
        for (i, v) in up.iter().enumerate() {
            let y = ModelElement::complement_vector(dst.lagrangian(), i);
            let outside = (space.d()..space.dim()).any(|idx| y[idx] != 0 && pr.label(2, idx).power < -1);
            assert_eq!(v.is_zero(), outside);
        }
        assert!(schrodinger_transition(&pr, &k, 2, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn schrodinger_action_matches_right_translation(seed in 0u64..1000, a in 0u32..3) {
            let pr = params(3, 1);
            let s = schrodinger_iso(&pr, 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k: Vec<RingValue> = (0..9).map(|_| RingValue::from_int(3, rng.gen_range(-2..3)).mul_zeta(rng.gen_range(0..3))).collect();
            let m: Vec<u32> = (0..4).map(|_| rng.gen_range(0..3)).collect();
            let h = HeisenbergElement::new(m, a);
            let lhs = s.to_model(&s.act(&h, &k)).unwrap();
            let rhs = s.to_model(&k).unwrap().translate(&h);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
