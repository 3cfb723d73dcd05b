//! The named verification suites.
//!
//! Every suite enumerates its cases in a fixed order, runs them
//! exhaustively when the case space is small and otherwise draws `samples`
//! cases from a ChaCha stream keyed by the seed and the suite, so reports
//! depend only on the configuration.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weil_core::field::{decode, Fp, Matrix};
use weil_core::heisenberg::{
    convolve_raw, gauss_integral, gauss_integral_closed, is_left_equivariant, is_right_equivariant, theta_sum, tilde_f,
    HeisenbergElement, HeisenbergFunction, ModelElement,
};
use weil_core::intertwiner::{
    act_on_h, apply_pair, compose, diagonal_kernel, even_odd_decompose, kernel_with_aux, theta_u, theta_u_with_aux,
    weil_apply, weil_operator, EnhancedPair, KernelCache, Operator,
};
use weil_core::reduction::{
    all_line_reductions, check_compat_contain, check_compat_split, check_operator_square, pairs_in_regime,
    CompatReport, IsotropicReduction, Normalization, Regime,
};
use weil_core::symplectic::{
    act, is_transverse, pair_sign_compose, projection_scalar, EnhancedLagrangian, Lagrangian, SpElement,
    SymplecticSpace,
};
use weil_core::tate::{
    check_schrodinger_square, check_tower_square, distinguished, level_transition, sample_tower_pairs,
    schrodinger_iso, schrodinger_transition, theta_structure, theta_table, theta_vector, DiscreteLagrangian,
    LaurentParams, TruncatedSp,
};
use weil_core::values::{c_shift, e_value, legendre, RingValue, Sign};

use crate::config::{value_bytes, BudgetClock, SuiteConfig, SuiteName};
use crate::export::budgeted_lagrangians;
use crate::report::{CheckTally, SuiteReport, Witness, REPORT_SCHEMA};
use crate::{CliError, CliResult};

/// Case spaces up to this size are run in full.
pub const EXHAUSTIVE_LIMIT: usize = 2048;

/// Result of comparing the two sides of one identity.
enum Outcome {
    Pass,
    Fail { lhs: Option<RingValue>, rhs: Option<RingValue>, detail: Option<String> },
}

impl Outcome {
    fn values(lhs: &RingValue, rhs: &RingValue) -> Self {
        if lhs == rhs {
            Outcome::Pass
        } else {
            Outcome::Fail { lhs: Some(lhs.clone()), rhs: Some(rhs.clone()), detail: None }
        }
    }

    fn functions(lhs: &HeisenbergFunction, rhs: &HeisenbergFunction) -> Self {
        match lhs.first_difference(rhs) {
            None => Outcome::Pass,
            Some((h, l, r)) => Outcome::Fail { lhs: Some(l), rhs: Some(r), detail: Some(format!("at h = {h}")) },
        }
    }

    fn models(lhs: &ModelElement, rhs: &ModelElement) -> Self {
        if lhs.lagrangian() != rhs.lagrangian() {
            return Outcome::fail(format!("models over {} and {}", lhs.lagrangian(), rhs.lagrangian()));
        }
        Outcome::vectors(lhs.values(), rhs.values())
    }

    fn vectors(lhs: &[RingValue], rhs: &[RingValue]) -> Self {
        if lhs.len() != rhs.len() {
            return Outcome::fail(format!("lengths {} and {}", lhs.len(), rhs.len()));
        }
        match lhs.iter().zip(rhs).position(|(a, b)| a != b) {
            None => Outcome::Pass,
            Some(i) => Outcome::Fail { lhs: Some(lhs[i].clone()), rhs: Some(rhs[i].clone()), detail: Some(format!("coordinate {i}")) },
        }
    }

    fn operators(lhs: &Operator, rhs: &Operator) -> Self {
        if lhs.dim() != rhs.dim() {
            return Outcome::fail(format!("dimensions {} and {}", lhs.dim(), rhs.dim()));
        }
        for r in 0..lhs.dim() {
            for c in 0..lhs.dim() {
                if lhs.get(r, c) != rhs.get(r, c) {
                    return Outcome::Fail {
                        lhs: Some(lhs.get(r, c).clone()),
                        rhs: Some(rhs.get(r, c).clone()),
                        detail: Some(format!("entry ({r}, {c})")),
                    };
                }
            }
        }
        Outcome::Pass
    }

    fn truth(ok: bool, detail: impl FnOnce() -> String) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::fail(detail())
        }
    }

    fn fail(detail: String) -> Self {
        Outcome::Fail { lhs: None, rhs: None, detail: Some(detail) }
    }

    fn compat(rep: &CompatReport) -> Self {
        match &rep.failure {
            Some(w) => Outcome::Fail { lhs: Some(w.lhs.clone()), rhs: Some(w.rhs.clone()), detail: Some(format!("at h = {}", w.h)) },
            None if !rep.passed() => Outcome::fail(format!(
                "exponent {} but brute force finds {:?}",
                rep.exponent, rep.brute_force_exponent
            )),
            None => Outcome::Pass,
        }
    }
}

/// Tallies and the first failure of a running suite.
struct Run<'a> {
    cfg: &'a SuiteConfig,
    clock: &'a BudgetClock,
    prefix: &'static str,
    checks: Vec<CheckTally>,
    failure: Option<Witness>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a SuiteConfig, clock: &'a BudgetClock, prefix: &'static str) -> Self {
        Run { cfg, clock, prefix, checks: Vec::new(), failure: None }
    }

    fn space(&self) -> CliResult<SymplecticSpace> {
        Ok(SymplecticSpace::new(self.cfg.p, self.cfg.d)?)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(stream);
        rng
    }

    fn name(&self, check: &str) -> String {
        if self.prefix.is_empty() {
            check.to_string()
        } else {
            format!("{}.{check}", self.prefix)
        }
    }

    fn tally(&mut self, check: &str) -> &mut CheckTally {
        let name = self.name(check);
        let pos = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(CheckTally { name, cases: 0, failures: 0 });
                self.checks.len() - 1
            }
        };
        &mut self.checks[pos]
    }

    /// Registers a check that may end up with no cases.
    fn declare(&mut self, check: &str) {
        self.tally(check);
    }

    fn record(&mut self, check: &str, case: impl FnOnce() -> String, outcome: Outcome) -> CliResult<()> {
        self.clock.tick()?;
        let t = self.tally(check);
        t.cases += 1;
        if let Outcome::Fail { lhs, rhs, detail } = outcome {
            t.failures += 1;
            if self.failure.is_none() {
                self.failure = Some(Witness { check: self.name(check), case: case(), lhs, rhs, detail });
            }
        }
        Ok(())
    }

    fn finish(self) -> SuiteReport {
        let cases = self.checks.iter().map(|c| c.cases).sum();
        SuiteReport {
            schema: REPORT_SCHEMA.to_string(),
            suite: self.cfg.suite,
            p: self.cfg.p,
            d: self.cfg.d,
            level: self.cfg.level,
            seed: self.cfg.seed,
            samples: self.cfg.samples,
            cases,
            passed: self.failure.is_none(),
            checks: self.checks,
            failure: self.failure,
            wall_seconds: self.clock.elapsed_seconds(),
        }
    }

    /// All of `0..total` when small, otherwise `samples` sorted distinct indices.
    fn plan(&self, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        if total <= EXHAUSTIVE_LIMIT {
            (0..total).collect()
        } else {
            pick(total, self.cfg.samples, rng)
        }
    }

    fn reserve_tables(&self, space: SymplecticSpace, tables: u64, what: &str) -> CliResult<()> {
        let size = (space.p() as u64).saturating_pow(space.dim() as u32 + 1);
        self.clock.reserve(tables.saturating_mul(size).saturating_mul(value_bytes(space.p())), what)
    }
}

/// `want` sorted distinct indices below `total`, or all of them.
fn pick(total: usize, want: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if total <= want {
        return (0..total).collect();
    }
    let mut v = index::sample(rng, total, want).into_vec();
    v.sort_unstable();
    v
}

fn enhanced(lags: &[Lagrangian]) -> Vec<EnhancedLagrangian> {
    lags.iter().flat_map(|l| Sign::all().map(|s| EnhancedLagrangian::new(l.clone(), s))).collect()
}

fn power(p: u32, k: usize) -> RingValue {
    RingValue::from_int(p, (p as i64).pow(k as u32))
}

fn minus_one_class(p: u32, d: usize) -> CliResult<Sign> {
    Ok(legendre(p, p - 1)?.pow(d as u64))
}

/// Kernel convolution identities for the unnormalized transverse kernels.
fn lemma1(run: &mut Run) -> CliResult<()> {
    let space = run.space()?;
    let (p, d) = (space.p(), space.d());
    run.reserve_tables(space, 6, "kernel tables")?;
    let lags = budgeted_lagrangians(run.clock, space)?;
    let mut rng = run.rng(1);

    let pairs: Vec<(usize, usize)> = (0..lags.len())
        .flat_map(|l| (0..lags.len()).map(move |n| (l, n)))
        .filter(|&(l, n)| is_transverse(&lags[l], &lags[n]))
        .collect();
    let q_pair = power(p, 2 * d + 1);
    for i in run.plan(pairs.len(), &mut rng) {
        let (l, n) = (&lags[pairs[i].0], &lags[pairs[i].1]);
        let lhs = convolve_raw(&tilde_f(l, n), &tilde_f(n, l));
        let rhs = tilde_f(l, l).scale(&q_pair);
        run.record("pair_convolution", || format!("L = {l}, N = {n}"), Outcome::functions(&lhs, &rhs))?;
    }

    let mut triples = Vec::new();
    for &(n, l) in &pairs {
        for r in 0..lags.len() {
            if is_transverse(&lags[r], &lags[n]) {
                triples.push((r, n, l));
            }
        }
    }
    let q_triple = power(p, d + 1);
    for i in run.plan(triples.len(), &mut rng) {
        let (r, n, l) = (&lags[triples[i].0], &lags[triples[i].1], &lags[triples[i].2]);
        let lhs = convolve_raw(&tilde_f(r, n), &tilde_f(n, l));
        let rhs = tilde_f(r, l).scale(&(&q_triple * &theta_sum(r, n, l)?));
        run.record("triple_convolution", || format!("R = {r}, N = {n}, L = {l}"), Outcome::functions(&lhs, &rhs))?;
    }
    Ok(())
}

/// The closed form of the quadratic Gauss integral against brute force.
fn sublemma1(run: &mut Run) -> CliResult<()> {
    let (p, d) = (run.cfg.p, run.cfg.d);
    let f = Fp::new(p);
    let entries = d * (d + 1) / 2;
    let us = (p as usize).pow(d as u32);
    let total = (p as usize).pow(entries as u32) * us;
    let mut rng = run.rng(2);
    for idx in run.plan(total, &mut rng) {
        let e = decode(p, idx / us, entries);
        let u = decode(p, idx % us, d);
        let mut b = Matrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                b.set(i, j, e[k]);
                b.set(j, i, e[k]);
                k += 1;
            }
        }
        let lhs = gauss_integral_closed(f, &b, &u);
        let rhs = gauss_integral(f, &b, &u);
        run.record("closed_form", || format!("b = {:?}, u = {u:?}", b.row_vecs()), Outcome::values(&lhs, &rhs))?;
    }
    Ok(())
}

/// Diagonal formula, bi-equivariance, G-equivariance, genuineness,
/// auxiliary independence and the triple cocycle for the normalized kernels.
fn theorem1(run: &mut Run) -> CliResult<()> {
    let space = run.space()?;
    let lags = budgeted_lagrangians(run.clock, space)?;
    let all = enhanced(&lags);
    let n = all.len();
    let mut rng = run.rng(3);
    let pair_plan = run.plan(n * n, &mut rng);
    let triple_plan = run.plan(n * n * n, &mut rng);
    let exhaustive = n * n <= EXHAUSTIVE_LIMIT;
    run.reserve_tables(space, (2 * pair_plan.len() + 3 * triple_plan.len()) as u64, "kernel cache")?;
    let cache = KernelCache::new();
    let get = |a: &EnhancedLagrangian, b: &EnhancedLagrangian| cache.get(&EnhancedPair::new(a.clone(), b.clone()));
    run.declare("diagonal");

    for idx in pair_plan {
        let (n0, l0) = (&all[idx / n], &all[idx % n]);
        let pair = EnhancedPair::new(n0.clone(), l0.clone());
        let case = || pair.to_string();
        let k = get(n0, l0)?;
        if n0.lag == l0.lag {
            run.record("diagonal", case, Outcome::functions(&k.table, &diagonal_kernel(l0, n0.eps)))?;
        }
        run.record("left_equivariant", case, Outcome::truth(is_left_equivariant(&k.table, &n0.lag), || "left".into()))?;
        run.record("right_equivariant", case, Outcome::truth(is_right_equivariant(&k.table, &l0.lag), || "right".into()))?;
        let neg = k.table.neg();
        run.record("genuine", case, Outcome::functions(&get(&n0.flipped(), l0)?.table, &neg))?;
        run.record("genuine", case, Outcome::functions(&get(n0, &l0.flipped())?.table, &neg))?;

        let g = SpElement::random(space, &mut rng, 2 * space.dim() + 2);
        let gk = get(&act(&g, n0), &act(&g, l0))?;
        let moved = HeisenbergFunction::from_fn(space, |h| gk.table.get(&act_on_h(&g, h)).clone());
        run.record("g_equivariant", || format!("{pair}, g = {:?}", g.matrix().row_vecs()), Outcome::functions(&moved, &k.table))?;

        let aux: Vec<&Lagrangian> = lags.iter().filter(|s| is_transverse(s, &n0.lag) && is_transverse(s, &l0.lag)).collect();
        let chosen = if exhaustive { (0..aux.len()).collect() } else { pick(aux.len(), 2, &mut rng) };
        for i in chosen {
            for eps in Sign::all() {
                let s0 = EnhancedLagrangian::new(aux[i].clone(), eps);
                let via = kernel_with_aux(&pair, &s0)?;
                run.record("aux_independent", || format!("{pair}, S = {s0}"), Outcome::functions(&via.table, &k.table))?;
            }
        }
    }

    for idx in triple_plan {
        let (r0, n0, l0) = (&all[idx / (n * n)], &all[(idx / n) % n], &all[idx % n]);
        let lhs = compose(&*get(r0, n0)?, &*get(n0, l0)?)?;
        let rhs = get(r0, l0)?;
        run.record("triple_composition", || format!("R = {r0}, N = {n0}, L = {l0}"), Outcome::functions(&lhs.table, &rhs.table))?;
    }
    Ok(())
}

/// Sign laws of the transverse normalization `Θ_U`.
fn maslov(run: &mut Run) -> CliResult<()> {
    let space = run.space()?;
    let (p, d) = (space.p(), space.d());
    let lags = budgeted_lagrangians(run.clock, space)?;
    let all = enhanced(&lags);
    let mut rng = run.rng(4);
    let lm1 = minus_one_class(p, d)?;

    let pairs: Vec<(usize, usize)> = (0..all.len())
        .flat_map(|a| (0..all.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| is_transverse(&all[a].lag, &all[b].lag))
        .collect();
    for i in run.plan(pairs.len(), &mut rng) {
        let pair = EnhancedPair::new(all[pairs[i].0].clone(), all[pairs[i].1].clone());
        let case = || pair.to_string();
        let t = theta_u(&pair)?;
        for s in lags.iter().filter(|s| is_transverse(s, &pair.n0.lag) && is_transverse(s, &pair.l0.lag)) {
            run.record("theta_aux_independent", || format!("{pair}, S = {s}"), Outcome::values(&theta_u_with_aux(&pair, s)?, &t))?;
        }
        run.record("theta_square", case, Outcome::values(&(&t * &t), &RingValue::from_sign(p, lm1)))?;
        let flipped = EnhancedPair::new(pair.n0.flipped(), pair.l0.clone());
        run.record("theta_genuine", case, Outcome::values(&theta_u(&flipped)?, &-&t))?;
    }

    let mut triples = Vec::new();
    for r in 0..lags.len() {
        for n in (0..lags.len()).filter(|&n| is_transverse(&lags[r], &lags[n])) {
            for l in (0..lags.len()).filter(|&l| is_transverse(&lags[r], &lags[l]) && is_transverse(&lags[n], &lags[l])) {
                triples.push((r, n, l));
            }
        }
    }
    for i in run.plan(triples.len(), &mut rng) {
        let (r, n, l) = (&lags[triples[i].0], &lags[triples[i].1], &lags[triples[i].2]);
        let case = || format!("R = {r}, N = {n}, L = {l}");
        let cls0 = legendre(p, projection_scalar(l, r, n))?;
        let cls1 = legendre(p, projection_scalar(n, r, l))?;
        let cls2 = legendre(p, projection_scalar(l, n, r))?;
        let q = EnhancedPair::new(EnhancedLagrangian::new(r.clone(), cls0), EnhancedLagrangian::plus(l.clone()));
        let q2 = EnhancedPair::new(EnhancedLagrangian::new(n.clone(), cls2), EnhancedLagrangian::plus(l.clone()));
        run.record("q_product", case, Outcome::values(&(&theta_u(&q)? * &theta_u(&q2)?), &RingValue::one(p)))?;
        let expect = lm1 * pair_sign_compose(cls1, cls2);
        run.record(
            "permuted_sign",
            case,
            Outcome::values(&RingValue::from_sign(p, cls0), &RingValue::from_sign(p, expect)),
        )?;
    }

    let e = e_value(p, 1);
    run.record("e_square", || format!("p = {p}"), Outcome::values(&(&e * &e), &RingValue::from_sign(p, legendre(p, p - 1)?)))?;
    Ok(())
}

/// The Weil representation: homomorphism, independence of the sign, and
/// the even/odd splitting.
fn weilrep(run: &mut Run) -> CliResult<()> {
    let space = run.space()?;
    let (p, d) = (space.p(), space.d());
    let dim = (p as usize).pow(d as u32);
    run.clock.reserve((dim * dim) as u64 * value_bytes(p) * 3, "operator tables")?;
    let l0 = EnhancedLagrangian::plus(Lagrangian::standard_e(space));
    let mut rng = run.rng(5);
    let identity = weil_operator(&SpElement::identity(space), &l0)?;
    run.record("identity", || "g = 1".into(), Outcome::operators(&identity, &Operator::identity(p, dim)))?;

    if d == 1 && p <= 7 {
        let group = SpElement::all_elements(space)?;
        run.clock.reserve(group.len() as u64 * (dim * dim) as u64 * value_bytes(p), "group operators")?;
        let position: HashMap<&SpElement, usize> = group.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let ops = group.iter().map(|g| weil_operator(g, &l0)).collect::<Result<Vec<_>, _>>()?;
        for (i, g1) in group.iter().enumerate() {
            for (j, g2) in group.iter().enumerate() {
                let k = position[&g1.compose(g2)];
                run.record("homomorphism", || format!("g1 = #{i}, g2 = #{j}"), Outcome::operators(&ops[i].compose(&ops[j]), &ops[k]))?;
            }
            run.record("sign_independent", || format!("g = #{i}"), Outcome::operators(&weil_operator(g1, &l0.flipped())?, &ops[i]))?;
        }
    } else {
        for s in 0..run.cfg.samples {
            let g1 = SpElement::random(space, &mut rng, 3 * space.dim());
            let g2 = SpElement::random(space, &mut rng, 3 * space.dim());
            let lhs = weil_operator(&g1, &l0)?.compose(&weil_operator(&g2, &l0)?);
            let rhs = weil_operator(&g1.compose(&g2), &l0)?;
            run.record(
                "homomorphism",
                || format!("sample {s}: g1 = {:?}, g2 = {:?}", g1.matrix().row_vecs(), g2.matrix().row_vecs()),
                Outcome::operators(&lhs, &rhs),
            )?;
        }
    }

    let (even, odd) = even_odd_decompose(&l0.lag);
    let dims = (dim.div_ceil(2), (dim - 1) / 2);
    run.record(
        "even_odd_dimensions",
        || format!("p = {p}, d = {d}"),
        Outcome::truth((even.len(), odd.len()) == dims, || format!("found {:?}, expected {dims:?}", (even.len(), odd.len()))),
    )?;
    for s in 0..run.cfg.samples.min(5) {
        let g = SpElement::random(space, &mut rng, 3 * space.dim());
        for (vs, sign) in [(&even, Sign::Plus), (&odd, Sign::Minus)] {
            for (i, v) in vs.iter().enumerate() {
                let out = weil_apply(&g, &l0, v)?;
                run.record(
                    "parity_preserved",
                    || format!("sample {s}, vector {i} of sign {sign}"),
                    Outcome::truth(out.parity_sign() == Some(sign), || format!("parity {:?}", out.parity_sign())),
                )?;
            }
        }
    }
    Ok(())
}

/// Kernel compatibilities with isotropic reduction over every line, the
/// operator squares, randomized sections and two-step transitivity.
fn reduction(run: &mut Run) -> CliResult<()> {
    let space = run.space()?;
    run.reserve_tables(space, 8, "kernel tables")?;
    let lines = all_line_reductions(space);
    let mut rng = run.rng(6);
    let per_line = (run.cfg.samples / lines.len().max(1)).max(1);
    for (li, red) in lines.iter().enumerate() {
        let v = red.v().row_vecs()[0].clone();
        let split = pairs_in_regime(red, Regime::Split, Regime::Split, u128::MAX)?;
        let contain = pairs_in_regime(red, Regime::Split, Regime::Contain, u128::MAX)?;
        for i in pick(split.len(), per_line, &mut rng) {
            let rep = check_compat_split(&split[i], red)?;
            run.record("compat_split", || format!("V = {v:?}, {}", split[i]), Outcome::compat(&rep))?;
        }
        for i in pick(contain.len(), per_line, &mut rng) {
            let rep = check_compat_contain(&contain[i], red)?;
            run.record("compat_contain", || format!("V = {v:?}, {}", contain[i]), Outcome::compat(&rep))?;
        }
        for set in [&split, &contain] {
            if set.is_empty() {
                continue;
            }
            let pair = &set[rng.gen_range(0..set.len())];
            for norm in [Normalization::Classical, Normalization::Geometric] {
                let rep = check_operator_square(pair, red, norm)?;
                run.record(
                    "operator_square",
                    || format!("V = {v:?}, {pair}, {norm:?}"),
                    Outcome::truth(rep.passed(), || format!("basis vector {:?}, factor {}", rep.failure, rep.factor)),
                )?;
            }
        }
        let other = red.randomized(&mut rng);
        let split = pairs_in_regime(&other, Regime::Split, Regime::Split, u128::MAX)?;
        if !split.is_empty() {
            let pair = &split[rng.gen_range(0..split.len())];
            run.record("randomized_section", || format!("line {li}, {pair}"), Outcome::compat(&check_compat_split(pair, &other)?))?;
        }
        let contain = pairs_in_regime(&other, Regime::Split, Regime::Contain, u128::MAX)?;
        if !contain.is_empty() {
            let pair = &contain[rng.gen_range(0..contain.len())];
            run.record("randomized_section", || format!("line {li}, {pair}"), Outcome::compat(&check_compat_contain(pair, &other)?))?;
        }
    }

    run.declare("transitivity_sign");
    run.declare("transitivity_transition");
    if space.d() < 2 {
        return Ok(());
    }
    let all = enhanced(&budgeted_lagrangians(run.clock, space)?);
    for oi in pick(lines.len(), 2, &mut rng) {
        let outer = &lines[oi];
        for inner in all_line_reductions(outer.reduced()) {
            let full = outer.compose(&inner)?;
            transitivity(run, outer, &inner, &full, &all)?;
        }
    }
    Ok(())
}

fn transitivity(
    run: &mut Run,
    outer: &IsotropicReduction,
    inner: &IsotropicReduction,
    full: &IsotropicReduction,
    all: &[EnhancedLagrangian],
) -> CliResult<()> {
    let case_v = || format!("V1 = {:?}, V2 = {:?}", outer.v().row_vecs(), inner.v().row_vecs());
    for l0 in all {
        let (Ok(r1), Ok(r)) = (outer.regime(&l0.lag), full.regime(&l0.lag)) else { continue };
        let step = outer.reduce_enhanced(l0)?;
        let Ok(r2) = inner.regime(&step.lag) else { continue };
        if !(r1 == r && r2 == r) {
            continue;
        }
        let once = full.reduce_enhanced(l0)?;
        let twice = inner.reduce_enhanced(&step)?;
        run.record(
            "transitivity_sign",
            || format!("{}, L = {l0}", case_v()),
            Outcome::truth(once == twice, || format!("{once} vs {twice}")),
        )?;
        let lv = full.reduce_lagrangian(&l0.lag)?;
        for (i, f0) in ModelElement::basis(&lv).iter().enumerate() {
            for norm in [Normalization::Classical, Normalization::Geometric] {
                let direct = full.transition(f0, &l0.lag, norm)?;
                let mid = inner.transition(f0, &step.lag, norm)?;
                let stepped = outer.transition(&mid, &l0.lag, norm)?;
                run.record(
                    "transitivity_transition",
                    || format!("{}, L = {l0}, basis {i}, {norm:?}", case_v()),
                    Outcome::models(&stepped, &direct),
                )?;
            }
        }
    }
    Ok(())
}

fn tate_params(run: &Run, extra: usize) -> CliResult<LaurentParams> {
    let params = LaurentParams::new(run.cfg.p, run.cfg.d, run.cfg.level + extra)?;
    let top = params.truncate(run.cfg.level + extra)?;
    run.reserve_tables(top, 6, "level kernel tables")?;
    Ok(params)
}

/// Kernels against level transitions, the theta-table structure and the
/// invariance of the theta vector.
fn tower(run: &mut Run) -> CliResult<()> {
    let params = tate_params(run, 1)?;
    let a = run.cfg.level;
    let p = params.p();
    let mut rng = run.rng(7);
    for (i, pair) in sample_tower_pairs(&params, a, a + 1, run.cfg.samples, &mut rng)?.iter().enumerate() {
        let rep = check_tower_square(&params, pair, a)?;
        let ok = rep.passed() && rep.factor == RingValue::one(p);
        run.record(
            "square",
            || format!("sample {i}: {pair}"),
            Outcome::truth(ok, || format!("basis vector {:?}, factor {}", rep.failure, rep.factor)),
        )?;
    }
    theta_structure_check(run, &params)?;
    theta_invariance(run, &params, 20, &mut rng)
}

fn theta_structure_check(run: &mut Run, params: &LaurentParams) -> CliResult<()> {
    let table = theta_table(params, run.cfg.level)?;
    let st = theta_structure(params, &table)?;
    let case = || format!("level {}, {} entries", run.cfg.level, table.len());
    let outcome = Outcome::truth(st.passed(), || match &st.failure {
        Some(f) => format!("not constant on a stratum: {f}"),
        None => format!("shift degrees {:?}", st.degrees),
    });
    run.record("theta_structure", case, outcome)
}

fn theta_invariance(run: &mut Run, params: &LaurentParams, count: usize, rng: &mut ChaCha8Rng) -> CliResult<()> {
    let a = run.cfg.level;
    let l = DiscreteLagrangian::canonical(*params);
    let theta = theta_vector(&l, a)?;
    let l0 = l.enhanced_at_level(a)?;
    run.record("theta_even", || format!("level {a}"), Outcome::truth(theta.parity_sign() == Some(Sign::Plus), || "not even".into()))?;
    for i in 0..count {
        let g = TruncatedSp::random(*params, rng, 3, 2);
        let ga = g.at_level(a)?;
        run.record(
            "theta_invariance",
            || format!("sample {i}: {:?}", ga.matrix().row_vecs()),
            Outcome::models(&weil_apply(&ga, &l0, &theta)?, &theta),
        )?;
    }
    Ok(())
}

/// The Schrödinger model: round trip, equivariance on generators, the
/// square with the level transition, and transition composition.
fn schrodinger(run: &mut Run) -> CliResult<()> {
    let params = tate_params(run, 2)?;
    let a = run.cfg.level;
    let p = params.p();
    let mut rng = run.rng(8);
    let model = schrodinger_iso(&params, a)?;
    let space = model.space();
    let random_k = |rng: &mut ChaCha8Rng, n: usize| -> Vec<RingValue> {
        (0..n).map(|_| RingValue::from_int(p, rng.gen_range(-2..3)).mul_zeta(rng.gen_range(0..p as i64))).collect()
    };
    for s in 0..run.cfg.samples.min(20) {
        let k = random_k(&mut rng, model.dim());
        let back = model.from_model(&model.to_model(&k)?)?;
        run.record("round_trip", || format!("sample {s}"), Outcome::vectors(&back, &k))?;
    }
    let mut generators: Vec<HeisenbergElement> = (0..space.dim())
        .map(|i| {
            let mut m = vec![0; space.dim()];
            m[i] = 1;
            HeisenbergElement::new(m, 0)
        })
        .collect();
    generators.push(HeisenbergElement::central(space, 1));
    let k = random_k(&mut rng, model.dim());
    let base = model.to_model(&k)?;
    for h in &generators {
        let lhs = model.to_model(&model.act(h, &k))?;
        run.record("equivariance", || format!("h = {h}"), Outcome::models(&lhs, &base.translate(h)))?;
    }

    let translates = run.cfg.samples.clamp(1, 3);
    let mut ls = vec![DiscreteLagrangian::canonical(params)];
    ls.extend((1..translates).map(|_| DiscreteLagrangian::translated(TruncatedSp::random(params, &mut rng, 3, 2))));
    for (i, l) in ls.iter().enumerate() {
        let rep = check_schrodinger_square(l, a, a + 1)?;
        run.record(
            "square",
            || format!("lagrangian {i}: {}", rep.lagrangian),
            Outcome::truth(rep.passed(), || format!("basis vector {:?}, factor {}", rep.failure, rep.factor)),
        )?;
    }

    let via = schrodinger_transition(&params, &schrodinger_transition(&params, &k, a, a + 1)?, a + 1, a + 2)?;
    let direct = schrodinger_transition(&params, &k, a, a + 2)?;
    run.record("transition_composition", || format!("levels {a}, {}, {}", a + 1, a + 2), Outcome::vectors(&via, &direct))?;

    let up = schrodinger_iso(&params, a + 1)?;
    let red = params.level_reduction(a, a + 1)?;
    let lifted = schrodinger_transition(&params, &k, a, a + 1)?;
    for h in &generators {
        let lhs = schrodinger_transition(&params, &model.act(h, &k), a, a + 1)?;
        let rhs = up.act(&red.lift_h(h), &lifted);
        run.record("transition_equivariance", || format!("h = {h}"), Outcome::vectors(&lhs, &rhs))?;
    }
    Ok(())
}

/// The theta table: stratum law, the open-stratum values, invariance, and
/// correspondence of theta vectors under kernels and levels.
fn theta(run: &mut Run) -> CliResult<()> {
    let params = tate_params(run, 1)?;
    let a = run.cfg.level;
    let p = params.p();
    let mut rng = run.rng(9);
    theta_structure_check(run, &params)?;

    let table = theta_table(&params, a)?;
    let m = params.m_image(a)?;
    let space = m.space();
    let open = &power(p, space.d()) * &c_shift(p, space.lag_dim() - 2 * space.d() as i64 - 1);
    for e in table.iter().filter(|e| is_transverse(&e.lagrangian.lag, &m)) {
        let dist = distinguished(&params, &e.lagrangian.lag)?;
        let expected = open.scale_sign(dist.eps * e.lagrangian.eps);
        run.record("open_stratum", || e.lagrangian.to_string(), Outcome::values(&e.value, &expected))?;
    }

    let lookup: HashMap<&EnhancedLagrangian, &RingValue> = table.iter().map(|e| (&e.lagrangian, &e.value)).collect();
    for s in 0..run.cfg.samples.min(10) {
        let g = TruncatedSp::random(params, &mut rng, 4, 2).at_level(a)?;
        let moved = table.iter().find(|e| lookup.get(&act(&g, &e.lagrangian)) != Some(&&e.value));
        run.record(
            "table_invariance",
            || format!("sample {s}: {:?}", g.matrix().row_vecs()),
            Outcome::truth(moved.is_none(), || format!("moved entry {}", moved.map(|e| e.lagrangian.to_string()).unwrap_or_default())),
        )?;
    }

    let l = DiscreteLagrangian::canonical(params);
    let theta_l = theta_vector(&l, a)?;
    let l0 = l.enhanced_at_level(a)?;
    for s in 0..run.cfg.samples.min(6) {
        let n = DiscreteLagrangian::translated(TruncatedSp::random(params, &mut rng, 3, 2));
        let pair = EnhancedPair::new(n.enhanced_at_level(a)?, l0.clone());
        let theta_n = theta_vector(&n, a)?;
        run.record("kernel_correspondence", || format!("sample {s}: {pair}"), Outcome::models(&apply_pair(&pair, &theta_l)?, &theta_n))?;
        let up = level_transition(&params, &theta_n, &n.at_level(a + 1)?)?;
        run.record("level_correspondence", || format!("sample {s}: {pair}"), Outcome::models(&up, &theta_vector(&n, a + 1)?))?;
    }
    Ok(())
}

fn dispatch(run: &mut Run, suite: SuiteName) -> CliResult<()> {
    match suite {
        SuiteName::Lemma1 => lemma1(run),
        SuiteName::Sublemma1 => sublemma1(run),
        SuiteName::Theorem1 => theorem1(run),
        SuiteName::Maslov => maslov(run),
        SuiteName::Weilrep => weilrep(run),
        SuiteName::Reduction => reduction(run),
        SuiteName::Tower => tower(run),
        SuiteName::Schrodinger => schrodinger(run),
        SuiteName::Theta => theta(run),
        SuiteName::All => {
            for s in SuiteName::EACH {
                run.prefix = s.as_str();
                dispatch(run, s)?;
            }
            Ok(())
        }
    }
}

/// Runs the configured suite. Mathematical failures are reported in the
/// result; errors are reserved for bad input and exhausted budgets.
pub fn run_suite(cfg: &SuiteConfig) -> CliResult<SuiteReport> {
    cfg.validate()?;
    let clock = BudgetClock::start(cfg.budget);
    let mut run = Run::new(cfg, &clock, "");
    dispatch(&mut run, cfg.suite).map_err(|e| match e {
        CliError::Core(weil_core::Error::Budget { count, budget }) => {
            CliError::Budget(format!("{count} lagrangians exceed the enumeration budget {budget}"))
        }
        other => other,
    })?;
    Ok(run.finish())
}
