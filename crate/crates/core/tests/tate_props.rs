use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weil_core::heisenberg::HeisenbergElement;
use weil_core::intertwiner::{apply_pair, EnhancedPair};
use weil_core::symplectic::{act, is_transverse, EnhancedLagrangian};
use weil_core::tate::*;
use weil_core::values::{c_shift, Rational, RingValue, Sign};

fn params(p: u32, d: usize) -> LaurentParams {
    LaurentParams::new(p, d, 3).unwrap()
}

#[test]
fn theta_table_has_the_stratum_structure() {
    let pr = params(3, 1);
    let table = theta_table(&pr, 1).unwrap();
    assert_eq!(table.len(), 80);
    let st = theta_structure(&pr, &table).unwrap();
    assert!(st.passed(), "{st:?}");
    assert_eq!(st.degrees, vec![Some(-6), Some(-7), Some(-8)]);
    let expected = [
        RingValue::from_int(3, -27),
        &RingValue::from_int(3, -27) + &RingValue::from_int(3, -54).mul_zeta(1),
        RingValue::from_int(3, 81),
    ];
    for (i, e) in expected.iter().enumerate() {
        assert_eq!(st.stratum_values[i].as_ref(), Some(e), "stratum {i}");
    }
    for pair in table.chunks(2) {
        assert_eq!(pair[0].lagrangian.lag, pair[1].lagrangian.lag);
        assert_eq!(pair[0].value, pair[1].value.scale_sign(Sign::Minus));
    }
}

#[test]
fn theta_table_on_the_open_stratum_is_the_transported_theta_vector() {
    for (p, d) in [(3, 1), (5, 1)] {
        let pr = params(p, d);
        let table = theta_table(&pr, 1).unwrap();
        let m = pr.m_image(1).unwrap();
        let space = m.space();
        let expected = &RingValue::from_int(p, (p as i64).pow(space.d() as u32)) * &c_shift(p, space.lag_dim() - 2 * space.d() as i64 - 1);
        let mut open = 0;
        for e in &table {
            if !is_transverse(&e.lagrangian.lag, &m) {
                continue;
            }
            let dist = distinguished(&pr, &e.lagrangian.lag).unwrap();
            let sign = if dist.eps == e.lagrangian.eps { Sign::Plus } else { Sign::Minus };
            assert_eq!(e.value, expected.scale_sign(sign));
            open += 1;
        }
        assert_eq!(open, 2 * (p as usize).pow(3));
        if p == 5 {
            assert!(theta_structure(&pr, &table).unwrap().passed());
        }
    }
}

#[test]
fn theta_table_is_invariant_under_automorphisms() {
    let pr = params(3, 1);
    let table = theta_table(&pr, 1).unwrap();
    let lookup: HashMap<EnhancedLagrangian, RingValue> = table.iter().map(|e| (e.lagrangian.clone(), e.value.clone())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let g = TruncatedSp::random(pr, &mut rng, 4, 2).at_level(1).unwrap();
        for e in &table {
            assert_eq!(lookup[&act(&g, &e.lagrangian)], e.value);
        }
    }
}

#[test]
fn theta_vectors_correspond_under_kernels_and_levels() {
    let pr = params(3, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let l = DiscreteLagrangian::canonical(pr);
    let theta = theta_vector(&l, 1).unwrap();
    for _ in 0..6 {
        let n = DiscreteLagrangian::translated(TruncatedSp::random(pr, &mut rng, 3, 2));
        let pair = EnhancedPair::new(n.enhanced_at_level(1).unwrap(), l.enhanced_at_level(1).unwrap());
        assert_eq!(apply_pair(&pair, &theta).unwrap(), theta_vector(&n, 1).unwrap());
        let up = level_transition(&pr, &theta_vector(&n, 1).unwrap(), &n.at_level(2).unwrap()).unwrap();
        assert_eq!(up, theta_vector(&n, 2).unwrap());
    }
}

#[test]
fn tower_square_commutes_for_sampled_pairs() {
    let pr = params(3, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let pairs = sample_tower_pairs(&pr, 1, 2, 50, &mut rng).unwrap();
    assert_eq!(pairs.len(), 50);
    let mut transverse = 0;
    for pair in &pairs {
        let rep = check_tower_square(&pr, pair, 1).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.factor, RingValue::one(3));
        transverse += pair.is_transverse() as usize;
    }
    assert!(transverse > 0 && transverse < 50);
}

#[test]
fn schrodinger_square_commutes_with_the_pinned_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (p, d, a, a2) in [(3, 1, 1, 2), (3, 1, 0, 1), (3, 1, 0, 2), (5, 1, 0, 1), (3, 2, 0, 1)] {
        let pr = params(p, d);
        for l in [DiscreteLagrangian::canonical(pr), DiscreteLagrangian::translated(TruncatedSp::random(pr, &mut rng, 3, 2))] {
            let rep = check_schrodinger_square(&l, a, a2).unwrap();
            assert!(rep.passed(), "p={p} d={d} {a}→{a2}: {rep:?}");
        }
    }
    // (1 + 2ζ)·s / 3^5 at p = 3, one step
    let expected = (&RingValue::one(3) + &RingValue::from_int(3, 2).mul_zeta(1))
        .mul_s_pow(1)
        .scale(&Rational::new(1, 243));
    assert_eq!(schrodinger_square_factor(&params(3, 1), 1, 2).unwrap(), expected);
}

#[test]
fn schrodinger_transitions_compose_and_intertwine() {
    let pr = params(3, 1);
    let src = schrodinger_iso(&pr, 0).unwrap();
    let k = vec![RingValue::from_int(3, 2)];
    let via = schrodinger_transition(&pr, &schrodinger_transition(&pr, &k, 0, 1).unwrap(), 1, 2).unwrap();
    assert_eq!(via, schrodinger_transition(&pr, &k, 0, 2).unwrap());
    assert_eq!(src.dim(), 1);
    let mid = schrodinger_iso(&pr, 1).unwrap();
    let k1: Vec<RingValue> = (0..9).map(|i| RingValue::from_int(3, i + 1)).collect();
    let up = schrodinger_iso(&pr, 2).unwrap();
    let lifted = schrodinger_transition(&pr, &k1, 1, 2).unwrap();
    // translations by the lower level's Heisenberg group commute with the transition
    let red = pr.level_reduction(1, 2).unwrap();
    for i in 0..mid.space().dim() {
        let mut m = vec![0; mid.space().dim()];
        m[i] = 1;
        let h = HeisenbergElement::new(m, 0);
        let lhs = schrodinger_transition(&pr, &mid.act(&h, &k1), 1, 2).unwrap();
        let rhs = up.act(&red.lift_h(&h), &lifted);
        assert_eq!(lhs, rhs);
    }
}
