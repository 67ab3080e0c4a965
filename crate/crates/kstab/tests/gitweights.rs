use std::collections::BTreeMap;

use kstab::archimedean::{Lse, Profile, Ridge, ToricPotential};
use kstab::gitweights::*;
use kstab::nonarchimedean::{make_config, na_energy, na_sup, PlConvexFunction};
use kstab::polytope::MomentPolytope;
use kstab::quadrature::Tolerance;
use kstab::rational::{q, qi, to_f64, Q};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lowest torus weight of a polynomial read directly off its exponents.
fn lowest_weight_oracle(p: &SymVector, lambda: &[i64]) -> i64 {
    let n = p.n();
    let big = p.coeffs().values().map(|c| c.norm()).fold(0.0, f64::max);
    let full: Vec<i64> = lambda.iter().cloned().chain([-lambda.iter().sum::<i64>()]).collect();
    p.coeffs()
        .iter()
        .filter(|(_, c)| c.norm() > 1e-12 * big)
        .map(|(a, _)| (0..n).map(|i| a[i] as i64 * full[i]).sum::<i64>())
        .min()
        .unwrap()
}

fn random_coeff(rng: &mut ChaCha8Rng) -> Q {
    [q(1, 1), q(-1, 1), q(1, 2), q(-1, 2), q(2, 1), q(-2, 3)][rng.gen_range(0..6)].clone()
}

#[test]
fn sl3_slopes_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let terms: Vec<(Q, SymVector)> = (0..rng.gen_range(2..4))
            .map(|_| {
                let d = rng.gen_range(1..4);
                (random_coeff(&mut rng), SymVector::random(3, d, 0.5, &mut rng).unwrap())
            })
            .collect();
        let f = sym_function(&terms).unwrap();
        let lambda = [rng.gen_range(-3..=3), rng.gen_range(-3..=3)];
        let oracle = terms.iter().fold(Q::from_integer(0.into()), |acc, (a, p)| {
            acc - a * qi(lowest_weight_oracle(p, &lambda))
        });
        let lq: Vec<Q> = lambda.iter().map(|&x| qi(x)).collect();
        let c = slope_vs_fna(&f, &lq).unwrap();
        assert_eq!(c.exact, oracle);
        assert!(c.pass, "{c:?}");
    }
}

fn random_vector(rng: &mut ChaCha8Rng, rank: usize) -> WeightedVector {
    let k = rng.gen_range(1..5);
    let ws = (0..k)
        .map(|_| (0..rank).map(|_| rng.gen_range(-3..=3)).collect())
        .collect();
    let ns = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
    WeightedVector::new(ws, ns).unwrap()
}

/// Minimum of the slope over every integer direction in a box large enough to contain
/// all primitive edge normals of weight sets in `[-3, 3]^r`.
fn box_minimum(f: &LogNormFunction) -> Q {
    let r = f.rank();
    let range: Vec<i64> = (-6..=6).collect();
    let dirs: Vec<Vec<i64>> = if r == 1 {
        range.iter().map(|&a| vec![a]).collect()
    } else {
        range
            .iter()
            .flat_map(|&a| range.iter().map(move |&b| vec![a, b]))
            .collect()
    };
    dirs.iter()
        .map(|l| f_na(f, &l.iter().map(|&x| qi(x)).collect::<Vec<_>>()).unwrap())
        .min()
        .unwrap()
}

#[test]
fn decision_procedures_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut seen = [0usize; 2];
    for i in 0..50 {
        let rank = 1 + i % 2;
        let terms: Vec<(Q, WeightedVector)> = (0..rng.gen_range(1..4))
            .map(|_| (random_coeff(&mut rng), random_vector(&mut rng, rank)))
            .collect();
        let f = LogNormFunction::new(rank, terms).unwrap();
        let a = bounded_below_torus(&f).unwrap();
        let b = bounded_by_fan(&f).unwrap();
        let c = box_minimum(&f) >= qi(0);
        assert_eq!(a.bounded, b.bounded, "{f:?}");
        assert_eq!(a.bounded, c, "{f:?}");
        for w in [&a.witness, &b.witness].into_iter().flatten() {
            assert_eq!(f_na(&f, &w.0).unwrap(), w.1);
            assert!(w.1 < qi(0));
        }
        seen[a.bounded as usize] += 1;
    }
    assert!(seen[0] > 5 && seen[1] > 5, "{seen:?}");
}

#[test]
fn representation_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = LogNormFunction::new(
        2,
        vec![
            (q(3, 2), random_vector(&mut rng, 2)),
            (q(-1, 1), random_vector(&mut rng, 2)),
        ],
    )
    .unwrap();
    let back = LogNormFunction::from_json(&f.to_json()).unwrap();
    assert_eq!(back, f);
}

fn linear(n: usize, d: u32, i: usize) -> SymVector {
    let mut a = vec![0; n];
    a[i] = d;
    SymVector::new(n, d, BTreeMap::from([(a, Complex64::new(1.0, 0.0))])).unwrap()
}

#[test]
fn conjugation_can_restore_boundedness() {
    let terms = [(qi(1), linear(2, 1, 0)), (qi(-1), linear(2, 1, 1))];
    let r = conjugated_probe(&terms, 32, 1).unwrap();
    assert!(!r.identity);
    assert!(r.verdicts.iter().all(|&b| b), "{r:?}");
    assert!(!r.stable);
}

#[test]
fn conjugation_keeps_genuine_instability() {
    let terms = [(qi(1), linear(2, 1, 0)), (qi(-1), linear(2, 2, 0))];
    let r = conjugated_probe(&terms, 32, 1).unwrap();
    assert!(!r.identity && r.stable);
    let (_, _, v) = r.negative.unwrap();
    assert!(v < qi(0));
}

#[test]
fn probe_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let terms = [
        (qi(1), SymVector::random(3, 2, 0.3, &mut rng).unwrap()),
        (q(-1, 2), SymVector::random(3, 1, 0.5, &mut rng).unwrap()),
    ];
    let a = conjugated_probe(&terms, 20, 5).unwrap();
    let b = conjugated_probe(&terms, 20, 5).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn toric_weights_recover_sup_and_energy() {
    let p = MomentPolytope::interval(0, 1).unwrap();
    let f = PlConvexFunction::from_max(p.clone(), &[(vec![qi(0)], qi(0)), (vec![qi(1)], q(-1, 2))]).unwrap();
    let cfg = make_config(&p, &f).unwrap();
    let w = toric_weight_function(&f, None).unwrap();
    assert_eq!(f_na(&w, &[qi(1)]).unwrap(), na_sup(&cfg).unwrap());
    let e = na_energy(&cfg).unwrap();
    let mut last = f64::INFINITY;
    for m in [2u64, 8, 32, 128] {
        assert_eq!(
            f_na(&toric_weight_function(&f, Some(m)).unwrap(), &[qi(1)]).unwrap(),
            na_sup(&cfg).unwrap()
        );
        let gap = to_f64(&(determinant_weight(&f, m).unwrap() - &e)).abs();
        assert!(gap <= 1.0 / m as f64 && gap <= last, "m = {m}: {gap}");
        last = gap;
    }
}

fn sup_gap(a: &ToricPotential, b: &ToricPotential) -> f64 {
    (-80..=80)
        .map(|i| {
            let x = [i as f64 / 10.0];
            (a.u(&x).unwrap() - b.u(&x).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn bergman_approximation_improves() {
    let p = MomentPolytope::interval(0, 1).unwrap();
    let u = ToricPotential::symplectic(&p, vec![Ridge::new(0.1, vec![1.0], 0.0, Profile::Pow(2))]).unwrap();
    let mut last = f64::INFINITY;
    for m in 1..=8 {
        let b = bergman_map(&u, m, Tolerance::default()).unwrap();
        let gap = sup_gap(&b, &u);
        assert!(gap < last, "m = {m}: {gap} after {last}");
        last = gap;
    }
    let c = 0.75;
    let b = bergman_map(&u, 3, Tolerance::default()).unwrap();
    let bc = bergman_map(&u.plus_const(c), 3, Tolerance::default()).unwrap();
    for x in [-2.0, 0.0, 3.0] {
        assert!((bc.u(&[x]).unwrap() - b.u(&[x]).unwrap() - c).abs() < 1e-6);
    }
}

#[test]
fn ricci_bound_on_random_level_three() {
    let p = MomentPolytope::interval(0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let pts = (0..=3).map(|k| vec![k as f64 / 3.0]).collect();
        let w = (0..=3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u = ToricPotential::from_lse(&p, Lse::new(6.0, pts, w).unwrap(), vec![p.poly().clone()]).unwrap();
        let r = ricci_bound_check(&u, 3).unwrap();
        assert!(r.holds, "{r:?}");
    }
    let skew = ToricPotential::lse_weights(&p, &[1.0, 1e-9]).unwrap();
    assert!(ricci_bound_check(&skew, 1).unwrap().holds);
    let sq = MomentPolytope::unit_square().unwrap();
    let r = ricci_bound_check(&ToricPotential::fs(&sq).unwrap(), 1).unwrap();
    assert!(r.holds, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn slope_is_homogeneous_and_additive(seed in 0u64..10_000, l0 in -5i64..=5, l1 in -5i64..=5, k in 1i64..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = LogNormFunction::new(2, vec![(random_coeff(&mut rng), random_vector(&mut rng, 2))]).unwrap();
        let b = LogNormFunction::new(2, vec![(random_coeff(&mut rng), random_vector(&mut rng, 2))]).unwrap();
        let sum = LogNormFunction::new(2, a.terms().iter().chain(b.terms()).cloned().collect()).unwrap();
        let l = [qi(l0), qi(l1)];
        let kl = [qi(k * l0), qi(k * l1)];
        prop_assert_eq!(f_na(&a, &kl).unwrap(), f_na(&a, &l).unwrap() * qi(k));
        prop_assert_eq!(f_na(&sum, &l).unwrap(), f_na(&a, &l).unwrap() + f_na(&b, &l).unwrap());
    }

    #[test]
    fn norm_choice_does_not_change_slopes(seed in 0u64..10_000, l0 in -3i64..=3, l1 in -3i64..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = LogNormFunction::new(2, vec![
            (random_coeff(&mut rng), random_vector(&mut rng, 2)),
            (random_coeff(&mut rng), random_vector(&mut rng, 2)),
        ]).unwrap();
        let c = slope_vs_fna(&f, &[qi(l0), qi(l1)]).unwrap();
        prop_assert!(c.pass, "{:?}", c);
    }
}
