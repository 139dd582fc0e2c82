//! Randomized invariants. Instances come from the harness generators driven by a proptest
//! seed, so shrinking walks over seeds and sizes.

use parabolic_core::functors::{
    pull_weight_law, pullback_matrix, pullback_parabolic, push_weight_law, pushforward_graded,
    pushforward_matrix, pushforward_parabolic, restrict_matrix, Branch, CoverProfile,
};
use parabolic_core::harness::{
    gen_endomorphism, gen_lattice, gen_parabolic_point, gen_profile, rand_unimodular, Bounds,
};
use parabolic_core::lattice::det_valuation;
use parabolic_core::parabolic::{
    multiset_total, multiset_union, point_morphism, ParabolicBundle, ParabolicPoint,
};
use parabolic_core::rootstack::{graded_morphism, GradedModule};
use parabolic_core::{Field, Lattice, LocalMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn field_for(p: bool) -> Field {
    if p {
        Field::prime(101).unwrap()
    } else {
        Field::Rational
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn canonical_form_ignores_generating_set(seed: u64, n in 1usize..4, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let l = gen_lattice(&mut g, f, n);
        let (u, _) = rand_unimodular(&mut g, f, n, 2);
        // another basis, plus a redundant column
        let other = l.basis().mul(&u);
        let extra = l.basis().mul(&LocalMatrix::t_diagonal(f, &vec![1; n])).slice(0..n, 0..1);
        let again = Lattice::from_generators(f, &other.hstack(&extra)).unwrap();
        prop_assert_eq!(&again, &l);
        prop_assert_eq!(l.canonicalize().unwrap(), l);
    }

    #[test]
    fn sum_and_intersection(seed: u64, n in 1usize..4, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let a = gen_lattice(&mut g, f, n);
        let b = gen_lattice(&mut g, f, n);
        let s = a.sum(&b).unwrap();
        let i = a.intersect(&b).unwrap();
        prop_assert_eq!(a.sum(&a).unwrap(), a.clone());
        prop_assert_eq!(a.intersect(&a).unwrap(), a.clone());
        prop_assert_eq!(&b.sum(&a).unwrap(), &s);
        prop_assert!(s.contains(&a).unwrap() && s.contains(&b).unwrap());
        prop_assert!(a.contains(&i).unwrap() && b.contains(&i).unwrap());
        // [A + B : A] = [B : A ∩ B]
        prop_assert_eq!(s.quotient_dim(&a).unwrap(), b.quotient_dim(&i).unwrap());
        // anything inside both lies inside the intersection
        let c = i.scale(1).sum(&a.scale(3).intersect(&b.scale(2)).unwrap()).unwrap();
        prop_assert!(a.contains(&c).unwrap() && b.contains(&c).unwrap());
        prop_assert!(i.contains(&c).unwrap());
    }

    #[test]
    fn scale_dual_and_lengths(seed: u64, n in 1usize..4, d in -3i64..4, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let a = gen_lattice(&mut g, f, n);
        let b = gen_lattice(&mut g, f, n);
        prop_assert_eq!(a.scale(d).scale(-d), a.clone());
        prop_assert_eq!(a.scale(d).volume(), a.volume() + d * n as i64);
        prop_assert_eq!(a.dual().dual(), a.clone());
        let i = a.intersect(&b).unwrap();
        prop_assert!(i.dual().contains(&a.dual()).unwrap());
        // L ⊇ L∩M ⊇ t(L∩M): lengths add
        let ti = i.scale(1);
        prop_assert_eq!(a.quotient_dim(&ti).unwrap(), a.quotient_dim(&i).unwrap() + i.quotient_dim(&ti).unwrap());
        prop_assert_eq!(i.quotient_dim(&ti).unwrap(), n);
        prop_assert_eq!(det_valuation(a.basis()), Some(a.volume()));
    }

    #[test]
    fn image_under_unimodular_is_consistent(seed: u64, n in 1usize..4, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let a = gen_lattice(&mut g, f, n);
        let (u, v) = rand_unimodular(&mut g, f, n, 1);
        let img = a.image(&u).unwrap();
        prop_assert_eq!(img.volume(), a.volume());
        prop_assert_eq!(img.image(&v).unwrap(), a);
        prop_assert_eq!(Lattice::standard(f, n).image(&u).unwrap(), Lattice::standard(f, n));
    }

    #[test]
    fn graded_round_trip(seed: u64, n in 1usize..5, r in 1u32..9, p: bool) {
        let f = field_for(p);
        let e = gen_parabolic_point(&mut rng(seed), f, n, r);
        let m = GradedModule::from_parabolic(&e);
        prop_assert_eq!(m.to_parabolic(), e.clone());
        prop_assert_eq!(GradedModule::from_parabolic(&m.to_parabolic()), m.clone());
        prop_assert_eq!(m.weights(), e.weights());
        prop_assert_eq!(multiset_total(&e.weights()), n);
    }

    #[test]
    fn line_splittings(seed: u64, n in 1usize..4, r in 1u32..7, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let e = gen_parabolic_point(&mut g, f, n, r);
        for split in [e.split_into_lines(), e.split_into_lines_randomized(&mut g)] {
            prop_assert_eq!(split.lines_sum().image(&split.basis).unwrap(), e.clone());
            prop_assert_eq!(split.basis.mul(&split.basis_inverse), LocalMatrix::identity(f, n));
            prop_assert_eq!(split.weights(), e.weights());
        }
    }

    #[test]
    fn direct_sums_add_weights_and_degrees(seed: u64, r in 1u32..7, d1 in -3i64..4, d2 in -3i64..4) {
        let f = Field::Rational;
        let mut g = rng(seed);
        let a = gen_parabolic_point(&mut g, f, 2, r);
        let b = gen_parabolic_point(&mut g, f, 1, r);
        let s = ParabolicPoint::direct_sum(&[&a, &b]).unwrap();
        prop_assert_eq!(s.weights(), multiset_union(&a.weights(), &b.weights()));
        let ba = ParabolicBundle::new(2, d1, BTreeMap::from([("y".to_string(), a)])).unwrap();
        let bb = ParabolicBundle::new(1, d2, BTreeMap::from([("y".to_string(), b)])).unwrap();
        let sum = ba.direct_sum(&bb).unwrap();
        prop_assert_eq!(sum.parabolic_degree(), ba.parabolic_degree() + bb.parabolic_degree());
        prop_assert_eq!(sum.underlying_degree(), d1 + d2);
    }

    #[test]
    fn pushforward_is_functorial(seed: u64, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let bounds = Bounds { max_rank: 2, max_order: 8, max_branches: 2 };
        let profile = gen_profile(&mut g, f, &bounds);
        let pts: Vec<ParabolicPoint> = profile
            .branches()
            .iter()
            .map(|b| gen_parabolic_point(&mut g, f, 2, b.r))
            .collect();
        let a: Vec<LocalMatrix> = pts.iter().map(|e| gen_endomorphism(&mut g, e)).collect();
        let b: Vec<LocalMatrix> = pts.iter().map(|e| gen_endomorphism(&mut g, e)).collect();
        let ab: Vec<LocalMatrix> = a.iter().zip(&b).map(|(x, y)| x.mul(y)).collect();
        let pa = pushforward_matrix(&profile, &a).unwrap();
        let pb = pushforward_matrix(&profile, &b).unwrap();
        prop_assert_eq!(pushforward_matrix(&profile, &ab).unwrap(), pa.mul(&pb));
        let ids: Vec<LocalMatrix> = pts.iter().map(|e| LocalMatrix::identity(f, e.rank())).collect();
        let n: usize = profile.branches().iter().map(|b| 2 * b.e as usize).sum();
        prop_assert_eq!(pushforward_matrix(&profile, &ids).unwrap(), LocalMatrix::identity(f, n));

        let pushed = pushforward_parabolic(&profile, &pts).unwrap();
        prop_assert!(point_morphism(&pa, &pushed, &pushed).unwrap());
        // a failing candidate: t^{-1} never preserves a chain
        let bad: Vec<LocalMatrix> = ids.iter().map(|i| i.shift(-1)).collect();
        let pbad = pushforward_matrix(&profile, &bad).unwrap();
        prop_assert!(!point_morphism(&pbad, &pushed, &pushed).unwrap());

        let graded: Vec<GradedModule> = pts.iter().map(GradedModule::from_parabolic).collect();
        let gpushed = pushforward_graded(&profile, &graded).unwrap();
        prop_assert!(graded_morphism(&pa, &gpushed, &gpushed).unwrap());
        prop_assert!(!graded_morphism(&pbad, &gpushed, &gpushed).unwrap());
        let ws: Vec<_> = pts.iter().map(ParabolicPoint::weights).collect();
        prop_assert_eq!(pushed.weights(), push_weight_law(&profile, &ws).unwrap());
    }

    #[test]
    fn pullback_is_functorial(seed: u64, p: bool) {
        let f = field_for(p);
        let mut g = rng(seed);
        let bounds = Bounds { max_rank: 2, max_order: 12, max_branches: 2 };
        let profile = gen_profile(&mut g, f, &bounds);
        let label = profile.branches()[0].label.clone();
        let e = gen_parabolic_point(&mut g, f, 2, profile.target_order());
        let a = gen_endomorphism(&mut g, &e);
        let b = gen_endomorphism(&mut g, &e);
        let pa = pullback_matrix(&profile, &a, &label).unwrap();
        let pb = pullback_matrix(&profile, &b, &label).unwrap();
        prop_assert_eq!(pullback_matrix(&profile, &a.mul(&b), &label).unwrap(), pa.mul(&pb));
        let pulled = pullback_parabolic(&profile, &e, &label).unwrap();
        prop_assert!(point_morphism(&pa, &pulled.point, &pulled.point).unwrap());
        let (ws, twist) = pull_weight_law(&profile, &e.weights(), &label).unwrap();
        prop_assert_eq!(pulled.point.weights(), ws);
        prop_assert_eq!(pulled.total_twist(), twist);
    }

    #[test]
    fn restriction_is_multiplicative(seed: u64, e in 1u32..5, u in 1i64..4) {
        let f = Field::Rational;
        let mut g = rng(seed);
        let (a, _) = rand_unimodular(&mut g, f, 2, 2);
        let (b, _) = rand_unimodular(&mut g, f, 2, 2);
        let a = a.shift(-1);
        let u = f.from_i64(u);
        prop_assert_eq!(
            restrict_matrix(&a.mul(&b), e, &u),
            restrict_matrix(&a, e, &u).mul(&restrict_matrix(&b, e, &u))
        );
    }
}

#[test]
fn every_generated_profile_is_admissible() {
    let bounds = Bounds::default();
    for seed in 0..500 {
        let f = field_for(seed % 2 == 0);
        let p = gen_profile(&mut rng(seed), f, &bounds);
        for b in p.branches() {
            assert_eq!(b.r * b.e, p.target_order());
        }
        assert!(CoverProfile::new(p.target_order(), p.branches().to_vec(), true).is_ok());
    }
}

#[test]
fn single_branch_helper() {
    let p = CoverProfile::single(Field::Rational, "x", 3, 2).unwrap();
    assert_eq!(
        p.branches(),
        &[Branch {
            label: "x".into(),
            e: 3,
            r: 2,
            u: Field::Rational.one()
        }]
    );
}
