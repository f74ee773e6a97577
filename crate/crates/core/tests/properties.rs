use haar_riesz::constants::{bcms_constant, riesz_constant};
use haar_riesz::gram::{build_gram, eig_bounds, psd_certificate, verify_bessel, verify_riesz};
use haar_riesz::haar::{combination, enumerate_family, inner_product, CoefficientMap};
use haar_riesz::measure::{dyadic_unit, rat, Rational};
use haar_riesz::weights::{check_gpos, check_lemma_g2pm1, telescoping_check, weight_profile, WeightConfig};
use haar_riesz::{DyadicInterval, StepSet};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn cells_set(resolution: u32) -> impl Strategy<Value = StepSet> {
    prop::collection::vec(any::<bool>(), 1usize << resolution)
        .prop_map(move |cells| StepSet::from_cells(resolution, &cells).unwrap())
}

fn step_set() -> impl Strategy<Value = StepSet> {
    (1u32..=6).prop_flat_map(cells_set)
}

/// Arbitrary valid (possibly overlapping, unsorted) intervals with denominators up to 12.
fn raw_intervals() -> impl Strategy<Value = Vec<(Rational, Rational)>> {
    let pair = (1i64..=12).prop_flat_map(|d| (0..d).prop_flat_map(move |a| (Just(a), a + 1..=d, Just(d))));
    prop::collection::vec(pair, 0..6)
        .prop_map(|v| v.into_iter().map(|(a, b, d)| (rat(a, d), rat(b, d))).collect())
}

fn interval(max_level: u32) -> impl Strategy<Value = DyadicInterval> {
    (0..=max_level).prop_flat_map(|level| {
        (0..1u64 << level).prop_map(move |index| DyadicInterval::new(level, index).unwrap())
    })
}

/// p = k/256 strictly above 2/3.
fn p_above_two_thirds() -> impl Strategy<Value = Rational> {
    (171i64..=256).prop_map(|k| rat(k, 256))
}

fn coefficients(max_level: u32) -> impl Strategy<Value = CoefficientMap> {
    prop::collection::vec((interval(max_level), -8i64..=8, 1i64..=4), 0..8)
        .prop_map(|v| v.into_iter().map(|(i, n, d)| (i, rat(n, d))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn halves_are_additive(e in step_set(), i in interval(8)) {
        let (lh, rh) = i.halves();
        prop_assert_eq!(e.intersect_measure(&lh) + e.intersect_measure(&rh), e.intersect_measure(&i));
    }

    #[test]
    fn density_in_unit_interval(e in step_set(), i in interval(8)) {
        let q = e.density(&i);
        prop_assert!(q >= Rational::zero() && q <= Rational::one());
    }

    #[test]
    fn complement_is_consistent(e in step_set(), i in interval(8)) {
        prop_assert_eq!(e.intersect_measure(&i) + e.complement().intersect_measure(&i), i.measure());
        prop_assert_eq!(e.complement().complement(), e);
    }

    #[test]
    fn normalize_is_idempotent(raw in raw_intervals()) {
        let once = StepSet::normalize(raw).unwrap();
        let twice = StepSet::normalize(once.intervals().to_vec()).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn parseval_on_full_set(coeffs in coefficients(4)) {
        let f = combination(&coeffs, &StepSet::full());
        let expected: Rational = coeffs.iter().map(|(i, a)| a * a * dyadic_unit(i.level())).sum();
        prop_assert_eq!(f.norm_sq(), expected);
    }

    #[test]
    fn norm_double_counts_inner_products(e in step_set(), coeffs in coefficients(4)) {
        let mut expected = Rational::zero();
        for (i, a) in coeffs.iter() {
            for (j, b) in coeffs.iter() {
                expected += a * b * inner_product(i, j, &e);
            }
        }
        prop_assert_eq!(combination(&coeffs, &e).norm_sq(), expected);
    }

    #[test]
    fn inner_product_is_symmetric_and_local(e in step_set(), i in interval(5), j in interval(5)) {
        prop_assert_eq!(inner_product(&i, &j, &e), inner_product(&j, &i, &e));
        if !i.is_nested_with(&j) {
            prop_assert!(inner_product(&i, &j, &e).is_zero());
        }
    }

    #[test]
    fn inner_product_additive_over_disjoint_split(
        e in cells_set(5), mask in prop::collection::vec(any::<bool>(), 32),
        i in interval(4), j in interval(4),
    ) {
        // Split E along the cell mask A into E ∩ A and E \ A.
        let cells_e: Vec<bool> = DyadicInterval::level_iter(5).map(|c| e.contains_point(&c.midpoint())).collect();
        let inside: Vec<bool> = cells_e.iter().zip(&mask).map(|(x, y)| *x && *y).collect();
        let outside: Vec<bool> = cells_e.iter().zip(&mask).map(|(x, y)| *x && !*y).collect();
        let (e1, e2) = (StepSet::from_cells(5, &inside).unwrap(), StepSet::from_cells(5, &outside).unwrap());
        prop_assert_eq!(e1.measure() + e2.measure(), e.measure());
        prop_assert_eq!(inner_product(&i, &j, &e1) + inner_product(&i, &j, &e2), inner_product(&i, &j, &e));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riesz_floor_and_bessel_ceiling(e in cells_set(5), p in p_above_two_thirds(), depth in 0u32..=4) {
        let family = enumerate_family(depth, &e, &p);
        let c = riesz_constant(&p).unwrap();
        prop_assert!(verify_riesz(&family, &e, &c).unwrap());
        prop_assert!(verify_bessel(&family, &e, &p).unwrap());
    }

    #[test]
    fn bessel_holds_for_any_threshold(e in cells_set(5), k in 1i64..=64, depth in 0u32..=4) {
        let p = rat(k, 64);
        let family = enumerate_family(depth, &e, &p);
        prop_assert!(verify_bessel(&family, &e, &p).unwrap());
    }

    #[test]
    fn certificate_is_monotone_and_agrees_with_floats(
        e in cells_set(5), p in (32i64..=64).prop_map(|k| rat(k, 64)), depth in 1u32..=4,
        num in 0i64..=64, smaller in 0i64..=64,
    ) {
        let family = enumerate_family(depth, &e, &p);
        prop_assume!(!family.is_empty());
        let gram = build_gram(&family, &e, true).unwrap();
        let diag = gram.diagonal();
        let c = rat(num, 64);
        let holds = psd_certificate(&gram, &c, &diag);
        if holds {
            let c2 = rat(smaller.min(num), 64);
            prop_assert!(psd_certificate(&gram, &c2, &diag));
        }
        let (lo, _) = eig_bounds(&gram).unwrap();
        let cf = num as f64 / 64.0;
        // Exact and float paths may disagree only within the tolerance band.
        if holds {
            prop_assert!(lo >= cf - 1e-8, "certified c={} but lambda_min={}", cf, lo);
        } else {
            prop_assert!(lo < cf + 1e-8, "refuted c={} but lambda_min={}", cf, lo);
        }
    }

    #[test]
    fn telescoping_reproduces_weighted_inequality(
        e in cells_set(5), p in p_above_two_thirds(), raw in prop::collection::vec(-6i64..=6, 31),
    ) {
        let cfg = WeightConfig::new(p.clone()).unwrap();
        let family = enumerate_family(4, &e, &p);
        let coeffs: CoefficientMap = family.iter().zip(&raw).map(|(i, a)| (*i, rat(*a, 1))).collect();
        let report = telescoping_check(&e, &coeffs, 4, &cfg).unwrap();
        prop_assert!(report.all_hold(), "{:?}", report);
    }

    #[test]
    fn weights_stay_between_one_and_c(e in step_set(), p in p_above_two_thirds(), n in 0u32..=5) {
        let cfg = WeightConfig::new(p).unwrap();
        let c = cfg.upper_constant();
        for (_, w) in weight_profile(&e, n, &cfg).iter() {
            prop_assert!(*w >= Rational::one() && *w <= c);
        }
    }
}

proptest! {
    #[test]
    fn weight_function_inequalities(p in p_above_two_thirds(), a in 0i64..=64, b in 0i64..=64) {
        let cfg = WeightConfig::new(p.clone()).unwrap();
        prop_assert!(check_lemma_g2pm1(&cfg));
        let (q1, q2) = (rat(a, 64), rat(b, 64));
        let mid = (&q1 + &q2) / rat(2, 1);
        prop_assert!(check_gpos(&q1, &q2, &cfg, false).unwrap());
        if mid >= p {
            prop_assert!(check_gpos(&q1, &q2, &cfg, true).unwrap());
        }
        let g = |q: &Rational| cfg.g(q).unwrap();
        prop_assert!(g(&mid) * rat(2, 1) <= g(&q1) + g(&q2));
    }

    #[test]
    fn riesz_constant_increasing(a in 171i64..=256, b in 171i64..=256) {
        prop_assume!(a < b);
        prop_assert!(riesz_constant(&rat(a, 256)).unwrap() < riesz_constant(&rat(b, 256)).unwrap());
    }

    #[test]
    fn bcms_in_range(c in 1.0f64..(4.0 / 3.0)) {
        let v = bcms_constant(c).unwrap();
        prop_assert!(v.is_finite() && v <= c / 2.0);
    }
}
