use std::f64::consts::TAU;

use proptest::prelude::*;
use unstable_gibbs::gibbs::AtomicMeasure;
use unstable_gibbs::{
    cesaro, density_weights, integrate, invariance_defect, measure_of_ball, BallSpec, CatMap, FourierMode,
    HyperbolicMap, Potential, PushforwardChain, RefinementPolicy, TorusPoint, UnstableCurve,
};

fn cat_curve(n: usize, spacing: f64) -> (CatMap, UnstableCurve<TorusPoint, [f64; 2]>) {
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(spacing);
    let curve = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy)
        .unwrap()
        .advance_by(&cat, n, &policy)
        .unwrap();
    (cat, curve)
}

#[test]
fn srb_densities_are_arclength() {
    let (cat, curve) = cat_curve(6, 0.01);
    let elements = curve.seed_elements(&cat);
    let total: f64 = elements.iter().sum();
    for g in [
        Potential::unstable_expansion(),
        Potential::unstable_expansion().shifted(0.8),
    ] {
        let mu = density_weights(&cat, &curve, &g).unwrap();
        assert_eq!(mu.len(), curve.len());
        for (a, e) in mu.atoms().iter().zip(&elements) {
            assert!((a.weight - e / total).abs() < 1e-12);
        }
    }
}

#[test]
fn srb_chain_is_the_volume_chain() {
    let (cat, curve) = cat_curve(5, 0.02);
    let weighted = PushforwardChain::from_curve(&cat, &curve, &Potential::unstable_expansion(), 5).unwrap();
    let plain = PushforwardChain::volume(&cat, &curve, 5).unwrap();
    for (a, b) in weighted.elements().zip(plain.elements()) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.atoms().iter().zip(b.atoms()) {
            assert_eq!(x.point, y.point);
            assert!((x.weight - y.weight).abs() < 1e-12);
        }
    }
}

/// On a straight segment of length `L` from the origin with direction
/// `(c, s)`, the normalized arclength average of `cos 2πx` is
/// `sin(2πcL)/(2πcL)` and that of `sin 2πy` is `(1 − cos 2πsL)/(2πsL)`.
#[test]
fn straight_segment_averages_match_closed_form() {
    let n = 8;
    let (cat, curve) = cat_curve(n, 0.005);
    let chain = PushforwardChain::from_curve(&cat, &curve, &Potential::zero(), n).unwrap();
    let mu = cesaro(&chain);
    let [c, s] = cat.unstable_direction(&TorusPoint::new(0.0, 0.0)).unwrap();
    let (mut cos_x, mut sin_y) = (0.0, 0.0);
    for k in 0..n {
        let len = cat.lambda_u().powi(k as i32);
        let (x, y) = (TAU * c * len, TAU * s * len);
        cos_x += x.sin() / x / n as f64;
        sin_y += (1.0 - y.cos()) / y / n as f64;
    }
    let got_cos = integrate(&mu, &Potential::fourier(vec![FourierMode::cos(1, 0)])).unwrap();
    let got_sin = integrate(&mu, &Potential::fourier(vec![FourierMode::sin(0, 1)])).unwrap();
    assert!((got_cos - cos_x).abs() < 1e-4, "{got_cos} vs {cos_x}");
    assert!((got_sin - sin_y).abs() < 1e-4, "{got_sin} vs {sin_y}");
}

#[test]
fn defect_bound_holds_for_a_weighted_chain() {
    let g = Potential::fourier(vec![FourierMode::sin_x(0.1)]);
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(0.01);
    let mut curve = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy).unwrap();
    for n in 1..=7 {
        curve = curve.advance(&cat, &policy).unwrap();
        let chain = PushforwardChain::from_curve(&cat, &curve, &g, n).unwrap();
        for f in [FourierMode::cos(1, 0), FourierMode::sin(0, 1), FourierMode::cos(1, 1)] {
            let d = invariance_defect(&chain, &Potential::fourier(vec![f])).unwrap();
            assert!(d <= 2.0 / n as f64 + 1e-10, "n = {n}, {f:?}: {d}");
        }
    }
}

#[test]
fn lazy_and_materialized_measures_agree() {
    let (cat, curve) = cat_curve(4, 0.01);
    let chain = PushforwardChain::from_curve(&cat, &curve, &Potential::zero(), 4).unwrap();
    let lazy = cesaro(&chain);
    let flat = lazy.to_atoms();
    assert_eq!(
        lazy.block_count(),
        unstable_gibbs::reduce::block_count(chain.origins().len())
    );
    for center in [
        TorusPoint::new(0.0, 0.0),
        TorusPoint::new(0.5, 0.5),
        TorusPoint::new(0.2, 0.7),
    ] {
        let ball = BallSpec::new(center, 0.25).unwrap();
        assert!((measure_of_ball(&cat, &lazy, &ball) - measure_of_ball(&cat, &flat, &ball)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn densities_form_a_probability_vector(
        amp in -2.0f64..2.0,
        kx in -3i32..4,
        ky in -3i32..4,
        phase in 0.0f64..1.0,
        shift in -5.0f64..5.0,
    ) {
        let (cat, curve) = cat_curve(3, 0.02);
        let g = Potential::fourier(vec![FourierMode { kx, ky, amplitude: amp, phase }]);
        let mu = density_weights(&cat, &curve, &g).unwrap();
        prop_assert!(mu.atoms().iter().all(|a| a.weight >= 0.0));
        prop_assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        let shifted = density_weights(&cat, &curve, &g.clone().shifted(shift)).unwrap();
        for (a, b) in mu.atoms().iter().zip(shifted.atoms()) {
            prop_assert!((a.weight - b.weight).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_masses_lie_in_the_unit_interval(cx in 0.0f64..1.0, cy in 0.0f64..1.0, r in 0.01f64..0.49) {
        let (cat, curve) = cat_curve(3, 0.02);
        let chain = PushforwardChain::from_curve(&cat, &curve, &Potential::zero(), 3).unwrap();
        let m = measure_of_ball(&cat, &cesaro(&chain), &BallSpec::new(TorusPoint::new(cx, cy), r).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
    }
}
