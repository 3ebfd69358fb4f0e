use std::f64::consts::PI;

use num_complex::Complex;
use powerfold::analysis::{beltrami_estimate, exact_cell_dilatation, Psi};
use powerfold::dynamics::{verify_wandering, AnnulusMode};
use powerfold::folding::{build_cell, in_fold_support, psi, sigma, tau, AnnulusMap, Side};
use powerfold::globalmap::GlobalMap;
use powerfold::sequences::generate_standard_family;
use powerfold::LogPoint;
use proptest::prelude::*;

fn degrees() -> impl Strategy<Value = (u64, u64)> {
    (1u64..6).prop_flat_map(|n| (Just(n), n + 1..4 * n + 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logpoint_roundtrip(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        prop_assume!(re.hypot(im) > 1e-6);
        let z = Complex::new(re, im);
        let back = LogPoint::from_complex(z).to_complex();
        prop_assert!((back - z).norm() <= 1e-12 * z.norm());
    }

    #[test]
    fn logpoint_product_matches_complex(a in -5.0f64..5.0, b in -PI..PI, c in -5.0f64..5.0, d in -PI..PI) {
        let (x, y) = (LogPoint::new(a, b), LogPoint::new(c, d));
        let direct = x.to_complex() * y.to_complex();
        prop_assert!(((x * y).to_complex() - direct).norm() <= 1e-12 * direct.norm());
    }

    #[test]
    fn psi_is_periodic(m in 2u64..7, x in 0.02f64..0.98, y in 0.02f64..1.98, q in -3i32..4) {
        prop_assume!((y - 1.0).abs() > 1e-3 || x > 0.5 + 1e-3);
        let z = Complex::new(x, y);
        let shift = Complex::new(0.0, 2.0 * q as f64);
        let a = psi(z, m, None).unwrap() + shift;
        let b = psi(z + shift, m, None).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn psi_finite_difference_matches_affine_dilatation(m in 2u64..6, x in 0.05f64..0.95, y in 0.05f64..0.95) {
        let map = Psi::<f64>::new(m).unwrap();
        let cell = build_cell::<f64>(m).unwrap();
        let z = Complex::new(x, y);
        let est = beltrami_estimate(&map, LogPoint::from_complex(z), 1e-6);
        prop_assume!(est.is_ok());
        let k = est.unwrap().k_local;
        let exact = exact_cell_dilatation(&cell, z);
        prop_assert!((k - exact).abs() < 1e-5 * exact, "{} vs {}", k, exact);
    }

    #[test]
    fn sigma_is_identity_off_the_lens(r in 1.001f64..50.0, t in -PI..PI) {
        let z = Complex::from_polar(r, t);
        prop_assume!(!in_fold_support(z));
        prop_assert!((sigma(z).unwrap() - z).norm() < 1e-12 * r);
    }

    #[test]
    fn sigma_folds_conjugate_circle_points(t in 0.0f64..PI) {
        let a = sigma(Complex::from_polar(1.0, t)).unwrap();
        let b = sigma(Complex::from_polar(1.0, -t)).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
        prop_assert!(a.im.abs() < 1e-12);
    }

    #[test]
    fn tau_slope_is_bounded((n, big_m) in degrees(), a in -PI..PI, delta in 1e-6f64..0.5) {
        let m = big_m / n;
        let d = (tau(a + delta, n, big_m).unwrap() - tau(a, n, big_m).unwrap() + PI).rem_euclid(2.0 * PI) - PI;
        let (lo, hi) = ((n * m) as f64 / big_m as f64, ((m + 1) * n) as f64 / big_m as f64);
        prop_assert!(d >= delta * lo * (1.0 - 1e-9) - 1e-12, "{} < {}", d, delta * lo);
        prop_assert!(d <= delta * hi * (1.0 + 1e-9) + 1e-12, "{} > {}", d, delta * hi);
    }

    #[test]
    fn annulus_matches_power_maps_on_boundary(
        (n, big_m) in degrees(),
        log_r in -2.0f64..5.0,
        cl in -1.0f64..1.0,
        ca in -PI..PI,
        t in -PI..PI,
    ) {
        let c = LogPoint::new(cl, ca);
        let g = AnnulusMap::new(n, big_m, log_r, c).unwrap();
        let zi = LogPoint::new(log_r, t);
        let zo = LogPoint::new(g.log_outer(), t);
        prop_assert!(g.eval(zi, None).unwrap().log_distance(&g.inner_power(zi)) < 1e-9);
        prop_assert!(g.eval(zo, None).unwrap().log_distance(&g.outer_power(zo)) < 1e-9);
    }

    #[test]
    fn slit_sides_agree((n, big_m) in degrees(), log_r in -2.0f64..5.0, k in 1u64..6, s in 0.01f64..0.49) {
        prop_assume!(k <= n);
        let g = AnnulusMap::new(n, big_m, log_r, LogPoint::one()).unwrap();
        let z = LogPoint::new(log_r + s * PI / n as f64, PI * (2 * k - 1) as f64 / n as f64);
        let scale = LogPoint::new(-(n as f64) * log_r, 0.0);
        let a = (g.eval(z, Some(Side::Below)).unwrap() * scale).to_complex();
        let b = (g.eval(z, Some(Side::Above)).unwrap() * scale).to_complex();
        prop_assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn standard_family_satisfies_radius_rule(first in 2u64..5, ratio in 2u64..4, depth in 2usize..5) {
        let p = generate_standard_family::<f64>(first, ratio, depth, LogPoint::one()).unwrap();
        for r in p.radius_rule_residuals() {
            prop_assert!(r < 1e-10);
        }
    }

    #[test]
    fn truncation_agrees_above_cut(l in 3.2f64..60.0, t in -PI..PI, n_cut in 1usize..3) {
        let map = GlobalMap::new(generate_standard_family::<f64>(2, 2, 4, LogPoint::one()).unwrap()).unwrap();
        let z = LogPoint::new(l, t);
        prop_assume!(l >= map.params().log_radius(n_cut));
        let (a, b) = (map.h(z), map.h_truncated(z, n_cut));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.log_mod.to_bits(), b.log_mod.to_bits());
                prop_assert_eq!(a.arg.to_bits(), b.arg.to_bits());
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn wandering_report_is_reproducible() {
    let map = GlobalMap::new(generate_standard_family::<f64>(2, 2, 4, LogPoint::one()).unwrap()).unwrap();
    let a = verify_wandering(&map, 1.1, AnnulusMode::Shrink, 2..=3, 100, 42).unwrap();
    let b = verify_wandering(&map, 1.1, AnnulusMode::Shrink, 2..=3, 100, 42).unwrap();
    assert_eq!(a, b);
    let c = verify_wandering(&map, 1.1, AnnulusMode::Shrink, 2..=3, 100, 43).unwrap();
    assert!(a.inclusions_hold());
    assert_ne!(a.records[0].min_margin, c.records[0].min_margin);
}

#[test]
fn f32_and_f64_agree_on_boundary() {
    let g64 = AnnulusMap::<f64>::new(2, 5, 1.0, LogPoint::one()).unwrap();
    let g32 = AnnulusMap::<f32>::new(2, 5, 1.0, LogPoint::one()).unwrap();
    for k in 0..32 {
        let t = -PI + (k as f64 + 0.5) * PI / 16.0;
        let z = LogPoint::new(1.3, t);
        let a = g64.eval(z, None).unwrap();
        let b = g32.eval(z.cast::<f32>(), None).unwrap();
        assert!((a.log_mod - b.log_mod as f64).abs() < 1e-4);
    }
}
