use num_complex::Complex64;
use proptest::prelude::*;
use toaloc_core::firstpath::{detect_first_path, ThresholdSpec};
use toaloc_core::locate::{
    build_linear_system, position_fix, solve_ls, RangeSet, DEFAULT_DEGENERACY_TOL,
};
use toaloc_core::receiver::{average_pdp, CirSnapshot, PowerDelayProfile, TapGrid};
use toaloc_core::Point;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

fn profile() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, 16..64)
}

fn any_spec() -> impl Strategy<Value = ThresholdSpec> {
    prop_oneof![
        (0.0f64..30.0).prop_map(|delta_db| ThresholdSpec::M1 { delta_db }),
        (0.1f64..12.0, 0.0f64..8.0).prop_map(|(a, b)| ThresholdSpec::M2 { a, b }),
        (1usize..12, 0.0f64..14.0)
            .prop_map(|(l_strongest, gamma)| ThresholdSpec::M3 { l_strongest, gamma }),
    ]
}

/// Anchors spread around the origin with a target inside their hull region.
fn geometry() -> impl Strategy<Value = (Vec<Point>, Point)> {
    (
        prop::collection::vec((0.0f64..std::f64::consts::TAU, 500.0f64..3000.0), 7),
        (-400.0f64..400.0, -400.0f64..400.0),
    )
        .prop_map(|(polar, (x, y))| {
            let anchors = polar
                .into_iter()
                .map(|(t, r)| Point::from_polar(r, t))
                .collect();
            (anchors, Point::new(x, y))
        })
}

fn ranges(anchors: &[Point], p: Point, noise: &[f64]) -> Vec<f64> {
    anchors
        .iter()
        .zip(noise)
        .map(|(a, n)| a.distance(p) + n)
        .collect()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn raising_threshold_never_moves_detection_earlier(z in profile(), t1 in 0.0f64..100.0, dt in 0.0f64..50.0) {
        let p = PowerDelayProfile::from_powers(z, 1);
        let low = detect_first_path(&p, t1).tap_index;
        let high = detect_first_path(&p, t1 + dt).tap_index;
        match (low, high) {
            (Some(l), Some(h)) => prop_assert!(l <= h),
            (None, h) => prop_assert!(h.is_none()),
            (Some(_), None) => {}
        }
    }

    #[test]
    fn thresholds_scale_with_the_profile(z in profile(), spec in any_spec(), c in 1e-3f64..1e3, k in -20i32..20) {
        prop_assume!(z.iter().any(|&v| v > 0.0));
        prop_assume!(!matches!(spec, ThresholdSpec::M3 { l_strongest, .. } if l_strongest >= z.len()));
        let p = PowerDelayProfile::from_powers(z.clone(), 10);
        let base = spec.threshold(&p).unwrap();

        let scaled = PowerDelayProfile::from_powers(z.iter().map(|v| v * c).collect(), 10);
        let t = spec.threshold(&scaled).unwrap();
        prop_assert!((t - c * base).abs() <= 1e-9 * (c * base).abs().max(1e-300));

        // A power-of-two factor is exact, so detections must agree exactly.
        let s = 2f64.powi(k);
        let exact = PowerDelayProfile::from_powers(z.iter().map(|v| v * s).collect(), 10);
        prop_assert_eq!(spec.detect(&exact).unwrap().tap_index, spec.detect(&p).unwrap().tap_index);
    }

    #[test]
    fn method1_at_zero_delta_is_argmax(z in profile()) {
        prop_assume!(z.iter().any(|&v| v > 0.0));
        let p = PowerDelayProfile::from_powers(z, 1);
        let d = ThresholdSpec::M1 { delta_db: 0.0 }.detect(&p).unwrap();
        prop_assert_eq!(d.tap_index, p.argmax());
    }

    #[test]
    fn solver_commutes_with_rigid_motions(
        (anchors, p) in geometry(),
        noise in prop::collection::vec(-30.0f64..30.0, 7),
        theta in 0.0f64..std::f64::consts::TAU,
        (tx, ty) in (-5e4f64..5e4, -5e4f64..5e4),
    ) {
        let r = ranges(&anchors, p, &noise);
        let fix = position_fix(&RangeSet::new(&anchors, &r).unwrap(), DEFAULT_DEGENERACY_TOL);
        prop_assume!(fix.is_ok());

        let shift = Point::new(tx, ty);
        let moved: Vec<Point> = anchors.iter().map(|a| a.rotate(theta) + shift).collect();
        let fix2 = position_fix(&RangeSet::new(&moved, &r).unwrap(), DEFAULT_DEGENERACY_TOL);
        prop_assert!(fix2.is_ok());
        let expected = fix.position.rotate(theta) + shift;
        prop_assert!(fix2.position.distance(expected) < 1e-5, "{:?} vs {:?}", fix2.position, expected);
        prop_assert!((fix2.residual - fix.residual).abs() <= 1e-6 * fix.residual.max(1.0));
    }

    #[test]
    fn exact_ranges_are_recovered((anchors, p) in geometry()) {
        let r = ranges(&anchors, p, &[0.0; 7]);
        let fix = position_fix(&RangeSet::new(&anchors, &r).unwrap(), DEFAULT_DEGENERACY_TOL);
        prop_assert!(fix.is_ok());
        prop_assert!(fix.position.distance(p) < 1e-6);
    }

    #[test]
    fn least_squares_ignores_row_order(
        (anchors, p) in geometry(),
        noise in prop::collection::vec(-30.0f64..30.0, 7),
        perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let r = ranges(&anchors, p, &noise);
        let rs = RangeSet::new(&anchors, &r).unwrap();
        let sys = build_linear_system(&rs, &rs.equation_indices()).unwrap();
        let mut shuffled = sys.clone();
        shuffled.rows = perm.iter().map(|&i| sys.rows[i]).collect();
        shuffled.rhs = perm.iter().map(|&i| sys.rhs[i]).collect();
        let a = solve_ls(&sys, DEFAULT_DEGENERACY_TOL);
        let b = solve_ls(&shuffled, DEFAULT_DEGENERACY_TOL);
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!(a.distance(b) < 1e-6),
            (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
        }
    }

    #[test]
    fn pdp_ignores_snapshot_order(
        raw in prop::collection::vec(prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 12), 1..20),
        seed in any::<u64>(),
    ) {
        let snaps: Vec<CirSnapshot> = raw
            .iter()
            .enumerate()
            .map(|(i, taps)| CirSnapshot {
                taps: taps.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
                slot_index: i,
            })
            .collect();
        let grid = TapGrid::new(1e-6, 12);
        let mut order: Vec<usize> = (0..snaps.len()).collect();
        let n = order.len();
        for i in (1..n).rev() {
            order.swap(i, (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize);
        }
        let permuted: Vec<CirSnapshot> = order.iter().map(|&i| snaps[i].clone()).collect();
        let a = average_pdp(&snaps, grid).unwrap();
        let b = average_pdp(&permuted, grid).unwrap();
        prop_assert_eq!(a.k_averages, b.k_averages);
        for (x, y) in a.z.iter().zip(&b.z) {
            prop_assert!(*x >= 0.0);
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }
}
