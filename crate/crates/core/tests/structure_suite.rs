//! Catalog structures through the full identity suite.

use proptest::prelude::*;
use sfoliate::catalog::{flat_torus_degenerate, standard_s_structure};
use sfoliate::chart_core::{curvature, Sampler};
use sfoliate::identities::{run_suite, Tolerances};
use sfoliate::structure::{axiom_residuals, AXIOM_NAMES};
use sfoliate::warp::leaf_curvature_report;

/// The pairing identity carries a residual of `2n η̄(X)` on every normal model.
const PAIRING: &str = "ricci_reeb_rough_laplacian_pairing";

#[test]
fn standard_structures_pass_everything_but_the_pairing() {
    for (n, p) in [(1, 1), (1, 2), (2, 1)] {
        let s = standard_s_structure(n, p, false).unwrap();
        let report = run_suite(&s, &Sampler::new(20, 42), &Tolerances::default()).unwrap();
        let failing: Vec<&str> = report.failures().map(|e| e.name.as_str()).collect();
        assert_eq!(failing, vec![PAIRING], "(n={n}, p={p})");
        assert!(report.warnings.is_empty());
        for name in AXIOM_NAMES {
            assert!(report.entry(name).unwrap().max_abs < 1e-8, "{name}");
        }
    }
}

#[test]
fn degenerate_torus_passes_the_whole_suite() {
    let s = flat_torus_degenerate(3).unwrap();
    let report = run_suite(&s, &Sampler::new(10, 42), &Tolerances::default()).unwrap();
    assert!(
        report.all_pass(),
        "{:?}",
        report.failures().collect::<Vec<_>>()
    );
    for e in &report.entries {
        assert!(e.max_abs <= 1e-12, "{}: {}", e.name, e.max_abs);
    }
}

#[test]
fn reeb_ricci_is_twice_n() {
    for (n, p) in [(1, 1), (2, 2), (1, 3)] {
        let s = standard_s_structure(n, p, true).unwrap();
        for pt in Sampler::new(10, 4).points(s.chart()) {
            let ric = curvature(s.chart(), s.metric(), &pt).unwrap().ricci;
            for a in 0..p {
                for b in 0..p {
                    let v = ric[(2 * n + a, 2 * n + b)];
                    assert!((v - 2.0 * n as f64).abs() < 1e-6, "Ric(ξ{a}, ξ{b}) = {v}");
                }
            }
        }
    }
}

#[test]
fn leaves_are_flat_and_totally_geodesic() {
    let s = standard_s_structure(2, 3, false).unwrap();
    let r = leaf_curvature_report(&s, &Sampler::new(15, 42)).unwrap();
    assert!(r.trusted);
    assert!(r.max_sectional < 1e-8 && r.max_leaf_ricci < 1e-8 && r.max_second_fundamental < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn axioms_hold_at_arbitrary_points(
        n in 1usize..3, p in 1usize..3, u in prop::collection::vec(0.02..0.98f64, 7)
    ) {
        let s = standard_s_structure(n, p, false).unwrap();
        let coords: Vec<f64> = s
            .chart()
            .bounds()
            .iter()
            .zip(&u)
            .map(|(&(lo, hi), t)| lo + (hi - lo) * t)
            .collect();
        let pt = s.chart().point(&coords).unwrap();
        prop_assert!(axiom_residuals(&s, &pt).unwrap().max() < 1e-8);
    }
}
