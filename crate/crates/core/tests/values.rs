//! Value functions over the reduced-grid boundaries.

mod common;

use common::{small_boundary, small_boundary_linear, small_settings, reference};
use debt_ceiling::boundary::{solve_boundary, SolverSettings};
use debt_ceiling::model::CostSpec;
use debt_ceiling::valuation::{eval_h, eval_w1d, smooth_fit_diagnostic, Valuation};
use debt_ceiling::Error;
use proptest::prelude::*;

#[test]
fn stopping_region_value_is_the_upper_bound() {
    let b = small_boundary();
    let val = Valuation::new(b).unwrap();
    // large-z nodes need the full grid; see the acceptance suite
    for i in [4, 8, 12] {
        let z = b.z_grid[i];
        let u = val.u(z, b.yhat[i] - 0.2);
        assert!((u.value / u.upper - 1.0).abs() < 1e-3, "{u:?}");
        assert!(u.violation.is_none());
    }
}

#[test]
fn continuation_value_is_strictly_inside() {
    let b = small_boundary();
    let val = Valuation::new(b).unwrap();
    let z = b.z_grid[10];
    let u = val.u(z, b.yhat[10] + 0.3);
    assert!(u.value < u.upper * 0.99 && u.value > 0.0, "{u:?}");
}

#[test]
fn value_vanishes_at_zero_debt() {
    let b = small_boundary();
    let val = Valuation::new(b).unwrap();
    for y in [-0.2, 0.0, 0.3] {
        let v = val.v(1e-7, y).unwrap();
        assert!(v.value >= 0.0 && v.value < 1e-6, "{v:?}");
    }
    assert!(val.v(0.0, 0.0).is_err());
    assert!(val.v(1.0, f64::NAN).is_err());
}

#[test]
fn marginal_value_is_u_over_x() {
    let b = small_boundary();
    let val = Valuation::new(b).unwrap();
    // one probe in each region
    for (x, y) in [(0.05, 0.0), (1.0, 0.02)] {
        let c = val.marginal_value_check(x, y).unwrap();
        assert!(c.discrepancy < 1e-3, "{x} {y} {c:?}");
    }
    let inside = val.marginal_value_check(1.0, 0.02).unwrap();
    assert!((inside.u_over_x - b.params.kappa).abs() < 1e-6);
}

#[test]
fn unconverged_boundaries_are_refused() {
    let s = SolverSettings {
        max_iter: 1,
        ..small_settings()
    };
    let Err(Error::NonConvergence { last, .. }) = solve_boundary(&reference(), &CostSpec::quadratic(), &s) else {
        panic!("expected the iteration cap to bite");
    };
    assert!(matches!(Valuation::new(&last), Err(Error::Unsupported(_))));
}

#[test]
fn running_cost_switches_at_the_boundary() {
    let b = small_boundary();
    let z = b.z_grid[8];
    let y = b.yhat[8];
    let x = z.exp();
    assert!((eval_h(z, y + 1e-9, b) - x * b.cost.marginal(x)).abs() < 1e-15);
    let k = b.params.net_rate();
    assert!((eval_h(z, y - 1e-9, b) + b.params.kappa * (k - (y - 1e-9)) * x).abs() < 1e-15);
}

#[test]
fn deep_debt_limit_matches_the_one_dimensional_value() {
    let b = small_boundary_linear();
    let val = Valuation::new(b).unwrap();
    for y in [b.y_star - 0.2, b.y_star + 0.05, 0.1] {
        // the approach is O(e^z)
        let g = val.deep_debt_gap(b.z_min() - 12.0, y).unwrap();
        assert!(g.gap < 1e-4, "{y} {g:?}");
        assert!((g.w - eval_w1d(y, b)).abs() < 1e-12);
    }
    assert!(val.deep_debt_gap(b.z_min() + 1.0, 0.0).is_err());
}

#[test]
fn smooth_fit_holds_at_moderate_debt() {
    let b = small_boundary();
    let r = smooth_fit_diagnostic(b, b.z_grid[8]).unwrap();
    assert!(r.dy_at_boundary.abs() < 1e-2, "{r:?}");
    assert!((r.gap_value / b.z_grid[8].exp()).abs() < 1e-4);
    assert!(smooth_fit_diagnostic(b, b.z_max() + 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn u_stays_between_zero_and_the_cap(z in -4.5f64..4.5, dy in -0.6f64..0.6) {
        let b = small_boundary();
        let val = Valuation::new(b).unwrap();
        let u = val.u(z, b.eval_yhat(z) + dy);
        // the coarse grid leaves interpolation error between nodes; the
        // full-grid check with zero flagged violations is in the acceptance suite
        prop_assert!(u.value > 0.0 && u.value < u.upper * (1.0 + 2e-3), "{:?}", u);
        prop_assert!(u.error_bracket < 1e-7 * u.upper);
    }

    #[test]
    fn w_is_between_minus_kappa_and_zero(y in -1.0f64..1.0) {
        let b = small_boundary_linear();
        let w = eval_w1d(y, b);
        prop_assert!((-b.params.kappa - 1e-12..=1e-12).contains(&w));
        if y <= b.y_star {
            prop_assert!(w.abs() < 1e-12);
        }
    }
}
