//! Boundary solver on a reduced grid.

mod common;

use common::{reference, small_boundary, small_boundary_linear, small_settings};
use debt_ceiling::boundary::{
    boundary_residual, solve_boundary, solve_boundary_from, solve_ystar, theta_bound, Initial, Region,
    SolverSettings,
};
use debt_ceiling::cache;
use debt_ceiling::model::{CostSpec, ModelParams};
use debt_ceiling::Error;
use proptest::prelude::*;

#[test]
fn small_solve_is_monotone_below_theta_and_certified() {
    let b = small_boundary();
    assert!(b.last_change < b.settings.picard_tol);
    assert!(b.residual_max < 1e-4, "{}", b.residual_max);
    assert!(b.yhat.windows(2).all(|w| w[1] >= w[0]));
    assert!(b.yhat.last().unwrap() > &b.yhat[0]);
    for (i, &z) in b.z_grid.iter().enumerate() {
        assert!(b.yhat[i] <= theta_bound(&b.params, &b.cost, z) + 1e-12);
        assert!((b.residual[i] / z.exp()).abs() <= b.residual_max * (1.0 + 1e-12));
    }
    assert_eq!(b.y_star, f64::NEG_INFINITY);
}

#[test]
fn linear_cost_boundary_sits_above_ystar() {
    let b = small_boundary_linear();
    let ys = solve_ystar(&b.params, &b.cost, &b.settings).unwrap();
    assert_eq!(ys, b.y_star);
    assert!(ys.is_finite() && ys < b.params.net_rate());
    assert!(b.yhat.iter().all(|&y| y >= ys));
    // left extension approaches y* from above
    assert!(b.eval_yhat(b.z_min() - 5.0) >= ys);
    assert!(b.eval_yhat(b.z_min() - 5.0) <= b.yhat[0]);
    assert_eq!(b.log_ceiling(ys - 1e-9), f64::NEG_INFINITY);
    assert_eq!(b.b_of_y(ys - 0.1), 0.0);
}

#[test]
fn residual_probe_matches_the_certificate_at_nodes() {
    let b = small_boundary();
    for i in [3, 10, 17] {
        let r = boundary_residual(b, b.z_grid[i]).unwrap();
        assert!((r - b.residual[i]).abs() < 1e-12 * b.z_grid[i].exp().max(1.0), "{r} {}", b.residual[i]);
    }
    assert!(boundary_residual(b, b.z_max() + 1.0).is_err());
}

#[test]
fn rigid_shifts_break_the_equation() {
    // the residual is zero only on the boundary itself
    let b = small_boundary();
    let mut up = b.clone();
    for y in &mut up.yhat {
        *y += 0.05;
    }
    let mut down = b.clone();
    for y in &mut down.yhat {
        *y -= 0.05;
    }
    let z = b.z_grid[10];
    let r0 = boundary_residual(b, z).unwrap().abs();
    assert!(boundary_residual(&up, z).unwrap().abs() > 10.0 * r0);
    assert!(boundary_residual(&down, z).unwrap().abs() > 10.0 * r0);
}

#[test]
fn two_initialisations_agree() {
    let p = reference();
    let c = CostSpec::quadratic();
    let s = small_settings();
    let a = small_boundary();
    let b = solve_boundary_from(&p, &c, &s, Initial::Constant(-0.5)).unwrap();
    let gap = a.yhat.iter().zip(&b.yhat).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 10.0 * s.picard_tol, "sup gap {gap}");
}

#[test]
fn iteration_cap_keeps_the_last_iterate() {
    let s = SolverSettings {
        max_iter: 2,
        ..small_settings()
    };
    match solve_boundary(&reference(), &CostSpec::quadratic(), &s) {
        Err(Error::NonConvergence {
            iterations, last, ..
        }) => {
            assert_eq!(iterations, 2);
            assert_eq!(last.yhat.len(), s.n_z);
            assert!(last.yhat.windows(2).all(|w| w[1] >= w[0]));
        }
        other => panic!("expected NonConvergence, got {other:?}"),
    }
}

#[test]
fn bad_inputs_are_rejected_before_solving() {
    let low_rho = ModelParams {
        rho: 0.01,
        ..reference()
    };
    let e = solve_boundary(&low_rho, &CostSpec::quadratic(), &small_settings()).unwrap_err();
    assert!(e.to_string().contains("rho0"), "{e}");
    let s = SolverSettings {
        z_min: 1.0,
        z_max: -1.0,
        ..small_settings()
    };
    assert!(solve_boundary(&reference(), &CostSpec::quadratic(), &s).is_err());
    let wrong_len = Initial::Values(vec![0.0; 3]);
    assert!(solve_boundary_from(&reference(), &CostSpec::quadratic(), &small_settings(), wrong_len).is_err());
}

#[test]
fn cache_round_trip_and_digest_guard() {
    let b = small_boundary();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    cache::save(&path, b).unwrap();
    let back = cache::load(&path).unwrap();
    assert_eq!(back.yhat, b.yhat);
    assert_eq!(back.y_star, b.y_star);
    assert_eq!(back.eval_yhat(0.123), b.eval_yhat(0.123));
    let hit = cache::load_matching(&path, &b.params, &b.cost, &b.settings).unwrap();
    assert!(hit.is_some());
    let other = SolverSettings { n_t: 65, ..b.settings };
    assert!(cache::load_matching(&path, &b.params, &b.cost, &other).unwrap().is_none());
    // a tampered record is refused
    let text = std::fs::read_to_string(&path).unwrap().replacen("\"rho\": 0.05", "\"rho\": 0.06", 1);
    std::fs::write(&path, text).unwrap();
    assert!(matches!(cache::load(&path), Err(Error::Cache(_))));
    assert!(cache::load_matching(&dir.path().join("none.json"), &b.params, &b.cost, &b.settings)
        .unwrap()
        .is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ceiling_is_nondecreasing(y1 in -1.0f64..1.0, y2 in -1.0f64..1.0) {
        for b in [small_boundary(), small_boundary_linear()] {
            let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
            prop_assert!(b.b_of_y(lo) <= b.b_of_y(hi));
            prop_assert!(b.b_of_y(lo) >= 0.0);
        }
    }

    #[test]
    fn yhat_is_nondecreasing_everywhere(z1 in -12.0f64..12.0, z2 in -12.0f64..12.0) {
        for b in [small_boundary(), small_boundary_linear()] {
            let (lo, hi) = if z1 < z2 { (z1, z2) } else { (z2, z1) };
            prop_assert!(b.eval_yhat(lo) <= b.eval_yhat(hi) + 1e-15);
            prop_assert!(b.eval_yhat(lo) <= theta_bound(&b.params, &b.cost, lo) + 1e-12);
        }
    }

    #[test]
    fn ceiling_inverts_yhat(z in -4.5f64..4.5) {
        let b = small_boundary();
        let y = b.eval_yhat(z);
        prop_assert!((b.log_ceiling(y + 1e-12) - z).abs() < 1e-6);
        prop_assert_eq!(b.ceiling_region(y + 1e-12), Region::Interior);
        prop_assert_eq!(b.region(z), Region::Interior);
    }
}
