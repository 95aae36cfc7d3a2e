//! Invariants of the model primitives over random parameters.

mod common;

use debt_ceiling::model::{validate_params, CostSpec, ModelParams};
use debt_ceiling::normal;
use debt_ceiling::ou::{discount_drift_moment, transition_density, zy_law};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (
        -0.05f64..0.1,
        -0.05f64..0.1,
        -0.05f64..0.05,
        0.05f64..3.0,
        0.001f64..0.3,
        0.001f64..0.5,
        0.1f64..5.0,
    )
        .prop_map(|(delta, g, a, theta, sigma, rho, kappa)| ModelParams {
            delta,
            g,
            a,
            theta,
            sigma,
            rho,
            kappa,
        })
}

fn cost() -> impl Strategy<Value = CostSpec> {
    (0.05f64..5.0, 1.1f64..4.0, 0.0f64..0.3).prop_map(|(c, gamma, m)| CostSpec { c, gamma, m })
}

proptest! {
    #[test]
    fn moments_form_a_covariance(p in params(), t in 1e-4f64..50.0, y0 in -0.3f64..0.3) {
        let m = p.ou_moments(t, y0).unwrap();
        prop_assert!(m.var_y > 0.0 && m.var_int_y > 0.0);
        prop_assert!(m.cov_int_y_y * m.cov_int_y_y <= m.var_y * m.var_int_y * (1.0 + 1e-10));
        // stationary variance is the upper limit of Var Y
        prop_assert!(m.var_y <= p.sigma * p.sigma / (2.0 * p.theta) * (1.0 + 1e-12));
        // the mean relaxes monotonically towards a/θ
        let eq = p.long_run_inflation();
        prop_assert!((m.mean_y - eq).abs() <= (y0 - eq).abs() + 1e-15);
    }

    #[test]
    fn variances_grow_with_time(p in params(), t in 1e-3f64..20.0, dt in 1e-3f64..5.0) {
        let a = p.ou_moments(t, 0.0).unwrap();
        let b = p.ou_moments(t + dt, 0.0).unwrap();
        prop_assert!(b.var_y >= a.var_y);
        prop_assert!(b.var_int_y > a.var_int_y);
    }

    #[test]
    fn exponential_moment_matches_the_law(p in params(), t in 1e-3f64..10.0, y0 in -0.2f64..0.2, q in -3.0f64..3.0) {
        let law = zy_law(&p, t, 0.0, y0).unwrap();
        let want = (q * law.mean_z + 0.5 * q * q * law.var_z).exp();
        let got = discount_drift_moment(&p, t, y0, q).unwrap();
        prop_assert!((got / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_is_positive_and_symmetric_about_the_mean(p in params(), t in 1e-2f64..10.0, dz in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let law = zy_law(&p, t, 0.3, 0.01).unwrap();
        let (sz, sy) = (law.var_z.sqrt(), law.var_y.sqrt());
        let a = transition_density(&law, law.mean_z + dz * sz, law.mean_y + dy * sy).unwrap();
        let b = transition_density(&law, law.mean_z - dz * sz, law.mean_y - dy * sy).unwrap();
        prop_assert!(a.value >= 0.0);
        prop_assert!((a.log - b.log).abs() < 1e-9 * a.log.abs().max(1.0));
        let peak = transition_density(&law, law.mean_z, law.mean_y).unwrap();
        prop_assert!(peak.log >= a.log);
    }

    #[test]
    fn validation_is_monotone_in_rho(p in params(), c in cost(), bump in 0.0f64..1.0) {
        let r = validate_params(&p, &c).unwrap();
        let higher = validate_params(&ModelParams { rho: p.rho + bump, ..p }, &c).unwrap();
        prop_assert_eq!(r.required, higher.required);
        prop_assert!(!r.passed || higher.passed);
        prop_assert_eq!(r.passed, r.violations().is_empty());
        prop_assert_eq!(validate_params(&ModelParams { rho: r.required + 1e-9, ..p }, &c).unwrap().passed, true);
    }

    #[test]
    fn marginal_cost_inverts(c in cost(), x in 1e-4f64..20.0) {
        let level = c.marginal(x);
        prop_assert!(level >= c.m);
        let back = c.marginal_inverse(level);
        prop_assert!((back / x - 1.0).abs() < 1e-9);
        // C is convex and increasing
        prop_assert!(c.marginal(x * 1.1) > level);
        prop_assert!(c.value(x) > 0.0);
    }

    #[test]
    fn normal_tails_are_complementary(x in -30.0f64..30.0, y in -30.0f64..30.0) {
        prop_assert!((normal::cdf(x) + normal::sf(x) - 1.0).abs() < 1e-15);
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        let m = normal::mass(a, b);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((m - (normal::cdf(b) - normal::cdf(a))).abs() < 1e-15);
    }

    #[test]
    fn orthant_respects_frechet_bounds(h in -5.0f64..5.0, k in -5.0f64..5.0, r in -0.999f64..0.999) {
        let p = normal::upper_orthant(h, k, r);
        let (sh, sk) = (normal::sf(h), normal::sf(k));
        prop_assert!(p <= sh.min(sk) + 1e-12);
        prop_assert!(p >= (sh + sk - 1.0).max(0.0) - 1e-12);
        // symmetric in its two arguments
        prop_assert!((p - normal::upper_orthant(k, h, r)).abs() < 1e-12);
    }
}

#[test]
fn reference_model_passes_with_rho0_binding() {
    let r = validate_params(&common::reference(), &CostSpec::quadratic()).unwrap();
    assert!(r.passed);
    assert!((r.required - 0.04).abs() < 1e-12);
    assert_eq!(r.bounds.iter().find(|b| b.value == r.required).unwrap().name, "rho0");
}
