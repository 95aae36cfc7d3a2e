//! Exact Gaussian law of inflation `Y`, its time integral, and the
//! log-debt-ratio drift `Z_t = z + (δ − g)t − ∫₀ᵗ Y ds`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::normal;

/// First and second moments of `(Y_t, ∫₀ᵗ Y ds)` started from `Y_0 = y0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuMoments {
    pub mean_y: f64,
    pub var_y: f64,
    pub mean_int_y: f64,
    pub var_int_y: f64,
    pub cov_int_y_y: f64,
}

/// `1 − e^{−x}`.
#[inline]
fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `∫₀ˣ (1 − e^{−u})² du = x − (1 − e^{−x}) − (1 − e^{−x})²/2`.
///
/// The closed form cancels catastrophically for small `x` (the result is
/// `x³/3 + O(x⁴)`), so the power series is used there.
fn integrated_square(x: f64) -> f64 {
    if x < 0.5 {
        integrated_square_series(x)
    } else {
        let q = one_minus_exp(x);
        x - q - 0.5 * q * q
    }
}

/// `Σ_{n≥2} (−1)ⁿ (2ⁿ − 2)/(n+1)! x^{n+1}`.
fn integrated_square_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow2 = 4.0;
    let mut term_x = x * x * x; // x^{n+1}
    let mut fact = 6.0; // (n+1)!
    let mut sign = 1.0;
    for n in 2..40 {
        let term = sign * (pow2 - 2.0) / fact * term_x;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        pow2 *= 2.0;
        term_x *= x;
        fact *= (n + 2) as f64;
        sign = -sign;
    }
    sum
}

impl ModelParams {
    /// Closed-form moments of the OU process and its integral.
    pub fn ou_moments(&self, t: f64, y0: f64) -> Result<OuMoments> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(self.ou_moments_unchecked(t, y0))
    }

    pub(crate) fn ou_moments_unchecked(&self, t: f64, y0: f64) -> OuMoments {
        let th = self.theta;
        let s2 = self.sigma * self.sigma;
        let eq = self.a / th;
        let q1 = one_minus_exp(th * t);
        OuMoments {
            mean_y: y0 * (1.0 - q1) + eq * q1,
            var_y: s2 / (2.0 * th) * one_minus_exp(2.0 * th * t),
            mean_int_y: eq * t + (y0 - eq) * q1 / th,
            var_int_y: s2 / (th * th * th) * integrated_square(th * t),
            cov_int_y_y: s2 / (2.0 * th * th) * q1 * q1,
        }
    }
}

/// Exact law of `(Z_t, Y_t)` given `(Z_0, Y_0) = (z0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianLaw2D {
    pub t: f64,
    pub mean_z: f64,
    pub mean_y: f64,
    pub var_z: f64,
    pub cov_zy: f64,
    pub var_y: f64,
}

pub fn zy_law(params: &ModelParams, t: f64, z0: f64, y0: f64) -> Result<GaussianLaw2D> {
    let m = params.ou_moments(t, y0)?;
    Ok(GaussianLaw2D {
        t,
        mean_z: z0 + params.drift() * t - m.mean_int_y,
        mean_y: m.mean_y,
        var_z: m.var_int_y,
        cov_zy: -m.cov_int_y_y,
        var_y: m.var_y,
    })
}

impl GaussianLaw2D {
    pub fn determinant(&self) -> f64 {
        self.var_z * self.var_y - self.cov_zy * self.cov_zy
    }

    pub fn correlation(&self) -> f64 {
        self.cov_zy / (self.var_z * self.var_y).sqrt()
    }
}

/// Value and logarithm of the transition density `p_t(z, y; v, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Density {
    pub value: f64,
    pub log: f64,
}

/// Transition density of `(Z, Y)` at terminal point `(v, u)`.
pub fn transition_density(law: &GaussianLaw2D, v: f64, u: f64) -> Result<Density> {
    if !(law.t > 0.0) || !(law.determinant() > 0.0) {
        return Err(Error::DegenerateLaw(law.t));
    }
    let log = normal::bivariate_log_pdf(
        v - law.mean_z,
        u - law.mean_y,
        law.var_z,
        law.cov_zy,
        law.var_y,
    );
    Ok(Density {
        value: log.exp(),
        log,
    })
}

/// `E[e^{p(Z_t − z0)}] = exp{p(δ−g)t − p·E∫Y + p²/2·Var∫Y}`.
pub fn discount_drift_moment(params: &ModelParams, t: f64, y0: f64, p: f64) -> Result<f64> {
    let m = params.ou_moments(t, y0)?;
    Ok((p * (params.drift() * t - m.mean_int_y) + 0.5 * p * p * m.var_int_y).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams {
            delta: 0.0,
            g: 0.0,
            a: 0.0,
            theta: 1.0,
            sigma: 1.0,
            rho: 1.0,
            kappa: 1.0,
        }
    }

    pub(crate) fn reference() -> ModelParams {
        ModelParams {
            delta: 0.03,
            g: 0.02,
            a: 0.01,
            theta: 0.5,
            sigma: 0.05,
            rho: 0.05,
            kappa: 1.0,
        }
    }

    /// Var∫Y = σ² ∫₀ᵗ ((1 − e^{−θ(t−s)})/θ)² ds by Itô isometry; Cov(∫Y, Y) =
    /// σ² ∫₀ᵗ e^{−θ(t−s)}(1 − e^{−θ(t−s)})/θ ds. Both by brute quadrature.
    fn isometry_oracle(p: &ModelParams, t: f64) -> (f64, f64, f64) {
        let n = 200_000;
        let h = t / n as f64;
        let (mut vi, mut c, mut vy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let e = (-p.theta * (t - s)).exp();
            let k = (1.0 - e) / p.theta;
            vi += k * k * h;
            c += e * k * h;
            vy += e * e * h;
        }
        let s2 = p.sigma * p.sigma;
        (s2 * vi, s2 * c, s2 * vy)
    }

    #[test]
    fn zero_time_is_a_point_mass() {
        let m = reference().ou_moments(0.0, 0.7).unwrap();
        assert_eq!(m.mean_y, 0.7);
        assert_eq!(m.mean_int_y, 0.0);
        assert_eq!(m.var_y, 0.0);
        assert_eq!(m.var_int_y, 0.0);
        assert_eq!(m.cov_int_y_y, 0.0);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(reference().ou_moments(-1e-9, 0.0).is_err());
        assert!(zy_law(&reference(), -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn unit_case_matches_isometry() {
        let p = unit();
        let m = p.ou_moments(1.0, 0.0).unwrap();
        let (vi, c, vy) = isometry_oracle(&p, 1.0);
        // frozen from the midpoint oracle: 0.16809116..., 0.19978820..., 0.43233235...
        assert!((m.var_int_y - vi).abs() < 1e-10);
        assert!((m.cov_int_y_y - c).abs() < 1e-10);
        assert!((m.var_y - vy).abs() < 1e-10);
        assert!((m.var_int_y - 0.168_091_2).abs() < 1e-7);
        assert!((m.var_y - 0.432_332_4).abs() < 1e-7);
        let law = zy_law(&p, 1.0, 0.0, 0.0).unwrap();
        assert!((law.cov_zy + 0.199_788_2).abs() < 1e-7);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let a = integrated_square_series(0.5);
        let b = integrated_square(0.5);
        assert!((a - b).abs() < 1e-16, "{}", a - b);
    }

    #[test]
    fn small_time_variance_expansion() {
        let p = reference();
        let t = 1e-3 / p.theta;
        let m = p.ou_moments(t, 0.02).unwrap();
        let ratio = m.var_int_y / (p.sigma * p.sigma * t.powi(3) / 3.0);
        assert!((0.9..=1.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn long_time_limits() {
        let p = reference();
        let m = p.ou_moments(200.0, 3.0).unwrap();
        assert!((m.mean_y - p.a / p.theta).abs() < 1e-12);
        assert!((m.var_y - p.sigma * p.sigma / (2.0 * p.theta)).abs() < 1e-15);
    }

    #[test]
    fn density_is_degenerate_at_zero() {
        let law = zy_law(&reference(), 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            transition_density(&law, 0.0, 0.0),
            Err(Error::DegenerateLaw(_))
        ));
    }

    #[test]
    fn density_mode_at_mean() {
        let law = zy_law(&reference(), 2.0, 0.1, 0.05).unwrap();
        let at = |v, u| transition_density(&law, v, u).unwrap().value;
        let peak = at(law.mean_z, law.mean_y);
        for (dv, du) in [(1e-3, 0.0), (0.0, 1e-3), (-1e-3, 1e-3), (1e-3, 1e-3)] {
            assert!(at(law.mean_z + dv, law.mean_y + du) < peak);
        }
    }

    #[test]
    fn discount_moment_trivial_cases() {
        let p = reference();
        assert_eq!(discount_drift_moment(&p, 3.0, 0.1, 0.0).unwrap(), 1.0);
        assert_eq!(discount_drift_moment(&p, 0.0, 0.1, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn discounted_exponential_moment_vanishes() {
        let p = reference();
        let vals: Vec<f64> = (0..=4000)
            .map(|i| {
                let t = i as f64 * 0.25;
                (-p.rho * t).exp() * discount_drift_moment(&p, t, 0.02, 1.0).unwrap()
            })
            .collect();
        let first_tiny = vals.iter().position(|&v| v < 1e-10).expect("decays");
        assert!(first_tiny > 0);
        // monotone on the tail
        assert!(vals[first_tiny / 2..].windows(2).all(|w| w[1] <= w[0]));
    }
}
