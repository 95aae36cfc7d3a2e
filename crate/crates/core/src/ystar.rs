//! One-dimensional stopping problem for deep debt: the threshold `y*` and its
//! value `w(y)`.
//!
//! With `D_t = e^{−ρt + (δ−g)t − ∫₀ᵗ Y ds}`, both quantities are built from
//!
//! ```text
//! W(y0, ℓ) = E ∫₀^∞ D_t (C'(0) + κ(δ − g − ρ − Y_t)) 1{Y_t > ℓ} dt.
//! ```
//!
//! The `e^{−∫Y}` factor is a Gaussian tilt: it multiplies by
//! `exp(−E∫Y + Var∫Y/2)` and shifts the mean of `Y_t` by `−Cov(∫Y, Y_t)`.

use crate::error::{Error, Result};
use crate::model::{CostSpec, ModelParams};
use crate::normal;
use crate::quadrature::TimeGrid;

/// Bisection tolerance on `y`.
const Y_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OneDim {
    params: ModelParams,
    cost: CostSpec,
    grid: TimeGrid,
}

impl OneDim {
    /// Time grid sized so the discounted integrand is below `1e−12` of its
    /// scale at the truncation point.
    pub fn new(params: &ModelParams, cost: &CostSpec, n_t: usize) -> Self {
        let s2 = params.sigma * params.sigma / (params.theta * params.theta);
        let margin = params.rho - (params.drift() - params.long_run_inflation() + 0.5 * s2);
        let t_max = 28.0 / margin.max(1e-3);
        OneDim {
            params: *params,
            cost: *cost,
            grid: TimeGrid::geometric(1e-4, t_max, n_t, 8),
        }
    }

    /// `W(y0, ℓ)` as defined in the module docs.
    pub fn threshold_value(&self, y0: f64, level: f64) -> f64 {
        let p = &self.params;
        let kappa = p.kappa;
        let k = p.net_rate();
        let m = self.cost.m;
        self.grid.integrate(|t| {
            let mo = p.ou_moments_unchecked(t, y0);
            let log_d = (p.drift() - p.rho) * t - mo.mean_int_y + 0.5 * mo.var_int_y;
            let mu = mo.mean_y - mo.cov_int_y_y;
            let sd = mo.var_y.sqrt();
            let (above, dens) = if level == f64::NEG_INFINITY {
                (1.0, 0.0)
            } else {
                let a = (level - mu) / sd;
                (normal::sf(a), normal::pdf(a))
            };
            // E[(m + κ(k − Y)) 1{Y > ℓ}] under the tilted law
            let e = (m + kappa * (k - mu)) * above - kappa * sd * dens;
            log_d.exp() * e
        })
    }

    /// Left side of the `y*` equation: `W(y, y)`.
    pub fn objective(&self, y: f64) -> Result<f64> {
        if self.cost.m <= 0.0 {
            return Err(Error::Unsupported(
                "threshold equation needs C'(0) = m > 0; y* = -inf when m = 0".into(),
            ));
        }
        Ok(self.threshold_value(y, y))
    }

    /// `y*`, or `−∞` when `m = 0`.
    pub fn solve(&self) -> Result<f64> {
        if self.cost.m <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        // Above k + m/κ the running integrand is negative wherever the
        // indicator is on, so the objective is negative there.
        let top = self.params.net_rate() + self.cost.m / self.params.kappa;
        let f = |y: f64| self.threshold_value(y, y);
        let mut hi = top;
        let mut step = 0.05;
        let mut lo = top - step;
        let mut f_lo = f(lo);
        let mut tries = 0;
        while f_lo <= 0.0 {
            hi = lo;
            step *= 2.0;
            lo = top - step;
            f_lo = f(lo);
            tries += 1;
            if tries > 12 || !f_lo.is_finite() {
                return Err(Error::Numerical(format!(
                    "no sign change of the y* objective down to y = {lo} (value {f_lo:.3e})"
                )));
            }
        }
        while hi - lo > Y_TOL {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `w(y)` given `y*`. Equal to `−κ` when `m = 0` and to `0` on `y ≤ y*`.
    pub fn w(&self, y: f64, y_star: f64) -> f64 {
        if self.cost.m <= 0.0 {
            return -self.params.kappa;
        }
        if y <= y_star {
            return 0.0;
        }
        self.threshold_value(y, y_star)
    }
}
