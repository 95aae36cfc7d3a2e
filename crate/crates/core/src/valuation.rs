//! Stopping value `u`, control value `v`, the deep-debt value `w`, and
//! diagnostics at the free boundary.
//!
//! `u` comes from the representation `u(z, y) = E∫e^{−ρt} H_ŷ(Z_t, Y_t) dt`,
//! evaluated in the reduced form `κe^z + Φ(z, y; ŷ)` with the exact segment
//! kernel and adaptive time integration. `v(x, y) = ∫_{−∞}^{ln x} u(q, y) dq`.

use serde::Serialize;

use crate::boundary::Boundary;
use crate::error::{invalid, Error, Result};
use crate::kernel::{Curve, Kernel};
use crate::quadrature::LegendreRule;
use crate::ystar::OneDim;

/// Boundaries with a larger relative certificate residual are refused.
pub const MAX_RESIDUAL: f64 = 1e-4;

/// Time-integration error target for `u`, relative to `κe^z`.
const TIME_REL_TOL: f64 = 1e-8;

/// Same for the integrand of `v`.
const V_TIME_REL_TOL: f64 = 1e-7;

/// Integrand calls allowed per `u` evaluation.
const MAX_EVALS: usize = 20_000;

/// Relative size of the neglected lower tail of the `v` integral.
const TAIL_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundViolation {
    /// `u − κe^z`, when positive beyond tolerance.
    AboveUpper(f64),
    /// `u`, when negative beyond tolerance.
    Negative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UValue {
    pub value: f64,
    /// Time-quadrature error estimate.
    pub error_bracket: f64,
    /// `κe^z`.
    pub upper: f64,
    pub violation: Option<BoundViolation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VValue {
    pub value: f64,
    /// Half-width of the error bracket: lower-tail bound plus quadrature
    /// error estimate.
    pub error_bracket: f64,
    /// Where the `q`-integral was cut off.
    pub q_cut: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub fd_derivative: f64,
    pub u_over_x: f64,
    /// `|fd − u/x| / |u/x|`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothFitReport {
    pub z: f64,
    /// Step used for the `y` difference.
    pub step: f64,
    /// `u(z, ŷ(z)) − κe^z`.
    pub gap_value: f64,
    /// `(u(z, ŷ + h) − u(z, ŷ))/h`.
    pub dy_at_boundary: f64,
    /// Richardson combination of the one-sided differences at `h` and `h/2`.
    pub dy_richardson: f64,
    /// Central difference `u_z(z, ŷ(z)) − κe^z`.
    pub dz_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeepDebtGap {
    pub z: f64,
    /// `e^{−z}(u(z, y) − κe^z)`.
    pub scaled_gap: f64,
    pub w: f64,
    /// `|scaled_gap − w|`.
    pub gap: f64,
}

/// `H_ŷ(z, y)`: `e^z C'(e^z)` above the boundary and `κ(y − δ + g + ρ)e^z` on
/// or below it.
pub fn eval_h(z: f64, y: f64, boundary: &Boundary) -> f64 {
    let x = z.exp();
    if y > boundary.eval_yhat(z) {
        x * boundary.cost.marginal(x)
    } else {
        -boundary.params.kappa * (boundary.params.net_rate() - y) * x
    }
}

/// Value evaluator over one solved boundary. Building it once and reusing it
/// avoids recomputing the time grid for every point.
pub struct Valuation<'a> {
    boundary: &'a Boundary,
    kernel: Kernel,
    curve: Curve,
    rule: LegendreRule,
    coarse: LegendreRule,
    onedim: OneDim,
}

impl<'a> Valuation<'a> {
    pub fn new(boundary: &'a Boundary) -> Result<Self> {
        let s = &boundary.settings;
        if !(boundary.last_change < s.picard_tol) || !(boundary.residual_max <= MAX_RESIDUAL) {
            return Err(Error::Unsupported(format!(
                "boundary is not converged (last change {:.3e}, residual {:.3e}); re-solve before evaluating values",
                boundary.last_change, boundary.residual_max
            )));
        }
        let grid = s.time_grid(&boundary.params, &boundary.cost, 1);
        Ok(Valuation {
            boundary,
            kernel: Kernel::new(&boundary.params, &boundary.cost, &grid),
            curve: boundary.curve(),
            rule: LegendreRule::new(8),
            coarse: LegendreRule::new(4),
            onedim: OneDim::new(&boundary.params, &boundary.cost, s.n_t.max(256)),
        })
    }

    pub fn boundary(&self) -> &Boundary {
        self.boundary
    }

    /// `u(z, y) − κe^z`.
    pub fn excess(&self, z: f64, y: f64) -> f64 {
        self.excess_with_error(z, y).0
    }

    /// `u(z, y) − κe^z` and the time-quadrature error estimate.
    pub fn excess_with_error(&self, z: f64, y: f64) -> (f64, f64) {
        let scale = self.boundary.params.kappa * z.exp();
        self.kernel.phi_adaptive(z, y, &self.curve, TIME_REL_TOL * scale, 1, MAX_EVALS)
    }

    /// Cheaper `u − κe^z` for the `v` integrand.
    fn excess_coarse(&self, z: f64, y: f64) -> f64 {
        let scale = self.boundary.params.kappa * z.exp();
        self.kernel.phi_adaptive(z, y, &self.curve, V_TIME_REL_TOL * scale, 0, MAX_EVALS).0
    }

    pub fn u(&self, z: f64, y: f64) -> UValue {
        let upper = self.boundary.params.kappa * z.exp();
        let (excess, quad_err) = self.excess_with_error(z, y);
        let value = upper + excess;
        // the boundary only satisfies its equation to within its residual
        let b = self.boundary;
        let tol = 10.0 * b.residual_max.max(b.settings.picard_tol) * upper + quad_err;
        let violation = if value > upper + tol {
            Some(BoundViolation::AboveUpper(value - upper))
        } else if value < -tol {
            Some(BoundViolation::Negative(value))
        } else {
            None
        };
        UValue {
            value,
            error_bracket: quad_err,
            upper,
            violation,
        }
    }

    pub fn w(&self, y: f64) -> f64 {
        self.onedim.w(y, self.boundary.y_star)
    }

    /// `∫_{lo}^{hi} (u − κe^q) dq` with 8-point panels and a 4-point
    /// companion for the error estimate.
    fn excess_integral(&self, y: f64, lo: f64, hi: f64) -> (f64, f64) {
        let mut edges = vec![hi];
        let fine_from = self.boundary.z_min() - 2.0;
        let mut q = hi;
        while q > lo {
            let width = if q > fine_from { 1.0 } else { 3.0 };
            q = (q - width).max(lo);
            edges.push(q);
        }
        let mut total = 0.0;
        let mut err = 0.0;
        for w in edges.windows(2) {
            let (b, a) = (w[0], w[1]);
            let fine = self.rule.integrate(a, b, |q| self.excess_coarse(q, y));
            let rough = self.coarse.integrate(a, b, |q| self.excess_coarse(q, y));
            total += fine;
            err += (fine - rough).abs();
        }
        (total, err)
    }

    /// `v(x, y)` with its error bracket.
    pub fn v(&self, x: f64, y: f64) -> Result<VValue> {
        if !(x > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(invalid(format!("v needs finite x > 0 and finite y, got ({x}, {y})")));
        }
        let kappa = self.boundary.params.kappa;
        let lnx = x.ln();
        // on q ≥ ln b(y) the point is in the stopping region and u = κe^q
        let q_hi = lnx.min(self.boundary.log_ceiling(y));
        if q_hi == f64::NEG_INFINITY {
            return Ok(VValue {
                value: kappa * x,
                error_bracket: 0.0,
                q_cut: f64::NEG_INFINITY,
            });
        }
        // e^{−q}(u − κe^q) → w(y) as q → −∞
        let w = self.w(y).clamp(-kappa, 0.0);
        let run = |q_cut: f64| {
            let q_cut = q_cut.min(q_hi);
            let (body, quad_err) = self.excess_integral(y, q_cut, q_hi);
            let tail = w * q_cut.exp();
            let value = kappa * x + body + tail;
            (value, quad_err + kappa * q_cut.exp(), q_cut)
        };
        let mut q_cut = lnx + TAIL_REL.ln();
        let (mut value, mut bracket, mut used) = run(q_cut);
        if kappa * q_cut.exp() > TAIL_REL * value && value > 0.0 {
            q_cut = (TAIL_REL * value / kappa).ln();
            (value, bracket, used) = run(q_cut);
        }
        Ok(VValue {
            value,
            error_bracket: bracket,
            q_cut: used,
        })
    }

    /// Central difference of `v` in `x` against `u(ln x, y)/x`.
    pub fn marginal_value_check(&self, x: f64, y: f64) -> Result<MarginalCheck> {
        let h = 1e-4 * x.max(1.0).min(x * 0.5 / 1e-4);
        let vp = self.v(x + h, y)?.value;
        let vm = self.v(x - h, y)?.value;
        let fd = (vp - vm) / (2.0 * h);
        let u_over_x = self.u(x.ln(), y).value / x;
        Ok(MarginalCheck {
            fd_derivative: fd,
            u_over_x,
            discrepancy: (fd - u_over_x).abs() / u_over_x.abs().max(f64::MIN_POSITIVE),
        })
    }

    pub fn deep_debt_gap(&self, z_probe: f64, y: f64) -> Result<DeepDebtGap> {
        if !(z_probe <= self.boundary.z_min()) {
            return Err(invalid(format!(
                "deep-debt probe z = {z_probe} must be <= z_min = {}",
                self.boundary.z_min()
            )));
        }
        let scaled_gap = self.excess(z_probe, y) * (-z_probe).exp();
        let w = self.w(y);
        Ok(DeepDebtGap {
            z: z_probe,
            scaled_gap,
            w,
            gap: (scaled_gap - w).abs(),
        })
    }

    /// Smooth-fit quantities at `(z, ŷ(z))` with `y`-step `h`.
    pub fn smooth_fit(&self, z: f64, h: f64) -> Result<SmoothFitReport> {
        let b = self.boundary;
        if !(z > b.z_min() && z < b.z_max()) || !(h > 0.0) {
            return Err(invalid(format!("smooth-fit probe needs an interior z and h > 0, got z = {z}, h = {h}")));
        }
        let kappa = b.params.kappa;
        let yh = b.eval_yhat(z);
        let e0 = self.excess(z, yh);
        let d = |step: f64| (self.excess(z, yh + step) - e0) / step;
        let d_full = d(h);
        let d_half = d(0.5 * h);
        let hz = 1e-4 * z.abs().max(1.0);
        let up = self.u(z + hz, yh).value;
        let dn = self.u(z - hz, yh).value;
        let dz_gap = (up - dn) / (2.0 * hz) - kappa * z.exp();
        Ok(SmoothFitReport {
            z,
            step: h,
            gap_value: e0,
            dy_at_boundary: d_full,
            dy_richardson: 2.0 * d_half - d_full,
            dz_gap,
        })
    }
}

/// `u(z, y)`; see [`Valuation::u`].
pub fn eval_u(z: f64, y: f64, boundary: &Boundary) -> Result<UValue> {
    Ok(Valuation::new(boundary)?.u(z, y))
}

/// `v(x, y)`; see [`Valuation::v`].
pub fn eval_v(x: f64, y: f64, boundary: &Boundary) -> Result<VValue> {
    Valuation::new(boundary)?.v(x, y)
}

pub fn marginal_value_check(x: f64, y: f64, boundary: &Boundary) -> Result<MarginalCheck> {
    Valuation::new(boundary)?.marginal_value_check(x, y)
}

/// `w(y)` from the boundary's model and threshold.
pub fn eval_w1d(y: f64, boundary: &Boundary) -> f64 {
    OneDim::new(&boundary.params, &boundary.cost, boundary.settings.n_t.max(256)).w(y, boundary.y_star)
}

pub fn deep_debt_limit_check(z_probe: f64, y: f64, boundary: &Boundary) -> Result<DeepDebtGap> {
    Valuation::new(boundary)?.deep_debt_gap(z_probe, y)
}

/// Smooth-fit report with the default step `1e−4·max(1, |ŷ(z)|)`.
pub fn smooth_fit_diagnostic(boundary: &Boundary, z: f64) -> Result<SmoothFitReport> {
    let h = 1e-4 * boundary.eval_yhat(z).abs().max(1.0);
    Valuation::new(boundary)?.smooth_fit(z, h)
}
