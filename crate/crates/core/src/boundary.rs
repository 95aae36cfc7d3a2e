//! The free boundary `ŷ(z)` of the auxiliary stopping problem and the debt
//! ceiling `b(y)` derived from it.
//!
//! The boundary is found from the reduced form of its integral equation:
//! since `E∫e^{−ρt} κ(δ−g−ρ−Y) e^Z dt = −κe^z`, the equation
//! `κe^z = E∫e^{−ρt} H_ŷ(Z, Y) dt` started on the curve is equivalent to
//!
//! ```text
//! Φ(z, ŷ(z); ŷ) = E ∫₀^∞ e^{−ρt} G(Z_t, Y_t) 1{Y_t > ŷ(Z_t)} dt = 0,
//! G(z, y) = e^z (C'(e^z) + κ(δ − g − ρ − y)).
//! ```
//!
//! Each sweep solves, for every node `z_i` independently, the scalar equation
//! `Φ(z_i, ξ; f + (ξ − f_i)) = 0`: the previous iterate `f` is shifted rigidly
//! so that it passes through the start point. Moving a single knot instead
//! gives an equation whose slope vanishes at the root (the start point sits
//! on the curve where the integrand has smooth fit), and the sweeps diverge.
//! The shifted map is decreasing in `ξ`, so the root is bracketed by stepping
//! away from the previous value. The sweep result is damped, projected onto
//! nondecreasing sequences and clamped into `[y*, ϑ]`; at a fixed point the
//! shift is zero and the original equation holds.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{Curve, Kernel};
use crate::model::{validate_params, CostSpec, ModelParams};
use crate::quadrature::{LegendreRule, TimeGrid};
use crate::root::brent;
use crate::ystar::OneDim;

/// Default grid: debt ratios from 1% to 10000% of GDP.
pub const DEFAULT_Z_MIN: f64 = -4.605_170_185_988_091;
pub const DEFAULT_Z_MAX: f64 = 4.605_170_185_988_091;

/// Linear pieces per grid interval. Between nodes the boundary follows the
/// monotone cubic through the nodes, sampled at this many points.
pub const SUBDIVISIONS: usize = 3;

/// Knots of the right-hand extension beyond `z_max`.
const RIGHT_EXT_STEPS: usize = 24;
const RIGHT_EXT_SPAN: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
    /// Truncation of the time integrals; `None` picks it from the growth
    /// margin so that the discounted integrand has decayed by `1e−10`.
    pub t_max: Option<f64>,
    /// Time-quadrature nodes (rounded up to whole 8-point panels).
    pub n_t: usize,
    /// Gauss–Legendre order per panel for the spatial quadrature of the
    /// residual certificate.
    pub n_v: usize,
    pub picard_tol: f64,
    pub picard_damping: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            z_min: DEFAULT_Z_MIN,
            z_max: DEFAULT_Z_MAX,
            n_z: 81,
            t_max: None,
            n_t: 128,
            n_v: 12,
            picard_tol: 1e-6,
            picard_damping: 1.0,
            max_iter: 200,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_z < 2 {
            return Err(invalid(format!("n_z must be >= 2, got {}", self.n_z)));
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_min < self.z_max) {
            return Err(invalid("need finite z_min < z_max"));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!("t_max must be finite and > 0, got {t}")));
            }
        }
        if self.n_t < 8 || self.n_v < 2 {
            return Err(invalid("n_t must be >= 8 and n_v >= 2"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(invalid("picard_tol must be > 0"));
        }
        if !(self.picard_damping > 0.0 && self.picard_damping <= 1.0) {
            return Err(invalid("picard_damping must lie in (0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be >= 1"));
        }
        Ok(())
    }

    pub fn z_grid(&self) -> Vec<f64> {
        let h = (self.z_max - self.z_min) / (self.n_z - 1) as f64;
        (0..self.n_z)
            .map(|i| {
                if i + 1 == self.n_z {
                    self.z_max
                } else {
                    self.z_min + h * i as f64
                }
            })
            .collect()
    }

    /// Horizon at which `e^{−ρt}E[e^{pZ_t}]` has decayed below `1e−10` for
    /// both exponents `p ∈ {1, γ}` used by the integrands.
    pub fn resolved_t_max(&self, params: &ModelParams, cost: &CostSpec) -> f64 {
        self.t_max.unwrap_or_else(|| {
            let margin = params.growth_margin(1.0).min(params.growth_margin(cost.gamma));
            (1e10f64).ln() / margin.max(1e-4)
        })
    }

    pub(crate) fn time_grid(&self, params: &ModelParams, cost: &CostSpec, refine: usize) -> TimeGrid {
        let t_max = self.resolved_t_max(params, cost);
        TimeGrid::geometric(1e-4, t_max, self.n_t * refine, 8)
    }
}

/// Where a point sits relative to the solved grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Interior,
    LeftExtension,
    RightExtension,
}

/// Solved free boundary on a `z`-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub params: ModelParams,
    pub cost: CostSpec,
    pub settings: SolverSettings,
    pub z_grid: Vec<f64>,
    pub yhat: Vec<f64>,
    /// Left asymptote; `−∞` when `C'(0) = 0`.
    #[serde(with = "neg_inf_as_null")]
    pub y_star: f64,
    pub theta_curve: Vec<f64>,
    pub params_digest: String,
    /// Signed certificate residual `u(z_i, ŷ_i) − κe^{z_i}` at every node.
    pub residual: Vec<f64>,
    /// `max_i |residual_i| / (κe^{z_i})`.
    pub residual_max: f64,
    pub iterations: usize,
    pub last_change: f64,
    /// Refined interior knots, built on first use.
    #[serde(skip)]
    refined: OnceLock<(Vec<f64>, Vec<f64>)>,
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// `ϑ(z) = C'(e^z)/κ + δ − g − ρ`.
pub fn theta_bound(params: &ModelParams, cost: &CostSpec, z: f64) -> f64 {
    cost.marginal(z.exp()) / params.kappa + params.net_rate()
}

/// `G(z, y) = e^z (C'(e^z) + κ(δ − g − ρ − y))`.
pub fn stopping_integrand(params: &ModelParams, cost: &CostSpec, z: f64, y: f64) -> f64 {
    let x = z.exp();
    x * (cost.marginal(x) + params.kappa * (params.net_rate() - y))
}

/// Fritsch–Carlson slopes of the monotone cubic through `(z, y)`.
fn monotone_slopes(z: &[f64], y: &[f64]) -> Vec<f64> {
    let n = z.len();
    let h: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![del[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && v.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            v
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

/// Grid nodes plus `SUBDIVISIONS − 1` points per interval taken from the
/// monotone cubic through the nodes.
pub(crate) fn refined_nodes(z: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = z.len();
    let d = monotone_slopes(z, y);
    let mut zs = Vec::with_capacity((n - 1) * SUBDIVISIONS + 1);
    let mut ys = Vec::with_capacity(zs.capacity());
    for i in 0..n - 1 {
        let h = z[i + 1] - z[i];
        zs.push(z[i]);
        ys.push(y[i]);
        for j in 1..SUBDIVISIONS {
            let t = j as f64 / SUBDIVISIONS as f64;
            let (t2, t3) = (t * t, t * t * t);
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y[i]
                + (t3 - 2.0 * t2 + t) * h * d[i]
                + (3.0 * t2 - 2.0 * t3) * y[i + 1]
                + (t3 - t2) * h * d[i + 1];
            zs.push(z[i] + t * h);
            ys.push(v.clamp(y[i], y[i + 1]));
        }
    }
    zs.push(z[n - 1]);
    ys.push(y[n - 1]);
    (zs, ys)
}

/// Piecewise-linear curve through the refined nodes, with the boundary's
/// extensions materialised as extra knots.
pub(crate) fn extended_curve(
    params: &ModelParams,
    cost: &CostSpec,
    z: &[f64],
    y: &[f64],
    y_star: f64,
) -> Curve {
    let n = z.len();
    let (rz, ry) = refined_nodes(z, y);
    let mut zs = Vec::with_capacity(rz.len() + RIGHT_EXT_STEPS + 3);
    let mut ys = Vec::with_capacity(zs.capacity());
    let slope0 = (ry[1] - ry[0]) / (rz[1] - rz[0]);
    if y_star.is_finite() {
        if slope0 > 0.0 && ry[0] > y_star {
            let zc = rz[0] - (ry[0] - y_star) / slope0;
            zs.push(zc - 1.0);
            ys.push(y_star);
            zs.push(zc);
            ys.push(y_star);
        } else {
            zs.push(rz[0] - 1.0);
            ys.push(ry[0]);
        }
    }
    zs.extend_from_slice(&rz);
    ys.extend_from_slice(&ry);
    let zm = z[n - 1];
    let th_m = theta_bound(params, cost, zm);
    let h = (z[n - 1] - z[0]) / (n - 1) as f64;
    let mut step = h;
    let mut zc = zm;
    for _ in 0..RIGHT_EXT_STEPS {
        zc += step;
        if zc > zm + RIGHT_EXT_SPAN {
            break;
        }
        let v = y[n - 1] + theta_bound(params, cost, zc) - th_m;
        if !v.is_finite() {
            break;
        }
        zs.push(zc);
        ys.push(v);
        step *= 1.5;
    }
    Curve::new(zs, ys)
}

/// Pool-adjacent-violators projection onto nondecreasing sequences.
pub(crate) fn isotonic(y: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y.iter() {
        let mut sum = v;
        let mut cnt = 1usize;
        while let Some(&(s, c)) = blocks.last() {
            if s / c as f64 > sum / cnt as f64 {
                sum += s;
                cnt += c;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, cnt));
    }
    let mut i = 0;
    for (s, c) in blocks {
        let m = s / c as f64;
        for v in &mut y[i..i + c] {
            *v = m;
        }
        i += c;
    }
}

/// Starting curve for the sweeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// `f⁰ = ϑ`.
    Theta,
    /// Constant curve at the given level, projected into the admissible class.
    Constant(f64),
    /// Explicit node values (e.g. a previous solve on the same grid).
    Values(Vec<f64>),
}

/// Working state shared by the solver and the evaluators.
pub(crate) struct Solver<'a> {
    pub params: &'a ModelParams,
    pub cost: &'a CostSpec,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub y_star: f64,
    pub kernel: Kernel,
}

impl<'a> Solver<'a> {
    fn new(params: &'a ModelParams, cost: &'a CostSpec, settings: &SolverSettings, y_star: f64) -> Self {
        let z = settings.z_grid();
        let theta = z.iter().map(|&z| theta_bound(params, cost, z)).collect();
        let grid = settings.time_grid(params, cost, 1);
        Solver {
            params,
            cost,
            z,
            theta,
            y_star,
            kernel: Kernel::new(params, cost, &grid),
        }
    }

    fn project(&self, y: &mut [f64]) {
        isotonic(y);
        for (v, &t) in y.iter_mut().zip(&self.theta) {
            if *v > t {
                *v = t;
            }
            if *v < self.y_star {
                *v = self.y_star;
            }
        }
    }

    /// `Φ(z_i, ξ; f with knot i at ξ)`.
    fn node_equation(&self, f: &[f64], i: usize, xi: f64) -> f64 {
        let shift = xi - f[i];
        let y: Vec<f64> = f.iter().map(|v| v + shift).collect();
        let curve = extended_curve(self.params, self.cost, &self.z, &y, self.y_star);
        self.kernel.phi(self.z[i], xi, &curve)
    }

    fn solve_node(&self, f: &[f64], i: usize, hint: f64) -> Result<f64> {
        let zi = self.z[i];
        let scale = self.params.kappa * zi.exp();
        let g = |xi: f64| self.node_equation(f, i, xi) / scale;
        let top = self.theta[i];
        let bottom = self.y_star;
        let x0 = f[i].min(top);
        let g0 = g(x0);
        if g0 == 0.0 {
            return Ok(x0);
        }
        let mut step = hint.clamp(1e-3, 0.25);
        let (mut a, mut ga) = (x0, g0);
        let mut walks = 0;
        // walk towards the sign change; g is decreasing in ξ
        let (b, gb) = loop {
            let up = ga > 0.0;
            let next = if up { (a + step).min(top) } else { (a - step).max(bottom) };
            let gn = g(next);
            if gn == 0.0 {
                return Ok(next);
            }
            if (gn > 0.0) != up {
                break (next, gn);
            }
            if next == top || next == bottom {
                return Ok(next);
            }
            a = next;
            ga = gn;
            step *= 2.0;
            walks += 1;
            if walks > 80 {
                return Err(Error::Numerical(format!(
                    "could not bracket the node equation at z = {zi}"
                )));
            }
        };
        brent(g, a, ga, b, gb, 1e-11, 1e-15, 100)
            .ok_or_else(|| Error::Numerical(format!("node equation at z = {zi} lost its bracket")))
    }

    fn sweep(&self, f: &[f64], hints: &[f64]) -> Result<Vec<f64>> {
        (0..f.len())
            .into_par_iter()
            .map(|i| self.solve_node(f, i, hints[i]))
            .collect()
    }
}

/// Threshold `y*` for the given model, or `−∞` when `C'(0) = 0`.
pub fn solve_ystar(params: &ModelParams, cost: &CostSpec, settings: &SolverSettings) -> Result<f64> {
    OneDim::new(params, cost, settings.n_t.max(256)).solve()
}

/// Solves for the free boundary from `f⁰ = ϑ`.
pub fn solve_boundary(params: &ModelParams, cost: &CostSpec, settings: &SolverSettings) -> Result<Boundary> {
    solve_boundary_from(params, cost, settings, Initial::Theta)
}

pub fn solve_boundary_from(
    params: &ModelParams,
    cost: &CostSpec,
    settings: &SolverSettings,
    init: Initial,
) -> Result<Boundary> {
    let report = validate_params(params, cost)?;
    if !report.passed {
        return Err(invalid(format!("parameters fail the discount-rate condition:\n{report}")));
    }
    settings.validate()?;
    let y_star = solve_ystar(params, cost, settings)?;
    let solver = Solver::new(params, cost, settings, y_star);
    let n = solver.z.len();
    let mut f: Vec<f64> = match init {
        Initial::Theta => solver.theta.clone(),
        Initial::Constant(c) => vec![c; n],
        Initial::Values(v) => {
            if v.len() != n {
                return Err(invalid(format!("initial curve has {} values, grid has {n}", v.len())));
            }
            v
        }
    };
    solver.project(&mut f);
    let mut hints = vec![0.05; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        let roots = solver.sweep(&f, &hints)?;
        let mut next: Vec<f64> = f
            .iter()
            .zip(&roots)
            .map(|(&old, &r)| old + settings.picard_damping * (r - old))
            .collect();
        solver.project(&mut next);
        change = next
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        for (h, (a, b)) in hints.iter_mut().zip(next.iter().zip(&f)) {
            *h = 2.0 * (a - b).abs();
        }
        f = next;
        if change < settings.picard_tol {
            break;
        }
    }
    let mut boundary = Boundary {
        params: *params,
        cost: *cost,
        settings: *settings,
        z_grid: solver.z.clone(),
        yhat: f,
        y_star,
        theta_curve: solver.theta.clone(),
        params_digest: crate::cache::params_digest(params, cost, settings),
        residual: Vec::new(),
        residual_max: f64::NAN,
        iterations,
        last_change: change,
        refined: OnceLock::new(),
    };
    boundary.certify();
    if !(change < settings.picard_tol) {
        return Err(Error::NonConvergence {
            iterations,
            last_change: change,
            last: Box::new(boundary),
        });
    }
    Ok(boundary)
}

impl Boundary {
    pub(crate) fn curve(&self) -> Curve {
        extended_curve(&self.params, &self.cost, &self.z_grid, &self.yhat, self.y_star)
    }

    /// Recomputes the residual profile with the certificate route.
    fn certify(&mut self) {
        let kernel = Kernel::new(&self.params, &self.cost, &self.settings.time_grid(&self.params, &self.cost, 2));
        let rule = LegendreRule::new(self.settings.n_v);
        let curve = self.curve();
        let kappa = self.params.kappa;
        self.residual = self
            .z_grid
            .par_iter()
            .zip(&self.yhat)
            .map(|(&z, &y)| kernel.value_h(z, y, &curve, &rule) - kappa * z.exp())
            .collect();
        self.residual_max = self
            .residual
            .iter()
            .zip(&self.z_grid)
            .map(|(r, z)| r.abs() / (kappa * z.exp()))
            .fold(0.0, f64::max);
    }

    pub fn z_min(&self) -> f64 {
        self.z_grid[0]
    }

    pub fn z_max(&self) -> f64 {
        *self.z_grid.last().unwrap()
    }

    pub fn region(&self, z: f64) -> Region {
        if z < self.z_min() {
            Region::LeftExtension
        } else if z > self.z_max() {
            Region::RightExtension
        } else {
            Region::Interior
        }
    }

    /// Interior knots of the piecewise-linear boundary: the grid nodes and
    /// the monotone-cubic points between them.
    pub fn knots(&self) -> (&[f64], &[f64]) {
        let (z, y) = self.refined.get_or_init(|| refined_nodes(&self.z_grid, &self.yhat));
        (z, y)
    }

    fn left_slope(&self) -> f64 {
        let (z, y) = self.knots();
        (y[1] - y[0]) / (z[1] - z[0])
    }

    /// `ŷ(z)`: piecewise linear on the refined knots inside the grid, the
    /// first piece continued (and floored at `y*`) on the left, and
    /// `ŷ(z_max) + ϑ(z) − ϑ(z_max)` on the right.
    pub fn eval_yhat(&self, z: f64) -> f64 {
        let n = self.z_grid.len();
        match self.region(z) {
            Region::LeftExtension => {
                let v = self.yhat[0] + self.left_slope() * (z - self.z_grid[0]);
                v.min(self.yhat[0]).max(self.y_star)
            }
            Region::RightExtension => {
                let v = self.yhat[n - 1] + theta_bound(&self.params, &self.cost, z)
                    - self.theta_curve[n - 1];
                v.max(self.yhat[n - 1])
            }
            Region::Interior => {
                let (kz, ky) = self.knots();
                let m = kz.len();
                let j = kz.partition_point(|&k| k <= z).clamp(1, m - 1) - 1;
                let w = (z - kz[j]) / (kz[j + 1] - kz[j]);
                if w <= 0.0 {
                    ky[j]
                } else if w >= 1.0 {
                    ky[j + 1]
                } else {
                    ky[j] + w * (ky[j + 1] - ky[j])
                }
            }
        }
    }

    /// `sup{z : ŷ(z) < y}`, the log of the debt ceiling; `−∞` when the set is
    /// empty and `+∞` when it is unbounded.
    pub fn log_ceiling(&self, y: f64) -> f64 {
        let n = self.z_grid.len();
        let (kz, ky) = self.knots();
        let m = kz.len();
        let i = ky.partition_point(|&v| v < y);
        if i == 0 {
            // y ≤ ŷ(z_min): look in the left extension
            let s = self.left_slope();
            if y <= self.y_star || s <= 0.0 {
                return f64::NEG_INFINITY;
            }
            return self.z_grid[0] - (self.yhat[0] - y) / s;
        }
        if i == m {
            // invert ϑ(z) = y − ŷ(z_max) + ϑ(z_max)
            let level = y - self.yhat[n - 1] + self.theta_curve[n - 1];
            let marginal = self.params.kappa * (level - self.params.net_rate());
            let x = self.cost.marginal_inverse(marginal);
            return if x > 0.0 { x.ln().max(self.z_max()) } else { self.z_max() };
        }
        let (y0, y1) = (ky[i - 1], ky[i]);
        let (z0, z1) = (kz[i - 1], kz[i]);
        z0 + (y - y0) / (y1 - y0) * (z1 - z0)
    }

    /// Debt ceiling `b(y) = sup{x > 0 : y > ŷ(ln x)}`, `0` when no such `x`.
    pub fn b_of_y(&self, y: f64) -> f64 {
        self.log_ceiling(y).exp()
    }

    /// Region of the `b(y)` evaluation: interior inversion or one of the
    /// extensions.
    pub fn ceiling_region(&self, y: f64) -> Region {
        let z = self.log_ceiling(y);
        if z == f64::NEG_INFINITY || z < self.z_min() {
            Region::LeftExtension
        } else if z > self.z_max() || y > *self.yhat.last().unwrap() {
            Region::RightExtension
        } else {
            Region::Interior
        }
    }

    /// Certificate residual `u(z, ŷ(z)) − κe^z` at any `z` on the grid range,
    /// using a twice-finer time grid and the two-branch route.
    pub fn residual_at(&self, z: f64) -> f64 {
        let kernel = Kernel::new(&self.params, &self.cost, &self.settings.time_grid(&self.params, &self.cost, 2));
        let rule = LegendreRule::new(self.settings.n_v);
        kernel.value_h(z, self.eval_yhat(z), &self.curve(), &rule) - self.params.kappa * z.exp()
    }
}

/// Signed residual of the integral equation at `z` for a (possibly
/// perturbed) boundary.
pub fn boundary_residual(boundary: &Boundary, z: f64) -> Result<f64> {
    if !(z >= boundary.z_min() && z <= boundary.z_max()) {
        return Err(invalid(format!(
            "z = {z} outside [{}, {}]",
            boundary.z_min(),
            boundary.z_max()
        )));
    }
    Ok(boundary.residual_at(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn isotonic_output_is_monotone_and_keeps_the_sum(v in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let mut w = v.clone();
            isotonic(&mut w);
            prop_assert!(w.windows(2).all(|p| p[1] >= p[0] - 1e-12));
            let (a, b): (f64, f64) = (v.iter().sum(), w.iter().sum());
            prop_assert!((a - b).abs() < 1e-9);
            // a second pass changes nothing
            let mut again = w.clone();
            isotonic(&mut again);
            prop_assert_eq!(again, w);
        }

        #[test]
        fn refinement_stays_monotone_and_interpolates(steps in prop::collection::vec((0.05f64..1.0, 0.0f64..2.0), 2..20)) {
            let mut z = vec![0.0];
            let mut y = vec![-1.0];
            for (dz, dy) in &steps {
                z.push(z.last().unwrap() + dz);
                y.push(y.last().unwrap() + dy);
            }
            let (zs, ys) = refined_nodes(&z, &y);
            prop_assert_eq!(zs.len(), (z.len() - 1) * SUBDIVISIONS + 1);
            prop_assert!(zs.windows(2).all(|p| p[1] > p[0]));
            prop_assert!(ys.windows(2).all(|p| p[1] >= p[0]));
            for i in 0..z.len() {
                prop_assert_eq!(ys[i * SUBDIVISIONS], y[i]);
            }
        }
    }

    #[test]
    fn isotonic_pools_violators() {
        let mut v = vec![1.0, 3.0, 2.0, 2.0, 5.0, 0.0];
        isotonic(&mut v);
        let want = [1.0, 2.0 + 1.0 / 3.0, 2.0 + 1.0 / 3.0, 2.0 + 1.0 / 3.0, 2.5, 2.5];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut w = vec![0.0, 1.0, 2.0];
        isotonic(&mut w);
        assert_eq!(w, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn theta_and_integrand() {
        let p = ModelParams {
            delta: 0.03,
            g: 0.02,
            a: 0.01,
            theta: 0.5,
            sigma: 0.05,
            rho: 0.05,
            kappa: 1.0,
        };
        let c = CostSpec::quadratic();
        for z in [-3.0, 0.0, 1.5] {
            let th = theta_bound(&p, &c, z);
            assert!((th - (f64::exp(z) - 0.04)).abs() < 1e-14);
            assert!(stopping_integrand(&p, &c, z, th).abs() < 1e-13);
            assert!(stopping_integrand(&p, &c, z, th + 0.1) < 0.0);
            assert!(stopping_integrand(&p, &c, z, th - 0.1) > 0.0);
        }
        assert!((stopping_integrand(&p, &c, 0.0, 0.0) - 0.96).abs() < 1e-14);
        assert!((theta_bound(&p, &c, -40.0) + 0.04).abs() < 1e-15);
        let cm = CostSpec { m: 0.01, ..c };
        assert!((theta_bound(&p, &cm, -50.0) - (0.01 - 0.04)).abs() < 1e-15);
    }

    #[test]
    fn default_grid() {
        let s = SolverSettings::default();
        let g = s.z_grid();
        assert_eq!(g.len(), 81);
        assert!((g[0] - 0.01f64.ln()).abs() < 1e-15);
        assert!((g[80] - 100f64.ln()).abs() < 1e-15);
        s.validate().unwrap();
        let bad = SolverSettings {
            picard_damping: 0.0,
            ..s
        };
        assert!(bad.validate().is_err());
    }
}
