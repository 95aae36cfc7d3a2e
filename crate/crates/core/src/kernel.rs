//! Discounted expectations of the stopping integrand over the region above a
//! piecewise-linear curve.
//!
//! Two independent evaluation routes live here:
//!
//! * [`Kernel::phi`] integrates `G(Z, Y)·1{Y > f(Z)}` exactly on every linear
//!   piece of `f`, using bivariate normal orthant probabilities.
//! * [`Kernel::value_h`] integrates the two-branch running cost `H_f` with a
//!   Gauss–Legendre rule in the `Z` direction and the `Y` direction in closed
//!   form.
//!
//! Both share only the Gaussian law of `(Z_t, Y_t)`.

use crate::model::{CostSpec, ModelParams};
use crate::normal;
use crate::quadrature::{self, LegendreRule, TimeGrid};

/// Standardised coordinates beyond this are treated as infinite.
const CUT: f64 = 10.0;

/// Continuous piecewise-linear curve. The first and last pieces extend to
/// `∓∞` as rays.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    pub fn new(z: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(z.len() >= 2 && z.len() == y.len());
        debug_assert!(z.windows(2).all(|w| w[0] < w[1]));
        Curve { z, y }
    }

    fn slope(&self, j: usize) -> f64 {
        (self.y[j + 1] - self.y[j]) / (self.z[j + 1] - self.z[j])
    }

    /// Index of the piece containing `z`.
    fn piece(&self, z: f64) -> usize {
        let n = self.z.len();
        self.z.partition_point(|&k| k <= z).clamp(1, n - 1) - 1
    }

    pub fn eval(&self, z: f64) -> f64 {
        let j = self.piece(z);
        self.y[j] + self.slope(j) * (z - self.z[j])
    }
}

/// Law of `(Z_t, Y_t)` at one quadrature time, split into the parts that do
/// not depend on the start point.
#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    /// Quadrature weight times `e^{−ρt}`.
    w: f64,
    decay: f64,
    q1: f64,
    vz: f64,
    sdz: f64,
    /// `Cov(Z, Y) / Var(Z)`.
    beta: f64,
    /// Conditional standard deviation of `Y` given `Z`.
    s: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    vy: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    czy: f64,
}

/// Time-integrated expectations over one fixed time grid.
#[derive(Debug, Clone)]
pub struct Kernel {
    params: ModelParams,
    cost: CostSpec,
    nodes: Vec<Node>,
    edges: Vec<f64>,
}

impl Node {
    fn at(params: &ModelParams, t: f64, w: f64) -> Self {
        let m = params.ou_moments_unchecked(t, 0.0);
        let vz = m.var_int_y;
        let czy = -m.cov_int_y_y;
        let beta = czy / vz;
        let s2 = (m.var_y - czy * beta).max(0.0);
        Node {
            t,
            w: w * (-params.rho * t).exp(),
            decay: (-params.theta * t).exp(),
            q1: -(-params.theta * t).exp_m1(),
            vz,
            sdz: vz.sqrt(),
            beta,
            s: s2.sqrt(),
            vy: m.var_y,
            czy,
        }
    }
}

/// Per-segment partial integrals under a standard normal `x`, with the
/// conditional threshold `α(x) = a0 + a1·x`.
#[derive(Default, Clone, Copy)]
struct Sums {
    i0: f64,
    i1: f64,
    j0: f64,
}

impl Kernel {
    pub fn new(params: &ModelParams, cost: &CostSpec, grid: &TimeGrid) -> Self {
        let nodes = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&t, &w)| Node::at(params, t, w))
            .collect();
        Kernel {
            params: *params,
            cost: *cost,
            nodes,
            edges: grid.edges.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(E Z_t, E Y_t)` from `(z0, y0)`.
    fn means(&self, n: &Node, z0: f64, y0: f64) -> (f64, f64) {
        let p = &self.params;
        let eq = p.long_run_inflation();
        let mean_y = y0 * n.decay + eq * n.q1;
        let mean_i = eq * n.t + (y0 - eq) * n.q1 / p.theta;
        (z0 + p.drift() * n.t - mean_i, mean_y)
    }

    /// `E ∫₀^∞ e^{−ρt} G(Z_t, Y_t) 1{Y_t > f(Z_t)} dt` from `(z0, y0)`, where
    /// `G(z, y) = e^z (C'(e^z) + κ(δ − g − ρ − y))`.
    pub fn phi(&self, z0: f64, y0: f64, curve: &Curve) -> f64 {
        self.nodes.iter().map(|n| n.w * self.phi_at(n, z0, y0, curve)).sum()
    }

    /// [`Kernel::phi`] with adaptive Gauss–Kronrod panels in time, seeded by
    /// the grid's panels cut `2^min_depth` ways. `abs_tol` bounds the summed error estimate; the
    /// estimate is returned alongside the value.
    pub fn phi_adaptive(&self, z0: f64, y0: f64, curve: &Curve, abs_tol: f64, min_depth: u32, max_evals: usize) -> (f64, f64) {
        quadrature::adaptive(&self.edges, min_depth, abs_tol, max_evals, |t| {
            let n = Node::at(&self.params, t, 1.0);
            n.w * self.phi_at(&n, z0, y0, curve)
        })
    }

    /// Undiscounted time-`t` integrand of [`Kernel::phi`].
    fn phi_at(&self, n: &Node, z0: f64, y0: f64, curve: &Curve) -> f64 {
        let c = &self.cost;
        let kappa = self.params.kappa;
        let k = self.params.net_rate();
        let gamma = c.gamma;
        let (mz, my) = self.means(n, z0, y0);
        // power term, tilted by e^{γZ}
        let sg = segment_sums(n, mz, my, gamma, curve);
        let log_mg = gamma * mz + 0.5 * gamma * gamma * n.vz;
        // linear terms, tilted by e^{Z}
        let s1 = segment_sums(n, mz, my, 1.0, curve);
        let log_m1 = mz + 0.5 * n.vz;
        let mu0 = my + n.beta * n.vz;
        let mu1 = n.beta * n.sdz;
        let lin = (c.m + kappa * (k - mu0)) * s1.i0 - kappa * mu1 * s1.i1 - kappa * n.s * s1.j0;
        let power = if sg.i0 > 0.0 {
            c.c * gamma * (log_mg.exp() * sg.i0)
        } else {
            0.0
        };
        power + log_m1.exp() * lin
    }

    /// `E ∫₀^∞ e^{−ρt} H_f(Z_t, Y_t) dt` from `(z0, y0)`, with
    /// `H_f(z, y) = e^z C'(e^z) 1{y > f(z)} + κ(y − δ + g + ρ) e^z 1{y ≤ f(z)}`.
    ///
    /// The `Z`-direction integral uses composite Gauss–Legendre panels of
    /// `order` nodes, split at the curve's knots and around every place where
    /// the conditional exceedance probability switches.
    pub fn value_h(&self, z0: f64, y0: f64, curve: &Curve, rule: &LegendreRule) -> f64 {
        let c = &self.cost;
        let kappa = self.params.kappa;
        let k = self.params.net_rate();
        let gamma = c.gamma;
        let mut total = 0.0;
        let mut breaks: Vec<f64> = Vec::with_capacity(4 * curve.z.len() + 8);
        for n in &self.nodes {
            let (mz, my) = self.means(n, z0, y0);
            let lo = n.sdz - CUT;
            let hi = gamma * n.sdz + CUT;
            breaks.clear();
            breaks.push(lo);
            breaks.push(hi);
            let to_x = |z: f64| (z - mz) / n.sdz;
            // μ(x) = my + β·sdz·x
            let mu1 = n.beta * n.sdz;
            for j in 0..curve.z.len() - 1 {
                let xl = if j == 0 {
                    f64::NEG_INFINITY
                } else {
                    to_x(curve.z[j])
                };
                let xr = if j + 2 == curve.z.len() {
                    f64::INFINITY
                } else {
                    to_x(curve.z[j + 1])
                };
                if xr <= lo || xl >= hi {
                    continue;
                }
                if xl > lo {
                    breaks.push(xl);
                }
                let a1 = (curve.slope(j) * n.sdz - mu1) / n.s;
                if a1.abs() > 1e-12 {
                    let xj = to_x(curve.z[j]);
                    let a0 = (curve.y[j] - my - mu1 * xj) / n.s - a1 * xj;
                    let centre = -a0 / a1;
                    let width = 1.0 / a1.abs();
                    for off in [0.0, 1.0, -1.0, 3.0, -3.0, 10.0, -10.0] {
                        let b = centre + off * width;
                        if b > lo.max(xl) && b < hi.min(xr) {
                            breaks.push(b);
                        }
                    }
                }
            }
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let log_norm = -0.5 * (2.0 * std::f64::consts::PI).ln();
            let mut acc = 0.0;
            for w in breaks.windows(2) {
                let pieces = ((w[1] - w[0]) / 0.5).ceil().max(1.0) as usize;
                let h = (w[1] - w[0]) / pieces as f64;
                for p in 0..pieces {
                    let a = w[0] + p as f64 * h;
                    for (x, wt) in rule.on(a, a + h) {
                        let v = mz + n.sdz * x;
                        let mu = my + mu1 * x;
                        let alpha = (curve.eval(v) - mu) / n.s;
                        let base = log_norm - 0.5 * x * x;
                        let above = normal::sf(alpha);
                        let below = normal::cdf(alpha);
                        let power = c.c * gamma * (base + gamma * v).exp() * above;
                        let lin = (base + v).exp()
                            * (c.m * above + kappa * ((mu - k) * below - n.s * normal::pdf(alpha)));
                        acc += wt * (power + lin);
                    }
                }
            }
            total += n.w * acc;
        }
        total
    }

    /// Exact law moments at every node for a start `(z0, y0)`; used by tests.
    #[cfg(test)]
    fn law_at(&self, i: usize, z0: f64, y0: f64) -> (f64, f64, f64, f64, f64, f64) {
        let n = &self.nodes[i];
        let (mz, my) = self.means(n, z0, y0);
        (n.t, mz, my, n.vz, n.czy, n.vy)
    }
}

/// Sums of `I0 = ∫φΦ̄(α)`, `I1 = ∫xφΦ̄(α)` and `J0 = ∫φφ(α)` over every piece
/// of the curve, in coordinates tilted by `e^{pZ}`.
fn segment_sums(n: &Node, mz: f64, my: f64, p: f64, curve: &Curve) -> Sums {
    let mp = mz + p * n.vz;
    let sd = n.sdz;
    let mu0 = my + n.beta * p * n.vz;
    let mu1 = n.beta * sd;
    let nk = curve.z.len();
    let to_x = |z: f64| (z - mp) / sd;
    // pieces whose x-range meets [−CUT, CUT]
    let first = curve
        .z
        .partition_point(|&z| to_x(z) <= -CUT)
        .saturating_sub(1);
    let last = curve.z.partition_point(|&z| to_x(z) < CUT).clamp(1, nk - 1);
    let mut out = Sums::default();
    for j in first..last {
        let xl = if j == 0 {
            -CUT
        } else {
            to_x(curve.z[j]).max(-CUT)
        };
        let xr = if j + 2 == nk {
            CUT
        } else {
            to_x(curve.z[j + 1]).min(CUT)
        };
        if xr <= xl {
            continue;
        }
        let xj = to_x(curve.z[j]);
        let a1 = (curve.slope(j) * sd - mu1) / n.s;
        let a0 = (curve.y[j] - mu0 - mu1 * xj) / n.s - a1 * xj;
        let al = a0 + a1 * xl;
        let ar = a0 + a1 * xr;
        if al > CUT && ar > CUT {
            continue;
        }
        let (pl, pr) = (normal::pdf(xl), normal::pdf(xr));
        if al < -CUT && ar < -CUT {
            out.i0 += normal::mass(xl, xr);
            out.i1 += pl - pr;
            continue;
        }
        let q = 1.0 + a1 * a1;
        let rq = q.sqrt();
        let kk = a0 / rq;
        let r = -a1 / rq;
        let i0 = normal::upper_orthant(xl, kk, r) - normal::upper_orthant(xr, kk, r);
        let shift = a0 * a1 / rq;
        let j0 = normal::pdf(kk) / rq * normal::mass(rq * xl + shift, rq * xr + shift);
        out.i0 += i0;
        out.j0 += j0;
        out.i1 += pl * normal::sf(al) - pr * normal::sf(ar) - a1 * j0;
    }
    out
}
