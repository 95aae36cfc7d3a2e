//! Gauss–Legendre rules and the geometric time grid used for the
//! `∫₀^∞ e^{−ρt} (…) dt` integrals.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LegendreRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("order >= 1");
        let rule = GaussLegendre::new(order);
        let nodes = rule.nodes().copied().collect();
        let weights = rule.weights().copied().collect();
        LegendreRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite Gauss–Legendre grid on `[0, t_max]` with geometrically growing
/// panels. The first panel is `[0, t_first]`; the integrands have `√t`-type
/// behaviour at the origin, which the geometric refinement absorbs.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Panel boundaries, `0` first and `t_max` last.
    pub edges: Vec<f64>,
    pub t_max: f64,
}

impl TimeGrid {
    /// About `n_nodes` nodes (rounded up to a whole number of panels).
    pub fn geometric(t_first: f64, t_max: f64, n_nodes: usize, order: usize) -> Self {
        assert!(t_first > 0.0 && t_max > t_first, "bad time range");
        let rule = LegendreRule::new(order);
        let panels = n_nodes.div_ceil(order).max(2);
        let ratio = (t_max / t_first).powf(1.0 / (panels - 1) as f64);
        let mut edges = Vec::with_capacity(panels + 1);
        edges.push(0.0);
        let mut e = t_first;
        for _ in 0..panels - 1 {
            edges.push(e);
            e *= ratio;
        }
        edges.push(t_max);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for w in edges.windows(2) {
            for (x, wt) in rule.on(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        TimeGrid {
            nodes,
            weights,
            edges,
            t_max,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

// 15-point Kronrod nodes on [0, 1] (mirrored), with the 7-point Gauss
// rule on the odd entries.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 on `[a, b]`: the Kronrod value and `|K15 − G7|`.
fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature over the panels given by
/// `edges`, each first cut into `2^min_depth` equal pieces. The piece with
/// the largest error estimate is halved until the summed estimate is below
/// `abs_tol` or `max_evals` integrand calls have been spent. Returns the
/// value and the error estimate.
pub fn adaptive(edges: &[f64], min_depth: u32, abs_tol: f64, max_evals: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    struct Piece {
        lo: f64,
        hi: f64,
        v: f64,
        e: f64,
    }
    impl PartialEq for Piece {
        fn eq(&self, o: &Self) -> bool {
            self.e == o.e
        }
    }
    impl Eq for Piece {}
    impl PartialOrd for Piece {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Piece {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.e.total_cmp(&o.e)
        }
    }
    let cuts = 1usize << min_depth;
    let mut heap = std::collections::BinaryHeap::new();
    let mut evals = 0;
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / cuts as f64;
        for i in 0..cuts {
            let lo = w[0] + i as f64 * h;
            let hi = if i + 1 == cuts { w[1] } else { lo + h };
            let (v, e) = gk15(lo, hi, &mut f);
            evals += 15;
            heap.push(Piece { lo, hi, v, e });
        }
    }
    let mut err: f64 = heap.iter().map(|p| p.e).sum();
    while err > abs_tol && evals < max_evals {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.lo + p.hi);
        if !(m > p.lo && m < p.hi) {
            heap.push(p);
            break;
        }
        let (vl, el) = gk15(p.lo, m, &mut f);
        let (vr, er) = gk15(m, p.hi, &mut f);
        evals += 30;
        err += el + er - p.e;
        heap.push(Piece { lo: p.lo, hi: m, v: vl, e: el });
        heap.push(Piece { lo: m, hi: p.hi, v: vr, e: er });
    }
    // re-sum to shed accumulated rounding in the running total
    let err = heap.iter().map(|p| p.e).sum();
    (heap.iter().map(|p| p.v).sum(), err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_exact_for_polynomials() {
        let r = LegendreRule::new(6);
        let v = r.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn time_grid_integrates_discounted_root() {
        // ∫₀^∞ √t e^{−t} dt = Γ(3/2) = √π/2
        let g = TimeGrid::geometric(1e-6, 60.0, 200, 8);
        let v = g.integrate(|t| t.sqrt() * (-t).exp());
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11, "{v}");
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(*g.nodes.last().unwrap() < 60.0);
        assert_eq!(g.edges.len(), g.len() / 8 + 1);
    }

    #[test]
    fn kronrod_rule_is_exact_to_degree_22() {
        let (v, e) = gk15(-1.0, 1.0, &mut |x: f64| x.powi(22));
        assert!((v - 2.0 / 23.0).abs() < 1e-15);
        assert!(e > 0.0);
    }

    #[test]
    fn adaptive_resolves_a_sharp_step() {
        let f = |t: f64| 0.5 * (1.0 + ((t - 0.3137) / 1e-5).tanh());
        let (v, e) = adaptive(&[0.0, 0.5, 1.0], 0, 1e-10, 100_000, f);
        assert!((v - (1.0 - 0.3137)).abs() < 1e-9, "{v} {e}");
    }
}
