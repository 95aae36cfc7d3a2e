//! Brent–Dekker bracketed root finding.
//!
//! Takes the end-point values from the caller (they are already known from
//! bracketing and each evaluation here is expensive) and never leaves the
//! bracket.

/// Finds `x ∈ [a, b]` with `f(x) ≈ 0` given `fa = f(a)`, `fb = f(b)` of
/// opposite signs. Stops when the bracket is shorter than `xtol` or
/// `|f| ≤ ftol`. Returns `None` if the inputs do not bracket a root.
pub fn brent(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Option<f64> {
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if (fa > 0.0) == (fb > 0.0) || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let (mut a, mut fa, mut b, mut fb) = (a, fa, b, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let f = |x: f64| x * x * x - 2.0 * x - 5.0;
        let r = brent(f, 2.0, f(2.0), 3.0, f(3.0), 1e-14, 0.0, 100).unwrap();
        assert!((r - 2.094_551_481_542_326_5).abs() < 1e-12);
        let g = |x: f64| (x - 0.3).tanh();
        let mut calls = 0;
        let r = brent(
            |x| {
                calls += 1;
                g(x)
            },
            -5.0,
            g(-5.0),
            7.0,
            g(7.0),
            1e-12,
            0.0,
            100,
        )
        .unwrap();
        assert!((r - 0.3).abs() < 1e-11);
        assert!(calls < 40);
    }

    #[test]
    fn stays_inside_bracket_for_a_step() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { -1.0 };
        let r = brent(f, 0.0, 1.0, 4.0, -1.0, 1e-10, 0.0, 200).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(brent(|x| x, 1.0, 1.0, 2.0, 2.0, 1e-9, 0.0, 10).is_none());
    }
}
