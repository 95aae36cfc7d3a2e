//! Standard normal primitives.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the tail.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Φ(b) − Φ(a)` without cancellation in either tail.
#[inline]
pub fn mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a >= 0.0 {
        sf(a) - sf(b)
    } else {
        cdf(b) - cdf(a)
    }
}

/// `P[X > h, U > k]` for standard normals with correlation `r`.
#[inline]
pub fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::NEG_INFINITY {
        return sf(k);
    }
    if k == f64::NEG_INFINITY {
        return sf(h);
    }
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    owens_t::biv_norm(h, k, r.clamp(-1.0, 1.0))
}

/// Bivariate normal density for a mean and covariance given entry-wise.
pub fn bivariate_log_pdf(dx: f64, dy: f64, vxx: f64, vxy: f64, vyy: f64) -> f64 {
    let det = vxx * vyy - vxy * vxy;
    let q = (vyy * dx * dx - 2.0 * vxy * dx * dy + vxx * dy * dy) / det;
    -0.5 * q - (2.0 * PI).ln() - 0.5 * det.ln()
}
