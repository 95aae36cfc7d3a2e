//! Model parameters, the holding-cost family and the standing-assumption check.
//!
//! Debt ratio `X` and inflation `Y` evolve as
//!
//! ```text
//! dX = (δ − g − Y) X dt − dν
//! dY = (a − θ Y) dt + σ dW
//! ```
//!
//! Costs are discounted at `ρ`; every unit of debt reduction costs `κ`.
//! All times are in years and all rates are per year.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Nominal interest rate.
    pub delta: f64,
    /// GDP growth rate.
    pub g: f64,
    /// OU drift level; the long-run mean of inflation is `a / theta`.
    pub a: f64,
    /// Mean-reversion speed.
    pub theta: f64,
    /// Inflation volatility.
    pub sigma: f64,
    /// Discount rate.
    pub rho: f64,
    /// Marginal cost of intervention.
    pub kappa: f64,
}

/// Holding cost `C(x) = c·x^γ + m·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub c: f64,
    pub gamma: f64,
    /// Linear coefficient, equal to `C'(0)`.
    pub m: f64,
}

impl ModelParams {
    /// `δ − g`, the deterministic part of the debt-ratio growth rate.
    pub fn drift(&self) -> f64 {
        self.delta - self.g
    }

    /// `δ − g − ρ`, the level the stopping integrand is measured against.
    pub fn net_rate(&self) -> f64 {
        self.delta - self.g - self.rho
    }

    pub fn long_run_inflation(&self) -> f64 {
        self.a / self.theta
    }

    /// Growth margin `Θ = ρ − γ[δ − g − a/θ + γσ²/(2θ²)]` that controls the decay
    /// of `e^{−ρt} E[(X⁰_t)^γ]`.
    pub fn growth_margin(&self, gamma: f64) -> f64 {
        let s2 = self.sigma * self.sigma / (self.theta * self.theta);
        self.rho - gamma * (self.drift() - self.long_run_inflation() + gamma * s2 / 2.0)
    }

    fn check_finite(&self) -> Result<()> {
        let fields = [
            ("delta", self.delta),
            ("g", self.g),
            ("a", self.a),
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("kappa", self.kappa),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("kappa", self.kappa),
        ] {
            if v <= 0.0 {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl CostSpec {
    /// `C(x) = x²/2`.
    pub fn quadratic() -> Self {
        CostSpec {
            c: 0.5,
            gamma: 2.0,
            m: 0.0,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.c * pow(x, self.gamma) + self.m * x
    }

    /// `C'(x) = cγx^{γ−1} + m` on `x ≥ 0`.
    pub fn marginal(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.m;
        }
        self.c * self.gamma * pow(x, self.gamma - 1.0) + self.m
    }

    /// Inverse of `C'` on `[m, ∞)`; returns 0 below `m`.
    pub fn marginal_inverse(&self, level: f64) -> f64 {
        if level <= self.m {
            return 0.0;
        }
        ((level - self.m) / (self.c * self.gamma)).powf(1.0 / (self.gamma - 1.0))
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("cost.c", self.c),
            ("cost.gamma", self.gamma),
            ("cost.m", self.m),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if self.c <= 0.0 {
            return Err(invalid(format!("cost.c must be > 0, got {}", self.c)));
        }
        if self.gamma <= 1.0 {
            return Err(invalid(format!(
                "cost.gamma must be > 1, got {}",
                self.gamma
            )));
        }
        if self.m < 0.0 {
            return Err(invalid(format!("cost.m must be >= 0, got {}", self.m)));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x
    } else {
        x.powf(p)
    }
}

/// One lower bound that `ρ` must strictly exceed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoBound {
    pub name: &'static str,
    pub expression: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rho: f64,
    pub bounds: Vec<RhoBound>,
    /// Largest bound; `ρ` passes iff `ρ > required`.
    pub required: f64,
    pub passed: bool,
}

impl ValidationReport {
    /// Bounds that `ρ` fails to exceed, with the shortfall `bound − ρ ≥ 0`.
    pub fn violations(&self) -> Vec<(&RhoBound, f64)> {
        self.bounds
            .iter()
            .filter(|b| self.rho <= b.value)
            .map(|b| (b, b.value - self.rho))
            .collect()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "rho = {} {} required {}",
            self.rho,
            if self.passed { ">" } else { "<=" },
            self.required
        )?;
        for b in &self.bounds {
            let mark = if self.rho > b.value { "ok  " } else { "FAIL" };
            writeln!(f, "  [{mark}] {:<6} {} = {}", b.name, b.expression, b.value)?;
        }
        Ok(())
    }
}

/// Checks the discount-rate condition that keeps every cost in the model finite.
///
/// The three bounds are `ρ₀ = 4[δ−g−a/θ+2σ²/θ²] ∨ 0`, `γ[δ−g−a/θ+γσ²/(2θ²)]` and
/// `2(γ−1)[δ−g−a/θ+(γ−1)σ²/θ²]`. Non-finite or out-of-domain inputs are errors;
/// a too-small `ρ` is a failed report, not an error.
pub fn validate_params(params: &ModelParams, cost: &CostSpec) -> Result<ValidationReport> {
    params.check_finite()?;
    cost.check()?;
    let base = params.drift() - params.long_run_inflation();
    let s2 = params.sigma * params.sigma / (params.theta * params.theta);
    let gamma = cost.gamma;
    let bounds = vec![
        RhoBound {
            name: "rho0",
            expression: "4[delta - g - a/theta + 2 sigma^2/theta^2] v 0",
            value: (4.0 * (base + 2.0 * s2)).max(0.0),
        },
        RhoBound {
            name: "gamma",
            expression: "gamma[delta - g - a/theta + gamma sigma^2/(2 theta^2)]",
            value: gamma * (base + gamma * s2 / 2.0),
        },
        RhoBound {
            name: "gamma1",
            expression: "2(gamma-1)[delta - g - a/theta + (gamma-1) sigma^2/theta^2]",
            value: 2.0 * (gamma - 1.0) * (base + (gamma - 1.0) * s2),
        },
    ];
    let required = bounds
        .iter()
        .map(|b| b.value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ValidationReport {
        rho: params.rho,
        passed: params.rho > required,
        required,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> (ModelParams, CostSpec) {
        (
            ModelParams {
                delta: 0.03,
                g: 0.02,
                a: 0.01,
                theta: 0.5,
                sigma: 0.05,
                rho: 0.05,
                kappa: 1.0,
            },
            CostSpec::quadratic(),
        )
    }

    #[test]
    fn reference_parameters_pass() {
        let (p, c) = base();
        let r = validate_params(&p, &c).unwrap();
        assert!(r.passed);
        // 4[0.01 − 0.02 + 2·0.01] = 0.04; the γ-bounds are both 0.
        assert!((r.bounds[0].value - 0.04).abs() < 1e-15);
        assert!(r.bounds[1].value.abs() < 1e-15);
        assert!(r.bounds[2].value.abs() < 1e-15);
        assert!((r.required - 0.04).abs() < 1e-15);
        assert!(r.violations().is_empty());
    }

    #[test]
    fn small_rho_fails_on_rho0() {
        let (mut p, c) = base();
        p.rho = 0.03;
        let r = validate_params(&p, &c).unwrap();
        assert!(!r.passed);
        let v = r.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].0.name, "rho0");
        assert!((v[0].1 - 0.01).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        let (mut p, c) = base();
        p.sigma = 0.0;
        assert!(matches!(
            validate_params(&p, &c),
            Err(crate::Error::InvalidInput(_))
        ));
        let (mut p, c) = base();
        p.delta = f64::NAN;
        assert!(validate_params(&p, &c).is_err());
        let (p, mut c) = base();
        c.gamma = 1.0;
        assert!(validate_params(&p, &c).is_err());
    }

    #[test]
    fn cost_family() {
        let c = CostSpec {
            c: 0.5,
            gamma: 2.0,
            m: 0.01,
        };
        assert_eq!(c.value(0.0), 0.0);
        assert!((c.marginal(0.0) - 0.01).abs() < 1e-15);
        assert!((c.marginal(2.0) - 2.01).abs() < 1e-15);
        assert!((c.marginal_inverse(c.marginal(0.7)) - 0.7).abs() < 1e-12);
        let c3 = CostSpec {
            c: 0.2,
            gamma: 3.0,
            m: 0.0,
        };
        let x = 1.3;
        let h = 1e-6;
        let fd = (c3.value(x + h) - c3.value(x - h)) / (2.0 * h);
        assert!((fd - c3.marginal(x)).abs() < 1e-8);
    }
}
