#![allow(dead_code)]

use std::sync::OnceLock;

use debt_ceiling::boundary::{solve_boundary, Boundary, SolverSettings};
use debt_ceiling::model::{CostSpec, ModelParams};

pub fn reference() -> ModelParams {
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

/// 21 nodes and 64 time nodes: a couple of seconds per solve.
pub fn small_settings() -> SolverSettings {
    SolverSettings {
        n_z: 21,
        n_t: 64,
        ..Default::default()
    }
}

/// Quadratic cost on the small grid, solved once per test binary.
pub fn small_boundary() -> &'static Boundary {
    static B: OnceLock<Boundary> = OnceLock::new();
    B.get_or_init(|| solve_boundary(&reference(), &CostSpec::quadratic(), &small_settings()).unwrap())
}

/// Quadratic cost plus a linear part `m = 0.05`, small grid.
pub fn small_boundary_linear() -> &'static Boundary {
    static B: OnceLock<Boundary> = OnceLock::new();
    B.get_or_init(|| {
        let cost = CostSpec {
            m: 0.05,
            ..CostSpec::quadratic()
        };
        solve_boundary(&reference(), &cost, &small_settings()).unwrap()
    })
}
