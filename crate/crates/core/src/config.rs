//! Flat `key = value` run configuration.
//!
//! Model and cost keys are required. `solver.*` and `sim.*` keys are optional
//! and fall back to the defaults below.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::boundary::SolverSettings;
use crate::error::{Error, Result};
use crate::model::{CostSpec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSettings {
    pub x0: f64,
    pub y0: f64,
    /// `None` means `5/Θ` with `Θ` the growth margin of the cost exponent.
    pub horizon: Option<f64>,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            x0: 1.0,
            y0: 0.02,
            horizon: None,
            dt: 1e-3,
            n_paths: 10_000,
            seed: 20240917,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub cost: CostSpec,
    pub solver: SolverSettings,
    pub sim: SimSettings,
}

const MODEL_KEYS: [&str; 10] = [
    "delta",
    "g",
    "a",
    "theta",
    "sigma",
    "rho",
    "kappa",
    "cost.c",
    "cost.gamma",
    "cost.m",
];

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(line_no, format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(cfg_err(line_no, "empty key or value"));
            }
            if kv.insert(k.to_string(), (line_no, v.to_string())).is_some() {
                return Err(cfg_err(line_no, format!("duplicate key `{k}`")));
            }
        }
        let missing: Vec<&str> = MODEL_KEYS.iter().copied().filter(|k| !kv.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing keys: {}", missing.join(", "))));
        }
        let mut take = |k: &str| kv.remove(k);
        let num = |e: Option<(usize, String)>| -> Result<Option<f64>> {
            match e {
                None => Ok(None),
                Some((line, v)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| cfg_err(line, format!("`{v}` is not a number"))),
            }
        };
        let int = |e: Option<(usize, String)>| -> Result<Option<u64>> {
            match e {
                None => Ok(None),
                Some((line, v)) => v
                    .parse::<u64>()
                    .map(Some)
                    .map_err(|_| cfg_err(line, format!("`{v}` is not a non-negative integer"))),
            }
        };
        let model = ModelParams {
            delta: num(take("delta"))?.unwrap(),
            g: num(take("g"))?.unwrap(),
            a: num(take("a"))?.unwrap(),
            theta: num(take("theta"))?.unwrap(),
            sigma: num(take("sigma"))?.unwrap(),
            rho: num(take("rho"))?.unwrap(),
            kappa: num(take("kappa"))?.unwrap(),
        };
        let cost = CostSpec {
            c: num(take("cost.c"))?.unwrap(),
            gamma: num(take("cost.gamma"))?.unwrap(),
            m: num(take("cost.m"))?.unwrap(),
        };
        let d = SolverSettings::default();
        let solver = SolverSettings {
            z_min: num(take("solver.z_min"))?.unwrap_or(d.z_min),
            z_max: num(take("solver.z_max"))?.unwrap_or(d.z_max),
            n_z: int(take("solver.n_z"))?.map_or(d.n_z, |v| v as usize),
            t_max: num(take("solver.t_max"))?.or(d.t_max),
            n_t: int(take("solver.n_t"))?.map_or(d.n_t, |v| v as usize),
            n_v: int(take("solver.n_v"))?.map_or(d.n_v, |v| v as usize),
            picard_tol: num(take("solver.picard_tol"))?.unwrap_or(d.picard_tol),
            picard_damping: num(take("solver.picard_damping"))?.unwrap_or(d.picard_damping),
            max_iter: int(take("solver.max_iter"))?.map_or(d.max_iter, |v| v as usize),
        };
        let ds = SimSettings::default();
        let sim = SimSettings {
            x0: num(take("sim.x0"))?.unwrap_or(ds.x0),
            y0: num(take("sim.y0"))?.unwrap_or(ds.y0),
            horizon: num(take("sim.horizon"))?.or(ds.horizon),
            dt: num(take("sim.dt"))?.unwrap_or(ds.dt),
            n_paths: int(take("sim.n_paths"))?.map_or(ds.n_paths, |v| v as usize),
            seed: int(take("sim.seed"))?.unwrap_or(ds.seed),
        };
        if let Some((k, (line, _))) = kv.into_iter().next() {
            return Err(cfg_err(line, format!("unknown key `{k}`")));
        }
        Ok(RunConfig {
            model,
            cost,
            solver,
            sim,
        })
    }

    /// Simulation horizon, defaulting to `5/Θ`.
    pub fn horizon(&self) -> f64 {
        self.sim
            .horizon
            .unwrap_or_else(|| 5.0 / self.model.growth_margin(self.cost.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "delta = 0.03\ng = 0.02\na = 0.01\ntheta = 0.5\nsigma = 0.05\nrho = 0.05\nkappa = 1\ncost.c = 0.5\ncost.gamma = 2\ncost.m = 0\n";

    #[test]
    fn parses_with_comments_and_defaults() {
        let text = format!("# reference\n{BASE}sim.seed = 9  # fixed\n\nsolver.n_t = 64\n");
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.model.rho, 0.05);
        assert_eq!(c.cost, CostSpec::quadratic());
        assert_eq!(c.sim.seed, 9);
        assert_eq!(c.solver.n_t, 64);
        assert_eq!(c.solver.n_z, 81);
        assert!((c.horizon() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("delta = 0.03"), Err(Error::Config(_))));
        let dup = format!("{BASE}g = 0.01\n");
        assert!(RunConfig::parse(&dup).is_err());
        let unknown = format!("{BASE}gamma = 2\n");
        let e = RunConfig::parse(&unknown).unwrap_err().to_string();
        assert!(e.contains("unknown key `gamma`"), "{e}");
        let bad = BASE.replace("rho = 0.05", "rho = fast");
        let e = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("line 6"), "{e}");
        assert!(RunConfig::parse(&format!("{BASE}oops\n")).is_err());
    }
}
