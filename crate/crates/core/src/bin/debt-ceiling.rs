//! Batch front end: validate a config, solve and cache the boundary, then
//! evaluate values, simulate paths and compare policies.
//!
//! Exit codes: 0 success, 2 validation, 3 missing artifact, 4 numerical
//! failure, 1 anything else.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use debt_ceiling::boundary::{solve_boundary, theta_bound, Boundary};
use debt_ceiling::cache;
use debt_ceiling::config::RunConfig;
use debt_ceiling::model::validate_params;
use debt_ceiling::ou::{transition_density, zy_law};
use debt_ceiling::policy::{compare_policies, simulate_controlled, PolicySpec};
use debt_ceiling::valuation::Valuation;
use debt_ceiling::Error;

const CACHE_FILE: &str = "boundary.cache.json";

#[derive(Parser)]
#[command(name = "debt-ceiling", version, about = "Optimal debt-ratio ceiling under mean-reverting inflation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; also holds the boundary cache.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the discount-rate condition.
    Validate(Common),
    /// Solve the free boundary, or reuse a matching cache.
    Solve(Common),
    /// Tabulate u, v, b and w from the cached boundary.
    Eval {
        #[command(flatten)]
        common: Common,
        /// `lo:hi:n` grid of log-debt values for u.
        #[arg(long, default_value = "-3:3:7", allow_hyphen_values = true)]
        z: String,
        /// `lo:hi:n` grid of inflation values.
        #[arg(long, default_value = "-0.1:0.2:4", allow_hyphen_values = true)]
        y: String,
        /// Comma-separated debt ratios for v.
        #[arg(long, default_value = "0.05,0.5,1")]
        x: String,
        /// Also write the smooth-fit report at every interior node.
        #[arg(long)]
        smooth_fit: bool,
    },
    /// Write controlled paths for one policy.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// optimal, do-nothing, immediate or constant:<level>.
        #[arg(long, default_value = "optimal")]
        policy: String,
        #[arg(long, default_value_t = 1)]
        paths: u64,
    },
    /// Compare the default policy set on common noise.
    Compare(Common),
    /// Dump transition-density slices.
    Density {
        #[command(flatten)]
        common: Common,
        /// Comma-separated times.
        #[arg(long, default_value = "0.1,1,5")]
        times: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z0: f64,
        /// Defaults to `sim.y0`.
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<f64>,
        /// Points per axis.
        #[arg(long, default_value_t = 41)]
        n: usize,
    },
}

#[derive(Debug)]
enum Fail {
    Validation(String),
    Missing(String),
    Numerical(String),
    Other(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Validation(_) => 2,
            Fail::Missing(_) => 3,
            Fail::Numerical(_) => 4,
            Fail::Other(_) => 1,
        }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Config(_) | Error::Unsupported(_) => Fail::Validation(e.to_string()),
            Error::Numerical(_) | Error::DegenerateLaw(_) | Error::NonConvergence { .. } => Fail::Numerical(e.to_string()),
            Error::Cache(_) => Fail::Missing(e.to_string()),
            Error::Io(_) | Error::Json(_) => Fail::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Other(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Fail>;

enum Cell {
    Num(f64),
    Flag(bool),
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `<stem>.csv`, or `<stem>.json` as `{columns, rows}`, under `dir`.
    fn write(&self, dir: &Path, stem: &str, format: Format) -> Res<PathBuf> {
        let path = dir.join(format!(
            "{stem}.{}",
            if format == Format::Csv { "csv" } else { "json" }
        ));
        let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
        match format {
            Format::Csv => {
                writeln!(f, "{}", self.header.join(","))?;
                for r in &self.rows {
                    let line: Vec<String> = r
                        .iter()
                        .map(|c| match c {
                            Cell::Num(v) => format!("{v:.16e}"),
                            Cell::Flag(b) => b.to_string(),
                        })
                        .collect();
                    writeln!(f, "{}", line.join(","))?;
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Array(
                            r.iter()
                                .map(|c| match c {
                                    Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
                                    Cell::Flag(b) => Value::Bool(*b),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                let doc = serde_json::json!({ "columns": self.header, "rows": rows });
                serde_json::to_writer_pretty(&mut f, &doc).map_err(|e| Fail::Other(e.to_string()))?;
                writeln!(f)?;
            }
        }
        f.flush()?;
        Ok(path)
    }
}

fn parse_grid(s: &str) -> Res<Vec<f64>> {
    let bad = || Fail::Validation(format!("grid `{s}` must be lo:hi:n with n >= 1"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            lo * (1.0 - s) + hi * s
        })
        .collect())
}

fn parse_list(s: &str) -> Res<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Fail::Validation(format!("`{p}` is not a number")))
        })
        .collect()
}

/// Loads and validates the config; a failed `ρ` condition names every
/// violated bound.
fn load_config(c: &Common) -> Res<RunConfig> {
    let mut cfg = RunConfig::from_path(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.sim.seed = seed;
    }
    let report = validate_params(&cfg.model, &cfg.cost)?;
    if !report.passed {
        let names: Vec<String> = report
            .violations()
            .iter()
            .map(|(b, short)| format!("{} ({}) = {} >= rho = {} by {short:.3e}", b.name, b.expression, b.value, cfg.model.rho))
            .collect();
        return Err(Fail::Validation(format!("discount rate too small: {}", names.join("; "))));
    }
    cfg.solver.validate()?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| Fail::Validation(format!("output directory {} is not writable: {e}", dir.display())))
}

/// The cached boundary for this config, or exit 3.
fn cached_boundary(cfg: &RunConfig, out: &Path) -> Res<Boundary> {
    let path = out.join(CACHE_FILE);
    match cache::load_matching(&path, &cfg.model, &cfg.cost, &cfg.solver) {
        Ok(Some(b)) => Ok(b),
        Ok(None) => Err(Fail::Missing(format!(
            "no boundary cache for this config in {}; run `solve` first",
            out.display()
        ))),
        Err(e) => Err(Fail::Missing(format!("unreadable boundary cache {}: {e}", path.display()))),
    }
}

fn boundary_table(b: &Boundary) -> Table {
    let mut t = Table::new(&["z", "yhat", "theta_bound", "residual"]);
    for (i, &z) in b.z_grid.iter().enumerate() {
        t.push(vec![
            Cell::Num(z),
            Cell::Num(b.yhat[i]),
            Cell::Num(theta_bound(&b.params, &b.cost, z)),
            Cell::Num(b.residual[i]),
        ]);
    }
    t
}

fn cmd_validate(c: &Common) -> Res<()> {
    let cfg = RunConfig::from_path(&c.config)?;
    let report = validate_params(&cfg.model, &cfg.cost)?;
    print!("{report}");
    if report.passed {
        Ok(())
    } else {
        let names: Vec<&str> = report.violations().iter().map(|(b, _)| b.name).collect();
        Err(Fail::Validation(format!("violated rho bound(s): {}", names.join(", "))))
    }
}

fn cmd_solve(c: &Common) -> Res<()> {
    let cfg = load_config(c)?;
    prepare_out(&c.out)?;
    let path = c.out.join(CACHE_FILE);
    let cached = cache::load_matching(&path, &cfg.model, &cfg.cost, &cfg.solver).unwrap_or(None);
    let b = match cached {
        Some(b) => {
            println!("cached {}", path.display());
            b
        }
        None => match solve_boundary(&cfg.model, &cfg.cost, &cfg.solver) {
            Ok(b) => {
                cache::save(&path, &b)?;
                b
            }
            Err(Error::NonConvergence {
                iterations,
                last_change,
                last,
            }) => {
                eprintln!("residual profile of the last iterate (z, yhat, residual/(kappa e^z)):");
                for (i, z) in last.z_grid.iter().enumerate() {
                    eprintln!("{z:.16e} {:.16e} {:.16e}", last.yhat[i], last.residual[i] / (last.params.kappa * z.exp()));
                }
                return Err(Fail::Numerical(format!(
                    "no convergence after {iterations} sweeps (last change {last_change:.3e}, residual_max {:.3e})",
                    last.residual_max
                )));
            }
            Err(e) => return Err(e.into()),
        },
    };
    let written = boundary_table(&b).write(&c.out, "boundary", c.format)?;
    println!("y_star {:.16e}", b.y_star);
    println!("residual_max {:.16e}", b.residual_max);
    println!("iterations {}", b.iterations);
    println!("wrote {}", written.display());
    Ok(())
}

fn cmd_eval(c: &Common, z: &str, y: &str, x: &str, smooth_fit: bool) -> Res<()> {
    let cfg = load_config(c)?;
    let b = cached_boundary(&cfg, &c.out)?;
    let zs = parse_grid(z)?;
    let ys = parse_grid(y)?;
    let xs = parse_list(x)?;
    let val = Valuation::new(&b)?;

    let mut u = Table::new(&["z", "y", "value", "error_bracket"]);
    let mut violations = 0;
    for &zi in &zs {
        for &yi in &ys {
            let r = val.u(zi, yi);
            violations += r.violation.is_some() as usize;
            u.push(vec![Cell::Num(zi), Cell::Num(yi), Cell::Num(r.value), Cell::Num(r.error_bracket)]);
        }
    }
    let mut v = Table::new(&["x", "y", "value", "error_bracket"]);
    for &xi in &xs {
        for &yi in &ys {
            let r = val.v(xi, yi)?;
            v.push(vec![Cell::Num(xi), Cell::Num(yi), Cell::Num(r.value), Cell::Num(r.error_bracket)]);
        }
    }
    let mut bw = Table::new(&["y", "b", "w"]);
    for &yi in &ys {
        bw.push(vec![Cell::Num(yi), Cell::Num(b.b_of_y(yi)), Cell::Num(val.w(yi))]);
    }
    for (t, stem) in [(&u, "u"), (&v, "v"), (&bw, "ceiling")] {
        println!("wrote {}", t.write(&c.out, stem, c.format)?.display());
    }
    if smooth_fit {
        let mut sf = Table::new(&["z", "step", "gap_value", "dy_at_boundary", "dy_richardson", "dz_gap"]);
        let n = b.z_grid.len();
        for &zi in &b.z_grid[1..n - 1] {
            let h = 1e-4 * b.eval_yhat(zi).abs().max(1.0);
            let r = val.smooth_fit(zi, h)?;
            sf.push(vec![
                Cell::Num(r.z),
                Cell::Num(r.step),
                Cell::Num(r.gap_value),
                Cell::Num(r.dy_at_boundary),
                Cell::Num(r.dy_richardson),
                Cell::Num(r.dz_gap),
            ]);
        }
        println!("wrote {}", sf.write(&c.out, "smooth_fit", c.format)?.display());
    }
    if violations > 0 {
        eprintln!("warning: {violations} u value(s) outside [0, kappa e^z] beyond tolerance");
    }
    Ok(())
}

fn parse_policy<'a>(s: &str, b: Option<&'a Boundary>) -> Res<PolicySpec<'a>> {
    match s {
        "optimal" => b
            .map(PolicySpec::OptimalCeiling)
            .ok_or_else(|| Fail::Missing("optimal policy needs the boundary cache".into())),
        "do-nothing" => Ok(PolicySpec::DoNothing),
        "immediate" => Ok(PolicySpec::ImmediateToZero),
        _ => match s.strip_prefix("constant:").map(str::parse::<f64>) {
            Some(Ok(c)) => Ok(PolicySpec::ConstantCeiling(c)),
            _ => Err(Fail::Validation(format!(
                "unknown policy `{s}`; expected optimal, do-nothing, immediate or constant:<level>"
            ))),
        },
    }
}

fn cmd_simulate(c: &Common, policy: &str, paths: u64) -> Res<()> {
    let cfg = load_config(c)?;
    prepare_out(&c.out)?;
    let b = if policy == "optimal" {
        Some(cached_boundary(&cfg, &c.out)?)
    } else {
        None
    };
    let spec = parse_policy(policy, b.as_ref())?;
    let s = &cfg.sim;
    let mut all_below = true;
    for p in 0..paths {
        let path = simulate_controlled(&cfg.model, &cfg.cost, s.x0, s.y0, &spec, cfg.horizon(), s.dt, s.seed, p)?;
        all_below &= path.all_below_ceiling();
        let mut t = Table::new(&[
            "t",
            "X",
            "Y",
            "nu_cum",
            "cost_running",
            "intervention_cost_running",
            "below_ceiling",
        ]);
        for i in 0..path.t_grid.len() {
            t.push(vec![
                Cell::Num(path.t_grid[i]),
                Cell::Num(path.x[i]),
                Cell::Num(path.y[i]),
                Cell::Num(path.nu_cum[i]),
                Cell::Num(path.cost_running[i]),
                Cell::Num(path.intervention_cost_running[i]),
                Cell::Flag(path.below_ceiling[i]),
            ]);
        }
        let last = path.t_grid.len() - 1;
        println!(
            "path {p}: cost {:.6e} (holding {:.6e}, intervention {:.6e}), nu {:.6e}",
            path.cost_running[last] + path.intervention_cost_running[last],
            path.cost_running[last],
            path.intervention_cost_running[last],
            path.nu_cum[last]
        );
        println!("wrote {}", t.write(&c.out, &format!("path_{p}"), c.format)?.display());
    }
    println!("below ceiling on all nodes: {all_below}");
    Ok(())
}

fn cmd_compare(c: &Common) -> Res<()> {
    let cfg = load_config(c)?;
    let b = cached_boundary(&cfg, &c.out)?;
    let s = &cfg.sim;
    let by0 = b.b_of_y(s.y0);
    let policies = [
        PolicySpec::OptimalCeiling(&b),
        PolicySpec::DoNothing,
        PolicySpec::ImmediateToZero,
        PolicySpec::ConstantCeiling(0.5 * by0),
        PolicySpec::ConstantCeiling(2.0 * by0),
    ];
    let report = compare_policies(&cfg.model, &cfg.cost, &policies, s.x0, s.y0, s.n_paths, cfg.horizon(), s.dt, s.seed)?;
    let v0 = Valuation::new(&b)?.v(s.x0, s.y0)?;
    let mut json = serde_json::to_value(&report).map_err(|e| Fail::Other(e.to_string()))?;
    json["solver_settings"] = serde_json::to_value(cfg.solver).map_err(|e| Fail::Other(e.to_string()))?;
    json["v_x0_y0"] = serde_json::to_value(v0).map_err(|e| Fail::Other(e.to_string()))?;
    let path = c.out.join("comparison.json");
    fs::write(&path, serde_json::to_string_pretty(&json).map_err(|e| Fail::Other(e.to_string()))? + "\n")?;
    for p in &report.policies {
        println!(
            "{:<28} J = {:.6e}  se {:.2e}  bias <= {:.2e}",
            p.policy,
            p.estimate.mean,
            p.estimate.stderr,
            p.estimate.bias_bound()
        );
    }
    println!("v(x0, y0) = {:.6e} +- {:.1e}", v0.value, v0.error_bracket);
    println!("ranking: {}", report.ranking.join(" < "));
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_density(c: &Common, times: &str, z0: f64, y0: Option<f64>, n: usize) -> Res<()> {
    let cfg = load_config(c)?;
    prepare_out(&c.out)?;
    if n < 2 {
        return Err(Fail::Validation("density needs n >= 2".into()));
    }
    let y0 = y0.unwrap_or(cfg.sim.y0);
    let mut t = Table::new(&["t", "z", "y", "density"]);
    for ti in parse_list(times)? {
        let law = zy_law(&cfg.model, ti, z0, y0)?;
        let (sz, sy) = (law.var_z.sqrt(), law.var_y.sqrt());
        for i in 0..n {
            let z = law.mean_z + sz * (-4.0 + 8.0 * i as f64 / (n - 1) as f64);
            for j in 0..n {
                let y = law.mean_y + sy * (-4.0 + 8.0 * j as f64 / (n - 1) as f64);
                let d = transition_density(&law, z, y)?;
                t.push(vec![Cell::Num(ti), Cell::Num(z), Cell::Num(y), Cell::Num(d.value)]);
            }
        }
    }
    println!("wrote {}", t.write(&c.out, "density", c.format)?.display());
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    let common = match &cli.cmd {
        Cmd::Validate(c) | Cmd::Solve(c) | Cmd::Compare(c) => c,
        Cmd::Eval { common, .. } | Cmd::Simulate { common, .. } | Cmd::Density { common, .. } => common,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Fail::Other(e.to_string()))?;
    }
    match &cli.cmd {
        Cmd::Validate(c) => cmd_validate(c),
        Cmd::Solve(c) => cmd_solve(c),
        Cmd::Eval {
            common,
            z,
            y,
            x,
            smooth_fit,
        } => cmd_eval(common, z, y, x, *smooth_fit),
        Cmd::Simulate { common, policy, paths } => cmd_simulate(common, policy, *paths),
        Cmd::Compare(c) => cmd_compare(c),
        Cmd::Density {
            common,
            times,
            z0,
            y0,
            n,
        } => cmd_density(common, times, *z0, *y0, *n),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Fail::Validation(m) | Fail::Missing(m) | Fail::Numerical(m) | Fail::Other(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
