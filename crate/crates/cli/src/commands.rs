//! The five subcommands. Each builds its problem, runs a study from
//! [`crate::experiments`], and writes its tables plus a manifest into the
//! output directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use dcs_core::controller::AdaptiveIntegrator;
use dcs_core::dcs::DcsIntegrator;
use dcs_core::problems::{bz_problem, BzParams, BzProblem, Model, ProblemSpec};
use dcs_core::reference::reference_solve;
use dcs_core::spatial::{Grid1D, RhsOperator, SpatialOrder};
use dcs_core::splitting::Splitting;
use rayon::prelude::*;

use crate::config::{ProblemKind, RunConfig};
use crate::experiments::{
    dyadic, error_control_study, global_study, hybrid_gap, laplacian_study, local_study, restrict, rule_name,
    slopes_by_k, ConvergenceRow, Method,
};
use crate::io::{encode_dump, num, opt, read_state_csv, state_csv, step_report_fields, step_report_header, trajectory_csv, atomic_write, Table};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::slopes::{fit_slope, noise_floor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    ConvergeLocal,
    ConvergeGlobal,
    ErrorControl,
    SpaceStudy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::ConvergeLocal => "converge-local",
            Command::ConvergeGlobal => "converge-global",
            Command::ErrorControl => "error-control",
            Command::SpaceStudy => "space-study",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "run" => Command::Run,
            "converge-local" => Command::ConvergeLocal,
            "converge-global" => Command::ConvergeGlobal,
            "error-control" => Command::ErrorControl,
            "space-study" => Command::SpaceStudy,
            _ => bail!("unknown command '{s}'"),
        })
    }
}

/// Files written and whether every cell succeeded.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub ok: bool,
    pub failures: Vec<String>,
}

impl Outcome {
    fn fail(&mut self, msg: String) {
        self.ok = false;
        self.failures.push(msg);
    }
}

pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (t0, tf) = cfg.window();
    ensure!(tf > t0, "empty time window [{t0}, {tf}]");
    let mut outcome = Outcome {
        ok: true,
        ..Outcome::default()
    };
    match cmd {
        Command::Run => run(cfg, out, &mut outcome)?,
        Command::ConvergeLocal => converge_local(cfg, out, &mut outcome)?,
        Command::ConvergeGlobal => converge_global(cfg, out, &mut outcome)?,
        Command::ErrorControl => error_control(cfg, out, &mut outcome)?,
        Command::SpaceStudy => space_study(cfg, out, &mut outcome)?,
    }
    let path = out.join(MANIFEST_FILE);
    atomic_write(&path, RunManifest::new(cmd.name(), cfg).render().as_bytes())?;
    outcome.files.push(path);
    Ok(outcome)
}

type Cache<T> = Mutex<HashMap<String, Arc<T>>>;

fn cached<T>(cache: &'static OnceLock<Cache<T>>, key: String, make: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
    let map = cache.get_or_init(Default::default);
    if let Some(v) = map.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(make()?);
    map.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

fn bz_key(cfg: &RunConfig, n: usize, order: SpatialOrder) -> String {
    format!("{n}|{}|{:e}|{:e}", order.as_int(), cfg.seed_width, cfg.spin_up)
}

/// Problem described by the configuration; BZ spin-ups are computed once
/// per process.
pub fn problem_spec(cfg: &RunConfig) -> Result<Arc<ProblemSpec>> {
    problem_on_grid(cfg, cfg.grid_n, cfg.spatial_order)
}

fn problem_on_grid(cfg: &RunConfig, n: usize, order: SpatialOrder) -> Result<Arc<ProblemSpec>> {
    static CACHE: OnceLock<Cache<ProblemSpec>> = OnceLock::new();
    let window = cfg.window();
    match cfg.problem {
        ProblemKind::Bz => {
            let spec = cached(&CACHE, bz_key(cfg, n, order), || Ok(bz_problem(n, order, window, &cfg.bz_setup())?))?;
            Ok(Arc::new(ProblemSpec {
                window,
                ..(*spec).clone()
            }))
        }
        ProblemKind::Linear2x2 => Ok(Arc::new(ProblemSpec {
            window,
            ..ProblemSpec::linear2x2()
        })),
        ProblemKind::Dahlquist => Ok(Arc::new(ProblemSpec {
            window,
            ..ProblemSpec::dahlquist(cfg.lambda)
        })),
    }
}

/// State at time `t`: the `init` CSV when given (taken to hold the state at
/// the window start), else the problem's initial state carried to `t`.
pub fn state_at(cfg: &RunConfig, spec: &ProblemSpec, t: f64) -> Result<Vec<f64>> {
    static CACHE: OnceLock<Cache<Vec<f64>>> = OnceLock::new();
    if let Some(path) = &cfg.init {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let (_, u, m) = read_state_csv(&text)?;
        ensure!(m == spec.species() && u.len() == spec.model.dim(), "initial state in {path} does not fit the problem");
        return Ok(u);
    }
    if t == 0.0 {
        return Ok(spec.initial_state.clone());
    }
    if let Some(u) = spec.exact(t, &spec.initial_state) {
        return Ok(u);
    }
    let n = spec.grid().map_or(0, |g| g.n);
    let order = match &spec.model {
        Model::Bz(b) => b.laplacian.order.as_int(),
        Model::Linear(_) => 0,
    };
    let key = format!("{n}|{order}|{:e}|{:e}|{:e}|{:e}", cfg.seed_width, cfg.spin_up, t, cfg.ref_tol);
    let u = cached(&CACHE, key, || {
        let mut out = reference_solve(&spec.model, &cfg.reference(), 0.0, &[t], &spec.initial_state)?;
        Ok(out.pop().context("reference produced no checkpoint")?.1)
    })?;
    Ok((*u).clone())
}

/// Exact or reference solution from `(t0, u0)` at each of `times`.
pub fn truth(cfg: &RunConfig, spec: &ProblemSpec, t0: f64, u0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = spec.exact(0.0, u0) {
        debug_assert_eq!(first.len(), u0.len());
        return Ok(times.iter().map(|t| spec.exact(t - t0, u0).unwrap()).collect());
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    sorted.dedup();
    let out = reference_solve(&spec.model, &cfg.reference(), t0, &sorted, u0)?;
    Ok(times
        .iter()
        .map(|t| out.iter().find(|(s, _)| s == t).map(|(_, u)| u.clone()).unwrap())
        .collect())
}

fn method(cfg: &RunConfig) -> Method {
    Method::new(cfg.splitting(), cfg.subsolver())
}

/// Errors below this are treated as the accuracy floor of the comparison.
pub fn error_floor(cfg: &RunConfig) -> f64 {
    match cfg.problem {
        ProblemKind::Bz => noise_floor(cfg.ref_tol),
        _ => noise_floor(cfg.sub_tol),
    }
}

fn clock() -> u64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_nanos() as u64
}

fn write_table(t: &Table, out: &Path, name: &str, outcome: &mut Outcome) -> Result<()> {
    let path = out.join(name);
    t.write(&path)?;
    outcome.files.push(path);
    Ok(())
}

fn write_bytes(bytes: &[u8], out: &Path, name: &str, outcome: &mut Outcome) -> Result<()> {
    let path = out.join(name);
    atomic_write(&path, bytes)?;
    outcome.files.push(path);
    Ok(())
}

fn points_of(spec: &ProblemSpec) -> Vec<f64> {
    match spec.grid() {
        Some(g) => g.points(),
        None => vec![0.0],
    }
}

fn run(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let (t0, tf) = cfg.window();
    let u0 = state_at(cfg, &spec, t0)?;
    let m = spec.species();
    let method = method(cfg);
    let points = if cfg.hybrid {
        let Model::Bz(bz) = &spec.model else {
            bail!("hybrid mode needs a spatial problem");
        };
        let low = bz.with_order(SpatialOrder::Second);
        let high = bz.with_order(SpatialOrder::Fourth);
        let split = Splitting::from_operator(method.scheme, &low, method.sub)?;
        let dcs = DcsIntegrator::new(method.tab, split, &low).with_quadrature_rhs(&high, &low)?;
        dcs.march(&u0, t0, tf, cfg.dt0_or(1e-4), cfg.k_max())?
    } else {
        let dcs = method.integrator(&spec.model)?;
        let mut ai = AdaptiveIntegrator::new(&dcs, cfg.controller(m))?;
        if cfg.timing {
            ai = ai.with_clock(clock);
        }
        let dt0 = cfg.dt0_or(if cfg.problem == ProblemKind::Bz { 1e-5 } else { 1e-2 });
        let traj = ai.integrate(t0, tf, &u0, dt0)?;
        let k_max = cfg.k_max();
        let mut steps = Table::new("steps", [step_report_header(k_max), vec!["wasted_sweeps".into()]].concat());
        for r in &traj.reports {
            steps.push([step_report_fields(r, k_max), vec![r.wasted_sweeps.to_string()]].concat());
        }
        write_table(&steps, out, "steps.csv", outcome)?;
        traj.points
    };
    write_bytes(trajectory_csv(&points)?.as_bytes(), out, "trajectory.csv", outcome)?;
    let (t_end, u_end) = points.last().context("empty trajectory")?;
    let x = points_of(&spec);
    write_bytes(state_csv(&x, u_end, m)?.as_bytes(), out, "final_state.csv", outcome)?;
    write_bytes(&encode_dump(x.len(), m, *t_end, u_end)?, out, "final_state.dcs1", outcome)?;
    Ok(())
}

fn convergence_table(rows: &[ConvergenceRow], floor: f64, outcome: &mut Outcome) -> Table {
    let slopes: HashMap<usize, Option<f64>> = slopes_by_k(rows, floor).into_iter().collect();
    let header = ["dt", "k", "error", "estimate", "zeta", "slope", "status"].map(String::from).to_vec();
    let mut t = Table::new("convergence", header);
    for r in rows {
        let status = match &r.error {
            Ok(_) => "ok".to_string(),
            Err(e) => {
                outcome.fail(format!("dt={} k={}: {e}", num(r.dt), r.k));
                format!("failed: {}", e.replace([',', '\n'], ";"))
            }
        };
        t.push(vec![
            num(r.dt),
            r.k.to_string(),
            opt(r.ok()),
            opt(r.estimate),
            opt(r.zeta),
            opt(slopes.get(&r.k).copied().flatten()),
            status,
        ]);
    }
    t
}

fn sweep_dt0(cfg: &RunConfig) -> f64 {
    cfg.dt0_or(if cfg.problem == ProblemKind::Bz { 1e-3 } else { 0.1 })
}

fn converge_local(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let t0 = cfg.window().0;
    let u0 = state_at(cfg, &spec, t0)?;
    let dts = dyadic(sweep_dt0(cfg), cfg.dt_count);
    let times: Vec<f64> = dts.iter().map(|dt| t0 + dt).collect();
    let exact = truth(cfg, &spec, t0, &u0, &times)?;
    let norm = cfg.error_norm(spec.species());
    let rows = local_study(&spec.model, &method(cfg), norm, t0, &u0, &dts, &exact, cfg.k_max());
    let t = convergence_table(&rows, error_floor(cfg), outcome);
    write_table(&t, out, "local.csv", outcome)
}

fn converge_global(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let window = cfg.window();
    let u0 = state_at(cfg, &spec, window.0)?;
    let dts = dyadic(sweep_dt0(cfg), cfg.dt_count);
    let exact = truth(cfg, &spec, window.0, &u0, &[window.1])?.remove(0);
    let norm = cfg.error_norm(spec.species());
    let rows = global_study(&spec.model, &method(cfg), norm, window, &u0, &dts, &exact, cfg.k_max())?;
    let t = convergence_table(&rows, error_floor(cfg), outcome);
    write_table(&t, out, "global.csv", outcome)
}

fn error_control(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let spec = problem_spec(cfg)?;
    let window = cfg.window();
    let u0 = state_at(cfg, &spec, window.0)?;
    let base = cfg.controller(spec.species());
    let dt0 = cfg.dt0_or(if cfg.problem == ProblemKind::Bz { 1e-5 } else { 1e-2 });
    let reference = cfg.reference();
    let (rows, summaries) = error_control_study(&spec.model, &method(cfg), &base, window, &u0, dt0, &cfg.rules, &cfg.etas, Some(&reference));
    let k_max = cfg.k_max();
    let header = [
        vec!["rule".to_string(), "eta".into()],
        step_report_header(k_max),
        vec!["wasted_sweeps".into(), "true_error".into()],
    ]
    .concat();
    let mut steps = Table::new("error-control-steps", header);
    for r in &rows {
        steps.push(
            [
                vec![rule_name(r.rule).to_string(), num(r.eta)],
                step_report_fields(&r.report, k_max),
                vec![r.report.wasted_sweeps.to_string(), opt(r.true_error)],
            ]
            .concat(),
        );
    }
    let header = ["rule", "eta", "accepted", "rejected", "mean_dt", "mean_k", "status"].map(String::from).to_vec();
    let mut summary = Table::new("error-control-summary", header);
    for s in &summaries {
        let status = match &s.error {
            None => "ok".to_string(),
            Some(e) => {
                outcome.fail(format!("rule={} eta={}: {e}", rule_name(s.rule), num(s.eta)));
                format!("failed: {}", e.replace([',', '\n'], ";"))
            }
        };
        summary.push(vec![
            rule_name(s.rule).to_string(),
            num(s.eta),
            s.accepted.to_string(),
            s.rejected.to_string(),
            num(s.mean_dt),
            num(s.mean_k),
            status,
        ]);
    }
    write_table(&steps, out, "steps.csv", outcome)?;
    write_table(&summary, out, "summary.csv", outcome)
}

/// One coarse-grid cell of the resolution study.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRow {
    pub order: SpatialOrder,
    pub n: usize,
    pub dt: f64,
    pub k: usize,
    pub error: std::result::Result<f64, String>,
}

/// Error of the DC–S step on nested coarse grids against a fourth-order
/// reference on the fine grid, restricted by subsampling.
pub fn resolution_study(cfg: &RunConfig) -> Result<Vec<ResolutionRow>> {
    let fine_n = cfg.space_fine_n;
    let fine = problem_on_grid(cfg, fine_n, SpatialOrder::Fourth)?;
    let t0 = cfg.window().0;
    let u0 = state_at(cfg, &fine, t0)?;
    let dts = dyadic(sweep_dt0(cfg), cfg.dt_count);
    let times: Vec<f64> = dts.iter().map(|dt| t0 + dt).collect();
    let exact = truth(cfg, &fine, t0, &u0, &times)?;
    let m = fine.species();
    let norm = cfg.error_norm(m);
    let method = method(cfg);
    let k_max = cfg.k_max();
    let mut cells = Vec::new();
    for order in [SpatialOrder::Second, SpatialOrder::Fourth] {
        for &n in &cfg.space_ns {
            for (i, &dt) in dts.iter().enumerate() {
                cells.push((order, n, i, dt));
            }
        }
    }
    let mut rows: Vec<ResolutionRow> = cells
        .par_iter()
        .flat_map_iter(|&(order, n, i, dt)| {
            let cell = || -> Result<Vec<f64>> {
                let coarse = BzProblem::new(BzParams::default(), Grid1D::unit(n)?, order)?;
                let start = restrict(&u0, fine_n, n, m)?;
                let target = restrict(&exact[i], fine_n, n, m)?;
                let dcs = method.integrator(&coarse as &dyn RhsOperator)?;
                let states = dcs.sweeps(&start, t0, dt, k_max)?;
                Ok(states.iter().map(|s| norm.distance(s.endpoint(), &target, &target)).collect())
            };
            let errs = cell().map_err(|e| e.to_string());
            (0..=k_max)
                .map(move |k| ResolutionRow {
                    order,
                    n,
                    dt,
                    k,
                    error: errs.as_ref().map(|v| v[k]).map_err(Clone::clone),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    rows.sort_by(|a, b| {
        a.order
            .as_int()
            .cmp(&b.order.as_int())
            .then(a.n.cmp(&b.n))
            .then(b.dt.total_cmp(&a.dt))
            .then(a.k.cmp(&b.k))
    });
    Ok(rows)
}

fn space_study(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let mut ns = cfg.space_ns.clone();
    ns.push(cfg.space_fine_n);
    ns.sort_unstable();
    ns.dedup();
    let header = ["order", "n", "error", "slope"].map(String::from).to_vec();
    let mut lap = Table::new("laplacian", header);
    for order in [SpatialOrder::Second, SpatialOrder::Fourth] {
        let (rows, slope) = laplacian_study(order, &ns)?;
        for (n, e) in rows {
            lap.push(vec![order.as_int().to_string(), n.to_string(), num(e), opt(slope)]);
        }
    }
    write_table(&lap, out, "laplacian.csv", outcome)?;
    if cfg.problem != ProblemKind::Bz {
        return Ok(());
    }

    let rows = resolution_study(cfg)?;
    let k_max = cfg.k_max();
    let header = ["order", "n", "dt", "k", "error", "slope_n", "status"].map(String::from).to_vec();
    let mut res = Table::new("resolution", header);
    let finest_dt = rows.iter().map(|r| r.dt).fold(f64::INFINITY, f64::min);
    for r in &rows {
        // spatial slope over n at the finest dt and the last sweep
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|s| s.order == r.order && s.dt == finest_dt && s.k == k_max)
            .filter_map(|s| s.error.as_ref().ok().map(|e| (1.0 / (s.n - 1) as f64, *e)))
            .collect();
        let slope = fit_slope(&pts, 0.0);
        let status = match &r.error {
            Ok(_) => "ok".to_string(),
            Err(e) => {
                outcome.fail(format!("order={} n={} dt={}: {e}", r.order.as_int(), r.n, num(r.dt)));
                format!("failed: {}", e.replace([',', '\n'], ";"))
            }
        };
        res.push(vec![
            r.order.as_int().to_string(),
            r.n.to_string(),
            num(r.dt),
            r.k.to_string(),
            opt(r.error.as_ref().ok().copied()),
            opt(slope),
            status,
        ]);
    }
    write_table(&res, out, "resolution.csv", outcome)?;

    let spec = problem_on_grid(cfg, cfg.grid_n, SpatialOrder::Second)?;
    let Model::Bz(bz) = &spec.model else { unreachable!() };
    let t0 = cfg.window().0;
    let u0 = state_at(cfg, &spec, t0)?;
    let low = bz.with_order(SpatialOrder::Second);
    let high = bz.with_order(SpatialOrder::Fourth);
    let mut hy = Table::new("hybrid", ["k", "gap", "status"].map(String::from).to_vec());
    let dt = cfg.dt0_or(1e-4);
    match hybrid_gap(&low, &high, &method(cfg), cfg.error_norm(3), t0, &u0, dt, k_max) {
        Ok(gaps) => {
            for (k, g) in gaps.iter().enumerate() {
                hy.push(vec![k.to_string(), num(*g), "ok".into()]);
            }
        }
        Err(e) => {
            outcome.fail(format!("hybrid: {e}"));
            hy.push(vec![String::new(), String::new(), format!("failed: {}", e.to_string().replace([',', '\n'], ";"))]);
        }
    }
    write_table(&hy, out, "hybrid.csv", outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_csv;

    fn scratch(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("dcs-cmd-{}-{name}", std::process::id()));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    fn linear() -> RunConfig {
        RunConfig {
            problem: ProblemKind::Linear2x2,
            sub_tol: 1e-12,
            dt_count: 4,
            ..RunConfig::default()
        }
    }

    #[test]
    fn command_names_round_trip() {
        for c in [Command::Run, Command::ConvergeLocal, Command::ConvergeGlobal, Command::ErrorControl, Command::SpaceStudy] {
            assert_eq!(Command::parse(c.name()).unwrap(), c);
        }
        assert!(Command::parse("plot").is_err());
    }

    #[test]
    fn local_convergence_writes_table_and_manifest() {
        let d = scratch("local");
        let o = execute(Command::ConvergeLocal, &linear(), &d).unwrap();
        assert!(o.ok, "{:?}", o.failures);
        let p = parse_csv(&std::fs::read_to_string(d.join("local.csv")).unwrap()).unwrap();
        assert_eq!(p.kind, "convergence");
        assert_eq!(p.rows.len(), 4 * 4);
        assert!(p.rows.iter().all(|r| r[6] == "ok" && !r[5].is_empty()));
        let m = RunManifest::parse(&std::fs::read_to_string(d.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.command, "converge-local");
        assert_eq!(m.config, linear());
        std::fs::remove_dir_all(d).unwrap();
    }

    #[test]
    fn single_step_size_leaves_slope_empty() {
        let d = scratch("single");
        let cfg = RunConfig {
            dt_count: 1,
            ..linear()
        };
        execute(Command::ConvergeLocal, &cfg, &d).unwrap();
        let p = parse_csv(&std::fs::read_to_string(d.join("local.csv")).unwrap()).unwrap();
        assert!(p.rows.iter().all(|r| r[5].is_empty()));
        std::fs::remove_dir_all(d).unwrap();
    }

    #[test]
    fn empty_window_writes_nothing() {
        let d = scratch("empty");
        let cfg = RunConfig {
            window: Some((0.3, 0.3)),
            ..linear()
        };
        assert!(execute(Command::ConvergeGlobal, &cfg, &d).is_err());
        assert!(!d.exists());
    }

    #[test]
    fn reruns_are_identical() {
        let d1 = scratch("rerun1");
        let d2 = scratch("rerun2");
        let cfg = RunConfig {
            etas: vec![1e-6],
            ..linear()
        };
        for d in [&d1, &d2] {
            assert!(execute(Command::ErrorControl, &cfg, d).unwrap().ok);
            assert!(execute(Command::Run, &cfg, d).unwrap().ok);
        }
        for f in ["steps.csv", "summary.csv", "trajectory.csv", "final_state.csv", "final_state.dcs1"] {
            assert_eq!(std::fs::read(d1.join(f)).unwrap(), std::fs::read(d2.join(f)).unwrap(), "{f}");
        }
        std::fs::remove_dir_all(d1).unwrap();
        std::fs::remove_dir_all(d2).unwrap();
    }

    #[test]
    fn run_lands_on_window_end() {
        let d = scratch("run");
        let cfg = RunConfig {
            problem: ProblemKind::Dahlquist,
            eta: 1e-8,
            ..linear()
        };
        execute(Command::Run, &cfg, &d).unwrap();
        let (n, m, t, u) = crate::io::decode_dump(&std::fs::read(d.join("final_state.dcs1")).unwrap()).unwrap();
        assert_eq!((n, m, t), (1, 1, 1.0));
        assert!((u[0] - (-1.0f64).exp()).abs() < 1e-6);
        std::fs::remove_dir_all(d).unwrap();
    }

    #[test]
    fn init_file_must_fit() {
        let d = scratch("init");
        std::fs::create_dir_all(&d).unwrap();
        let p = d.join("init.csv");
        std::fs::write(&p, state_csv(&[0.0, 1.0], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap()).unwrap();
        let cfg = RunConfig {
            init: Some(p.to_string_lossy().into()),
            ..linear()
        };
        let spec = problem_spec(&cfg).unwrap();
        assert!(state_at(&cfg, &spec, 0.0).is_err());
        std::fs::remove_dir_all(d).unwrap();
    }

    #[test]
    fn linear_truth_is_the_exact_flow() {
        let cfg = linear();
        let spec = problem_spec(&cfg).unwrap();
        let u = truth(&cfg, &spec, 0.25, &[1.0, 0.0], &[0.75, 0.5]).unwrap();
        assert!((u[0][0] - 0.5f64.cosh()).abs() < 1e-15);
        assert!((u[1][1] - 0.25f64.sinh()).abs() < 1e-15);
    }
}
