//! Convergence, error-control and spatial studies shared by the CLI and the
//! acceptance tests. Every function returns plain rows; serialization lives
//! in [`crate::io`].

use std::f64::consts::PI;

use dcs_core::controller::{estimate_error, AdaptiveIntegrator, ControllerConfig, ErrorNorm, StepRule, SweepRecord};
use dcs_core::dcs::DcsIntegrator;
use dcs_core::quadrature::{radau_iia_3, ButcherTableau};
use dcs_core::reference::{reference_solve, ReferenceConfig};
use dcs_core::spatial::{laplacian, Grid1D, RhsOperator, SpatialOrder};
use dcs_core::splitting::{Splitting, SplittingScheme};
use dcs_core::subsolvers::SubsolverConfig;
use rayon::prelude::*;

use crate::slopes::fit_slope;

/// What a study needs to build integrators.
#[derive(Debug, Clone, Copy)]
pub struct Method {
    pub scheme: SplittingScheme,
    pub sub: SubsolverConfig,
    pub tab: ButcherTableau,
}

impl Method {
    pub fn new(scheme: SplittingScheme, sub: SubsolverConfig) -> Self {
        Self {
            scheme,
            sub,
            tab: radau_iia_3(),
        }
    }

    pub fn integrator<'a>(&self, op: &'a dyn RhsOperator) -> anyhow::Result<DcsIntegrator<'a>> {
        let split = Splitting::from_operator(self.scheme, op, self.sub)?;
        Ok(DcsIntegrator::new(self.tab, split, op))
    }
}

/// One `(Δt, k)` cell of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub k: usize,
    /// `Err(message)` when the cell failed.
    pub error: Result<f64, String>,
    /// `err̃_k` of the local step (local studies only).
    pub estimate: Option<f64>,
    pub zeta: Option<f64>,
}

impl ConvergenceRow {
    pub fn ok(&self) -> Option<f64> {
        self.error.as_ref().ok().copied()
    }
}

fn failed_rows(dt: f64, k_max: usize, e: impl ToString) -> Vec<ConvergenceRow> {
    let msg = e.to_string();
    (0..=k_max)
        .map(|k| ConvergenceRow {
            dt,
            k,
            error: Err(msg.clone()),
            estimate: None,
            zeta: None,
        })
        .collect()
}

fn sort_rows(rows: &mut [ConvergenceRow]) {
    rows.sort_by(|a, b| b.dt.total_cmp(&a.dt).then(a.k.cmp(&b.k)));
}

/// `Δt_0 / 2^i` for `i < count`.
pub fn dyadic(dt0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| dt0 / f64::powi(2.0, i as i32)).collect()
}

/// Error of `ũ^k_s` after one step from `u0` at `t0`, for every `Δt` in
/// `dts` and `k = 0..=k_max`. `exact[i]` is the reference at `t0 + dts[i]`.
#[allow(clippy::too_many_arguments)]
pub fn local_study(
    op: &dyn RhsOperator,
    method: &Method,
    norm: ErrorNorm,
    t0: f64,
    u0: &[f64],
    dts: &[f64],
    exact: &[Vec<f64>],
    k_max: usize,
) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = dts
        .par_iter()
        .zip(exact)
        .flat_map_iter(|(&dt, reference)| local_cell(op, method, norm, t0, u0, dt, reference, k_max))
        .collect();
    sort_rows(&mut rows);
    rows
}

#[allow(clippy::too_many_arguments)]
fn local_cell(
    op: &dyn RhsOperator,
    method: &Method,
    norm: ErrorNorm,
    t0: f64,
    u0: &[f64],
    dt: f64,
    reference: &[f64],
    k_max: usize,
) -> Vec<ConvergenceRow> {
    let run = || -> anyhow::Result<Vec<ConvergenceRow>> {
        let dcs = method.integrator(op)?;
        let states = dcs.sweeps(u0, t0, dt, k_max)?;
        let u0s = states[0].endpoint().to_vec();
        let mut history: Vec<SweepRecord> = Vec::new();
        let mut out = Vec::new();
        for st in &states {
            let rec = estimate_error(&method.tab, norm, &history, st, &u0s).ok();
            if let Some(r) = rec {
                history.push(r);
            }
            out.push(ConvergenceRow {
                dt,
                k: st.k,
                error: Ok(norm.distance(st.endpoint(), reference, reference)),
                estimate: rec.map(|r| r.err_tilde),
                zeta: rec.and_then(|r| r.zeta_tilde),
            });
        }
        Ok(out)
    };
    run().unwrap_or_else(|e| failed_rows(dt, k_max, e))
}

/// Error at the end of `window` after marching with constant `Δt` and `k`
/// corrections per step, for every `Δt` and `k = 0..=k_max`.
#[allow(clippy::too_many_arguments)]
pub fn global_study(
    op: &dyn RhsOperator,
    method: &Method,
    norm: ErrorNorm,
    window: (f64, f64),
    u0: &[f64],
    dts: &[f64],
    exact_final: &[f64],
    k_max: usize,
) -> anyhow::Result<Vec<ConvergenceRow>> {
    if !(window.1 > window.0) {
        anyhow::bail!("empty time window");
    }
    let cells: Vec<(f64, usize)> = dts.iter().flat_map(|&dt| (0..=k_max).map(move |k| (dt, k))).collect();
    let mut rows: Vec<ConvergenceRow> = cells
        .par_iter()
        .map(|&(dt, k)| {
            let error = method
                .integrator(op)
                .and_then(|dcs| Ok(dcs.march(u0, window.0, window.1, dt, k)?))
                .map(|traj| norm.distance(&traj.last().unwrap().1, exact_final, exact_final))
                .map_err(|e| e.to_string());
            ConvergenceRow {
                dt,
                k,
                error,
                estimate: None,
                zeta: None,
            }
        })
        .collect();
    sort_rows(&mut rows);
    Ok(rows)
}

/// Fitted slope per `k`, ignoring rows below `floor` and failed rows.
pub fn slopes_by_k(rows: &[ConvergenceRow], floor: f64) -> Vec<(usize, Option<f64>)> {
    let k_max = rows.iter().map(|r| r.k).max().unwrap_or(0);
    (0..=k_max)
        .map(|k| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.k == k)
                .filter_map(|r| r.ok().map(|e| (r.dt, e)))
                .collect();
            (k, fit_slope(&pts, floor))
        })
        .collect()
}

/// Slope between the two largest step sizes for sweep `k`.
pub fn coarsest_dyad_slope(rows: &[ConvergenceRow], k: usize) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k == k)
        .filter_map(|r| r.ok().map(|e| (r.dt, e)))
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.len() < 2 {
        return None;
    }
    Some((pts[0].1 / pts[1].1).log2() / (pts[0].0 / pts[1].0).log2())
}

/// One attempted adaptive step together with its true local error.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRow {
    pub rule: StepRule,
    pub eta: f64,
    pub report: dcs_core::controller::StepReport,
    /// Distance of the accepted endpoint from the reference started at the
    /// same state (accepted steps only).
    pub true_error: Option<f64>,
}

/// Per `(rule, η)` summary of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSummary {
    pub rule: StepRule,
    pub eta: f64,
    pub accepted: usize,
    pub rejected: usize,
    /// Mean accepted step, excluding a final landing step.
    pub mean_dt: f64,
    pub mean_k: f64,
    pub error: Option<String>,
}

pub fn rule_name(rule: StepRule) -> &'static str {
    match rule {
        StepRule::PerIteration => "k",
        StepRule::MaxIteration => "kmax",
        StepRule::Composite => "composite",
        StepRule::Split => "split",
    }
}

pub fn parse_rule(s: &str) -> Option<StepRule> {
    Some(match s {
        "k" => StepRule::PerIteration,
        "kmax" => StepRule::MaxIteration,
        "composite" => StepRule::Composite,
        "split" => StepRule::Split,
        _ => return None,
    })
}

/// Adaptive runs over `window` for every rule and tolerance. With
/// `reference` set, each accepted step is replayed by the reference solver
/// to measure its true local error.
#[allow(clippy::too_many_arguments)]
pub fn error_control_study(
    op: &dyn RhsOperator,
    method: &Method,
    base: &ControllerConfig,
    window: (f64, f64),
    u0: &[f64],
    dt0: f64,
    rules: &[StepRule],
    etas: &[f64],
    reference: Option<&ReferenceConfig>,
) -> (Vec<ControlRow>, Vec<ControlSummary>) {
    let cells: Vec<(StepRule, f64)> = rules.iter().flat_map(|&r| etas.iter().map(move |&e| (r, e))).collect();
    let results: Vec<(Vec<ControlRow>, ControlSummary)> = cells
        .par_iter()
        .map(|&(rule, eta)| control_cell(op, method, base, window, u0, dt0, rule, eta, reference))
        .collect();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (r, s) in results {
        rows.extend(r);
        summary.push(s);
    }
    (rows, summary)
}

#[allow(clippy::too_many_arguments)]
fn control_cell(
    op: &dyn RhsOperator,
    method: &Method,
    base: &ControllerConfig,
    window: (f64, f64),
    u0: &[f64],
    dt0: f64,
    rule: StepRule,
    eta: f64,
    reference: Option<&ReferenceConfig>,
) -> (Vec<ControlRow>, ControlSummary) {
    let mut summary = ControlSummary {
        rule,
        eta,
        accepted: 0,
        rejected: 0,
        mean_dt: f64::NAN,
        mean_k: f64::NAN,
        error: None,
    };
    let cfg = ControllerConfig { eta, rule, ..*base };
    let traj = method
        .integrator(op)
        .and_then(|dcs| Ok(AdaptiveIntegrator::new(&dcs, cfg)?.integrate(window.0, window.1, u0, dt0)?));
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            summary.error = Some(e.to_string());
            return (Vec::new(), summary);
        }
    };
    // points[i] is the state at the start of the i-th accepted step
    let starts: Vec<&(f64, Vec<f64>)> = traj.points.iter().collect();
    let mut rows = Vec::with_capacity(traj.reports.len());
    let mut accepted_index = 0;
    for rep in &traj.reports {
        let mut true_error = None;
        if rep.accepted {
            if let Some(cfg) = reference {
                let (t, u) = starts[accepted_index];
                let end = &starts[accepted_index + 1].1;
                match reference_solve(op, cfg, *t, &[t + rep.dt], u) {
                    Ok(out) => true_error = Some(base.norm.distance(end, &out[0].1, &out[0].1)),
                    Err(e) => summary.error = Some(e.to_string()),
                }
            }
            accepted_index += 1;
        }
        rows.push(ControlRow {
            rule,
            eta,
            report: rep.clone(),
            true_error,
        });
    }
    let acc: Vec<_> = traj.accepted().collect();
    summary.accepted = acc.len();
    summary.rejected = traj.reports.len() - acc.len();
    // the last step is truncated to land on the window end
    let body = if acc.len() > 1 { &acc[..acc.len() - 1] } else { &acc[..] };
    if !body.is_empty() {
        summary.mean_dt = body.iter().map(|r| r.dt).sum::<f64>() / body.len() as f64;
        summary.mean_k = body.iter().map(|r| r.k_used as f64).sum::<f64>() / body.len() as f64;
    }
    (rows, summary)
}

/// Max-norm error of the discrete Laplacian on `cos(πx)`.
pub fn laplacian_error(order: SpatialOrder, n: usize) -> anyhow::Result<f64> {
    let g = Grid1D::unit(n)?;
    let x = g.points();
    let u: Vec<f64> = x.iter().map(|x| (PI * x).cos()).collect();
    let lu = laplacian(order, &g, 1.0, &u)?;
    Ok(x.iter().zip(&lu).map(|(x, l)| (l + PI * PI * (PI * x).cos()).abs()).fold(0.0, f64::max))
}

/// `(n, error)` for each grid size and the fitted slope in `1/n`.
pub fn laplacian_study(order: SpatialOrder, ns: &[usize]) -> anyhow::Result<(Vec<(usize, f64)>, Option<f64>)> {
    let rows: Vec<(usize, f64)> = ns.iter().map(|&n| Ok((n, laplacian_error(order, n)?))).collect::<anyhow::Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(n, e)| (1.0 / (n - 1) as f64, e)).collect();
    Ok((rows, fit_slope(&pts, 0.0)))
}

/// `‖hybrid − full‖` of `ũ^k_s` for `k = 0..=sweeps` after one step: the
/// hybrid run splits with `low` and sums the quadrature with `high`, the
/// full run uses `high` for both.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_gap(
    low: &dyn RhsOperator,
    high: &dyn RhsOperator,
    method: &Method,
    norm: ErrorNorm,
    t0: f64,
    u0: &[f64],
    dt: f64,
    sweeps: usize,
) -> anyhow::Result<Vec<f64>> {
    let hybrid_split = Splitting::from_operator(method.scheme, low, method.sub)?;
    let hybrid = DcsIntegrator::new(method.tab, hybrid_split, low).with_quadrature_rhs(high, low)?;
    let full = method.integrator(high)?;
    let a = hybrid.sweeps(u0, t0, dt, sweeps)?;
    let b = full.sweeps(u0, t0, dt, sweeps)?;
    Ok(a.iter().zip(&b).map(|(x, y)| norm.distance(x.endpoint(), y.endpoint(), y.endpoint())).collect())
}

/// Restriction of a nested fine-grid state onto a grid with `coarse_n`
/// points by index subsampling.
pub fn restrict(fine: &[f64], fine_n: usize, coarse_n: usize, m: usize) -> anyhow::Result<Vec<f64>> {
    if coarse_n < 2 || (fine_n - 1) % (coarse_n - 1) != 0 {
        anyhow::bail!("grid of {coarse_n} points is not nested in {fine_n}");
    }
    let stride = (fine_n - 1) / (coarse_n - 1);
    Ok((0..coarse_n).flat_map(|j| fine[j * stride * m..(j * stride + 1) * m].iter().copied()).collect())
}
