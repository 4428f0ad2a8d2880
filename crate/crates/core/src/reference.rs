//! Fully coupled reference integration with the adaptive RadauIIA solver and
//! a banded Newton matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::BandMatrix;
use crate::math::{abs, sqrt};
use crate::spatial::RhsOperator;
use crate::subsolvers::{Radau, RadauSettings, RadauStats, StiffSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    #[default]
    AnalyticBanded,
    /// Banded finite differences, perturbing every `2w + 1`-th column at once.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub rtol: f64,
    pub atol: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub max_steps: usize,
    pub jacobian: JacobianMode,
    /// First trial step; the whole first segment when absent.
    pub h0: Option<f64>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            newton_tol: 0.03,
            newton_max_iters: 7,
            max_steps: 1_000_000,
            jacobian: JacobianMode::AnalyticBanded,
            h0: None,
        }
    }
}

impl ReferenceConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    fn settings(&self) -> RadauSettings {
        RadauSettings {
            rtol: self.rtol,
            atol: self.atol,
            newton_tol: self.newton_tol,
            newton_max_iters: self.newton_max_iters,
            max_steps: self.max_steps,
        }
    }
}

struct Coupled<'a> {
    op: &'a dyn RhsOperator,
    mode: JacobianMode,
}

impl StiffSystem for Coupled<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn half_bandwidth(&self) -> usize {
        self.op.half_bandwidth()
    }

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self.op.apply(t, y, out);
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut BandMatrix) {
        match self.mode {
            JacobianMode::AnalyticBanded => self.op.jacobian(t, y, jac),
            JacobianMode::FiniteDifference => fd_jacobian(self.op, t, y, jac),
        }
    }
}

fn fd_jacobian(op: &dyn RhsOperator, t: f64, y: &[f64], jac: &mut BandMatrix) {
    let n = y.len();
    let w = jac.lower_bandwidth().max(jac.upper_bandwidth());
    let stride = 2 * w + 1;
    let mut f0 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    op.apply(t, y, &mut f0);
    let mut yp = y.to_vec();
    let delta: Vec<f64> = y.iter().map(|v| sqrt(f64::EPSILON * abs(*v).max(1e-5))).collect();
    for group in 0..stride.min(n) {
        for j in (group..n).step_by(stride) {
            yp[j] = y[j] + delta[j];
        }
        op.apply(t, &yp, &mut f1);
        for j in (group..n).step_by(stride) {
            yp[j] = y[j];
            for i in j.saturating_sub(w)..=(j + w).min(n - 1) {
                jac.set(i, j, (f1[i] - f0[i]) / delta[j]);
            }
        }
    }
}

/// Integrates `u' = F(u)` from `t0` through the increasing `checkpoints`,
/// landing exactly on each, and returns the state at every checkpoint.
pub fn reference_solve(
    op: &dyn RhsOperator,
    cfg: &ReferenceConfig,
    t0: f64,
    checkpoints: &[f64],
    u0: &[f64],
) -> Result<Vec<(f64, Vec<f64>)>> {
    reference_solve_with_stats(op, cfg, t0, checkpoints, u0).map(|(out, _)| out)
}

pub fn reference_solve_with_stats(
    op: &dyn RhsOperator,
    cfg: &ReferenceConfig,
    t0: f64,
    checkpoints: &[f64],
    u0: &[f64],
) -> Result<(Vec<(f64, Vec<f64>)>, RadauStats)> {
    let set = cfg.settings();
    set.validate()?;
    if u0.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: u0.len(),
        });
    }
    let mut prev = t0;
    for &t in checkpoints {
        if !(t > prev) {
            return Err(Error::InvalidConfig("checkpoints must increase past t0"));
        }
        prev = t;
    }
    let sys = Coupled { op, mode: cfg.jacobian };
    let mut radau = Radau::new(&sys, set);
    let mut y = u0.to_vec();
    let mut t = t0;
    let mut h = cfg.h0.unwrap_or(f64::INFINITY);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &tc in checkpoints {
        h = radau.integrate(t, tc, &mut y, h)?;
        t = tc;
        out.push((t, y.clone()));
    }
    Ok((out, radau.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{BzParams, BzProblem, LinearSplit};
    use crate::spatial::{Grid1D, SpatialOrder};

    #[test]
    fn dahlquist_reference() {
        let op = LinearSplit::dahlquist(-1.0);
        let out = reference_solve(&op, &ReferenceConfig::default(), 0.0, &[0.5, 1.0], &[1.0]).unwrap();
        assert_eq!(out[1].0, 1.0);
        assert!((out[1].1[0] - (-1f64).exp()).abs() <= 1e-10);
    }

    #[test]
    fn linear_2x2_reference() {
        let op = LinearSplit::noncommuting_2x2();
        let out = reference_solve(&op, &ReferenceConfig::default(), 0.0, &[1.0], &[1.0, 0.5]).unwrap();
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        assert!((out[0].1[0] - (c + 0.5 * s)).abs() < 1e-10);
        assert!((out[0].1[1] - (s + 0.5 * c)).abs() < 1e-10);
    }

    #[test]
    fn checkpoints_validated() {
        let op = LinearSplit::dahlquist(-1.0);
        let cfg = ReferenceConfig::default();
        assert!(reference_solve(&op, &cfg, 0.0, &[0.5, 0.5], &[1.0]).is_err());
        assert!(reference_solve(&op, &cfg, 0.0, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        let g = Grid1D::unit(12).unwrap();
        let bz = BzProblem::new(BzParams::default(), g, SpatialOrder::Fourth).unwrap();
        let n = bz.dim();
        let w = bz.half_bandwidth();
        let u: Vec<f64> = (0..n).map(|i| 0.2 + 0.1 * ((i * 5) as f64).sin()).collect();
        let mut a = BandMatrix::zeros(n, w, w);
        let mut f = BandMatrix::zeros(n, w, w);
        bz.jacobian(0.0, &u, &mut a);
        fd_jacobian(&bz, 0.0, &u, &mut f);
        for i in 0..n {
            let row = (0..n).map(|j| a.get(i, j).abs()).fold(0.0, f64::max);
            for j in 0..n {
                let (x, y) = (a.get(i, j), f.get(i, j));
                assert!((x - y).abs() <= 1e-6 * row, "({i},{j}) {x} {y}");
            }
        }
    }

    #[test]
    fn bz_tolerance_self_consistency() {
        let g = Grid1D::unit(41).unwrap();
        let bz = BzProblem::new(BzParams::default(), g, SpatialOrder::Second).unwrap();
        let u0 = bz.seed(0.1);
        let run = |tol: f64, mode| {
            let cfg = ReferenceConfig {
                jacobian: mode,
                ..ReferenceConfig::with_tolerance(tol)
            };
            reference_solve(&bz, &cfg, 0.0, &[0.02], &u0).unwrap().pop().unwrap().1
        };
        let coarse = run(1e-6, JacobianMode::AnalyticBanded);
        let fine = run(5e-7, JacobianMode::AnalyticBanded);
        let fd = run(5e-7, JacobianMode::FiniteDifference);
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = coarse.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff(&coarse, &fine) < 1e-6 * scale.max(1.0) * 100.0);
        assert!(diff(&fine, &fd) < 1e-6 * scale.max(1.0) * 100.0);
    }
}
