//! The deferred-correction splitting iteration on the RadauIIA nodes.
//!
//! The initial sweep chains splitting steps across the nodes. Each correction
//! sweep forms the quadrature prediction `û_i = ũ_{i-1} + I_{i-1}^{i}(Ũ^k)`
//! from the cached right-hand sides and then propagates the node-to-node
//! defect with two splitting calls:
//! `ũ^{k+1}_i = û_i + S(ũ^{k+1}_{i-1}) - S(ũ^k_{i-1})`.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::quadrature::{ButcherTableau, StageSet, STAGES};
use crate::spatial::RhsOperator;
use crate::splitting::Splitting;
use crate::{Error, Result};

/// Node values after `k` correction sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsState {
    pub k: usize,
    pub u0: Vec<f64>,
    /// `ũ^k_i` with the coupled right-hand side cached at every node.
    pub stages: StageSet,
    /// The prediction `û^{k-1}` that produced these nodes (absent for `k = 0`).
    pub u_hat: Option<Vec<Vec<f64>>>,
}

impl DcsState {
    pub fn t0(&self) -> f64 {
        self.stages.t0
    }

    pub fn dt(&self) -> f64 {
        self.stages.dt
    }

    /// `ũ^k_s`, the approximation at `t0 + dt`.
    pub fn endpoint(&self) -> &[f64] {
        self.stages.last()
    }
}

/// Runs sweeps for one splitting and one right-hand side.
pub struct DcsIntegrator<'a> {
    tab: ButcherTableau,
    splitting: Splitting<'a>,
    /// Right-hand side cached at the nodes and fed to the quadrature.
    quadrature_rhs: &'a dyn RhsOperator,
    hybrid: bool,
    rhs_evals: Cell<usize>,
    split_steps: Cell<usize>,
}

impl<'a> DcsIntegrator<'a> {
    pub fn new(tab: ButcherTableau, splitting: Splitting<'a>, rhs: &'a dyn RhsOperator) -> Self {
        Self {
            tab,
            splitting,
            quadrature_rhs: rhs,
            hybrid: false,
            rhs_evals: Cell::new(0),
            split_steps: Cell::new(0),
        }
    }

    /// Uses `high` in the quadrature while the splitting keeps its own
    /// (typically lower order) operators.
    pub fn with_quadrature_rhs(mut self, high: &'a dyn RhsOperator, low: &dyn RhsOperator) -> Result<Self> {
        if high.dim() != low.dim() || high.species() != low.species() {
            return Err(Error::DimensionMismatch {
                expected: low.dim(),
                found: high.dim(),
            });
        }
        self.hybrid = !core::ptr::addr_eq(high as *const dyn RhsOperator, low as *const dyn RhsOperator);
        self.quadrature_rhs = high;
        Ok(self)
    }

    pub fn is_hybrid(&self) -> bool {
        self.hybrid
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tab
    }

    pub fn splitting(&self) -> &Splitting<'a> {
        &self.splitting
    }

    /// Coupled right-hand side evaluations since construction.
    pub fn rhs_evals(&self) -> usize {
        self.rhs_evals.get()
    }

    /// Splitting steps since construction.
    pub fn split_steps(&self) -> usize {
        self.split_steps.get()
    }

    fn eval(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.quadrature_rhs.apply(t, u, &mut out);
        self.rhs_evals.set(self.rhs_evals.get() + 1);
        out
    }

    fn split(&self, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
        self.split_steps.set(self.split_steps.get() + 1);
        self.splitting.step(u, t, dt)
    }

    fn node_time(&self, t0: f64, dt: f64, i: usize) -> f64 {
        t0 + self.tab.c[i] * dt
    }

    /// Builds a state from given node values, filling the cache.
    pub fn seeded(&self, u0: &[f64], t0: f64, dt: f64, nodes: Vec<Vec<f64>>, k: usize) -> Result<DcsState> {
        if nodes.len() != STAGES {
            return Err(Error::DimensionMismatch {
                expected: STAGES,
                found: nodes.len(),
            });
        }
        for v in &nodes {
            if v.len() != u0.len() {
                return Err(Error::DimensionMismatch {
                    expected: u0.len(),
                    found: v.len(),
                });
            }
        }
        let rhs = nodes.iter().enumerate().map(|(i, u)| self.eval(self.node_time(t0, dt, i), u)).collect();
        Ok(DcsState {
            k,
            u0: u0.to_vec(),
            stages: StageSet { t0, dt, nodes, rhs },
            u_hat: None,
        })
    }

    /// `ũ^0_i = S^{(c_i - c_{i-1}) dt} ũ^0_{i-1}` with `ũ^0_0 = u0`.
    pub fn initial_sweep(&self, u0: &[f64], t0: f64, dt: f64) -> Result<DcsState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig("step must be positive"));
        }
        if u0.len() != self.quadrature_rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.quadrature_rhs.dim(),
                found: u0.len(),
            });
        }
        let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(STAGES);
        for i in 0..STAGES {
            let prev: &[f64] = if i == 0 { u0 } else { &nodes[i - 1] };
            let t_prev = if i == 0 { t0 } else { self.node_time(t0, dt, i - 1) };
            let next = self.split(prev, t_prev, self.tab.node_fraction(i) * dt)?;
            nodes.push(next);
        }
        self.seeded(u0, t0, dt, nodes, 0)
    }

    /// `û_i = ũ_{i-1} + I_{i-1}^{i}(Ũ)` with `ũ_0 = u0`.
    pub fn quadrature_predict(&self, state: &DcsState) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(STAGES);
        for i in 0..STAGES {
            let mut u = self.tab.stage_increment(&state.stages, i)?;
            let prev: &[f64] = if i == 0 { &state.u0 } else { &state.stages.nodes[i - 1] };
            for (x, p) in u.iter_mut().zip(prev) {
                *x += p;
            }
            out.push(u);
        }
        Ok(out)
    }

    /// One correction: `2 (s - 1)` splitting steps and `s` right-hand side
    /// evaluations.
    pub fn correction_sweep(&self, state: &DcsState) -> Result<DcsState> {
        let (t0, dt) = (state.t0(), state.dt());
        let u_hat = self.quadrature_predict(state)?;
        let old = &state.stages;
        let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(STAGES);
        let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(STAGES);
        // node 1: the defect term vanishes, no splitting call
        nodes.push(u_hat[0].clone());
        rhs.push(self.eval(self.node_time(t0, dt, 0), &nodes[0]));
        for i in 1..STAGES {
            let t_prev = self.node_time(t0, dt, i - 1);
            let h = self.tab.node_fraction(i) * dt;
            let new_branch = self.split(&nodes[i - 1], t_prev, h)?;
            let old_branch = self.split(&old.nodes[i - 1], t_prev, h)?;
            let mut u = u_hat[i].clone();
            for ((x, n), o) in u.iter_mut().zip(&new_branch).zip(&old_branch) {
                *x += n - o;
            }
            rhs.push(self.eval(self.node_time(t0, dt, i), &u));
            nodes.push(u);
        }
        Ok(DcsState {
            k: state.k + 1,
            u0: state.u0.clone(),
            stages: StageSet { t0, dt, nodes, rhs },
            u_hat: Some(u_hat),
        })
    }

    /// The initial sweep followed by `sweeps` corrections; every state is
    /// returned.
    pub fn sweeps(&self, u0: &[f64], t0: f64, dt: f64, sweeps: usize) -> Result<Vec<DcsState>> {
        let mut out = Vec::with_capacity(sweeps + 1);
        out.push(self.initial_sweep(u0, t0, dt)?);
        for _ in 0..sweeps {
            let next = self.correction_sweep(out.last().unwrap())?;
            out.push(next);
        }
        Ok(out)
    }

    /// Fixed-step march with `sweeps` corrections per step; returns
    /// `(t, u)` after every step. The last step is shortened to land on `tf`.
    pub fn march(&self, u0: &[f64], t0: f64, tf: f64, dt: f64, sweeps: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        if !(tf > t0) {
            return Err(Error::InvalidConfig("empty time window"));
        }
        let steps = libm::ceil((tf - t0) / dt - 1e-9).max(1.0) as usize;
        let mut u = u0.to_vec();
        let mut out = Vec::with_capacity(steps);
        for n in 0..steps {
            let t = t0 + n as f64 * dt;
            let h = if n + 1 == steps { tf - t } else { dt };
            let mut state = self.initial_sweep(&u, t, h)?;
            for _ in 0..sweeps {
                state = self.correction_sweep(&state)?;
            }
            u = state.endpoint().to_vec();
            out.push((if n + 1 == steps { tf } else { t + h }, u.clone()));
        }
        Ok(out)
    }
}
