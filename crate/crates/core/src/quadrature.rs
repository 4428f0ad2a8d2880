//! The three-stage RadauIIA collocation tableau and the node-to-node
//! quadrature sums built from it.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cbrt, sqrt};
use crate::{Error, Result};

/// Number of collocation nodes of the RadauIIA formula used throughout.
pub const STAGES: usize = 3;

/// Butcher coefficients of an `s`-stage collocation method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButcherTableau {
    pub a: [[f64; STAGES]; STAGES],
    pub b: [f64; STAGES],
    pub c: [f64; STAGES],
    /// Global order `p`.
    pub order: usize,
    /// Stage order `q`.
    pub stage_order: usize,
    /// Row differences `a[i][j] - a[i-1][j]`, with row `-1` taken as zero.
    node_weights: [[f64; STAGES]; STAGES],
}

/// RadauIIA with three stages (order 5, stage order 3), built from the closed
/// form coefficients.
pub fn radau_iia_3() -> ButcherTableau {
    let s6 = sqrt(6.0);
    let a = [
        [
            (88.0 - 7.0 * s6) / 360.0,
            (296.0 - 169.0 * s6) / 1800.0,
            (-2.0 + 3.0 * s6) / 225.0,
        ],
        [
            (296.0 + 169.0 * s6) / 1800.0,
            (88.0 + 7.0 * s6) / 360.0,
            (-2.0 - 3.0 * s6) / 225.0,
        ],
        [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
    ];
    let b = a[2];
    let c = [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0];
    let mut node_weights = [[0.0; STAGES]; STAGES];
    for i in 0..STAGES {
        for j in 0..STAGES {
            node_weights[i][j] = if i == 0 { a[0][j] } else { a[i][j] - a[i - 1][j] };
        }
    }
    ButcherTableau {
        a,
        b,
        c,
        order: 5,
        stage_order: 3,
        node_weights,
    }
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        STAGES
    }

    /// `c[i] - c[i-1]` with `c[-1] = 0`: the fraction of the step between
    /// node `i - 1` and node `i`.
    pub fn node_fraction(&self, i: usize) -> f64 {
        if i == 0 {
            self.c[0]
        } else {
            self.c[i] - self.c[i - 1]
        }
    }

    /// Real eigenvalue of `A`, used to scale the embedded error estimate of
    /// the RadauIIA integrators.
    pub(crate) fn gamma0(&self) -> f64 {
        (6.0 + cbrt(81.0) - cbrt(9.0)) / 30.0
    }

    /// Weights of the embedded error estimate for the stage increments.
    pub(crate) fn error_weights(&self) -> [f64; STAGES] {
        let s6 = sqrt(6.0);
        [-(13.0 + 7.0 * s6) / 3.0, (-13.0 + 7.0 * s6) / 3.0, -1.0 / 3.0]
    }

    /// `Δt Σ_j (a_ij − a_{i−1,j}) rhs[j]`, the quadrature from node `i - 1`
    /// (or `t0` for `i = 0`) to node `i`. Nodes are indexed from 0.
    pub fn stage_increment(&self, stages: &StageSet, i: usize) -> Result<Vec<f64>> {
        if i >= STAGES {
            return Err(Error::StageIndex {
                index: i,
                stages: STAGES,
            });
        }
        Ok(weighted_sum(&self.node_weights[i], stages.dt, &stages.rhs))
    }

    /// `Δt Σ_j b_j rhs[j]`, the quadrature over the whole step.
    pub fn full_step_increment(&self, stages: &StageSet) -> Vec<f64> {
        weighted_sum(&self.b, stages.dt, &stages.rhs)
    }
}

fn weighted_sum(w: &[f64; STAGES], dt: f64, rhs: &[Vec<f64>]) -> Vec<f64> {
    let n = rhs[0].len();
    let mut out = vec![0.0; n];
    // j ascending, fixed
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..STAGES {
            s += w[j] * rhs[j][k];
        }
        *o = dt * s;
    }
    out
}

/// Solutions at the collocation nodes together with the right-hand side
/// evaluated at each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSet {
    pub t0: f64,
    pub dt: f64,
    pub nodes: Vec<Vec<f64>>,
    pub rhs: Vec<Vec<f64>>,
}

impl StageSet {
    /// Builds the set and fills the cache with `f(t0 + c_j dt, nodes[j])`.
    pub fn evaluate<F>(tab: &ButcherTableau, t0: f64, dt: f64, nodes: Vec<Vec<f64>>, mut f: F) -> Self
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        assert_eq!(nodes.len(), STAGES);
        let rhs = nodes
            .iter()
            .zip(tab.c.iter())
            .map(|(u, &c)| {
                let mut out = vec![0.0; u.len()];
                f(t0 + c * dt, u, &mut out);
                out
            })
            .collect();
        Self { t0, dt, nodes, rhs }
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn last(&self) -> &[f64] {
        &self.nodes[STAGES - 1]
    }
}
