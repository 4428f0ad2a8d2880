//! Sub-flow propagators for the split parts of a [`RhsOperator`]: a pointwise
//! implicit RadauIIA integrator for the reaction and an explicit embedded
//! Runge-Kutta pair for the diffusion.

pub mod explicit;
pub mod radau;

use alloc::vec::Vec;

use crate::linalg::BandMatrix;
use crate::spatial::RhsOperator;
use crate::{Error, Result};

pub use explicit::{dopri5, Dopri5Settings};
pub use radau::{Radau, RadauSettings, RadauStats, StiffSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_internal_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for SubsolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-5,
            atol: 1e-5,
            max_internal_steps: 100_000,
            newton_tol: 0.03,
            newton_max_iters: 7,
        }
    }
}

impl SubsolverConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.radau().validate()
    }

    fn radau(&self) -> RadauSettings {
        RadauSettings {
            rtol: self.rtol,
            atol: self.atol,
            newton_tol: self.newton_tol,
            newton_max_iters: self.newton_max_iters,
            max_steps: self.max_internal_steps,
        }
    }
}

/// A sub-flow `u(t0) -> u(t0 + dt)`.
pub trait Propagator: Sync {
    fn advance(&self, u0: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>>;
}

impl<F> Propagator for F
where
    F: Fn(&[f64], f64, f64) -> Result<Vec<f64>> + Sync,
{
    fn advance(&self, u0: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>> {
        self(u0, t0, dt)
    }
}

fn check_len(op: &dyn RhsOperator, u: &[f64]) -> Result<()> {
    if u.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: u.len(),
        });
    }
    Ok(())
}

/// The reaction at one grid point as a dense stiff system.
struct PointReaction<'a> {
    op: &'a dyn RhsOperator,
}

impl StiffSystem for PointReaction<'_> {
    fn dim(&self) -> usize {
        self.op.species()
    }

    fn half_bandwidth(&self) -> usize {
        self.op.species() - 1
    }

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self.op.reaction_point(t, y, out);
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut BandMatrix) {
        let m = self.op.species();
        let mut dense = alloc::vec![0.0; m * m];
        self.op.reaction_point_jacobian(t, y, &mut dense);
        for i in 0..m {
            for j in 0..m {
                jac.set(i, j, dense[i * m + j]);
            }
        }
    }
}

/// Integrates the reaction independently at every grid point.
#[derive(Clone, Copy)]
pub struct ReactionPropagator<'a> {
    op: &'a dyn RhsOperator,
    cfg: SubsolverConfig,
}

impl<'a> ReactionPropagator<'a> {
    pub fn new(op: &'a dyn RhsOperator, cfg: SubsolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { op, cfg })
    }

    fn advance_point(&self, y: &mut [f64], t0: f64, dt: f64) -> Result<()> {
        let sys = PointReaction { op: self.op };
        // every call starts from h = dt so a point's result never depends on
        // what was integrated before it
        Radau::new(&sys, self.cfg.radau()).integrate(t0, t0 + dt, y, dt)?;
        Ok(())
    }
}

impl Propagator for ReactionPropagator<'_> {
    fn advance(&self, u0: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>> {
        check_len(self.op, u0)?;
        let mut u = u0.to_vec();
        if dt == 0.0 {
            return Ok(u);
        }
        let m = self.op.species();
        #[cfg(feature = "parallel")]
        let results: Vec<Result<()>> = {
            use rayon::prelude::*;
            u.par_chunks_mut(m).map(|y| self.advance_point(y, t0, dt)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<()>> = u.chunks_mut(m).map(|y| self.advance_point(y, t0, dt)).collect();
        for r in results {
            r?;
        }
        Ok(u)
    }
}

/// Integrates the diffusion part with [`dopri5`], capping internal steps at
/// the operator's explicit stability limit.
#[derive(Clone, Copy)]
pub struct DiffusionPropagator<'a> {
    op: &'a dyn RhsOperator,
    cfg: SubsolverConfig,
}

impl<'a> DiffusionPropagator<'a> {
    pub fn new(op: &'a dyn RhsOperator, cfg: SubsolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { op, cfg })
    }
}

impl Propagator for DiffusionPropagator<'_> {
    fn advance(&self, u0: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>> {
        check_len(self.op, u0)?;
        let mut u = u0.to_vec();
        if dt == 0.0 {
            return Ok(u);
        }
        let set = Dopri5Settings {
            rtol: self.cfg.rtol,
            atol: self.cfg.atol,
            max_steps: self.cfg.max_internal_steps,
            h_max: self.op.diffusion_step_limit(),
        };
        dopri5(|t, y, out| self.op.diffusion(t, y, out), t0, t0 + dt, &mut u, dt, &set)?;
        Ok(u)
    }
}
