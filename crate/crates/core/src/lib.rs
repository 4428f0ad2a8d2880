//! Deferred-correction operator splitting (DC-S) for stiff semi-discrete PDEs.
//!
//! Low-order Lie or Strang splitting sweeps provide provisional solutions at the
//! nodes of the three-stage RadauIIA collocation formula. Each correction sweep
//! evaluates the fully coupled right-hand side at those nodes, forms the
//! collocation quadrature and re-applies the splitting to propagate the defect,
//! which raises the local order by one per sweep up to the order of the
//! quadrature. The [`controller`] module turns the per-sweep contraction
//! estimates into error estimates and step-size selection.
//!
//! The crate is `no_std` (with `alloc`). IO, file formats and the command-line
//! front end live in the `dcs-cli` crate.
//!
//! State vectors are stored point-major: for a grid of `n` points and `m`
//! species, component `s` at point `j` lives at index `j * m + s`.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod controller;
pub mod dcs;
mod error;
pub mod linalg;
pub(crate) mod math;
pub mod problems;
pub mod quadrature;
pub mod reference;
pub mod spatial;
pub mod splitting;
pub mod subsolvers;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::controller::{
        AdaptiveIntegrator, ControllerConfig, ErrorNorm, StepReport, StepRule, SweepRecord,
    };
    pub use crate::dcs::{DcsIntegrator, DcsState};
    pub use crate::problems::{BzParams, ProblemSpec};
    pub use crate::quadrature::{radau_iia_3, ButcherTableau, StageSet};
    pub use crate::reference::{reference_solve, ReferenceConfig};
    pub use crate::spatial::{Grid1D, Laplacian, RhsOperator};
    pub use crate::splitting::{Ordering, Splitting, SplittingKind, SplittingScheme};
    pub use crate::subsolvers::{DiffusionPropagator, Propagator, ReactionPropagator, SubsolverConfig};
    pub use crate::{Error, Result};
}
