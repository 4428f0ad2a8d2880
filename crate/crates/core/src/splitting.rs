//! Lie and Strang compositions of the diffusion and reaction sub-flows.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::quadrature::ButcherTableau;
use crate::spatial::RhsOperator;
use crate::subsolvers::{DiffusionPropagator, Propagator, ReactionPropagator, SubsolverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplittingKind {
    #[default]
    Lie,
    Strang,
}

/// Which sub-flow is applied last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    #[default]
    ReactionLast,
    DiffusionLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SplittingScheme {
    pub kind: SplittingKind,
    pub ordering: Ordering,
}

impl SplittingScheme {
    pub fn new(kind: SplittingKind, ordering: Ordering) -> Self {
        Self { kind, ordering }
    }

    pub fn lie() -> Self {
        Self::new(SplittingKind::Lie, Ordering::ReactionLast)
    }

    pub fn strang() -> Self {
        Self::new(SplittingKind::Strang, Ordering::ReactionLast)
    }

    /// Classical order of the composition.
    pub fn order_hat(&self) -> usize {
        match self.kind {
            SplittingKind::Lie => 1,
            SplittingKind::Strang => 2,
        }
    }

    /// Useful number of corrections: `min(p - p̂, q - p̂ + 1)`.
    pub fn k_max(&self, tab: &ButcherTableau) -> usize {
        let ph = self.order_hat();
        (tab.order - ph).min(tab.stage_order + 1 - ph)
    }
}

/// One splitting step built from two propagators.
pub struct Splitting<'a> {
    pub scheme: SplittingScheme,
    diffusion: Box<dyn Propagator + 'a>,
    reaction: Box<dyn Propagator + 'a>,
}

impl<'a> Splitting<'a> {
    pub fn new(
        scheme: SplittingScheme,
        diffusion: impl Propagator + 'a,
        reaction: impl Propagator + 'a,
    ) -> Self {
        Self {
            scheme,
            diffusion: Box::new(diffusion),
            reaction: Box::new(reaction),
        }
    }

    /// Sub-flows of `op` integrated by the default subsolvers.
    pub fn from_operator(scheme: SplittingScheme, op: &'a dyn RhsOperator, cfg: SubsolverConfig) -> Result<Self> {
        Ok(Self::new(
            scheme,
            DiffusionPropagator::new(op, cfg)?,
            ReactionPropagator::new(op, cfg)?,
        ))
    }

    /// `S^dt u0`; the flow named last in the ordering acts last.
    pub fn step(&self, u0: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>> {
        if dt < 0.0 {
            return Err(Error::InvalidConfig("splitting step must be non-negative"));
        }
        if dt == 0.0 {
            return Ok(u0.to_vec());
        }
        let (first, last): (&dyn Propagator, &dyn Propagator) = match self.scheme.ordering {
            Ordering::ReactionLast => (&*self.diffusion, &*self.reaction),
            Ordering::DiffusionLast => (&*self.reaction, &*self.diffusion),
        };
        match self.scheme.kind {
            SplittingKind::Lie => {
                let v = first.advance(u0, t0, dt)?;
                last.advance(&v, t0, dt)
            }
            SplittingKind::Strang => {
                let half = 0.5 * dt;
                let v = last.advance(u0, t0, half)?;
                let w = first.advance(&v, t0, dt)?;
                last.advance(&w, t0 + half, half)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cosh, sinh};
    use crate::problems::LinearSplit;
    use alloc::vec;

    fn linear_flow(a: [[f64; 2]; 2]) -> impl Fn(&[f64], f64, f64) -> Result<Vec<f64>> + Sync {
        move |u: &[f64], _t: f64, dt: f64| {
            let m = nalgebra::Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]) * dt;
            let v = m.exp() * nalgebra::Vector2::new(u[0], u[1]);
            Ok(vec![v[0], v[1]])
        }
    }

    fn exact_2x2(u: &[f64], dt: f64) -> [f64; 2] {
        [cosh(dt) * u[0] + sinh(dt) * u[1], sinh(dt) * u[0] + cosh(dt) * u[1]]
    }

    fn local_error(s: &Splitting, dt: f64) -> f64 {
        let u0 = [1.0, 0.5];
        let v = s.step(&u0, 0.0, dt).unwrap();
        let e = exact_2x2(&u0, dt);
        (v[0] - e[0]).abs().max((v[1] - e[1]).abs())
    }

    fn schemes() -> [SplittingScheme; 4] {
        [
            SplittingScheme::new(SplittingKind::Lie, Ordering::ReactionLast),
            SplittingScheme::new(SplittingKind::Lie, Ordering::DiffusionLast),
            SplittingScheme::new(SplittingKind::Strang, Ordering::ReactionLast),
            SplittingScheme::new(SplittingKind::Strang, Ordering::DiffusionLast),
        ]
    }

    #[test]
    fn k_max_defaults() {
        let tab = crate::quadrature::radau_iia_3();
        assert_eq!(SplittingScheme::lie().k_max(&tab), 3);
        assert_eq!(SplittingScheme::strang().k_max(&tab), 2);
    }

    #[test]
    fn zero_step_is_identity() {
        let op = LinearSplit::noncommuting_2x2();
        for sc in schemes() {
            let s = Splitting::from_operator(sc, &op, SubsolverConfig::default()).unwrap();
            assert_eq!(s.step(&[0.3, -1.0], 0.2, 0.0).unwrap(), vec![0.3, -1.0]);
        }
    }

    #[test]
    fn commuting_flows_are_exact() {
        let a = [[-1.0, 0.0], [0.0, -3.0]];
        let b = [[-0.5, 0.0], [0.0, 2.0]];
        for sc in schemes() {
            let s = Splitting::new(sc, linear_flow(a), linear_flow(b));
            let v = s.step(&[1.0, 1.0], 0.0, 0.3).unwrap();
            assert!((v[0] - (-0.45f64).exp()).abs() < 1e-14);
            assert!((v[1] - (-0.3f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn local_orders_on_noncommuting_system() {
        let a1 = [[0.0, 1.0], [0.0, 0.0]];
        let a2 = [[0.0, 0.0], [1.0, 0.0]];
        for sc in schemes() {
            let s = Splitting::new(sc, linear_flow(a1), linear_flow(a2));
            let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|dt| local_error(&s, *dt)).collect();
            for w in errs.windows(2) {
                let slope = (w[0] / w[1]).log2();
                let expect = (sc.order_hat() + 1) as f64;
                assert!((slope - expect).abs() < 0.3, "{sc:?}: {slope}");
            }
        }
    }

    #[test]
    fn subsolver_splitting_has_same_orders() {
        let op = LinearSplit::noncommuting_2x2();
        let cfg = SubsolverConfig::with_tolerance(1e-12);
        for sc in schemes() {
            let s = Splitting::from_operator(sc, &op, cfg).unwrap();
            let e1 = local_error(&s, 0.1);
            let e2 = local_error(&s, 0.05);
            let slope = (e1 / e2).log2();
            assert!((slope - (sc.order_hat() + 1) as f64).abs() < 0.3, "{sc:?}: {slope}");
        }
    }

    #[test]
    fn strang_orderings_differ_at_third_order() {
        let a1 = [[0.0, 1.0], [0.0, 0.0]];
        let a2 = [[0.0, 0.0], [1.0, 0.0]];
        let s1 = Splitting::new(SplittingScheme::strang(), linear_flow(a1), linear_flow(a2));
        let s2 = Splitting::new(
            SplittingScheme::new(SplittingKind::Strang, Ordering::DiffusionLast),
            linear_flow(a1),
            linear_flow(a2),
        );
        let gap = |dt: f64| {
            let u = [1.0, 0.5];
            let (x, y) = (s1.step(&u, 0.0, dt).unwrap(), s2.step(&u, 0.0, dt).unwrap());
            (x[0] - y[0]).abs().max((x[1] - y[1]).abs())
        };
        let slope = (gap(0.1) / gap(0.05)).log2();
        assert!((slope - 3.0).abs() < 0.3, "{slope}");
    }

    #[test]
    fn dahlquist_halves_commute() {
        let op = LinearSplit::dahlquist(-3.0);
        for sc in schemes() {
            let s = Splitting::from_operator(sc, &op, SubsolverConfig::with_tolerance(1e-12)).unwrap();
            let v = s.step(&[1.0], 0.0, 0.1).unwrap();
            assert!((v[0] - (-0.3f64).exp()).abs() < 1e-10, "{sc:?}");
        }
    }

    #[test]
    fn identity_subflow_makes_orderings_agree() {
        let a = [[-1.0, 2.0], [0.5, -3.0]];
        let id = |u: &[f64], _t: f64, _dt: f64| Ok(u.to_vec());
        for kind in [SplittingKind::Lie, SplittingKind::Strang] {
            let r = Splitting::new(SplittingScheme::new(kind, Ordering::ReactionLast), id, linear_flow(a));
            let d = Splitting::new(SplittingScheme::new(kind, Ordering::DiffusionLast), id, linear_flow(a));
            let (x, y) = (r.step(&[1.0, 2.0], 0.0, 0.2).unwrap(), d.step(&[1.0, 2.0], 0.0, 0.2).unwrap());
            for i in 0..2 {
                assert!((x[i] - y[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn negative_step_rejected() {
        let id = |u: &[f64], _t: f64, _dt: f64| Ok(u.to_vec());
        let s = Splitting::new(SplittingScheme::lie(), id, id);
        assert!(s.step(&[1.0], 0.0, -0.1).is_err());
    }
}
