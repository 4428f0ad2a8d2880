//! DC-S sweeps on the linear 2×2 test against dense oracles.

use dcs_core::dcs::DcsIntegrator;
use dcs_core::problems::{LinearSplit, ProblemSpec};
use dcs_core::quadrature::radau_iia_3;
use dcs_core::splitting::{Ordering, Splitting, SplittingKind, SplittingScheme};
use dcs_core::subsolvers::SubsolverConfig;
use nalgebra::{DMatrix, DVector, Matrix2};
use proptest::prelude::*;

fn system() -> Matrix2<f64> {
    Matrix2::from_row_slice(&LinearSplit::noncommuting_2x2().matrix())
}

/// Node values of the collocation step: `(I − Δt A ⊗ M) U = 1 ⊗ u0`.
fn collocation(u0: [f64; 2], dt: f64) -> Vec<[f64; 2]> {
    let a = radau_iia_3().a;
    let m = system();
    let lhs = DMatrix::from_fn(6, 6, |r, c| {
        let (i, p) = (r / 2, r % 2);
        let (j, q) = (c / 2, c % 2);
        f64::from(u8::from(r == c)) - dt * a[i][j] * m[(p, q)]
    });
    let rhs = DVector::from_fn(6, |r, _| u0[r % 2]);
    let u = lhs.lu().solve(&rhs).unwrap();
    (0..3).map(|i| [u[2 * i], u[2 * i + 1]]).collect()
}

fn scheme(kind: usize, ordering: usize) -> SplittingScheme {
    let kind = [SplittingKind::Lie, SplittingKind::Strang][kind];
    let ordering = [Ordering::ReactionLast, Ordering::DiffusionLast][ordering];
    SplittingScheme::new(kind, ordering)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_flow_matches_matrix_exponential(t in 0.0f64..2.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let spec = ProblemSpec::linear2x2();
        let got = spec.exact(t, &[a, b]).unwrap();
        let want = (system() * t).exp() * nalgebra::Vector2::new(a, b);
        prop_assert!((got[0] - want[0]).abs() <= 1e-12 * (1.0 + want.norm()));
        prop_assert!((got[1] - want[1]).abs() <= 1e-12 * (1.0 + want.norm()));
    }

    #[test]
    fn sweeps_contract_onto_collocation(
        dt in 0.01f64..0.2,
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        kind in 0usize..2,
        ordering in 0usize..2,
    ) {
        let spec = ProblemSpec::linear2x2();
        let split = Splitting::from_operator(scheme(kind, ordering), &spec.model, SubsolverConfig::with_tolerance(1e-12)).unwrap();
        let dcs = DcsIntegrator::new(radau_iia_3(), split, &spec.model);
        let target = collocation([a, b], dt);
        let states = dcs.sweeps(&[a, b], 0.0, dt, 3).unwrap();
        let dist: Vec<f64> = states
            .iter()
            .map(|s| {
                s.stages.nodes.iter().zip(&target).map(|(u, v)| (u[0] - v[0]).abs().max((u[1] - v[1]).abs())).fold(0.0, f64::max)
            })
            .collect();
        for w in dist.windows(2) {
            prop_assert!(w[1] <= 0.5 * w[0] + 1e-11, "{dist:?}");
        }
    }
}
