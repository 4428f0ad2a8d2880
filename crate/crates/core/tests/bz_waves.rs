//! Travelling-wave properties of the spun-up BZ problem on the desk grid.

use std::sync::OnceLock;

use dcs_core::problems::{bz_problem, crossings, BzSetup, ProblemSpec};
use dcs_core::reference::{reference_solve, ReferenceConfig};
use dcs_core::spatial::SpatialOrder;

const TIMES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn run() -> &'static (ProblemSpec, Vec<(f64, Vec<f64>)>) {
    static RUN: OnceLock<(ProblemSpec, Vec<(f64, Vec<f64>)>)> = OnceLock::new();
    RUN.get_or_init(|| {
        let spec = bz_problem(201, SpatialOrder::Second, (0.5, 1.0), &BzSetup::default()).unwrap();
        let out = reference_solve(&spec.model, &ReferenceConfig::with_tolerance(1e-8), 0.0, &TIMES, &spec.initial_state).unwrap();
        (spec, out)
    })
}

#[test]
fn spun_up_profile_has_one_front() {
    let (spec, _) = run();
    let x = crossings(spec.grid().unwrap(), &spec.initial_state, 1, 3, 0.5);
    assert_eq!(x.len(), 1, "{x:?}");
}

#[test]
fn leading_front_moves_right_at_steady_speed() {
    let (spec, out) = run();
    let grid = spec.grid().unwrap();
    let front: Vec<f64> = out
        .iter()
        .map(|(_, u)| crossings(grid, u, 1, 3, 0.5).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let speeds: Vec<f64> = front.windows(2).map(|w| (w[1] - w[0]) / 0.1).collect();
    assert!(speeds.iter().all(|s| *s > 0.0), "{front:?}");
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    for s in &speeds {
        assert!((s - mean).abs() <= 0.05 * mean, "speeds {speeds:?}");
    }
}

#[test]
fn concentrations_stay_in_range() {
    let (spec, out) = run();
    let states = std::iter::once(&spec.initial_state).chain(out.iter().map(|(_, u)| u));
    for u in states {
        for p in u.chunks_exact(3) {
            // the first species spikes far above one behind the pulse
            assert!(p[0] >= -1e-6 && p[0].is_finite());
            assert!((-1e-6..=1.1).contains(&p[1]), "b = {}", p[1]);
            assert!((-1e-6..=1.1).contains(&p[2]), "c = {}", p[2]);
        }
    }
}
