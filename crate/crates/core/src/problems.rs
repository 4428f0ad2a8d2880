//! Concrete right-hand sides: the three-species Belousov-Zhabotinski
//! reaction-diffusion system and small linear split problems with closed-form
//! flows.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::BandMatrix;
use crate::math::{cosh, exp, max_abs, sinh, sqrt};
use crate::reference::{reference_solve, ReferenceConfig};
use crate::spatial::{Grid1D, Laplacian, RhsOperator, SpatialOrder};
use crate::{Error, Result};

/// BZ kinetics. `q_bz` is the bromide parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BzParams {
    pub eps: f64,
    pub mu: f64,
    pub f: f64,
    pub q_bz: f64,
    pub da: f64,
    pub db: f64,
    pub dc: f64,
}

impl Default for BzParams {
    fn default() -> Self {
        Self {
            eps: 1e-2,
            mu: 1e-5,
            f: 1.6,
            q_bz: 2e-3,
            da: 2.5e-3,
            db: 2.5e-3,
            dc: 1.5e-3,
        }
    }
}

impl BzParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eps, self.mu, self.f, self.q_bz, self.da, self.db, self.dc];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig("BZ parameters must be positive"));
        }
        if !(self.mu < self.eps && self.eps < 1.0) {
            return Err(Error::InvalidConfig("BZ parameters need mu < eps < 1"));
        }
        Ok(())
    }

    pub fn diffusion(&self) -> [f64; 3] {
        [self.da, self.db, self.dc]
    }

    /// Homogeneous equilibrium with positive concentrations.
    pub fn steady_state(&self) -> [f64; 3] {
        // b^2 + (f + q - 1) b - q (f + 1) = 0, a = f b / (q + b), c = b
        let p = self.f + self.q_bz - 1.0;
        let b = 0.5 * (-p + sqrt(p * p + 4.0 * self.q_bz * (self.f + 1.0)));
        let a = self.f * b / (self.q_bz + b);
        [a, b, b]
    }
}

/// Reaction terms at one point.
pub fn bz_reaction(p: &BzParams, y: &[f64; 3]) -> [f64; 3] {
    let [a, b, c] = *y;
    [
        (-p.q_bz * a - a * b + p.f * c) / p.mu,
        (p.q_bz * a - a * b + b * (1.0 - b)) / p.eps,
        b - c,
    ]
}

/// Jacobian of [`bz_reaction`], row-major.
pub fn bz_jacobian(p: &BzParams, y: &[f64; 3]) -> [[f64; 3]; 3] {
    let [a, b, _] = *y;
    [
        [(-p.q_bz - b) / p.mu, -a / p.mu, p.f / p.mu],
        [(p.q_bz - b) / p.eps, (1.0 - a - 2.0 * b) / p.eps, 0.0],
        [0.0, 1.0, -1.0],
    ]
}

/// Semi-discrete BZ system on a Neumann grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BzProblem {
    pub params: BzParams,
    pub laplacian: Laplacian,
}

impl BzProblem {
    pub fn new(params: BzParams, grid: Grid1D, order: SpatialOrder) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            laplacian: Laplacian::new(order, grid),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.laplacian.grid
    }

    /// Same system discretized with another stencil order.
    pub fn with_order(&self, order: SpatialOrder) -> Self {
        Self {
            params: self.params,
            laplacian: Laplacian::new(order, self.laplacian.grid),
        }
    }

    /// Steady background with `b = 1` on `x <= width`.
    pub fn seed(&self, width: f64) -> Vec<f64> {
        let bg = self.params.steady_state();
        let g = self.grid();
        let mut u = Vec::with_capacity(3 * g.n);
        for j in 0..g.n {
            let mut y = bg;
            if g.x(j) <= width + 1e-12 {
                y[1] = 1.0;
            }
            u.extend_from_slice(&y);
        }
        u
    }
}

impl RhsOperator for BzProblem {
    fn dim(&self) -> usize {
        3 * self.laplacian.grid.n
    }

    fn species(&self) -> usize {
        3
    }

    fn diffusion(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        for (s, d) in self.params.diffusion().into_iter().enumerate() {
            self.laplacian.apply_strided(d, u, 3, s, out);
        }
    }

    fn reaction_point(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&bz_reaction(&self.params, &[y[0], y[1], y[2]]));
    }

    fn reaction_point_jacobian(&self, _t: f64, y: &[f64], jac: &mut [f64]) {
        let j = bz_jacobian(&self.params, &[y[0], y[1], y[2]]);
        for r in 0..3 {
            jac[3 * r..3 * r + 3].copy_from_slice(&j[r]);
        }
    }

    fn diffusion_step_limit(&self) -> Option<f64> {
        let d = self.params.diffusion().into_iter().fold(0.0, f64::max);
        let dx = self.laplacian.grid.dx;
        Some(dx * dx / (2.0 * d))
    }

    fn half_bandwidth(&self) -> usize {
        3 * self.laplacian.order.half_width()
    }

    fn jacobian(&self, _t: f64, u: &[f64], jac: &mut BandMatrix) {
        for (s, d) in self.params.diffusion().into_iter().enumerate() {
            self.laplacian.add_to_jacobian(d, 3, s, jac);
        }
        for (j, y) in u.chunks_exact(3).enumerate() {
            let block = bz_jacobian(&self.params, &[y[0], y[1], y[2]]);
            for (r, row) in block.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        jac.add(3 * j + r, 3 * j + c, *v);
                    }
                }
            }
        }
    }
}

/// `u' = (A1 + A2) u` on a single point with `m` components, split as
/// `F1 = A1 u` (the "diffusion" part) and `F2 = A2 u` (the "reaction").
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSplit {
    m: usize,
    a1: Vec<f64>,
    a2: Vec<f64>,
}

impl LinearSplit {
    /// `a1`, `a2` row-major `m x m`.
    pub fn new(m: usize, a1: Vec<f64>, a2: Vec<f64>) -> Result<Self> {
        for a in [&a1, &a2] {
            if a.len() != m * m {
                return Err(Error::DimensionMismatch {
                    expected: m * m,
                    found: a.len(),
                });
            }
        }
        Ok(Self { m, a1, a2 })
    }

    /// Scalar `u' = λ u` with `λ/2` in each part.
    pub fn dahlquist(lambda: f64) -> Self {
        Self {
            m: 1,
            a1: vec![0.5 * lambda],
            a2: vec![0.5 * lambda],
        }
    }

    /// `A1 = [[0,1],[0,0]]`, `A2 = [[0,0],[1,0]]`: nilpotent parts whose sum
    /// has the flow `[[cosh t, sinh t], [sinh t, cosh t]]`.
    pub fn noncommuting_2x2() -> Self {
        Self {
            m: 2,
            a1: vec![0.0, 1.0, 0.0, 0.0],
            a2: vec![0.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn a1(&self) -> &[f64] {
        &self.a1
    }

    pub fn a2(&self) -> &[f64] {
        &self.a2
    }

    /// Row-major `A1 + A2`.
    pub fn matrix(&self) -> Vec<f64> {
        self.a1.iter().zip(&self.a2).map(|(x, y)| x + y).collect()
    }

    fn mul(&self, a: &[f64], u: &[f64], out: &mut [f64]) {
        let m = self.m;
        for (i, o) in out.iter_mut().enumerate().take(m) {
            *o = (0..m).map(|j| a[i * m + j] * u[j]).sum();
        }
    }
}

impl RhsOperator for LinearSplit {
    fn dim(&self) -> usize {
        self.m
    }

    fn species(&self) -> usize {
        self.m
    }

    fn diffusion(&self, _t: f64, u: &[f64], out: &mut [f64]) {
        self.mul(&self.a1, u, out);
    }

    fn reaction_point(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        self.mul(&self.a2, y, out);
    }

    fn reaction_point_jacobian(&self, _t: f64, _y: &[f64], jac: &mut [f64]) {
        jac.copy_from_slice(&self.a2);
    }

    fn half_bandwidth(&self) -> usize {
        self.m - 1
    }

    fn jacobian(&self, _t: f64, _u: &[f64], jac: &mut BandMatrix) {
        let a = self.matrix();
        for i in 0..self.m {
            for j in 0..self.m {
                jac.add(i, j, a[i * self.m + j]);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Bz(BzProblem),
    Linear(LinearSplit),
}

impl Model {
    fn op(&self) -> &dyn RhsOperator {
        match self {
            Model::Bz(p) => p,
            Model::Linear(p) => p,
        }
    }
}

impl RhsOperator for Model {
    fn dim(&self) -> usize {
        self.op().dim()
    }
    fn species(&self) -> usize {
        self.op().species()
    }
    fn diffusion(&self, t: f64, u: &[f64], out: &mut [f64]) {
        self.op().diffusion(t, u, out)
    }
    fn reaction_point(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self.op().reaction_point(t, y, out)
    }
    fn reaction_point_jacobian(&self, t: f64, y: &[f64], jac: &mut [f64]) {
        self.op().reaction_point_jacobian(t, y, jac)
    }
    fn diffusion_step_limit(&self) -> Option<f64> {
        self.op().diffusion_step_limit()
    }
    fn half_bandwidth(&self) -> usize {
        self.op().half_bandwidth()
    }
    fn jacobian(&self, t: f64, u: &[f64], jac: &mut BandMatrix) {
        self.op().jacobian(t, u, jac)
    }
}

/// How the BZ initial profile is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BzSetup {
    /// Width of the excited plateau at the left boundary.
    pub seed_width: f64,
    /// Time integrated from the seed before `t = 0`.
    pub spin_up: f64,
    pub reference: ReferenceConfig,
}

impl Default for BzSetup {
    fn default() -> Self {
        Self {
            seed_width: 0.05,
            spin_up: 0.1,
            reference: ReferenceConfig {
                rtol: 1e-8,
                atol: 1e-8,
                ..ReferenceConfig::default()
            },
        }
    }
}

/// A model together with its initial state at `window.0`'s time origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub model: Model,
    /// State at `t = 0`.
    pub initial_state: Vec<f64>,
    /// Integration window used by the experiments.
    pub window: (f64, f64),
}

impl ProblemSpec {
    pub fn linear2x2() -> Self {
        Self {
            model: Model::Linear(LinearSplit::noncommuting_2x2()),
            initial_state: vec![1.0, 0.5],
            window: (0.0, 1.0),
        }
    }

    pub fn dahlquist(lambda: f64) -> Self {
        Self {
            model: Model::Linear(LinearSplit::dahlquist(lambda)),
            initial_state: vec![1.0],
            window: (0.0, 1.0),
        }
    }

    pub fn species(&self) -> usize {
        self.model.species()
    }

    pub fn grid(&self) -> Option<&Grid1D> {
        match &self.model {
            Model::Bz(p) => Some(p.grid()),
            Model::Linear(_) => None,
        }
    }

    /// Closed-form flow for the built-in linear problems.
    pub fn exact(&self, t: f64, u0: &[f64]) -> Option<Vec<f64>> {
        match &self.model {
            Model::Linear(l) if l.m == 1 => {
                let lambda = l.a1[0] + l.a2[0];
                Some(vec![exp(lambda * t) * u0[0]])
            }
            Model::Linear(l) if *l == LinearSplit::noncommuting_2x2() => {
                let (ch, sh) = (cosh(t), sinh(t));
                Some(vec![ch * u0[0] + sh * u0[1], sh * u0[0] + ch * u0[1]])
            }
            _ => None,
        }
    }
}

/// BZ on `n` points of `[0, 1]` with the developed-wave initial state
/// obtained by integrating the seed for `setup.spin_up`.
pub fn bz_problem(n: usize, order: SpatialOrder, window: (f64, f64), setup: &BzSetup) -> Result<ProblemSpec> {
    if !(window.1 > window.0) {
        return Err(Error::InvalidConfig("empty time window"));
    }
    let grid = Grid1D::unit(n)?;
    let bz = BzProblem::new(BzParams::default(), grid, order)?;
    let seed = bz.seed(setup.seed_width);
    let initial_state = if setup.spin_up > 0.0 {
        let mut out = reference_solve(&bz, &setup.reference, 0.0, &[setup.spin_up], &seed)?;
        out.pop().map(|(_, u)| u).unwrap_or(seed)
    } else {
        seed
    };
    Ok(ProblemSpec {
        model: Model::Bz(bz),
        initial_state,
        window,
    })
}

/// Positions where species `s` crosses `level` (linear interpolation).
pub fn crossings(grid: &Grid1D, u: &[f64], species: usize, m: usize, level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for j in 0..grid.n - 1 {
        let (a, b) = (u[j * m + species] - level, u[(j + 1) * m + species] - level);
        if (a >= 0.0) != (b >= 0.0) {
            let w = a / (a - b);
            out.push(grid.x(j) + w * grid.dx);
        }
    }
    out
}

/// Largest `|f|` among species `s` at all points.
pub fn species_max(u: &[f64], species: usize, m: usize) -> f64 {
    let col: Vec<f64> = u.iter().skip(species).step_by(m).copied().collect();
    max_abs(&col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reaction_examples() {
        let p = BzParams::default();
        assert_eq!(bz_reaction(&p, &[0.0; 3]), [0.0; 3]);
        let r = bz_reaction(&p, &[1.0; 3]);
        assert!((r[0] - 5.98e4).abs() < 1e-8);
        assert!((r[1] + 99.8).abs() < 1e-11);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let p = BzParams::default();
        let mut s = 0x2545_f491_4f6c_dd1du64;
        let mut rnd = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            0.01 + 0.99 * (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let y = [rnd(), rnd(), rnd()];
            let jac = bz_jacobian(&p, &y);
            for c in 0..3 {
                let h = 1e-6 * y[c];
                let (mut yp, mut ym) = (y, y);
                yp[c] += h;
                ym[c] -= h;
                let (fp, fm) = (bz_reaction(&p, &yp), bz_reaction(&p, &ym));
                for r in 0..3 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    let scale = jac[r].iter().map(|v| v.abs()).fold(0.0, f64::max);
                    assert!((fd - jac[r][c]).abs() <= 1e-6 * scale, "r={r} c={c}");
                }
            }
        }
    }

    #[test]
    fn steady_state_is_equilibrium() {
        let p = BzParams::default();
        let y = p.steady_state();
        let r = bz_reaction(&p, &y);
        assert!(r[0].abs() < 1e-8 && r[1].abs() < 1e-10 && r[2].abs() < 1e-15, "{r:?}");
        assert!((y[0] - 1.29574).abs() < 1e-4);
    }

    #[test]
    fn parameters_validated() {
        let mut p = BzParams::default();
        p.mu = 0.1;
        assert!(p.validate().is_err());
        p = BzParams::default();
        p.db = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn reaction_is_stiff_at_the_front() {
        let p = BzParams::default();
        let j = bz_jacobian(&p, &[0.5, 0.5, 0.5]);
        let a = nalgebra::Matrix3::from_fn(|r, c| j[r][c]);
        let rho = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rho > 0.1 / p.mu);
    }

    #[test]
    fn split_sums_to_full() {
        let g = Grid1D::unit(21).unwrap();
        let bz = BzProblem::new(BzParams::default(), g, SpatialOrder::Fourth).unwrap();
        let u: Vec<f64> = (0..63).map(|i| 0.5 + 0.4 * ((i * 7) as f64).sin()).collect();
        let mut f = vec![0.0; 63];
        let mut f1 = vec![0.0; 63];
        let mut f2 = vec![0.0; 63];
        bz.apply(0.0, &u, &mut f);
        bz.diffusion(0.0, &u, &mut f1);
        bz.reaction(0.0, &u, &mut f2);
        for i in 0..63 {
            assert_eq!(f[i], f1[i] + f2[i]);
        }
    }

    #[test]
    fn banded_jacobian_matches_differences() {
        let g = Grid1D::unit(9).unwrap();
        for order in [SpatialOrder::Second, SpatialOrder::Fourth] {
            let bz = BzProblem::new(BzParams::default(), g, order).unwrap();
            let n = bz.dim();
            let u: Vec<f64> = (0..n).map(|i| 0.3 + 0.2 * ((i * 3) as f64).cos()).collect();
            let w = bz.half_bandwidth();
            let mut jac = BandMatrix::zeros(n, w, w);
            bz.jacobian(0.0, &u, &mut jac);
            let mut f0 = vec![0.0; n];
            bz.apply(0.0, &u, &mut f0);
            for c in 0..n {
                let h = 1e-7;
                let mut up = u.clone();
                up[c] += h;
                let mut fp = vec![0.0; n];
                bz.apply(0.0, &up, &mut fp);
                for r in 0..n {
                    let fd = (fp[r] - f0[r]) / h;
                    assert!((fd - jac.get(r, c)).abs() <= 1e-4 * (1.0 + jac.get(r, c).abs()), "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn linear_exact_flows() {
        let d = ProblemSpec::dahlquist(-1.0);
        assert!((d.exact(1.0, &[1.0]).unwrap()[0] - (-1f64).exp()).abs() < 1e-16);
        let l = ProblemSpec::linear2x2();
        let u = l.exact(0.3, &[1.0, 0.0]).unwrap();
        assert!((u[0] - 0.3f64.cosh()).abs() < 1e-16 && (u[1] - 0.3f64.sinh()).abs() < 1e-16);
        let (a1, a2) = match &l.model {
            Model::Linear(s) => (s.a1().to_vec(), s.a2().to_vec()),
            _ => unreachable!(),
        };
        // [A1, A2] != 0
        let prod = |x: &[f64], y: &[f64]| {
            [
                x[0] * y[0] + x[1] * y[2],
                x[0] * y[1] + x[1] * y[3],
                x[2] * y[0] + x[3] * y[2],
                x[2] * y[1] + x[3] * y[3],
            ]
        };
        assert_ne!(prod(&a1, &a2), prod(&a2, &a1));
    }

    #[test]
    fn crossing_scan() {
        let g = Grid1D::unit(11).unwrap();
        let u: Vec<f64> = g.points().iter().map(|x| 1.0 - x).collect();
        let c = crossings(&g, &u, 0, 1, 0.45);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 0.55).abs() < 1e-12);
    }
}
