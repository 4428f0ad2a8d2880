//! One-dimensional grids, centered finite-difference Laplacians and the
//! right-hand-side interface shared by the integrators.
//!
//! Boundaries are homogeneous Neumann, imposed by even reflection about the
//! end nodes (ghost value `u[-j] = u[j]`). With this closure the operator is
//! the restriction of a periodic circulant operator to even data, so its
//! trapezoidal-weighted sum vanishes and it commutes with grid reflection.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::BandMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    NeumannZero,
}

/// Uniform node-centered grid on `[x0, x1]`, end points included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub x0: f64,
    pub x1: f64,
    pub dx: f64,
    pub bc: Boundary,
}

impl Grid1D {
    /// At least five points are needed by the fourth-order stencil.
    pub fn new(n: usize, x0: f64, x1: f64) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidConfig("grid needs at least 5 points"));
        }
        if !(x1 > x0) {
            return Err(Error::InvalidConfig("grid bounds must satisfy x0 < x1"));
        }
        Ok(Self {
            n,
            x0,
            x1,
            dx: (x1 - x0) / (n - 1) as f64,
            bc: Boundary::NeumannZero,
        })
    }

    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 0.0, 1.0)
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.n - 1 {
            self.x1
        } else {
            self.x0 + j as f64 * self.dx
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Trapezoidal quadrature weights (the discrete integral on this grid).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpatialOrder {
    #[default]
    Second,
    Fourth,
}

impl SpatialOrder {
    pub fn from_int(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            _ => Err(Error::InvalidConfig("spatial order must be 2 or 4")),
        }
    }

    pub fn as_int(self) -> usize {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    /// Stencil half-width in grid points.
    pub fn half_width(self) -> usize {
        match self {
            Self::Second => 1,
            Self::Fourth => 2,
        }
    }

    /// Largest eigenvalue magnitude of the stencil in units of `1/dx^2`.
    pub fn spectral_radius(self) -> f64 {
        match self {
            Self::Second => 4.0,
            Self::Fourth => 16.0 / 3.0,
        }
    }

    fn weights(self) -> &'static [f64] {
        match self {
            Self::Second => &[1.0, -2.0, 1.0],
            Self::Fourth => &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        }
    }
}

/// Centered Laplacian on a [`Grid1D`] with reflecting Neumann closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplacian {
    pub order: SpatialOrder,
    pub grid: Grid1D,
}

impl Laplacian {
    pub fn new(order: SpatialOrder, grid: Grid1D) -> Self {
        Self { order, grid }
    }

    #[inline]
    fn reflect(&self, j: isize) -> usize {
        let last = self.grid.n as isize - 1;
        let r = if j < 0 {
            -j
        } else if j > last {
            2 * last - j
        } else {
            j
        };
        r as usize
    }

    /// Writes `coeff * Δu` for the field stored at `u[j * stride + offset]`
    /// into `out[j * stride + offset]`.
    pub fn apply_strided(&self, coeff: f64, u: &[f64], stride: usize, offset: usize, out: &mut [f64]) {
        let n = self.grid.n;
        debug_assert!(u.len() >= (n - 1) * stride + offset + 1);
        let w = self.order.weights();
        let h = self.order.half_width();
        let scale = coeff / (self.grid.dx * self.grid.dx);
        let at = |j: usize| u[j * stride + offset];
        for j in 0..n {
            let mut s = 0.0;
            if j >= h && j + h < n {
                for (k, wk) in w.iter().enumerate() {
                    s += wk * at(j + k - h);
                }
            } else {
                for (k, wk) in w.iter().enumerate() {
                    s += wk * at(self.reflect(j as isize + k as isize - h as isize));
                }
            }
            out[j * stride + offset] = scale * s;
        }
    }

    pub fn apply(&self, coeff: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.grid.n;
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.len(),
            });
        }
        if out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: out.len(),
            });
        }
        self.apply_strided(coeff, u, 1, 0, out);
        Ok(())
    }

    /// Adds `coeff * Δ` acting on the strided field into a band matrix.
    pub fn add_to_jacobian(&self, coeff: f64, stride: usize, offset: usize, jac: &mut BandMatrix) {
        let n = self.grid.n;
        let w = self.order.weights();
        let h = self.order.half_width() as isize;
        let scale = coeff / (self.grid.dx * self.grid.dx);
        for j in 0..n {
            let row = j * stride + offset;
            for (k, wk) in w.iter().enumerate() {
                let col = self.reflect(j as isize + k as isize - h);
                jac.add(row, col * stride + offset, scale * wk);
            }
        }
    }
}

/// `D Δu` on a single field.
pub fn laplacian(order: SpatialOrder, grid: &Grid1D, coeff: f64, u: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; u.len()];
    Laplacian::new(order, *grid).apply(coeff, u, &mut out)?;
    Ok(out)
}

/// Semi-discrete right-hand side `F = F1 + F2` with `F1` the (spatially
/// coupled) diffusion part and `F2` a pointwise reaction.
///
/// States hold `dim() / species()` points of `species()` components each,
/// stored point-major.
pub trait RhsOperator: Sync {
    fn dim(&self) -> usize;

    fn species(&self) -> usize;

    fn points(&self) -> usize {
        self.dim() / self.species()
    }

    /// Diffusion part `F1`.
    fn diffusion(&self, t: f64, u: &[f64], out: &mut [f64]);

    /// Reaction `F2` at one point.
    fn reaction_point(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// Row-major `m x m` Jacobian of [`RhsOperator::reaction_point`].
    fn reaction_point_jacobian(&self, t: f64, y: &[f64], jac: &mut [f64]);

    /// Bound on explicit sub-steps for the diffusion part, if it has one.
    fn diffusion_step_limit(&self) -> Option<f64> {
        None
    }

    /// Half-bandwidth of the Jacobian of `F` in state indices.
    fn half_bandwidth(&self) -> usize;

    /// Jacobian of `F` written into `jac` (zeroed by the caller).
    fn jacobian(&self, t: f64, u: &[f64], jac: &mut BandMatrix);

    fn reaction(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let m = self.species();
        for (y, o) in u.chunks_exact(m).zip(out.chunks_exact_mut(m)) {
            self.reaction_point(t, y, o);
        }
    }

    /// Fully coupled `F = F1 + F2`.
    fn apply(&self, t: f64, u: &[f64], out: &mut [f64]) {
        self.diffusion(t, u, out);
        let m = self.species();
        let mut r = vec![0.0; m];
        for (y, o) in u.chunks_exact(m).zip(out.chunks_exact_mut(m)) {
            self.reaction_point(t, y, &mut r);
            for (oi, ri) in o.iter_mut().zip(&r) {
                *oi += ri;
            }
        }
    }
}
