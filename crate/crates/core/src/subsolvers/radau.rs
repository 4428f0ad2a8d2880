//! Adaptive three-stage RadauIIA integrator with simplified Newton iteration
//! on the stage increments, shared by the pointwise reaction propagator
//! (dense `3m x 3m` systems) and the coupled reference solver (banded).
//!
//! Stage increments `Z_a = u_a - y0` are stored component-major inside the
//! Newton system (index `3 * component + stage`), so a Jacobian of
//! half-bandwidth `w` yields a stage matrix of half-bandwidth `3w + 2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{BandMatrix, BandedLu};
use crate::math::{abs, powf, sqrt, weighted_rms};
use crate::quadrature::{radau_iia_3, ButcherTableau, STAGES};
use crate::{Error, Result};

/// An ODE `y' = f(t, y)` with a banded Jacobian.
pub trait StiffSystem {
    fn dim(&self) -> usize;

    /// Half-bandwidth of the Jacobian (equal above and below the diagonal).
    fn half_bandwidth(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// Writes `df/dy` into a zeroed band matrix of the declared bandwidth.
    fn jacobian(&self, t: f64, y: &[f64], jac: &mut BandMatrix);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadauSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Newton stopping threshold relative to the error tolerance.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub max_steps: usize,
}

impl Default for RadauSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-6,
            newton_tol: 0.03,
            newton_max_iters: 7,
            max_steps: 100_000,
        }
    }
}

impl RadauSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive"));
        }
        if self.newton_max_iters < 1 || self.max_steps < 1 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RadauStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jacobians: usize,
    pub factorizations: usize,
    pub newton_iters: usize,
}

const EPS: f64 = f64::EPSILON;
const MAX_NEWTON_FAILURES: usize = 12;

struct Factors {
    stage: BandedLu,
    err: BandedLu,
    h: f64,
}

/// Integrator state; reusing one instance across calls keeps the step size,
/// the Jacobian and the stage extrapolation.
pub struct Radau<'s, S: StiffSystem + ?Sized> {
    sys: &'s S,
    set: RadauSettings,
    tab: ButcherTableau,
    n: usize,
    w: usize,
    jac: BandMatrix,
    jac_fresh: bool,
    need_jac: bool,
    factors: Option<Factors>,
    /// Last accepted stage increments and their step, for the Newton guess.
    previous: Option<(f64, [Vec<f64>; STAGES])>,
    faccon: f64,
    theta: f64,
    pub stats: RadauStats,
}

impl<'s, S: StiffSystem + ?Sized> Radau<'s, S> {
    pub fn new(sys: &'s S, set: RadauSettings) -> Self {
        let n = sys.dim();
        let w = sys.half_bandwidth().min(n.saturating_sub(1));
        Self {
            sys,
            set,
            tab: radau_iia_3(),
            n,
            w,
            jac: BandMatrix::zeros(n, w, w),
            jac_fresh: false,
            need_jac: true,
            factors: None,
            previous: None,
            faccon: 1.0,
            theta: 1.0,
            stats: RadauStats::default(),
        }
    }

    fn newton_threshold(&self) -> f64 {
        let tol = self.set.newton_tol.min(sqrt(self.set.rtol));
        tol.max(10.0 * EPS / self.set.rtol)
    }

    fn refresh_jacobian(&mut self, t: f64, y: &[f64]) {
        self.jac.fill_zero();
        self.sys.jacobian(t, y, &mut self.jac);
        self.stats.jacobians += 1;
        self.jac_fresh = true;
        self.need_jac = false;
        self.factors = None;
    }

    fn factor(&mut self, h: f64) -> Result<()> {
        let (n, w) = (self.n, self.w);
        let a = self.tab.a;
        let mut stage = BandMatrix::zeros(STAGES * n, 3 * w + 2, 3 * w + 2);
        let mut err = BandMatrix::identity(n, w, w);
        let hg = h * self.tab.gamma0();
        for i in 0..n {
            for j in i.saturating_sub(w)..=(i + w).min(n - 1) {
                let jij = self.jac.get(i, j);
                if jij == 0.0 && i != j {
                    continue;
                }
                for (ra, arow) in a.iter().enumerate() {
                    for (cb, aab) in arow.iter().enumerate() {
                        let delta = if i == j && ra == cb { 1.0 } else { 0.0 };
                        stage.set(STAGES * i + ra, STAGES * j + cb, delta - h * aab * jij);
                    }
                }
                err.add(i, j, -hg * jij);
            }
        }
        self.factors = Some(Factors {
            stage: stage.factor()?,
            err: err.factor()?,
            h,
        });
        self.stats.factorizations += 1;
        Ok(())
    }

    /// Newton guess: the previous collocation polynomial continued into the
    /// new step, or zero.
    fn initial_guess(&self, h: f64, z: &mut [Vec<f64>; STAGES]) {
        let c = self.tab.c;
        match &self.previous {
            Some((h_old, zp)) => {
                let nodes = [0.0, c[0], c[1], c[2]];
                let r = h / h_old;
                for (a, za) in z.iter_mut().enumerate() {
                    let theta = 1.0 + c[a] * r;
                    // Lagrange basis on {0, c1, c2, 1}; the node at 0 carries Z = 0.
                    let mut basis = [0.0; STAGES];
                    for (m, bm) in basis.iter_mut().enumerate() {
                        let xm = nodes[m + 1];
                        let mut l = 1.0;
                        for (q, xq) in nodes.iter().enumerate() {
                            if q != m + 1 {
                                l *= (theta - xq) / (xm - xq);
                            }
                        }
                        *bm = l;
                    }
                    for i in 0..self.n {
                        za[i] = basis[0] * zp[0][i] + basis[1] * zp[1][i] + basis[2] * zp[2][i] - zp[2][i];
                    }
                }
            }
            None => z.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0.0)),
        }
    }

    /// Integrates `y` from `t0` to `tf` in place, starting with step `h`.
    /// Returns the step size suggested for a continuation.
    pub fn integrate(&mut self, t0: f64, tf: f64, y: &mut [f64], h: f64) -> Result<f64> {
        let n = self.n;
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        let span = tf - t0;
        if span <= 0.0 {
            return Ok(h);
        }
        let tab = self.tab;
        let (c, a) = (tab.c, tab.a);
        let dd = tab.error_weights();
        let gamma0 = tab.gamma0();
        let fnewt = self.newton_threshold();
        let (rtol, atol) = (self.set.rtol, self.set.atol);
        let nit = self.set.newton_max_iters;

        let mut t = t0;
        let mut h = if h > 0.0 && h.is_finite() { h.min(span) } else { span };
        let mut h_suggest = h;
        let mut first = true;
        let mut rejected_last = false;
        let mut newton_failures = 0usize;
        let mut steps = 0usize;

        let mut f0 = vec![0.0; n];
        self.sys.rhs(t, y, &mut f0);
        self.stats.rhs_evals += 1;
        self.need_jac = true;

        let mut z: [Vec<f64>; STAGES] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut fz: [Vec<f64>; STAGES] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut ya = vec![0.0; n];
        let mut rhs = vec![0.0; STAGES * n];
        let mut scal = vec![0.0; n];
        let mut errv = vec![0.0; n];
        let mut y1 = vec![0.0; n];

        while t < tf {
            let remaining = tf - t;
            // stretch rather than leave a sliver of the interval behind
            let last = h * (1.0 + 1e-3) >= remaining;
            if last {
                h = remaining;
            }
            if steps >= self.set.max_steps {
                return Err(Error::TooManySteps { max: self.set.max_steps });
            }
            if h < 1e3 * EPS * abs(t).max(span) {
                return Err(Error::StepUnderflow { t, h });
            }
            steps += 1;
            if self.need_jac {
                self.refresh_jacobian(t, y);
            }
            if self.factors.as_ref().map_or(true, |f| f.h != h) {
                self.factor(h)?;
            }
            if rejected_last || first {
                self.previous = None;
            }
            self.initial_guess(h, &mut z);

            for (s, yi) in scal.iter_mut().zip(y.iter()) {
                *s = atol + rtol * abs(*yi);
            }

            // Simplified Newton on the stage increments.
            self.faccon = powf(self.faccon.max(EPS), 0.8);
            let mut theta = 0.0f64;
            let mut dynold = 0.0f64;
            let mut thqold = 0.0f64;
            let mut newt = 0usize;
            let mut failure: Option<f64> = None;
            loop {
                if newt >= nit {
                    failure = Some(0.5);
                    break;
                }
                let mut finite = true;
                for s in 0..STAGES {
                    for i in 0..n {
                        ya[i] = y[i] + z[s][i];
                    }
                    self.sys.rhs(t + c[s] * h, &ya, &mut fz[s]);
                    finite &= fz[s].iter().all(|v| v.is_finite());
                }
                self.stats.rhs_evals += STAGES;
                if !finite {
                    failure = Some(0.5);
                    break;
                }
                for i in 0..n {
                    for (s, arow) in a.iter().enumerate() {
                        let mut acc = 0.0;
                        for (b, ab) in arow.iter().enumerate() {
                            acc += ab * fz[b][i];
                        }
                        rhs[STAGES * i + s] = h * acc - z[s][i];
                    }
                }
                self.factors.as_ref().unwrap().stage.solve(&mut rhs);
                self.stats.newton_iters += 1;
                let mut sum = 0.0;
                for i in 0..n {
                    for s in 0..STAGES {
                        let r = rhs[STAGES * i + s] / scal[i];
                        sum += r * r;
                    }
                }
                let dyno = sqrt(sum / (STAGES * n) as f64);
                if !dyno.is_finite() {
                    failure = Some(0.5);
                    break;
                }
                if newt >= 1 {
                    let thq = dyno / dynold;
                    theta = if newt == 1 { thq } else { sqrt(thq * thqold) };
                    thqold = thq;
                    if theta < 0.99 {
                        self.faccon = theta / (1.0 - theta);
                        let remaining_iters = (nit - 1 - newt) as f64;
                        let dyth = self.faccon * dyno * powf(theta, remaining_iters) / fnewt;
                        if dyth >= 1.0 {
                            let qnewt = dyth.clamp(1e-4, 20.0);
                            failure = Some(0.8 * powf(qnewt, -1.0 / (4.0 + remaining_iters)));
                            break;
                        }
                    } else {
                        failure = Some(0.5);
                        break;
                    }
                }
                dynold = dyno.max(EPS);
                for i in 0..n {
                    for s in 0..STAGES {
                        z[s][i] += rhs[STAGES * i + s];
                    }
                }
                newt += 1;
                if self.faccon * dyno <= fnewt {
                    break;
                }
            }

            if let Some(shrink) = failure {
                newton_failures += 1;
                if newton_failures > MAX_NEWTON_FAILURES {
                    return Err(Error::NewtonDivergence { t });
                }
                h *= shrink;
                self.stats.rejected += 1;
                rejected_last = true;
                self.previous = None;
                if !self.jac_fresh {
                    self.need_jac = true;
                }
                self.factors = None;
                continue;
            }
            newton_failures = 0;
            self.theta = theta;

            // Embedded error estimate, filtered through (I - h γ0 J)^-1.
            let hg = h * gamma0;
            let estimate = |fbase: &[f64], z: &[Vec<f64>; STAGES], out: &mut [f64]| {
                for i in 0..n {
                    out[i] = hg * fbase[i] + gamma0 * (dd[0] * z[0][i] + dd[1] * z[1][i] + dd[2] * z[2][i]);
                }
            };
            estimate(&f0, &z, &mut errv);
            let factors = self.factors.as_ref().unwrap();
            factors.err.solve(&mut errv);
            for i in 0..n {
                y1[i] = y[i] + z[2][i];
            }
            let mut err = weighted_rms(&errv, y, &y1, rtol, atol).max(1e-10);
            if err >= 1.0 && (first || rejected_last) {
                for i in 0..n {
                    ya[i] = y[i] + errv[i];
                }
                let mut fpert = vec![0.0; n];
                self.sys.rhs(t, &ya, &mut fpert);
                self.stats.rhs_evals += 1;
                estimate(&fpert, &z, &mut errv);
                factors.err.solve(&mut errv);
                err = weighted_rms(&errv, y, &y1, rtol, atol).max(1e-10);
            }

            let quot = (powf(err, 0.25) / 0.9).clamp(0.125, 5.0);
            let mut h_new = h / quot;

            if err < 1.0 {
                self.stats.accepted += 1;
                t = if last { tf } else { t + h };
                y.copy_from_slice(&y1);
                self.sys.rhs(t, y, &mut f0);
                self.stats.rhs_evals += 1;
                self.previous = Some((h, z.clone()));
                first = false;
                if rejected_last {
                    h_new = h_new.min(h);
                }
                rejected_last = false;
                self.jac_fresh = false;
                self.need_jac = theta > 0.5;
                let ratio = h_new / h;
                if !self.need_jac && (1.0..=1.2).contains(&ratio) {
                    h_new = h;
                }
                h_suggest = h_new;
                h = h_new;
            } else {
                self.stats.rejected += 1;
                h = if first { 0.1 * h } else { h_new };
                rejected_last = true;
            }
        }
        Ok(h_suggest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear {
        m: Vec<f64>,
        n: usize,
    }

    impl StiffSystem for Linear {
        fn dim(&self) -> usize {
            self.n
        }
        fn half_bandwidth(&self) -> usize {
            self.n - 1
        }
        fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) {
            for i in 0..self.n {
                out[i] = (0..self.n).map(|j| self.m[i * self.n + j] * y[j]).sum();
            }
        }
        fn jacobian(&self, _t: f64, _y: &[f64], jac: &mut BandMatrix) {
            for i in 0..self.n {
                for j in 0..self.n {
                    jac.set(i, j, self.m[i * self.n + j]);
                }
            }
        }
    }

    struct VanDerPol(f64);

    impl StiffSystem for VanDerPol {
        fn dim(&self) -> usize {
            2
        }
        fn half_bandwidth(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], out: &mut [f64]) {
            out[0] = y[1];
            out[1] = ((1.0 - y[0] * y[0]) * y[1] - y[0]) / self.0;
        }
        fn jacobian(&self, _t: f64, y: &[f64], jac: &mut BandMatrix) {
            jac.set(0, 1, 1.0);
            jac.set(1, 0, (-2.0 * y[0] * y[1] - 1.0) / self.0);
            jac.set(1, 1, (1.0 - y[0] * y[0]) / self.0);
        }
    }

    fn settings(tol: f64) -> RadauSettings {
        RadauSettings {
            rtol: tol,
            atol: tol,
            ..RadauSettings::default()
        }
    }

    #[test]
    fn scalar_decay() {
        let sys = Linear { m: vec![-1.0], n: 1 };
        let mut y = [1.0];
        Radau::new(&sys, settings(1e-12)).integrate(0.0, 1.0, &mut y, 0.1).unwrap();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-10, "{}", y[0]);
    }

    #[test]
    fn rotation_matches_closed_form() {
        let sys = Linear { m: vec![0.0, 1.0, -1.0, 0.0], n: 2 };
        let mut y = [1.0, 0.0];
        Radau::new(&sys, settings(1e-11)).integrate(0.0, 2.0, &mut y, 0.01).unwrap();
        assert!((y[0] - 2f64.cos()).abs() < 1e-9 && (y[1] + 2f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn one_step_matches_dense_collocation() {
        // a single forced step equals the linear collocation solve
        let lambda = -3.0;
        let sys = Linear { m: vec![lambda], n: 1 };
        let tab = radau_iia_3();
        let h = 0.05;
        let mut radau = Radau::new(&sys, settings(1e-3));
        let mut y = [1.0];
        radau.integrate(0.0, h, &mut y, h).unwrap();
        assert_eq!(radau.stats.accepted, 1);
        let a = nalgebra::Matrix3::from_fn(|i, j| tab.a[i][j]);
        let m = nalgebra::Matrix3::identity() - a * (lambda * h);
        let u = m.lu().solve(&nalgebra::Vector3::repeat(1.0)).unwrap();
        assert!((y[0] - u[2]).abs() < 1e-12, "{} {}", y[0], u[2]);
    }

    #[test]
    fn stiff_van_der_pol_runs() {
        let sys = VanDerPol(1e-4);
        let mut coarse = [2.0, 0.0];
        let mut fine = [2.0, 0.0];
        Radau::new(&sys, settings(1e-6)).integrate(0.0, 0.5, &mut coarse, 1e-6).unwrap();
        Radau::new(&sys, settings(1e-10)).integrate(0.0, 0.5, &mut fine, 1e-6).unwrap();
        assert!((coarse[0] - fine[0]).abs() < 1e-4, "{coarse:?} {fine:?}");
    }

    #[test]
    fn zero_field_is_identity() {
        let sys = Linear { m: vec![0.0; 4], n: 2 };
        let mut y = [0.3, -7.0];
        Radau::new(&sys, settings(1e-8)).integrate(0.0, 1.0, &mut y, 1.0).unwrap();
        assert_eq!(y, [0.3, -7.0]);
    }

    #[test]
    fn step_cap_reported() {
        let sys = Linear { m: vec![-1.0], n: 1 };
        let mut y = [1.0];
        let set = RadauSettings {
            max_steps: 2,
            ..settings(1e-12)
        };
        let r = Radau::new(&sys, set).integrate(0.0, 10.0, &mut y, 1e-3);
        assert_eq!(r, Err(Error::TooManySteps { max: 2 }));
    }
}
