//! Dormand-Prince 5(4) with step-size control and an optional hard cap on
//! the internal step (used for the explicit stability limit of diffusion).

use alloc::vec;

use crate::math::{abs, powf, weighted_rms};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Settings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: Option<f64>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `tf` in place starting with step
/// `h`; returns the suggested continuation step.
pub fn dopri5<F>(f: F, t0: f64, tf: f64, y: &mut [f64], h: f64, set: &Dopri5Settings) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let span = tf - t0;
    if span <= 0.0 {
        return Ok(h);
    }
    let n = y.len();
    let cap = set.h_max.unwrap_or(f64::INFINITY);
    let mut h = h.min(span).min(cap);
    let mut k: [alloc::vec::Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut t = t0;
    let mut steps = 0usize;
    let mut rejected_last = false;
    let mut h_suggest = h;
    f(t, y, &mut k[0]);
    while t < tf {
        let remaining = tf - t;
        let last = h * (1.0 + 1e-3) >= remaining;
        if last {
            h = remaining;
        }
        if steps >= set.max_steps {
            return Err(Error::TooManySteps { max: set.max_steps });
        }
        if h < 1e3 * f64::EPSILON * abs(t).max(span) {
            return Err(Error::StepUnderflow { t, h });
        }
        steps += 1;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            if s == 6 {
                y1.copy_from_slice(&ytmp);
            }
            f(t + C[s] * h, &ytmp, &mut k[s]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (s, ks) in k.iter().enumerate() {
                acc += E[s] * ks[i];
            }
            err[i] = h * acc;
        }
        let e = weighted_rms(&err, y, &y1, set.rtol, set.atol);
        let fac = if e == 0.0 { 10.0 } else { (0.9 * powf(e, -0.2)).clamp(0.2, 10.0) };
        if e <= 1.0 && e.is_finite() {
            t = if last { tf } else { t + h };
            y.copy_from_slice(&y1);
            k.swap(0, 6);
            let grow = if rejected_last { fac.min(1.0) } else { fac };
            rejected_last = false;
            h = (h * grow).min(cap);
            h_suggest = h;
        } else {
            rejected_last = true;
            h *= if e.is_finite() { fac.min(1.0) } else { 0.2 };
        }
    }
    Ok(h_suggest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(tol: f64) -> Dopri5Settings {
        Dopri5Settings {
            rtol: tol,
            atol: tol,
            max_steps: 100_000,
            h_max: None,
        }
    }

    #[test]
    fn exponential() {
        let mut y = [1.0];
        dopri5(|_, y, o| o[0] = -2.0 * y[0], 0.0, 1.0, &mut y, 0.1, &set(1e-11)).unwrap();
        assert!((y[0] - (-2f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn fifth_order_convergence() {
        // fixed steps through a huge tolerance
        let run = |h: f64| {
            let mut y = [1.0, 0.0];
            let s = Dopri5Settings {
                h_max: Some(h),
                ..set(1e3)
            };
            dopri5(|_, y, o| {
                o[0] = y[1];
                o[1] = -y[0];
            }, 0.0, 1.0, &mut y, h, &s)
            .unwrap();
            (y[0] - 1f64.cos()).abs()
        };
        let slope = (run(0.1) / run(0.05)).log2();
        assert!((slope - 5.0).abs() < 0.3, "{slope}");
    }

    #[test]
    fn cap_respected_and_zero_field() {
        let mut y = [0.25, 4.0];
        dopri5(|_, _, o| o.fill(0.0), 0.0, 3.0, &mut y, 5.0, &Dopri5Settings { h_max: Some(0.5), ..set(1e-8) }).unwrap();
        assert_eq!(y, [0.25, 4.0]);
    }
}
