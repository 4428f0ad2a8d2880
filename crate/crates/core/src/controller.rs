//! Error estimation from successive sweeps and adaptive step selection.
//!
//! After sweep `k` the companion solution `ū^k_s = u0 + Δt Σ b_j F(ũ^k_j)`
//! gives `err̄_k = ‖ū^k_s − ũ^k_s‖`. Ratios of consecutive `err̄` measure the
//! per-sweep contraction `ζ̃_k`, whose running product `σ̃_k` turns the sweep
//! increment `‖ũ^k_s − ũ^0_s‖` into an estimate `err̃_k` of the true error.

use alloc::vec::Vec;

use crate::dcs::{DcsIntegrator, DcsState};
use crate::math::{max_abs, powf, powi, rms};
use crate::quadrature::ButcherTableau;
use crate::splitting::SplittingScheme;
use crate::{Error, Result};

/// Norm used by all estimator formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    #[default]
    Rms,
    Max,
    /// RMS divided by the max-norm of the first of `species` interleaved
    /// components of the reference state.
    ScaledRms { species: usize },
}

impl ErrorNorm {
    pub fn measure(&self, v: &[f64], reference: &[f64]) -> f64 {
        match *self {
            ErrorNorm::Rms => rms(v),
            ErrorNorm::Max => max_abs(v),
            ErrorNorm::ScaledRms { species } => {
                let scale = reference
                    .iter()
                    .step_by(species.max(1))
                    .fold(0.0f64, |m, x| m.max(crate::math::abs(*x)));
                let scale = if scale > 0.0 { scale } else { 1.0 };
                rms(v) / scale
            }
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64], reference: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.measure(&d, reference)
    }
}

/// How `σ̃_{k_max}` is carried into the `k = 0` prediction of the next step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialPrediction {
    /// `σ̃* = σ̃_{k_max,old} (Δt / Δt_old)^{k_max}`. Restarts most steps on
    /// stiff problems once the step grows, so it is opt-in.
    StepRatio,
    /// `σ̃* = σ̃_{k_max,old}`.
    Frozen,
    /// No prediction after the initial sweep.
    #[default]
    Off,
}

/// Which step-size formula drives the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// Assumes the next step also stops after `k` sweeps.
    PerIteration,
    /// Assumes the next step runs all `k_max` sweeps.
    MaxIteration,
    /// The smaller of both, capped by `Δt_max,k`.
    #[default]
    Composite,
    /// Targets the splitting error of the initial sweep.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub eta: f64,
    /// Tolerance of the split rule; `eta` when absent.
    pub eta_split: Option<f64>,
    pub nu: f64,
    pub k_max: usize,
    /// Order of the splitting, for the split rule.
    pub order_hat: usize,
    pub dt_min: f64,
    pub dt_max_abs: f64,
    pub norm: ErrorNorm,
    pub rule: StepRule,
    pub predict: bool,
    pub initial_prediction: InitialPrediction,
    pub max_rejections: usize,
    /// Largest ratio between consecutive accepted steps.
    pub growth_max: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            eta: 1e-5,
            eta_split: None,
            nu: 0.9,
            k_max: 3,
            order_hat: 1,
            dt_min: 1e-12,
            dt_max_abs: 1.0,
            norm: ErrorNorm::Rms,
            rule: StepRule::Composite,
            predict: true,
            initial_prediction: InitialPrediction::Off,
            max_rejections: 10,
            growth_max: 5.0,
        }
    }
}

impl ControllerConfig {
    /// Defaults with `k_max` and `p̂` taken from the scheme.
    pub fn for_scheme(scheme: &SplittingScheme, tab: &ButcherTableau, eta: f64) -> Self {
        Self {
            eta,
            k_max: scheme.k_max(tab),
            order_hat: scheme.order_hat(),
            ..Self::default()
        }
    }

    pub fn eta_split(&self) -> f64 {
        self.eta_split.unwrap_or(self.eta)
    }

    /// Acceptance threshold for the configured rule.
    pub fn tolerance(&self) -> f64 {
        match self.rule {
            StepRule::Split => self.eta_split(),
            _ => self.eta,
        }
    }

    /// The split rule controls the splitting approximation alone; the other
    /// rules need one correction before `ζ̃` and their step formulas exist.
    pub fn min_sweeps(&self) -> usize {
        match self.rule {
            StepRule::Split => 0,
            _ => 1,
        }
    }

    /// Last sweep attempted before a restart.
    pub fn sweep_cap(&self) -> usize {
        match self.rule {
            StepRule::Split => 0,
            _ => self.k_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || self.eta_split.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::InvalidConfig("tolerances must be positive"));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidConfig("safety factor must lie in (0, 1]"));
        }
        if self.k_max < 1 || self.order_hat < 1 {
            return Err(Error::InvalidConfig("k_max and order_hat must be at least 1"));
        }
        if !(self.growth_max > 1.0) {
            return Err(Error::InvalidConfig("growth_max must exceed 1"));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max_abs) {
            return Err(Error::InvalidConfig("need 0 < dt_min < dt_max_abs"));
        }
        Ok(())
    }

    fn clamp(&self, dt: f64) -> f64 {
        if dt.is_nan() {
            return self.dt_min;
        }
        dt.clamp(self.dt_min, self.dt_max_abs)
    }
}

/// Estimates after sweep `k` of a step of size `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub k: usize,
    pub dt: f64,
    pub err_bar: f64,
    pub err_tilde: f64,
    /// `None` for the initial sweep.
    pub zeta_tilde: Option<f64>,
    /// Product of the `ζ̃_j` so far (1 for `k = 0`).
    pub sigma_tilde: f64,
    /// `1 / ζ̃_k`, infinite for `k = 0`.
    pub dt_max_k: f64,
}

/// `ū^k_s = u0 + Δt Σ_j b_j F(ũ^k_j)`.
pub fn companion_solution(tab: &ButcherTableau, state: &DcsState) -> Vec<f64> {
    let mut u = tab.full_step_increment(&state.stages);
    for (x, u0) in u.iter_mut().zip(&state.u0) {
        *x += u0;
    }
    u
}

/// Builds the record of sweep `state.k` from the records of the earlier
/// sweeps of the same step and the initial-sweep endpoint `ũ^0_s`.
pub fn estimate_error(
    tab: &ButcherTableau,
    norm: ErrorNorm,
    history: &[SweepRecord],
    state: &DcsState,
    u_tilde0_s: &[f64],
) -> Result<SweepRecord> {
    let k = state.k;
    let dt = state.dt();
    let reference = &state.u0;
    let ubar = companion_solution(tab, state);
    let err_bar = norm.distance(&ubar, state.endpoint(), reference);
    if k == 0 {
        return Ok(SweepRecord {
            k,
            dt,
            err_bar,
            err_tilde: err_bar,
            zeta_tilde: None,
            sigma_tilde: 1.0,
            dt_max_k: f64::INFINITY,
        });
    }
    let prev = history.iter().rev().find(|r| r.k + 1 == k).ok_or(Error::MissingHistory)?;
    let floor = 10.0 * f64::EPSILON * norm.measure(reference, reference);
    if prev.err_bar <= floor {
        return Err(Error::DegenerateEstimate { previous: prev.err_bar });
    }
    let zeta = err_bar / (dt * prev.err_bar);
    let sigma = prev.sigma_tilde * zeta;
    let x = sigma * powi(dt, k as i32);
    if x >= 1.0 {
        return Err(Error::EstimatorBlowup { value: x });
    }
    let increment = norm.distance(state.endpoint(), u_tilde0_s, reference);
    Ok(SweepRecord {
        k,
        dt,
        err_bar,
        err_tilde: x / (1.0 - x) * increment,
        zeta_tilde: Some(zeta),
        sigma_tilde: sigma,
        dt_max_k: 1.0 / zeta,
    })
}

/// `Δt_new,k`, or `None` for the initial sweep.
pub fn dt_new_k(rec: &SweepRecord, eta: f64) -> Option<f64> {
    if rec.k == 0 {
        return None;
    }
    let x = rec.sigma_tilde * powi(rec.dt, rec.k as i32);
    let denom = (1.0 - x) * rec.err_tilde + x * eta;
    Some(powf(eta / denom, 1.0 / rec.k as f64) * rec.dt)
}

/// `Δt_new,k_max`, extrapolating `σ̃_{k_max} ≈ ζ̃_k^{k_max − k} σ̃_k`.
pub fn dt_new_kmax(rec: &SweepRecord, eta: f64, k_max: usize) -> Option<f64> {
    let zeta = rec.zeta_tilde?;
    let k = rec.k as f64;
    let km = k_max.max(rec.k) as f64;
    let x = rec.sigma_tilde * powi(rec.dt, rec.k as i32);
    let denom = (1.0 - x) * rec.err_tilde + x * eta;
    Some(powf(eta / denom, 1.0 / km) * powf(zeta, -(km - k) / km) * powf(rec.dt, k / km))
}

/// `ν (η_split / err̃_0)^{1/(p̂+1)} Δt`.
pub fn split_dt(err0: f64, cfg: &ControllerConfig, dt: f64) -> f64 {
    cfg.nu * powf(cfg.eta_split() / err0, 1.0 / (cfg.order_hat + 1) as f64) * dt
}

/// Step proposed by the configured rule from the records of one step.
/// With only the initial sweep available the split formula is used.
pub fn next_dt(history: &[SweepRecord], cfg: &ControllerConfig) -> f64 {
    let Some(rec) = history.last() else {
        return cfg.dt_max_abs;
    };
    let first = history.first().unwrap();
    let raw = match (cfg.rule, dt_new_k(rec, cfg.eta), dt_new_kmax(rec, cfg.eta, cfg.k_max)) {
        (StepRule::Split, _, _) | (_, None, _) => split_dt(first.err_tilde, cfg, first.dt),
        (StepRule::PerIteration, Some(a), _) => cfg.nu * a.min(rec.dt_max_k),
        (StepRule::MaxIteration, Some(a), b) => cfg.nu * b.unwrap_or(a).min(rec.dt_max_k),
        (StepRule::Composite, Some(a), b) => cfg.nu * a.min(b.unwrap_or(a)).min(rec.dt_max_k),
    };
    cfg.clamp(raw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Continue,
    Restart(f64),
}

/// `σ̃_{k_max}` and `Δt` of the previous accepted step, for the `k = 0`
/// prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreviousStep {
    pub sigma_kmax: f64,
    pub dt: f64,
}

/// Predicts `err̃_{k_max}` from sweep `k` and asks for a restart when it
/// would exceed `η`. `k = 0` needs the previous step; without it this
/// returns [`Error::MissingHistory`].
pub fn predict_restart(rec: &SweepRecord, cfg: &ControllerConfig, previous: Option<&PreviousStep>) -> Result<Prediction> {
    let km = cfg.k_max;
    if rec.k >= km {
        return Ok(Prediction::Continue);
    }
    let kmf = km as f64;
    if rec.k == 0 {
        if cfg.initial_prediction == InitialPrediction::Off {
            return Ok(Prediction::Continue);
        }
        let prev = previous.ok_or(Error::MissingHistory)?;
        let sigma = match cfg.initial_prediction {
            InitialPrediction::StepRatio => prev.sigma_kmax * powi(rec.dt / prev.dt, km as i32),
            _ => prev.sigma_kmax,
        };
        let predicted = sigma * powi(rec.dt, km as i32) * rec.err_tilde;
        if predicted > cfg.eta {
            let dt = cfg.nu * powf(cfg.eta / (sigma * rec.err_tilde), 1.0 / kmf);
            return Ok(Prediction::Restart(cfg.clamp(dt)));
        }
        return Ok(Prediction::Continue);
    }
    let zeta = rec.zeta_tilde.ok_or(Error::MissingHistory)?;
    let gap = (km - rec.k) as i32;
    let predicted = powi(zeta * rec.dt, gap) * rec.err_tilde;
    if predicted > cfg.eta {
        let dt = cfg.nu * powf(cfg.eta / (powi(zeta, gap) * rec.err_tilde), 1.0 / kmf) * powf(rec.dt, rec.k as f64 / kmf);
        return Ok(Prediction::Restart(cfg.clamp(dt)));
    }
    Ok(Prediction::Continue)
}

/// One attempted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    /// Sweeps performed (0 = initial sweep only).
    pub k_used: usize,
    pub records: Vec<SweepRecord>,
    pub accepted: bool,
    /// Restarts that preceded this attempt at the same `t`.
    pub restarts: usize,
    /// Sweeps thrown away by a rejection.
    pub wasted_sweeps: usize,
    pub wall_ns: u64,
}

impl StepReport {
    pub fn err_bar(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.err_bar)
    }

    pub fn err_tilde(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.err_tilde)
    }

    pub fn zeta(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.zeta_tilde)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, u)` at the start and after every accepted step.
    pub points: Vec<(f64, Vec<f64>)>,
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn accepted(&self) -> impl Iterator<Item = &StepReport> {
        self.reports.iter().filter(|r| r.accepted)
    }
}

enum Attempt {
    Accept(DcsState),
    Restart(f64),
}

/// Time loop around a [`DcsIntegrator`].
pub struct AdaptiveIntegrator<'d, 'a> {
    dcs: &'d DcsIntegrator<'a>,
    cfg: ControllerConfig,
    clock: Option<fn() -> u64>,
}

impl<'d, 'a> AdaptiveIntegrator<'d, 'a> {
    /// Refuses integrators in hybrid spatial mode, whose estimates do not
    /// measure the error of the computed solution.
    pub fn new(dcs: &'d DcsIntegrator<'a>, cfg: ControllerConfig) -> Result<Self> {
        if dcs.is_hybrid() {
            return Err(Error::HybridErrorControl);
        }
        cfg.validate()?;
        Ok(Self { dcs, cfg, clock: None })
    }

    /// Nanosecond clock for `wall_ns`; without one the field stays 0 so
    /// reports are reproducible.
    pub fn with_clock(mut self, clock: fn() -> u64) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    fn now(&self) -> u64 {
        self.clock.map_or(0, |c| c())
    }

    fn attempt(
        &self,
        u: &[f64],
        t: f64,
        h: f64,
        previous: Option<&PreviousStep>,
        records: &mut Vec<SweepRecord>,
    ) -> Result<Attempt> {
        let cfg = &self.cfg;
        let tab = self.dcs.tableau();
        let mut state = self.dcs.initial_sweep(u, t, h)?;
        let u0s = state.endpoint().to_vec();
        let mut previous_state: Option<DcsState> = None;
        loop {
            let rec = match estimate_error(tab, cfg.norm, records, &state, &u0s) {
                Ok(r) => r,
                Err(Error::DegenerateEstimate { .. }) => {
                    // already at round-off: keep the last state if it was good enough
                    let last = records.last().unwrap();
                    if last.err_tilde <= cfg.eta {
                        return Ok(Attempt::Accept(previous_state.unwrap_or(state)));
                    }
                    return Ok(Attempt::Restart(next_dt(records, cfg)));
                }
                Err(Error::EstimatorBlowup { value }) => {
                    let k = state.k as f64;
                    return Ok(Attempt::Restart(cfg.clamp(0.5 * cfg.nu * h * powf(value, -1.0 / k))));
                }
                Err(e) => return Err(e),
            };
            records.push(rec);
            if rec.err_tilde <= cfg.tolerance() && state.k >= cfg.min_sweeps() {
                return Ok(Attempt::Accept(state));
            }
            if state.k >= cfg.sweep_cap() {
                return Ok(Attempt::Restart(next_dt(records, cfg)));
            }
            if cfg.predict {
                match predict_restart(&rec, cfg, previous) {
                    Ok(Prediction::Restart(dt)) => return Ok(Attempt::Restart(dt)),
                    Ok(Prediction::Continue) | Err(Error::MissingHistory) => {}
                    Err(e) => return Err(e),
                }
            }
            let next = self.dcs.correction_sweep(&state)?;
            previous_state = Some(core::mem::replace(&mut state, next));
        }
    }

    /// Integrates from `t0` to `tf`, landing exactly on `tf`.
    pub fn integrate(&self, t0: f64, tf: f64, u0: &[f64], dt0: f64) -> Result<Trajectory> {
        if !(tf > t0) {
            return Err(Error::InvalidConfig("empty time window"));
        }
        if !(dt0 > 0.0) {
            return Err(Error::InvalidConfig("initial step must be positive"));
        }
        let cfg = &self.cfg;
        let mut t = t0;
        let mut u = u0.to_vec();
        let mut dt = cfg.clamp(dt0);
        let mut previous: Option<PreviousStep> = None;
        let mut restarts = 0usize;
        let mut points = alloc::vec![(t0, u.clone())];
        let mut reports = Vec::new();
        while t < tf {
            let remaining = tf - t;
            let landing = dt * (1.0 + 1e-3) >= remaining;
            let h = if landing { remaining } else { dt };
            let start = self.now();
            let mut records = Vec::new();
            let attempt = self.attempt(&u, t, h, previous.as_ref(), &mut records)?;
            let wall_ns = self.now().saturating_sub(start);
            let k_used = records.last().map_or(0, |r| r.k);
            match attempt {
                Attempt::Accept(state) => {
                    reports.push(StepReport {
                        t,
                        dt: h,
                        k_used: state.k,
                        records: records.clone(),
                        accepted: true,
                        restarts,
                        wasted_sweeps: 0,
                        wall_ns,
                    });
                    restarts = 0;
                    t = if landing { tf } else { t + h };
                    u = state.endpoint().to_vec();
                    points.push((t, u.clone()));
                    if let Some(last) = records.last() {
                        if let Some(zeta) = last.zeta_tilde {
                            let gap = cfg.k_max.saturating_sub(last.k) as i32;
                            previous = Some(PreviousStep {
                                sigma_kmax: last.sigma_tilde * powi(zeta, gap),
                                dt: h,
                            });
                        }
                    }
                    dt = next_dt(&records, cfg).min(cfg.growth_max * h);
                }
                Attempt::Restart(new_dt) => {
                    reports.push(StepReport {
                        t,
                        dt: h,
                        k_used,
                        records,
                        accepted: false,
                        restarts,
                        wasted_sweeps: k_used + 1,
                        wall_ns,
                    });
                    restarts += 1;
                    if restarts > cfg.max_rejections {
                        return Err(Error::StepUnderflow { t, h });
                    }
                    let shrunk = new_dt.min(cfg.nu * h);
                    if shrunk < cfg.dt_min {
                        return Err(Error::StepUnderflow { t, h: shrunk });
                    }
                    dt = shrunk;
                }
            }
        }
        Ok(Trajectory { points, reports })
    }
}
