//! Run configuration: defaults, `key=value` overrides and the snapshot
//! written into every manifest.

use std::str::FromStr;

use anyhow::{bail, Context, Result};
use dcs_core::controller::{ControllerConfig, ErrorNorm, InitialPrediction, StepRule};
use dcs_core::problems::BzSetup;
use dcs_core::quadrature::radau_iia_3;
use dcs_core::reference::ReferenceConfig;
use dcs_core::spatial::SpatialOrder;
use dcs_core::splitting::{Ordering, SplittingKind, SplittingScheme};
use dcs_core::subsolvers::SubsolverConfig;

use crate::experiments::{parse_rule, rule_name};
use crate::io::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Bz,
    Linear2x2,
    Dahlquist,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Bz => "bz",
            ProblemKind::Linear2x2 => "linear2x2",
            ProblemKind::Dahlquist => "dahlquist",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bz" => ProblemKind::Bz,
            "linear2x2" => ProblemKind::Linear2x2,
            "dahlquist" => ProblemKind::Dahlquist,
            _ => bail!("unknown problem '{s}' (bz, linear2x2, dahlquist)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormChoice {
    /// Scaled RMS for BZ, plain RMS otherwise.
    Auto,
    Rms,
    Max,
    ScaledRms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub lambda: f64,
    pub scheme: SplittingKind,
    pub ordering: Ordering,
    pub eta: f64,
    pub etas: Vec<f64>,
    pub rules: Vec<StepRule>,
    /// Overrides the scheme's useful number of corrections.
    pub kmax: Option<usize>,
    /// Largest step of a sweep, or the first trial step of adaptive runs.
    pub dt0: Option<f64>,
    pub dt_count: usize,
    pub grid_n: usize,
    pub spatial_order: SpatialOrder,
    pub hybrid: bool,
    /// Problem default when absent.
    pub window: Option<(f64, f64)>,
    pub sub_tol: f64,
    pub ref_tol: f64,
    pub norm: NormChoice,
    pub predict: bool,
    pub initial_prediction: InitialPrediction,
    pub nu: f64,
    pub growth_max: f64,
    pub seed_width: f64,
    pub spin_up: f64,
    pub space_ns: Vec<usize>,
    pub space_fine_n: usize,
    /// State CSV replacing the built-in initial state at `window.0`.
    pub init: Option<String>,
    /// Record wall-clock time per step (makes step tables non-reproducible).
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Bz,
            lambda: -1.0,
            scheme: SplittingKind::Lie,
            ordering: Ordering::ReactionLast,
            eta: 1e-5,
            etas: vec![1e-5, 1e-6, 1e-7],
            rules: vec![StepRule::PerIteration, StepRule::MaxIteration, StepRule::Split],
            kmax: None,
            dt0: None,
            dt_count: 10,
            grid_n: 201,
            spatial_order: SpatialOrder::Second,
            hybrid: false,
            window: None,
            sub_tol: 1e-10,
            ref_tol: 1e-12,
            norm: NormChoice::Auto,
            predict: true,
            initial_prediction: InitialPrediction::Off,
            nu: 0.9,
            growth_max: 5.0,
            seed_width: 0.05,
            spin_up: 0.1,
            space_ns: vec![51, 101, 201],
            space_fine_n: 401,
            init: None,
            timing: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow::anyhow!("{key}: cannot parse '{v}': {e}"))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = v.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("{key}: empty list");
    }
    Ok(items)
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

pub fn parse_scheme(s: &str) -> Result<SplittingKind> {
    Ok(match s {
        "lie" => SplittingKind::Lie,
        "strang" => SplittingKind::Strang,
        _ => bail!("unknown scheme '{s}' (lie, strang)"),
    })
}

pub fn parse_ordering(s: &str) -> Result<Ordering> {
    Ok(match s {
        "reaction-last" => Ordering::ReactionLast,
        "diffusion-last" => Ordering::DiffusionLast,
        _ => bail!("unknown ordering '{s}' (reaction-last, diffusion-last)"),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("{key}: expected a boolean, found '{v}'"),
    }
}

impl RunConfig {
    /// Full-size grid and window.
    pub fn paper_scale(mut self) -> Self {
        self.grid_n = 1001;
        self.window = Some((0.0, 1.0));
        self
    }

    /// Desk window `[0.5, 0.6]` for BZ, `[0, 1]` for the linear tests.
    pub fn window(&self) -> (f64, f64) {
        self.window.unwrap_or(match self.problem {
            ProblemKind::Bz => (0.5, 0.6),
            _ => (0.0, 1.0),
        })
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "problem" => self.problem = v.parse()?,
            "lambda" => self.lambda = parse(key, v)?,
            "scheme" => self.scheme = parse_scheme(v)?,
            "ordering" => self.ordering = parse_ordering(v)?,
            "eta" => self.eta = parse(key, v)?,
            "etas" => self.etas = parse_list(key, v)?,
            "rules" => {
                self.rules = v
                    .split(',')
                    .map(|s| parse_rule(s.trim()).with_context(|| format!("rules: unknown rule '{s}'")))
                    .collect::<Result<_>>()?
            }
            "kmax" => self.kmax = if v.is_empty() { None } else { Some(parse(key, v)?) },
            "dt0" => self.dt0 = if v.is_empty() { None } else { Some(parse(key, v)?) },
            "dt_count" => self.dt_count = parse(key, v)?,
            "grid_n" => self.grid_n = parse(key, v)?,
            "spatial_order" => self.spatial_order = SpatialOrder::from_int(parse(key, v)?)?,
            "hybrid" => self.hybrid = parse_bool(key, v)?,
            "window" if v.is_empty() => self.window = None,
            "window" => {
                let w: Vec<f64> = parse_list(key, v)?;
                if w.len() != 2 {
                    bail!("window: expected two times, found {}", w.len());
                }
                self.window = Some((w[0], w[1]));
            }
            "sub_tol" => self.sub_tol = parse(key, v)?,
            "ref_tol" => self.ref_tol = parse(key, v)?,
            "norm" => {
                self.norm = match v {
                    "auto" => NormChoice::Auto,
                    "rms" => NormChoice::Rms,
                    "max" => NormChoice::Max,
                    "scaled-rms" => NormChoice::ScaledRms,
                    _ => bail!("norm: unknown '{v}'"),
                }
            }
            "predict" => self.predict = parse_bool(key, v)?,
            "initial_prediction" => {
                self.initial_prediction = match v {
                    "off" => InitialPrediction::Off,
                    "step-ratio" => InitialPrediction::StepRatio,
                    "frozen" => InitialPrediction::Frozen,
                    _ => bail!("initial_prediction: unknown '{v}'"),
                }
            }
            "nu" => self.nu = parse(key, v)?,
            "growth_max" => self.growth_max = parse(key, v)?,
            "seed_width" => self.seed_width = parse(key, v)?,
            "spin_up" => self.spin_up = parse(key, v)?,
            "space_ns" => self.space_ns = parse_list(key, v)?,
            "space_fine_n" => self.space_fine_n = parse(key, v)?,
            "timing" => self.timing = parse_bool(key, v)?,
            "init" => self.init = if v.is_empty() { None } else { Some(v.to_string()) },
            _ => bail!("unknown configuration key '{key}'"),
        }
        Ok(())
    }

    pub fn apply(&mut self, entries: &[(String, String)]) -> Result<()> {
        for (k, v) in entries {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Every setting as `key=value`; [`RunConfig::apply`] inverts it exactly.
    pub fn entries(&self) -> Vec<(String, String)> {
        let e = |k: &str, v: String| (k.to_string(), v);
        vec![
            e("problem", self.problem.name().into()),
            e("lambda", num(self.lambda)),
            e("scheme", match self.scheme {
                SplittingKind::Lie => "lie".into(),
                SplittingKind::Strang => "strang".into(),
            }),
            e("ordering", match self.ordering {
                Ordering::ReactionLast => "reaction-last".into(),
                Ordering::DiffusionLast => "diffusion-last".into(),
            }),
            e("eta", num(self.eta)),
            e("etas", join(&self.etas, |x| num(*x))),
            e("rules", join(&self.rules, |r| rule_name(*r).to_string())),
            e("kmax", self.kmax.map(|k| k.to_string()).unwrap_or_default()),
            e("dt0", self.dt0.map(num).unwrap_or_default()),
            e("dt_count", self.dt_count.to_string()),
            e("grid_n", self.grid_n.to_string()),
            e("spatial_order", self.spatial_order.as_int().to_string()),
            e("hybrid", self.hybrid.to_string()),
            e("window", self.window.map(|w| format!("{},{}", num(w.0), num(w.1))).unwrap_or_default()),
            e("sub_tol", num(self.sub_tol)),
            e("ref_tol", num(self.ref_tol)),
            e("norm", match self.norm {
                NormChoice::Auto => "auto".into(),
                NormChoice::Rms => "rms".into(),
                NormChoice::Max => "max".into(),
                NormChoice::ScaledRms => "scaled-rms".into(),
            }),
            e("predict", self.predict.to_string()),
            e("initial_prediction", match self.initial_prediction {
                InitialPrediction::Off => "off".into(),
                InitialPrediction::StepRatio => "step-ratio".into(),
                InitialPrediction::Frozen => "frozen".into(),
            }),
            e("nu", num(self.nu)),
            e("growth_max", num(self.growth_max)),
            e("seed_width", num(self.seed_width)),
            e("spin_up", num(self.spin_up)),
            e("space_ns", join(&self.space_ns, |n| n.to_string())),
            e("space_fine_n", self.space_fine_n.to_string()),
            e("init", self.init.clone().unwrap_or_default()),
            e("timing", self.timing.to_string()),
        ]
    }

    pub fn splitting(&self) -> SplittingScheme {
        SplittingScheme::new(self.scheme, self.ordering)
    }

    pub fn k_max(&self) -> usize {
        self.kmax.unwrap_or_else(|| self.splitting().k_max(&radau_iia_3()))
    }

    pub fn error_norm(&self, species: usize) -> ErrorNorm {
        match self.norm {
            NormChoice::Auto if self.problem == ProblemKind::Bz => ErrorNorm::ScaledRms { species },
            NormChoice::Auto | NormChoice::Rms => ErrorNorm::Rms,
            NormChoice::Max => ErrorNorm::Max,
            NormChoice::ScaledRms => ErrorNorm::ScaledRms { species },
        }
    }

    pub fn subsolver(&self) -> SubsolverConfig {
        SubsolverConfig::with_tolerance(self.sub_tol)
    }

    pub fn reference(&self) -> ReferenceConfig {
        ReferenceConfig::with_tolerance(self.ref_tol)
    }

    pub fn bz_setup(&self) -> BzSetup {
        BzSetup {
            seed_width: self.seed_width,
            spin_up: self.spin_up,
            ..BzSetup::default()
        }
    }

    pub fn controller(&self, species: usize) -> ControllerConfig {
        let scheme = self.splitting();
        ControllerConfig {
            norm: self.error_norm(species),
            predict: self.predict,
            initial_prediction: self.initial_prediction,
            nu: self.nu,
            growth_max: self.growth_max,
            k_max: self.k_max(),
            ..ControllerConfig::for_scheme(&scheme, &radau_iia_3(), self.eta)
        }
    }

    /// Default largest step of a convergence sweep or first adaptive step.
    pub fn dt0_or(&self, fallback: f64) -> f64 {
        self.dt0.unwrap_or(fallback)
    }
}
