//! Command-line flags. Precedence, lowest first: defaults, `--paper-scale`,
//! explicit flags, the `--config` file.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Command;
use crate::config::RunConfig;
use crate::io::parse_kv;
use crate::manifest::{RunManifest, MANIFEST_HEADER};

#[derive(Debug, Parser)]
#[command(name = "dcs", version, about = "Deferred-correction splitting experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Adaptive integration over the window (fixed steps with --hybrid).
    Run(Flags),
    /// One-step errors over a dyadic step sweep.
    ConvergeLocal(Flags),
    /// Constant-step errors at the window end.
    ConvergeGlobal(Flags),
    /// Adaptive runs over tolerances and step rules.
    ErrorControl(Flags),
    /// Laplacian orders, nested-grid resolution sweep and the hybrid gap.
    SpaceStudy(Flags),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderingArg {
    ReactionLast,
    DiffusionLast,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// bz, linear2x2 or dahlquist.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    pub ordering: Option<OrderingArg>,
    /// Tolerance for `run`; comma-separated list for `error-control`.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub dt0: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, value_parser = ["2", "4"])]
    pub spatial_order: Option<String>,
    #[arg(long)]
    pub hybrid: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// n = 1001 and window [0, 1].
    #[arg(long)]
    pub paper_scale: bool,
    /// key=value file, or a manifest from an earlier run; overrides every flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Flags {
    fn entries(&self, cmd: Command) -> Vec<(String, String)> {
        let mut e = Vec::new();
        let mut put = |k: &str, v: String| e.push((k.to_string(), v));
        if let Some(p) = &self.problem {
            put("problem", p.clone());
        }
        if let Some(s) = self.scheme {
            put("scheme", match s {
                SchemeArg::Lie => "lie",
                SchemeArg::Strang => "strang",
            }.into());
        }
        if let Some(o) = self.ordering {
            put("ordering", match o {
                OrderingArg::ReactionLast => "reaction-last",
                OrderingArg::DiffusionLast => "diffusion-last",
            }.into());
        }
        if let Some(eta) = &self.eta {
            put(if cmd == Command::ErrorControl { "etas" } else { "eta" }, eta.clone());
        }
        if let Some(k) = self.kmax {
            put("kmax", k.to_string());
        }
        if let Some(dt) = self.dt0 {
            put("dt0", dt.to_string());
        }
        if let Some(n) = self.grid_n {
            put("grid_n", n.to_string());
        }
        if let Some(o) = &self.spatial_order {
            put("spatial_order", o.clone());
        }
        if self.hybrid {
            put("hybrid", "true".into());
        }
        e
    }
}

impl Cli {
    /// Command, merged configuration and output directory.
    pub fn resolve(&self) -> Result<(Command, RunConfig, PathBuf)> {
        let (cmd, flags) = match &self.command {
            Sub::Run(f) => (Command::Run, f),
            Sub::ConvergeLocal(f) => (Command::ConvergeLocal, f),
            Sub::ConvergeGlobal(f) => (Command::ConvergeGlobal, f),
            Sub::ErrorControl(f) => (Command::ErrorControl, f),
            Sub::SpaceStudy(f) => (Command::SpaceStudy, f),
        };
        let mut cfg = RunConfig::default();
        if flags.paper_scale {
            cfg = cfg.paper_scale();
        }
        cfg.apply(&flags.entries(cmd))?;
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            if text.starts_with(MANIFEST_HEADER) {
                cfg = RunManifest::parse(&text)?.config;
            } else {
                cfg.apply(&parse_kv(&text)?)?;
            }
        }
        Ok((cmd, cfg, flags.out.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemKind;
    use dcs_core::splitting::SplittingKind;

    fn resolve(args: &[&str]) -> Result<(Command, RunConfig, PathBuf)> {
        Cli::try_parse_from(std::iter::once("dcs").chain(args.iter().copied()))?.resolve()
    }

    #[test]
    fn flags_reach_the_config() {
        let (cmd, cfg, out) = resolve(&[
            "converge-local", "--problem", "linear2x2", "--scheme", "strang", "--kmax", "2", "--dt0", "0.05", "--out", "res",
        ])
        .unwrap();
        assert_eq!(cmd, Command::ConvergeLocal);
        assert_eq!(cfg.problem, ProblemKind::Linear2x2);
        assert_eq!(cfg.scheme, SplittingKind::Strang);
        assert_eq!((cfg.kmax, cfg.dt0), (Some(2), Some(0.05)));
        assert_eq!(out, PathBuf::from("res"));
    }

    #[test]
    fn eta_list_for_error_control() {
        let (_, cfg, _) = resolve(&["error-control", "--eta", "1e-4,1e-6"]).unwrap();
        assert_eq!(cfg.etas, vec![1e-4, 1e-6]);
        let (_, cfg, _) = resolve(&["run", "--eta", "1e-4"]).unwrap();
        assert_eq!(cfg.eta, 1e-4);
    }

    #[test]
    fn paper_scale_then_flags_then_config_file() {
        let (_, cfg, _) = resolve(&["run", "--paper-scale"]).unwrap();
        assert_eq!((cfg.grid_n, cfg.window()), (1001, (0.0, 1.0)));
        let (_, cfg, _) = resolve(&["run", "--paper-scale", "--grid-n", "401"]).unwrap();
        assert_eq!(cfg.grid_n, 401);

        let p = std::env::temp_dir().join(format!("dcs-cli-cfg-{}.txt", std::process::id()));
        std::fs::write(&p, "grid_n = 101\nscheme = strang\n").unwrap();
        let (_, cfg, _) = resolve(&["run", "--grid-n", "401", "--scheme", "lie", "--config", p.to_str().unwrap()]).unwrap();
        assert_eq!(cfg.grid_n, 101);
        assert_eq!(cfg.scheme, SplittingKind::Strang);
        std::fs::remove_file(p).unwrap();
    }

    #[test]
    fn invalid_flags_are_rejected() {
        assert!(resolve(&["run", "--spatial-order", "3"]).is_err());
        assert!(resolve(&["run", "--scheme", "yoshida"]).is_err());
        assert!(resolve(&["run", "--problem", "lorenz"]).is_err());
    }
}
