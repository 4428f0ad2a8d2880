//! Run manifest: the command, the build version and the full configuration,
//! written next to every output so a run can be replayed.

use anyhow::{ensure, Context, Result};

use crate::config::RunConfig;
use crate::io::{parse_kv, render_kv};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MANIFEST_HEADER: &str = "# dcs manifest";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
        }
    }

    pub fn render(&self) -> String {
        let mut entries = vec![
            ("command".to_string(), self.command.clone()),
            ("version".to_string(), self.version.clone()),
        ];
        entries.extend(self.config.entries());
        format!("{MANIFEST_HEADER}\n{}", render_kv(&entries))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = parse_kv(text)?;
        let mut take = |key: &str| -> Result<String> {
            let i = entries.iter().position(|(k, _)| k == key).with_context(|| format!("manifest lacks '{key}'"))?;
            Ok(entries.remove(i).1)
        };
        let command = take("command")?;
        let version = take("version")?;
        ensure!(!command.is_empty(), "manifest has an empty command");
        let mut config = RunConfig::default();
        config.apply(&entries)?;
        Ok(Self {
            command,
            version,
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemKind;

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            problem: ProblemKind::Linear2x2,
            eta: 3e-7,
            ..RunConfig::default()
        };
        let m = RunManifest::new("error-control", &cfg);
        let text = m.render();
        assert!(text.starts_with("# dcs manifest\ncommand=error-control\n"));
        assert_eq!(RunManifest::parse(&text).unwrap(), m);
    }

    #[test]
    fn missing_fields_are_errors() {
        assert!(RunManifest::parse("version=1\n").is_err());
        assert!(RunManifest::parse("command=run\nversion=1\nbogus=2\n").is_err());
    }
}
