//! Optional TOML config file supplying defaults for numeric options.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Keys accepted in a config file; every key is optional and flags win.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub manifold: Option<String>,
    pub steps: Option<u64>,
    pub snapshots: Option<u64>,
    pub steps_per_snapshot: Option<u64>,
    pub seed: Option<u64>,
    pub instances: Option<u64>,
    pub max_iterations: Option<u64>,
    pub tolerance: Option<f64>,
    pub threads: Option<u64>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: FileConfig =
            toml::from_str(text).map_err(|e| CliError::input(format!("{origin}: {e}")))?;
        cfg.validate()
            .map_err(|e| CliError::input(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn validate(&self) -> Result<(), String> {
        let positive = [
            ("steps", self.steps),
            ("steps_per_snapshot", self.steps_per_snapshot),
            ("instances", self.instances),
            ("max_iterations", self.max_iterations),
            ("threads", self.threads),
        ];
        for (name, v) in positive {
            if v == Some(0) {
                return Err(format!("invalid parameter: {name} must be positive"));
            }
        }
        if matches!(self.snapshots, Some(s) if s < 2) {
            return Err("invalid parameter: snapshots must be at least 2".into());
        }
        if matches!(self.tolerance, Some(t) if !(t > 0.0 && t.is_finite())) {
            return Err("invalid parameter: tolerance must be positive".into());
        }
        Ok(())
    }
}
