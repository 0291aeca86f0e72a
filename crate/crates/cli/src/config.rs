//! TOML pipeline configuration with field-path validation errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

/// A config problem, reported with the offending field path (exit code 1).
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config: {}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default)]
    pub archive: Vec<PathBuf>,
    #[serde(default)]
    pub snapshots: Vec<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Optional `provider customer` pairs, one per line.
    pub relationships: Option<PathBuf>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    /// `(0, 0)` means unset; stages that need it reject that.
    #[serde(default)]
    pub timeframe: (u64, u64),
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default = "default_per_period")]
    pub per_period: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_redraw_cap")]
    pub redraw_cap: usize,
    /// Start times of the 1 h windows used for volume estimation.
    #[serde(default)]
    pub volume_windows: Vec<u64>,
    /// Coverage fraction targeted by the benchmark stage.
    #[serde(default = "default_target")]
    pub target: f64,
}

fn default_periods() -> usize {
    4
}
fn default_per_period() -> usize {
    15
}
fn default_alpha() -> f64 {
    0.25
}
fn default_budget() -> f64 {
    f64::MAX
}
fn default_redraw_cap() -> usize {
    200
}
fn default_target() -> f64 {
    0.8
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            timeframe: (0, 0),
            periods: default_periods(),
            per_period: default_per_period(),
            alpha: default_alpha(),
            budget: default_budget(),
            seed: 0,
            redraw_cap: default_redraw_cap(),
            volume_windows: Vec::new(),
            target: default_target(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CategoriesSection {
    #[serde(default)]
    pub tier1: BTreeSet<u32>,
    #[serde(default)]
    pub hypergiants: BTreeSet<u32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub categories: CategoriesSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("paths.config", format!("cannot read {}: {e}", path.display())))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| err("(toml)", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, p) in self.paths.archive.iter().enumerate() {
            if !p.exists() {
                return Err(err(
                    &format!("paths.archive[{i}]"),
                    format!("{} does not exist", p.display()),
                ));
            }
        }
        for (i, p) in self.paths.snapshots.iter().enumerate() {
            if !p.exists() {
                return Err(err(
                    &format!("paths.snapshots[{i}]"),
                    format!("{} does not exist", p.display()),
                ));
            }
        }
        if let Some(p) = &self.paths.relationships {
            if !p.exists() {
                return Err(err(
                    "paths.relationships",
                    format!("{} does not exist", p.display()),
                ));
            }
        }
        let (start, end) = self.pipeline.timeframe;
        if (start, end) != (0, 0) && end <= start {
            return Err(err("pipeline.timeframe", "end must be after start"));
        }
        if self.pipeline.periods == 0 {
            return Err(err("pipeline.periods", "must be at least 1"));
        }
        if self.pipeline.per_period == 0 || self.pipeline.per_period > 15 {
            return Err(err("pipeline.per_period", "must be in 1..=15"));
        }
        if !(self.pipeline.alpha > 0.0 && self.pipeline.alpha <= 1.0) {
            return Err(err("pipeline.alpha", "must be in (0, 1]"));
        }
        if !(self.pipeline.budget > 0.0) {
            return Err(err("pipeline.budget", "must be positive"));
        }
        if !(self.pipeline.target > 0.0 && self.pipeline.target <= 1.0) {
            return Err(err("pipeline.target", "must be in (0, 1]"));
        }
        Ok(())
    }

    /// Output root: `VPSET_OUTPUT_ROOT` env var wins over the config value.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os("VPSET_OUTPUT_ROOT") {
            Some(root) => PathBuf::from(root),
            None => self.paths.output_dir.clone(),
        }
    }
}
