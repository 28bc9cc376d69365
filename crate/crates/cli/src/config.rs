//! Run settings: built-in defaults, overridden by an optional TOML file,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use lppl_bubble::{FilterConfig, PipelineConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Emit::Csv),
            "json" => Ok(Emit::Json),
            "svg" => Ok(Emit::Svg),
            other => Err(format!("unknown output format '{other}' (expected csv, json or svg)")),
        }
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub pipeline: Option<PipelineConfig>,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    pub smooth_weekly: Option<bool>,
    pub emit: Option<Vec<Emit>>,
    pub date_column: Option<String>,
    pub price_column: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for one `fit` or `indicate` invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub inputs: Vec<(PathBuf, String)>,
    pub out_dir: PathBuf,
    pub pipeline: PipelineConfig,
    pub filter: FilterConfig,
    pub emit: Vec<Emit>,
    pub smooth_weekly: bool,
    pub date_column: String,
    pub price_column: String,
}

impl RunManifest {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.inputs.is_empty() {
            return Err(CliError::Config("at least one --input is required".into()));
        }
        if self.emit.is_empty() {
            return Err(CliError::Config("--emit needs at least one of csv, json, svg".into()));
        }
        let mut labels: Vec<&str> = self.inputs.iter().map(|(_, l)| l.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("asset labels must be unique; use --label".into()));
        }
        self.pipeline.validate()?;
        self.filter.validate()?;
        Ok(())
    }

    pub fn emits(&self, kind: Emit) -> bool {
        self.emit.contains(&kind)
    }
}
