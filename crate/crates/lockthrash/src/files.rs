//! Experiment config files and the bundled presets.

use std::fs;
use std::path::Path;

use lockthrash_core::{PlatformConfig, WorkloadConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A platform and the workload to run on it, as stored in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub platform: PlatformConfig,
    pub workload: WorkloadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PlatformFile {
    platform: PlatformConfig,
}

const BUNDLED: [(&str, &str); 4] = [
    ("c1", include_str!("../configs/c1.toml")),
    ("c2", include_str!("../configs/c2.toml")),
    ("c3", include_str!("../configs/c3.toml")),
    ("c4", include_str!("../configs/c4.toml")),
];

const PLATFORMS: [(&str, &str); 3] = [
    ("p1", include_str!("../configs/platforms/p1.toml")),
    ("p2", include_str!("../configs/platforms/p2.toml")),
    ("p3", include_str!("../configs/platforms/p3.toml")),
];

pub const BUNDLED_NAMES: [&str; 4] = ["c1", "c2", "c3", "c4"];

impl ExperimentConfig {
    /// Parses and validates a config.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.platform.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.workload
            .validate(Some(&self.platform))
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types always serialize")
    }

    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, text)| Self::parse(text).expect("bundled configs are valid"))
    }

    /// A bundled name such as `c3`, or a path to a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<Self, CliError> {
        if let Some(config) = Self::bundled(name_or_path) {
            return Ok(config);
        }
        let text = fs::read_to_string(Path::new(name_or_path))
            .map_err(|e| CliError::Config(format!("cannot read {name_or_path}: {e}")))?;
        Self::parse(&text)
    }
}

pub fn bundled_platform(name: &str) -> Option<PlatformConfig> {
    PLATFORMS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| {
            toml::from_str::<PlatformFile>(text)
                .expect("bundled platforms are valid")
                .platform
        })
}

/// A bundled platform name or a TOML file with a `[platform]` table.
pub fn resolve_platform(name_or_path: &str) -> Result<PlatformConfig, CliError> {
    if let Some(p) = bundled_platform(name_or_path) {
        return Ok(p);
    }
    let text = fs::read_to_string(name_or_path)
        .map_err(|e| CliError::Config(format!("cannot read {name_or_path}: {e}")))?;
    let file: PlatformFile = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    file.platform
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(file.platform)
}
