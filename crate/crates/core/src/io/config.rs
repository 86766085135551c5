//! TOML scenario files.

use std::path::Path;

use crate::error::{FdeError, Result};
use crate::sim::ScenarioConfig;

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| FdeError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub fn scenario_to_toml(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| FdeError::Config(e.to_string()))
}
