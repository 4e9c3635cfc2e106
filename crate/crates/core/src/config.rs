//! TOML run configuration.
//!
//! ```toml
//! [salience]
//! kind = "u_shaped"          # required
//!
//! [pipeline]
//! inbound = ["sigma", "pi+", "phi", "delta", "lambda"]   # required
//! outbound = ["sigma", "pi-"]                            # required
//! archival = true                                        # required
//! scale_level = 2                                        # required
//!
//! [oracle]
//! c = 2.0
//!
//! [[scale]]
//! select_k = 16
//! # one table per ladder level
//! ```
//!
//! Every other field falls back to its default. Unknown keys are errors.

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::{Table, Value};

use crate::harness::{HarnessConfig, OracleParams};
use crate::pipeline::{PipelineConfig, ScalePolicy};
use crate::salience::SalienceProfile;

/// Environment variable naming the config file when no path is given.
pub const CONFIG_ENV: &str = "CARTOGRAPHY_CONFIG";

pub const REQUIRED_KEYS: [&str; 5] =
    ["salience.kind", "pipeline.inbound", "pipeline.outbound", "pipeline.archival", "pipeline.scale_level"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("in [{section}]: {message}")]
    Section { section: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn section(name: &str, e: toml::de::Error) -> ConfigError {
    ConfigError::Section { section: name.into(), message: e.message().to_string() }
}

fn lookup<'a>(root: &'a Table, dotted: &str) -> Option<&'a Value> {
    let (head, tail) = dotted.split_once('.')?;
    root.get(head)?.as_table()?.get(tail)
}

/// Parses a config document.
pub fn parse_config(text: &str) -> Result<HarnessConfig, ConfigError> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    for key in REQUIRED_KEYS {
        if lookup(&root, key).is_none() {
            return Err(ConfigError::MissingKey(key.into()));
        }
    }
    if let Some(stray) = root.keys().find(|k| !["salience", "pipeline", "oracle", "scale"].contains(&k.as_str())) {
        return Err(ConfigError::Invalid(format!("unknown section `{stray}`")));
    }

    let salience: SalienceProfile =
        root.remove("salience").expect("checked above").try_into().map_err(|e| section("salience", e))?;
    let Some(Value::Table(pipeline)) = root.remove("pipeline") else {
        return Err(ConfigError::Invalid("`pipeline` must be a table".into()));
    };
    let mut pipeline: PipelineConfig = Value::Table(pipeline).try_into().map_err(|e| section("pipeline", e))?;
    pipeline.salience = salience;

    let oracle: OracleParams = match root.remove("oracle") {
        Some(v) => v.try_into().map_err(|e| section("oracle", e))?,
        None => OracleParams::default(),
    };
    let scale: ScalePolicy = match root.remove("scale") {
        Some(v) => v.try_into().map_err(|e| section("scale", e))?,
        None => ScalePolicy::default(),
    };

    pipeline.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    oracle.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if scale.bindings.len() != pipeline.ladder.len() {
        return Err(ConfigError::Invalid(format!(
            "{} scale bindings for a {}-level ladder",
            scale.bindings.len(),
            pipeline.ladder.len()
        )));
    }
    Ok(HarnessConfig { pipeline, scale, oracle })
}

pub fn load_config(path: &Path) -> Result<HarnessConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}

/// The explicit path if given, else the path in [`CONFIG_ENV`], else none.
pub fn resolve_config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

/// Renders a config in the sectioned layout [`parse_config`] reads.
pub fn render_config(cfg: &HarnessConfig) -> String {
    let mut pipeline = match Value::try_from(&cfg.pipeline) {
        Ok(Value::Table(t)) => t,
        _ => unreachable!("pipeline config serializes to a table"),
    };
    let salience = pipeline.remove("salience").expect("pipeline carries a salience profile");
    let mut root = Table::new();
    root.insert("salience".into(), salience);
    root.insert("pipeline".into(), Value::Table(pipeline));
    root.insert("oracle".into(), Value::try_from(cfg.oracle).expect("oracle params serialize"));
    root.insert("scale".into(), Value::try_from(&cfg.scale).expect("scale policy serializes"));
    toml::to_string(&root).expect("config renders")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[salience]
kind = "u_shaped"

[pipeline]
inbound = ["sigma", "pi+", "phi", "delta", "lambda"]
outbound = ["sigma", "pi-"]
archival = true
scale_level = 2
"#;

    #[test]
    fn minimal_config_is_the_default() {
        assert_eq!(parse_config(MINIMAL).unwrap(), HarnessConfig::default());
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = HarnessConfig::default();
        cfg.oracle.c = 3.5;
        cfg.pipeline.archival = false;
        cfg.pipeline.ablate.insert(crate::Op::Displacement);
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn each_missing_key_is_named() {
        for key in REQUIRED_KEYS {
            let field = key.split_once('.').unwrap().1;
            let text: String =
                MINIMAL.lines().filter(|l| !l.starts_with(&format!("{field} ="))).collect::<Vec<_>>().join("\n");
            assert_eq!(parse_config(&text), Err(ConfigError::MissingKey(key.into())));
        }
    }

    #[test]
    fn syntax_errors_report_lines() {
        let text = format!("{MINIMAL}\n[oracle]\nc = = 2\n");
        match parse_config(&text) {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, text.lines().count()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        let typo = format!("{MINIMAL}\n[oracle]\ncc = 2.0\n");
        assert!(matches!(parse_config(&typo), Err(ConfigError::Section { .. })));
        let bad = format!("{MINIMAL}\n[oracle]\nh = 1.5\n");
        assert!(matches!(parse_config(&bad), Err(ConfigError::Invalid(_))));
        let stray = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(matches!(parse_config(&stray), Err(ConfigError::Invalid(_))));
    }
}
