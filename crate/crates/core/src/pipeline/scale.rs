//! Scale modulation: one ladder level picks a coordinated set of operator
//! parameters. Stage orders never change with scale.

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};

/// Operator parameters bound to one ladder level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleBinding {
    pub select_k: usize,
    pub simplify_ratio: f64,
    pub aggregate: bool,
    pub suppressed: Vec<String>,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalePolicy {
    pub bindings: Vec<ScaleBinding>,
}

impl Default for ScalePolicy {
    /// Coarse levels select widely and compress hard; the finest level keeps
    /// few elements at full detail.
    fn default() -> Self {
        Self {
            bindings: vec![
                ScaleBinding {
                    select_k: 16,
                    simplify_ratio: 0.25,
                    aggregate: true,
                    suppressed: vec!["observation".into()],
                    resolution: 0,
                },
                ScaleBinding {
                    select_k: 8,
                    simplify_ratio: 0.5,
                    aggregate: true,
                    suppressed: Vec::new(),
                    resolution: 1,
                },
                ScaleBinding {
                    select_k: 4,
                    simplify_ratio: 1.0,
                    aggregate: false,
                    suppressed: Vec::new(),
                    resolution: 2,
                },
            ],
        }
    }
}

/// Returns `config` reparameterized for `level`.
pub fn apply_scale(
    config: &PipelineConfig,
    policy: &ScalePolicy,
    level: usize,
) -> Result<PipelineConfig, PipelineError> {
    let b = policy.bindings.get(level).ok_or_else(|| {
        PipelineError::Config(format!("scale level {level} not in policy ({} levels)", policy.bindings.len()))
    })?;
    let mut out = config.clone();
    out.scale_level = level;
    out.select_k = b.select_k;
    out.simplify_ratio = b.simplify_ratio;
    out.aggregate_enabled = b.aggregate;
    out.suppressed = b.suppressed.clone();
    out.resolution = b.resolution;
    out.validate()?;
    Ok(out)
}
