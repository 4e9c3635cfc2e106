//! Diagnostic harness: synthetic scenarios for six task categories, a seeded
//! salience-driven reasoner stand-in, a scenario runner, operator ablation,
//! and directional checks over the five framework predictions.

mod ablation;
mod oracle;
mod predictions;
mod runner;
mod scenario;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::OperatorError;
use crate::pipeline::{PipelineConfig, PipelineError, ScalePolicy};
use crate::state::{InvariantViolation, StateError};

pub use ablation::{ablation_label, aggregate_rows, knob_label, run_ablation, Ablation, AblationCell, AblationRow};
pub use oracle::{AtomOutcome, OracleParams, ReasonerOracle};
pub use predictions::{
    collapse_census, collapse_fixture, prediction_suite, CollapseCensus, PredictionCheck, PredictionReport,
    SuiteOptions,
};
pub use runner::{run_scenario, run_scenario_traced};
pub use scenario::{generate_scenario, Gold, GoldAtom, Knobs, Scenario, ScenarioSpec, ScorerKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("turn {turn}: {violation}")]
    Invariant { turn: u64, violation: InvariantViolation },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ReconVsSelection,
    Projection,
    Displacement,
    Simplification,
    Aggregation,
    Layering,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::ReconVsSelection,
        Category::Projection,
        Category::Displacement,
        Category::Simplification,
        Category::Aggregation,
        Category::Layering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::ReconVsSelection => "recon_vs_selection",
            Category::Projection => "projection",
            Category::Displacement => "displacement",
            Category::Simplification => "simplification",
            Category::Aggregation => "aggregation",
            Category::Layering => "layering",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s || (s == "recon" && *c == Category::ReconVsSelection))
            .ok_or_else(|| HarnessError::Parameter(format!("unknown category `{s}`")))
    }
}

/// Failure buckets. Gold-atom outcomes fall in exactly one of
/// hallucination, stale memory, layer priority error, information loss,
/// attention miss or unanswered (or succeed); the rest are event counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Hallucination,
    StaleMemory,
    ConstraintViolation,
    Contamination,
    WastedRecon,
    LayerPriorityError,
    InformationLoss,
    AttentionMiss,
    Unanswered,
}

impl Failure {
    pub const ALL: [Failure; 9] = [
        Failure::Hallucination,
        Failure::StaleMemory,
        Failure::ConstraintViolation,
        Failure::Contamination,
        Failure::WastedRecon,
        Failure::LayerPriorityError,
        Failure::InformationLoss,
        Failure::AttentionMiss,
        Failure::Unanswered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Failure::Hallucination => "hallucination",
            Failure::StaleMemory => "stale_memory",
            Failure::ConstraintViolation => "constraint_violation",
            Failure::Contamination => "contamination",
            Failure::WastedRecon => "wasted_recon",
            Failure::LayerPriorityError => "layer_priority_error",
            Failure::InformationLoss => "information_loss",
            Failure::AttentionMiss => "attention_miss",
            Failure::Unanswered => "unanswered",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a run needs besides the scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub pipeline: PipelineConfig,
    pub scale: ScalePolicy,
    pub oracle: OracleParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub category: Category,
    pub seed: u64,
    /// Fraction of gold atoms answered correctly. Scenarios without gold
    /// atoms report their constraint adherence here.
    pub accuracy: f64,
    /// Fraction of (turn, constraint) checks obeyed; 1 without constraints.
    pub adherence: f64,
    pub tokens_consumed: u64,
    pub failure_counts: BTreeMap<Failure, u64>,
    /// Sense calls made by exploration (not scheduled arrivals).
    pub exploration_count: u64,
    /// Tokens of raw, oversized sensed elements that entered the visible field.
    pub contaminated_tokens: u64,
    pub outcomes: BTreeMap<String, AtomOutcome>,
}

impl ScenarioResult {
    pub fn count(&self, f: Failure) -> u64 {
        self.failure_counts.get(&f).copied().unwrap_or(0)
    }

    /// Named scalar metric, as used by ablation tables.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "accuracy" => self.accuracy,
            "adherence" => self.adherence,
            "tokens_consumed" => self.tokens_consumed as f64,
            "exploration_count" => self.exploration_count as f64,
            "contaminated_tokens" => self.contaminated_tokens as f64,
            other => self.count(Failure::ALL.into_iter().find(|f| f.name() == other)?) as f64,
        })
    }

    pub const METRICS: [&'static str; 14] = [
        "accuracy",
        "adherence",
        "tokens_consumed",
        "exploration_count",
        "contaminated_tokens",
        "hallucination",
        "stale_memory",
        "constraint_violation",
        "contamination",
        "wasted_recon",
        "layer_priority_error",
        "information_loss",
        "attention_miss",
        "unanswered",
    ];
}
