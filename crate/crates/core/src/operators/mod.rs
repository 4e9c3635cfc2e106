//! The seven cartographic operators and the registry of which operators
//! govern which zone transformations.

pub mod aggregate;
pub mod correspondence;
pub mod coverage;
pub mod displace;
pub mod layering;
pub mod projection;
pub mod recon;
pub mod select;
pub mod simplify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::ElementId;
use crate::salience::SalienceError;
use crate::state::{StateError, Zone};

pub use aggregate::{aggregate, AggregateClass, EquivalenceKey};
pub use coverage::{verify_coverage, CoverageCheck, CoverageRegistry, CoverageReport};
pub use displace::{constraint_pinning, displace, recency_injection, salience_aware_assembly, DisplacementStrategy};
pub use layering::{assign_layers, LayerPolicy, Layers};
pub use projection::{
    project_forward, project_inverse, Compaction, Level, Projected, ProjectionSchema, ResolutionLadder,
};
pub use recon::{
    reconnaissance_plan, reconnaissance_plan_above, ExplorationScorer, MemoryIndex, Prospect, RandomScorer,
    UncertaintyScorer,
};
pub use select::{select, select_zone};
pub use simplify::simplify;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid projection schema: {0}")]
    Schema(String),
    #[error("element `{0}` is not in the visible field")]
    NotVisible(ElementId),
    #[error("moving `{id}` from position {from} to {to} does not raise its salience")]
    NonImproving { id: ElementId, from: usize, to: usize },
    #[error("layer policy assigns no namespace to `{0}`")]
    Layering(ElementId),
    #[error("`{id}` is in {found}, but {mode:?} selects from {expected}")]
    ZoneMismatch { id: ElementId, mode: SelectionMode, found: Zone, expected: Zone },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Salience(#[from] SalienceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Recall,
    Evict,
    Expire,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 3] = [SelectionMode::Recall, SelectionMode::Evict, SelectionMode::Expire];

    pub fn source(self) -> Zone {
        match self {
            SelectionMode::Recall | SelectionMode::Expire => Zone::Gray,
            SelectionMode::Evict => Zone::Visible,
        }
    }
}

/// Operator identity without selection mode. Pipelines, ablation masks and
/// config files speak in these tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "rho")]
    Reconnaissance,
    #[serde(rename = "sigma")]
    Selection,
    #[serde(rename = "phi")]
    Simplification,
    #[serde(rename = "alpha")]
    Aggregation,
    #[serde(rename = "pi+")]
    ForwardProjection,
    #[serde(rename = "pi-")]
    InverseProjection,
    #[serde(rename = "delta")]
    Displacement,
    #[serde(rename = "lambda")]
    Layering,
}

impl Op {
    pub const ALL: [Op; 8] = [
        Op::Reconnaissance,
        Op::Selection,
        Op::Simplification,
        Op::Aggregation,
        Op::ForwardProjection,
        Op::InverseProjection,
        Op::Displacement,
        Op::Layering,
    ];

    /// Short ASCII name used in configs, traces and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Op::Reconnaissance => "rho",
            Op::Selection => "sigma",
            Op::Simplification => "phi",
            Op::Aggregation => "alpha",
            Op::ForwardProjection => "pi+",
            Op::InverseProjection => "pi-",
            Op::Displacement => "delta",
            Op::Layering => "lambda",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Reconnaissance => "ρ",
            Op::Selection => "σ",
            Op::Simplification => "φ",
            Op::Aggregation => "α",
            Op::ForwardProjection => "π⁺",
            Op::InverseProjection => "π⁻",
            Op::Displacement => "δ",
            Op::Layering => "λ",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Op {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let op = match s.trim().to_ascii_lowercase().as_str() {
            "rho" | "ρ" | "reconnaissance" => Op::Reconnaissance,
            "sigma" | "σ" | "selection" => Op::Selection,
            "phi" | "φ" | "simplification" => Op::Simplification,
            "alpha" | "α" | "aggregation" => Op::Aggregation,
            "pi+" | "π⁺" | "forward_projection" => Op::ForwardProjection,
            "pi-" | "π⁻" | "inverse_projection" => Op::InverseProjection,
            "delta" | "δ" | "displacement" => Op::Displacement,
            "lambda" | "λ" | "layering" => Op::Layering,
            other => return Err(OperatorError::Parameter(format!("unknown operator `{other}`"))),
        };
        Ok(op)
    }
}

/// Operator identity as it appears in the coverage registry: selection
/// carries the mode it runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op", content = "mode")]
pub enum OperatorKind {
    Reconnaissance,
    Selection(SelectionMode),
    Simplification,
    Aggregation,
    ForwardProjection,
    InverseProjection,
    Displacement,
    Layering,
}

impl OperatorKind {
    pub fn op(self) -> Op {
        match self {
            OperatorKind::Reconnaissance => Op::Reconnaissance,
            OperatorKind::Selection(_) => Op::Selection,
            OperatorKind::Simplification => Op::Simplification,
            OperatorKind::Aggregation => Op::Aggregation,
            OperatorKind::ForwardProjection => Op::ForwardProjection,
            OperatorKind::InverseProjection => Op::InverseProjection,
            OperatorKind::Displacement => Op::Displacement,
            OperatorKind::Layering => Op::Layering,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Selection(m) => write!(f, "σ[{m:?}]"),
            other => f.write_str(other.op().symbol()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_names_round_trip() {
        for op in Op::ALL {
            assert_eq!(op.name().parse::<Op>().unwrap(), op);
            assert_eq!(op.symbol().parse::<Op>().unwrap(), op);
            let json = serde_json::to_string(&op).unwrap();
            assert_eq!(json, format!("\"{}\"", op.name()));
        }
        assert!("omega".parse::<Op>().is_err());
    }
}
