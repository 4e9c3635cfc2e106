//! Operator pipelines: inbound (gray → visible), outbound (visible → gray),
//! gray-fog maintenance, the compaction cycle, and scale modulation.
//!
//! Every entry point is transactional: it either returns a new state and its
//! trace, or an error with the input state untouched.

mod flows;
pub mod scale;
mod stage;
pub mod trace;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{ContextElement, ElementId, Format, Modality, TokenCostModel};
use crate::operators::{
    DisplacementStrategy, EquivalenceKey, LayerPolicy, Op, OperatorError, ProjectionSchema, ResolutionLadder,
};
use crate::salience::SalienceProfile;
use crate::state::{ContextState, StateError, Zone};

pub use flows::{compaction_cycle, recoverable_atoms, run_inbound, run_maintenance, run_outbound, run_stages, Outcome};
pub use scale::{apply_scale, ScaleBinding, ScalePolicy};
pub use stage::{InFlight, OpStage, Scope, Stage, Turn};
pub use trace::TraceRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: String,
        #[source]
        source: OperatorError,
    },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("invalid pipeline config: {0}")]
    Config(String),
}

impl PipelineError {
    pub(crate) fn at(stage: &str) -> impl FnOnce(OperatorError) -> PipelineError + '_ {
        move |source| PipelineError::Stage { stage: stage.to_owned(), source }
    }
}

/// What the reasoner is currently after: atom keys it needs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub keys: BTreeSet<String>,
}

impl Query {
    pub fn new<S: Into<String>>(keys: impl IntoIterator<Item = S>) -> Self {
        Self { keys: keys.into_iter().map(Into::into).collect() }
    }

    /// Number of query keys `e` carries.
    pub fn relevance(&self, e: &ContextElement) -> f64 {
        e.atoms.iter().filter(|a| self.keys.contains(&a.key)).count() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inbound: Vec<Op>,
    pub outbound: Vec<Op>,
    pub maintenance: Vec<Op>,
    pub ablate: BTreeSet<Op>,
    /// π⁻ keeps originals in gray fog when set; sends them to black fog when not.
    pub archival: bool,
    /// Ladder level the pipeline currently works at.
    pub scale_level: usize,
    pub select_k: usize,
    pub simplify_ratio: f64,
    pub aggregate_enabled: bool,
    /// Namespace roots σ will not recall.
    pub suppressed: Vec<String>,
    /// Ladder level π⁺ renders at.
    pub resolution: usize,
    pub dimensionality: usize,
    pub format: Format,
    /// Outbound fires once visible tokens exceed this fraction of the budget.
    pub watermark: f64,
    /// Outbound evicts down to this fraction of the budget.
    pub outbound_target: f64,
    /// Fraction of non-critical atoms a π⁻ summary keeps.
    pub compaction_ratio: f64,
    pub maintenance_every: u64,
    /// Gray-fog entries above this size get simplified during maintenance.
    pub maintenance_cap: u64,
    /// Raw sensed elements above this size count as contamination in view.
    pub small_output: u64,
    pub displacement: DisplacementStrategy,
    pub layer_policy: LayerPolicy,
    pub equivalence: EquivalenceKey,
    pub ladder: ResolutionLadder,
    pub cost: TokenCostModel,
    pub salience: SalienceProfile,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ladder = ResolutionLadder::default();
        let finest = ladder.finest();
        Self {
            inbound: vec![Op::Selection, Op::ForwardProjection, Op::Simplification, Op::Displacement, Op::Layering],
            outbound: vec![Op::Selection, Op::InverseProjection],
            maintenance: vec![Op::Aggregation, Op::Simplification, Op::Layering],
            ablate: BTreeSet::new(),
            archival: true,
            scale_level: finest,
            select_k: 8,
            simplify_ratio: 0.5,
            aggregate_enabled: true,
            suppressed: Vec::new(),
            resolution: finest,
            dimensionality: 8,
            format: Format::KeyValueRecord,
            watermark: 0.9,
            outbound_target: 0.5,
            compaction_ratio: 0.5,
            maintenance_every: 5,
            maintenance_cap: 1000,
            small_output: 64,
            displacement: DisplacementStrategy::default(),
            layer_policy: LayerPolicy::default(),
            equivalence: EquivalenceKey::default(),
            ladder,
            cost: TokenCostModel::default(),
            salience: SalienceProfile::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        for (name, stages) in
            [("inbound", &self.inbound), ("outbound", &self.outbound), ("maintenance", &self.maintenance)]
        {
            let mut seen = BTreeSet::new();
            for op in stages {
                if !seen.insert(op) {
                    return bad(format!("{name} lists `{op}` twice"));
                }
            }
        }
        if let Some(op) =
            self.maintenance.iter().find(|op| !matches!(op, Op::Aggregation | Op::Simplification | Op::Layering))
        {
            return bad(format!("maintenance cannot run `{op}`"));
        }
        if self.resolution >= self.ladder.len() || self.scale_level >= self.ladder.len() {
            return bad(format!("ladder has {} levels", self.ladder.len()));
        }
        if !(self.simplify_ratio > 0.0 && self.simplify_ratio <= 1.0) {
            return bad(format!("simplify_ratio {} outside (0, 1]", self.simplify_ratio));
        }
        for (name, x) in [
            ("watermark", self.watermark),
            ("outbound_target", self.outbound_target),
            ("compaction_ratio", self.compaction_ratio),
        ] {
            if !(0.0..=1.0).contains(&x) {
                return bad(format!("{name} {x} outside [0, 1]"));
            }
        }
        if self.dimensionality == 0 {
            return bad("dimensionality must be >= 1".into());
        }
        self.salience.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn enabled(&self, op: Op) -> bool {
        !self.ablate.contains(&op)
    }

    pub fn with_ablation(mut self, ops: impl IntoIterator<Item = Op>) -> Self {
        self.ablate.extend(ops);
        self
    }

    pub fn schema_at(&self, resolution: usize) -> ProjectionSchema {
        ProjectionSchema::new(self.format, Modality::Textual, resolution, self.dimensionality)
    }
}

/// Ancestors of gray-fog or visible elements whose query-relevant atoms some
/// descendant in those zones already carries. Recalling them would duplicate
/// content a derivative holds; an ancestor holding relevant atoms its
/// derivatives dropped stays recallable.
pub fn shadowed(state: &ContextState, query: &Query) -> HashSet<ElementId> {
    let mut out = HashSet::new();
    for d in state.elements_in(Zone::Gray).into_iter().chain(state.elements_in(Zone::Visible)) {
        let carried = d.atom_keys();
        let mut seen: HashSet<ElementId> = HashSet::new();
        let mut stack: Vec<ElementId> = d.provenance.derived_from().to_vec();
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            if let Some(anc) = state.element(&id) {
                let covered =
                    anc.atoms.iter().filter(|a| query.keys.contains(&a.key)).all(|a| carried.contains(a.key.as_str()));
                if covered {
                    out.insert(id.clone());
                }
                stack.extend(anc.provenance.derived_from().iter().cloned());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn duplicate_stage_rejected() {
        let mut c = PipelineConfig::default();
        c.inbound.push(Op::Selection);
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        let mut c = PipelineConfig::default();
        c.maintenance.push(Op::Displacement);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = PipelineConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
