//! ρ: deciding which parts of black fog are worth sensing.
//!
//! A planner never sees black-fog content. It gets [`Prospect`]s (an id, a
//! namespace and an optional locator, the things an agent can know about a
//! resource before reading it) and a [`MemoryIndex`] built from gray fog and
//! the visible field.

use std::collections::BTreeMap;

use crate::element::{ElementId, Namespace};
use crate::rng;
use crate::state::{ContextState, Zone};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prospect {
    pub id: ElementId,
    pub namespace: Namespace,
    pub locator: Option<String>,
}

impl Prospect {
    /// The agent-facing view of every black-fog element.
    pub fn all(state: &ContextState) -> Vec<Prospect> {
        state
            .elements_in(Zone::Black)
            .into_iter()
            .map(|e| Prospect { id: e.id.clone(), namespace: e.namespace.clone(), locator: e.locator.clone() })
            .collect()
    }
}

/// What the agent already knows: for each locator, the newest observation
/// time held in gray fog or the visible field.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryIndex {
    pub latest: BTreeMap<String, u64>,
    pub clock: u64,
}

impl MemoryIndex {
    pub fn from_state(state: &ContextState) -> Self {
        let mut latest: BTreeMap<String, u64> = BTreeMap::new();
        for e in state.elements_in(Zone::Gray).into_iter().chain(state.elements_in(Zone::Visible)) {
            if let Some(loc) = &e.locator {
                let t = latest.entry(loc.clone()).or_default();
                *t = (*t).max(e.observed_at);
            }
        }
        Self { latest, clock: state.clock() }
    }
}

/// Estimated value of sensing a prospect.
pub trait ExplorationScorer {
    fn estimate(&self, prospect: &Prospect, memory: &MemoryIndex) -> f64;
}

/// Scores by what memory does not cover: unknown locators score 1.0, known
/// ones older than `horizon` score `stale`, fresh ones 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyScorer {
    /// Age (in observation-time units) past which a memory is stale.
    pub horizon: u64,
    /// Score for a stale locator.
    pub stale: f64,
    /// Observation time the agent considers "now".
    pub now: u64,
}

impl UncertaintyScorer {
    pub fn new(horizon: u64, now: u64) -> Self {
        Self { horizon, stale: 0.8, now }
    }
}

impl ExplorationScorer for UncertaintyScorer {
    fn estimate(&self, p: &Prospect, memory: &MemoryIndex) -> f64 {
        match p.locator.as_ref().and_then(|l| memory.latest.get(l)) {
            None => 1.0,
            Some(&t) if self.now.saturating_sub(t) > self.horizon => self.stale,
            Some(_) => 0.0,
        }
    }
}

/// Seeded pseudo-random scores, ignoring memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomScorer {
    pub seed: u64,
}

impl ExplorationScorer for RandomScorer {
    fn estimate(&self, p: &Prospect, _memory: &MemoryIndex) -> f64 {
        rng::unit(self.seed, &[rng::tag("recon"), rng::tag(p.id.as_str())])
    }
}

impl<F: Fn(&Prospect, &MemoryIndex) -> f64> ExplorationScorer for F {
    fn estimate(&self, p: &Prospect, memory: &MemoryIndex) -> f64 {
        self(p, memory)
    }
}

/// The `budget` highest-scoring black-fog ids, best first.
pub fn reconnaissance_plan(state: &ContextState, budget: usize, scorer: &dyn ExplorationScorer) -> Vec<ElementId> {
    ranked(state, scorer).into_iter().take(budget).map(|(_, id)| id).collect()
}

/// Like [`reconnaissance_plan`], but only prospects scoring at least
/// `threshold` are worth a sense call.
pub fn reconnaissance_plan_above(
    state: &ContextState,
    budget: usize,
    scorer: &dyn ExplorationScorer,
    threshold: f64,
) -> Vec<ElementId> {
    ranked(state, scorer).into_iter().take_while(|(s, _)| *s >= threshold).take(budget).map(|(_, id)| id).collect()
}

fn ranked(state: &ContextState, scorer: &dyn ExplorationScorer) -> Vec<(f64, ElementId)> {
    let memory = MemoryIndex::from_state(state);
    let mut scored: Vec<(f64, ElementId)> =
        Prospect::all(state).into_iter().map(|p| (scorer.estimate(&p, &memory), p.id)).collect();
    scored.sort_by(|(sa, a), (sb, b)| sb.total_cmp(sa).then_with(|| a.cmp(b)));
    scored
}
