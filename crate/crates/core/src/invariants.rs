//! Randomized invariant walk: seeded sequences of zone transitions,
//! operator applications and pipeline runs, with the state audited after
//! every step.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId, SemanticAtom};
use crate::operators::{assign_layers, simplify, DisplacementStrategy};
use crate::pipeline::{compaction_cycle, run_inbound, run_maintenance, run_outbound, PipelineConfig, Query};
use crate::rng;
use crate::state::{ContextState, Transition, TransitionKind, Zone};

/// Steps before the walk restarts from a fresh random universe.
pub const EPISODE: usize = 500;

const NAMESPACES: [&str; 4] = ["system", "memory", "observation", "task"];
const KEYS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkViolation {
    pub step: usize,
    pub action: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkReport {
    pub seed: u64,
    pub steps: usize,
    /// Steps that changed or were meant to change state, by action.
    pub applied: BTreeMap<String, u64>,
    /// Steps the engine refused (illegal transitions, budget overflow).
    pub rejected: BTreeMap<String, u64>,
    pub violations: Vec<WalkViolation>,
}

impl WalkReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Sense,
    Recall,
    Evict,
    Expire,
    Displace,
    Simplify,
    Layer,
    Inbound,
    Outbound,
    Maintenance,
    Compaction,
}

impl Action {
    const ALL: [Action; 11] = [
        Action::Sense,
        Action::Recall,
        Action::Evict,
        Action::Expire,
        Action::Displace,
        Action::Simplify,
        Action::Layer,
        Action::Inbound,
        Action::Outbound,
        Action::Maintenance,
        Action::Compaction,
    ];

    fn name(self) -> &'static str {
        match self {
            Action::Sense => "sense",
            Action::Recall => "recall",
            Action::Evict => "evict",
            Action::Expire => "expire",
            Action::Displace => "delta",
            Action::Simplify => "phi",
            Action::Layer => "lambda",
            Action::Inbound => "inbound",
            Action::Outbound => "outbound",
            Action::Maintenance => "maintenance",
            Action::Compaction => "compaction",
        }
    }
}

fn random_universe(rng: &mut ChaCha8Rng, episode: usize) -> ContextState {
    let n = rng.random_range(12..=30);
    let mut total = 0;
    let elements: Vec<ContextElement> = (0..n)
        .map(|i| {
            let ns = NAMESPACES.choose(rng).copied().unwrap_or("task");
            let tokens = rng.random_range(20..=400);
            total += tokens;
            let mut e = ContextElement::new(format!("w{episode}_{i}"), tokens, ns)
                .with_observed_at(rng.random_range(0..50))
                .with_priority(rng.random_range(0..5));
            let mut keys = BTreeSet::new();
            for _ in 0..rng.random_range(1..=6) {
                keys.insert(rng.random_range(0..KEYS));
            }
            for k in keys {
                e = e.with_atom(
                    SemanticAtom::new(format!("k{k}"), rng.random_bool(0.3))
                        .with_value(rng.random_range(0..3))
                        .with_priority(rng.random_range(0..4)),
                );
            }
            e
        })
        .collect();
    let budget = (total / 3).max(400);
    ContextState::new(elements, budget).expect("generated universe is valid")
}

/// A random nonempty subset of `pool`, occasionally salted with one element
/// from outside it so illegal requests get exercised.
fn pick(rng: &mut ChaCha8Rng, pool: &[ElementId], outside: &[ElementId]) -> Vec<ElementId> {
    let mut out: Vec<ElementId> = pool.iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
    if out.is_empty() {
        if let Some(id) = pool.choose(rng) {
            out.push(id.clone());
        }
    }
    if rng.random_bool(0.1) {
        if let Some(id) = outside.choose(rng) {
            out.push(id.clone());
        }
    }
    out
}

fn critical_keys(state: &ContextState) -> BTreeSet<String> {
    state
        .elements_in(Zone::Gray)
        .into_iter()
        .chain(state.elements_in(Zone::Visible))
        .flat_map(|e| e.critical_atoms().map(|a| a.key.clone()))
        .collect()
}

/// Partition and budget: every universe element in exactly one zone, the
/// visible field within budget, plus the state's own audit.
fn check_state(state: &ContextState) -> Result<(), String> {
    state.audit().map_err(|v| v.to_string())?;
    let visible: BTreeSet<&ElementId> = state.visible().iter().collect();
    for id in state.universe() {
        let n = usize::from(state.black().contains(id))
            + usize::from(state.gray().contains(id))
            + usize::from(visible.contains(id));
        if n != 1 {
            return Err(format!("partition: `{id}` in {n} zones"));
        }
    }
    let tokens: u64 = state.elements_in(Zone::Visible).iter().map(|e| e.tokens).sum();
    if tokens > state.visible_budget() {
        return Err(format!("budget: {tokens} visible tokens over {}", state.visible_budget()));
    }
    Ok(())
}

fn ids_in(state: &ContextState, zone: Zone) -> Vec<ElementId> {
    match zone {
        Zone::Black => state.black().iter().cloned().collect(),
        Zone::Gray => state.gray().iter().cloned().collect(),
        Zone::Visible => state.visible().to_vec(),
    }
}

enum StepResult {
    Applied(ContextState),
    Rejected,
}

fn step(
    rng: &mut ChaCha8Rng,
    state: &ContextState,
    action: Action,
    config: &PipelineConfig,
    turn: u64,
) -> Result<StepResult, String> {
    let transition = |kind: TransitionKind, rng: &mut ChaCha8Rng| -> Result<StepResult, String> {
        let pool = ids_in(state, kind.source());
        if pool.is_empty() {
            return Ok(StepResult::Rejected);
        }
        let outside: Vec<ElementId> = state.universe().filter(|id| !pool.contains(id)).cloned().collect();
        let chosen = pick(rng, &pool, &outside);
        let legal = chosen.iter().all(|id| pool.contains(id));
        match state.apply_transition(&Transition::new(kind, chosen)) {
            Ok(_) if !legal => Err(format!("{} accepted an element outside its source zone", kind.name())),
            Ok(next) => Ok(StepResult::Applied(next)),
            Err(_) => Ok(StepResult::Rejected),
        }
    };

    match action {
        Action::Sense => transition(TransitionKind::Sense, rng),
        Action::Recall => transition(TransitionKind::Recall, rng),
        Action::Evict => transition(TransitionKind::Evict, rng),
        Action::Expire => transition(TransitionKind::Expire, rng),
        Action::Displace => {
            let strategy = [
                DisplacementStrategy::ConstraintPinning,
                DisplacementStrategy::RecencyInjection,
                DisplacementStrategy::SalienceAwareAssembly,
            ][rng.random_range(0..3)];
            let Ok(next) = strategy.apply(state, &config.salience) else {
                return Ok(StepResult::Rejected);
            };
            let mut a = state.visible().to_vec();
            let mut b = next.visible().to_vec();
            a.sort();
            b.sort();
            if a != b || next.visible_tokens() != state.visible_tokens() {
                return Err("displacement is not a permutation of the visible field".into());
            }
            if next.gray() != state.gray() || next.black() != state.black() {
                return Err("displacement touched gray or black fog".into());
            }
            Ok(StepResult::Applied(next))
        }
        Action::Simplify => {
            let pool: Vec<ElementId> =
                ids_in(state, Zone::Gray).into_iter().chain(ids_in(state, Zone::Visible)).collect();
            let Some(id) = pool.choose(rng) else {
                return Ok(StepResult::Rejected);
            };
            let e = state.get(id).map_err(|e| e.to_string())?;
            let ratio = rng.random_range(0.05..=1.0);
            let out = simplify(e, ratio, &config.cost, state.fresh_id("walk_phi")).map_err(|e| e.to_string())?;
            if !e.critical_keys().is_subset(&out.critical_keys()) {
                return Err(format!("simplifying `{id}` dropped a critical atom"));
            }
            if out.tokens > e.tokens {
                return Err(format!("simplifying `{id}` grew it from {} to {} tokens", e.tokens, out.tokens));
            }
            state.insert_synthesized(out).map(StepResult::Applied).map_err(|e| e.to_string())
        }
        Action::Layer => {
            let visible = state.elements_in(Zone::Visible);
            let layers = assign_layers(&visible, &config.layer_policy).map_err(|e| e.to_string())?;
            let mut seen = BTreeSet::new();
            for id in layers.layers.values().flatten() {
                if !seen.insert(id.clone()) {
                    return Err(format!("layering placed `{id}` twice"));
                }
            }
            let want: BTreeSet<ElementId> = state.visible().iter().cloned().collect();
            if seen != want {
                return Err("layers do not cover the visible field".into());
            }
            state.with_layers(layers.assignment()).map(StepResult::Applied).map_err(|e| e.to_string())
        }
        Action::Inbound | Action::Outbound | Action::Maintenance | Action::Compaction => {
            let query = Query::new((0..3).map(|_| format!("k{}", rng.random_range(0..KEYS))));
            let before = critical_keys(state);
            let out = match action {
                Action::Inbound => run_inbound(state, config, &query, turn),
                Action::Outbound => run_outbound(state, config, &query, turn),
                Action::Maintenance => run_maintenance(state, config, turn),
                _ => compaction_cycle(state, config, turn),
            };
            let Ok(out) = out else {
                return Ok(StepResult::Rejected);
            };
            if config.archival {
                let after = critical_keys(&out.state);
                if let Some(k) = before.difference(&after).next() {
                    return Err(format!("critical atom `{k}` left gray fog and the visible field"));
                }
            }
            for id in out.state.layers().keys() {
                if !out.state.visible().contains(id) {
                    return Err(format!("layer assigned to non-visible `{id}`"));
                }
            }
            Ok(StepResult::Applied(out.state))
        }
    }
}

/// Runs `steps` random steps from seed `seed`, restarting from a fresh
/// universe every [`EPISODE`] steps.
pub fn random_walk(seed: u64, steps: usize, config: &PipelineConfig) -> WalkReport {
    let mut rng = rng::stream(seed, &[rng::tag("invariant-walk")]);
    let mut report =
        WalkReport { seed, steps, applied: BTreeMap::new(), rejected: BTreeMap::new(), violations: Vec::new() };
    let mut state = random_universe(&mut rng, 0);
    for i in 0..steps {
        if i > 0 && i % EPISODE == 0 {
            state = random_universe(&mut rng, i / EPISODE);
        }
        let action = Action::ALL[rng.random_range(0..Action::ALL.len())];
        let name = action.name().to_string();
        match step(&mut rng, &state, action, config, i as u64) {
            Ok(StepResult::Applied(next)) => {
                *report.applied.entry(name.clone()).or_default() += 1;
                if let Err(message) = check_state(&next) {
                    report.violations.push(WalkViolation { step: i, action: name, message });
                }
                state = next;
            }
            Ok(StepResult::Rejected) => {
                *report.rejected.entry(name).or_default() += 1;
                state = state.tick();
            }
            Err(message) => report.violations.push(WalkViolation { step: i, action: name, message }),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_walk_is_clean_and_exercises_everything() {
        let r = random_walk(3, 2_000, &PipelineConfig::default());
        assert!(r.passed(), "{:#?}", &r.violations[..r.violations.len().min(5)]);
        for a in Action::ALL {
            assert!(r.applied.get(a.name()).copied().unwrap_or(0) > 0, "{} never applied", a.name());
        }
        assert!(r.rejected.values().sum::<u64>() > 0);
    }

    #[test]
    fn walk_is_deterministic() {
        let cfg = PipelineConfig::default();
        assert_eq!(random_walk(9, 300, &cfg), random_walk(9, 300, &cfg));
    }
}
