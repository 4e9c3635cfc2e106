//! Runs one scenario through the pipelines and scores it.
//!
//! Each turn: scheduled arrivals are sensed, exploration senses prospects,
//! the inbound pipeline runs, the reasoner acts (constraints are checked;
//! gold atoms are answered on the final turn), the outbound pipeline runs,
//! and every `maintenance_every` turns gray fog is maintained. The state is
//! audited at the end of every turn.

use std::collections::{BTreeMap, BTreeSet};

use crate::element::{ElementId, Provenance};
use crate::operators::{
    reconnaissance_plan_above, ExplorationScorer, MemoryIndex, Op, Prospect, RandomScorer, UncertaintyScorer,
};
use crate::pipeline::trace::{tokens_consumed, TraceRecord};
use crate::pipeline::{apply_scale, run_inbound, run_maintenance, run_outbound, Query};
use crate::rng;
use crate::state::{ContextState, Transition, Zone};

use super::oracle::{AtomOutcome, ReasonerOracle};
use super::scenario::{Scenario, ScorerKind};
use super::{Failure, HarnessConfig, HarnessError, ScenarioResult};

/// Prospects scoring below this are not worth a sense call.
const EXPLORE_THRESHOLD: f64 = 0.5;
/// Initial urn weights for habitual exploration: (explore, exploit).
const URN_PRIOR: (f64, f64) = (0.3, 0.3);

pub fn run_scenario(scenario: &Scenario, config: &HarnessConfig) -> Result<ScenarioResult, HarnessError> {
    run_scenario_traced(scenario, config).map(|(r, _)| r)
}

/// Like [`run_scenario`], also returning the per-stage trace.
pub fn run_scenario_traced(
    s: &Scenario,
    config: &HarnessConfig,
) -> Result<(ScenarioResult, Vec<TraceRecord>), HarnessError> {
    config.pipeline.validate()?;
    config.oracle.validate().map_err(HarnessError::Parameter)?;
    let oracle = ReasonerOracle {
        profile: config.pipeline.salience,
        params: config.oracle,
        layer_policy: config.pipeline.layer_policy.clone(),
    };

    let mut state = ContextState::new(s.universe.iter().cloned(), s.budget)?;
    if !s.initial_gray.is_empty() {
        state = state.apply_transition(&Transition::sense(s.initial_gray.iter().cloned()))?;
    }
    if !s.initial_visible.is_empty() {
        state = state.apply_transition(&Transition::sense(s.initial_visible.iter().cloned()))?;
        state = state.apply_transition(&Transition::recall(s.initial_visible.iter().cloned()))?;
    }

    let mut pipeline = config.pipeline.clone();
    let mut counts: BTreeMap<Failure, u64> = Failure::ALL.into_iter().map(|f| (f, 0)).collect();
    let mut trace = Vec::new();
    let mut observed = BTreeSet::new();
    let mut exploration_count = 0;
    let mut contaminated_tokens = 0;
    let mut urn = URN_PRIOR;
    let (mut checks, mut obeyed) = (0u64, 0u64);
    let mut outcomes = BTreeMap::new();
    note_observed(&state, &mut observed);

    for t in 0..s.turns {
        for (at, level) in &s.scale_schedule {
            if *at == t {
                pipeline = apply_scale(&pipeline, &config.scale, *level)?;
            }
        }
        let query = if t >= s.query_from { s.query.clone() } else { Query::default() };

        if let Some(ids) = s.arrivals.get(&t) {
            let ids: Vec<ElementId> = ids.iter().filter(|id| state.black().contains(*id)).cloned().collect();
            if !ids.is_empty() {
                let before = state.clone();
                state = state.apply_transition(&Transition::sense(ids.iter().cloned()))?;
                trace.push(TraceRecord::new(t, "sense").with_ids(&before, &[], &state, &ids));
            }
        }

        let plan = explore(s, &pipeline.ablate, &state, t, &mut urn);
        if !plan.is_empty() {
            for id in &plan {
                if already_known(&state, id) {
                    *counts.get_mut(&Failure::WastedRecon).unwrap() += 1;
                }
            }
            exploration_count += plan.len() as u64;
            let before = state.clone();
            state = state.apply_transition(&Transition::sense(plan.iter().cloned()))?;
            trace.push(TraceRecord::new(t, "rho").with_ids(&before, &[], &state, &plan));
        }
        note_observed(&state, &mut observed);

        let out = run_inbound(&state, &pipeline, &query, t)?;
        *counts.get_mut(&Failure::Contamination).unwrap() += out.contamination as u64;
        contaminated_tokens += out
            .inserted
            .iter()
            .filter_map(|id| out.state.element(id))
            .filter(|e| e.provenance == Provenance::Sensed && e.tokens > pipeline.small_output)
            .map(|e| e.tokens)
            .sum::<u64>();
        trace.extend(out.trace);
        state = out.state;
        note_observed(&state, &mut observed);

        for c in &s.gold.constraints {
            checks += 1;
            if oracle.constraint_obeyed(&state, c, s.seed, t) {
                obeyed += 1;
            } else {
                *counts.get_mut(&Failure::ConstraintViolation).unwrap() += 1;
            }
        }
        if t + 1 == s.turns {
            for g in &s.gold.atoms {
                let o = oracle.answer(&state, g, observed.contains(&g.key), s.seed);
                if let Some(f) = failure_of(o) {
                    *counts.get_mut(&f).unwrap() += 1;
                }
                outcomes.insert(g.key.clone(), o);
            }
        }

        let out = run_outbound(&state, &pipeline, &query, t)?;
        trace.extend(out.trace);
        state = out.state;

        if pipeline.maintenance_every > 0 && (t + 1) % pipeline.maintenance_every == 0 {
            let out = run_maintenance(&state, &pipeline, t)?;
            trace.extend(out.trace);
            state = out.state;
        }
        note_observed(&state, &mut observed);
        state.audit().map_err(|violation| HarnessError::Invariant { turn: t, violation })?;
    }

    let adherence = if checks == 0 { 1.0 } else { obeyed as f64 / checks as f64 };
    let accuracy = if s.gold.atoms.is_empty() {
        adherence
    } else {
        outcomes.values().filter(|o| **o == AtomOutcome::Success).count() as f64 / s.gold.atoms.len() as f64
    };
    let result = ScenarioResult {
        category: s.category,
        seed: s.seed,
        accuracy,
        adherence,
        tokens_consumed: tokens_consumed(&trace),
        failure_counts: counts,
        exploration_count,
        contaminated_tokens,
        outcomes,
    };
    Ok((result, trace))
}

fn failure_of(o: AtomOutcome) -> Option<Failure> {
    match o {
        AtomOutcome::Success => None,
        AtomOutcome::Hallucination => Some(Failure::Hallucination),
        AtomOutcome::StaleMemory => Some(Failure::StaleMemory),
        AtomOutcome::LayerPriorityError => Some(Failure::LayerPriorityError),
        AtomOutcome::InformationLoss => Some(Failure::InformationLoss),
        AtomOutcome::AttentionMiss => Some(Failure::AttentionMiss),
        AtomOutcome::Unanswered => Some(Failure::Unanswered),
    }
}

fn note_observed(state: &ContextState, observed: &mut BTreeSet<String>) {
    observed.extend(state.atom_keys_in(&[Zone::Gray, Zone::Visible]));
}

/// True when every (key, value) the element carries is already in memory.
fn already_known(state: &ContextState, id: &ElementId) -> bool {
    let Some(e) = state.element(id) else { return false };
    let gray = state.elements_in(Zone::Gray);
    e.atoms.iter().all(|a| gray.iter().any(|g| g.atom(&a.key).is_some_and(|b| b.value == a.value)))
}

/// Prospects to sense this turn. With ρ, the scenario's scorer ranks them.
/// Without ρ the agent either does not explore, or (with implicit
/// exploration) explores by habit: a Pólya urn decides each turn whether to
/// sense one random prospect, reinforcing whichever choice it made.
fn explore(
    s: &Scenario,
    ablate: &BTreeSet<Op>,
    state: &ContextState,
    turn: u64,
    urn: &mut (f64, f64),
) -> Vec<ElementId> {
    let open: Vec<&ElementId> = s.prospects.iter().filter(|id| state.black().contains(*id)).collect();
    if !ablate.contains(&Op::Reconnaissance) {
        if s.knobs.recon_budget == 0 || open.is_empty() {
            return Vec::new();
        }
        let inner: Box<dyn ExplorationScorer> = match s.knobs.scorer {
            ScorerKind::Uncertainty => Box::new(UncertaintyScorer::new(s.horizon, s.now)),
            ScorerKind::Random => Box::new(RandomScorer { seed: s.seed }),
        };
        let scorer = |p: &Prospect, m: &MemoryIndex| {
            if s.prospects.contains(&p.id) {
                inner.estimate(p, m)
            } else {
                f64::NEG_INFINITY
            }
        };
        return reconnaissance_plan_above(state, s.knobs.recon_budget, &scorer, EXPLORE_THRESHOLD);
    }
    if !s.knobs.implicit_exploration {
        return Vec::new();
    }
    let (explore_w, exploit_w) = *urn;
    let u = rng::unit(s.seed, &[rng::tag("urn"), turn]);
    if u < explore_w / (explore_w + exploit_w) {
        urn.0 += 1.0;
        if open.is_empty() {
            return Vec::new();
        }
        let pick = rng::unit(s.seed, &[rng::tag("urn-pick"), turn]);
        let i = ((pick * open.len() as f64) as usize).min(open.len() - 1);
        vec![open[i].clone()]
    } else {
        urn.1 += 1.0;
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate_scenario, Category, Knobs};

    #[test]
    fn runs_are_deterministic() {
        for c in Category::ALL {
            let s = generate_scenario(c, &Knobs::default(), 11).unwrap();
            let cfg = HarnessConfig::default();
            let a = run_scenario_traced(&s, &cfg).unwrap();
            let b = run_scenario_traced(&s, &cfg).unwrap();
            assert_eq!(a, b, "{c}");
        }
    }

    #[test]
    fn outcomes_are_exclusive_and_complete() {
        for c in Category::ALL {
            let s = generate_scenario(c, &Knobs::default(), 5).unwrap();
            let r = run_scenario(&s, &HarnessConfig::default()).unwrap();
            assert_eq!(r.outcomes.len(), s.gold.atoms.len());
            let failed = [
                Failure::Hallucination,
                Failure::StaleMemory,
                Failure::LayerPriorityError,
                Failure::InformationLoss,
                Failure::AttentionMiss,
                Failure::Unanswered,
            ]
            .iter()
            .map(|f| r.count(*f))
            .sum::<u64>();
            let ok = r.outcomes.values().filter(|o| **o == AtomOutcome::Success).count() as u64;
            assert_eq!(ok + failed, s.gold.atoms.len() as u64, "{c}");
        }
    }

    #[test]
    fn tokens_consumed_matches_trace() {
        let s = generate_scenario(Category::Simplification, &Knobs::default(), 2).unwrap();
        let (r, trace) = run_scenario_traced(&s, &HarnessConfig::default()).unwrap();
        let oracle: u64 = trace.iter().filter(|t| t.stage == "recall").map(|t| t.tokens_out).sum();
        assert_eq!(r.tokens_consumed, oracle);
        assert!(oracle > 0);
    }

    #[test]
    fn unexplored_black_fog_yields_guess_level_accuracy() {
        let knobs = Knobs { gold: 4, ..Knobs::default() };
        let mut cfg = HarnessConfig::default();
        cfg.pipeline.ablate.insert(Op::Reconnaissance);
        let seeds = 500;
        let mut acc = 0.0;
        let mut blind = 0u64;
        let mut total = 0u64;
        for seed in 0..seeds {
            let s = generate_scenario(Category::ReconVsSelection, &knobs, seed).unwrap();
            let r = run_scenario(&s, &cfg).unwrap();
            for i in 0..knobs.gold {
                total += 1;
                match r.outcomes[&format!("b{i}")] {
                    AtomOutcome::Success => acc += 1.0,
                    AtomOutcome::Hallucination | AtomOutcome::Unanswered => blind += 1,
                    other => panic!("b{i}: {other:?}"),
                }
            }
            assert_eq!(r.exploration_count, 0);
        }
        let acc = acc / total as f64;
        let expect = 0.3 * 0.25;
        let sd = (expect * (1.0 - expect) / total as f64).sqrt();
        assert!((acc - expect).abs() < 4.0 * sd, "accuracy {acc} vs {expect}");
        assert!(blind as f64 / total as f64 > 0.9);
    }

    #[test]
    fn uncertainty_scorer_beats_random() {
        let mut u = 0.0;
        let mut r = 0.0;
        let mut wasted_u = 0;
        for seed in 0..200 {
            for (kind, acc) in [(ScorerKind::Uncertainty, &mut u), (ScorerKind::Random, &mut r)] {
                let knobs = Knobs { scorer: kind, ..Knobs::default() };
                let s = generate_scenario(Category::ReconVsSelection, &knobs, seed).unwrap();
                let res = run_scenario(&s, &HarnessConfig::default()).unwrap();
                *acc += res.accuracy;
                if kind == ScorerKind::Uncertainty {
                    wasted_u += res.count(Failure::WastedRecon);
                }
            }
        }
        assert!(u >= r, "uncertainty {u} < random {r}");
        assert!(wasted_u < 200 * 2);
    }
}
