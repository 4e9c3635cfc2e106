use std::collections::BTreeSet;

use cartography::element::{ContextElement, ElementId, SemanticAtom};
use cartography::harness::{collapse_census, HarnessConfig};
use cartography::operators::Op;
use cartography::pipeline::{
    run_maintenance, run_outbound, run_stages, OpStage, PipelineConfig, PipelineError, Query, Scope, Stage, Turn,
};
use cartography::state::{ContextState, Transition, Zone};
use proptest::prelude::*;

fn doc(i: usize, tokens: u64, atoms: usize, ns: &str) -> ContextElement {
    ContextElement::new(format!("d{i:02}"), tokens, ns)
        .with_atoms((0..atoms).map(|j| SemanticAtom::new(format!("d{i}.{j}"), j == 0)))
}

/// Everything sensed into gray fog; `visible` of them also recalled.
fn staged(elements: Vec<ContextElement>, budget: u64, visible: &[usize]) -> ContextState {
    let ids: Vec<ElementId> = elements.iter().map(|e| e.id.clone()).collect();
    let s = ContextState::new(elements, budget).unwrap().apply_transition(&Transition::sense(ids.clone())).unwrap();
    if visible.is_empty() {
        return s;
    }
    s.apply_transition(&Transition::recall(visible.iter().map(|i| ids[*i].clone()))).unwrap()
}

struct Sabotage;

impl Stage for Sabotage {
    fn name(&self) -> &str {
        "sabotage"
    }

    fn scope(&self) -> Scope {
        Scope::InFlight
    }

    fn apply(&self, t: &mut Turn<'_>) -> Result<(), PipelineError> {
        let ids: Vec<ElementId> = t.state.gray().iter().cloned().collect();
        t.state = t.state.apply_transition(&Transition::expire(ids))?;
        Err(PipelineError::Config("sabotaged".into()))
    }
}

fn query_all(n: usize) -> Query {
    Query::new((0..n).map(|i| format!("d{i}.0")))
}

#[test]
fn stage_order_changes_the_result() {
    let elements: Vec<ContextElement> = (0..4).map(|i| doc(i, 3000, 20, "task")).collect();
    let s = staged(elements, 100_000, &[]);
    let cfg = PipelineConfig::default();
    let q = query_all(4);
    let (sel, phi, delta) = (OpStage(Op::Selection), OpStage(Op::Simplification), OpStage(Op::Displacement));
    let a = run_stages(&s, &[&sel, &phi, &delta], &cfg, &q, 0).unwrap();
    let b = run_stages(&s, &[&sel, &delta, &phi], &cfg, &q, 0).unwrap();
    assert_ne!(a.state, b.state);
    assert!(a.state.visible_tokens() < b.state.visible_tokens());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn failed_stage_leaves_state_untouched(n in 1usize..8, at in 0usize..4) {
        let elements: Vec<ContextElement> = (0..n).map(|i| doc(i, 100 + i as u64, 3, "task")).collect();
        let s = staged(elements, 10_000, &[]);
        let snapshot = s.clone();
        let cfg = PipelineConfig::default();
        let mut stages: Vec<Box<dyn Stage>> =
            vec![Box::new(OpStage(Op::Selection)), Box::new(OpStage(Op::Simplification)), Box::new(OpStage(Op::Displacement))];
        stages.insert(at.min(stages.len()), Box::new(Sabotage));
        let refs: Vec<&dyn Stage> = stages.iter().map(|b| b.as_ref()).collect();
        let r = run_stages(&s, &refs, &cfg, &query_all(n), 0);
        prop_assert!(r.is_err());
        prop_assert_eq!(s, snapshot);
    }

    #[test]
    fn outbound_restores_the_budget(
        sizes in prop::collection::vec(50u64..2000, 2..12),
        system in 0u64..300,
        seed_keys in prop::collection::vec(any::<bool>(), 12),
    ) {
        let mut elements = vec![ContextElement::new("sys", system.max(1), "system")];
        elements.extend(sizes.iter().enumerate().map(|(i, t)| doc(i, *t, 4, "task")));
        let total: u64 = elements.iter().map(|e| e.tokens).sum();
        let budget = total + total / 20;
        let all: Vec<usize> = (0..elements.len()).collect();
        let s = staged(elements, budget, &all);
        let cfg = PipelineConfig::default();
        let q = Query::new((0..sizes.len()).filter(|i| seed_keys[*i]).map(|i| format!("d{i}.0")));
        let out = run_outbound(&s, &cfg, &q, 0).unwrap();
        prop_assert!(out.state.visible_tokens() <= budget);
        if (s.visible_tokens() as f64) > cfg.watermark * budget as f64 {
            let sys = system.max(1) as f64;
            let target = cfg.outbound_target * budget as f64;
            prop_assert!(out.state.visible_tokens() as f64 <= target.max(sys), "{} > {target}", out.state.visible_tokens());
            prop_assert!(out.state.visible().contains(&ElementId::new("sys")));
        }
        prop_assert!(out.state.audit().is_ok());
    }

    #[test]
    fn maintenance_touches_only_gray(
        sizes in prop::collection::vec(10u64..3000, 3..12),
        locs in prop::collection::vec(0usize..3, 12),
        split in 0usize..12,
    ) {
        let elements: Vec<ContextElement> = sizes
            .iter()
            .enumerate()
            .map(|(i, t)| doc(i, *t, 3, "task").with_locator(format!("file{}", locs[i])))
            .collect();
        let n = elements.len();
        let ids: Vec<ElementId> = elements.iter().map(|e| e.id.clone()).collect();
        let split = split % n;
        let mut s = staged(elements, 1_000_000, &(0..split.min(2)).collect::<Vec<_>>());
        if split + 1 < n {
            s = s.apply_transition(&Transition::expire([ids[n - 1].clone()])).unwrap();
        }
        let out = run_maintenance(&s, &PipelineConfig::default(), 0).unwrap();
        prop_assert_eq!(out.state.visible(), s.visible());
        prop_assert_eq!(out.state.black(), s.black());
        for id in s.visible() {
            prop_assert_eq!(out.state.element(id), s.element(id));
        }
        for id in s.black() {
            prop_assert_eq!(out.state.element(id), s.element(id));
        }
        prop_assert!(out.state.audit().is_ok());
        let critical = |st: &ContextState| -> BTreeSet<String> {
            st.elements_in(Zone::Gray).iter().flat_map(|e| e.critical_keys()).map(str::to_owned).collect()
        };
        prop_assert_eq!(critical(&out.state), critical(&s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn archival_keeps_what_destructive_compaction_loses(atoms in 20usize..80, cycles in 3usize..6) {
        let cfg = HarnessConfig::default();
        let kept = collapse_census(&cfg, atoms, cycles, true).unwrap();
        let cut = collapse_census(&cfg, atoms, cycles, false).unwrap();
        prop_assert!(kept.counts.iter().all(|c| *c == atoms));
        prop_assert!(kept.lost.is_empty());
        prop_assert!(cut.counts.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(cut.counts[cycles] < kept.counts[cycles]);
    }
}
