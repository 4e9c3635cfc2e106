use std::collections::BTreeSet;

use cartography::element::{ContextElement, ElementId, Format, Modality, Provenance, SemanticAtom, TokenCostModel};
use cartography::mediation::{mediated_sense, MediationParams};
use cartography::operators::{ProjectionSchema, ResolutionLadder};
use cartography::state::{ContextState, StateError, Transition, TransitionKind, Zone};
use proptest::prelude::*;

fn catalog(tokens: &[u64]) -> Vec<ContextElement> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            ContextElement::new(format!("e{i}"), *t, "task").with_atom(SemanticAtom::new(format!("k{i}"), false))
        })
        .collect()
}

fn zone_count(s: &ContextState, id: &ElementId) -> usize {
    usize::from(s.black().contains(id)) + usize::from(s.gray().contains(id)) + usize::from(s.visible().contains(id))
}

proptest! {
    #[test]
    fn legal_sequences_keep_partition_budget_and_clock(
        tokens in prop::collection::vec(1u64..200, 2..10),
        budget in 50u64..1000,
        ops in prop::collection::vec((0usize..4, 1u16..1024), 0..40),
    ) {
        let ids: Vec<ElementId> = (0..tokens.len()).map(|i| ElementId::new(format!("e{i}"))).collect();
        let mut s = ContextState::new(catalog(&tokens), budget).unwrap();
        for (kind, mask) in ops {
            let kind = TransitionKind::ALL[kind];
            let chosen: Vec<ElementId> =
                ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| id.clone()).collect();
            if chosen.is_empty() {
                continue;
            }
            let wrong_zone = chosen.iter().any(|id| s.zone_of(id).unwrap() != kind.source());
            match s.apply_transition(&Transition::new(kind, chosen)) {
                Ok(next) => {
                    prop_assert!(!wrong_zone, "{} accepted an element outside {:?}", kind.name(), kind.source());
                    prop_assert!(next.clock() > s.clock());
                    s = next;
                }
                Err(e) => {
                    if wrong_zone {
                        let is_illegal = matches!(e, StateError::IllegalTransition { .. });
                        prop_assert!(is_illegal, "{e}");
                    }
                }
            }
            prop_assert!(s.audit().is_ok());
            for id in &ids {
                prop_assert_eq!(zone_count(&s, id), 1);
            }
            let visible: u64 = s.elements_in(Zone::Visible).iter().map(|e| e.tokens).sum();
            prop_assert!(visible <= s.visible_budget());
            prop_assert_eq!(visible, s.visible_tokens());
        }
    }

    #[test]
    fn mediation_keeps_large_raw_output_out_of_view(
        outputs in prop::collection::vec((1u64..3000, 0usize..12, any::<bool>()), 1..6),
    ) {
        let elements: Vec<ContextElement> = outputs
            .iter()
            .enumerate()
            .map(|(i, (tokens, atoms, kv))| {
                let mut e = ContextElement::new(format!("out{i}"), *tokens, "observation")
                    .with_format(if *kv { Format::KeyValueRecord } else { Format::PlainText });
                for j in 0..(*atoms).min(*tokens as usize) {
                    e = e.with_atom(SemanticAtom::new(format!("o{i}_{j}"), j == 0));
                }
                e
            })
            .collect();
        let ids: Vec<ElementId> = elements.iter().map(|e| e.id.clone()).collect();
        let state = ContextState::new(elements, 1_000_000).unwrap();
        let params = MediationParams {
            enabled: true,
            simplify_ratio: 0.5,
            schema: ProjectionSchema::new(Format::KeyValueRecord, Modality::Textual, 1, 4),
            ladder: ResolutionLadder::default(),
            cost: TokenCostModel::default(),
            small_output: 64,
        };
        let m = mediated_sense(&state, &ids, &params).unwrap();
        prop_assert_eq!(m.contamination, 0);
        for e in m.state.elements_in(Zone::Visible) {
            prop_assert!(!(e.provenance == Provenance::Sensed && e.tokens > params.small_output), "{} in view raw", e.id);
        }
        let shown: BTreeSet<_> = m.inserted.iter().collect();
        prop_assert_eq!(shown.len(), ids.len());
    }
}
