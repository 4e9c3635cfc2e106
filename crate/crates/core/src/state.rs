//! The tripartite zone partition (black fog, gray fog, visible field) and the
//! four zone transitions.
//!
//! [`ContextState`] is an immutable value: every operation returns a new state
//! and leaves the receiver untouched, so a failed multi-step operation can be
//! abandoned by simply keeping the old value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::{ContextElement, ElementId, LinkKind, Namespace, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Black,
    Gray,
    Visible,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::Black, Zone::Gray, Zone::Visible];

    pub fn symbol(self) -> &'static str {
        match self {
            Zone::Black => "B",
            Zone::Gray => "G",
            Zone::Visible => "V",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Zone::Black => "black",
            Zone::Gray => "gray",
            Zone::Visible => "visible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    Sense,
    Recall,
    Evict,
    Expire,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 4] =
        [TransitionKind::Sense, TransitionKind::Recall, TransitionKind::Evict, TransitionKind::Expire];

    pub fn source(self) -> Zone {
        match self {
            TransitionKind::Sense => Zone::Black,
            TransitionKind::Recall => Zone::Gray,
            TransitionKind::Evict => Zone::Visible,
            TransitionKind::Expire => Zone::Gray,
        }
    }

    pub fn destination(self) -> Zone {
        match self {
            TransitionKind::Sense => Zone::Gray,
            TransitionKind::Recall => Zone::Visible,
            TransitionKind::Evict => Zone::Gray,
            TransitionKind::Expire => Zone::Black,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransitionKind::Sense => "sense",
            TransitionKind::Recall => "recall",
            TransitionKind::Evict => "evict",
            TransitionKind::Expire => "expire",
        }
    }
}

/// A zone transition over an ordered batch of elements. Recall appends in
/// batch order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub kind: TransitionKind,
    pub elements: Vec<ElementId>,
}

impl Transition {
    pub fn new(kind: TransitionKind, elements: impl IntoIterator<Item = ElementId>) -> Self {
        Self { kind, elements: elements.into_iter().collect() }
    }

    pub fn sense(elements: impl IntoIterator<Item = ElementId>) -> Self {
        Self::new(TransitionKind::Sense, elements)
    }

    pub fn recall(elements: impl IntoIterator<Item = ElementId>) -> Self {
        Self::new(TransitionKind::Recall, elements)
    }

    pub fn evict(elements: impl IntoIterator<Item = ElementId>) -> Self {
        Self::new(TransitionKind::Evict, elements)
    }

    pub fn expire(elements: impl IntoIterator<Item = ElementId>) -> Self {
        Self::new(TransitionKind::Expire, elements)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("duplicate element id `{0}`")]
    DuplicateId(ElementId),
    #[error("element `{0}` is not in the universe")]
    NotInUniverse(ElementId),
    #[error("illegal {kind:?} of `{id}`: element is in {found}, expected {expected}")]
    IllegalTransition { kind: TransitionKind, id: ElementId, found: Zone, expected: Zone },
    #[error("recall needs {required} visible tokens but the budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },
    #[error("element `{0}` is not in the visible field")]
    NotVisible(ElementId),
    #[error("invalid element `{id}`: {reason}")]
    InvalidElement { id: ElementId, reason: String },
    #[error("containment links form a cycle through `{0}`")]
    ContainmentCycle(ElementId),
    #[error("visible reordering is not a permutation of the current field")]
    NotAPermutation,
}

/// A broken partition or budget invariant, as found by [`ContextState::audit`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("`{id}` is in {count} zones")]
    ZoneMembership { id: ElementId, count: usize },
    #[error("`{0}` is in a zone but not in the universe")]
    Stray(ElementId),
    #[error("`{0}` appears twice in the visible field")]
    DuplicateVisible(ElementId),
    #[error("visible field holds {tokens} tokens over a budget of {budget}")]
    OverBudget { tokens: u64, budget: u64 },
    #[error("cached visible token count {cached} disagrees with recount {actual}")]
    TokenCache { cached: u64, actual: u64 },
    #[error("layer assigned to non-visible element `{0}`")]
    StrayLayer(ElementId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextState {
    catalog: BTreeMap<ElementId, Arc<ContextElement>>,
    black: BTreeSet<ElementId>,
    gray: BTreeSet<ElementId>,
    visible: Vec<ElementId>,
    visible_set: BTreeSet<ElementId>,
    visible_tokens: u64,
    visible_budget: u64,
    clock: u64,
    serial: u64,
    layers: BTreeMap<ElementId, Namespace>,
}

impl ContextState {
    /// Builds the initial state: every catalog element starts unobserved.
    pub fn new(catalog: impl IntoIterator<Item = ContextElement>, visible_budget: u64) -> Result<Self, StateError> {
        let mut map = BTreeMap::new();
        for element in catalog {
            validate_element(&element)?;
            let id = element.id.clone();
            if map.insert(id.clone(), Arc::new(element)).is_some() {
                return Err(StateError::DuplicateId(id));
            }
        }
        check_containment_acyclic(map.values().map(|e| e.as_ref()))?;
        let black = map.keys().cloned().collect();
        Ok(Self {
            catalog: map,
            black,
            gray: BTreeSet::new(),
            visible: Vec::new(),
            visible_set: BTreeSet::new(),
            visible_tokens: 0,
            visible_budget,
            clock: 0,
            serial: 0,
            layers: BTreeMap::new(),
        })
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn visible_budget(&self) -> u64 {
        self.visible_budget
    }

    pub fn visible_tokens(&self) -> u64 {
        self.visible_tokens
    }

    pub fn universe(&self) -> impl Iterator<Item = &ElementId> {
        self.catalog.keys()
    }

    pub fn universe_len(&self) -> usize {
        self.catalog.len()
    }

    pub fn black(&self) -> &BTreeSet<ElementId> {
        &self.black
    }

    pub fn gray(&self) -> &BTreeSet<ElementId> {
        &self.gray
    }

    /// Visible field in position order (position 1 first).
    pub fn visible(&self) -> &[ElementId] {
        &self.visible
    }

    pub fn layers(&self) -> &BTreeMap<ElementId, Namespace> {
        &self.layers
    }

    pub fn element(&self, id: &ElementId) -> Option<&ContextElement> {
        self.catalog.get(id).map(|e| e.as_ref())
    }

    pub fn get(&self, id: &ElementId) -> Result<&ContextElement, StateError> {
        self.element(id).ok_or_else(|| StateError::NotInUniverse(id.clone()))
    }

    pub fn elements_in(&self, zone: Zone) -> Vec<&ContextElement> {
        let ids: Box<dyn Iterator<Item = &ElementId>> = match zone {
            Zone::Black => Box::new(self.black.iter()),
            Zone::Gray => Box::new(self.gray.iter()),
            Zone::Visible => Box::new(self.visible.iter()),
        };
        ids.filter_map(|id| self.element(id)).collect()
    }

    /// Zone holding `id`. Exactly one zone answers for any universe member.
    pub fn zone_of(&self, id: &ElementId) -> Result<Zone, StateError> {
        if !self.catalog.contains_key(id) {
            return Err(StateError::NotInUniverse(id.clone()));
        }
        if self.black.contains(id) {
            Ok(Zone::Black)
        } else if self.gray.contains(id) {
            Ok(Zone::Gray)
        } else if self.visible_set.contains(id) {
            Ok(Zone::Visible)
        } else {
            unreachable!("partition invariant: `{id}` is in the universe but in no zone")
        }
    }

    /// 1-based position of `id` in the visible field.
    pub fn position_of(&self, id: &ElementId) -> Option<usize> {
        self.visible.iter().position(|v| v == id).map(|p| p + 1)
    }

    pub fn apply_transition(&self, t: &Transition) -> Result<ContextState, StateError> {
        let mut seen = BTreeSet::new();
        for id in &t.elements {
            if !seen.insert(id) {
                return Err(StateError::DuplicateId(id.clone()));
            }
            let found = self.zone_of(id)?;
            let expected = t.kind.source();
            if found != expected {
                return Err(StateError::IllegalTransition { kind: t.kind, id: id.clone(), found, expected });
            }
        }

        let mut next = self.clone();
        match t.kind {
            TransitionKind::Sense => {
                for id in &t.elements {
                    next.black.remove(id);
                    next.gray.insert(id.clone());
                }
            }
            TransitionKind::Recall => {
                let incoming: u64 = t.elements.iter().map(|id| self.catalog[id].tokens).sum();
                let required = self.visible_tokens + incoming;
                if required > self.visible_budget {
                    return Err(StateError::BudgetExceeded { required, budget: self.visible_budget });
                }
                for id in &t.elements {
                    next.gray.remove(id);
                    next.visible.push(id.clone());
                    next.visible_set.insert(id.clone());
                }
                next.visible_tokens = required;
            }
            TransitionKind::Evict => {
                let leaving: BTreeSet<&ElementId> = t.elements.iter().collect();
                next.visible.retain(|id| !leaving.contains(id));
                for id in &t.elements {
                    next.visible_set.remove(id);
                    next.layers.remove(id);
                    next.visible_tokens -= self.catalog[id].tokens;
                    next.gray.insert(id.clone());
                }
            }
            TransitionKind::Expire => {
                for id in &t.elements {
                    next.gray.remove(id);
                    next.black.insert(id.clone());
                }
            }
        }
        next.clock += 1;
        Ok(next)
    }

    /// Advances the clock without moving anything.
    pub fn tick(&self) -> ContextState {
        let mut next = self.clone();
        next.clock += 1;
        next
    }

    /// Fresh id for a synthesized element, unique within this state's lineage.
    pub fn fresh_id(&self, stem: &str) -> ElementId {
        let mut serial = self.serial;
        loop {
            let id = ElementId::new(format!("{stem}#{serial}"));
            if !self.catalog.contains_key(&id) {
                return id;
            }
            serial += 1;
        }
    }

    /// Adds a newly synthesized element to the universe, directly in gray fog.
    /// Synthesis happens in memory; it is not a zone transition.
    pub fn insert_synthesized(&self, element: ContextElement) -> Result<ContextState, StateError> {
        validate_element(&element)?;
        if self.catalog.contains_key(&element.id) {
            return Err(StateError::DuplicateId(element.id.clone()));
        }
        let mut next = self.clone();
        next.gray.insert(element.id.clone());
        next.catalog.insert(element.id.clone(), Arc::new(element));
        next.serial += 1;
        check_containment_acyclic(next.catalog.values().map(|e| e.as_ref()))?;
        Ok(next)
    }

    /// Replaces gray-fog entries by one consolidated entry. The replaced ids
    /// leave the universe; black fog and the visible field are untouched.
    pub fn consolidate_gray(
        &self,
        replaced: &[ElementId],
        consolidated: ContextElement,
    ) -> Result<ContextState, StateError> {
        for id in replaced {
            let found = self.zone_of(id)?;
            if found != Zone::Gray {
                return Err(StateError::IllegalTransition {
                    kind: TransitionKind::Expire,
                    id: id.clone(),
                    found,
                    expected: Zone::Gray,
                });
            }
        }
        let mut next = self.insert_synthesized(consolidated)?;
        for id in replaced {
            next.gray.remove(id);
            next.catalog.remove(id);
        }
        Ok(next)
    }

    /// Reorders the visible field. `order` must be a permutation of it.
    pub fn reorder_visible(&self, order: Vec<ElementId>) -> Result<ContextState, StateError> {
        let mut a = order.clone();
        let mut b = self.visible.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(StateError::NotAPermutation);
        }
        let mut next = self.clone();
        next.visible = order;
        Ok(next)
    }

    /// Records a namespace layer for each listed visible element.
    pub fn with_layers(&self, layers: BTreeMap<ElementId, Namespace>) -> Result<ContextState, StateError> {
        for id in layers.keys() {
            if !self.visible_set.contains(id) {
                return Err(StateError::NotVisible(id.clone()));
            }
        }
        let mut next = self.clone();
        next.layers = layers;
        Ok(next)
    }

    /// Distinct atom keys carried by elements in the given zones.
    pub fn atom_keys_in(&self, zones: &[Zone]) -> BTreeSet<String> {
        zones.iter().flat_map(|z| self.elements_in(*z)).flat_map(|e| e.atoms.iter().map(|a| a.key.clone())).collect()
    }

    /// Recomputes every partition and budget invariant from scratch.
    pub fn audit(&self) -> Result<(), InvariantViolation> {
        let mut membership: BTreeMap<&ElementId, usize> = BTreeMap::new();
        for id in self.black.iter().chain(self.gray.iter()) {
            *membership.entry(id).or_default() += 1;
        }
        let mut vis = BTreeSet::new();
        for id in &self.visible {
            if !vis.insert(id) {
                return Err(InvariantViolation::DuplicateVisible(id.clone()));
            }
            *membership.entry(id).or_default() += 1;
        }
        for (id, count) in &membership {
            if !self.catalog.contains_key(*id) {
                return Err(InvariantViolation::Stray((*id).clone()));
            }
            if *count != 1 {
                return Err(InvariantViolation::ZoneMembership { id: (*id).clone(), count: *count });
            }
        }
        for id in self.catalog.keys() {
            if !membership.contains_key(id) {
                return Err(InvariantViolation::ZoneMembership { id: id.clone(), count: 0 });
            }
        }
        let actual: u64 = self.visible.iter().map(|id| self.catalog[id].tokens).sum();
        if actual != self.visible_tokens {
            return Err(InvariantViolation::TokenCache { cached: self.visible_tokens, actual });
        }
        if actual > self.visible_budget {
            return Err(InvariantViolation::OverBudget { tokens: actual, budget: self.visible_budget });
        }
        if let Some(id) = self.layers.keys().find(|id| !vis.contains(id)) {
            return Err(InvariantViolation::StrayLayer(id.clone()));
        }
        Ok(())
    }
}

fn validate_element(e: &ContextElement) -> Result<(), StateError> {
    let invalid = |reason: &str| StateError::InvalidElement { id: e.id.clone(), reason: reason.to_owned() };
    if e.id.as_str().is_empty() {
        return Err(invalid("empty id"));
    }
    let mut keys = BTreeSet::new();
    for a in &e.atoms {
        if !keys.insert(a.key.as_str()) {
            return Err(invalid(&format!("atom key `{}` repeated", a.key)));
        }
    }
    if !e.atoms.is_empty() && e.tokens == 0 {
        return Err(invalid("element with atoms must cost at least one token"));
    }
    for l in &e.links {
        if l.kind == LinkKind::Containment && l.src == l.dst {
            return Err(invalid("self containment link"));
        }
    }
    if let Provenance::Synthesized { derived_from } = &e.provenance {
        if derived_from.is_empty() {
            return Err(invalid("synthesized element without sources"));
        }
    }
    Ok(())
}

fn check_containment_acyclic<'a>(elements: impl Iterator<Item = &'a ContextElement>) -> Result<(), StateError> {
    let mut edges: BTreeMap<&ElementId, Vec<&ElementId>> = BTreeMap::new();
    for e in elements {
        for l in e.links.iter().filter(|l| l.kind == LinkKind::Containment) {
            edges.entry(&l.src).or_default().push(&l.dst);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark: BTreeMap<&ElementId, u8> = BTreeMap::new();
    for &start in edges.keys() {
        if mark.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&ElementId, usize)> = vec![(start, 0)];
        mark.insert(start, 1);
        while let Some((node, idx)) = stack.pop() {
            let children = edges.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if idx < children.len() {
                stack.push((node, idx + 1));
                let child = children[idx];
                match mark.get(child).copied().unwrap_or(0) {
                    0 => {
                        mark.insert(child, 1);
                        stack.push((child, 0));
                    }
                    1 => return Err(StateError::ContainmentCycle(child.clone())),
                    _ => {}
                }
            } else {
                mark.insert(node, 2);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{RelationalLink, SemanticAtom};

    fn el(id: &str, tokens: u64) -> ContextElement {
        ContextElement::new(id, tokens, "task").with_atom(SemanticAtom::new(format!("{id}.k"), false))
    }

    fn three() -> ContextState {
        ContextState::new(vec![el("e1", 10), el("e2", 20), el("e3", 30)], 1000).unwrap()
    }

    fn ids(xs: &[&str]) -> Vec<ElementId> {
        xs.iter().map(|x| ElementId::from(*x)).collect()
    }

    #[test]
    fn new_state_is_all_black() {
        let s = three();
        assert_eq!(s.black().len(), 3);
        assert!(s.gray().is_empty());
        assert!(s.visible().is_empty());
        assert_eq!(s.clock(), 0);
        assert_eq!(s.zone_of(&"e2".into()).unwrap(), Zone::Black);
    }

    #[test]
    fn empty_catalog_is_valid() {
        let s = ContextState::new(Vec::new(), 0).unwrap();
        assert_eq!(s.universe_len(), 0);
        s.audit().unwrap();
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = ContextState::new(vec![el("e1", 1), el("e1", 2)], 10).unwrap_err();
        assert_eq!(err, StateError::DuplicateId("e1".into()));
    }

    #[test]
    fn sense_moves_black_to_gray() {
        let s = three().apply_transition(&Transition::sense(ids(&["e1"]))).unwrap();
        assert_eq!(s.zone_of(&"e1".into()).unwrap(), Zone::Gray);
        assert_eq!(s.clock(), 1);
    }

    #[test]
    fn recall_from_black_is_illegal() {
        let err = three().apply_transition(&Transition::recall(ids(&["e1"]))).unwrap_err();
        assert!(matches!(err, StateError::IllegalTransition { found: Zone::Black, .. }));
    }

    #[test]
    fn sense_then_recall_is_visible() {
        let s = three()
            .apply_transition(&Transition::sense(ids(&["e1", "e2"])))
            .unwrap()
            .apply_transition(&Transition::recall(ids(&["e2", "e1"])))
            .unwrap();
        assert_eq!(s.visible(), ids(&["e2", "e1"]).as_slice());
        assert_eq!(s.zone_of(&"e1".into()).unwrap(), Zone::Visible);
        assert_eq!(s.visible_tokens(), 30);
    }

    #[test]
    fn recall_over_budget_is_rejected_whole() {
        let s = ContextState::new(vec![el("a", 60), el("b", 50)], 100).unwrap();
        let s = s.apply_transition(&Transition::sense(ids(&["a", "b"]))).unwrap();
        let err = s.apply_transition(&Transition::recall(ids(&["a", "b"]))).unwrap_err();
        assert_eq!(err, StateError::BudgetExceeded { required: 110, budget: 100 });
        assert!(s.visible().is_empty());
        assert_eq!(s.gray().len(), 2);
    }

    #[test]
    fn zone_of_unknown_id() {
        assert_eq!(three().zone_of(&"nope".into()).unwrap_err(), StateError::NotInUniverse("nope".into()));
    }

    #[test]
    fn every_kind_rejects_the_other_two_zones() {
        // Put e1 in B, e2 in G, e3 in V.
        let s = three()
            .apply_transition(&Transition::sense(ids(&["e2", "e3"])))
            .unwrap()
            .apply_transition(&Transition::recall(ids(&["e3"])))
            .unwrap();
        let by_zone = [(Zone::Black, "e1"), (Zone::Gray, "e2"), (Zone::Visible, "e3")];
        for kind in TransitionKind::ALL {
            for (zone, id) in by_zone {
                let r = s.apply_transition(&Transition::new(kind, ids(&[id])));
                if zone == kind.source() {
                    assert!(r.is_ok(), "{kind:?} from {zone}");
                } else {
                    assert!(
                        matches!(r, Err(StateError::IllegalTransition { .. })),
                        "{kind:?} from {zone} should be illegal"
                    );
                }
            }
        }
    }

    #[test]
    fn containment_cycle_rejected() {
        let a = el("a", 1).with_link(RelationalLink::new("a", "b", LinkKind::Containment));
        let b = el("b", 1).with_link(RelationalLink::new("b", "a", LinkKind::Containment));
        assert!(matches!(ContextState::new(vec![a, b], 10), Err(StateError::ContainmentCycle(_))));
        let self_adj = el("c", 1).with_link(RelationalLink::new("c", "c", LinkKind::Adjacency));
        assert!(ContextState::new(vec![self_adj], 10).is_ok());
    }

    #[test]
    fn atoms_require_tokens() {
        assert!(matches!(ContextState::new(vec![el("z", 0)], 10), Err(StateError::InvalidElement { .. })));
    }

    #[test]
    fn consolidation_leaves_black_and_visible_alone() {
        let s = three()
            .apply_transition(&Transition::sense(ids(&["e1", "e2", "e3"])))
            .unwrap()
            .apply_transition(&Transition::recall(ids(&["e3"])))
            .unwrap();
        let merged = ContextElement::new("m", 15, "task")
            .with_provenance(Provenance::Synthesized { derived_from: ids(&["e1", "e2"]) });
        let next = s.consolidate_gray(&ids(&["e1", "e2"]), merged).unwrap();
        assert_eq!(next.gray().iter().collect::<Vec<_>>(), vec![&ElementId::from("m")]);
        assert_eq!(next.visible(), s.visible());
        assert_eq!(next.black(), s.black());
        next.audit().unwrap();
    }
}
