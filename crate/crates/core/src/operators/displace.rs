//! δ: repositioning visible elements toward higher salience.
//!
//! Positions here are element indices in the visible field (1-based), and
//! salience is evaluated over the field's element count.

use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId};
use crate::salience::SalienceProfile;
use crate::state::ContextState;

use super::OperatorError;

/// Moves `id` to `target`, shifting the elements in between. The move must
/// strictly raise the element's salience.
pub fn displace(
    state: &ContextState,
    id: &ElementId,
    target: usize,
    profile: &SalienceProfile,
) -> Result<ContextState, OperatorError> {
    let from = state.position_of(id).ok_or_else(|| OperatorError::NotVisible(id.clone()))?;
    let n = state.visible().len();
    let gain = profile.salience(target, n)? - profile.salience(from, n)?;
    if gain <= 0.0 {
        return Err(OperatorError::NonImproving { id: id.clone(), from, to: target });
    }
    let mut order = state.visible().to_vec();
    let moved = order.remove(from - 1);
    order.insert(target - 1, moved);
    Ok(state.reorder_visible(order)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementStrategy {
    /// System-layer elements to the front.
    #[default]
    ConstraintPinning,
    /// Most recently observed elements to the back.
    RecencyInjection,
    /// Highest-priority elements to the highest-salience slots.
    SalienceAwareAssembly,
}

impl DisplacementStrategy {
    pub fn apply(self, state: &ContextState, profile: &SalienceProfile) -> Result<ContextState, OperatorError> {
        match self {
            DisplacementStrategy::ConstraintPinning => {
                constraint_pinning(state, profile, |e| e.namespace.root() == "system")
            }
            DisplacementStrategy::RecencyInjection => {
                let newest = state
                    .elements_in(crate::state::Zone::Visible)
                    .into_iter()
                    .max_by_key(|e| (e.observed_at, e.id.clone()))
                    .map(|e| e.id.clone());
                recency_injection(state, profile, newest.as_slice())
            }
            DisplacementStrategy::SalienceAwareAssembly => {
                salience_aware_assembly(state, profile, |e| -f64::from(e.priority))
            }
        }
    }
}

/// Skips a move that would not raise salience; propagates anything else.
fn try_move(
    state: ContextState,
    id: &ElementId,
    target: usize,
    profile: &SalienceProfile,
) -> Result<ContextState, OperatorError> {
    match displace(&state, id, target, profile) {
        Ok(next) => Ok(next),
        Err(OperatorError::NonImproving { .. }) => Ok(state),
        Err(e) => Err(e),
    }
}

/// Moves elements matching `pinned` into the leading positions, keeping
/// their relative order.
pub fn constraint_pinning<P>(
    state: &ContextState,
    profile: &SalienceProfile,
    pinned: P,
) -> Result<ContextState, OperatorError>
where
    P: Fn(&ContextElement) -> bool,
{
    let targets: Vec<ElementId> =
        state.visible().iter().filter(|id| state.element(id).is_some_and(&pinned)).cloned().collect();
    let mut s = state.clone();
    for (slot, id) in targets.iter().enumerate() {
        if s.position_of(id) != Some(slot + 1) {
            s = try_move(s, id, slot + 1, profile)?;
        }
    }
    Ok(s)
}

/// Moves `ids` to the back of the field, in the given order.
pub fn recency_injection(
    state: &ContextState,
    profile: &SalienceProfile,
    ids: &[ElementId],
) -> Result<ContextState, OperatorError> {
    let mut s = state.clone();
    for id in ids {
        let n = s.visible().len();
        if s.position_of(id) != Some(n) {
            s = try_move(s, id, n, profile)?;
        }
    }
    Ok(s)
}

/// Places elements by descending `importance` into positions by descending
/// salience, one improving move at a time.
pub fn salience_aware_assembly<F>(
    state: &ContextState,
    profile: &SalienceProfile,
    importance: F,
) -> Result<ContextState, OperatorError>
where
    F: Fn(&ContextElement) -> f64,
{
    let n = state.visible().len();
    if n < 2 {
        return Ok(state.clone());
    }
    let mut slots: Vec<usize> = (1..=n).collect();
    let weights = profile.weights(n);
    slots.sort_by(|a, b| weights[b - 1].total_cmp(&weights[a - 1]).then(a.cmp(b)));
    let mut ranked: Vec<&ContextElement> = state.visible().iter().filter_map(|id| state.element(id)).collect();
    ranked.sort_by(|a, b| importance(b).total_cmp(&importance(a)).then(a.id.cmp(&b.id)));
    let ranked: Vec<ElementId> = ranked.into_iter().map(|e| e.id.clone()).collect();

    let mut s = state.clone();
    for (id, slot) in ranked.iter().zip(slots) {
        s = try_move(s, id, slot, profile)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Transition;

    fn field(n: usize, system_at: &[usize]) -> ContextState {
        let els: Vec<ContextElement> = (1..=n)
            .map(|i| {
                let ns = if system_at.contains(&i) { "system" } else { "observation" };
                ContextElement::new(format!("e{i:03}"), 10, ns).with_observed_at(i as u64)
            })
            .collect();
        let ids: Vec<ElementId> = els.iter().map(|e| e.id.clone()).collect();
        ContextState::new(els, 10_000)
            .unwrap()
            .apply_transition(&Transition::sense(ids.clone()))
            .unwrap()
            .apply_transition(&Transition::recall(ids))
            .unwrap()
    }

    #[test]
    fn trough_to_front_is_accepted() {
        let s = field(41, &[]);
        let p = SalienceProfile::u_shaped();
        let id = ElementId::from("e021");
        let next = displace(&s, &id, 1, &p).unwrap();
        assert_eq!(next.position_of(&id), Some(1));
        let mut a = next.visible().to_vec();
        let mut b = s.visible().to_vec();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(next.visible_tokens(), s.visible_tokens());
    }

    #[test]
    fn front_to_trough_is_rejected() {
        let s = field(41, &[]);
        let err = displace(&s, &"e001".into(), 21, &SalienceProfile::u_shaped()).unwrap_err();
        assert!(matches!(err, OperatorError::NonImproving { from: 1, to: 21, .. }));
        assert!(matches!(
            displace(&s, &"zzz".into(), 1, &SalienceProfile::u_shaped()),
            Err(OperatorError::NotVisible(_))
        ));
    }

    #[test]
    fn pinning_fronts_system_elements() {
        let s = field(40, &[12, 20, 27]);
        let pinned = DisplacementStrategy::ConstraintPinning.apply(&s, &SalienceProfile::u_shaped()).unwrap();
        for pos in 1..=3 {
            let id = &pinned.visible()[pos - 1];
            assert_eq!(pinned.element(id).unwrap().namespace.root(), "system");
        }
    }

    #[test]
    fn recency_injection_moves_to_back() {
        let s = field(30, &[]);
        let id = ElementId::from("e015");
        let next = recency_injection(&s, &SalienceProfile::u_shaped(), std::slice::from_ref(&id)).unwrap();
        assert_eq!(next.position_of(&id), Some(30));
    }

    #[test]
    fn assembly_puts_most_important_at_a_peak() {
        let s = field(30, &[]);
        let p = SalienceProfile::u_shaped();
        let next = salience_aware_assembly(&s, &p, |e| if e.id.as_str() == "e015" { 1.0 } else { 0.0 }).unwrap();
        let pos = next.position_of(&"e015".into()).unwrap();
        assert!(pos == 1 || pos == 30, "ended at {pos}");
    }
}
