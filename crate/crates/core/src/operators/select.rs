//! σ: top-k selection of elements crossing a zone boundary.

use std::cmp::Ordering;

use crate::element::{ContextElement, ElementId};
use crate::state::ContextState;

use super::{OperatorError, SelectionMode};

/// Top `k` of `pool` by `relevance`, highest first. Equal scores fall back to
/// priority rank (lower first), then id. Every pool member must sit in the
/// zone `mode` selects from.
pub fn select<F>(
    state: &ContextState,
    pool: &[ElementId],
    mode: SelectionMode,
    relevance: F,
    k: i64,
) -> Result<Vec<ElementId>, OperatorError>
where
    F: Fn(&ContextElement) -> f64,
{
    if k < 0 {
        return Err(OperatorError::Parameter(format!("selection k = {k} < 0")));
    }
    let expected = mode.source();
    let mut scored = Vec::with_capacity(pool.len());
    for id in pool {
        let found = state.zone_of(id)?;
        if found != expected {
            return Err(OperatorError::ZoneMismatch { id: id.clone(), mode, found, expected });
        }
        let e = state.get(id)?;
        scored.push((relevance(e), e));
    }
    scored.sort_by(|(sa, a), (sb, b)| rank(*sa, a, *sb, b));
    scored.dedup_by(|x, y| x.1.id == y.1.id);
    Ok(scored.into_iter().take(k as usize).map(|(_, e)| e.id.clone()).collect())
}

/// [`select`] over the whole source zone of `mode`.
pub fn select_zone<F>(
    state: &ContextState,
    mode: SelectionMode,
    relevance: F,
    k: i64,
) -> Result<Vec<ElementId>, OperatorError>
where
    F: Fn(&ContextElement) -> f64,
{
    let pool: Vec<ElementId> = state.elements_in(mode.source()).into_iter().map(|e| e.id.clone()).collect();
    select(state, &pool, mode, relevance, k)
}

fn rank(sa: f64, a: &ContextElement, sb: f64, b: &ContextElement) -> Ordering {
    sb.total_cmp(&sa).then(a.priority.cmp(&b.priority)).then(a.id.cmp(&b.id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Transition;

    fn gray_state(n: usize) -> (ContextState, Vec<ElementId>) {
        let els: Vec<_> =
            (0..n).map(|i| ContextElement::new(format!("e{i:02}"), 10, "task").with_priority((i % 3) as i32)).collect();
        let ids: Vec<ElementId> = els.iter().map(|e| e.id.clone()).collect();
        let s = ContextState::new(els, 1000).unwrap().apply_transition(&Transition::sense(ids.clone())).unwrap();
        (s, ids)
    }

    fn score(e: &ContextElement) -> f64 {
        e.id.as_str()[1..].parse::<f64>().unwrap()
    }

    #[test]
    fn k_bounds() {
        let (s, ids) = gray_state(5);
        assert_eq!(select(&s, &ids, SelectionMode::Recall, score, 0).unwrap(), vec![]);
        let all = select(&s, &ids, SelectionMode::Recall, score, 99).unwrap();
        assert_eq!(all.len(), 5);
        assert!(matches!(select(&s, &ids, SelectionMode::Recall, score, -1), Err(OperatorError::Parameter(_))));
    }

    #[test]
    fn top_three_of_ten() {
        let (s, ids) = gray_state(10);
        let mut oracle: Vec<_> = ids.clone();
        oracle.sort_by(|a, b| score(s.get(b).unwrap()).total_cmp(&score(s.get(a).unwrap())));
        let got = select(&s, &ids, SelectionMode::Expire, score, 3).unwrap();
        assert_eq!(got, oracle[..3].to_vec());
    }

    #[test]
    fn ties_break_on_priority_then_id() {
        let (s, ids) = gray_state(6);
        let got = select(&s, &ids, SelectionMode::Recall, |_| 1.0, 6).unwrap();
        let names: Vec<&str> = got.iter().map(|i| i.as_str()).collect();
        assert_eq!(names, ["e00", "e03", "e01", "e04", "e02", "e05"]);
    }

    #[test]
    fn wrong_zone_rejected() {
        let (s, ids) = gray_state(2);
        assert!(matches!(select(&s, &ids, SelectionMode::Evict, score, 1), Err(OperatorError::ZoneMismatch { .. })));
    }
}
