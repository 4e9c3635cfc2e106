//! φ: token reduction that keeps every critical atom.

use crate::element::{importance_order, ContextElement, ElementId, Provenance, TokenCostModel};

use super::OperatorError;

/// Reduces `e` toward `target_ratio` of its lineage root's size.
///
/// The token budget is `max(⌈ratio · origin⌉, cost(critical atoms))`, where
/// `origin` is the raw size of the sensed element `e` descends from. Critical
/// atoms always stay; non-critical atoms are added most-important first while
/// the cost model fits the budget. The result never grows: its token count is
/// `min(e.tokens, cost(kept atoms))`. A ratio of 1 keeps `e`'s atoms and
/// tokens as they are.
///
/// Budgeting against the lineage root makes a repeated pass at the same
/// ratio a no-op, since the second pass sees the same budget and the same
/// atom ranking.
pub fn simplify(
    e: &ContextElement,
    target_ratio: f64,
    model: &TokenCostModel,
    new_id: ElementId,
) -> Result<ContextElement, OperatorError> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(OperatorError::Parameter(format!("simplification ratio {target_ratio} outside (0, 1]")));
    }
    if e.tokens == 0 {
        return Err(OperatorError::Parameter(format!("cannot simplify zero-token element `{}`", e.id)));
    }

    let mut out = e.clone();
    out.id = new_id;
    out.provenance = Provenance::Synthesized { derived_from: vec![e.id.clone()] };
    out.origin_tokens = Some(e.origin());
    if target_ratio == 1.0 {
        return Ok(out);
    }

    let critical = e.critical_atoms().count();
    let budget = ((target_ratio * e.origin() as f64).ceil() as u64).max(model.cost(critical));
    let mut ranked = e.atoms.clone();
    ranked.sort_by(importance_order);
    let mut kept = critical;
    while kept < ranked.len() && model.cost(kept + 1) <= budget {
        kept += 1;
    }
    ranked.truncate(kept);
    // Preserve the source's atom order among survivors.
    let survivors: std::collections::BTreeSet<&str> = ranked.iter().map(|a| a.key.as_str()).collect();
    out.atoms.retain(|a| survivors.contains(a.key.as_str()));
    out.tokens = e.tokens.min(model.cost(kept));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::SemanticAtom;

    fn element(critical: usize, other: usize, tokens: u64) -> ContextElement {
        let mut e = ContextElement::new("e", tokens, "observation");
        for i in 0..critical {
            e = e.with_atom(SemanticAtom::new(format!("c{i}"), true));
        }
        for i in 0..other {
            e = e.with_atom(SemanticAtom::new(format!("n{i}"), false).with_priority(i as i32));
        }
        e
    }

    #[test]
    fn identity_ratio() {
        let e = element(2, 3, 400);
        let s = simplify(&e, 1.0, &TokenCostModel::default(), "s".into()).unwrap();
        assert_eq!(s.atoms, e.atoms);
        assert_eq!(s.tokens, 400);
        assert_eq!(s.provenance.derived_from(), &["e".into()]);
    }

    #[test]
    fn keeps_critical_at_low_ratio() {
        let e = element(2, 8, 200);
        let s = simplify(&e, 0.2, &TokenCostModel::default(), "s".into()).unwrap();
        // budget = max(40, 25) = 40: both critical plus one non-critical (35).
        assert_eq!(s.critical_keys(), e.critical_keys());
        assert_eq!(s.atoms.len(), 3);
        assert_eq!(s.atom("n0").map(|a| a.key.as_str()), Some("n0"));
        assert_eq!(s.tokens, 35);
    }

    #[test]
    fn second_pass_is_a_no_op() {
        let m = TokenCostModel::default();
        let e = element(1, 6, 300);
        let once = simplify(&e, 0.5, &m, "a".into()).unwrap();
        let twice = simplify(&once, 0.5, &m, "b".into()).unwrap();
        assert!(once.tokens < e.tokens);
        assert_eq!(twice.tokens, once.tokens);
        assert_eq!(twice.atoms, once.atoms);
    }

    #[test]
    fn ratio_out_of_range() {
        let e = element(0, 1, 10);
        for r in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(simplify(&e, r, &TokenCostModel::default(), "s".into()).is_err());
        }
    }
}
