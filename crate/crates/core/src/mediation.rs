//! Mediated sensing: raw observations land in gray fog, and only their
//! projected, simplified derivatives reach the visible field.

use serde::{Deserialize, Serialize};

use crate::element::{ElementId, Provenance, TokenCostModel};
use crate::operators::{project_forward, simplify, OperatorError, ProjectionSchema, ResolutionLadder};
use crate::state::{ContextState, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediationParams {
    pub enabled: bool,
    pub simplify_ratio: f64,
    pub schema: ProjectionSchema,
    pub ladder: ResolutionLadder,
    pub cost: TokenCostModel,
    /// Outputs at most this size, already in the schema's format, may skip
    /// mediation.
    pub small_output: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mediated {
    pub state: ContextState,
    /// Ids appended to the visible field, in order.
    pub inserted: Vec<ElementId>,
    /// Raw sensed elements above the small-output threshold that reached the
    /// visible field.
    pub contamination: usize,
}

/// Senses `ids` (black → gray), then recalls one element per id into the
/// visible field: the raw element when mediation is off or the collapsed
/// exception applies, otherwise its φ∘π⁺ derivative. The recall is one
/// transition, so it is rejected whole if it would overflow the budget.
pub fn mediated_sense(
    state: &ContextState,
    ids: &[ElementId],
    params: &MediationParams,
) -> Result<Mediated, OperatorError> {
    let mut s = state.apply_transition(&Transition::sense(ids.iter().cloned()))?;
    let mut inserted = Vec::with_capacity(ids.len());
    let mut contamination = 0;
    for id in ids {
        let e = s.get(id)?.clone();
        let collapsed = e.tokens <= params.small_output && e.format == params.schema.format;
        if !params.enabled || collapsed {
            if e.tokens > params.small_output && e.provenance == Provenance::Sensed {
                contamination += 1;
            }
            inserted.push(id.clone());
            continue;
        }
        let projected =
            project_forward(&[&e], &params.schema, &params.ladder, &params.cost, ElementId::new(format!("{id}~pi")))?;
        let derived_id = s.fresh_id(&format!("{id}~med"));
        let mut derived = simplify(&projected.element, params.simplify_ratio, &params.cost, derived_id.clone())?;
        derived.provenance = Provenance::Synthesized { derived_from: vec![id.clone()] };
        s = s.insert_synthesized(derived)?;
        inserted.push(derived_id);
    }
    s = s.apply_transition(&Transition::recall(inserted.iter().cloned()))?;
    Ok(Mediated { state: s, inserted, contamination })
}
