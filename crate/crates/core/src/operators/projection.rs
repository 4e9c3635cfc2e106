//! π⁺ and π⁻: moving content across the gray/visible boundary under a
//! projection schema, and the resolution ladder that bounds projected size.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::element::{
    importance_order, ContextElement, ElementId, Format, LinkKind, Modality, Namespace, Provenance, RelationalLink,
    SemanticAtom, TokenCostModel,
};
use crate::state::{ContextState, StateError, Transition, TransitionKind, Zone};

use super::OperatorError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub label: String,
    /// Token budget; `None` means unbounded.
    pub budget: Option<u64>,
}

/// Resolution levels ordered coarse to fine. The finest level is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Level>", into = "Vec<Level>")]
pub struct ResolutionLadder {
    levels: Vec<Level>,
}

impl Default for ResolutionLadder {
    fn default() -> Self {
        Self::new(vec![
            Level { label: "L0".into(), budget: Some(100) },
            Level { label: "L1".into(), budget: Some(1000) },
            Level { label: "L2".into(), budget: None },
        ])
        .expect("default ladder is valid")
    }
}

impl ResolutionLadder {
    pub fn new(levels: Vec<Level>) -> Result<Self, OperatorError> {
        if levels.len() < 2 {
            return Err(OperatorError::Schema("ladder needs at least 2 levels".into()));
        }
        let (last, bounded) = levels.split_last().expect("non-empty");
        if last.budget.is_some() {
            return Err(OperatorError::Schema("finest level must be unbounded".into()));
        }
        let mut prev = None;
        for l in bounded {
            let Some(b) = l.budget else {
                return Err(OperatorError::Schema(format!(
                    "only the finest level may be unbounded, not `{}`",
                    l.label
                )));
            };
            if prev.is_some_and(|p| b <= p) {
                return Err(OperatorError::Schema("level budgets must strictly increase".into()));
            }
            prev = Some(b);
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn budget(&self, level: usize) -> Option<u64> {
        self.levels.get(level).and_then(|l| l.budget)
    }

    /// One level coarser than `level`, saturating at the coarsest.
    pub fn coarser(&self, level: usize) -> usize {
        level.saturating_sub(1)
    }
}

impl TryFrom<Vec<Level>> for ResolutionLadder {
    type Error = OperatorError;
    fn try_from(v: Vec<Level>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ResolutionLadder> for Vec<Level> {
    fn from(l: ResolutionLadder) -> Self {
        l.levels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSchema {
    pub format: Format,
    pub modality: Modality,
    pub resolution: usize,
    /// Containment depth retained.
    pub dimensionality: usize,
}

impl ProjectionSchema {
    pub fn new(format: Format, modality: Modality, resolution: usize, dimensionality: usize) -> Self {
        Self { format, modality, resolution, dimensionality }
    }

    pub fn validate(&self, ladder: &ResolutionLadder, model: &TokenCostModel) -> Result<(), OperatorError> {
        if self.resolution >= ladder.len() {
            return Err(OperatorError::Schema(format!(
                "resolution {} outside a {}-level ladder",
                self.resolution,
                ladder.len()
            )));
        }
        if self.dimensionality == 0 {
            return Err(OperatorError::Schema("dimensionality must be >= 1".into()));
        }
        if ladder.budget(self.resolution).is_some_and(|b| b < model.cost(0)) {
            return Err(OperatorError::Schema(format!("level {} cannot hold even an empty element", self.resolution)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projected {
    pub element: ContextElement,
    /// Set when a diagrammatic source was rendered textually.
    pub distortion: bool,
    pub dropped_links: Vec<RelationalLink>,
    /// True when atoms, links and tokens all survived unchanged.
    pub lossless: bool,
}

/// π⁺: renders one element, or a connected group of them, under `schema`.
///
/// Atoms are kept most-important first while the level budget allows, so the
/// output never exceeds the budget of `schema.resolution`, even if that costs
/// critical atoms. Containment links reaching deeper than
/// `schema.dimensionality` are dropped. Rendering diagrammatic content as
/// text drops adjacency links and flags the distortion.
pub fn project_forward(
    sources: &[&ContextElement],
    schema: &ProjectionSchema,
    ladder: &ResolutionLadder,
    model: &TokenCostModel,
    new_id: ElementId,
) -> Result<Projected, OperatorError> {
    schema.validate(ladder, model)?;
    if sources.is_empty() {
        return Err(OperatorError::Parameter("nothing to project".into()));
    }

    let mut atoms: BTreeMap<&str, SemanticAtom> = BTreeMap::new();
    for e in sources {
        for a in &e.atoms {
            atoms.entry(a.key.as_str()).and_modify(|cur| cur.critical |= a.critical).or_insert_with(|| a.clone());
        }
    }
    let mut all_links: Vec<RelationalLink> = sources.iter().flat_map(|e| e.links.iter().cloned()).collect();
    all_links.sort();
    all_links.dedup();

    let depth = containment_depths(&all_links);
    let distortion =
        sources.iter().any(|e| e.modality == Modality::Diagrammatic) && schema.modality == Modality::Textual;
    let (kept_links, dropped_links): (Vec<_>, Vec<_>) = all_links.into_iter().partition(|l| {
        let too_deep = l.kind == LinkKind::Containment && depth[&l.dst] > schema.dimensionality;
        let flattened = distortion && l.kind == LinkKind::Adjacency;
        !(too_deep || flattened)
    });

    let source_tokens: u64 = sources.iter().map(|e| e.tokens).sum();
    let mut ranked: Vec<SemanticAtom> = atoms.into_values().collect();
    let atom_total = ranked.len();
    let tokens = match ladder.budget(schema.resolution) {
        None => source_tokens.min(if sources.len() == 1 { source_tokens } else { model.cost(atom_total) }),
        Some(budget) => {
            ranked.sort_by(importance_order);
            let fit = model.capacity(budget).unwrap_or(0).min(ranked.len());
            ranked.truncate(fit);
            source_tokens.min(model.cost(fit))
        }
    };
    let lossless = dropped_links.is_empty() && ranked.len() == atom_total && tokens == source_tokens;
    ranked.sort_by(|a, b| a.key.cmp(&b.key));

    let first = sources[0];
    let element = ContextElement {
        id: new_id,
        atoms: ranked,
        links: kept_links,
        tokens,
        namespace: first.namespace.clone(),
        priority: sources.iter().map(|e| e.priority).min().unwrap_or(0),
        provenance: Provenance::Synthesized { derived_from: sources.iter().map(|e| e.id.clone()).collect() },
        observed_at: sources.iter().map(|e| e.observed_at).max().unwrap_or(0),
        resolution: schema.resolution,
        modality: schema.modality,
        format: schema.format,
        locator: first.locator.clone(),
        origin_tokens: Some(sources.iter().map(|e| e.origin()).sum()),
    };
    Ok(Projected { element, distortion, dropped_links, lossless })
}

/// Depth of every node in the containment forest (roots at 0), by longest
/// chain. Nodes that appear only in non-containment links get depth 0.
fn containment_depths(links: &[RelationalLink]) -> BTreeMap<ElementId, usize> {
    let mut children: BTreeMap<&ElementId, Vec<&ElementId>> = BTreeMap::new();
    let mut has_parent: BTreeSet<&ElementId> = BTreeSet::new();
    let mut nodes: BTreeSet<&ElementId> = BTreeSet::new();
    for l in links {
        nodes.insert(&l.src);
        nodes.insert(&l.dst);
        if l.kind == LinkKind::Containment {
            children.entry(&l.src).or_default().push(&l.dst);
            has_parent.insert(&l.dst);
        }
    }
    let mut depth: BTreeMap<ElementId, usize> = nodes.iter().map(|n| ((*n).clone(), 0)).collect();
    // Longest-path relaxation from roots; containment is acyclic by state invariant.
    let mut frontier: Vec<&ElementId> = nodes.iter().copied().filter(|n| !has_parent.contains(n)).collect();
    let mut guard = 0usize;
    while let Some(n) = frontier.pop() {
        guard += 1;
        if guard > 1 << 20 {
            break;
        }
        let d = depth[n];
        for c in children.get(n).into_iter().flatten() {
            if depth[*c] < d + 1 {
                depth.insert((*c).clone(), d + 1);
                frontier.push(c);
            }
        }
    }
    depth
}

/// Result of π⁻.
#[derive(Debug, Clone, PartialEq)]
pub struct Compaction {
    pub state: ContextState,
    pub summary: Option<ElementId>,
    /// Originals sent to black fog (destructive mode only).
    pub lost: Vec<ElementId>,
}

/// π⁻: compacts visible elements into a summary stored in gray fog.
///
/// The summary keeps every critical atom of the inputs plus up to
/// `⌊ratio · n⌋` of the `n` non-critical ones, further capped by the schema's
/// level budget. With `archival` the originals are evicted to gray fog next to
/// the summary; without it they are expired to black fog and only the summary
/// survives.
pub fn project_inverse(
    state: &ContextState,
    elements: &[ElementId],
    schema: &ProjectionSchema,
    ladder: &ResolutionLadder,
    model: &TokenCostModel,
    archival: bool,
    ratio: f64,
) -> Result<Compaction, OperatorError> {
    schema.validate(ladder, model)?;
    if !(0.0..=1.0).contains(&ratio) {
        return Err(OperatorError::Parameter(format!("compaction ratio {ratio} outside [0, 1]")));
    }
    if elements.is_empty() {
        return Ok(Compaction { state: state.tick(), summary: None, lost: Vec::new() });
    }
    for id in elements {
        let found = state.zone_of(id)?;
        if found != Zone::Visible {
            return Err(StateError::IllegalTransition {
                kind: TransitionKind::Evict,
                id: id.clone(),
                found,
                expected: Zone::Visible,
            }
            .into());
        }
    }

    let sources: Vec<&ContextElement> = elements.iter().map(|id| state.get(id)).collect::<Result<_, _>>()?;
    let mut union: BTreeMap<&str, SemanticAtom> = BTreeMap::new();
    for e in &sources {
        for a in &e.atoms {
            union
                .entry(a.key.as_str())
                .and_modify(|cur| {
                    cur.critical |= a.critical;
                    cur.priority = cur.priority.min(a.priority);
                })
                .or_insert_with(|| a.clone());
        }
    }
    let (mut critical, mut other): (Vec<SemanticAtom>, Vec<SemanticAtom>) =
        union.into_values().partition(|a| a.critical);
    other.sort_by(importance_order);
    let by_ratio = (ratio * other.len() as f64).floor() as usize;
    let by_budget = match ladder.budget(schema.resolution) {
        None => usize::MAX,
        Some(b) => model.capacity(b).unwrap_or(0).saturating_sub(critical.len()),
    };
    other.truncate(by_ratio.min(by_budget));
    critical.append(&mut other);
    critical.sort_by(|a, b| a.key.cmp(&b.key));

    let summary_id = state.fresh_id("summary");
    let summary = ContextElement {
        id: summary_id.clone(),
        tokens: model.cost(critical.len()),
        atoms: critical,
        links: Vec::new(),
        namespace: Namespace::new("memory/summary"),
        priority: sources.iter().map(|e| e.priority).min().unwrap_or(0),
        provenance: Provenance::Synthesized { derived_from: elements.to_vec() },
        observed_at: sources.iter().map(|e| e.observed_at).max().unwrap_or(0),
        resolution: schema.resolution,
        modality: schema.modality,
        format: schema.format,
        locator: None,
        origin_tokens: None,
    };

    let mut next = state.apply_transition(&Transition::evict(elements.iter().cloned()))?;
    let mut lost = Vec::new();
    if !archival {
        next = next.apply_transition(&Transition::expire(elements.iter().cloned()))?;
        lost = elements.to_vec();
    }
    next = next.insert_synthesized(summary)?;
    Ok(Compaction { state: next, summary: Some(summary_id), lost })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(tokens: u64, atoms: usize) -> ContextElement {
        let mut e = ContextElement::new("big", tokens, "memory");
        for i in 0..atoms {
            e = e.with_atom(SemanticAtom::new(format!("a{i:03}"), i % 10 == 0).with_priority(i as i32));
        }
        e
    }

    fn schema(res: usize) -> ProjectionSchema {
        ProjectionSchema::new(Format::KeyValueRecord, Modality::Textual, res, 8)
    }

    #[test]
    fn ladder_validation() {
        assert!(ResolutionLadder::new(vec![Level { label: "x".into(), budget: None }]).is_err());
        let l = |b| Level { label: "l".into(), budget: b };
        assert!(ResolutionLadder::new(vec![l(Some(10)), l(Some(10)), l(None)]).is_err());
        assert!(ResolutionLadder::new(vec![l(Some(10)), l(Some(20))]).is_err());
        assert!(ResolutionLadder::new(vec![l(Some(10)), l(None), l(None)]).is_err());
        let d = ResolutionLadder::default();
        assert_eq!(d.budget(0), Some(100));
        assert_eq!(d.budget(1), Some(1000));
        assert_eq!(d.budget(2), None);
    }

    #[test]
    fn finest_level_is_lossless() {
        let e = big(5000, 12).with_link(RelationalLink::new("big", "x", LinkKind::Causal));
        let p =
            project_forward(&[&e], &schema(2), &ResolutionLadder::default(), &TokenCostModel::default(), "p".into())
                .unwrap();
        assert!(p.lossless);
        assert_eq!(p.element.atoms.len(), 12);
        assert_eq!(p.element.links, e.links);
        assert_eq!(p.element.tokens, 5000);
    }

    #[test]
    fn l0_fits_budget() {
        let e = big(5000, 400);
        let p =
            project_forward(&[&e], &schema(0), &ResolutionLadder::default(), &TokenCostModel::default(), "p".into())
                .unwrap();
        assert!(p.element.tokens <= 100);
        // Critical atoms outrank the rest while they fit.
        assert!(p.element.atoms.iter().all(|a| a.critical));
    }

    #[test]
    fn diagrammatic_to_text_distorts() {
        let e = big(50, 2)
            .with_modality(Modality::Diagrammatic)
            .with_link(RelationalLink::new("big", "n", LinkKind::Adjacency))
            .with_link(RelationalLink::new("big", "m", LinkKind::Causal));
        let p =
            project_forward(&[&e], &schema(2), &ResolutionLadder::default(), &TokenCostModel::default(), "p".into())
                .unwrap();
        assert!(p.distortion);
        assert!(p.element.links.iter().all(|l| l.kind != LinkKind::Adjacency));
        assert_eq!(p.element.links.len(), 1);
        assert!(!p.lossless);
    }

    #[test]
    fn containment_truncated_at_dimensionality() {
        let e = big(50, 1)
            .with_link(RelationalLink::new("r", "a", LinkKind::Containment))
            .with_link(RelationalLink::new("a", "b", LinkKind::Containment))
            .with_link(RelationalLink::new("b", "c", LinkKind::Containment));
        let mut s = schema(2);
        s.dimensionality = 2;
        let p =
            project_forward(&[&e], &s, &ResolutionLadder::default(), &TokenCostModel::default(), "p".into()).unwrap();
        assert_eq!(p.element.links.len(), 2);
        assert_eq!(p.dropped_links, vec![RelationalLink::new("b", "c", LinkKind::Containment)]);
    }

    #[test]
    fn invalid_schema() {
        let e = big(50, 1);
        let mut s = schema(3);
        let m = TokenCostModel::default();
        let ladder = ResolutionLadder::default();
        assert!(matches!(project_forward(&[&e], &s, &ladder, &m, "p".into()), Err(OperatorError::Schema(_))));
        s.resolution = 0;
        s.dimensionality = 0;
        assert!(matches!(project_forward(&[&e], &s, &ladder, &m, "p".into()), Err(OperatorError::Schema(_))));
    }
}
