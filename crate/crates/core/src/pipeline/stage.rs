//! Stages and the per-turn working set they operate on.
//!
//! Inbound work happens in two scopes. In-flight stages (σ, π⁺, φ, α)
//! transform a batch of candidate elements that has not reached the visible
//! field yet. Field stages (δ, λ) act on the visible field itself. The batch
//! is admitted (stored derivatives land in gray fog, then everything is
//! recalled) right before the first field stage runs.

use crate::element::{ContextElement, ElementId, Provenance};
use crate::operators::{aggregate, assign_layers, project_forward, select, simplify, Op, SelectionMode};
use crate::state::{ContextState, Transition, Zone};

use super::trace::{TraceRecord, RECALL};
use super::{shadowed, PipelineConfig, PipelineError, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    InFlight,
    Field,
}

/// A candidate on its way into view, with the gray-fog ids it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct InFlight {
    pub sources: Vec<ElementId>,
    pub element: ContextElement,
    pub transformed: bool,
}

pub struct Turn<'a> {
    pub state: ContextState,
    pub batch: Vec<InFlight>,
    pub admitted: bool,
    /// Ids appended to the visible field this turn.
    pub inserted: Vec<ElementId>,
    pub trace: Vec<TraceRecord>,
    pub contamination: usize,
    pub turn: u64,
    pub config: &'a PipelineConfig,
    pub query: &'a Query,
}

impl<'a> Turn<'a> {
    pub fn new(state: ContextState, config: &'a PipelineConfig, query: &'a Query, turn: u64) -> Self {
        Self {
            state,
            batch: Vec::new(),
            admitted: false,
            inserted: Vec::new(),
            trace: Vec::new(),
            contamination: 0,
            turn,
            config,
            query,
        }
    }

    fn batch_ids(&self) -> Vec<ElementId> {
        self.batch.iter().map(|f| f.element.id.clone()).collect()
    }

    fn batch_tokens(&self) -> u64 {
        self.batch.iter().map(|f| f.element.tokens).sum()
    }

    /// Records an in-flight stage given the batch as it was before.
    fn log_batch(&mut self, stage: &str, ids_in: Vec<ElementId>, tokens_in: u64) {
        let mut r = TraceRecord::new(self.turn, stage);
        r.ids_in = ids_in;
        r.tokens_in = tokens_in;
        r.ids_out = self.batch_ids();
        r.tokens_out = self.batch_tokens();
        self.trace.push(r);
    }

    /// Gray-fog elements σ may recall: not already carried by a derivative,
    /// not in a suppressed namespace.
    pub fn candidates(&self) -> Vec<ElementId> {
        let hidden = shadowed(&self.state, self.query);
        self.state
            .elements_in(Zone::Gray)
            .into_iter()
            .filter(|e| !hidden.contains(&e.id))
            .filter(|e| !self.config.suppressed.iter().any(|s| s == e.namespace.root()))
            .map(|e| e.id.clone())
            .collect()
    }

    pub fn load(&mut self, ids: &[ElementId]) -> Result<(), PipelineError> {
        self.batch = ids
            .iter()
            .map(|id| {
                Ok(InFlight { sources: vec![id.clone()], element: self.state.get(id)?.clone(), transformed: false })
            })
            .collect::<Result<_, PipelineError>>()?;
        Ok(())
    }

    /// Stores derivatives and recalls the batch, making room by evicting the
    /// least relevant non-system elements when needed. Items that cannot fit
    /// even then stay behind in gray fog.
    pub fn admit(&mut self) -> Result<(), PipelineError> {
        if self.admitted {
            return Ok(());
        }
        self.admitted = true;
        let budget = self.state.visible_budget();
        for item in std::mem::take(&mut self.batch) {
            let need = item.element.tokens;
            let free = budget - self.state.visible_tokens();
            if need > free {
                let Some(victims) = self.eviction_set(need - free) else {
                    continue;
                };
                let before = self.state.clone();
                self.state = self.state.apply_transition(&Transition::evict(victims.iter().cloned()))?;
                self.trace.push(TraceRecord::new(self.turn, "admission_evict").with_ids(
                    &before,
                    &victims,
                    &self.state,
                    &[],
                ));
            }
            let id = if item.transformed {
                let stem = format!("{}~t{}", item.sources[0], self.turn);
                let id = self.state.fresh_id(&stem);
                let mut e = item.element;
                e.id = id.clone();
                e.provenance = Provenance::Synthesized { derived_from: item.sources.clone() };
                self.state = self.state.insert_synthesized(e)?;
                id
            } else {
                item.sources[0].clone()
            };
            let before = self.state.clone();
            self.state = self.state.apply_transition(&Transition::recall([id.clone()]))?;
            let e = self.state.get(&id)?;
            if e.provenance == Provenance::Sensed && e.tokens > self.config.small_output {
                self.contamination += 1;
            }
            self.trace.push(TraceRecord::new(self.turn, RECALL).with_ids(
                &before,
                &item.sources,
                &self.state,
                std::slice::from_ref(&id),
            ));
            self.inserted.push(id);
        }
        Ok(())
    }

    /// Smallest prefix of evictable elements (least relevant first, then
    /// oldest position) freeing at least `short` tokens.
    fn eviction_set(&self, short: u64) -> Option<Vec<ElementId>> {
        let mut pool: Vec<(f64, usize, &ContextElement)> = self
            .state
            .visible()
            .iter()
            .enumerate()
            .filter(|(_, id)| !self.inserted.contains(id))
            .filter_map(|(pos, id)| self.state.element(id).map(|e| (pos, e)))
            .filter(|(_, e)| e.namespace.root() != "system")
            .map(|(pos, e)| (self.query.relevance(e), pos, e))
            .collect();
        pool.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut freed = 0;
        let mut out = Vec::new();
        for (_, _, e) in pool {
            if freed >= short {
                break;
            }
            freed += e.tokens;
            out.push(e.id.clone());
        }
        (freed >= short).then_some(out)
    }
}

pub trait Stage {
    fn name(&self) -> &str;
    /// Operator this stage implements, used for ablation.
    fn op(&self) -> Option<Op> {
        None
    }
    fn scope(&self) -> Scope;
    fn apply(&self, turn: &mut Turn<'_>) -> Result<(), PipelineError>;
}

/// A built-in stage running one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpStage(pub Op);

impl Stage for OpStage {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn op(&self) -> Option<Op> {
        Some(self.0)
    }

    fn scope(&self) -> Scope {
        match self.0 {
            Op::Displacement | Op::Layering => Scope::Field,
            _ => Scope::InFlight,
        }
    }

    fn apply(&self, t: &mut Turn<'_>) -> Result<(), PipelineError> {
        let cfg = t.config;
        let name = self.name();
        match self.0 {
            Op::Selection => {
                let pool = t.candidates();
                let q = t.query;
                let relevant: Vec<ElementId> = pool
                    .iter()
                    .filter(|id| t.state.element(id).is_some_and(|e| q.relevance(e) > 0.0))
                    .cloned()
                    .collect();
                let chosen =
                    select(&t.state, &relevant, SelectionMode::Recall, |e| q.relevance(e), cfg.select_k as i64)
                        .map_err(PipelineError::at(name))?;
                t.load(&chosen)?;
                t.trace.push(TraceRecord::new(t.turn, name).with_ids(&t.state, &pool, &t.state, &chosen));
            }
            Op::ForwardProjection => {
                let (ids, tokens) = (t.batch_ids(), t.batch_tokens());
                let schema = cfg.schema_at(cfg.resolution);
                for item in &mut t.batch {
                    let id = ElementId::new(format!("{}~pi", item.element.id));
                    let p = project_forward(&[&item.element], &schema, &cfg.ladder, &cfg.cost, id)
                        .map_err(PipelineError::at(name))?;
                    if !p.lossless {
                        item.element = p.element;
                        item.transformed = true;
                    }
                }
                t.log_batch(name, ids, tokens);
            }
            Op::Simplification => {
                let (ids, tokens) = (t.batch_ids(), t.batch_tokens());
                for item in &mut t.batch {
                    let id = ElementId::new(format!("{}~phi", item.element.id));
                    let s =
                        simplify(&item.element, cfg.simplify_ratio, &cfg.cost, id).map_err(PipelineError::at(name))?;
                    if s.tokens != item.element.tokens || s.atoms != item.element.atoms {
                        item.element = s;
                        item.transformed = true;
                    }
                }
                t.log_batch(name, ids, tokens);
            }
            Op::Aggregation => {
                if !cfg.aggregate_enabled {
                    return Ok(());
                }
                let (ids, tokens) = (t.batch_ids(), t.batch_tokens());
                let elements: Vec<ContextElement> = t.batch.iter().map(|f| f.element.clone()).collect();
                let classes = aggregate(
                    &elements,
                    |e| cfg.equivalence.key(e),
                    &cfg.cost,
                    |k| ElementId::new(format!("agg[{k}]")),
                );
                let old = std::mem::take(&mut t.batch);
                for class in classes {
                    let members: Vec<&InFlight> =
                        old.iter().filter(|f| class.members.contains(&f.element.id)).collect();
                    if let [single] = members.as_slice() {
                        t.batch.push((*single).clone());
                    } else {
                        t.batch.push(InFlight {
                            sources: members.iter().flat_map(|f| f.sources.iter().cloned()).collect(),
                            element: class.output,
                            transformed: true,
                        });
                    }
                }
                t.log_batch(name, ids, tokens);
            }
            Op::Displacement => {
                let before = t.state.clone();
                t.state = cfg.displacement.apply(&t.state, &cfg.salience).map_err(PipelineError::at(name))?;
                let ids_in = before.visible().to_vec();
                let ids_out = t.state.visible().to_vec();
                t.trace.push(TraceRecord::new(t.turn, name).with_ids(&before, &ids_in, &t.state, &ids_out));
            }
            Op::Layering => {
                let visible = t.state.elements_in(Zone::Visible);
                let layers = assign_layers(&visible, &cfg.layer_policy).map_err(PipelineError::at(name))?;
                let ids: Vec<ElementId> = t.state.visible().to_vec();
                let next = t.state.with_layers(layers.assignment())?;
                t.trace.push(TraceRecord::new(t.turn, name).with_ids(&t.state, &ids, &next, &ids));
                t.state = next;
            }
            Op::Reconnaissance | Op::InverseProjection => {
                return Err(PipelineError::Config(format!("`{}` cannot run inbound", self.0)));
            }
        }
        Ok(())
    }
}

/// σ replaced by the identity: every candidate goes forward.
pub(crate) fn gather_all(t: &mut Turn<'_>) -> Result<(), PipelineError> {
    let pool = t.candidates();
    t.load(&pool)
}
