//! The pipelines themselves.

use crate::element::{ContextElement, ElementId};
use crate::operators::{aggregate, project_forward, project_inverse, simplify, Op};
use crate::state::{ContextState, Transition, Zone};

use super::stage::{gather_all, OpStage, Scope, Stage, Turn};
use super::trace::{TraceRecord, RECALL};
use super::{PipelineConfig, PipelineError, Query};

/// New state plus what happened on the way there.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub state: ContextState,
    pub trace: Vec<TraceRecord>,
    /// Ids appended to the visible field.
    pub inserted: Vec<ElementId>,
    pub contamination: usize,
}

impl Outcome {
    fn unchanged(state: &ContextState) -> Self {
        Self { state: state.clone(), trace: Vec::new(), inserted: Vec::new(), contamination: 0 }
    }
}

/// Runs `stages` in order as one inbound turn. Ablated stages are skipped,
/// except that an ablated σ still forwards every candidate (selection by the
/// identity). The batch is admitted before the first field stage, or at the
/// end if there is none.
pub fn run_stages(
    state: &ContextState,
    stages: &[&dyn Stage],
    config: &PipelineConfig,
    query: &Query,
    turn: u64,
) -> Result<Outcome, PipelineError> {
    let mut t = Turn::new(state.clone(), config, query, turn);
    for stage in stages {
        if stage.scope() == Scope::Field {
            t.admit()?;
        }
        match stage.op() {
            Some(Op::Selection) if !config.enabled(Op::Selection) => gather_all(&mut t)?,
            Some(op) if !config.enabled(op) => {}
            _ => stage.apply(&mut t)?,
        }
    }
    t.admit()?;
    Ok(Outcome { state: t.state, trace: t.trace, inserted: t.inserted, contamination: t.contamination })
}

/// σ → π⁺ → φ → δ → λ (or whatever `config.inbound` lists), moving relevant
/// gray-fog content into view. When nothing is selected the state only
/// advances its clock.
pub fn run_inbound(
    state: &ContextState,
    config: &PipelineConfig,
    query: &Query,
    turn: u64,
) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let built: Vec<OpStage> = config.inbound.iter().map(|op| OpStage(*op)).collect();
    let stages: Vec<&dyn Stage> = built.iter().map(|s| s as &dyn Stage).collect();
    let mut out = run_stages(state, &stages, config, query, turn)?;
    if out.inserted.is_empty() && out.state.visible() == state.visible() && out.state.layers() == state.layers() {
        out.state = state.tick();
    }
    Ok(out)
}

/// σ_evict → π⁻ once the visible field passes the watermark. Evicts the least
/// relevant non-system elements until usage drops to the outbound target.
pub fn run_outbound(
    state: &ContextState,
    config: &PipelineConfig,
    query: &Query,
    turn: u64,
) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let budget = state.visible_budget() as f64;
    if state.visible().is_empty() || (state.visible_tokens() as f64) <= config.watermark * budget {
        return Ok(Outcome::unchanged(state));
    }
    let mut out = Outcome::unchanged(state);
    let mut selected: Vec<ElementId> = Vec::new();
    for op in &config.outbound {
        match op {
            Op::Selection => {
                let pool: Vec<&ContextElement> =
                    state.elements_in(Zone::Visible).into_iter().filter(|e| e.namespace.root() != "system").collect();
                selected = if config.enabled(Op::Selection) {
                    evict_order(state, pool, query, config.outbound_target * budget)
                } else {
                    pool.iter().map(|e| e.id.clone()).collect()
                };
                let ids_in = state.visible().to_vec();
                out.trace.push(TraceRecord::new(turn, "sigma").with_ids(state, &ids_in, state, &selected));
            }
            Op::InverseProjection => {
                if selected.is_empty() {
                    continue;
                }
                let before = out.state.clone();
                if config.enabled(Op::InverseProjection) {
                    let schema = config.schema_at(config.ladder.coarser(config.resolution));
                    let c = project_inverse(
                        &out.state,
                        &selected,
                        &schema,
                        &config.ladder,
                        &config.cost,
                        config.archival,
                        config.compaction_ratio,
                    )
                    .map_err(PipelineError::at("pi-"))?;
                    out.state = c.state;
                    let ids_out: Vec<ElementId> = c.summary.into_iter().collect();
                    out.trace.push(TraceRecord::new(turn, "pi-").with_ids(&before, &selected, &out.state, &ids_out));
                } else {
                    out.state = out.state.apply_transition(&Transition::evict(selected.iter().cloned()))?;
                    out.trace.push(TraceRecord::new(turn, "evict").with_ids(&before, &selected, &out.state, &[]));
                }
            }
            other => {
                return Err(PipelineError::Config(format!("`{other}` cannot run outbound")));
            }
        }
    }
    if out.state.visible_tokens() > state.visible_budget() {
        return Err(PipelineError::Config("outbound left the visible field over budget".into()));
    }
    Ok(out)
}

fn evict_order(state: &ContextState, mut pool: Vec<&ContextElement>, query: &Query, target: f64) -> Vec<ElementId> {
    pool.sort_by(|a, b| {
        query.relevance(a).total_cmp(&query.relevance(b)).then(state.position_of(&a.id).cmp(&state.position_of(&b.id)))
    });
    let mut tokens = state.visible_tokens() as f64;
    let mut out = Vec::new();
    for e in pool {
        if tokens <= target {
            break;
        }
        tokens -= e.tokens as f64;
        out.push(e.id.clone());
    }
    out
}

/// Gray-fog housekeeping: fuse equivalent entries (α), shrink oversized ones
/// (φ), and check that every entry has a layer (λ). Black fog and the
/// visible field are never touched.
pub fn run_maintenance(state: &ContextState, config: &PipelineConfig, turn: u64) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let mut out = Outcome::unchanged(state);
    for op in &config.maintenance {
        if !config.enabled(*op) {
            continue;
        }
        match op {
            Op::Aggregation if config.aggregate_enabled => {
                let gray: Vec<ContextElement> = out.state.elements_in(Zone::Gray).into_iter().cloned().collect();
                let classes = aggregate(
                    &gray,
                    |e| config.equivalence.key(e),
                    &config.cost,
                    |k| ElementId::new(format!("agg[{k}]")),
                );
                for class in classes.into_iter().filter(|c| c.is_fused()) {
                    let before = out.state.clone();
                    let mut fused = class.output;
                    fused.id = out.state.fresh_id(fused.id.as_str());
                    let id = fused.id.clone();
                    out.state = out.state.consolidate_gray(&class.members, fused)?;
                    out.trace.push(TraceRecord::new(turn, "alpha").with_ids(
                        &before,
                        &class.members,
                        &out.state,
                        &[id],
                    ));
                }
            }
            Op::Aggregation => {}
            Op::Simplification => {
                let oversized: Vec<ContextElement> = out
                    .state
                    .elements_in(Zone::Gray)
                    .into_iter()
                    .filter(|e| e.tokens > config.maintenance_cap)
                    .cloned()
                    .collect();
                for e in oversized {
                    let before = out.state.clone();
                    let id = out.state.fresh_id(&format!("{}~phi", e.id));
                    let s = simplify(&e, config.simplify_ratio, &config.cost, id.clone())
                        .map_err(PipelineError::at("phi"))?;
                    out.state = out.state.consolidate_gray(std::slice::from_ref(&e.id), s)?;
                    out.trace.push(TraceRecord::new(turn, "phi").with_ids(
                        &before,
                        std::slice::from_ref(&e.id),
                        &out.state,
                        &[id],
                    ));
                }
            }
            Op::Layering => {
                let gray = out.state.elements_in(Zone::Gray);
                let ids: Vec<ElementId> = gray.iter().map(|e| e.id.clone()).collect();
                let placed: Vec<ElementId> =
                    gray.iter().filter(|e| config.layer_policy.layer_of(e).is_some()).map(|e| e.id.clone()).collect();
                out.trace.push(TraceRecord::new(turn, "lambda").with_ids(&out.state, &ids, &out.state, &placed));
            }
            other => {
                return Err(PipelineError::Config(format!("`{other}` cannot run in maintenance")));
            }
        }
    }
    Ok(out)
}

/// π⁻ over the whole visible field, then σ∘π⁺ bringing the summary back.
/// The summary is built one ladder level coarser than the working
/// resolution. Without archival the originals end in black fog.
pub fn compaction_cycle(state: &ContextState, config: &PipelineConfig, turn: u64) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let mut out = Outcome::unchanged(state);
    let all = state.visible().to_vec();
    if all.is_empty() {
        out.state = state.tick();
        return Ok(out);
    }
    let summary_schema = config.schema_at(config.ladder.coarser(config.resolution));
    let c = project_inverse(
        state,
        &all,
        &summary_schema,
        &config.ladder,
        &config.cost,
        config.archival,
        config.compaction_ratio,
    )
    .map_err(PipelineError::at("pi-"))?;
    let summary = c.summary.expect("non-empty compaction yields a summary");
    out.trace.push(TraceRecord::new(turn, "pi-").with_ids(state, &all, &c.state, std::slice::from_ref(&summary)));
    out.state = c.state;

    let s = out.state.get(&summary)?.clone();
    let schema = config.schema_at(config.resolution);
    let projected = project_forward(&[&s], &schema, &config.ladder, &config.cost, out.state.fresh_id("recap"))
        .map_err(PipelineError::at("pi+"))?;
    let shown = if projected.lossless {
        summary.clone()
    } else {
        let id = projected.element.id.clone();
        out.state = out.state.insert_synthesized(projected.element)?;
        id
    };
    let before = out.state.clone();
    out.state = out.state.apply_transition(&Transition::recall([shown.clone()]))?;
    out.trace.push(TraceRecord::new(turn, RECALL).with_ids(
        &before,
        &[summary],
        &out.state,
        std::slice::from_ref(&shown),
    ));
    out.inserted.push(shown);
    Ok(out)
}

/// Distinct atom keys recoverable from gray fog and the visible field.
pub fn recoverable_atoms(state: &ContextState) -> usize {
    state.atom_keys_in(&[Zone::Gray, Zone::Visible]).len()
}
