//! Per-stage run trace, one record per stage application.

use serde::{Deserialize, Serialize};

use crate::element::ElementId;
use crate::state::ContextState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub turn: u64,
    pub stage: String,
    pub ids_in: Vec<ElementId>,
    pub ids_out: Vec<ElementId>,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

/// Stage name of the record that appends to the visible field. Summing its
/// `tokens_out` over a trace gives the tokens a run pushed into view.
pub const RECALL: &str = "recall";

impl TraceRecord {
    pub fn new(turn: u64, stage: impl Into<String>) -> Self {
        Self { turn, stage: stage.into(), ids_in: Vec::new(), ids_out: Vec::new(), tokens_in: 0, tokens_out: 0 }
    }

    /// Fills ids and token sums from the elements as they exist in `state`.
    pub fn with_ids(
        mut self,
        before: &ContextState,
        ids_in: &[ElementId],
        after: &ContextState,
        ids_out: &[ElementId],
    ) -> Self {
        self.tokens_in = sum_tokens(before, ids_in);
        self.tokens_out = sum_tokens(after, ids_out);
        self.ids_in = ids_in.to_vec();
        self.ids_out = ids_out.to_vec();
        self
    }

    pub fn is_visible_insertion(&self) -> bool {
        self.stage == RECALL
    }
}

pub fn sum_tokens(state: &ContextState, ids: &[ElementId]) -> u64 {
    ids.iter().filter_map(|id| state.element(id)).map(|e| e.tokens).sum()
}

/// Tokens appended to the visible field across a trace.
pub fn tokens_consumed(trace: &[TraceRecord]) -> u64 {
    trace.iter().filter(|r| r.is_visible_insertion()).map(|r| r.tokens_out).sum()
}

/// Line-delimited JSON rendering.
pub fn to_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}
