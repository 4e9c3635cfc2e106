//! Zonal context governance for agents.
//!
//! Information lives in one of three zones: black fog (unobserved), gray
//! fog (stored memory) and the visible field (the bounded, position-ordered
//! surface a reasoner attends to). Seven operators move and reshape content
//! between and within zones; pipelines compose them; a seeded diagnostic
//! harness measures what each operator contributes by ablation.

pub mod catalog;
pub mod config;
pub mod element;
pub mod formal;
pub mod harness;
pub mod invariants;
pub mod mediation;
pub mod operators;
pub mod pipeline;
pub mod rng;
pub mod rubric;
pub mod salience;
pub mod state;

pub use element::{
    ContextElement, ElementId, Format, LinkKind, Modality, Namespace, Provenance, RelationalLink, SemanticAtom,
    TokenCostModel,
};
pub use operators::{Op, OperatorError, OperatorKind, SelectionMode};
pub use salience::{ProfileKind, SalienceProfile};
pub use state::{ContextState, StateError, Transition, TransitionKind, Zone};

/// Engine version stamped into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
