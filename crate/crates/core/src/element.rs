//! Context elements: the atomic units of information that move between zones.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque, stable identifier of an element within one universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ElementId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// A symbolic fact carried by an element.
///
/// `value` is the observed value of the fact (the reasoner compares it to the
/// gold value); `priority` orders non-critical atoms when something has to be
/// dropped, lower rank meaning more important.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticAtom {
    pub key: String,
    #[serde(default)]
    pub critical: bool,
    #[serde(default)]
    pub value: i64,
    #[serde(default)]
    pub priority: i32,
}

impl SemanticAtom {
    pub fn new(key: impl Into<String>, critical: bool) -> Self {
        Self { key: key.into(), critical, value: 0, priority: 0 }
    }

    pub fn with_value(mut self, value: i64) -> Self {
        self.value = value;
        self
    }

    pub fn with_priority(mut self, priority: i32) -> Self {
        self.priority = priority;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Adjacency,
    Containment,
    Causal,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationalLink {
    pub src: ElementId,
    pub dst: ElementId,
    pub kind: LinkKind,
}

impl RelationalLink {
    pub fn new(src: impl Into<ElementId>, dst: impl Into<ElementId>, kind: LinkKind) -> Self {
        Self { src: src.into(), dst: dst.into(), kind }
    }
}

/// How an element came to exist in the agent's context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Sensed,
    Recalled,
    Synthesized { derived_from: Vec<ElementId> },
}

impl Provenance {
    pub fn derived_from(&self) -> &[ElementId] {
        match self {
            Provenance::Synthesized { derived_from } => derived_from,
            _ => &[],
        }
    }

    pub fn is_synthesized(&self) -> bool {
        matches!(self, Provenance::Synthesized { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Textual,
    Diagrammatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    PlainText,
    KeyValueRecord,
    GraphSerialization,
    HierarchicalListing,
}

/// Namespace label, `/`-separated for nested layers (`memory/project/notes`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Namespace(String);

impl Namespace {
    pub fn new(ns: impl Into<String>) -> Self {
        Self(ns.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('/').filter(|s| !s.is_empty())
    }

    /// Prefix made of the first `depth` segments.
    pub fn truncate(&self, depth: usize) -> Namespace {
        Namespace(self.segments().take(depth).collect::<Vec<_>>().join("/"))
    }

    pub fn root(&self) -> &str {
        self.segments().next().unwrap_or("")
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Namespace {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for Namespace {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextElement {
    pub id: ElementId,
    #[serde(default)]
    pub atoms: Vec<SemanticAtom>,
    #[serde(default)]
    pub links: Vec<RelationalLink>,
    pub tokens: u64,
    pub namespace: Namespace,
    #[serde(default)]
    pub priority: i32,
    #[serde(default = "default_provenance")]
    pub provenance: Provenance,
    #[serde(default)]
    pub observed_at: u64,
    #[serde(default)]
    pub resolution: usize,
    #[serde(default = "default_modality")]
    pub modality: Modality,
    #[serde(default = "default_format")]
    pub format: Format,
    /// Address an agent can see without observing the content (a path, a URL).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator: Option<String>,
    /// Token count of the sensed element this one was ultimately derived
    /// from. `None` for sensed elements, which are their own origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_tokens: Option<u64>,
}

fn default_provenance() -> Provenance {
    Provenance::Sensed
}

fn default_modality() -> Modality {
    Modality::Textual
}

fn default_format() -> Format {
    Format::PlainText
}

impl ContextElement {
    /// A sensed textual element with no atoms; fill in with the builder methods.
    pub fn new(id: impl Into<ElementId>, tokens: u64, namespace: impl Into<Namespace>) -> Self {
        Self {
            id: id.into(),
            atoms: Vec::new(),
            links: Vec::new(),
            tokens,
            namespace: namespace.into(),
            priority: 0,
            provenance: Provenance::Sensed,
            observed_at: 0,
            resolution: 0,
            modality: Modality::Textual,
            format: Format::PlainText,
            locator: None,
            origin_tokens: None,
        }
    }

    pub fn with_atom(mut self, atom: SemanticAtom) -> Self {
        self.atoms.push(atom);
        self
    }

    pub fn with_atoms(mut self, atoms: impl IntoIterator<Item = SemanticAtom>) -> Self {
        self.atoms.extend(atoms);
        self
    }

    pub fn with_link(mut self, link: RelationalLink) -> Self {
        self.links.push(link);
        self
    }

    pub fn with_priority(mut self, priority: i32) -> Self {
        self.priority = priority;
        self
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.modality = modality;
        self
    }

    pub fn with_format(mut self, format: Format) -> Self {
        self.format = format;
        self
    }

    pub fn with_observed_at(mut self, t: u64) -> Self {
        self.observed_at = t;
        self
    }

    pub fn with_locator(mut self, locator: impl Into<String>) -> Self {
        self.locator = Some(locator.into());
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Raw token count of this element's lineage root.
    pub fn origin(&self) -> u64 {
        self.origin_tokens.unwrap_or(self.tokens)
    }

    pub fn atom(&self, key: &str) -> Option<&SemanticAtom> {
        self.atoms.iter().find(|a| a.key == key)
    }

    pub fn atom_keys(&self) -> BTreeSet<&str> {
        self.atoms.iter().map(|a| a.key.as_str()).collect()
    }

    pub fn critical_atoms(&self) -> impl Iterator<Item = &SemanticAtom> {
        self.atoms.iter().filter(|a| a.critical)
    }

    pub fn critical_keys(&self) -> BTreeSet<&str> {
        self.critical_atoms().map(|a| a.key.as_str()).collect()
    }
}

/// Linear token cost of a synthesized element: fixed overhead plus a per-atom charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCostModel {
    pub per_atom: u64,
    pub overhead: u64,
}

impl Default for TokenCostModel {
    fn default() -> Self {
        Self { per_atom: 10, overhead: 5 }
    }
}

impl TokenCostModel {
    pub fn cost(&self, atoms: usize) -> u64 {
        self.overhead + self.per_atom * atoms as u64
    }

    /// Largest atom count whose cost fits in `budget`, if any.
    pub fn capacity(&self, budget: u64) -> Option<usize> {
        let spare = budget.checked_sub(self.overhead)?;
        Some(spare.checked_div(self.per_atom).map_or(usize::MAX, |n| n as usize))
    }
}

/// Orders atoms most-important first: critical before non-critical, then
/// ascending priority rank, then key.
pub(crate) fn importance_order(a: &SemanticAtom, b: &SemanticAtom) -> std::cmp::Ordering {
    b.critical.cmp(&a.critical).then(a.priority.cmp(&b.priority)).then(a.key.cmp(&b.key))
}
