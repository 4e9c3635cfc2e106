//! λ: partitioning zone contents into typed namespaces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId, Namespace};

use super::OperatorError;

/// How elements map to layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LayerPolicy {
    /// Everything in one layer.
    Single { name: String },
    /// Layer = the element's namespace cut to `depth` segments. When `roots`
    /// is set, only those top-level names are admissible and their order is
    /// the precedence order (first wins a conflict).
    Typed { roots: Option<Vec<String>>, depth: usize },
}

impl Default for LayerPolicy {
    fn default() -> Self {
        Self::standard()
    }
}

impl LayerPolicy {
    /// `system > task > memory > observation`, one level deep.
    pub fn standard() -> Self {
        LayerPolicy::Typed {
            roots: Some(["system", "task", "memory", "observation"].into_iter().map(String::from).collect()),
            depth: 1,
        }
    }

    pub fn single(name: impl Into<String>) -> Self {
        LayerPolicy::Single { name: name.into() }
    }

    /// Any namespace, cut to `depth` segments.
    pub fn nested(depth: usize) -> Self {
        LayerPolicy::Typed { roots: None, depth }
    }

    /// The same policy one level deeper.
    pub fn deeper(&self) -> Self {
        match self {
            LayerPolicy::Single { name } => LayerPolicy::Single { name: name.clone() },
            LayerPolicy::Typed { roots, depth } => LayerPolicy::Typed { roots: roots.clone(), depth: depth + 1 },
        }
    }

    pub fn layer_of(&self, e: &ContextElement) -> Option<Namespace> {
        match self {
            LayerPolicy::Single { name } => Some(Namespace::new(name.clone())),
            LayerPolicy::Typed { roots, depth } => {
                let root = e.namespace.root();
                if root.is_empty() || *depth == 0 {
                    return None;
                }
                if let Some(roots) = roots {
                    if !roots.iter().any(|r| r == root) {
                        return None;
                    }
                }
                Some(e.namespace.truncate(*depth))
            }
        }
    }

    /// Precedence rank of a layer (0 = highest). Layers outside the declared
    /// roots rank last.
    pub fn rank(&self, layer: &Namespace) -> usize {
        match self {
            LayerPolicy::Typed { roots: Some(roots), .. } => {
                roots.iter().position(|r| r == layer.root()).unwrap_or(roots.len())
            }
            _ => 0,
        }
    }
}

/// A partition of elements into layers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layers {
    pub layers: BTreeMap<Namespace, Vec<ElementId>>,
}

impl Layers {
    pub fn assignment(&self) -> BTreeMap<ElementId, Namespace> {
        self.layers.iter().flat_map(|(ns, ids)| ids.iter().map(move |id| (id.clone(), ns.clone()))).collect()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

/// Assigns every element exactly one layer. An element the policy cannot
/// place is an error.
pub fn assign_layers(elements: &[&ContextElement], policy: &LayerPolicy) -> Result<Layers, OperatorError> {
    let mut layers: BTreeMap<Namespace, Vec<ElementId>> = BTreeMap::new();
    for e in elements {
        let ns = policy.layer_of(e).ok_or_else(|| OperatorError::Layering(e.id.clone()))?;
        layers.entry(ns).or_default().push(e.id.clone());
    }
    Ok(Layers { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn el(id: &str, ns: &str) -> ContextElement {
        ContextElement::new(id, 1, ns)
    }

    #[test]
    fn single_policy_is_one_layer() {
        let xs = [el("a", "task"), el("b", "memory")];
        let refs: Vec<&ContextElement> = xs.iter().collect();
        let l = assign_layers(&refs, &LayerPolicy::single("all")).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.layers[&Namespace::new("all")].len(), 2);
    }

    #[test]
    fn standard_policy_covers_disjointly() {
        let xs = [
            el("s", "system"),
            el("t", "task/goal"),
            el("m", "memory/notes"),
            el("o1", "observation"),
            el("o2", "observation/tool"),
        ];
        let refs: Vec<&ContextElement> = xs.iter().collect();
        let l = assign_layers(&refs, &LayerPolicy::standard()).unwrap();
        let assigned = l.assignment();
        assert_eq!(assigned.len(), xs.len());
        let all: BTreeSet<&ElementId> = l.layers.values().flatten().collect();
        assert_eq!(all.len(), xs.len());
        assert_eq!(l.len(), 4);
    }

    #[test]
    fn policy_gap_is_an_error() {
        let xs = [el("x", "scratch")];
        let refs: Vec<&ContextElement> = xs.iter().collect();
        assert_eq!(assign_layers(&refs, &LayerPolicy::standard()), Err(OperatorError::Layering("x".into())));
    }

    #[test]
    fn precedence_rank() {
        let p = LayerPolicy::standard();
        assert!(p.rank(&Namespace::new("system")) < p.rank(&Namespace::new("observation")));
        assert_eq!(p.rank(&Namespace::new("elsewhere")), 4);
    }
}
