//! α: fusing elements that describe the same thing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId, LinkKind, Provenance, RelationalLink, SemanticAtom, TokenCostModel};

/// Which field decides that two elements are equivalent. Elements without a
/// value for the field are their own class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceKey {
    #[default]
    Locator,
    Namespace,
}

impl EquivalenceKey {
    pub fn key(self, e: &ContextElement) -> String {
        let k = match self {
            EquivalenceKey::Locator => e.locator.clone(),
            EquivalenceKey::Namespace => Some(e.namespace.as_str().to_owned()),
        };
        match k {
            Some(k) => format!("k:{k}"),
            None => format!("id:{}", e.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateClass {
    pub key: String,
    pub members: Vec<ElementId>,
    pub output: ContextElement,
}

impl AggregateClass {
    pub fn is_fused(&self) -> bool {
        self.members.len() > 1
    }
}

/// One output per equivalence class, in key order.
///
/// Singleton classes pass through unchanged. A larger class becomes one
/// synthesized element named by `name_for(key)`: its atoms are the union of
/// the members' atoms (critical if critical anywhere; value from the most
/// recently observed carrier), its links are rewritten onto the new id, and
/// its token count is `min(Σ member tokens, cost(union))`.
pub fn aggregate<K, N>(
    elements: &[ContextElement],
    key: K,
    model: &TokenCostModel,
    mut name_for: N,
) -> Vec<AggregateClass>
where
    K: Fn(&ContextElement) -> String,
    N: FnMut(&str) -> ElementId,
{
    let mut classes: BTreeMap<String, Vec<&ContextElement>> = BTreeMap::new();
    for e in elements {
        classes.entry(key(e)).or_default().push(e);
    }
    classes
        .into_iter()
        .map(|(k, mut members)| {
            members.sort_by(|a, b| a.id.cmp(&b.id));
            let ids: Vec<ElementId> = members.iter().map(|e| e.id.clone()).collect();
            let output = if members.len() == 1 { members[0].clone() } else { fuse(&members, name_for(&k), model) };
            AggregateClass { key: k, members: ids, output }
        })
        .collect()
}

fn fuse(members: &[&ContextElement], id: ElementId, model: &TokenCostModel) -> ContextElement {
    // Newest observation wins a value disagreement; ties go to the later id.
    let mut by_recency: Vec<&ContextElement> = members.to_vec();
    by_recency.sort_by(|a, b| a.observed_at.cmp(&b.observed_at).then(a.id.cmp(&b.id)));

    let mut atoms: BTreeMap<String, SemanticAtom> = BTreeMap::new();
    for e in &by_recency {
        for a in &e.atoms {
            atoms
                .entry(a.key.clone())
                .and_modify(|cur| {
                    cur.critical |= a.critical;
                    cur.value = a.value;
                    cur.priority = cur.priority.min(a.priority);
                })
                .or_insert_with(|| a.clone());
        }
    }

    let member_ids: Vec<&ElementId> = members.iter().map(|e| &e.id).collect();
    let rewrite = |x: &ElementId| {
        if member_ids.contains(&x) {
            id.clone()
        } else {
            x.clone()
        }
    };
    let mut links: Vec<RelationalLink> = members
        .iter()
        .flat_map(|e| e.links.iter())
        .map(|l| RelationalLink::new(rewrite(&l.src), rewrite(&l.dst), l.kind))
        .filter(|l| !(l.src == l.dst && (l.kind == LinkKind::Containment || l.src == id)))
        .collect();
    links.sort();
    links.dedup();

    let first = members[0];
    let newest = by_recency[by_recency.len() - 1];
    let tokens: u64 = members.iter().map(|e| e.tokens).sum();
    ContextElement {
        id,
        tokens: tokens.min(model.cost(atoms.len())),
        atoms: atoms.into_values().collect(),
        links,
        namespace: first.namespace.clone(),
        priority: members.iter().map(|e| e.priority).min().unwrap_or(0),
        provenance: Provenance::Synthesized { derived_from: members.iter().map(|e| e.id.clone()).collect() },
        observed_at: newest.observed_at,
        resolution: first.resolution,
        modality: first.modality,
        format: first.format,
        locator: first.locator.clone(),
        origin_tokens: Some(members.iter().map(|e| e.origin()).sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn obs(id: &str, loc: &str, keys: &[&str]) -> ContextElement {
        let atoms = keys.iter().map(|k| SemanticAtom::new(*k, false));
        let m = TokenCostModel::default();
        ContextElement::new(id, m.cost(keys.len()), "observation").with_locator(loc).with_atoms(atoms)
    }

    fn named(k: &str) -> ElementId {
        ElementId::new(format!("agg:{k}"))
    }

    #[test]
    fn distinct_keys_pass_through() {
        let input = vec![obs("a", "x", &["1"]), obs("b", "y", &["2"])];
        let out = aggregate(&input, |e| EquivalenceKey::Locator.key(e), &TokenCostModel::default(), named);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].output, input[0]);
        assert!(!out[1].is_fused());
    }

    #[test]
    fn three_overlapping_fuse_to_union() {
        let input = vec![obs("a", "x", &["1", "2", "3"]), obs("b", "x", &["2", "3", "4"]), obs("c", "x", &["3", "5"])];
        let m = TokenCostModel::default();
        let out = aggregate(&input, |e| EquivalenceKey::Locator.key(e), &m, named);
        assert_eq!(out.len(), 1);
        let fused = &out[0].output;
        let oracle: BTreeSet<&str> = input.iter().flat_map(|e| e.atom_keys()).collect();
        assert_eq!(fused.atom_keys(), oracle);
        let naive: u64 = input.iter().map(|e| e.tokens).sum();
        assert!(fused.tokens < naive);
        assert_eq!(fused.tokens, m.cost(5));
        assert_eq!(fused.provenance.derived_from().len(), 3);
    }

    #[test]
    fn critical_flags_are_ored_and_links_rewritten() {
        let mut a = obs("a", "x", &["k"]);
        a.atoms[0].critical = true;
        a.links.push(RelationalLink::new("a", "z", LinkKind::Causal));
        let mut b = obs("b", "x", &["k"]);
        b.links.push(RelationalLink::new("b", "a", LinkKind::Containment));
        let out = aggregate(&[a, b], |e| EquivalenceKey::Locator.key(e), &TokenCostModel::default(), named);
        let fused = &out[0].output;
        assert!(fused.atoms[0].critical);
        assert_eq!(fused.links, vec![RelationalLink::new("agg:k:x", "z", LinkKind::Causal)]);
    }
}
