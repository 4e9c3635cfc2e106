//! Which operators govern which zone transformations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::state::Zone;

use super::{Op, OperatorKind, SelectionMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageRegistry {
    pub entries: BTreeMap<(Zone, Zone), BTreeSet<OperatorKind>>,
}

impl Default for CoverageRegistry {
    fn default() -> Self {
        use OperatorKind::*;
        use Zone::*;
        let mut r = CoverageRegistry { entries: BTreeMap::new() };
        r.set(Black, Gray, [Reconnaissance]);
        r.set(Gray, Visible, [Selection(SelectionMode::Recall), ForwardProjection]);
        r.set(Visible, Visible, [Simplification, Aggregation, Displacement, Layering]);
        r.set(Visible, Gray, [Selection(SelectionMode::Evict), InverseProjection]);
        r.set(Gray, Gray, [Simplification, Aggregation, Layering]);
        r.set(Gray, Black, [Selection(SelectionMode::Expire)]);
        r
    }
}

impl CoverageRegistry {
    pub fn set(&mut self, from: Zone, to: Zone, ops: impl IntoIterator<Item = OperatorKind>) {
        self.entries.insert((from, to), ops.into_iter().collect());
    }

    pub fn insert(&mut self, from: Zone, to: Zone, op: OperatorKind) {
        self.entries.entry((from, to)).or_default().insert(op);
    }

    pub fn remove(&mut self, from: Zone, to: Zone, op: OperatorKind) {
        if let Some(s) = self.entries.get_mut(&(from, to)) {
            s.remove(&op);
        }
    }

    /// Registry with every appearance of `op` (any selection mode) removed.
    pub fn without(&self, op: Op) -> CoverageRegistry {
        let mut r = self.clone();
        for ops in r.entries.values_mut() {
            ops.retain(|k| k.op() != op);
        }
        r
    }

    pub fn governing(&self, from: Zone, to: Zone) -> BTreeSet<OperatorKind> {
        self.entries.get(&(from, to)).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub checks: Vec<CoverageCheck>,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Checks the registry against the required coverage: each boundary is
/// governed by exactly its designated operators, and nothing else appears
/// anywhere.
pub fn verify_coverage(registry: &CoverageRegistry) -> CoverageReport {
    let reference = CoverageRegistry::default();
    let named = [
        ("reconnaissance_sole", Zone::Black, Zone::Gray),
        ("forwardProjection_sole", Zone::Gray, Zone::Visible),
        ("inverseProjection_sole", Zone::Visible, Zone::Gray),
        ("selection_sole", Zone::Gray, Zone::Black),
        ("visible_interior", Zone::Visible, Zone::Visible),
        ("gray_interior", Zone::Gray, Zone::Gray),
    ];
    let mut checks: Vec<CoverageCheck> = named
        .iter()
        .map(|(name, from, to)| {
            let want = reference.governing(*from, *to);
            let got = registry.governing(*from, *to);
            CoverageCheck {
                name: (*name).to_owned(),
                passed: got == want,
                detail: format!("{}→{}: {}", from.symbol(), to.symbol(), describe(&got)),
            }
        })
        .collect();

    let stray: Vec<String> = registry
        .entries
        .iter()
        .filter(|(k, ops)| !ops.is_empty() && !reference.entries.contains_key(k))
        .map(|((f, t), ops)| format!("{}→{}: {}", f.symbol(), t.symbol(), describe(ops)))
        .collect();
    checks.push(CoverageCheck {
        name: "no_ungoverned_boundaries".into(),
        passed: stray.is_empty(),
        detail: if stray.is_empty() { "B→V, V→B and B→B carry no operator".into() } else { stray.join("; ") },
    });
    CoverageReport { checks }
}

fn describe(ops: &BTreeSet<OperatorKind>) -> String {
    if ops.is_empty() {
        return "{}".into();
    }
    let parts: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_passes() {
        let r = verify_coverage(&CoverageRegistry::default());
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn displacement_on_recall_fails() {
        let mut reg = CoverageRegistry::default();
        reg.insert(Zone::Gray, Zone::Visible, OperatorKind::Displacement);
        assert_eq!(verify_coverage(&reg).failures(), vec!["forwardProjection_sole"]);
    }

    #[test]
    fn missing_expire_selection_names_selection_sole() {
        let mut reg = CoverageRegistry::default();
        reg.remove(Zone::Gray, Zone::Black, OperatorKind::Selection(SelectionMode::Expire));
        assert_eq!(verify_coverage(&reg).failures(), vec!["selection_sole"]);
    }

    #[test]
    fn every_single_operator_removal_fails() {
        for op in Op::ALL {
            let r = verify_coverage(&CoverageRegistry::default().without(op));
            assert!(!r.passed(), "removing {op} went unnoticed");
        }
    }

    #[test]
    fn direct_black_to_visible_is_stray() {
        let mut reg = CoverageRegistry::default();
        reg.insert(Zone::Black, Zone::Visible, OperatorKind::ForwardProjection);
        assert_eq!(verify_coverage(&reg).failures(), vec!["no_ungoverned_boundaries"]);
    }
}
