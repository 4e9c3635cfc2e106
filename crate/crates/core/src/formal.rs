//! Executable replicas of the framework's five formal results, checked by
//! exhaustive enumeration over small models or on a bundled fixture.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId};
use crate::harness::{collapse_fixture, HarnessConfig};
use crate::operators::coverage::{verify_coverage, CoverageRegistry};
use crate::operators::Op;
use crate::pipeline::{apply_scale, compaction_cycle};
use crate::state::{ContextState, Transition, TransitionKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl TheoremCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<TheoremCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn n_passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }
}

/// Runs all five replicas against `registry`.
pub fn verify_all(registry: &CoverageRegistry) -> VerifyReport {
    VerifyReport {
        checks: vec![
            zone_uniqueness(4),
            boundary_uniqueness(registry),
            composition_noncommutative(),
            collapse_pair(),
            invariant_impossibility(),
        ],
    }
}

fn zones_holding(state: &ContextState, id: &ElementId) -> usize {
    usize::from(state.black().contains(id))
        + usize::from(state.gray().contains(id))
        + usize::from(state.visible().contains(id))
}

/// Every element sits in exactly one zone after every transition sequence
/// of length ≤ `depth` over a three-element universe, where each step is
/// any transition kind applied to any nonempty subset. Illegal steps must
/// be rejected.
pub fn zone_uniqueness(depth: usize) -> TheoremCheck {
    let catalog: Vec<ContextElement> = (0..3).map(|i| ContextElement::new(format!("e{i}"), 10, "task")).collect();
    let ids: Vec<ElementId> = catalog.iter().map(|e| e.id.clone()).collect();
    let state = ContextState::new(catalog, 1_000).expect("three-element state");
    let mut steps = Vec::new();
    for kind in TransitionKind::ALL {
        for mask in 1u8..8 {
            let subset: Vec<ElementId> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| ids[b].clone()).collect();
            steps.push(Transition::new(kind, subset));
        }
    }

    struct Walk<'a> {
        steps: &'a [Transition],
        ids: &'a [ElementId],
        applied: u64,
        rejected: u64,
        failure: Option<String>,
    }

    impl Walk<'_> {
        fn visit(&mut self, state: &ContextState, depth: usize) {
            if self.failure.is_some() {
                return;
            }
            for id in self.ids {
                let n = zones_holding(state, id);
                if n != 1 {
                    self.failure = Some(format!("`{id}` held by {n} zones"));
                    return;
                }
            }
            if let Err(v) = state.audit() {
                self.failure = Some(v.to_string());
                return;
            }
            if depth == 0 {
                return;
            }
            for t in self.steps {
                let legal = t.elements.iter().all(|id| state.zone_of(id) == Ok(t.kind.source()));
                match state.apply_transition(t) {
                    Ok(next) => {
                        if !legal {
                            self.failure = Some(format!("illegal {} accepted", t.kind.name()));
                            return;
                        }
                        self.applied += 1;
                        self.visit(&next, depth - 1);
                    }
                    Err(_) if !legal => self.rejected += 1,
                    Err(e) => {
                        self.failure = Some(format!("legal {} rejected: {e}", t.kind.name()));
                        return;
                    }
                }
            }
        }
    }

    let mut walk = Walk { steps: &steps, ids: &ids, applied: 0, rejected: 0, failure: None };
    walk.visit(&state, depth);
    match walk.failure {
        Some(f) => TheoremCheck::new("mem_unique_zone", false, f),
        None => TheoremCheck::new(
            "mem_unique_zone",
            true,
            format!(
                "3 elements, sequences up to length {depth}: {} legal steps, {} illegal steps rejected",
                walk.applied, walk.rejected
            ),
        ),
    }
}

/// The registry governs each zone boundary with exactly its designated
/// operators, and the checker notices every single-operator removal from
/// the default registry.
pub fn boundary_uniqueness(registry: &CoverageRegistry) -> TheoremCheck {
    let report = verify_coverage(registry);
    let mutants: Vec<(Op, bool)> = Op::ALL
        .into_iter()
        .map(|op| (op, !verify_coverage(&CoverageRegistry::default().without(op)).passed()))
        .collect();
    let caught = mutants.iter().filter(|(_, c)| *c).count();
    let missed: Vec<&str> = mutants.iter().filter(|(_, c)| !c).map(|(op, _)| op.name()).collect();
    let mut detail = if report.passed() {
        "registry matches required coverage".to_string()
    } else {
        format!("failed: {}", report.failures().join(", "))
    };
    detail += &format!("; {caught}/{} removal mutants detected", mutants.len());
    if !missed.is_empty() {
        detail += &format!(" (missed: {})", missed.join(", "));
    }
    TheoremCheck::new("boundary_operator_uniqueness", report.passed() && missed.is_empty(), detail)
}

/// Subsets of a three-element universe as bitmasks.
type Set3 = u8;

fn fmt_set(s: Set3) -> String {
    let items: Vec<String> = (0..3).filter(|b| s & (1 << b) != 0).map(|b| b.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// φ₀ keeps only element 0; δ₁ brings element 1 in. Applied to {0,2}
/// the two orders disagree.
pub fn composition_noncommutative() -> TheoremCheck {
    let phi0 = |s: Set3| s & 0b001;
    let delta1 = |s: Set3| s | 0b010;
    let start: Set3 = 0b101;
    let dp = delta1(phi0(start));
    let pd = phi0(delta1(start));
    let passed = dp == 0b011 && pd == 0b001 && dp != pd;
    TheoremCheck::new(
        "composition_noncommutative",
        passed,
        format!("δ₁(φ₀({})) = {}, φ₀(δ₁({})) = {}", fmt_set(start), fmt_set(dp), fmt_set(start), fmt_set(pd)),
    )
}

/// One compaction cycle on the bundled collapse fixture, both ways:
/// destructively every non-summary visible element lands in black fog,
/// archivally every visible element stays in gray fog or the field.
pub fn collapse_pair() -> TheoremCheck {
    const NAME: &str = "collapse_pair";
    let run = |archival: bool| -> Result<(ContextState, ContextState, BTreeSet<ElementId>), String> {
        let cfg = HarnessConfig::default();
        let mut pipeline = apply_scale(&cfg.pipeline, &cfg.scale, 1).map_err(|e| e.to_string())?;
        pipeline.archival = archival;
        let before = collapse_fixture(50).map_err(|e| e.to_string())?;
        let out = compaction_cycle(&before, &pipeline, 0).map_err(|e| e.to_string())?;
        let summary: BTreeSet<ElementId> = out.inserted.iter().cloned().collect();
        Ok((before, out.state, summary))
    };
    let (destructive, archival) = match (run(false), run(true)) {
        (Ok(d), Ok(a)) => (d, a),
        (Err(e), _) | (_, Err(e)) => return TheoremCheck::new(NAME, false, e),
    };

    let (before, after, summary) = destructive;
    let escaped: Vec<&ElementId> =
        before.visible().iter().filter(|x| !summary.contains(*x) && !after.black().contains(*x)).collect();
    let lost: Vec<&ElementId> = before.visible().iter().filter(|x| after.black().contains(*x)).collect();

    let (before, after, _) = archival;
    let dropped: Vec<&ElementId> =
        before.visible().iter().filter(|x| !after.gray().contains(*x) && !after.visible().contains(*x)).collect();

    let passed = escaped.is_empty() && dropped.is_empty() && !lost.is_empty();
    let detail = if passed {
        format!("destructive lost {} elements to black fog; archival kept all {}", lost.len(), before.visible().len())
    } else {
        format!(
            "destructive survivors outside B: {escaped:?}; archival dropped: {dropped:?}; destructive lost: {}",
            lost.len()
        )
    };
    TheoremCheck::new(NAME, passed, detail)
}

/// Over three elements with 0 critical, 0 requiring 1, and 2 high-priority,
/// no map on subsets strictly reduces {0,1,2} while preserving all three
/// invariants there. All 8⁸ maps are enumerated. Each pair of invariants
/// alone is satisfiable, so the search is not vacuous.
pub fn invariant_impossibility() -> TheoremCheck {
    const FULL: Set3 = 0b111;
    let semantic = |fs: Set3| fs & 0b001 != 0;
    let structural = |fs: Set3| fs & 0b001 == 0 || fs & 0b010 != 0;
    let salience = |fs: Set3| fs & 0b100 != 0;
    let strict = |fs: Set3| fs & !FULL == 0 && fs != FULL;

    let mut all_three = 0u64;
    let mut pairs = [0u64; 3];
    for code in 0u32..(1 << 24) {
        let f = |s: Set3| ((code >> (3 * s as u32)) & 0b111) as Set3;
        let fs = f(FULL);
        if !strict(fs) {
            continue;
        }
        let (a, b, c) = (semantic(fs), structural(fs), salience(fs));
        all_three += u64::from(a && b && c);
        pairs[0] += u64::from(a && b);
        pairs[1] += u64::from(a && c);
        pairs[2] += u64::from(b && c);
    }
    let passed = all_three == 0 && pairs.iter().all(|p| *p > 0);
    TheoremCheck::new(
        "invariant_impossibility",
        passed,
        format!(
            "16777216 maps: {all_three} strict reductions preserve all three; pairwise witnesses {}/{}/{}",
            pairs[0], pairs[1], pairs[2]
        ),
    )
}
