//! Scenario generators, one per task category.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId, Format, LinkKind, RelationalLink, SemanticAtom};
use crate::pipeline::Query;
use crate::rng;

use super::{Category, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    #[default]
    Uncertainty,
    Random,
}

/// Category knobs. Each generator reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knobs {
    /// Visible context length in tokens (displacement).
    pub n: u64,
    /// Token multiplier on tool outputs (simplification).
    pub verbosity: u64,
    /// Whether namespaces disagree (layering).
    pub conflict: bool,
    /// Number of overlapping observations (aggregation).
    pub k: usize,
    /// Shared atom fraction between observations (aggregation).
    pub overlap: f64,
    /// Token offset of the constraint; defaults to the middle (displacement).
    pub constraint_position: Option<u64>,
    /// Overrides the category's turn count.
    pub turns: Option<u64>,
    /// Sense calls the exploration step may make per turn (recon).
    pub recon_budget: usize,
    pub scorer: ScorerKind,
    /// Without reconnaissance, explore by habit instead of not at all (recon).
    pub implicit_exploration: bool,
    /// Gold atoms per kind (recon, layering, projection).
    pub gold: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            n: 2048,
            verbosity: 1,
            conflict: true,
            k: 5,
            overlap: 0.8,
            constraint_position: None,
            turns: None,
            recon_budget: 3,
            scorer: ScorerKind::Uncertainty,
            implicit_exploration: false,
            gold: 2,
        }
    }
}

/// A file-level scenario description: the generator inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub category: Category,
    pub seed: u64,
    #[serde(default)]
    pub knobs: Knobs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAtom {
    pub key: String,
    /// Current true value.
    pub value: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gold {
    pub atoms: Vec<GoldAtom>,
    /// Elements whose instructions the reasoner must follow every turn.
    pub constraints: Vec<ElementId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub category: Category,
    pub knobs: Knobs,
    pub seed: u64,
    pub universe: Vec<ContextElement>,
    pub budget: u64,
    pub turns: u64,
    /// Sensed before the first turn.
    pub initial_gray: Vec<ElementId>,
    /// Sensed and recalled, in this order, before the first turn.
    pub initial_visible: Vec<ElementId>,
    /// Elements the environment delivers (sensed) at the start of a turn.
    pub arrivals: BTreeMap<u64, Vec<ElementId>>,
    /// Black-fog elements exploration may target.
    pub prospects: Vec<ElementId>,
    pub query: Query,
    /// First turn the query is active.
    pub query_from: u64,
    pub gold: Gold,
    /// Observation time the agent considers "now" and the freshness horizon.
    pub now: u64,
    pub horizon: u64,
    /// Scale level switches: (turn, level).
    pub scale_schedule: Vec<(u64, usize)>,
}

impl Scenario {
    fn empty(category: Category, knobs: &Knobs, seed: u64, turns: u64) -> Self {
        Self {
            category,
            knobs: knobs.clone(),
            seed,
            universe: Vec::new(),
            budget: 0,
            turns: knobs.turns.unwrap_or(turns),
            initial_gray: Vec::new(),
            initial_visible: Vec::new(),
            arrivals: BTreeMap::new(),
            prospects: Vec::new(),
            query: Query::default(),
            query_from: 0,
            gold: Gold::default(),
            now: 0,
            horizon: u64::MAX,
            scale_schedule: Vec::new(),
        }
    }

    fn add(&mut self, e: ContextElement) -> ElementId {
        let id = e.id.clone();
        self.universe.push(e);
        id
    }

    fn gold(&mut self, key: impl Into<String>, value: i64) {
        let key = key.into();
        self.query.keys.insert(key.clone());
        self.gold.atoms.push(GoldAtom { key, value });
    }
}

/// Builds a deterministic scenario from `(category, knobs, seed)`.
pub fn generate_scenario(category: Category, knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    if knobs.turns == Some(0) {
        return Err(HarnessError::Parameter("turns must be >= 1".into()));
    }
    match category {
        Category::ReconVsSelection => recon(knobs, seed),
        Category::Projection => projection(knobs, seed),
        Category::Displacement => displacement(knobs, seed),
        Category::Simplification => simplification(knobs, seed),
        Category::Aggregation => aggregation(knobs, seed),
        Category::Layering => layering(knobs, seed),
    }
}

const FILLER_TOKENS: u64 = 64;
const CONSTRAINT_TOKENS: u64 = 32;

fn filler(i: usize, tokens: u64) -> ContextElement {
    ContextElement::new(format!("filler{i:05}"), tokens, "observation")
        .with_atom(SemanticAtom::new(format!("filler{i}"), false))
        .with_priority(10)
}

/// Fillers totalling `n` tokens, with a system constraint starting near
/// token `constraint_position`. One unrelated output arrives per turn.
fn displacement(knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    let n = knobs.n;
    if n < 2 * FILLER_TOKENS {
        return Err(HarnessError::Parameter(format!("n = {n} below {}", 2 * FILLER_TOKENS)));
    }
    let pos = knobs.constraint_position.unwrap_or(n.div_ceil(2));
    if pos == 0 || pos > n {
        return Err(HarnessError::Parameter(format!("constraint position {pos} outside 1..={n}")));
    }
    let mut s = Scenario::empty(Category::Displacement, knobs, seed, 8);
    let filler_total = n - CONSTRAINT_TOKENS;
    let count = filler_total.div_ceil(FILLER_TOKENS) as usize;
    let before = (((pos - 1) / FILLER_TOKENS) as usize).min(count);
    let mut order = Vec::with_capacity(count + 1);
    for i in 0..count {
        if i == before {
            order.push(s.add(constraint()));
        }
        let tokens = (filler_total - i as u64 * FILLER_TOKENS).min(FILLER_TOKENS);
        order.push(s.add(filler(i, tokens)));
    }
    if before == count {
        order.push(s.add(constraint()));
    }
    s.initial_visible = order;
    s.gold.constraints.push(ElementId::from("constraint"));
    s.budget = 2 * n;
    for t in 0..s.turns {
        let id = s.add(
            ContextElement::new(format!("noise{t:03}"), FILLER_TOKENS, "observation")
                .with_atom(SemanticAtom::new(format!("noise{t}"), false))
                .with_observed_at(t),
        );
        s.arrivals.entry(t).or_default().push(id);
    }
    Ok(s)
}

fn constraint() -> ContextElement {
    ContextElement::new("constraint", CONSTRAINT_TOKENS, "system")
        .with_atom(SemanticAtom::new("rule", true))
        .with_format(Format::KeyValueRecord)
        .with_priority(0)
}

/// Two tool outputs per turn, each `55 · verbosity` tokens carrying two
/// gold atoms and three incidental ones.
fn simplification(knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    if knobs.verbosity == 0 {
        return Err(HarnessError::Parameter("verbosity must be >= 1".into()));
    }
    let mut s = Scenario::empty(Category::Simplification, knobs, seed, 8);
    s.budget = 2048;
    let tokens = 55 * knobs.verbosity;
    for t in 0..s.turns {
        for j in 0..2 {
            let tag = format!("{t}_{j}");
            let mut e = ContextElement::new(format!("tool{tag}"), tokens, "observation")
                .with_format(Format::PlainText)
                .with_locator(format!("tool/{tag}"))
                .with_observed_at(t)
                .with_priority(5);
            for g in ["a", "b"] {
                e = e.with_atom(SemanticAtom::new(format!("g{tag}_{g}"), true).with_value(1));
                s.gold(format!("g{tag}_{g}"), 1);
            }
            for x in 0..3 {
                e = e.with_atom(SemanticAtom::new(format!("x{tag}_{x}"), false).with_priority(10 + x));
            }
            let id = s.add(e);
            s.arrivals.entry(t).or_default().push(id);
        }
    }
    Ok(s)
}

/// The same fact in three namespaces. With `conflict` the memory and
/// observation copies disagree with the system copy.
fn layering(knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    if knobs.gold == 0 {
        return Err(HarnessError::Parameter("gold must be >= 1".into()));
    }
    let mut s = Scenario::empty(Category::Layering, knobs, seed, 3);
    let mut r = rng::stream(seed, &[rng::tag("layering")]);
    let fillers = 16;
    for i in 0..fillers {
        let id = s.add(filler(i, FILLER_TOKENS));
        s.initial_visible.push(id);
    }
    for i in 0..knobs.gold * 2 {
        let key = format!("fact{i}");
        s.gold(key.clone(), 1);
        let layers = [("system", 1, 0, 0), ("memory", 2, 5, 1), ("observation", 3, 10, 2)];
        for (ns, wrong, priority, age) in layers {
            let value = if knobs.conflict && ns != "system" { wrong } else { 1 };
            let jitter: u64 = r.random_range(0..3);
            let id = s.add(
                ContextElement::new(format!("{ns}_{i}"), 15, ns)
                    .with_atom(SemanticAtom::new(key.clone(), true).with_value(value))
                    .with_format(Format::KeyValueRecord)
                    .with_priority(priority)
                    .with_observed_at(10 - age * 3 + jitter),
            );
            s.initial_gray.push(id);
        }
    }
    s.budget = 4096;
    Ok(s)
}

/// `k` observations of one locator; each carries ten atoms, a fraction
/// `overlap` of them shared by all. The query opens after the first
/// maintenance pass.
fn aggregation(knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    if knobs.k == 0 || !(0.0..=1.0).contains(&knobs.overlap) {
        return Err(HarnessError::Parameter("need k >= 1 and overlap in [0, 1]".into()));
    }
    const PER: usize = 10;
    let mut s = Scenario::empty(Category::Aggregation, knobs, seed, 8);
    let shared = (knobs.overlap * PER as f64).round() as usize;
    for j in 0..shared {
        s.gold(format!("s{j}"), 1);
    }
    for i in 0..knobs.k {
        let mut e = ContextElement::new(format!("obs{i}"), 0, "observation")
            .with_locator("topic/main")
            .with_format(Format::KeyValueRecord)
            .with_observed_at(i as u64)
            .with_priority(5);
        for j in 0..shared {
            e = e.with_atom(SemanticAtom::new(format!("s{j}"), true).with_value(1));
        }
        for j in 0..PER - shared {
            e = e.with_atom(SemanticAtom::new(format!("u{i}_{j}"), true).with_value(1));
            s.gold(format!("u{i}_{j}"), 1);
        }
        e.tokens = crate::element::TokenCostModel::default().cost(PER);
        let id = s.add(e);
        s.arrivals.entry(0).or_default().push(id);
    }
    let union = s.gold.atoms.len();
    s.budget = 2 * crate::element::TokenCostModel::default().cost(union);
    s.query_from = 5;
    Ok(s)
}

/// Eight hierarchical sections of sixty atoms each. Gold atoms sit low in
/// their sections' importance order, so coarse renderings miss them; the run
/// starts at the coarsest scale and switches to a finer one.
fn projection(knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    if knobs.gold == 0 {
        return Err(HarnessError::Parameter("gold must be >= 1".into()));
    }
    const SECTIONS: usize = 8;
    const ATOMS: usize = 60;
    let mut s = Scenario::empty(Category::Projection, knobs, seed, 5);
    let mut r = rng::stream(seed, &[rng::tag("projection")]);
    let gold_total = knobs.gold * 2;
    let homes: Vec<usize> = (0..gold_total).map(|_| r.random_range(0..SECTIONS)).collect();
    s.add(
        ContextElement::new("repo", 40, "task/repo")
            .with_atom(SemanticAtom::new("repo", false))
            .with_format(Format::HierarchicalListing),
    );
    for sec in 0..SECTIONS {
        let mut e = ContextElement::new(format!("section{sec}"), 2000, format!("task/repo/section{sec}"))
            .with_format(Format::HierarchicalListing)
            .with_locator(format!("repo/section{sec}"))
            .with_priority(5);
        for a in 0..ATOMS {
            e = e.with_atom(SemanticAtom::new(format!("sec{sec}_{a:02}"), a < 3).with_priority(a as i32));
        }
        for (g, home) in homes.iter().enumerate() {
            if *home == sec {
                let key = format!("detail{g}");
                e = e.with_atom(SemanticAtom::new(key.clone(), false).with_priority(100 + g as i32).with_value(1));
                s.gold(key, 1);
            }
        }
        e = e.with_link(RelationalLink::new("repo", format!("section{sec}"), LinkKind::Containment));
        let id = s.add(e);
        s.initial_gray.push(id);
    }
    s.initial_gray.push(ElementId::from("repo"));
    s.budget = 1500;
    s.scale_schedule = vec![(0, 0), (2, 1)];
    Ok(s)
}

/// Gold facts of three kinds: only in black fog; in memory and fresh (a
/// redundant copy waits in black fog); in memory but stale (black fog holds
/// a newer value). Memory timestamps carry noise around the freshness
/// horizon. Unrelated prospects pad the frontier.
fn recon(knobs: &Knobs, seed: u64) -> Result<Scenario, HarnessError> {
    let mut s = Scenario::empty(Category::ReconVsSelection, knobs, seed, 4);
    let mut r = rng::stream(seed, &[rng::tag("recon")]);
    s.now = 100;
    s.horizon = 20;
    s.budget = 2048;
    let obs = |id: String, key: &str, value: i64, at: u64, loc: &str| {
        ContextElement::new(id, 15, "observation")
            .with_atom(SemanticAtom::new(key, true).with_value(value))
            .with_format(Format::KeyValueRecord)
            .with_locator(loc)
            .with_observed_at(at)
    };
    for i in 0..knobs.gold {
        let key = format!("b{i}");
        let id = s.add(obs(format!("fresh{i}"), &key, 1, 100, &format!("loc/b{i}")));
        s.prospects.push(id);
        s.gold(key, 1);

        let key = format!("f{i}");
        let age: u64 = 5 + r.random_range(0..20);
        let loc = format!("loc/f{i}");
        let id = s.add(obs(format!("mem_f{i}"), &key, 1, 100 - age, &loc));
        s.initial_gray.push(id);
        let id = s.add(obs(format!("dup_f{i}"), &key, 1, 100, &loc));
        s.prospects.push(id);
        s.gold(key, 1);

        let key = format!("s{i}");
        let age: u64 = 40 + r.random_range(0..20);
        let loc = format!("loc/s{i}");
        let id = s.add(obs(format!("mem_s{i}"), &key, 0, 100 - age, &loc));
        s.initial_gray.push(id);
        let id = s.add(obs(format!("new_s{i}"), &key, 1, 100, &loc));
        s.prospects.push(id);
        s.gold(key, 1);
    }
    for j in 0..6 {
        let id = s.add(obs(format!("noise{j}"), &format!("n{j}"), 1, 100, &format!("loc/n{j}")));
        s.prospects.push(id);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::TokenCostModel;
    use crate::salience::SalienceProfile;

    #[test]
    fn generation_is_deterministic() {
        for c in Category::ALL {
            let k = Knobs::default();
            assert_eq!(generate_scenario(c, &k, 9).unwrap(), generate_scenario(c, &k, 9).unwrap());
        }
    }

    #[test]
    fn gold_atoms_exist_in_universe() {
        for c in Category::ALL {
            let s = generate_scenario(c, &Knobs::default(), 3).unwrap();
            for g in &s.gold.atoms {
                assert!(s.universe.iter().any(|e| e.atom(&g.key).is_some()), "{c}: {} missing", g.key);
            }
        }
    }

    #[test]
    fn displacement_constraint_sits_in_trough() {
        let k = Knobs { n: 2048, ..Knobs::default() };
        let s = generate_scenario(Category::Displacement, &k, 1).unwrap();
        let mut start = 0;
        for id in &s.initial_visible {
            let e = s.universe.iter().find(|e| &e.id == id).unwrap();
            if id.as_str() == "constraint" {
                break;
            }
            start += e.tokens;
        }
        assert!(start.abs_diff(1024) <= FILLER_TOKENS);
        let p = SalienceProfile::u_shaped();
        let lo = start as usize + 1;
        let mid = p.relative_span(lo, lo + 31, 2048).unwrap();
        assert!(mid < p.relative_span(1, 32, 2048).unwrap());
        assert!(mid < p.relative_span(2017, 2048, 2048).unwrap());
        let total: u64 =
            s.initial_visible.iter().map(|id| s.universe.iter().find(|e| &e.id == id).unwrap().tokens).sum();
        assert_eq!(total, 2048);
    }

    #[test]
    fn aggregation_overlap_audit() {
        let k = Knobs { k: 5, overlap: 0.8, ..Knobs::default() };
        let s = generate_scenario(Category::Aggregation, &k, 0).unwrap();
        let obs: Vec<_> = s.universe.iter().filter(|e| e.id.as_str().starts_with("obs")).collect();
        assert_eq!(obs.len(), 5);
        let keys: Vec<_> = obs.iter().map(|e| e.atom_keys()).collect();
        for a in &keys {
            for b in &keys {
                if a != b {
                    assert_eq!(a.intersection(b).count(), 8);
                }
            }
        }
        assert_eq!(obs[0].tokens, TokenCostModel::default().cost(10));
    }

    #[test]
    fn bad_knobs_rejected() {
        let k = Knobs { n: 10, ..Knobs::default() };
        assert!(generate_scenario(Category::Displacement, &k, 0).is_err());
        let k = Knobs { verbosity: 0, ..Knobs::default() };
        assert!(generate_scenario(Category::Simplification, &k, 0).is_err());
        let k = Knobs { overlap: 1.5, ..Knobs::default() };
        assert!(generate_scenario(Category::Aggregation, &k, 0).is_err());
    }
}
