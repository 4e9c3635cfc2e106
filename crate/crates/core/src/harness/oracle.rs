//! A seeded stand-in for the reasoner. How well it uses content depends only
//! on where that content sits in the visible field, through the salience
//! profile.

use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, ElementId};
use crate::operators::LayerPolicy;
use crate::rng;
use crate::salience::SalienceProfile;
use crate::state::{ContextState, Zone};

use super::GoldAtom;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Salience gain `c`: content at relative salience `r` is used with
    /// probability `min(1, c · r)`.
    pub c: f64,
    /// Chance of answering about a fact never observed.
    pub h: f64,
    /// Chance of answering from memory alone.
    pub memory_rate: f64,
    /// Chance a made-up answer happens to be right.
    pub guess_accuracy: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { c: 2.0, h: 0.3, memory_rate: 0.5, guess_accuracy: 0.25 }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.c.is_nan() || self.c < 0.0 {
            return Err(format!("oracle gain c = {} must be >= 0", self.c));
        }
        for (name, x) in [("h", self.h), ("memory_rate", self.memory_rate), ("guess_accuracy", self.guess_accuracy)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(format!("oracle {name} = {x} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// How one gold atom came out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomOutcome {
    Success,
    /// Answered although never observed, and wrong.
    Hallucination,
    /// Answered from an outdated copy.
    StaleMemory,
    /// Answered from a lower-precedence layer that disagrees with a higher one.
    LayerPriorityError,
    /// Observed at some point, no longer recoverable.
    InformationLoss,
    /// In view, but not attended to.
    AttentionMiss,
    Unanswered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonerOracle {
    pub profile: SalienceProfile,
    pub params: OracleParams,
    pub layer_policy: LayerPolicy,
}

/// Token span `[lo, hi]` (1-based, inclusive) of each visible element.
pub(crate) fn token_spans(state: &ContextState) -> Vec<(ElementId, usize, usize)> {
    let mut at = 0usize;
    let mut out = Vec::with_capacity(state.visible().len());
    for id in state.visible() {
        let t = state.element(id).map_or(0, |e| e.tokens as usize);
        if t > 0 {
            out.push((id.clone(), at + 1, at + t));
        }
        at += t;
    }
    out
}

impl ReasonerOracle {
    /// Probability that content occupying `lo..=hi` of an `n`-token field is
    /// used.
    pub fn use_probability(&self, lo: usize, hi: usize, n: usize) -> f64 {
        let r = self.profile.relative_span(lo, hi, n).unwrap_or(0.0);
        (self.params.c * r).min(1.0)
    }

    fn element_use_probability(&self, state: &ContextState, id: &ElementId) -> f64 {
        let n = state.visible_tokens() as usize;
        token_spans(state)
            .into_iter()
            .find(|(v, _, _)| v == id)
            .map_or(0.0, |(_, lo, hi)| self.use_probability(lo, hi, n))
    }

    /// Whether the constraint `id` is obeyed on `turn`. A constraint out of
    /// view is never obeyed.
    pub fn constraint_obeyed(&self, state: &ContextState, id: &ElementId, seed: u64, turn: u64) -> bool {
        if state.position_of(id).is_none() {
            return false;
        }
        let p = self.element_use_probability(state, id);
        rng::unit(seed, &[rng::tag("adhere"), turn, rng::tag(id.as_str())]) < p
    }

    /// Answers a gold atom from `state`. `observed` says whether any carrier
    /// of the atom was ever in memory or view during the run.
    pub fn answer(&self, state: &ContextState, gold: &GoldAtom, observed: bool, seed: u64) -> AtomOutcome {
        let draw = |what: &str| rng::unit(seed, &[rng::tag(what), rng::tag(&gold.key)]);
        let carriers = |zone: Zone| -> Vec<&ContextElement> {
            state.elements_in(zone).into_iter().filter(|e| e.atom(&gold.key).is_some()).collect()
        };
        let value = |e: &ContextElement| e.atom(&gold.key).map(|a| a.value);

        let visible = carriers(Zone::Visible);
        if !visible.is_empty() {
            let chosen = self.choose_carrier(state, &visible, draw("carrier"));
            if draw("use") >= self.element_use_probability(state, &chosen.id) {
                return AtomOutcome::AttentionMiss;
            }
            if value(chosen) == Some(gold.value) {
                return AtomOutcome::Success;
            }
            let rank = |e: &ContextElement| self.layer_rank(state, e);
            let outranked = visible.iter().any(|e| value(e) == Some(gold.value) && rank(e) < rank(chosen));
            return if outranked { AtomOutcome::LayerPriorityError } else { AtomOutcome::StaleMemory };
        }

        let gray = carriers(Zone::Gray);
        if let Some(latest) = gray.iter().max_by_key(|e| (e.observed_at, e.id.clone())) {
            if draw("memory") >= self.params.memory_rate {
                return AtomOutcome::Unanswered;
            }
            return if value(latest) == Some(gold.value) { AtomOutcome::Success } else { AtomOutcome::StaleMemory };
        }

        if observed {
            return AtomOutcome::InformationLoss;
        }
        if draw("guess") >= self.params.h {
            return AtomOutcome::Unanswered;
        }
        if draw("chance") < self.params.guess_accuracy {
            AtomOutcome::Success
        } else {
            AtomOutcome::Hallucination
        }
    }

    fn layer_rank(&self, state: &ContextState, e: &ContextElement) -> usize {
        state.layers().get(&e.id).map_or(usize::MAX, |ns| self.layer_policy.rank(ns))
    }

    /// With every carrier layered, the highest-precedence layer wins (newest
    /// first within a layer). Otherwise a carrier is drawn with probability
    /// proportional to its salience mass.
    fn choose_carrier<'a>(&self, state: &ContextState, carriers: &[&'a ContextElement], u: f64) -> &'a ContextElement {
        if carriers.iter().all(|e| state.layers().contains_key(&e.id)) {
            return carriers
                .iter()
                .min_by(|a, b| {
                    self.layer_rank(state, a)
                        .cmp(&self.layer_rank(state, b))
                        .then(b.observed_at.cmp(&a.observed_at))
                        .then(a.id.cmp(&b.id))
                })
                .copied()
                .expect("carriers is non-empty");
        }
        let n = state.visible_tokens() as usize;
        let spans = token_spans(state);
        let mass: Vec<f64> = carriers
            .iter()
            .map(|e| {
                spans.iter().find(|(id, _, _)| *id == e.id).map_or(0.0, |(_, lo, hi)| {
                    self.profile.relative_span(*lo, *hi, n).unwrap_or(0.0) * (hi - lo + 1) as f64
                })
            })
            .collect();
        let total: f64 = mass.iter().sum();
        let mut acc = 0.0;
        for (e, m) in carriers.iter().zip(&mass) {
            acc += m / total;
            if u < acc {
                return e;
            }
        }
        carriers[carriers.len() - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::SemanticAtom;
    use crate::state::Transition;

    fn oracle(c: f64) -> ReasonerOracle {
        ReasonerOracle {
            profile: SalienceProfile::u_shaped(),
            params: OracleParams { c, ..OracleParams::default() },
            layer_policy: LayerPolicy::standard(),
        }
    }

    fn field(n: usize) -> ContextState {
        let els: Vec<ContextElement> = (0..n)
            .map(|i| {
                ContextElement::new(format!("e{i:03}"), 20, "observation")
                    .with_atom(SemanticAtom::new(format!("k{i}"), true).with_value(1))
            })
            .collect();
        let ids: Vec<ElementId> = els.iter().map(|e| e.id.clone()).collect();
        let s = ContextState::new(els, 100_000).unwrap();
        let s = s.apply_transition(&Transition::sense(ids.clone())).unwrap();
        s.apply_transition(&Transition::recall(ids)).unwrap()
    }

    #[test]
    fn saturated_gain_answers_everything_in_view() {
        let s = field(50);
        let o = oracle(f64::INFINITY);
        for seed in 0..20 {
            for i in 0..50 {
                let g = GoldAtom { key: format!("k{i}"), value: 1 };
                assert_eq!(o.answer(&s, &g, true, seed), AtomOutcome::Success);
            }
        }
    }

    #[test]
    fn use_probability_is_monotone_in_salience() {
        let o = oracle(2.0);
        let p = SalienceProfile::u_shaped();
        let n = 5000;
        let mut pairs: Vec<(f64, f64)> = (0..50)
            .map(|j| {
                let lo = 1 + j * 100;
                (p.relative_span(lo, lo + 19, n).unwrap(), o.use_probability(lo, lo + 19, n))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn never_observed_atoms_follow_guess_rates() {
        let s = ContextState::new(vec![], 10).unwrap();
        let o = oracle(2.0);
        let seeds = 4000;
        let mut correct = 0;
        let mut hallucinated = 0;
        for seed in 0..seeds {
            match o.answer(&s, &GoldAtom { key: "x".into(), value: 1 }, false, seed) {
                AtomOutcome::Success => correct += 1,
                AtomOutcome::Hallucination => hallucinated += 1,
                AtomOutcome::Unanswered => {}
                other => panic!("unexpected {other:?}"),
            }
        }
        let acc = correct as f64 / seeds as f64;
        assert!((acc - 0.3 * 0.25).abs() < 0.02, "{acc}");
        assert!((hallucinated as f64 / seeds as f64 - 0.3 * 0.75).abs() < 0.03);
    }
}
