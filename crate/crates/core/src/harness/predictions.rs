//! Directional checks for the five predictions, each a paired-seed ablation
//! (or, for context collapse, an exact census).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::element::{ContextElement, SemanticAtom};
use crate::operators::Op;
use crate::pipeline::{apply_scale, compaction_cycle, recoverable_atoms};
use crate::state::{ContextState, Transition};

use super::ablation::{run_ablation, Ablation, AblationCell};
use super::scenario::Knobs;
use super::stats;
use super::{Category, HarnessConfig, HarnessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCheck {
    pub id: String,
    pub claim: String,
    pub passed: bool,
    /// The numbers the verdict was computed from.
    pub statistics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub n_seeds: usize,
    pub checks: Vec<PredictionCheck>,
}

impl PredictionReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.checks.len()
    }
}

/// Knob points and counts used by the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub verbosities: Vec<u64>,
    pub short_n: u64,
    pub long_n: u64,
    pub cycles: usize,
    pub collapse_atoms: usize,
    pub exploration_turns: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            verbosities: vec![1, 4, 16],
            short_n: 512,
            long_n: 32768,
            cycles: 5,
            collapse_atoms: 50,
            exploration_turns: 12,
        }
    }
}

fn only(op: Op) -> Ablation {
    [op].into_iter().collect()
}

/// Per-seed `baseline − ablated` for `metric`.
fn gaps(base: &AblationCell, ablated: &AblationCell, metric: &str) -> Vec<f64> {
    stats::paired_diff(&base.metric(metric), &ablated.metric(metric))
}

fn check(id: &str, claim: &str, passed: bool, statistics: &[(&str, f64)]) -> PredictionCheck {
    PredictionCheck {
        id: id.into(),
        claim: claim.into(),
        passed,
        statistics: statistics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

/// Runs P1 to P5 over `seeds`.
pub fn prediction_suite(
    seeds: &[u64],
    config: &HarnessConfig,
    opts: &SuiteOptions,
) -> Result<PredictionReport, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Parameter("at least one seed is required".into()));
    }
    let checks = vec![
        p1(seeds, config, opts)?,
        p2(seeds, config, opts)?,
        p3(seeds, config)?,
        p4(config, opts)?,
        p5(seeds, config, opts)?,
    ];
    Ok(PredictionReport { n_seeds: seeds.len(), checks })
}

fn p1(seeds: &[u64], config: &HarnessConfig, opts: &SuiteOptions) -> Result<PredictionCheck, HarnessError> {
    let grid: Vec<Knobs> = opts.verbosities.iter().map(|v| Knobs { verbosity: *v, ..Knobs::default() }).collect();
    let cells =
        run_ablation(Category::Simplification, &grid, &[Ablation::new(), only(Op::Simplification)], seeds, config)?;
    let mut s: Vec<(String, f64)> = Vec::new();
    let mut contamination = Vec::new();
    let mut gap_means = Vec::new();
    let mut gap_samples = Vec::new();
    for (pair, v) in cells.chunks(2).zip(&opts.verbosities) {
        let c = stats::mean(&pair[1].metric("contaminated_tokens"));
        let g = gaps(&pair[0], &pair[1], "accuracy");
        s.push((format!("contaminated_tokens_ablated_v{v}"), c));
        s.push((format!("accuracy_gap_v{v}"), stats::mean(&g)));
        contamination.push(c);
        gap_means.push(stats::mean(&g));
        gap_samples.push(g);
    }
    let first = &gap_samples[0];
    let last = &gap_samples[gap_samples.len() - 1];
    let band = 2.0 * stats::pooled_sd(first, last);
    s.push(("noise_band".into(), band));
    let contamination_grows = contamination.windows(2).all(|w| w[1] > w[0]);
    let gap_grows = gap_means.windows(2).all(|w| w[1] >= w[0]);
    let spread = gap_means[gap_means.len() - 1] - gap_means[0];
    s.push(("gap_spread".into(), spread));
    let stats: Vec<(&str, f64)> = s.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    Ok(check(
        "P1",
        "without simplification, contamination and the accuracy loss grow with tool-output verbosity",
        contamination_grows && gap_grows && spread > band,
        &stats,
    ))
}

fn p2(seeds: &[u64], config: &HarnessConfig, opts: &SuiteOptions) -> Result<PredictionCheck, HarnessError> {
    let grid = [Knobs { n: opts.short_n, ..Knobs::default() }, Knobs { n: opts.long_n, ..Knobs::default() }];
    let cells = run_ablation(Category::Displacement, &grid, &[Ablation::new(), only(Op::Displacement)], seeds, config)?;
    let short = gaps(&cells[0], &cells[1], "adherence");
    let long = gaps(&cells[2], &cells[3], "adherence");
    let band = 2.0 * stats::pooled_sd(&short, &long);
    let (gs, gl) = (stats::mean(&short), stats::mean(&long));
    Ok(check(
        "P2",
        "the displacement ablation gap in constraint adherence grows with context length",
        gl - gs > band && gs.abs() <= band,
        &[
            ("gap_short", gs),
            ("gap_long", gl),
            ("noise_band", band),
            ("short_n", opts.short_n as f64),
            ("long_n", opts.long_n as f64),
        ],
    ))
}

fn p3(seeds: &[u64], config: &HarnessConfig) -> Result<PredictionCheck, HarnessError> {
    let grid = [Knobs { conflict: true, ..Knobs::default() }, Knobs { conflict: false, ..Knobs::default() }];
    let cells = run_ablation(Category::Layering, &grid, &[Ablation::new(), only(Op::Layering)], seeds, config)?;
    let on = gaps(&cells[0], &cells[1], "accuracy");
    let off = gaps(&cells[2], &cells[3], "accuracy");
    let band = 2.0 * stats::pooled_sd(&on, &off);
    let (g_on, g_off) = (stats::mean(&on), stats::mean(&off));
    Ok(check(
        "P3",
        "the layering ablation gap is significant with namespace conflicts and within noise without",
        g_on > band && g_off.abs() <= band,
        &[("gap_conflict", g_on), ("gap_no_conflict", g_off), ("noise_band", band)],
    ))
}

fn p4(config: &HarnessConfig, opts: &SuiteOptions) -> Result<PredictionCheck, HarnessError> {
    let archival = collapse_census(config, opts.collapse_atoms, opts.cycles, true)?;
    let destructive = collapse_census(config, opts.collapse_atoms, opts.cycles, false)?;
    let constant = archival.counts.windows(2).all(|w| w[0] == w[1]);
    let nonincreasing = destructive.counts.windows(2).all(|w| w[1] <= w[0]);
    let drops = destructive.counts.windows(2).filter(|w| w[1] < w[0]).count();
    let gap = *archival.counts.last().unwrap() as f64 - *destructive.counts.last().unwrap() as f64;
    let mut statistics: Vec<(String, f64)> = Vec::new();
    for (r, (a, d)) in archival.counts.iter().zip(&destructive.counts).enumerate() {
        statistics.push((format!("archival_r{r}"), *a as f64));
        statistics.push((format!("destructive_r{r}"), *d as f64));
    }
    statistics.push(("final_gap".into(), gap));
    statistics.push(("strict_drops".into(), drops as f64));
    let stats: Vec<(&str, f64)> = statistics.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    Ok(check(
        "P4",
        "archival compaction keeps every atom recoverable; destructive compaction loses atoms and the gap persists",
        constant && nonincreasing && drops >= 1 && gap > 0.0,
        &stats,
    ))
}

fn p5(seeds: &[u64], config: &HarnessConfig, opts: &SuiteOptions) -> Result<PredictionCheck, HarnessError> {
    let knobs = Knobs { implicit_exploration: true, turns: Some(opts.exploration_turns), ..Knobs::default() };
    let ungoverned: Ablation = [Op::Reconnaissance, Op::Selection].into_iter().collect();
    let cells = run_ablation(Category::ReconVsSelection, &[knobs], &[Ablation::new(), ungoverned], seeds, config)?;
    let governed = cells[0].metric("exploration_count");
    let free = cells[1].metric("exploration_count");
    let f = stats::variance_ratio(&free, &governed);
    let bc = stats::bimodality_coefficient(&free);
    Ok(check(
        "P5",
        "ungoverned exploration counts are bimodal across seeds, and governance reduces their variance",
        f > 1.0 && bc > stats::BIMODALITY_THRESHOLD,
        &[
            ("variance_governed", stats::variance(&governed)),
            ("variance_ungoverned", stats::variance(&free)),
            ("f_ratio", f),
            ("bimodality_ungoverned", bc),
            ("bimodality_governed", stats::bimodality_coefficient(&governed)),
            ("bimodality_threshold", stats::BIMODALITY_THRESHOLD),
        ],
    ))
}

/// Recoverable-atom counts across repeated compaction cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseCensus {
    pub archival: bool,
    /// Entry `r` is the count after `r` cycles (entry 0 before any).
    pub counts: Vec<usize>,
    /// Ids sent to black fog over all cycles.
    pub lost: Vec<String>,
}

/// A visible field holding `atoms` atoms spread five per element, one
/// critical each, with twice the room it needs.
pub fn collapse_fixture(atoms: usize) -> Result<ContextState, HarnessError> {
    let elements: Vec<ContextElement> = (0..atoms.div_ceil(5))
        .map(|i| {
            let mut e = ContextElement::new(format!("note{i:03}"), 60, "observation").with_observed_at(i as u64);
            for j in 0..5.min(atoms - 5 * i) {
                e = e.with_atom(SemanticAtom::new(format!("a{i}_{j}"), j == 0).with_priority(j as i32));
            }
            e
        })
        .collect();
    let ids: Vec<_> = elements.iter().map(|e| e.id.clone()).collect();
    let budget = elements.iter().map(|e| e.tokens).sum::<u64>() * 2;
    let state = ContextState::new(elements, budget)?;
    let state = state.apply_transition(&Transition::sense(ids.iter().cloned()))?;
    Ok(state.apply_transition(&Transition::recall(ids))?)
}

/// The [`collapse_fixture`] compacted `cycles` times at scale level 1.
pub fn collapse_census(
    config: &HarnessConfig,
    atoms: usize,
    cycles: usize,
    archival: bool,
) -> Result<CollapseCensus, HarnessError> {
    let mut pipeline = apply_scale(&config.pipeline, &config.scale, 1)?;
    pipeline.archival = archival;
    let mut state = collapse_fixture(atoms)?;
    let mut counts = vec![recoverable_atoms(&state)];
    let mut lost = Vec::new();
    for r in 0..cycles {
        let before: Vec<_> = state.black().iter().cloned().collect();
        state = compaction_cycle(&state, &pipeline, r as u64)?.state;
        lost.extend(state.black().iter().filter(|id| !before.contains(id)).map(|id| id.to_string()));
        counts.push(recoverable_atoms(&state));
    }
    Ok(CollapseCensus { archival, counts, lost })
}
