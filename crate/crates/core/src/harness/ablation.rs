//! Operator ablation over a knob grid.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::operators::Op;

use super::scenario::{generate_scenario, Knobs};
use super::stats;
use super::{Category, HarnessConfig, HarnessError, ScenarioResult};

/// A set of disabled operators. The empty set is the full pipeline.
pub type Ablation = BTreeSet<Op>;

pub fn ablation_label(a: &Ablation) -> String {
    if a.is_empty() {
        "none".into()
    } else {
        a.iter().map(|op| op.name()).collect::<Vec<_>>().join("+")
    }
}

/// Per-seed results for one (knob point, ablation) pair, in seed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub category: Category,
    pub knobs: Knobs,
    pub knob_label: String,
    pub ablation: Ablation,
    pub results: Vec<ScenarioResult>,
}

impl AblationCell {
    pub fn metric(&self, name: &str) -> Vec<f64> {
        self.results.iter().filter_map(|r| r.metric(name)).collect()
    }
}

/// One line of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub category: Category,
    pub knob: String,
    pub ablation: String,
    pub metric: String,
    pub mean: f64,
    pub stddev: f64,
    pub n_seeds: usize,
}

impl AblationRow {
    pub const HEADER: &'static str = "category\tknob\tablation\tmetric\tmean\tstddev\tn_seeds";

    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}",
            self.category, self.knob, self.ablation, self.metric, self.mean, self.stddev, self.n_seeds
        )
    }
}

/// Knob values that differ from the defaults, as `name=value` pairs.
pub fn knob_label(k: &Knobs) -> String {
    let base = serde_json::to_value(Knobs::default()).expect("knobs serialize");
    let this = serde_json::to_value(k).expect("knobs serialize");
    let (Some(base), Some(this)) = (base.as_object(), this.as_object()) else {
        return "default".into();
    };
    let parts: Vec<String> = this
        .iter()
        .filter(|(name, v)| base.get(*name) != Some(v))
        .map(|(name, v)| format!("{name}={}", v.to_string().trim_matches('"')))
        .collect();
    if parts.is_empty() {
        "default".into()
    } else {
        parts.join(",")
    }
}

/// Runs every (knob point × ablation × seed) combination. Seeds run in
/// parallel; results come back in grid order, then seed order.
pub fn run_ablation(
    category: Category,
    grid: &[Knobs],
    ablations: &[Ablation],
    seeds: &[u64],
    config: &HarnessConfig,
) -> Result<Vec<AblationCell>, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Parameter("at least one seed is required".into()));
    }
    if grid.is_empty() || ablations.is_empty() {
        return Err(HarnessError::Parameter("empty knob grid or ablation list".into()));
    }
    let mut cells = Vec::with_capacity(grid.len() * ablations.len());
    for knobs in grid {
        for ablation in ablations {
            let mut cfg = config.clone();
            cfg.pipeline.ablate.extend(ablation.iter().copied());
            let results = seeds
                .par_iter()
                .map(|seed| {
                    let s = generate_scenario(category, knobs, *seed)?;
                    super::run_scenario(&s, &cfg)
                })
                .collect::<Result<Vec<_>, _>>()?;
            cells.push(AblationCell {
                category,
                knobs: knobs.clone(),
                knob_label: knob_label(knobs),
                ablation: ablation.clone(),
                results,
            });
        }
    }
    Ok(cells)
}

/// Aggregate table: one row per cell and metric.
pub fn aggregate_rows(cells: &[AblationCell]) -> Vec<AblationRow> {
    let mut rows = Vec::new();
    for c in cells {
        for m in ScenarioResult::METRICS {
            let xs = c.metric(m);
            rows.push(AblationRow {
                category: c.category,
                knob: c.knob_label.clone(),
                ablation: ablation_label(&c.ablation),
                metric: m.to_string(),
                mean: stats::mean(&xs),
                stddev: stats::stddev(&xs),
                n_seeds: xs.len(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ablation_equals_baseline() {
        let cfg = HarnessConfig::default();
        let seeds: Vec<u64> = (0..6).collect();
        let grid = [Knobs::default()];
        let cells = run_ablation(Category::Layering, &grid, &[Ablation::new(), Ablation::new()], &seeds, &cfg).unwrap();
        assert_eq!(cells[0].results, cells[1].results);
        for (r, seed) in cells[0].results.iter().zip(&seeds) {
            let s = generate_scenario(Category::Layering, &grid[0], *seed).unwrap();
            assert_eq!(*r, super::super::run_scenario(&s, &cfg).unwrap());
        }
    }

    #[test]
    fn zero_seeds_is_an_error() {
        let r =
            run_ablation(Category::Layering, &[Knobs::default()], &[Ablation::new()], &[], &HarnessConfig::default());
        assert!(matches!(r, Err(HarnessError::Parameter(_))));
    }

    #[test]
    fn single_cell_grid_gives_one_row_per_metric() {
        let cells = run_ablation(
            Category::Aggregation,
            &[Knobs::default()],
            &[Ablation::new()],
            &[1, 2],
            &HarnessConfig::default(),
        )
        .unwrap();
        let rows = aggregate_rows(&cells);
        assert_eq!(rows.len(), ScenarioResult::METRICS.len());
        assert!(rows.iter().all(|r| r.knob == "default" && r.ablation == "none" && r.n_seeds == 2));
    }

    #[test]
    fn knob_labels_name_changes() {
        let k = Knobs { n: 512, ..Knobs::default() };
        assert_eq!(knob_label(&k), "n=512");
    }
}
