//! Result records and the aggregate table.

use cartography::harness::{stats, AblationRow, Category, ScenarioResult};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

/// One scenario run: the line format of `result.jsonl` and `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub category: Category,
    pub knob: String,
    pub ablation: String,
    pub seed: u64,
    pub result: ScenarioResult,
}

pub fn tsv(manifest: &RunManifest, rows: &[AblationRow]) -> String {
    let mut s = format!("{}\n{}\n", manifest.tsv_comment(), AblationRow::HEADER);
    for r in rows {
        s += &r.tsv();
        s.push('\n');
    }
    s
}

#[derive(Deserialize)]
struct ManifestLine {
    manifest: RunManifest,
}

/// Splits a results file into its manifest (if any) and records.
pub fn parse_results(text: &str) -> Result<(Option<RunManifest>, Vec<ResultRecord>), String> {
    let mut manifest = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(m) = serde_json::from_str::<ManifestLine>(line) {
            manifest.get_or_insert(m.manifest);
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok((manifest, records))
}

/// One row per (category, knob, ablation) group and metric, groups in
/// order of first appearance.
pub fn aggregate(records: &[ResultRecord]) -> Vec<AblationRow> {
    type Key<'a> = (Category, &'a str, &'a str);
    let mut groups: Vec<(Key, Vec<&ScenarioResult>)> = Vec::new();
    for r in records {
        let key = (r.category, r.knob.as_str(), r.ablation.as_str());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(&r.result),
            None => groups.push((key, vec![&r.result])),
        }
    }
    let mut rows = Vec::new();
    for ((category, knob, ablation), results) in groups {
        for m in ScenarioResult::METRICS {
            let xs: Vec<f64> = results.iter().filter_map(|r| r.metric(m)).collect();
            rows.push(AblationRow {
                category,
                knob: knob.to_string(),
                ablation: ablation.to_string(),
                metric: m.to_string(),
                mean: stats::mean(&xs),
                stddev: stats::stddev(&xs),
                n_seeds: xs.len(),
            });
        }
    }
    rows
}
