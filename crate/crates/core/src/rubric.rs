//! Five-criterion implementation-depth rubric (present, explicit,
//! configurable, automated, documented) and the system × operator score
//! matrix it produces.
//!
//! Evidence is line-delimited JSON, one record per (system, operator) pair.
//! Systems keep the order of their first record. The bundled file scores
//! four agent memory systems.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BUNDLED_EVIDENCE: &str = include_str!("../data/evidence.jsonl");

/// Rubric rows. Forward and inverse projection are scored together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RubricOp {
    Rho,
    Sigma,
    Phi,
    Alpha,
    Pi,
    Delta,
    Lambda,
}

impl RubricOp {
    pub const ALL: [RubricOp; 7] = [
        RubricOp::Rho,
        RubricOp::Sigma,
        RubricOp::Phi,
        RubricOp::Alpha,
        RubricOp::Pi,
        RubricOp::Delta,
        RubricOp::Lambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RubricOp::Rho => "rho",
            RubricOp::Sigma => "sigma",
            RubricOp::Phi => "phi",
            RubricOp::Alpha => "alpha",
            RubricOp::Pi => "pi",
            RubricOp::Delta => "delta",
            RubricOp::Lambda => "lambda",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RubricOp::Rho => "ρ",
            RubricOp::Sigma => "σ",
            RubricOp::Phi => "φ",
            RubricOp::Alpha => "α",
            RubricOp::Pi => "π",
            RubricOp::Delta => "δ",
            RubricOp::Lambda => "λ",
        }
    }
}

impl fmt::Display for RubricOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RubricOp {
    type Err = RubricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RubricOp::ALL
            .into_iter()
            .find(|op| op.name() == s || op.symbol() == s)
            .ok_or_else(|| RubricError::UnknownOperator(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRecord {
    pub system: String,
    pub operator: RubricOp,
    pub present: bool,
    pub explicit: bool,
    pub configurable: bool,
    pub automated: bool,
    pub documented: bool,
    #[serde(default)]
    pub note: String,
}

impl EvidenceRecord {
    /// Number of criteria met, 0 to 5.
    pub fn score(&self) -> u8 {
        [self.present, self.explicit, self.configurable, self.automated, self.documented].iter().filter(|b| **b).count()
            as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingPair {
    pub system: String,
    pub operator: RubricOp,
}

impl fmt::Display for MissingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.system, self.operator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RubricError {
    #[error("incomplete evidence, missing: {}", list(.missing))]
    IncompleteEvidence { missing: Vec<MissingPair> },
    #[error("duplicate evidence for {0}")]
    Duplicate(MissingPair),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown rubric operator `{0}`")]
    UnknownOperator(String),
}

fn list(pairs: &[MissingPair]) -> String {
    pairs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
}

/// Parses line-delimited evidence. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_evidence(text: &str) -> Result<Vec<EvidenceRecord>, RubricError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| RubricError::Parse { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn bundled_evidence() -> Vec<EvidenceRecord> {
    parse_evidence(BUNDLED_EVIDENCE).expect("bundled evidence parses")
}

/// Half-up rounding of `sum / count` to integer hundredths, computed exactly.
fn mean_centi(sum: u64, count: u64) -> u64 {
    (200 * sum + count) / (2 * count)
}

fn centi_to_f64(c: u64) -> f64 {
    c as f64 / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub system: String,
    pub operator: RubricOp,
    pub score: u8,
}

/// Scores plus means. Means are rounded half-up to two decimals, each from
/// the integer cells it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub systems: Vec<String>,
    /// Row-major: operator order of [`RubricOp::ALL`], then system order.
    pub cells: Vec<ScoreCell>,
    pub row_means: BTreeMap<RubricOp, f64>,
    /// Same order as `systems`.
    pub system_means: Vec<f64>,
    pub grand_mean: f64,
}

impl ScoreMatrix {
    pub fn cell(&self, system: &str, op: RubricOp) -> Option<u8> {
        self.cells.iter().find(|c| c.system == system && c.operator == op).map(|c| c.score)
    }

    pub fn system_mean(&self, system: &str) -> Option<f64> {
        self.systems.iter().position(|s| s == system).map(|i| self.system_means[i])
    }

    /// Tab-separated matrix: one row per operator with its mean, then the
    /// system means and the grand mean.
    pub fn tsv(&self) -> String {
        let mut out = format!("operator\t{}\tmean\n", self.systems.join("\t"));
        for op in RubricOp::ALL {
            let scores: Vec<String> =
                self.systems.iter().map(|s| self.cell(s, op).unwrap_or_default().to_string()).collect();
            out += &format!("{}\t{}\t{:.2}\n", op, scores.join("\t"), self.row_means[&op]);
        }
        let means: Vec<String> = self.system_means.iter().map(|m| format!("{m:.2}")).collect();
        out += &format!("system_mean\t{}\t{:.2}\n", means.join("\t"), self.grand_mean);
        out
    }
}

/// Builds the score matrix. Every system named in the evidence must have
/// exactly one record per rubric operator.
pub fn score(evidence: &[EvidenceRecord]) -> Result<ScoreMatrix, RubricError> {
    if evidence.is_empty() {
        let missing = RubricOp::ALL.into_iter().map(|operator| MissingPair { system: "*".into(), operator }).collect();
        return Err(RubricError::IncompleteEvidence { missing });
    }
    let mut systems: Vec<String> = Vec::new();
    let mut grid: BTreeMap<(usize, RubricOp), u8> = BTreeMap::new();
    for r in evidence {
        let si = match systems.iter().position(|s| *s == r.system) {
            Some(i) => i,
            None => {
                systems.push(r.system.clone());
                systems.len() - 1
            }
        };
        if grid.insert((si, r.operator), r.score()).is_some() {
            return Err(RubricError::Duplicate(MissingPair { system: r.system.clone(), operator: r.operator }));
        }
    }
    let mut missing = Vec::new();
    for (si, s) in systems.iter().enumerate() {
        for operator in RubricOp::ALL {
            if !grid.contains_key(&(si, operator)) {
                missing.push(MissingPair { system: s.clone(), operator });
            }
        }
    }
    if !missing.is_empty() {
        return Err(RubricError::IncompleteEvidence { missing });
    }

    let n_sys = systems.len() as u64;
    let mut cells = Vec::with_capacity(grid.len());
    let mut row_means = BTreeMap::new();
    let mut col_sums = vec![0u64; systems.len()];
    let mut total = 0u64;
    for op in RubricOp::ALL {
        let mut row = 0u64;
        for (si, s) in systems.iter().enumerate() {
            let v = grid[&(si, op)];
            row += v as u64;
            col_sums[si] += v as u64;
            cells.push(ScoreCell { system: s.clone(), operator: op, score: v });
        }
        total += row;
        row_means.insert(op, centi_to_f64(mean_centi(row, n_sys)));
    }
    let n_ops = RubricOp::ALL.len() as u64;
    let system_means = col_sums.iter().map(|s| centi_to_f64(mean_centi(*s, n_ops))).collect();
    let grand_mean = centi_to_f64(mean_centi(total, n_ops * n_sys));
    Ok(ScoreMatrix { systems, cells, row_means, system_means, grand_mean })
}

/// Reference implementation-depth matrix for the four bundled systems.
pub mod reference {
    pub const SYSTEMS: [&str; 4] = ["Claude Code", "Letta", "MemOS", "OpenViking"];
    /// Rows in [`super::RubricOp::ALL`] order, columns in [`SYSTEMS`] order.
    pub const CELLS: [[u8; 4]; 7] =
        [[5, 1, 1, 1], [2, 2, 5, 5], [4, 4, 2, 1], [1, 2, 4, 1], [2, 5, 5, 5], [2, 1, 1, 1], [5, 5, 5, 5]];
    /// Means in integer hundredths.
    pub const ROW_MEANS: [u64; 7] = [200, 350, 275, 200, 425, 125, 500];
    pub const SYSTEM_MEANS: [u64; 4] = [300, 286, 329, 271];
    pub const GRAND_MEAN: u64 = 296;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    pub cells_matched: usize,
    pub cells_total: usize,
    pub means_matched: usize,
    pub means_total: usize,
    pub mismatches: Vec<String>,
}

impl ReferenceCheck {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{}/{} cells match, {}/{} means match",
            self.cells_matched, self.cells_total, self.means_matched, self.means_total
        )
    }
}

fn to_centi(x: f64) -> u64 {
    (x * 100.0).round() as u64
}

/// Compares a matrix against the reference values at two-decimal
/// precision. Extra systems in the matrix are ignored.
pub fn check_reference(m: &ScoreMatrix) -> ReferenceCheck {
    let mut chk =
        ReferenceCheck { cells_matched: 0, cells_total: 28, means_matched: 0, means_total: 12, mismatches: Vec::new() };
    for (oi, op) in RubricOp::ALL.into_iter().enumerate() {
        for (si, sys) in reference::SYSTEMS.into_iter().enumerate() {
            let want = reference::CELLS[oi][si];
            match m.cell(sys, op) {
                Some(got) if got == want => chk.cells_matched += 1,
                got => chk.mismatches.push(format!("cell {sys}/{op}: expected {want}, got {got:?}")),
            }
        }
    }
    let mut mean = |label: String, got: Option<f64>, want: u64| match got.map(to_centi) {
        Some(c) if c == want => chk.means_matched += 1,
        c => chk.mismatches.push(format!("{label}: expected {:.2}, got {:?}", centi_to_f64(want), c.map(centi_to_f64))),
    };
    // Reference means only apply to the four-system matrix.
    let four = m.systems.len() == reference::SYSTEMS.len();
    for (oi, op) in RubricOp::ALL.into_iter().enumerate() {
        mean(format!("row mean {op}"), m.row_means.get(&op).copied().filter(|_| four), reference::ROW_MEANS[oi]);
    }
    for (si, sys) in reference::SYSTEMS.into_iter().enumerate() {
        mean(format!("system mean {sys}"), m.system_mean(sys), reference::SYSTEM_MEANS[si]);
    }
    mean("grand mean".into(), four.then_some(m.grand_mean), reference::GRAND_MEAN);
    chk
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(system: &str, operator: RubricOp, flags: [bool; 5]) -> EvidenceRecord {
        EvidenceRecord {
            system: system.into(),
            operator,
            present: flags[0],
            explicit: flags[1],
            configurable: flags[2],
            automated: flags[3],
            documented: flags[4],
            note: String::new(),
        }
    }

    #[test]
    fn bundled_evidence_reproduces_reference() {
        let m = score(&bundled_evidence()).unwrap();
        let chk = check_reference(&m);
        assert!(chk.passed(), "{:?}", chk.mismatches);
        assert_eq!(chk.summary(), "28/28 cells match, 12/12 means match");
        assert_eq!(m.row_means[&RubricOp::Lambda], 5.0);
        assert_eq!(m.row_means[&RubricOp::Delta], 1.25);
        assert_eq!(m.row_means[&RubricOp::Pi], 4.25);
        assert_eq!(m.grand_mean, 2.96);
        assert_eq!(m.cell("Claude Code", RubricOp::Rho), Some(5));
    }

    #[test]
    fn grand_mean_comes_from_cells_not_rounded_system_means() {
        // 83 / 28 = 2.964…, while the rounded system means average to 2.965.
        let m = score(&bundled_evidence()).unwrap();
        let total: u64 = m.cells.iter().map(|c| c.score as u64).sum();
        assert_eq!(total, 83);
        assert_eq!(mean_centi(83, 28), 296);
        let via_systems: u64 = reference::SYSTEM_MEANS.iter().sum();
        assert_eq!(via_systems, 1186);
        assert_eq!((2 * via_systems + 4) / 8, 297);
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(mean_centi(1, 8), 13); // 0.125
        assert_eq!(mean_centi(20, 7), 286);
        assert_eq!(mean_centi(23, 7), 329);
        assert_eq!(mean_centi(19, 7), 271);
        assert_eq!(mean_centi(0, 3), 0);
    }

    #[test]
    fn all_false_scores_zero() {
        let ev: Vec<_> = RubricOp::ALL.into_iter().map(|op| record("X", op, [false; 5])).collect();
        let m = score(&ev).unwrap();
        assert!(m.cells.iter().all(|c| c.score == 0));
        assert!(m.row_means.values().all(|v| *v == 0.0));
        assert_eq!(m.grand_mean, 0.0);
    }

    #[test]
    fn missing_and_duplicate_pairs() {
        let mut ev = bundled_evidence();
        ev.retain(|r| !(r.system == "Letta" && r.operator == RubricOp::Alpha));
        match score(&ev) {
            Err(RubricError::IncompleteEvidence { missing }) => {
                assert_eq!(missing, vec![MissingPair { system: "Letta".into(), operator: RubricOp::Alpha }])
            }
            other => panic!("{other:?}"),
        }
        let mut ev = bundled_evidence();
        ev.push(ev[0].clone());
        assert!(matches!(score(&ev), Err(RubricError::Duplicate(_))));
        assert!(matches!(score(&[]), Err(RubricError::IncompleteEvidence { .. })));
        assert!(matches!(parse_evidence(""), Ok(v) if v.is_empty()));
    }

    #[test]
    fn fifth_system_extends_matrix() {
        let mut ev = bundled_evidence();
        ev.extend(RubricOp::ALL.into_iter().map(|op| record("Fifth", op, [true, false, false, false, false])));
        let m = score(&ev).unwrap();
        assert_eq!(m.systems.len(), 5);
        assert_eq!(m.system_mean("Fifth"), Some(1.0));
        let chk = check_reference(&m);
        assert_eq!(chk.cells_matched, 28);
        assert!(m.tsv().lines().next().unwrap().ends_with("Fifth\tmean"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{}\n\n{{\"system\": 3}}\n", BUNDLED_EVIDENCE.lines().next().unwrap());
        assert!(matches!(parse_evidence(&text), Err(RubricError::Parse { line: 3, .. })));
    }
}
