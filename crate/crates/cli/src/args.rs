//! Parsers for the compact flag syntaxes: seed ranges, knob grids,
//! operator lists and coverage patches.

use std::collections::BTreeSet;

use cartography::harness::{Ablation, Knobs};
use cartography::state::Zone;
use cartography::Op;
use serde_json::Value;

use crate::CliError;

/// `N..M` (half-open) or a bare count `N` meaning `0..N`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("bad seed range `{s}` (expected N..M or a count)"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => (0, s.trim().parse().map_err(|_| bad())?),
    };
    if hi <= lo {
        return Err(CliError::Parameter(format!("seed range `{s}` is empty")));
    }
    Ok((lo..hi).collect())
}

pub fn parse_ops(s: &str) -> Result<Ablation, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty() && p.trim() != "none")
        .map(|p| p.parse::<Op>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn knob_value(raw: &str) -> Value {
    let raw = raw.trim();
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// `knob=v1,v2;other=v3` expands to the cartesian product of the listed
/// values over the default knobs. Axes vary left to right, the last
/// fastest. An empty spec is the single default point.
pub fn parse_grid(spec: &str) -> Result<Vec<Knobs>, CliError> {
    let base = serde_json::to_value(Knobs::default()).expect("knobs serialize");
    let mut points = vec![base];
    let mut seen = BTreeSet::new();
    for axis in spec.split(';').map(str::trim).filter(|a| !a.is_empty()) {
        let (name, values) =
            axis.split_once('=').ok_or_else(|| CliError::Usage(format!("grid axis `{axis}` lacks `=`")))?;
        let name = name.trim();
        if !seen.insert(name.to_string()) {
            return Err(CliError::Usage(format!("grid axis `{name}` repeated")));
        }
        if points[0].get(name).is_none() {
            return Err(CliError::Parameter(format!("unknown knob `{name}`")));
        }
        let values: Vec<Value> = values.split(',').map(knob_value).collect();
        points = points
            .iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q[name] = v.clone();
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .map(|p| serde_json::from_value(p).map_err(|e| CliError::Parameter(format!("bad knob value: {e}"))))
        .collect()
}

fn parse_zone(s: &str) -> Result<Zone, CliError> {
    match s.trim() {
        "B" | "black" => Ok(Zone::Black),
        "G" | "gray" => Ok(Zone::Gray),
        "V" | "visible" => Ok(Zone::Visible),
        other => Err(CliError::Usage(format!("unknown zone `{other}`"))),
    }
}

/// `G>B:sigma` names one operator on one boundary.
pub fn parse_boundary_op(s: &str) -> Result<(Zone, Zone, Op), CliError> {
    let bad = || CliError::Usage(format!("bad boundary `{s}` (expected FROM>TO:OP, e.g. G>B:sigma)"));
    let (edge, op) = s.split_once(':').ok_or_else(bad)?;
    let (from, to) = edge.split_once('>').ok_or_else(bad)?;
    let op = op.parse::<Op>().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((parse_zone(from)?, parse_zone(to)?, op))
}
