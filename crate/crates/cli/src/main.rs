//! `cartography`: verify the formal results, simulate scenarios, run
//! ablations and the prediction suite, score the rubric, and render
//! aggregate tables.
//!
//! Exit status: 0 success, 1 a check failed, 2 usage or input error.

mod args;
mod manifest;
mod records;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cartography::config::ConfigError;
use cartography::formal::{verify_all, TheoremCheck};
use cartography::harness::{
    ablation_label, aggregate_rows, generate_scenario, knob_label, prediction_suite, run_ablation, run_scenario_traced,
    Ablation, AblationRow, Category, HarnessError, ScenarioSpec, SuiteOptions,
};
use cartography::invariants::random_walk;
use cartography::operators::CoverageRegistry;
use cartography::rubric::{self, RubricError};
use clap::{Parser, Subcommand};
use thiserror::Error;

use manifest::RunManifest;
use records::ResultRecord;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Rubric(#[from] RubricError),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Harness(HarnessError),
    #[error("{0}")]
    CheckFailed(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Parameter(p) => CliError::Parameter(p),
            other => CliError::Harness(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) | CliError::Harness(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "cartography", version, about = "Zonal context governance engine and diagnostic harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the five formal replicas and the randomized invariant walk.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the invariant walk.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        walk_steps: usize,
        /// Remove an operator from one boundary of the coverage registry
        /// before checking, e.g. `G>B:sigma`. Repeatable.
        #[arg(long = "registry-drop", value_name = "FROM>TO:OP")]
        registry_drop: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario file and write its result record.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-stage trace.
        #[arg(long)]
        trace: bool,
    },
    /// Ablate operators over a knob grid and aggregate per-seed results.
    Ablate {
        category: String,
        /// Knob grid, e.g. `n=512,32768;conflict=true,false`.
        #[arg(long, default_value = "")]
        grid: String,
        /// `N..M` or a seed count.
        #[arg(long, default_value = "0..30")]
        seeds: String,
        /// Operators to disable together, e.g. `delta` or `rho,sigma`.
        /// Repeatable; the full pipeline always runs as the baseline.
        #[arg(long)]
        ablate: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also run the five-prediction suite over the same seeds.
        #[arg(long)]
        predictions: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score implementation-depth evidence.
    Rubric {
        /// Line-delimited evidence; the bundled evidence when omitted.
        evidence: Option<PathBuf>,
        /// Compare against the bundled reference matrix.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render per-seed result records as an aggregate table.
    Report {
        results: PathBuf,
        /// Restrict to these metrics. Repeatable.
        #[arg(long)]
        metric: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Verify { config, seed, walk_steps, registry_drop, out } => {
            cmd_verify(config.as_deref(), seed, walk_steps, &registry_drop, out.as_deref())
        }
        Command::Simulate { scenario, config, seed, out, trace } => {
            cmd_simulate(&scenario, config.as_deref(), seed, out.as_deref(), trace)
        }
        Command::Ablate { category, grid, seeds, ablate, config, predictions, out } => {
            cmd_ablate(&category, &grid, &seeds, &ablate, config.as_deref(), predictions, out.as_deref())
        }
        Command::Rubric { evidence, check, out } => cmd_rubric(evidence.as_deref(), check, out.as_deref()),
        Command::Report { results, metric, out } => cmd_report(&results, &metric, out.as_deref()),
    }
}

/// Writes `body` to `dir/name`, or to stdout when no directory is given.
fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn jsonl<T: serde::Serialize>(manifest: &RunManifest, items: &[T]) -> String {
    let mut s = manifest.json_line();
    s.push('\n');
    for item in items {
        s += &serde_json::to_string(item).expect("record serializes");
        s.push('\n');
    }
    s
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_verify(
    config: Option<&Path>,
    seed: u64,
    walk_steps: usize,
    drops: &[String],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (cfg, manifest) = manifest::load("verify", config, vec![seed])?;
    let mut registry = CoverageRegistry::default();
    for d in drops {
        let (from, to, op) = args::parse_boundary_op(d)?;
        let kinds: Vec<_> = registry.governing(from, to).into_iter().filter(|k| k.op() == op).collect();
        for k in kinds {
            registry.remove(from, to, k);
        }
    }
    let report = verify_all(&registry);
    let walk = random_walk(seed, walk_steps, &cfg.pipeline);
    let walk_check = TheoremCheck {
        name: "invariant_walk".into(),
        passed: walk.passed(),
        detail: match walk.violations.first() {
            None => format!("{walk_steps} steps, 0 violations"),
            Some(v) => format!(
                "{walk_steps} steps, {} violations; first at step {} ({}): {}",
                walk.violations.len(),
                v.step,
                v.action,
                v.message
            ),
        },
    };
    let mut checks = report.checks.clone();
    checks.push(walk_check);

    if out.is_some() {
        emit(out, "verify.jsonl", &jsonl(&manifest, &checks))?;
    }
    for c in &checks {
        println!("{} {}: {}", verdict(c.passed), c.name, c.detail);
    }
    println!("{}/{} theorem replicas pass", report.n_passed(), report.checks.len());
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("failed: {}", failed.join(", "))))
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_scenario_spec(path: &Path) -> Result<ScenarioSpec, CliError> {
    let text = read_text(path)?;
    let parse_err = |line: usize, msg: String| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e: toml::de::Error| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(1);
            parse_err(line, e.message().to_string())
        })
    }
}

fn cmd_simulate(
    scenario: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    trace: bool,
) -> Result<(), CliError> {
    let mut spec = parse_scenario_spec(scenario)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (cfg, manifest) = manifest::load("simulate", config, vec![spec.seed])?;
    let s = generate_scenario(spec.category, &spec.knobs, spec.seed)?;
    let (result, records) = run_scenario_traced(&s, &cfg)?;
    let record = ResultRecord {
        category: spec.category,
        knob: knob_label(&spec.knobs),
        ablation: ablation_label(&cfg.pipeline.ablate),
        seed: spec.seed,
        result,
    };
    emit(out, "result.jsonl", &jsonl(&manifest, &[record]))?;
    if trace {
        emit(out, "trace.jsonl", &jsonl(&manifest, &records))?;
    }
    Ok(())
}

fn cmd_ablate(
    category: &str,
    grid: &str,
    seeds: &str,
    ablate: &[String],
    config: Option<&Path>,
    predictions: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let category: Category = category.parse()?;
    let seeds: Vec<u64> = args::parse_seeds(seeds)?.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let grid = args::parse_grid(grid)?;
    let mut ablations: Vec<Ablation> = vec![Ablation::new()];
    for a in ablate {
        let a = args::parse_ops(a)?;
        if !ablations.contains(&a) {
            ablations.push(a);
        }
    }
    let (cfg, manifest) = manifest::load("ablate", config, seeds.clone())?;
    // Canonical order: grid points as listed, baseline then ablations as
    // listed, seeds ascending.
    let cells = run_ablation(category, &grid, &ablations, &seeds, &cfg)?;

    let records: Vec<ResultRecord> = cells
        .iter()
        .flat_map(|c| {
            c.results.iter().map(|r| ResultRecord {
                category: c.category,
                knob: c.knob_label.clone(),
                ablation: ablation_label(&c.ablation),
                seed: r.seed,
                result: r.clone(),
            })
        })
        .collect();
    let table = records::tsv(&manifest, &aggregate_rows(&cells));
    if out.is_some() {
        emit(out, "results.jsonl", &jsonl(&manifest, &records))?;
    }
    emit(out, "aggregate.tsv", &table)?;

    if predictions {
        let report = prediction_suite(&seeds, &cfg, &SuiteOptions::default())?;
        if out.is_some() {
            emit(out, "predictions.jsonl", &jsonl(&manifest, &report.checks))?;
        }
        for c in &report.checks {
            let stats: Vec<String> = c.statistics.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
            eprintln!("{} {}: {} [{}]", verdict(c.passed), c.id, c.claim, stats.join(" "));
        }
        eprintln!("{}/{} predictions pass over {} seeds", report.passed(), report.checks.len(), report.n_seeds);
        if !report.all_passed() {
            return Err(CliError::CheckFailed("prediction checks failed".into()));
        }
    }
    Ok(())
}

fn cmd_rubric(evidence: Option<&Path>, check: bool, out: Option<&Path>) -> Result<(), CliError> {
    let (text, source) = match evidence {
        Some(p) => (read_text(p)?, p.display().to_string()),
        None => (rubric::BUNDLED_EVIDENCE.to_string(), "bundled".to_string()),
    };
    let matrix = rubric::score(&rubric::parse_evidence(&text)?)?;
    let manifest = RunManifest {
        command: "rubric".into(),
        config_path: Some(source),
        seeds: Vec::new(),
        version: cartography::VERSION.into(),
        config_sha256: manifest::sha256_hex(text.as_bytes()),
    };
    let mut body = format!("{}\n{}", manifest.tsv_comment(), matrix.tsv());
    let mut failure = None;
    if check {
        let chk = rubric::check_reference(&matrix);
        body += &format!("# check {}\n", chk.summary());
        for m in &chk.mismatches {
            body += &format!("# mismatch {m}\n");
        }
        if !chk.passed() {
            failure = Some(chk.summary());
        }
    }
    emit(out, "rubric.tsv", &body)?;
    match failure {
        Some(f) => Err(CliError::CheckFailed(f)),
        None => Ok(()),
    }
}

fn cmd_report(results: &Path, metrics: &[String], out: Option<&Path>) -> Result<(), CliError> {
    let text = read_text(results)?;
    let (manifest, records) =
        records::parse_results(&text).map_err(|e| CliError::Usage(format!("{}: {e}", results.display())))?;
    for m in metrics {
        if !cartography::harness::ScenarioResult::METRICS.contains(&m.as_str()) {
            return Err(CliError::Parameter(format!("unknown metric `{m}`")));
        }
    }
    let rows: Vec<AblationRow> = records::aggregate(&records)
        .into_iter()
        .filter(|r| metrics.is_empty() || metrics.contains(&r.metric))
        .collect();
    let manifest = manifest.unwrap_or_else(|| RunManifest {
        command: "report".into(),
        config_path: None,
        seeds: Vec::new(),
        version: cartography::VERSION.into(),
        config_sha256: String::new(),
    });
    emit(out, "aggregate.tsv", &records::tsv(&manifest, &rows))
}
