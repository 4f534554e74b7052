//! Batch runs over a manifest or a directory of scripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use aquaforte_core::benchgen::{BenchManifest, Expected};
use aquaforte_core::llm::{Completer, Transcript};
use aquaforte_core::orchestrator::{adaptive_solve, FinalResult, FinalVerdict, Sinks};
use aquaforte_core::solver::{solve, Verdict};
use serde::Serialize;

use crate::config::RunConfig;
use crate::fixtures::read_script;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchInput {
    pub path: PathBuf,
    /// Path shown in reports, relative to the batch root.
    pub name: String,
    pub family: String,
    pub expected: Option<Expected>,
}

/// Inputs named by `path`: a manifest file, a directory holding
/// `manifest.json`, a directory of `.smt2` files (searched recursively), or
/// a single script. Sorted by name.
pub fn collect_inputs(path: &Path) -> Result<Vec<BatchInput>> {
    let mut inputs = if path.is_dir() {
        let manifest = path.join("manifest.json");
        if manifest.is_file() {
            from_manifest(&manifest)?
        } else {
            let mut files = Vec::new();
            find_scripts(path, &mut files).with_context(|| format!("listing {}", path.display()))?;
            files
                .into_iter()
                .map(|f| {
                    let rel = f.strip_prefix(path).unwrap_or(&f).to_path_buf();
                    let family = rel
                        .parent()
                        .map(|p| p.to_string_lossy().into_owned())
                        .filter(|p| !p.is_empty())
                        .unwrap_or_else(|| "-".into());
                    BatchInput { name: rel.to_string_lossy().into_owned(), path: f, family, expected: None }
                })
                .collect()
        }
    } else if path.extension().is_some_and(|e| e == "json") {
        from_manifest(path)?
    } else {
        vec![BatchInput {
            path: path.to_path_buf(),
            name: path.to_string_lossy().into_owned(),
            family: "-".into(),
            expected: None,
        }]
    };
    inputs.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(inputs)
}

fn from_manifest(path: &Path) -> Result<Vec<BatchInput>> {
    let manifest = BenchManifest::load(path).with_context(|| format!("loading {}", path.display()))?;
    let root = path.parent().unwrap_or(Path::new("."));
    Ok(manifest
        .instances
        .into_iter()
        .map(|e| BatchInput {
            path: root.join(&e.file),
            name: e.file.to_string_lossy().into_owned(),
            family: e.family,
            expected: Some(e.expected),
        })
        .collect())
}

fn find_scripts(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            find_scripts(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "smt2") {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineRun {
    pub verdict: Verdict,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub file: String,
    pub family: String,
    pub expected: Option<Expected>,
    pub result: Option<FinalResult>,
    pub baseline: Option<BaselineRun>,
    /// Disagreements with the manifest or between the two runs.
    pub flags: Vec<String>,
    pub error: Option<String>,
}

impl Row {
    pub fn verdict(&self) -> Option<FinalVerdict> {
        self.result.as_ref().map(|r| r.verdict)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counts {
    pub sat: usize,
    pub sat_s: f64,
    pub unsat: usize,
    pub unsat_s: f64,
    pub unknown: usize,
    pub errors: usize,
}

impl Counts {
    fn add(&mut self, verdict: Option<&str>, wall_s: f64) {
        match verdict {
            Some("sat") => {
                self.sat += 1;
                self.sat_s += wall_s;
            }
            Some("unsat") => {
                self.unsat += 1;
                self.unsat_s += wall_s;
            }
            Some(_) => self.unknown += 1,
            None => self.errors += 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BatchReport {
    pub rows: Vec<Row>,
    /// Pipeline counts per family; the key `all` sums every family.
    pub pipeline: BTreeMap<String, Counts>,
    /// Baseline counts per family, in comparison mode.
    pub baseline: Option<BTreeMap<String, Counts>>,
    pub flagged: usize,
    pub errors: usize,
}

pub struct BatchOptions<'a> {
    pub config: &'a RunConfig,
    pub completer: &'a dyn Completer,
    pub transcript: Option<&'a Transcript>,
    pub compare: bool,
    pub jobs: usize,
}

/// Runs every input on a pool of `jobs` workers. Failures are recorded in
/// their row; the batch itself never fails.
pub fn run_batch(inputs: &[BatchInput], opts: &BatchOptions) -> BatchReport {
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<Row>>> = Mutex::new(vec![None; inputs.len()]);
    let jobs = opts.jobs.max(1).min(inputs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= inputs.len() {
                    break;
                }
                let row = run_one(&inputs[i], opts);
                rows.lock().expect("row table poisoned")[i] = Some(row);
            });
        }
    });
    let rows: Vec<Row> = rows.into_inner().expect("row table poisoned").into_iter().flatten().collect();
    summarize(rows, opts.compare)
}

fn run_one(input: &BatchInput, opts: &BatchOptions) -> Row {
    let mut row = Row {
        file: input.name.clone(),
        family: input.family.clone(),
        expected: input.expected,
        result: None,
        baseline: None,
        flags: Vec::new(),
        error: None,
    };
    let script = match read_script(&input.path) {
        Ok(s) => s,
        Err(e) => {
            tracing::warn!(file = %input.name, "{e:#}");
            row.error = Some(format!("{e:#}"));
            return row;
        }
    };
    let sinks = Sinks { transcript: opts.transcript, trace: None };
    let result = adaptive_solve(&script, &opts.config.session(), opts.completer, sinks);
    tracing::info!(
        file = %input.name,
        verdict = result.verdict.as_str(),
        provenance = result.provenance.as_str(),
        wall_s = result.wall_s,
        "solved"
    );
    let verdict = result.verdict.as_str();
    if let Some(exp) = input.expected {
        if contradicts(exp.as_str(), verdict) {
            row.flags.push(format!("expected {}, got {verdict}", exp.as_str()));
        }
    }
    if opts.compare {
        let start = Instant::now();
        let verdict_b = match solve(&script, &opts.config.solver) {
            Ok(out) => out.verdict,
            Err(e) => Verdict::SolverError(e.to_string()),
        };
        let b = verdict_b.as_str();
        if contradicts(b, verdict) {
            row.flags.push(format!("baseline {b}, pipeline {verdict}"));
        }
        if let Some(exp) = input.expected {
            if contradicts(exp.as_str(), b) {
                row.flags.push(format!("expected {}, baseline {b}", exp.as_str()));
            }
        }
        row.baseline = Some(BaselineRun { verdict: verdict_b, wall_s: start.elapsed().as_secs_f64() });
    }
    for flag in &row.flags {
        tracing::error!(file = %input.name, "MISMATCH: {flag}");
    }
    row.result = Some(result);
    row
}

fn contradicts(a: &str, b: &str) -> bool {
    matches!((a, b), ("sat", "unsat") | ("unsat", "sat"))
}

fn summarize(rows: Vec<Row>, compare: bool) -> BatchReport {
    let mut pipeline: BTreeMap<String, Counts> = BTreeMap::new();
    let mut baseline: BTreeMap<String, Counts> = BTreeMap::new();
    for row in &rows {
        let (v, t) = match &row.result {
            Some(r) => (Some(r.verdict.as_str()), r.wall_s),
            None => (None, 0.0),
        };
        for key in [row.family.as_str(), "all"] {
            pipeline.entry(key.to_string()).or_default().add(v, t);
        }
        if compare {
            let (v, t) = match &row.baseline {
                Some(b) => (Some(undecided_as_unknown(&b.verdict)), b.wall_s),
                None => (None, 0.0),
            };
            for key in [row.family.as_str(), "all"] {
                baseline.entry(key.to_string()).or_default().add(v, t);
            }
        }
    }
    BatchReport {
        flagged: rows.iter().filter(|r| !r.flags.is_empty()).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
        pipeline,
        baseline: compare.then_some(baseline),
    }
}

fn undecided_as_unknown(v: &Verdict) -> &'static str {
    match v {
        Verdict::Sat => "sat",
        Verdict::Unsat => "unsat",
        _ => "unknown",
    }
}

impl BatchReport {
    /// Per-instance table followed by the per-family summary.
    pub fn to_table(&self) -> String {
        let mut header = vec!["file", "family", "expected", "verdict", "provenance", "time(s)"];
        if self.baseline.is_some() {
            header.extend(["baseline", "time(s)"]);
        }
        header.push("flags");
        let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for row in &self.rows {
            let mut cells = vec![
                row.file.clone(),
                row.family.clone(),
                row.expected.map_or("-".into(), |e| e.as_str().into()),
            ];
            match &row.result {
                Some(r) => cells.extend([
                    r.verdict.as_str().into(),
                    r.provenance.as_str().into(),
                    format!("{:.2}", r.wall_s),
                ]),
                None => cells.extend(["error".into(), "-".into(), "-".into()]),
            }
            if self.baseline.is_some() {
                match &row.baseline {
                    Some(b) => cells.extend([b.verdict.as_str().into(), format!("{:.2}", b.wall_s)]),
                    None => cells.extend(["-".into(), "-".into()]),
                }
            }
            let mut flags = row.flags.iter().map(|f| format!("!! {f}")).collect::<Vec<_>>();
            if let Some(e) = &row.error {
                flags.push(e.lines().next().unwrap_or("").to_string());
            }
            cells.push(flags.join("; "));
            lines.push(cells);
        }
        let mut out = align(&lines);
        out.push('\n');
        let mut summary = vec![["run", "family", "SAT", "Time(s)", "UNSAT", "Time(s)", "UNKNOWN", "ERRORS"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()];
        let mut runs = vec![("pipeline", &self.pipeline)];
        if let Some(b) = &self.baseline {
            runs.push(("baseline", b));
        }
        for (run, counts) in runs {
            for (family, c) in counts {
                summary.push(vec![
                    run.to_string(),
                    family.clone(),
                    c.sat.to_string(),
                    format!("{:.2}", c.sat_s),
                    c.unsat.to_string(),
                    format!("{:.2}", c.unsat_s),
                    c.unknown.to_string(),
                    c.errors.to_string(),
                ]);
            }
        }
        out.push_str(&align(&summary));
        if self.flagged > 0 {
            let _ = writeln!(out, "\n!! {} instance(s) disagree with an expected or baseline verdict", self.flagged);
        }
        out
    }
}

fn align(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(|l| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| lines.iter().filter_map(|l| l.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for line in lines {
        let cells: Vec<String> = line.iter().enumerate().map(|(i, s)| format!("{s:<w$}", w = widths[i])).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
