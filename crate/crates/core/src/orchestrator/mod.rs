//! The adaptive loop: propose definitions, solve the strengthened formula,
//! learn from refutations, and fall back to the base solver.

mod fixtures;
mod query;

pub use fixtures::chain_fixture;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::instantiate::{
    add_triggers, apply_instantiations, apply_instantiations_inline, definition_axiom, make_exclusion_clause,
    merge_instantiations, patterns_from_candidates, quantifier_sites, ExclusionClause, Instantiation, TriggerPattern,
};
use crate::llm::{build_trigger_prompt, parse_trigger_response, Completer, HistoryRecord, Outcome, Transcript, TranscriptEntry};
use crate::preprocess::{rewrite_formula, separate_components, Component};
use crate::smtlib::{print_script, Script, Term};
use crate::solver::{solve, Model, SolveOutcome, SolverConfig, Verdict};

use query::{query_component, Exchange};

/// Iteration count N, total seconds T and per-solve seconds τ₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    pub max_iters: usize,
    pub total_s: f64,
    /// Defaults to min(24, T / (N + 1)).
    pub tau_s: Option<f64>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_iters: 1, total_s: 120.0, tau_s: None }
    }
}

impl Budgets {
    pub fn tau(&self) -> f64 {
        self.tau_s.unwrap_or_else(|| (self.total_s / (self.max_iters as f64 + 1.0)).min(24.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    /// Ask for trigger patterns once per run and attach them.
    pub triggers: bool,
    /// Beta-reduce definitions at call sites instead of define-fun.
    pub inline: bool,
    /// Corrective re-queries per component and iteration.
    pub requeries: usize,
    /// Check every learned clause against its refuted definitions.
    pub check_exclusions: bool,
    /// Write each solved script here.
    pub emit_steps: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Options { triggers: false, inline: false, requeries: 2, check_exclusions: false, emit_steps: None }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    pub budgets: Budgets,
    pub solver: SolverConfig,
    pub options: Options,
}

/// Outcome of one applied definition set, as kept in the history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Refinement {
    Refuted,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub history: Vec<(Vec<Instantiation>, Refinement)>,
    pub learned: Vec<ExclusionClause>,
    pub iter: usize,
    pub start: Instant,
    pub budgets: Budgets,
}

impl SessionState {
    pub fn new(budgets: Budgets) -> Self {
        SessionState { history: Vec::new(), learned: Vec::new(), iter: 0, start: Instant::now(), budgets }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    fn remaining_s(&self) -> f64 {
        self.budgets.total_s - self.elapsed().as_secs_f64()
    }

    fn history_records(&self) -> Vec<HistoryRecord> {
        self.history
            .iter()
            .map(|(insts, r)| HistoryRecord {
                instantiations: insts.clone(),
                outcome: match r {
                    Refinement::Refuted => Outcome::Refuted,
                    Refinement::Timeout => Outcome::Timeout,
                },
            })
            .collect()
    }
}

/// Appends a history entry; a refutation also learns its exclusion clause.
pub fn record_outcome(state: &mut SessionState, insts: Vec<Instantiation>, outcome: Refinement) {
    if outcome == Refinement::Refuted {
        state.learned.push(make_exclusion_clause(&insts));
    }
    state.history.push((insts, outcome));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalVerdict {
    Sat,
    Unsat,
    Unknown,
}

impl FinalVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            FinalVerdict::Sat => "sat",
            FinalVerdict::Unsat => "unsat",
            FinalVerdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LlmInstantiated,
    Fallback,
    Baseline,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::LlmInstantiated => "llm_instantiated",
            Provenance::Fallback => "fallback",
            Provenance::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub instantiations: Vec<Instantiation>,
    pub triggers: usize,
    pub verdict: Option<Verdict>,
    /// accepted, refuted, timeout, repeat or none
    pub outcome: String,
    pub llm_s: f64,
    pub solve_s: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalResult {
    pub verdict: FinalVerdict,
    pub provenance: Provenance,
    /// Back-end verdict behind the final answer, e.g. timeout vs unknown.
    pub backend: Verdict,
    /// Set when the back-end found φ ∧ learned unsat: evidence, not a verdict.
    pub evidence: Option<String>,
    pub instantiations: Vec<Instantiation>,
    pub learned: Vec<String>,
    pub trace: Vec<IterationRecord>,
    pub wall_s: f64,
}

/// Append-only JSON-lines sink shared between threads.
pub struct JsonLines {
    out: Mutex<BufWriter<File>>,
}

impl JsonLines {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(JsonLines { out: Mutex::new(BufWriter::new(File::create(path)?)) })
    }

    pub fn append(&self, value: &impl Serialize) -> std::io::Result<()> {
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        serde_json::to_writer(&mut *out, value)?;
        out.write_all(b"\n")?;
        out.flush()
    }
}

/// Where a run reports: the LLM transcript and the iteration trace.
#[derive(Default, Clone, Copy)]
pub struct Sinks<'a> {
    pub transcript: Option<&'a Transcript>,
    pub trace: Option<&'a JsonLines>,
}

impl Sinks<'_> {
    fn trace(&self, value: &impl Serialize) {
        if let Some(t) = self.trace {
            if let Err(e) = t.append(value) {
                tracing::warn!("trace write failed: {e}");
            }
        }
    }

    fn transcript(&self, exchanges: &[Exchange], outcome: Outcome) {
        let Some(t) = self.transcript else { return };
        for ex in exchanges {
            let tag = if ex.usable { outcome } else { Outcome::Invalid };
            if let Err(e) = t.append(&TranscriptEntry::new(&ex.prompt, &ex.completion, tag)) {
                tracing::warn!("transcript write failed: {e}");
            }
        }
    }
}

/// Smallest budget worth starting a solver for.
const MIN_SOLVE_S: f64 = 0.05;
/// Kept free at the end of the session for the solver to be reaped.
const REAP_MARGIN_S: f64 = 0.5;

/// Runs the loop on `script` and returns the final verdict. Failures of
/// the model or the solver never abort the run; they end up in the trace
/// and the run continues or falls back.
pub fn adaptive_solve(script: &Script, config: &SessionConfig, completer: &dyn Completer, sinks: Sinks) -> FinalResult {
    let mut state = SessionState::new(config.budgets);
    let mut trace = Vec::new();
    let tau = config.budgets.tau();

    let rewritten = rewrite_formula(script);
    let components = separate_components(&rewritten);
    let (residue, targets): (Vec<&Component>, Vec<&Component>) = components.iter().partition(|c| c.is_residue());
    let residue: Vec<Term> = residue.iter().flat_map(|c| c.assertions.iter().cloned()).collect();
    let env = rewritten.env();
    let mut triggers: Option<Vec<TriggerPattern>> = None;

    while state.iter < config.budgets.max_iters && state.remaining_s() > MIN_SOLVE_S && !targets.is_empty() {
        state.iter += 1;
        let mut rec = IterationRecord {
            iter: state.iter,
            instantiations: Vec::new(),
            triggers: 0,
            verdict: None,
            outcome: "none".into(),
            llm_s: 0.0,
            solve_s: 0.0,
            notes: Vec::new(),
        };
        let llm_start = Instant::now();
        let history = state.history_records();
        let replies: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = targets
                .iter()
                .map(|c| {
                    let (residue, history) = (&residue, &history);
                    s.spawn(move || query_component(c, residue, history, completer, config.options.requeries))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("query thread")).collect()
        });
        if config.options.triggers && triggers.is_none() {
            triggers = Some(query_triggers(&rewritten, completer, sinks, &mut rec.notes));
        }
        rec.llm_s = llm_start.elapsed().as_secs_f64();
        let exchanges: Vec<Exchange> = replies.iter().flat_map(|r| r.exchanges.iter().cloned()).collect();
        rec.notes.extend(replies.iter().flat_map(|r| r.notes.iter().cloned()));

        let per_component: Vec<Vec<Instantiation>> = replies.into_iter().map(|r| r.instantiations).collect();
        let merged = match merge_instantiations(&per_component, &env) {
            Ok(m) => m,
            Err(e) => {
                rec.notes.push(format!("merge failed: {e}"));
                Vec::new()
            }
        };
        if merged.is_empty() {
            sinks.transcript(&exchanges, Outcome::Invalid);
            sinks.trace(&rec);
            trace.push(rec);
            continue;
        }
        rec.instantiations = merged.clone();
        if state.history.iter().any(|(h, _)| *h == merged) {
            rec.outcome = "repeat".into();
            rec.notes.push("definition set already tried; not applied again".into());
            sinks.transcript(&exchanges, Outcome::Invalid);
            sinks.trace(&rec);
            trace.push(rec);
            continue;
        }

        let applied = if config.options.inline {
            apply_instantiations_inline(&rewritten, &merged)
        } else {
            apply_instantiations(&rewritten, &merged)
        };
        let mut inst_script = match applied {
            Ok(s) => s,
            Err(e) => {
                rec.notes.push(format!("apply failed: {e}"));
                sinks.transcript(&exchanges, Outcome::Invalid);
                sinks.trace(&rec);
                trace.push(rec);
                continue;
            }
        };
        if let Some(t) = &triggers {
            let (annotated, warnings) = add_triggers(&inst_script, t);
            rec.triggers = t.len() - warnings.len();
            rec.notes.extend(warnings.iter().map(|w| w.to_string()));
            inst_script = annotated;
        }
        let inst_script = inst_script.with_query(true);
        emit_step(&config.options, &format!("iter-{}.smt2", state.iter), &inst_script);

        let budget = tau.min(state.remaining_s());
        let solve_start = Instant::now();
        let outcome = run_solver(&inst_script, &config.solver.with_timeout(budget.max(MIN_SOLVE_S)), &mut rec.notes);
        rec.verdict = Some(outcome.verdict.clone());
        let refinement = match &outcome.verdict {
            Verdict::Sat => {
                let check_budget = tau.min(state.remaining_s()).max(MIN_SOLVE_S);
                match soundness_check(script, &merged, outcome.model.as_ref(), &config.solver.with_timeout(check_budget)) {
                    Ok(()) => {
                        rec.notes.push("soundness check passed".into());
                        rec.solve_s = solve_start.elapsed().as_secs_f64();
                        rec.outcome = "accepted".into();
                        sinks.transcript(&exchanges, Outcome::Accepted);
                        sinks.trace(&rec);
                        trace.push(rec);
                        let result = FinalResult {
                            verdict: FinalVerdict::Sat,
                            provenance: Provenance::LlmInstantiated,
                            backend: Verdict::Sat,
                            evidence: None,
                            instantiations: merged,
                            learned: state.learned.iter().map(|c| c.term.to_string()).collect(),
                            trace,
                            wall_s: state.elapsed().as_secs_f64(),
                        };
                        sinks.trace(&result_record(&result));
                        return result;
                    }
                    Err(why) => {
                        rec.notes.push(format!("soundness check did not pass: {why}"));
                        Refinement::Timeout
                    }
                }
            }
            Verdict::Unsat => Refinement::Refuted,
            _ => Refinement::Timeout,
        };
        rec.solve_s = solve_start.elapsed().as_secs_f64();
        if refinement == Refinement::Refuted && config.options.check_exclusions {
            let check = check_exclusion(script, &merged, &config.solver.with_timeout(tau));
            rec.notes.push(format!("exclusion check: {check}"));
        }
        record_outcome(&mut state, merged, refinement);
        let (tag, name) = match refinement {
            Refinement::Refuted => (Outcome::Refuted, "refuted"),
            Refinement::Timeout => (Outcome::Timeout, "timeout"),
        };
        rec.outcome = name.into();
        sinks.transcript(&exchanges, tag);
        sinks.trace(&rec);
        trace.push(rec);
    }

    // the fallback gets what is left of T, at least τ₁, but never more
    // than T + τ₁ overall
    let elapsed = state.elapsed().as_secs_f64();
    let ceiling = config.budgets.total_s + tau - elapsed - REAP_MARGIN_S;
    let budget = (config.budgets.total_s - elapsed).max(tau).min(ceiling).max(MIN_SOLVE_S);
    let triggers = triggers.unwrap_or_default();
    let mut result = fallback_with(script, &state.learned, &triggers, &config.solver.with_timeout(budget), &config.options);
    result.trace = trace;
    result.wall_s = state.elapsed().as_secs_f64();
    sinks.trace(&result_record(&result));
    result
}

fn result_record(r: &FinalResult) -> serde_json::Value {
    serde_json::json!({
        "result": r.verdict,
        "provenance": r.provenance,
        "backend": r.backend,
        "evidence": r.evidence,
        "instantiations": r.instantiations,
        "learned": r.learned.len(),
        "wall_s": r.wall_s,
    })
}

/// Runs the back-end on `script` plus every learned clause. A back-end
/// unsat is reported as unsat only when nothing was learned; otherwise the
/// clauses may be what made it unsat, and the answer is unknown with the
/// refutation kept as evidence.
pub fn fallback_solve(script: &Script, learned: &[ExclusionClause], solver: &SolverConfig) -> FinalResult {
    fallback_with(script, learned, &[], solver, &Options::default())
}

fn fallback_with(
    script: &Script,
    learned: &[ExclusionClause],
    triggers: &[TriggerPattern],
    solver: &SolverConfig,
    options: &Options,
) -> FinalResult {
    let start = Instant::now();
    let mut augmented = script.clone();
    let mut notes = Vec::new();
    if !triggers.is_empty() {
        // locators refer to the rewritten script
        let rewritten = rewrite_formula(script);
        let (annotated, warnings) = add_triggers(&rewritten, triggers);
        if warnings.is_empty() {
            augmented = annotated;
        } else {
            notes.extend(warnings.iter().map(|w| w.to_string()));
        }
    }
    for clause in learned {
        augmented.push_assertion(clause.term.clone());
    }
    let augmented = augmented.with_query(false);
    emit_step(options, "fallback.smt2", &augmented);
    let outcome = run_solver(&augmented, solver, &mut notes);
    let provenance = if learned.is_empty() { Provenance::Baseline } else { Provenance::Fallback };
    let (verdict, evidence) = match (&outcome.verdict, learned.is_empty()) {
        (Verdict::Sat, _) => (FinalVerdict::Sat, None),
        (Verdict::Unsat, true) => (FinalVerdict::Unsat, None),
        (Verdict::Unsat, false) => (
            FinalVerdict::Unknown,
            Some(format!("unsat together with {} learned exclusion clause(s)", learned.len())),
        ),
        _ => (FinalVerdict::Unknown, None),
    };
    for n in &notes {
        tracing::info!("{n}");
    }
    FinalResult {
        verdict,
        provenance,
        backend: outcome.verdict,
        evidence,
        instantiations: Vec::new(),
        learned: learned.iter().map(|c| c.term.to_string()).collect(),
        trace: Vec::new(),
        wall_s: start.elapsed().as_secs_f64(),
    }
}

fn run_solver(script: &Script, solver: &SolverConfig, notes: &mut Vec<String>) -> SolveOutcome {
    match solve(script, solver) {
        Ok(o) => {
            if let Verdict::SolverError(msg) = &o.verdict {
                notes.push(format!("solver error: {msg}"));
            }
            o
        }
        Err(e) => {
            notes.push(e.to_string());
            SolveOutcome {
                verdict: Verdict::SolverError(e.to_string()),
                model: None,
                wall_time: Duration::ZERO,
                stdout: String::new(),
                stderr: String::new(),
                killed: false,
                pid: 0,
            }
        }
    }
}

fn emit_step(options: &Options, name: &str, script: &Script) {
    if let Some(dir) = &options.emit_steps {
        let written = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(name), print_script(script)));
        if let Err(e) = written {
            tracing::warn!("could not write {name}: {e}");
        }
    }
}

fn query_triggers(script: &Script, completer: &dyn Completer, sinks: Sinks, notes: &mut Vec<String>) -> Vec<TriggerPattern> {
    let sites = quantifier_sites(script);
    let terms: Vec<Term> = sites.iter().map(|s| s.term.clone()).collect();
    let Ok(prompt) = build_trigger_prompt(&terms) else { return Vec::new() };
    let completion = match completer.complete(&prompt) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("trigger query: {e}"));
            return Vec::new();
        }
    };
    let parsed = parse_trigger_response(&completion.text);
    let tag = if parsed.is_ok() { Outcome::Accepted } else { Outcome::Invalid };
    sinks.transcript(&[Exchange { prompt, completion, usable: true }], tag);
    match parsed {
        Ok(cands) => {
            let (patterns, warnings) = patterns_from_candidates(&cands, &sites, &script.env());
            notes.extend(warnings.iter().map(|w| w.to_string()));
            patterns
        }
        Err(e) => {
            notes.push(format!("trigger reply unusable: {e}"));
            Vec::new()
        }
    }
}

/// Model-restriction test: the original script with the definitions
/// applied and every constant and remaining function pinned to its model
/// value must still be sat.
pub fn soundness_check(
    original: &Script,
    insts: &[Instantiation],
    model: Option<&Model>,
    solver: &SolverConfig,
) -> Result<(), String> {
    let mut pinned = insts.to_vec();
    let mut constants = Vec::new();
    if let Some(model) = model {
        let open: BTreeMap<_, _> = original
            .declarations()
            .filter(|s| !insts.iter().any(|i| i.function == s.name))
            .map(|s| (s.name.clone(), s))
            .collect();
        for def in model.definitions() {
            let Some(sig) = open.get(&def.signature.name) else { continue };
            if def.signature.arg_sorts != sig.arg_sorts || def.signature.ret_sort != sig.ret_sort {
                continue;
            }
            if def.params.is_empty() {
                constants.push(Term::eq(Term::Var(def.signature.name.clone()), def.body.clone()));
            } else {
                pinned.push(Instantiation {
                    function: def.signature.name.clone(),
                    params: def.params.clone(),
                    ret_sort: def.signature.ret_sort.clone(),
                    body: def.body.clone(),
                });
            }
        }
    }
    let mut restricted = apply_instantiations(original, &pinned).map_err(|e| e.to_string())?;
    for c in constants {
        restricted.push_assertion(c);
    }
    let outcome = solve(&restricted.with_query(false), solver).map_err(|e| e.to_string())?;
    match outcome.verdict {
        Verdict::Sat => Ok(()),
        v => Err(format!("restricted original is {v}")),
    }
}

/// Checks that `original ∧ ψ ∧ definitions-as-axioms` is unsat, i.e. that
/// the clause learned from `insts` excludes exactly them. Returns the
/// back-end verdict.
pub fn check_exclusion(original: &Script, insts: &[Instantiation], solver: &SolverConfig) -> Verdict {
    let mut s = original.clone();
    s.push_assertion(make_exclusion_clause(insts).term);
    for i in insts {
        s.push_assertion(definition_axiom(i));
    }
    match solve(&s.with_query(false), solver) {
        Ok(o) => o.verdict,
        Err(e) => Verdict::SolverError(e.to_string()),
    }
}
