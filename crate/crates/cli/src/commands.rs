//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aquaforte_core::benchgen::{gen_suite, MfdParams, SosGrid, SuiteConfig};
use aquaforte_core::llm::{completer_from_config, Completer, LiveClient, LiveConfig, LlmConfig, Recorder, ReplayStore, Transcript, API_KEY_VAR};
use aquaforte_core::orchestrator::{adaptive_solve, FinalVerdict, JsonLines, Sinks};
use aquaforte_core::preprocess::{rewrite_formula, separate_components};
use aquaforte_core::smtlib::print_script;
use aquaforte_core::solver::{set_process_limit, SolverKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::batch::{collect_inputs, run_batch, BatchOptions};
use crate::config::RunConfig;
use crate::fixtures::{fixtures_from_manifest, read_script};

pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;
pub const EXIT_UNKNOWN: i32 = 0;

#[derive(Debug, Parser)]
#[command(name = "aquaforte", version, about = "Model-guided instantiation for quantified SMT problems")]
pub struct Cli {
    /// More console output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only errors on the console.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Also write structured JSON-lines logs to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub log_json: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one script. Exit status: 10 sat, 20 unsat, 0 unknown, 1 error.
    Solve(SolveCmd),
    /// Rewrite a script and split it into independent components.
    Preprocess(PreprocessCmd),
    /// Generate the SOS and/or MFD benchmark families with a manifest.
    Generate(GenerateCmd),
    /// Run the pipeline over a manifest or directory and report.
    Bench(BenchCmd),
    /// Capture model replies into a replay fixture.
    Record(RecordCmd),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Back-end: z3, cvc5 or a path to another SMT-LIB solver.
    #[arg(long)]
    pub solver: Option<SolverKind>,
    /// Extra solver flag (repeatable).
    #[arg(long = "solver-flag", value_name = "FLAG", allow_hyphen_values = true)]
    pub solver_flags: Vec<String>,
    /// Seconds for stand-alone back-end runs (baseline).
    #[arg(long, value_name = "SECONDS")]
    pub timeout: Option<f64>,
    /// Memory cap for solver processes.
    #[arg(long, value_name = "MIB")]
    pub memory: Option<u64>,
    /// Maximum refinement iterations N.
    #[arg(long, value_name = "N")]
    pub iters: Option<usize>,
    /// Total session budget T in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub budget: Option<f64>,
    /// Per-solve budget in seconds; defaults to min(24, T/(N+1)).
    #[arg(long, value_name = "SECONDS")]
    pub tau: Option<f64>,
    /// Answer prompts from this replay fixture.
    #[arg(long, value_name = "FILE", conflicts_with = "live")]
    pub replay: Option<PathBuf>,
    /// Query a live OpenAI-compatible endpoint (key from AQUAFORTE_API_KEY).
    #[arg(long)]
    pub live: bool,
    /// Model name for live queries.
    #[arg(long)]
    pub model: Option<String>,
    /// Base URL for live queries.
    #[arg(long, value_name = "URL")]
    pub base_url: Option<String>,
    /// Ask for trigger patterns and attach them.
    #[arg(long)]
    pub triggers: bool,
    /// Substitute definitions at call sites instead of define-fun.
    #[arg(long)]
    pub inline: bool,
    /// Corrective re-queries after an unusable reply.
    #[arg(long, value_name = "K")]
    pub requeries: Option<usize>,
    /// Verify every learned clause against its refuted definitions.
    #[arg(long)]
    pub check_exclusions: bool,
    /// Write each instantiated script to this directory.
    #[arg(long, value_name = "DIR")]
    pub emit_steps: Option<PathBuf>,
    /// Append prompt/response pairs to this JSON-lines file.
    #[arg(long, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
    /// Write per-iteration records to this JSON-lines file.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = RunConfig::load_or_default(self.config.as_deref())?;
        if let Some(s) = &self.solver {
            c.solver.solver = s.clone();
        }
        c.solver.flags.extend(self.solver_flags.iter().cloned());
        if let Some(t) = self.timeout {
            c.solver.timeout_s = t;
        }
        if self.memory.is_some() {
            c.solver.memory_mib = self.memory;
        }
        if let Some(n) = self.iters {
            c.budgets.max_iters = n;
        }
        if let Some(t) = self.budget {
            c.budgets.total_s = t;
        }
        if self.tau.is_some() {
            c.budgets.tau_s = self.tau;
        }
        if let Some(p) = &self.replay {
            c.llm = Some(LlmConfig::Replay { path: p.clone() });
        }
        if self.live || self.model.is_some() || self.base_url.is_some() {
            let mut live = match c.llm.take() {
                Some(LlmConfig::Live(l)) => l,
                Some(LlmConfig::Replay { .. }) if !self.live => bail!("--model and --base-url need live mode"),
                _ => LiveConfig::default(),
            };
            if let Some(m) = &self.model {
                live.model = m.clone();
            }
            if let Some(u) = &self.base_url {
                live.base_url = u.clone();
            }
            c.llm = Some(LlmConfig::Live(live));
        }
        c.options.triggers |= self.triggers;
        c.options.inline |= self.inline;
        c.options.check_exclusions |= self.check_exclusions;
        if let Some(k) = self.requeries {
            c.options.requeries = k;
        }
        if self.emit_steps.is_some() {
            c.options.emit_steps = self.emit_steps.clone();
        }
        if self.transcript.is_some() {
            c.output.transcript = self.transcript.clone();
        }
        if self.trace.is_some() {
            c.output.trace = self.trace.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SolveCmd {
    pub file: PathBuf,
    /// Print the full result as JSON instead of the verdict line.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct PreprocessCmd {
    pub file: PathBuf,
    /// Receives rewritten.smt2, one script per component and components.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Sos,
    Mfd,
    All,
}

#[derive(Debug, Args)]
pub struct GenerateCmd {
    #[arg(value_enum)]
    pub family: Family,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SOS: numbers of variables.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    pub ns: Vec<usize>,
    /// SOS: numbers of squared sources.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4])]
    pub ms: Vec<usize>,
    /// SOS: instances per (n, m) cell.
    #[arg(long, default_value_t = 50)]
    pub per_cell: usize,
    /// SOS: maximum total degree of each source.
    #[arg(long, default_value_t = 2)]
    pub max_degree: u32,
    /// SOS: coefficients are drawn from [-B, B].
    #[arg(long, default_value_t = 5)]
    pub coef_bound: i64,
    /// MFD: instances per category.
    #[arg(long, default_value_t = 150)]
    pub per_category: usize,
    /// MFD: ground unrolling steps in the recursive category.
    #[arg(long, default_value_t = 3)]
    pub recursion_depth: usize,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    /// A manifest, a generated suite directory, or a directory of scripts.
    pub input: PathBuf,
    /// Also run the plain back-end on every instance.
    #[arg(long)]
    pub compare: bool,
    /// Concurrent instances.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    /// Write the JSON report here.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct RecordCmd {
    /// Scripts to solve with live queries.
    pub files: Vec<PathBuf>,
    /// Fixture file; an existing one is extended.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Build first-iteration fixtures from manifest witnesses, offline.
    #[arg(long, value_name = "MANIFEST", conflicts_with = "files")]
    pub from_witnesses: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

impl Cli {
    pub fn console_filter(&self, configured: Option<&str>) -> String {
        if self.quiet {
            return "error".into();
        }
        match self.verbose {
            0 => configured.unwrap_or("info").into(),
            1 => "debug".into(),
            _ => "trace".into(),
        }
    }

    /// Runs the command and returns the process exit status.
    pub fn run(self) -> Result<i32> {
        let configured = match &self.command {
            Command::Solve(c) => Some(c.run.resolve()?),
            Command::Bench(c) => Some(c.run.resolve()?),
            Command::Record(c) => Some(c.run.resolve()?),
            _ => None,
        };
        let log = self.log_json.clone().or_else(|| configured.as_ref().and_then(|c| c.output.log.clone()));
        let filter = self.console_filter(configured.as_ref().and_then(|c| c.output.verbosity.as_deref()));
        crate::logging::init(&filter, log.as_deref())?;
        match self.command {
            Command::Solve(c) => solve_cmd(&c, &configured.expect("resolved above")),
            Command::Bench(c) => bench_cmd(&c, &configured.expect("resolved above")),
            Command::Record(c) => record_cmd(&c, &configured.expect("resolved above")),
            Command::Preprocess(c) => preprocess_cmd(&c),
            Command::Generate(c) => generate_cmd(&c),
        }
    }
}

/// The configured completer, or an empty store when no model is set up.
fn completer(config: &RunConfig) -> Result<Box<dyn Completer>> {
    match &config.llm {
        Some(llm) => Ok(completer_from_config(llm)?),
        None => {
            tracing::warn!("no model configured; every run reduces to the plain back-end");
            Ok(Box::new(ReplayStore::default()))
        }
    }
}

fn open_transcript(config: &RunConfig) -> Result<Option<Transcript>> {
    Ok(match &config.output.transcript {
        Some(p) => Some(Transcript::open(p)?),
        None => None,
    })
}

fn solve_cmd(cmd: &SolveCmd, config: &RunConfig) -> Result<i32> {
    let script = read_script(&cmd.file)?;
    let completer = completer(config)?;
    let transcript = open_transcript(config)?;
    let trace = match &config.output.trace {
        Some(p) => Some(JsonLines::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let sinks = Sinks { transcript: transcript.as_ref(), trace: trace.as_ref() };
    let result = adaptive_solve(&script, &config.session(), completer.as_ref(), sinks);
    tracing::info!(
        verdict = result.verdict.as_str(),
        provenance = result.provenance.as_str(),
        backend = result.backend.as_str(),
        iterations = result.trace.len(),
        wall_s = result.wall_s,
        "done"
    );
    if cmd.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        println!("{}", result.verdict.as_str());
        for inst in &result.instantiations {
            println!("{inst}");
        }
        if let Some(e) = &result.evidence {
            println!("; {e}");
        }
    }
    Ok(match result.verdict {
        FinalVerdict::Sat => EXIT_SAT,
        FinalVerdict::Unsat => EXIT_UNSAT,
        FinalVerdict::Unknown => EXIT_UNKNOWN,
    })
}

fn preprocess_cmd(cmd: &PreprocessCmd) -> Result<i32> {
    let script = read_script(&cmd.file)?;
    let rewritten = rewrite_formula(&script);
    let components = separate_components(&rewritten);
    std::fs::create_dir_all(&cmd.out_dir).with_context(|| format!("creating {}", cmd.out_dir.display()))?;
    write(&cmd.out_dir.join("rewritten.smt2"), &print_script(&rewritten))?;
    let mut manifest = Vec::new();
    for c in &components {
        let name = if c.is_residue() { "residue.smt2".to_string() } else { format!("component-{}.smt2", c.id) };
        write(&cmd.out_dir.join(&name), &print_script(&c.to_script(&rewritten)))?;
        let mut entry = c.manifest_json();
        entry["file"] = name.clone().into();
        manifest.push(entry);
        let funcs: Vec<&str> = c.functions.iter().map(|f| f.as_str()).collect();
        println!("{name}: {} assertion(s) [{}]", c.assertions.len(), funcs.join(" "));
    }
    write(&cmd.out_dir.join("components.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(0)
}

fn generate_cmd(cmd: &GenerateCmd) -> Result<i32> {
    let sos = matches!(cmd.family, Family::Sos | Family::All).then(|| SosGrid {
        ns: cmd.ns.clone(),
        ms: cmd.ms.clone(),
        per_cell: cmd.per_cell,
        max_degree: cmd.max_degree,
        coef_bound: cmd.coef_bound,
    });
    if let Some(g) = &sos {
        if let Some(bad) = g.ns.iter().find(|&&n| n == 0 || n > 3) {
            bail!("SOS variable counts must be 1 to 3, got {bad}");
        }
        if let Some(bad) = g.ms.iter().find(|&&m| m == 0) {
            bail!("SOS source counts must be positive, got {bad}");
        }
    }
    let mfd = matches!(cmd.family, Family::Mfd | Family::All)
        .then(|| MfdParams { per_category: cmd.per_category, recursion_depth: cmd.recursion_depth });
    let manifest = gen_suite(&SuiteConfig { seed: cmd.seed, sos, mfd }, &cmd.out)
        .with_context(|| format!("writing to {}", cmd.out.display()))?;
    println!("{} instances written to {}", manifest.instances.len(), cmd.out.display());
    Ok(0)
}

fn bench_cmd(cmd: &BenchCmd, config: &RunConfig) -> Result<i32> {
    let inputs = collect_inputs(&cmd.input)?;
    let completer = completer(config)?;
    let transcript = open_transcript(config)?;
    if config.output.trace.is_some() {
        tracing::warn!("the trace file is per-run; bench rows carry each instance's trace instead");
    }
    set_process_limit(cmd.jobs.max(1) * 2);
    let report = run_batch(
        &inputs,
        &BatchOptions {
            config,
            completer: completer.as_ref(),
            transcript: transcript.as_ref(),
            compare: cmd.compare,
            jobs: cmd.jobs,
        },
    );
    print!("{}", report.to_table());
    if let Some(p) = &cmd.report {
        write(p, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(0)
}

fn record_cmd(cmd: &RecordCmd, config: &RunConfig) -> Result<i32> {
    let existing = if cmd.out.is_file() { ReplayStore::load(&cmd.out)? } else { ReplayStore::default() };
    if let Some(manifest) = &cmd.from_witnesses {
        let (store, covered) = fixtures_from_manifest(manifest)?;
        let mut responses = existing.responses().clone();
        responses.extend(store.responses().clone());
        ReplayStore::new(responses).save(&cmd.out)?;
        println!("{covered} instance(s) with witnesses, {} prompt(s) recorded", store.len());
        return Ok(0);
    }
    if cmd.files.is_empty() {
        bail!("nothing to record: give scripts or --from-witnesses");
    }
    let live = match &config.llm {
        Some(LlmConfig::Live(l)) => l.clone(),
        _ => bail!("recording needs live mode (--live or an [llm] section with mode = \"live\")"),
    };
    let key = std::env::var(API_KEY_VAR).with_context(|| format!("{API_KEY_VAR} is not set"))?;
    let recorder = Recorder::extending(LiveClient::new(live, key), existing);
    let transcript = open_transcript(config)?;
    for file in &cmd.files {
        let script = read_script(file)?;
        let sinks = Sinks { transcript: transcript.as_ref(), trace: None };
        let result = adaptive_solve(&script, &config.session(), &recorder, sinks);
        println!("{}: {} ({})", file.display(), result.verdict.as_str(), result.provenance.as_str());
        recorder.store().save(&cmd.out)?;
    }
    Ok(0)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
