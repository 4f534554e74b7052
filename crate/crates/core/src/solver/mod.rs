//! Back-end SMT solvers run as subprocesses under a wall-clock budget.

mod model;
mod process;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::smtlib::{print_script, Env, Script};

pub use model::{parse_model, Model, ModelEntry, ModelError};
pub use process::{live_children, live_in_groups, set_process_limit};

pub const Z3_ENV: &str = "AQUAFORTE_Z3";
pub const CVC5_ENV: &str = "AQUAFORTE_CVC5";

/// Extra time granted past the budget for the solver to notice its own
/// limit and print a status before we kill it.
const KILL_GRACE: Duration = Duration::from_millis(200);

/// Written as `z3`, `cvc5`, or a path to any other solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum SolverKind {
    Z3,
    Cvc5,
    /// Any SMT-LIB 2 solver taking the script path as its last argument.
    Custom(PathBuf),
}

impl SolverKind {
    pub fn name(&self) -> String {
        match self {
            SolverKind::Z3 => "z3".into(),
            SolverKind::Cvc5 => "cvc5".into(),
            SolverKind::Custom(p) => p.display().to_string(),
        }
    }
}

impl From<String> for SolverKind {
    fn from(s: String) -> Self {
        match s.as_str() {
            "z3" => SolverKind::Z3,
            "cvc5" => SolverKind::Cvc5,
            _ => SolverKind::Custom(PathBuf::from(s)),
        }
    }
}

impl From<SolverKind> for String {
    fn from(k: SolverKind) -> String {
        k.name()
    }
}

impl std::str::FromStr for SolverKind {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(SolverKind::from(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub solver: SolverKind,
    /// Appended after the default flags.
    pub flags: Vec<String>,
    /// Replaces the default flags entirely when set.
    pub default_flags: Option<Vec<String>>,
    pub timeout_s: f64,
    pub memory_mib: Option<u64>,
    pub scratch_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver: SolverKind::Z3,
            flags: Vec::new(),
            default_flags: None,
            timeout_s: 24.0,
            memory_mib: None,
            scratch_dir: None,
        }
    }
}

impl SolverConfig {
    pub fn new(solver: SolverKind, timeout_s: f64) -> Self {
        SolverConfig { solver, timeout_s, ..Default::default() }
    }

    pub fn with_timeout(&self, timeout_s: f64) -> Self {
        SolverConfig { timeout_s, ..self.clone() }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s.max(0.0))
    }

    /// The binary to run: the env override, else the name looked up on PATH.
    pub fn binary(&self) -> Result<PathBuf, DriverError> {
        let (var, name) = match &self.solver {
            SolverKind::Z3 => (Z3_ENV, "z3"),
            SolverKind::Cvc5 => (CVC5_ENV, "cvc5"),
            SolverKind::Custom(p) => return resolve(p).ok_or_else(|| DriverError::NotFound(p.display().to_string())),
        };
        if let Some(p) = std::env::var_os(var).filter(|p| !p.is_empty()) {
            let p = PathBuf::from(p);
            return resolve(&p).ok_or_else(|| DriverError::NotFound(format!("{} (from {var})", p.display())));
        }
        resolve(Path::new(name)).ok_or_else(|| DriverError::NotFound(name.into()))
    }

    /// Command-line arguments, without the script path.
    pub fn args(&self, get_model: bool) -> Vec<String> {
        let ms = (self.timeout_s * 1000.0).ceil().max(1.0) as u64;
        let mut args = match &self.default_flags {
            Some(f) => f.clone(),
            None => match self.solver {
                SolverKind::Z3 => {
                    let mut a = vec!["-smt2".to_string(), format!("-t:{ms}")];
                    if let Some(m) = self.memory_mib {
                        a.push(format!("-memory:{m}"));
                    }
                    a
                }
                SolverKind::Cvc5 => {
                    let mut a = vec!["--lang=smt2".to_string(), format!("--tlimit={ms}")];
                    if get_model {
                        a.push("--produce-models".into());
                    }
                    a
                }
                SolverKind::Custom(_) => Vec::new(),
            },
        };
        args.extend(self.flags.iter().cloned());
        args
    }
}

fn resolve(p: &Path) -> Option<PathBuf> {
    if p.components().count() > 1 || p.is_absolute() {
        return p.is_file().then(|| p.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(p)).find(|c| c.is_file())
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("solver binary not found: {0}")]
    NotFound(String),
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    #[serde(rename = "error")]
    SolverError(String),
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown => "unknown",
            Verdict::Timeout => "timeout",
            Verdict::SolverError(_) => "error",
        }
    }

    pub fn is_decided(&self) -> bool {
        matches!(self, Verdict::Sat | Verdict::Unsat)
    }

    /// Equal when both are decided; any two undecided verdicts count as
    /// the same answer.
    pub fn same_decision(&self, other: &Verdict) -> bool {
        match (self.is_decided(), other.is_decided()) {
            (true, true) => self == other,
            (a, b) => a == b,
        }
    }

    /// True when one verdict is sat and the other unsat.
    pub fn contradicts(&self, other: &Verdict) -> bool {
        matches!((self, other), (Verdict::Sat, Verdict::Unsat) | (Verdict::Unsat, Verdict::Sat))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::SolverError(m) => write!(f, "error: {m}"),
            v => f.write_str(v.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub verdict: Verdict,
    /// Present only for Sat answers to scripts that ask for a model.
    pub model: Option<Model>,
    pub wall_time: Duration,
    pub stdout: String,
    pub stderr: String,
    pub killed: bool,
    /// Process id of the solver, which is also its process group id.
    pub pid: u32,
}

static RUN_IDS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Runs `script` through the configured solver. Every failure inside the
/// solver is folded into the verdict; only a missing binary or a failure to
/// spawn is an error.
pub fn solve(script: &Script, config: &SolverConfig) -> Result<SolveOutcome, DriverError> {
    solve_text(&print_script(script), script.has_get_model(), &script.env(), config)
}

/// Like [`solve`] for script text that was already printed. `env` resolves
/// symbols in the returned model.
pub fn solve_text(text: &str, get_model: bool, env: &Env, config: &SolverConfig) -> Result<SolveOutcome, DriverError> {
    let binary = config.binary()?;
    let mut builder = tempfile::Builder::new();
    builder.prefix("aquaforte-").suffix(".smt2");
    let file = match &config.scratch_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            builder.tempfile_in(dir)?
        }
        None => builder.tempfile()?,
    };
    std::fs::write(file.path(), text)?;
    let mut args = config.args(get_model);
    args.push(file.path().display().to_string());

    let rlimit = match config.solver {
        SolverKind::Z3 => None,
        _ => config.memory_mib,
    };
    let run = process::run(&binary, &args, config.timeout() + KILL_GRACE, rlimit)?;
    let (verdict, model) = interpret(&run, config.timeout(), get_model, env);
    let run_id = RUN_IDS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    tracing::debug!(run_id, solver = %config.solver.name(), verdict = %verdict, secs = run.wall_time.as_secs_f64(), "solve");
    tracing::trace!(run_id, stdout = %run.stdout, stderr = %run.stderr, "raw solver output");
    Ok(SolveOutcome {
        verdict,
        model,
        wall_time: run.wall_time,
        stdout: run.stdout,
        stderr: run.stderr,
        killed: run.killed,
        pid: run.pid,
    })
}

fn interpret(run: &process::Run, budget: Duration, get_model: bool, env: &Env) -> (Verdict, Option<Model>) {
    if run.killed {
        return (Verdict::Timeout, None);
    }
    let mut early_error = None;
    let mut status = None;
    for (i, line) in run.stdout.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("(error") {
            early_error.get_or_insert_with(|| line.to_string());
            continue;
        }
        let token = line.split_whitespace().next().unwrap_or("");
        if matches!(token, "sat" | "unsat" | "unknown" | "timeout") {
            status = Some((i, token, line));
            break;
        }
    }
    if let Some(e) = early_error {
        return (Verdict::SolverError(e), None);
    }
    let Some((idx, token, line)) = status else {
        let msg = if run.stderr.trim().is_empty() {
            format!("no status in output (exit {:?}): {}", run.exit_code, run.stdout.trim())
        } else {
            run.stderr.trim().to_string()
        };
        return (Verdict::SolverError(msg), None);
    };
    let verdict = match token {
        "sat" => Verdict::Sat,
        "unsat" => Verdict::Unsat,
        "timeout" => Verdict::Timeout,
        _ if line.to_ascii_lowercase().contains("timeout") => Verdict::Timeout,
        // solvers that give up exactly at the limit say unknown
        _ if run.wall_time.as_secs_f64() >= 0.95 * budget.as_secs_f64() => Verdict::Timeout,
        _ => Verdict::Unknown,
    };
    let model = if verdict == Verdict::Sat && get_model {
        let rest: String = run.stdout.lines().skip(idx + 1).collect::<Vec<_>>().join("\n");
        match parse_model(&rest, env) {
            Ok(m) => Some(m),
            Err(e) => {
                tracing::warn!("model not available: {e}");
                None
            }
        }
    } else {
        None
    };
    (verdict, model)
}
