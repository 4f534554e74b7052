//! Run configuration: a TOML file, overridden by command-line flags. Secrets
//! (the API key) only ever come from the environment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aquaforte_core::llm::LlmConfig;
use aquaforte_core::orchestrator::{Budgets, Options, SessionConfig};
use aquaforte_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// JSON-lines iteration trace.
    pub trace: Option<PathBuf>,
    /// JSON-lines prompt/response transcript.
    pub transcript: Option<PathBuf>,
    /// JSON-lines structured log.
    pub log: Option<PathBuf>,
    /// Console log filter, e.g. `info` or `aquaforte_core=debug`.
    pub verbosity: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverConfig,
    /// No model at all means every query goes unanswered and the run
    /// reduces to the fallback.
    pub llm: Option<LlmConfig>,
    pub budgets: Budgets,
    pub options: Options,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if !(b.total_s > 0.0 && b.total_s.is_finite()) {
            bail!("total budget must be positive, got {}", b.total_s);
        }
        if let Some(tau) = b.tau_s {
            if !(tau > 0.0 && tau.is_finite()) {
                bail!("per-solve budget must be positive, got {tau}");
            }
        }
        if !(self.solver.timeout_s > 0.0 && self.solver.timeout_s.is_finite()) {
            bail!("solver timeout must be positive, got {}", self.solver.timeout_s);
        }
        Ok(())
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig { budgets: self.budgets, solver: self.solver.clone(), options: self.options.clone() }
    }
}
