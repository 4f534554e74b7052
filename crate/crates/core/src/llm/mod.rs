//! Prompts, model access, and parsing/validation of model replies.

mod client;
mod prompt;
mod response;
mod validate;

use thiserror::Error;

pub use client::{
    completer_from_config, Completer, Completion, LiveClient, LiveConfig, LlmConfig, Recorder, ReplayStore,
    Transcript, TranscriptEntry, API_KEY_VAR, TEMPERATURE,
};
pub use prompt::{
    build_instantiation_prompt, build_trigger_prompt, prompt_hash, HistoryRecord, NoQuantifiers, Outcome, Prompt,
    PROMPT_VERSION,
};
pub use response::{extract_json, parse_instantiation_response, parse_trigger_response, CandidateInstantiation, TriggerCandidate};
pub use validate::{validate_candidate, ValidationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("fixture missing for prompt {0}")]
    FixtureMissing(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("environment variable {0} is not set")]
    MissingKey(&'static str),
    #[error("{0}")]
    Io(String),
}
