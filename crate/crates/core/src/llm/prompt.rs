use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::instantiate::Instantiation;
use crate::preprocess::Component;
use crate::smtlib::{Quantifier, Term};

/// Version tag of the prompt wording; fixtures recorded against one wording
/// will miss under another, since they are keyed by the rendered text.
pub const PROMPT_VERSION: &str = "aquaforte-prompt/1";

/// Structured query: instruction, data, output format, tips, and a digest of
/// previously tried definitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub instruction: String,
    pub data: String,
    pub output_format: String,
    pub tips: String,
    pub history_digest: String,
}

impl Prompt {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let sections = [
            ("Instruction", &self.instruction),
            ("Data", &self.data),
            ("Output format", &self.output_format),
            ("Tips", &self.tips),
            ("History", &self.history_digest),
        ];
        for (i, (title, body)) in sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let body = if body.is_empty() { "none" } else { body.as_str() };
            let _ = writeln!(out, "### {title}\n{body}");
        }
        out
    }

    /// The same prompt with the problems of a rejected reply added to the
    /// history section, for a corrective re-query.
    pub fn with_correction(&self, problems: &[String]) -> Prompt {
        let mut digest = self.history_digest.clone();
        if !digest.is_empty() {
            digest.push_str("\n\n");
        }
        digest.push_str("Your previous reply could not be used:\n");
        for p in problems {
            let _ = writeln!(digest, "- {p}");
        }
        digest.push_str("Reply again with corrected definitions in the required format.");
        Prompt { history_digest: digest, ..self.clone() }
    }

    /// Hex sha256 of the rendered prompt: the replay fixture key.
    pub fn hash(&self) -> String {
        prompt_hash(&self.render())
    }
}

pub fn prompt_hash(rendered: &str) -> String {
    hex::encode(Sha256::digest(rendered.as_bytes()))
}

/// How a previously applied set of definitions fared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accepted,
    Refuted,
    Timeout,
    Invalid,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Accepted => "accepted",
            Outcome::Refuted => "refuted",
            Outcome::Timeout => "timeout",
            Outcome::Invalid => "invalid",
        }
    }
}

/// One applied definition set and its outcome, as shown to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryRecord {
    pub instantiations: Vec<Instantiation>,
    pub outcome: Outcome,
}

const INSTRUCTION: &str = "\
The SMT-LIB constraints below mention uninterpreted functions whose meaning is fixed only by those \
constraints. Treat them as a mathematics problem: work out which concrete function each constraint \
describes (for example a scaling law, a sum of squares or a recurrence), then write down a closed-form \
definition for every listed function so that all constraints hold at once. Prefer the simplest \
definition that works; polynomials, rational expressions and ite-based case splits are all allowed.";

const TIPS: &str = "\
- Bodies are single SMT-LIB terms in prefix notation, e.g. (+ (* 2 x0) 1).
- Use only the parameters you declare, numeric literals, and the operators + - * / div mod abs ite \
and comparisons; do not call any of the listed uninterpreted functions or invent new symbols.
- Real literals need a decimal point (2.0) or a division ((/ 1 3)); write negative numbers as (- 3.0).
- The parameter list must match the declared argument sorts in order, and the body must have the \
declared return sort.
- Keep definitions total: avoid dividing by an expression that can be zero.";

const TRIGGER_INSTRUCTION: &str = "\
Each quantified formula below is instantiated by the solver through pattern matching on ground \
terms. Propose trigger patterns that let the solver find the instances it needs: terms built from \
function applications that together mention every bound variable of their quantifier.";

const TRIGGER_TIPS: &str = "\
- A pattern is one or more SMT-LIB terms; write several terms in one string for a multi-pattern, \
e.g. \"(f x) (g y)\".
- Every pattern must contain an application of an uninterpreted function and, taken together, its \
terms must mention all bound variables of the quantifier.
- Bare variables and terms built only from arithmetic operators are not valid patterns.";

/// Prompt asking for one definition per function of `component`.
///
/// `residue` holds the ground assertions shared by all components; they
/// are shown as context. `history` entries are restricted to this
/// component's functions; entries touching none of them are omitted.
pub fn build_instantiation_prompt(component: &Component, residue: &[Term], history: &[HistoryRecord]) -> Prompt {
    assert!(!component.functions.is_empty(), "instantiation prompt needs at least one function");
    let mut data = String::from("Uninterpreted functions:\n");
    for f in &component.functions {
        let sig = component.env.function(f.as_str()).expect("component env holds its functions");
        let _ = writeln!(data, "{}", sig.to_declaration());
    }
    data.push_str("\nConstraints:\n");
    for a in &component.assertions {
        let _ = writeln!(data, "(assert {a})");
    }
    if !residue.is_empty() {
        data.push_str("\nShared ground constraints:\n");
        for a in residue {
            let _ = writeln!(data, "(assert {a})");
        }
    }

    let names: Vec<&str> = component.functions.iter().map(|s| s.as_str()).collect();
    let mut output_format = format!(
        "Reply with one JSON object with exactly {} key{} ({}), one per function. Each value is an object\n",
        names.len(),
        if names.len() == 1 { "" } else { "s" },
        names.join(", ")
    );
    output_format.push_str(
        "{\"params\": [[\"<name>\", \"<Sort>\"], ...], \"body\": \"<SMT-LIB term>\", \
\"reasoning\": \"<why the definition satisfies the constraints>\", \"confidence\": <number between 0 and 1>}\n",
    );
    output_format.push_str("Example for a function (declare-fun h (Real) Real):\n");
    output_format.push_str(
        "{\"h\": {\"params\": [[\"x0\", \"Real\"]], \"body\": \"(* 3.0 x0)\", \"reasoning\": \"...\", \"confidence\": 0.8}}",
    );

    let mut digest = String::new();
    let mut timed_out = false;
    for rec in history {
        let own: Vec<&Instantiation> = rec
            .instantiations
            .iter()
            .filter(|i| component.functions.contains(&i.function))
            .collect();
        if own.is_empty() {
            continue;
        }
        if digest.is_empty() {
            digest.push_str("These definitions were already tried; do not propose them again:\n");
        }
        for i in own {
            let _ = writeln!(digest, "{i} → {}", rec.outcome.as_str());
        }
        timed_out |= rec.outcome == Outcome::Timeout;
    }
    if timed_out {
        digest.push_str(
            "Definitions marked timeout made the solver run out of time: avoid expensive forms such as \
high-degree polynomials, nested divisions and deep ite chains.\n",
        );
    }

    Prompt {
        instruction: INSTRUCTION.to_string(),
        data: data.trim_end().to_string(),
        output_format,
        tips: TIPS.to_string(),
        history_digest: digest.trim_end().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trigger prompt needs at least one universally quantified formula")]
pub struct NoQuantifiers;

/// Prompt asking for trigger patterns for each universal quantifier in
/// `quantified` (indexed by position).
pub fn build_trigger_prompt(quantified: &[Term]) -> Result<Prompt, NoQuantifiers> {
    let mut data = String::new();
    let mut any = false;
    for (i, q) in quantified.iter().enumerate() {
        let Term::Quant(Quantifier::Forall, vars, body) = q else { continue };
        any = true;
        let bound: Vec<String> = vars.iter().map(|(v, _)| v.to_string()).collect();
        let _ = writeln!(data, "Quantifier {i}: {q}");
        let _ = writeln!(data, "  bound variables: {}", bound.join(", "));
        let cands = candidate_terms(body, vars.iter().map(|(v, _)| v));
        if !cands.is_empty() {
            let shown: Vec<String> = cands.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(data, "  candidate terms: {}", shown.join(", "));
        }
    }
    if !any {
        return Err(NoQuantifiers);
    }
    Ok(Prompt {
        instruction: TRIGGER_INSTRUCTION.to_string(),
        data: data.trim_end().to_string(),
        output_format: "Reply with a JSON list with one entry per quantifier: \
[{\"quantifier\": <index>, \"patterns\": [\"<SMT-LIB term(s)>\", ...]}]. Every pattern string must \
mention all bound variables of its quantifier."
            .to_string(),
        tips: TRIGGER_TIPS.to_string(),
        history_digest: String::new(),
    })
}

/// Function applications under `body` that mention a bound variable, in
/// first-occurrence order and without duplicates.
fn candidate_terms<'a>(body: &Term, bound: impl Iterator<Item = &'a crate::smtlib::Symbol>) -> Vec<Term> {
    let bound: Vec<_> = bound.cloned().collect();
    let mut out: Vec<Term> = Vec::new();
    body.visit(&mut |t| {
        if let Term::App(..) = t {
            if t.free_vars().iter().any(|v| bound.contains(v)) && !out.contains(t) {
                out.push(t.clone());
            }
        }
    });
    out
}
