//! Extraction of definitions and trigger patterns from model replies.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::LlmError;

/// One proposed definition, as written by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateInstantiation {
    pub function: String,
    /// `(name, sort)` pairs; sorts are checked during validation.
    pub params: Vec<(String, String)>,
    pub body_text: String,
    pub reasoning: String,
    pub confidence: f64,
}

impl CandidateInstantiation {
    /// The reply-schema form of this candidate (keyed by function name).
    pub fn to_json(&self) -> Value {
        let params: Vec<Value> = self
            .params
            .iter()
            .map(|(n, s)| Value::Array(vec![n.clone().into(), s.clone().into()]))
            .collect();
        serde_json::json!({
            self.function.clone(): {
                "params": params,
                "body": self.body_text,
                "reasoning": self.reasoning,
                "confidence": self.confidence,
            }
        })
    }
}

/// Trigger patterns proposed for one quantifier; `None` means the reply did
/// not say which quantifier, so the patterns are tried against all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerCandidate {
    pub quantifier: Option<usize>,
    pub patterns: Vec<String>,
}

/// The first complete JSON object or array in `raw`, skipping any prose or
/// code-fence markers around it.
pub fn extract_json(raw: &str) -> Option<Value> {
    json_values(raw).into_iter().next()
}

/// Every top-level JSON object or array in `raw`: those inside fenced code
/// blocks first, then the rest in order of appearance.
fn json_values(raw: &str) -> Vec<Value> {
    let mut fenced = Vec::new();
    let mut parts = raw.split("```");
    parts.next();
    while let Some(block) = parts.next() {
        // drop an info string such as `json` on the fence line
        let body = block.split_once('\n').map_or(block, |(_, b)| b);
        fenced.extend(scan(body));
        parts.next();
    }
    let mut out = fenced;
    for v in scan(raw) {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn scan(text: &str) -> Vec<Value> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(off) = text[from..].find(['{', '[']) {
        let start = from + off;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v)) => {
                out.push(v);
                from = start + stream.byte_offset();
            }
            _ => from = start + 1,
        }
    }
    out
}

/// Applies `parse` to each JSON value of the reply and returns the first
/// success, or the first failure when none fits.
fn first_fitting<T>(raw: &str, parse: impl Fn(&Value) -> Result<T, LlmError>) -> Result<T, LlmError> {
    let mut first_err = None;
    for v in json_values(raw) {
        match parse(&v) {
            Ok(t) => return Ok(t),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or_else(|| malformed("no JSON object or list found in the reply")))
}

fn malformed(msg: impl Into<String>) -> LlmError {
    LlmError::Malformed(msg.into())
}

fn text_field(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn confidence(v: Option<&Value>) -> f64 {
    let c = match v {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s.trim().trim_end_matches('%').parse::<f64>().ok().map(|x| {
            if s.trim().ends_with('%') {
                x / 100.0
            } else {
                x
            }
        }),
        _ => None,
    };
    match c {
        Some(x) if x.is_finite() => x.clamp(0.0, 1.0),
        _ => 0.5,
    }
}

fn params(v: Option<&Value>, function: &str) -> Result<Vec<(String, String)>, LlmError> {
    let Some(v) = v else { return Ok(Vec::new()) };
    let items = v
        .as_array()
        .ok_or_else(|| malformed(format!("`params` of `{function}` must be a list")))?;
    items
        .iter()
        .map(|p| match p {
            Value::Array(pair) if pair.len() == 2 => match (&pair[0], &pair[1]) {
                (Value::String(n), Value::String(s)) => Ok((n.clone(), s.clone())),
                _ => Err(malformed(format!("parameter of `{function}` must be [name, sort]"))),
            },
            Value::Object(o) => {
                let name = o.get("name").and_then(Value::as_str);
                let sort = o.get("sort").or_else(|| o.get("type")).and_then(Value::as_str);
                match (name, sort) {
                    (Some(n), Some(s)) => Ok((n.to_string(), s.to_string())),
                    _ => Err(malformed(format!("parameter of `{function}` needs name and sort"))),
                }
            }
            _ => Err(malformed(format!("parameter of `{function}` must be [name, sort]"))),
        })
        .collect()
}

fn candidate(function: String, obj: &Map<String, Value>) -> Result<CandidateInstantiation, LlmError> {
    let body = obj
        .get("body")
        .or_else(|| obj.get("definition"))
        .and_then(text_field)
        .ok_or_else(|| malformed(format!("definition of `{function}` has no `body`")))?;
    Ok(CandidateInstantiation {
        params: params(obj.get("params").or_else(|| obj.get("parameters")), &function)?,
        body_text: body,
        reasoning: obj.get("reasoning").and_then(text_field).unwrap_or_default(),
        confidence: confidence(obj.get("confidence")),
        function,
    })
}

fn named_candidate(v: &Value) -> Result<CandidateInstantiation, LlmError> {
    let obj = v.as_object().ok_or_else(|| malformed("list entries must be objects"))?;
    let name = obj
        .get("function")
        .or_else(|| obj.get("name"))
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("list entry has no `function` name"))?;
    candidate(name.to_string(), obj)
}

/// Parses an instantiation reply.
///
/// Accepted shapes: an object keyed by function name; a list of objects
/// carrying a `function` field; a single such object; or an object whose
/// `definitions`/`instantiations` field is such a list. When a function is
/// defined more than once, the first definition wins.
pub fn parse_instantiation_response(raw: &str) -> Result<Vec<CandidateInstantiation>, LlmError> {
    first_fitting(raw, instantiations_from)
}

fn instantiations_from(json: &Value) -> Result<Vec<CandidateInstantiation>, LlmError> {
    let all = match json {
        Value::Array(items) => items.iter().map(named_candidate).collect::<Result<Vec<_>, _>>()?,
        Value::Object(obj) if obj.contains_key("function") => vec![named_candidate(json)?],
        Value::Object(obj) => {
            let nested = ["definitions", "instantiations"].iter().find_map(|k| obj.get(*k));
            match nested {
                Some(Value::Array(items)) => items.iter().map(named_candidate).collect::<Result<Vec<_>, _>>()?,
                Some(Value::Object(inner)) => keyed(inner)?,
                _ => keyed(obj)?,
            }
        }
        _ => return Err(malformed("expected a JSON object or list")),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(all.len());
    for c in all {
        if seen.insert(c.function.clone()) {
            out.push(c);
        } else {
            tracing::warn!(function = %c.function, "reply defines a function twice; keeping the first");
        }
    }
    Ok(out)
}

fn keyed(obj: &Map<String, Value>) -> Result<Vec<CandidateInstantiation>, LlmError> {
    obj.iter()
        .map(|(name, v)| match v {
            Value::Object(inner) => candidate(name.clone(), inner),
            // a bare body string
            other => match text_field(other) {
                Some(body) => Ok(CandidateInstantiation {
                    function: name.clone(),
                    params: Vec::new(),
                    body_text: body,
                    reasoning: String::new(),
                    confidence: 0.5,
                }),
                None => Err(malformed(format!("definition of `{name}` must be an object"))),
            },
        })
        .collect()
}

/// Parses a trigger reply: a list of pattern strings, or a list of
/// `{"quantifier": i, "patterns": [...]}` objects (also `"pattern": "..."`).
pub fn parse_trigger_response(raw: &str) -> Result<Vec<TriggerCandidate>, LlmError> {
    first_fitting(raw, triggers_from)
}

fn triggers_from(json: &Value) -> Result<Vec<TriggerCandidate>, LlmError> {
    let items = match json {
        Value::Array(items) => items.clone(),
        Value::Object(obj) => match obj.get("triggers").or_else(|| obj.get("patterns")) {
            Some(Value::Array(items)) => items.clone(),
            _ => vec![json.clone()],
        },
        _ => return Err(malformed("expected a JSON list of patterns")),
    };
    let mut loose = Vec::new();
    let mut out = Vec::new();
    for item in &items {
        match item {
            Value::String(s) => loose.push(s.clone()),
            Value::Object(o) => {
                let quantifier = o
                    .get("quantifier")
                    .or_else(|| o.get("index"))
                    .and_then(Value::as_u64)
                    .map(|i| i as usize);
                let patterns = match (o.get("patterns"), o.get("pattern")) {
                    (Some(Value::Array(ps)), _) => ps
                        .iter()
                        .map(|p| p.as_str().map(String::from).ok_or_else(|| malformed("patterns must be strings")))
                        .collect::<Result<Vec<_>, _>>()?,
                    (_, Some(Value::String(p))) => vec![p.clone()],
                    _ => return Err(malformed("trigger entry has no `patterns`")),
                };
                out.push(TriggerCandidate { quantifier, patterns });
            }
            _ => return Err(malformed("trigger entries must be strings or objects")),
        }
    }
    if !loose.is_empty() {
        out.insert(0, TriggerCandidate { quantifier: None, patterns: loose });
    }
    Ok(out)
}
