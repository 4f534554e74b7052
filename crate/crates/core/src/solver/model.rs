//! Reading `(get-model)` output from z3 and cvc5.

use std::fmt;

use crate::smtlib::sexp::{read_all, SExpr};
use crate::smtlib::{parse_sort, parse_term, Definition, Env, FunctionSignature, Sort, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelEntry {
    Defined(Definition),
    /// An entry we could not read back, kept as text.
    Opaque { name: Option<Symbol>, text: String },
}

impl ModelEntry {
    pub fn name(&self) -> Option<&Symbol> {
        match self {
            ModelEntry::Defined(d) => Some(&d.signature.name),
            ModelEntry::Opaque { name, .. } => name.as_ref(),
        }
    }
}

impl fmt::Display for ModelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelEntry::Defined(d) => write!(f, "{d}"),
            ModelEntry::Opaque { text, .. } => f.write_str(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Model {
    pub entries: Vec<ModelEntry>,
    pub warnings: Vec<String>,
}

impl Model {
    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.entries.iter().find_map(|e| match e {
            ModelEntry::Defined(d) if d.signature.name.as_str() == name => Some(d),
            _ => None,
        })
    }

    /// The value of a constant.
    pub fn value_of(&self, name: &str) -> Option<&Term> {
        self.get(name).filter(|d| d.params.is_empty()).map(|d| &d.body)
    }

    pub fn definitions(&self) -> impl Iterator<Item = &Definition> {
        self.entries.iter().filter_map(|e| match e {
            ModelEntry::Defined(d) => Some(d),
            _ => None,
        })
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(\n")?;
        for e in &self.entries {
            writeln!(f, "  {e}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("no model block in solver output")]
    Missing,
    #[error("unreadable model block: {0}")]
    Syntax(String),
}

/// Parses the model block that follows a `sat` line. Both the z3
/// `(model ...)` and the bare `( ... )` layouts are accepted. Symbols in
/// bodies are resolved against `env`; entries that do not parse are kept
/// as opaque text with a warning.
pub fn parse_model(output: &str, env: &Env) -> Result<Model, ModelError> {
    let exprs = read_all(output).map_err(|e| ModelError::Syntax(e.to_string()))?;
    let block = exprs
        .iter()
        .find_map(|e| {
            let items = e.as_list()?;
            match items.first() {
                Some(h) if h.as_symbol() == Some("model") => Some(&items[1..]),
                Some(h) if h.as_symbol() == Some("error") => None,
                Some(h) if h.as_list().is_none() => None,
                _ => Some(items),
            }
        })
        .ok_or(ModelError::Missing)?;
    let mut model = Model::default();
    for item in block {
        let text = &output[item.span.0..item.span.1];
        match entry(item, output, env) {
            Ok(d) => model.entries.push(ModelEntry::Defined(d)),
            Err(reason) => {
                let name = item.as_list().and_then(|l| l.get(1)).and_then(|n| n.as_symbol()).map(Symbol::new);
                model.warnings.push(format!("kept model entry as text: {reason}: {text}"));
                model.entries.push(ModelEntry::Opaque { name, text: text.to_string() });
            }
        }
    }
    for w in &model.warnings {
        tracing::warn!("{w}");
    }
    Ok(model)
}

fn entry(item: &SExpr, src: &str, env: &Env) -> Result<Definition, String> {
    let text = |e: &SExpr| &src[e.span.0..e.span.1];
    let items = item.as_list().ok_or("not a list")?;
    let [head, name, params, sort, body] = items else {
        return Err("not a define-fun".into());
    };
    if head.as_symbol() != Some("define-fun") {
        return Err(format!("unsupported entry {}", text(head)));
    }
    let name = Symbol::new(name.as_symbol().ok_or("bad name")?);
    let mut vars: Vec<(Symbol, Sort)> = Vec::new();
    for p in params.as_list().ok_or("bad parameter list")? {
        match p.as_list() {
            Some([v, s]) => {
                let v = v.as_symbol().ok_or("bad parameter")?;
                let s = parse_sort(text(s), env).map_err(|e| e.to_string())?;
                vars.push((Symbol::new(v), s));
            }
            _ => return Err("bad parameter".into()),
        }
    }
    let ret_sort = parse_sort(text(sort), env).map_err(|e| e.to_string())?;
    let body = parse_term(text(body), env, &vars, Some(&ret_sort)).map_err(|e| e.to_string())?;
    Ok(Definition {
        signature: FunctionSignature {
            name,
            arg_sorts: vars.iter().map(|(_, s)| s.clone()).collect(),
            ret_sort,
            interpreted: true,
        },
        params: vars,
        body,
    })
}
