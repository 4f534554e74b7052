use std::collections::BTreeMap;

use thiserror::Error;

use super::Instantiation;
use crate::preprocess::inline;
use crate::smtlib::{Command, Definition, Script, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("`{0}` is not declared in the script")]
    NotFound(Symbol),
    #[error("`{0}` is already defined in the script")]
    AlreadyDefined(Symbol),
}

fn check(script: &Script, insts: &[Instantiation]) -> Result<Vec<Instantiation>, ApplyError> {
    let mut todo = Vec::new();
    for inst in insts {
        let defined = script.definitions().find(|d| d.signature.name == inst.function);
        match defined {
            // already applied: nothing to do
            Some(d) if *d == inst.to_definition() => continue,
            Some(_) => return Err(ApplyError::AlreadyDefined(inst.function.clone())),
            None => {}
        }
        if !script.declarations().any(|s| s.name == inst.function) {
            return Err(ApplyError::NotFound(inst.function.clone()));
        }
        todo.push(inst.clone());
    }
    Ok(todo)
}

/// Replaces each instantiated `declare-fun` by the matching `define-fun` at
/// the same position. Every model of the result is a model of `script`.
pub fn apply_instantiations(script: &Script, insts: &[Instantiation]) -> Result<Script, ApplyError> {
    let todo = check(script, insts)?;
    let by_name: BTreeMap<&Symbol, &Instantiation> = todo.iter().map(|i| (&i.function, i)).collect();
    let commands = script
        .commands
        .iter()
        .map(|c| match c {
            Command::DeclareFun(sig) => match by_name.get(&sig.name) {
                Some(inst) => Command::DefineFun(inst.to_definition()),
                None => c.clone(),
            },
            other => other.clone(),
        })
        .collect();
    Ok(Script::new(commands))
}

/// Like [`apply_instantiations`] but beta-reduces the definitions at every
/// call site and drops the instantiated declarations.
pub fn apply_instantiations_inline(script: &Script, insts: &[Instantiation]) -> Result<Script, ApplyError> {
    let todo = check(script, insts)?;
    let defs: BTreeMap<Symbol, Definition> = todo.iter().map(|i| (i.function.clone(), i.to_definition())).collect();
    let commands = script
        .commands
        .iter()
        .filter_map(|c| match c {
            Command::DeclareFun(sig) if defs.contains_key(&sig.name) => None,
            Command::Assert(t) => Some(Command::Assert(inline(t, &defs))),
            Command::GetValue(ts) => Some(Command::GetValue(ts.iter().map(|t| inline(t, &defs)).collect())),
            other => Some(other.clone()),
        })
        .collect();
    Ok(Script::new(commands))
}
