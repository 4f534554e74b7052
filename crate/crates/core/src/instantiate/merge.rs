use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::Instantiation;
use crate::smtlib::{substitute, Env, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    /// Components are disjoint, so this means partitioning went wrong.
    #[error("internal invariant violated: `{0}` is defined by more than one component")]
    Duplicate(Symbol),
    #[error("definition of `{0}` does not match its declaration")]
    Signature(Symbol),
}

/// Canonical parameter names `{prefix}0, {prefix}1, …` that no symbol of
/// `env` uses.
fn canonical_prefix(env: &Env) -> &'static str {
    ["x", "arg", "p_"]
        .into_iter()
        .find(|p| !env.functions().any(|f| f.name.as_str().strip_prefix(p).is_some_and(|r| r.parse::<u32>().is_ok())))
        .unwrap_or("x")
}

/// Renames parameters to the canonical scheme, substituting in the body.
pub(crate) fn canonicalize(inst: &Instantiation, prefix: &str) -> Instantiation {
    let params: Vec<(Symbol, crate::smtlib::Sort)> = inst
        .params
        .iter()
        .enumerate()
        .map(|(i, (_, s))| (Symbol::new(format!("{prefix}{i}")), s.clone()))
        .collect();
    let map: BTreeMap<Symbol, Term> = inst
        .params
        .iter()
        .zip(&params)
        .map(|((old, _), (new, _))| (old.clone(), Term::Var(new.clone())))
        .collect();
    Instantiation {
        function: inst.function.clone(),
        body: substitute(&inst.body, &map),
        params,
        ret_sort: inst.ret_sort.clone(),
    }
}

/// Combines per-component definitions into one set ordered by function
/// name, with parameters renamed canonically and signatures re-checked
/// against the global symbol table.
pub fn merge_instantiations(per_component: &[Vec<Instantiation>], env: &Env) -> Result<Vec<Instantiation>, MergeError> {
    let prefix = canonical_prefix(env);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for inst in per_component.iter().flatten() {
        if !seen.insert(inst.function.clone()) {
            return Err(MergeError::Duplicate(inst.function.clone()));
        }
        let sig = env
            .function(inst.function.as_str())
            .filter(|s| !s.interpreted)
            .ok_or_else(|| MergeError::Signature(inst.function.clone()))?;
        let arg_sorts: Vec<_> = inst.params.iter().map(|(_, s)| s.clone()).collect();
        if sig.arg_sorts != arg_sorts || sig.ret_sort != inst.ret_sort {
            return Err(MergeError::Signature(inst.function.clone()));
        }
        out.push(canonicalize(inst, prefix));
    }
    out.sort_by(|a, b| a.function.cmp(&b.function));
    Ok(out)
}
