//! Building replay stores for scripted multi-iteration runs.

use serde_json::{Map, Value};

use super::query::query_component;
use super::{Refinement, SessionState};
use crate::instantiate::merge_instantiations;
use crate::llm::{build_instantiation_prompt, ReplayStore};
use crate::preprocess::{rewrite_formula, separate_components};
use crate::smtlib::{Script, Term};

/// A replay store that answers iteration `i` of a run on `script` with
/// `steps[i]`, assuming every earlier step was refuted. Each step is a JSON
/// object keyed by function name in the reply schema; it is split per
/// component, and components a step does not mention get no fixture.
pub fn chain_fixture(script: &Script, steps: &[Value]) -> ReplayStore {
    let rewritten = rewrite_formula(script);
    let env = rewritten.env();
    let components = separate_components(&rewritten);
    let residue: Vec<Term> = components.iter().filter(|c| c.is_residue()).flat_map(|c| c.assertions.clone()).collect();
    let mut store = ReplayStore::default();
    let mut state = SessionState::new(Default::default());
    for step in steps {
        let history = state.history_records();
        let mut per_component = Vec::new();
        for c in components.iter().filter(|c| !c.is_residue()) {
            let part: Map<String, Value> = step
                .as_object()
                .into_iter()
                .flatten()
                .filter(|(k, _)| c.functions.iter().any(|f| f.as_str() == k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            if part.is_empty() {
                continue;
            }
            store.insert(&build_instantiation_prompt(c, &residue, &history), Value::Object(part).to_string());
            per_component.push(query_component(c, &residue, &history, &store, 0).instantiations);
        }
        let merged = merge_instantiations(&per_component, &env).unwrap_or_default();
        if !merged.is_empty() {
            super::record_outcome(&mut state, merged, Refinement::Refuted);
        }
    }
    store
}
