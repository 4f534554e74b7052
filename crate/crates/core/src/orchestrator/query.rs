//! Asking the model for one component's definitions, with corrective
//! re-queries on unusable replies.

use crate::instantiate::Instantiation;
use crate::llm::{
    build_instantiation_prompt, parse_instantiation_response, validate_candidate, Completer, Completion, HistoryRecord,
    LlmError, Prompt,
};
use crate::preprocess::Component;
use crate::smtlib::Term;

/// One prompt/reply pair. `usable` is false for replies that were
/// rejected and re-queried.
#[derive(Debug, Clone)]
pub(crate) struct Exchange {
    pub prompt: Prompt,
    pub completion: Completion,
    pub usable: bool,
}

#[derive(Debug, Default)]
pub(crate) struct ComponentReply {
    pub instantiations: Vec<Instantiation>,
    pub exchanges: Vec<Exchange>,
    pub notes: Vec<String>,
}

/// Queries the model for `component`. A reply with any problem is sent back
/// with the problems listed, at most `requeries` times; after that the valid
/// part of the last reply is kept.
pub(crate) fn query_component(
    component: &Component,
    residue: &[Term],
    history: &[HistoryRecord],
    completer: &dyn Completer,
    requeries: usize,
) -> ComponentReply {
    let base = build_instantiation_prompt(component, residue, history);
    let mut reply = ComponentReply::default();
    let mut problems: Vec<String> = Vec::new();
    for attempt in 0..=requeries {
        let prompt = if attempt == 0 { base.clone() } else { base.with_correction(&problems) };
        let completion = match completer.complete(&prompt) {
            Ok(c) => c,
            Err(e) => {
                let label = match e {
                    LlmError::FixtureMissing(_) => "no fixture",
                    _ => "model unavailable",
                };
                reply.notes.push(format!("component {}: {label}: {e}", component.id));
                break;
            }
        };
        problems.clear();
        let mut valid = Vec::new();
        match parse_instantiation_response(&completion.text) {
            Err(e) => problems.push(e.to_string()),
            Ok(cands) if cands.is_empty() => problems.push("the reply defines none of the requested functions".into()),
            Ok(cands) => {
                for cand in &cands {
                    match validate_candidate(cand, &component.env) {
                        Ok(inst) if component.functions.contains(&inst.function) => valid.push(inst),
                        Ok(inst) => problems.push(format!("`{}` is not one of the functions to define", inst.function)),
                        Err(e) => problems.push(e.to_string()),
                    }
                }
            }
        }
        let usable = problems.is_empty() || attempt == requeries;
        reply.exchanges.push(Exchange { prompt, completion, usable });
        reply.instantiations = valid;
        if problems.is_empty() {
            break;
        }
        reply.notes.push(format!("component {} attempt {}: {}", component.id, attempt + 1, problems.join("; ")));
    }
    reply
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ReplayStore;
    use crate::preprocess::{rewrite_formula, separate_components};
    use crate::smtlib::parse_script;

    fn component() -> Component {
        let s = parse_script("(declare-fun f (Real) Real)(assert (forall ((x Real)) (= (f (* 2 x)) (* 2 x))))").unwrap();
        separate_components(&rewrite_formula(&s)).remove(0)
    }

    const GOOD: &str = r#"{"f": {"params": [["x", "Real"]], "body": "x"}}"#;
    const BAD: &str = r#"{"f": {"params": [["x", "Real"]], "body": "(and x true)"}}"#;

    #[test]
    fn first_reply_valid() {
        let c = component();
        let mut store = ReplayStore::default();
        store.insert(&build_instantiation_prompt(&c, &[], &[]), GOOD);
        let r = query_component(&c, &[], &[], &store, 2);
        assert_eq!(r.instantiations.len(), 1);
        assert_eq!(r.exchanges.len(), 1);
        assert!(r.exchanges[0].usable);
    }

    #[test]
    fn corrective_requery() {
        let c = component();
        let base = build_instantiation_prompt(&c, &[], &[]);
        let mut store = ReplayStore::default();
        store.insert(&base, BAD);
        let bad = parse_instantiation_response(BAD).unwrap();
        let problem = validate_candidate(&bad[0], &c.env).unwrap_err().to_string();
        store.insert(&base.with_correction(&[problem]), GOOD);
        let r = query_component(&c, &[], &[], &store, 2);
        assert_eq!(r.instantiations.len(), 1, "{:?}", r.notes);
        assert_eq!(r.exchanges.iter().map(|e| e.usable).collect::<Vec<_>>(), [false, true]);
    }

    #[test]
    fn requery_budget_is_bounded() {
        struct Always(&'static str, std::sync::atomic::AtomicUsize);
        impl Completer for Always {
            fn complete(&self, _: &Prompt) -> Result<Completion, LlmError> {
                self.1.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                Ok(Completion { text: self.0.into(), model: "stub".into() })
            }
        }
        let c = component();
        let stub = Always("I cannot solve this.", Default::default());
        let r = query_component(&c, &[], &[], &stub, 2);
        assert!(r.instantiations.is_empty());
        assert_eq!(stub.1.load(std::sync::atomic::Ordering::SeqCst), 3);
        let r = query_component(&c, &[], &[], &ReplayStore::default(), 2);
        assert!(r.exchanges.is_empty() && r.notes[0].contains("no fixture"));
    }
}
