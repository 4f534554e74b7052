mod common;

use aquaforte_core::llm::{parse_instantiation_response, validate_candidate, CandidateInstantiation};
use aquaforte_core::smtlib::{parse_script, parse_term, sort_of_with, uninterpreted_symbols, Sort, Symbol};
use common::Gen;
use proptest::prelude::*;
use rand::Rng;

const DECLS: &str = "(declare-fun h (Real Real Real Real Int) Real)(declare-fun g (Real) Real)";

fn params() -> Vec<(String, String)> {
    ["x0", "x1", "x2", "x3"]
        .iter()
        .map(|x| (x.to_string(), "Real".to_string()))
        .chain([("n0".to_string(), "Int".to_string())])
        .collect()
}

fn cand(body: String) -> CandidateInstantiation {
    CandidateInstantiation {
        function: "h".into(),
        params: params(),
        body_text: body,
        reasoning: String::new(),
        confidence: 0.5,
    }
}

proptest! {
    #[test]
    fn reply_schema_round_trip(
        function in "[a-z][a-z0-9_]{0,6}",
        names in proptest::collection::vec("[a-z][a-z0-9]{0,3}", 0..4),
        body in "[ -~]{0,40}",
        reasoning in "\\PC{0,40}",
        confidence in 0.0f64..=1.0,
    ) {
        let c = CandidateInstantiation {
            function,
            params: names.into_iter().map(|n| (n, "Real".to_string())).collect(),
            body_text: body,
            reasoning,
            confidence,
        };
        let raw = format!("Sure.\n```json\n{}\n```", serde_json::to_string_pretty(&c.to_json()).unwrap());
        let back = parse_instantiation_response(&raw).unwrap();
        prop_assert_eq!(back, vec![c]);
    }
}

/// The validator accepts a body exactly when it parses under the parameters,
/// has the return sort (Int widens to Real), and mentions no unknowns.
#[test]
fn validator_agrees_with_sort_checker() {
    let script = parse_script(DECLS).unwrap();
    let env = script.env();
    let locals: Vec<(Symbol, Sort)> = params()
        .into_iter()
        .map(|(n, s)| (Symbol::from(n.as_str()), if s == "Int" { Sort::Int } else { Sort::Real }))
        .collect();
    let (mut accepted, mut rejected) = (0, 0);
    for seed in 0..200u64 {
        let mut g = Gen::new(seed);
        g.functions.clear();
        g.quantifiers = seed % 3 == 0;
        let body = if seed < 100 {
            match seed % 4 {
                0 | 1 => g.real(3).to_string(),
                2 => g.int(3).to_string(),
                _ => format!("(+ {} {})", g.real(2), g.int(2)),
            }
        } else {
            let base = g.real(3).to_string();
            match seed % 5 {
                0 => g.boolean(2).to_string(),
                1 => format!("(g {base})"),
                2 => base.replacen("x", "zz", 1),
                3 => {
                    let cut = g.rng.random_range(0..base.len().max(1));
                    format!("{}{}", &base[..cut], &base[(cut + 1).min(base.len())..])
                }
                _ => format!("(+ {base} true)"),
            }
        };
        let verdict = validate_candidate(&cand(body.clone()), &env);
        let oracle = parse_term(&body, &env, &locals, None).ok().and_then(|t| {
            let s = sort_of_with(&t, &env, &locals).ok()?;
            let concrete = uninterpreted_symbols(&t, &env).is_empty();
            Some(concrete && (s == Sort::Real || s == Sort::Int))
        });
        assert_eq!(verdict.is_ok(), oracle == Some(true), "seed {seed}: {body} -> {verdict:?}");
        if seed < 100 {
            assert!(verdict.is_ok(), "well-typed body rejected: {body}");
        }
        if verdict.is_ok() {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    assert!(accepted >= 100 && rejected >= 60, "accepted {accepted}, rejected {rejected}");
}
