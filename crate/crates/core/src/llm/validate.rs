use std::collections::BTreeSet;

use thiserror::Error;

use super::response::CandidateInstantiation;
use crate::instantiate::Instantiation;
use crate::smtlib::{parse_sort, parse_term, sort_of_with, uninterpreted_symbols, Env, ParseError, Sort, Symbol};

/// Why a candidate was rejected. The `Display` text is written to be sent
/// back to the model as corrective feedback.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("`{0}` is not one of the functions to define")]
    UnknownFunction(String),
    #[error("`{function}` takes {expected} argument(s) but the definition declares {got} parameter(s)")]
    Arity { function: String, expected: usize, got: usize },
    #[error("parameter `{param}` of `{function}` must have sort {expected}, not {got}")]
    ParamSort { function: String, param: String, expected: Sort, got: String },
    #[error("parameter name `{param}` of `{function}` is invalid or repeated")]
    ParamName { function: String, param: String },
    #[error("body of `{function}` is not a valid SMT-LIB term: {error}")]
    Parse { function: String, error: ParseError },
    #[error("body of `{function}` has sort {got} but the function returns {expected}")]
    Sort { function: String, expected: Sort, got: Sort },
    #[error("body of `{function}` uses uninterpreted symbol(s) {symbols}; definitions must be concrete")]
    NonConcrete { function: String, symbols: String },
}

fn valid_param_name(name: &str) -> bool {
    let sym = Symbol::from(name);
    sym.is_simple() && !name.contains('!') && !crate::smtlib::Op::is_reserved(name) && !matches!(name, "true" | "false")
}

/// Checks a candidate against its declared signature in `env` and returns
/// the typed definition.
///
/// Rejects bodies that mention any uninterpreted symbol of `env`, including
/// constants: a definition must not depend on other unknowns of the run.
pub fn validate_candidate(cand: &CandidateInstantiation, env: &Env) -> Result<Instantiation, ValidationError> {
    let function = cand.function.clone();
    let sig = env
        .function(&cand.function)
        .filter(|s| !s.interpreted)
        .ok_or_else(|| ValidationError::UnknownFunction(function.clone()))?;
    if sig.arity() != cand.params.len() {
        return Err(ValidationError::Arity {
            function,
            expected: sig.arity(),
            got: cand.params.len(),
        });
    }
    let mut params = Vec::with_capacity(cand.params.len());
    let mut names = BTreeSet::new();
    for ((name, sort_text), want) in cand.params.iter().zip(&sig.arg_sorts) {
        if !valid_param_name(name) || !names.insert(name.clone()) {
            return Err(ValidationError::ParamName { function, param: name.clone() });
        }
        match parse_sort(sort_text, env) {
            Ok(s) if s == *want => params.push((Symbol::from(name.as_str()), s)),
            _ => {
                return Err(ValidationError::ParamSort {
                    function,
                    param: name.clone(),
                    expected: want.clone(),
                    got: sort_text.clone(),
                })
            }
        }
    }
    let body = parse_term(&cand.body_text, env, &params, Some(&sig.ret_sort))
        .map_err(|error| ValidationError::Parse { function: function.clone(), error })?;
    let got = sort_of_with(&body, env, &params).map_err(|e| ValidationError::Parse {
        function: function.clone(),
        error: ParseError::new(Default::default(), e.into()),
    })?;
    if got != sig.ret_sort {
        return Err(ValidationError::Sort { function, expected: sig.ret_sort.clone(), got });
    }
    let mut unknowns = uninterpreted_symbols(&body, env);
    for (p, _) in &params {
        unknowns.remove(p);
    }
    if !unknowns.is_empty() {
        let symbols = unknowns.iter().map(|s| format!("`{s}`")).collect::<Vec<_>>().join(", ");
        return Err(ValidationError::NonConcrete { function, symbols });
    }
    Ok(Instantiation {
        function: sig.name.clone(),
        params,
        ret_sort: sig.ret_sort.clone(),
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smtlib::parse_script;

    fn env() -> Env {
        parse_script("(declare-fun f (Real) Real)(declare-fun g (Real) Real)(declare-const c Real)(declare-fun k (Int) Int)")
            .unwrap()
            .env()
    }

    fn cand(function: &str, params: &[(&str, &str)], body: &str) -> CandidateInstantiation {
        CandidateInstantiation {
            function: function.into(),
            params: params.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            body_text: body.into(),
            reasoning: String::new(),
            confidence: 0.5,
        }
    }

    #[test]
    fn identity_is_valid() {
        let i = validate_candidate(&cand("f", &[("x", "Real")], "x"), &env()).unwrap();
        assert_eq!(i.to_string(), "(define-fun f ((x Real)) Real x)");
    }

    #[test]
    fn bool_body_rejected() {
        let err = validate_candidate(&cand("f", &[("x", "Real")], "(and x true)"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::Parse { .. }), "{err}");
        let err = validate_candidate(&cand("f", &[("x", "Real")], "(> x 0)"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::Sort { got: Sort::Bool, .. }), "{err}");
    }

    #[test]
    fn uninterpreted_reference_rejected() {
        let err = validate_candidate(&cand("f", &[("x", "Real")], "(g x)"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::NonConcrete { .. }), "{err}");
        let err = validate_candidate(&cand("f", &[("x", "Real")], "(+ x c)"), &env()).unwrap_err();
        assert!(err.to_string().contains("`c`"), "{err}");
        // a parameter shadowing a constant is fine
        assert!(validate_candidate(&cand("f", &[("c", "Real")], "(* 2 c)"), &env()).is_ok());
    }

    #[test]
    fn signature_mismatches() {
        let err = validate_candidate(&cand("f", &[], "1.0"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::Arity { expected: 1, got: 0, .. }));
        let err = validate_candidate(&cand("f", &[("x", "Int")], "x"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::ParamSort { .. }));
        let err = validate_candidate(&cand("zz", &[], "1.0"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::UnknownFunction(_)));
        let err = validate_candidate(&cand("k", &[("n", "Int")], "(/ n 2)"), &env()).unwrap_err();
        assert!(matches!(err, ValidationError::Sort { got: Sort::Real, .. }), "{err}");
    }

    #[test]
    fn int_results_widen_for_real_functions() {
        let i = validate_candidate(&cand("c", &[], "3"), &env()).unwrap();
        assert_eq!(i.body.to_string(), "3.0");
        let i = validate_candidate(&cand("k", &[("n", "Int")], "(+ n 1)"), &env()).unwrap();
        assert_eq!(i.ret_sort, Sort::Int);
    }
}
