//! Trigger (`:pattern`) annotations on universal quantifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::llm::TriggerCandidate;
use crate::preprocess::inline;
use crate::smtlib::sexp::read_all;
use crate::smtlib::{
    parse_term, sort_of_with, substitute, Attribute, Command, Env, Quantifier, Script, Sort, Symbol, Term,
};

/// A universal quantifier inside an assertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierSite {
    /// Index into the script's assertion list.
    pub assertion: usize,
    /// Child-index path from the assertion to the quantifier.
    pub path: Vec<usize>,
    /// Variables bound by enclosing binders, outermost first.
    pub outer: Vec<(Symbol, Sort)>,
    pub vars: Vec<(Symbol, Sort)>,
    pub term: Term,
}

/// One multi-pattern for the quantifier at a locator. Pattern variables are
/// named by `bound_names`, positionally matching the binder's variables, so
/// the pattern still applies after the binder is renamed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerPattern {
    pub assertion: usize,
    pub path: Vec<usize>,
    pub bound_names: Vec<Symbol>,
    pub patterns: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerWarning {
    /// The locator no longer points at a matching universal quantifier.
    Stale { assertion: usize, path: Vec<usize> },
    /// The pattern is ill-typed, misses a bound variable, or is not an
    /// application of an uninterpreted function.
    Rejected { assertion: usize, pattern: String, reason: String },
}

impl fmt::Display for TriggerWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriggerWarning::Stale { assertion, path } => {
                write!(f, "stale trigger locator: assertion {assertion}, path {path:?}")
            }
            TriggerWarning::Rejected { assertion, pattern, reason } => {
                write!(f, "trigger {pattern} for assertion {assertion} rejected: {reason}")
            }
        }
    }
}

/// Every universal quantifier of every assertion, in pre-order.
pub fn quantifier_sites(script: &Script) -> Vec<QuantifierSite> {
    let env = script.env();
    let mut out = Vec::new();
    for (i, a) in script.assertions().enumerate() {
        collect_sites(a, i, &mut Vec::new(), &mut Vec::new(), &env, &mut out);
    }
    out
}

fn collect_sites(
    t: &Term,
    assertion: usize,
    path: &mut Vec<usize>,
    scope: &mut Vec<(Symbol, Sort)>,
    env: &Env,
    out: &mut Vec<QuantifierSite>,
) {
    match t {
        Term::Quant(q, vars, body) => {
            if *q == Quantifier::Forall {
                out.push(QuantifierSite {
                    assertion,
                    path: path.clone(),
                    outer: scope.clone(),
                    vars: vars.clone(),
                    term: t.clone(),
                });
            }
            let n = scope.len();
            scope.extend(vars.iter().cloned());
            path.push(0);
            collect_sites(body, assertion, path, scope, env, out);
            path.pop();
            scope.truncate(n);
        }
        Term::Let(bindings, body) => {
            for (i, (_, v)) in bindings.iter().enumerate() {
                path.push(i);
                collect_sites(v, assertion, path, scope, env, out);
                path.pop();
            }
            let n = scope.len();
            for (v, e) in bindings {
                let s = sort_of_with(e, env, scope).unwrap_or(Sort::Real);
                scope.push((v.clone(), s));
            }
            path.push(bindings.len());
            collect_sites(body, assertion, path, scope, env, out);
            path.pop();
            scope.truncate(n);
        }
        Term::Annotated(body, _) => {
            // pattern terms hold no quantifiers worth annotating
            path.push(0);
            collect_sites(body, assertion, path, scope, env, out);
            path.pop();
        }
        _ => {
            for (i, c) in t.children().into_iter().enumerate() {
                path.push(i);
                collect_sites(c, assertion, path, scope, env, out);
                path.pop();
            }
        }
    }
}

/// Parses candidate pattern strings into trigger patterns for `sites`
/// (indexed as in the trigger prompt). Candidates without a quantifier
/// index are tried against every site. Unparseable strings are dropped
/// with a warning.
pub fn patterns_from_candidates(
    candidates: &[TriggerCandidate],
    sites: &[QuantifierSite],
    env: &Env,
) -> (Vec<TriggerPattern>, Vec<TriggerWarning>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for cand in candidates {
        let targets: Vec<&QuantifierSite> = match cand.quantifier {
            Some(i) => sites.get(i).into_iter().collect(),
            None => sites.iter().collect(),
        };
        for text in &cand.patterns {
            for site in &targets {
                let mut locals = site.outer.clone();
                locals.extend(site.vars.iter().cloned());
                let terms: Result<Vec<Term>, String> = match read_all(text) {
                    Ok(exprs) if !exprs.is_empty() => exprs
                        .iter()
                        .map(|e| parse_term(&text[e.span.0..e.span.1], env, &locals, None).map_err(|e| e.to_string()))
                        .collect(),
                    Ok(_) => Err("empty pattern".into()),
                    Err(e) => Err(e.to_string()),
                };
                match terms {
                    Ok(patterns) => out.push(TriggerPattern {
                        assertion: site.assertion,
                        path: site.path.clone(),
                        bound_names: site.vars.iter().map(|(v, _)| v.clone()).collect(),
                        patterns,
                    }),
                    // untargeted patterns are expected to miss some sites
                    Err(_) if cand.quantifier.is_none() => {}
                    Err(reason) => warnings.push(TriggerWarning::Rejected {
                        assertion: site.assertion,
                        pattern: text.clone(),
                        reason,
                    }),
                }
            }
        }
    }
    (out, warnings)
}

fn contains_binder(t: &Term) -> bool {
    let mut found = false;
    t.visit(&mut |s| found |= matches!(s, Term::Quant(..) | Term::Let(..) | Term::Annotated(..)));
    found
}

/// Checks one multi-pattern (already renamed to the binder's variables) and
/// returns it with defined functions expanded.
fn check_pattern(
    patterns: &[Term],
    vars: &[(Symbol, Sort)],
    outer: &[(Symbol, Sort)],
    env: &Env,
    defs: &BTreeMap<Symbol, crate::smtlib::Definition>,
) -> Result<Vec<Term>, String> {
    if patterns.is_empty() {
        return Err("empty pattern".into());
    }
    let mut locals = outer.to_vec();
    locals.extend(vars.iter().cloned());
    let mut mentioned = BTreeSet::new();
    let mut out = Vec::with_capacity(patterns.len());
    for p in patterns {
        let p = inline(p, defs);
        match &p {
            Term::App(head, _) if env.is_uninterpreted(head.as_str()) => {}
            _ => return Err(format!("{p} is not an application of an uninterpreted function")),
        }
        if contains_binder(&p) {
            return Err(format!("{p} contains a binder or annotation"));
        }
        sort_of_with(&p, env, &locals).map_err(|e| e.to_string())?;
        mentioned.extend(p.free_vars());
        out.push(p);
    }
    let missing: Vec<String> = vars
        .iter()
        .filter(|(v, _)| !mentioned.contains(v))
        .map(|(v, _)| v.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(format!("does not mention bound variable(s) {}", missing.join(", ")));
    }
    Ok(out)
}

fn outer_scope(root: &Term, path: &[usize], env: &Env) -> Vec<(Symbol, Sort)> {
    let mut scope: Vec<(Symbol, Sort)> = Vec::new();
    let mut cur = root;
    for &i in path {
        match cur {
            Term::Quant(_, vars, _) => scope.extend(vars.iter().cloned()),
            Term::Let(bindings, _) if i == bindings.len() => {
                for (v, e) in bindings {
                    let s = sort_of_with(e, env, &scope).unwrap_or(Sort::Real);
                    scope.push((v.clone(), s));
                }
            }
            _ => {}
        }
        match cur.children().get(i) {
            Some(c) => cur = c,
            None => break,
        }
    }
    scope
}

/// Attaches `:pattern` annotations to the quantifiers the triggers point
/// at. Stale locators and invalid patterns are skipped with a warning;
/// patterns equal to one already present (after renaming to the binder's
/// variables) are dropped.
pub fn add_triggers(script: &Script, triggers: &[TriggerPattern]) -> (Script, Vec<TriggerWarning>) {
    let env = script.env();
    let defs = script.definition_map();
    let mut out = script.clone();
    let mut warnings = Vec::new();
    let assert_positions: Vec<usize> = out
        .commands
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Command::Assert(_)))
        .map(|(i, _)| i)
        .collect();

    for trig in triggers {
        let stale = || TriggerWarning::Stale { assertion: trig.assertion, path: trig.path.clone() };
        let Some(&cmd_idx) = assert_positions.get(trig.assertion) else {
            warnings.push(stale());
            continue;
        };
        let Command::Assert(root) = &mut out.commands[cmd_idx] else { unreachable!("assert position") };
        let outer = outer_scope(root, &trig.path, &env);
        let Some(Term::Quant(Quantifier::Forall, vars, body)) = root.at_path_mut(&trig.path) else {
            warnings.push(stale());
            continue;
        };
        if vars.len() != trig.bound_names.len() {
            warnings.push(stale());
            continue;
        }
        let rename: BTreeMap<Symbol, Term> = trig
            .bound_names
            .iter()
            .zip(vars.iter())
            .filter(|(a, (b, _))| a != &b)
            .map(|(a, (b, _))| (a.clone(), Term::Var(b.clone())))
            .collect();
        let renamed: Vec<Term> = trig.patterns.iter().map(|p| substitute(p, &rename)).collect();
        let patterns = match check_pattern(&renamed, vars, &outer, &env, &defs) {
            Ok(p) => p,
            Err(reason) => {
                let shown: Vec<String> = trig.patterns.iter().map(|p| p.to_string()).collect();
                warnings.push(TriggerWarning::Rejected {
                    assertion: trig.assertion,
                    pattern: shown.join(" "),
                    reason,
                });
                continue;
            }
        };
        if !matches!(**body, Term::Annotated(..)) {
            let inner = std::mem::replace(&mut **body, Term::Bool(true));
            **body = Term::Annotated(Box::new(inner), Vec::new());
        }
        let Term::Annotated(_, attrs) = &mut **body else { unreachable!("wrapped above") };
        let dup = attrs.iter().any(|a| matches!(a, Attribute::Pattern(ps) if *ps == patterns));
        if !dup {
            attrs.push(Attribute::Pattern(patterns));
        }
    }
    (out, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smtlib::{alpha_equivalent, parse_script, print_script};

    const EXAMPLE: &str = "(declare-fun f (Real) Real)(declare-fun P (Real) Bool)\
        (assert (forall ((x Real)) (and (P (f x)) (> (f x) 0))))";

    fn fx(v: &str) -> Term {
        Term::app("f", vec![Term::var(v)])
    }

    fn trig(v: &str, pattern: Term) -> TriggerPattern {
        TriggerPattern { assertion: 0, path: vec![], bound_names: vec![v.into()], patterns: vec![pattern] }
    }

    #[test]
    fn annotates_quantifier_body() {
        let s = parse_script(EXAMPLE).unwrap();
        let (out, warnings) = add_triggers(&s, &[trig("x", fx("x"))]);
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(
            out.assertions().next().unwrap().to_string(),
            "(forall ((x Real)) (! (and (P (f x)) (> (f x) 0)) :pattern ((f x))))"
        );
        assert!(parse_script(&print_script(&out)).is_ok());
    }

    #[test]
    fn no_triggers_no_change() {
        let s = parse_script(EXAMPLE).unwrap();
        assert_eq!(add_triggers(&s, &[]), (s, vec![]));
    }

    #[test]
    fn alpha_equivalent_patterns_deduplicated() {
        let s = parse_script(EXAMPLE).unwrap();
        let a = trig("x", fx("x"));
        let b = trig("y", fx("y"));
        // the oracle: the two patterns are alpha-equivalent under their binders
        let wrap = |t: &TriggerPattern| {
            Term::forall(vec![(t.bound_names[0].clone(), Sort::Real)], Term::eq(t.patterns[0].clone(), Term::real(0)))
        };
        assert!(alpha_equivalent(&wrap(&a), &wrap(&b)));
        let (out, _) = add_triggers(&s, &[a, b]);
        let text = out.assertions().next().unwrap().to_string();
        assert_eq!(text.matches(":pattern").count(), 1, "{text}");
    }

    #[test]
    fn stale_and_invalid_patterns_warn() {
        let s = parse_script(EXAMPLE).unwrap();
        let mut stale = trig("x", fx("x"));
        stale.assertion = 3;
        let bare = trig("x", Term::var("x"));
        let arith = trig("x", Term::op(crate::smtlib::Op::Add, vec![Term::var("x"), Term::int(1)]));
        let (out, warnings) = add_triggers(&s, &[stale, bare, arith]);
        assert_eq!(out, s);
        assert!(matches!(warnings[0], TriggerWarning::Stale { .. }));
        assert!(matches!(warnings[1], TriggerWarning::Rejected { .. }));
        assert!(matches!(warnings[2], TriggerWarning::Rejected { .. }));
    }

    #[test]
    fn multi_pattern_must_cover_all_variables() {
        let s = parse_script(
            "(declare-fun f (Real) Real)(assert (forall ((x Real) (y Real)) (= (f (+ x y)) (+ (f x) (f y)))))",
        )
        .unwrap();
        let t = |ps: Vec<Term>| TriggerPattern { assertion: 0, path: vec![], bound_names: vec!["x".into(), "y".into()], patterns: ps };
        let (_, w) = add_triggers(&s, &[t(vec![fx("x")])]);
        assert!(matches!(&w[0], TriggerWarning::Rejected { reason, .. } if reason.contains("y")));
        let (out, w) = add_triggers(&s, &[t(vec![fx("x"), fx("y")])]);
        assert!(w.is_empty());
        assert!(out.assertions().next().unwrap().to_string().contains(":pattern ((f x) (f y))"));
    }

    #[test]
    fn instantiated_head_is_rejected() {
        // once f is defined its applications expand away and would make
        // the solver reject or ignore the pattern
        let s = parse_script(
            "(define-fun f ((x0 Real)) Real x0)(declare-fun P (Real) Bool)(assert (forall ((x Real)) (P (f x))))",
        )
        .unwrap();
        let (out, w) = add_triggers(&s, &[trig("x", fx("x"))]);
        assert_eq!(out, s);
        assert_eq!(w.len(), 1);
        let p = TriggerPattern {
            assertion: 0,
            path: vec![],
            bound_names: vec!["x".into()],
            patterns: vec![Term::app("P", vec![fx("x")])],
        };
        let (out, w) = add_triggers(&s, &[p]);
        assert!(w.is_empty());
        assert!(out.assertions().next().unwrap().to_string().contains(":pattern ((P x))"));
    }

    #[test]
    fn sites_and_candidates() {
        let s = parse_script(
            "(declare-fun f (Real) Real)(declare-const c Real)\
             (assert (> c 0))(assert (and (> (f c) 0) (forall ((x Real)) (exists ((y Real)) (forall ((z Real)) (> (f (+ x y z)) 0))))))",
        )
        .unwrap();
        let sites = quantifier_sites(&s);
        assert_eq!(sites.len(), 2);
        assert_eq!((sites[0].assertion, sites[0].path.clone()), (1, vec![1]));
        assert_eq!(sites[1].path, vec![1, 0, 0]);
        assert_eq!(sites[1].outer.len(), 2);
        let cands = vec![TriggerCandidate { quantifier: Some(1), patterns: vec!["(f (+ x y z))".into()] }];
        let (pats, w) = patterns_from_candidates(&cands, &sites, &s.env());
        assert!(w.is_empty(), "{w:?}");
        let (out, w) = add_triggers(&s, &pats);
        assert!(w.is_empty(), "{w:?}");
        assert!(print_script(&out).contains(":pattern ((f (+ x y z)))"));
    }
}
