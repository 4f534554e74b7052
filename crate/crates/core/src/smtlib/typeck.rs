//! Sort checking, Int/Real coercion and symbol queries.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;

use super::error::SortError;
use super::term::{Attribute, FunctionSignature, Op, Symbol, Term};
use super::Sort;

/// Symbol table: declared/defined functions (constants are 0-ary functions)
/// and declared sorts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env {
    functions: BTreeMap<Symbol, FunctionSignature>,
    sorts: BTreeSet<Symbol>,
}

impl Env {
    pub fn add_function(&mut self, sig: FunctionSignature) {
        self.functions.insert(sig.name.clone(), sig);
    }

    pub fn add_sort(&mut self, name: Symbol) {
        self.sorts.insert(name);
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSignature> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionSignature> {
        self.functions.values()
    }

    pub fn has_sort(&self, name: &str) -> bool {
        self.sorts.contains(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn is_uninterpreted(&self, name: &str) -> bool {
        self.functions.get(name).is_some_and(|s| !s.interpreted)
    }

    /// Names of every uninterpreted (declared, not defined) symbol.
    pub fn uninterpreted(&self) -> BTreeSet<Symbol> {
        self.functions
            .values()
            .filter(|s| !s.interpreted)
            .map(|s| s.name.clone())
            .collect()
    }

    /// The sub-table holding only `names` plus all interpreted functions.
    pub fn restrict(&self, names: &BTreeSet<Symbol>) -> Env {
        Env {
            functions: self
                .functions
                .iter()
                .filter(|(n, s)| s.interpreted || names.contains(*n))
                .map(|(n, s)| (n.clone(), s.clone()))
                .collect(),
            sorts: self.sorts.clone(),
        }
    }
}

type Scope = Vec<(Symbol, Sort)>;

fn lookup<'a>(scope: &'a Scope, name: &Symbol) -> Option<&'a Sort> {
    scope.iter().rev().find(|(n, _)| n == name).map(|(_, s)| s)
}

/// True when a value of sort `have` may appear where `want` is expected
/// (identical sorts, or Int widened to Real).
pub fn compatible(have: &Sort, want: &Sort) -> bool {
    have == want || (*have == Sort::Int && *want == Sort::Real)
}

/// Sort of a term closed under `env`.
pub fn sort_of(term: &Term, env: &Env) -> Result<Sort, SortError> {
    sort_in(term, env, &mut Vec::new())
}

/// Sort of a term whose free variables are given by `locals`.
pub fn sort_of_with(term: &Term, env: &Env, locals: &[(Symbol, Sort)]) -> Result<Sort, SortError> {
    sort_in(term, env, &mut locals.to_vec())
}

fn arith_join(sorts: &[Sort], what: &str) -> Result<Sort, SortError> {
    let mut out = Sort::Int;
    for (i, s) in sorts.iter().enumerate() {
        match s {
            Sort::Int => {}
            Sort::Real => out = Sort::Real,
            other => {
                return Err(SortError::new(format!("`{what}` expects Int or Real, got {other}")).under(i))
            }
        }
    }
    Ok(out)
}

fn expect_count(op: Op, n: usize, min: usize, max: Option<usize>) -> Result<(), SortError> {
    if n < min || max.is_some_and(|m| n > m) {
        let expected = match max {
            Some(m) if m == min => format!("{min}"),
            Some(m) => format!("{min}..{m}"),
            None => format!("at least {min}"),
        };
        return Err(SortError::new(format!(
            "`{}` expects {expected} arguments, got {n}",
            op.name()
        )));
    }
    Ok(())
}

fn expect_all(sorts: &[Sort], want: &Sort, what: &str) -> Result<(), SortError> {
    for (i, s) in sorts.iter().enumerate() {
        if s != want {
            return Err(SortError::new(format!("`{what}` expects {want}, got {s}")).under(i));
        }
    }
    Ok(())
}

fn sort_in(term: &Term, env: &Env, scope: &mut Scope) -> Result<Sort, SortError> {
    match term {
        Term::Bool(_) => Ok(Sort::Bool),
        Term::Int(_) => Ok(Sort::Int),
        Term::Real(_) => Ok(Sort::Real),
        Term::Var(name) => {
            if let Some(s) = lookup(scope, name) {
                return Ok(s.clone());
            }
            match env.function(name.as_str()) {
                Some(sig) if sig.arity() == 0 => Ok(sig.ret_sort.clone()),
                Some(sig) => Err(SortError::new(format!(
                    "`{name}` expects {} arguments, used as a constant",
                    sig.arity()
                ))),
                None => Err(SortError::new(format!("unbound symbol `{name}`"))),
            }
        }
        Term::App(name, args) => {
            let sig = env
                .function(name.as_str())
                .ok_or_else(|| SortError::new(format!("unknown function `{name}`")))?;
            if sig.arity() != args.len() {
                return Err(SortError::new(format!(
                    "`{name}` expects {} arguments, got {}",
                    sig.arity(),
                    args.len()
                )));
            }
            for (i, (a, want)) in args.iter().zip(&sig.arg_sorts).enumerate() {
                let have = sort_in(a, env, scope).map_err(|e| e.under(i))?;
                if !compatible(&have, want) {
                    return Err(SortError::new(format!(
                        "argument {i} of `{name}` has sort {have}, expected {want}"
                    ))
                    .under(i));
                }
            }
            Ok(sig.ret_sort.clone())
        }
        Term::Op(op, args) => {
            let mut sorts = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                sorts.push(sort_in(a, env, scope).map_err(|e| e.under(i))?);
            }
            op_sort(*op, &sorts)
        }
        Term::Quant(q, vars, body) => {
            let mut seen = BTreeSet::new();
            for (v, _) in vars {
                if !seen.insert(v) {
                    return Err(SortError::new(format!(
                        "variable `{v}` bound twice in one {}",
                        q.keyword()
                    )));
                }
            }
            if vars.is_empty() {
                return Err(SortError::new(format!("{} binds no variables", q.keyword())));
            }
            let n = scope.len();
            scope.extend(vars.iter().cloned());
            let s = sort_in(body, env, scope).map_err(|e| e.under(0));
            scope.truncate(n);
            let s = s?;
            if s != Sort::Bool {
                return Err(SortError::new(format!("quantifier body has sort {s}")).under(0));
            }
            Ok(Sort::Bool)
        }
        Term::Let(bindings, body) => {
            let mut new = Vec::with_capacity(bindings.len());
            let mut seen = BTreeSet::new();
            for (i, (v, t)) in bindings.iter().enumerate() {
                if !seen.insert(v) {
                    return Err(SortError::new(format!("`{v}` bound twice in one let")));
                }
                new.push((v.clone(), sort_in(t, env, scope).map_err(|e| e.under(i))?));
            }
            let n = scope.len();
            scope.extend(new);
            let s = sort_in(body, env, scope).map_err(|e| e.under(bindings.len()));
            scope.truncate(n);
            s
        }
        Term::Annotated(body, attrs) => {
            let s = sort_in(body, env, scope).map_err(|e| e.under(0))?;
            let mut idx = 1;
            for attr in attrs {
                if let Attribute::Pattern(ps) = attr {
                    for p in ps {
                        sort_in(p, env, scope).map_err(|e| e.under(idx))?;
                        idx += 1;
                    }
                }
            }
            Ok(s)
        }
    }
}

fn op_sort(op: Op, sorts: &[Sort]) -> Result<Sort, SortError> {
    let n = sorts.len();
    match op {
        Op::Add | Op::Mul => {
            expect_count(op, n, 1, None)?;
            arith_join(sorts, op.name())
        }
        Op::Sub => {
            expect_count(op, n, 2, None)?;
            arith_join(sorts, op.name())
        }
        Op::Neg | Op::Abs => {
            expect_count(op, n, 1, Some(1))?;
            arith_join(sorts, op.name())
        }
        Op::Div => {
            expect_count(op, n, 2, None)?;
            arith_join(sorts, op.name())?;
            Ok(Sort::Real)
        }
        Op::IntDiv => {
            expect_count(op, n, 2, None)?;
            expect_all(sorts, &Sort::Int, op.name())?;
            Ok(Sort::Int)
        }
        Op::Mod => {
            expect_count(op, n, 2, Some(2))?;
            expect_all(sorts, &Sort::Int, op.name())?;
            Ok(Sort::Int)
        }
        Op::ToReal => {
            expect_count(op, n, 1, Some(1))?;
            arith_join(sorts, op.name())?;
            Ok(Sort::Real)
        }
        Op::ToInt => {
            expect_count(op, n, 1, Some(1))?;
            arith_join(sorts, op.name())?;
            Ok(Sort::Int)
        }
        Op::IsInt => {
            expect_count(op, n, 1, Some(1))?;
            arith_join(sorts, op.name())?;
            Ok(Sort::Bool)
        }
        Op::Lt | Op::Le | Op::Gt | Op::Ge => {
            expect_count(op, n, 2, None)?;
            arith_join(sorts, op.name())?;
            Ok(Sort::Bool)
        }
        Op::Eq | Op::Distinct => {
            expect_count(op, n, 2, None)?;
            if sorts.iter().all(Sort::is_arith) {
                return Ok(Sort::Bool);
            }
            let first = &sorts[0];
            for (i, s) in sorts.iter().enumerate().skip(1) {
                if s != first {
                    return Err(SortError::new(format!(
                        "`{}` compares {first} with {s}",
                        op.name()
                    ))
                    .under(i));
                }
            }
            Ok(Sort::Bool)
        }
        Op::Not => {
            expect_count(op, n, 1, Some(1))?;
            expect_all(sorts, &Sort::Bool, op.name())?;
            Ok(Sort::Bool)
        }
        Op::And | Op::Or | Op::Xor => {
            expect_all(sorts, &Sort::Bool, op.name())?;
            Ok(Sort::Bool)
        }
        Op::Implies => {
            expect_count(op, n, 2, None)?;
            expect_all(sorts, &Sort::Bool, op.name())?;
            Ok(Sort::Bool)
        }
        Op::Ite => {
            expect_count(op, n, 3, Some(3))?;
            if sorts[0] != Sort::Bool {
                return Err(SortError::new(format!("ite condition has sort {}", sorts[0])).under(0));
            }
            if sorts[1] == sorts[2] {
                Ok(sorts[1].clone())
            } else if sorts[1].is_arith() && sorts[2].is_arith() {
                Ok(Sort::Real)
            } else {
                Err(SortError::new(format!(
                    "ite branches have sorts {} and {}",
                    sorts[1], sorts[2]
                ))
                .under(2))
            }
        }
    }
}

/// Widens an Int-sorted term to Real: literals become Real literals, anything
/// else is wrapped in `to_real`.
pub fn to_real(t: Term) -> Term {
    match t {
        Term::Int(n) => Term::Real(BigRational::from_integer(n)),
        other => Term::Op(Op::ToReal, vec![other]),
    }
}

/// Makes every Int-to-Real coercion explicit.
///
/// Function arguments, `ite` branches and the term itself (when `expected` is
/// Real) are widened with [`to_real`]. Inside mixed arithmetic, non-literal
/// Int operands get a `to_real` node; Int numerals stay as written, which both
/// back-ends accept.
pub fn elaborate(
    term: &Term,
    env: &Env,
    locals: &[(Symbol, Sort)],
    expected: Option<&Sort>,
) -> Result<Term, SortError> {
    let mut scope = locals.to_vec();
    let out = elab(term, env, &mut scope)?;
    let s = sort_in(&out, env, &mut scope)?;
    Ok(match expected {
        Some(Sort::Real) if s == Sort::Int => to_real(out),
        _ => out,
    })
}

fn elab(term: &Term, env: &Env, scope: &mut Scope) -> Result<Term, SortError> {
    Ok(match term {
        Term::Bool(_) | Term::Int(_) | Term::Real(_) | Term::Var(_) => {
            sort_in(term, env, scope)?;
            term.clone()
        }
        Term::App(name, args) => {
            let sig = env
                .function(name.as_str())
                .ok_or_else(|| SortError::new(format!("unknown function `{name}`")))?
                .clone();
            let mut out = Vec::with_capacity(args.len());
            for (i, (a, want)) in args.iter().zip(&sig.arg_sorts).enumerate() {
                let a = elab(a, env, scope).map_err(|e| e.under(i))?;
                let have = sort_in(&a, env, scope).map_err(|e| e.under(i))?;
                out.push(if have == Sort::Int && *want == Sort::Real {
                    to_real(a)
                } else {
                    a
                });
            }
            let t = Term::App(name.clone(), out);
            sort_in(&t, env, scope)?;
            t
        }
        Term::Op(op, args) => {
            let mut out = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                out.push(elab(a, env, scope).map_err(|e| e.under(i))?);
            }
            let sorts: Vec<Sort> = out
                .iter()
                .map(|a| sort_in(a, env, scope))
                .collect::<Result<_, _>>()?;
            op_sort(*op, &sorts)?;
            let mixed = sorts.contains(&Sort::Int) && sorts.contains(&Sort::Real);
            match op {
                Op::Ite if mixed => {
                    let mut it = out.into_iter();
                    let c = it.next().unwrap();
                    let branches = it.zip(sorts.into_iter().skip(1)).map(|(b, s)| {
                        if s == Sort::Int {
                            to_real(b)
                        } else {
                            b
                        }
                    });
                    let mut v = vec![c];
                    v.extend(branches);
                    Term::Op(Op::Ite, v)
                }
                Op::Add
                | Op::Sub
                | Op::Mul
                | Op::Div
                | Op::Lt
                | Op::Le
                | Op::Gt
                | Op::Ge
                | Op::Eq
                | Op::Distinct
                    if mixed || (*op == Op::Div && sorts.contains(&Sort::Int)) =>
                {
                    let v = out
                        .into_iter()
                        .zip(sorts)
                        .map(|(a, s)| {
                            if s == Sort::Int && !a.is_literal() {
                                Term::Op(Op::ToReal, vec![a])
                            } else {
                                a
                            }
                        })
                        .collect();
                    Term::Op(*op, v)
                }
                _ => Term::Op(*op, out),
            }
        }
        Term::Quant(q, vars, body) => {
            let n = scope.len();
            scope.extend(vars.iter().cloned());
            let b = elab(body, env, scope).map_err(|e| e.under(0));
            scope.truncate(n);
            let t = Term::Quant(*q, vars.clone(), Box::new(b?));
            sort_in(&t, env, scope)?;
            t
        }
        Term::Let(bindings, body) => {
            let mut new = Vec::with_capacity(bindings.len());
            let mut sorted = Vec::with_capacity(bindings.len());
            for (i, (v, t)) in bindings.iter().enumerate() {
                let t = elab(t, env, scope).map_err(|e| e.under(i))?;
                sorted.push((v.clone(), sort_in(&t, env, scope)?));
                new.push((v.clone(), t));
            }
            let n = scope.len();
            scope.extend(sorted);
            let b = elab(body, env, scope).map_err(|e| e.under(bindings.len()));
            scope.truncate(n);
            Term::Let(new, Box::new(b?))
        }
        Term::Annotated(body, attrs) => {
            let b = elab(body, env, scope).map_err(|e| e.under(0))?;
            let mut new_attrs = Vec::with_capacity(attrs.len());
            for attr in attrs {
                new_attrs.push(match attr {
                    Attribute::Pattern(ps) => Attribute::Pattern(
                        ps.iter()
                            .map(|p| elab(p, env, scope))
                            .collect::<Result<_, _>>()?,
                    ),
                    other => other.clone(),
                });
            }
            Term::Annotated(Box::new(b), new_attrs)
        }
    })
}

/// Applied symbols of `term` that are uninterpreted in `env`, including
/// 0-ary constants. Locally bound names shadow declarations.
pub fn uninterpreted_symbols(term: &Term, env: &Env) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::new();
    collect_uf(term, env, &mut Vec::new(), &mut out);
    out
}

fn collect_uf(t: &Term, env: &Env, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
    match t {
        Term::Var(s) => {
            if !bound.contains(s) && env.is_uninterpreted(s.as_str()) {
                out.insert(s.clone());
            }
        }
        Term::App(s, args) => {
            if env.is_uninterpreted(s.as_str()) {
                out.insert(s.clone());
            }
            for a in args {
                collect_uf(a, env, bound, out);
            }
        }
        Term::Quant(_, vars, body) => {
            let n = bound.len();
            bound.extend(vars.iter().map(|(v, _)| v.clone()));
            collect_uf(body, env, bound, out);
            bound.truncate(n);
        }
        Term::Let(bindings, body) => {
            for (_, v) in bindings {
                collect_uf(v, env, bound, out);
            }
            let n = bound.len();
            bound.extend(bindings.iter().map(|(v, _)| v.clone()));
            collect_uf(body, env, bound, out);
            bound.truncate(n);
        }
        _ => {
            for c in t.children() {
                collect_uf(c, env, bound, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Env {
        let mut env = Env::default();
        env.add_function(FunctionSignature::declared("f", vec![Sort::Real], Sort::Real));
        env.add_function(FunctionSignature::declared("g", vec![Sort::Real], Sort::Real));
        env.add_function(FunctionSignature::declared("c", vec![], Sort::Real));
        env
    }

    #[test]
    fn literal_coercion_in_arithmetic() {
        let t = Term::op(Op::Add, vec![Term::var("x"), Term::int(1)]);
        assert_eq!(sort_of_with(&t, &env(), &[("x".into(), Sort::Real)]), Ok(Sort::Real));
    }

    #[test]
    fn application_equation_is_bool() {
        let t = Term::eq(Term::app("f", vec![Term::var("x")]), Term::var("x"));
        assert_eq!(sort_of_with(&t, &env(), &[("x".into(), Sort::Real)]), Ok(Sort::Bool));
    }

    #[test]
    fn bool_in_arithmetic_rejected() {
        let t = Term::and(vec![Term::var("x"), Term::int(1)]);
        let err = sort_of_with(&t, &env(), &[("x".into(), Sort::Bool)]).unwrap_err();
        assert_eq!(err.path, vec![1]);
        let t = Term::op(Op::Add, vec![Term::Bool(true), Term::int(1)]);
        assert!(sort_of(&t, &env()).is_err());
    }

    #[test]
    fn duplicate_binder_rejected() {
        let t = Term::forall(
            vec![("x".into(), Sort::Real), ("x".into(), Sort::Int)],
            Term::Bool(true),
        );
        assert!(sort_of(&t, &env()).is_err());
    }

    #[test]
    fn uninterpreted_symbols_collects_functions_and_constants() {
        let e = env();
        let x = Term::var("x");
        let scaled = Term::eq(
            Term::app("f", vec![Term::op(Op::Mul, vec![Term::int(2), x.clone()])]),
            Term::op(Op::Mul, vec![Term::int(2), x.clone()]),
        );
        assert_eq!(uninterpreted_symbols(&scaled, &e), BTreeSet::from(["f".into()]));
        let q = Term::forall(vec![("x".into(), Sort::Real)], Term::op(Op::Gt, vec![Term::op(Op::Add, vec![x.clone(), Term::int(1)]), Term::int(0)]));
        assert!(uninterpreted_symbols(&q, &e).is_empty());
        let rec = Term::eq(
            Term::app("g", vec![x.clone()]),
            Term::op(
                Op::Add,
                vec![
                    Term::app("f", vec![x.clone()]),
                    Term::app("g", vec![Term::op(Op::Sub, vec![x, Term::int(1)])]),
                ],
            ),
        );
        assert_eq!(uninterpreted_symbols(&rec, &e), BTreeSet::from(["f".into(), "g".into()]));
        assert_eq!(uninterpreted_symbols(&Term::var("c"), &e), BTreeSet::from(["c".into()]));
    }

    #[test]
    fn elaboration_is_idempotent() {
        let e = env();
        let locals = [("n".into(), Sort::Int)];
        let t = Term::op(Op::Ite, vec![Term::Bool(true), Term::app("f", vec![Term::var("n")]), Term::var("n")]);
        let once = elaborate(&t, &e, &locals, None).unwrap();
        assert_eq!(once.to_string(), "(ite true (f (to_real n)) (to_real n))");
        assert_eq!(elaborate(&once, &e, &locals, None).unwrap(), once);
    }
}
