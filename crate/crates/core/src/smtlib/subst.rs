//! Capture-avoiding substitution and alpha-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use super::error::SortError;
use super::term::{Attribute, Symbol, Term};
use super::typeck::{sort_of_with, Env};
use super::Sort;

/// Generates `base!k` names that occur nowhere in the terms it was seeded with.
#[derive(Debug, Clone, Default)]
pub struct NameSupply {
    used: BTreeSet<Symbol>,
    counter: u64,
}

impl NameSupply {
    pub fn new(used: BTreeSet<Symbol>) -> Self {
        NameSupply { used, counter: 0 }
    }

    pub fn reserve(&mut self, names: impl IntoIterator<Item = Symbol>) {
        self.used.extend(names);
    }

    pub fn fresh(&mut self, base: &Symbol) -> Symbol {
        let stem = base.as_str().split('!').next().unwrap_or(base.as_str());
        loop {
            self.counter += 1;
            let cand = Symbol::new(format!("{stem}!{}", self.counter));
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}

/// Replaces free occurrences of variables by terms, renaming binders that
/// would capture a free variable of a replacement.
pub fn substitute(term: &Term, bindings: &BTreeMap<Symbol, Term>) -> Term {
    let mut used = term.all_symbols();
    for (k, v) in bindings {
        used.insert(k.clone());
        used.extend(v.all_symbols());
    }
    let mut supply = NameSupply::new(used);
    substitute_with(term, bindings, &mut supply)
}

/// [`substitute`] drawing fresh names from a caller-owned supply.
pub fn substitute_with(term: &Term, bindings: &BTreeMap<Symbol, Term>, supply: &mut NameSupply) -> Term {
    if bindings.is_empty() {
        return term.clone();
    }
    subst(term, bindings, supply)
}

/// [`substitute`] after checking each replacement's sort against the sort of
/// the variable it replaces (Int replacements may stand for Real variables).
pub fn substitute_typed(
    term: &Term,
    bindings: &[(Symbol, Sort, Term)],
    env: &Env,
    locals: &[(Symbol, Sort)],
) -> Result<Term, SortError> {
    let mut map = BTreeMap::new();
    for (v, want, t) in bindings {
        let have = sort_of_with(t, env, locals)?;
        if !super::typeck::compatible(&have, want) {
            return Err(SortError::new(format!(
                "replacement for `{v}` has sort {have}, variable has sort {want}"
            )));
        }
        let t = if have != *want {
            super::typeck::to_real(t.clone())
        } else {
            t.clone()
        };
        map.insert(v.clone(), t);
    }
    Ok(substitute(term, &map))
}

fn subst(t: &Term, map: &BTreeMap<Symbol, Term>, supply: &mut NameSupply) -> Term {
    match t {
        Term::Var(s) => map.get(s).cloned().unwrap_or_else(|| t.clone()),
        Term::Bool(_) | Term::Int(_) | Term::Real(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| subst(a, map, supply)).collect()),
        Term::Op(op, args) => Term::Op(*op, args.iter().map(|a| subst(a, map, supply)).collect()),
        Term::Quant(q, vars, body) => {
            let (vars, inner) = enter_binder(vars.iter().cloned(), map, supply);
            let body = subst(body, &inner, supply);
            Term::Quant(*q, vars.into_iter().collect(), Box::new(body))
        }
        Term::Let(bindings, body) => {
            let values: Vec<Term> = bindings.iter().map(|(_, v)| subst(v, map, supply)).collect();
            let names = bindings.iter().map(|(n, _)| (n.clone(), ()));
            let (names, inner) = enter_binder(names, map, supply);
            let body = subst(body, &inner, supply);
            Term::Let(
                names.into_iter().map(|(n, _)| n).zip(values).collect(),
                Box::new(body),
            )
        }
        Term::Annotated(body, attrs) => Term::Annotated(
            Box::new(subst(body, map, supply)),
            attrs
                .iter()
                .map(|a| match a {
                    Attribute::Pattern(ps) => {
                        Attribute::Pattern(ps.iter().map(|p| subst(p, map, supply)).collect())
                    }
                    other => other.clone(),
                })
                .collect(),
        ),
    }
}

/// Handles a binder: drops shadowed bindings and renames bound names that
/// clash with free variables of the remaining replacements.
fn enter_binder<X: Clone>(
    vars: impl Iterator<Item = (Symbol, X)>,
    map: &BTreeMap<Symbol, Term>,
    supply: &mut NameSupply,
) -> (Vec<(Symbol, X)>, BTreeMap<Symbol, Term>) {
    let vars: Vec<(Symbol, X)> = vars.collect();
    let mut inner = map.clone();
    for (v, _) in &vars {
        inner.remove(v);
    }
    let mut inner_fv: BTreeSet<Symbol> = inner.values().flat_map(|t| t.free_vars()).collect();
    let mut out = Vec::with_capacity(vars.len());
    for (v, x) in vars {
        if inner_fv.contains(&v) && !inner.is_empty() {
            let fresh = supply.fresh(&v);
            inner.insert(v.clone(), Term::Var(fresh.clone()));
            inner_fv.insert(fresh.clone());
            out.push((fresh, x));
        } else {
            out.push((v, x));
        }
    }
    (out, inner)
}

/// Alpha-equivalence: equal up to consistent renaming of bound variables.
pub fn alpha_equivalent(a: &Term, b: &Term) -> bool {
    alpha(a, b, &mut Vec::new(), &mut Vec::new())
}

fn position(env: &[Symbol], s: &Symbol) -> Option<usize> {
    env.iter().rposition(|x| x == s)
}

fn alpha(a: &Term, b: &Term, ea: &mut Vec<Symbol>, eb: &mut Vec<Symbol>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (position(ea, x), position(eb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha(x, y, ea, eb))
        }
        (Term::Op(o, xs), Term::Op(p, ys)) => {
            o == p && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha(x, y, ea, eb))
        }
        (Term::Quant(q, vs, x), Term::Quant(r, ws, y)) => {
            if q != r || vs.len() != ws.len() || vs.iter().zip(ws).any(|(v, w)| v.1 != w.1) {
                return false;
            }
            let (n, m) = (ea.len(), eb.len());
            ea.extend(vs.iter().map(|(v, _)| v.clone()));
            eb.extend(ws.iter().map(|(w, _)| w.clone()));
            let ok = alpha(x, y, ea, eb);
            ea.truncate(n);
            eb.truncate(m);
            ok
        }
        (Term::Let(bs, x), Term::Let(cs, y)) => {
            if bs.len() != cs.len() || !bs.iter().zip(cs).all(|(b, c)| alpha(&b.1, &c.1, ea, eb)) {
                return false;
            }
            let (n, m) = (ea.len(), eb.len());
            ea.extend(bs.iter().map(|(v, _)| v.clone()));
            eb.extend(cs.iter().map(|(w, _)| w.clone()));
            let ok = alpha(x, y, ea, eb);
            ea.truncate(n);
            eb.truncate(m);
            ok
        }
        (Term::Annotated(x, xa), Term::Annotated(y, ya)) => {
            if !alpha(x, y, ea, eb) || xa.len() != ya.len() {
                return false;
            }
            xa.iter().zip(ya).all(|pair| match pair {
                (Attribute::Pattern(ps), Attribute::Pattern(qs)) => {
                    ps.len() == qs.len() && ps.iter().zip(qs).all(|(p, q)| alpha(p, q, ea, eb))
                }
                (p, q) => p == q,
            })
        }
        _ => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smtlib::term::Op;

    fn x() -> Term {
        Term::var("x")
    }

    #[test]
    fn instantiates_ground_point() {
        // P(f(x)) ∧ f(x) > 0 at x = 3
        let fx = Term::app("f", vec![x()]);
        let phi = Term::and(vec![
            Term::app("P", vec![fx.clone()]),
            Term::op(Op::Gt, vec![fx, Term::int(0)]),
        ]);
        let out = substitute(&phi, &BTreeMap::from([(Symbol::from("x"), Term::int(3))]));
        let f3 = Term::app("f", vec![Term::int(3)]);
        assert_eq!(
            out,
            Term::and(vec![
                Term::app("P", vec![f3.clone()]),
                Term::op(Op::Gt, vec![f3, Term::int(0)]),
            ])
        );
    }

    #[test]
    fn identity_binding_is_noop() {
        let phi = Term::forall(
            vec![("y".into(), Sort::Real)],
            Term::op(Op::Gt, vec![Term::op(Op::Add, vec![Term::var("y"), x()]), Term::int(0)]),
        );
        let out = substitute(&phi, &BTreeMap::from([(Symbol::from("x"), x())]));
        assert_eq!(out, phi);
    }

    #[test]
    fn renames_capturing_binder() {
        let phi = Term::forall(
            vec![("y".into(), Sort::Real)],
            Term::op(Op::Gt, vec![Term::op(Op::Add, vec![Term::var("y"), x()]), Term::int(0)]),
        );
        let out = substitute(&phi, &BTreeMap::from([(Symbol::from("x"), Term::var("y"))]));
        assert_eq!(out.to_string(), "(forall ((y!1 Real)) (> (+ y!1 y) 0))");
    }

    #[test]
    fn shadowed_variable_untouched() {
        let phi = Term::exists(vec![("x".into(), Sort::Int)], Term::eq(x(), Term::int(1)));
        let out = substitute(&phi, &BTreeMap::from([(Symbol::from("x"), Term::int(5))]));
        assert_eq!(out, phi);
    }

    #[test]
    fn typed_substitution_rejects_sort_mismatch() {
        let env = Env::default();
        let err = substitute_typed(&x(), &[("x".into(), Sort::Int, Term::Bool(true))], &env, &[]).unwrap_err();
        assert!(err.message.contains("Bool"));
        let ok = substitute_typed(&x(), &[("x".into(), Sort::Real, Term::int(2))], &env, &[]).unwrap();
        assert_eq!(ok, Term::real(2));
    }

    #[test]
    fn alpha_equivalence_respects_binding_structure() {
        let a = Term::forall(vec![("x".into(), Sort::Real)], Term::eq(Term::app("f", vec![x()]), x()));
        let b = Term::forall(
            vec![("z".into(), Sort::Real)],
            Term::eq(Term::app("f", vec![Term::var("z")]), Term::var("z")),
        );
        let c = Term::forall(
            vec![("z".into(), Sort::Real)],
            Term::eq(Term::app("f", vec![Term::var("z")]), Term::var("w")),
        );
        assert!(alpha_equivalent(&a, &b));
        assert!(!alpha_equivalent(&a, &c));
    }
}
