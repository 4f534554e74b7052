//! Equivalence-preserving simplification of a script.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::smtlib::eval::{apply_op, EvalError, Value};
use crate::smtlib::{substitute, Command, Definition, Op, Script, Symbol, Term};

/// Inlines defined functions, expands `let`, folds ground subterms, reduces
/// tautologies and contradictions, flattens `and`/`or`, and splits top-level
/// conjunctions into separate assertions. Assertions reduced to `true` are
/// dropped; if any reduces to `false` the assertion set becomes `{false}`.
///
/// `define-fun` commands are kept (they are unused after inlining but still
/// valid for `get-value` queries).
pub fn rewrite_formula(script: &Script) -> Script {
    let defs = inlined_definitions(script);
    let mut out = Vec::with_capacity(script.commands.len());
    let mut contradiction = None;
    for cmd in &script.commands {
        match cmd {
            Command::Assert(t) => {
                let t = simplify(&inline(t, &defs));
                for part in conjuncts(t) {
                    match part {
                        Term::Bool(true) => {}
                        Term::Bool(false) => contradiction = contradiction.or(Some(out.len())),
                        other => out.push(Command::Assert(other)),
                    }
                }
            }
            other => out.push(other.clone()),
        }
    }
    if let Some(at) = contradiction {
        let mut kept: Vec<Command> = Vec::with_capacity(out.len());
        let mut placed = false;
        for (i, c) in out.into_iter().enumerate() {
            if i == at && !placed {
                kept.push(Command::Assert(Term::Bool(false)));
                placed = true;
            }
            if !matches!(c, Command::Assert(_)) {
                kept.push(c);
            }
        }
        if !placed {
            kept.push(Command::Assert(Term::Bool(false)));
        }
        out = kept;
    }
    Script::new(out)
}

fn conjuncts(t: Term) -> Vec<Term> {
    match t {
        Term::Op(Op::And, args) => args,
        other => vec![other],
    }
}

/// Definition bodies with earlier definitions already expanded.
fn inlined_definitions(script: &Script) -> BTreeMap<Symbol, Definition> {
    let mut defs: BTreeMap<Symbol, Definition> = BTreeMap::new();
    for d in script.definitions() {
        let mut d = d.clone();
        let params: Vec<Symbol> = d.params.iter().map(|(p, _)| p.clone()).collect();
        d.body = inline_in(&d.body, &defs, &mut params.clone());
        defs.insert(d.signature.name.clone(), d);
    }
    defs
}

/// Replaces applications of defined functions by their bodies and expands
/// every `let`.
pub fn inline(t: &Term, defs: &BTreeMap<Symbol, Definition>) -> Term {
    inline_in(t, defs, &mut Vec::new())
}

fn inline_in(t: &Term, defs: &BTreeMap<Symbol, Definition>, bound: &mut Vec<Symbol>) -> Term {
    match t {
        Term::Bool(_) | Term::Int(_) | Term::Real(_) => t.clone(),
        Term::Var(s) => match defs.get(s) {
            Some(d) if !bound.contains(s) && d.params.is_empty() => d.body.clone(),
            _ => t.clone(),
        },
        Term::App(f, args) => {
            let args: Vec<Term> = args.iter().map(|a| inline_in(a, defs, bound)).collect();
            match defs.get(f) {
                Some(d) => {
                    let map = d.params.iter().map(|(p, _)| p.clone()).zip(args).collect();
                    substitute(&d.body, &map)
                }
                None => Term::App(f.clone(), args),
            }
        }
        Term::Op(op, args) => Term::Op(*op, args.iter().map(|a| inline_in(a, defs, bound)).collect()),
        Term::Quant(q, vars, body) => {
            let n = bound.len();
            bound.extend(vars.iter().map(|(v, _)| v.clone()));
            let body = inline_in(body, defs, bound);
            bound.truncate(n);
            Term::Quant(*q, vars.clone(), Box::new(body))
        }
        Term::Let(bindings, body) => {
            let map: BTreeMap<Symbol, Term> = bindings
                .iter()
                .map(|(v, e)| (v.clone(), inline_in(e, defs, bound)))
                .collect();
            let n = bound.len();
            bound.extend(bindings.iter().map(|(v, _)| v.clone()));
            let body = inline_in(body, defs, bound);
            bound.truncate(n);
            substitute(&body, &map)
        }
        Term::Annotated(body, attrs) => {
            Term::Annotated(Box::new(inline_in(body, defs, bound)), attrs.clone())
        }
    }
}

/// Simplifies to a fixpoint, so `simplify(simplify(t)) == simplify(t)`.
pub fn simplify(t: &Term) -> Term {
    let mut cur = simp(t);
    loop {
        let next = simp(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn value_of(t: &Term) -> Option<Value> {
    match t {
        Term::Bool(b) => Some(Value::Bool(*b)),
        Term::Int(n) => Some(Value::Num(BigRational::from_integer(n.clone()))),
        Term::Real(q) => Some(Value::Num(q.clone())),
        _ => None,
    }
}

/// Sort of a folded arithmetic result: Int unless the operator produces
/// Real or some operand is a Real literal.
fn folds_to_int(op: Op, args: &[Term]) -> bool {
    match op {
        Op::Div | Op::ToReal => false,
        Op::IntDiv | Op::Mod | Op::ToInt => true,
        _ => args.iter().all(|a| !matches!(a, Term::Real(_))),
    }
}

fn fold(op: Op, args: &[Term]) -> Option<Term> {
    let vals = args.iter().map(value_of).collect::<Option<Vec<_>>>()?;
    match apply_op(op, &vals) {
        Ok(Value::Bool(b)) => Some(Term::Bool(b)),
        Ok(Value::Num(q)) => Some(if folds_to_int(op, args) {
            Term::Int(q.to_integer())
        } else {
            Term::Real(q)
        }),
        // division by a ground zero denotes an unspecified value: keep it
        Err(EvalError::DivisionByZero) => None,
        Err(_) => None,
    }
}

fn simp(t: &Term) -> Term {
    match t {
        Term::Bool(_) | Term::Int(_) | Term::Real(_) | Term::Var(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(simp).collect()),
        Term::Op(op, args) => simp_op(*op, args.iter().map(simp).collect()),
        Term::Quant(q, vars, body) => match simp(body) {
            // sorts are non-empty, so a constant body decides the quantifier
            b @ Term::Bool(_) => b,
            b => Term::Quant(*q, vars.clone(), Box::new(b)),
        },
        Term::Let(bindings, body) => {
            let map = bindings.iter().map(|(v, e)| (v.clone(), e.clone())).collect();
            simp(&substitute(body, &map))
        }
        Term::Annotated(body, attrs) => match simp(body) {
            b @ Term::Bool(_) => b,
            b => Term::Annotated(Box::new(b), attrs.clone()),
        },
    }
}

fn negation_of(t: &Term) -> Option<&Term> {
    match t {
        Term::Op(Op::Not, a) if a.len() == 1 => Some(&a[0]),
        _ => None,
    }
}

/// Flattening plus unit, absorption and complement laws for `and`/`or`.
/// `unit` is the neutral element (true for `and`).
fn junction(op: Op, args: Vec<Term>, unit: bool) -> Term {
    let mut flat: Vec<Term> = Vec::with_capacity(args.len());
    for a in args {
        let parts = match a {
            Term::Op(o, inner) if o == op => inner,
            other => vec![other],
        };
        for p in parts {
            match p {
                Term::Bool(b) if b == unit => {}
                Term::Bool(_) => return Term::Bool(!unit),
                p if flat.contains(&p) => {}
                p => flat.push(p),
            }
        }
    }
    let complement = flat.iter().any(|a| negation_of(a).is_some_and(|n| flat.contains(n)));
    if complement {
        return Term::Bool(!unit);
    }
    match flat.len() {
        0 => Term::Bool(unit),
        1 => flat.pop().expect("one element"),
        _ => Term::Op(op, flat),
    }
}

fn simp_op(op: Op, args: Vec<Term>) -> Term {
    match op {
        Op::And => return junction(Op::And, args, true),
        Op::Or => return junction(Op::Or, args, false),
        _ => {}
    }
    if let Some(v) = fold(op, &args) {
        return v;
    }
    match op {
        Op::Not => match args.into_iter().next() {
            Some(Term::Op(Op::Not, mut inner)) if inner.len() == 1 => inner.pop().expect("one arg"),
            Some(a) => Term::not(a),
            None => Term::Op(Op::Not, vec![]),
        },
        Op::Eq if args.len() >= 2 && args.iter().all(|a| *a == args[0]) => Term::Bool(true),
        Op::Distinct if has_duplicate(&args) => Term::Bool(false),
        Op::Implies if args.len() == 2 => match (&args[0], &args[1]) {
            (Term::Bool(false), _) | (_, Term::Bool(true)) => Term::Bool(true),
            (Term::Bool(true), b) => b.clone(),
            (a, Term::Bool(false)) => simp_op(Op::Not, vec![a.clone()]),
            (a, b) if a == b => Term::Bool(true),
            _ => Term::Op(op, args),
        },
        Op::Ite if args.len() == 3 => match &args[0] {
            Term::Bool(true) => args[1].clone(),
            Term::Bool(false) => args[2].clone(),
            _ if args[1] == args[2] => args[1].clone(),
            _ => Term::Op(op, args),
        },
        _ => Term::Op(op, args),
    }
}

fn has_duplicate(args: &[Term]) -> bool {
    args.iter().enumerate().any(|(i, a)| args[i + 1..].contains(a))
}
