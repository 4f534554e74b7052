//! SMT-LIB 2 script and term parser.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::error::{ParseError, ParseErrorKind, SortError};
use super::script::{Command, Script};
use super::sexp::{read_all, Atom, Pos, SExpr, SExprKind};
use super::term::{Attribute, Definition, FunctionSignature, Op, Quantifier, Symbol, Term};
use super::typeck::{compatible, elaborate, Env};
use super::Sort;

const UNSUPPORTED_COMMANDS: &[&str] = &[
    "push",
    "pop",
    "reset",
    "reset-assertions",
    "define-fun-rec",
    "define-funs-rec",
    "define-sort",
    "declare-datatype",
    "declare-datatypes",
    "check-sat-assuming",
    "get-unsat-core",
    "get-unsat-assumptions",
    "get-proof",
    "get-assignment",
    "get-assertions",
];

/// Parses an SMT-LIB 2 script, resolving every symbol and checking sorts.
pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let exprs = read_all(text)?;
    let mut env = Env::default();
    let mut commands = Vec::with_capacity(exprs.len());
    for e in &exprs {
        commands.push(parse_command(e, text, &mut env)?);
    }
    Ok(Script::new(commands))
}

/// Parses a single term whose free variables are `locals`, then elaborates
/// coercions; `expected` widens an Int result to Real when asked.
pub fn parse_term(
    text: &str,
    env: &Env,
    locals: &[(Symbol, Sort)],
    expected: Option<&Sort>,
) -> Result<Term, ParseError> {
    let exprs = read_all(text)?;
    let e = match exprs.as_slice() {
        [e] => e,
        [] => return Err(ParseError::syntax(Pos::default(), "a term", "empty input")),
        [_, extra, ..] => return Err(ParseError::syntax(extra.pos, "end of input", "another term")),
    };
    let mut scope: Vec<Symbol> = locals.iter().map(|(v, _)| v.clone()).collect();
    let t = term(e, env, &mut scope)?;
    elaborate(&t, env, locals, expected).map_err(|err| ParseError::new(e.pos, err.into()))
}

/// Parses a sort name.
pub fn parse_sort(text: &str, env: &Env) -> Result<Sort, ParseError> {
    let exprs = read_all(text)?;
    match exprs.as_slice() {
        [e] => sort(e, env),
        _ => Err(ParseError::syntax(Pos::default(), "a sort", text)),
    }
}

fn head_symbol(items: &[SExpr], pos: Pos) -> Result<&str, ParseError> {
    items
        .first()
        .and_then(|h| h.as_symbol())
        .ok_or_else(|| ParseError::syntax(pos, "a command name", "something else"))
}

fn expect_len(items: &[SExpr], n: usize, pos: Pos, what: &str) -> Result<(), ParseError> {
    if items.len() != n {
        return Err(ParseError::syntax(
            pos,
            &format!("{what} with {} arguments", n - 1),
            &format!("{} arguments", items.len().saturating_sub(1)),
        ));
    }
    Ok(())
}

fn symbol(e: &SExpr) -> Result<Symbol, ParseError> {
    e.as_symbol()
        .map(Symbol::from)
        .ok_or_else(|| ParseError::syntax(e.pos, "a symbol", &describe(e)))
}

fn describe(e: &SExpr) -> String {
    match &e.kind {
        SExprKind::List(_) => "a list".into(),
        SExprKind::Atom(Atom::Numeral(n)) | SExprKind::Atom(Atom::Decimal(n)) => format!("`{n}`"),
        SExprKind::Atom(Atom::Symbol(s)) => format!("`{s}`"),
        SExprKind::Atom(Atom::Keyword(k)) => format!("`:{k}`"),
        SExprKind::Atom(Atom::Str(_)) => "a string".into(),
        SExprKind::Atom(Atom::Bits(b)) => format!("`{b}`"),
    }
}

/// Checks a name introduced at top level.
fn fresh_top_symbol(e: &SExpr, env: &Env) -> Result<Symbol, ParseError> {
    let s = symbol(e)?;
    if Op::is_reserved(s.as_str()) || matches!(s.as_str(), "Bool" | "Int" | "Real") {
        return Err(ParseError::new(e.pos, ParseErrorKind::Reserved(s.as_str().into())));
    }
    if s.as_str().contains('!') {
        // `!` is reserved for names generated during capture-avoiding renaming.
        return Err(ParseError::new(e.pos, ParseErrorKind::Reserved(s.as_str().into())));
    }
    if env.contains(s.as_str()) || env.has_sort(s.as_str()) {
        return Err(ParseError::new(e.pos, ParseErrorKind::Duplicate(s.as_str().into())));
    }
    Ok(s)
}

fn sort(e: &SExpr, env: &Env) -> Result<Sort, ParseError> {
    match &e.kind {
        SExprKind::Atom(Atom::Symbol(s)) => match s.as_str() {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "Real" => Ok(Sort::Real),
            other if env.has_sort(other) => Ok(Sort::Uninterpreted(Symbol::from(other))),
            other => Err(ParseError::new(e.pos, ParseErrorKind::UnknownSymbol(other.into()))),
        },
        SExprKind::List(_) => Err(ParseError::unsupported(e.pos, "parametric or indexed sorts")),
        _ => Err(ParseError::syntax(e.pos, "a sort", &describe(e))),
    }
}

fn sorted_vars(e: &SExpr, env: &Env) -> Result<Vec<(Symbol, Sort)>, ParseError> {
    let items = e
        .as_list()
        .ok_or_else(|| ParseError::syntax(e.pos, "a sorted variable list", &describe(e)))?;
    items
        .iter()
        .map(|sv| match sv.as_list() {
            Some([name, s]) => Ok((symbol(name)?, sort(s, env)?)),
            _ => Err(ParseError::syntax(sv.pos, "`(name Sort)`", &describe(sv))),
        })
        .collect()
}

fn sort_err(pos: Pos, err: SortError) -> ParseError {
    ParseError::new(pos, ParseErrorKind::Sort(err))
}

fn parse_command(e: &SExpr, src: &str, env: &mut Env) -> Result<Command, ParseError> {
    let items = e
        .as_list()
        .ok_or_else(|| ParseError::syntax(e.pos, "a command", &describe(e)))?;
    let head = head_symbol(items, e.pos)?;
    match head {
        "set-logic" => {
            expect_len(items, 2, e.pos, "set-logic")?;
            Ok(Command::SetLogic(symbol(&items[1])?.as_str().to_string()))
        }
        "set-info" | "set-option" | "get-info" | "echo" => {
            Ok(Command::Passthrough(src[e.span.0..e.span.1].to_string()))
        }
        "declare-sort" => {
            let name = fresh_top_symbol(&items[1], env)?;
            let arity = match items.get(2).map(|a| &a.kind) {
                None => 0,
                Some(SExprKind::Atom(Atom::Numeral(n))) => n.parse::<u32>().unwrap_or(u32::MAX),
                Some(_) => return Err(ParseError::syntax(items[2].pos, "a numeral", &describe(&items[2]))),
            };
            if arity != 0 {
                return Err(ParseError::unsupported(e.pos, "parametric sorts"));
            }
            env.add_sort(name.clone());
            Ok(Command::DeclareSort(name, 0))
        }
        "declare-fun" => {
            expect_len(items, 4, e.pos, "declare-fun")?;
            let name = fresh_top_symbol(&items[1], env)?;
            let args = items[2]
                .as_list()
                .ok_or_else(|| ParseError::syntax(items[2].pos, "a sort list", &describe(&items[2])))?
                .iter()
                .map(|s| sort(s, env))
                .collect::<Result<Vec<_>, _>>()?;
            let sig = FunctionSignature::declared(name, args, sort(&items[3], env)?);
            env.add_function(sig.clone());
            Ok(Command::DeclareFun(sig))
        }
        "declare-const" => {
            expect_len(items, 3, e.pos, "declare-const")?;
            let name = fresh_top_symbol(&items[1], env)?;
            let sig = FunctionSignature::declared(name, vec![], sort(&items[2], env)?);
            env.add_function(sig.clone());
            Ok(Command::DeclareFun(sig))
        }
        "define-fun" => {
            expect_len(items, 5, e.pos, "define-fun")?;
            let name = fresh_top_symbol(&items[1], env)?;
            let params = sorted_vars(&items[2], env)?;
            let ret = sort(&items[3], env)?;
            let mut scope: Vec<Symbol> = params.iter().map(|(v, _)| v.clone()).collect();
            let raw = term(&items[4], env, &mut scope)?;
            let body = elaborate(&raw, env, &params, Some(&ret)).map_err(|err| sort_err(items[4].pos, err))?;
            let have = super::typeck::sort_of_with(&body, env, &params)
                .map_err(|err| sort_err(items[4].pos, err))?;
            if !compatible(&have, &ret) {
                return Err(sort_err(
                    items[4].pos,
                    SortError::new(format!("body of `{name}` has sort {have}, declared {ret}")),
                ));
            }
            let signature = FunctionSignature {
                name,
                arg_sorts: params.iter().map(|(_, s)| s.clone()).collect(),
                ret_sort: ret,
                interpreted: true,
            };
            env.add_function(signature.clone());
            Ok(Command::DefineFun(Definition {
                signature,
                params,
                body,
            }))
        }
        "assert" => {
            expect_len(items, 2, e.pos, "assert")?;
            let raw = term(&items[1], env, &mut Vec::new())?;
            let t = elaborate(&raw, env, &[], None).map_err(|err| sort_err(items[1].pos, err))?;
            let s = super::typeck::sort_of(&t, env).map_err(|err| sort_err(items[1].pos, err))?;
            if s != Sort::Bool {
                return Err(sort_err(
                    items[1].pos,
                    SortError::new(format!("assertion has sort {s}, expected Bool")),
                ));
            }
            Ok(Command::Assert(t))
        }
        "check-sat" => Ok(Command::CheckSat),
        "get-model" => Ok(Command::GetModel),
        "exit" => Ok(Command::Exit),
        "get-value" => {
            expect_len(items, 2, e.pos, "get-value")?;
            let ts = items[1]
                .as_list()
                .ok_or_else(|| ParseError::syntax(items[1].pos, "a term list", &describe(&items[1])))?
                .iter()
                .map(|t| {
                    let raw = term(t, env, &mut Vec::new())?;
                    elaborate(&raw, env, &[], None).map_err(|err| sort_err(t.pos, err))
                })
                .collect::<Result<_, _>>()?;
            Ok(Command::GetValue(ts))
        }
        other if UNSUPPORTED_COMMANDS.contains(&other) => {
            Err(ParseError::unsupported(e.pos, format!("command `{other}`")))
        }
        other => Err(ParseError::unsupported(e.pos, format!("unknown command `{other}`"))),
    }
}

fn numeral(s: &str) -> BigInt {
    s.parse().expect("lexer only yields digit strings")
}

fn decimal(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').expect("lexer only yields decimals with a dot");
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    BigRational::new(numeral(&format!("{int}{frac}")), denom)
}

/// Recognises the printer's literal forms: numerals, decimals, `(/ a b)` with
/// literal operands and nonzero `b`, and negations of any of these (so a
/// parsed term never holds a negated literal).
fn literal(e: &SExpr) -> Option<Term> {
    match &e.kind {
        SExprKind::Atom(Atom::Numeral(n)) => Some(Term::Int(numeral(n))),
        SExprKind::Atom(Atom::Decimal(d)) => Some(Term::Real(decimal(d))),
        SExprKind::List(items) => match items.as_slice() {
            [h, a, b] if h.as_symbol() == Some("/") => {
                let a = unsigned_value(a)?;
                let b = unsigned_value(b)?;
                if b.is_zero() {
                    return None;
                }
                Some(Term::Real(a / b))
            }
            [h, x] if h.as_symbol() == Some("-") => match literal(x)? {
                Term::Int(n) => Some(Term::Int(-n)),
                Term::Real(q) => Some(Term::Real(-q)),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn unsigned_value(e: &SExpr) -> Option<BigRational> {
    match &e.kind {
        SExprKind::Atom(Atom::Numeral(n)) => Some(BigRational::from_integer(numeral(n))),
        SExprKind::Atom(Atom::Decimal(d)) => Some(decimal(d)),
        _ => None,
    }
}

/// Builds a term, resolving symbols against `scope` (bound names) and `env`.
fn term(e: &SExpr, env: &Env, scope: &mut Vec<Symbol>) -> Result<Term, ParseError> {
    if let Some(lit) = literal(e) {
        return Ok(lit);
    }
    match &e.kind {
        SExprKind::Atom(Atom::Symbol(s)) => {
            match s.as_str() {
                "true" => return Ok(Term::Bool(true)),
                "false" => return Ok(Term::Bool(false)),
                _ => {}
            }
            let sym = Symbol::from(s.as_str());
            if scope.contains(&sym) {
                return Ok(Term::Var(sym));
            }
            match env.function(s) {
                Some(sig) if sig.arity() == 0 => Ok(Term::Var(sym)),
                Some(sig) => Err(ParseError::new(
                    e.pos,
                    ParseErrorKind::Arity {
                        name: s.clone(),
                        expected: sig.arity(),
                        got: 0,
                    },
                )),
                None => Err(ParseError::new(e.pos, ParseErrorKind::UnknownSymbol(s.clone()))),
            }
        }
        SExprKind::Atom(Atom::Bits(_)) => Err(ParseError::unsupported(e.pos, "bit-vector literals")),
        SExprKind::Atom(Atom::Str(_)) => Err(ParseError::unsupported(e.pos, "string literals")),
        SExprKind::Atom(Atom::Keyword(k)) => Err(ParseError::syntax(e.pos, "a term", &format!("`:{k}`"))),
        SExprKind::Atom(Atom::Numeral(_)) | SExprKind::Atom(Atom::Decimal(_)) => {
            unreachable!("handled by literal()")
        }
        SExprKind::List(items) => {
            let head = items
                .first()
                .ok_or_else(|| ParseError::syntax(e.pos, "a term", "`()`"))?;
            let name = match &head.kind {
                SExprKind::Atom(Atom::Symbol(s)) => s.as_str(),
                SExprKind::List(_) => {
                    return Err(ParseError::unsupported(head.pos, "indexed or qualified identifiers"))
                }
                _ => return Err(ParseError::syntax(head.pos, "a function symbol", &describe(head))),
            };
            let args = &items[1..];
            match name {
                "forall" | "exists" => {
                    if args.len() != 2 {
                        return Err(ParseError::syntax(e.pos, "`(quantifier (vars) body)`", "malformed quantifier"));
                    }
                    let vars = sorted_vars(&args[0], env)?;
                    let n = scope.len();
                    scope.extend(vars.iter().map(|(v, _)| v.clone()));
                    let body = term(&args[1], env, scope);
                    scope.truncate(n);
                    let q = if name == "forall" {
                        Quantifier::Forall
                    } else {
                        Quantifier::Exists
                    };
                    Ok(Term::Quant(q, vars, Box::new(body?)))
                }
                "let" => {
                    if args.len() != 2 {
                        return Err(ParseError::syntax(e.pos, "`(let (bindings) body)`", "malformed let"));
                    }
                    let bs = args[0]
                        .as_list()
                        .ok_or_else(|| ParseError::syntax(args[0].pos, "a binding list", &describe(&args[0])))?;
                    let mut bindings = Vec::with_capacity(bs.len());
                    for b in bs {
                        match b.as_list() {
                            Some([v, t]) => bindings.push((symbol(v)?, term(t, env, scope)?)),
                            _ => return Err(ParseError::syntax(b.pos, "`(name term)`", &describe(b))),
                        }
                    }
                    let n = scope.len();
                    scope.extend(bindings.iter().map(|(v, _)| v.clone()));
                    let body = term(&args[1], env, scope);
                    scope.truncate(n);
                    Ok(Term::Let(bindings, Box::new(body?)))
                }
                "!" => {
                    let (body, attrs) = args
                        .split_first()
                        .ok_or_else(|| ParseError::syntax(e.pos, "an annotated term", "`(!)`"))?;
                    let body = term(body, env, scope)?;
                    Ok(Term::Annotated(Box::new(body), attributes(attrs, env, scope)?))
                }
                "_" | "as" | "match" => Err(ParseError::unsupported(e.pos, format!("`{name}` terms"))),
                "true" | "false" => Err(ParseError::syntax(e.pos, "a function symbol", name)),
                _ => {
                    let args = args
                        .iter()
                        .map(|a| term(a, env, scope))
                        .collect::<Result<Vec<_>, _>>()?;
                    if let Some(op) = Op::from_name(name, args.len()) {
                        return Ok(Term::Op(op, args));
                    }
                    let sym = Symbol::from(name);
                    if scope.contains(&sym) {
                        return Err(ParseError::unsupported(e.pos, "higher-order application of a variable"));
                    }
                    match env.function(name) {
                        Some(sig) if sig.arity() == args.len() => Ok(Term::App(sym, args)),
                        Some(sig) => Err(ParseError::new(
                            e.pos,
                            ParseErrorKind::Arity {
                                name: name.into(),
                                expected: sig.arity(),
                                got: args.len(),
                            },
                        )),
                        None => Err(ParseError::new(head.pos, ParseErrorKind::UnknownSymbol(name.into()))),
                    }
                }
            }
        }
    }
}

fn attributes(items: &[SExpr], env: &Env, scope: &mut Vec<Symbol>) -> Result<Vec<Attribute>, ParseError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let kw = match &items[i].kind {
            SExprKind::Atom(Atom::Keyword(k)) => k.clone(),
            _ => return Err(ParseError::syntax(items[i].pos, "an attribute keyword", &describe(&items[i]))),
        };
        let value = items.get(i + 1).filter(|v| !matches!(v.kind, SExprKind::Atom(Atom::Keyword(_))));
        match kw.as_str() {
            "named" => return Err(ParseError::unsupported(items[i].pos, "named terms (`:named`)")),
            "pattern" => {
                let v = value.ok_or_else(|| ParseError::syntax(items[i].pos, "a pattern list", "nothing"))?;
                let ps = v
                    .as_list()
                    .ok_or_else(|| ParseError::syntax(v.pos, "a pattern list", &describe(v)))?;
                let ps = ps.iter().map(|p| term(p, env, scope)).collect::<Result<_, _>>()?;
                out.push(Attribute::Pattern(ps));
            }
            _ => out.push(Attribute::Other {
                keyword: kw,
                value: value.map(render_sexpr),
            }),
        }
        i += if value.is_some() { 2 } else { 1 };
    }
    Ok(out)
}

/// Canonical text of an opaque attribute value.
fn render_sexpr(e: &SExpr) -> String {
    match &e.kind {
        SExprKind::Atom(Atom::Symbol(s)) => Symbol::from(s.as_str()).to_string(),
        SExprKind::Atom(Atom::Numeral(n)) | SExprKind::Atom(Atom::Decimal(n)) => n.clone(),
        SExprKind::Atom(Atom::Keyword(k)) => format!(":{k}"),
        SExprKind::Atom(Atom::Bits(b)) => b.clone(),
        SExprKind::Atom(Atom::Str(s)) => format!("\"{}\"", s.replace('"', "\"\"")),
        SExprKind::List(items) => {
            let inner: Vec<String> = items.iter().map(render_sexpr).collect();
            format!("({})", inner.join(" "))
        }
    }
}
