//! Term algebra for the SMT-LIB fragment handled by the pipeline.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

/// An SMT-LIB symbol (function, constant, bound variable or sort name).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the symbol can be printed without `|...|` quoting.
    pub fn is_simple(&self) -> bool {
        let mut chars = self.0.chars();
        match chars.next() {
            None => false,
            Some(c) if c.is_ascii_digit() => false,
            Some(c) => {
                is_simple_symbol_char(c) && chars.all(is_simple_symbol_char)
            }
        }
    }
}

pub(crate) fn is_simple_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_simple() {
            f.write_str(&self.0)
        } else {
            write!(f, "|{}|", self.0)
        }
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol(s.to_string())
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(s)
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Sorts of the supported fragment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Int,
    Real,
    Uninterpreted(Symbol),
}

impl Sort {
    pub fn is_arith(&self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Int => f.write_str("Int"),
            Sort::Real => f.write_str("Real"),
            Sort::Uninterpreted(s) => write!(f, "{s}"),
        }
    }
}

impl std::str::FromStr for Sort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "Real" => Ok(Sort::Real),
            other if Symbol::from(other).is_simple() => {
                Ok(Sort::Uninterpreted(Symbol::from(other)))
            }
            other => Err(format!("invalid sort `{other}`")),
        }
    }
}

/// Built-in (interpreted) operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Add,
    Sub,
    Neg,
    Mul,
    /// Real division `/`.
    Div,
    /// Integer division `div`.
    IntDiv,
    Mod,
    Abs,
    ToReal,
    ToInt,
    IsInt,
    Eq,
    Distinct,
    Lt,
    Le,
    Gt,
    Ge,
    Not,
    And,
    Or,
    Implies,
    Xor,
    Ite,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub | Op::Neg => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::IntDiv => "div",
            Op::Mod => "mod",
            Op::Abs => "abs",
            Op::ToReal => "to_real",
            Op::ToInt => "to_int",
            Op::IsInt => "is_int",
            Op::Eq => "=",
            Op::Distinct => "distinct",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Implies => "=>",
            Op::Xor => "xor",
            Op::Ite => "ite",
        }
    }

    /// Resolves a builtin name given the number of arguments (`-` is overloaded).
    pub fn from_name(name: &str, arity: usize) -> Option<Op> {
        Some(match name {
            "+" => Op::Add,
            "-" if arity == 1 => Op::Neg,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            "div" => Op::IntDiv,
            "mod" => Op::Mod,
            "abs" => Op::Abs,
            "to_real" => Op::ToReal,
            "to_int" => Op::ToInt,
            "is_int" => Op::IsInt,
            "=" => Op::Eq,
            "distinct" => Op::Distinct,
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "not" => Op::Not,
            "and" => Op::And,
            "or" => Op::Or,
            "=>" => Op::Implies,
            "xor" => Op::Xor,
            "ite" => Op::Ite,
            _ => return None,
        })
    }

    pub fn is_reserved(name: &str) -> bool {
        Op::from_name(name, 2).is_some()
            || matches!(
                name,
                "true" | "false" | "forall" | "exists" | "let" | "!" | "_" | "as" | "match"
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }
}

/// Term attribute inside a `(! t ...)` annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Attribute {
    /// `:pattern (t1 ... tk)`: a multi-pattern trigger.
    Pattern(Vec<Term>),
    /// Any other attribute, value kept as source text.
    Other { keyword: String, value: Option<String> },
}

/// An SMT-LIB term.
///
/// Integer literals may be negative and real literals are exact rationals; the
/// printer renders them in the canonical `(- n)` / `(/ p q)` forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    /// Bound variable or declared 0-ary constant.
    Var(Symbol),
    /// Application of a declared or defined function of arity ≥ 1.
    App(Symbol, Vec<Term>),
    Op(Op, Vec<Term>),
    Quant(Quantifier, Vec<(Symbol, Sort)>, Box<Term>),
    Let(Vec<(Symbol, Term)>, Box<Term>),
    Annotated(Box<Term>, Vec<Attribute>),
}

impl Term {
    pub fn var(name: impl Into<Symbol>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(name: impl Into<Symbol>, args: Vec<Term>) -> Term {
        let name = name.into();
        if args.is_empty() {
            Term::Var(name)
        } else {
            Term::App(name, args)
        }
    }

    pub fn op(op: Op, args: Vec<Term>) -> Term {
        Term::Op(op, args)
    }

    pub fn int(n: i64) -> Term {
        Term::Int(BigInt::from(n))
    }

    pub fn real(n: i64) -> Term {
        Term::Real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Term {
        Term::Real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::Op(Op::Eq, vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Term) -> Term {
        Term::Op(Op::Not, vec![t])
    }

    pub fn and(ts: Vec<Term>) -> Term {
        Term::Op(Op::And, ts)
    }

    pub fn or(ts: Vec<Term>) -> Term {
        Term::Op(Op::Or, ts)
    }

    pub fn forall(vars: Vec<(Symbol, Sort)>, body: Term) -> Term {
        Term::Quant(Quantifier::Forall, vars, Box::new(body))
    }

    pub fn exists(vars: Vec<(Symbol, Sort)>, body: Term) -> Term {
        Term::Quant(Quantifier::Exists, vars, Box::new(body))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Bool(_) | Term::Int(_) | Term::Real(_))
    }

    /// Immediate subterms in a fixed order (let values before the let body,
    /// pattern terms after the annotated body).
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Bool(_) | Term::Int(_) | Term::Real(_) | Term::Var(_) => vec![],
            Term::App(_, args) | Term::Op(_, args) => args.iter().collect(),
            Term::Quant(_, _, body) => vec![body],
            Term::Let(bindings, body) => {
                let mut out: Vec<&Term> = bindings.iter().map(|(_, t)| t).collect();
                out.push(body);
                out
            }
            Term::Annotated(body, attrs) => {
                let mut out = vec![body.as_ref()];
                for attr in attrs {
                    if let Attribute::Pattern(ps) = attr {
                        out.extend(ps.iter());
                    }
                }
                out
            }
        }
    }

    /// Follows a child-index path from this term.
    pub fn at_path(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    pub fn at_path_mut(&mut self, path: &[usize]) -> Option<&mut Term> {
        let mut cur = self;
        for &i in path {
            cur = cur.child_mut(i)?;
        }
        Some(cur)
    }

    fn child_mut(&mut self, i: usize) -> Option<&mut Term> {
        match self {
            Term::Bool(_) | Term::Int(_) | Term::Real(_) | Term::Var(_) => None,
            Term::App(_, args) | Term::Op(_, args) => args.get_mut(i),
            Term::Quant(_, _, body) => (i == 0).then_some(body.as_mut()),
            Term::Let(bindings, body) => {
                if i < bindings.len() {
                    Some(&mut bindings[i].1)
                } else if i == bindings.len() {
                    Some(body.as_mut())
                } else {
                    None
                }
            }
            Term::Annotated(body, attrs) => {
                if i == 0 {
                    return Some(body.as_mut());
                }
                let mut k = i - 1;
                for attr in attrs.iter_mut() {
                    if let Attribute::Pattern(ps) = attr {
                        if k < ps.len() {
                            return ps.get_mut(k);
                        }
                        k -= ps.len();
                    }
                }
                None
            }
        }
    }

    /// Pre-order visit of every subterm, including pattern terms.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Free variable references (`Var` nodes not captured by a binder or let).
    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every symbol occurring anywhere in the term (bound names included).
    pub fn all_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Var(s) | Term::App(s, _) => {
                out.insert(s.clone());
            }
            Term::Quant(_, vars, _) => out.extend(vars.iter().map(|(v, _)| v.clone())),
            Term::Let(bs, _) => out.extend(bs.iter().map(|(v, _)| v.clone())),
            _ => {}
        });
        out
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

fn collect_free(t: &Term, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
    match t {
        Term::Var(s) => {
            if !bound.contains(s) {
                out.insert(s.clone());
            }
        }
        Term::Quant(_, vars, body) => {
            let n = bound.len();
            bound.extend(vars.iter().map(|(v, _)| v.clone()));
            collect_free(body, bound, out);
            bound.truncate(n);
        }
        Term::Let(bindings, body) => {
            for (_, v) in bindings {
                collect_free(v, bound, out);
            }
            let n = bound.len();
            bound.extend(bindings.iter().map(|(v, _)| v.clone()));
            collect_free(body, bound, out);
            bound.truncate(n);
        }
        Term::Annotated(body, attrs) => {
            collect_free(body, bound, out);
            for attr in attrs {
                if let Attribute::Pattern(ps) = attr {
                    for p in ps {
                        collect_free(p, bound, out);
                    }
                }
            }
        }
        _ => {
            for c in t.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

/// Signature of a declared or defined function; constants have no arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionSignature {
    pub name: Symbol,
    pub arg_sorts: Vec<Sort>,
    pub ret_sort: Sort,
    /// Set for symbols introduced by `define-fun`.
    pub interpreted: bool,
}

impl FunctionSignature {
    pub fn declared(name: impl Into<Symbol>, arg_sorts: Vec<Sort>, ret_sort: Sort) -> Self {
        FunctionSignature {
            name: name.into(),
            arg_sorts,
            ret_sort,
            interpreted: false,
        }
    }

    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Definition {
    pub signature: FunctionSignature,
    pub params: Vec<(Symbol, Sort)>,
    pub body: Term,
}
