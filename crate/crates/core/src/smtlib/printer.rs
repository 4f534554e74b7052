//! SMT-LIB 2 rendering.
//!
//! Real literals print as `p.0` when integral and as `(/ p q)` otherwise, with
//! negative values wrapped in `(- ...)`. The parser folds exactly these forms
//! back into literals, so printing and re-parsing is stable.

use std::fmt::{self, Display, Write};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::script::{Command, Script};
use super::term::{Attribute, Definition, FunctionSignature, Op, Symbol, Term};

pub fn write_int(out: &mut impl Write, n: &BigInt) -> fmt::Result {
    if n.sign() == Sign::Minus {
        write!(out, "(- {})", n.abs())
    } else {
        write!(out, "{n}")
    }
}

pub fn write_real(out: &mut impl Write, q: &BigRational) -> fmt::Result {
    let neg = q.is_negative();
    let abs = q.abs();
    if neg {
        out.write_str("(- ")?;
    }
    if abs.denom().is_one() {
        write!(out, "{}.0", abs.numer())?;
    } else {
        write!(out, "(/ {} {})", abs.numer(), abs.denom())?;
    }
    if neg {
        out.write_str(")")?;
    }
    Ok(())
}

fn write_sorted_vars(f: &mut fmt::Formatter<'_>, vars: &[(Symbol, super::Sort)]) -> fmt::Result {
    f.write_str("(")?;
    for (i, (v, s)) in vars.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "({v} {s})")?;
    }
    f.write_str(")")
}

impl Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Bool(b) => write!(f, "{b}"),
            Term::Int(n) => write_int(f, n),
            Term::Real(q) => write_real(f, q),
            Term::Var(s) => write!(f, "{s}"),
            Term::App(s, args) => {
                write!(f, "({s}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Op(op, args) => {
                write!(f, "({}", op.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Quant(q, vars, body) => {
                write!(f, "({} ", q.keyword())?;
                write_sorted_vars(f, vars)?;
                write!(f, " {body})")
            }
            Term::Let(bindings, body) => {
                f.write_str("(let (")?;
                for (i, (v, t)) in bindings.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "({v} {t})")?;
                }
                write!(f, ") {body})")
            }
            Term::Annotated(body, attrs) => {
                write!(f, "(! {body}")?;
                for attr in attrs {
                    match attr {
                        Attribute::Pattern(ps) => {
                            f.write_str(" :pattern (")?;
                            for (i, p) in ps.iter().enumerate() {
                                if i > 0 {
                                    f.write_str(" ")?;
                                }
                                write!(f, "{p}")?;
                            }
                            f.write_str(")")?;
                        }
                        Attribute::Other { keyword, value } => {
                            write!(f, " :{keyword}")?;
                            if let Some(v) = value {
                                write!(f, " {v}")?;
                            }
                        }
                    }
                }
                f.write_str(")")
            }
        }
    }
}

impl Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FunctionSignature {
    /// `(declare-fun name (S1 ... Sn) R)`.
    pub fn to_declaration(&self) -> String {
        let args: Vec<String> = self.arg_sorts.iter().map(|s| s.to_string()).collect();
        format!("(declare-fun {} ({}) {})", self.name, args.join(" "), self.ret_sort)
    }
}

impl Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(define-fun {} ", self.signature.name)?;
        write_sorted_vars(f, &self.params)?;
        write!(f, " {} {})", self.signature.ret_sort, self.body)
    }
}

impl Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::SetLogic(l) => write!(f, "(set-logic {l})"),
            Command::Passthrough(text) => f.write_str(text),
            Command::DeclareSort(s, n) => write!(f, "(declare-sort {s} {n})"),
            Command::DeclareFun(sig) => f.write_str(&sig.to_declaration()),
            Command::DefineFun(d) => write!(f, "{d}"),
            Command::Assert(t) => write!(f, "(assert {t})"),
            Command::CheckSat => f.write_str("(check-sat)"),
            Command::GetModel => f.write_str("(get-model)"),
            Command::GetValue(ts) => {
                f.write_str("(get-value (")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("))")
            }
            Command::Exit => f.write_str("(exit)"),
        }
    }
}

impl Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Renders a script as SMT-LIB 2 text, one command per line.
pub fn print_script(script: &Script) -> String {
    script.to_string()
}
