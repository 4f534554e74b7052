//! Ground evaluator over exact rationals.
//!
//! Quantifiers range over a caller-supplied finite domain, which makes the
//! evaluator usable as a brute-force semantic oracle on small instances.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::term::{Op, Quantifier, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Num(BigRational),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(BigRational::from_integer(BigInt::from(n)))
    }

    fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            Value::Num(_) => Err(EvalError::Sort),
        }
    }

    fn as_num(&self) -> Result<&BigRational, EvalError> {
        match self {
            Value::Num(q) => Ok(q),
            Value::Bool(_) => Err(EvalError::Sort),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("ill-sorted operand")]
    Sort,
}

/// SMT-LIB `div`: Euclidean division (remainder always non-negative).
pub fn int_div(a: &BigInt, b: &BigInt) -> BigInt {
    if b.is_negative() {
        -a.div_floor(&-b)
    } else {
        a.div_floor(b)
    }
}

/// SMT-LIB `mod`: the non-negative remainder matching [`int_div`].
pub fn int_mod(a: &BigInt, b: &BigInt) -> BigInt {
    a - b * int_div(a, b)
}

/// Interpretation of uninterpreted symbols (constants have no arguments).
pub trait Interpretation {
    fn apply(&self, f: &Symbol, args: &[Value]) -> Option<Value>;
}

impl<F: Fn(&Symbol, &[Value]) -> Option<Value>> Interpretation for F {
    fn apply(&self, f: &Symbol, args: &[Value]) -> Option<Value> {
        self(f, args)
    }
}

pub struct Evaluator<'a> {
    pub interp: &'a dyn Interpretation,
    /// Values quantified variables range over (numeric sorts only; Bool
    /// variables always range over both truth values).
    pub domain: Vec<BigRational>,
}

impl<'a> Evaluator<'a> {
    pub fn new(interp: &'a dyn Interpretation, domain: Vec<BigRational>) -> Self {
        Evaluator { interp, domain }
    }

    pub fn eval(&self, t: &Term, env: &BTreeMap<Symbol, Value>) -> Result<Value, EvalError> {
        let mut scope: Vec<(Symbol, Value)> = env.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        self.go(t, &mut scope)
    }

    fn go(&self, t: &Term, scope: &mut Vec<(Symbol, Value)>) -> Result<Value, EvalError> {
        match t {
            Term::Bool(b) => Ok(Value::Bool(*b)),
            Term::Int(n) => Ok(Value::Num(BigRational::from_integer(n.clone()))),
            Term::Real(q) => Ok(Value::Num(q.clone())),
            Term::Var(s) => {
                if let Some((_, v)) = scope.iter().rev().find(|(n, _)| n == s) {
                    return Ok(v.clone());
                }
                self.interp
                    .apply(s, &[])
                    .ok_or_else(|| EvalError::Unbound(s.as_str().into()))
            }
            Term::App(f, args) => {
                let vals = args.iter().map(|a| self.go(a, scope)).collect::<Result<Vec<_>, _>>()?;
                self.interp
                    .apply(f, &vals)
                    .ok_or_else(|| EvalError::Unbound(f.as_str().into()))
            }
            Term::Op(op, args) => self.op(*op, args, scope),
            Term::Quant(q, vars, body) => {
                let choices: Vec<Vec<Value>> = vars
                    .iter()
                    .map(|(_, s)| match s {
                        super::Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
                        super::Sort::Int => self
                            .domain
                            .iter()
                            .filter(|q| q.is_integer())
                            .cloned()
                            .map(Value::Num)
                            .collect(),
                        _ => self.domain.iter().cloned().map(Value::Num).collect(),
                    })
                    .collect();
                let want = *q == Quantifier::Exists;
                let mut idx = vec![0usize; vars.len()];
                if choices.iter().any(|c| c.is_empty()) {
                    return Ok(Value::Bool(!want));
                }
                loop {
                    let n = scope.len();
                    for (i, (v, _)) in vars.iter().enumerate() {
                        scope.push((v.clone(), choices[i][idx[i]].clone()));
                    }
                    let r = self.go(body, scope);
                    scope.truncate(n);
                    if r?.as_bool()? == want {
                        return Ok(Value::Bool(want));
                    }
                    let mut k = 0;
                    loop {
                        if k == idx.len() {
                            return Ok(Value::Bool(!want));
                        }
                        idx[k] += 1;
                        if idx[k] < choices[k].len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                }
            }
            Term::Let(bindings, body) => {
                let vals = bindings
                    .iter()
                    .map(|(v, t)| Ok((v.clone(), self.go(t, scope)?)))
                    .collect::<Result<Vec<_>, EvalError>>()?;
                let n = scope.len();
                scope.extend(vals);
                let r = self.go(body, scope);
                scope.truncate(n);
                r
            }
            Term::Annotated(body, _) => self.go(body, scope),
        }
    }

    fn op(&self, op: Op, args: &[Term], scope: &mut Vec<(Symbol, Value)>) -> Result<Value, EvalError> {
        let vals = args.iter().map(|a| self.go(a, scope)).collect::<Result<Vec<_>, _>>()?;
        apply_op(op, &vals)
    }
}

/// Applies a builtin operator to concrete values.
pub fn apply_op(op: Op, vals: &[Value]) -> Result<Value, EvalError> {
    let nums = || vals.iter().map(|v| v.as_num().cloned()).collect::<Result<Vec<_>, _>>();
    let bools = || vals.iter().map(|v| v.as_bool()).collect::<Result<Vec<_>, _>>();
    let chain = |f: fn(&BigRational, &BigRational) -> bool| -> Result<Value, EvalError> {
        let ns = nums()?;
        Ok(Value::Bool(ns.windows(2).all(|w| f(&w[0], &w[1]))))
    };
    Ok(match op {
        Op::Add => Value::Num(nums()?.into_iter().fold(BigRational::zero(), |a, b| a + b)),
        Op::Mul => Value::Num(
            nums()?
                .into_iter()
                .fold(BigRational::from_integer(1.into()), |a, b| a * b),
        ),
        Op::Sub => {
            let ns = nums()?;
            let mut it = ns.into_iter();
            let first = it.next().ok_or(EvalError::Sort)?;
            Value::Num(it.fold(first, |a, b| a - b))
        }
        Op::Neg => Value::Num(-nums()?.pop().ok_or(EvalError::Sort)?),
        Op::Abs => Value::Num(nums()?.pop().ok_or(EvalError::Sort)?.abs()),
        Op::Div => {
            let ns = nums()?;
            let mut it = ns.into_iter();
            let mut acc = it.next().ok_or(EvalError::Sort)?;
            for d in it {
                if d.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                acc /= d;
            }
            Value::Num(acc)
        }
        Op::IntDiv | Op::Mod => {
            let ns = nums()?;
            let ints: Vec<BigInt> = ns.iter().map(|q| q.to_integer()).collect();
            let mut it = ints.into_iter();
            let mut acc = it.next().ok_or(EvalError::Sort)?;
            for d in it {
                if d.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                acc = if op == Op::IntDiv { int_div(&acc, &d) } else { int_mod(&acc, &d) };
            }
            Value::Num(BigRational::from_integer(acc))
        }
        Op::ToReal => Value::Num(nums()?.pop().ok_or(EvalError::Sort)?),
        Op::ToInt => Value::Num(BigRational::from_integer(
            nums()?.pop().ok_or(EvalError::Sort)?.floor().to_integer(),
        )),
        Op::IsInt => Value::Bool(nums()?.pop().ok_or(EvalError::Sort)?.is_integer()),
        Op::Lt => chain(|a, b| a < b)?,
        Op::Le => chain(|a, b| a <= b)?,
        Op::Gt => chain(|a, b| a > b)?,
        Op::Ge => chain(|a, b| a >= b)?,
        Op::Eq => Value::Bool(vals.windows(2).all(|w| w[0] == w[1])),
        Op::Distinct => {
            let mut ok = true;
            for i in 0..vals.len() {
                for j in i + 1..vals.len() {
                    ok &= vals[i] != vals[j];
                }
            }
            Value::Bool(ok)
        }
        Op::Not => Value::Bool(!bools()?.pop().ok_or(EvalError::Sort)?),
        Op::And => Value::Bool(bools()?.into_iter().all(|b| b)),
        Op::Or => Value::Bool(bools()?.into_iter().any(|b| b)),
        Op::Xor => Value::Bool(bools()?.into_iter().fold(false, |a, b| a ^ b)),
        Op::Implies => {
            // right-associative
            let bs = bools()?;
            let mut it = bs.into_iter().rev();
            let last = it.next().ok_or(EvalError::Sort)?;
            Value::Bool(it.fold(last, |acc, b| !b || acc))
        }
        Op::Ite => match vals {
            [c, a, b] => {
                if c.as_bool()? {
                    a.clone()
                } else {
                    b.clone()
                }
            }
            _ => return Err(EvalError::Sort),
        },
    })
}
