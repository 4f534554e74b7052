//! Multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::smtlib::{Op, Symbol, Term};

/// Sparse polynomial over a fixed variable list. Exponent vectors have one
/// entry per variable; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    pub variables: Vec<Symbol>,
    pub terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(variables: &[Symbol]) -> Self {
        Polynomial { variables: variables.to_vec(), terms: BTreeMap::new() }
    }

    pub fn constant(variables: &[Symbol], c: BigRational) -> Self {
        let mut p = Polynomial::zero(variables);
        p.add_term(vec![0; variables.len()], c);
        p
    }

    /// The `i`-th variable as a polynomial.
    pub fn var(variables: &[Symbol], i: usize) -> Self {
        let mut e = vec![0; variables.len()];
        e[i] = 1;
        let mut p = Polynomial::zero(variables);
        p.add_term(e, BigRational::one());
        p
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: BigRational) {
        assert_eq!(exponents.len(), self.variables.len(), "exponent vector length");
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exponents).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn square(&self) -> Polynomial {
        self * self
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        assert_eq!(point.len(), self.variables.len());
        let mut sum = BigRational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, k) in point.iter().zip(e) {
                m *= num_traits::pow(x.clone(), *k as usize);
            }
            sum += m;
        }
        sum
    }

    /// Random polynomial of total degree ≤ `max_degree` with integer
    /// coefficients in `[-bound, bound]`, never the zero polynomial.
    pub fn random(variables: &[Symbol], max_degree: u32, bound: i64, rng: &mut impl Rng) -> Polynomial {
        let monomials = monomials(variables.len(), max_degree);
        loop {
            let mut p = Polynomial::zero(variables);
            for e in &monomials {
                let c = rng.random_range(-bound..=bound);
                p.add_term(e.clone(), BigRational::from_integer(c.into()));
            }
            if !p.is_zero() {
                return p;
            }
        }
    }

    /// SMT-LIB term with Real literals; `args` stand for the variables.
    pub fn to_term_with(&self, args: &[Term]) -> Term {
        let mut summands = Vec::new();
        for (e, c) in &self.terms {
            let mut factors = Vec::new();
            for (x, k) in args.iter().zip(e) {
                factors.extend(std::iter::repeat_n(x.clone(), *k as usize));
            }
            let term = match (factors.is_empty(), c.is_one()) {
                (true, _) => Term::Real(c.clone()),
                (false, true) if factors.len() == 1 => factors.pop().expect("one factor"),
                (false, true) => Term::op(Op::Mul, factors),
                (false, false) => {
                    factors.insert(0, Term::Real(c.clone()));
                    Term::op(Op::Mul, factors)
                }
            };
            summands.push(term);
        }
        match summands.len() {
            0 => Term::Real(BigRational::zero()),
            1 => summands.pop().expect("one summand"),
            _ => Term::op(Op::Add, summands),
        }
    }

    pub fn to_term(&self) -> Term {
        let args: Vec<Term> = self.variables.iter().map(|v| Term::Var(v.clone())).collect();
        self.to_term_with(&args)
    }

    /// Reads an arithmetic term over `variables` back into a polynomial.
    /// Fails on anything but literals, the variables, `+ - *`, `to_real`
    /// and division by a nonzero literal.
    pub fn from_term(t: &Term, variables: &[Symbol]) -> Option<Polynomial> {
        let rec = |t: &Term| Polynomial::from_term(t, variables);
        Some(match t {
            Term::Int(n) => Polynomial::constant(variables, BigRational::from_integer(n.clone())),
            Term::Real(q) => Polynomial::constant(variables, q.clone()),
            Term::Var(v) => Polynomial::var(variables, variables.iter().position(|x| x == v)?),
            Term::Op(op, args) => match (op, args.as_slice()) {
                (Op::Add, _) => args.iter().try_fold(Polynomial::zero(variables), |acc, a| Some(&acc + &rec(a)?))?,
                (Op::Mul, _) => args
                    .iter()
                    .try_fold(Polynomial::constant(variables, BigRational::one()), |acc, a| Some(&acc * &rec(a)?))?,
                (Op::Sub, [a]) | (Op::Neg, [a]) => -&rec(a)?,
                (Op::Sub, [first, rest @ ..]) => {
                    rest.iter().try_fold(rec(first)?, |acc, a| Some(&acc - &rec(a)?))?
                }
                (Op::ToReal, [a]) => rec(a)?,
                (Op::Div, [a, b]) => {
                    let d = rec(b)?;
                    if d.degree() != 0 || d.is_zero() {
                        return None;
                    }
                    let inv = BigRational::one() / d.terms.values().next()?.clone();
                    &rec(a)? * &Polynomial::constant(variables, inv)
                }
                _ => return None,
            },
            _ => return None,
        })
    }
}

/// Every exponent vector over `n` variables with total degree ≤ `d`, in
/// lexicographic order.
pub fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    fn go(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let used: u32 = prefix.iter().sum();
        for k in 0..=d - used {
            prefix.push(k);
            go(n, d, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, d, &mut Vec::new(), &mut out);
    out
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.variables, rhs.variables, "variable lists differ");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            variables: self.variables.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.variables, rhs.variables, "variable lists differ");
        let mut out = Polynomial::zero(&self.variables);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            match i {
                0 if c.is_negative() => f.write_str("-")?,
                0 => {}
                _ => write!(f, " {sign} ")?,
            }
            let a = c.abs();
            let mono: Vec<String> = self
                .variables
                .iter()
                .zip(e)
                .filter(|(_, k)| **k > 0)
                .map(|(v, k)| if *k == 1 { v.to_string() } else { format!("{v}^{k}") })
                .collect();
            if mono.is_empty() || !a.is_one() {
                write!(f, "{a}")?;
            }
            f.write_str(&mono.join("*"))?;
        }
        Ok(())
    }
}

/// Integer helper for tests and generators.
pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
