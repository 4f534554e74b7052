//! Random well-sorted terms and scripts for property tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use aquaforte_core::smtlib::eval::Value;
use aquaforte_core::smtlib::{Command, FunctionSignature, Op, Script, Sort, Symbol, Term};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REALS: [&str; 4] = ["x0", "x1", "x2", "x3"];
pub const INTS: [&str; 1] = ["n0"];

pub struct Gen {
    pub rng: ChaCha8Rng,
    /// Functions available as `(name, arity)`; all take and return Real
    /// except names starting with `p`, which return Bool.
    pub functions: Vec<(String, usize)>,
    pub quantifiers: bool,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            functions: vec![("f".into(), 1), ("g".into(), 1), ("p".into(), 1)],
            quantifiers: true,
        }
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.random_range(0..xs.len())]
    }

    fn real_lit(&mut self) -> Term {
        let n = self.rng.random_range(-4..=4);
        if self.rng.random_bool(0.3) {
            Term::ratio(n, self.rng.random_range(2..=3))
        } else {
            Term::real(n)
        }
    }

    pub fn real(&mut self, depth: u32) -> Term {
        let leaf = depth == 0 || self.rng.random_bool(0.3);
        if leaf {
            return if self.rng.random_bool(0.6) {
                Term::var(*self.pick(&REALS))
            } else {
                self.real_lit()
            };
        }
        match self.rng.random_range(0..8) {
            0 | 1 => {
                let fs: Vec<_> = self.functions.iter().filter(|(n, _)| !n.starts_with('p')).cloned().collect();
                if fs.is_empty() {
                    return self.real(depth - 1);
                }
                let (name, arity) = self.pick(&fs).clone();
                let args = (0..arity).map(|_| self.real(depth - 1)).collect();
                Term::app(name.as_str(), args)
            }
            2 => Term::op(Op::Add, vec![self.real(depth - 1), self.real(depth - 1)]),
            3 => Term::op(Op::Sub, vec![self.real(depth - 1), self.real(depth - 1)]),
            4 => Term::op(Op::Mul, vec![self.real(depth - 1), self.real(depth - 1)]),
            5 => Term::op(Op::Neg, vec![self.real(depth - 1)]),
            6 => Term::op(Op::Ite, vec![self.boolean(depth - 1), self.real(depth - 1), self.real(depth - 1)]),
            _ => Term::op(Op::ToReal, vec![self.int(depth - 1)]),
        }
    }

    pub fn int(&mut self, depth: u32) -> Term {
        if depth == 0 || self.rng.random_bool(0.4) {
            return if self.rng.random_bool(0.5) {
                Term::var(*self.pick(&INTS))
            } else {
                Term::int(self.rng.random_range(-4..=4))
            };
        }
        match self.rng.random_range(0..4) {
            0 => Term::op(Op::Add, vec![self.int(depth - 1), self.int(depth - 1)]),
            1 => Term::op(Op::Mul, vec![self.int(depth - 1), self.int(depth - 1)]),
            2 => {
                let op = if self.rng.random_bool(0.5) { Op::IntDiv } else { Op::Mod };
                let d = *self.pick(&[-3i64, -2, 2, 3]);
                Term::op(op, vec![self.int(depth - 1), Term::int(d)])
            }
            _ => Term::op(Op::Abs, vec![self.int(depth - 1)]),
        }
    }

    pub fn boolean(&mut self, depth: u32) -> Term {
        if depth == 0 {
            return Term::op(Op::Le, vec![self.real(0), self.real(0)]);
        }
        match self.rng.random_range(0..9) {
            0 => Term::op(*self.pick(&[Op::Lt, Op::Le, Op::Gt, Op::Ge]), vec![self.real(depth - 1), self.real(depth - 1)]),
            1 => Term::eq(self.real(depth - 1), self.real(depth - 1)),
            2 => Term::op(Op::Ge, vec![self.int(depth - 1), self.int(depth - 1)]),
            3 => Term::and(vec![self.boolean(depth - 1), self.boolean(depth - 1)]),
            4 => Term::or(vec![self.boolean(depth - 1), self.boolean(depth - 1)]),
            5 => Term::not(self.boolean(depth - 1)),
            6 if self.functions.iter().any(|(n, _)| n == "p") => Term::app("p", vec![self.real(depth - 1)]),
            7 if self.quantifiers => {
                let v = *self.pick(&REALS);
                let body = self.boolean(depth - 1);
                if self.rng.random_bool(0.5) {
                    Term::forall(vec![(v.into(), Sort::Real)], body)
                } else {
                    Term::exists(vec![(v.into(), Sort::Real)], body)
                }
            }
            _ => Term::op(Op::Implies, vec![self.boolean(depth - 1), self.boolean(depth - 1)]),
        }
    }

    pub fn value(&mut self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.rng.random_range(-3..=3)))
    }

    /// A script declaring the generator's functions and constants, with
    /// `n` random assertions.
    pub fn script(&mut self, n: usize, depth: u32) -> Script {
        let mut cmds = vec![Command::SetLogic("UFNIRA".into())];
        cmds.extend(declarations(&self.functions));
        for _ in 0..n {
            let t = self.boolean(depth);
            cmds.push(Command::Assert(t));
        }
        cmds.push(Command::CheckSat);
        Script::new(cmds)
    }
}

pub fn declarations(functions: &[(String, usize)]) -> Vec<Command> {
    let mut out = Vec::new();
    for (name, arity) in functions {
        let ret = if name.starts_with('p') { Sort::Bool } else { Sort::Real };
        out.push(Command::DeclareFun(FunctionSignature::declared(name.as_str(), vec![Sort::Real; *arity], ret)));
    }
    for x in REALS {
        out.push(Command::DeclareFun(FunctionSignature::declared(x, vec![], Sort::Real)));
    }
    for n in INTS {
        out.push(Command::DeclareFun(FunctionSignature::declared(n, vec![], Sort::Int)));
    }
    out
}

/// Fixed interpretation used by evaluator oracles: functions are small
/// polynomials of their argument sum, `p*` is positivity.
pub fn interp(consts: BTreeMap<Symbol, Value>) -> impl Fn(&Symbol, &[Value]) -> Option<Value> {
    move |f: &Symbol, args: &[Value]| {
        if args.is_empty() {
            return consts.get(f).cloned();
        }
        let mut sum = BigRational::from_integer(0.into());
        for a in args {
            match a {
                Value::Num(q) => sum += q,
                Value::Bool(_) => return None,
            }
        }
        let one = BigRational::from_integer(1.into());
        let name = f.as_str();
        Some(if name.starts_with('p') {
            Value::Bool(sum > BigRational::from_integer(0.into()))
        } else if name.len() > 1 {
            let k = BigRational::from_integer(BigInt::from(name.bytes().map(u64::from).sum::<u64>() % 5));
            Value::Num(&sum * &k - one)
        } else if name == "f" {
            Value::Num(&sum * BigRational::from_integer(2.into()) + one)
        } else {
            Value::Num(&sum * &sum)
        })
    }
}

pub fn small_domain() -> Vec<BigRational> {
    (-1..=2).map(|n| BigRational::from_integer(BigInt::from(n))).collect()
}

/// A script whose assertions each mention a chosen subset of `u0..u{k-1}`
/// (unary, Real) under a universally bound `x`; returns it with the subsets.
pub fn cooccurrence_script(seed: u64, max_functions: usize, max_assertions: usize) -> (Script, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=max_functions);
    let n = rng.random_range(1..=max_assertions);
    let mut cmds = vec![Command::SetLogic("UFNIRA".into())];
    for i in 0..k {
        cmds.push(Command::DeclareFun(FunctionSignature::declared(
            format!("u{i}").as_str(),
            vec![Sort::Real],
            Sort::Real,
        )));
    }
    let mut subsets = Vec::with_capacity(n);
    for _ in 0..n {
        let size = match rng.random_range(0..10) {
            0 => 0,
            1..=5 => 1,
            6..=8 => 2,
            _ => 3,
        };
        let mut subset: Vec<usize> = (0..size).map(|_| rng.random_range(0..k)).collect();
        subset.sort();
        subset.dedup();
        let x = Term::var("x");
        let body = if subset.is_empty() {
            Term::op(Op::Ge, vec![Term::op(Op::Mul, vec![x.clone(), x]), Term::real(0)])
        } else {
            let mut apps: Vec<Term> = subset.iter().map(|i| Term::app(format!("u{i}").as_str(), vec![x.clone()])).collect();
            let lhs = if apps.len() == 1 { apps.pop().unwrap() } else { Term::op(Op::Add, apps) };
            Term::op(Op::Gt, vec![lhs, Term::real(rng.random_range(-3..=3))])
        };
        cmds.push(Command::Assert(Term::forall(vec![("x".into(), Sort::Real)], body)));
        subsets.push(subset);
    }
    cmds.push(Command::CheckSat);
    (Script::new(cmds), subsets)
}

/// Connected components of the co-occurrence graph by depth-first search,
/// as sorted lists of function indices ordered by smallest member.
pub fn brute_force_components(subsets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let nodes: std::collections::BTreeSet<usize> = subsets.iter().flatten().copied().collect();
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in subsets {
        for &a in s {
            for &b in s {
                adj.entry(a).or_default().push(b);
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for &start in &nodes {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            comp.push(v);
            stack.extend(adj[&v].iter().copied());
        }
        comp.sort();
        out.push(comp);
    }
    // smallest member by symbol name ("u10" < "u2"), matching the library
    out.sort_by_key(|c| c.iter().map(|i| format!("u{i}")).min());
    out
}
