//! Functional-constraint instances in four categories.

use std::fmt::Write as _;

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{poly::q, Expected, Generated, LOGIC};
use crate::instantiate::Instantiation;
use crate::smtlib::{parse_script, parse_term, Sort, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MfdCategory {
    /// Rational function constraints with `∃x. f(x) ≠ f(0)`.
    Rational,
    /// Linear pieces on 2 to 4 intervals with inequalities at the boundaries.
    Piecewise,
    /// `g(x) = f(x) + g(x - 1)` with positivity, partly unrolled.
    Recursive,
    /// Additivity and homogeneity with a pinned value.
    Limit,
}

impl MfdCategory {
    pub const ALL: [MfdCategory; 4] =
        [MfdCategory::Rational, MfdCategory::Piecewise, MfdCategory::Recursive, MfdCategory::Limit];

    pub fn name(self) -> &'static str {
        match self {
            MfdCategory::Rational => "rational",
            MfdCategory::Piecewise => "piecewise",
            MfdCategory::Recursive => "recursive",
            MfdCategory::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfdParams {
    pub per_category: usize,
    /// Ground unrolling steps of the recursive category.
    pub recursion_depth: usize,
}

impl Default for MfdParams {
    fn default() -> Self {
        MfdParams { per_category: 150, recursion_depth: 3 }
    }
}

fn lit(n: i64) -> String {
    Term::real(n).to_string()
}

fn rat(x: &BigRational) -> String {
    Term::Real(x.clone()).to_string()
}

fn header(funcs: &[&str]) -> String {
    let mut s = format!("(set-logic {LOGIC})\n");
    for f in funcs {
        let _ = writeln!(s, "(declare-fun {f} (Real) Real)");
    }
    s
}

fn witness(script: &crate::smtlib::Script, defs: &[(&str, &str)]) -> Vec<Instantiation> {
    let env = script.env();
    let params = vec![("x0".into(), Sort::Real)];
    defs.iter()
        .map(|(f, body)| Instantiation {
            function: (*f).into(),
            params: params.clone(),
            ret_sort: Sort::Real,
            body: parse_term(body, &env, &params, Some(&Sort::Real)).expect("witness body parses"),
        })
        .collect()
}

fn nonzero(rng: &mut impl Rng, bound: i64) -> i64 {
    loop {
        let v = rng.random_range(-bound..=bound);
        if v != 0 {
            return v;
        }
    }
}

/// One instance of `category`. Whether it is built consistent (sat, with a
/// witness) or with a deliberate contradiction (unsat) is drawn from `rng`;
/// piecewise instances are always labelled unknown.
pub fn gen_mfd_instance(category: MfdCategory, index: usize, params: &MfdParams, rng: &mut impl Rng) -> Generated {
    let consistent = rng.random_bool(0.5);
    let (text, expected, defs, info) = match category {
        MfdCategory::Rational => rational(consistent, rng),
        MfdCategory::Piecewise => piecewise(rng),
        MfdCategory::Recursive => recursive(consistent, params.recursion_depth, rng),
        MfdCategory::Limit => limit(consistent, rng),
    };
    let script = parse_script(&text).unwrap_or_else(|e| panic!("generated {} script: {e}\n{text}", category.name()));
    let witness = defs.map(|d| {
        let refs: Vec<(&str, &str)> = d.iter().map(|(f, b)| (f.as_str(), b.as_str())).collect();
        witness(&script, &refs)
    });
    let mut info = info;
    info["category"] = json!(category.name());
    info["index"] = json!(index);
    Generated { script, expected, witness, params: info }
}

type Parts = (String, Expected, Option<Vec<(String, String)>>, serde_json::Value);

fn rational(consistent: bool, rng: &mut impl Rng) -> Parts {
    let a = rng.random_range(1..=5);
    let b = nonzero(rng, 5);
    let c = rng.random_range(-5..=5);
    let mut s = header(&["f"]);
    let denom = format!("(+ (* x x) {})", lit(a));
    if consistent {
        // f(x) = (bx + c) / (x² + a), which is not constant since b ≠ 0
        let _ = writeln!(s, "(assert (forall ((x Real)) (= (* (f x) {denom}) (+ (* {} x) {}))))", lit(b), lit(c));
        let sample = rng.random_range(-3..=3);
        let value = BigRational::new((b * sample + c).into(), (sample * sample + a).into()) - q(1);
        let _ = writeln!(s, "(assert (> (f {}) {}))", lit(sample), rat(&value));
    } else {
        // f(x)·(x² + a) = c·(x² + a) forces f to be the constant c
        let _ = writeln!(s, "(assert (forall ((x Real)) (= (* (f x) {denom}) (* {} {denom}))))", lit(c));
    }
    s.push_str("(assert (exists ((x Real)) (not (= (f x) (f 0.0)))))\n(check-sat)\n");
    let defs = consistent.then(|| {
        vec![("f".to_string(), format!("(/ (+ (* {} x0) {}) (+ (* x0 x0) {}))", lit(b), lit(c), lit(a)))]
    });
    let expected = if consistent { Expected::Sat } else { Expected::Unsat };
    (s, expected, defs, json!({"variant": variant(consistent), "a": a, "b": b, "c": c}))
}

fn piecewise(rng: &mut impl Rng) -> Parts {
    let pieces = rng.random_range(2..=4);
    let mut bounds: Vec<i64> = Vec::new();
    while bounds.len() < pieces - 1 {
        let b = rng.random_range(-5..=5);
        if !bounds.contains(&b) {
            bounds.push(b);
        }
    }
    bounds.sort_unstable();
    let mut s = header(&["f"]);
    let mut lines = Vec::new();
    for i in 0..pieces {
        let slope = rng.random_range(-3..=3);
        let icpt = rng.random_range(-5..=5);
        let mut guard = Vec::new();
        if i > 0 {
            guard.push(format!("(>= x {})", lit(bounds[i - 1])));
        }
        if i < pieces - 1 {
            guard.push(format!("(< x {})", lit(bounds[i])));
        }
        let guard = if guard.len() == 1 { guard.remove(0) } else { format!("(and {})", guard.join(" ")) };
        let _ = writeln!(s, "(assert (forall ((x Real)) (=> {guard} (= (f x) (+ (* {} x) {})))))", lit(slope), lit(icpt));
        lines.push(json!({"slope": slope, "intercept": icpt}));
    }
    let half = BigRational::new(1.into(), 2.into());
    for b in &bounds {
        let left = rat(&(q(*b) - &half));
        let right = rat(&(q(*b) + &half));
        let op = if rng.random_bool(0.5) { "<" } else { ">" };
        let _ = writeln!(s, "(assert ({op} (f {left}) (f {right})))");
    }
    s.push_str("(check-sat)\n");
    (s, Expected::Unknown, None, json!({"boundaries": bounds, "pieces": lines}))
}

fn recursive(consistent: bool, depth: usize, rng: &mut impl Rng) -> Parts {
    let start = rng.random_range(-3..=3);
    let v0 = rng.random_range(-5..=5);
    let mut s = header(&["f", "g"]);
    s.push_str("(assert (forall ((x Real)) (= (g x) (+ (f x) (g (- x 1.0))))))\n");
    s.push_str("(assert (forall ((x Real)) (> (f x) 0.0)))\n");
    let _ = writeln!(s, "(assert (= (g {}) {}))", lit(start), lit(v0));
    for i in 1..=depth as i64 {
        let (p, c) = (lit(start + i - 1), lit(start + i));
        let _ = writeln!(s, "(assert (= (g {c}) (+ (f {c}) (g {p}))))");
    }
    let last = lit(start + depth as i64);
    // positivity makes g strictly increasing along the unrolled chain
    let op = if consistent { ">" } else { "<=" };
    let _ = writeln!(s, "(assert ({op} (g {last}) {}))", lit(v0));
    s.push_str("(check-sat)\n");
    let defs = consistent.then(|| {
        vec![("f".to_string(), "1.0".to_string()), ("g".to_string(), format!("(+ x0 {})", lit(v0 - start)))]
    });
    let expected = if consistent { Expected::Sat } else { Expected::Unsat };
    (s, expected, defs, json!({"variant": variant(consistent), "start": start, "g_start": v0, "depth": depth}))
}

fn limit(consistent: bool, rng: &mut impl Rng) -> Parts {
    let c = rng.random_range(1..=5);
    let mut s = header(&["f"]);
    s.push_str("(assert (forall ((x Real) (y Real)) (= (f (+ x y)) (+ (f x) (f y)))))\n");
    s.push_str("(assert (forall ((x Real) (k Real)) (= (f (* k x)) (* k (f x)))))\n");
    let _ = writeln!(s, "(assert (= (f 1.0) {}))", lit(c));
    let mut info = json!({"variant": variant(consistent), "c": c});
    if !consistent {
        // additivity forces f(m) = m·c
        let m = rng.random_range(2..=3);
        let slack = rng.random_range(0..=2);
        let _ = writeln!(s, "(assert (> (f {}) {}))", lit(m), lit(m * c + slack));
        info["m"] = json!(m);
        info["slack"] = json!(slack);
    }
    s.push_str("(check-sat)\n");
    let defs = consistent.then(|| vec![("f".to_string(), format!("(* {} x0)", lit(c)))]);
    let expected = if consistent { Expected::Sat } else { Expected::Unsat };
    (s, expected, defs, info)
}

fn variant(consistent: bool) -> &'static str {
    if consistent {
        "consistent"
    } else {
        "contradictory"
    }
}
