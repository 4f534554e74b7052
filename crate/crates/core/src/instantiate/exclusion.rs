use std::fmt;

use super::Instantiation;
use crate::smtlib::Term;

/// `⋁ᵢ ∃x̄. fᵢ(x̄) ≠ Iᵢ(x̄)`: at least one function differs somewhere from
/// its refuted definition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExclusionClause {
    pub term: Term,
}

impl fmt::Display for ExclusionClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(assert {})", self.term)
    }
}

fn application(inst: &Instantiation) -> Term {
    Term::app(
        inst.function.clone(),
        inst.params.iter().map(|(p, _)| Term::Var(p.clone())).collect(),
    )
}

/// Builds the clause excluding exactly the joint interpretation `insts`.
///
/// # Panics
/// If `insts` is empty (there is nothing to exclude).
pub fn make_exclusion_clause(insts: &[Instantiation]) -> ExclusionClause {
    assert!(!insts.is_empty(), "exclusion clause needs at least one instantiation");
    let mut disjuncts: Vec<Term> = insts
        .iter()
        .map(|inst| {
            let differs = Term::not(Term::eq(application(inst), inst.body.clone()));
            if inst.params.is_empty() {
                differs
            } else {
                Term::exists(inst.params.clone(), differs)
            }
        })
        .collect();
    let term = if disjuncts.len() == 1 {
        disjuncts.pop().expect("one disjunct")
    } else {
        Term::or(disjuncts)
    };
    ExclusionClause { term }
}

/// `∀x̄. f(x̄) = I(x̄)`, the definition as an axiom.
pub fn definition_axiom(inst: &Instantiation) -> Term {
    let eq = Term::eq(application(inst), inst.body.clone());
    if inst.params.is_empty() {
        eq
    } else {
        Term::forall(inst.params.clone(), eq)
    }
}
