//! Turning validated definitions into strengthened scripts, trigger
//! annotations, and exclusion clauses.

use std::fmt;

use serde::Serialize;

use crate::smtlib::{Definition, FunctionSignature, Sort, Symbol, Term};

/// A concrete, type-checked definition for one uninterpreted function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instantiation {
    pub function: Symbol,
    pub params: Vec<(Symbol, Sort)>,
    pub ret_sort: Sort,
    pub body: Term,
}

impl Instantiation {
    pub fn signature(&self) -> FunctionSignature {
        FunctionSignature {
            name: self.function.clone(),
            arg_sorts: self.params.iter().map(|(_, s)| s.clone()).collect(),
            ret_sort: self.ret_sort.clone(),
            interpreted: true,
        }
    }

    pub fn to_definition(&self) -> Definition {
        Definition {
            signature: self.signature(),
            params: self.params.clone(),
            body: self.body.clone(),
        }
    }
}

impl fmt::Display for Instantiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_definition())
    }
}

impl Serialize for Instantiation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

mod apply;
mod exclusion;
mod merge;
mod triggers;

pub use apply::{apply_instantiations, apply_instantiations_inline, ApplyError};
pub use exclusion::{definition_axiom, make_exclusion_clause, ExclusionClause};
pub use merge::{merge_instantiations, MergeError};
pub use triggers::{add_triggers, patterns_from_candidates, quantifier_sites, QuantifierSite, TriggerPattern, TriggerWarning};
