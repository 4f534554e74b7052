//! SMT-LIB 2 syntax: terms, scripts, parsing, printing and sort checking.

pub mod error;
pub mod eval;
pub mod parser;
pub mod printer;
pub mod script;
pub mod sexp;
pub mod subst;
pub mod term;
pub mod typeck;

pub use error::{ParseError, ParseErrorKind, SortError};
pub use parser::{parse_script, parse_sort, parse_term};
pub use printer::print_script;
pub use script::{Command, Script};
pub use subst::{alpha_equivalent, substitute, substitute_typed, NameSupply};
pub use term::{Attribute, Definition, FunctionSignature, Op, Quantifier, Sort, Symbol, Term};
pub use typeck::{elaborate, sort_of, sort_of_with, uninterpreted_symbols, Env};
