//! LLM-guided instantiation of uninterpreted functions for quantified SMT
//! formulas over non-linear arithmetic.
//!
//! The pipeline rewrites and partitions a script into independent
//! components, asks a language model for concrete definitions of the
//! uninterpreted functions in each component, substitutes them, and checks
//! the strengthened formula with a back-end solver. Refuted definitions are
//! excluded by learned clauses; when the iteration budget is spent the
//! back-end runs on the original formula plus those clauses.

pub mod benchgen;
pub mod instantiate;
pub mod llm;
pub mod orchestrator;
pub mod preprocess;
pub mod smtlib;
pub mod solver;
