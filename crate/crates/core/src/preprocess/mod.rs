//! Rewriting and partitioning of a script into independent components.

mod components;
mod rewrite;
mod union_find;

pub use components::{separate_components, Component};
pub use rewrite::{inline, rewrite_formula, simplify};
pub use union_find::UnionFind;
