//! A definition-simplification tool for a small s-expression language.
//!
//! Given a recursive function definition, a book of rewrite rules, and
//! optional assumptions, the library produces an equivalent new definition
//! with simplified body (recursive calls renamed to the new function), plus
//! a replayable certificate that an independent checker can validate
//! without rerunning the rewriter's search.

pub mod book;
pub mod cert;
pub mod error;
pub mod eval;
pub mod par;
pub mod pattern;
pub mod rewrite;
pub mod rules;
pub mod sexpr;
pub mod term;
pub mod transform;
pub mod value;
pub mod world;

pub use error::{Error, Result};
