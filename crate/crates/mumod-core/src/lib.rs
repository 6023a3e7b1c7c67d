//! Workbench for the multi-agent modal mu-calculus: hash-consed formulas,
//! finite Kripke models, frame-condition closures, satisfiability-preserving
//! translations between logics, a prefixed tableau engine, and a bounded
//! brute-force oracle for cross-validation.

pub mod kripke;
pub mod logic;
pub mod oracle;
pub mod syntax;
pub mod tableau;
pub mod translations;

pub use logic::{FrameCondition, LogicSpec};
pub use syntax::{AgentSet, Arena, FormulaId, NameId, Node};
