//! An interactive prover for the reasoning logic G: λ-tree syntax with
//! nominal constants and the ∇ quantifier, fixed-point definitions with
//! ∇ in clause heads, natural-number style induction via annotations, and
//! a built-in embedding of second-order hereditary Harrop specifications.

pub mod definitions;
pub mod elab;
pub mod formula;
pub mod kernel;
pub mod parse;
pub mod print;
pub mod session;
pub mod sig;
pub mod speclogic;
pub mod tactics;
pub mod terms;
pub mod unify;
