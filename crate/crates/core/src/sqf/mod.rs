//! Sequence-form linear programming: Nash equilibria, perturbed programs
//! approximating gadget-game sequential equilibria, the ε-refinement loop and
//! frozen-prefix continuation programs.

pub mod lp;
mod sequence;
mod solve;
pub use solve::build_program;

pub use sequence::{PlayerSequences, SequenceIndex, SqfMatrices};
pub use solve::*;
