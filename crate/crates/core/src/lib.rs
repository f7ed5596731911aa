//! Safe subgame solving for two-player zero-sum imperfect-information games.
//!
//! The crate builds resolving, max-margin and unsafe gadget games from a
//! blueprint strategy, solves them with a sequence-form LP or CFR+ (both able
//! to refine towards gadget-game sequential equilibria through prior-weighted
//! trembles at auxiliary information sets), and measures the exploitability of
//! the recombined full-game strategies.

pub mod cfr;
pub mod efg;
pub mod gadget;
pub mod games;

pub use efg::{Game, GameError, NodeId, NodeKind, NodeTable, Player};
pub mod pipeline;
pub mod scalar;
pub mod sqf;
pub mod strategy;

/// Scalar type used by the solvers.
pub type Real = f64;
