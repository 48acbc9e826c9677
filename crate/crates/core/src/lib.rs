//! Bounds on the admissible source region of two-receiver discrete memoryless
//! broadcast channels with dependent sources.
//!
//! The crate evaluates achievability (Han–Costa) and converse (outer) bound
//! systems for explicit auxiliary-variable chains, searches the auxiliaries
//! for witnesses, and computes the exact regions for semi-deterministic and
//! more-capable channels.

pub mod aux_chain;
pub mod capacity_theorems;
pub mod channel_class;
pub mod cli_io;
pub mod common_part;
pub mod error;
pub mod inner_bound;
mod lp;
pub mod outer_bound;
pub mod prob_core;
pub mod report;
pub mod search;
pub mod simplex;
