//! PAC-reasoning engine.
//!
//! Problems are decomposed either bottom-up, by growing a computation graph
//! one vertex at a time, or top-down, by implementing declared functions
//! whose helpers are backed by reference implementations until none remain
//! unimplemented. At every step a critic keeps only the proposals that pass
//! their Example Validator on all of `m` shared i.i.d. samples, with `m`
//! chosen from the sample-complexity bounds in [`stats`].

pub mod bottomup;
pub mod dsl;
pub mod graph;
pub mod harness;
pub mod search;
pub mod stats;
pub mod topdown;
