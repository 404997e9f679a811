//! Tasks, scripted actors, seeding, and the statistical experiments.

pub mod config;
pub mod experiments;
pub mod external;
pub mod seed;
pub mod task;
pub mod tasks;
