//! File IO, generation transports, batch processing and the command-line
//! front end for the rubric reward engine.

pub mod batch;
pub mod cli;
pub mod io;
pub mod transport;

pub use rubric_reward_core as engine;
