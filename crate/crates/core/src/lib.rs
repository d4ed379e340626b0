#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod aggregation;
pub mod audit;
pub mod execution;
pub mod genrm;
pub mod schema;
pub mod verifiers;
