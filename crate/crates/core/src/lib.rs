//! Specifications, model checking, and hierarchical proofs for a small
//! TLA+-style language.

pub mod kernel;
pub mod syntax;
pub mod pluscal;
pub mod mcheck;
pub mod backends;
pub mod cli;
pub mod fpstore;
pub mod proofman;
