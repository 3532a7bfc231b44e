//! Explicit-state model checking: evaluation, reachability, invariants,
//! and inductive-invariant checking.

pub mod eval;
pub mod explore;
pub mod solve;

pub use eval::{eval, EvalError, ExecutionError, State};
pub use explore::{check_inductive, check_invariant, CheckError, CheckOutcome, InductiveOutcome, Trace, DEFAULT_LIMIT};
pub use solve::{initial_states, successors, SolveError};
