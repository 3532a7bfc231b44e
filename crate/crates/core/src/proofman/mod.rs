//! The proof manager: elaborate proofs into obligations, dispatch them to
//! back-ends through the fingerprint store, and aggregate step statuses.

mod check;
mod elaborate;
mod obligation;

pub use check::{check, BackendChoice, CheckOptions, ObligationReport, Report, StepReport, StepStatus, Target, TheoremReport};
pub use elaborate::{elaborate, elaborate_all, sequent_formula, ElabError, Elaboration, StepNode};
pub use obligation::{print_obligation, Obligation};
