//! Python bindings: the command-line entry point plus a few structured
//! calls over module source text.

use petrel::fpstore::fingerprint;
use petrel::kernel::Expr;
use petrel::mcheck::{check_invariant, CheckOutcome, DEFAULT_LIMIT};
use petrel::proofman::{check, elaborate_all, print_obligation, CheckOptions, Target};
use petrel::syntax::{parse_module, SpecModule, StepLabel};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn module(source: &str) -> PyResult<SpecModule> {
    parse_module(source).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Run the command line with `args` (without the program name). Returns
/// the exit code and the printed output.
#[pyfunction]
fn run(args: Vec<String>) -> (i32, String) {
    petrel::cli::run(std::iter::once("petrel".to_string()).chain(args))
}

/// Regenerate the translation region. Returns the new text and a summary.
#[pyfunction]
fn translate(source: &str) -> PyResult<(String, String)> {
    let (text, out) = petrel::pluscal::translate_source(source).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((text, out.summary()))
}

/// Number of reachable states and whether every named invariant holds.
#[pyfunction]
#[pyo3(signature = (source, invariants, limit = DEFAULT_LIMIT))]
fn reachable_states(source: &str, invariants: Vec<String>, limit: usize) -> PyResult<(usize, bool)> {
    let m = module(source)?;
    let inv = Expr::and(invariants.iter().map(|n| Expr::op(n)).collect());
    match check_invariant(&m, &m.variables, &Expr::op("Init"), &Expr::op("Next"), &inv, limit) {
        Ok(CheckOutcome::Ok { states }) => Ok((states, true)),
        Ok(CheckOutcome::Violation { states, .. }) => Ok((states, false)),
        Ok(CheckOutcome::ExecutionError { error, .. }) => Err(PyValueError::new_err(error.to_string())),
        Err(e) => Err(PyValueError::new_err(e.to_string())),
    }
}

/// Every obligation as `(id, fingerprint, printed obligation)`.
#[pyfunction]
fn obligations(source: &str) -> PyResult<Vec<(String, String, String)>> {
    let m = module(source)?;
    let elabs = elaborate_all(&m).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(elabs
        .iter()
        .flat_map(|e| &e.obligations)
        .map(|o| (o.id.clone(), fingerprint(o).hex(), print_obligation(o)))
        .collect())
}

/// Prove with the ground back-end and no fingerprint store. Returns the
/// exit code and `(label, status)` for every step.
#[pyfunction]
#[pyo3(signature = (source, step = None))]
fn prove(source: &str, step: Option<&str>) -> PyResult<(i32, Vec<(String, String)>)> {
    let m = module(source)?;
    let target = match step {
        None => Target::File,
        Some(s) => Target::Step(None, StepLabel::parse(s).ok_or_else(|| PyValueError::new_err(format!("bad step label {s}")))?),
    };
    let r = check(&m, &target, None, &CheckOptions::default()).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let steps = r
        .theorems
        .iter()
        .flat_map(|t| &t.steps)
        .map(|s| (s.label.clone(), s.status.to_string()))
        .collect();
    Ok((r.exit_code(), steps))
}

#[pymodule]
fn petrel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(translate, m)?)?;
    m.add_function(wrap_pyfunction!(reachable_states, m)?)?;
    m.add_function(wrap_pyfunction!(obligations, m)?)?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    Ok(())
}
