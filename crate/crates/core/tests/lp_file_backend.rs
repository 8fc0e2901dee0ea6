mod common;

use std::path::PathBuf;
use std::process::Command;

use common::{rel_close, truncated_reference};
use hybrid_bid::prelude::*;

fn shim() -> Option<LpFileBackend> {
    let ok = Command::new("python3")
        .args(["-c", "import highspy"])
        .status()
        .map(|s| s.success())
        .unwrap_or(false);
    if !ok {
        eprintln!("python3 with highspy not available; skipping");
        return None;
    }
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/support/highs_shim.py");
    Some(LpFileBackend::new("python3").with_prefix_args([script.display().to_string()]))
}

#[test]
fn lp_file_backend_agrees_with_the_linked_solver() {
    let Some(external) = shim() else { return };
    let inst = truncated_reference(3, 2).with_gamma(1).unwrap();
    let options = SolveOptions::default();
    let a = solve_instance(&inst, &HighsBackend::new(), &options).unwrap();
    let b = solve_instance(&inst, &external, &options).unwrap();
    assert!(b.result.is_optimal());
    assert!(rel_close(a.result.objective_value, b.result.objective_value, 1e-6));
    assert!(b.audit().unwrap().is_empty());
}

#[test]
fn missing_program_is_reported() {
    let inst = truncated_reference(2, 1);
    let backend = LpFileBackend::new("/nonexistent/solver");
    assert!(matches!(
        solve_instance(&inst, &backend, &SolveOptions::default()),
        Err(Error::BackendUnavailable { .. })
    ));
}
