//! The eleven acceptance criteria. Each test prints one PASS/FAIL line.
//! Runs shared between criteria are computed once per process.

use std::io::Write;

use infheat_core::operator::Mutation;
use infheat_core::verify::{self, Lab, Outcome};

fn report(outcome: Outcome) {
    // direct handle writes bypass the harness capture, so the line always shows
    let _ = writeln!(std::io::stdout().lock(), "{}", outcome.line());
    eprint!("{outcome}");
    assert!(outcome.passed, "criterion {} failed:\n{outcome}", outcome.id);
}

#[test]
fn criterion_01_exact_residuals() {
    report(verify::exact_residuals(Mutation::None));
}

#[test]
fn criterion_02_giant_identity() {
    report(verify::giant_identity(Mutation::None));
}

#[test]
fn criterion_03_operator_algebra() {
    report(verify::operator_algebra());
}

#[test]
fn criterion_04_radial_barenblatt() {
    report(verify::radial_barenblatt(Mutation::None));
}

#[test]
fn criterion_05_cauchy_decay() {
    report(verify::cauchy_decay(Lab::global()));
}

#[test]
fn criterion_06_barenblatt_attraction() {
    report(verify::barenblatt_attraction(Lab::global()));
}

#[test]
fn criterion_07_dirichlet_giant() {
    report(verify::dirichlet_giant(Lab::global()));
}

#[test]
fn criterion_08_eigen_residual() {
    report(verify::eigen_residuals(Lab::global()));
}

#[test]
fn criterion_09_benilan_crandall() {
    report(verify::benilan_crandall(Lab::global()));
}

#[test]
fn criterion_10_grid_sanity() {
    report(verify::grid_sanity());
}

#[test]
fn criterion_11_mutation_sensitivity() {
    report(verify::mutation_sensitivity());
}
