//! One test per acceptance criterion; each prints its pass/fail line.

use std::sync::OnceLock;

use bellperm::bellstate::BellDiagonal;
use bellperm::protocol::DistillationStep;
use bellperm::verify::{self, CheckResult, SEED};

fn report(r: CheckResult) {
    println!("{r}");
    assert!(r.passed, "criterion {} failed: {}", r.id, r.detail);
}

fn instances() -> &'static [(BellDiagonal, DistillationStep)] {
    static CELL: OnceLock<Vec<(BellDiagonal, DistillationStep)>> = OnceLock::new();
    CELL.get_or_init(|| verify::oracle_instances(SEED))
}

#[test]
fn criterion_01_group_count() {
    report(verify::check_group_count());
}

#[test]
fn criterion_02_s6_isomorphism() {
    report(verify::check_s6(&bellperm::symplectic::gamma_table()));
}

#[test]
fn criterion_03_cnot_factorization() {
    report(verify::check_cnot());
}

#[test]
fn criterion_04_closed_form_matches_oracle() {
    report(verify::check_oracle(instances()));
}

#[test]
fn criterion_05_success_rate_identity() {
    report(verify::check_success_identity(instances()));
}

#[test]
fn criterion_06_two_pair_step_numbers() {
    report(verify::check_dej_numbers());
}

#[test]
fn criterion_07_decomposition_round_trip() {
    report(verify::check_decomposition(SEED));
}

#[test]
fn criterion_08_unitary_cross_check() {
    report(verify::check_unitary());
}

#[test]
fn criterion_09_four_pair_generator_product() {
    report(verify::check_proposed_reading());
}

#[test]
fn criterion_10_yield_dominance() {
    report(verify::check_yield_dominance());
}

#[test]
fn criterion_11_two_pair_fidelity_optimality() {
    report(verify::check_dej_optimal(SEED));
}

#[test]
fn criterion_12_hashing_threshold() {
    report(verify::check_hashing_threshold());
}

#[test]
fn tampered_gamma_table_is_rejected() {
    let mut table = bellperm::symplectic::gamma_table();
    table.swap(3, 7);
    assert!(!verify::check_s6(&table).passed);
}
