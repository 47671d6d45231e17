//! Catalog reconstructions against the hand-written literal expansions.

#[path = "support/literal.rs"]
mod literal;

use bcst_core::catalog::{catalog_entries, find_entry, reconstruct};
use bcst_core::qstate::fidelity_up_to_phase;
use bcst_core::RuleStatus;
use literal::{expand, literal, literal_state};

#[test]
fn every_entry_matches_its_literal_expansion() {
    for entry in catalog_entries::<f64>() {
        let built = reconstruct(&entry).unwrap();
        let lit = literal_state(entry.id);
        let fid = fidelity_up_to_phase(&built, &lit).unwrap();
        assert!(fid >= 1.0 - 1e-12, "{}: fidelity {fid}", entry.id);
    }
}

#[test]
fn zha_amplitude_pattern() {
    // The 16 product amplitudes of magnitude 1/(2 sqrt 2) interfere pairwise:
    // half cancel and half double to 1/2.
    let s = reconstruct(&find_entry::<f64>("zha5").unwrap()).unwrap();
    let nonzero: Vec<f64> = s.amplitudes().iter().map(|a| a.norm()).filter(|&m| m > 1e-12).collect();
    assert_eq!(nonzero.len(), 4);
    for m in nonzero {
        assert!((m - 0.5).abs() < 1e-12);
    }
    let lit = expand(&literal("zha5").0, &literal("zha5").1);
    for (a, b) in s.amplitudes().iter().zip(&lit) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn six3_amplitudes_are_signed_quarter_roots() {
    let s = reconstruct(&find_entry::<f64>("six3").unwrap()).unwrap();
    let lit = expand(&literal("six3").0, &literal("six3").1);
    for (a, b) in s.amplitudes().iter().zip(&lit) {
        assert!((a - b).norm() < 1e-12);
    }
    let mags: Vec<f64> = lit.iter().map(|a| a.norm()).filter(|&m| m > 1e-12).collect();
    assert!(mags
        .iter()
        .all(|m| (m - 0.25).abs() < 1e-12 || (m - 0.5 / 2f64.sqrt()).abs() < 1e-12));
}

#[test]
fn six4b_is_flagged_and_collapses_to_two_terms() {
    let e = find_entry::<f64>("six4b").unwrap();
    assert_eq!(e.rule_status, RuleStatus::Violates(2));
    let fid = fidelity_up_to_phase(&reconstruct(&e).unwrap(), &literal_state("six1")).unwrap();
    assert!(fid >= 1.0 - 1e-12);
}
