mod common;

use secrisk_core::category::{jaro_winkler, ratcliff_obershelp};

#[test]
fn matches_reference_values() {
    assert_eq!(common::check_similarity_oracle().unwrap(), 100);
}

#[test]
fn worked_mapping_examples() {
    common::check_mapping_examples().unwrap();
}

#[test]
fn documented_pairs_clear_cutoff() {
    // reference values: jellyfish 0.8366..., difflib 0.7142...
    assert!((jaro_winkler("NID_NUMBER", "NATIONAL_ID_NUMBER") - 0.836_666_666_666_666_7).abs() < 1e-9);
    assert!((ratcliff_obershelp("NID_NUMBER", "NATIONAL_ID_NUMBER") - 0.714_285_714_285_714_3).abs() < 1e-9);
    assert!(jaro_winkler("FINANCIAL_ACC", "FINANCIAL_ACCOUNT_NUMBER") >= 0.7);
}
