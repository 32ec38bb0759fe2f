mod common;

#[test]
fn snippets_match_reference_interpreter() {
    assert_eq!(common::check_dataflow_oracle().unwrap(), 30);
}
