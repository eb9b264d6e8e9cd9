mod support;

use std::path::PathBuf;

#[test]
fn scripted_suite_resolves_exactly_the_labeled_primitives() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/captype");
    let report = support::captype::run(&dir);
    assert_eq!(report.models, 20);
    assert!(report.failures.is_empty(), "{:#?}", report.failures);
    assert_eq!(report.resolved + report.rejected, 3 * 55);
}
