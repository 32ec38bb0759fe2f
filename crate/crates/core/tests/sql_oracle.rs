//! Extractor output against a hand-labelled statement corpus.

use secrisk_core::keywords::extract_sql_keywords;
use std::collections::BTreeSet;

fn set(field: &str) -> BTreeSet<String> {
    let f = field.trim();
    if f == "~" {
        return BTreeSet::new();
    }
    f.split(',').map(|s| s.trim().to_string()).collect()
}

#[test]
fn hand_labelled_corpus() {
    let corpus = include_str!("data/sql_corpus.txt");
    let mut checked = 0;
    let mut failures = Vec::new();
    for line in corpus.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let parts: Vec<&str> = line.rsplitn(3, " | ").collect();
        let (stmt, tables, columns) = (parts[2], set(parts[1]), set(parts[0]));
        match extract_sql_keywords(stmt) {
            Ok(k) => {
                let got_t: BTreeSet<String> = k.tables.into_iter().collect();
                let got_c: BTreeSet<String> = k.columns.into_iter().collect();
                if got_t != tables || got_c != columns {
                    failures.push(format!("{stmt}\n  tables {got_t:?} want {tables:?}\n  columns {got_c:?} want {columns:?}"));
                }
            }
            Err(e) => failures.push(format!("{stmt}\n  error {e}")),
        }
        checked += 1;
    }
    assert_eq!(checked, 50);
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
}
