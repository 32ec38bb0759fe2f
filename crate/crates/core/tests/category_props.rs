use proptest::prelude::*;
use secrisk_core::category::{CategoryMapper, MatcherKind, Sensitivity};
use secrisk_core::category::{aggregate_value, CategoryMapping};
use std::sync::OnceLock;

fn mapper() -> &'static CategoryMapper {
    static M: OnceLock<CategoryMapper> = OnceLock::new();
    M.get_or_init(CategoryMapper::bundled)
}

fn other_mapper() -> &'static CategoryMapper {
    static M: OnceLock<CategoryMapper> = OnceLock::new();
    M.get_or_init(CategoryMapper::bundled)
}

fn keyword() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,10}(_[a-z]{1,8}){0,2}",
        proptest::sample::select(vec!["phone", "email", "cell", "birth", "date", "card", "number", "name", "address", "salary", "token", "ssn"])
            .prop_flat_map(|a| proptest::sample::select(vec!["no", "id", "num", "date", "code", "key", "x"]).prop_map(move |b| format!("{a}_{b}"))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cutoffs_hold(k in keyword()) {
        let m = mapper().map_keyword(&k, &mut Vec::new());
        let c = mapper().cutoffs;
        match m.matcher {
            MatcherKind::Prefix => prop_assert!(m.score >= c.prefix),
            MatcherKind::Substring => prop_assert!(m.score >= c.substring),
            MatcherKind::Semantic => prop_assert!(m.score >= c.semantic),
            MatcherKind::None => prop_assert!(m.category.is_none()),
        }
        prop_assert_eq!(m.category.is_none(), m.matcher == MatcherKind::None);
    }

    #[test]
    fn deterministic(k in keyword()) {
        prop_assert_eq!(other_mapper().map_keyword(&k, &mut Vec::new()), mapper().map_keyword(&k, &mut Vec::new()));
    }

    #[test]
    fn adding_evidence_never_lowers(ks in proptest::collection::vec(keyword(), 0..6), extra in keyword()) {
        let maps: Vec<CategoryMapping> = ks.iter().map(|k| mapper().map_keyword(k, &mut Vec::new())).collect();
        let before = aggregate_value(maps.clone()).level;
        let mut more = maps;
        more.push(mapper().map_keyword(&extra, &mut Vec::new()));
        prop_assert!(aggregate_value(more).level >= before);
    }

    #[test]
    fn token_order_irrelevant_for_semantic(a in "[a-z]{3,8}", b in "[a-z]{3,8}") {
        use secrisk_core::category::{semantic_match, Taxonomy, embedding::WordVectors};
        static TV: OnceLock<(Taxonomy, WordVectors)> = OnceLock::new();
        let (t, v) = TV.get_or_init(|| (Taxonomy::bundled(), WordVectors::bundled()));
        let x = semantic_match(&format!("{a}_{b}"), t, v, 0.0).map(|(c, _)| c.name.clone());
        let y = semantic_match(&format!("{b}_{a}"), t, v, 0.0).map(|(c, _)| c.name.clone());
        prop_assert_eq!(x, y);
    }
}

#[test]
fn birth_date_order() {
    use secrisk_core::category::{semantic_match, Taxonomy, embedding::WordVectors};
    let t = Taxonomy::bundled();
    let v = WordVectors::bundled();
    let a = semantic_match("DATE_OF_BIRTH", &t, &v, 0.65).unwrap().0.name.clone();
    let b = semantic_match("BIRTH_DATE", &t, &v, 0.65).unwrap().0.name.clone();
    assert_eq!(a, b);
    assert_eq!(mapper().map_keyword("test", &mut Vec::new()).sensitivity(), Sensitivity::Unspecified);
}
