mod common;

use secrisk_core::ease::EaseMapping;

#[test]
fn fixture_matrix_levels() {
    common::check_ease_matrix().unwrap();
}

#[test]
fn checkpoint_toggling_is_monotone() {
    common::check_monotone_64().unwrap();
}

#[test]
fn table3_mapping_demotes_scannable_hosts() {
    use secrisk_core::detector::AssetIdentifier;
    use secrisk_core::ease::EaseLevel;
    use secrisk_core::model::DbType;
    let a = common::fixture_analyzer(EaseMapping::Table3);
    let asset = |h: &str| AssetIdentifier { host: h.into(), port: None, database_name: None, db_type: DbType::MySQL };
    assert_eq!(a.analyze(&asset("120.77.222.217"), "", &mut Vec::new()).level, EaseLevel::Difficult);
    assert_eq!(a.analyze(&asset("47.91.20.8"), "", &mut Vec::new()).level, EaseLevel::Easy);
}

#[test]
fn explicit_port_beats_the_default() {
    use secrisk_core::detector::AssetIdentifier;
    use secrisk_core::ease::EaseLevel;
    use secrisk_core::model::DbType;
    let a = common::fixture_analyzer(EaseMapping::Prose);
    let mut asset = AssetIdentifier { host: "39.108.12.40".into(), port: None, database_name: None, db_type: DbType::MySQL };
    assert_eq!(a.analyze(&asset, "", &mut Vec::new()).level, EaseLevel::Moderate);
    asset.port = Some(3307);
    let e = a.analyze(&asset, "", &mut Vec::new());
    assert_eq!(e.level, EaseLevel::Easy);
    assert_eq!(e.evidence.counter, 4);
}

#[test]
fn cname_chain_is_followed() {
    use secrisk_core::detector::AssetIdentifier;
    use secrisk_core::model::DbType;
    let a = common::fixture_analyzer(EaseMapping::Prose);
    let asset = AssetIdentifier { host: "mysql.brightwave.io".into(), port: None, database_name: None, db_type: DbType::MySQL };
    let e = a.analyze(&asset, "", &mut Vec::new()).evidence;
    assert_eq!(e.resolved_ip.map(|ip| ip.to_string()).as_deref(), Some("111.230.140.31"));
}
