#![allow(dead_code)]

use secrisk_core::config::ScanConfig;
use secrisk_core::pipeline::Scanner;
use serde_json::Value;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn corpus_dir() -> PathBuf {
    tests_dir().join("corpus")
}

/// Offline config using the shared corpus DNS and scan tables.
pub fn fixture_config(root: &Path) -> ScanConfig {
    let mut c = ScanConfig::new(root);
    c.offline = true;
    c.dns_fixture = Some(corpus_dir().join("dns.txt"));
    c.scan_fixture = Some(corpus_dir().join("scan.txt"));
    c
}

pub fn report_json(config: ScanConfig) -> Value {
    let report = Scanner::new(config).run().expect("scan");
    serde_json::to_value(&report).unwrap()
}

pub fn corpus_repos() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.join("expected.json").is_file())
        .collect();
    v.sort();
    v
}

fn names(v: &Value) -> BTreeSet<String> {
    v.as_array().unwrap().iter().map(|k| k["name"].as_str().unwrap().to_string()).collect()
}

fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string()).collect()
}

/// Scan one corpus repo and compare against its `expected.json`.
pub fn check_repo(dir: &Path) -> Result<(), String> {
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
    let mut config = fixture_config(dir);
    config.reveal_secrets = true;
    let report = report_json(config);
    let findings = report["findings"].as_array().unwrap();
    if findings.len() != 1 {
        return Err(format!("{} findings, expected 1", findings.len()));
    }
    let f = &findings[0];
    let pair = &f["pair"];
    let want = &expected["pair"];
    let got = [
        ("path", pair["secret_location"]["path"].clone()),
        ("line", pair["secret_location"]["line"].clone()),
        ("secret", pair["secret"].clone()),
        ("host", pair["asset"]["host"].clone()),
        ("port", pair["asset"]["port"].clone()),
        ("database", pair["asset"]["database_name"].clone()),
    ];
    for (k, v) in got {
        if v != want[k] {
            return Err(format!("pair.{k}: got {v}, expected {}", want[k]));
        }
    }
    let kw = &f["keywords"];
    let wk = &expected["keywords"];
    for (got, want, what) in [
        (&kw["database_names"], &wk["databases"], "databases"),
        (&kw["table_names"], &wk["tables"], "tables"),
        (&kw["column_names"], &wk["columns"], "columns"),
    ] {
        let (g, w) = (names(got), strings(want));
        if g != w {
            return Err(format!("{what}: got {g:?}, expected {w:?}"));
        }
    }
    if let Some(e) = expected.get("ease") {
        if &f["ease"]["level"] != e {
            return Err(format!("ease: got {}, expected {e}", f["ease"]["level"]));
        }
    }
    Ok(())
}

use secrisk_core::detector::AssetIdentifier;
use secrisk_core::ease::cache::ProbeCache;
use secrisk_core::ease::dns::FixtureDns;
use secrisk_core::ease::scan::FixtureScan;
use secrisk_core::ease::{assign_ease, EaseAnalyzer, EaseLevel, EaseMapping, HostEvidence, HostKind, Providers};
use secrisk_core::model::DbType;
use secrisk_core::report::{emit_json, Report};
use secrisk_core::risk::{rank_findings, RiskFinding};

pub fn fixture_analyzer(mapping: EaseMapping) -> EaseAnalyzer {
    let providers = Providers {
        dns: Box::new(FixtureDns::load(&corpus_dir().join("dns.txt")).unwrap()),
        scan: Box::new(FixtureScan::load(&corpus_dir().join("scan.txt")).unwrap()),
        oracle: None,
    };
    EaseAnalyzer::new(providers, mapping, ProbeCache::in_memory(), 8)
}

/// (case, host, expected level under the default mapping)
pub const EASE_MATRIX: [(&str, &str, EaseLevel); 7] = [
    ("placeholder DNS", "your-project-name.com", EaseLevel::VeryDifficult),
    ("unresolvable DNS", "gone.brightwave.io", EaseLevel::VeryDifficult),
    ("localhost", "localhost", EaseLevel::VeryDifficult),
    ("private IP", "192.168.1.20", EaseLevel::VeryDifficult),
    ("routable, unscannable", "111.230.140.27", EaseLevel::Difficult),
    ("scannable, port closed", "120.77.222.217", EaseLevel::Moderate),
    ("scannable, port open", "47.91.20.8", EaseLevel::Easy),
];

pub fn check_ease_matrix() -> Result<(), String> {
    let a = fixture_analyzer(EaseMapping::default());
    for (case, host, want) in EASE_MATRIX {
        let asset = AssetIdentifier { host: host.into(), port: None, database_name: None, db_type: DbType::MySQL };
        let got = a.analyze(&asset, "", &mut Vec::new()).level;
        if got != want {
            return Err(format!("{case} ({host}): got {got:?}, expected {want:?}"));
        }
    }
    Ok(())
}

/// Turning off any passed checkpoint never raises the level.
pub fn check_monotone_64() -> Result<(), String> {
    let mapping = EaseMapping::default();
    let level = |o: &[bool]| assign_ease(&HostEvidence::from_checkpoints("h.io", HostKind::Dns, false, o), mapping);
    for bits in 0u32..64 {
        let outcomes: Vec<bool> = (0..6).map(|i| bits & (1 << i) != 0).collect();
        let base = level(&outcomes);
        for i in (0..6).filter(|&i| outcomes[i]) {
            let mut lower = outcomes.clone();
            lower[i] = false;
            if level(&lower) > base {
                return Err(format!("{outcomes:?} -> {lower:?} raised the level"));
            }
        }
        let all_up: Vec<bool> = outcomes.iter().map(|_| true).collect();
        if level(&all_up) < base {
            return Err(format!("{outcomes:?} above all-pass"));
        }
    }
    Ok(())
}

pub fn trio_report(mapping: EaseMapping) -> Report {
    let mut c = fixture_config(&tests_dir().join("fixtures/table3"));
    c.ease_mapping = mapping;
    Scanner::new(c).run().expect("trio scan")
}

/// Findings as (file, score), in report order.
pub fn trio_order(mapping: EaseMapping) -> Vec<(String, u32)> {
    trio_report(mapping).findings.iter().map(|f| (f.pair.secret_location.path.clone(), f.risk_score)).collect()
}

/// Reference ordering: insertion sort on the documented key, which keeps
/// equal elements in input order.
pub fn reference_sort(items: &[(u32, u32, String, u32)]) -> Vec<usize> {
    let before = |a: &(u32, u32, String, u32), b: &(u32, u32, String, u32)| -> bool {
        if a.0 != b.0 {
            return a.0 > b.0;
        }
        if a.1 != b.1 {
            return a.1 > b.1;
        }
        if a.2 != b.2 {
            return a.2 < b.2;
        }
        a.3 < b.3
    };
    let mut idx: Vec<usize> = Vec::new();
    for i in 0..items.len() {
        let mut pos = idx.len();
        while pos > 0 && before(&items[i], &items[idx[pos - 1]]) {
            pos -= 1;
        }
        idx.insert(pos, i);
    }
    idx
}

/// `rank_findings` against the reference sort on `lists` random lists
/// with many ties.
pub fn check_stable_sort(lists: usize, seed: u64) -> Result<(), String> {
    use rand::{Rng, SeedableRng};
    let template = template_finding();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for n in 0..lists {
        let len = rng.random_range(0..40);
        let items: Vec<(u32, u32, String, u32)> = (0..len)
            .map(|_| {
                let score = [40, 100, 320, 800, 1600][rng.random_range(0..5)];
                let value = [5, 40, 100][rng.random_range(0..3)];
                let path = ["a.py", "b.py", "c/d.py"][rng.random_range(0..3)].to_string();
                (score, value, path, rng.random_range(1..4))
            })
            .collect();
        let findings: Vec<RiskFinding> = items
            .iter()
            .enumerate()
            .map(|(i, (s, v, p, l))| {
                let mut f = template.clone();
                f.risk_score = *s;
                f.value_points = *v;
                f.pair.secret_location.path = p.clone();
                f.pair.secret_location.line = *l;
                f.pair.pair_id = i.to_string();
                f
            })
            .collect();
        let got: Vec<usize> = rank_findings(findings).iter().map(|f| f.pair.pair_id.parse().unwrap()).collect();
        let want = reference_sort(&items);
        if got != want {
            return Err(format!("list {n}: got {got:?}, expected {want:?}"));
        }
    }
    Ok(())
}

/// Two offline scans of the corpus, as JSON, plus the live-call count of
/// each run.
pub fn offline_corpus_runs() -> (String, String, usize) {
    let run = || {
        let s = Scanner::new(fixture_config(&corpus_dir()));
        let r = s.run().unwrap();
        (emit_json(&r, false), s.recorder().total())
    };
    let (a, n1) = run();
    let (b, n2) = run();
    (a, b, n1 + n2)
}

/// One real finding to clone in synthetic ranking tests.
pub fn template_finding() -> RiskFinding {
    static T: std::sync::OnceLock<RiskFinding> = std::sync::OnceLock::new();
    T.get_or_init(|| trio_report(EaseMapping::default()).findings[0].clone()).clone()
}

#[derive(serde::Deserialize)]
struct DataflowCase {
    name: String,
    code: String,
    expected: Option<String>,
}

/// Resolved query text against CPython's output for the same snippets
/// (see data/gen_dataflow_oracle.py). Returns the number of cases.
pub fn check_dataflow_oracle() -> Result<usize, String> {
    use secrisk_core::dataflow::{build_def_use, find_sinks, parse_source, sinks::builtin_specs, HOLE};
    use secrisk_core::model::Role;
    let cases: Vec<DataflowCase> = serde_json::from_str(include_str!("../data/dataflow_oracle.json")).unwrap();
    let specs = builtin_specs();
    let mut failures = Vec::new();
    for c in &cases {
        let graph = build_def_use(&parse_source(&c.code));
        let sinks = find_sinks(&graph, &specs);
        let Some(q) = sinks.iter().filter_map(|s| s.get(Role::RawQuery)).next_back() else {
            failures.push(format!("{}: no query sink", c.name));
            continue;
        };
        match &c.expected {
            Some(want) if q.fully_resolved && q.value.as_deref() == Some(want.as_str()) => {}
            Some(want) => failures.push(format!("{}: got {:?} want {want:?}", c.name, q.text_with_holes())),
            None if !q.fully_resolved && q.value.is_none() && q.text_with_holes().contains(HOLE) => {}
            None => failures.push(format!("{}: runtime-dependent query resolved to {:?}", c.name, q.value)),
        }
    }
    if failures.is_empty() {
        Ok(cases.len())
    } else {
        Err(failures.join("; "))
    }
}

/// Similarity scores against values frozen from jellyfish and difflib
/// (see data/gen_similarity_oracle.py). Returns the number of pairs.
pub fn check_similarity_oracle() -> Result<usize, String> {
    use secrisk_core::category::{jaro_winkler, ratcliff_obershelp};
    let mut n = 0;
    for line in include_str!("../data/similarity_oracle.tsv").lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split('\t').collect();
        let (a, b) = (f[0], f[1]);
        let jw: f64 = f[2].parse().unwrap();
        let ro: f64 = f[3].parse().unwrap();
        if (jaro_winkler(a, b) - jw).abs() >= 1e-9 {
            return Err(format!("jw({a:?}, {b:?}) = {} want {jw}", jaro_winkler(a, b)));
        }
        if (ratcliff_obershelp(a, b) - ro).abs() >= 1e-9 {
            return Err(format!("ro({a:?}, {b:?}) = {} want {ro}", ratcliff_obershelp(a, b)));
        }
        n += 1;
    }
    Ok(n)
}

/// The four worked mapping examples plus a keyword with no category.
pub const MAPPING_EXAMPLES: [(&str, Option<&str>); 5] = [
    ("FINANCIAL_ACC", Some("FINANCIAL_ACCOUNT_NUMBER")),
    ("NID_NUMBER", Some("NATIONAL_ID_NUMBER")),
    ("CELL_NO", Some("PHONE_NO")),
    ("DATE_OF_BIRTH", Some("BIRTH_DATE")),
    ("test", None),
];

pub fn check_mapping_examples() -> Result<(), String> {
    use secrisk_core::category::{CategoryMapper, Sensitivity};
    let m = CategoryMapper::bundled();
    for (kw, want) in MAPPING_EXAMPLES {
        let got = m.map_keyword(kw, &mut Vec::new());
        let name = got.category.as_ref().map(|c| c.name.as_str());
        if name != want {
            return Err(format!("{kw}: got {name:?}, expected {want:?}"));
        }
        if want.is_none() && got.sensitivity() != Sensitivity::Unspecified {
            return Err(format!("{kw}: not UNSPECIFIED"));
        }
    }
    Ok(())
}
