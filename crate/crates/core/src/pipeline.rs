//! End-to-end scan: detection through ranking.

use crate::category::embedding::{EmbeddingProvider, WordVectors};
use crate::category::translate::{GoogleTranslate, Lexicon, TranslationProvider};
use crate::category::{CategoryMapper, Taxonomy};
use crate::config::{ProviderChoice, ScanConfig};
use crate::dataflow::sinks::builtin_specs;
use crate::detector::{analyze_files, builtin_grammars, secrets::load_findings, DetectorConfig};
use crate::ease::cache::{CallRecorder, ProbeCache};
use crate::ease::dns::{DnsProvider, FixtureDns, SystemDns};
use crate::ease::placeholder::{OpenAiOracle, PlaceholderOracle};
use crate::ease::scan::{CensysClient, FixtureScan, ScanDataProvider};
use crate::ease::{EaseAnalyzer, Providers};
use crate::error::{Error, Result};
use crate::keywords::extract_keywords;
use crate::model::Diagnostic;
use crate::report::Report;
use crate::repo::{load_repository, SourceFile};
use crate::risk::{rank_findings, RiskFinding};
use rayon::prelude::*;
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

/// Runs scans for one configuration and counts the live calls they make.
pub struct Scanner {
    config: ScanConfig,
    recorder: Arc<CallRecorder>,
}

/// Whether to use the live provider for `choice`. Offline runs never do;
/// asking for live while offline leaves a diagnostic.
fn wants_live(choice: ProviderChoice, offline: bool, what: &str, diags: &mut Vec<Diagnostic>) -> bool {
    match choice {
        ProviderChoice::Live if offline => {
            diags.push(Diagnostic::new("config", format!("offline run: live {what} provider not used")));
            false
        }
        ProviderChoice::Live | ProviderChoice::Auto => !offline,
        ProviderChoice::Fixture | ProviderChoice::None => false,
    }
}

fn load_fixture<T: Default>(path: Option<&Path>, what: &str, load: impl Fn(&Path) -> Result<T>, diags: &mut Vec<Diagnostic>) -> Result<T> {
    match path {
        Some(p) => load(p),
        None => {
            diags.push(Diagnostic::new("config", format!("no {what} fixture configured; using an empty table")));
            Ok(T::default())
        }
    }
}

impl Scanner {
    pub fn new(config: ScanConfig) -> Self {
        Self { config, recorder: CallRecorder::new() }
    }

    pub fn config(&self) -> &ScanConfig {
        &self.config
    }

    pub fn recorder(&self) -> Arc<CallRecorder> {
        self.recorder.clone()
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs(self.config.timeout_secs.max(1))
    }

    fn dns(&self, diags: &mut Vec<Diagnostic>) -> Result<Box<dyn DnsProvider>> {
        let c = &self.config;
        if c.dns_provider == ProviderChoice::None {
            return Ok(Box::new(FixtureDns::default()));
        }
        let fixture_given = c.dns_fixture.is_some() && c.dns_provider == ProviderChoice::Auto;
        if !fixture_given && wants_live(c.dns_provider, c.offline, "DNS", diags) {
            return Ok(Box::new(SystemDns::new(self.timeout(), self.recorder.clone())));
        }
        Ok(Box::new(load_fixture(c.dns_fixture.as_deref(), "DNS", FixtureDns::load, diags)?))
    }

    fn scan(&self, diags: &mut Vec<Diagnostic>) -> Result<Box<dyn ScanDataProvider>> {
        let c = &self.config;
        if c.scan_provider == ProviderChoice::None {
            return Ok(Box::new(FixtureScan::default()));
        }
        let fixture_given = c.scan_fixture.is_some() && c.scan_provider == ProviderChoice::Auto;
        if !fixture_given && wants_live(c.scan_provider, c.offline, "scan-data", diags) {
            match CensysClient::from_env(self.timeout(), self.recorder.clone()) {
                Some(client) => return Ok(Box::new(client)),
                None if c.scan_provider == ProviderChoice::Live => {
                    return Err(Error::Config("scan_provider=live needs SCAN_API_ID and SCAN_API_SECRET".into()));
                }
                None => {
                    diags.push(Diagnostic::new("config", "no scan-data credentials (SCAN_API_ID, SCAN_API_SECRET); public hosts count as unscannable"));
                    return Ok(Box::new(FixtureScan::default()));
                }
            }
        }
        Ok(Box::new(load_fixture(c.scan_fixture.as_deref(), "scan", FixtureScan::load, diags)?))
    }

    fn oracle(&self, diags: &mut Vec<Diagnostic>) -> Result<Option<Box<dyn PlaceholderOracle>>> {
        let c = &self.config;
        if !wants_live(c.llm_provider, c.offline, "language-model", diags) {
            return Ok(None);
        }
        match OpenAiOracle::from_env(self.timeout(), self.recorder.clone()) {
            Some(o) => Ok(Some(Box::new(o))),
            None if c.llm_provider == ProviderChoice::Live => Err(Error::Config("llm_provider=live needs LLM_API_KEY".into())),
            None => Ok(None),
        }
    }

    fn translator(&self, diags: &mut Vec<Diagnostic>) -> Result<Option<Box<dyn TranslationProvider>>> {
        let c = &self.config;
        if !wants_live(c.translate_provider, c.offline, "translation", diags) {
            return Ok(None);
        }
        match GoogleTranslate::from_env(self.timeout(), self.recorder.clone()) {
            Some(t) => Ok(Some(Box::new(t))),
            None if c.translate_provider == ProviderChoice::Live => Err(Error::Config("translate_provider=live needs TRANSLATE_API_KEY".into())),
            None => Ok(None),
        }
    }

    /// Scan the configured root. Errors are fatal configuration or I/O
    /// problems; everything else ends up in the report's diagnostics.
    pub fn run(&self) -> Result<Report> {
        let c = &self.config;
        let mut diags = Vec::new();
        let specs = builtin_specs();
        let (files, load_diags) = load_repository(&c.root, c.max_file_size, &specs)?;
        diags.extend(load_diags);
        self.scan_files(&files, diags)
    }

    /// Same as [`Scanner::run`] over files already in memory.
    pub fn scan_files(&self, files: &[SourceFile], mut diags: Vec<Diagnostic>) -> Result<Report> {
        let c = &self.config;
        let providers = Providers { dns: self.dns(&mut diags)?, scan: self.scan(&mut diags)?, oracle: self.oracle(&mut diags)? };
        let translator = self.translator(&mut diags)?;
        let cache = match &c.cache_file {
            Some(p) => ProbeCache::persistent(p, Duration::from_secs(c.cache_ttl_hours * 3600))?,
            None => ProbeCache::in_memory(),
        };
        let analyzer = EaseAnalyzer::new(providers, c.ease_mapping, cache, c.max_in_flight);
        let embedder: Option<Box<dyn EmbeddingProvider>> = c.embeddings.then(|| Box::new(WordVectors::bundled()) as Box<dyn EmbeddingProvider>);
        let mapper = CategoryMapper::new(Taxonomy::bundled(), c.cutoffs, embedder, Lexicon::bundled(), translator);

        let by_path: HashMap<&str, &SourceFile> = files.iter().map(|f| (f.rel_path.as_str(), f)).collect();
        let line_of = |path: &str, line: u32| by_path.get(path).and_then(|f| f.text.lines().nth(line.checked_sub(1)? as usize)).map(str::to_string);
        let external = match &c.findings {
            Some(p) => load_findings(p, line_of)?,
            None => Vec::new(),
        };
        let dcfg = DetectorConfig { neighbor_window: c.neighbor_window, min_prefix: c.min_prefix, max_file_size: c.max_file_size };
        let scan = analyze_files(files, &builtin_grammars(), &external, &dcfg);
        diags.extend(scan.diagnostics);
        let keywords = extract_keywords(&c.root, files, &scan.pairs, &mut diags);

        let scored: Vec<(RiskFinding, Vec<Diagnostic>)> = scan
            .pairs
            .par_iter()
            .map(|d| {
                let mut local = Vec::new();
                let kw = keywords.get(&d.pair.pair_id).cloned().unwrap_or_default();
                let value = mapper.value_of(&kw, &mut local);
                let context = context_lines(by_path.get(d.pair.asset_location.path.as_str()).copied(), d.pair.asset_location.line);
                let ease = analyzer.analyze(&d.pair.asset, &context, &mut local);
                (RiskFinding::new(d.pair.clone(), kw, value, ease, &c.scales), local)
            })
            .collect();
        let mut findings = Vec::with_capacity(scored.len());
        for (f, d) in scored {
            findings.push(f);
            diags.extend(d);
        }
        if let Err(e) = analyzer.cache().save() {
            diags.push(Diagnostic::new("ease", format!("probe cache not saved: {e}")));
        }
        diags.sort();
        diags.dedup();
        Ok(Report::new(c.echo(), c.scales.overrides(), rank_findings(findings), diags, c.alert_threshold))
    }
}

/// The asset line with one line either side.
fn context_lines(file: Option<&SourceFile>, line: u32) -> String {
    let Some(f) = file else { return String::new() };
    let lines: Vec<&str> = f.text.lines().collect();
    let i = (line.max(1) - 1) as usize;
    let lo = i.saturating_sub(1);
    let hi = (i + 2).min(lines.len());
    if lo >= hi {
        return String::new();
    }
    lines[lo..hi].join("\n")
}

pub fn run(config: &ScanConfig) -> Result<Report> {
    Scanner::new(config.clone()).run()
}
