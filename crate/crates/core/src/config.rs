//! Scan configuration: defaults, flat `key=value` files and overrides.

use crate::category::Cutoffs;
use crate::ease::EaseMapping;
use crate::error::{Error, Result};
use crate::risk::Scales;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
}

/// `auto` picks the live provider when credentials exist and the run is
/// online; `fixture` and `none` never touch the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    #[default]
    Auto,
    Live,
    Fixture,
    None,
}

impl ProviderChoice {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "auto" => Self::Auto,
            "live" => Self::Live,
            "fixture" => Self::Fixture,
            "none" => Self::None,
            _ => return None,
        })
    }
}

/// Where a setting came from; later sources win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Default,
    File,
    Cli,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEntry {
    pub value: String,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub root: PathBuf,
    pub offline: bool,
    pub neighbor_window: usize,
    pub min_prefix: usize,
    pub max_file_size: u64,
    pub cutoffs: Cutoffs,
    pub scales: Scales,
    pub format: OutputFormat,
    pub ease_mapping: EaseMapping,
    pub findings: Option<PathBuf>,
    pub reveal_secrets: bool,
    pub alert_threshold: u32,
    pub dns_fixture: Option<PathBuf>,
    pub scan_fixture: Option<PathBuf>,
    pub dns_provider: ProviderChoice,
    pub scan_provider: ProviderChoice,
    pub llm_provider: ProviderChoice,
    pub translate_provider: ProviderChoice,
    pub embeddings: bool,
    pub cache_file: Option<PathBuf>,
    pub cache_ttl_hours: u64,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    origin: BTreeMap<String, Source>,
}

pub const KEYS: &[&str] = &[
    "offline",
    "neighbor_window",
    "min_prefix",
    "max_file_size",
    "cutoff.prefix",
    "cutoff.substring",
    "cutoff.semantic",
    "format",
    "ease_mapping",
    "findings",
    "reveal_secrets",
    "alert_threshold",
    "dns_fixture",
    "scan_fixture",
    "dns_provider",
    "scan_provider",
    "llm_provider",
    "translate_provider",
    "embeddings",
    "cache_file",
    "cache_ttl_hours",
    "max_in_flight",
    "timeout_secs",
];

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: expected a number, got `{v}`")))
}

fn parse_cutoff(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Config(format!("{key}: {x} outside (0, 1]")));
    }
    Ok(x)
}

fn opt_path(v: &str, base: Option<&Path>) -> Option<PathBuf> {
    if v.is_empty() {
        return None;
    }
    let p = PathBuf::from(v);
    Some(match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    })
}

impl ScanConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            offline: false,
            neighbor_window: 3,
            min_prefix: 3,
            max_file_size: 1 << 20,
            cutoffs: Cutoffs::default(),
            scales: Scales::default(),
            format: OutputFormat::Table,
            ease_mapping: EaseMapping::Prose,
            findings: None,
            reveal_secrets: false,
            alert_threshold: 800,
            dns_fixture: None,
            scan_fixture: None,
            dns_provider: ProviderChoice::Auto,
            scan_provider: ProviderChoice::Auto,
            llm_provider: ProviderChoice::Auto,
            translate_provider: ProviderChoice::Auto,
            embeddings: true,
            cache_file: None,
            cache_ttl_hours: 24,
            max_in_flight: crate::ease::DEFAULT_MAX_IN_FLIGHT,
            timeout_secs: 10,
            origin: BTreeMap::new(),
        }
    }

    /// Set one key. Relative paths are taken against `base` when given.
    pub fn apply(&mut self, key: &str, value: &str, source: Source, base: Option<&Path>) -> Result<()> {
        let v = value.trim();
        match key {
            "offline" => self.offline = parse_bool(key, v)?,
            "neighbor_window" => self.neighbor_window = parse_num(key, v)?,
            "min_prefix" => self.min_prefix = parse_num(key, v)?,
            "max_file_size" => self.max_file_size = parse_num(key, v)?,
            "cutoff.prefix" => self.cutoffs.prefix = parse_cutoff(key, v)?,
            "cutoff.substring" => self.cutoffs.substring = parse_cutoff(key, v)?,
            "cutoff.semantic" => self.cutoffs.semantic = parse_cutoff(key, v)?,
            "format" => {
                self.format = match v {
                    "table" => OutputFormat::Table,
                    "json" => OutputFormat::Json,
                    _ => return Err(Error::Config(format!("format: expected json or table, got `{v}`"))),
                }
            }
            "ease_mapping" => self.ease_mapping = EaseMapping::parse(v).ok_or_else(|| Error::Config(format!("ease_mapping: expected prose or table3, got `{v}`")))?,
            "findings" => self.findings = opt_path(v, base),
            "reveal_secrets" => self.reveal_secrets = parse_bool(key, v)?,
            "alert_threshold" => self.alert_threshold = parse_num(key, v)?,
            "dns_fixture" => self.dns_fixture = opt_path(v, base),
            "scan_fixture" => self.scan_fixture = opt_path(v, base),
            "dns_provider" | "scan_provider" | "llm_provider" | "translate_provider" => {
                let c = ProviderChoice::parse(v).ok_or_else(|| Error::Config(format!("{key}: expected auto, live, fixture or none, got `{v}`")))?;
                match key {
                    "dns_provider" => self.dns_provider = c,
                    "scan_provider" => self.scan_provider = c,
                    "llm_provider" => self.llm_provider = c,
                    _ => self.translate_provider = c,
                }
            }
            "embeddings" => self.embeddings = parse_bool(key, v)?,
            "cache_file" => self.cache_file = opt_path(v, base),
            "cache_ttl_hours" => self.cache_ttl_hours = parse_num(key, v)?,
            "max_in_flight" => {
                self.max_in_flight = parse_num(key, v)?;
                if self.max_in_flight == 0 {
                    return Err(Error::Config("max_in_flight: must be at least 1".into()));
                }
            }
            "timeout_secs" => self.timeout_secs = parse_num(key, v)?,
            k if k.starts_with("scale.") => self.scales.set(&k["scale.".len()..], parse_num(key, v)?)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        self.origin.insert(key.to_string(), source);
        Ok(())
    }

    /// `key = value` lines; `#` comments and blank lines are ignored.
    pub fn parse_file_text(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf);
        for (k, v) in Self::parse_file_text(&text)? {
            self.apply(&k, &v, Source::File, base.as_deref()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    pub fn source_of(&self, key: &str) -> Source {
        self.origin.get(key).copied().unwrap_or(Source::Default)
    }

    fn value_of(&self, key: &str) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let choice = |c: ProviderChoice| serde_json::to_value(c).unwrap().as_str().unwrap().to_string();
        match key {
            "offline" => self.offline.to_string(),
            "neighbor_window" => self.neighbor_window.to_string(),
            "min_prefix" => self.min_prefix.to_string(),
            "max_file_size" => self.max_file_size.to_string(),
            "cutoff.prefix" => self.cutoffs.prefix.to_string(),
            "cutoff.substring" => self.cutoffs.substring.to_string(),
            "cutoff.semantic" => self.cutoffs.semantic.to_string(),
            "format" => if self.format == OutputFormat::Json { "json" } else { "table" }.to_string(),
            "ease_mapping" => if self.ease_mapping == EaseMapping::Prose { "prose" } else { "table3" }.to_string(),
            "findings" => path(&self.findings),
            "reveal_secrets" => self.reveal_secrets.to_string(),
            "alert_threshold" => self.alert_threshold.to_string(),
            "dns_fixture" => path(&self.dns_fixture),
            "scan_fixture" => path(&self.scan_fixture),
            "dns_provider" => choice(self.dns_provider),
            "scan_provider" => choice(self.scan_provider),
            "llm_provider" => choice(self.llm_provider),
            "translate_provider" => choice(self.translate_provider),
            "embeddings" => self.embeddings.to_string(),
            "cache_file" => path(&self.cache_file),
            "cache_ttl_hours" => self.cache_ttl_hours.to_string(),
            "max_in_flight" => self.max_in_flight.to_string(),
            "timeout_secs" => self.timeout_secs.to_string(),
            _ => String::new(),
        }
    }

    /// Every setting with its origin; scale entries appear only when set.
    pub fn echo(&self) -> BTreeMap<String, ConfigEntry> {
        let mut out: BTreeMap<String, ConfigEntry> = KEYS.iter().map(|k| (k.to_string(), ConfigEntry { value: self.value_of(k), source: self.source_of(k) })).collect();
        for (k, s) in &self.origin {
            if let Some(rest) = k.strip_prefix("scale.") {
                let (kind, level) = rest.split_once('.').unwrap_or((rest, ""));
                let v = match kind {
                    "value" => crate::category::Sensitivity::parse(level).map(|l| self.scales.value_points(l)),
                    _ => crate::ease::EaseLevel::parse(&level.to_ascii_uppercase()).map(|l| self.scales.ease_points(l)),
                };
                out.insert(k.clone(), ConfigEntry { value: v.map(|v| v.to_string()).unwrap_or_default(), source: *s });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ScanConfig::new("/r");
        assert_eq!(c.neighbor_window, 3);
        assert_eq!(c.alert_threshold, 800);
        assert_eq!(c.cutoffs, Cutoffs::default());
        assert_eq!(c.ease_mapping, EaseMapping::Prose);
        assert!(c.echo().values().all(|e| e.source == Source::Default));
    }

    #[test]
    fn cli_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("secrisk.conf");
        std::fs::write(&f, "# settings\nalert_threshold = 300\nformat=json\ndns_fixture = fx/dns.txt\nscale.value.HIGH = 90\n").unwrap();
        let mut c = ScanConfig::new("/r");
        c.apply_file(&f).unwrap();
        c.apply("alert_threshold", "50", Source::Cli, None).unwrap();
        assert_eq!(c.alert_threshold, 50);
        assert_eq!(c.format, OutputFormat::Json);
        assert_eq!(c.dns_fixture, Some(dir.path().join("fx/dns.txt")));
        let echo = c.echo();
        assert_eq!(echo["alert_threshold"], ConfigEntry { value: "50".into(), source: Source::Cli });
        assert_eq!(echo["format"].source, Source::File);
        assert_eq!(echo["scale.value.HIGH"].value, "90");
        assert_eq!(echo["offline"].source, Source::Default);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ScanConfig::new("/r");
        assert!(c.apply("cutoff.prefix", "0", Source::Cli, None).is_err());
        assert!(c.apply("cutoff.prefix", "1.5", Source::Cli, None).is_err());
        assert!(c.apply("cutoff.semantic", "1", Source::Cli, None).is_ok());
        assert!(c.apply("neighbor_window", "-1", Source::Cli, None).is_err());
        assert!(c.apply("nope", "1", Source::Cli, None).is_err());
        assert!(c.apply("format", "xml", Source::Cli, None).is_err());
        assert!(c.apply("max_in_flight", "0", Source::Cli, None).is_err());
        assert!(ScanConfig::parse_file_text("just words\n").is_err());
    }
}
