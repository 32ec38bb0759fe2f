//! Ease-of-attack classification from host evidence.

pub mod cache;
pub mod dns;
pub mod host;
pub mod placeholder;
pub mod scan;

use crate::detector::AssetIdentifier;
use crate::model::Diagnostic;
use cache::{Gate, ProbeCache};
use dns::{resolve_dns, DnsProvider};
use placeholder::{rule_placeholder, PlaceholderOracle, RuleVerdict};
use scan::ScanDataProvider;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::net::IpAddr;

pub use host::{is_routable, looks_like_ip, parse_ip, validate_dns_format, validate_ip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EaseLevel {
    VeryDifficult,
    Difficult,
    Moderate,
    Easy,
}

impl EaseLevel {
    pub const ALL: [EaseLevel; 4] = [EaseLevel::VeryDifficult, EaseLevel::Difficult, EaseLevel::Moderate, EaseLevel::Easy];

    pub fn as_str(self) -> &'static str {
        match self {
            EaseLevel::VeryDifficult => "VERY_DIFFICULT",
            EaseLevel::Difficult => "DIFFICULT",
            EaseLevel::Moderate => "MODERATE",
            EaseLevel::Easy => "EASY",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

/// Which level a scannable host with a closed database port receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EaseMapping {
    /// MODERATE.
    #[default]
    Prose,
    /// DIFFICULT, as in the worked three-secret example.
    Table3,
}

impl EaseMapping {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prose" => Some(EaseMapping::Prose),
            "table3" => Some(EaseMapping::Table3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostKind {
    Dns,
    Ip,
}

/// What was learned about a host, in pipeline order. A checkpoint is
/// `None` when an earlier one failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostEvidence {
    pub raw_host: String,
    pub kind: HostKind,
    pub is_placeholder: bool,
    pub valid_dns: Option<bool>,
    pub resolvable: Option<bool>,
    pub resolved_ip: Option<IpAddr>,
    pub valid_ip: Option<bool>,
    pub routable: Option<bool>,
    pub scannable: Option<bool>,
    pub open_ports: BTreeSet<u16>,
    pub target_port: Option<u16>,
    pub db_port_open: Option<bool>,
    pub counter: u32,
    /// Why a checkpoint failed or was degraded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl HostEvidence {
    fn empty(raw_host: &str, kind: HostKind) -> Self {
        Self {
            raw_host: raw_host.to_string(),
            kind,
            is_placeholder: false,
            valid_dns: None,
            resolvable: None,
            resolved_ip: None,
            valid_ip: None,
            routable: None,
            scannable: None,
            open_ports: BTreeSet::new(),
            target_port: None,
            db_port_open: None,
            counter: 0,
            notes: Vec::new(),
        }
    }

    /// Checkpoints that apply to this host kind, in order.
    pub fn checkpoints(&self) -> Vec<Option<bool>> {
        let mut v = Vec::with_capacity(6);
        if self.kind == HostKind::Dns {
            v.push(self.valid_dns);
            v.push(self.resolvable);
        }
        v.extend([self.valid_ip, self.routable, self.scannable, self.db_port_open]);
        v
    }

    /// Leading checkpoints that passed; zero for placeholders.
    pub fn passed(&self) -> u32 {
        if self.is_placeholder {
            return 0;
        }
        self.checkpoints().iter().take_while(|c| **c == Some(true)).count() as u32
    }

    /// Evidence whose pipeline stops at the first `false` in `outcomes`;
    /// used to enumerate every checkpoint combination.
    pub fn from_checkpoints(raw_host: &str, kind: HostKind, placeholder: bool, outcomes: &[bool]) -> Self {
        let mut e = Self::empty(raw_host, kind);
        e.is_placeholder = placeholder;
        if !placeholder {
            let mut slots: Vec<&mut Option<bool>> = Vec::new();
            let HostEvidence { valid_dns, resolvable, valid_ip, routable, scannable, db_port_open, .. } = &mut e;
            if kind == HostKind::Dns {
                slots.push(valid_dns);
                slots.push(resolvable);
            }
            slots.extend([valid_ip, routable, scannable, db_port_open]);
            for (slot, ok) in slots.into_iter().zip(outcomes) {
                *slot = Some(*ok);
                if !ok {
                    break;
                }
            }
        }
        e.counter = e.passed();
        e
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EaseCategory {
    pub level: EaseLevel,
    pub evidence: HostEvidence,
}

/// Placeholder or any failure up to routability gives VERY_DIFFICULT;
/// routable but unscannable gives DIFFICULT; scannable gives MODERATE
/// (DIFFICULT under [`EaseMapping::Table3`]) unless the database port is
/// open, which gives EASY.
pub fn assign_ease(evidence: &HostEvidence, mapping: EaseMapping) -> EaseLevel {
    let ok = |c: Option<bool>| c == Some(true);
    let e = evidence;
    if e.is_placeholder || (e.kind == HostKind::Dns && !(ok(e.valid_dns) && ok(e.resolvable))) || !(ok(e.valid_ip) && ok(e.routable)) {
        return EaseLevel::VeryDifficult;
    }
    if !ok(e.scannable) {
        return EaseLevel::Difficult;
    }
    if ok(e.db_port_open) {
        return EaseLevel::Easy;
    }
    match mapping {
        EaseMapping::Prose => EaseLevel::Moderate,
        EaseMapping::Table3 => EaseLevel::Difficult,
    }
}

/// Explicit port, else the engine default.
pub fn target_port(asset: &AssetIdentifier) -> Option<u16> {
    asset.port.or_else(|| asset.db_type.default_port())
}

/// Whether the target port is among the known open ports.
pub fn check_port(evidence: &HostEvidence, asset: &AssetIdentifier) -> bool {
    target_port(asset).is_some_and(|p| evidence.open_ports.contains(&p))
}

/// Scannable iff the host is in the scan data with at least one service.
pub fn probe_scannable(ip: IpAddr, scanner: &dyn ScanDataProvider) -> std::result::Result<(bool, BTreeSet<u16>), String> {
    Ok(match scanner.services(ip)? {
        Some(ports) if !ports.is_empty() => (true, ports),
        _ => (false, BTreeSet::new()),
    })
}

pub struct Providers {
    pub dns: Box<dyn DnsProvider>,
    pub scan: Box<dyn ScanDataProvider>,
    pub oracle: Option<Box<dyn PlaceholderOracle>>,
}

impl Providers {
    pub fn any_live(&self) -> bool {
        self.dns.is_live() || self.scan.is_live() || self.oracle.as_ref().is_some_and(|o| o.is_live())
    }
}

/// Runs the six checkpoints for one asset. Live answers are cached and
/// bounded by a shared in-flight limit.
pub struct EaseAnalyzer {
    providers: Providers,
    mapping: EaseMapping,
    cache: ProbeCache,
    gate: Gate,
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

impl EaseAnalyzer {
    pub fn new(providers: Providers, mapping: EaseMapping, cache: ProbeCache, max_in_flight: usize) -> Self {
        Self { providers, mapping, cache, gate: Gate::new(max_in_flight) }
    }

    pub fn mapping(&self) -> EaseMapping {
        self.mapping
    }

    pub fn cache(&self) -> &ProbeCache {
        &self.cache
    }

    fn call<T>(&self, live: bool, ns: &str, key: &str, f: impl FnOnce() -> std::result::Result<T, String>) -> std::result::Result<T, String>
    where
        T: Serialize + for<'de> Deserialize<'de>,
    {
        if live {
            self.cache.get_or_try(ns, key, || self.gate.run(f))
        } else {
            f()
        }
    }

    fn placeholder(&self, host: &str, kind: HostKind, context: &str, e: &mut HostEvidence, diags: &mut Vec<Diagnostic>) -> bool {
        match rule_placeholder(host) {
            RuleVerdict::Placeholder(why) => {
                e.notes.push(format!("placeholder: {why}"));
                true
            }
            RuleVerdict::NotPlaceholder => false,
            RuleVerdict::Inconclusive => {
                let Some(o) = self.providers.oracle.as_deref().filter(|_| kind == HostKind::Dns) else { return false };
                match self.call(o.is_live(), "llm", &format!("{host}\n{context}"), || o.is_placeholder(host, context)) {
                    Ok(true) => {
                        e.notes.push("placeholder: language model".into());
                        true
                    }
                    Ok(false) => false,
                    Err(err) => {
                        diags.push(Diagnostic::new("ease", format!("placeholder check for {host} failed, using rules: {err}")));
                        e.notes.push("placeholder model unavailable; rules only".into());
                        false
                    }
                }
            }
        }
    }

    /// Evidence for `asset`; `context` is the asset line and its two
    /// neighbours.
    pub fn evidence(&self, asset: &AssetIdentifier, context: &str, diags: &mut Vec<Diagnostic>) -> HostEvidence {
        let host = asset.host.trim();
        let kind = if looks_like_ip(host) { HostKind::Ip } else { HostKind::Dns };
        let mut e = HostEvidence::empty(&asset.host, kind);
        e.target_port = target_port(asset);
        e.is_placeholder = self.placeholder(host, kind, context, &mut e, diags);
        if e.is_placeholder {
            return e;
        }
        let ip = match kind {
            HostKind::Ip => parse_ip(host),
            HostKind::Dns => {
                let valid = validate_dns_format(host);
                e.valid_dns = Some(valid);
                if !valid {
                    e.notes.push("invalid DNS name".into());
                    return self.finish(e);
                }
                let dns = self.providers.dns.as_ref();
                let answer = self.call(dns.is_live(), "dns", &host.to_ascii_lowercase(), || resolve_dns(host, dns));
                let ip = answer.unwrap_or_else(|err| {
                    diags.push(Diagnostic::new("ease", format!("resolving {host} failed: {err}")));
                    e.notes.push(format!("resolver error: {err}"));
                    None
                });
                e.resolvable = Some(ip.is_some());
                e.resolved_ip = ip;
                if ip.is_none() {
                    e.notes.push("name does not resolve".into());
                    return self.finish(e);
                }
                ip
            }
        };
        e.valid_ip = Some(ip.is_some());
        let Some(ip) = ip else {
            e.notes.push("invalid IP address".into());
            return self.finish(e);
        };
        e.resolved_ip = Some(ip);
        let routable = is_routable(ip);
        e.routable = Some(routable);
        if !routable {
            e.notes.push("address is not publicly routable".into());
            return self.finish(e);
        }
        let scan = self.providers.scan.as_ref();
        let (scannable, ports) = self.call(scan.is_live(), "scan", &ip.to_string(), || probe_scannable(ip, scan)).unwrap_or_else(|err| {
            diags.push(Diagnostic::new("ease", format!("scan data for {ip} unavailable: {err}")));
            e.notes.push(format!("scan data unavailable: {err}"));
            (false, BTreeSet::new())
        });
        e.scannable = Some(scannable);
        e.open_ports = ports;
        if !scannable {
            return self.finish(e);
        }
        let open = check_port(&e, asset);
        if e.target_port.is_none() {
            e.notes.push("no database port to check".into());
        }
        e.db_port_open = Some(open);
        self.finish(e)
    }

    fn finish(&self, mut e: HostEvidence) -> HostEvidence {
        e.counter = e.passed();
        e
    }

    pub fn analyze(&self, asset: &AssetIdentifier, context: &str, diags: &mut Vec<Diagnostic>) -> EaseCategory {
        let evidence = self.evidence(asset, context, diags);
        EaseCategory { level: assign_ease(&evidence, self.mapping), evidence }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DbType;
    use dns::FixtureDns;
    use scan::FixtureScan;

    const DNS: &str = "db.shop-prod.cn 120.77.222.217\nalias.shop-prod.cn CNAME db.shop-prod.cn\ninternal.shop-prod.cn 10.2.3.4\n";
    const SCAN: &str = "120.77.222.217 22,80\n47.91.20.8 22,3306\n";

    fn analyzer(mapping: EaseMapping) -> EaseAnalyzer {
        let p = Providers { dns: Box::new(FixtureDns::parse(DNS).unwrap()), scan: Box::new(FixtureScan::parse(SCAN).unwrap()), oracle: None };
        EaseAnalyzer::new(p, mapping, ProbeCache::in_memory(), DEFAULT_MAX_IN_FLIGHT)
    }

    fn asset(host: &str, port: Option<u16>, db: DbType) -> AssetIdentifier {
        AssetIdentifier { host: host.into(), port, database_name: None, db_type: db }
    }

    fn level(a: &EaseAnalyzer, host: &str, port: Option<u16>) -> (EaseLevel, HostEvidence) {
        let c = a.analyze(&asset(host, port, DbType::MySQL), "", &mut Vec::new());
        (c.level, c.evidence)
    }

    #[test]
    fn documented_levels() {
        let a = analyzer(EaseMapping::Prose);
        assert_eq!(level(&a, "127.0.0.1", None).0, EaseLevel::VeryDifficult);
        assert_eq!(level(&a, "192.168.1.1", None).0, EaseLevel::VeryDifficult);
        assert_eq!(level(&a, "111.230.140.27", None).0, EaseLevel::Difficult);
        assert_eq!(level(&a, "120.77.222.217", None).0, EaseLevel::Moderate);
        assert_eq!(level(&a, "47.91.20.8", None).0, EaseLevel::Easy);
        assert_eq!(level(&a, "47.91.20.8", Some(3307)).0, EaseLevel::Moderate);
        assert_eq!(level(&a, "www.example.com", None).0, EaseLevel::VeryDifficult);
        assert_eq!(level(&a, "x.x.x.x", None).0, EaseLevel::VeryDifficult);
        assert_eq!(level(&a, "alias.shop-prod.cn", None).0, EaseLevel::Moderate);
        assert_eq!(level(&a, "internal.shop-prod.cn", None).0, EaseLevel::VeryDifficult);
        assert_eq!(level(&a, "missing.shop-prod.cn", None).0, EaseLevel::VeryDifficult);
        assert_eq!(level(&a, "300.1.2.3", None).0, EaseLevel::VeryDifficult);
        let t3 = analyzer(EaseMapping::Table3);
        assert_eq!(level(&t3, "120.77.222.217", None).0, EaseLevel::Difficult);
    }

    #[test]
    fn counters_follow_pipeline() {
        let a = analyzer(EaseMapping::Prose);
        let (_, e) = level(&a, "db.shop-prod.cn", None);
        assert_eq!(e.counter, 5);
        assert_eq!(e.db_port_open, Some(false));
        assert_eq!(e.open_ports, [22, 80].into());
        let (_, e) = level(&a, "47.91.20.8", None);
        assert_eq!(e.counter, 4);
        let (_, e) = level(&a, "127.0.0.1", None);
        assert_eq!((e.counter, e.scannable), (1, None));
        let (_, e) = level(&a, "www.example.com", None);
        assert_eq!((e.counter, e.valid_dns), (0, None));
    }

    #[test]
    fn port_targets() {
        let mut e = HostEvidence::empty("h", HostKind::Ip);
        e.open_ports = [22, 3306].into();
        assert!(check_port(&e, &asset("h", None, DbType::MySQL)));
        e.open_ports = [80].into();
        assert!(!check_port(&e, &asset("h", Some(5432), DbType::PostgreSQL)));
        e.open_ports = [27017].into();
        assert!(!check_port(&e, &asset("h", Some(27018), DbType::MongoDB)));
        e.open_ports = [27018].into();
        assert!(check_port(&e, &asset("h", Some(27018), DbType::MongoDB)));
        assert!(!check_port(&e, &asset("h", None, DbType::Unknown)));
    }

    struct Down;
    impl ScanDataProvider for Down {
        fn services(&self, _: IpAddr) -> std::result::Result<Option<BTreeSet<u16>>, String> {
            Err("rate limited".into())
        }
    }
    struct SaysYes;
    impl PlaceholderOracle for SaysYes {
        fn is_placeholder(&self, _: &str, _: &str) -> std::result::Result<bool, String> {
            Ok(true)
        }
    }
    struct Broken;
    impl PlaceholderOracle for Broken {
        fn is_placeholder(&self, _: &str, _: &str) -> std::result::Result<bool, String> {
            Err("no key".into())
        }
    }

    #[test]
    fn degraded_providers_floor_the_level() {
        let p = Providers { dns: Box::new(FixtureDns::default()), scan: Box::new(Down), oracle: Some(Box::new(Broken)) };
        let a = EaseAnalyzer::new(p, EaseMapping::Prose, ProbeCache::in_memory(), 2);
        let mut d = Vec::new();
        let c = a.analyze(&asset("47.91.20.8", None, DbType::MySQL), "", &mut d);
        assert_eq!(c.level, EaseLevel::Difficult);
        assert_eq!(d.len(), 1);
        let c = a.analyze(&asset("db.corp.io", None, DbType::MySQL), "", &mut d);
        assert_eq!(c.level, EaseLevel::VeryDifficult);
        assert_eq!(d.len(), 2);
        assert!(!c.evidence.is_placeholder);
    }

    #[test]
    fn oracle_only_for_inconclusive_names() {
        let p = Providers { dns: Box::new(FixtureDns::parse(DNS).unwrap()), scan: Box::new(FixtureScan::parse(SCAN).unwrap()), oracle: Some(Box::new(SaysYes)) };
        let a = EaseAnalyzer::new(p, EaseMapping::Prose, ProbeCache::in_memory(), 2);
        let (l, e) = level(&a, "db.shop-prod.cn", None);
        assert_eq!(l, EaseLevel::VeryDifficult);
        assert!(e.is_placeholder);
        assert_eq!(level(&a, "47.91.20.8", None).0, EaseLevel::Easy);
    }

    #[test]
    fn exhaustive_checkpoints_are_monotone() {
        let a = EaseMapping::Prose;
        for bits in 0u32..64 {
            let outcomes: Vec<bool> = (0..6).map(|i| bits & (1 << i) != 0).collect();
            let e = HostEvidence::from_checkpoints("h.io", HostKind::Dns, false, &outcomes);
            let lvl = assign_ease(&e, a);
            for i in 0..6 {
                if outcomes[i] {
                    let mut lower = outcomes.clone();
                    lower[i] = false;
                    let l2 = assign_ease(&HostEvidence::from_checkpoints("h.io", HostKind::Dns, false, &lower), a);
                    assert!(l2 <= lvl, "{outcomes:?} -> {lower:?}");
                }
            }
            assert!(assign_ease(&HostEvidence::from_checkpoints("h.io", HostKind::Dns, true, &outcomes), a) == EaseLevel::VeryDifficult);
        }
    }
}
