//! Passive scan data: which services a host is known to expose.

use super::cache::{CallRecorder, LiveKind, RateLimiter};
use super::host::parse_ip;
use crate::error::{Error, Result};
use base64::Engine;
use std::collections::{BTreeSet, HashMap};
use std::net::IpAddr;
use std::sync::Arc;
use std::time::Duration;

pub trait ScanDataProvider: Send + Sync {
    /// Known open ports, or `None` when the host is not in the database.
    fn services(&self, ip: IpAddr) -> std::result::Result<Option<BTreeSet<u16>>, String>;
    fn is_live(&self) -> bool {
        false
    }
}

/// `ip port,port,...` per line; a bare `ip` is a known host with no
/// services. `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct FixtureScan {
    table: HashMap<IpAddr, BTreeSet<u16>>,
}

impl FixtureScan {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Data(format!("scan fixture line {}: `{raw}`", n + 1));
            let mut it = line.split_whitespace();
            let ip = parse_ip(it.next().unwrap()).ok_or_else(bad)?;
            let ports: BTreeSet<u16> = match it.next() {
                None => BTreeSet::new(),
                Some(list) => list.split(',').filter(|p| !p.is_empty()).map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?,
            };
            if it.next().is_some() {
                return Err(bad());
            }
            table.insert(ip, ports);
        }
        Ok(Self { table })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }
}

impl ScanDataProvider for FixtureScan {
    fn services(&self, ip: IpAddr) -> std::result::Result<Option<BTreeSet<u16>>, String> {
        Ok(self.table.get(&ip).cloned())
    }
}

/// Censys Search v2 host lookup, authenticated with an API id and secret.
pub struct CensysClient {
    base: String,
    auth: String,
    agent: ureq::Agent,
    limiter: RateLimiter,
    recorder: Arc<CallRecorder>,
}

impl CensysClient {
    pub const ENDPOINT: &'static str = "https://search.censys.io/api/v2/hosts";

    pub fn new(api_id: &str, secret: &str, timeout: Duration, recorder: Arc<CallRecorder>) -> Self {
        Self::with_base(Self::ENDPOINT, api_id, secret, timeout, recorder)
    }

    pub fn with_base(base: &str, api_id: &str, secret: &str, timeout: Duration, recorder: Arc<CallRecorder>) -> Self {
        let auth = format!("Basic {}", base64::engine::general_purpose::STANDARD.encode(format!("{api_id}:{secret}")));
        Self {
            base: base.trim_end_matches('/').to_string(),
            auth,
            agent: crate::http::agent(timeout),
            limiter: RateLimiter::new(Duration::from_millis(400)),
            recorder,
        }
    }

    /// Built from `SCAN_API_ID` and `SCAN_API_SECRET` when both are set.
    pub fn from_env(timeout: Duration, recorder: Arc<CallRecorder>) -> Option<Self> {
        let id = std::env::var("SCAN_API_ID").ok().filter(|v| !v.is_empty())?;
        let secret = std::env::var("SCAN_API_SECRET").ok().filter(|v| !v.is_empty())?;
        Some(Self::new(&id, &secret, timeout, recorder))
    }
}

/// Ports listed under `result.services`.
pub fn parse_host_response(v: &serde_json::Value) -> std::result::Result<BTreeSet<u16>, String> {
    let services = v["result"]["services"].as_array().ok_or("response has no result.services")?;
    Ok(services.iter().filter_map(|s| s["port"].as_u64()).filter_map(|p| u16::try_from(p).ok()).collect())
}

impl ScanDataProvider for CensysClient {
    fn services(&self, ip: IpAddr) -> std::result::Result<Option<BTreeSet<u16>>, String> {
        self.limiter.wait();
        self.recorder.record(LiveKind::Scan);
        let resp = self.agent.get(&format!("{}/{ip}", self.base)).header("Authorization", &self.auth).call();
        match resp {
            Ok(mut r) => {
                let v: serde_json::Value = r.body_mut().read_json().map_err(|e| e.to_string())?;
                parse_host_response(&v).map(Some)
            }
            Err(ureq::Error::StatusCode(404)) => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    }

    fn is_live(&self) -> bool {
        true
    }
}
