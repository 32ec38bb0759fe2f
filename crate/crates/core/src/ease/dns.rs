//! Name resolution: fixture table and system resolver.

use super::cache::{CallRecorder, LiveKind};
use super::host::parse_ip;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::net::{IpAddr, ToSocketAddrs};
use std::sync::{mpsc, Arc};
use std::time::Duration;

pub const MAX_CNAME_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DnsAnswer {
    Address(IpAddr),
    Cname(String),
    NxDomain,
}

pub trait DnsProvider: Send + Sync {
    /// One lookup step. `Err` means the resolver failed (timeout etc.).
    fn lookup(&self, name: &str) -> std::result::Result<DnsAnswer, String>;
    fn is_live(&self) -> bool {
        false
    }
}

/// `name ip`, `name CNAME target` or `name NXDOMAIN` per line; `#` starts
/// a comment. Unlisted names answer NXDOMAIN.
#[derive(Debug, Clone, Default)]
pub struct FixtureDns {
    table: HashMap<String, DnsAnswer>,
}

impl FixtureDns {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Data(format!("dns fixture line {}: `{raw}`", n + 1));
            let answer = match parts.as_slice() {
                [_, t] if t.eq_ignore_ascii_case("NXDOMAIN") => DnsAnswer::NxDomain,
                [_, ip] => DnsAnswer::Address(parse_ip(ip).ok_or_else(bad)?),
                [_, c, target] if c.eq_ignore_ascii_case("CNAME") => DnsAnswer::Cname(target.trim_end_matches('.').to_ascii_lowercase()),
                _ => return Err(bad()),
            };
            table.insert(parts[0].trim_end_matches('.').to_ascii_lowercase(), answer);
        }
        Ok(Self { table })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }
}

impl DnsProvider for FixtureDns {
    fn lookup(&self, name: &str) -> std::result::Result<DnsAnswer, String> {
        Ok(self.table.get(&name.trim_end_matches('.').to_ascii_lowercase()).cloned().unwrap_or(DnsAnswer::NxDomain))
    }
}

/// The operating system resolver. It follows CNAMEs itself, so answers
/// are always addresses or NXDOMAIN; IPv4 is preferred.
pub struct SystemDns {
    timeout: Duration,
    recorder: Arc<CallRecorder>,
}

impl SystemDns {
    pub fn new(timeout: Duration, recorder: Arc<CallRecorder>) -> Self {
        Self { timeout, recorder }
    }
}

impl DnsProvider for SystemDns {
    fn lookup(&self, name: &str) -> std::result::Result<DnsAnswer, String> {
        self.recorder.record(LiveKind::Dns);
        let (tx, rx) = mpsc::channel();
        let target = format!("{name}:0");
        std::thread::spawn(move || {
            let _ = tx.send(target.to_socket_addrs().map(|it| it.map(|a| a.ip()).collect::<Vec<_>>()));
        });
        match rx.recv_timeout(self.timeout) {
            Ok(Ok(mut ips)) => {
                ips.sort_by_key(|ip| (ip.is_ipv6(), *ip));
                Ok(ips.first().map(|ip| DnsAnswer::Address(*ip)).unwrap_or(DnsAnswer::NxDomain))
            }
            Ok(Err(_)) => Ok(DnsAnswer::NxDomain),
            Err(_) => Err(format!("lookup of {name} timed out after {:?}", self.timeout)),
        }
    }

    fn is_live(&self) -> bool {
        true
    }
}

/// Follow CNAME records until an address; `Ok(None)` for NXDOMAIN, loops
/// and chains deeper than [`MAX_CNAME_DEPTH`].
pub fn resolve_dns(host: &str, resolver: &dyn DnsProvider) -> std::result::Result<Option<IpAddr>, String> {
    let mut name = host.to_string();
    for _ in 0..=MAX_CNAME_DEPTH {
        match resolver.lookup(&name)? {
            DnsAnswer::Address(ip) => return Ok(Some(ip)),
            DnsAnswer::NxDomain => return Ok(None),
            DnsAnswer::Cname(next) => name = next,
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "db.fixture.test 203.0.113.5\n# alias chain\na.fixture.test CNAME b.fixture.test\nb.fixture.test CNAME c.fixture.test.\nc.fixture.test 198.51.100.7\ngone.fixture.test NXDOMAIN\nloop1.x CNAME loop2.x\nloop2.x CNAME loop1.x\nv6.fixture.test 2001:db8::5\n";

    #[test]
    fn fixture_answers() {
        let f = FixtureDns::parse(TABLE).unwrap();
        assert_eq!(resolve_dns("db.fixture.test", &f).unwrap(), Some("203.0.113.5".parse().unwrap()));
        assert_eq!(resolve_dns("A.Fixture.Test", &f).unwrap(), Some("198.51.100.7".parse().unwrap()));
        assert_eq!(resolve_dns("gone.fixture.test", &f).unwrap(), None);
        assert_eq!(resolve_dns("unlisted.fixture.test", &f).unwrap(), None);
        assert_eq!(resolve_dns("loop1.x", &f).unwrap(), None);
        assert_eq!(resolve_dns("v6.fixture.test", &f).unwrap(), Some("2001:db8::5".parse().unwrap()));
    }

    #[test]
    fn depth_is_capped() {
        let mut t = String::new();
        for i in 0..MAX_CNAME_DEPTH {
            t.push_str(&format!("n{i}.x CNAME n{}.x\n", i + 1));
        }
        t.push_str(&format!("n{}.x 8.8.8.8\n", MAX_CNAME_DEPTH));
        let f = FixtureDns::parse(&t).unwrap();
        assert!(resolve_dns("n0.x", &f).unwrap().is_some());
        t.push_str("m.x CNAME n0.x\n");
        let f = FixtureDns::parse(&t).unwrap();
        assert_eq!(resolve_dns("m.x", &f).unwrap(), None);
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(FixtureDns::parse("a.b\n").is_err());
        assert!(FixtureDns::parse("a.b not-an-ip\n").is_err());
        assert!(FixtureDns::parse("a.b ALIAS c d\n").is_err());
    }

    struct Failing;
    impl DnsProvider for Failing {
        fn lookup(&self, _: &str) -> std::result::Result<DnsAnswer, String> {
            Err("timeout".into())
        }
    }

    #[test]
    fn resolver_errors_propagate() {
        assert!(resolve_dns("x.y", &Failing).is_err());
    }
}
