//! Connection-string grammars: URL, key-value (ODBC/ADO) and JDBC forms.

use super::{AssetIdentifier, DetectionMethod, SecretAssetPair};
use crate::model::{DbType, SourceLocation};
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrammarGroup {
    UrlStyle,
    KeyValueStyle,
    JdbcStyle,
}

const URL_PATTERN: &str = r#"(?P<scheme>(?i:mysql|mariadb|postgresql|postgres|postgis|mongodb\+srv|mongodb|mssql))(?:\+[A-Za-z0-9_]+)?://(?:(?P<user>[^:@/\s'"`]*)(?::(?P<password>[^\s'"`]*))?@)?(?P<host>\[[0-9A-Fa-f:.]+\]|[^:/\s'"`?,;@]+)(?::(?P<port>\d{1,5}))?(?:,[^/\s'"`?]+)?(?:/(?P<db>[^?\s'"`/#;]*))?"#;

// A run of `key=value;` segments. Keys are resolved through a table
// afterwards because their order is free.
const KV_PATTERN: &str = r#"(?m)(?:[A-Za-z][A-Za-z0-9 _]{0,30}?[ \t]*=[ \t]*(?:\{[^}\r\n]*\}|[^;'"`\r\n]*)(?:;[ \t]*|$)){2,}"#;

const JDBC_PATTERN: &str = r#"jdbc:(?P<scheme>[A-Za-z0-9]+)(?::[A-Za-z0-9]+)?://(?P<host>\[[0-9A-Fa-f:.]+\]|[^:/;?\s'"`,]+)(?::(?P<port>\d{1,5}))?(?:/(?P<db>[^?;\s'"`]*))?(?P<params>[?;][^\s'"`]*)?"#;

/// One connection-string grammar.
#[derive(Debug, Clone)]
pub struct ConnectionStringGrammar {
    pub group: GrammarGroup,
    pub pattern: String,
    pub db_type_hint: DbType,
    regex: Regex,
}

impl ConnectionStringGrammar {
    pub fn new(group: GrammarGroup, pattern: &str, db_type_hint: DbType) -> Result<Self, regex::Error> {
        Ok(Self { group, pattern: pattern.to_string(), db_type_hint, regex: Regex::new(pattern)? })
    }
}

/// The three bundled grammars.
pub fn builtin_grammars() -> Vec<ConnectionStringGrammar> {
    vec![
        ConnectionStringGrammar::new(GrammarGroup::UrlStyle, URL_PATTERN, DbType::Unknown).unwrap(),
        ConnectionStringGrammar::new(GrammarGroup::KeyValueStyle, KV_PATTERN, DbType::SQLServer).unwrap(),
        ConnectionStringGrammar::new(GrammarGroup::JdbcStyle, JDBC_PATTERN, DbType::Unknown).unwrap(),
    ]
}

/// A captured field and its byte offset in the scanned text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Captured {
    pub text: String,
    pub offset: usize,
}

/// A parsed connection string; any field may be missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnMatch {
    pub group: GrammarGroup,
    pub scheme: String,
    pub start: usize,
    pub end: usize,
    pub user: Option<Captured>,
    pub password: Option<Captured>,
    pub host: Option<Captured>,
    pub port: Option<u16>,
    pub db: Option<String>,
    pub db_type: DbType,
}

fn captured(c: Option<regex::Match<'_>>, base: usize) -> Option<Captured> {
    c.filter(|m| !m.as_str().is_empty()).map(|m| Captured { text: m.as_str().to_string(), offset: base + m.start() })
}

fn parse_port(s: &str) -> Option<u16> {
    s.trim().parse::<u16>().ok().filter(|p| *p > 0)
}

fn strip_brackets(mut c: Captured) -> Captured {
    if c.text.starts_with('[') && c.text.ends_with(']') && c.text.len() > 2 {
        c.text = c.text[1..c.text.len() - 1].to_string();
        c.offset += 1;
    }
    c
}

/// Values containing template syntax are not literal credentials.
pub fn is_templated(s: &str) -> bool {
    s.contains('{')
        || s.contains('}')
        || s.contains("%s")
        || s.contains("%(")
        || s.contains("${")
        || s.contains(crate::dataflow::HOLE)
}

/// Every connection string in `text`, in offset order.
pub fn parse_connection_strings(text: &str, grammars: &[ConnectionStringGrammar]) -> Vec<ConnMatch> {
    let mut out = Vec::new();
    for g in grammars {
        match g.group {
            GrammarGroup::UrlStyle => url_matches(text, g, &mut out),
            GrammarGroup::KeyValueStyle => kv_matches(text, g, &mut out),
            GrammarGroup::JdbcStyle => jdbc_matches(text, g, &mut out),
        }
    }
    out.sort_by_key(|m| (m.start, m.end));
    // A JDBC URL also contains a URL-style tail; keep the enclosing match.
    let mut kept: Vec<ConnMatch> = Vec::new();
    for m in out {
        if kept.iter().any(|k| k.start <= m.start && m.end <= k.end && k.group != m.group) {
            continue;
        }
        kept.retain(|k| !(m.start <= k.start && k.end <= m.end && k.group != m.group));
        kept.push(m);
    }
    kept
}

fn url_matches(text: &str, g: &ConnectionStringGrammar, out: &mut Vec<ConnMatch>) {
    for c in g.regex.captures_iter(text) {
        let whole = c.get(0).unwrap();
        let scheme = c.name("scheme").map(|m| m.as_str().to_ascii_lowercase()).unwrap_or_default();
        let db_type = match DbType::from_hint(&scheme) {
            DbType::Unknown => g.db_type_hint,
            t => t,
        };
        out.push(ConnMatch {
            group: g.group,
            scheme,
            start: whole.start(),
            end: whole.end(),
            user: captured(c.name("user"), 0),
            password: captured(c.name("password"), 0),
            host: captured(c.name("host"), 0).map(strip_brackets),
            port: c.name("port").and_then(|m| parse_port(m.as_str())),
            db: c.name("db").map(|m| m.as_str().to_string()).filter(|s| !s.is_empty()),
            db_type,
        });
    }
}

#[derive(Clone, Copy, PartialEq)]
enum KvKey {
    Host,
    Database,
    User,
    Password,
    Port,
    Driver,
}

fn kv_key(k: &str) -> Option<KvKey> {
    let k = k.trim().to_ascii_lowercase();
    Some(match k.as_str() {
        "server" | "host" | "hostname" | "data source" | "address" | "addr" | "network address" => KvKey::Host,
        "database" | "initial catalog" | "dbname" => KvKey::Database,
        "uid" | "user id" | "user" | "username" | "user name" => KvKey::User,
        "pwd" | "password" => KvKey::Password,
        "port" => KvKey::Port,
        "driver" | "provider" => KvKey::Driver,
        _ => return None,
    })
}

fn kv_matches(text: &str, g: &ConnectionStringGrammar, out: &mut Vec<ConnMatch>) {
    static SEGMENT: std::sync::LazyLock<Regex> = std::sync::LazyLock::new(|| {
        Regex::new(r#"(?P<key>[A-Za-z][A-Za-z0-9 _]{0,30}?)[ \t]*=[ \t]*(?P<val>\{[^}\r\n]*\}|[^;'"`\r\n]*)"#).unwrap()
    });
    for run in g.regex.find_iter(text) {
        let mut m = ConnMatch {
            group: g.group,
            scheme: String::new(),
            start: run.start(),
            end: run.end(),
            user: None,
            password: None,
            host: None,
            port: None,
            db: None,
            db_type: g.db_type_hint,
        };
        for seg in SEGMENT.captures_iter(run.as_str()) {
            let Some(key) = kv_key(seg.name("key").unwrap().as_str()) else { continue };
            let v = seg.name("val").unwrap();
            let raw = v.as_str().trim_end();
            if raw.is_empty() {
                continue;
            }
            let (raw, off) = match raw.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
                Some(inner) => (inner, 1),
                None => (raw, 0),
            };
            let cap = Captured { text: raw.to_string(), offset: run.start() + v.start() + off };
            match key {
                KvKey::Host => {
                    let mut host = cap;
                    if let Some(rest) = host.text.strip_prefix("tcp:") {
                        host = Captured { text: rest.to_string(), offset: host.offset + 4 };
                    }
                    if let Some((h, p)) = host.text.split_once(',') {
                        m.port = parse_port(p);
                        host.text = h.to_string();
                    }
                    if let Some((h, _instance)) = host.text.split_once('\\') {
                        host.text = h.to_string();
                    }
                    let host = strip_brackets(host);
                    if !host.text.is_empty() {
                        m.host = Some(host);
                    }
                }
                KvKey::Database => m.db = Some(cap.text),
                KvKey::User => m.user = Some(cap),
                KvKey::Password => m.password = Some(cap),
                KvKey::Port => m.port = parse_port(&cap.text).or(m.port),
                KvKey::Driver => {
                    let t = DbType::from_hint(&cap.text);
                    if t != DbType::Unknown {
                        m.db_type = t;
                    }
                }
            }
        }
        if m.host.is_some() || m.password.is_some() {
            out.push(m);
        }
    }
}

fn jdbc_matches(text: &str, g: &ConnectionStringGrammar, out: &mut Vec<ConnMatch>) {
    for c in g.regex.captures_iter(text) {
        let whole = c.get(0).unwrap();
        let scheme = c.name("scheme").map(|m| m.as_str().to_ascii_lowercase()).unwrap_or_default();
        let mut m = ConnMatch {
            group: g.group,
            db_type: match DbType::from_hint(&scheme) {
                DbType::Unknown => g.db_type_hint,
                t => t,
            },
            scheme,
            start: whole.start(),
            end: whole.end(),
            user: None,
            password: None,
            host: captured(c.name("host"), 0).map(strip_brackets),
            port: c.name("port").and_then(|p| parse_port(p.as_str())),
            db: c.name("db").map(|d| d.as_str().to_string()).filter(|s| !s.is_empty()),
        };
        if let Some(params) = c.name("params") {
            let mut off = params.start() + 1;
            for part in params.as_str()[1..].split(['&', ';']) {
                if let Some((k, v)) = part.split_once('=') {
                    let cap = (!v.is_empty()).then(|| Captured { text: v.to_string(), offset: off + k.len() + 1 });
                    match k.to_ascii_lowercase().as_str() {
                        "user" | "username" => m.user = cap,
                        "password" => m.password = cap,
                        "databasename" | "database" if m.db.is_none() => m.db = cap.map(|c| c.text),
                        _ => {}
                    }
                }
                off += part.len() + 1;
            }
        }
        out.push(m);
    }
}

/// Re-render a parsed match through its grammar's template.
pub fn render(m: &ConnMatch) -> String {
    let f = |c: &Option<Captured>| c.as_ref().map(|c| c.text.clone()).unwrap_or_default();
    let port = m.port.map(|p| p.to_string());
    match m.group {
        GrammarGroup::UrlStyle => {
            let mut s = format!("{}://{}:{}@{}", m.scheme, f(&m.user), f(&m.password), f(&m.host));
            if let Some(p) = port {
                s.push(':');
                s.push_str(&p);
            }
            if let Some(db) = &m.db {
                s.push('/');
                s.push_str(db);
            }
            s
        }
        GrammarGroup::KeyValueStyle => {
            let mut s = format!("Server={}", f(&m.host));
            if let Some(p) = port {
                s.push(',');
                s.push_str(&p);
            }
            s.push(';');
            if let Some(db) = &m.db {
                s.push_str(&format!("Database={db};"));
            }
            s.push_str(&format!("User Id={};Password={};", f(&m.user), f(&m.password)));
            s
        }
        GrammarGroup::JdbcStyle => {
            let mut s = format!("jdbc:{}://{}", m.scheme, f(&m.host));
            if let Some(p) = port {
                s.push(':');
                s.push_str(&p);
            }
            s.push('/');
            s.push_str(m.db.as_deref().unwrap_or(""));
            s.push_str(&format!("?user={}&password={}", f(&m.user), f(&m.password)));
            s
        }
    }
}

/// Byte offset → 1-based (line, column) with columns counted in chars.
pub struct LineIndex<'a> {
    text: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self { text, starts }
    }

    pub fn locate(&self, offset: usize) -> (u32, u32) {
        let line = self.starts.partition_point(|s| *s <= offset).max(1) - 1;
        let col = self.text[self.starts[line]..offset.min(self.text.len())].chars().count();
        (line as u32 + 1, col as u32 + 1)
    }
}

/// Pairs from every connection string in a file that carries both a
/// literal password and a literal host.
pub fn match_connection_strings(path: &str, file_text: &str, grammars: &[ConnectionStringGrammar]) -> Vec<SecretAssetPair> {
    let idx = LineIndex::new(file_text);
    let mut out = Vec::new();
    for m in parse_connection_strings(file_text, grammars) {
        let (Some(pw), Some(host)) = (&m.password, &m.host) else { continue };
        if is_templated(&pw.text) || is_templated(&host.text) {
            continue;
        }
        let (sl, sc) = idx.locate(pw.offset);
        let (al, ac) = idx.locate(host.offset);
        out.push(SecretAssetPair::new(
            pw.text.clone(),
            SourceLocation::new(path, sl, sc),
            AssetIdentifier { host: host.text.clone(), port: m.port, database_name: m.db.clone(), db_type: m.db_type },
            SourceLocation::new(path, al, ac),
            DetectionMethod::ConnectionString,
            m.user.as_ref().map(|u| u.text.clone()).filter(|u| !is_templated(u)),
        ));
    }
    out
}
