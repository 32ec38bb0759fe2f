//! Neighbouring-line pairing of secrets with host assignments.

use super::secrets::SecretCandidate;
use super::{AssetIdentifier, DetectionMethod, SecretAssetPair};
use crate::model::{DbType, SourceLocation};
use std::sync::LazyLock as Lazy;
use regex::Regex;

static ASSIGN: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"(?P<var>[A-Za-z_][A-Za-z0-9_]*)['"]?\s*(?:=>|:=|=|:)\s*[rRuU]?(?P<val>'[^'\r\n]*'|"[^"\r\n]*"|[^\s'",;#)]+)"#).unwrap()
});

static HOST_TOKEN: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?x)^(?:
            (?:[0-9xX*\#]{1,3}\.){3}[0-9xX*\#]{1,3}
          | \[?[0-9A-Fa-f]{0,4}(?::[0-9A-Fa-f]{0,4}){2,7}\]?
          | (?:[A-Za-z0-9](?:[A-Za-z0-9-]{0,61}[A-Za-z0-9])?\.)+[A-Za-z]{2,63}
          | localhost
        )(?::(?P<port>\d{1,5}))?$",
    )
    .unwrap()
});

/// Whether `value` is an IP/DNS token, with an optional `:port`.
pub fn host_token(value: &str) -> Option<(String, Option<u16>)> {
    let c = HOST_TOKEN.captures(value)?;
    let port = c.name("port").and_then(|p| p.as_str().parse::<u16>().ok()).filter(|p| *p > 0);
    let host = match c.name("port") {
        Some(p) => &value[..p.start() - 1],
        None => value,
    };
    Some((host.trim_start_matches('[').trim_end_matches(']').to_string(), port))
}

/// Case-insensitive longest common prefix length, in chars.
pub fn common_prefix_len(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x.eq_ignore_ascii_case(y)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Host,
    Port,
    Database,
    Other,
}

fn var_kind(var: &str) -> VarKind {
    let v = var.to_ascii_lowercase();
    let last = v.rsplit(['_', '-', '.']).next().unwrap_or(&v);
    if v.contains("pass") || v.contains("pwd") || v.contains("secret") || v.contains("user") || v.contains("uid") {
        VarKind::Other
    } else if last.contains("port") {
        VarKind::Port
    } else if v.contains("host") || v.contains("server") || v.contains("addr") || v.ends_with("ip") || v.contains("endpoint") {
        VarKind::Host
    } else if matches!(last, "db" | "database" | "dbname" | "name" | "schema" | "catalog") {
        VarKind::Database
    } else {
        VarKind::Host
    }
}

struct Neighbor {
    line: usize,
    col: u32,
    var: String,
    kind: VarKind,
    value: String,
}

fn neighbors(lines: &[&str], python: bool) -> Vec<Vec<Neighbor>> {
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            ASSIGN
                .captures_iter(line)
                .filter_map(|c| {
                    let var = c.name("var")?.as_str();
                    let v = c.name("val")?;
                    let raw = v.as_str();
                    let quoted = raw.len() >= 2 && (raw.starts_with('\'') || raw.starts_with('"'));
                    if python && !quoted {
                        return None;
                    }
                    let (value, off) = if quoted { (&raw[1..raw.len() - 1], 1) } else { (raw, 0) };
                    Some(Neighbor {
                        line: i,
                        col: line[..v.start() + off].chars().count() as u32 + 1,
                        var: var.to_string(),
                        kind: var_kind(var),
                        value: value.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

/// Pair each secret with a host assigned within `window` lines to a
/// variable sharing at least `min_prefix` leading characters with the
/// secret's variable. Nearest line wins, then longer prefix, then the
/// earlier line.
pub fn heuristic_detect(path: &str, secrets: &[SecretCandidate], file_lines: &[&str], window: usize, min_prefix: usize) -> Vec<SecretAssetPair> {
    let python = path.ends_with(".py");
    let table = neighbors(file_lines, python);
    let mut out = Vec::new();
    for s in secrets {
        let Some(svar) = s.variable.as_deref().filter(|v| !v.is_empty()) else { continue };
        if s.secret.is_empty() {
            continue;
        }
        let center = s.location.line as usize - 1;
        let lo = center.saturating_sub(window);
        let hi = (center + window).min(file_lines.len().saturating_sub(1));
        if lo > hi || center >= file_lines.len() {
            continue;
        }
        let nearest = |kind: VarKind, accept: &dyn Fn(&Neighbor) -> bool| -> Option<(&Neighbor, usize)> {
            let mut best: Option<(usize, usize, usize, &Neighbor)> = None;
            for n in table[lo..=hi].iter().flatten() {
                if n.kind != kind || n.var == svar || !accept(n) {
                    continue;
                }
                let lcp = common_prefix_len(svar, &n.var);
                if lcp < min_prefix {
                    continue;
                }
                let key = (n.line.abs_diff(center), usize::MAX - lcp, n.line);
                if best.as_ref().is_none_or(|b| key < (b.0, b.1, b.2)) {
                    best = Some((key.0, key.1, key.2, n));
                }
            }
            best.map(|b| (b.3, usize::MAX - b.1))
        };
        let Some((host_n, _)) = nearest(VarKind::Host, &|n| host_token(&n.value).is_some()) else { continue };
        let (host, mut port) = host_token(&host_n.value).unwrap();
        if port.is_none() {
            port = nearest(VarKind::Port, &|n| n.value.parse::<u16>().is_ok_and(|p| p > 0)).map(|(n, _)| n.value.parse().unwrap());
        }
        let db = nearest(VarKind::Database, &|n| !n.value.is_empty() && !n.value.contains(char::is_whitespace)).map(|(n, _)| n.value.clone());
        let db_type = [svar, host_n.var.as_str()].iter().map(|v| DbType::from_hint(v)).find(|t| *t != DbType::Unknown).unwrap_or_default();
        out.push(SecretAssetPair::new(
            s.secret.clone(),
            SourceLocation::new(path, s.location.line, s.location.column),
            AssetIdentifier { host, port, database_name: db, db_type },
            SourceLocation::new(path, host_n.line as u32 + 1, host_n.col),
            DetectionMethod::NeighborHeuristic,
            None,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(secret: &str, line: u32, var: &str) -> SecretCandidate {
        SecretCandidate { secret: secret.into(), location: SourceLocation::new("cfg.py", line, 1), variable: Some(var.into()) }
    }

    fn lines_with(at: &[(usize, &str)], n: usize) -> Vec<String> {
        let mut v = vec![String::new(); n];
        for (i, s) in at {
            v[i - 1] = s.to_string();
        }
        v
    }

    fn run(secret: SecretCandidate, lines: &[String]) -> Vec<SecretAssetPair> {
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        heuristic_detect("cfg.py", &[secret], &refs, 3, 3)
    }

    #[test]
    fn shared_prefix_pairs() {
        let l = lines_with(&[(9, "mysql_host = \"10.1.2.3\""), (10, "mysql_password = \"Zk2pQ9xL\"")], 20);
        let p = run(cand("Zk2pQ9xL", 10, "mysql_password"), &l);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].asset.host, "10.1.2.3");
        assert_eq!(p[0].asset.db_type, DbType::MySQL);
        assert_eq!(p[0].asset_location.line, 9);
        assert_eq!(p[0].detection_method, DetectionMethod::NeighborHeuristic);
    }

    #[test]
    fn outside_window() {
        let l = lines_with(&[(15, "mysql_host = \"10.1.2.3\""), (10, "mysql_password = \"Zk2pQ9xL\"")], 20);
        assert!(run(cand("Zk2pQ9xL", 10, "mysql_password"), &l).is_empty());
    }

    #[test]
    fn prefix_mismatch() {
        let l = lines_with(&[(9, "redis_host = \"10.1.2.3\""), (10, "pg_pwd = \"Zk2pQ9xL\"")], 20);
        assert!(run(cand("Zk2pQ9xL", 10, "pg_pwd"), &l).is_empty());
    }

    #[test]
    fn nearest_then_longer_prefix() {
        let l = lines_with(
            &[(7, "db_host = 'far.example.org'"), (9, "db_main_host = 'a.example.org'"), (11, "db_host = 'b.example.org'"), (10, "db_main_password = 'x'")],
            20,
        );
        let p = run(cand("x", 10, "db_main_password"), &l);
        assert_eq!(p[0].asset.host, "a.example.org");
    }

    #[test]
    fn collects_port_and_database() {
        let l = lines_with(
            &[(8, "PG_HOST = 'pg.corp.io'"), (9, "PG_PORT = '6432'"), (10, "PG_PASSWORD = 'Zk2pQ9xL'"), (11, "PG_DB = 'billing'")],
            20,
        );
        let p = run(cand("Zk2pQ9xL", 10, "PG_PASSWORD"), &l);
        assert_eq!(p[0].asset.port, Some(6432));
        assert_eq!(p[0].asset.database_name.as_deref(), Some("billing"));
        assert_eq!(p[0].asset.db_type, DbType::PostgreSQL);
    }

    #[test]
    fn python_requires_quotes() {
        let l = lines_with(&[(9, "mysql_host = other.example.org"), (10, "mysql_password = 'Zk2pQ9xL'")], 12);
        assert!(run(cand("Zk2pQ9xL", 10, "mysql_password"), &l).is_empty());
    }

    #[test]
    fn host_tokens() {
        assert_eq!(host_token("x.x.x.x"), Some(("x.x.x.x".into(), None)));
        assert_eq!(host_token("db.example.com:3306"), Some(("db.example.com".into(), Some(3306))));
        assert_eq!(host_token("localhost"), Some(("localhost".into(), None)));
        assert!(host_token("::1").is_some());
        assert!(host_token("not a host").is_none());
        assert!(host_token("file.123").is_none());
    }
}
