//! Secret discovery: a built-in keyword/entropy finder and the external
//! findings file loader.

use super::grammar::is_templated;
use crate::error::{Error, Result};
use crate::model::SourceLocation;
use std::sync::LazyLock as Lazy;
use regex::Regex;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::Path;

pub const MIN_ENTROPY: f64 = 3.5;
pub const MIN_LENGTH: usize = 6;

const KEYWORDS: &[&str] = &["password", "passwd", "pwd", "pass", "secret", "token", "apikey", "api_key", "credential", "auth"];

/// A secret with where it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretCandidate {
    pub secret: String,
    pub location: SourceLocation,
    pub variable: Option<String>,
}

/// Shannon entropy in bits per character.
pub fn shannon_entropy(s: &str) -> f64 {
    let mut counts: HashMap<char, usize> = HashMap::new();
    let mut n = 0usize;
    for c in s.chars() {
        *counts.entry(c).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    counts.values().fold(0.0, |acc, &c| {
        let p = c as f64 / n as f64;
        acc - p * p.log2()
    })
}

static QUOTED: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"(?P<var>[A-Za-z_][A-Za-z0-9_.\-]*)['"]?\s*(?:=>|:=|=|:)\s*[rRbBuU]{0,2}(?:'(?P<v1>[^'\r\n]*)'|"(?P<v2>[^"\r\n]*)")"#).unwrap()
});

static BARE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"(?P<var>[A-Za-z_][A-Za-z0-9_.\-]*)[ \t]*(?:=|:)[ \t]*(?P<v3>[^'"\s;,#]+)[ \t]*(?:$|[;,#])"#).unwrap()
});

fn keyword_var(var: &str) -> bool {
    let v = var.to_ascii_lowercase();
    KEYWORDS.iter().any(|k| v.contains(k))
}

fn accept(value: &str) -> bool {
    value.chars().count() >= MIN_LENGTH && !is_templated(value) && shannon_entropy(value) >= MIN_ENTROPY && !value.contains("://")
}

/// Keyword-adjacent assignments whose value clears the entropy bar.
/// Python files require a quoted value.
pub fn find_secrets(path: &str, text: &str) -> Vec<SecretCandidate> {
    let python = path.ends_with(".py");
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut seen_cols = Vec::new();
        for c in QUOTED.captures_iter(line) {
            let var = c.name("var").unwrap().as_str();
            let v = c.name("v1").or(c.name("v2")).unwrap();
            if keyword_var(var) && accept(v.as_str()) {
                let col = line[..v.start()].chars().count() as u32 + 1;
                seen_cols.push(v.start());
                out.push(SecretCandidate {
                    secret: v.as_str().to_string(),
                    location: SourceLocation::new(path, i as u32 + 1, col),
                    variable: Some(var.to_string()),
                });
            }
        }
        if python {
            continue;
        }
        for c in BARE.captures_iter(line) {
            let var = c.name("var").unwrap().as_str();
            let v = c.name("v3").unwrap();
            if seen_cols.contains(&v.start()) || v.as_str().contains('(') {
                continue;
            }
            if keyword_var(var) && accept(v.as_str()) {
                out.push(SecretCandidate {
                    secret: v.as_str().to_string(),
                    location: SourceLocation::new(path, i as u32 + 1, line[..v.start()].chars().count() as u32 + 1),
                    variable: Some(var.to_string()),
                });
            }
        }
    }
    out
}

#[derive(Debug, Deserialize)]
struct FindingsFile {
    schema: u32,
    findings: Vec<FindingRecord>,
}

#[derive(Debug, Deserialize)]
struct FindingRecord {
    path: String,
    line: u32,
    secret: String,
    #[serde(default)]
    variable: Option<String>,
}

static VAR_BEFORE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r#"([A-Za-z_][A-Za-z0-9_.\-]*)['"]?\s*(?:=>|:=|=|:)\s*[rRbBuU]{0,2}['"]?$"#).unwrap());

/// Name assigned the secret on its line, if the line has that shape.
pub fn infer_variable(line: &str, secret: &str) -> Option<(String, u32)> {
    let at = line.find(secret)?;
    let col = line[..at].chars().count() as u32 + 1;
    let var = VAR_BEFORE.captures(&line[..at]).map(|c| c[1].to_string());
    Some((var.unwrap_or_default(), col))
}

/// Parse an external findings file. `lookup_line` returns the text of a
/// line so missing variable names and columns can be recovered.
pub fn parse_findings(text: &str, lookup_line: impl Fn(&str, u32) -> Option<String>) -> Result<Vec<SecretCandidate>> {
    let file: FindingsFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("findings file: {e}")))?;
    if file.schema != 1 {
        return Err(Error::Config(format!("findings file: unsupported schema {}", file.schema)));
    }
    let mut out = Vec::new();
    for r in file.findings {
        if r.secret.is_empty() || r.line == 0 {
            continue;
        }
        let path = r.path.replace('\\', "/").trim_start_matches("./").to_string();
        let (inferred, col) = lookup_line(&path, r.line)
            .and_then(|l| infer_variable(&l, &r.secret))
            .map(|(v, c)| (Some(v).filter(|v| !v.is_empty()), c))
            .unwrap_or((None, 1));
        out.push(SecretCandidate {
            variable: r.variable.or(inferred),
            location: SourceLocation::new(path, r.line, col),
            secret: r.secret,
        });
    }
    Ok(out)
}

pub fn load_findings(path: &Path, lookup_line: impl Fn(&str, u32) -> Option<String>) -> Result<Vec<SecretCandidate>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    parse_findings(&text, lookup_line)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_reference_values() {
        assert_eq!(shannon_entropy(""), 0.0);
        assert_eq!(shannon_entropy("aaaa"), 0.0);
        assert!((shannon_entropy("ab") - 1.0).abs() < 1e-12);
        // 16 distinct symbols → 4 bits
        assert!((shannon_entropy("0123456789abcdef") - 4.0).abs() < 1e-12);
        // Length 6 tops out at log2(6) < 3.5, so the length and entropy bars interact.
        assert!(shannon_entropy("abcdef") < MIN_ENTROPY);
    }

    #[test]
    fn finds_keyword_assignments() {
        let text = "db_host = 'h'\nDB_PASSWORD = 'Xk9#qL2vW7mZ'\nname = 'Xk9#qL2vW7mZ'\nmysql_pwd = \"123456\"\n";
        let s = find_secrets("a.py", text);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].secret, "Xk9#qL2vW7mZ");
        assert_eq!(s[0].variable.as_deref(), Some("DB_PASSWORD"));
        assert_eq!((s[0].location.line, s[0].location.column), (2, 16));
    }

    #[test]
    fn bare_values_only_outside_python() {
        let text = "DB_PASS=Xk9qL2vW7zMp\n";
        assert_eq!(find_secrets(".env", text).len(), 1);
        assert!(find_secrets("a.py", text).is_empty());
    }

    #[test]
    fn findings_file_schema() {
        let text = r#"{"schema":1,"findings":[{"path":"./app/db.py","line":2,"secret":"hunter22"}]}"#;
        let v = parse_findings(text, |p, l| (p == "app/db.py" && l == 2).then(|| "    mysql_password = 'hunter22'".to_string())).unwrap();
        assert_eq!(v[0].location.path, "app/db.py");
        assert_eq!(v[0].variable.as_deref(), Some("mysql_password"));
        assert_eq!(v[0].location.column, 23);
        assert!(parse_findings(r#"{"schema":2,"findings":[]}"#, |_, _| None).is_err());
        assert!(parse_findings("[]", |_, _| None).is_err());
    }
}
