//! Ranked report model and its JSON and table renderings.

use crate::config::ConfigEntry;
use crate::ease::EaseLevel;
use crate::category::Sensitivity;
use crate::model::Diagnostic;
use crate::risk::RiskFinding;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self { name: "secrisk".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub findings: usize,
    pub alert_threshold: u32,
    pub alerts: usize,
    pub by_value: BTreeMap<String, usize>,
    pub by_ease: BTreeMap<String, usize>,
}

impl Summary {
    pub fn of(findings: &[RiskFinding], alert_threshold: u32) -> Self {
        let mut by_value: BTreeMap<String, usize> = [Sensitivity::High, Sensitivity::Moderate, Sensitivity::Low, Sensitivity::Unspecified].iter().map(|s| (s.as_str().to_string(), 0)).collect();
        let mut by_ease: BTreeMap<String, usize> = EaseLevel::ALL.iter().map(|l| (l.as_str().to_string(), 0)).collect();
        for f in findings {
            *by_value.get_mut(f.value.level.as_str()).unwrap() += 1;
            *by_ease.get_mut(f.ease.level.as_str()).unwrap() += 1;
        }
        Self { findings: findings.len(), alert_threshold, alerts: findings.iter().filter(|f| f.risk_score >= alert_threshold).count(), by_value, by_ease }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub tool: ToolInfo,
    pub config: BTreeMap<String, ConfigEntry>,
    /// Scale entries that differ from the standard tables.
    pub scale_overrides: Vec<String>,
    pub secrets_masked: bool,
    pub summary: Summary,
    pub findings: Vec<RiskFinding>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    pub fn new(config: BTreeMap<String, ConfigEntry>, scale_overrides: Vec<String>, findings: Vec<RiskFinding>, diagnostics: Vec<Diagnostic>, alert_threshold: u32) -> Self {
        Self {
            schema: SCHEMA,
            tool: ToolInfo::default(),
            config,
            scale_overrides,
            secrets_masked: false,
            summary: Summary::of(&findings, alert_threshold),
            findings,
            diagnostics,
        }
    }

    /// Copy with every secret masked.
    pub fn masked(&self) -> Report {
        let mut r = self.clone();
        if !r.secrets_masked {
            for f in &mut r.findings {
                f.pair.secret = mask_secret(&f.pair.secret);
            }
            r.secrets_masked = true;
        }
        r
    }

    /// 2 when any finding reaches the alert threshold, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.summary.alerts > 0 {
            2
        } else {
            0
        }
    }
}

/// First two and last two characters kept; shorter secrets are fully
/// starred so that at most half of a secret is ever shown.
pub fn mask_secret(secret: &str) -> String {
    let chars: Vec<char> = secret.chars().collect();
    let n = chars.len();
    if n < 6 {
        return "*".repeat(n.max(1));
    }
    let mut out: String = chars[..2].iter().collect();
    out.push_str(&"*".repeat(n - 4));
    out.extend(&chars[n - 2..]);
    out
}

/// Pretty JSON with a trailing newline; secrets masked unless `reveal`.
pub fn emit_json(report: &Report, reveal: bool) -> String {
    let r = if reveal { report.clone() } else { report.masked() };
    let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
    s.push('\n');
    s
}

fn host_port(f: &RiskFinding) -> String {
    let a = &f.pair.asset;
    match a.port {
        Some(p) if a.host.contains(':') => format!("[{}]:{p}", a.host),
        Some(p) => format!("{}:{p}", a.host),
        None => a.host.clone(),
    }
}

/// Fixed-width table; secrets are always masked.
pub fn emit_table(report: &Report) -> String {
    let r = report.masked();
    let header = ["RANK", "SCORE", "VALUE", "EASE", "SECRET", "HOST", "LOCATION"];
    let rows: Vec<[String; 7]> = r
        .findings
        .iter()
        .map(|f| {
            [
                f.rank.to_string(),
                f.risk_score.to_string(),
                f.value.level.as_str().to_string(),
                f.ease.level.as_str().to_string(),
                f.pair.secret.clone(),
                host_port(f),
                f.pair.secret_location.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                s.push_str(&format!("{c:<w$}  "));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    let s = &r.summary;
    out.push_str(&format!("\n{} finding(s), {} at or above {}\n", s.findings, s.alerts, s.alert_threshold));
    if !r.scale_overrides.is_empty() {
        out.push_str(&format!("scale overrides: {}\n", r.scale_overrides.join(", ")));
    }
    if !r.diagnostics.is_empty() {
        out.push_str(&format!("{} diagnostic(s):\n", r.diagnostics.len()));
        for d in &r.diagnostics {
            out.push_str(&format!("  [{}] {}\n", d.stage, d.message));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masking() {
        assert_eq!(mask_secret("Fm)4dj"), "Fm**dj");
        assert_eq!(mask_secret("Zk2#pQ9xLmV4"), "Zk********V4");
        assert_eq!(mask_secret("abcde"), "*****");
        assert_eq!(mask_secret(""), "*");
        assert_eq!(mask_secret("密码密码密码"), "密码**密码");
    }

    #[test]
    fn empty_report() {
        let r = Report::new(BTreeMap::new(), vec![], vec![], vec![], 800);
        let j = emit_json(&r, false);
        assert!(j.ends_with("}\n"));
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["findings"], serde_json::json!([]));
        assert_eq!(r.exit_code(), 0);
        assert!(emit_table(&r).starts_with("RANK"));
    }
}
