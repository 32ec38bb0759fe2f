//! Pairs recovered from resolved driver/ORM call arguments.

use super::grammar::{is_templated, parse_connection_strings, ConnectionStringGrammar};
use super::heuristic::host_token;
use super::{AssetIdentifier, DetectedPair, DetectionMethod, SecretAssetPair, SinkRef};
use crate::dataflow::{ResolvedArgument, SinkMatch};
use crate::model::{DbType, Diagnostic, Role, SourceLocation};
use crate::pysyntax::Pos;

/// Source position of byte `offset` inside a resolved value.
fn locate_in(arg: &ResolvedArgument, offset: usize, fallback: Pos) -> Pos {
    let mut at = 0usize;
    for f in &arg.fragments {
        let Some(text) = &f.text else { continue };
        if offset < at + text.len() {
            return match (f.line, f.column) {
                (Some(l), Some(c)) => Pos::new(l, c + text[..offset - at].chars().count() as u32),
                _ => fallback,
            };
        }
        at += text.len();
    }
    arg.first_pos().unwrap_or(fallback)
}

fn resolved(m: &SinkMatch, role: Role) -> Option<(&ResolvedArgument, &str)> {
    let a = m.get(role)?;
    let v = a.value.as_deref()?;
    (!v.is_empty()).then_some((a, v))
}

struct Field {
    text: String,
    pos: Pos,
}

/// Pairs from one file's connection sinks.
pub fn pairs_from_sinks(path: &str, sinks: &[SinkMatch], grammars: &[ConnectionStringGrammar], diags: &mut Vec<Diagnostic>) -> Vec<DetectedPair> {
    let mut out = Vec::new();
    for m in sinks.iter().filter(|m| m.is_connection()) {
        let mut password = resolved(m, Role::Password).map(|(a, v)| Field { text: v.to_string(), pos: a.first_pos().unwrap_or(m.pos) });
        let mut host = resolved(m, Role::Host).map(|(a, v)| Field { text: v.to_string(), pos: a.first_pos().unwrap_or(m.pos) });
        let mut port = resolved(m, Role::Port).and_then(|(_, v)| v.trim().parse::<u16>().ok()).filter(|p| *p > 0);
        let mut database = resolved(m, Role::Database).map(|(_, v)| v.to_string());
        let mut user = resolved(m, Role::User).map(|(_, v)| v.to_string());
        let mut db_type = m.db_type;

        if let Some((arg, cs)) = resolved(m, Role::ConnectionString) {
            let parsed = parse_connection_strings(cs, grammars);
            if let Some(c) = parsed.first() {
                let conflict = |d: &Option<Field>, p: &Option<super::grammar::Captured>| match (d, p) {
                    (Some(d), Some(p)) => d.text != p.text,
                    _ => false,
                };
                if conflict(&password, &c.password) || conflict(&host, &c.host) {
                    diags.push(Diagnostic::new(
                        "detector",
                        format!("{path}:{}: {} receives both a connection string and discrete arguments; using the discrete ones", m.pos.line, m.callable),
                    ));
                }
                if password.is_none() {
                    password = c.password.as_ref().map(|p| Field { text: p.text.clone(), pos: locate_in(arg, p.offset, m.pos) });
                }
                if host.is_none() {
                    host = c.host.as_ref().map(|h| Field { text: h.text.clone(), pos: locate_in(arg, h.offset, m.pos) });
                }
                port = port.or(c.port);
                database = database.or(c.db.clone());
                user = user.or(c.user.as_ref().map(|u| u.text.clone()));
                if db_type == DbType::Unknown {
                    db_type = c.db_type;
                }
            } else if host.is_none() {
                // pymongo-style bare host passed where a URI is accepted
                if let Some((h, p)) = host_token(cs.trim()) {
                    host = Some(Field { text: h, pos: arg.first_pos().unwrap_or(m.pos) });
                    port = port.or(p);
                }
            }
        }

        let (Some(pw), Some(h)) = (password, host) else { continue };
        if pw.text.is_empty() || h.text.is_empty() || is_templated(&pw.text) || is_templated(&h.text) {
            continue;
        }
        let pair = SecretAssetPair::new(
            pw.text,
            SourceLocation::new(path, pw.pos.line, pw.pos.col),
            AssetIdentifier { host: h.text, port, database_name: database.filter(|d| !d.is_empty()), db_type },
            SourceLocation::new(path, h.pos.line, h.pos.col),
            DetectionMethod::DataFlow,
            user,
        );
        out.push(DetectedPair { pair, sinks: vec![SinkRef { category: m.category, root: m.root.unwrap_or(m.pos) }] });
    }
    out
}
