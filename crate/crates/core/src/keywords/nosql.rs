//! Database, collection and field names from MongoDB access chains.

use crate::dataflow::{DefUseGraph, SinkMatch, Step, Value};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NoSqlKeywords {
    pub database: Option<String>,
    pub collection: Option<String>,
    pub fields: Vec<String>,
    /// Set when a document argument could not be read statically.
    pub dynamic_document: bool,
}

const DB_GETTERS: &[&str] = &["get_database"];
const COLL_GETTERS: &[&str] = &["get_collection", "create_collection"];
const DOC_KWARGS: &[&str] = &["filter", "update", "document", "documents", "projection", "replacement"];

fn step_name(graph: &DefUseGraph, step: &Step, getters: &[&str]) -> Option<Option<String>> {
    match step {
        Step::Attr(a) => Some(Some(a.clone())),
        Step::Key(k) => Some(Some(k.clone())),
        Step::Call { name, site } if getters.contains(&name.as_str()) => {
            let arg = graph.call_at(*site).and_then(|c| c.args.first().cloned().or_else(|| c.kwarg("name").cloned()));
            Some(arg.and_then(|v| v.text()))
        }
        _ => None,
    }
}

fn push_field(out: &mut Vec<String>, f: String) {
    if !f.is_empty() && !out.contains(&f) {
        out.push(f);
    }
}

/// Keys of a filter/update/document; operator keys are skipped but their
/// values searched, nested documents are flattened one level
/// into `parent.child`.
fn collect_fields(v: &Value, parent: Option<&str>, out: &mut Vec<String>, dynamic: &mut bool) {
    match v {
        Value::Dict(items) => {
            for (k, val) in items {
                if k.starts_with('$') {
                    collect_fields(val, parent, out, dynamic);
                    continue;
                }
                match parent {
                    Some(p) => push_field(out, format!("{p}.{k}")),
                    None => {
                        let mut nested = Vec::new();
                        if matches!(val, Value::Dict(_)) {
                            collect_fields(val, Some(k), &mut nested, dynamic);
                        } else if let Value::Seq(xs) = val {
                            for x in xs {
                                if let Value::Dict(_) = x {
                                    collect_fields(x, Some(k), &mut nested, dynamic);
                                }
                            }
                        }
                        // operator-only subdocuments keep the key itself
                        if nested.is_empty() {
                            push_field(out, k.clone());
                        }
                        for f in nested {
                            push_field(out, f);
                        }
                    }
                }
            }
        }
        Value::Seq(items) => {
            for x in items {
                collect_fields(x, parent, out, dynamic);
            }
        }
        Value::Hole | Value::Object { .. } | Value::Instance(_) => *dynamic = true,
        _ => {}
    }
}

/// Interpret one collection-method sink.
///
/// `flask_pymongo` chains start with `.db` (database named by the URI) or
/// `.cx` (the wrapped client); plain clients name the database first.
pub fn extract_nosql_keywords(graph: &DefUseGraph, m: &SinkMatch) -> NoSqlKeywords {
    let mut out = NoSqlKeywords::default();
    let mut path: &[Step] = &m.receiver_path;
    match path.first() {
        Some(Step::Attr(a)) if a == "db" && m.callable.starts_with("flask_pymongo") => {
            path = &path[1..];
            if let Some(s) = path.first() {
                out.collection = step_name(graph, s, COLL_GETTERS).flatten();
            }
            path = &[];
        }
        Some(Step::Attr(a)) if a == "cx" && m.callable.starts_with("flask_pymongo") => path = &path[1..],
        _ => {}
    }
    if let Some(s) = path.first() {
        match s {
            Step::Call { name, .. } if name == "get_default_database" => {}
            _ => out.database = step_name(graph, s, DB_GETTERS).flatten(),
        }
        if let Some(s) = path.get(1) {
            out.collection = step_name(graph, s, COLL_GETTERS).flatten();
        }
    }
    if let Some(call) = graph.call_at(m.pos) {
        let docs = call.args.iter().take(2).chain(call.kwargs.iter().filter(|(k, _)| DOC_KWARGS.contains(&k.as_str())).map(|(_, v)| v));
        for d in docs {
            if matches!(d, Value::Dict(_) | Value::Seq(_) | Value::Hole | Value::Object { .. }) {
                collect_fields(d, None, &mut out.fields, &mut out.dynamic_document);
            }
        }
    }
    out
}
