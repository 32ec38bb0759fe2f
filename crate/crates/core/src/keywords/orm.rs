//! Tables and columns declared through ORM models.

use crate::dataflow::{CallSite, ClassInfo, DefUseGraph, Step, Value};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrmModel {
    pub path: String,
    pub class_name: String,
    pub table: String,
    pub columns: Vec<String>,
}

/// Base descriptions that make a class an ORM model or model base.
fn is_framework_base(desc: &str) -> bool {
    desc.contains("declarative_base()")
        || desc.contains("generate_base()")
        || desc.ends_with("DeclarativeBase")
        || desc.ends_with("DeclarativeBaseNoMeta")
        || desc == "sqlmodel.SQLModel"
        || desc.ends_with(".Model")
}

fn is_column_ctor(name: &str) -> bool {
    matches!(name, "Column" | "mapped_column" | "ForeignKey") || (name.ends_with("Field") && name != "Field") || name == "Field"
}

fn truthy(v: Option<&Value>) -> bool {
    matches!(v, Some(Value::Bool(true)))
}

fn attr<'a>(c: &'a ClassInfo, name: &str) -> Option<&'a Value> {
    c.attrs.iter().rev().find(|a| a.name == name).map(|a| &a.value)
}

fn meta<'a>(c: &'a ClassInfo, name: &str) -> Option<&'a Value> {
    c.meta.iter().rev().find(|(k, _)| k == name).map(|(_, v)| v)
}

/// The call producing a value: the root call, or the last method call of
/// a chain such as `db.Column(...)`.
fn final_call<'g>(graph: &'g DefUseGraph, v: &Value) -> Option<&'g CallSite> {
    match v {
        Value::Object { root, path } => match path.last() {
            None => graph.call_at(*root),
            Some(Step::Call { site, .. }) => graph.call_at(*site),
            Some(_) => None,
        },
        _ => None,
    }
}

fn columns_of(graph: &DefUseGraph, c: &ClassInfo) -> Vec<String> {
    let mut out = Vec::new();
    for a in &c.attrs {
        if a.name.starts_with("__") {
            continue;
        }
        let Some(call) = final_call(graph, &a.value) else { continue };
        let Some(name) = call.short_name() else { continue };
        if !is_column_ctor(name) {
            continue;
        }
        let explicit = call
            .kwarg("db_column")
            .or_else(|| call.kwarg("column_name"))
            .or_else(|| call.kwarg("name"))
            .or_else(|| if matches!(name, "Column" | "mapped_column") { call.args.first() } else { None })
            .and_then(|v| v.text());
        let col = explicit.unwrap_or_else(|| a.name.clone());
        if !out.contains(&col) {
            out.push(col);
        }
    }
    out
}

/// `Table("name", metadata, Column("c", ...), ...)` declarations.
fn table_calls(path: &str, graph: &DefUseGraph) -> Vec<OrmModel> {
    let mut out = Vec::new();
    for call in &graph.calls {
        if call.short_name() != Some("Table") || !graph.imports_any(&["sqlalchemy", "flask_sqlalchemy"]) {
            continue;
        }
        let Some(table) = call.args.first().and_then(|v| v.text()) else { continue };
        let mut columns = Vec::new();
        for a in call.args.iter().skip(1) {
            let Some(c) = final_call(graph, a) else { continue };
            if c.short_name() == Some("Column") {
                if let Some(n) = c.args.first().and_then(|v| v.text()) {
                    if !columns.contains(&n) {
                        columns.push(n);
                    }
                }
            }
        }
        out.push(OrmModel { path: path.to_string(), class_name: String::new(), table, columns });
    }
    out
}

fn module_name(path: &str) -> String {
    let p = path.trim_end_matches(".py");
    let p = p.strip_suffix("/__init__").unwrap_or(p);
    p.replace('/', ".")
}

/// Every model declared across the repository, in file order.
///
/// A class is a model when one of its bases is a framework base or,
/// transitively, another model class of the repository. Classes marked
/// abstract, and bases without columns or an explicit table that other
/// models inherit from, are left out.
pub fn extract_orm_models(files: &[(&str, &DefUseGraph)]) -> Vec<OrmModel> {
    let mut by_name: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    for (fi, (_, g)) in files.iter().enumerate() {
        for (ci, c) in g.classes.iter().enumerate() {
            by_name.entry(c.name.as_str()).or_default().push((fi, ci));
        }
    }
    let modules: HashMap<String, &DefUseGraph> = files.iter().map(|(p, g)| (module_name(p), *g)).collect();
    // `from pkg.base import Base` where `Base = declarative_base()` lives in pkg/base.py
    let imported_base = |desc: &str| -> bool {
        let Some((module, name)) = desc.rsplit_once('.') else { return false };
        modules.get(module).and_then(|g| g.globals.get(name)).is_some_and(|v| is_framework_base(&v.describe(modules[module])))
    };
    let mut model: BTreeSet<(usize, usize)> = BTreeSet::new();
    loop {
        let before = model.len();
        for (fi, (_, g)) in files.iter().enumerate() {
            for (ci, c) in g.classes.iter().enumerate() {
                if model.contains(&(fi, ci)) {
                    continue;
                }
                let hit = c.bases.iter().any(|b| {
                    is_framework_base(b) || imported_base(b) || {
                        let short = b.rsplit('.').next().unwrap_or(b);
                        by_name.get(short).is_some_and(|v| v.iter().any(|k| model.contains(k)))
                    }
                });
                if hit {
                    model.insert((fi, ci));
                }
            }
        }
        if model.len() == before {
            break;
        }
    }
    let inherited: BTreeSet<&str> = model
        .iter()
        .flat_map(|(fi, ci)| files[*fi].1.classes[*ci].bases.iter().map(|b| b.rsplit('.').next().unwrap_or(b)))
        .collect();

    let mut out = Vec::new();
    for (fi, (path, g)) in files.iter().enumerate() {
        for (ci, c) in g.classes.iter().enumerate() {
            if !model.contains(&(fi, ci)) || truthy(attr(c, "__abstract__")) || truthy(meta(c, "abstract")) {
                continue;
            }
            let explicit = attr(c, "__tablename__").or_else(|| meta(c, "table_name")).or_else(|| meta(c, "db_table")).and_then(|v| v.text());
            let columns = columns_of(g, c);
            if explicit.is_none() && columns.is_empty() && inherited.contains(c.name.as_str()) {
                continue;
            }
            let table = explicit.unwrap_or_else(|| c.name.to_lowercase());
            out.push(OrmModel { path: path.to_string(), class_name: c.name.clone(), table, columns });
        }
        out.extend(table_calls(path, g));
    }
    out
}
