//! Per-pair database, table and column keywords.

pub mod nosql;
pub mod orm;
pub mod sql;

use crate::dataflow::{find_file_open_sql, query::resolve_sql_path, SinkCategory, HOLE};
use crate::detector::DetectedPair;
use crate::model::{Diagnostic, Role};
use crate::pysyntax::Pos;
use crate::repo::SourceFile;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

pub use nosql::{extract_nosql_keywords, NoSqlKeywords};
pub use orm::{extract_orm_models, OrmModel};
pub use sql::{extract_sql_keywords, extract_sql_script, SqlKeywords};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Provenance {
    SqlQuery,
    SqlFile,
    NoSqlChain,
    OrmModel,
    AssetIdentifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    pub name: String,
    pub sources: BTreeSet<Provenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeywordKind {
    Database,
    Table,
    Column,
}

/// Keywords attributed to one pair; names are unique case-insensitively
/// and keep the casing first seen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseKeywordSet {
    pub database_names: Vec<Keyword>,
    pub table_names: Vec<Keyword>,
    pub column_names: Vec<Keyword>,
}

fn clean(name: &str) -> Option<&str> {
    let t = name.trim().trim_matches(|c| matches!(c, '"' | '\'' | '`' | '[' | ']'));
    (!t.is_empty() && !t.contains(sql::HOLE_IDENT) && !t.contains(HOLE)).then_some(t)
}

impl DatabaseKeywordSet {
    pub fn add(&mut self, kind: KeywordKind, name: &str, source: Provenance) {
        let Some(name) = clean(name) else { return };
        let list = match kind {
            KeywordKind::Database => &mut self.database_names,
            KeywordKind::Table => &mut self.table_names,
            KeywordKind::Column => &mut self.column_names,
        };
        match list.iter_mut().find(|k| k.name.eq_ignore_ascii_case(name) || k.name.to_lowercase() == name.to_lowercase()) {
            Some(k) => {
                k.sources.insert(source);
            }
            None => list.push(Keyword { name: name.to_string(), sources: BTreeSet::from([source]) }),
        }
    }

    pub fn add_sql(&mut self, k: &SqlKeywords, source: Provenance) {
        for d in &k.databases {
            self.add(KeywordKind::Database, d, source);
        }
        for t in &k.tables {
            self.add(KeywordKind::Table, t, source);
        }
        for c in &k.columns {
            self.add(KeywordKind::Column, c, source);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.database_names.is_empty() && self.table_names.is_empty() && self.column_names.is_empty()
    }

    /// Every keyword with its kind, in database, table, column order.
    pub fn iter(&self) -> impl Iterator<Item = (KeywordKind, &Keyword)> {
        self.database_names
            .iter()
            .map(|k| (KeywordKind::Database, k))
            .chain(self.table_names.iter().map(|k| (KeywordKind::Table, k)))
            .chain(self.column_names.iter().map(|k| (KeywordKind::Column, k)))
    }

    fn sort(&mut self) {
        for l in [&mut self.database_names, &mut self.table_names, &mut self.column_names] {
            l.sort_by(|a, b| a.name.to_lowercase().cmp(&b.name.to_lowercase()).then(a.name.cmp(&b.name)));
        }
    }
}

const ORM_IMPORTS: &[&str] = &["sqlalchemy", "flask_sqlalchemy", "peewee", "playhouse", "django", "sqlmodel"];

/// Keywords for every detected pair, keyed by pair id.
///
/// Queries and MongoDB chains go to the pairs whose connection object they
/// derive from; when no pair in the file owns that object they go to every
/// pair of the file. Opened `.sql` files go to every pair of the opening
/// file. Models go to every pair bound to an ORM.
pub fn extract_keywords(root: &Path, files: &[SourceFile], pairs: &[DetectedPair], diags: &mut Vec<Diagnostic>) -> BTreeMap<String, DatabaseKeywordSet> {
    let mut sets: BTreeMap<String, DatabaseKeywordSet> = pairs.iter().map(|p| (p.pair.pair_id.clone(), DatabaseKeywordSet::default())).collect();
    let by_path: BTreeMap<&str, &SourceFile> = files.iter().map(|f| (f.rel_path.as_str(), f)).collect();

    let in_file = |path: &str| -> Vec<&DetectedPair> { pairs.iter().filter(|p| p.pair.secret_location.path == path).collect() };
    let targets = |path: &str, root: Pos| -> Vec<String> {
        let local = in_file(path);
        let owners: Vec<String> = local.iter().filter(|p| p.sinks.iter().any(|s| s.root == root)).map(|p| p.pair.pair_id.clone()).collect();
        if owners.is_empty() {
            local.iter().map(|p| p.pair.pair_id.clone()).collect()
        } else {
            owners
        }
    };

    for f in files {
        let Some(graph) = &f.graph else { continue };
        for m in &f.sinks {
            let root = m.root.unwrap_or(m.pos);
            if let Some(q) = m.get(Role::RawQuery) {
                let text = q.text_with_holes();
                if text.chars().all(|c| c == HOLE || c.is_whitespace()) {
                    continue;
                }
                let ids = targets(&f.rel_path, root);
                if ids.is_empty() {
                    continue;
                }
                match extract_sql_keywords(&text) {
                    Ok(k) => {
                        for id in &ids {
                            sets.get_mut(id).unwrap().add_sql(&k, Provenance::SqlQuery);
                        }
                    }
                    Err(e) => diags.push(Diagnostic::new("keywords", format!("{}:{}: query not parsed: {e}", f.rel_path, m.pos.line))),
                }
            } else if m.category == SinkCategory::NoSqlDriver && m.callable.contains('#') {
                let k = extract_nosql_keywords(graph, m);
                if k.dynamic_document {
                    diags.push(Diagnostic::new("keywords", format!("{}:{}: document built at runtime; fields unknown", f.rel_path, m.pos.line)));
                }
                for id in targets(&f.rel_path, root) {
                    let s = sets.get_mut(&id).unwrap();
                    if let Some(d) = &k.database {
                        s.add(KeywordKind::Database, d, Provenance::NoSqlChain);
                    }
                    if let Some(c) = &k.collection {
                        s.add(KeywordKind::Table, c, Provenance::NoSqlChain);
                    }
                    for fl in &k.fields {
                        s.add(KeywordKind::Column, fl, Provenance::NoSqlChain);
                    }
                }
            }
        }
        let local = in_file(&f.rel_path);
        if local.is_empty() {
            continue;
        }
        for (pos, referenced) in find_file_open_sql(graph) {
            let Some(rel) = resolve_sql_path(root, &f.rel_path, &referenced) else {
                diags.push(Diagnostic::new("keywords", format!("{}:{}: {referenced} not found under the scan root", f.rel_path, pos.line)));
                continue;
            };
            let Some(sql_file) = by_path.get(rel.as_str()) else { continue };
            let (k, errors) = extract_sql_script(&sql_file.text);
            for e in errors {
                diags.push(Diagnostic::new("keywords", format!("{rel}: statement not parsed: {e}")));
            }
            for p in &local {
                sets.get_mut(&p.pair.pair_id).unwrap().add_sql(&k, Provenance::SqlFile);
            }
        }
    }

    let graphs: Vec<(&str, &crate::dataflow::DefUseGraph)> = files.iter().filter_map(|f| f.graph.as_ref().map(|g| (f.rel_path.as_str(), g))).collect();
    let models = extract_orm_models(&graphs);
    if !models.is_empty() {
        for p in pairs.iter().filter(|p| orm_bound(p, &by_path)) {
            let s = sets.get_mut(&p.pair.pair_id).unwrap();
            for m in &models {
                s.add(KeywordKind::Table, &m.table, Provenance::OrmModel);
                for c in &m.columns {
                    s.add(KeywordKind::Column, c, Provenance::OrmModel);
                }
            }
        }
    }

    for p in pairs {
        if let Some(db) = &p.pair.asset.database_name {
            sets.get_mut(&p.pair.pair_id).unwrap().add(KeywordKind::Database, db, Provenance::AssetIdentifier);
        }
    }
    for s in sets.values_mut() {
        s.sort();
    }
    sets
}

fn orm_bound(p: &DetectedPair, files: &BTreeMap<&str, &SourceFile>) -> bool {
    p.sinks.iter().any(|s| s.category == SinkCategory::OrmFramework)
        || files.get(p.pair.secret_location.path.as_str()).and_then(|f| f.graph.as_ref()).is_some_and(|g| g.imports_any(ORM_IMPORTS))
}
