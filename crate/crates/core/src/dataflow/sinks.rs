//! Driver/ORM sink inventory and call-site matching.

use super::{Callee, DefUseGraph, ResolvedArgument, Step, Value};
use crate::model::{DbType, Role};
use crate::pysyntax::Pos;
use serde::{Deserialize, Serialize};

const BUILTIN_SINKS: &str = include_str!("../../data/sinks.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SinkCategory {
    SqlDriver,
    NoSqlDriver,
    OrmFramework,
}

impl SinkCategory {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "SqlDriver" => Some(Self::SqlDriver),
            "NoSqlDriver" => Some(Self::NoSqlDriver),
            "OrmFramework" => Some(Self::OrmFramework),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkTarget {
    Call(String),
    /// `root` is `*` for any receiver.
    Method { root: String, methods: Vec<String> },
    Setting(String),
    DictSetting(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Positional(usize),
    Item(usize, usize),
    Key(usize, String),
    Keyword(String),
    Value,
    DictKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkSpec {
    pub target: SinkTarget,
    pub category: SinkCategory,
    pub slots: Vec<(Slot, Role)>,
    pub db_type: Option<DbType>,
}

impl SinkSpec {
    pub fn callable(&self) -> String {
        match &self.target {
            SinkTarget::Call(c) => c.clone(),
            SinkTarget::Method { root, methods } => format!("{root}#{}", methods.join(",")),
            SinkTarget::Setting(n) => format!("@setting:{n}"),
            SinkTarget::DictSetting(n) => format!("@dict:{n}"),
        }
    }

    pub fn is_connection(&self) -> bool {
        self.slots.iter().any(|(_, r)| matches!(r, Role::Host | Role::Password | Role::ConnectionString))
    }
}

/// The built-in inventory.
pub fn builtin_specs() -> Vec<SinkSpec> {
    parse_specs(BUILTIN_SINKS).expect("bundled sink inventory parses")
}

/// Parse a sink inventory file.
pub fn parse_specs(text: &str) -> Result<Vec<SinkSpec>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| format!("sink inventory line {}: {m}", i + 1);
        let cols: Vec<&str> = line.split('|').map(str::trim).collect();
        if cols.len() < 3 || cols.len() > 4 {
            return Err(err("expected 3 or 4 columns"));
        }
        let target = if let Some(n) = cols[0].strip_prefix("@setting:") {
            SinkTarget::Setting(n.to_string())
        } else if let Some(n) = cols[0].strip_prefix("@dict:") {
            SinkTarget::DictSetting(n.to_string())
        } else if let Some((root, methods)) = cols[0].split_once('#') {
            let methods: Vec<String> = methods.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
            if methods.is_empty() {
                return Err(err("missing method names"));
            }
            SinkTarget::Method { root: root.to_string(), methods }
        } else {
            SinkTarget::Call(cols[0].to_string())
        };
        let category = SinkCategory::parse(cols[1]).ok_or_else(|| err("unknown category"))?;
        let mut slots = Vec::new();
        for b in cols[2].split_whitespace() {
            let (lhs, rhs) = b.split_once('=').ok_or_else(|| err("binding must be slot=role"))?;
            let role = Role::parse(rhs).ok_or_else(|| err(&format!("unknown role {rhs}")))?;
            let slot = parse_slot(lhs, &target).ok_or_else(|| err(&format!("bad slot {lhs}")))?;
            slots.push((slot, role));
        }
        if slots.is_empty() {
            return Err(err("no slot bindings"));
        }
        let mut seen: Vec<(&Slot, Role)> = Vec::new();
        for (s, r) in &slots {
            if seen.iter().any(|(x, _)| *x == s) {
                return Err(err("slot bound twice"));
            }
            seen.push((s, *r));
        }
        let db_type = match cols.get(3) {
            Some(t) => Some(DbType::parse(t).ok_or_else(|| err("unknown db type"))?),
            None => None,
        };
        out.push(SinkSpec { target, category, slots, db_type });
    }
    Ok(out)
}

fn parse_slot(s: &str, target: &SinkTarget) -> Option<Slot> {
    if matches!(target, SinkTarget::DictSetting(_)) {
        return Some(Slot::DictKey(s.to_string()));
    }
    if s == "value" && matches!(target, SinkTarget::Setting(_)) {
        return Some(Slot::Value);
    }
    if let Some((idx, rest)) = s.split_once('[') {
        let idx: usize = idx.parse().ok()?;
        let inner = rest.strip_suffix(']')?;
        return Some(match inner.parse::<usize>() {
            Ok(i) => Slot::Item(idx, i),
            Err(_) => Slot::Key(idx, inner.to_string()),
        });
    }
    if let Ok(i) = s.parse::<usize>() {
        return Some(Slot::Positional(i));
    }
    if s.chars().all(|c| c.is_alphanumeric() || c == '_') && !s.is_empty() {
        return Some(Slot::Keyword(s.to_string()));
    }
    None
}

/// A matched sink with its resolved arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkMatch {
    pub spec_index: usize,
    pub callable: String,
    pub category: SinkCategory,
    pub db_type: DbType,
    /// Position of the call (or assignment for settings).
    pub pos: Pos,
    /// Root call the receiver derives from; equals `pos` for plain calls.
    pub root: Option<Pos>,
    pub receiver_path: Vec<Step>,
    pub bindings: Vec<ResolvedArgument>,
}

impl SinkMatch {
    pub fn get(&self, role: Role) -> Option<&ResolvedArgument> {
        self.bindings.iter().find(|b| b.role == role)
    }

    pub fn all(&self, role: Role) -> impl Iterator<Item = &ResolvedArgument> {
        self.bindings.iter().filter(move |b| b.role == role)
    }

    pub fn is_connection(&self) -> bool {
        self.bindings.iter().any(|b| matches!(b.role, Role::Host | Role::Password | Role::ConnectionString))
    }
}

fn slot_value<'v>(slot: &Slot, args: &'v [Value], kwargs: &'v [(String, Value)]) -> Option<&'v Value> {
    match slot {
        Slot::Positional(i) => args.get(*i),
        Slot::Item(i, j) => match args.get(*i)? {
            Value::Seq(items) => items.get(*j),
            _ => None,
        },
        Slot::Key(i, k) => args.get(*i)?.get_key(k),
        Slot::Keyword(k) => kwargs.iter().rev().find(|(n, _)| n == k).map(|(_, v)| v),
        Slot::Value | Slot::DictKey(_) => None,
    }
}

fn bind_slots(spec: &SinkSpec, mut lookup: impl FnMut(&Slot) -> Option<Value>) -> Vec<ResolvedArgument> {
    let mut out: Vec<ResolvedArgument> = Vec::new();
    for (slot, role) in &spec.slots {
        if !role.is_repeatable() && out.iter().any(|b| b.role == *role) {
            continue;
        }
        if let Some(v) = lookup(slot) {
            if matches!(v, Value::NoneVal) {
                continue;
            }
            out.push(ResolvedArgument::from_value(*role, &v));
        }
    }
    out
}

/// Match every call site and settings assignment against the inventory.
pub fn find_sinks(graph: &DefUseGraph, specs: &[SinkSpec]) -> Vec<SinkMatch> {
    let mut out = Vec::new();
    for call in &graph.calls {
        // Most specific spec wins: exact callables, then rooted methods, then `*`.
        let mut best: Option<(u8, usize)> = None;
        for (i, spec) in specs.iter().enumerate() {
            let rank = match (&spec.target, &call.callee) {
                (SinkTarget::Call(c), Callee::Qualified(q)) if c == q => 0,
                (SinkTarget::Method { root, methods }, Callee::Method { receiver, name }) if methods.contains(name) => {
                    if root == "*" {
                        2
                    } else {
                        match graph.root_call(receiver).map(|r| &r.callee) {
                            Some(Callee::Qualified(q)) if q == root => 1,
                            _ => continue,
                        }
                    }
                }
                _ => continue,
            };
            if best.is_none_or(|(r, _)| rank < r) {
                best = Some((rank, i));
            }
        }
        let Some((_, i)) = best else { continue };
        let spec = &specs[i];
        let bindings = bind_slots(spec, |slot| slot_value(slot, &call.args, &call.kwargs).cloned());
        if bindings.is_empty() {
            continue;
        }
        let (root, receiver_path) = match &call.callee {
            Callee::Method { receiver: Value::Object { root, path }, .. } => (Some(*root), path.clone()),
            Callee::Method { .. } => (None, Vec::new()),
            _ => (Some(call.pos), Vec::new()),
        };
        out.push(SinkMatch {
            spec_index: i,
            callable: spec.callable(),
            category: spec.category,
            db_type: spec.db_type.unwrap_or_default(),
            pos: call.pos,
            root,
            receiver_path,
            bindings,
        });
    }
    for (i, spec) in specs.iter().enumerate() {
        match &spec.target {
            SinkTarget::Setting(name) => {
                let mut found: Vec<(Pos, Value)> = graph.keyed_assigns.iter().filter(|k| &k.key == name).map(|k| (k.pos, k.value.clone())).collect();
                found.extend(graph.named_assigns.iter().filter(|(n, _, _)| n == name).map(|(_, v, p)| (*p, v.clone())));
                found.sort_by_key(|(p, _)| *p);
                found.dedup_by_key(|(p, _)| *p);
                for (pos, value) in found {
                    let bindings = bind_slots(spec, |slot| matches!(slot, Slot::Value).then(|| value.clone()));
                    if bindings.iter().all(|b| b.fragments.iter().all(|f| f.text.is_none())) {
                        continue;
                    }
                    out.push(SinkMatch {
                        spec_index: i,
                        callable: spec.callable(),
                        category: spec.category,
                        db_type: spec.db_type.unwrap_or_default(),
                        pos,
                        root: Some(pos),
                        receiver_path: Vec::new(),
                        bindings,
                    });
                }
            }
            SinkTarget::DictSetting(name) => {
                for (n, value, pos) in &graph.named_assigns {
                    if n != name {
                        continue;
                    }
                    let Value::Dict(aliases) = value else { continue };
                    for (_, inner) in aliases {
                        if !matches!(inner, Value::Dict(_)) {
                            continue;
                        }
                        let bindings = bind_slots(spec, |slot| match slot {
                            Slot::DictKey(k) => inner.get_key(k).cloned(),
                            _ => None,
                        });
                        if bindings.is_empty() {
                            continue;
                        }
                        let engine = inner.get_key("ENGINE").and_then(|v| v.text()).map(|e| DbType::from_hint(&e));
                        let at = bindings.iter().find_map(|b| b.first_pos()).unwrap_or(*pos);
                        out.push(SinkMatch {
                            spec_index: i,
                            callable: spec.callable(),
                            category: spec.category,
                            db_type: engine.or(spec.db_type).unwrap_or_default(),
                            pos: at,
                            root: Some(at),
                            receiver_path: Vec::new(),
                            bindings,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    out.sort_by(|a, b| a.pos.cmp(&b.pos).then(a.spec_index.cmp(&b.spec_index)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::build_def_use;
    use crate::pysyntax::parse_module;

    fn sinks(src: &str) -> Vec<SinkMatch> {
        find_sinks(&build_def_use(&parse_module(src)), &builtin_specs())
    }

    #[test]
    fn bundled_inventory_covers_all_drivers() {
        let specs = builtin_specs();
        let names: Vec<String> = specs.iter().map(|s| s.callable()).collect();
        for needle in [
            "aiomysql.connect",
            "pymysql.connect",
            "aiopg.connect",
            "asyncpg.connect",
            "psycopg2.connect",
            "pymssql.connect",
            "pyodbc.connect",
            "jaydebeapi.connect",
            "pymongo.MongoClient",
            "flask_pymongo.PyMongo",
            "peewee.MySQLDatabase",
            "sqlalchemy.create_engine",
            "@dict:DATABASES",
        ] {
            assert!(names.iter().any(|n| n == needle), "missing {needle}");
        }
        assert!(specs.iter().all(|s| !s.slots.is_empty()));
    }

    #[test]
    fn keyword_driver_call() {
        let m = sinks("import pymysql\nh='db.io'\np='pw'\nd='db_patient'\nc = pymysql.connect(host=h, password=p, db=d)\n");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].get(Role::Host).unwrap().value.as_deref(), Some("db.io"));
        assert_eq!(m[0].get(Role::Password).unwrap().value.as_deref(), Some("pw"));
        assert_eq!(m[0].get(Role::Database).unwrap().value.as_deref(), Some("db_patient"));
        assert_eq!(m[0].db_type, DbType::MySQL);
    }

    #[test]
    fn positional_connection_string() {
        let m = sinks("import pyodbc\ncs='Server=s;Pwd=x;'\nc = pyodbc.connect(cs)\n");
        assert_eq!(m[0].get(Role::ConnectionString).unwrap().value.as_deref(), Some("Server=s;Pwd=x;"));
    }

    #[test]
    fn unknown_function_is_not_a_sink() {
        assert!(sinks("foo.connect(host='h', password='p')\n").is_empty());
    }

    #[test]
    fn execute_links_to_root() {
        let m = sinks("import psycopg2\nc = psycopg2.connect('dsn')\ncur = c.cursor()\ncur.execute('SELECT 1')\n");
        let q = m.iter().find(|s| s.get(Role::RawQuery).is_some()).unwrap();
        assert_eq!(q.root, Some(m[0].pos));
    }

    #[test]
    fn django_databases_dict() {
        let src = "DATABASES = {'default': {'ENGINE': 'django.db.backends.postgresql', 'NAME': 'shop', 'USER': 'u', 'PASSWORD': 'pw', 'HOST': 'db.shop.io', 'PORT': '5432'}}\n";
        let m = sinks(src);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].db_type, DbType::PostgreSQL);
        assert_eq!(m[0].get(Role::Database).unwrap().value.as_deref(), Some("shop"));
    }

    #[test]
    fn jaydebeapi_indexed_slots() {
        let m = sinks("import jaydebeapi\nc = jaydebeapi.connect('org.h2.Driver', 'jdbc:mysql://h.io:3306/x', ['sa', 'pw'])\n");
        assert_eq!(m[0].get(Role::User).unwrap().value.as_deref(), Some("sa"));
        assert_eq!(m[0].get(Role::Password).unwrap().value.as_deref(), Some("pw"));
    }

    #[test]
    fn rejects_malformed_inventory() {
        assert!(parse_specs("a.b | Nope | 0=host").is_err());
        assert!(parse_specs("a.b | SqlDriver | 0=wizard").is_err());
        assert!(parse_specs("a.b | SqlDriver").is_err());
        assert!(parse_specs("a.b | SqlDriver | 0=host 0=user").is_err());
    }
}
