//! Intra-file constant propagation over Python syntax trees.
//!
//! The analysis is an abstract interpreter: every expression evaluates to a
//! [`Value`], and string values keep the source position of each literal
//! piece so partially known strings can still be reconstructed.

mod interp;
pub mod query;
pub mod sinks;

use crate::model::Role;
use crate::pysyntax::{self, Module, Pos};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use interp::build_def_use;
pub use query::{find_file_open_sql, trace_query_fragments};
pub use sinks::{find_sinks, SinkCategory, SinkMatch, SinkSpec, SinkTarget};

/// Marker for an unresolved piece of text inside a reconstructed string.
pub const HOLE: char = '\u{FFFC}';

/// Parse a Python file; never fails. Syntax errors are returned alongside
/// the (possibly partial) tree.
pub fn parse_source(text: &str) -> Module {
    pysyntax::parse_module(text)
}

/// One piece of a string value.
#[derive(Debug, Clone, PartialEq)]
pub enum Frag {
    Lit { text: String, pos: Option<Pos> },
    Hole,
}

/// One step in an attribute/subscript/method chain rooted at a call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Attr(String),
    Key(String),
    Call { name: String, site: Pos },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(Vec<Frag>),
    Num { text: String, pos: Option<Pos> },
    Bool(bool),
    NoneVal,
    /// Constant-keyed mapping in insertion order.
    Dict(Vec<(String, Value)>),
    Seq(Vec<Value>),
    /// A module or something reached by attribute access on one.
    Module(String),
    /// Result of a call, possibly followed by attribute/key/method steps.
    Object { root: Pos, path: Vec<Step> },
    Class(String),
    Instance(String),
    Function(String),
    Hole,
}

impl Value {
    pub fn lit(text: impl Into<String>, pos: Option<Pos>) -> Value {
        Value::Str(vec![Frag::Lit { text: text.into(), pos }])
    }

    /// Text pieces when the value can be rendered as a string.
    pub fn frags(&self) -> Vec<Frag> {
        match self {
            Value::Str(f) => f.clone(),
            Value::Num { text, pos } => vec![Frag::Lit { text: text.clone(), pos: *pos }],
            Value::Bool(b) => vec![Frag::Lit { text: if *b { "True" } else { "False" }.into(), pos: None }],
            Value::NoneVal => vec![Frag::Lit { text: "None".into(), pos: None }],
            _ => vec![Frag::Hole],
        }
    }

    /// Fully resolved text, if any.
    pub fn text(&self) -> Option<String> {
        match self {
            Value::Str(_) | Value::Num { .. } | Value::Bool(_) | Value::NoneVal => {
                let mut s = String::new();
                for f in self.frags() {
                    match f {
                        Frag::Lit { text, .. } => s.push_str(&text),
                        Frag::Hole => return None,
                    }
                }
                Some(s)
            }
            _ => None,
        }
    }

    /// Text with holes replaced by [`HOLE`].
    pub fn text_with_holes(&self) -> String {
        self.frags()
            .iter()
            .map(|f| match f {
                Frag::Lit { text, .. } => text.clone(),
                Frag::Hole => HOLE.to_string(),
            })
            .collect()
    }

    pub fn first_pos(&self) -> Option<Pos> {
        match self {
            Value::Str(f) => f.iter().find_map(|f| match f {
                Frag::Lit { pos, .. } => *pos,
                Frag::Hole => None,
            }),
            Value::Num { pos, .. } => *pos,
            _ => None,
        }
    }

    pub fn get_key(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Dict(items) => items.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Short description used for base-class and callee matching, e.g.
    /// `flask_sqlalchemy.SQLAlchemy().Model`.
    pub fn describe(&self, graph: &DefUseGraph) -> String {
        match self {
            Value::Module(q) => q.clone(),
            Value::Class(c) => c.clone(),
            Value::Instance(c) => format!("{c}()"),
            Value::Function(f) => f.clone(),
            Value::Object { root, path } => {
                let mut s = match graph.call_at(*root).map(|c| &c.callee) {
                    Some(Callee::Qualified(q)) => format!("{q}()"),
                    Some(Callee::Method { name, .. }) => format!("?.{name}()"),
                    _ => "?()".into(),
                };
                for step in path {
                    match step {
                        Step::Attr(a) => {
                            s.push('.');
                            s.push_str(a);
                        }
                        Step::Key(k) => s.push_str(&format!("[{k}]")),
                        Step::Call { name, .. } => s.push_str(&format!(".{name}()")),
                    }
                }
                s
            }
            _ => "?".into(),
        }
    }
}

/// Unified view of a value passed to a sink slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedArgument {
    pub role: Role,
    pub value: Option<String>,
    pub fragments: Vec<Fragment>,
    pub fully_resolved: bool,
}

/// A located piece of text, or a hole when `text` is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub text: Option<String>,
}

impl ResolvedArgument {
    pub fn from_value(role: Role, v: &Value) -> Self {
        let fragments: Vec<Fragment> = v
            .frags()
            .into_iter()
            .map(|f| match f {
                Frag::Lit { text, pos } => Fragment { line: pos.map(|p| p.line), column: pos.map(|p| p.col), text: Some(text) },
                Frag::Hole => Fragment { line: None, column: None, text: None },
            })
            .collect();
        let fully_resolved = fragments.iter().all(|f| f.text.is_some());
        let value = if fully_resolved { fragments.iter().map(|f| f.text.clone().unwrap_or_default()).collect::<String>().into() } else { None };
        Self { role, value, fragments, fully_resolved }
    }

    /// Text with holes replaced by [`HOLE`].
    pub fn text_with_holes(&self) -> String {
        self.fragments.iter().map(|f| f.text.clone().unwrap_or_else(|| HOLE.to_string())).collect()
    }

    pub fn first_pos(&self) -> Option<Pos> {
        self.fragments.iter().find_map(|f| match (f.line, f.column) {
            (Some(l), Some(c)) => Some(Pos::new(l, c)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Callee {
    Qualified(String),
    Method { receiver: Value, name: String },
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallSite {
    pub pos: Pos,
    pub callee: Callee,
    pub args: Vec<Value>,
    pub kwargs: Vec<(String, Value)>,
}

impl CallSite {
    pub fn kwarg(&self, name: &str) -> Option<&Value> {
        self.kwargs.iter().rev().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    /// Last segment of the callee name (`Column` for `db.Column(...)`).
    pub fn short_name(&self) -> Option<&str> {
        match &self.callee {
            Callee::Qualified(q) => q.rsplit('.').next(),
            Callee::Method { name, .. } => Some(name),
            Callee::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Def {
    pub name: String,
    pub pos: Pos,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Use {
    pub name: String,
    pub pos: Pos,
    pub defs: Vec<usize>,
}

/// A class-level assignment such as `email = Column(String)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAttr {
    pub name: String,
    pub pos: Pos,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassInfo {
    pub name: String,
    pub pos: Pos,
    /// Descriptions of base expressions, see [`Value::describe`].
    pub bases: Vec<String>,
    pub attrs: Vec<ClassAttr>,
    /// Assignments inside a nested `class Meta`.
    pub meta: Vec<(String, Value)>,
    /// `self.x = ...` assignments collected from methods.
    pub self_attrs: BTreeMap<String, Value>,
}

/// `X["KEY"] = value` where the key is a constant string.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedAssign {
    pub key: String,
    pub value: Value,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefUseGraph {
    pub defs: Vec<Def>,
    pub uses: Vec<Use>,
    /// Call sites ordered by position.
    pub calls: Vec<CallSite>,
    pub classes: Vec<ClassInfo>,
    /// Fully qualified modules named in import statements.
    pub imports: Vec<String>,
    /// Final module-level environment.
    pub globals: BTreeMap<String, Value>,
    /// Module- and class-level assignments by name, in source order.
    pub named_assigns: Vec<(String, Value, Pos)>,
    pub keyed_assigns: Vec<KeyedAssign>,
}

impl DefUseGraph {
    pub fn call_at(&self, pos: Pos) -> Option<&CallSite> {
        self.calls.binary_search_by(|c| c.pos.cmp(&pos)).ok().map(|i| &self.calls[i])
    }

    /// def → use edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, usage) in self.uses.iter().enumerate() {
            for d in &usage.defs {
                out.push((*d, u));
            }
        }
        out
    }

    /// Literal table entry for a definition, when statically known.
    pub fn literal(&self, def: usize) -> Option<String> {
        self.defs.get(def).and_then(|d| d.value.text())
    }

    /// Root call of an object chain, following method-call results back to
    /// the originating call.
    pub fn root_call(&self, v: &Value) -> Option<&CallSite> {
        match v {
            Value::Object { root, .. } => self.call_at(*root),
            _ => None,
        }
    }

    pub fn imports_any(&self, prefixes: &[&str]) -> bool {
        self.imports.iter().any(|m| prefixes.iter().any(|p| m == p || m.starts_with(&format!("{p}."))))
    }
}
