//! Query reconstruction and `.sql` file references.

use super::{Callee, DefUseGraph, ResolvedArgument, SinkMatch, Value};
use crate::model::Role;
use crate::pysyntax::Pos;
use std::path::{Component, Path, PathBuf};

const OPENERS: &[&str] = &["open", "io.open", "codecs.open", "builtins.open"];

/// The raw query passed to an execute-style sink; a single hole when the
/// call has no query argument.
pub fn trace_query_fragments(_graph: &DefUseGraph, call: &SinkMatch) -> ResolvedArgument {
    call.get(Role::RawQuery).cloned().unwrap_or_else(|| ResolvedArgument::from_value(Role::RawQuery, &Value::Hole))
}

/// Constant `.sql`/`.ddl` paths passed to file-open calls, with the
/// position of each call.
pub fn find_file_open_sql(graph: &DefUseGraph) -> Vec<(Pos, String)> {
    let mut out = Vec::new();
    for call in &graph.calls {
        let opener = match &call.callee {
            Callee::Qualified(q) => OPENERS.contains(&q.as_str()) || q == "pathlib.Path" || q.ends_with(".Path") || q == "Path",
            _ => false,
        };
        if !opener {
            continue;
        }
        let Some(path) = call.args.first().or_else(|| call.kwarg("file")).and_then(|v| v.text()) else { continue };
        let lower = path.to_ascii_lowercase();
        if lower.ends_with(".sql") || lower.ends_with(".ddl") {
            out.push((call.pos, path));
        }
    }
    out
}

/// Resolve a referenced path against the referencing file's directory,
/// then the scan root. Both arguments are relative to `root`.
pub fn resolve_sql_path(root: &Path, referencing_file: &str, referenced: &str) -> Option<String> {
    let candidate = Path::new(referenced);
    let dir = Path::new(referencing_file).parent().unwrap_or(Path::new(""));
    let options: Vec<PathBuf> = if candidate.is_absolute() {
        vec![]
    } else {
        vec![dir.join(candidate), candidate.to_path_buf()]
    };
    for rel in options {
        let norm = normalize(&rel)?;
        if root.join(&norm).is_file() {
            return Some(norm.to_string_lossy().replace('\\', "/"));
        }
    }
    None
}

/// Lexically normalize, refusing to escape the root.
fn normalize(p: &Path) -> Option<PathBuf> {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::Normal(x) => out.push(x),
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    return None;
                }
            }
            _ => return None,
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::{build_def_use, find_sinks, sinks::builtin_specs};
    use crate::pysyntax::parse_module;

    fn graph(src: &str) -> DefUseGraph {
        build_def_use(&parse_module(src))
    }

    #[test]
    fn file_open_suffix_filter() {
        let g = graph("a = open('migrations/init.sql')\nb = open(path_var)\nc = open('notes.txt')\n");
        let found: Vec<String> = find_file_open_sql(&g).into_iter().map(|(_, p)| p).collect();
        assert_eq!(found, vec!["migrations/init.sql".to_string()]);
    }

    #[test]
    fn query_built_across_statements() {
        let g = graph("q = 'SELECT email '\nq += 'FROM users'\ncur.execute(q)\n");
        let m = find_sinks(&g, &builtin_specs());
        let r = trace_query_fragments(&g, &m[0]);
        assert!(r.fully_resolved);
        assert_eq!(r.value.as_deref(), Some("SELECT email FROM users"));
        let lines: Vec<u32> = r.fragments.iter().map(|f| f.line.unwrap()).collect();
        assert_eq!(lines, vec![1, 2]);
    }

    #[test]
    fn query_from_function_return_is_hole() {
        let g = graph("def build():\n    return 'x'\nq = build()\ncur.execute(q)\n");
        let m = find_sinks(&g, &builtin_specs());
        let r = trace_query_fragments(&g, &m[0]);
        assert!(!r.fully_resolved);
        assert_eq!(r.fragments.len(), 1);
        assert!(r.fragments[0].text.is_none());
    }

    #[test]
    fn resolves_relative_then_root() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("app/sql")).unwrap();
        std::fs::write(dir.path().join("app/sql/a.sql"), "SELECT 1").unwrap();
        std::fs::write(dir.path().join("b.sql"), "SELECT 1").unwrap();
        assert_eq!(resolve_sql_path(dir.path(), "app/x.py", "sql/a.sql").as_deref(), Some("app/sql/a.sql"));
        assert_eq!(resolve_sql_path(dir.path(), "app/x.py", "b.sql").as_deref(), Some("b.sql"));
        assert_eq!(resolve_sql_path(dir.path(), "app/x.py", "../../etc/x.sql"), None);
    }
}
