//! Repository traversal and per-file analysis shared by later stages.

use crate::dataflow::{self, DefUseGraph, SinkMatch, SinkSpec};
use crate::error::{Error, Result};
use crate::model::Diagnostic;
use rayon::prelude::*;
use std::path::Path;
use walkdir::WalkDir;

const SKIP_DIRS: &[&str] = &[".git", ".hg", ".svn", "node_modules", "__pycache__", ".venv", "venv", ".tox", ".mypy_cache"];

/// One text file of the scanned tree.
#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Relative to the scan root, forward slashes.
    pub rel_path: String,
    pub text: String,
    pub graph: Option<DefUseGraph>,
    pub sinks: Vec<SinkMatch>,
}

impl SourceFile {
    pub fn is_python(&self) -> bool {
        self.rel_path.ends_with(".py")
    }

    pub fn lines(&self) -> Vec<&str> {
        self.text.lines().collect()
    }

    /// Build from in-memory text (used by tests and the FFI layer).
    pub fn from_text(rel_path: &str, text: &str, specs: &[SinkSpec]) -> (Self, Vec<Diagnostic>) {
        let mut diags = Vec::new();
        let (graph, sinks) = if rel_path.ends_with(".py") {
            let module = dataflow::parse_source(text);
            if let Some(e) = module.errors.first() {
                diags.push(Diagnostic::new(
                    "dataflow",
                    format!("{rel_path}:{}: {} syntax error(s), first: {}", e.pos.line, module.errors.len(), e.message),
                ));
            }
            let graph = dataflow::build_def_use(&module);
            let sinks = dataflow::find_sinks(&graph, specs);
            (Some(graph), sinks)
        } else {
            (None, Vec::new())
        };
        (Self { rel_path: rel_path.to_string(), text: text.to_string(), graph, sinks }, diags)
    }
}

fn looks_binary(bytes: &[u8]) -> bool {
    bytes.iter().take(8192).any(|b| *b == 0)
}

/// Walk `root`, skipping binaries, VCS metadata and files over `max_size`
/// bytes. Files come back sorted by path.
pub fn load_repository(root: &Path, max_size: u64, specs: &[SinkSpec]) -> Result<(Vec<SourceFile>, Vec<Diagnostic>)> {
    let meta = std::fs::metadata(root).map_err(|e| Error::Io { path: root.to_path_buf(), source: e })?;
    if !meta.is_dir() {
        return Err(Error::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotADirectory, "scan root is not a directory"),
        });
    }
    std::fs::read_dir(root).map_err(|e| Error::Io { path: root.to_path_buf(), source: e })?;

    let mut diags = Vec::new();
    let mut paths = Vec::new();
    let walker = WalkDir::new(root).follow_links(false).sort_by_file_name().into_iter().filter_entry(|e| {
        !(e.file_type().is_dir() && e.depth() > 0 && SKIP_DIRS.contains(&e.file_name().to_string_lossy().as_ref()))
    });
    for entry in walker {
        match entry {
            Ok(e) if e.file_type().is_file() => {
                let size = e.metadata().map(|m| m.len()).unwrap_or(0);
                let rel = e.path().strip_prefix(root).unwrap_or(e.path()).to_string_lossy().replace('\\', "/");
                if size > max_size {
                    diags.push(Diagnostic::new("detector", format!("{rel}: skipped, {size} bytes exceeds the size cap")));
                    continue;
                }
                paths.push((rel, e.path().to_path_buf()));
            }
            Ok(_) => {}
            Err(err) => diags.push(Diagnostic::new("detector", format!("walk error: {err}"))),
        }
    }
    paths.sort();

    let loaded: Vec<(Option<SourceFile>, Vec<Diagnostic>)> = paths
        .par_iter()
        .map(|(rel, abs)| match std::fs::read(abs) {
            Ok(bytes) if looks_binary(&bytes) => (None, Vec::new()),
            Ok(bytes) => {
                let text = String::from_utf8_lossy(&bytes).into_owned();
                let (f, d) = SourceFile::from_text(rel, &text, specs);
                (Some(f), d)
            }
            Err(e) => (None, vec![Diagnostic::new("detector", format!("{rel}: unreadable, skipped: {e}"))]),
        })
        .collect();
    let mut files = Vec::new();
    for (f, d) in loaded {
        diags.extend(d);
        files.extend(f);
    }
    Ok((files, diags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::sinks::builtin_specs;

    #[test]
    fn skips_binary_large_and_vcs() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join(".git")).unwrap();
        std::fs::write(dir.path().join(".git/config"), "x").unwrap();
        std::fs::write(dir.path().join("a.py"), "x = 1\n").unwrap();
        std::fs::write(dir.path().join("b.bin"), [0u8, 1, 2]).unwrap();
        std::fs::write(dir.path().join("c.txt"), "y".repeat(100)).unwrap();
        let (files, diags) = load_repository(dir.path(), 50, &builtin_specs()).unwrap();
        let names: Vec<&str> = files.iter().map(|f| f.rel_path.as_str()).collect();
        assert_eq!(names, vec!["a.py"]);
        assert!(diags.iter().any(|d| d.message.contains("c.txt")));
    }

    #[test]
    fn missing_root_is_fatal() {
        assert!(load_repository(Path::new("/definitely/not/here"), 10, &[]).is_err());
    }
}
