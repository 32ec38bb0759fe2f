//! Types shared by several pipeline stages.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Position of a finding inside the scanned tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub path: String,
    pub line: u32,
    pub column: u32,
}

impl SourceLocation {
    pub fn new(path: impl Into<String>, line: u32, column: u32) -> Self {
        Self { path: path.into(), line: line.max(1), column: column.max(1) }
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path, self.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum DbType {
    MySQL,
    PostgreSQL,
    MongoDB,
    SQLServer,
    #[default]
    Unknown,
}

impl DbType {
    pub fn default_port(self) -> Option<u16> {
        match self {
            DbType::MySQL => Some(3306),
            DbType::PostgreSQL => Some(5432),
            DbType::MongoDB => Some(27017),
            DbType::SQLServer => Some(1433),
            DbType::Unknown => None,
        }
    }

    /// Guess from a URL scheme, JDBC sub-protocol, engine string or
    /// variable-name prefix.
    pub fn from_hint(s: &str) -> DbType {
        let s = s.to_ascii_lowercase();
        if s.contains("mongo") {
            DbType::MongoDB
        } else if s.contains("postg") || s.contains("psql") || s.starts_with("pg") || s.contains("_pg") {
            DbType::PostgreSQL
        } else if s.contains("mysql") || s.contains("maria") {
            DbType::MySQL
        } else if s.contains("sqlserver") || s.contains("mssql") || s.contains("odbc") || s.contains("sql_server") {
            DbType::SQLServer
        } else {
            DbType::Unknown
        }
    }

    pub fn parse(s: &str) -> Option<DbType> {
        match s.trim() {
            "MySQL" => Some(DbType::MySQL),
            "PostgreSQL" => Some(DbType::PostgreSQL),
            "MongoDB" => Some(DbType::MongoDB),
            "SQLServer" => Some(DbType::SQLServer),
            "Unknown" => Some(DbType::Unknown),
            _ => None,
        }
    }
}

/// Role of a driver-call argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Host,
    Port,
    User,
    Password,
    Database,
    ConnectionString,
    RawQuery,
    Document,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        Some(match s {
            "host" => Role::Host,
            "port" => Role::Port,
            "user" => Role::User,
            "password" => Role::Password,
            "database" => Role::Database,
            "connection_string" => Role::ConnectionString,
            "raw_query" => Role::RawQuery,
            "document" => Role::Document,
            _ => return None,
        })
    }

    pub fn is_repeatable(self) -> bool {
        matches!(self, Role::RawQuery | Role::Document)
    }
}

/// Non-fatal problem surfaced in the report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub stage: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(stage: &str, message: impl Into<String>) -> Self {
        Self { stage: stage.to_string(), message: message.into() }
    }
}
