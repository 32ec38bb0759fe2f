//! Table and column names from raw SQL.
//!
//! One permissive dialect: backtick, double-quote and bracket identifier
//! quoting, `%s`/`?`/`:name`/`$1` parameters, and the DML/DDL subset
//! SELECT, INSERT, UPDATE, DELETE, CREATE TABLE, ALTER TABLE.

use crate::dataflow::HOLE;

/// Identifier substituted for unresolved query pieces.
pub const HOLE_IDENT: &str = "__hole__";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SqlKeywords {
    pub databases: Vec<String>,
    pub tables: Vec<String>,
    pub columns: Vec<String>,
}

impl SqlKeywords {
    fn push(v: &mut Vec<String>, s: &str) {
        if s.is_empty() || s.contains(HOLE_IDENT) || v.iter().any(|x| x == s) {
            return;
        }
        v.push(s.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.databases.is_empty() && self.tables.is_empty() && self.columns.is_empty()
    }

    pub fn merge(&mut self, other: SqlKeywords) {
        for d in other.databases {
            Self::push(&mut self.databases, &d);
        }
        for t in other.tables {
            Self::push(&mut self.tables, &t);
        }
        for c in other.columns {
            Self::push(&mut self.columns, &c);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word { text: String, quoted: bool },
    Str,
    Num,
    Param,
    Op(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Star,
    Semi,
}

/// Index just past the closing quote of a literal whose body starts at `i`.
fn string_end(chars: &[char], mut i: usize, backslash: bool) -> Option<usize> {
    loop {
        match chars.get(i)? {
            '\\' if backslash => i += 2,
            '\'' if chars.get(i + 1) == Some(&'\'') => i += 2,
            '\'' => return Some(i + 1),
            _ => i += 1,
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    let n = chars.len();
    let word_char = |c: char| c.is_alphanumeric() || c == '_' || c == '$';
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'-') || c == '#' && !matches!(chars.get(i + 1), Some('>')) {
            while i < n && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            while i < n && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                i += 1;
            }
            i += 2;
        } else if c == '\'' || (matches!(c, 'E' | 'e' | 'N' | 'n' | 'X' | 'x' | 'B' | 'b') && chars.get(i + 1) == Some(&'\'')) {
            if c != '\'' {
                i += 1;
            }
            i += 1;
            // backslash escapes as in MySQL, else standard quoting
            i = string_end(&chars, i, true).or_else(|| string_end(&chars, i, false)).ok_or("unterminated string literal")?;
            out.push(Tok::Str);
        } else if c == '"' || c == '`' || c == '[' {
            let close = match c {
                '[' => ']',
                x => x,
            };
            i += 1;
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None => return Err("unterminated quoted identifier".into()),
                    Some(&x) if x == close && chars.get(i + 1) == Some(&close) && close != ']' => {
                        text.push(x);
                        i += 2;
                    }
                    Some(&x) if x == close => {
                        i += 1;
                        break;
                    }
                    Some(&x) => {
                        text.push(x);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Word { text, quoted: true });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < n && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Num);
        } else if c == '%' && matches!(chars.get(i + 1), Some('s' | 'd' | 'b' | 'f' | 'r')) {
            i += 2;
            out.push(Tok::Param);
        } else if c == '%' && chars.get(i + 1) == Some(&'(') {
            while i < n && chars[i] != ')' {
                i += 1;
            }
            i += 2;
            out.push(Tok::Param);
        } else if c == '?' {
            i += 1;
            while i < n && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Param);
        } else if (c == ':' || c == '@' || c == '$') && chars.get(i + 1).is_some_and(|d| word_char(*d)) && !(c == ':' && i > 0 && chars[i - 1] == ':') {
            i += 1;
            while i < n && word_char(chars[i]) {
                i += 1;
            }
            out.push(Tok::Param);
        } else if word_char(c) {
            let s = i;
            while i < n && word_char(chars[i]) {
                i += 1;
            }
            out.push(Tok::Word { text: chars[s..i].iter().collect(), quoted: false });
        } else {
            i += 1;
            out.push(match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '*' => Tok::Star,
                ';' => Tok::Semi,
                _ => {
                    let mut op = c.to_string();
                    while i < n && "<>=!|:&-+/^~".contains(chars[i]) && op.len() < 3 {
                        op.push(chars[i]);
                        i += 1;
                    }
                    Tok::Op(op)
                }
            });
        }
    }
    Ok(out)
}

const RESERVED: &[&str] = &[
    "SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "IN", "IS", "NULL", "LIKE", "ILIKE", "RLIKE", "REGEXP", "BETWEEN", "EXISTS", "AS", "ON", "JOIN",
    "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL", "USING", "GROUP", "BY", "ORDER", "HAVING", "LIMIT", "OFFSET", "UNION",
    "INTERSECT", "EXCEPT", "ALL", "DISTINCT", "ANY", "SOME", "INSERT", "INTO", "VALUES", "UPDATE", "SET", "DELETE", "CREATE", "TABLE", "ALTER",
    "ADD", "DROP", "CASE", "WHEN", "THEN", "ELSE", "END", "ASC", "DESC", "TRUE", "FALSE", "RETURNING", "WITH", "INTERVAL", "TOP", "NULLS",
    "COLLATE", "ESCAPE", "DEFAULT", "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "LOCALTIME", "LOCALTIMESTAMP", "OVER", "PARTITION",
    "DIV", "MOD", "XOR", "WINDOW", "LATERAL", "STRAIGHT_JOIN", "FETCH", "FOR",
];

const JOIN_WORDS: &[&str] = &["JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL", "STRAIGHT_JOIN", "LATERAL"];

const CLAUSE_STOPS: &[&str] =
    &["FROM", "WHERE", "GROUP", "ORDER", "HAVING", "LIMIT", "OFFSET", "UNION", "INTERSECT", "EXCEPT", "INTO", "FETCH", "FOR", "WINDOW", "RETURNING", "ON", "SET", "USING", "VALUES"];

fn is_reserved(w: &str) -> bool {
    RESERVED.iter().any(|k| k.eq_ignore_ascii_case(w))
}

struct Parser {
    toks: Vec<Tok>,
    i: usize,
    out: SqlKeywords,
    ctes: Vec<String>,
}

type PResult = Result<(), String>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k)
    }

    fn is_kw_at(&self, k: usize, kw: &str) -> bool {
        matches!(self.peek_at(k), Some(Tok::Word { text, quoted: false }) if text.eq_ignore_ascii_case(kw))
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.is_kw_at(0, kw)
    }

    fn is_any_kw(&self, kws: &[&str]) -> bool {
        kws.iter().any(|k| self.is_kw(k))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(format!("expected {kw}"))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn at_end(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Semi))
    }

    /// A plain or quoted identifier that is not a reserved word.
    fn ident(&self, k: usize) -> Option<String> {
        match self.peek_at(k) {
            Some(Tok::Word { text, quoted: true }) => Some(text.clone()),
            Some(Tok::Word { text, quoted: false }) if !is_reserved(text) => Some(text.clone()),
            _ => None,
        }
    }

    /// Any word, reserved or not; column definitions may use keywords.
    fn any_word(&self, k: usize) -> Option<String> {
        match self.peek_at(k) {
            Some(Tok::Word { text, .. }) => Some(text.clone()),
            _ => None,
        }
    }

    /// `a.b.c` → parts.
    fn dotted(&mut self) -> Option<Vec<String>> {
        let first = self.ident(0)?;
        self.i += 1;
        let mut parts = vec![first];
        while self.peek() == Some(&Tok::Dot) {
            match self.peek_at(1) {
                Some(Tok::Word { text, .. }) => {
                    parts.push(text.clone());
                    self.i += 2;
                }
                Some(Tok::Star) => {
                    parts.push("*".into());
                    self.i += 2;
                }
                _ => break,
            }
        }
        Some(parts)
    }

    fn skip_group(&mut self) -> PResult {
        // at LParen
        let mut depth = 0usize;
        loop {
            match self.peek() {
                None => return Err("unbalanced parentheses".into()),
                Some(Tok::LParen) => depth += 1,
                Some(Tok::RParen) => {
                    depth -= 1;
                    if depth == 0 {
                        self.i += 1;
                        return Ok(());
                    }
                }
                _ => {}
            }
            self.i += 1;
        }
    }

    /// Skip to the next depth-0 comma, `)`, statement end or stop keyword.
    fn skip_until(&mut self, stops: &[&str]) -> PResult {
        loop {
            match self.peek() {
                None | Some(Tok::Semi) | Some(Tok::Comma) | Some(Tok::RParen) => return Ok(()),
                Some(Tok::LParen) => self.skip_group()?,
                _ if self.is_any_kw(stops) => return Ok(()),
                _ => self.i += 1,
            }
        }
    }

    /// Collect column references from an expression region into `sink`.
    fn expr(&mut self, stops: &[&str], stop_at_comma: bool, sink: &mut Vec<String>, aliases: &mut Vec<String>) -> PResult {
        let mut prev_operand = false;
        loop {
            let Some(tok) = self.peek().cloned() else { return Ok(()) };
            match tok {
                Tok::Semi | Tok::RParen => return Ok(()),
                Tok::Comma => {
                    if stop_at_comma {
                        return Ok(());
                    }
                    self.i += 1;
                    prev_operand = false;
                }
                Tok::Word { ref text, quoted } => {
                    if !quoted && is_reserved(text) {
                        if self.is_any_kw(stops) {
                            return Ok(());
                        }
                        let up = text.to_ascii_uppercase();
                        self.i += 1;
                        match up.as_str() {
                            "AS" => {
                                if let Some(a) = self.any_word(0) {
                                    aliases.push(a);
                                    self.i += 1;
                                    if self.peek() == Some(&Tok::LParen) {
                                        self.skip_group()?;
                                    }
                                }
                                prev_operand = true;
                            }
                            "NULLS" | "INTERVAL" => {
                                self.i += 1;
                                prev_operand = true;
                            }
                            "END" | "NULL" | "TRUE" | "FALSE" | "CURRENT_DATE" | "CURRENT_TIME" | "CURRENT_TIMESTAMP" | "LOCALTIME" | "LOCALTIMESTAMP" => {
                                prev_operand = true
                            }
                            "ASC" | "DESC" => prev_operand = true,
                            _ => prev_operand = false,
                        }
                        continue;
                    }
                    if !quoted && self.peek_at(1) == Some(&Tok::LParen) {
                        // function call; its arguments are scanned on the next turn
                        self.i += 1;
                        continue;
                    }
                    if !quoted && self.is_kw_at(1, "FROM") && self.toks[..self.i].iter().rev().take(1).any(|t| *t == Tok::LParen) {
                        // EXTRACT(YEAR FROM x), TRIM(BOTH FROM x)
                        self.i += 1;
                        continue;
                    }
                    if prev_operand {
                        aliases.push(text.clone());
                        self.i += 1;
                        prev_operand = false;
                        continue;
                    }
                    let parts = self.dotted().unwrap_or_default();
                    if self.peek() == Some(&Tok::LParen) {
                        prev_operand = false;
                        continue;
                    }
                    if let Some(last) = parts.last() {
                        if last != "*" {
                            sink.push(last.clone());
                        }
                    }
                    prev_operand = true;
                }
                Tok::Str | Tok::Num | Tok::Param => {
                    self.i += 1;
                    prev_operand = true;
                }
                Tok::Star => {
                    self.i += 1;
                    prev_operand = !prev_operand;
                }
                Tok::Dot => self.i += 1,
                Tok::Op(op) => {
                    self.i += 1;
                    prev_operand = false;
                    if op == "::" {
                        if self.any_word(0).is_some() {
                            self.i += 1;
                            if self.peek() == Some(&Tok::LParen) {
                                self.skip_group()?;
                            }
                        }
                        prev_operand = true;
                    }
                }
                Tok::LParen => {
                    self.i += 1;
                    if self.is_kw("SELECT") || self.is_kw("WITH") {
                        self.query()?;
                    } else {
                        self.expr(&[], false, sink, aliases)?;
                    }
                    if !self.eat(&Tok::RParen) {
                        return Err("unbalanced parentheses".into());
                    }
                    prev_operand = true;
                }
            }
        }
    }

    fn cols(&mut self, stops: &[&str], stop_at_comma: bool) -> PResult {
        let mut sink = Vec::new();
        let mut aliases = Vec::new();
        self.expr(stops, stop_at_comma, &mut sink, &mut aliases)?;
        for c in sink {
            SqlKeywords::push(&mut self.out.columns, &c);
        }
        Ok(())
    }

    fn table_name(&mut self) -> PResult {
        let parts = self.dotted().ok_or("expected table name")?;
        if parts.len() >= 2 {
            let db = &parts[parts.len() - 2];
            SqlKeywords::push(&mut self.out.databases, db);
        }
        SqlKeywords::push(&mut self.out.tables, parts.last().unwrap());
        Ok(())
    }

    fn optional_alias(&mut self) {
        if self.eat_kw("AS") {
            if self.any_word(0).is_some() {
                self.i += 1;
            }
        } else if self.ident(0).is_some() && !self.is_any_kw(&["SET", "USING"]) {
            self.i += 1;
        }
    }

    fn table_refs(&mut self, stops: &[&str]) -> PResult {
        loop {
            if self.peek() == Some(&Tok::LParen) {
                self.i += 1;
                if self.is_kw("SELECT") || self.is_kw("WITH") {
                    self.query()?;
                } else {
                    self.table_refs(stops)?;
                }
                if !self.eat(&Tok::RParen) {
                    return Err("unbalanced parentheses".into());
                }
            } else {
                let save = self.i;
                let parts = self.dotted().ok_or("expected table reference")?;
                if self.peek() == Some(&Tok::LParen) {
                    // table function
                    let mut sink = Vec::new();
                    self.i += 1;
                    self.expr(&[], false, &mut sink, &mut Vec::new())?;
                    self.eat(&Tok::RParen);
                    for c in sink {
                        SqlKeywords::push(&mut self.out.columns, &c);
                    }
                } else {
                    self.i = save;
                    let _ = parts;
                    self.table_name()?;
                }
            }
            self.optional_alias();
            loop {
                if self.is_kw("ON") {
                    self.i += 1;
                    let mut s: Vec<&str> = JOIN_WORDS.to_vec();
                    s.extend_from_slice(stops);
                    s.extend_from_slice(CLAUSE_STOPS);
                    self.cols(&s, true)?;
                } else if self.is_kw("USING") && self.peek_at(1) == Some(&Tok::LParen) {
                    self.i += 1;
                    self.paren_names(true)?;
                } else {
                    break;
                }
            }
            if self.eat(&Tok::Comma) {
                continue;
            }
            if self.is_any_kw(JOIN_WORDS) {
                while self.is_any_kw(JOIN_WORDS) || self.is_kw("APPLY") {
                    self.i += 1;
                }
                continue;
            }
            return Ok(());
        }
    }

    /// `(a, b, c)` as column names.
    fn paren_names(&mut self, record: bool) -> PResult {
        if !self.eat(&Tok::LParen) {
            return Err("expected (".into());
        }
        loop {
            match self.peek() {
                Some(Tok::RParen) => {
                    self.i += 1;
                    return Ok(());
                }
                Some(Tok::Comma) => self.i += 1,
                Some(Tok::Word { .. }) => {
                    let parts = self.dotted().or_else(|| {
                        let w = self.any_word(0);
                        self.i += 1;
                        w.map(|w| vec![w])
                    });
                    if record {
                        if let Some(last) = parts.and_then(|p| p.last().cloned()) {
                            SqlKeywords::push(&mut self.out.columns, &last);
                        }
                    }
                }
                None => return Err("unbalanced parentheses".into()),
                _ => self.i += 1,
            }
        }
    }

    fn with_clause(&mut self) -> PResult {
        self.expect_kw("WITH")?;
        self.eat_kw("RECURSIVE");
        loop {
            let name = self.ident(0).ok_or("expected CTE name")?;
            self.i += 1;
            self.ctes.push(name);
            if self.peek() == Some(&Tok::LParen) {
                self.paren_names(false)?;
            }
            self.expect_kw("AS")?;
            self.eat_kw("NOT");
            self.eat_kw("MATERIALIZED");
            if !self.eat(&Tok::LParen) {
                return Err("expected ( after AS".into());
            }
            self.statement_body()?;
            if !self.eat(&Tok::RParen) {
                return Err("unbalanced parentheses".into());
            }
            if !self.eat(&Tok::Comma) {
                return Ok(());
            }
        }
    }

    fn query(&mut self) -> PResult {
        if self.is_kw("WITH") {
            self.with_clause()?;
        }
        self.select()
    }

    fn select(&mut self) -> PResult {
        if self.peek() == Some(&Tok::LParen) {
            self.i += 1;
            self.query()?;
            if !self.eat(&Tok::RParen) {
                return Err("unbalanced parentheses".into());
            }
        } else {
            self.expect_kw("SELECT")?;
            self.eat_kw("ALL");
            if self.eat_kw("DISTINCT") && self.eat_kw("ON") && self.peek() == Some(&Tok::LParen) {
                self.i += 1;
                self.cols(&[], false)?;
                self.eat(&Tok::RParen);
            }
            if self.eat_kw("TOP") {
                if self.peek() == Some(&Tok::LParen) {
                    self.skip_group()?;
                } else {
                    self.i += 1;
                }
            }
            let mut select_aliases = Vec::new();
            let mut sink = Vec::new();
            self.expr(CLAUSE_STOPS, false, &mut sink, &mut select_aliases)?;
            for c in sink {
                SqlKeywords::push(&mut self.out.columns, &c);
            }
            if self.eat_kw("INTO") {
                self.table_name()?;
            }
            if self.eat_kw("FROM") {
                self.table_refs(&[])?;
            }
            if self.eat_kw("WHERE") {
                self.cols(CLAUSE_STOPS, false)?;
            }
            loop {
                let grouping = if self.is_kw("GROUP") || self.is_kw("ORDER") {
                    self.i += 1;
                    self.expect_kw("BY")?;
                    true
                } else {
                    self.eat_kw("HAVING")
                };
                if !grouping {
                    break;
                }
                let mut sink = Vec::new();
                self.expr(CLAUSE_STOPS, false, &mut sink, &mut Vec::new())?;
                for c in sink {
                    if !select_aliases.iter().any(|a| a.eq_ignore_ascii_case(&c)) {
                        SqlKeywords::push(&mut self.out.columns, &c);
                    }
                }
            }
            while self.is_any_kw(&["LIMIT", "OFFSET", "FETCH", "FOR"]) {
                self.i += 1;
                self.expr(CLAUSE_STOPS, false, &mut Vec::new(), &mut Vec::new())?;
            }
        }
        if self.is_any_kw(&["UNION", "INTERSECT", "EXCEPT"]) {
            self.i += 1;
            self.eat_kw("ALL");
            self.eat_kw("DISTINCT");
            return self.select();
        }
        Ok(())
    }

    fn assignments(&mut self, stops: &[&str]) -> PResult {
        loop {
            if self.peek() == Some(&Tok::LParen) {
                self.paren_names(true)?;
            } else {
                let parts = self.dotted().ok_or("expected column in SET")?;
                SqlKeywords::push(&mut self.out.columns, parts.last().unwrap());
            }
            match self.peek() {
                Some(Tok::Op(o)) if o == "=" => self.i += 1,
                _ => return Err("expected = in SET".into()),
            }
            self.cols(stops, true)?;
            if !self.eat(&Tok::Comma) {
                return Ok(());
            }
        }
    }

    fn returning(&mut self) -> PResult {
        if self.eat_kw("RETURNING") {
            self.cols(&[], false)?;
        }
        Ok(())
    }

    fn insert(&mut self) -> PResult {
        self.i += 1; // INSERT | REPLACE
        while self.is_any_kw(&["LOW_PRIORITY", "DELAYED", "HIGH_PRIORITY", "IGNORE", "OR"]) {
            if self.eat_kw("OR") {
                self.i += 1; // OR REPLACE / OR IGNORE
            } else {
                self.i += 1;
            }
        }
        self.eat_kw("INTO");
        self.table_name()?;
        if self.eat_kw("AS") {
            self.i += 1;
        }
        if self.peek() == Some(&Tok::LParen) && !(self.is_kw_at(1, "SELECT") || self.is_kw_at(1, "WITH")) {
            self.paren_names(true)?;
        }
        if self.eat_kw("VALUES") || self.eat_kw("VALUE") {
            loop {
                match self.peek() {
                    Some(Tok::LParen) => self.skip_group()?,
                    Some(Tok::Comma) => self.i += 1,
                    Some(Tok::Word { text, .. }) if text.eq_ignore_ascii_case("ROW") => self.i += 1,
                    _ => break,
                }
            }
        } else if self.eat_kw("DEFAULT") {
            self.expect_kw("VALUES")?;
        } else if self.eat_kw("SET") {
            self.assignments(&["ON", "RETURNING"])?;
        } else if self.is_kw("SELECT") || self.is_kw("WITH") || self.peek() == Some(&Tok::LParen) {
            self.query()?;
        } else {
            return Err("expected VALUES, SELECT or SET".into());
        }
        if self.eat_kw("AS") {
            self.i += 1;
        }
        if self.eat_kw("ON") {
            if self.eat_kw("DUPLICATE") {
                self.expect_kw("KEY")?;
                self.expect_kw("UPDATE")?;
                self.assignments(&["RETURNING"])?;
            } else if self.eat_kw("CONFLICT") {
                if self.peek() == Some(&Tok::LParen) {
                    self.paren_names(true)?;
                }
                if self.eat_kw("ON") {
                    self.expect_kw("CONSTRAINT")?;
                    self.i += 1;
                }
                self.expect_kw("DO")?;
                if self.eat_kw("UPDATE") {
                    self.expect_kw("SET")?;
                    self.assignments(&["WHERE", "RETURNING"])?;
                    if self.eat_kw("WHERE") {
                        self.cols(&["RETURNING"], false)?;
                    }
                } else {
                    self.expect_kw("NOTHING")?;
                }
            } else {
                return Err("expected DUPLICATE or CONFLICT".into());
            }
        }
        self.returning()
    }

    fn tail_clauses(&mut self) -> PResult {
        if self.eat_kw("WHERE") {
            self.cols(&["ORDER", "LIMIT", "RETURNING"], false)?;
        }
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            self.cols(&["LIMIT", "RETURNING"], false)?;
        }
        if self.eat_kw("LIMIT") {
            self.expr(&["RETURNING"], false, &mut Vec::new(), &mut Vec::new())?;
        }
        self.returning()
    }

    fn update(&mut self) -> PResult {
        self.i += 1;
        while self.is_any_kw(&["LOW_PRIORITY", "IGNORE", "ONLY"]) {
            self.i += 1;
        }
        self.table_refs(&["SET"])?;
        self.expect_kw("SET")?;
        self.assignments(&["FROM", "WHERE", "ORDER", "LIMIT", "RETURNING"])?;
        if self.eat_kw("FROM") {
            self.table_refs(&[])?;
        }
        self.tail_clauses()
    }

    fn delete(&mut self) -> PResult {
        self.i += 1;
        while self.is_any_kw(&["LOW_PRIORITY", "QUICK", "IGNORE"]) {
            self.i += 1;
        }
        if !self.is_kw("FROM") {
            // DELETE t1, t2 FROM ...
            while !self.at_end() && !self.is_kw("FROM") {
                self.i += 1;
            }
        }
        self.expect_kw("FROM")?;
        self.eat_kw("ONLY");
        self.table_refs(&["USING"])?;
        if self.eat_kw("USING") {
            self.table_refs(&[])?;
        }
        self.tail_clauses()
    }

    fn create(&mut self) -> PResult {
        self.i += 1;
        if self.eat_kw("OR") {
            self.expect_kw("REPLACE")?;
        }
        while self.is_any_kw(&["TEMPORARY", "TEMP", "UNLOGGED", "GLOBAL", "LOCAL"]) {
            self.i += 1;
        }
        if self.eat_kw("DATABASE") || self.eat_kw("SCHEMA") {
            if self.eat_kw("IF") {
                self.expect_kw("NOT")?;
                self.expect_kw("EXISTS")?;
            }
            let name = self.ident(0).ok_or("expected database name")?;
            self.i += 1;
            SqlKeywords::push(&mut self.out.databases, &name);
            return Ok(());
        }
        self.expect_kw("TABLE")?;
        if self.eat_kw("IF") {
            self.expect_kw("NOT")?;
            self.expect_kw("EXISTS")?;
        }
        self.table_name()?;
        if self.eat_kw("AS") {
            return self.query();
        }
        if !self.eat(&Tok::LParen) {
            if self.eat_kw("LIKE") {
                return self.table_name();
            }
            return Err("expected column definitions".into());
        }
        const CONSTRAINTS: &[&str] = &["PRIMARY", "FOREIGN", "UNIQUE", "CONSTRAINT", "KEY", "INDEX", "CHECK", "FULLTEXT", "SPATIAL", "EXCLUDE", "LIKE"];
        loop {
            match self.peek() {
                Some(Tok::RParen) => {
                    self.i += 1;
                    break;
                }
                Some(Tok::Comma) => self.i += 1,
                Some(Tok::Word { .. }) => {
                    if !self.is_any_kw(CONSTRAINTS) {
                        let name = self.any_word(0).unwrap();
                        SqlKeywords::push(&mut self.out.columns, &name);
                    }
                    self.i += 1;
                    self.skip_until(&[])?;
                }
                None => return Err("unbalanced parentheses".into()),
                _ => return Err("unexpected token in column definitions".into()),
            }
        }
        // table options
        while !self.at_end() {
            if self.peek() == Some(&Tok::LParen) {
                self.skip_group()?;
            } else {
                self.i += 1;
            }
        }
        Ok(())
    }

    fn alter(&mut self) -> PResult {
        self.i += 1;
        self.expect_kw("TABLE")?;
        self.eat_kw("ONLY");
        if self.eat_kw("IF") {
            self.expect_kw("EXISTS")?;
        }
        self.table_name()?;
        const SKIP: &[&str] = &["CONSTRAINT", "PRIMARY", "FOREIGN", "UNIQUE", "INDEX", "KEY", "CHECK", "FULLTEXT", "PARTITION"];
        loop {
            let action = self.any_word(0).ok_or("expected ALTER TABLE action")?.to_ascii_uppercase();
            self.i += 1;
            let col = |p: &mut Parser| -> PResult {
                if p.is_any_kw(SKIP) {
                    return Ok(());
                }
                p.eat_kw("COLUMN");
                if p.eat_kw("IF") {
                    p.eat_kw("NOT");
                    p.expect_kw("EXISTS")?;
                }
                let name = p.any_word(0).ok_or("expected column name")?;
                p.i += 1;
                SqlKeywords::push(&mut p.out.columns, &name);
                Ok(())
            };
            match action.as_str() {
                "ADD" | "DROP" | "ALTER" | "MODIFY" => col(self)?,
                "CHANGE" => {
                    col(self)?;
                    if let Some(n) = self.any_word(0) {
                        self.i += 1;
                        SqlKeywords::push(&mut self.out.columns, &n);
                    }
                }
                "RENAME" => {
                    if self.eat_kw("TO") || self.eat_kw("AS") {
                        self.table_name()?;
                    } else {
                        col(self)?;
                        self.expect_kw("TO")?;
                        let n = self.any_word(0).ok_or("expected new column name")?;
                        self.i += 1;
                        SqlKeywords::push(&mut self.out.columns, &n);
                    }
                }
                _ => {}
            }
            self.skip_until(&[])?;
            if !self.eat(&Tok::Comma) {
                return Ok(());
            }
        }
    }

    fn statement_body(&mut self) -> PResult {
        if self.is_kw("WITH") {
            self.with_clause()?;
        }
        match self.any_word(0).map(|w| w.to_ascii_uppercase()).as_deref() {
            Some("SELECT") => self.select(),
            Some("INSERT") | Some("REPLACE") => self.insert(),
            Some("UPDATE") => self.update(),
            Some("DELETE") => self.delete(),
            Some("CREATE") => self.create(),
            Some("ALTER") => self.alter(),
            _ if self.peek() == Some(&Tok::LParen) => self.select(),
            Some(w) => Err(format!("unsupported statement {w}")),
            None => Err("empty statement".into()),
        }
    }
}

/// Parse one statement. HOLE markers become a neutral identifier whose
/// containing names are dropped.
pub fn extract_sql_keywords(sql_text: &str) -> Result<SqlKeywords, String> {
    let text = sql_text.replace(HOLE, &format!(" {HOLE_IDENT} "));
    // keep identifiers glued to a hole: `user_` + HOLE is one name
    let glued = glue_holes(sql_text);
    let text = if glued != text { glued } else { text };
    let toks = tokenize(&text)?;
    let mut p = Parser { toks, i: 0, out: SqlKeywords::default(), ctes: Vec::new() };
    p.statement_body()?;
    while p.eat(&Tok::Semi) {}
    if p.i < p.toks.len() {
        return Err("unexpected trailing tokens".into());
    }
    let ctes = std::mem::take(&mut p.ctes);
    p.out.tables.retain(|t| !ctes.iter().any(|c| c.eq_ignore_ascii_case(t)));
    Ok(p.out)
}

/// Replace holes by the placeholder identifier without padding when they
/// touch identifier characters, so partial names are recognised as such.
fn glue_holes(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::new();
    for (i, c) in chars.iter().enumerate() {
        if *c == HOLE {
            let touches = |c: Option<&char>| c.is_some_and(|c| c.is_alphanumeric() || *c == '_');
            let left = i > 0 && touches(chars.get(i - 1));
            let right = touches(chars.get(i + 1));
            if left || right {
                out.push_str(HOLE_IDENT);
            } else {
                out.push(' ');
                out.push_str(HOLE_IDENT);
                out.push(' ');
            }
        } else {
            out.push(*c);
        }
    }
    out
}

const SCRIPT_SKIP: &[&str] = &[
    "SET", "BEGIN", "COMMIT", "START", "ROLLBACK", "GRANT", "REVOKE", "DROP", "LOCK", "UNLOCK", "TRUNCATE", "COMMENT", "PRAGMA", "DELIMITER", "SAVEPOINT",
    "RELEASE", "ANALYZE", "VACUUM", "EXPLAIN", "SHOW", "DECLARE",
];
const CREATE_SKIP: &[&str] = &["INDEX", "UNIQUE", "VIEW", "FUNCTION", "PROCEDURE", "TRIGGER", "SEQUENCE", "EXTENSION", "TYPE", "USER", "ROLE"];

/// Split a script on top-level semicolons.
pub fn split_statements(script: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut chars = script.chars().peekable();
    let mut line_comment = false;
    while let Some(c) = chars.next() {
        if line_comment {
            cur.push(c);
            if c == '\n' {
                line_comment = false;
            }
            continue;
        }
        match quote {
            Some(q) => {
                cur.push(c);
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' | '`' => {
                    quote = Some(c);
                    cur.push(c);
                }
                '-' if chars.peek() == Some(&'-') => {
                    line_comment = true;
                    cur.push(c);
                }
                ';' => {
                    if !cur.trim().is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                    cur.clear();
                }
                _ => cur.push(c),
            },
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

/// Extract from a multi-statement file; session and privilege statements
/// are skipped silently, other failures are returned as messages.
pub fn extract_sql_script(script: &str) -> (SqlKeywords, Vec<String>) {
    let mut acc = SqlKeywords::default();
    let mut errors = Vec::new();
    for stmt in split_statements(script) {
        let Ok(toks) = tokenize(&stmt) else {
            errors.push("unterminated literal".into());
            continue;
        };
        let first = toks.iter().find_map(|t| match t {
            Tok::Word { text, quoted: false } => Some(text.to_ascii_uppercase()),
            _ => None,
        });
        let second = toks.iter().filter_map(|t| match t {
            Tok::Word { text, quoted: false } => Some(text.to_ascii_uppercase()),
            _ => None,
        });
        let second: Vec<String> = second.take(3).collect();
        match first.as_deref() {
            None => continue,
            Some("USE") => {
                if let Some(Tok::Word { text, .. }) = toks.get(1) {
                    SqlKeywords::push(&mut acc.databases, text);
                }
                continue;
            }
            Some(w) if SCRIPT_SKIP.contains(&w) => continue,
            Some("CREATE") if second.iter().skip(1).any(|w| CREATE_SKIP.contains(&w.as_str())) && !second.iter().any(|w| w == "TABLE") => continue,
            _ => {}
        }
        match extract_sql_keywords(&stmt) {
            Ok(k) => acc.merge(k),
            Err(e) => errors.push(e),
        }
    }
    (acc, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kw(s: &str) -> (Vec<String>, Vec<String>) {
        let k = extract_sql_keywords(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        (k.tables, k.columns)
    }

    fn v(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn select_with_where() {
        assert_eq!(kw("SELECT name, disease FROM patient_info WHERE id=1"), (v(&["patient_info"]), v(&["name", "disease", "id"])));
    }

    #[test]
    fn star_gives_no_columns() {
        assert_eq!(kw("SELECT * FROM t"), (v(&["t"]), v(&[])));
    }

    #[test]
    fn holes() {
        let q = format!("SELECT email FROM users WHERE id = {HOLE}");
        assert_eq!(kw(&q), (v(&["users"]), v(&["email", "id"])));
        let q = format!("SELECT email FROM user_{HOLE} WHERE {HOLE}");
        assert_eq!(kw(&q), (v(&[]), v(&["email"])));
    }

    #[test]
    fn unsupported_is_error() {
        assert!(extract_sql_keywords("GRANT ALL ON x TO y").is_err());
        assert!(extract_sql_keywords("SELECT a FROM (b").is_err());
    }

    #[test]
    fn script_splitting() {
        let (k, errs) = extract_sql_script("SET NAMES utf8;\nUSE shop;\nCREATE TABLE orders (id INT, total DECIMAL(10,2), PRIMARY KEY (id));\n-- done; really\nINSERT INTO orders (id, total) VALUES (1, 2.5);");
        assert!(errs.is_empty(), "{errs:?}");
        assert_eq!(k.databases, v(&["shop"]));
        assert_eq!(k.tables, v(&["orders"]));
        assert_eq!(k.columns, v(&["id", "total"]));
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_]{0,8}".prop_filter("not reserved", |s| !is_reserved(s))
    }

    proptest! {
        // A hole inside a string literal or as a trailing alias can be removed
        // without changing legality, and must not change the result.
        #[test]
        fn hole_neutral_where_removable(t in ident(), cols in proptest::collection::vec(ident(), 1..4), w in ident(), lit in "[a-z ]{0,6}") {
            let base = format!("SELECT {} FROM {t} WHERE {w} = '{lit}{HOLE}'", cols.join(", "));
            let removed = base.replace(HOLE, "");
            prop_assert_eq!(extract_sql_keywords(&base), extract_sql_keywords(&removed));
            let tail = format!("SELECT {} FROM {t} {HOLE}", cols.join(", "));
            prop_assert_eq!(extract_sql_keywords(&tail), extract_sql_keywords(&tail.replace(HOLE, "")));
        }
    }
}
