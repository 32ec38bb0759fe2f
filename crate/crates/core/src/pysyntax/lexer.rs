//! Tokenizer for Python source.
//!
//! The tokenizer never fails. Malformed input produces [`TokKind::Error`]
//! tokens which the parser turns into diagnostics during statement recovery.

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Name(String),
    Number(String),
    /// A string literal. `value` has escapes processed (unless raw).
    Str(StrTok),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Error(String),
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrTok {
    pub value: String,
    pub raw: bool,
    pub bytes: bool,
    pub fstring: bool,
    /// 1-based line/column of the first character after the opening quote(s).
    pub body_line: u32,
    pub body_col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    pub line: u32,
    pub col: u32,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=", "!",
];

pub fn tokenize(src: &str) -> Vec<Token> {
    Lexer::new(src).run()
}

/// Tokenizes a fragment whose first character sits at `line`:`col` of an
/// enclosing file (used for f-string replacement fields).
pub fn tokenize_at(src: &str, line: u32, col: u32) -> Vec<Token> {
    let mut lx = Lexer::new(src);
    lx.line = line;
    lx.col = col;
    lx.run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    indents: Vec<u32>,
    depth: usize,
    out: Vec<Token>,
    at_line_start: bool,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            indents: vec![0],
            depth: 0,
            out: Vec::new(),
            at_line_start: true,
        }
    }

    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokKind, line: u32, col: u32) {
        self.out.push(Token { kind, line, col });
    }

    fn run(mut self) -> Vec<Token> {
        while self.pos < self.chars.len() {
            if self.at_line_start && self.depth == 0
                && !self.handle_indentation() {
                    continue;
                }
            self.at_line_start = false;
            let c = match self.peek(0) {
                Some(c) => c,
                None => break,
            };
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\x0c' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '\\' if self.peek(1) == Some('\r') && self.peek(2) == Some('\n') => {
                    self.bump();
                    self.bump();
                    self.bump();
                }
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        let last_is_newline = matches!(
                            self.out.last().map(|t| &t.kind),
                            None | Some(TokKind::Newline) | Some(TokKind::Indent) | Some(TokKind::Dedent)
                        );
                        if !last_is_newline {
                            self.push(TokKind::Newline, line, col);
                        }
                        self.at_line_start = true;
                    }
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                    let n = self.number();
                    self.push(TokKind::Number(n), line, col);
                }
                c if is_id_start(c) => {
                    if let Some(tok) = self.try_string_with_prefix() {
                        self.push(tok, line, col);
                    } else {
                        let mut name = String::new();
                        while let Some(c) = self.peek(0) {
                            if is_id_continue(c) {
                                name.push(c);
                                self.bump();
                            } else {
                                break;
                            }
                        }
                        self.push(TokKind::Name(name), line, col);
                    }
                }
                '\'' | '"' => {
                    let tok = self.string(String::new());
                    self.push(tok, line, col);
                }
                _ => {
                    if let Some(op) = self.operator() {
                        match op {
                            "(" | "[" | "{" => self.depth += 1,
                            ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                            _ => {}
                        }
                        self.push(TokKind::Op(op), line, col);
                    } else {
                        self.bump();
                        self.push(TokKind::Error(format!("unexpected character {c:?}")), line, col);
                    }
                }
            }
        }
        let (line, col) = (self.line, self.col);
        if !matches!(
            self.out.last().map(|t| &t.kind),
            None | Some(TokKind::Newline) | Some(TokKind::Dedent)
        ) {
            self.push(TokKind::Newline, line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokKind::Dedent, line, col);
        }
        self.push(TokKind::End, line, col);
        self.out
    }

    /// Measures leading whitespace. Returns false when the line was blank or
    /// a comment (already consumed).
    fn handle_indentation(&mut self) -> bool {
        let mut width = 0u32;
        let start = self.pos;
        while let Some(c) = self.peek(0) {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / 8 + 1) * 8,
                '\x0c' => width = 0,
                _ => break,
            }
            self.bump();
        }
        match self.peek(0) {
            None => return false,
            Some('\n') | Some('#') => {
                // blank or comment-only line
                while let Some(c) = self.peek(0) {
                    self.bump();
                    if c == '\n' {
                        break;
                    }
                }
                self.at_line_start = true;
                return false;
            }
            Some('\r') if self.peek(1) == Some('\n') => {
                self.bump();
                self.bump();
                self.at_line_start = true;
                return false;
            }
            Some('\\') if self.peek(1) == Some('\n') => {
                // explicit continuation at the start of a line; treat as blank
                self.bump();
                self.bump();
                self.at_line_start = true;
                return false;
            }
            _ => {}
        }
        let _ = start;
        let current = *self.indents.last().unwrap_or(&0);
        let (line, col) = (self.line, self.col);
        if width > current {
            self.indents.push(width);
            self.push(TokKind::Indent, line, 1);
        } else if width < current {
            while width < *self.indents.last().unwrap_or(&0) {
                self.indents.pop();
                self.push(TokKind::Dedent, line, 1);
            }
            if width != *self.indents.last().unwrap_or(&0) {
                self.push(TokKind::Error("inconsistent dedent".into()), line, col);
                self.indents.push(width);
            }
        }
        self.at_line_start = false;
        true
    }

    fn number(&mut self) -> String {
        let mut s = String::new();
        let mut prev = '\0';
        while let Some(c) = self.peek(0) {
            let accept = c.is_ascii_alphanumeric()
                || c == '_'
                || c == '.'
                || ((c == '+' || c == '-') && (prev == 'e' || prev == 'E') && !s.starts_with("0x") && !s.starts_with("0X"));
            if !accept {
                break;
            }
            s.push(c);
            prev = c;
            self.bump();
        }
        s
    }

    fn operator(&mut self) -> Option<&'static str> {
        for op in OPERATORS {
            let matched = op.chars().enumerate().all(|(i, ch)| self.peek(i) == Some(ch));
            if matched {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                return Some(op);
            }
        }
        None
    }

    fn try_string_with_prefix(&mut self) -> Option<TokKind> {
        let mut prefix = String::new();
        let mut i = 0;
        while i < 2 {
            match self.peek(i) {
                Some(c) if "rRbBuUfF".contains(c) => prefix.push(c),
                _ => break,
            }
            i += 1;
        }
        if prefix.is_empty() {
            return None;
        }
        // try the longest prefix first, then a one-letter prefix
        for len in (1..=prefix.chars().count()).rev() {
            if matches!(self.peek(len), Some('\'') | Some('"')) {
                let p: String = prefix.chars().take(len).collect();
                if !valid_prefix(&p) {
                    continue;
                }
                for _ in 0..len {
                    self.bump();
                }
                return Some(self.string(p));
            }
        }
        None
    }

    fn string(&mut self, prefix: String) -> TokKind {
        let lower = prefix.to_ascii_lowercase();
        let raw = lower.contains('r');
        let bytes = lower.contains('b');
        let fstring = lower.contains('f');
        let quote = self.bump().unwrap_or('"');
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let (body_line, body_col) = (self.line, self.col);
        let mut value = String::new();
        loop {
            let c = match self.peek(0) {
                Some(c) => c,
                None => return TokKind::Error("unterminated string literal".into()),
            };
            if c == quote {
                if !triple {
                    self.bump();
                    break;
                }
                if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                    self.bump();
                    self.bump();
                    self.bump();
                    break;
                }
                value.push(c);
                self.bump();
                continue;
            }
            if c == '\n' && !triple {
                return TokKind::Error("unterminated string literal".into());
            }
            if c == '\\' {
                self.bump();
                let next = match self.peek(0) {
                    Some(n) => n,
                    None => return TokKind::Error("unterminated string literal".into()),
                };
                if raw || fstring && (next == '{' || next == '}') {
                    // raw strings keep the backslash; f-string braces are handled later
                    value.push('\\');
                    value.push(next);
                    self.bump();
                    continue;
                }
                self.bump();
                match next {
                    '\n' => {}
                    'n' => value.push('\n'),
                    't' => value.push('\t'),
                    'r' => value.push('\r'),
                    '0' => value.push('\0'),
                    'a' => value.push('\x07'),
                    'b' => value.push('\x08'),
                    'f' => value.push('\x0c'),
                    'v' => value.push('\x0b'),
                    '\\' => value.push('\\'),
                    '\'' => value.push('\''),
                    '"' => value.push('"'),
                    'x' => {
                        let hex = self.take_hex(2);
                        match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                            Some(ch) => value.push(ch),
                            None => {
                                value.push_str("\\x");
                                value.push_str(&hex);
                            }
                        }
                    }
                    'u' | 'U' if !bytes => {
                        let n = if next == 'u' { 4 } else { 8 };
                        let hex = self.take_hex(n);
                        match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                            Some(ch) => value.push(ch),
                            None => {
                                value.push('\\');
                                value.push(next);
                                value.push_str(&hex);
                            }
                        }
                    }
                    other => {
                        value.push('\\');
                        value.push(other);
                    }
                }
                continue;
            }
            value.push(c);
            self.bump();
        }
        TokKind::Str(StrTok {
            value,
            raw,
            bytes,
            fstring,
            body_line,
            body_col,
        })
    }

    fn take_hex(&mut self, n: usize) -> String {
        let mut s = String::new();
        for _ in 0..n {
            match self.peek(0) {
                Some(c) if c.is_ascii_hexdigit() => {
                    s.push(c);
                    self.bump();
                }
                _ => break,
            }
        }
        s
    }
}

fn valid_prefix(p: &str) -> bool {
    let l = p.to_ascii_lowercase();
    matches!(l.as_str(), "r" | "u" | "b" | "f" | "rb" | "br" | "fr" | "rf")
}

fn is_id_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_id_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}
