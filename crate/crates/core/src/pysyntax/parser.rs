//! Recursive-descent parser with statement-level error recovery.
//!
//! A statement that fails to parse is recorded as a [`SyntaxError`] and
//! skipped up to the end of its logical line (plus any indented block that
//! follows), so the rest of the file still produces a tree.

use super::ast::*;
use super::lexer::{tokenize, tokenize_at, StrTok, TokKind, Token};

type PResult<T> = Result<T, SyntaxError>;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in",
    "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with",
    "yield",
];

pub fn parse_module(src: &str) -> Module {
    let tokens = tokenize(src);
    let mut p = Parser { toks: tokens, i: 0, errors: Vec::new() };
    let body = p.statements_until_end();
    Module { body, errors: p.errors }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    errors: Vec<SyntaxError>,
}

impl Parser {
    fn tok(&self) -> &Token {
        let idx = self.i.min(self.toks.len() - 1);
        &self.toks[idx]
    }

    fn kind(&self) -> &TokKind {
        &self.tok().kind
    }

    fn kind_at(&self, off: usize) -> &TokKind {
        let idx = (self.i + off).min(self.toks.len() - 1);
        &self.toks[idx].kind
    }

    fn pos(&self) -> Pos {
        let t = self.tok();
        Pos::new(t.line, t.col)
    }

    fn advance(&mut self) -> Token {
        let t = self.tok().clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.kind(), TokKind::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.kind(), TokKind::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(SyntaxError { pos: self.pos(), message: msg.into() })
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(format!("expected '{op}', found {}", describe(self.kind())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", describe(self.kind())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.kind().clone() {
            TokKind::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.advance();
                Ok(n)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    // ---- statements ----

    fn statements_until_end(&mut self) -> Vec<Stmt> {
        let mut body = Vec::new();
        loop {
            match self.kind() {
                TokKind::End => break,
                TokKind::Newline => {
                    self.advance();
                }
                TokKind::Indent => {
                    let pos = self.pos();
                    self.errors.push(SyntaxError { pos, message: "unexpected indent".into() });
                    self.skip_block();
                }
                TokKind::Dedent => {
                    self.advance();
                }
                _ => self.statement_into(&mut body),
            }
        }
        body
    }

    fn statement_into(&mut self, body: &mut Vec<Stmt>) {
        let start = self.i;
        match self.statement() {
            Ok(stmts) => body.extend(stmts),
            Err(e) => {
                self.errors.push(e);
                if self.i == start {
                    self.advance();
                }
                self.recover();
            }
        }
    }

    /// Skip to the end of the current logical line, then over any indented
    /// block that hangs off it.
    fn recover(&mut self) {
        loop {
            match self.kind() {
                TokKind::End => return,
                TokKind::Newline => {
                    self.advance();
                    break;
                }
                TokKind::Dedent => return,
                TokKind::Indent => {
                    self.skip_block();
                    return;
                }
                _ => {
                    self.advance();
                }
            }
        }
        if matches!(self.kind(), TokKind::Indent) {
            self.skip_block();
        }
    }

    fn skip_block(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.kind() {
                TokKind::End => return,
                TokKind::Indent => depth += 1,
                TokKind::Dedent => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        if let TokKind::Error(msg) = self.kind().clone() {
            return self.err(msg);
        }
        let pos = self.pos();
        if self.at_op("@") {
            return self.decorated().map(|s| vec![s]);
        }
        if let TokKind::Name(n) = self.kind().clone() {
            match n.as_str() {
                "if" => return self.if_stmt().map(|s| vec![s]),
                "while" => return self.while_stmt().map(|s| vec![s]),
                "for" => return self.for_stmt(pos).map(|s| vec![s]),
                "try" => return self.try_stmt().map(|s| vec![s]),
                "with" => return self.with_stmt(pos).map(|s| vec![s]),
                "def" => return self.funcdef(Vec::new(), pos).map(|s| vec![s]),
                "class" => return self.classdef(Vec::new(), pos).map(|s| vec![s]),
                "async" => {
                    self.advance();
                    return match self.kind() {
                        TokKind::Name(k) if k == "def" => self.funcdef(Vec::new(), pos).map(|s| vec![s]),
                        TokKind::Name(k) if k == "for" => self.for_stmt(pos).map(|s| vec![s]),
                        TokKind::Name(k) if k == "with" => self.with_stmt(pos).map(|s| vec![s]),
                        _ => self.err("expected def, for or with after async"),
                    };
                }
                _ => {}
            }
        }
        self.simple_stmt_line()
    }

    fn simple_stmt_line(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.small_stmt()?];
        while self.eat_op(";") {
            if matches!(self.kind(), TokKind::Newline | TokKind::End) {
                break;
            }
            out.push(self.small_stmt()?);
        }
        match self.kind() {
            TokKind::Newline => {
                self.advance();
                Ok(out)
            }
            TokKind::End | TokKind::Dedent => Ok(out),
            other => {
                let d = describe(other);
                self.err(format!("expected end of statement, found {d}"))
            }
        }
    }

    fn small_stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let name = match self.kind() {
            TokKind::Name(n) => Some(n.clone()),
            _ => None,
        };
        let kind = match name.as_deref() {
            Some("pass") => {
                self.advance();
                StmtKind::Pass
            }
            Some("break") => {
                self.advance();
                StmtKind::Break
            }
            Some("continue") => {
                self.advance();
                StmtKind::Continue
            }
            Some("return") => {
                self.advance();
                if self.at_end_of_simple() {
                    StmtKind::Return(None)
                } else {
                    StmtKind::Return(Some(self.star_exprs()?))
                }
            }
            Some("raise") => {
                self.advance();
                if self.at_end_of_simple() {
                    StmtKind::Raise(None)
                } else {
                    let e = self.expr()?;
                    if self.eat_kw("from") {
                        self.expr()?;
                    }
                    StmtKind::Raise(Some(e))
                }
            }
            Some("global") | Some("nonlocal") => {
                self.advance();
                let mut names = vec![self.ident()?];
                while self.eat_op(",") {
                    names.push(self.ident()?);
                }
                StmtKind::Global(names)
            }
            Some("del") => {
                self.advance();
                let mut targets = vec![self.bitor()?];
                while self.eat_op(",") {
                    if self.at_end_of_simple() {
                        break;
                    }
                    targets.push(self.bitor()?);
                }
                StmtKind::Delete(targets)
            }
            Some("assert") => {
                self.advance();
                let test = self.expr()?;
                let msg = if self.eat_op(",") { Some(self.expr()?) } else { None };
                StmtKind::Assert(test, msg)
            }
            Some("import") => {
                self.advance();
                let mut names = vec![self.dotted_alias()?];
                while self.eat_op(",") {
                    names.push(self.dotted_alias()?);
                }
                StmtKind::Import(names)
            }
            Some("from") => self.import_from()?,
            _ => self.expr_stmt()?,
        };
        Ok(Stmt { kind, pos })
    }

    fn at_end_of_simple(&self) -> bool {
        matches!(self.kind(), TokKind::Newline | TokKind::End | TokKind::Dedent) || self.at_op(";")
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut s = self.ident()?;
        while self.eat_op(".") {
            s.push('.');
            s.push_str(&self.ident()?);
        }
        Ok(s)
    }

    fn dotted_alias(&mut self) -> PResult<Alias> {
        let name = self.dotted_name()?;
        let asname = if self.eat_kw("as") { Some(self.ident()?) } else { None };
        Ok(Alias { name, asname })
    }

    fn import_from(&mut self) -> PResult<StmtKind> {
        self.expect_kw("from")?;
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.at_kw("import") { String::new() } else { self.dotted_name()? };
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.eat_op("*") {
            names.push(Alias { name: "*".into(), asname: None });
        } else {
            let paren = self.eat_op("(");
            loop {
                let name = self.ident()?;
                let asname = if self.eat_kw("as") { Some(self.ident()?) } else { None };
                names.push(Alias { name, asname });
                if !self.eat_op(",") {
                    break;
                }
                if paren && self.at_op(")") {
                    break;
                }
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        Ok(StmtKind::ImportFrom { module, level, names })
    }

    fn expr_stmt(&mut self) -> PResult<StmtKind> {
        if self.at_kw("yield") {
            return Ok(StmtKind::Expr(self.yield_expr()?));
        }
        let first = self.star_exprs()?;
        if self.at_op(":") {
            self.advance();
            let annotation = self.expr()?;
            let value = if self.eat_op("=") { Some(self.assign_rhs()?) } else { None };
            return Ok(StmtKind::AnnAssign { target: first, annotation, value });
        }
        if let TokKind::Op(op) = self.kind() {
            if let Some(bin) = aug_op(op) {
                self.advance();
                let value = self.assign_rhs()?;
                return Ok(StmtKind::AugAssign { target: first, op: bin, value });
            }
        }
        if self.at_op("=") {
            let mut targets = vec![first];
            let mut value;
            loop {
                self.expect_op("=")?;
                value = self.assign_rhs()?;
                if self.at_op("=") {
                    targets.push(value);
                } else {
                    break;
                }
            }
            return Ok(StmtKind::Assign { targets, value });
        }
        Ok(StmtKind::Expr(first))
    }

    fn assign_rhs(&mut self) -> PResult<Expr> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.star_exprs()
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if matches!(self.kind(), TokKind::Newline) {
            self.advance();
            if !matches!(self.kind(), TokKind::Indent) {
                return self.err("expected an indented block");
            }
            self.advance();
            let mut body = Vec::new();
            loop {
                match self.kind() {
                    TokKind::Dedent => {
                        self.advance();
                        break;
                    }
                    TokKind::End => break,
                    TokKind::Newline => {
                        self.advance();
                    }
                    TokKind::Indent => {
                        let pos = self.pos();
                        self.errors.push(SyntaxError { pos, message: "unexpected indent".into() });
                        self.skip_block();
                    }
                    _ => self.statement_into(&mut body),
                }
            }
            Ok(body)
        } else {
            self.simple_stmt_line()
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        self.advance(); // if / elif
        let test = self.named_expr()?;
        let body = self.block()?;
        let orelse = if self.at_kw("elif") {
            vec![self.if_stmt()?]
        } else if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt { kind: StmtKind::If { test, body, orelse }, pos })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        self.expect_kw("while")?;
        let test = self.named_expr()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        Ok(Stmt { kind: StmtKind::While { test, body, orelse }, pos })
    }

    fn for_stmt(&mut self, pos: Pos) -> PResult<Stmt> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.star_exprs()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        Ok(Stmt { kind: StmtKind::For { target, iter, body, orelse }, pos })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        self.expect_kw("try")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.at_kw("except") {
            self.advance();
            self.eat_op("*");
            let mut name = None;
            if !self.at_op(":") {
                self.expr()?;
                if self.eat_op(",") {
                    self.expr()?;
                }
                if self.eat_kw("as") {
                    name = Some(self.ident()?);
                }
            }
            let hbody = self.block()?;
            handlers.push(Handler { name, body: hbody });
        }
        let orelse = if self.eat_kw("else") { self.block()? } else { Vec::new() };
        let finalbody = if self.eat_kw("finally") { self.block()? } else { Vec::new() };
        if handlers.is_empty() && finalbody.is_empty() {
            return self.err("try statement without except or finally");
        }
        Ok(Stmt { kind: StmtKind::Try { body, handlers, orelse, finalbody }, pos })
    }

    fn with_stmt(&mut self, pos: Pos) -> PResult<Stmt> {
        self.expect_kw("with")?;
        let mut items = Vec::new();
        let paren = self.at_op("(") && self.paren_with_items();
        if paren {
            self.advance();
        }
        loop {
            if paren && self.at_op(")") {
                break;
            }
            let context = self.expr()?;
            let target = if self.eat_kw("as") { Some(self.target()?) } else { None };
            items.push(WithItem { context, target });
            if !self.eat_op(",") {
                break;
            }
        }
        if paren {
            self.expect_op(")")?;
        }
        let body = self.block()?;
        Ok(Stmt { kind: StmtKind::With { items, body }, pos })
    }

    /// `with (a as b, c as d):` vs `with (a, b) as t:`; scans ahead for a
    /// top-level `as` inside the parentheses.
    fn paren_with_items(&self) -> bool {
        let mut depth = 0i32;
        let mut j = self.i;
        while j < self.toks.len() {
            match &self.toks[j].kind {
                TokKind::Op("(") | TokKind::Op("[") | TokKind::Op("{") => depth += 1,
                TokKind::Op(")") | TokKind::Op("]") | TokKind::Op("}") => {
                    depth -= 1;
                    if depth == 0 {
                        return matches!(self.toks.get(j + 1).map(|t| &t.kind), Some(TokKind::Op(":")));
                    }
                }
                TokKind::Name(n) if n == "as" && depth == 1 => return true,
                TokKind::Newline | TokKind::End => return false,
                _ => {}
            }
            j += 1;
        }
        false
    }

    fn decorated(&mut self) -> PResult<Stmt> {
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expr()?);
            if !matches!(self.kind(), TokKind::Newline) {
                return self.err("expected newline after decorator");
            }
            self.advance();
        }
        let pos = self.pos();
        if self.eat_kw("async") && !self.at_kw("def") {
            return self.err("expected def after async");
        }
        if self.at_kw("def") {
            self.funcdef(decorators, pos)
        } else if self.at_kw("class") {
            self.classdef(decorators, pos)
        } else {
            self.err("expected def or class after decorator")
        }
    }

    fn funcdef(&mut self, decorators: Vec<Expr>, pos: Pos) -> PResult<Stmt> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        if self.at_op("[") {
            self.skip_brackets()?;
        }
        self.expect_op("(")?;
        let params = self.params(")")?;
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.expr()?;
        }
        let body = self.block()?;
        Ok(Stmt { kind: StmtKind::FunctionDef { name, params, body, decorators }, pos })
    }

    fn params(&mut self, close: &str) -> PResult<Vec<Param>> {
        let mut params = Vec::new();
        while !self.at_op(close) {
            if self.eat_op("/") || self.eat_op("*") && (self.at_op(",") || self.at_op(close)) {
                if !self.eat_op(",") {
                    break;
                }
                continue;
            }
            self.eat_op("*");
            self.eat_op("**");
            let name = self.ident()?;
            if close == ")" && self.eat_op(":") {
                self.expr()?;
            }
            let default = if self.eat_op("=") { Some(self.expr()?) } else { None };
            params.push(Param { name, default });
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn skip_brackets(&mut self) -> PResult<()> {
        let mut depth = 0;
        loop {
            match self.kind() {
                TokKind::Op("[") => depth += 1,
                TokKind::Op("]") => {
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        return Ok(());
                    }
                }
                TokKind::End | TokKind::Newline => return self.err("unbalanced brackets"),
                _ => {}
            }
            self.advance();
        }
    }

    fn classdef(&mut self, decorators: Vec<Expr>, pos: Pos) -> PResult<Stmt> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        if self.at_op("[") {
            self.skip_brackets()?;
        }
        let mut bases = Vec::new();
        let mut keywords = Vec::new();
        if self.eat_op("(") {
            for arg in self.call_args()? {
                match arg {
                    Arg::Positional(e) | Arg::Starred(e) | Arg::DoubleStar(e) => bases.push(e),
                    Arg::Keyword(k, v) => keywords.push((k, v)),
                }
            }
        }
        let body = self.block()?;
        Ok(Stmt { kind: StmtKind::ClassDef { name, bases, keywords, body, decorators }, pos })
    }

    // ---- expressions ----

    /// Comma-separated expressions; more than one (or a trailing comma)
    /// builds a tuple.
    fn star_exprs(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let first = self.star_or_named()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.expr_terminates() {
                break;
            }
            elts.push(self.star_or_named()?);
        }
        Ok(Expr::new(ExprKind::Tuple(elts), pos))
    }

    fn expr_terminates(&self) -> bool {
        matches!(self.kind(), TokKind::Newline | TokKind::End | TokKind::Dedent)
            || ["=", ")", "]", "}", ":", ";"].iter().any(|o| self.at_op(o))
            || matches!(self.kind(), TokKind::Op(o) if aug_op(o).is_some())
            || self.at_kw("in")
    }

    fn star_or_named(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let pos = self.pos();
            self.advance();
            let e = self.bitor()?;
            return Ok(Expr::new(ExprKind::Starred(Box::new(e)), pos));
        }
        self.named_expr()
    }

    fn named_expr(&mut self) -> PResult<Expr> {
        if let TokKind::Name(n) = self.kind().clone() {
            if matches!(self.kind_at(1), TokKind::Op(":=")) && !KEYWORDS.contains(&n.as_str()) {
                let pos = self.pos();
                self.advance();
                self.advance();
                let value = self.expr()?;
                return Ok(Expr::new(ExprKind::NamedExpr { target: n, value: Box::new(value) }, pos));
            }
        }
        self.expr()
    }

    /// Assignment-target list for `for` loops and comprehensions (stops
    /// before `in`).
    fn target_list(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let first = self.target()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_kw("in") || self.at_op("=") {
                break;
            }
            elts.push(self.target()?);
        }
        Ok(Expr::new(ExprKind::Tuple(elts), pos))
    }

    fn target(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let pos = self.pos();
            self.advance();
            let e = self.bitor()?;
            return Ok(Expr::new(ExprKind::Starred(Box::new(e)), pos));
        }
        self.bitor()
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            let pos = self.pos();
            self.advance();
            self.params(":")?;
            self.expect_op(":")?;
            let body = self.expr()?;
            return Ok(Expr::new(ExprKind::Lambda { body: Box::new(body) }, pos));
        }
        let pos = self.pos();
        let body = self.or_test()?;
        if self.at_kw("if") {
            // conditional expression; guard against comprehension `if`
            let save = self.i;
            self.advance();
            let test = match self.or_test() {
                Ok(t) => t,
                Err(_) => {
                    self.i = save;
                    return Ok(body);
                }
            };
            if !self.eat_kw("else") {
                self.i = save;
                return Ok(body);
            }
            let orelse = self.expr()?;
            return Ok(Expr::new(
                ExprKind::IfExp { test: Box::new(test), body: Box::new(body), orelse: Box::new(orelse) },
                pos,
            ));
        }
        Ok(body)
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let first = self.and_test()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        Ok(Expr::new(ExprKind::BoolOp { and: false, values }, pos))
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let first = self.not_test()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        Ok(Expr::new(ExprKind::BoolOp { and: true, values }, pos))
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let pos = self.pos();
            self.advance();
            let operand = self.not_test()?;
            return Ok(Expr::new(ExprKind::UnaryOp { op: UnaryOp::Not, operand: Box::new(operand) }, pos));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let left = self.bitor()?;
        let mut rest = Vec::new();
        loop {
            let is_cmp = match self.kind() {
                TokKind::Op(o) => matches!(*o, "<" | ">" | "==" | ">=" | "<=" | "!="),
                TokKind::Name(n) => n == "in" || n == "is" || (n == "not" && matches!(self.kind_at(1), TokKind::Name(m) if m == "in")),
                _ => false,
            };
            if !is_cmp {
                break;
            }
            if self.eat_kw("not") {
                self.expect_kw("in")?;
            } else if self.eat_kw("is") {
                self.eat_kw("not");
            } else {
                self.advance();
            }
            rest.push(self.bitor()?);
        }
        if rest.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::new(ExprKind::Compare { left: Box::new(left), rest }, pos))
        }
    }

    fn binary_level(&mut self, ops: &[(&str, BinOp)], next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        let pos = self.pos();
        let mut left = next(self)?;
        'outer: loop {
            for (tok, op) in ops {
                if self.at_op(tok) {
                    self.advance();
                    let right = next(self)?;
                    left = Expr::new(ExprKind::BinOp { left: Box::new(left), op: *op, right: Box::new(right) }, pos);
                    continue 'outer;
                }
            }
            break;
        }
        Ok(left)
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Self::arith)
    }

    fn arith(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("//", BinOp::FloorDiv), ("%", BinOp::Mod), ("@", BinOp::MatMul)],
            Self::factor,
        )
    }

    fn factor(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.kind() {
            TokKind::Op("-") => Some(UnaryOp::Neg),
            TokKind::Op("+") => Some(UnaryOp::Pos),
            TokKind::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.factor()?;
            return Ok(Expr::new(ExprKind::UnaryOp { op, operand: Box::new(operand) }, pos));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let base = if self.at_kw("await") {
            self.advance();
            let e = self.primary()?;
            Expr::new(ExprKind::Await(Box::new(e)), pos)
        } else {
            self.primary()?
        };
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::new(ExprKind::BinOp { left: Box::new(base), op: BinOp::Pow, right: Box::new(exp) }, pos));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            let pos = self.pos();
            if self.eat_op(".") {
                let attr = match self.kind().clone() {
                    TokKind::Name(n) => {
                        self.advance();
                        n
                    }
                    other => return self.err(format!("expected attribute name, found {}", describe(&other))),
                };
                e = Expr::new(ExprKind::Attribute { value: Box::new(e), attr }, pos);
            } else if self.eat_op("(") {
                let args = self.call_args()?;
                let p = e.pos;
                e = Expr::new(ExprKind::Call { func: Box::new(e), args }, p);
            } else if self.eat_op("[") {
                let index = self.subscript_list()?;
                self.expect_op("]")?;
                let p = e.pos;
                e = Expr::new(ExprKind::Subscript { value: Box::new(e), index: Box::new(index) }, p);
            } else {
                break;
            }
        }
        Ok(e)
    }

    /// Parses arguments up to and including the closing parenthesis.
    fn call_args(&mut self) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        while !self.at_op(")") {
            if self.eat_op("**") {
                args.push(Arg::DoubleStar(self.expr()?));
            } else if self.eat_op("*") {
                args.push(Arg::Starred(self.expr()?));
            } else if matches!(self.kind(), TokKind::Name(_)) && matches!(self.kind_at(1), TokKind::Op("=")) {
                let name = self.ident()?;
                self.advance();
                args.push(Arg::Keyword(name, self.expr()?));
            } else {
                let e = self.named_expr()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let pos = e.pos;
                    let iters = self.comp_for()?;
                    args.push(Arg::Positional(Expr::new(
                        ExprKind::Comprehension { element: Box::new(e), iters },
                        pos,
                    )));
                } else {
                    args.push(Arg::Positional(e));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn subscript_list(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let first = self.subscript()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            elts.push(self.subscript()?);
        }
        Ok(Expr::new(ExprKind::Tuple(elts), pos))
    }

    fn subscript(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let lower = if self.at_op(":") { None } else { Some(Box::new(self.star_or_named()?)) };
        if !self.at_op(":") {
            return Ok(*lower.expect("lower bound parsed"));
        }
        self.advance();
        let upper = if self.at_op(":") || self.at_op("]") || self.at_op(",") {
            None
        } else {
            Some(Box::new(self.expr()?))
        };
        let step = if self.eat_op(":") && !self.at_op("]") && !self.at_op(",") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        Ok(Expr::new(ExprKind::Slice { lower, upper, step }, pos))
    }

    fn comp_for(&mut self) -> PResult<Vec<Expr>> {
        let mut iters = Vec::new();
        loop {
            if self.eat_kw("async") {
                self.expect_kw("for")?;
            } else if !self.eat_kw("for") {
                break;
            }
            self.target_list()?;
            self.expect_kw("in")?;
            iters.push(self.or_test()?);
            while self.eat_kw("if") {
                iters.push(self.or_test()?);
            }
        }
        Ok(iters)
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            let e = self.expr()?;
            return Ok(Expr::new(ExprKind::Yield(Some(Box::new(e))), pos));
        }
        if self.expr_terminates() {
            return Ok(Expr::new(ExprKind::Yield(None), pos));
        }
        let e = self.star_exprs()?;
        Ok(Expr::new(ExprKind::Yield(Some(Box::new(e))), pos))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.kind().clone() {
            TokKind::Name(n) => {
                let kind = match n.as_str() {
                    "True" => ExprKind::True,
                    "False" => ExprKind::False,
                    "None" => ExprKind::None,
                    _ if KEYWORDS.contains(&n.as_str()) => {
                        return self.err(format!("unexpected keyword '{n}'"));
                    }
                    _ => ExprKind::Name(n),
                };
                self.advance();
                Ok(Expr::new(kind, pos))
            }
            TokKind::Number(n) => {
                self.advance();
                Ok(Expr::new(ExprKind::Num(n), pos))
            }
            TokKind::Str(_) => self.strings(),
            TokKind::Op("...") => {
                self.advance();
                Ok(Expr::new(ExprKind::Ellipsis, pos))
            }
            TokKind::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(Expr::new(ExprKind::Tuple(Vec::new()), pos));
                }
                if self.at_kw("yield") {
                    let e = self.yield_expr()?;
                    self.expect_op(")")?;
                    return Ok(e);
                }
                let first = self.star_or_named()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let iters = self.comp_for()?;
                    self.expect_op(")")?;
                    return Ok(Expr::new(ExprKind::Comprehension { element: Box::new(first), iters }, pos));
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    elts.push(self.star_or_named()?);
                }
                self.expect_op(")")?;
                Ok(Expr::new(ExprKind::Tuple(elts), pos))
            }
            TokKind::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    return Ok(Expr::new(ExprKind::List(Vec::new()), pos));
                }
                let first = self.star_or_named()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let iters = self.comp_for()?;
                    self.expect_op("]")?;
                    return Ok(Expr::new(ExprKind::Comprehension { element: Box::new(first), iters }, pos));
                }
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    elts.push(self.star_or_named()?);
                }
                self.expect_op("]")?;
                Ok(Expr::new(ExprKind::List(elts), pos))
            }
            TokKind::Op("{") => self.brace_atom(pos),
            other => self.err(format!("unexpected {}", describe(&other))),
        }
    }

    fn brace_atom(&mut self, pos: Pos) -> PResult<Expr> {
        self.expect_op("{")?;
        if self.eat_op("}") {
            return Ok(Expr::new(ExprKind::Dict(Vec::new()), pos));
        }
        // dict
        if self.at_op("**") || self.dict_follows()? {
            let mut items = Vec::new();
            loop {
                if self.at_op("}") {
                    break;
                }
                if self.eat_op("**") {
                    let v = self.bitor()?;
                    items.push((None, v));
                } else {
                    let k = self.expr()?;
                    self.expect_op(":")?;
                    let v = self.expr()?;
                    if self.at_kw("for") || self.at_kw("async") {
                        let mut iters = self.comp_for()?;
                        iters.insert(0, k);
                        self.expect_op("}")?;
                        return Ok(Expr::new(ExprKind::Comprehension { element: Box::new(v), iters }, pos));
                    }
                    items.push((Some(k), v));
                }
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op("}")?;
            return Ok(Expr::new(ExprKind::Dict(items), pos));
        }
        let first = self.star_or_named()?;
        if self.at_kw("for") || self.at_kw("async") {
            let iters = self.comp_for()?;
            self.expect_op("}")?;
            return Ok(Expr::new(ExprKind::Comprehension { element: Box::new(first), iters }, pos));
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            elts.push(self.star_or_named()?);
        }
        self.expect_op("}")?;
        Ok(Expr::new(ExprKind::Set(elts), pos))
    }

    /// Looks ahead past the first expression for a `:` that makes the
    /// brace a dict display.
    fn dict_follows(&mut self) -> PResult<bool> {
        let save = self.i;
        let saved_errors = self.errors.len();
        let res = self.expr();
        let is_dict = res.is_ok() && self.at_op(":");
        self.i = save;
        self.errors.truncate(saved_errors);
        Ok(is_dict)
    }

    fn strings(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let mut parts: Vec<StrPart> = Vec::new();
        let mut bytes: Option<String> = None;
        while let TokKind::Str(s) = self.kind().clone() {
            self.advance();
            if s.bytes {
                bytes.get_or_insert_with(String::new).push_str(&s.value);
                continue;
            }
            if s.fstring {
                parts.extend(split_fstring(&s)?);
            } else {
                parts.push(StrPart::Lit { text: s.value, pos: Pos::new(s.body_line, s.body_col) });
            }
        }
        if let Some(b) = bytes {
            if parts.is_empty() {
                return Ok(Expr::new(ExprKind::Bytes(b), pos));
            }
        }
        if parts.is_empty() {
            parts.push(StrPart::Lit { text: String::new(), pos });
        }
        Ok(Expr::new(ExprKind::Str(parts), pos))
    }
}

fn aug_op(op: &str) -> Option<BinOp> {
    Some(match op {
        "+=" => BinOp::Add,
        "-=" => BinOp::Sub,
        "*=" => BinOp::Mul,
        "/=" => BinOp::Div,
        "//=" => BinOp::FloorDiv,
        "%=" => BinOp::Mod,
        "**=" => BinOp::Pow,
        "@=" => BinOp::MatMul,
        "|=" => BinOp::BitOr,
        "&=" => BinOp::BitAnd,
        "^=" => BinOp::BitXor,
        "<<=" => BinOp::LShift,
        ">>=" => BinOp::RShift,
        _ => return None,
    })
}

fn describe(k: &TokKind) -> String {
    match k {
        TokKind::Name(n) => format!("'{n}'"),
        TokKind::Number(n) => format!("number {n}"),
        TokKind::Str(_) => "string".into(),
        TokKind::Op(o) => format!("'{o}'"),
        TokKind::Newline => "newline".into(),
        TokKind::Indent => "indent".into(),
        TokKind::Dedent => "dedent".into(),
        TokKind::Error(e) => e.clone(),
        TokKind::End => "end of file".into(),
    }
}

/// Splits an f-string body into literal and replacement-field parts.
fn split_fstring(tok: &StrTok) -> PResult<Vec<StrPart>> {
    split_fstring_text(&tok.value, Pos::new(tok.body_line, tok.body_col))
}

fn split_fstring_text(text: &str, start: Pos) -> PResult<Vec<StrPart>> {
    let chars: Vec<char> = text.chars().collect();
    let mut parts = Vec::new();
    let mut lit = String::new();
    let (mut line, mut col) = (start.line, start.col);
    let mut lit_pos = start;
    let mut i = 0;
    let advance_pos = |c: char, line: &mut u32, col: &mut u32| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() && (chars[i + 1] == '{' || chars[i + 1] == '}') {
            // backslash kept by the lexer in front of braces
            lit.push('\\');
            advance_pos(c, &mut line, &mut col);
            i += 1;
            continue;
        }
        if c == '{' && chars.get(i + 1) == Some(&'{') {
            lit.push('{');
            i += 2;
            col += 2;
            continue;
        }
        if c == '}' && chars.get(i + 1) == Some(&'}') {
            lit.push('}');
            i += 2;
            col += 2;
            continue;
        }
        if c == '{' {
            if !lit.is_empty() {
                parts.push(StrPart::Lit { text: std::mem::take(&mut lit), pos: lit_pos });
            }
            let field_pos = Pos::new(line, col + 1);
            // find the end of the replacement field
            let mut depth = 0i32;
            let mut j = i + 1;
            let mut quote: Option<char> = None;
            let mut expr_end = None;
            let mut conv_or_spec_start = None;
            while j < chars.len() {
                let d = chars[j];
                if let Some(q) = quote {
                    if d == q {
                        quote = None;
                    }
                } else if d == '\'' || d == '"' {
                    quote = Some(d);
                } else if d == '(' || d == '[' || d == '{' {
                    depth += 1;
                } else if (d == ')' || d == ']' || d == '}') && depth > 0 {
                    depth -= 1;
                } else if depth == 0 && d == '}' {
                    break;
                } else if depth == 0
                    && expr_end.is_none()
                    && ((d == '!' && chars.get(j + 1) != Some(&'=')) || d == ':')
                {
                    expr_end = Some(j);
                    conv_or_spec_start = Some(j);
                    if d == ':' {
                        // format spec may contain nested fields; scan to the matching brace
                        let mut k = j + 1;
                        let mut sd = 0;
                        while k < chars.len() {
                            if chars[k] == '{' {
                                sd += 1;
                            } else if chars[k] == '}' {
                                if sd == 0 {
                                    break;
                                }
                                sd -= 1;
                            }
                            k += 1;
                        }
                        j = k;
                        break;
                    }
                }
                j += 1;
            }
            if j >= chars.len() {
                return Err(SyntaxError { pos: field_pos, message: "unterminated f-string field".into() });
            }
            let end = expr_end.unwrap_or(j);
            let mut expr_text: String = chars[i + 1..end].iter().collect();
            let self_doc = expr_text.trim_end().ends_with('=') && !expr_text.trim_end().ends_with("==");
            if self_doc {
                let t = expr_text.trim_end();
                expr_text = t[..t.len() - 1].to_string();
            }
            let expr = parse_fragment_expr(&expr_text, field_pos)?;
            let mut conversion = None;
            let mut spec = None;
            if let Some(s) = conv_or_spec_start {
                let tail: String = chars[s..j].iter().collect();
                let mut rest = tail.as_str();
                if let Some(r) = rest.strip_prefix('!') {
                    conversion = r.chars().next();
                    rest = &r[conversion.map(|c| c.len_utf8()).unwrap_or(0)..];
                }
                if let Some(r) = rest.strip_prefix(':') {
                    spec = Some(split_fstring_text(r, field_pos)?);
                }
            }
            if self_doc {
                parts.push(StrPart::Lit { text: format!("{expr_text}="), pos: field_pos });
            }
            parts.push(StrPart::Interp { expr: Box::new(expr), conversion, spec });
            for &ch in &chars[i..=j] {
                advance_pos(ch, &mut line, &mut col);
            }
            i = j + 1;
            lit_pos = Pos::new(line, col);
            continue;
        }
        if c == '}' {
            return Err(SyntaxError { pos: Pos::new(line, col), message: "single '}' in f-string".into() });
        }
        if lit.is_empty() {
            lit_pos = Pos::new(line, col);
        }
        lit.push(c);
        advance_pos(c, &mut line, &mut col);
        i += 1;
    }
    if !lit.is_empty() {
        parts.push(StrPart::Lit { text: lit, pos: lit_pos });
    }
    Ok(parts)
}

fn parse_fragment_expr(text: &str, pos: Pos) -> PResult<Expr> {
    let wrapped = format!("({text})");
    let toks = tokenize_at(&wrapped, pos.line, pos.col.saturating_sub(1).max(1));
    let mut p = Parser { toks, i: 0, errors: Vec::new() };
    let e = p.star_exprs()?;
    if !matches!(p.kind(), TokKind::Newline | TokKind::End) {
        return p.err("trailing tokens in f-string field");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only_expr(src: &str) -> Expr {
        let m = parse_module(src);
        assert!(m.errors.is_empty(), "{:?}", m.errors);
        match &m.body[0].kind {
            StmtKind::Expr(e) => e.clone(),
            StmtKind::Assign { value, .. } => value.clone(),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_source_is_empty_tree() {
        let m = parse_module("");
        assert!(m.body.is_empty());
        assert!(m.errors.is_empty());
    }

    #[test]
    fn single_assignment() {
        let m = parse_module("x = 1");
        assert_eq!(m.body.len(), 1);
        assert!(matches!(&m.body[0].kind, StmtKind::Assign { targets, .. } if targets.len() == 1));
    }

    #[test]
    fn recovers_after_mid_file_error() {
        let src = "a = 1\nb = 2 +\nc = 3\ndef f(x y):\n    return 1\nd = 4\n";
        let m = parse_module(src);
        assert!(!m.errors.is_empty());
        let names: Vec<String> = m
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Assign { targets, .. } => targets[0].dotted_name(),
                _ => None,
            })
            .collect();
        assert!(names.contains(&"a".to_string()));
        assert!(names.contains(&"d".to_string()));
    }

    #[test]
    fn fstring_fields() {
        let e = only_expr("u = f\"mysql://{user}:{pw!r}@{h:>10}/db\"");
        let ExprKind::Str(parts) = e.kind else { panic!() };
        let interps = parts.iter().filter(|p| matches!(p, StrPart::Interp { .. })).count();
        assert_eq!(interps, 3);
        assert!(matches!(&parts[0], StrPart::Lit { text, .. } if text == "mysql://"));
    }

    #[test]
    fn implicit_concatenation() {
        let e = only_expr("q = ('SELECT a '\n     'FROM t')");
        assert_eq!(e.plain_str().as_deref(), Some("SELECT a FROM t"));
    }

    #[test]
    fn calls_with_all_argument_kinds() {
        let e = only_expr("f(1, *a, k=2, **kw)");
        let ExprKind::Call { args, .. } = e.kind else { panic!() };
        assert_eq!(args.len(), 4);
        assert!(matches!(args[2], Arg::Keyword(ref k, _) if k == "k"));
    }

    #[test]
    fn compound_statements() {
        let src = r#"
import pymysql as m
from os import path, environ as env
@dec
class A(Base):
    __tablename__ = "users"
    def go(self, x=1, *args, **kw) -> int:
        with open("a.sql") as f, lock:
            for i, j in items:
                if i: pass
                elif j: continue
                else: break
        try:
            x += 1
        except (ValueError, KeyError) as e:
            raise
        finally:
            y = [v for v in x if v]
        return {k: v for k, v in d.items()}
async def h():
    await q
    while True:
        yield 1
"#;
        let m = parse_module(src);
        assert!(m.errors.is_empty(), "{:?}", m.errors);
        assert_eq!(m.body.len(), 4);
    }

    #[test]
    fn conditional_and_lambda() {
        let e = only_expr("v = a if c else (lambda x: x)");
        assert!(matches!(e.kind, ExprKind::IfExp { .. }));
    }

    #[test]
    fn dict_and_set_displays() {
        assert!(matches!(only_expr("{'a': 1, **b}").kind, ExprKind::Dict(ref v) if v.len() == 2));
        assert!(matches!(only_expr("{1, 2}").kind, ExprKind::Set(_)));
        assert!(matches!(only_expr("{}").kind, ExprKind::Dict(_)));
    }

    #[test]
    fn positions_point_at_string_bodies() {
        let e = only_expr("x = 'abc'");
        let ExprKind::Str(parts) = e.kind else { panic!() };
        assert!(matches!(parts[0], StrPart::Lit { pos, .. } if pos == Pos::new(1, 6)));
    }

    #[test]
    fn slices_and_walrus() {
        let m = parse_module("a = b[1:2, ::3]\nif (n := len(a)) > 1: pass\n");
        assert!(m.errors.is_empty(), "{:?}", m.errors);
    }
}
