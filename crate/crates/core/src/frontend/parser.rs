//! Recursive-descent parser.
//!
//! ```text
//! file    := module+
//! module  := IDENT "(" "{" params? "}" "," "{" params? "}" ")" method+ "end" ["module"] ";"
//! params  := IDENT ":" dtype ("," IDENT ":" dtype)*
//! method  := "method" stmt* "end" "method" ";"
//! stmt    := IDENT ":" dtype "=" rhs ";"
//!          | ("when" | "test" | "verify") "(" expr ")" ";"
//!          | ("call" | "dcall") "(" IDENT "," "{" exprs? "}" "," "{" idents? "}" ")" ";"
//!          | "find" "(" IDENT "," "{" exprs? "}" "," IDENT ")" ";"
//! rhs     := "for" "(" expr "," expr "," expr ")" | "select" "(" expr ")" | expr
//! expr    := sum (cmpop sum)?
//! sum     := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?
//! atom    := NUM | "true" | "false" | IDENT | IDENT "(" exprs? ")" | "(" expr ")" | "[" exprs? "]"
//! ```

use thiserror::Error;

use super::ast::*;
use super::lexer::{Token, TokenKind};
use crate::diag::{Pos, Span};
use crate::value::Dtype;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub pos: Pos,
    pub expected: String,
    pub found: String,
}

type PResult<T> = Result<T, ParseError>;

/// Words that cannot be used as module or variable names.
pub const RESERVED: &[&str] = &["method", "end", "true", "false", "when", "test", "verify", "call", "dcall", "find"];

pub struct Parser<'t> {
    tokens: &'t [Token],
    idx: usize,
}

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        Parser { tokens, idx: 0 }
    }

    pub fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.idx + n).map(|t| &t.kind)
    }

    fn here(&self) -> Pos {
        match self.tokens.get(self.idx) {
            Some(t) => t.span.start,
            None => self.tokens.last().map(|t| t.span.end).unwrap_or(Pos { offset: 0, line: 1, col: 1 }),
        }
    }

    fn prev_end(&self) -> Pos {
        match self.idx.checked_sub(1).and_then(|i| self.tokens.get(i)) {
            Some(t) => t.span.end,
            None => self.here(),
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let found = match self.peek() {
            Some(kind) => kind.to_string(),
            None => "end of input".to_string(),
        };
        ParseError { pos: self.here(), expected: expected.into(), found }
    }

    fn advance(&mut self) -> &'t Token {
        let tok = &self.tokens[self.idx];
        self.idx += 1;
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Span> {
        if self.peek() == Some(&kind) {
            Ok(self.advance().span)
        } else {
            Err(self.error(kind.to_string()))
        }
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(w)) if w == word)
    }

    fn expect_word(&mut self, word: &str) -> PResult<Span> {
        if self.is_word(word) {
            Ok(self.advance().span)
        } else {
            Err(self.error(format!("`{word}`")))
        }
    }

    /// Any identifier, including reserved words (used for callee names like `for`).
    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let span = self.advance().span;
                Ok(Ident::new(name.clone(), span))
            }
            _ => Err(self.error(what)),
        }
    }

    /// An identifier usable as a variable or module name.
    fn name(&mut self, what: &str) -> PResult<Ident> {
        if let Some(TokenKind::Ident(w)) = self.peek() {
            if RESERVED.contains(&w.as_str()) {
                return Err(self.error(what));
            }
        }
        self.ident(what)
    }

    fn dtype(&mut self) -> PResult<Dtype> {
        if let Some(TokenKind::Ident(w)) = self.peek() {
            if let Some(dt) = Dtype::from_keyword(w) {
                self.idx += 1;
                return Ok(dt);
            }
        }
        Err(self.error("a type (`real`, `int`, `bool` or `list`)"))
    }

    pub fn file(&mut self) -> PResult<Vec<ModuleDecl>> {
        let mut modules = vec![self.module()?];
        while !self.at_end() {
            modules.push(self.module()?);
        }
        Ok(modules)
    }

    pub fn module(&mut self) -> PResult<ModuleDecl> {
        let start = self.here();
        let name = self.name("a module name")?;
        self.expect(TokenKind::LParen)?;
        let inputs = self.param_block()?;
        self.expect(TokenKind::Comma)?;
        let outputs = self.param_block()?;
        self.expect(TokenKind::RParen)?;

        let mut methods = Vec::new();
        while self.is_word("method") {
            methods.push(self.method()?);
        }
        if methods.is_empty() {
            return Err(self.error("`method`"));
        }
        self.expect_word("end")?;
        if self.is_word("module") {
            self.idx += 1;
        }
        self.expect(TokenKind::Semi)?;
        Ok(ModuleDecl { name, inputs, outputs, methods, span: Span::new(start, self.prev_end()) })
    }

    fn param_block(&mut self) -> PResult<Vec<ParamDecl>> {
        self.expect(TokenKind::LBrace)?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RBrace) {
            loop {
                let name = self.name("a parameter name")?;
                self.expect(TokenKind::Colon)?;
                let dtype = self.dtype()?;
                params.push(ParamDecl { name, dtype });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RBrace)?;
        }
        Ok(params)
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let start = self.expect_word("method")?.start;
        let mut statements = Vec::new();
        while !self.is_word("end") {
            if self.at_end() {
                return Err(self.error("`end method;`"));
            }
            statements.push(self.stmt()?);
        }
        self.expect_word("end")?;
        self.expect_word("method")?;
        self.expect(TokenKind::Semi)?;
        Ok(MethodDecl { statements, span: Span::new(start, self.prev_end()) })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.here();
        let kind = match (self.peek(), self.peek_at(1)) {
            (Some(TokenKind::Ident(_)), Some(TokenKind::Colon)) => self.bind()?,
            (Some(TokenKind::Ident(w)), Some(TokenKind::LParen)) => match w.as_str() {
                "when" | "test" | "verify" => {
                    let word = w.clone();
                    self.idx += 2;
                    let cond = self.expr()?;
                    self.expect(TokenKind::RParen)?;
                    match word.as_str() {
                        "when" => StmtKind::When(cond),
                        "test" => StmtKind::Test(cond),
                        _ => StmtKind::Verify(cond),
                    }
                }
                "call" | "dcall" => {
                    let det = w == "dcall";
                    self.idx += 2;
                    let site = self.call_site()?;
                    if det {
                        StmtKind::Dcall(site)
                    } else {
                        StmtKind::Call(site)
                    }
                }
                "find" => {
                    self.idx += 2;
                    let callee = self.ident("a module name")?;
                    self.expect(TokenKind::Comma)?;
                    let args = self.vector_exprs()?;
                    self.expect(TokenKind::Comma)?;
                    let target = self.name("an output list variable")?;
                    self.expect(TokenKind::RParen)?;
                    StmtKind::Find { callee, args, target }
                }
                _ => return Err(self.error("a statement")),
            },
            _ => return Err(self.error("a statement")),
        };
        self.expect(TokenKind::Semi)?;
        Ok(Stmt { kind, span: Span::new(start, self.prev_end()) })
    }

    fn bind(&mut self) -> PResult<StmtKind> {
        let target = self.name("a variable name")?;
        self.expect(TokenKind::Colon)?;
        let dtype = self.dtype()?;
        self.expect(TokenKind::Eq)?;
        let rhs = match (self.peek(), self.peek_at(1)) {
            (Some(TokenKind::Ident(w)), Some(TokenKind::LParen)) if w == "for" => {
                self.idx += 2;
                let begin = self.expr()?;
                self.expect(TokenKind::Comma)?;
                let end = self.expr()?;
                self.expect(TokenKind::Comma)?;
                let step = self.expr()?;
                self.expect(TokenKind::RParen)?;
                BindRhs::For { begin, end, step }
            }
            (Some(TokenKind::Ident(w)), Some(TokenKind::LParen)) if w == "select" => {
                self.idx += 2;
                let list = self.expr()?;
                self.expect(TokenKind::RParen)?;
                BindRhs::Select(list)
            }
            _ => BindRhs::Expr(self.expr()?),
        };
        Ok(StmtKind::Bind { target, dtype, rhs })
    }

    fn call_site(&mut self) -> PResult<CallSite> {
        let callee = self.ident("a module name")?;
        self.expect(TokenKind::Comma)?;
        let args = self.vector_exprs()?;
        self.expect(TokenKind::Comma)?;
        self.expect(TokenKind::LBrace)?;
        let mut outs = Vec::new();
        if !self.eat(&TokenKind::RBrace) {
            loop {
                outs.push(self.name("an output variable")?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RBrace)?;
        }
        self.expect(TokenKind::RParen)?;
        Ok(CallSite { callee, args, outs })
    }

    fn vector_exprs(&mut self) -> PResult<Vec<Expr>> {
        self.expect(TokenKind::LBrace)?;
        let items = self.expr_list(&TokenKind::RBrace)?;
        Ok(items)
    }

    /// Comma separated expressions up to and including `close`.
    fn expr_list(&mut self, close: &TokenKind) -> PResult<Vec<Expr>> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(close.clone())?;
        Ok(items)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Ge) => CmpOp::Ge,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Ne) => CmpOp::Ne,
            _ => return Ok(lhs),
        };
        self.idx += 1;
        let rhs = self.sum()?;
        let span = lhs.span.to(rhs.span);
        Ok(Expr::new(ExprKind::Compare(op, Box::new(lhs), Box::new(rhs)), span))
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.idx += 1;
            let rhs = self.term()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.idx += 1;
            let rhs = self.unary()?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == Some(&TokenKind::Minus) {
            let start = self.advance().span;
            let inner = self.unary()?;
            let span = start.to(inner.span);
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exp = self.unary()?;
            let span = base.span.to(exp.span);
            return Ok(Expr::new(ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exp)), span));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.here();
        let kind = match self.peek() {
            Some(TokenKind::Int(v)) => {
                self.idx += 1;
                ExprKind::Int(*v)
            }
            Some(TokenKind::Real(v)) => {
                self.idx += 1;
                ExprKind::Real(*v)
            }
            Some(TokenKind::LParen) => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(Expr::new(inner.kind, Span::new(start, self.prev_end())));
            }
            Some(TokenKind::LBracket) => {
                self.idx += 1;
                ExprKind::List(self.expr_list(&TokenKind::RBracket)?)
            }
            Some(TokenKind::Ident(w)) if w == "true" || w == "false" => {
                self.idx += 1;
                ExprKind::Bool(w == "true")
            }
            Some(TokenKind::Ident(w)) if self.peek_at(1) == Some(&TokenKind::LParen) => {
                let Some(func) = Func::from_name(w) else {
                    return Err(self.error("a builtin function (sqrt, abs, min, max, div, mod, len, cons)"));
                };
                self.idx += 2;
                let args = self.expr_list(&TokenKind::RParen)?;
                if args.len() != func.arity() {
                    return Err(ParseError {
                        pos: start,
                        expected: format!("{} argument(s) to `{}`", func.arity(), func.name()),
                        found: format!("{}", args.len()),
                    });
                }
                ExprKind::Func(func, args)
            }
            Some(TokenKind::Ident(_)) => ExprKind::Var(self.name("an expression")?.name),
            _ => return Err(self.error("an expression")),
        };
        Ok(Expr::new(kind, Span::new(start, self.prev_end())))
    }
}

/// Parse exactly one module from a token stream.
pub fn parse_module(tokens: &[Token]) -> Result<ModuleDecl, ParseError> {
    let mut p = Parser::new(tokens);
    let module = p.module()?;
    if !p.at_end() {
        return Err(p.error("end of input"));
    }
    Ok(module)
}

/// Parse one or more modules.
pub fn parse_file(tokens: &[Token]) -> Result<Vec<ModuleDecl>, ParseError> {
    Parser::new(tokens).file()
}

/// Parse a standalone expression.
pub fn parse_expr(tokens: &[Token]) -> Result<Expr, ParseError> {
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.error("end of expression"));
    }
    Ok(e)
}
