//! Recursive-descent parser.
//!
//! Precedence is unary > binary > keyword; unary and binary chains
//! associate to the left; parentheses override.

use super::ast::{Directive, Expr, ExprKind, Literal, MethodDef};
use super::lexer::{Lexer, Token, TokenKind};
use crate::error::{Error, Pos, Result};

pub struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str) -> Self {
        Parser {
            lexer: Lexer::new(src),
            peeked: None,
        }
    }

    fn with_origin(src: &'a str, origin: Pos) -> Self {
        Parser {
            lexer: Lexer::with_origin(src, origin),
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<&Token> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn next(&mut self) -> Result<Token> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn peek_kind(&mut self) -> Result<TokenKind> {
        Ok(self.peek()?.kind.clone())
    }

    fn error<T>(&mut self, expected: &str) -> Result<T> {
        let t = self.peek()?.clone();
        Err(Error::Parse {
            pos: t.pos,
            expected: expected.to_string(),
            found: t.kind.describe(),
        })
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token> {
        if self.peek()?.kind == kind {
            self.next()
        } else {
            self.error(expected)
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> Result<bool> {
        if &self.peek()?.kind == kind {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    // ---- expressions ----

    pub fn parse_statement(&mut self) -> Result<Expr> {
        if self.peek()?.kind == TokenKind::Caret {
            let t = self.next()?;
            let e = self.parse_expression()?;
            return Ok(Expr::new(ExprKind::Return(Box::new(e)), t.pos));
        }
        self.parse_expression()
    }

    pub fn parse_expression(&mut self) -> Result<Expr> {
        let t = self.peek()?.clone();
        if let TokenKind::Identifier(name) = &t.kind {
            self.next()?;
            if self.peek()?.kind == TokenKind::Assign {
                self.next()?;
                let value = self.parse_expression()?;
                return Ok(Expr::new(ExprKind::Assign(name.clone(), Box::new(value)), t.pos));
            }
            // not an assignment: put the identifier back as the primary
            let primary = Expr::new(variable_kind(name), t.pos);
            return self.parse_keyword_tail(primary);
        }
        let primary = self.parse_primary()?;
        self.parse_keyword_tail(primary)
    }

    fn parse_keyword_tail(&mut self, primary: Expr) -> Result<Expr> {
        let unary = self.parse_unary_tail(primary)?;
        let recv = self.parse_binary_tail(unary)?;
        if !matches!(self.peek()?.kind, TokenKind::Keyword(_)) {
            return Ok(recv);
        }
        let pos = recv.pos;
        let mut selector = String::new();
        let mut args = Vec::new();
        while let TokenKind::Keyword(k) = self.peek_kind()? {
            self.next()?;
            selector.push_str(&k);
            args.push(self.parse_binary_operand()?);
        }
        Ok(Expr::new(
            ExprKind::Keyword {
                recv: Box::new(recv),
                selector,
                args,
            },
            pos,
        ))
    }

    fn parse_binary_operand(&mut self) -> Result<Expr> {
        let p = self.parse_primary()?;
        let u = self.parse_unary_tail(p)?;
        self.parse_binary_tail(u)
    }

    fn binary_op(kind: &TokenKind) -> Option<String> {
        match kind {
            TokenKind::BinaryOp(op) => Some(op.clone()),
            TokenKind::Pipe => Some("|".into()),
            _ => None,
        }
    }

    fn parse_binary_tail(&mut self, mut recv: Expr) -> Result<Expr> {
        while let Some(op) = Self::binary_op(&self.peek()?.kind) {
            self.next()?;
            let p = self.parse_primary()?;
            let arg = self.parse_unary_tail(p)?;
            let pos = recv.pos;
            recv = Expr::new(
                ExprKind::Binary {
                    recv: Box::new(recv),
                    op,
                    arg: Box::new(arg),
                },
                pos,
            );
        }
        Ok(recv)
    }

    fn parse_unary_tail(&mut self, mut recv: Expr) -> Result<Expr> {
        while let TokenKind::Identifier(sel) = self.peek_kind()? {
            self.next()?;
            let pos = recv.pos;
            recv = Expr::new(
                ExprKind::Unary {
                    recv: Box::new(recv),
                    selector: sel,
                },
                pos,
            );
        }
        Ok(recv)
    }

    fn parse_primary(&mut self) -> Result<Expr> {
        let t = self.peek()?.clone();
        let pos = t.pos;
        let lit = |l| Ok(Expr::new(ExprKind::Literal(l), pos));
        match t.kind {
            TokenKind::Identifier(name) => {
                self.next()?;
                Ok(Expr::new(variable_kind(&name), pos))
            }
            TokenKind::Integer(i) => {
                self.next()?;
                lit(Literal::Int(i))
            }
            TokenKind::Str(s) => {
                self.next()?;
                lit(Literal::Str(s))
            }
            TokenKind::Symbol(s) => {
                self.next()?;
                lit(Literal::Sym(s))
            }
            TokenKind::BinaryOp(op) if op == "-" => {
                self.next()?;
                match self.peek_kind()? {
                    TokenKind::Integer(i) => {
                        self.next()?;
                        lit(Literal::Int(-i))
                    }
                    _ => self.error("integer after unary minus"),
                }
            }
            TokenKind::LParen => {
                self.next()?;
                let e = self.parse_expression()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(e)
            }
            TokenKind::LBracket => self.parse_block(),
            _ => self.error("expression"),
        }
    }

    fn parse_temps(&mut self) -> Result<Vec<String>> {
        let mut temps = Vec::new();
        if self.eat(&TokenKind::Pipe)? {
            while let TokenKind::Identifier(n) = self.peek_kind()? {
                self.next()?;
                temps.push(n);
            }
            self.expect(TokenKind::Pipe, "'|' closing temporaries")?;
        } else if self.peek()?.kind == TokenKind::BinaryOp("||".into()) {
            // `||` is an empty temporaries declaration
            self.next()?;
        }
        Ok(temps)
    }

    fn parse_block(&mut self) -> Result<Expr> {
        let open = self.expect(TokenKind::LBracket, "'['")?;
        let mut params = Vec::new();
        while let TokenKind::BlockArg(n) = self.peek_kind()? {
            self.next()?;
            params.push(n);
        }
        if !params.is_empty() {
            match self.peek_kind()? {
                TokenKind::Pipe => {
                    self.next()?;
                }
                TokenKind::BinaryOp(op) if op == "||" => {
                    // `[:a || t | ...]` — param bar immediately followed by temps bar
                    self.next()?;
                    let mut temps = Vec::new();
                    while let TokenKind::Identifier(n) = self.peek_kind()? {
                        self.next()?;
                        temps.push(n);
                    }
                    self.expect(TokenKind::Pipe, "'|' closing temporaries")?;
                    let body = self.parse_statements(&TokenKind::RBracket)?;
                    self.expect(TokenKind::RBracket, "']'")?;
                    return Ok(Expr::new(ExprKind::Block { params, temps, body }, open.pos));
                }
                TokenKind::RBracket => {}
                _ => return self.error("'|' after block parameters"),
            }
        }
        let temps = self.parse_temps()?;
        let body = self.parse_statements(&TokenKind::RBracket)?;
        self.expect(TokenKind::RBracket, "']'")?;
        Ok(Expr::new(ExprKind::Block { params, temps, body }, open.pos))
    }

    fn parse_statements(&mut self, terminator: &TokenKind) -> Result<Vec<Expr>> {
        let mut out = Vec::new();
        loop {
            while self.eat(&TokenKind::Period)? {}
            let k = self.peek_kind()?;
            if &k == terminator || k == TokenKind::Eof {
                return Ok(out);
            }
            out.push(self.parse_statement()?);
            let k = self.peek_kind()?;
            if k == TokenKind::Period {
                continue;
            }
            if &k == terminator || k == TokenKind::Eof {
                return Ok(out);
            }
            return self.error("'.' or end of statements");
        }
    }

    // ---- program level ----

    fn parse_method_section(&mut self, open: Pos) -> Result<Vec<Directive>> {
        let class_name = match self.next()?.kind {
            TokenKind::Identifier(n) => n,
            other => {
                return Err(Error::Parse {
                    pos: open,
                    expected: "class name after '!'".into(),
                    found: other.describe(),
                })
            }
        };
        let mut class_side = false;
        if self.peek()?.kind == TokenKind::Identifier("class".into()) {
            self.next()?;
            class_side = true;
        }
        self.expect(TokenKind::Identifier("methodsFor".into()), "'methodsFor'")?;
        // the header's closing bang; no lookahead past it so the lexer can hand out raw chunks
        if self.peeked.is_some() {
            return self.error("'!' closing the method section header");
        }
        let t = self.lexer.next_token()?;
        if t.kind != TokenKind::Bang {
            return Err(Error::Parse {
                pos: t.pos,
                expected: "'!' closing the method section header".into(),
                found: t.kind.describe(),
            });
        }
        let mut out = Vec::new();
        loop {
            match self.lexer.take_chunk()? {
                None => break,
                Some((text, _)) if text.trim().is_empty() => break,
                Some((text, pos)) => {
                    let def = parse_method_source(&class_name, class_side, &text, pos)?;
                    out.push(Directive::MethodDef(def));
                }
            }
        }
        Ok(out)
    }

    pub fn parse_program(&mut self) -> Result<Vec<Directive>> {
        let mut out = Vec::new();
        loop {
            while self.eat(&TokenKind::Period)? {}
            let t = self.peek()?.clone();
            match t.kind {
                TokenKind::Eof => return Ok(out),
                TokenKind::Bang => {
                    self.next()?;
                    out.extend(self.parse_method_section(t.pos)?);
                    continue;
                }
                TokenKind::Pipe => {
                    let temps = self.parse_temps()?;
                    out.push(Directive::Temps(temps));
                    continue;
                }
                _ => {
                    let e = self.parse_statement()?;
                    out.push(classify_statement(e)?);
                }
            }
            match self.peek_kind()? {
                TokenKind::Period => {
                    self.next()?;
                }
                TokenKind::Eof | TokenKind::Bang => {}
                _ => return self.error("'.' between statements"),
            }
        }
    }
}

fn variable_kind(name: &str) -> ExprKind {
    match name {
        "true" => ExprKind::Literal(Literal::True),
        "false" => ExprKind::Literal(Literal::False),
        "nil" => ExprKind::Literal(Literal::Nil),
        "super" => ExprKind::Super,
        _ => ExprKind::Var(name.to_string()),
    }
}

fn slot_names(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Recognize directive shapes among top-level statements.
fn classify_statement(e: Expr) -> Result<Directive> {
    if let ExprKind::Keyword { recv, selector, args } = &e.kind {
        let class_def = |compact: bool| -> Option<Directive> {
            let super_name = match &recv.kind {
                ExprKind::Var(n) => Some(n.clone()),
                ExprKind::Literal(Literal::Nil) => None,
                _ => return None,
            };
            match (&args[0].kind, &args[1].kind) {
                (
                    ExprKind::Literal(Literal::Sym(name)),
                    ExprKind::Literal(Literal::Str(slots)),
                ) => Some(Directive::ClassDef {
                    name: name.clone(),
                    super_name,
                    slot_names: slot_names(slots),
                    compact,
                    pos: e.pos,
                }),
                _ => None,
            }
        };
        match selector.as_str() {
            "subclass:instanceVariableNames:" => {
                if let Some(d) = class_def(false) {
                    return Ok(d);
                }
            }
            "compactSubclass:instanceVariableNames:" => {
                if let Some(d) = class_def(true) {
                    return Ok(d);
                }
            }
            "assert:equals:" if is_self(recv) => {
                return Ok(Directive::AssertEqual(args[0].clone(), args[1].clone()));
            }
            "assertTraps:count:" if is_self(recv) => {
                return match &args[1].kind {
                    ExprKind::Literal(Literal::Int(n)) => {
                        Ok(Directive::AssertTrapCount(args[0].clone(), *n))
                    }
                    _ => Err(Error::Parse {
                        pos: args[1].pos,
                        expected: "integer literal trap count".into(),
                        found: "expression".into(),
                    }),
                };
            }
            _ => {}
        }
    }
    Ok(Directive::Expression(e))
}

fn is_self(e: &Expr) -> bool {
    matches!(&e.kind, ExprKind::Var(n) if n == "self")
}

/// Parse one method chunk: selector pattern, optional temporaries, statements.
pub fn parse_method_source(
    class_name: &str,
    class_side: bool,
    text: &str,
    origin: Pos,
) -> Result<MethodDef> {
    let mut p = Parser::with_origin(text, origin);
    let first = p.next()?;
    let (selector, params) = match first.kind {
        TokenKind::Identifier(sel) => (sel, Vec::new()),
        TokenKind::BinaryOp(op) => match p.next()?.kind {
            TokenKind::Identifier(arg) => (op, vec![arg]),
            other => {
                return Err(Error::Parse {
                    pos: first.pos,
                    expected: "argument name after binary selector".into(),
                    found: other.describe(),
                })
            }
        },
        TokenKind::Keyword(k) => {
            let mut sel = k;
            let mut params = Vec::new();
            loop {
                match p.next()?.kind {
                    TokenKind::Identifier(arg) => params.push(arg),
                    other => {
                        return Err(Error::Parse {
                            pos: first.pos,
                            expected: "argument name in keyword pattern".into(),
                            found: other.describe(),
                        })
                    }
                }
                match p.peek_kind()? {
                    TokenKind::Keyword(k) => {
                        p.next()?;
                        sel.push_str(&k);
                    }
                    _ => break,
                }
            }
            (sel, params)
        }
        other => {
            return Err(Error::Parse {
                pos: first.pos,
                expected: "method selector pattern".into(),
                found: other.describe(),
            })
        }
    };
    let temps = p.parse_temps()?;
    let body = p.parse_statements(&TokenKind::Eof)?;
    p.expect(TokenKind::Eof, "end of method")?;
    Ok(MethodDef {
        class_name: class_name.to_string(),
        class_side,
        selector,
        params,
        temps,
        body,
        source: text.trim().to_string(),
        pos: first.pos,
    })
}

/// Parse a scenario script into directives.
pub fn parse_program(text: &str) -> Result<Vec<Directive>> {
    Parser::new(text).parse_program()
}

/// Parse a single expression (used by tests and the printer round trip).
pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut p = Parser::new(text);
    let e = p.parse_statement()?;
    p.expect(TokenKind::Eof, "end of expression")?;
    Ok(e)
}
