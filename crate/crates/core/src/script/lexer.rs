//! Tokenizer for the scenario language.

use crate::error::{Error, Pos, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Identifier(String),
    /// Identifier with trailing colon, e.g. `at:`.
    Keyword(String),
    BinaryOp(String),
    Integer(i64),
    Str(String),
    Symbol(String),
    Assign,
    Caret,
    Period,
    Pipe,
    LBracket,
    RBracket,
    LParen,
    RParen,
    /// `:name` inside a block header.
    BlockArg(String),
    Bang,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
    pub offset: usize,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Identifier(s) => format!("identifier '{s}'"),
            TokenKind::Keyword(s) => format!("keyword '{s}'"),
            TokenKind::BinaryOp(s) => format!("operator '{s}'"),
            TokenKind::Integer(i) => format!("integer {i}"),
            TokenKind::Str(_) => "string literal".into(),
            TokenKind::Symbol(s) => format!("symbol #{s}"),
            TokenKind::Assign => "':='".into(),
            TokenKind::Caret => "'^'".into(),
            TokenKind::Period => "'.'".into(),
            TokenKind::Pipe => "'|'".into(),
            TokenKind::LBracket => "'['".into(),
            TokenKind::RBracket => "']'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::BlockArg(s) => format!("block argument ':{s}'"),
            TokenKind::Bang => "'!'".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

const OP_CHARS: &str = "+-*/\\<>=~@%&?,|";

fn is_op_char(c: char) -> bool {
    OP_CHARS.contains(c)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Self::with_origin(src, Pos { line: 1, col: 1 })
    }

    /// Lexer whose positions start at `origin` (used for method chunks).
    pub fn with_origin(src: &'a str, origin: Pos) -> Self {
        Lexer {
            src,
            offset: 0,
            line: origin.line,
            col: origin.col,
        }
    }

    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_char_at(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<()> {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('"') => {
                    let start = self.pos();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some(_) => {}
                            None => {
                                return Err(Error::Lex {
                                    pos: start,
                                    message: "unterminated comment".into(),
                                })
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.offset;
        while matches!(self.peek_char(), Some(c) if is_ident_char(c)) {
            self.bump();
        }
        self.src[start..self.offset].to_string()
    }

    fn quoted(&mut self, start: Pos) -> Result<String> {
        // opening quote already consumed
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('\'') => {
                    if self.peek_char() == Some('\'') {
                        self.bump();
                        out.push('\'');
                    } else {
                        return Ok(out);
                    }
                }
                Some(c) => out.push(c),
                None => {
                    return Err(Error::Lex {
                        pos: start,
                        message: "unterminated string".into(),
                    })
                }
            }
        }
    }

    pub fn next_token(&mut self) -> Result<Token> {
        self.skip_trivia()?;
        let pos = self.pos();
        let offset = self.offset;
        let tok = |kind| Ok(Token { kind, pos, offset });
        let Some(c) = self.peek_char() else {
            return tok(TokenKind::Eof);
        };
        if is_ident_start(c) {
            let name = self.ident();
            if self.peek_char() == Some(':') && self.peek_char_at(1) != Some('=') {
                self.bump();
                return tok(TokenKind::Keyword(format!("{name}:")));
            }
            return tok(TokenKind::Identifier(name));
        }
        if c.is_ascii_digit() {
            let start = self.offset;
            while matches!(self.peek_char(), Some(d) if d.is_ascii_digit()) {
                self.bump();
            }
            let text = &self.src[start..self.offset];
            return match text.parse::<i64>() {
                Ok(v) => tok(TokenKind::Integer(v)),
                Err(_) => Err(Error::Lex {
                    pos,
                    message: format!("integer literal {text} out of range"),
                }),
            };
        }
        match c {
            '\'' => {
                self.bump();
                let s = self.quoted(pos)?;
                tok(TokenKind::Str(s))
            }
            '#' => {
                self.bump();
                match self.peek_char() {
                    Some('\'') => {
                        self.bump();
                        let s = self.quoted(pos)?;
                        tok(TokenKind::Symbol(s))
                    }
                    Some(d) if is_ident_start(d) => {
                        let start = self.offset;
                        while matches!(self.peek_char(), Some(d) if is_ident_char(d) || d == ':') {
                            self.bump();
                        }
                        tok(TokenKind::Symbol(self.src[start..self.offset].to_string()))
                    }
                    Some(d) if is_op_char(d) => {
                        let start = self.offset;
                        while matches!(self.peek_char(), Some(d) if is_op_char(d)) {
                            self.bump();
                        }
                        tok(TokenKind::Symbol(self.src[start..self.offset].to_string()))
                    }
                    _ => Err(Error::Lex {
                        pos,
                        message: "malformed symbol literal".into(),
                    }),
                }
            }
            ':' => {
                self.bump();
                match self.peek_char() {
                    Some('=') => {
                        self.bump();
                        tok(TokenKind::Assign)
                    }
                    Some(d) if is_ident_start(d) => {
                        let name = self.ident();
                        tok(TokenKind::BlockArg(name))
                    }
                    _ => Err(Error::Lex {
                        pos,
                        message: "stray ':'".into(),
                    }),
                }
            }
            '^' => {
                self.bump();
                tok(TokenKind::Caret)
            }
            '.' => {
                self.bump();
                tok(TokenKind::Period)
            }
            '[' => {
                self.bump();
                tok(TokenKind::LBracket)
            }
            ']' => {
                self.bump();
                tok(TokenKind::RBracket)
            }
            '(' => {
                self.bump();
                tok(TokenKind::LParen)
            }
            ')' => {
                self.bump();
                tok(TokenKind::RParen)
            }
            '!' => {
                self.bump();
                tok(TokenKind::Bang)
            }
            c if is_op_char(c) => {
                let start = self.offset;
                self.bump();
                if c == '|' && !matches!(self.peek_char(), Some(d) if is_op_char(d)) {
                    return tok(TokenKind::Pipe);
                }
                while matches!(self.peek_char(), Some(d) if is_op_char(d)) {
                    // a '-' directly before a digit starts a negative literal
                    if self.peek_char() == Some('-')
                        && matches!(self.peek_char_at(1), Some(d) if d.is_ascii_digit())
                    {
                        break;
                    }
                    self.bump();
                }
                tok(TokenKind::BinaryOp(self.src[start..self.offset].to_string()))
            }
            other => Err(Error::Lex {
                pos,
                message: format!("unexpected character {other:?}"),
            }),
        }
    }

    /// Raw text up to the next unquoted `!`, consuming the `!`. `None` at end of input.
    /// A doubled `!!` stands for a literal `!`.
    pub fn take_chunk(&mut self) -> Result<Option<(String, Pos)>> {
        // skip leading whitespace so positions point at the chunk text
        while matches!(self.peek_char(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
        if self.peek_char().is_none() {
            return Ok(None);
        }
        let start = self.pos();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(Error::Lex {
                        pos: start,
                        message: "method chunk is missing its closing '!'".into(),
                    })
                }
                Some('!') => {
                    if self.peek_char() == Some('!') {
                        self.bump();
                        out.push('!');
                    } else {
                        return Ok(Some((out, start)));
                    }
                }
                Some(q @ ('\'' | '"')) => {
                    out.push(q);
                    loop {
                        match self.bump() {
                            Some(c) if c == q => {
                                out.push(c);
                                break;
                            }
                            Some(c) => out.push(c),
                            None => {
                                return Err(Error::Lex {
                                    pos: start,
                                    message: "unterminated literal in method chunk".into(),
                                })
                            }
                        }
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }
}

/// Tokenize a whole text. The trailing `Eof` token is not included.
pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut lexer = Lexer::new(text);
    let mut out = Vec::new();
    loop {
        let t = lexer.next_token()?;
        if t.kind == TokenKind::Eof {
            return Ok(out);
        }
        out.push(t);
    }
}
