use crate::error::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Str(String),
    Sym(String),
    True,
    False,
    Nil,
}

/// An expression with its source position. Equality ignores positions.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Var(String),
    /// `super` as a message receiver.
    Super,
    Assign(String, Box<Expr>),
    Unary {
        recv: Box<Expr>,
        selector: String,
    },
    Binary {
        recv: Box<Expr>,
        op: String,
        arg: Box<Expr>,
    },
    Keyword {
        recv: Box<Expr>,
        selector: String,
        args: Vec<Expr>,
    },
    Block {
        params: Vec<String>,
        temps: Vec<String>,
        body: Vec<Expr>,
    },
    Return(Box<Expr>),
}

impl ExprKind {
    /// Receiver of a send node, if this is one.
    pub fn send_receiver(&self) -> Option<&Expr> {
        match self {
            ExprKind::Unary { recv, .. }
            | ExprKind::Binary { recv, .. }
            | ExprKind::Keyword { recv, .. } => Some(recv),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodDef {
    pub class_name: String,
    pub class_side: bool,
    pub selector: String,
    pub params: Vec<String>,
    pub temps: Vec<String>,
    pub body: Vec<Expr>,
    /// The method chunk exactly as written, trimmed.
    pub source: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Directive {
    ClassDef {
        name: String,
        super_name: Option<String>,
        slot_names: Vec<String>,
        compact: bool,
        pos: Pos,
    },
    MethodDef(MethodDef),
    Temps(Vec<String>),
    Expression(Expr),
    AssertEqual(Expr, Expr),
    AssertTrapCount(Expr, i64),
}

/// Number of arguments a selector takes.
pub fn selector_arity(selector: &str) -> usize {
    let first = selector.chars().next();
    match first {
        Some(c) if c.is_alphabetic() || c == '_' => selector.matches(':').count(),
        Some(_) => 1,
        None => 0,
    }
}
