//! Compiled method bodies and method-dictionary entries.

use std::rc::Rc;

use crate::primitives::Prim;
use crate::script::ast::Expr;
use crate::value::Handle;

/// Executable form of a method written in the scenario language.
#[derive(Debug)]
pub struct MethodCode {
    pub selector: String,
    pub params: Vec<String>,
    pub temps: Vec<String>,
    pub body: Vec<Expr>,
    pub source: String,
    /// Instance variable names of the defining class, in slot order.
    pub ivars: Rc<[String]>,
}

impl MethodCode {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Whether any send in the body (blocks included) uses `selector`.
    pub fn sends_selector(&self, selector: &str) -> bool {
        self.body.iter().any(|e| expr_sends(e, selector))
    }
}

fn expr_sends(e: &Expr, sel: &str) -> bool {
    use crate::script::ast::ExprKind::*;
    match &e.kind {
        Literal(_) | Var(_) | Super => false,
        Assign(_, v) | Return(v) => expr_sends(v, sel),
        Unary { recv, selector } => selector == sel || expr_sends(recv, sel),
        Binary { recv, op, arg } => op == sel || expr_sends(recv, sel) || expr_sends(arg, sel),
        Keyword { recv, selector, args } => {
            selector == sel || expr_sends(recv, sel) || args.iter().any(|a| expr_sends(a, sel))
        }
        Block { body, .. } => body.iter().any(|b| expr_sends(b, sel)),
    }
}

/// What a method dictionary entry turns out to be once classified.
#[derive(Clone, Debug)]
pub enum MethodEntry {
    Primitive { method: Handle, prim: Prim },
    Compiled { method: Handle, code: Rc<MethodCode> },
    /// Any other object; receives `run:with:in:` instead of being activated.
    Foreign(Handle),
}

impl MethodEntry {
    pub fn handle(&self) -> Handle {
        match self {
            MethodEntry::Primitive { method, .. } | MethodEntry::Compiled { method, .. } => *method,
            MethodEntry::Foreign(h) => *h,
        }
    }
}
