//! The scenario scripting language: lexer, parser, printer and evaluator.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{Directive, Expr, ExprKind, Literal, MethodDef};
pub use eval::{run_program, ProgramResult};
pub use lexer::tokenize;
pub use parser::{parse_expression, parse_program};
pub use printer::print_expr;
