//! Tree-walking evaluator for method bodies, blocks and top-level directives.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{Error, Pos, Result};
use crate::heap::{Extra, HeapObject};
use crate::method::MethodCode;
use crate::runtime::{Runtime, METHOD_CLASS, METHOD_SOURCE};
use crate::script::ast::{Directive, Expr, ExprKind, Literal, MethodDef};
use crate::script::parser::parse_method_source;
use crate::value::{Handle, Value};

/// Variables of one activation. Blocks keep their defining scope alive.
#[derive(Debug, Default)]
pub struct Scope {
    vars: RefCell<Vec<(String, Value)>>,
    parent: Option<Rc<Scope>>,
}

impl Scope {
    fn child(parent: Option<Rc<Scope>>, names: impl IntoIterator<Item = (String, Value)>) -> Rc<Scope> {
        Rc::new(Scope {
            vars: RefCell::new(names.into_iter().collect()),
            parent,
        })
    }

    fn get(&self, name: &str) -> Option<Value> {
        if let Some((_, v)) = self.vars.borrow().iter().rev().find(|(n, _)| n == name) {
            return Some(*v);
        }
        self.parent.as_ref().and_then(|p| p.get(name))
    }

    fn set(&self, name: &str, value: Value) -> bool {
        if let Some(slot) = self.vars.borrow_mut().iter_mut().rev().find(|(n, _)| n == name) {
            slot.1 = value;
            return true;
        }
        self.parent.as_ref().is_some_and(|p| p.set(name, value))
    }
}

/// Receiver-side context shared by a method activation and its blocks.
#[derive(Debug)]
pub struct Context {
    receiver: Value,
    def_class: Option<Handle>,
    ivars: Rc<[String]>,
    /// Top-level code sees workspace variables.
    top_level: bool,
}

#[derive(Debug)]
pub struct Closure {
    pub params: Vec<String>,
    pub temps: Vec<String>,
    pub body: Vec<Expr>,
    scope: Rc<Scope>,
    ctx: Rc<Context>,
}

fn top_context() -> Rc<Context> {
    Rc::new(Context {
        receiver: Value::Nil,
        def_class: None,
        ivars: Rc::from(Vec::new()),
        top_level: true,
    })
}

/// Run a compiled method on `receiver`.
pub(crate) fn run_method(
    rt: &mut Runtime,
    code: Rc<MethodCode>,
    _method: Handle,
    def: Handle,
    receiver: Value,
    args: &[Value],
) -> Result<Value> {
    let ctx = Rc::new(Context {
        receiver,
        def_class: Some(def),
        ivars: code.ivars.clone(),
        top_level: false,
    });
    let vars = code
        .params
        .iter()
        .cloned()
        .zip(args.iter().copied())
        .chain(code.temps.iter().map(|t| (t.clone(), Value::Nil)));
    let scope = Scope::child(None, vars);
    let (v, returned) = eval_body(rt, &code.body, &scope, &ctx)?;
    Ok(if returned { v } else { receiver })
}

/// Evaluate a block with `args`.
pub fn call_block(rt: &mut Runtime, block: Value, args: &[Value]) -> Result<Value> {
    let closure = block_closure(rt, block)?;
    if closure.params.len() != args.len() {
        return Err(Error::Arity {
            selector: value_selector(args.len()),
            expected: closure.params.len(),
            got: args.len(),
        });
    }
    let vars = closure
        .params
        .iter()
        .cloned()
        .zip(args.iter().copied())
        .chain(closure.temps.iter().map(|t| (t.clone(), Value::Nil)));
    let scope = Scope::child(Some(closure.scope.clone()), vars);
    let (v, _) = eval_body(rt, &closure.body, &scope, &closure.ctx)?;
    Ok(v)
}

pub(crate) fn block_closure(rt: &Runtime, block: Value) -> Result<Rc<Closure>> {
    let h = block
        .as_handle()
        .ok_or_else(|| Error::PrimitiveFailed(format!("{} is not a block", rt.describe(block))))?;
    match &rt.heap.get(h)?.extra {
        Extra::Block(c) => Ok(c.clone()),
        _ => Err(Error::PrimitiveFailed(format!("{} is not a block", rt.describe(block)))),
    }
}

fn value_selector(n: usize) -> String {
    if n == 0 {
        "value".into()
    } else {
        "value:".repeat(n)
    }
}

/// Statements in order. The flag is set when a `^` statement ended the body.
fn eval_body(rt: &mut Runtime, body: &[Expr], scope: &Rc<Scope>, ctx: &Rc<Context>) -> Result<(Value, bool)> {
    let mut last = Value::Nil;
    for stmt in body {
        if let ExprKind::Return(e) = &stmt.kind {
            return Ok((eval(rt, e, scope, ctx)?, true));
        }
        last = eval(rt, stmt, scope, ctx)?;
    }
    Ok((last, false))
}

fn eval(rt: &mut Runtime, e: &Expr, scope: &Rc<Scope>, ctx: &Rc<Context>) -> Result<Value> {
    match &e.kind {
        ExprKind::Literal(l) => Ok(literal(rt, l)),
        ExprKind::Var(name) => read_var(rt, name, scope, ctx).map_err(|err| err.located(e.pos)),
        ExprKind::Super => Ok(ctx.receiver),
        ExprKind::Assign(name, v) => {
            let value = eval(rt, v, scope, ctx)?;
            write_var(rt, name, value, scope, ctx).map_err(|err| err.located(e.pos))?;
            Ok(value)
        }
        ExprKind::Return(v) => eval(rt, v, scope, ctx),
        ExprKind::Block { params, temps, body } => {
            let closure = Closure {
                params: params.clone(),
                temps: temps.clone(),
                body: body.clone(),
                scope: scope.clone(),
                ctx: ctx.clone(),
            };
            let class = rt.k.block_closure;
            Ok(rt
                .alloc(HeapObject::slotted(class, Vec::new()).with_extra(Extra::Block(Rc::new(closure))))
                .into())
        }
        ExprKind::Unary { recv, selector } => send(rt, e.pos, recv, selector, &[], scope, ctx),
        ExprKind::Binary { recv, op, arg } => send(rt, e.pos, recv, op, std::slice::from_ref(arg), scope, ctx),
        ExprKind::Keyword { recv, selector, args } => send(rt, e.pos, recv, selector, args, scope, ctx),
    }
}

#[allow(clippy::too_many_arguments)]
fn send(
    rt: &mut Runtime,
    pos: Pos,
    recv: &Expr,
    selector: &str,
    args: &[Expr],
    scope: &Rc<Scope>,
    ctx: &Rc<Context>,
) -> Result<Value> {
    let is_super = matches!(recv.kind, ExprKind::Super);
    let receiver = eval(rt, recv, scope, ctx)?;
    let mut values = Vec::with_capacity(args.len());
    for a in args {
        values.push(eval(rt, a, scope, ctx)?);
    }
    let sel = rt.intern(selector);
    let r = match (is_super, ctx.def_class) {
        (true, Some(def)) => rt.super_send(receiver, sel, &values, def),
        (true, None) => Err(Error::UnboundVariable("super".into())),
        _ => rt.send_sym(receiver, sel, &values),
    };
    r.map_err(|err| err.located(pos))
}

fn literal(rt: &mut Runtime, l: &Literal) -> Value {
    match l {
        Literal::Int(i) => Value::Int(*i),
        Literal::Str(s) => rt.new_string(s).into(),
        Literal::Sym(s) => rt.intern(s).into(),
        Literal::True => rt.boolean(true),
        Literal::False => rt.boolean(false),
        Literal::Nil => Value::Nil,
    }
}

fn read_var(rt: &Runtime, name: &str, scope: &Rc<Scope>, ctx: &Rc<Context>) -> Result<Value> {
    match name {
        "self" => return Ok(ctx.receiver),
        "nil" => return Ok(Value::Nil),
        "true" => return Ok(rt.boolean(true)),
        "false" => return Ok(rt.boolean(false)),
        _ => {}
    }
    if let Some(v) = scope.get(name) {
        return Ok(v);
    }
    if let Some(i) = ctx.ivars.iter().position(|n| n == name) {
        return rt.slot_read(ctx.receiver, i);
    }
    if ctx.top_level {
        if let Some(v) = rt.variable(name) {
            return Ok(v);
        }
    }
    rt.global(name).ok_or_else(|| Error::UnboundVariable(name.to_string()))
}

fn write_var(rt: &mut Runtime, name: &str, value: Value, scope: &Rc<Scope>, ctx: &Rc<Context>) -> Result<()> {
    if scope.set(name, value) {
        return Ok(());
    }
    if let Some(i) = ctx.ivars.iter().position(|n| n == name) {
        return rt.slot_write(ctx.receiver, i, value);
    }
    if ctx.top_level {
        rt.set_variable(name, value);
        return Ok(());
    }
    Err(Error::UnboundVariable(name.to_string()))
}

/// Build the executable form of a method object from its stored source.
pub(crate) fn compile_method_object(rt: &mut Runtime, method: Handle) -> Result<Rc<MethodCode>> {
    let source = rt
        .text_of(rt.slot_read(method.into(), METHOD_SOURCE)?)
        .ok_or_else(|| Error::InvalidActivation("method has no source".into()))?;
    let class = match rt.slot_read(method.into(), METHOD_CLASS)? {
        Value::Ref(c) => rt.resolve(c)?,
        _ => return Err(Error::InvalidActivation("method has no class".into())),
    };
    let class_side = rt.class_of(class.into())? == rt.k.metaclass;
    let class_name = rt.describe_class(class);
    let def = parse_method_source(&class_name, class_side, &source, Pos { line: 1, col: 1 })?;
    Ok(Rc::new(code_for(rt, &def, class)?))
}

fn code_for(rt: &Runtime, def: &MethodDef, class: Handle) -> Result<MethodCode> {
    Ok(MethodCode {
        selector: def.selector.clone(),
        params: def.params.clone(),
        temps: def.temps.clone(),
        body: def.body.clone(),
        source: def.source.clone(),
        ivars: Rc::from(rt.class_ivars(class)?),
    })
}

/// Compile `def` and bind it in its class (or metaclass).
pub fn install_method(rt: &mut Runtime, def: &MethodDef) -> Result<Handle> {
    let mut class = match rt.global(&def.class_name) {
        Some(Value::Ref(c)) if rt.is_behavior(c.into()) => rt.resolve(c)?,
        _ => return Err(Error::UnboundVariable(def.class_name.clone()).located(def.pos)),
    };
    if def.class_side {
        class = rt.class_of(class.into())?;
    }
    let code = code_for(rt, def, class)?;
    let sel = rt.intern(&def.selector);
    let source = rt.new_string(&def.source);
    let method = rt.alloc(
        HeapObject::slotted(
            rt.k.compiled_method,
            vec![
                sel.into(),
                class.into(),
                source.into(),
                Value::Nil,
                Value::Int(def.params.len() as i64),
            ],
        )
        .with_extra(Extra::Code(Rc::new(code))),
    );
    rt.method_dict_put(class, sel, method.into())?;
    Ok(method)
}

/// Comparison used by assertions: identity, equal integers, equal text, or
/// element-wise equal arrays. Sends nothing.
pub fn structurally_equal(rt: &Runtime, a: Value, b: Value) -> bool {
    if rt.identical(a, b) {
        return true;
    }
    if let (Some(x), Some(y)) = (rt.text_of(a), rt.text_of(b)) {
        return x == y;
    }
    if rt.is_array(a) && rt.is_array(b) {
        if let (Ok(xs), Ok(ys)) = (rt.array_items(a), rt.array_items(b)) {
            return xs.len() == ys.len() && xs.iter().zip(&ys).all(|(x, y)| structurally_equal(rt, *x, *y));
        }
    }
    false
}

/// Result of one directive.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Value(Value),
    Defined(Handle),
    Passed,
    Failed { pos: Pos, message: String },
}

/// Evaluate an expression at top level.
pub fn eval_top(rt: &mut Runtime, e: &Expr) -> Result<Value> {
    let ctx = top_context();
    let scope = Scope::child(None, Vec::new());
    eval(rt, e, &scope, &ctx)
}

pub fn eval_directive(rt: &mut Runtime, d: &Directive) -> Result<Outcome> {
    match d {
        Directive::ClassDef {
            name,
            super_name,
            slot_names,
            compact,
            pos,
        } => {
            let sup = match super_name {
                None => Value::Nil,
                Some(n) => match rt.global(n) {
                    Some(v @ Value::Ref(_)) => v,
                    _ => return Err(Error::UnboundVariable(n.clone()).located(*pos)),
                },
            };
            let c = rt
                .define_class(name, sup, slot_names, *compact)
                .map_err(|e| e.located(*pos))?;
            Ok(Outcome::Defined(c))
        }
        Directive::MethodDef(def) => install_method(rt, def).map(Outcome::Defined),
        Directive::Temps(names) => {
            for n in names {
                rt.set_variable(n, Value::Nil);
            }
            Ok(Outcome::Value(Value::Nil))
        }
        Directive::Expression(e) => eval_top(rt, e).map(Outcome::Value),
        Directive::AssertEqual(a, b) => {
            let va = eval_top(rt, a)?;
            let vb = eval_top(rt, b)?;
            if structurally_equal(rt, va, vb) {
                Ok(Outcome::Passed)
            } else {
                Ok(Outcome::Failed {
                    pos: a.pos,
                    message: format!("expected {} but got {}", rt.describe(vb), rt.describe(va)),
                })
            }
        }
        Directive::AssertTrapCount(e, n) => {
            let before = rt.counters.traps;
            eval_top(rt, e)?;
            let got = (rt.counters.traps - before) as i64;
            if got == *n {
                Ok(Outcome::Passed)
            } else {
                Ok(Outcome::Failed {
                    pos: e.pos,
                    message: format!("expected {n} traps but got {got}"),
                })
            }
        }
    }
}

/// Totals from running a whole program.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProgramResult {
    pub passed: usize,
    pub failures: Vec<(Pos, String)>,
    pub last: Value,
}

/// Parse and run a script. Assertion failures are collected; the first
/// runtime error stops the run.
pub fn run_program(rt: &mut Runtime, text: &str) -> Result<ProgramResult> {
    let directives = crate::script::parser::parse_program(text)?;
    let mut result = ProgramResult::default();
    for d in &directives {
        match eval_directive(rt, d)? {
            Outcome::Value(v) => result.last = v,
            Outcome::Defined(_) => {}
            Outcome::Passed => result.passed += 1,
            Outcome::Failed { pos, message } => result.failures.push((pos, message)),
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> (Runtime, ProgramResult) {
        let mut rt = Runtime::new();
        let r = run_program(&mut rt, src).unwrap();
        (rt, r)
    }

    #[test]
    fn blocks_and_arithmetic() {
        let (rt, r) = run("[:x | x + 1] value: 2");
        assert_eq!(r.last, Value::Int(3));
        drop(rt);
        let (_, r) = run("| s | s := 0. 1 to: 4 do: [:i | s := s + i]. s");
        assert_eq!(r.last, Value::Int(10));
    }

    #[test]
    fn nil_is_nil_by_send() {
        let (rt, r) = run("nil isNil");
        assert_eq!(r.last, rt.boolean(true));
    }

    #[test]
    fn methods_and_ivars() {
        let src = "ObjectRoot subclass: #Counter instanceVariableNames: 'n'.\n\
                   !Counter methodsFor!\n\
                   bump n isNil ifTrue: [n := 0]. n := n + 1. ^ n! !\n\
                   c := Counter new. c bump. c bump.\n\
                   self assert: c bump equals: 3.";
        let (_, r) = run(src);
        assert_eq!(r.passed, 1, "{:?}", r.failures);
    }

    #[test]
    fn errors_carry_positions() {
        let mut rt = Runtime::new();
        let err = run_program(&mut rt, "x := 3.\nx frobnicate").unwrap_err();
        assert!(matches!(err.kind(), Error::DoesNotUnderstand { .. }));
        assert_eq!(err.pos(), Some(Pos { line: 2, col: 1 }));
        let err = run_program(&mut rt, "zork").unwrap_err();
        assert!(matches!(err.kind(), Error::UnboundVariable(_)));
        assert!(err.pos().is_some());
    }

    #[test]
    fn failed_assertion_is_collected() {
        let (_, r) = run("self assert: 3 + 4 equals: 8. self assert: 1 equals: 1.");
        assert_eq!(r.passed, 1);
        assert_eq!(r.failures.len(), 1);
        assert!(r.failures[0].1.contains("expected 8 but got 7"));
    }
}
