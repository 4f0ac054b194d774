#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use ghost_runtime::script::eval::{run_program, ProgramResult};
use ghost_runtime::error::Pos;
use ghost_runtime::script::{Expr, ExprKind, Literal};
use ghost_runtime::trace::{SendOutcome, TraceRecord, WrapPhase};
use proptest::prelude::*;
use ghost_runtime::{Handle, Runtime, Value};
use rand::Rng;

pub fn run(src: &str) -> (Runtime, ProgramResult) {
    let mut rt = Runtime::new();
    let r = run_program(&mut rt, src).unwrap_or_else(|e| panic!("script failed: {e}\n{src}"));
    (rt, r)
}

pub fn run_in(rt: &mut Runtime, src: &str) -> ProgramResult {
    run_program(rt, src).unwrap_or_else(|e| panic!("script failed: {e}\n{src}"))
}

pub fn var(rt: &Runtime, name: &str) -> Value {
    rt.variable(name).unwrap_or_else(|| panic!("no variable {name}"))
}

pub fn node_class(rt: &mut Runtime, name: &str, slots: usize) -> Handle {
    if let Some(c) = rt.class_named(name) {
        return c;
    }
    let root = rt.class_named("ObjectRoot").unwrap();
    let names: Vec<String> = (0..slots).map(|i| format!("s{i}")).collect();
    rt.define_class(name, root.into(), &names, false).unwrap()
}

/// `n` objects of class `Node` (three slots) with random nil, integer,
/// string and intra-graph references. Object 0 reaches every other one.
pub fn random_graph(rt: &mut Runtime, rng: &mut impl Rng, n: usize) -> Vec<Handle> {
    let class = node_class(rt, "Node", 3);
    let nodes: Vec<Handle> = (0..n).map(|_| rt.instantiate(class).unwrap()).collect();
    for i in 0..n {
        for s in 0..3 {
            let v = match rng.gen_range(0..10) {
                0 => Value::Nil,
                1 => Value::Int(rng.gen_range(-1000..1000)),
                2 => rt.new_string(&format!("str{}", rng.gen_range(0..50))).into(),
                _ => nodes[rng.gen_range(0..n)].into(),
            };
            rt.slot_write(nodes[i].into(), s, v).unwrap();
        }
        if i > 0 {
            let parent = rng.gen_range(0..i);
            let slot = rng.gen_range(0..3);
            rt.slot_write(nodes[parent].into(), slot, nodes[i].into()).unwrap();
        }
    }
    // the tree edges may have been overwritten; chain the stragglers back in
    let reach = reachable(rt, nodes[0]);
    for (i, h) in nodes.iter().enumerate().skip(1) {
        if !reach.contains_key(h) {
            rt.slot_write(nodes[i - 1].into(), 2, (*h).into()).unwrap();
        }
    }
    let reach = reachable(rt, nodes[0]);
    for (i, h) in nodes.iter().enumerate().skip(1).rev() {
        if !reach.contains_key(h) {
            rt.slot_write(nodes[i - 1].into(), 2, (*h).into()).unwrap();
        }
    }
    nodes
}

fn reachable(rt: &Runtime, root: Handle) -> HashMap<Handle, usize> {
    let mut seen = HashMap::new();
    let mut stack = vec![root];
    while let Some(h) = stack.pop() {
        let h = rt.heap().resolve(h).unwrap();
        if seen.contains_key(&h) {
            continue;
        }
        seen.insert(h, seen.len());
        let obj = rt.heap().get(h).unwrap();
        if rt.describe_class(obj.class) != "Node" {
            continue;
        }
        for s in &obj.slots {
            if let Value::Ref(x) = s {
                stack.push(*x);
            }
        }
    }
    seen
}

/// Canonical description of the graph under `root`: objects numbered in
/// first-visit order, references to them by number, everything else by
/// printed value. Reads the heap directly, so nothing is sent.
pub fn signature(rt: &Runtime, root: Value) -> Vec<String> {
    let mut index: HashMap<Handle, usize> = HashMap::new();
    let mut order: Vec<Handle> = Vec::new();
    let mut out = Vec::new();
    let label = |v: Value, rt: &Runtime, index: &mut HashMap<Handle, usize>, order: &mut Vec<Handle>| match v {
        Value::Nil => "nil".to_string(),
        Value::Int(i) => i.to_string(),
        Value::Ref(h) => {
            let h = rt.heap().resolve(h).unwrap();
            let obj = rt.heap().get(h).unwrap();
            if obj.bytes.is_some() && !rt.is_symbol(h.into()) {
                return format!("'{}'", rt.text_of(h.into()).unwrap());
            }
            if rt.describe_class(obj.class) != "Node" {
                return rt.describe(h.into());
            }
            let next = index.len();
            let i = *index.entry(h).or_insert_with(|| {
                order.push(h);
                next
            });
            format!("#{i}")
        }
    };
    label(root, rt, &mut index, &mut order);
    let mut i = 0;
    while i < order.len() {
        let obj = rt.heap().get(order[i]).unwrap().clone();
        let slots: Vec<String> = obj.slots.iter().map(|s| label(*s, rt, &mut index, &mut order)).collect();
        out.push(format!("{} {}", rt.describe_class(obj.class), slots.join(" ")));
        i += 1;
    }
    out
}

/// Send records at the given depth.
pub fn sends_at(rt: &Runtime, depth: usize) -> Vec<(String, String, SendOutcome)> {
    rt.trace
        .records()
        .iter()
        .filter_map(|r| match r {
            TraceRecord::Send {
                depth: d,
                class_name,
                selector,
                outcome,
            } if *d == depth => Some((class_name.clone(), selector.clone(), *outcome)),
            _ => None,
        })
        .collect()
}

/// Depth-1 sends other than the trap messages the runtime itself delivers.
pub fn top_sends(rt: &Runtime) -> Vec<(String, String, SendOutcome)> {
    sends_at(rt, 1)
        .into_iter()
        .filter(|s| s.1 != "cannotInterpret:" && s.1 != "doesNotUnderstand:")
        .collect()
}

pub fn all_sends(rt: &Runtime) -> Vec<(usize, String, String, SendOutcome)> {
    rt.trace
        .records()
        .iter()
        .filter_map(|r| match r {
            TraceRecord::Send {
                depth,
                class_name,
                selector,
                outcome,
            } => Some((*depth, class_name.clone(), selector.clone(), *outcome)),
            _ => None,
        })
        .collect()
}

pub fn trace_lines(rt: &Runtime) -> Vec<String> {
    rt.trace.records().iter().map(|r| r.to_string()).collect()
}

/// Selectors drawn from the root class, safe to send to anything with
/// integer arguments.
pub const ROOT_SELECTORS: &[&str] = &[
    "pointersTo",
    "printString",
    "displayString",
    "class",
    "isNil",
    "notNil",
    "identityHash",
    "hash",
    "yourself",
    "inspect",
    "basicInspect",
    "inspectorClass",
    "isString",
    "isSymbol",
    "isInteger",
    "isBehavior",
    "shallowCopy",
    "~~",
    "=",
    "~=",
    "printStringLimitedTo:",
    "isKindOf:",
];

/// A random selector: unary, binary or keyword.
pub fn random_selector(rng: &mut impl Rng) -> String {
    const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let word = |rng: &mut dyn rand::RngCore| {
        let mut s = String::new();
        s.push(LOWER[rng.gen_range(0..LOWER.len())] as char);
        for _ in 0..rng.gen_range(0..10) {
            s.push(ALNUM[rng.gen_range(0..ALNUM.len())] as char);
        }
        s
    };
    loop {
        let sel = match rng.gen_range(0..10) {
            0 => ["+", "-", "*", "/", "<", ">", ",", "@", "%", "&", "|", "->", "<=", ">="][rng.gen_range(0..14)].to_string(),
            1..=4 => word(rng),
            _ => (0..rng.gen_range(1..4)).map(|_| word(rng) + ":").collect(),
        };
        if sel != "==" && sel != "proxyTarget" && sel != "proxyHandler" {
            return sel;
        }
    }
}

pub fn args_for(selector: &str) -> Vec<Value> {
    let n = ghost_runtime::script::ast::selector_arity(selector);
    (0..n as i64).map(|i| Value::Int(i + 1)).collect()
}

/// Suite of `n` selectors mixing root-class selectors and random ones.
pub fn selector_suite(rng: &mut impl Rng, n: usize) -> Vec<String> {
    let mut out: Vec<String> = ROOT_SELECTORS.iter().map(|s| s.to_string()).collect();
    while out.len() < n {
        out.push(random_selector(rng));
    }
    out.truncate(n);
    out
}

pub fn serial(rt: &Runtime, v: Value) -> Option<u64> {
    match v {
        Value::Ref(h) => Some(rt.heap().get(h).ok()?.serial()),
        _ => None,
    }
}

/// Every reference in the system, grouped by the serial of the payload it
/// reaches. Holders are named by their own serial and slot index.
pub fn reference_sets(rt: &Runtime, vars: &[String]) -> HashMap<u64, BTreeSet<String>> {
    let mut out: HashMap<u64, BTreeSet<String>> = HashMap::new();
    for (_, obj) in rt.heap().live() {
        for (i, s) in obj.slots.iter().enumerate() {
            if let Some(t) = serial(rt, *s) {
                out.entry(t).or_default().insert(format!("{}:{i}", obj.serial()));
            }
        }
    }
    for name in vars {
        if let Some(t) = serial(rt, rt.variable(name).unwrap()) {
            out.entry(t).or_default().insert(format!("var:{name}"));
        }
    }
    out
}

pub fn identity_matrix(rt: &Runtime, vars: &[String]) -> Vec<bool> {
    let vals: Vec<Value> = vars.iter().map(|v| rt.variable(v).unwrap()).collect();
    let mut m = Vec::new();
    for x in &vals {
        for y in &vals {
            m.push(rt.identical(*x, *y));
        }
    }
    m
}

pub fn wrap_events(rt: &Runtime) -> Vec<(WrapPhase, String, usize)> {
    rt.trace
        .records()
        .iter()
        .filter_map(|r| match r {
            TraceRecord::Wrap { phase, selector, depth } => Some((*phase, selector.clone(), *depth)),
            _ => None,
        })
        .collect()
}

/// Pre and post events must pair up like parentheses, each pair at one depth.
pub fn check_bracketing(events: &[(WrapPhase, String, usize)]) -> usize {
    let mut open: Vec<(String, usize)> = Vec::new();
    let mut max = 0;
    for (phase, sel, depth) in events {
        match phase {
            WrapPhase::Pre => {
                if let Some((_, d)) = open.last() {
                    assert!(depth > d, "nested pre at depth {depth} inside {d}");
                }
                open.push((sel.clone(), *depth));
                max = max.max(open.len());
            }
            WrapPhase::Exec => {
                let (s, d) = open.last().expect("exec outside a bracket");
                assert_eq!((s, d), (sel, depth));
            }
            WrapPhase::Post => {
                let (s, d) = open.pop().expect("post without pre");
                assert_eq!((&s, d), (sel, *depth));
            }
        }
    }
    assert!(open.is_empty(), "unclosed: {open:?}");
    max
}

/// Twenty small programs: five shapes, four parameters each. Every program
/// defines class P and ends with an expression over an instance `p`.
pub fn corpus() -> Vec<String> {
    let mut out = Vec::new();
    for k in 1..=4 {
        out.push(format!(
            "ObjectRoot subclass: #P instanceVariableNames: 'acc'.
!P methodsFor!
fib: n ^ n < 2 ifTrue: [n] ifFalse: [(self fib: n - 1) + (self fib: n - 2)]!
run | a | a := 0. 1 to: {k} do: [:i | a := a + (self fib: i + 3)]. ^ a! !
p := P new.
WRAP
p run"
        ));
        out.push(format!(
            "ObjectRoot subclass: #P instanceVariableNames: 'items'.
!P methodsFor!
fill items := Array new: {n}. 1 to: {n} do: [:i | items at: i put: i * i]!
evens ^ items select: [:x | x even]!
total ^ self evens inject: 0 into: [:a :b | a + b]! !
p := P new.
p fill.
WRAP
Array with: p total with: p evens size",
            n = k * 3
        ));
        out.push(format!(
            "ObjectRoot subclass: #P instanceVariableNames: 'name'.
!P methodsFor!
setName: s name := s!
shout ^ name , '!'!
twice ^ self shout , self shout!
rev ^ name reversed! !
p := P new setName: 'ab{k}'.
WRAP
Array with: p twice with: p rev with: (p shout includesSubstring: '{k}')"
        ));
        out.push(format!(
            "ObjectRoot subclass: #P instanceVariableNames: 'count'.
!P methodsFor!
reset count := 0!
bump count := count + 1. ^ count!
loop: n | i | i := 0. [i < n] whileTrue: [self bump. i := i + 1]. ^ count! !
p := P new.
p reset.
WRAP
Array with: (p loop: {k}) with: (p loop: {k}) with: (p bump)"
        ));
        out.push(format!(
            "ObjectRoot subclass: #Base instanceVariableNames: 'v'.
Base subclass: #P instanceVariableNames: ''.
!Base methodsFor!
setV: x v := x!
value ^ v!
scaled: f ^ self value * f! !
!P methodsFor!
value ^ super value + {k}!
both ^ Array with: self value with: (self scaled: 2)! !
p := P new setV: {k}0.
WRAP
p both"
        ));
    }
    out
}

pub const RESERVED: &[&str] = &["true", "false", "nil", "super"];

pub fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9]{0,6}".prop_filter("reserved word", |s| !RESERVED.contains(&s.as_str()))
}

pub fn binary_op() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["+", "-", "*", "/", "<", ">", "<=", ">=", "=", "~=", ",", "@", "%", "&", "|", "->", "\\\\", "//"])
        .prop_map(str::to_string)
}

pub fn e(kind: ExprKind) -> Expr {
    Expr::new(kind, Pos::default())
}

pub fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        any::<i64>().prop_map(Literal::Int),
        "[a-zA-Z0-9 '!.]{0,8}".prop_map(Literal::Str),
        ident().prop_map(Literal::Sym),
        prop::collection::vec(ident(), 1..3).prop_map(|ks| Literal::Sym(ks.concat() + ":")),
        prop::collection::vec(ident(), 1..3).prop_map(|ks| Literal::Sym(ks.iter().map(|k| format!("{k}:")).collect())),
        binary_op().prop_map(Literal::Sym),
        "[a-z ]{1,6} [a-z]{1,3}".prop_map(Literal::Sym),
        Just(Literal::True),
        Just(Literal::False),
        Just(Literal::Nil),
    ]
    .prop_map(|l| e(ExprKind::Literal(l)))
}

pub fn statements(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = Vec<Expr>> {
    (prop::collection::vec(inner.clone(), 0..3), prop::option::of(inner)).prop_map(|(mut body, ret)| {
        if let Some(r) = ret {
            body.push(e(ExprKind::Return(Box::new(r))));
        }
        body
    })
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![literal(), ident().prop_map(|n| e(ExprKind::Var(n)))];
    leaf.prop_recursive(5, 64, 4, |inner| {
        let inner = inner.boxed();
        let recv = prop_oneof![4 => inner.clone(), 1 => Just(e(ExprKind::Super))];
        prop_oneof![
            (recv.clone(), ident()).prop_map(|(r, s)| e(ExprKind::Unary { recv: Box::new(r), selector: s })),
            (recv.clone(), binary_op(), inner.clone()).prop_map(|(r, op, a)| e(ExprKind::Binary {
                recv: Box::new(r),
                op,
                arg: Box::new(a)
            })),
            (recv, prop::collection::vec((ident(), inner.clone()), 1..4)).prop_map(|(r, parts)| {
                let selector = parts.iter().map(|(k, _)| format!("{k}:")).collect();
                let args = parts.into_iter().map(|(_, a)| a).collect();
                e(ExprKind::Keyword { recv: Box::new(r), selector, args })
            }),
            (ident(), inner.clone()).prop_map(|(n, v)| e(ExprKind::Assign(n, Box::new(v)))),
            (
                prop::collection::vec(ident(), 0..3),
                prop::collection::vec(ident(), 0..3),
                statements(inner)
            )
                .prop_map(|(params, temps, body)| e(ExprKind::Block { params, temps, body })),
        ]
    })
}

