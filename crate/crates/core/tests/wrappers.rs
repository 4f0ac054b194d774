mod common;

use common::*;
use ghost_runtime::trace::{TraceMode, WrapPhase};
use ghost_runtime::{Runtime, Value};

const MATH: &str = "ObjectRoot subclass: #Math instanceVariableNames: ''.
!Math methodsFor!
fact: n ^ n <= 1 ifTrue: [1] ifFalse: [n * (self fact: n - 1)]! !
m := Math new.";

#[test]
fn recursive_wrapped_method_brackets_depth_five() {
    let (mut rt, _) = run(MATH);
    rt.trace.mode = TraceMode::Interceptions;
    run_in(&mut rt, "h := Ghost wrap: Math selector: #fact:.");
    let m = var(&rt, "m");
    assert_eq!(rt.send(m, "fact:", &[Value::Int(5)]).unwrap(), Value::Int(120));
    let events = wrap_events(&rt);
    assert_eq!(events.len(), 15);
    assert_eq!(check_bracketing(&events), 5);
    let phases: Vec<WrapPhase> = events.iter().map(|e| e.0).collect();
    let mut expect = Vec::new();
    for _ in 0..5 {
        expect.push(WrapPhase::Pre);
        expect.push(WrapPhase::Exec);
    }
    expect.extend([WrapPhase::Post; 5]);
    assert_eq!(phases, expect);
    let h = var(&rt, "h");
    assert_eq!(rt.execution_count(h, "fact:"), 5);
}

#[test]
fn unwrap_restores_the_original_method() {
    let (mut rt, r) = run(&format!(
        "{MATH}
original := Math compiledMethodAt: #fact:.
Ghost wrap: Math selector: #fact:.
self assert: (Ghost isProxy: (Math compiledMethodAt: #fact:)) equals: true.
Ghost unwrap: Math selector: #fact:.
self assert: (Ghost is: (Math compiledMethodAt: #fact:) identicalTo: original) equals: true.
self assert: (m fact: 4) equals: 24."
    ));
    assert_eq!(r.passed, 3, "{:?}", r.failures);
    assert!(run_program_err(&mut rt, "Ghost unwrap: Math selector: #fact:."));
}

fn run_program_err(rt: &mut Runtime, src: &str) -> bool {
    ghost_runtime::script::run_program(rt, src).is_err()
}

fn answer(src: &str, wrap: &str) -> (String, u64) {
    let (rt, r) = run(&src.replace("WRAP", wrap));
    assert!(r.failures.is_empty());
    (rt.describe(r.last), rt.counters.interceptions)
}

#[test]
fn wrapping_preserves_answers_over_the_corpus() {
    let corpus = corpus();
    assert_eq!(corpus.len(), 20);
    for (i, src) in corpus.iter().enumerate() {
        let (plain, none) = answer(src, "");
        assert_eq!(none, 0);
        let (each, n1) = answer(src, "P selectors do: [:s | Ghost wrap: P selector: s].");
        let (all, n2) = answer(src, "Ghost wrapAll: P.");
        assert_eq!(plain, each, "program {i} wrapped per method");
        assert_eq!(plain, all, "program {i} wrapped as a class");
        assert!(n1 > 0 && n2 > 0, "program {i} was not intercepted");
    }
}

#[test]
fn wrap_all_counts_every_instance_side_execution() {
    let (mut rt, _) = run(MATH);
    rt.trace.mode = TraceMode::Interceptions;
    run_in(&mut rt, "h := Ghost wrapAll: Math. r := m fact: 3.");
    assert_eq!(var(&rt, "r"), Value::Int(6));
    let h = var(&rt, "h");
    assert_eq!(rt.execution_count(h, "fact:"), 3);
    check_bracketing(&wrap_events(&rt));
}
