//! Runs every acceptance criterion once, at its time budget, and prints one
//! line per criterion. Exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use ghost_runtime::cli::{run_with, trace_path, ReportFormat, RunConfig, EXIT_OK};
use ghost_runtime::footprint::object_bytes;
use ghost_runtime::script::{parse_expression, parse_program, print_expr};
use ghost_runtime::swapper::{decode_proxy_id, encode_proxy_id, SegmentStore};
use ghost_runtime::trace::{HandlerAction, SendOutcome, TraceMode, TraceRecord, WrapPhase};
use ghost_runtime::{Error, HandlerSpec, ProxyKind, Runtime, Value};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn();

const CRITERIA: &[(u32, &str, u64, Check)] = &[
    (1, "simple forwarder", 1, forwarder),
    (2, "method proxy", 1, method_proxy),
    (3, "class proxy", 1, class_proxy),
    (4, "uniform interception", 5, uniform_interception),
    (5, "dnu baseline contrast", 5, dnu_contrast),
    (6, "become oracle", 10, become_oracle),
    (7, "target leak guard", 1, leak_guard),
    (8, "subclass lookup through class proxy", 1, subclass_lookup),
    (9, "proxy id encoding", 2, proxy_ids),
    (10, "swap round trip", 30, swap_round_trip),
    (11, "footprint model", 5, footprint),
    (12, "cached class proxy", 1, cached_class_proxy),
    (13, "method wrappers", 5, wrappers),
    (14, "debugging table toggle", 1, debugging_table),
    (15, "parser round trip", 10, parser),
    (16, "cli determinism", 10, cli_determinism),
];

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, budget, check) in CRITERIA {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let verdict = match outcome {
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("FAIL ({msg})")
            }
            Ok(()) if took > Duration::from_secs(*budget) => format!("FAIL (over the {budget}s budget)"),
            Ok(()) => "PASS".to_string(),
        };
        if verdict != "PASS" {
            failed += 1;
        }
        println!("criterion {n:2} {name}: {verdict} ({} ms)", took.as_millis());
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn paper_script() -> &'static str {
    include_str!("../scenarios/paper-tests.gs")
}

fn fixtures() -> &'static str {
    let text = paper_script();
    &text[..text.find("\"Simple forwarder\"").unwrap()]
}

fn forwarder() {
    let (rt, r) = run(&format!(
        "{}
proxy := TargetBasedProxy createProxyFor: (Point x: 3 y: 4) handler: SimpleForwarderHandler new.
self assert: proxy x equals: 3.
self assert: proxy y equals: 4.",
        fixtures()
    ));
    assert_eq!(r.passed, 2, "{:?}", r.failures);
    assert_eq!(rt.proxy_kind(var(&rt, "proxy")), Some(ProxyKind::Target));
}

fn method_proxy() {
    let (mut rt, r) = run(&format!(
        "{}
kurt := User named: 'Kurt'.
method := User compiledMethodAt: #username.
mProxy := TargetBasedProxy createProxyAndReplace: method handler: SimpleForwarderHandler new.
self assert: mProxy getSource equals: 'username ^ name'.
self assert: kurt username equals: 'Kurt'.",
        fixtures()
    ));
    assert_eq!(r.passed, 2, "{:?}", r.failures);
    rt.trace.mode = TraceMode::AllSends;
    let kurt = var(&rt, "kurt");
    let answer = rt.send(kurt, "username", &[]).unwrap();
    assert_eq!(rt.text_of(answer).unwrap(), "Kurt");
    let lines = trace_lines(&rt);
    assert!(lines.iter().any(|l| l.ends_with("run:with:in:\ttrapped-CI")), "{lines:?}");
}

fn class_proxy() {
    let (mut rt, r) = run(&format!(
        "{}
kurt := User named: 'Kurt'.
cProxy := TargetBasedClassProxy createProxyAndReplace: User handler: SimpleForwarderHandler new.
self assert: User name equals: #User.
self assert: kurt username equals: 'Kurt'.",
        fixtures()
    ));
    assert_eq!(r.passed, 2, "{:?}", r.failures);
    rt.trace.mode = TraceMode::Interceptions;
    let kurt = var(&rt, "kurt");
    rt.send(kurt, "username", &[]).unwrap();
    let instance = rt.trace.records().iter().any(|r| {
        matches!(r, TraceRecord::Handler { action: HandlerAction::Instance, selector, .. } if selector == "username")
    });
    assert!(instance, "{:?}", trace_lines(&rt));
}

fn recorder_proxy(rt: &mut Runtime) -> Value {
    let target = rt.new_array(vec![Value::Int(1)]);
    let handler = rt.new_handler(HandlerSpec::recorder(), "RecordingHandler").unwrap();
    rt.create_proxy_for(target.into(), handler.into()).unwrap().into()
}

fn uniform_interception() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let suite = selector_suite(&mut rng, 200);
    let mut rt = Runtime::new();
    rt.trace.mode = TraceMode::AllSends;
    let proxy = recorder_proxy(&mut rt);
    for sel in &suite {
        rt.trace.clear();
        rt.send(proxy, sel, &args_for(sel)).unwrap();
        let top = top_sends(&rt);
        assert_eq!(top.len(), 1, "{sel}: {top:?}");
        assert_eq!(top[0].2, SendOutcome::TrappedCi, "{sel}");
    }
    let traps = rt.counters.traps;
    rt.send(proxy, "==", &[proxy]).unwrap();
    rt.send(proxy, "proxyTarget", &[]).unwrap();
    rt.send(proxy, "proxyHandler", &[]).unwrap();
    assert_eq!(rt.counters.traps, traps, "identity or accessors were trapped");
}

fn dnu_contrast() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let suite = selector_suite(&mut rng, 200);
    let (mut rt, _) = run("ObjectRoot subclass: #Sink instanceVariableNames: ''.
!Sink methodsFor!
doesNotUnderstand: aMessage ^ nil! !
ObjectRoot subclass: #DnuProxy instanceVariableNames: 'target'.
Ghost installDnuBaselineOn: DnuProxy.
p := DnuProxy new.
p instVarAt: 1 put: Sink new.");
    rt.trace.mode = TraceMode::AllSends;
    let dnu = var(&rt, "p");
    let ghost = recorder_proxy(&mut rt);
    let mut local = Vec::new();
    for sel in &suite {
        rt.trace.clear();
        rt.send(ghost, sel, &args_for(sel)).unwrap();
        assert_eq!(top_sends(&rt)[0].2, SendOutcome::TrappedCi, "{sel}");
        rt.trace.clear();
        let _ = rt.send(dnu, sel, &args_for(sel));
        if top_sends(&rt)[0].2 != SendOutcome::TrappedDnu {
            local.push(sel.as_str());
        }
    }
    assert!(local.contains(&"pointersTo"), "{local:?}");
}

fn become_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n = rng.gen_range(2..=200);
        let mut rt = Runtime::new();
        let nodes = random_graph(&mut rt, &mut rng, n);
        let (a, b) = (nodes[rng.gen_range(0..n)], nodes[rng.gen_range(0..n)]);
        let vars: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
        for name in &vars {
            let v = [a, b, nodes[rng.gen_range(0..n)]][rng.gen_range(0..3)];
            rt.set_variable(name, v.into());
        }
        let (sa, sb) = (serial(&rt, a.into()).unwrap(), serial(&rt, b.into()).unwrap());
        let before = reference_sets(&rt, &vars);
        let ids = identity_matrix(&rt, &vars);
        rt.swap_identity(a.into(), b.into()).unwrap();
        let after = reference_sets(&rt, &vars);
        assert_eq!(after.get(&sb), before.get(&sa));
        assert_eq!(after.get(&sa), before.get(&sb));
        for (s, refs) in &before {
            if *s != sa && *s != sb {
                assert_eq!(after.get(s), Some(refs));
            }
        }
        assert_eq!(identity_matrix(&rt, &vars), ids);
    }
    let mut rt = Runtime::new();
    let x = rt.new_array(vec![]);
    let sym = rt.intern("foo");
    for bad in [Value::Int(3), Value::Nil, sym.into()] {
        assert!(matches!(rt.swap_identity(bad, x.into()), Err(Error::RefusedBecome(_))));
    }
}

fn leak_guard() {
    let (_, r) = run("ObjectRoot subclass: #Leaky instanceVariableNames: ''.
!Leaky methodsFor!
me ^ self! !
t := Leaky new.
proxy := TargetBasedProxy createProxyFor: t handler: SimpleForwarderHandler new.
a := proxy me.
self assert: (Ghost is: a identicalTo: proxy) equals: true.
self assert: (Ghost is: a identicalTo: t) equals: false.");
    assert_eq!(r.passed, 2, "{:?}", r.failures);
}

const ZOO: &str = "ObjectRoot subclass: #Animal instanceVariableNames: 'name'.
Animal subclass: #Dog instanceVariableNames: 'tricks'.
!Animal methodsFor!
setName: s name := s!
describe ^ 'I am ' , name!
speak ^ self sound , '!'!
sound ^ '...'!
legs ^ 4! !
!Dog methodsFor!
sound ^ 'Woof'!
describe ^ super describe , ' the dog'! !
d := Dog new.
d setName: 'Rex'.
a := Animal new.
a setName: 'Generic'.
PROXY
Array with: (Array with: d describe with: d speak with: d legs) with: (Array with: a describe with: a speak) with: (d respondsTo: #legs)";

fn subclass_lookup() {
    let (plain, r1) = run(&ZOO.replace("PROXY", ""));
    let (proxied, r2) = run(&ZOO.replace(
        "PROXY",
        "TargetBasedClassProxy createProxyAndReplace: Animal handler: SimpleForwarderHandler new.",
    ));
    assert_eq!(proxied.proxy_kind(proxied.global("Animal").unwrap()), Some(ProxyKind::Class));
    assert_eq!(plain.describe(r1.last), proxied.describe(r2.last));
}

fn proxy_ids() {
    assert_eq!(encode_proxy_id(1, 2).unwrap(), 65538);
    assert_eq!(encode_proxy_id((1 << 15) - 1, (1 << 16) - 1).unwrap(), (1 << 31) - 1);
    assert!(matches!(encode_proxy_id(1 << 15, 0), Err(Error::Encoding(_))));
    assert!(matches!(encode_proxy_id(0, 1 << 16), Err(Error::Encoding(_))));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let (g, p) = (rng.gen_range(0..1u32 << 15), rng.gen_range(0..1u32 << 16));
        let id = encode_proxy_id(g, p).unwrap();
        assert_eq!(decode_proxy_id(id).unwrap(), (g as u16, p as u16));
    }
}

const BANK: &str = "ObjectRoot subclass: #Account instanceVariableNames: 'owner balance history'.
!Account methodsFor!
setOwner: aString owner := aString. balance := 0. history := Array new: 0!
deposit: n balance := balance + n. history := Array with: n with: history. ^ balance!
withdraw: n n > balance ifTrue: [^ self error: 'overdrawn']. balance := balance - n. ^ balance!
owner ^ owner!
depth | d h | d := 0. h := history. [h isEmpty] whileFalse: [d := d + 1. h := h second]. ^ d! !
acct := Account new.
acct setOwner: 'Ada'.
a1 := acct deposit: 40.
SWAP
a2 := acct deposit: 2.
a3 := acct withdraw: 10.
a4 := acct owner , '!'.
a5 := acct depth.
Array with: (Array with: a1 with: a2 with: a3) with: a4 with: a5";

fn swap_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..50 {
        let n = rng.gen_range(1..=500);
        let mut rt = Runtime::new();
        if i % 2 == 1 {
            rt.set_segment_store(SegmentStore::directory(dir.path().join(format!("g{i}"))).unwrap());
        }
        let nodes = random_graph(&mut rt, &mut rng, n);
        let root: Value = nodes[0].into();
        rt.set_variable("root", root);
        let before = signature(&rt, root);
        let g = rt.swap_out(&[root]).unwrap();
        assert_eq!(rt.proxy_kind(root), Some(ProxyKind::Marea));
        rt.swap_in(g).unwrap();
        assert_eq!(signature(&rt, root), before);
        assert!(matches!(rt.swap_in(g), Err(Error::SwapFault(_))));
    }
    let (plain, r1) = run(&BANK.replace("SWAP", ""));
    let (swapped, r2) = run(&BANK.replace("SWAP", "Ghost swapOut: acct."));
    assert_eq!(plain.describe(r1.last), swapped.describe(r2.last));
    assert_eq!(swapped.counters.swap_ins, 1);
}

fn footprint() {
    let (mut rt, _) = run("ObjectRoot subclass: #Pair instanceVariableNames: 'a b'.
p := Pair new.
tp := TargetBasedProxy createProxyFor: p handler: SimpleForwarderHandler new.
head := Array with: 1.
Ghost swapOut: head.");
    assert_eq!(rt.footprint_of(var(&rt, "p")), 16);
    assert_eq!(rt.footprint_of(var(&rt, "tp")), 12);
    assert_eq!(rt.footprint_of(var(&rt, "head")), 8);
    let handler = rt.new_handler(HandlerSpec::forwarder(), "SimpleForwarderHandler").unwrap();
    assert_eq!(rt.footprint_of(handler.into()), 8);

    let mut last = 0;
    for n in [1usize, 10, 100] {
        let mut rt = Runtime::new();
        let class = node_class(&mut rt, "Node", 3);
        let nodes: Vec<_> = (0..n).map(|_| rt.instantiate(class).unwrap()).collect();
        for w in nodes.windows(2) {
            rt.slot_write(w[0].into(), 1, w[1].into()).unwrap();
        }
        rt.set_variable("head", nodes[0].into());
        let members = rt.footprint_total(nodes.iter().map(|h| Value::Ref(*h)));
        assert_eq!(members, n * object_bytes(false, 12));
        let live = rt.live_footprint() as i64;
        rt.swap_out(&[nodes[0].into()]).unwrap();
        let saved = live - rt.live_footprint() as i64;
        let report = rt.report();
        assert_eq!(saved, members as i64 - 8);
        assert_eq!(report.bytes_before as i64 - report.bytes_after as i64, saved);
        assert!(saved > last);
        last = saved;
    }
}

fn cached_class_proxy() {
    let (mut rt, _) = run("ObjectRoot subclass: #Foo instanceVariableNames: 'x'.
!Foo methodsFor!
bar ^ 42! !
f := Foo new.
Ghost swapOut: Foo.");
    let foo = rt.global("Foo").unwrap();
    assert_eq!(rt.proxy_kind(foo), Some(ProxyKind::MareaClass));
    let t = rt.boolean(true);
    let f = rt.boolean(false);
    assert_eq!(rt.send(foo, "isBehavior", &[]).unwrap(), t);
    assert_eq!(rt.send(foo, "isInstanceSide", &[]).unwrap(), t);
    assert_eq!(rt.send(foo, "isClassSide", &[]).unwrap(), f);
    assert_eq!(rt.send(foo, "isMeta", &[]).unwrap(), f);
    let side = rt.send(foo, "instanceSide", &[]).unwrap();
    assert!(rt.identical(side, foo));
    assert_eq!(rt.counters.swap_ins, 0);
    let inst = var(&rt, "f");
    assert_eq!(rt.send(inst, "bar", &[]).unwrap(), Value::Int(42));
    assert_eq!(rt.counters.swap_ins, 1);
}

fn wrappers() {
    let (mut rt, _) = run("ObjectRoot subclass: #Math instanceVariableNames: ''.
!Math methodsFor!
fact: n ^ n <= 1 ifTrue: [1] ifFalse: [n * (self fact: n - 1)]! !
m := Math new.
h := Ghost wrap: Math selector: #fact:.");
    rt.trace.mode = TraceMode::Interceptions;
    let m = var(&rt, "m");
    assert_eq!(rt.send(m, "fact:", &[Value::Int(5)]).unwrap(), Value::Int(120));
    let events = wrap_events(&rt);
    assert_eq!(check_bracketing(&events), 5);
    let pre = events.iter().filter(|e| e.0 == WrapPhase::Pre).count();
    let post = events.iter().filter(|e| e.0 == WrapPhase::Post).count();
    assert_eq!((pre, post), (5, 5));
    let h = var(&rt, "h");
    assert_eq!(rt.execution_count(h, "fact:"), 5);

    let answer = |src: &str, wrap: &str| {
        let (rt, r) = run(&src.replace("WRAP", wrap));
        assert!(r.failures.is_empty());
        rt.describe(r.last)
    };
    let corpus = corpus();
    assert_eq!(corpus.len(), 20);
    for (i, src) in corpus.iter().enumerate() {
        let plain = answer(src, "");
        assert_eq!(plain, answer(src, "P selectors do: [:s | Ghost wrap: P selector: s]."), "program {i}");
        assert_eq!(plain, answer(src, "Ghost wrapAll: P."), "program {i}");
    }
}

fn debugging_table() {
    let (mut rt, _) = run("ObjectRoot subclass: #Pt instanceVariableNames: 'x'.
h := SimpleForwarderHandler new.
proxy := TargetBasedProxy createProxyFor: Pt new handler: h.
h enableDebugging.");
    let proxy = var(&rt, "proxy");
    let h = var(&rt, "h");
    let on = rt.send(proxy, "printString", &[]).unwrap();
    assert_eq!(rt.text_of(on).unwrap(), "Proxy(a Pt)");
    rt.send(h, "clearSpecialMessages", &[]).unwrap();
    let off = rt.send(proxy, "printString", &[]).unwrap();
    assert_eq!(rt.text_of(off).unwrap(), "a Pt");
}

fn parser() {
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&expr(), |ast| {
            let text = print_expr(&ast);
            let parsed = parse_expression(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(parsed, ast, "{text}");
            Ok(())
        })
        .unwrap();
    for text in [
        paper_script(),
        include_str!("../scenarios/swap.gs"),
        include_str!("../scenarios/wrap.gs"),
    ] {
        parse_program(text).unwrap();
    }
    let (_, r) = run(paper_script());
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    assert_eq!(r.passed, 6);
}

fn cli_determinism() {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let mut outputs = Vec::new();
        for name in ["paper-tests.gs", "swap.gs", "wrap.gs"] {
            let script = dir.path().join(name);
            std::fs::copy(scenarios.join(name), &script).unwrap();
            let mut config = RunConfig::new(&script);
            config.report_format = ReportFormat::Json;
            config.trace_mode = TraceMode::AllSends;
            config.seed = 42;
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let code = run_with(&config, &mut out, &mut err);
            assert_eq!(code, EXIT_OK, "{name}: {}", String::from_utf8_lossy(&err));
            outputs.push((out, std::fs::read(trace_path(&script)).unwrap()));
        }
        runs.push(outputs);
    }
    assert_eq!(runs[0], runs[1]);
}
