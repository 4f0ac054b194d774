//! Bodies of the built-in methods.
//!
//! A primitive answers `Ok(None)` when its receiver or arguments have the
//! wrong type; the dispatcher then continues lookup above the defining class.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ghost::{debugging_table, HandlerSpec};
use crate::heap::{Extra, HeapObject};
use crate::primitives::Prim;
use crate::runtime::{Referrer, Runtime, CLS_IVARS, CLS_INST_SIZE, CLS_NAME, CLS_SUPER, META_THIS, METHOD_SELECTOR, METHOD_SOURCE};
use crate::script::ast::selector_arity;
use crate::script::eval::{block_closure, call_block, structurally_equal};
use crate::value::{Handle, Value};

type PrimResult = Result<Option<Value>>;

fn int(v: Value) -> Option<i64> {
    v.as_int()
}

fn overflow(op: &str) -> Error {
    Error::PrimitiveFailed(format!("integer overflow in #{op}"))
}

impl Runtime {
    pub(crate) fn run_primitive(&mut self, prim: Prim, recv: Value, args: &[Value], def: Handle, _method: Handle) -> PrimResult {
        use Prim::*;
        let home = prim.home();
        let r = match home {
            "ObjectRoot" => self.prim_object(prim, recv, args)?,
            "Boolean" => self.prim_boolean(prim, recv, args)?,
            "SmallInteger" => self.prim_integer(prim, recv, args)?,
            "String" | "Symbol" => self.prim_string(prim, recv, args)?,
            "Array" | "Array class" => self.prim_array(prim, recv, args)?,
            "BlockClosure" => self.prim_block(prim, recv, args)?,
            "CompiledMethod" | "Message" | "Interception" => self.prim_reflective(prim, recv, args)?,
            "Class" | "Metaclass" => self.prim_class(prim, recv, args)?,
            "TranscriptStream" => {
                if prim == Show {
                    let text = self.text_of(args[0]).unwrap_or_else(|| self.describe(args[0]));
                    self.log(text);
                }
                Some(recv)
            }
            "GhostFacade" => self.prim_ghost(prim, recv, args)?,
            "ProxyHandler" => self.prim_handler(prim, recv, args)?,
            _ => self.prim_proxy(prim, recv, args)?,
        };
        let _ = def;
        Ok(r)
    }

    /// Evaluate a block argument (or any object) by sending it `value`.
    fn value_of(&mut self, v: Value) -> Result<Value> {
        self.send(v, "value", &[])
    }

    /// `value:` for one-argument blocks, `value` otherwise.
    fn cull(&mut self, block: Value, arg: Value) -> Result<Value> {
        match block_closure(self, block) {
            Ok(c) if c.params.len() == 1 => self.send(block, "value:", &[arg]),
            _ => self.value_of(block),
        }
    }

    fn truth_of(&self, v: Value, what: &str) -> Result<bool> {
        self.truth(v)
            .ok_or_else(|| Error::PrimitiveFailed(format!("{what} answered {}, not a boolean", self.describe(v))))
    }

    fn selector_arg(&self, v: Value) -> Result<Handle> {
        match v {
            Value::Ref(h) if self.is_symbol(v) => Ok(h),
            _ => Err(Error::PrimitiveFailed(format!("{} is not a selector", self.describe(v)))),
        }
    }

    fn str_value(&mut self, s: &str) -> Value {
        self.new_string(s).into()
    }

    fn prim_object(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        Ok(Some(match prim {
            Equal => self.boolean(self.identical(recv, args[0])),
            NotEqual => {
                let eq = self.send(recv, "=", args)?;
                let b = self.truth_of(eq, "=")?;
                self.boolean(!b)
            }
            NotIdentical => self.boolean(!self.identical(recv, args[0])),
            IdentityHash | Hash => match recv {
                Value::Ref(h) => Value::Int(self.resolve(h)?.ordinal() as i64),
                Value::Int(i) => Value::Int(i),
                Value::Nil => Value::Int(0),
            },
            Class => self.class_of(recv)?.into(),
            Yourself | ValueSelf => recv,
            IsNil => self.boolean(recv.is_nil()),
            NotNil => self.boolean(!recv.is_nil()),
            IfNil => {
                if recv.is_nil() {
                    self.value_of(args[0])?
                } else {
                    recv
                }
            }
            IfNotNil => {
                if recv.is_nil() {
                    Value::Nil
                } else {
                    self.cull(args[0], recv)?
                }
            }
            IfNilIfNotNil => {
                if recv.is_nil() {
                    self.value_of(args[0])?
                } else {
                    self.cull(args[1], recv)?
                }
            }
            IfNotNilIfNil => {
                if recv.is_nil() {
                    self.value_of(args[1])?
                } else {
                    self.cull(args[0], recv)?
                }
            }
            PrintString => {
                let s = self.describe(recv);
                self.str_value(&s)
            }
            DisplayString => {
                let s = self.text_of(recv).unwrap_or_else(|| self.describe(recv));
                self.str_value(&s)
            }
            PrintStringLimitedTo => {
                let Some(n) = int(args[0]) else { return Ok(None) };
                let s: String = self.describe(recv).chars().take(n.max(0) as usize).collect();
                self.str_value(&s)
            }
            Inspect | BasicInspect => {
                let s = format!("Inspector on {}", self.describe(recv));
                self.str_value(&s)
            }
            InspectorClass => self.intern("Inspector").into(),
            DoesNotUnderstand => {
                let (sel, _, _) = self.message_parts(args[0])?;
                let class = self.class_of(recv)?;
                return Err(Error::DoesNotUnderstand {
                    class: self.describe_class(class),
                    selector: self.symbol_text(sel.into()).unwrap_or_default(),
                });
            }
            PointersTo => {
                let mut holders: Vec<Value> = Vec::new();
                for r in self.references_to(recv) {
                    let h = match r {
                        Referrer::Slot { holder, .. } | Referrer::Class { holder } => holder,
                        _ => continue,
                    };
                    if !holders.contains(&h.into()) {
                        holders.push(h.into());
                    }
                }
                self.new_array(holders).into()
            }
            InstVarAt => {
                let Some(i) = int(args[0]) else { return Ok(None) };
                let idx = usize::try_from(i - 1).map_err(|_| Error::SlotIndex { index: 0, len: 0 })?;
                self.slot_read(recv, idx)?
            }
            InstVarAtPut => {
                let Some(i) = int(args[0]) else { return Ok(None) };
                let idx = usize::try_from(i - 1).map_err(|_| Error::SlotIndex { index: 0, len: 0 })?;
                self.slot_write(recv, idx, args[1])?;
                args[1]
            }
            Become => {
                self.swap_identity(recv, args[0])?;
                recv
            }
            BecomeForward => {
                self.become_forward(recv, args[0])?;
                args[0]
            }
            SignalError => {
                let text = self.text_of(args[0]).unwrap_or_else(|| self.describe(args[0]));
                return Err(Error::PrimitiveFailed(format!("error: {text}")));
            }
            Perform | PerformWith | PerformWithWith => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                self.send(recv, &text, &args[1..])?
            }
            PerformWithArguments => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                let items = self.array_items(args[1])?;
                self.send(recv, &text, &items)?
            }
            RespondsTo => {
                let sel = self.selector_arg(args[0])?;
                let class = self.class_of(recv)?;
                let found = self.understands(sel, class)?;
                self.boolean(found)
            }
            IsKindOf => {
                let mut cur: Value = self.class_of(recv)?.into();
                let mut found = false;
                while let Value::Ref(c) = cur {
                    if self.identical(cur, args[0]) {
                        found = true;
                        break;
                    }
                    cur = self.slot_read(c.into(), CLS_SUPER)?;
                }
                self.boolean(found)
            }
            IsBehavior => self.boolean(false),
            IsString => self.boolean(self.text_of(recv).is_some()),
            IsSymbol => self.boolean(self.is_symbol(recv)),
            IsInteger => self.boolean(matches!(recv, Value::Int(_))),
            Copy => match recv {
                Value::Ref(h) => {
                    let obj = self.heap.get(h)?.clone();
                    let mut fresh = HeapObject::slotted(obj.class, obj.slots.clone());
                    fresh.bytes = obj.bytes.clone();
                    fresh.extra = match obj.extra {
                        Extra::Handler(_) => Extra::None,
                        e => e,
                    };
                    self.alloc(fresh).into()
                }
                other => other,
            },
            _ => unreachable!("{prim:?} is not an ObjectRoot primitive"),
        }))
    }

    /// Whether lookup of `sel` from `class` reaches a method, looking
    /// through class proxies to the classes they stand for.
    fn understands(&mut self, sel: Handle, class: Handle) -> Result<bool> {
        use crate::dispatch::Lookup;
        use crate::ghost::ProxyKind;
        let mut start: Value = class.into();
        for _ in 0..64 {
            match self.lookup_sym(sel, start)? {
                Lookup::Found(..) => return Ok(true),
                Lookup::NotFound => return Ok(false),
                Lookup::NilDictionary(c) => match self.proxy_kind(c.into()) {
                    Some(ProxyKind::Class) => start = self.proxy_target(c.into())?,
                    Some(ProxyKind::MareaClass) => {
                        let graph = self.marea_graph_of(c.into())?;
                        self.swap_in(graph)?;
                        start = c.into();
                    }
                    _ => return Ok(false),
                },
            }
        }
        Err(Error::FatalRuntime("class proxies nest too deeply".into()))
    }

    fn prim_boolean(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        let Some(b) = self.truth(recv) else { return Ok(None) };
        Ok(Some(match prim {
            IfTrue => {
                if b {
                    self.value_of(args[0])?
                } else {
                    Value::Nil
                }
            }
            IfFalse => {
                if b {
                    Value::Nil
                } else {
                    self.value_of(args[0])?
                }
            }
            IfTrueIfFalse => self.value_of(if b { args[0] } else { args[1] })?,
            IfFalseIfTrue => self.value_of(if b { args[1] } else { args[0] })?,
            And => {
                if b {
                    self.value_of(args[0])?
                } else {
                    recv
                }
            }
            Or => {
                if b {
                    recv
                } else {
                    self.value_of(args[0])?
                }
            }
            Not => self.boolean(!b),
            AndEager => {
                let Some(o) = self.truth(args[0]) else { return Ok(None) };
                self.boolean(b && o)
            }
            OrEager => {
                let Some(o) = self.truth(args[0]) else { return Ok(None) };
                self.boolean(b || o)
            }
            _ => unreachable!("{prim:?} is not a Boolean primitive"),
        }))
    }

    fn prim_integer(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        let Some(a) = int(recv) else { return Ok(None) };
        let arg = args.first().copied().and_then(int);
        macro_rules! need {
            () => {
                match arg {
                    Some(b) => b,
                    None => return Ok(None),
                }
            };
        }
        Ok(Some(match prim {
            Add => Value::Int(a.checked_add(need!()).ok_or_else(|| overflow("+"))?),
            Sub => Value::Int(a.checked_sub(need!()).ok_or_else(|| overflow("-"))?),
            Mul => Value::Int(a.checked_mul(need!()).ok_or_else(|| overflow("*"))?),
            Div => {
                let b = need!();
                if b == 0 {
                    return Err(Error::PrimitiveFailed("division by zero".into()));
                }
                Value::Int(a.checked_div_euclid(b).ok_or_else(|| overflow("//"))? - i64::from(b < 0 && a.rem_euclid(b) != 0))
            }
            Mod => {
                let b = need!();
                if b == 0 {
                    return Err(Error::PrimitiveFailed("division by zero".into()));
                }
                let m = a.rem_euclid(b);
                Value::Int(if b < 0 && m != 0 { m + b } else { m })
            }
            Less => self.boolean(a < need!()),
            Greater => self.boolean(a > need!()),
            LessEq => self.boolean(a <= need!()),
            GreaterEq => self.boolean(a >= need!()),
            IntEqual => self.boolean(arg == Some(a)),
            IntNotEqual => self.boolean(arg != Some(a)),
            Max => Value::Int(a.max(need!())),
            Min => Value::Int(a.min(need!())),
            Abs => Value::Int(a.checked_abs().ok_or_else(|| overflow("abs"))?),
            Negated => Value::Int(a.checked_neg().ok_or_else(|| overflow("negated"))?),
            BitAnd => Value::Int(a & need!()),
            BitOr => Value::Int(a | need!()),
            BitXor => Value::Int(a ^ need!()),
            BitShift => {
                let b = need!();
                if b >= 0 {
                    let s = u32::try_from(b).map_err(|_| overflow("bitShift:"))?;
                    let r = a.checked_shl(s).filter(|r| r >> s == a).ok_or_else(|| overflow("bitShift:"))?;
                    Value::Int(r)
                } else {
                    Value::Int(a >> (-b).min(63))
                }
            }
            ToDo => {
                let end = need!();
                let mut i = a;
                while i <= end {
                    self.send(args[1], "value:", &[Value::Int(i)])?;
                    i += 1;
                }
                recv
            }
            TimesRepeat => {
                for _ in 0..a.max(0) {
                    self.value_of(args[0])?;
                }
                recv
            }
            Between => {
                let (Some(lo), Some(hi)) = (int(args[0]), int(args[1])) else { return Ok(None) };
                self.boolean(lo <= a && a <= hi)
            }
            IsZero => self.boolean(a == 0),
            Even => self.boolean(a % 2 == 0),
            AsString => self.str_value(&a.to_string()),
            _ => unreachable!("{prim:?} is not a SmallInteger primitive"),
        }))
    }

    fn prim_string(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        let Some(s) = self.text_of(recv) else { return Ok(None) };
        Ok(Some(match prim {
            StrSize => Value::Int(s.len() as i64),
            StrAt => {
                let Some(i) = int(args[0]) else { return Ok(None) };
                let bytes = s.as_bytes();
                let idx = usize::try_from(i - 1).ok().filter(|x| *x < bytes.len()).ok_or(Error::SlotIndex {
                    index: i.max(0) as usize,
                    len: bytes.len(),
                })?;
                let c = String::from_utf8_lossy(&bytes[idx..=idx]).into_owned();
                self.str_value(&c)
            }
            StrConcat => {
                let Some(t) = self.text_of(args[0]) else { return Ok(None) };
                self.str_value(&(s + &t))
            }
            StrEqual => self.boolean(self.text_of(args[0]).as_deref() == Some(s.as_str())),
            StrAsSymbol => self.intern(&s).into(),
            StrAsString => recv,
            SymAsString => self.str_value(&s),
            SymNumArgs => Value::Int(selector_arity(&s) as i64),
            StrIsEmpty => self.boolean(s.is_empty()),
            StrIncludesSubstring => {
                let Some(t) = self.text_of(args[0]) else { return Ok(None) };
                self.boolean(s.contains(&t))
            }
            StrReversed => self.str_value(&s.chars().rev().collect::<String>()),
            _ => unreachable!("{prim:?} is not a String primitive"),
        }))
    }

    fn array_index(&self, items: &[Value], i: Value) -> Result<Option<usize>> {
        let Some(i) = int(i) else { return Ok(None) };
        match usize::try_from(i - 1) {
            Ok(x) if x < items.len() => Ok(Some(x)),
            _ => Err(Error::SlotIndex {
                index: i.max(0) as usize,
                len: items.len(),
            }),
        }
    }

    fn prim_array(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        match prim {
            ArrWith | ArrWithWith | ArrWithWithWith => return Ok(Some(self.new_array(args.to_vec()).into())),
            ArrNew => {
                let (Some(n), Value::Ref(c)) = (int(args[0]), recv) else { return Ok(None) };
                return Ok(Some(self.instantiate_sized(c, n.max(0) as usize)?.into()));
            }
            _ => {}
        }
        if !self.is_array(recv) {
            return Ok(None);
        }
        let items = self.array_items(recv)?;
        let nth = |n: usize| {
            items.get(n).copied().ok_or(Error::SlotIndex {
                index: n + 1,
                len: items.len(),
            })
        };
        Ok(Some(match prim {
            ArrSize => Value::Int(items.len() as i64),
            ArrAt => match self.array_index(&items, args[0])? {
                Some(i) => items[i],
                None => return Ok(None),
            },
            ArrAtPut => match self.array_index(&items, args[0])? {
                Some(i) => {
                    self.slot_write(recv, i, args[1])?;
                    args[1]
                }
                None => return Ok(None),
            },
            ArrFirst => nth(0)?,
            ArrSecond => nth(1)?,
            ArrThird => nth(2)?,
            ArrLast => nth(items.len().wrapping_sub(1))?,
            ArrDo => {
                for x in &items {
                    self.send(args[0], "value:", &[*x])?;
                }
                recv
            }
            ArrCollect => {
                let mut out = Vec::with_capacity(items.len());
                for x in &items {
                    out.push(self.send(args[0], "value:", &[*x])?);
                }
                self.new_array(out).into()
            }
            ArrSelect => {
                let mut out = Vec::new();
                for x in &items {
                    let keep = self.send(args[0], "value:", &[*x])?;
                    if self.truth_of(keep, "select: block")? {
                        out.push(*x);
                    }
                }
                self.new_array(out).into()
            }
            ArrInjectInto => {
                let mut acc = args[0];
                for x in &items {
                    acc = self.send(args[1], "value:value:", &[acc, *x])?;
                }
                acc
            }
            ArrIncludes => {
                let mut found = false;
                for x in &items {
                    let eq = self.send(*x, "=", &[args[0]])?;
                    if self.truth(eq) == Some(true) {
                        found = true;
                        break;
                    }
                }
                self.boolean(found)
            }
            ArrIsEmpty => self.boolean(items.is_empty()),
            ArrEqual => self.boolean(structurally_equal(self, recv, args[0])),
            _ => unreachable!("{prim:?} is not an Array primitive"),
        }))
    }

    fn prim_block(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        let Ok(closure) = block_closure(self, recv) else { return Ok(None) };
        Ok(Some(match prim {
            BlockValue | BlockValue1 | BlockValue2 | BlockValue3 => call_block(self, recv, args)?,
            BlockValueWithArguments => {
                let items = self.array_items(args[0])?;
                call_block(self, recv, &items)?
            }
            BlockNumArgs => Value::Int(closure.params.len() as i64),
            BlockWhileTrue | BlockWhileFalse => {
                let want = prim == BlockWhileTrue;
                loop {
                    let c = self.value_of(recv)?;
                    if self.truth_of(c, "loop condition")? != want {
                        break;
                    }
                    self.value_of(args[0])?;
                }
                Value::Nil
            }
            BlockWhileTrue0 => {
                loop {
                    let c = self.value_of(recv)?;
                    if !self.truth_of(c, "loop condition")? {
                        break;
                    }
                }
                Value::Nil
            }
            _ => unreachable!("{prim:?} is not a BlockClosure primitive"),
        }))
    }

    fn prim_reflective(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        Ok(Some(match prim {
            MethGetSource => {
                let src = self.slot_read(recv, METHOD_SOURCE)?;
                if src.is_nil() {
                    let sel = self.slot_read(recv, METHOD_SELECTOR)?;
                    let text = format!("<primitive: {}>", self.symbol_text(sel).unwrap_or_default());
                    self.str_value(&text)
                } else {
                    let text = self.text_of(src).unwrap_or_default();
                    self.str_value(&text)
                }
            }
            MethSelector | MsgSelector => self.slot_read(recv, 0)?,
            MethClass | MsgArguments => self.slot_read(recv, 1)?,
            MethNumArgs => self.slot_read(recv, 4)?,
            MethSendsSelector => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                let sends = match self.method_entry(recv)? {
                    crate::method::MethodEntry::Compiled { code, .. } => code.sends_selector(&text),
                    _ => false,
                };
                self.boolean(sends)
            }
            MethValueWithReceiver => {
                let entry = self.method_entry(recv)?;
                let items = self.array_items(args[1])?;
                self.value_with_receiver(&entry, args[0], &items)?
            }
            MethRunWithIn => {
                let entry = self.method_entry(recv)?;
                let items = self.array_items(args[1])?;
                self.execute_method(&entry, args[2], &items)?
            }
            MsgLookupClass => self.slot_read(recv, 2)?,
            MsgSendTo => {
                let (sel, margs, _) = self.message_parts(recv)?;
                self.send_sym(args[0], sel, &margs)?
            }
            IcMessage => self.slot_read(recv, 0)?,
            IcProxy => self.slot_read(recv, 1)?,
            IcReceiver => self.slot_read(recv, 2)?,
            _ => unreachable!("{prim:?} is not a reflective primitive"),
        }))
    }

    fn inherits_from(&self, class: Handle, ancestor: Handle) -> Result<bool> {
        let target = self.resolve(ancestor)?;
        let mut cur: Value = class.into();
        while let Value::Ref(c) = cur {
            let c = self.resolve(c)?;
            if c == target {
                return Ok(true);
            }
            cur = self.slot_read(c.into(), CLS_SUPER)?;
        }
        Ok(false)
    }

    fn new_handler_of_class(&mut self, class: Handle) -> Result<Value> {
        let mut spec = HandlerSpec::forwarder();
        let mut cur: Value = class.into();
        while let Value::Ref(c) = cur {
            match self.class_name(c).as_deref() {
                Some("RecordingHandler") => {
                    spec = HandlerSpec::recorder();
                    break;
                }
                Some("MethodWrapperHandler") => {
                    spec = HandlerSpec::method_wrapper();
                    break;
                }
                Some("MareaProxyHandler") => {
                    spec = HandlerSpec::marea();
                    break;
                }
                Some("SimpleForwarderHandler") | Some("ProxyHandler") => break,
                _ => cur = self.slot_read(c.into(), CLS_SUPER)?,
            }
        }
        self.handlers.push(spec);
        let id = self.handlers.len() - 1;
        Ok(self
            .alloc(HeapObject::slotted(class, Vec::new()).with_extra(Extra::Handler(id)))
            .into())
    }

    fn prim_class(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        let Value::Ref(c) = recv else { return Ok(None) };
        let c = self.resolve(c)?;
        Ok(Some(match prim {
            ClsNew => {
                if self.inherits_from(c, self.k.proxy_handler)? {
                    self.new_handler_of_class(c)?
                } else {
                    self.instantiate(c)?.into()
                }
            }
            ClsBasicNew => self.instantiate(c)?.into(),
            ClsNewSized => {
                let Some(n) = int(args[0]) else { return Ok(None) };
                self.instantiate_sized(c, n.max(0) as usize)?.into()
            }
            ClsName => self.slot_read(recv, CLS_NAME)?,
            ClsSuperclass => self.slot_read(recv, CLS_SUPER)?,
            ClsCompiledMethodAt => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                self.method_at(c, &text)?.ok_or_else(|| Error::UnboundSelector {
                    class: self.describe_class(c),
                    selector: text.clone(),
                })?
            }
            ClsIncludesSelector => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                let found = self.method_at(c, &text)?.is_some();
                self.boolean(found)
            }
            ClsSelectors => {
                let sels: Vec<Value> = match self.slot_read(recv, crate::runtime::CLS_DICT)? {
                    Value::Ref(d) => self.dict_selectors(d)?.into_iter().map(Value::Ref).collect(),
                    _ => Vec::new(),
                };
                self.new_array(sels).into()
            }
            ClsInstanceVariableNames => self.slot_read(recv, CLS_IVARS)?,
            ClsInstSize => self.slot_read(recv, CLS_INST_SIZE)?,
            ClsIsBehavior => self.boolean(true),
            ClsIsClassSide | ClsIsMeta => self.boolean(false),
            ClsIsInstanceSide => self.boolean(true),
            ClsInstanceSide => recv,
            ClsPrintString => {
                let name = self.describe_class(c);
                self.str_value(&name)
            }
            ClsInheritsFrom => match (self.slot_read(recv, CLS_SUPER)?, args[0]) {
                (Value::Ref(s), Value::Ref(a)) => self.boolean(self.inherits_from(s, a)?),
                _ => self.boolean(false),
            },
            MetaIsClassSide | MetaIsMeta => self.boolean(true),
            MetaIsInstanceSide => self.boolean(false),
            MetaInstanceSide => self.slot_read(recv, META_THIS)?,
            _ => unreachable!("{prim:?} is not a Class primitive"),
        }))
    }

    fn class_arg(&self, v: Value) -> Result<Handle> {
        match v {
            Value::Ref(h) => self.resolve(h),
            other => Err(Error::NotClassShaped(self.describe(other))),
        }
    }

    fn int_arg(&self, v: Value) -> Result<i64> {
        v.as_int()
            .ok_or_else(|| Error::PrimitiveFailed(format!("{} is not an integer", self.describe(v))))
    }

    fn prim_ghost(&mut self, prim: Prim, _recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        Ok(Some(match prim {
            GhostProxyFor => self.create_proxy_for(args[0], args[1])?.into(),
            GhostReplace => self.create_proxy_and_replace(args[0], args[1])?.into(),
            GhostReplaceClass => {
                let c = self.class_arg(args[0])?;
                self.create_class_proxy_and_replace(c, args[1])?.into()
            }
            GhostReplaceMethod => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                let c = self.class_arg(args[1])?;
                self.create_method_proxy_and_replace(c, &text, args[2])?.into()
            }
            GhostForwarder => self.new_forwarder()?.into(),
            GhostRecorder => self.new_handler(HandlerSpec::recorder(), "RecordingHandler")?.into(),
            GhostDebuggingTable => {
                let keys: Vec<Value> = debugging_table().keys().map(|k| self.intern(k).into()).collect();
                self.new_array(keys).into()
            }
            GhostTargetOf => self.proxy_target(args[0])?,
            GhostHandlerOf => self.proxy_handler(args[0])?,
            GhostIsProxy => self.boolean(self.proxy_kind(args[0]).is_some()),
            GhostClassOf => self.class_of(args[0])?.into(),
            GhostIdentical => self.boolean(self.identical(args[0], args[1])),
            GhostBecomeWith => {
                self.swap_identity(args[0], args[1])?;
                Value::Nil
            }
            GhostForwardTo => {
                self.become_forward(args[0], args[1])?;
                Value::Nil
            }
            GhostReferencesTo => Value::Int(self.references_to(args[0]).len() as i64),
            GhostFootprintOf => Value::Int(self.footprint_of(args[0]) as i64),
            GhostFootprintTotal => Value::Int(self.live_footprint() as i64),
            GhostExecute => {
                let entry = self.method_entry(args[0])?;
                let items = self.array_items(args[2])?;
                self.execute_method(&entry, args[1], &items)?
            }
            GhostSwapOut => Value::Int(self.swap_out(&[args[0]])? as i64),
            GhostSwapOutAll => {
                let items = self.array_items(args[0])?;
                Value::Int(self.swap_out(&items)? as i64)
            }
            GhostSwapIn => {
                let g = self.int_arg(args[0])?;
                let g = u16::try_from(g).map_err(|_| Error::SwapFault(format!("no graph {g}")))?;
                Value::Int(self.swap_in(g)? as i64)
            }
            GhostSwapInAll => {
                let mut n = 0;
                for g in self.swapped_graphs() {
                    n += self.swap_in(g)?;
                }
                Value::Int(n as i64)
            }
            GhostIsSwapped => self.boolean(matches!(
                self.proxy_kind(args[0]),
                Some(crate::ghost::ProxyKind::Marea | crate::ghost::ProxyKind::MareaClass)
            )),
            GhostCachedClassProxy => {
                self.class_arg(args[0])?;
                self.swap_out(&[args[0]])?;
                args[0]
            }
            GhostWrap => {
                let c = self.class_arg(args[0])?;
                let sel = self.selector_arg(args[1])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                let proxy = self.wrap_method(c, &text, None)?;
                self.proxy_handler(proxy.into())?
            }
            GhostUnwrap => {
                let c = self.class_arg(args[0])?;
                let sel = self.selector_arg(args[1])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                self.unwrap_method(c, &text)?;
                Value::Nil
            }
            GhostWrapAll => {
                let c = self.class_arg(args[0])?;
                let proxy = self.wrap_all_methods(c, None)?;
                self.proxy_handler(proxy.into())?
            }
            GhostExecutions => {
                let sel = self.selector_arg(args[1])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                Value::Int(self.execution_count(args[0], &text) as i64)
            }
            GhostInterceptions => Value::Int(self.counters.interceptions as i64),
            GhostSwapIns => Value::Int(self.counters.swap_ins as i64),
            GhostSwapOuts => Value::Int(self.counters.swap_outs as i64),
            GhostProxyCount => Value::Int(self.proxy_count() as i64),
            GhostRandom => {
                let n = self.int_arg(args[0])?;
                if n <= 0 {
                    return Ok(None);
                }
                Value::Int(self.rng.gen_range(0..n))
            }
            GhostInstallDnuBaseline => {
                let c = self.class_arg(args[0])?;
                let class_name = self.describe_class(c);
                let def = crate::script::parser::parse_method_source(
                    &class_name,
                    false,
                    "doesNotUnderstand: aMessage ^ aMessage sendTo: (self instVarAt: 1)",
                    crate::error::Pos { line: 1, col: 1 },
                )?;
                let m = crate::script::eval::install_method(self, &def)?;
                self.install_dnu_baseline(c, m.into())?;
                Value::Nil
            }
            _ => unreachable!("{prim:?} is not a Ghost primitive"),
        }))
    }

    fn prim_handler(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        if self.handler_id(recv).is_none() {
            return Ok(None);
        }
        Ok(Some(match prim {
            HandleInterception => self.handle_interception(recv, args[0])?,
            EnableDebugging => {
                self.set_special_messages(recv, debugging_table())?;
                recv
            }
            ClearSpecialMessages => {
                self.set_special_messages(recv, BTreeMap::new())?;
                recv
            }
            SpecialMessagesAtPut => {
                let k = self.selector_arg(args[0])?;
                let v = self.selector_arg(args[1])?;
                let (k, v) = (
                    self.symbol_text(k.into()).unwrap_or_default(),
                    self.symbol_text(v.into()).unwrap_or_default(),
                );
                if let Some(spec) = self.handler_spec_mut(recv) {
                    spec.special_messages.insert(k, v);
                }
                recv
            }
            SpecialMessageCount => Value::Int(self.handler_spec(recv).map_or(0, |s| s.special_messages.len()) as i64),
            ExecutionCountOf => {
                let sel = self.selector_arg(args[0])?;
                let text = self.symbol_text(sel.into()).unwrap_or_default();
                Value::Int(self.execution_count(recv, &text) as i64)
            }
            _ => unreachable!("{prim:?} is not a handler primitive"),
        }))
    }

    fn prim_proxy(&mut self, prim: Prim, recv: Value, args: &[Value]) -> PrimResult {
        use Prim::*;
        Ok(Some(match prim {
            CannotInterpret => self.delegate_interception(recv, args[0])?,
            InstanceCannotInterpret => self.instance_trap(recv, args[0])?,
            ProxyTarget => self.slot_read(recv, 0)?,
            ProxyHandler => self.slot_read(recv, 1)?,
            CreateProxyFor => self.create_proxy_for(args[0], args[1])?.into(),
            CreateProxyAndReplace => self.create_proxy_and_replace(args[0], args[1])?.into(),
            ClassProxyTarget => self.slot_read(recv, 2)?,
            ClassProxyHandler => self.slot_read(recv, 3)?,
            ClassProxyFindNilDict | MareaClassFindNilDict | CachedInstanceSide => recv,
            CreateClassProxyAndReplace => {
                let c = self.class_arg(args[0])?;
                self.create_class_proxy_and_replace(c, args[1])?.into()
            }
            MareaHandler | MareaClassHandler => self.trap_hierarchy()?.marea_handler.into(),
            MareaProxyId => self.slot_read(recv, 0)?,
            MareaClassProxyId => self.slot_read(recv, 2)?,
            CachedIsBehavior | CachedIsInstanceSide => self.boolean(true),
            CachedIsClassSide | CachedIsMeta => self.boolean(false),
            _ => unreachable!("{prim:?} has no implementation"),
        }))
    }
}
