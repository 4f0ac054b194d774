//! Message sending: lookup, activation and the two trap paths.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::heap::{Extra, HeapObject};
use crate::method::{MethodCode, MethodEntry};
use crate::primitives::Prim;
use crate::runtime::{Runtime, CLS_DICT, CLS_SUPER, METHOD_CLASS, METHOD_PRIM};
use crate::script::ast::selector_arity;
use crate::trace::{SendOutcome, TraceRecord};
use crate::value::{Handle, Value};

/// Maximum nesting of active sends before the runtime gives up.
pub const MAX_SEND_DEPTH: usize = 512;
/// How many `cannotInterpret:` traps may nest inside one another.
pub const MAX_TRAP_NESTING: u8 = 2;

pub const IDENTITY_SELECTOR: &str = "==";
pub const CANNOT_INTERPRET: &str = "cannotInterpret:";
pub const DOES_NOT_UNDERSTAND: &str = "doesNotUnderstand:";
pub const RUN_WITH_IN: &str = "run:with:in:";

#[derive(Clone, Debug)]
pub enum Lookup {
    Found(Handle, MethodEntry),
    /// First class in the chain whose method dictionary is nil.
    NilDictionary(Handle),
    NotFound,
}

impl Runtime {
    pub fn lookup(&mut self, selector: &str, start: Value) -> Result<Lookup> {
        let sel = self.intern(selector);
        self.lookup_sym(sel, start)
    }

    pub(crate) fn lookup_sym(&mut self, sel: Handle, start: Value) -> Result<Lookup> {
        let mut cur = start;
        let mut chain = Vec::new();
        loop {
            let c = match cur {
                Value::Nil => return Ok(Lookup::NotFound),
                Value::Ref(c) => self.resolve(c)?,
                Value::Int(i) => {
                    return Err(Error::FatalRuntime(format!("malformed class chain: integer {i} in superclass position")))
                }
            };
            if chain.contains(&c) || chain.len() > 10_000 {
                let names: Vec<String> = chain.iter().map(|h| self.describe_class(*h)).collect();
                return Err(Error::FatalRuntime(format!(
                    "malformed class chain: cycle through {}",
                    names.join(" -> ")
                )));
            }
            chain.push(c);
            let obj = self.heap.get(c)?;
            if obj.slots.len() < 2 {
                return Err(Error::FatalRuntime(format!(
                    "malformed class chain: {} lacks superclass/methodDict slots",
                    self.describe_class(c)
                )));
            }
            let (sup, dict) = (obj.slots[CLS_SUPER], obj.slots[CLS_DICT]);
            match dict {
                Value::Nil => return Ok(Lookup::NilDictionary(c)),
                Value::Ref(d) => {
                    if let Some(m) = self.dict_get(d, sel)? {
                        let entry = self.method_entry(m)?;
                        return Ok(Lookup::Found(c, entry));
                    }
                }
                Value::Int(_) => {
                    return Err(Error::FatalRuntime(format!(
                        "malformed class chain: {} has an integer method dictionary",
                        self.describe_class(c)
                    )))
                }
            }
            cur = sup;
        }
    }

    /// Classify a method dictionary value.
    pub fn method_entry(&mut self, m: Value) -> Result<MethodEntry> {
        let Value::Ref(h) = m else {
            return Err(Error::InvalidActivation(format!(
                "{} in a method dictionary",
                self.describe(m)
            )));
        };
        if self.class_of(m)? != self.k.compiled_method {
            return Ok(MethodEntry::Foreign(h));
        }
        let method = self.resolve(h)?;
        if let Value::Int(i) = self.slot_read(m, METHOD_PRIM)? {
            let prim = Prim::from_index(i as usize)
                .ok_or_else(|| Error::InvalidActivation(format!("unknown primitive index {i}")))?;
            return Ok(MethodEntry::Primitive { method, prim });
        }
        let code = match &self.heap.get(method)?.extra {
            Extra::Code(c) => c.clone(),
            _ => {
                let c = self.recompile(method)?;
                self.heap.get_mut(method)?.extra = Extra::Code(c.clone());
                c
            }
        };
        Ok(MethodEntry::Compiled { method, code })
    }

    fn recompile(&mut self, method: Handle) -> Result<Rc<MethodCode>> {
        crate::script::eval::compile_method_object(self, method)
    }

    /// Send a message. Checks the argument count against the selector.
    pub fn send(&mut self, receiver: Value, selector: &str, args: &[Value]) -> Result<Value> {
        let expected = selector_arity(selector);
        if expected != args.len() {
            return Err(Error::Arity {
                selector: selector.to_string(),
                expected,
                got: args.len(),
            });
        }
        let sel = self.intern(selector);
        self.send_sym(receiver, sel, args)
    }

    pub(crate) fn send_sym(&mut self, receiver: Value, sel: Handle, args: &[Value]) -> Result<Value> {
        if self.depth >= MAX_SEND_DEPTH {
            return Err(Error::FatalRuntime(format!("send depth exceeded {MAX_SEND_DEPTH}")));
        }
        self.depth += 1;
        let r = self.send_inner(receiver, sel, args);
        self.depth -= 1;
        r
    }

    fn send_inner(&mut self, receiver: Value, sel: Handle, args: &[Value]) -> Result<Value> {
        if sel == self.k.sym_identity {
            self.trace_send(receiver, sel, SendOutcome::IdentityBypass);
            let other = args.first().copied().unwrap_or(Value::Nil);
            return Ok(self.boolean(self.identical(receiver, other)));
        }
        let class = self.class_of(receiver)?;
        self.dispatch_from(receiver, sel, args, class.into(), 0)
    }

    /// Send starting lookup above the method's defining class.
    pub(crate) fn super_send(&mut self, receiver: Value, sel: Handle, args: &[Value], def: Handle) -> Result<Value> {
        let start = self.slot_read(def.into(), CLS_SUPER)?;
        if self.depth >= MAX_SEND_DEPTH {
            return Err(Error::FatalRuntime(format!("send depth exceeded {MAX_SEND_DEPTH}")));
        }
        self.depth += 1;
        let r = self.dispatch_from(receiver, sel, args, start, 0);
        self.depth -= 1;
        r
    }

    fn dispatch_from(&mut self, receiver: Value, sel: Handle, args: &[Value], start: Value, nesting: u8) -> Result<Value> {
        match self.lookup_sym(sel, start)? {
            Lookup::Found(def, entry) => self.activate_found(receiver, sel, args, def, entry, nesting),
            Lookup::NilDictionary(c) => {
                self.trace_send(receiver, sel, SendOutcome::TrappedCi);
                self.counters.traps += 1;
                if nesting >= MAX_TRAP_NESTING {
                    return Err(Error::FatalRuntime(format!(
                        "unhandled trap: cannotInterpret: nested more than {MAX_TRAP_NESTING} levels"
                    )));
                }
                let lookup_class = match start {
                    Value::Ref(h) => Value::Ref(self.resolve(h)?),
                    other => other,
                };
                let message = self.reify_message(sel, args, lookup_class);
                let ci = self.k.sym_ci;
                let above = self.slot_read(c.into(), CLS_SUPER)?;
                match self.lookup_sym(ci, above)? {
                    Lookup::NotFound => Err(Error::FatalRuntime(format!(
                        "unhandled trap: no cannotInterpret: above {}",
                        self.describe_class(c)
                    ))),
                    _ => self.dispatch_from(receiver, ci, &[message.into()], above, nesting + 1),
                }
            }
            Lookup::NotFound => {
                self.trace_send(receiver, sel, SendOutcome::TrappedDnu);
                let dnu = self.k.sym_dnu;
                if sel == dnu {
                    return Err(Error::FatalRuntime(format!(
                        "unhandled trap: {} does not understand doesNotUnderstand:",
                        self.describe(receiver)
                    )));
                }
                let message = self.reify_message(sel, args, start);
                let class = self.class_of(receiver)?;
                match self.lookup_sym(dnu, class.into())? {
                    Lookup::Found(def, entry) => self.activate_found(receiver, dnu, &[message.into()], def, entry, nesting),
                    _ => Err(Error::DoesNotUnderstand {
                        class: self.describe_class(class),
                        selector: self.symbol_text(sel.into()).unwrap_or_default(),
                    }),
                }
            }
        }
    }

    pub(crate) fn activate_found(
        &mut self,
        receiver: Value,
        sel: Handle,
        args: &[Value],
        def: Handle,
        entry: MethodEntry,
        nesting: u8,
    ) -> Result<Value> {
        match entry {
            MethodEntry::Primitive { method, prim } => {
                self.trace_send(receiver, sel, SendOutcome::Primitive);
                match self.run_primitive(prim, receiver, args, def, method)? {
                    Some(v) => Ok(v),
                    None => {
                        let above = self.slot_read(def.into(), CLS_SUPER)?;
                        self.dispatch_from(receiver, sel, args, above, nesting)
                    }
                }
            }
            MethodEntry::Compiled { method, code } => {
                self.trace_send(receiver, sel, SendOutcome::Executed);
                self.run_compiled(&code, method, def, receiver, args)
            }
            MethodEntry::Foreign(obj) => {
                self.trace_send(receiver, sel, SendOutcome::Executed);
                let arg_array = self.new_array(args.to_vec());
                let run = self.k.sym_run;
                self.send_sym(obj.into(), run, &[sel.into(), arg_array.into(), receiver])
            }
        }
    }

    fn run_compiled(&mut self, code: &Rc<MethodCode>, method: Handle, def: Handle, receiver: Value, args: &[Value]) -> Result<Value> {
        if code.arity() != args.len() {
            return Err(Error::Arity {
                selector: code.selector.clone(),
                expected: code.arity(),
                got: args.len(),
            });
        }
        crate::script::eval::run_method(self, code.clone(), method, def, receiver, args)
    }

    /// Activate a method on `receiver` without a send: no lookup, no traps.
    pub fn execute_method(&mut self, method: &MethodEntry, receiver: Value, args: &[Value]) -> Result<Value> {
        let def = match method {
            MethodEntry::Foreign(h) => *h,
            MethodEntry::Primitive { method, .. } | MethodEntry::Compiled { method, .. } => self.method_class(*method)?,
        };
        self.execute_with_def(method, def, receiver, args)
    }

    /// As [`Runtime::execute_method`], with super sends resolved above `def`.
    pub(crate) fn execute_with_def(&mut self, method: &MethodEntry, def: Handle, receiver: Value, args: &[Value]) -> Result<Value> {
        match method {
            MethodEntry::Foreign(h) => Err(Error::InvalidActivation(format!(
                "{} is not a method",
                self.describe((*h).into())
            ))),
            MethodEntry::Primitive { method, prim } => {
                if prim.arity() != args.len() {
                    return Err(Error::Arity {
                        selector: prim.selector().to_string(),
                        expected: prim.arity(),
                        got: args.len(),
                    });
                }
                self.run_primitive(*prim, receiver, args, def, *method)?.ok_or_else(|| {
                    Error::PrimitiveFailed(format!("#{} on {}", prim.selector(), self.describe(receiver)))
                })
            }
            MethodEntry::Compiled { method, code } => {
                if self.depth >= MAX_SEND_DEPTH {
                    return Err(Error::FatalRuntime(format!("send depth exceeded {MAX_SEND_DEPTH}")));
                }
                self.depth += 1;
                let r = self.run_compiled(code, *method, def, receiver, args);
                self.depth -= 1;
                r
            }
        }
    }

    /// Same as [`Runtime::execute_method`].
    pub fn value_with_receiver(&mut self, method: &MethodEntry, receiver: Value, args: &[Value]) -> Result<Value> {
        self.execute_method(method, receiver, args)
    }

    /// Defining class recorded in a method object.
    pub(crate) fn method_class(&self, method: Handle) -> Result<Handle> {
        match self.slot_read(method.into(), METHOD_CLASS)? {
            Value::Ref(c) => self.resolve(c),
            _ => Ok(self.k.object_root),
        }
    }

    /// Install a `doesNotUnderstand:` override, the classic proxy trap.
    pub fn install_dnu_baseline(&mut self, class: Handle, handler_body: Value) -> Result<()> {
        let sel = self.intern(DOES_NOT_UNDERSTAND);
        self.method_dict_put(class, sel, handler_body)
    }

    pub(crate) fn reify_message(&mut self, sel: Handle, args: &[Value], lookup_class: Value) -> Handle {
        let arr = self.new_array(args.to_vec());
        self.alloc(HeapObject::slotted(
            self.k.message,
            vec![sel.into(), arr.into(), lookup_class],
        ))
    }

    /// Selector, arguments and lookup class of a Message object.
    pub fn message_parts(&self, message: Value) -> Result<(Handle, Vec<Value>, Value)> {
        let sel = self
            .slot_read(message, 0)?
            .as_handle()
            .ok_or_else(|| Error::InvalidActivation("message without selector".into()))?;
        let args = self.array_items(self.slot_read(message, 1)?)?;
        Ok((sel, args, self.slot_read(message, 2)?))
    }

    fn trace_send(&mut self, receiver: Value, sel: Handle, outcome: SendOutcome) {
        if !self.trace.records_sends() {
            return;
        }
        let class_name = match self.class_of(receiver) {
            Ok(c) => self.describe_class(c),
            Err(_) => "<swapped>".into(),
        };
        let rec = TraceRecord::Send {
            depth: self.depth,
            class_name,
            selector: self.symbol_text(sel.into()).unwrap_or_default(),
            outcome,
        };
        self.trace.push(rec);
    }
}
