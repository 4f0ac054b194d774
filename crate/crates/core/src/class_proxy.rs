//! Proxies for classes and for methods.

use crate::dispatch::{Lookup, RUN_WITH_IN};
use crate::error::{Error, Result};
use crate::ghost::{InstanceAction, ProxyKind, HANDLE_METHOD_EXECUTION};
use crate::heap::HeapObject;
use crate::method::MethodEntry;
use crate::runtime::{Runtime, CLS_DICT, CLS_SUPER};
use crate::trace::{HandlerAction, TraceRecord};
use crate::value::{Handle, Value};

impl Runtime {
    /// Replace `class` by a class proxy.
    ///
    /// The proxy keeps the superclass/methodDict slot order, with the lookup
    /// delegator as superclass and a nil dictionary, so instances trap.
    pub fn create_class_proxy_and_replace(&mut self, class: Handle, handler: Value) -> Result<Handle> {
        if !self.is_behavior(class.into()) {
            return Err(Error::NotClassShaped(self.describe(class.into())));
        }
        self.require_handler(handler)?;
        let t = self.trap_hierarchy()?.clone();
        let proxy = self.alloc(HeapObject::slotted(
            t.class_proxy,
            vec![t.lookup_delegator.into(), Value::Nil, class.into(), handler],
        ));
        self.swap_identity(class.into(), proxy.into())?;
        self.slot_write(class.into(), 2, proxy.into())?;
        Ok(class)
    }

    /// First class from `start` upward that has a nil method dictionary.
    /// Class proxies answer themselves.
    pub fn ghost_find_class_with_nil_dict(&self, start: Value) -> Result<Option<Handle>> {
        let mut cur = start;
        for _ in 0..10_000 {
            let Value::Ref(c) = cur else { return Ok(None) };
            let c = self.resolve(c)?;
            if matches!(self.proxy_kind(c.into()), Some(ProxyKind::Class | ProxyKind::MareaClass)) {
                return Ok(Some(c));
            }
            if self.slot_read(c.into(), CLS_DICT)?.is_nil() {
                return Ok(Some(c));
            }
            cur = self.slot_read(c.into(), CLS_SUPER)?;
        }
        Err(Error::FatalRuntime("class chain does not terminate".into()))
    }

    /// Trap entry for instances of a proxified class.
    pub fn instance_trap(&mut self, receiver: Value, message: Value) -> Result<Value> {
        let (sel, _, lookup_class) = self.message_parts(message)?;
        let proxy = self.ghost_find_class_with_nil_dict(lookup_class)?.ok_or_else(|| {
            Error::FatalRuntime(format!(
                "no class with a nil method dictionary above {}",
                self.describe(lookup_class)
            ))
        })?;
        let m = message.as_handle().expect("messages are heap objects");
        let i = self.new_interception(m, proxy.into(), receiver);
        let handler = self.proxy_handler(proxy.into())?;
        let id = self.require_handler(handler)?;
        let sel_text = self.symbol_text(sel.into()).unwrap_or_default();
        self.counters.interceptions += 1;
        let ordinal = self.trace.tick();
        self.trace.push(TraceRecord::Handler {
            ordinal,
            proxy: proxy.ordinal(),
            selector: sel_text.clone(),
            action: HandlerAction::Instance,
        });
        match self.handlers[id].instance_action.clone() {
            InstanceAction::ExecuteOnTarget => {
                if self.handlers[id].wrap.is_some() {
                    self.run_wrapped(id, &sel_text, i.into(), |rt| rt.forwarder_instance_action(i.into()))
                } else {
                    self.forwarder_instance_action(i.into())
                }
            }
            InstanceAction::SwapInAndResend => self.marea_instance_action(i.into()),
        }
    }

    /// Look the selector up in the original class and run it on the receiver
    /// directly, so the receiver is not sent anything.
    pub fn forwarder_instance_action(&mut self, interception: Value) -> Result<Value> {
        let (message, proxy, receiver) = self.interception_parts(interception)?;
        let (sel, args, _) = self.message_parts(message)?;
        let original = self.proxy_target(proxy)?;
        match self.lookup_sym(sel, original)? {
            Lookup::Found(def, entry) => self.activate_found(receiver, sel, &args, def, entry, 0),
            Lookup::NotFound => {
                let dnu = self.k.sym_dnu;
                match self.lookup_sym(dnu, original)? {
                    Lookup::Found(def, entry) => {
                        self.activate_found(receiver, dnu, &[message], def, entry, 0)
                    }
                    _ => Err(Error::DoesNotUnderstand {
                        class: self.describe(original),
                        selector: self.symbol_text(sel.into()).unwrap_or_default(),
                    }),
                }
            }
            Lookup::NilDictionary(c) => Err(Error::FatalRuntime(format!(
                "original class chain of {} is itself proxified at {}",
                self.describe(proxy),
                self.describe_class(c)
            ))),
        }
    }

    /// Replace the method bound to `selector` in `class` by a method proxy.
    pub fn create_method_proxy_and_replace(&mut self, class: Handle, selector: &str, handler: Value) -> Result<Handle> {
        let id = self.require_handler(handler)?;
        let method = self.compiled_method_at(class, selector)?;
        self.handlers[id]
            .special_messages
            .insert(RUN_WITH_IN.into(), HANDLE_METHOD_EXECUTION.into());
        self.create_proxy_and_replace(method.into(), handler)
    }

    /// The CompiledMethod bound to `selector` in `class` itself.
    pub(crate) fn compiled_method_at(&mut self, class: Handle, selector: &str) -> Result<Handle> {
        let unbound = |rt: &Runtime| Error::UnboundSelector {
            class: rt.describe_class(class),
            selector: selector.to_string(),
        };
        let Some(Value::Ref(m)) = self.method_at(class, selector)? else {
            return Err(unbound(self));
        };
        match self.method_entry(m.into())? {
            MethodEntry::Foreign(_) => Err(unbound(self)),
            _ => Ok(m),
        }
    }

    /// Run the proxied method of a `run:with:in:` interception on its receiver.
    pub fn handle_method_execution(&mut self, interception: Value) -> Result<Value> {
        let (_, proxy, _) = self.interception_parts(interception)?;
        let handler = self.proxy_handler(proxy)?;
        let id = self.require_handler(handler)?;
        self.handle_method_execution_for(id, interception)
    }

    pub(crate) fn handle_method_execution_for(&mut self, handler_id: usize, interception: Value) -> Result<Value> {
        let (message, proxy, _) = self.interception_parts(interception)?;
        let (_, margs, _) = self.message_parts(message)?;
        let [sel, arg_array, receiver] = margs[..] else {
            return Err(Error::Arity {
                selector: RUN_WITH_IN.into(),
                expected: 3,
                got: margs.len(),
            });
        };
        let args = self.array_items(arg_array)?;
        let target = self.proxy_target(proxy)?;
        let entry = self.method_entry(target)?;
        if self.handlers[handler_id].wrap.is_some() {
            let sel_text = self.symbol_text(sel).unwrap_or_default();
            self.run_wrapped(handler_id, &sel_text, interception, |rt| {
                rt.value_with_receiver(&entry, receiver, &args)
            })
        } else {
            self.value_with_receiver(&entry, receiver, &args)
        }
    }
}
