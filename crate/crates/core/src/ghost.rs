//! Proxies, handlers and interceptions for regular objects.

use std::collections::BTreeMap;

use crate::dispatch::RUN_WITH_IN;
use crate::error::{Error, Result};
use crate::heap::{Extra, HeapObject};
use crate::runtime::{Runtime, CLS_DICT};
use crate::trace::{HandlerAction, TraceRecord};
use crate::value::{Handle, Value};

pub const HANDLE_METHOD_EXECUTION: &str = "handleMethodExecution:";

/// What a handler does with an interception that has no special-message entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DefaultAction {
    /// Re-send to the target, answering the proxy instead of a leaked target.
    Forward,
    /// Log the interception and answer nil.
    Record,
    /// Load the proxy's graph back and re-send to the materialized object.
    SwapIn,
}

/// What a handler does when an instance of a proxified class is sent a message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceAction {
    /// Look the selector up in the original class and execute it on the receiver.
    ExecuteOnTarget,
    /// Swap the class's graph back in, then re-send to the receiver.
    SwapInAndResend,
}

/// A pre or post hook run around wrapped executions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hook {
    /// Emit a wrap record into the trace.
    Trace,
    /// Evaluate a one-argument block with the interception.
    Block(Value),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WrapHooks {
    pub pre: Vec<Hook>,
    pub post: Vec<Hook>,
    /// Completed executions per selector.
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlerSpec {
    pub default_action: DefaultAction,
    pub instance_action: InstanceAction,
    /// Intercepted selector to handler operation name.
    pub special_messages: BTreeMap<String, String>,
    pub wrap: Option<WrapHooks>,
}

impl HandlerSpec {
    pub fn forwarder() -> Self {
        HandlerSpec {
            default_action: DefaultAction::Forward,
            instance_action: InstanceAction::ExecuteOnTarget,
            special_messages: BTreeMap::from([(RUN_WITH_IN.to_string(), HANDLE_METHOD_EXECUTION.to_string())]),
            wrap: None,
        }
    }

    pub fn recorder() -> Self {
        HandlerSpec {
            default_action: DefaultAction::Record,
            ..Self::forwarder()
        }
    }

    pub fn marea() -> Self {
        HandlerSpec {
            default_action: DefaultAction::SwapIn,
            instance_action: InstanceAction::SwapInAndResend,
            special_messages: BTreeMap::new(),
            wrap: None,
        }
    }

    /// Forwarder that brackets method executions with trace hooks.
    pub fn method_wrapper() -> Self {
        let mut spec = Self::forwarder();
        spec.wrap = Some(WrapHooks {
            pre: vec![Hook::Trace],
            post: vec![Hook::Trace],
            counts: BTreeMap::new(),
        });
        spec
    }
}

/// The selector-to-operation table used for debugging proxies.
pub fn debugging_table() -> BTreeMap<String, String> {
    [
        ("basicInspect", "handleBasicInspect:"),
        ("inspect", "handleInspect:"),
        ("inspectorClass", "handleInspectorClass:"),
        ("printStringLimitedTo:", "handlePrintStringLimitedTo:"),
        ("printString", "handlePrintString:"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Classes created by [`Runtime::install_trap_hierarchy`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrapHierarchy {
    pub delegator: Handle,
    pub trap: Handle,
    pub target_proxy: Handle,
    pub lookup_delegator: Handle,
    pub class_proxy: Handle,
    pub marea_proxy: Handle,
    pub marea_class_proxy: Handle,
    /// Shared stateless handler of every swapper proxy.
    pub marea_handler: Handle,
}

/// Which proxy shape an object has, judged from its class.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ProxyKind {
    Target,
    Class,
    Marea,
    MareaClass,
}

impl Runtime {
    pub fn install_trap_hierarchy(&mut self) -> Result<TrapHierarchy> {
        if self.traps.is_some() {
            return Err(Error::TrapAlreadyInstalled);
        }
        let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let delegator = self.define_class("InterceptionDelegator", Value::Nil, &[], false)?;
        let trap = self.define_class("ProxyTrap", delegator.into(), &[], false)?;
        let target_proxy = self.define_class("TargetBasedProxy", trap.into(), &names(&["target", "handler"]), true)?;
        let lookup_delegator = self.define_class("MethodLookupInterceptionDelegator", Value::Nil, &[], false)?;
        let class_proxy = self.define_class(
            "TargetBasedClassProxy",
            trap.into(),
            &names(&["superclass", "methodDict", "target", "handler"]),
            true,
        )?;
        let marea_proxy = self.define_class("MareaProxy", trap.into(), &names(&["proxyId"]), true)?;
        let marea_class_proxy = self.define_class(
            "MareaClassProxy",
            trap.into(),
            &names(&["superclass", "methodDict", "proxyId"]),
            true,
        )?;
        self.install_primitives(&[
            "InterceptionDelegator",
            "MethodLookupInterceptionDelegator",
            "TargetBasedProxy",
            "TargetBasedClassProxy",
            "MareaProxy",
            "MareaClassProxy",
        ])?;
        self.slot_write(trap.into(), CLS_DICT, Value::Nil)?;
        let marea_handler = self.new_handler(HandlerSpec::marea(), "MareaProxyHandler")?;
        let h = TrapHierarchy {
            delegator,
            trap,
            target_proxy,
            lookup_delegator,
            class_proxy,
            marea_proxy,
            marea_class_proxy,
            marea_handler,
        };
        self.traps = Some(h.clone());
        Ok(h)
    }

    pub fn trap_hierarchy(&self) -> Result<&TrapHierarchy> {
        self.traps
            .as_ref()
            .ok_or_else(|| Error::FatalRuntime("trap hierarchy not installed".into()))
    }

    /// Allocate a handler object of class `class_name` backed by `spec`.
    pub fn new_handler(&mut self, spec: HandlerSpec, class_name: &str) -> Result<Handle> {
        let class = self
            .class_named(class_name)
            .ok_or_else(|| Error::HandlerConfig(format!("no handler class {class_name}")))?;
        self.handlers.push(spec);
        let id = self.handlers.len() - 1;
        Ok(self.alloc(HeapObject::slotted(class, Vec::new()).with_extra(Extra::Handler(id))))
    }

    pub fn new_forwarder(&mut self) -> Result<Handle> {
        self.new_handler(HandlerSpec::forwarder(), "SimpleForwarderHandler")
    }

    pub fn proxy_kind(&self, v: Value) -> Option<ProxyKind> {
        let t = self.traps.as_ref()?;
        let c = self.class_of(v).ok()?;
        let same = |x: Handle| self.resolve(x).ok() == Some(c);
        if same(t.target_proxy) {
            Some(ProxyKind::Target)
        } else if same(t.class_proxy) {
            Some(ProxyKind::Class)
        } else if same(t.marea_proxy) {
            Some(ProxyKind::Marea)
        } else if same(t.marea_class_proxy) {
            Some(ProxyKind::MareaClass)
        } else {
            None
        }
    }

    /// Live proxies of every kind.
    pub fn proxy_count(&self) -> usize {
        self.heap
            .live()
            .filter(|(h, _)| self.proxy_kind((*h).into()).is_some())
            .count()
    }

    /// Create a proxy without replacing anything.
    pub fn create_proxy_for(&mut self, target: Value, handler: Value) -> Result<Handle> {
        self.require_handler(handler)?;
        let class = self.trap_hierarchy()?.target_proxy;
        Ok(self.alloc(HeapObject::slotted(class, vec![target, handler])))
    }

    /// Create a proxy and make every reference to `target` reach it.
    ///
    /// Answers the target's old handle, which now denotes the proxy. The
    /// original lives on behind a fresh handle held in the proxy's target slot.
    pub fn create_proxy_and_replace(&mut self, target: Value, handler: Value) -> Result<Handle> {
        let p = self.create_proxy_for(target, handler)?;
        self.swap_identity(target, p.into())?;
        let t = target.as_handle().expect("become accepted a heap object");
        self.slot_write(t.into(), 0, p.into())?;
        Ok(t)
    }

    pub(crate) fn require_handler(&self, handler: Value) -> Result<usize> {
        self.handler_id(handler).ok_or_else(|| {
            Error::HandlerConfig(format!("{} is not a proxy handler", self.describe(handler)))
        })
    }

    /// Target slot of a target-based proxy, read without a send.
    pub fn proxy_target(&self, proxy: Value) -> Result<Value> {
        match self.proxy_kind(proxy) {
            Some(ProxyKind::Target) => self.slot_read(proxy, 0),
            Some(ProxyKind::Class) => self.slot_read(proxy, 2),
            _ => Err(Error::HandlerConfig(format!("{} has no target", self.describe(proxy)))),
        }
    }

    /// Handler of any proxy, read without a send.
    pub fn proxy_handler(&self, proxy: Value) -> Result<Value> {
        match self.proxy_kind(proxy) {
            Some(ProxyKind::Target) => self.slot_read(proxy, 1),
            Some(ProxyKind::Class) => self.slot_read(proxy, 3),
            Some(ProxyKind::Marea) | Some(ProxyKind::MareaClass) => {
                Ok(self.trap_hierarchy()?.marea_handler.into())
            }
            None => Err(Error::HandlerConfig(format!("{} is not a proxy", self.describe(proxy)))),
        }
    }

    pub fn set_special_messages(&mut self, handler: Value, table: BTreeMap<String, String>) -> Result<()> {
        let id = self.require_handler(handler)?;
        self.handlers[id].special_messages = table;
        Ok(())
    }

    pub(crate) fn new_interception(&mut self, message: Handle, proxy: Value, receiver: Value) -> Handle {
        self.alloc(HeapObject::slotted(
            self.k.interception,
            vec![message.into(), proxy, receiver],
        ))
    }

    /// Message, proxy and receiver of an Interception object.
    pub fn interception_parts(&self, i: Value) -> Result<(Value, Value, Value)> {
        Ok((self.slot_read(i, 0)?, self.slot_read(i, 1)?, self.slot_read(i, 2)?))
    }

    /// Trap entry for a regular proxy: reify and hand over to its handler.
    pub(crate) fn delegate_interception(&mut self, proxy: Value, message: Value) -> Result<Value> {
        let handler = match self.proxy_kind(proxy) {
            Some(_) => self.proxy_handler(proxy)?,
            None => self.send(proxy, "proxyHandler", &[])?,
        };
        let m = message
            .as_handle()
            .ok_or_else(|| Error::InvalidActivation("cannotInterpret: without a message".into()))?;
        let i = self.new_interception(m, proxy, proxy);
        self.handle_interception(handler, i.into())
    }

    fn record_handler(&mut self, proxy: Value, selector: &str, action: HandlerAction) {
        self.counters.interceptions += 1;
        let ordinal = self.trace.tick();
        let proxy_id = proxy.as_handle().map(|h| h.ordinal()).unwrap_or(0);
        self.trace.push(TraceRecord::Handler {
            ordinal,
            proxy: proxy_id,
            selector: selector.to_string(),
            action,
        });
    }

    pub(crate) fn log(&mut self, text: String) {
        self.trace.push(TraceRecord::Log(text));
    }

    /// Special-message table first, then the default action.
    pub fn handle_interception(&mut self, handler: Value, interception: Value) -> Result<Value> {
        let id = self.require_handler(handler)?;
        let (message, proxy, _) = self.interception_parts(interception)?;
        let (sel, _, _) = self.message_parts(message)?;
        let sel_text = self.symbol_text(sel.into()).unwrap_or_default();
        let special = self.handlers[id].special_messages.get(&sel_text).cloned();
        if let Some(op) = special {
            let action = if op == HANDLE_METHOD_EXECUTION {
                HandlerAction::MethodExec
            } else {
                HandlerAction::Special(op.trim_end_matches(':').to_string())
            };
            self.record_handler(proxy, &sel_text, action);
            return self.perform_special(id, &op, interception);
        }
        let action = self.handlers[id].default_action.clone();
        match action {
            DefaultAction::Forward => {
                self.record_handler(proxy, &sel_text, HandlerAction::Forwarded);
                self.forwarder_default_action(interception)
            }
            DefaultAction::Record => {
                self.record_handler(proxy, &sel_text, HandlerAction::Answered);
                self.log(format!("Message {sel_text} intercepted"));
                Ok(Value::Nil)
            }
            DefaultAction::SwapIn => {
                self.record_handler(proxy, &sel_text, HandlerAction::Forwarded);
                self.marea_default_action(interception)
            }
        }
    }

    /// Re-send the intercepted message to the proxy's target.
    pub fn forwarder_default_action(&mut self, interception: Value) -> Result<Value> {
        let (message, proxy, _) = self.interception_parts(interception)?;
        let (sel, args, _) = self.message_parts(message)?;
        let sel_text = self.symbol_text(sel.into()).unwrap_or_default();
        self.log(format!("Message {sel_text} intercepted"));
        let target = self.proxy_target(proxy)?;
        let answer = self.send_sym(target, sel, &args)?;
        self.log("The message was forwarded to target".into());
        if self.identical(answer, target) {
            Ok(proxy)
        } else {
            Ok(answer)
        }
    }

    fn perform_special(&mut self, handler_id: usize, op: &str, interception: Value) -> Result<Value> {
        let (message, proxy, _) = self.interception_parts(interception)?;
        let (_, args, _) = self.message_parts(message)?;
        match op {
            "handlePrintString:" | "handleInspect:" | "handleBasicInspect:" => {
                let s = self.proxy_description(proxy);
                Ok(self.new_string(&s).into())
            }
            "handlePrintStringLimitedTo:" => {
                let s = self.proxy_description(proxy);
                let limit = args.first().and_then(|v| v.as_int()).unwrap_or(i64::MAX).max(0) as usize;
                let cut: String = s.chars().take(limit).collect();
                Ok(self.new_string(&cut).into())
            }
            "handleInspectorClass:" => Ok(self.intern("ProxyInspector").into()),
            HANDLE_METHOD_EXECUTION => self.handle_method_execution_for(handler_id, interception),
            other => Err(Error::HandlerConfig(format!("unknown handler operation {other}"))),
        }
    }

    /// Send-free description of a proxy and what it stands for.
    pub fn proxy_description(&self, proxy: Value) -> String {
        match self.proxy_target(proxy) {
            Ok(t) => format!("Proxy({})", self.describe(t)),
            Err(_) => format!("Proxy({})", self.describe(proxy)),
        }
    }
}
