//! Method wrappers: pre and post hooks around method executions.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::ghost::{HandlerSpec, Hook, WrapHooks};
use crate::runtime::Runtime;
use crate::trace::{TraceRecord, WrapPhase};
use crate::value::{Handle, Value};

#[derive(Clone, Debug)]
pub(crate) struct WrapEntry {
    pub proxy: Handle,
    pub original: Handle,
}

/// Currently wrapped methods, keyed by class and selector.
#[derive(Clone, Debug, Default)]
pub struct WrapRegistry {
    entries: IndexMap<(Handle, String), WrapEntry>,
}

impl WrapRegistry {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Runtime {
    pub fn new_wrapper_handler(&mut self) -> Result<Handle> {
        self.new_handler(HandlerSpec::method_wrapper(), "MethodWrapperHandler")
    }

    fn ensure_hooks(&mut self, handler: Value) -> Result<()> {
        let id = self.require_handler(handler)?;
        if self.handlers[id].wrap.is_none() {
            self.handlers[id].wrap = Some(WrapHooks {
                pre: vec![Hook::Trace],
                post: vec![Hook::Trace],
                counts: Default::default(),
            });
        }
        Ok(())
    }

    /// Wrap `class>>selector`. Uses a fresh tracing wrapper handler when none is given.
    pub fn wrap_method(&mut self, class: Handle, selector: &str, handler: Option<Value>) -> Result<Handle> {
        let handler = match handler {
            Some(h) => h,
            None => self.new_wrapper_handler()?.into(),
        };
        self.ensure_hooks(handler)?;
        let key = (self.resolve(class)?, selector.to_string());
        let proxy = self.create_method_proxy_and_replace(class, selector, handler)?;
        let original = self
            .proxy_target(proxy.into())?
            .as_handle()
            .expect("method proxies target a method object");
        self.wrapped.entries.insert(key, WrapEntry { proxy, original });
        Ok(proxy)
    }

    /// Put the original method back in place of its wrapper.
    pub fn unwrap_method(&mut self, class: Handle, selector: &str) -> Result<()> {
        let key = (self.resolve(class)?, selector.to_string());
        let entry = self.wrapped.entries.shift_remove(&key).ok_or_else(|| Error::NotWrapped {
            class: self.describe_class(class),
            selector: selector.to_string(),
        })?;
        self.become_forward(entry.proxy.into(), entry.original.into())
    }

    pub fn is_wrapped(&self, class: Handle, selector: &str) -> bool {
        match self.resolve(class) {
            Ok(c) => self.wrapped.entries.contains_key(&(c, selector.to_string())),
            Err(_) => false,
        }
    }

    /// Wrap every instance-side method of `class` with one class proxy.
    pub fn wrap_all_methods(&mut self, class: Handle, handler: Option<Value>) -> Result<Handle> {
        let handler = match handler {
            Some(h) => h,
            None => self.new_wrapper_handler()?.into(),
        };
        self.ensure_hooks(handler)?;
        self.create_class_proxy_and_replace(class, handler)
    }

    /// Completed wrapped executions of `selector` seen by `handler`.
    pub fn execution_count(&self, handler: Value, selector: &str) -> u64 {
        self.handler_spec(handler)
            .and_then(|s| s.wrap.as_ref())
            .and_then(|w| w.counts.get(selector).copied())
            .unwrap_or(0)
    }

    /// Wrapped method counter rows: class name, selector, count.
    pub fn wrapper_counts(&self) -> Vec<(String, String, u64)> {
        let mut rows = Vec::new();
        for ((class, sel), entry) in &self.wrapped.entries {
            let count = self
                .proxy_handler(entry.proxy.into())
                .map(|h| self.execution_count(h, sel))
                .unwrap_or(0);
            rows.push((self.describe_class(*class), sel.clone(), count));
        }
        rows
    }

    fn run_hooks(&mut self, hooks: &[Hook], phase: WrapPhase, selector: &str, interception: Value) -> Result<()> {
        for hook in hooks {
            match hook {
                Hook::Trace => self.trace.push(TraceRecord::Wrap {
                    phase,
                    selector: selector.to_string(),
                    depth: self.depth,
                }),
                Hook::Block(b) => {
                    self.send(*b, "value:", &[interception])?;
                }
            }
        }
        Ok(())
    }

    /// Pre hooks, the execution, then post hooks. An error skips the post hooks.
    pub(crate) fn run_wrapped(
        &mut self,
        handler_id: usize,
        selector: &str,
        interception: Value,
        exec: impl FnOnce(&mut Runtime) -> Result<Value>,
    ) -> Result<Value> {
        let hooks = self.handlers[handler_id].wrap.clone().unwrap_or_default();
        self.run_hooks(&hooks.pre, WrapPhase::Pre, selector, interception)?;
        self.trace.push(TraceRecord::Wrap {
            phase: WrapPhase::Exec,
            selector: selector.to_string(),
            depth: self.depth,
        });
        let answer = exec(self)?;
        self.run_hooks(&hooks.post, WrapPhase::Post, selector, interception)?;
        if let Some(w) = self.handlers[handler_id].wrap.as_mut() {
            *w.counts.entry(selector.to_string()).or_insert(0) += 1;
        }
        Ok(answer)
    }
}
