//! The runtime: object table, classes, globals and reference swapping.

use std::collections::HashMap;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::footprint;
use crate::ghost::{HandlerSpec, TrapHierarchy};
use crate::heap::{Extra, Heap, HeapObject};
use crate::primitives::Prim;
use crate::swapper::SwapState;
use crate::trace::{Trace, TraceMode};
use crate::value::{Handle, Value};
use crate::wrappers::WrapRegistry;

pub const CLS_SUPER: usize = 0;
pub const CLS_DICT: usize = 1;
pub const CLS_NAME: usize = 2;
pub const CLS_IVARS: usize = 3;
pub const CLS_INST_SIZE: usize = 4;
pub const CLS_FORMAT: usize = 5;
pub const CLS_COMPACT: usize = 6;
pub const META_THIS: usize = 7;
pub(crate) const CLASS_IVARS: [&str; 7] = [
    "superclass",
    "methodDict",
    "name",
    "instanceVariableNames",
    "instSize",
    "format",
    "compactIndex",
];

pub const FMT_FIXED: i64 = 0;
pub const FMT_VARIABLE: i64 = 1;
pub const FMT_BYTES: i64 = 2;

pub const METHOD_SELECTOR: usize = 0;
pub const METHOD_CLASS: usize = 1;
pub const METHOD_SOURCE: usize = 2;
pub const METHOD_PRIM: usize = 3;
pub const METHOD_ARGC: usize = 4;

pub const MAX_COMPACT: usize = 31;

/// Handles created at boot that the runtime refers to directly.
#[derive(Clone, Debug, Default)]
pub(crate) struct Known {
    pub object_root: Handle,
    pub class_class: Handle,
    pub metaclass: Handle,
    pub string: Handle,
    pub symbol: Handle,
    pub array: Handle,
    pub method_dict: Handle,
    pub undefined_object: Handle,
    pub boolean: Handle,
    pub true_class: Handle,
    pub false_class: Handle,
    pub small_integer: Handle,
    pub block_closure: Handle,
    pub compiled_method: Handle,
    pub message: Handle,
    pub interception: Handle,
    pub proxy_handler: Handle,
    pub true_obj: Handle,
    pub false_obj: Handle,
    pub ghost: Handle,
    pub transcript: Handle,
    pub sym_identity: Handle,
    pub sym_ci: Handle,
    pub sym_dnu: Handle,
    pub sym_run: Handle,
}

/// A place that holds a reference, as reported by [`Runtime::references_to`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Referrer {
    Slot { holder: Handle, index: usize },
    Class { holder: Handle },
    Global(String),
    Workspace(String),
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub interceptions: u64,
    pub swap_ins: u64,
    pub swap_outs: u64,
    /// Nil-dictionary traps taken, whatever the trace mode.
    pub traps: u64,
}

pub struct Runtime {
    pub(crate) heap: Heap,
    pub(crate) k: Known,
    pub(crate) traps: Option<TrapHierarchy>,
    globals: IndexMap<String, Value>,
    pub(crate) workspace: IndexMap<String, Value>,
    symbols: HashMap<String, Handle>,
    registry: IndexMap<String, Handle>,
    compact: Vec<Handle>,
    pub(crate) handlers: Vec<HandlerSpec>,
    pub trace: Trace,
    pub counters: Counters,
    pub(crate) swap: SwapState,
    pub(crate) wrapped: WrapRegistry,
    pub(crate) depth: usize,
    pub(crate) rng: ChaCha8Rng,
}

impl Default for Runtime {
    fn default() -> Self {
        Self::new()
    }
}

impl Runtime {
    /// Booted runtime with the trap hierarchy installed.
    pub fn new() -> Self {
        let mut rt = Self::bare();
        rt.install_trap_hierarchy()
            .expect("fresh runtime accepts the trap hierarchy");
        rt
    }

    /// Booted runtime without the trap hierarchy.
    pub fn bare() -> Self {
        let mut rt = Runtime {
            heap: Heap::new(),
            k: Known::default(),
            traps: None,
            globals: IndexMap::new(),
            workspace: IndexMap::new(),
            symbols: HashMap::new(),
            registry: IndexMap::new(),
            compact: Vec::new(),
            handlers: Vec::new(),
            trace: Trace::new(TraceMode::Off),
            counters: Counters::default(),
            swap: SwapState::default(),
            wrapped: WrapRegistry::default(),
            depth: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        rt.boot().expect("boot image is well formed");
        rt
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn boot(&mut self) -> Result<()> {
        let shell = |rt: &mut Runtime| rt.heap.alloc(HeapObject::slotted(Handle::default(), vec![Value::Nil; 7]));
        self.k.object_root = shell(self);
        self.k.class_class = shell(self);
        self.k.metaclass = shell(self);
        self.k.string = shell(self);
        self.k.symbol = shell(self);
        self.k.array = shell(self);
        self.k.method_dict = shell(self);
        let k = self.k.clone();
        self.finish_class(k.object_root, "ObjectRoot", Value::Nil, &[], FMT_FIXED, false)?;
        let class_ivars: Vec<String> = CLASS_IVARS.iter().map(|s| s.to_string()).collect();
        self.finish_class(k.class_class, "Class", k.object_root.into(), &class_ivars, FMT_FIXED, false)?;
        self.finish_class(k.metaclass, "Metaclass", k.class_class.into(), &["thisClass".into()], FMT_FIXED, false)?;
        self.finish_class(k.string, "String", k.object_root.into(), &[], FMT_BYTES, false)?;
        self.finish_class(k.symbol, "Symbol", k.string.into(), &[], FMT_BYTES, false)?;
        self.finish_class(k.array, "Array", k.object_root.into(), &[], FMT_VARIABLE, false)?;
        self.finish_class(k.method_dict, "MethodDictionary", k.object_root.into(), &[], FMT_VARIABLE, false)?;

        self.k.sym_identity = self.intern(crate::dispatch::IDENTITY_SELECTOR);
        self.k.sym_ci = self.intern(crate::dispatch::CANNOT_INTERPRET);
        self.k.sym_dnu = self.intern(crate::dispatch::DOES_NOT_UNDERSTAND);
        self.k.sym_run = self.intern(crate::dispatch::RUN_WITH_IN);
        let root: Value = k.object_root.into();
        self.k.undefined_object = self.define_class("UndefinedObject", root, &[], false)?;
        self.k.boolean = self.define_class("Boolean", root, &[], false)?;
        self.k.true_class = self.define_class("True", self.k.boolean.into(), &[], false)?;
        self.k.false_class = self.define_class("False", self.k.boolean.into(), &[], false)?;
        self.k.small_integer = self.define_class("SmallInteger", root, &[], false)?;
        self.k.block_closure = self.define_class("BlockClosure", root, &[], false)?;
        self.k.compiled_method = self.define_class(
            "CompiledMethod",
            root,
            &names(&["selector", "methodClass", "source", "primitive", "numArgs"]),
            false,
        )?;
        self.k.message = self.define_class("Message", root, &names(&["selector", "arguments", "lookupClass"]), false)?;
        self.k.interception = self.define_class("Interception", root, &names(&["message", "proxy", "receiver"]), false)?;
        let transcript = self.define_class("TranscriptStream", root, &[], false)?;
        let ghost = self.define_class("GhostFacade", root, &[], false)?;
        self.k.proxy_handler = self.define_class("ProxyHandler", root, &[], false)?;
        for sub in ["SimpleForwarderHandler", "RecordingHandler", "MethodWrapperHandler", "MareaProxyHandler"] {
            self.define_class(sub, self.k.proxy_handler.into(), &[], false)?;
        }

        self.k.true_obj = self.instantiate(self.k.true_class)?;
        self.k.false_obj = self.instantiate(self.k.false_class)?;
        self.k.transcript = self.instantiate(transcript)?;
        self.k.ghost = self.instantiate(ghost)?;
        self.set_global("true", self.k.true_obj.into());
        self.set_global("false", self.k.false_obj.into());
        self.set_global("Transcript", self.k.transcript.into());
        self.set_global("Ghost", self.k.ghost.into());

        let boot_homes: Vec<String> = self.registry.keys().filter(|n| !n.ends_with(" class")).cloned().collect();
        let refs: Vec<&str> = boot_homes.iter().map(String::as_str).collect();
        self.install_primitives(&refs)
    }

    /// Install every catalogued primitive whose home class is in `homes`.
    pub(crate) fn install_primitives(&mut self, homes: &[&str]) -> Result<()> {
        for &prim in Prim::ALL {
            let home = prim.home();
            let (base, class_side) = match home.strip_suffix(" class") {
                Some(b) => (b, true),
                None => (home, false),
            };
            if !homes.contains(&base) {
                continue;
            }
            let mut class = *self
                .registry
                .get(base)
                .ok_or_else(|| Error::FatalRuntime(format!("primitive home {base} missing")))?;
            if class_side {
                class = self.class_of(class.into())?;
            }
            let method = self.new_primitive_method(class, prim)?;
            let sel = self.intern(prim.selector());
            self.method_dict_put(class, sel, method.into())?;
        }
        Ok(())
    }

    pub(crate) fn new_primitive_method(&mut self, class: Handle, prim: Prim) -> Result<Handle> {
        let sel = self.intern(prim.selector());
        Ok(self.heap.alloc(HeapObject::slotted(
            self.k.compiled_method,
            vec![
                sel.into(),
                class.into(),
                Value::Nil,
                Value::Int(prim.index() as i64),
                Value::Int(prim.arity() as i64),
            ],
        )))
    }

    fn finish_class(
        &mut self,
        h: Handle,
        name: &str,
        superclass: Value,
        own_ivars: &[String],
        format: i64,
        compact: bool,
    ) -> Result<()> {
        let mut ivars = match superclass {
            Value::Ref(s) => self.class_ivars(s)?,
            _ => Vec::new(),
        };
        ivars.extend(own_ivars.iter().cloned());
        let compact_index = if compact {
            if self.compact.len() >= MAX_COMPACT {
                return Err(Error::CompactTableFull);
            }
            self.compact.push(h);
            self.compact.len() as i64
        } else {
            0
        };
        let dict = self.new_method_dict();
        let name_sym = self.intern(name);
        let ivar_syms: Vec<Value> = ivars.iter().map(|n| self.intern(n).into()).collect();
        let ivar_array = self.new_array(ivar_syms);
        let inst_size = ivars.len() as i64;
        let meta_super: Value = match superclass {
            Value::Ref(s) => self.class_of(s.into())?.into(),
            _ => self.k.class_class.into(),
        };
        let meta_dict = self.new_method_dict();
        let meta_name = self.intern(&format!("{name} class"));
        let class_ivar_syms: Vec<Value> = CLASS_IVARS.iter().map(|n| self.intern(n).into()).collect();
        let meta_ivars = self.new_array(class_ivar_syms);
        let meta = self.heap.alloc(HeapObject::slotted(
            self.k.metaclass,
            vec![
                meta_super,
                meta_dict.into(),
                meta_name.into(),
                meta_ivars.into(),
                Value::Int(CLASS_IVARS.len() as i64),
                Value::Int(FMT_FIXED),
                Value::Int(0),
                h.into(),
            ],
        ));
        let obj = self.heap.get_mut(h)?;
        obj.class = meta;
        obj.slots = vec![
            superclass,
            dict.into(),
            name_sym.into(),
            ivar_array.into(),
            Value::Int(inst_size),
            Value::Int(format),
            Value::Int(compact_index),
        ];
        self.registry.insert(name.to_string(), h);
        self.registry.insert(format!("{name} class"), meta);
        self.globals.insert(name.to_string(), h.into());
        Ok(())
    }

    /// Create a class with an empty method dictionary and bind it globally.
    pub fn define_class(
        &mut self,
        name: &str,
        superclass: Value,
        slot_names: &[String],
        compact: bool,
    ) -> Result<Handle> {
        if self.globals.contains_key(name) {
            return Err(Error::DuplicateClass(name.to_string()));
        }
        if compact && self.compact.len() >= MAX_COMPACT {
            return Err(Error::CompactTableFull);
        }
        let format = match superclass {
            Value::Ref(s) => self.class_layout(s)?.1,
            Value::Nil => FMT_FIXED,
            Value::Int(_) => return Err(Error::NotClassShaped("an integer superclass".into())),
        };
        let h = self.heap.alloc(HeapObject::slotted(Handle::default(), vec![Value::Nil; 7]));
        self.finish_class(h, name, superclass, slot_names, format, compact)?;
        Ok(h)
    }

    // ----- objects -----

    /// Instance size and format of a class-shaped object.
    pub fn class_layout(&self, class: Handle) -> Result<(usize, i64)> {
        let obj = self.heap.get(class)?;
        match (obj.slots.get(CLS_INST_SIZE), obj.slots.get(CLS_FORMAT)) {
            (Some(Value::Int(size)), Some(Value::Int(fmt))) if obj.slots.len() >= 7 => Ok((*size as usize, *fmt)),
            _ => Err(Error::NotClassShaped(self.describe(class.into()))),
        }
    }

    pub fn instantiate(&mut self, class: Handle) -> Result<Handle> {
        self.instantiate_sized(class, 0)
    }

    /// New instance with `extra` indexed slots (or bytes) beyond the fixed layout.
    pub fn instantiate_sized(&mut self, class: Handle, extra: usize) -> Result<Handle> {
        let (size, format) = self.class_layout(class)?;
        let obj = match format {
            FMT_BYTES => HeapObject::bytes(class, vec![0; extra]),
            FMT_VARIABLE => HeapObject::slotted(class, vec![Value::Nil; size + extra]),
            _ => HeapObject::slotted(class, vec![Value::Nil; size]),
        };
        Ok(self.heap.alloc(obj))
    }

    pub(crate) fn alloc(&mut self, obj: HeapObject) -> Handle {
        self.heap.alloc(obj)
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn slot_read(&self, obj: Value, index: usize) -> Result<Value> {
        let h = self.slotted_handle(obj)?;
        let o = self.heap.get(h)?;
        o.slots.get(index).copied().ok_or(Error::SlotIndex {
            index,
            len: o.slots.len(),
        })
    }

    pub fn slot_write(&mut self, obj: Value, index: usize, value: Value) -> Result<()> {
        let h = self.slotted_handle(obj)?;
        let o = self.heap.get_mut(h)?;
        let len = o.slots.len();
        let slot = o.slots.get_mut(index).ok_or(Error::SlotIndex { index, len })?;
        *slot = value;
        Ok(())
    }

    pub fn slot_count(&self, obj: Value) -> Result<usize> {
        let h = self.slotted_handle(obj)?;
        Ok(self.heap.get(h)?.slots.len())
    }

    fn slotted_handle(&self, obj: Value) -> Result<Handle> {
        match obj {
            Value::Ref(h) => Ok(h),
            Value::Int(i) => Err(Error::NotSlotted(i.to_string())),
            Value::Nil => Err(Error::NotSlotted("nil".into())),
        }
    }

    pub fn class_of(&self, v: Value) -> Result<Handle> {
        match v {
            Value::Nil => Ok(self.k.undefined_object),
            Value::Int(_) => Ok(self.k.small_integer),
            Value::Ref(h) => {
                let class = self.heap.get(h)?.class;
                self.heap.resolve(class)
            }
        }
    }

    pub fn identical(&self, a: Value, b: Value) -> bool {
        match (a, b) {
            (Value::Ref(x), Value::Ref(y)) => match (self.heap.resolve(x), self.heap.resolve(y)) {
                (Ok(rx), Ok(ry)) => rx == ry,
                _ => x == y,
            },
            _ => a == b,
        }
    }

    pub(crate) fn resolve(&self, h: Handle) -> Result<Handle> {
        self.heap.resolve(h)
    }

    // ----- strings, symbols, arrays, booleans -----

    pub fn intern(&mut self, s: &str) -> Handle {
        if let Some(h) = self.symbols.get(s) {
            return *h;
        }
        let h = self.heap.alloc(HeapObject::bytes(self.k.symbol, s.as_bytes().to_vec()));
        self.symbols.insert(s.to_string(), h);
        h
    }

    pub fn new_string(&mut self, s: &str) -> Handle {
        self.heap.alloc(HeapObject::bytes(self.k.string, s.as_bytes().to_vec()))
    }

    pub fn new_array(&mut self, items: Vec<Value>) -> Handle {
        self.heap.alloc(HeapObject::slotted(self.k.array, items))
    }

    pub(crate) fn new_method_dict(&mut self) -> Handle {
        self.heap.alloc(HeapObject::slotted(self.k.method_dict, Vec::new()))
    }

    pub fn boolean(&self, b: bool) -> Value {
        if b { self.k.true_obj } else { self.k.false_obj }.into()
    }

    pub fn truth(&self, v: Value) -> Option<bool> {
        if self.identical(v, self.k.true_obj.into()) {
            Some(true)
        } else if self.identical(v, self.k.false_obj.into()) {
            Some(false)
        } else {
            None
        }
    }

    /// Text of a String or Symbol; None for anything else.
    pub fn text_of(&self, v: Value) -> Option<String> {
        let h = v.as_handle()?;
        let obj = self.heap.get(h).ok()?;
        let class = self.heap.resolve(obj.class).ok()?;
        if class != self.k.string && class != self.k.symbol {
            return None;
        }
        obj.bytes.as_ref().map(|b| String::from_utf8_lossy(b).into_owned())
    }

    pub fn is_symbol(&self, v: Value) -> bool {
        self.class_of(v).map(|c| c == self.k.symbol).unwrap_or(false)
    }

    /// Text of a Symbol only.
    pub fn symbol_text(&self, v: Value) -> Option<String> {
        if self.is_symbol(v) {
            self.text_of(v)
        } else {
            None
        }
    }

    pub fn is_array(&self, v: Value) -> bool {
        self.class_of(v).map(|c| c == self.k.array).unwrap_or(false)
    }

    pub fn array_items(&self, v: Value) -> Result<Vec<Value>> {
        if !self.is_array(v) {
            return Err(Error::PrimitiveFailed(format!("{} is not an Array", self.describe(v))));
        }
        Ok(self.heap.get(v.as_handle().expect("arrays are heap objects"))?.slots.clone())
    }

    // ----- globals and workspace -----

    pub fn global(&self, name: &str) -> Option<Value> {
        self.globals.get(name).copied()
    }

    pub fn set_global(&mut self, name: &str, v: Value) {
        self.globals.insert(name.to_string(), v);
    }

    pub fn variable(&self, name: &str) -> Option<Value> {
        self.workspace.get(name).copied()
    }

    pub fn set_variable(&mut self, name: &str, v: Value) {
        self.workspace.insert(name.to_string(), v);
    }

    pub fn class_named(&self, name: &str) -> Option<Handle> {
        self.registry.get(name).copied()
    }

    /// Name under which `class` can be found again by [`Runtime::class_named`].
    pub(crate) fn registered_class_name(&self, class: Handle) -> Option<String> {
        let r = self.heap.resolve(class).ok()?;
        let name = self.class_name(r)?;
        let back = self.registry.get(&name)?;
        (self.heap.resolve(*back).ok()? == r).then_some(name)
    }

    // ----- class metadata -----

    /// Whether `v` is a class or metaclass (not a proxy standing in for one).
    pub fn is_behavior(&self, v: Value) -> bool {
        let Ok(c) = self.class_of(v) else { return false };
        if c == self.k.metaclass {
            return true;
        }
        self.class_of(c.into()).map(|m| m == self.k.metaclass).unwrap_or(false)
    }

    pub fn class_name(&self, class: Handle) -> Option<String> {
        if !self.is_behavior(class.into()) {
            return None;
        }
        self.text_of(self.heap.get(class).ok()?.slots[CLS_NAME])
    }

    pub fn class_ivars(&self, class: Handle) -> Result<Vec<String>> {
        let arr = self.slot_read(class.into(), CLS_IVARS)?;
        if arr.is_nil() {
            return Ok(Vec::new());
        }
        Ok(self
            .array_items(arr)?
            .into_iter()
            .filter_map(|v| self.text_of(v))
            .collect())
    }

    pub fn superclass_of(&self, class: Handle) -> Result<Value> {
        self.slot_read(class.into(), CLS_SUPER)
    }

    /// Human-readable name for a class-position object: its name if it is a
    /// class, otherwise the name of its own class in angle brackets.
    pub fn describe_class(&self, class: Handle) -> String {
        if let Some(n) = self.class_name(class) {
            return n;
        }
        match self.class_of(class.into()).ok().and_then(|c| self.class_name(c)) {
            Some(n) => format!("<{n}>"),
            None => format!("<{class}>"),
        }
    }

    /// Short description of any value, computed without sends.
    pub fn describe(&self, v: Value) -> String {
        self.describe_nested(v, 0)
    }

    fn describe_nested(&self, v: Value, depth: usize) -> String {
        match v {
            Value::Nil => "nil".into(),
            Value::Int(i) => i.to_string(),
            Value::Ref(h) => {
                if let Some(t) = self.symbol_text(v) {
                    return format!("#{t}");
                }
                if let Some(t) = self.text_of(v) {
                    return format!("'{}'", t.replace('\'', "''"));
                }
                match self.truth(v) {
                    Some(true) => return "true".into(),
                    Some(false) => return "false".into(),
                    None => {}
                }
                if let Some(n) = self.class_name(h) {
                    return n;
                }
                if depth < 4 && self.is_array(v) {
                    if let Ok(items) = self.array_items(v) {
                        let parts: Vec<String> = items.iter().map(|x| self.describe_nested(*x, depth + 1)).collect();
                        return format!("#({})", parts.join(" "));
                    }
                }
                match self.class_of(v) {
                    Ok(c) => {
                        let cn = self.describe_class(c);
                        let article = if cn.starts_with(['A', 'E', 'I', 'O', 'U']) { "an" } else { "a" };
                        format!("{article} {cn}")
                    }
                    Err(_) => format!("{h}"),
                }
            }
        }
    }

    // ----- method dictionaries -----

    pub(crate) fn dict_get(&self, dict: Handle, selector: Handle) -> Result<Option<Value>> {
        let obj = self.heap.get(dict)?;
        for pair in obj.slots.chunks(2) {
            if let [Value::Ref(k), v] = pair {
                if *k == selector {
                    return Ok(Some(*v));
                }
            }
        }
        Ok(None)
    }

    pub(crate) fn dict_put(&mut self, dict: Handle, selector: Handle, value: Value) -> Result<()> {
        let obj = self.heap.get_mut(dict)?;
        for pair in obj.slots.chunks_mut(2) {
            if pair[0] == Value::Ref(selector) {
                pair[1] = value;
                return Ok(());
            }
        }
        obj.slots.push(selector.into());
        obj.slots.push(value);
        Ok(())
    }

    pub(crate) fn dict_selectors(&self, dict: Handle) -> Result<Vec<Handle>> {
        let obj = self.heap.get(dict)?;
        Ok(obj.slots.chunks(2).filter_map(|p| p[0].as_handle()).collect())
    }

    /// Bind `selector` to `method` in a class's method dictionary.
    pub fn method_dict_put(&mut self, class: Handle, selector: Handle, method: Value) -> Result<()> {
        let dict = self.slot_read(class.into(), CLS_DICT)?;
        let Value::Ref(d) = dict else {
            return Err(Error::NotClassShaped(format!(
                "{} has no method dictionary",
                self.describe_class(class)
            )));
        };
        self.dict_put(d, selector, method)
    }

    /// Raw dictionary entry for `selector` in `class` itself (no inheritance).
    pub fn method_at(&mut self, class: Handle, selector: &str) -> Result<Option<Value>> {
        let sel = self.intern(selector);
        match self.slot_read(class.into(), CLS_DICT)? {
            Value::Ref(d) => self.dict_get(d, sel),
            _ => Ok(None),
        }
    }

    // ----- become -----

    fn check_becomable(&self, v: Value) -> Result<Handle> {
        let h = match v {
            Value::Ref(h) => self.heap.resolve(h)?,
            other => return Err(Error::RefusedBecome(format!("{} is not a heap object", self.describe(other)))),
        };
        let k = &self.k;
        if h == k.true_obj || h == k.false_obj || h == k.small_integer || self.is_symbol(v) {
            return Err(Error::RefusedBecome(format!("{} is a special object", self.describe(v))));
        }
        Ok(h)
    }

    /// Exchange every reference to `a` with every reference to `b`.
    pub fn swap_identity(&mut self, a: Value, b: Value) -> Result<()> {
        let ra = self.check_becomable(a)?;
        let rb = self.check_becomable(b)?;
        self.heap.exchange(ra, rb);
        Ok(())
    }

    /// Redirect every reference to `a` so it reaches `b`. References to `b` are untouched.
    pub fn become_forward(&mut self, a: Value, b: Value) -> Result<()> {
        let ra = self.check_becomable(a)?;
        let rb = match b {
            Value::Ref(h) => self.heap.resolve(h)?,
            other => return Err(Error::RefusedBecome(format!("{} is not a heap object", self.describe(other)))),
        };
        self.heap.forward(ra, rb);
        Ok(())
    }

    /// Every slot, class reference, global and workspace binding that reaches `v`.
    pub fn references_to(&self, v: Value) -> Vec<Referrer> {
        let target = match v {
            Value::Ref(h) => match self.heap.resolve(h) {
                Ok(t) => t,
                Err(_) => return Vec::new(),
            },
            _ => return Vec::new(),
        };
        let hits = |x: Value| matches!(x, Value::Ref(h) if self.heap.resolve(h).ok() == Some(target));
        let mut out = Vec::new();
        for (holder, obj) in self.heap.live() {
            if self.heap.resolve(obj.class).ok() == Some(target) {
                out.push(Referrer::Class { holder });
            }
            for (index, s) in obj.slots.iter().enumerate() {
                if hits(*s) {
                    out.push(Referrer::Slot { holder, index });
                }
            }
        }
        for (name, g) in &self.globals {
            if hits(*g) {
                out.push(Referrer::Global(name.clone()));
            }
        }
        for (name, w) in &self.workspace {
            if hits(*w) {
                out.push(Referrer::Workspace(name.clone()));
            }
        }
        out
    }

    pub(crate) fn globals_iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.globals.iter()
    }

    // ----- footprint -----

    pub fn is_compact_class(&self, class: Handle) -> bool {
        match self.heap.resolve(class) {
            Ok(r) => self.compact.iter().any(|c| self.heap.resolve(*c).ok() == Some(r)),
            Err(_) => false,
        }
    }

    pub fn compact_class_count(&self) -> usize {
        self.compact.len()
    }

    pub fn footprint_of(&self, v: Value) -> usize {
        let Value::Ref(h) = v else { return 0 };
        match self.heap.get(h) {
            Ok(obj) => footprint::object_bytes(self.is_compact_class(obj.class), obj.body_bytes()),
            Err(_) => 0,
        }
    }

    pub fn footprint_total<I: IntoIterator<Item = Value>>(&self, objects: I) -> usize {
        let mut seen = std::collections::HashSet::new();
        objects
            .into_iter()
            .filter(|v| match v {
                Value::Ref(h) => self.heap.resolve(*h).map(|r| seen.insert(r)).unwrap_or(false),
                _ => false,
            })
            .map(|v| self.footprint_of(v))
            .sum()
    }

    /// Modeled footprint of every live object.
    pub fn live_footprint(&self) -> usize {
        self.heap
            .live()
            .map(|(_, o)| footprint::object_bytes(self.is_compact_class(o.class), o.body_bytes()))
            .sum()
    }

    pub fn live_objects(&self) -> usize {
        self.heap.live().count()
    }

    pub(crate) fn handler_id(&self, v: Value) -> Option<usize> {
        match &self.heap.get(v.as_handle()?).ok()?.extra {
            Extra::Handler(id) => Some(*id),
            _ => None,
        }
    }

    pub fn handler_spec(&self, handler: Value) -> Option<&HandlerSpec> {
        self.handler_id(handler).and_then(|id| self.handlers.get(id))
    }

    pub fn handler_spec_mut(&mut self, handler: Value) -> Option<&mut HandlerSpec> {
        let id = self.handler_id(handler)?;
        self.handlers.get_mut(id)
    }
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boot_classes_obey_slot_contract() {
        let rt = Runtime::bare();
        let user_root = rt.class_named("ObjectRoot").unwrap();
        assert_eq!(rt.superclass_of(user_root).unwrap(), Value::Nil);
        assert!(rt.is_behavior(user_root.into()));
        let meta = rt.class_of(user_root.into()).unwrap();
        assert_eq!(rt.class_name(meta).unwrap(), "ObjectRoot class");
        assert_eq!(rt.class_of(meta.into()).unwrap(), rt.k.metaclass);
        assert_eq!(rt.superclass_of(meta).unwrap(), Value::Ref(rt.k.class_class));
    }

    #[test]
    fn define_and_instantiate() {
        let mut rt = Runtime::bare();
        let root = rt.class_named("ObjectRoot").unwrap();
        let user = rt.define_class("User", root.into(), &["name".into()], false).unwrap();
        let kurt = rt.instantiate(user).unwrap();
        assert_eq!(rt.slot_count(kurt.into()).unwrap(), 1);
        assert_eq!(rt.class_of(kurt.into()).unwrap(), user);
        assert_eq!(rt.footprint_of(kurt.into()), 12);
        assert!(matches!(
            rt.define_class("User", root.into(), &[], false),
            Err(Error::DuplicateClass(_))
        ));
        let point = rt.define_class("Point", root.into(), &["x".into(), "y".into()], false).unwrap();
        let p = rt.instantiate(point).unwrap();
        assert_eq!(rt.footprint_of(p.into()), 16);
    }

    #[test]
    fn rootless_class() {
        let mut rt = Runtime::bare();
        let empty = rt.define_class("Empty", Value::Nil, &[], false).unwrap();
        assert_eq!(rt.superclass_of(empty).unwrap(), Value::Nil);
        let meta = rt.class_of(empty.into()).unwrap();
        assert_eq!(rt.superclass_of(meta).unwrap(), Value::Ref(rt.k.class_class));
    }

    #[test]
    fn compact_budget() {
        let mut rt = Runtime::bare();
        let root: Value = rt.class_named("ObjectRoot").unwrap().into();
        let mut made = rt.compact_class_count();
        while made < MAX_COMPACT {
            rt.define_class(&format!("C{made}"), root, &[], true).unwrap();
            made += 1;
        }
        assert!(matches!(rt.define_class("Overflow", root, &[], true), Err(Error::CompactTableFull)));
        assert_eq!(rt.compact_class_count(), MAX_COMPACT);
    }

    #[test]
    fn slot_access_errors() {
        let mut rt = Runtime::bare();
        assert!(matches!(rt.slot_read(Value::Int(3), 0), Err(Error::NotSlotted(_))));
        let arr = rt.new_array(vec![Value::Int(1)]);
        rt.slot_write(arr.into(), 0, Value::Int(9)).unwrap();
        assert_eq!(rt.slot_read(arr.into(), 0).unwrap(), Value::Int(9));
        assert!(matches!(rt.slot_read(arr.into(), 1), Err(Error::SlotIndex { index: 1, len: 1 })));
    }

    #[test]
    fn become_exchanges_references() {
        let mut rt = Runtime::bare();
        let a = rt.new_string("a");
        let b = rt.new_string("b");
        let holder = rt.new_array(vec![a.into(), b.into()]);
        let sa = rt.heap.get(a).unwrap().serial();
        rt.swap_identity(a.into(), b.into()).unwrap();
        assert_eq!(rt.text_of(rt.slot_read(holder.into(), 0).unwrap()).unwrap(), "b");
        assert_eq!(rt.text_of(rt.slot_read(holder.into(), 1).unwrap()).unwrap(), "a");
        assert_eq!(rt.heap.get(b).unwrap().serial(), sa);
        rt.swap_identity(a.into(), a.into()).unwrap();
        assert_eq!(rt.text_of(a.into()).unwrap(), "b");
    }

    #[test]
    fn become_refuses_specials() {
        let mut rt = Runtime::bare();
        let x = rt.new_string("x");
        for bad in [Value::Int(3), Value::Nil, rt.boolean(true), rt.boolean(false), rt.k.small_integer.into()] {
            assert!(matches!(rt.swap_identity(bad, x.into()), Err(Error::RefusedBecome(_))));
            assert!(matches!(rt.swap_identity(x.into(), bad), Err(Error::RefusedBecome(_))));
        }
        let sym = rt.intern("foo");
        assert!(matches!(rt.swap_identity(sym.into(), x.into()), Err(Error::RefusedBecome(_))));
    }

    #[test]
    fn become_forward_merges_referrers() {
        let mut rt = Runtime::bare();
        let a = rt.new_string("a");
        let b = rt.new_string("b");
        let h1 = rt.new_array(vec![a.into()]);
        let h2 = rt.new_array(vec![b.into()]);
        rt.become_forward(a.into(), b.into()).unwrap();
        assert!(rt.references_to(a.into()).len() == 2);
        assert!(rt.identical(a.into(), b.into()));
        let refs = rt.references_to(b.into());
        assert!(refs.contains(&Referrer::Slot { holder: h1, index: 0 }));
        assert!(refs.contains(&Referrer::Slot { holder: h2, index: 0 }));
    }

    #[test]
    fn references_include_globals_and_class_refs() {
        let mut rt = Runtime::bare();
        let root = rt.class_named("ObjectRoot").unwrap();
        let user = rt.define_class("User", root.into(), &[], false).unwrap();
        let kurt = rt.instantiate(user).unwrap();
        let refs = rt.references_to(user.into());
        assert!(refs.contains(&Referrer::Global("User".into())));
        assert!(refs.contains(&Referrer::Class { holder: kurt }));
        let fresh = rt.new_string("lonely");
        assert!(rt.references_to(fresh.into()).is_empty());
    }

    #[test]
    fn identity() {
        let mut rt = Runtime::bare();
        let x = rt.new_string("x");
        assert!(rt.identical(x.into(), x.into()));
        assert!(rt.identical(Value::Int(3), Value::Int(3)));
        assert!(!rt.identical(Value::Int(3), Value::Nil));
        assert_eq!(rt.intern("abc"), rt.intern("abc"));
    }
}
