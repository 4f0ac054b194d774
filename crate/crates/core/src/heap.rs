//! The object table.
//!
//! Every heap object lives behind one table entry. References are handles
//! (entry indices), so exchanging two entries' payloads redirects every
//! reference at once, and a one-way forward is a single entry rewrite.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::method::MethodCode;
use crate::script::eval::Closure;
use crate::value::{Handle, Value};

/// Runtime-only payload attached to an object. Never serialized.
#[derive(Clone, Default)]
pub enum Extra {
    #[default]
    None,
    /// Parsed body of a compiled method; rebuilt from source when absent.
    Code(Rc<MethodCode>),
    Block(Rc<Closure>),
    Handler(usize),
}

impl std::fmt::Debug for Extra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extra::None => f.write_str("None"),
            Extra::Code(c) => write!(f, "Code({})", c.selector),
            Extra::Block(_) => f.write_str("Block"),
            Extra::Handler(id) => write!(f, "Handler({id})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HeapObject {
    pub class: Handle,
    pub slots: Vec<Value>,
    /// Raw body for byte-indexed objects (strings, symbols).
    pub bytes: Option<Vec<u8>>,
    pub extra: Extra,
    serial: u64,
}

impl HeapObject {
    pub fn slotted(class: Handle, slots: Vec<Value>) -> Self {
        HeapObject {
            class,
            slots,
            bytes: None,
            extra: Extra::None,
            serial: 0,
        }
    }

    pub fn bytes(class: Handle, bytes: Vec<u8>) -> Self {
        HeapObject {
            class,
            slots: Vec::new(),
            bytes: Some(bytes),
            extra: Extra::None,
            serial: 0,
        }
    }

    pub fn with_extra(mut self, extra: Extra) -> Self {
        self.extra = extra;
        self
    }

    /// Modeled payload size: raw length for byte objects, 4 bytes per slot otherwise.
    pub fn body_bytes(&self) -> usize {
        match &self.bytes {
            Some(b) => b.len(),
            None => self.slots.len() * crate::footprint::SLOT_SIZE,
        }
    }

    /// Allocation serial of this payload. Travels with the payload across
    /// `become`, so tests can follow an object independently of its handle.
    pub fn serial(&self) -> u64 {
        self.serial
    }
}

#[derive(Clone, Debug)]
enum Entry {
    Live(HeapObject),
    Forward(Handle),
    /// Member of a swapped-out graph with no proxy standing in for it.
    Swapped(u16),
}

#[derive(Default)]
pub struct Heap {
    entries: Vec<Entry>,
    next_serial: u64,
}

impl Heap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, mut obj: HeapObject) -> Handle {
        self.next_serial += 1;
        obj.serial = self.next_serial;
        self.entries.push(Entry::Live(obj));
        Handle::from_index(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Follow forwarding to the entry that currently holds a payload.
    pub fn resolve(&self, h: Handle) -> Result<Handle> {
        let mut cur = h;
        for _ in 0..=self.entries.len() {
            match self.entries.get(cur.index()) {
                Some(Entry::Live(_)) => return Ok(cur),
                Some(Entry::Forward(next)) => cur = *next,
                Some(Entry::Swapped(g)) => {
                    return Err(Error::SwapFault(format!(
                        "{h} belongs to swapped-out graph {g} and has no proxy"
                    )))
                }
                None => return Err(Error::FatalRuntime(format!("dangling handle {h}"))),
            }
        }
        Err(Error::FatalRuntime(format!("forwarding cycle at {h}")))
    }

    pub fn get(&self, h: Handle) -> Result<&HeapObject> {
        let r = self.resolve(h)?;
        match &self.entries[r.index()] {
            Entry::Live(o) => Ok(o),
            _ => unreachable!("resolve answers live entries only"),
        }
    }

    pub fn get_mut(&mut self, h: Handle) -> Result<&mut HeapObject> {
        let r = self.resolve(h)?;
        match &mut self.entries[r.index()] {
            Entry::Live(o) => Ok(o),
            _ => unreachable!("resolve answers live entries only"),
        }
    }

    /// Exchange the payloads of two entries. Both handles must be resolved.
    pub(crate) fn exchange(&mut self, a: Handle, b: Handle) {
        if a != b {
            self.entries.swap(a.index(), b.index());
        }
    }

    /// Redirect `from` to `to`, dropping the payload at `from`.
    pub(crate) fn forward(&mut self, from: Handle, to: Handle) {
        if from != to {
            self.entries[from.index()] = Entry::Forward(to);
        }
    }

    pub(crate) fn mark_swapped(&mut self, h: Handle, graph: u16) {
        self.entries[h.index()] = Entry::Swapped(graph);
    }

    /// Live entries in table order.
    pub fn live(&self) -> impl Iterator<Item = (Handle, &HeapObject)> {
        self.entries.iter().enumerate().filter_map(|(i, e)| match e {
            Entry::Live(o) => Some((Handle::from_index(i), o)),
            _ => None,
        })
    }

    pub fn is_live(&self, h: Handle) -> bool {
        matches!(self.entries.get(h.index()), Some(Entry::Live(_)))
    }

    pub fn exists(&self, h: Handle) -> bool {
        h.index() < self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(n: usize) -> HeapObject {
        HeapObject::slotted(Handle::from_index(0), vec![Value::Nil; n])
    }

    #[test]
    fn exchange_moves_payloads_not_handles() {
        let mut heap = Heap::new();
        let a = heap.alloc(obj(1));
        let b = heap.alloc(obj(3));
        let sa = heap.get(a).unwrap().serial();
        heap.exchange(a, b);
        assert_eq!(heap.get(b).unwrap().serial(), sa);
        assert_eq!(heap.get(a).unwrap().slots.len(), 3);
    }

    #[test]
    fn forward_chains_resolve() {
        let mut heap = Heap::new();
        let a = heap.alloc(obj(0));
        let b = heap.alloc(obj(0));
        let c = heap.alloc(obj(0));
        heap.forward(a, b);
        heap.forward(b, c);
        assert_eq!(heap.resolve(a).unwrap(), c);
        assert_eq!(heap.live().count(), 1);
    }

    #[test]
    fn swapped_entries_fault() {
        let mut heap = Heap::new();
        let a = heap.alloc(obj(0));
        heap.mark_swapped(a, 7);
        assert!(matches!(heap.resolve(a), Err(Error::SwapFault(_))));
    }
}
