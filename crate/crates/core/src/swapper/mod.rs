//! Swapping object graphs out to segments and back in on demand.

pub mod proxy_id;
pub mod segment;
pub mod store;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::footprint::FootprintReport;
use crate::ghost::ProxyKind;
use crate::heap::{Extra, HeapObject};
use crate::runtime::Runtime;
use crate::trace::TraceRecord;
use crate::value::{Handle, Value};

pub use proxy_id::{decode_proxy_id, encode_proxy_id};
use segment::{Record, RecordBody, Segment, SlotTag};
pub use store::SegmentStore;

#[derive(Clone, Debug)]
pub(crate) struct GraphRecord {
    /// Original member handles in segment position order.
    pub members: Vec<Handle>,
    pub proxies: Vec<(u32, Handle)>,
    pub member_bytes: usize,
}

#[derive(Debug, Default)]
pub struct SwapState {
    pub store: SegmentStore,
    next_graph: u32,
    pub(crate) graphs: BTreeMap<u16, GraphRecord>,
}

/// Run summary with stable key names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub objects: usize,
    pub bytes_before: usize,
    pub bytes_after: usize,
    pub proxies: usize,
    pub interceptions: u64,
    pub swap_ins: u64,
    pub swap_outs: u64,
}

impl Report {
    pub fn to_text(&self) -> String {
        format!(
            "objects: {}\nbytes_before: {}\nbytes_after: {}\nproxies: {}\ninterceptions: {}\nswap_ins: {}\nswap_outs: {}\n",
            self.objects, self.bytes_before, self.bytes_after, self.proxies, self.interceptions, self.swap_ins, self.swap_outs
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl Runtime {
    pub fn set_segment_store(&mut self, store: SegmentStore) {
        self.swap.store = store;
    }

    /// Graph ids currently swapped out.
    pub fn swapped_graphs(&self) -> Vec<u16> {
        self.swap.graphs.keys().copied().collect()
    }

    /// Whether a member is excluded from graphs (it stays behind as an external).
    fn is_graph_boundary(&self, h: Handle, roots: &HashSet<Handle>) -> Result<bool> {
        let v = Value::Ref(h);
        if roots.contains(&h) {
            return Ok(false);
        }
        let k = &self.k;
        Ok(self.is_behavior(v)
            || self.is_symbol(v)
            || h == k.true_obj
            || h == k.false_obj
            || h == k.ghost
            || h == k.transcript
            || self.proxy_kind(v).is_some()
            || matches!(self.heap.get(h)?.extra, Extra::Handler(_)))
    }

    /// Members reachable from `roots`, in breadth-first order.
    pub fn graph_members(&self, roots: &[Value]) -> Result<Vec<Handle>> {
        let mut root_set = HashSet::new();
        let mut queue = VecDeque::new();
        for r in roots {
            let h = match r {
                Value::Ref(h) => self.resolve(*h)?,
                other => return Err(Error::RefusedBecome(format!("{} cannot be swapped", self.describe(*other)))),
            };
            if self.proxy_kind(h.into()).is_some() || h == self.k.true_obj || h == self.k.false_obj || self.is_symbol(h.into()) {
                return Err(Error::RefusedBecome(format!("{} cannot be swapped", self.describe(h.into()))));
            }
            if root_set.insert(h) {
                queue.push_back(h);
            }
        }
        let mut seen: HashSet<Handle> = root_set.clone();
        let mut out = Vec::new();
        while let Some(h) = queue.pop_front() {
            out.push(h);
            let obj = self.heap.get(h)?;
            if matches!(obj.extra, Extra::Block(_)) {
                return Err(Error::SwapFault("blocks cannot be swapped out".into()));
            }
            for s in &obj.slots {
                if let Value::Ref(x) = s {
                    let x = self.resolve(*x)?;
                    if !seen.contains(&x) && !self.is_graph_boundary(x, &root_set)? {
                        seen.insert(x);
                        queue.push_back(x);
                    }
                }
            }
        }
        Ok(out)
    }

    fn encode_graph(&self, graph: u16, members: &[Handle]) -> Result<Segment> {
        let positions: HashMap<Handle, u32> = members.iter().enumerate().map(|(i, h)| (*h, i as u32)).collect();
        let mut externals: Vec<u32> = Vec::new();
        let mut ext_index: HashMap<Handle, u32> = HashMap::new();
        let mut records = Vec::with_capacity(members.len());
        for &m in members {
            let obj = self.heap.get(m)?;
            let class_name = self.registered_class_name(obj.class).ok_or_else(|| {
                Error::SwapFault(format!(
                    "class of {} cannot be named at swap-in",
                    self.describe(m.into())
                ))
            })?;
            let body = match &obj.bytes {
                Some(b) => RecordBody::Bytes(b.clone()),
                None => {
                    let mut tags = Vec::with_capacity(obj.slots.len());
                    for s in &obj.slots {
                        tags.push(match s {
                            Value::Nil => SlotTag::Nil,
                            Value::Int(i) => SlotTag::Immediate(*i),
                            Value::Ref(x) => {
                                let x = self.resolve(*x)?;
                                match positions.get(&x) {
                                    Some(p) => SlotTag::Position(*p),
                                    None => {
                                        let next = externals.len() as u32;
                                        let idx = *ext_index.entry(x).or_insert_with(|| {
                                            externals.push(x.ordinal());
                                            next
                                        });
                                        SlotTag::External(idx)
                                    }
                                }
                            }
                        });
                    }
                    RecordBody::Slotted(tags)
                }
            };
            records.push(Record { class_name, body });
        }
        Ok(Segment { graph, records, externals })
    }

    /// Members referenced from outside the graph, by full scan.
    fn externally_referenced(&self, members: &[Handle]) -> HashSet<Handle> {
        let set: HashSet<Handle> = members.iter().copied().collect();
        let mut out = HashSet::new();
        let hit = |v: Value, out: &mut HashSet<Handle>| {
            if let Value::Ref(h) = v {
                if let Ok(r) = self.heap.resolve(h) {
                    if set.contains(&r) {
                        out.insert(r);
                    }
                }
            }
        };
        for (holder, obj) in self.heap.live() {
            if set.contains(&holder) {
                continue;
            }
            hit(obj.class.into(), &mut out);
            for s in &obj.slots {
                hit(*s, &mut out);
            }
        }
        for (_, v) in self.globals_iter() {
            hit(*v, &mut out);
        }
        for v in self.workspace.values() {
            hit(*v, &mut out);
        }
        out
    }

    /// Serialize the graph reachable from `roots` and replace its entry points by proxies.
    pub fn swap_out(&mut self, roots: &[Value]) -> Result<u16> {
        if roots.is_empty() {
            return Err(Error::SwapFault("nothing to swap out".into()));
        }
        self.trap_hierarchy()?;
        let graph_no = self.swap.next_graph;
        if graph_no >= proxy_id::GRAPH_LIMIT {
            return Err(Error::Encoding(format!("graph id {graph_no} needs more than 15 bits")));
        }
        let graph = graph_no as u16;
        let members = self.graph_members(roots)?;
        if members.len() > proxy_id::POSITION_LIMIT as usize {
            return Err(Error::Encoding(format!("{} members exceed 16-bit positions", members.len())));
        }
        let segment = self.encode_graph(graph, &members)?;
        let bytes = segment.encode()?;
        let member_bytes = self.footprint_total(members.iter().map(|h| Value::Ref(*h)));

        let mut entry = self.externally_referenced(&members);
        for r in roots {
            if let Value::Ref(h) = r {
                entry.insert(self.resolve(*h)?);
            }
        }
        self.swap.store.put(graph, bytes)?;
        self.swap.next_graph += 1;

        let traps = self.trap_hierarchy()?.clone();
        let mut proxies = Vec::new();
        for (pos, &m) in members.iter().enumerate() {
            if entry.contains(&m) {
                let id = encode_proxy_id(graph_no, pos as u32)?;
                let proxy = if self.is_behavior(m.into()) {
                    HeapObject::slotted(
                        traps.marea_class_proxy,
                        vec![traps.lookup_delegator.into(), Value::Nil, Value::Int(id)],
                    )
                } else {
                    HeapObject::slotted(traps.marea_proxy, vec![Value::Int(id)])
                };
                let p = self.alloc(proxy);
                self.heap.forward(m, p);
                proxies.push((pos as u32, p));
            } else {
                self.heap.mark_swapped(m, graph);
            }
        }
        self.counters.swap_outs += 1;
        self.trace.push(TraceRecord::SwapOut {
            graph,
            objects: members.len(),
            proxies: proxies.len(),
        });
        self.swap.graphs.insert(
            graph,
            GraphRecord {
                members,
                proxies,
                member_bytes,
            },
        );
        Ok(graph)
    }

    /// Materialize a swapped-out graph and redirect its proxies to it.
    pub fn swap_in(&mut self, graph: u16) -> Result<usize> {
        let record = self
            .swap
            .graphs
            .get(&graph)
            .cloned()
            .ok_or_else(|| Error::SwapFault(format!("graph {graph} is not swapped out")))?;
        let bytes = self.swap.store.get(graph)?;
        let segment = Segment::decode(&bytes)?;
        if segment.graph != graph {
            return Err(Error::SwapFault(format!(
                "segment for graph {graph} carries graph id {}",
                segment.graph
            )));
        }
        if segment.records.len() != record.members.len() {
            return Err(Error::SwapFault(format!(
                "segment for graph {graph} has {} records, expected {}",
                segment.records.len(),
                record.members.len()
            )));
        }
        let mut externals = Vec::with_capacity(segment.externals.len());
        for &o in &segment.externals {
            let h = Handle::from_index(o as usize);
            if !self.heap.exists(h) {
                return Err(Error::SwapFault(format!("external ordinal {o} is not in the object table")));
            }
            externals.push(h);
        }
        let mut classes = Vec::with_capacity(segment.records.len());
        for r in &segment.records {
            let c = self
                .class_named(&r.class_name)
                .ok_or_else(|| Error::SwapFault(format!("unknown class {}", r.class_name)))?;
            classes.push(c);
        }
        let fresh: Vec<Handle> = segment
            .records
            .iter()
            .zip(&classes)
            .map(|(r, &c)| match &r.body {
                RecordBody::Bytes(b) => self.alloc(HeapObject::bytes(c, b.clone())),
                RecordBody::Slotted(s) => self.alloc(HeapObject::slotted(c, vec![Value::Nil; s.len()])),
            })
            .collect();
        for (i, r) in segment.records.iter().enumerate() {
            if let RecordBody::Slotted(tags) = &r.body {
                let slots: Vec<Value> = tags
                    .iter()
                    .map(|t| match t {
                        SlotTag::Nil => Value::Nil,
                        SlotTag::Immediate(v) => Value::Int(*v),
                        SlotTag::Position(p) => fresh[*p as usize].into(),
                        SlotTag::External(e) => externals[*e as usize].into(),
                    })
                    .collect();
                self.heap.get_mut(fresh[i])?.slots = slots;
            }
        }
        for &(pos, p) in &record.proxies {
            self.heap.forward(p, fresh[pos as usize]);
        }
        for (pos, &m) in record.members.iter().enumerate() {
            self.heap.forward(m, fresh[pos]);
        }
        self.swap.graphs.remove(&graph);
        self.swap.store.remove(graph)?;
        self.counters.swap_ins += 1;
        self.trace.push(TraceRecord::SwapIn {
            graph,
            objects: fresh.len(),
        });
        Ok(fresh.len())
    }

    /// Graph id carried by a swapper proxy, read without a send.
    pub fn marea_graph_of(&self, proxy: Value) -> Result<u16> {
        let id = match self.proxy_kind(proxy) {
            Some(ProxyKind::Marea) => self.slot_read(proxy, 0)?,
            Some(ProxyKind::MareaClass) => self.slot_read(proxy, 2)?,
            _ => return Err(Error::SwapFault(format!("{} is not a swapper proxy", self.describe(proxy)))),
        };
        let id = id.as_int().ok_or_else(|| Error::SwapFault("proxy id is not an integer".into()))?;
        Ok(decode_proxy_id(id)?.0)
    }

    /// Swap the proxy's graph in and re-send the message to what it now denotes.
    pub fn marea_default_action(&mut self, interception: Value) -> Result<Value> {
        let (message, proxy, _) = self.interception_parts(interception)?;
        let (sel, args, _) = self.message_parts(message)?;
        let graph = self.marea_graph_of(proxy)?;
        self.swap_in(graph)?;
        self.send_sym(proxy, sel, &args)
    }

    /// Swap a class's graph in and re-send to the instance that trapped.
    pub(crate) fn marea_instance_action(&mut self, interception: Value) -> Result<Value> {
        let (message, proxy, receiver) = self.interception_parts(interception)?;
        let (sel, args, _) = self.message_parts(message)?;
        let graph = self.marea_graph_of(proxy)?;
        self.swap_in(graph)?;
        self.send_sym(receiver, sel, &args)
    }

    /// Bytes the swapped-out members would occupy, less their live proxies.
    fn swapped_saving(&self) -> (usize, usize) {
        let mut released = 0;
        let mut proxy_bytes = 0;
        for g in self.swap.graphs.values() {
            released += g.member_bytes;
            for (_, p) in &g.proxies {
                if self.heap.is_live(*p) {
                    proxy_bytes += self.footprint_of((*p).into());
                }
            }
        }
        (released, proxy_bytes)
    }

    pub fn footprint_report(&self) -> FootprintReport {
        let after = self.live_footprint();
        let (released, proxy_bytes) = self.swapped_saving();
        let proxies: usize = self.swap.graphs.values().map(|g| g.proxies.len()).sum();
        FootprintReport::new(after + released - proxy_bytes, after, proxies)
    }

    pub fn report(&self) -> Report {
        let f = self.footprint_report();
        Report {
            objects: self.live_objects(),
            bytes_before: f.total_before,
            bytes_after: f.total_after,
            proxies: self.proxy_count(),
            interceptions: self.counters.interceptions,
            swap_ins: self.counters.swap_ins,
            swap_outs: self.counters.swap_outs,
        }
    }
}
