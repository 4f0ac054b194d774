//! Binary segment format for swapped-out graphs.
//!
//! All integers are big-endian. Layout:
//! `"GSW1"`, version u8, graph u16, count u32, then `count` records, then
//! the external table (count u32 followed by u32 handle ordinals).

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GSW1";
pub const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlotTag {
    Nil,
    Immediate(i64),
    /// Position of another record in the same segment.
    Position(u32),
    /// Index into the external table.
    External(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecordBody {
    Slotted(Vec<SlotTag>),
    Bytes(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub class_name: String,
    pub body: RecordBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub graph: u16,
    pub records: Vec<Record>,
    /// Handle ordinals of objects outside the graph.
    pub externals: Vec<u32>,
}

fn fault(msg: impl Into<String>) -> Error {
    Error::SwapFault(format!("corrupt segment: {}", msg.into()))
}

impl Segment {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.graph.to_be_bytes());
        out.extend_from_slice(&u32::try_from(self.records.len()).map_err(|_| Error::Encoding("too many records".into()))?.to_be_bytes());
        for r in &self.records {
            let name = r.class_name.as_bytes();
            let len = u16::try_from(name.len()).map_err(|_| Error::Encoding("class name too long".into()))?;
            out.extend_from_slice(&len.to_be_bytes());
            out.extend_from_slice(name);
            match &r.body {
                RecordBody::Slotted(slots) => {
                    out.push(0);
                    let n = u16::try_from(slots.len()).map_err(|_| Error::Encoding("too many slots".into()))?;
                    out.extend_from_slice(&n.to_be_bytes());
                    for s in slots {
                        match s {
                            SlotTag::Nil => out.push(0),
                            SlotTag::Immediate(i) => {
                                out.push(1);
                                out.extend_from_slice(&i.to_be_bytes());
                            }
                            SlotTag::Position(p) => {
                                out.push(2);
                                out.extend_from_slice(&p.to_be_bytes());
                            }
                            SlotTag::External(e) => {
                                out.push(3);
                                out.extend_from_slice(&e.to_be_bytes());
                            }
                        }
                    }
                }
                RecordBody::Bytes(b) => {
                    out.push(1);
                    let n = u32::try_from(b.len()).map_err(|_| Error::Encoding("byte body too long".into()))?;
                    out.extend_from_slice(&n.to_be_bytes());
                    out.extend_from_slice(b);
                }
            }
        }
        out.extend_from_slice(&(self.externals.len() as u32).to_be_bytes());
        for e in &self.externals {
            out.extend_from_slice(&e.to_be_bytes());
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Segment> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(fault("bad magic"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(fault(format!("unsupported version {version}")));
        }
        let graph = r.u16()?;
        let count = r.u32()? as usize;
        let mut records = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let class_name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| fault("class name is not UTF-8"))?;
            let body = match r.u8()? {
                0 => {
                    let n = r.u16()? as usize;
                    let mut slots = Vec::with_capacity(n);
                    for _ in 0..n {
                        slots.push(match r.u8()? {
                            0 => SlotTag::Nil,
                            1 => SlotTag::Immediate(i64::from_be_bytes(r.take(8)?.try_into().expect("8 bytes"))),
                            2 => SlotTag::Position(r.u32()?),
                            3 => SlotTag::External(r.u32()?),
                            t => return Err(fault(format!("unknown slot tag {t}"))),
                        });
                    }
                    RecordBody::Slotted(slots)
                }
                1 => {
                    let n = r.u32()? as usize;
                    RecordBody::Bytes(r.take(n)?.to_vec())
                }
                k => return Err(fault(format!("unknown record kind {k}"))),
            };
            records.push(Record { class_name, body });
        }
        let ext = r.u32()? as usize;
        let mut externals = Vec::with_capacity(ext.min(1 << 16));
        for _ in 0..ext {
            externals.push(r.u32()?);
        }
        if r.at != bytes.len() {
            return Err(fault("trailing bytes"));
        }
        let seg = Segment { graph, records, externals };
        seg.validate()?;
        Ok(seg)
    }

    /// Every position and external index is in range.
    pub fn validate(&self) -> Result<()> {
        for rec in &self.records {
            if let RecordBody::Slotted(slots) = &rec.body {
                for s in slots {
                    match s {
                        SlotTag::Position(p) if *p as usize >= self.records.len() => {
                            return Err(fault(format!("position {p} out of range")))
                        }
                        SlotTag::External(e) if *e as usize >= self.externals.len() => {
                            return Err(fault(format!("external {e} out of range")))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| fault("truncated"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Segment {
        Segment {
            graph: 7,
            records: vec![
                Record {
                    class_name: "Node".into(),
                    body: RecordBody::Slotted(vec![SlotTag::Immediate(-5), SlotTag::Position(1), SlotTag::External(0), SlotTag::Nil]),
                },
                Record {
                    class_name: "String".into(),
                    body: RecordBody::Bytes(b"hi".to_vec()),
                },
            ],
            externals: vec![42],
        }
    }

    #[test]
    fn exact_bytes() {
        let bytes = sample().encode().unwrap();
        let mut want = b"GSW1\x01\x00\x07\x00\x00\x00\x02".to_vec();
        want.extend_from_slice(b"\x00\x04Node\x00\x00\x04");
        want.extend_from_slice(b"\x01\xff\xff\xff\xff\xff\xff\xff\xfb");
        want.extend_from_slice(b"\x02\x00\x00\x00\x01");
        want.extend_from_slice(b"\x03\x00\x00\x00\x00");
        want.push(0);
        want.extend_from_slice(b"\x00\x06String\x01\x00\x00\x00\x02hi");
        want.extend_from_slice(b"\x00\x00\x00\x01\x00\x00\x00\x2a");
        assert_eq!(bytes, want);
    }

    #[test]
    fn round_trip() {
        let s = sample();
        assert_eq!(Segment::decode(&s.encode().unwrap()).unwrap(), s);
    }

    #[test]
    fn corruption_is_a_swap_fault() {
        let mut bytes = sample().encode().unwrap();
        bytes[0] = b'X';
        assert!(matches!(Segment::decode(&bytes), Err(Error::SwapFault(_))));
        let bytes = sample().encode().unwrap();
        assert!(matches!(Segment::decode(&bytes[..bytes.len() - 1]), Err(Error::SwapFault(_))));
        let mut bad = sample();
        bad.records[0].body = RecordBody::Slotted(vec![SlotTag::Position(9)]);
        assert!(Segment::decode(&bad.encode().unwrap()).is_err());
    }
}
