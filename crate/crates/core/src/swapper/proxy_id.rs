//! Packing of (graph, position) pairs into one immediate integer.

use crate::error::{Error, Result};

pub const GRAPH_BITS: u32 = 15;
pub const POSITION_BITS: u32 = 16;
pub const GRAPH_LIMIT: u32 = 1 << GRAPH_BITS;
pub const POSITION_LIMIT: u32 = 1 << POSITION_BITS;

pub fn encode_proxy_id(graph: u32, position: u32) -> Result<i64> {
    if graph >= GRAPH_LIMIT {
        return Err(Error::Encoding(format!("graph id {graph} needs more than {GRAPH_BITS} bits")));
    }
    if position >= POSITION_LIMIT {
        return Err(Error::Encoding(format!(
            "position {position} needs more than {POSITION_BITS} bits"
        )));
    }
    Ok(((graph << POSITION_BITS) | position) as i64)
}

pub fn decode_proxy_id(id: i64) -> Result<(u16, u16)> {
    if !(0..(1i64 << (GRAPH_BITS + POSITION_BITS))).contains(&id) {
        return Err(Error::Encoding(format!("{id} is not a proxy id")));
    }
    Ok(((id >> POSITION_BITS) as u16, (id & 0xFFFF) as u16))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners() {
        assert_eq!(encode_proxy_id(0, 0).unwrap(), 0);
        assert_eq!(encode_proxy_id(1, 2).unwrap(), 65538);
        let max = encode_proxy_id(GRAPH_LIMIT - 1, POSITION_LIMIT - 1).unwrap();
        assert_eq!(max, (1 << 31) - 1);
        assert_eq!(decode_proxy_id(max).unwrap(), (32767, 65535));
        assert!(encode_proxy_id(GRAPH_LIMIT, 0).is_err());
        assert!(encode_proxy_id(0, POSITION_LIMIT).is_err());
        assert!(decode_proxy_id(-1).is_err());
        assert!(decode_proxy_id(1 << 31).is_err());
    }
}
