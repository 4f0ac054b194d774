//! Modeled memory footprint under a 32-bit object layout.
//!
//! Regular objects carry an 8-byte header (12 once the body exceeds 255
//! bytes). Instances of compact classes encode their class in the first
//! header word and save 4 bytes in both cases.

use serde::Serialize;

pub const SLOT_SIZE: usize = 4;
pub const REGULAR_HEADER_SMALL: usize = 8;
pub const REGULAR_HEADER_LARGE: usize = 12;
pub const COMPACT_HEADER_SMALL: usize = 4;
pub const COMPACT_HEADER_LARGE: usize = 8;
pub const LARGE_BODY_THRESHOLD: usize = 255;

pub fn header_bytes(compact: bool, body_bytes: usize) -> usize {
    let large = body_bytes > LARGE_BODY_THRESHOLD;
    match (compact, large) {
        (true, false) => COMPACT_HEADER_SMALL,
        (true, true) => COMPACT_HEADER_LARGE,
        (false, false) => REGULAR_HEADER_SMALL,
        (false, true) => REGULAR_HEADER_LARGE,
    }
}

pub fn object_bytes(compact: bool, body_bytes: usize) -> usize {
    header_bytes(compact, body_bytes) + body_bytes
}

/// Before/after comparison of two object populations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootprintReport {
    pub total_before: usize,
    pub total_after: usize,
    pub proxy_count: usize,
    pub bytes_saved: i64,
    pub percent_saved: f64,
}

impl FootprintReport {
    pub fn new(total_before: usize, total_after: usize, proxy_count: usize) -> Self {
        let bytes_saved = total_before as i64 - total_after as i64;
        let percent_saved = if total_before == 0 {
            0.0
        } else {
            bytes_saved as f64 * 100.0 / total_before as f64
        };
        FootprintReport {
            total_before,
            total_after,
            proxy_count,
            bytes_saved,
            percent_saved,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_table() {
        // two slots
        assert_eq!(object_bytes(false, 8), 16);
        assert_eq!(object_bytes(true, 8), 12);
        // one slot, compact
        assert_eq!(object_bytes(true, 4), 8);
        assert_eq!(header_bytes(true, 300), 8);
        assert_eq!(header_bytes(false, 300), 12);
        assert_eq!(header_bytes(true, 255), 4);
        assert_eq!(header_bytes(true, 256), 8);
    }

    #[test]
    fn report_arithmetic() {
        let r = FootprintReport::new(1600, 8, 1);
        assert_eq!(r.bytes_saved, 1592);
        assert!((r.percent_saved - 99.5).abs() < 1e-9);
    }
}
