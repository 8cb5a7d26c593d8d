//! Bag file format.
//!
//! ```text
//! "HBAG" | version: u16
//! repeated: topic_len: u32 | topic: utf-8 | stamp: f64 | payload_len: u32 | payload
//! ```
//!
//! All integers and floats little-endian. Records are sorted by stamp, ties
//! kept in write order.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::name::QualifiedName;

pub const MAGIC: &[u8; 4] = b"HBAG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct BagRecord {
    pub topic: QualifiedName,
    pub stamp: f64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("corrupt bag at byte {offset}: {reason}")]
pub struct BagFormatError {
    pub offset: usize,
    pub reason: String,
}

impl BagFormatError {
    fn new(offset: usize, reason: impl Into<String>) -> Self {
        Self {
            offset,
            reason: reason.into(),
        }
    }
}

pub fn encode_header(out: &mut Vec<u8>) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
}

pub fn encode_record(out: &mut Vec<u8>, rec: &BagRecord) {
    let topic = rec.topic.to_string();
    out.extend_from_slice(&(topic.len() as u32).to_le_bytes());
    out.extend_from_slice(topic.as_bytes());
    out.extend_from_slice(&rec.stamp.to_le_bytes());
    out.extend_from_slice(&(rec.payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&rec.payload);
}

/// Stable-sorts `records` by stamp and serializes a complete bag.
pub fn encode(records: &mut [BagRecord]) -> Vec<u8> {
    records.sort_by(|a, b| a.stamp.total_cmp(&b.stamp));
    let mut out = Vec::new();
    encode_header(&mut out);
    for r in records.iter() {
        encode_record(&mut out, r);
    }
    out
}

/// Streaming reader over an in-memory bag.
pub struct BagReader<'a> {
    buf: &'a [u8],
    pos: usize,
    failed: bool,
}

impl<'a> BagReader<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self, BagFormatError> {
        if buf.len() < HEADER_LEN {
            return Err(BagFormatError::new(buf.len(), "truncated header"));
        }
        if &buf[..4] != MAGIC {
            return Err(BagFormatError::new(0, "bad magic"));
        }
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != VERSION {
            return Err(BagFormatError::new(4, alloc::format!("unsupported version {version}")));
        }
        Ok(Self {
            buf,
            pos: HEADER_LEN,
            failed: false,
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], BagFormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| BagFormatError::new(self.pos, alloc::format!("truncated {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn read_record(&mut self) -> Result<BagRecord, BagFormatError> {
        let start = self.pos;
        let len = u32::from_le_bytes(self.take(4, "topic length")?.try_into().expect("4")) as usize;
        let topic_at = self.pos;
        let topic = core::str::from_utf8(self.take(len, "topic")?)
            .map_err(|_| BagFormatError::new(topic_at, "topic is not utf-8"))?;
        let topic: QualifiedName = topic
            .parse()
            .map_err(|e| BagFormatError::new(topic_at, alloc::format!("{e}")))?;
        let stamp_at = self.pos;
        let stamp = f64::from_le_bytes(self.take(8, "stamp")?.try_into().expect("8"));
        if !(stamp.is_finite() && stamp >= 0.0) {
            return Err(BagFormatError::new(stamp_at, "invalid stamp"));
        }
        let plen = u32::from_le_bytes(self.take(4, "payload length")?.try_into().expect("4")) as usize;
        let payload = self.take(plen, "payload")?.to_vec();
        debug_assert!(self.pos > start);
        Ok(BagRecord {
            topic,
            stamp,
            payload,
        })
    }
}

impl Iterator for BagReader<'_> {
    type Item = Result<BagRecord, BagFormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.pos == self.buf.len() {
            return None;
        }
        let r = self.read_record();
        self.failed = r.is_err();
        Some(r)
    }
}

/// Decodes a whole bag, failing on the first corrupt record.
pub fn decode(buf: &[u8]) -> Result<Vec<BagRecord>, BagFormatError> {
    let mut reader = BagReader::new(buf)?;
    let mut out = Vec::new();
    let mut last = f64::NEG_INFINITY;
    while reader.pos < buf.len() {
        let at = reader.pos;
        let r = reader.read_record()?;
        if r.stamp < last {
            return Err(BagFormatError::new(at, "record out of stamp order"));
        }
        last = r.stamp;
        out.push(r);
    }
    Ok(out)
}
