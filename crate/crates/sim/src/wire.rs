//! Binary framing shared by every transport.
//!
//! ```text
//! offset  size  field
//! 0       2     magic 0x50 0x52
//! 2       1     version (1)
//! 3       1     kind: 1=QUERY 2=ANSWER 3=STORE 4=ERROR
//! 4       2     node index, big-endian
//! 6       4     payload length, big-endian
//! 10      ..    payload
//! ```
//!
//! The payload is a 2-byte vector count followed by, for each vector, a
//! 4-byte element count and that many 4-byte big-endian residues.
//!
//! Payload conventions per kind:
//! * `STORE`: two vectors, `[q]` and the node's stored content.
//! * `QUERY`: the `R` query vectors.
//! * `ANSWER`: one vector of `R` answer symbols.
//! * `ERROR`: one vector holding a single [`ErrorCode`].

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 2] = [0x50, 0x52];
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
/// Frames larger than this are rejected before allocation.
pub const MAX_PAYLOAD: u32 = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Query = 1,
    Answer = 2,
    Store = 3,
    Error = 4,
}

impl FrameKind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::Query),
            2 => Some(Self::Answer),
            3 => Some(Self::Store),
            4 => Some(Self::Error),
            _ => None,
        }
    }
}

/// Reasons a node reports in an `ERROR` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Malformed = 1,
    NoContent = 2,
    DimensionMismatch = 3,
    ModulusMismatch = 4,
    BadModulus = 5,
}

impl ErrorCode {
    pub fn from_u32(v: u32) -> Option<Self> {
        match v {
            1 => Some(Self::Malformed),
            2 => Some(Self::NoContent),
            3 => Some(Self::DimensionMismatch),
            4 => Some(Self::ModulusMismatch),
            5 => Some(Self::BadModulus),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown frame kind {0}")]
    BadKind(u8),
    #[error("declared payload length {declared} does not match the {actual} bytes its counts describe")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("frame truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("payload of {0} bytes exceeds the frame limit")]
    TooLarge(u32),
    #[error("{0}")]
    Encode(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireMessage {
    pub kind: FrameKind,
    pub node: u16,
    pub vectors: Vec<Vec<u32>>,
}

impl WireMessage {
    pub fn new(kind: FrameKind, node: u16, vectors: Vec<Vec<u32>>) -> Self {
        Self { kind, node, vectors }
    }

    pub fn error(node: u16, code: ErrorCode) -> Self {
        Self::new(FrameKind::Error, node, vec![vec![code as u32]])
    }

    fn payload_len(&self) -> usize {
        2 + self.vectors.iter().map(|v| 4 + 4 * v.len()).sum::<usize>()
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        if self.vectors.len() > u16::MAX as usize {
            return Err(WireError::Encode(format!("{} vectors exceed the 2-byte count", self.vectors.len())));
        }
        let len = self.payload_len();
        if len > MAX_PAYLOAD as usize {
            return Err(WireError::TooLarge(len as u32));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + len);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.kind as u8);
        out.extend_from_slice(&self.node.to_be_bytes());
        out.extend_from_slice(&(len as u32).to_be_bytes());
        out.extend_from_slice(&(self.vectors.len() as u16).to_be_bytes());
        for v in &self.vectors {
            out.extend_from_slice(&(v.len() as u32).to_be_bytes());
            for &x in v {
                out.extend_from_slice(&x.to_be_bytes());
            }
        }
        Ok(out)
    }

    /// Parses one complete frame; trailing bytes are an error.
    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let header = parse_header(bytes)?;
        let end = HEADER_LEN + header.payload_len;
        if bytes.len() < end {
            return Err(WireError::Truncated { need: end, have: bytes.len() });
        }
        if bytes.len() > end {
            return Err(WireError::LengthMismatch { declared: header.payload_len, actual: bytes.len() - HEADER_LEN });
        }
        let vectors = parse_payload(&bytes[HEADER_LEN..end])?;
        Ok(Self { kind: header.kind, node: header.node, vectors })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), WireError> {
        w.write_all(&self.encode()?)?;
        w.flush()?;
        Ok(())
    }

    /// Reads exactly one frame from a stream.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, WireError> {
        let mut head = [0u8; HEADER_LEN];
        r.read_exact(&mut head)?;
        let header = parse_header(&head)?;
        let mut payload = vec![0u8; header.payload_len];
        r.read_exact(&mut payload)?;
        let vectors = parse_payload(&payload)?;
        Ok(Self { kind: header.kind, node: header.node, vectors })
    }
}

struct Header {
    kind: FrameKind,
    node: u16,
    payload_len: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated { need: HEADER_LEN, have: bytes.len() });
    }
    if bytes[0..2] != MAGIC {
        return Err(WireError::BadMagic([bytes[0], bytes[1]]));
    }
    if bytes[2] != VERSION {
        return Err(WireError::BadVersion(bytes[2]));
    }
    let kind = FrameKind::from_byte(bytes[3]).ok_or(WireError::BadKind(bytes[3]))?;
    let node = u16::from_be_bytes([bytes[4], bytes[5]]);
    let len = u32::from_be_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]);
    if len > MAX_PAYLOAD {
        return Err(WireError::TooLarge(len));
    }
    Ok(Header { kind, node, payload_len: len as usize })
}

fn parse_payload(payload: &[u8]) -> Result<Vec<Vec<u32>>, WireError> {
    let declared = payload.len();
    let take = |pos: usize, n: usize| -> Result<&[u8], WireError> {
        payload.get(pos..pos + n).ok_or(WireError::LengthMismatch { declared, actual: pos + n })
    };
    let count = u16::from_be_bytes(take(0, 2)?.try_into().expect("2 bytes")) as usize;
    let mut pos = 2;
    let mut vectors = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u32::from_be_bytes(take(pos, 4)?.try_into().expect("4 bytes")) as usize;
        pos += 4;
        let body = take(pos, len.checked_mul(4).ok_or(WireError::TooLarge(u32::MAX))?)?;
        vectors.push(body.chunks_exact(4).map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes"))).collect());
        pos += 4 * len;
    }
    if pos != declared {
        return Err(WireError::LengthMismatch { declared, actual: pos });
    }
    Ok(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_frame_is_bit_exact() {
        let msg = WireMessage::new(FrameKind::Answer, 2, vec![vec![1, 0x0102_0304]]);
        let bytes = msg.encode().unwrap();
        assert_eq!(
            bytes,
            vec![
                0x50, 0x52, 1, 2, // magic, version, kind
                0, 2, // node
                0, 0, 0, 14, // payload length
                0, 1, // one vector
                0, 0, 0, 2, // two elements
                0, 0, 0, 1, 1, 2, 3, 4,
            ]
        );
        assert_eq!(WireMessage::decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn empty_payload() {
        let msg = WireMessage::new(FrameKind::Query, 0, vec![]);
        let bytes = msg.encode().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 2);
        assert_eq!(WireMessage::decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn rejects_corruption() {
        let good = WireMessage::new(FrameKind::Query, 1, vec![vec![5, 6], vec![7]]).encode().unwrap();

        let mut bad = good.clone();
        bad[0] = 0;
        assert!(matches!(WireMessage::decode(&bad), Err(WireError::BadMagic(_))));

        let mut bad = good.clone();
        bad[2] = 2;
        assert!(matches!(WireMessage::decode(&bad), Err(WireError::BadVersion(2))));

        let mut bad = good.clone();
        bad[3] = 9;
        assert!(matches!(WireMessage::decode(&bad), Err(WireError::BadKind(9))));

        assert!(matches!(WireMessage::decode(&good[..good.len() - 1]), Err(WireError::Truncated { .. })));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(WireMessage::decode(&bad), Err(WireError::LengthMismatch { .. })));

        // Element count claims more than the payload holds.
        let mut bad = good.clone();
        bad[HEADER_LEN + 5] = 3;
        assert!(matches!(WireMessage::decode(&bad), Err(WireError::LengthMismatch { .. })));

        // Declared length longer than the counts describe.
        let mut bad = good.clone();
        bad[9] += 4;
        bad.extend_from_slice(&[0, 0, 0, 0]);
        assert!(matches!(WireMessage::decode(&bad), Err(WireError::LengthMismatch { .. })));
    }

    #[test]
    fn stream_round_trip() {
        let a = WireMessage::new(FrameKind::Store, 3, vec![vec![65537], vec![1, 2, 3]]);
        let b = WireMessage::error(3, ErrorCode::NoContent);
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        b.write_to(&mut buf).unwrap();
        let mut cursor = io::Cursor::new(buf);
        assert_eq!(WireMessage::read_from(&mut cursor).unwrap(), a);
        assert_eq!(WireMessage::read_from(&mut cursor).unwrap(), b);
        assert!(matches!(WireMessage::read_from(&mut cursor), Err(WireError::Io(_))));
    }

    #[test]
    fn oversized_length_rejected_before_allocation() {
        let mut head = vec![0x50, 0x52, 1, 1, 0, 0];
        head.extend_from_slice(&u32::MAX.to_be_bytes());
        assert!(matches!(WireMessage::read_from(&mut io::Cursor::new(head)), Err(WireError::TooLarge(_))));
    }
}
