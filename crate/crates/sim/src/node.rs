//! Storage node actor. Holds one content vector and answers queries with
//! inner products; nothing else survives between sessions.

use pir_core::{FieldError, PrimeField};

use crate::wire::{ErrorCode, FrameKind, WireMessage};

/// Misbehaviour injected into a node for failure tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Accepts queries and never replies.
    Hang,
    /// Exits as soon as a query arrives, closing its link.
    Crash,
    /// Replies with a frame whose magic is wrong.
    Garbage,
}

/// What the node loop should do after handling a frame.
#[derive(Debug, PartialEq, Eq)]
pub enum Reply {
    Send(Vec<u8>),
    Nothing,
    Exit,
}

#[derive(Debug)]
pub struct NodeState {
    node: u16,
    fault: Fault,
    stored: Option<(PrimeField, Vec<u32>)>,
}

impl NodeState {
    pub fn new(node: u16, fault: Fault) -> Self {
        Self { node, fault, stored: None }
    }

    /// Handles one raw frame. Bytes that do not parse produce an `ERROR`
    /// frame rather than killing the node.
    pub fn handle(&mut self, bytes: &[u8]) -> Reply {
        match WireMessage::decode(bytes) {
            Ok(msg) => self.handle_message(msg),
            Err(_) => self.error(ErrorCode::Malformed),
        }
    }

    pub fn handle_message(&mut self, msg: WireMessage) -> Reply {
        match msg.kind {
            FrameKind::Store => self.store(msg.vectors),
            FrameKind::Query => match self.fault {
                Fault::None => self.answer(&msg.vectors),
                Fault::Hang => Reply::Nothing,
                Fault::Crash => Reply::Exit,
                Fault::Garbage => Reply::Send(vec![0xde, 0xad, 0xbe, 0xef]),
            },
            FrameKind::Answer | FrameKind::Error => self.error(ErrorCode::Malformed),
        }
    }

    // STORE is acknowledged only on failure; a bad store surfaces as an
    // ERROR frame read in place of the first answer.
    fn store(&mut self, vectors: Vec<Vec<u32>>) -> Reply {
        let [q, content]: [Vec<u32>; 2] = match vectors.try_into() {
            Ok(v) => v,
            Err(_) => return self.error(ErrorCode::Malformed),
        };
        let field = match q.as_slice() {
            [q] => match PrimeField::new(*q as u64) {
                Ok(f) => f,
                Err(_) => return self.error(ErrorCode::BadModulus),
            },
            _ => return self.error(ErrorCode::Malformed),
        };
        if content.iter().any(|&x| !field.contains(x)) {
            self.stored = None;
            return self.error(ErrorCode::ModulusMismatch);
        }
        self.stored = Some((field, content));
        Reply::Nothing
    }

    fn answer(&self, queries: &[Vec<u32>]) -> Reply {
        let Some((field, content)) = &self.stored else {
            return self.error(ErrorCode::NoContent);
        };
        let mut values = Vec::with_capacity(queries.len());
        for q in queries {
            if q.len() != content.len() {
                return self.error(ErrorCode::DimensionMismatch);
            }
            match checked_dot(*field, q, content) {
                Ok(a) => values.push(a),
                Err(_) => return self.error(ErrorCode::ModulusMismatch),
            }
        }
        send(WireMessage::new(FrameKind::Answer, self.node, vec![values]))
    }

    fn error(&self, code: ErrorCode) -> Reply {
        send(WireMessage::error(self.node, code))
    }
}

fn checked_dot(field: PrimeField, a: &[u32], b: &[u32]) -> Result<u32, FieldError> {
    if let Some(&bad) = a.iter().find(|&&x| !field.contains(x)) {
        return Err(FieldError::Unreduced { value: bad as u64, q: field.modulus() });
    }
    Ok(field.dot(a, b))
}

fn send(msg: WireMessage) -> Reply {
    Reply::Send(msg.encode().expect("node replies are small"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode(reply: Reply) -> WireMessage {
        match reply {
            Reply::Send(bytes) => WireMessage::decode(&bytes).unwrap(),
            other => panic!("expected a frame, got {other:?}"),
        }
    }

    fn store_frame(q: u32, content: Vec<u32>) -> Vec<u8> {
        WireMessage::new(FrameKind::Store, 1, vec![vec![q], content]).encode().unwrap()
    }

    fn query_frame(vectors: Vec<Vec<u32>>) -> Vec<u8> {
        WireMessage::new(FrameKind::Query, 1, vectors).encode().unwrap()
    }

    #[test]
    fn answers_inner_products() {
        let mut node = NodeState::new(1, Fault::None);
        assert_eq!(node.handle(&store_frame(5, vec![1, 2, 3])), Reply::Nothing);
        let reply = decode(node.handle(&query_frame(vec![vec![1, 1, 1], vec![0, 4, 2]])));
        assert_eq!(reply, WireMessage::new(FrameKind::Answer, 1, vec![vec![1, 4]]));
    }

    #[test]
    fn error_codes() {
        let mut node = NodeState::new(1, Fault::None);
        let code = |reply: Reply| decode(reply).vectors[0][0];
        assert_eq!(code(node.handle(&query_frame(vec![vec![1]]))), ErrorCode::NoContent as u32);
        assert_eq!(code(node.handle(&store_frame(4, vec![1]))), ErrorCode::BadModulus as u32);
        assert_eq!(code(node.handle(&store_frame(5, vec![7]))), ErrorCode::ModulusMismatch as u32);
        node.handle(&store_frame(5, vec![1, 2]));
        assert_eq!(code(node.handle(&query_frame(vec![vec![1]]))), ErrorCode::DimensionMismatch as u32);
        assert_eq!(code(node.handle(&query_frame(vec![vec![1, 9]]))), ErrorCode::ModulusMismatch as u32);
        assert_eq!(code(node.handle(&[1, 2, 3])), ErrorCode::Malformed as u32);
    }

    #[test]
    fn faults() {
        let q = query_frame(vec![vec![1]]);
        let mut hang = NodeState::new(0, Fault::Hang);
        hang.handle(&store_frame(5, vec![1]));
        assert_eq!(hang.handle(&q), Reply::Nothing);
        let mut crash = NodeState::new(0, Fault::Crash);
        assert_eq!(crash.handle(&q), Reply::Exit);
        let mut garbage = NodeState::new(0, Fault::Garbage);
        let Reply::Send(bytes) = garbage.handle(&q) else { panic!() };
        assert!(WireMessage::decode(&bytes).is_err());
    }
}
