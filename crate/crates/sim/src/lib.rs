//! Message-passing execution of a retrieval scheme: one client, `K` node
//! actors, and an optional eavesdropper on a colluding set of nodes.

use thiserror::Error;

pub mod cluster;
pub mod node;
pub mod observer;
pub mod session;
pub mod wire;

pub use cluster::{Cluster, ClusterConfig, Transport};
pub use node::Fault;
pub use observer::{observe, ObservationReport, ObservedRun, Observer, ObserverLog};
pub use session::{run_local, run_session, Client, SessionOptions};
pub use wire::{ErrorCode, FrameKind, WireError, WireMessage};

use pir_core::analysis::AnalysisError;
use pir_core::retrieval::{DecodeError, RetrievalError};
use pir_core::storage::CodeError;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("node {node}: no reply before the timeout")]
    Timeout { node: usize },
    #[error("node {node}: link closed")]
    Disconnected { node: usize },
    #[error("node {node}: malformed frame: {source}")]
    Malformed { node: usize, source: WireError },
    #[error("node {node}: i/o error: {message}")]
    Io { node: usize, message: String },
    #[error("node {node}: reported error {code:?} (raw code {raw})")]
    NodeError { node: usize, code: Option<ErrorCode>, raw: u32 },
    #[error("node {node}: answer symbol {value} is not reduced modulo q")]
    ModulusMismatch { node: usize, value: u32 },
    #[error("node {node}: unexpected reply: {detail}")]
    UnexpectedFrame { node: usize, detail: String },
    #[error("scheme is not certified (retrievable={retrievable}, private={private}); pass --unsafe to run it anyway")]
    NotCertified { retrievable: bool, private: bool },
    #[error("observer: {0}")]
    Observer(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl SessionError {
    /// Node the failure is attributed to, if any.
    pub fn node(&self) -> Option<usize> {
        match self {
            SessionError::Timeout { node }
            | SessionError::Disconnected { node }
            | SessionError::Malformed { node, .. }
            | SessionError::Io { node, .. }
            | SessionError::NodeError { node, .. }
            | SessionError::ModulusMismatch { node, .. }
            | SessionError::UnexpectedFrame { node, .. } => Some(*node),
            _ => None,
        }
    }
}
