use std::sync::mpsc::Sender;

use rand::Rng;

use pir_core::retrieval::{decode, gen_queries, respond};
use pir_core::storage::store;
use pir_core::{AnswerBundle, QueryBundle, RecordMatrix, Scheme, Transcript};

use crate::cluster::{Cluster, ClusterConfig};
use crate::wire::{ErrorCode, FrameKind, WireMessage};
use crate::SessionError;

#[derive(Debug, Clone, Default)]
pub struct SessionOptions {
    pub cluster: ClusterConfig,
    /// Run schemes that fail certification.
    pub allow_uncertified: bool,
}

/// Client side of a running cluster that already holds the records.
pub struct Client<'a> {
    scheme: &'a Scheme,
    cluster: Cluster,
    tap: Option<(Vec<usize>, Sender<Vec<u8>>)>,
}

impl<'a> Client<'a> {
    /// Starts the nodes and sends each its `STORE` frame.
    pub fn connect(scheme: &'a Scheme, records: &[RecordMatrix], opts: &SessionOptions) -> Result<Self, SessionError> {
        if !opts.allow_uncertified {
            let report = scheme.certify()?;
            if !report.certified() {
                return Err(SessionError::NotCertified { retrievable: report.retrievable, private: report.private });
            }
        }
        let contents = store(records, &scheme.parity)?;
        let mut cluster = Cluster::start(scheme.params.k, &opts.cluster)?;
        let q = scheme.params.q();
        for content in contents {
            let msg = WireMessage::new(FrameKind::Store, content.node as u16, vec![vec![q], content.vector]);
            cluster.send(content.node, &msg)?;
        }
        Ok(Self { scheme, cluster, tap: None })
    }

    /// Copies every `QUERY` frame sent to a node in `alpha` into `tap`.
    /// Nothing else reaches the tap.
    pub fn attach_observer(&mut self, alpha: &[usize], tap: Sender<Vec<u8>>) {
        self.tap = Some((alpha.to_vec(), tap));
    }

    pub fn retrieve<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R) -> Result<Transcript, SessionError> {
        let params = &self.scheme.params;
        let (mask, queries) = gen_queries(&self.scheme.v, m, params, rng)?;
        for bundle in &queries {
            let msg = WireMessage::new(FrameKind::Query, bundle.node as u16, bundle.vectors.clone());
            let bytes = msg.encode().map_err(|source| SessionError::Malformed { node: bundle.node, source })?;
            if let Some((alpha, tap)) = &self.tap {
                if alpha.contains(&bundle.node) {
                    // A closed observer is not the session's problem.
                    let _ = tap.send(bytes.clone());
                }
            }
            self.cluster.send_raw(bundle.node, &bytes)?;
        }
        let mut answers = Vec::with_capacity(params.k);
        for node in 0..params.k {
            answers.push(self.read_answer(node)?);
        }
        let decoded = decode(&self.scheme.v, &self.scheme.parity, &answers, m, params)?;
        Ok(Transcript { m, mask, queries, answers, decoded: Some(decoded) })
    }

    fn read_answer(&mut self, node: usize) -> Result<AnswerBundle, SessionError> {
        let msg = self.cluster.recv(node)?;
        if msg.node as usize != node {
            return Err(SessionError::UnexpectedFrame { node, detail: format!("frame labelled node {}", msg.node) });
        }
        match msg.kind {
            FrameKind::Answer => {}
            FrameKind::Error => {
                let raw = msg.vectors.first().and_then(|v| v.first()).copied().unwrap_or(0);
                return Err(SessionError::NodeError { node, code: ErrorCode::from_u32(raw), raw });
            }
            kind => return Err(SessionError::UnexpectedFrame { node, detail: format!("{kind:?} frame") }),
        }
        let [values]: [Vec<u32>; 1] = msg.vectors.try_into().map_err(|v: Vec<_>| SessionError::UnexpectedFrame {
            node,
            detail: format!("{} answer vectors", v.len()),
        })?;
        let field = self.scheme.params.field;
        if let Some(&value) = values.iter().find(|&&x| !field.contains(x)) {
            return Err(SessionError::ModulusMismatch { node, value });
        }
        if values.len() != self.scheme.params.r {
            return Err(SessionError::UnexpectedFrame {
                node,
                detail: format!("{} answer symbols, expected {}", values.len(), self.scheme.params.r),
            });
        }
        Ok(AnswerBundle { node, values })
    }
}

/// Stores `records`, retrieves record `m` (1-based) over the configured
/// transport and decodes it. Any node failure aborts the session before
/// decoding.
pub fn run_session<R: Rng + ?Sized>(
    scheme: &Scheme,
    records: &[RecordMatrix],
    m: usize,
    opts: &SessionOptions,
    rng: &mut R,
) -> Result<Transcript, SessionError> {
    Client::connect(scheme, records, opts)?.retrieve(m, rng)
}

/// The same protocol computed directly with library calls and no actors.
pub fn run_local<R: Rng + ?Sized>(
    scheme: &Scheme,
    records: &[RecordMatrix],
    m: usize,
    rng: &mut R,
) -> Result<Transcript, SessionError> {
    let params = &scheme.params;
    let contents = store(records, &scheme.parity)?;
    let (mask, queries) = gen_queries(&scheme.v, m, params, rng)?;
    let answers =
        contents.iter().zip(&queries).map(|(c, q)| respond(c, q, params.field)).collect::<Result<Vec<_>, _>>()?;
    let decoded = decode(&scheme.v, &scheme.parity, &answers, m, params)?;
    Ok(Transcript { m, mask, queries, answers, decoded: Some(decoded) })
}

/// Query bundles of `transcript` restricted to the nodes in `alpha`.
pub fn restrict(transcript: &Transcript, alpha: &[usize]) -> Vec<QueryBundle> {
    transcript.queries.iter().filter(|b| alpha.contains(&b.node)).cloned().collect()
}
