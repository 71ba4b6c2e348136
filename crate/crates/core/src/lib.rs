//! Coded-storage private information retrieval over prime fields.
//!
//! Records are stored under a linear code `d·P = 0`; a client retrieves
//! record `M` by sending each node `R` masked query vectors built from a
//! retrieval matrix `V` and solving a linear system over the answers.
//! The [`analysis`] module certifies a `(P, V)` pair as error-free and
//! private, and [`oracle`] checks the same properties by enumeration on
//! small fields.

pub mod analysis;
pub mod baselines;
pub mod field;
pub mod matrix;
pub mod oracle;
pub mod params;
pub mod retrieval;
pub mod scheme;
pub mod storage;

pub use analysis::{
    certify, check_privacy, check_prop1, check_prop2, check_retrievability, tradeoff_bound, CertificationReport,
    CollusionPattern, CostReport, TradeoffBound, Verdict,
};
pub use field::{ArithOp, FieldError, PrimeField};
pub use matrix::{FieldMatrix, MatrixError, SolveError};
pub use params::{ParamError, Rational, SystemParams};
pub use retrieval::{
    cyclic_v, decode, gen_queries, random_v, respond, retrieval_cost, AnswerBundle, MaskMatrix, QueryBundle,
    RetrievalMatrix, Transcript,
};
pub use scheme::{construct, CodeKind, ConstructError, ConstructOptions, Constructed, Scheme, VKind};
pub use storage::{
    encode_record, make_mds_parity, make_uncoded_parity, storage_cost, store, NodeContent, ParityCheck, RecordMatrix,
};
