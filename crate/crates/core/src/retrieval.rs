//! Linear retrieval schemes driven by a `(T+L)×(R·K)` retrieval matrix `V`.
//!
//! Column `(r,k)` of `V` sits at offset `k·R + r` (zero-based). Its top `L`
//! entries weight the basis selectors `E_{M,ℓ}`, its bottom `T` entries
//! weight the mask columns `U_t`.
//!
//! Record indices `m` are 1-based throughout the public API, matching the
//! command line; node indices are 0-based.

use rand::Rng;
use thiserror::Error;

use crate::field::PrimeField;
use crate::matrix::{FieldMatrix, MatrixError, SolveError};
use crate::params::{ParamError, Rational, SystemParams};
use crate::storage::{NodeContent, ParityCheck, RecordMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("record index {m} is out of range 1..={n}")]
    IndexOutOfRange { m: usize, n: usize },
    #[error("retrieval matrix is {got:?}, expected {expected:?}")]
    Shape { expected: (usize, usize), got: (usize, usize) },
    #[error("node {node}: query of length {got}, expected {expected}")]
    QueryLength { node: usize, expected: usize, got: usize },
    #[error("expected {expected} bundles, got {got}")]
    BundleCount { expected: usize, got: usize },
    #[error("node {node}: expected {expected} answer symbols, got {got}")]
    AnswerLength { node: usize, expected: usize, got: usize },
    #[error("bundle at position {position} is labelled node {node}")]
    NodeOrder { position: usize, node: usize },
    #[error("field mismatch: scheme uses q={expected}, input uses q={got}")]
    FieldMismatch { expected: u32, got: u32 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("answers are inconsistent with the storage code (corrupted response?)")]
    Inconsistent,
    #[error("decoding system is underdetermined: rank {rank} < {unknowns} unknowns")]
    Underdetermined { rank: usize, unknowns: usize },
}

/// The retrieval matrix `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalMatrix {
    matrix: FieldMatrix,
    l: usize,
    r: usize,
}

impl RetrievalMatrix {
    pub fn new(matrix: FieldMatrix, params: &SystemParams) -> Result<Self, RetrievalError> {
        let expected = (params.v_rows(), params.v_cols());
        if matrix.shape() != expected {
            return Err(RetrievalError::Shape { expected, got: matrix.shape() });
        }
        if matrix.field() != params.field {
            return Err(RetrievalError::FieldMismatch { expected: params.q(), got: matrix.field().modulus() });
        }
        Ok(Self { matrix, l: params.l, r: params.r })
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn field(&self) -> PrimeField {
        self.matrix.field()
    }

    #[inline]
    pub fn column_index(&self, r: usize, k: usize) -> usize {
        k * self.r + r
    }

    /// `V_{r,k}`, zero-based.
    pub fn column(&self, r: usize, k: usize) -> Vec<u32> {
        self.matrix.column(self.column_index(r, k))
    }

    /// `v*_{ℓ,r,k}`.
    pub fn selector_weight(&self, l: usize, r: usize, k: usize) -> u32 {
        self.matrix.get(l, self.column_index(r, k))
    }

    /// `v_{t,r,k}`.
    pub fn mask_weight(&self, t: usize, r: usize, k: usize) -> u32 {
        self.matrix.get(self.l + t, self.column_index(r, k))
    }

    /// The `(T+L)×(R·|α|)` block `G` of the columns belonging to `nodes`.
    pub fn node_block(&self, nodes: &[usize]) -> FieldMatrix {
        let cols: Vec<usize> = nodes.iter().flat_map(|&k| (0..self.r).map(move |r| k * self.r + r)).collect();
        self.matrix.select_columns(&cols)
    }
}

/// Cyclic retrieval matrix for `R = T = K-S`, `L = S`:
/// `y_{i,r,k} = 1` iff `k - i - r ≡ 0 (mod K)` with 1-based `i, r, k`.
pub fn cyclic_v(k: usize, s: usize, field: PrimeField) -> Result<RetrievalMatrix, ParamError> {
    let params = SystemParams::balanced(field.modulus() as u64, 1, k, s)?;
    Ok(cyclic_v_for(&params))
}

/// [`cyclic_v`] for explicit balanced parameters (any `N`).
pub fn cyclic_v_for(params: &SystemParams) -> RetrievalMatrix {
    let (k, r) = (params.k, params.r);
    debug_assert_eq!(params.v_rows(), k);
    let m = FieldMatrix::from_fn(params.field, params.v_rows(), params.v_cols(), |row, col| {
        let (i, rr, kk) = (row + 1, col % r + 1, col / r + 1);
        u32::from((kk + 2 * k - i - rr) % k == 0)
    });
    RetrievalMatrix { matrix: m, l: params.l, r }
}

/// Every entry independent and uniform over GF(q).
pub fn random_v<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> RetrievalMatrix {
    let m = FieldMatrix::random(params.field, params.v_rows(), params.v_cols(), rng);
    RetrievalMatrix { matrix: m, l: params.l, r: params.r }
}

/// The `(L·N)×T` mask `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix(pub FieldMatrix);

impl MaskMatrix {
    pub fn random<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Self {
        Self(FieldMatrix::random(params.field, params.node_len(), params.t, rng))
    }

    pub fn zeros(params: &SystemParams) -> Self {
        Self(FieldMatrix::zeros(params.field, params.node_len(), params.t))
    }
}

/// The `R` query vectors sent to one node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryBundle {
    pub node: usize,
    pub vectors: Vec<Vec<u32>>,
}

/// The `R` answer symbols returned by one node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnswerBundle {
    pub node: usize,
    pub values: Vec<u32>,
}

/// One complete protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    /// Requested record, 1-based.
    pub m: usize,
    pub mask: MaskMatrix,
    pub queries: Vec<QueryBundle>,
    pub answers: Vec<AnswerBundle>,
    pub decoded: Option<RecordMatrix>,
}

fn check_index(m: usize, params: &SystemParams) -> Result<(), RetrievalError> {
    if m == 0 || m > params.n {
        return Err(RetrievalError::IndexOutOfRange { m, n: params.n });
    }
    Ok(())
}

/// Draws a fresh mask and builds every node's queries.
pub fn gen_queries<R: Rng + ?Sized>(
    v: &RetrievalMatrix,
    m: usize,
    params: &SystemParams,
    rng: &mut R,
) -> Result<(MaskMatrix, Vec<QueryBundle>), RetrievalError> {
    check_index(m, params)?;
    let mask = MaskMatrix::random(params, rng);
    let queries = queries_for_mask(v, m, params, &mask)?;
    Ok((mask, queries))
}

/// `Q_{r,k} = Σ_t v_{t,r,k}·U_t + Σ_ℓ v*_{ℓ,r,k}·E_{M,ℓ}` for a given mask.
pub fn queries_for_mask(
    v: &RetrievalMatrix,
    m: usize,
    params: &SystemParams,
    mask: &MaskMatrix,
) -> Result<Vec<QueryBundle>, RetrievalError> {
    check_index(m, params)?;
    let expected = (params.v_rows(), params.v_cols());
    if v.matrix.shape() != expected {
        return Err(RetrievalError::Shape { expected, got: v.matrix.shape() });
    }
    let u = &mask.0;
    if u.shape() != (params.node_len(), params.t) {
        return Err(MatrixError::DimensionMismatch(format!(
            "mask is {:?}, expected {:?}",
            u.shape(),
            (params.node_len(), params.t)
        ))
        .into());
    }
    let f = params.field;
    let offset = params.l * (m - 1);
    Ok((0..params.k)
        .map(|k| QueryBundle {
            node: k,
            vectors: (0..params.r)
                .map(|r| {
                    let weights: Vec<u32> = (0..params.t).map(|t| v.mask_weight(t, r, k)).collect();
                    let mut q = u.mul_vec(&weights).expect("mask shape checked");
                    for l in 0..params.l {
                        q[offset + l] = f.add(q[offset + l], v.selector_weight(l, r, k));
                    }
                    q
                })
                .collect(),
        })
        .collect())
}

/// `A_{r,k} = Q_{r,k}ᵀ X_k`.
pub fn respond(
    content: &NodeContent,
    queries: &QueryBundle,
    field: PrimeField,
) -> Result<AnswerBundle, RetrievalError> {
    let expected = content.vector.len();
    for q in &queries.vectors {
        if q.len() != expected {
            return Err(RetrievalError::QueryLength { node: content.node, expected, got: q.len() });
        }
    }
    Ok(AnswerBundle {
        node: content.node,
        values: queries.vectors.iter().map(|q| field.dot(q, &content.vector)).collect(),
    })
}

/// Coefficient matrix of the decoding system.
///
/// Unknowns are ordered node by node as `(w*_{1..L,k}, w_{1..T,k})`, i.e.
/// unknown `(i,k)` sits at column `k·(T+L) + i` and pairs with row `i` of
/// `V`. The first `S·(T+L)` rows are the parity relations
/// `Σ_k p_{k,s}·z_{i,k} = 0`; the remaining `K·R` rows are the answer
/// equations `Σ_i V[i][(r,k)]·z_{i,k} = A_{r,k}`.
pub fn decode_system(v: &RetrievalMatrix, parity: &ParityCheck, params: &SystemParams) -> FieldMatrix {
    let width = params.v_rows();
    let rows = params.s * width + params.k * params.r;
    let mut sys = FieldMatrix::zeros(params.field, rows, params.unknowns());
    for i in 0..width {
        for s in 0..params.s {
            let row = i * params.s + s;
            for k in 0..params.k {
                sys.set(row, k * width + i, parity.entry(k, s));
            }
        }
    }
    let base = params.s * width;
    for k in 0..params.k {
        for r in 0..params.r {
            let col = v.column_index(r, k);
            for i in 0..width {
                sys.set(base + k * params.r + r, k * width + i, v.matrix.get(i, col));
            }
        }
    }
    sys
}

/// Recovers `d_M` from the answers by solving the decoding system.
pub fn decode(
    v: &RetrievalMatrix,
    parity: &ParityCheck,
    answers: &[AnswerBundle],
    m: usize,
    params: &SystemParams,
) -> Result<RecordMatrix, DecodeError> {
    check_index(m, params)?;
    if answers.len() != params.k {
        return Err(RetrievalError::BundleCount { expected: params.k, got: answers.len() }.into());
    }
    let f = params.field;
    let mut rhs = vec![0u32; params.s * params.v_rows()];
    for (position, bundle) in answers.iter().enumerate() {
        if bundle.node != position {
            return Err(RetrievalError::NodeOrder { position, node: bundle.node }.into());
        }
        if bundle.values.len() != params.r {
            return Err(RetrievalError::AnswerLength {
                node: bundle.node,
                expected: params.r,
                got: bundle.values.len(),
            }
            .into());
        }
        if let Some(&bad) = bundle.values.iter().find(|&&a| !f.contains(a)) {
            return Err(RetrievalError::Matrix(MatrixError::Field(crate::field::FieldError::Unreduced {
                value: bad as u64,
                q: f.modulus(),
            }))
            .into());
        }
        rhs.extend_from_slice(&bundle.values);
    }
    let sys = decode_system(v, parity, params);
    let z = sys.solve_unique(&rhs).map_err(|e| match e {
        SolveError::NoSolution => DecodeError::Inconsistent,
        SolveError::Underdetermined { rank, unknowns } => DecodeError::Underdetermined { rank, unknowns },
        SolveError::DimensionMismatch { .. } => unreachable!("system assembled with matching sizes"),
    })?;
    let width = params.v_rows();
    let record = FieldMatrix::from_fn(f, params.l, params.k, |l, k| z[k * width + l]);
    Ok(RecordMatrix::from_decoded(record))
}

/// Retrieval cost `R/(L·(K-S))`.
pub fn retrieval_cost(params: &SystemParams) -> Rational {
    Rational::new(params.r as i64, (params.l * (params.k - params.s)) as i64)
}
