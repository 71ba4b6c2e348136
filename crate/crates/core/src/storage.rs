//! The linear storage code defined by a parity-check matrix `P`.
//!
//! Each record is an `L×K` matrix `d` with `d·P = 0`. Column `k` of every
//! record goes to node `k`. Information symbols fill the first `K-S`
//! columns column by column (`ℓ` varies fastest); the last `S` columns
//! carry parity.

use thiserror::Error;

use crate::field::PrimeField;
use crate::matrix::{FieldMatrix, MatrixError};
use crate::params::{ParamError, Rational, SystemParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("parity check is {rows}x{cols} with rank {rank}; it must have full column rank")]
    RankDeficient { rows: usize, cols: usize, rank: usize },
    #[error("rows {positions:?} of the parity check form a singular submatrix; cannot place parity there")]
    SingularParityBlock { positions: Vec<usize> },
    #[error("expected {expected} information symbols, got {got}")]
    InfoLength { expected: usize, got: usize },
    #[error("record {index} is not a codeword (d·P ≠ 0)")]
    NotCodeword { index: usize },
    #[error("record {index} has shape {got:?}, expected {expected:?}")]
    RecordShape { index: usize, expected: (usize, usize), got: (usize, usize) },
    #[error("no records to store")]
    Empty,
}

/// A full-rank `K×S` parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheck {
    matrix: FieldMatrix,
}

impl ParityCheck {
    pub fn new(matrix: FieldMatrix) -> Result<Self, CodeError> {
        let (rows, cols) = matrix.shape();
        let rank = matrix.rank();
        if cols == 0 || cols >= rows || rank != cols {
            return Err(CodeError::RankDeficient { rows, cols, rank });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn field(&self) -> PrimeField {
        self.matrix.field()
    }

    /// Node count `K`.
    pub fn nodes(&self) -> usize {
        self.matrix.rows()
    }

    /// Parity column count `S`.
    pub fn parity_cols(&self) -> usize {
        self.matrix.cols()
    }

    /// `p_{k,s}` with zero-based indices.
    pub fn entry(&self, k: usize, s: usize) -> u32 {
        self.matrix.get(k, s)
    }

    /// `P(β)`: the matrix with the rows in `beta` removed.
    pub fn without_rows(&self, beta: &[usize]) -> FieldMatrix {
        let keep: Vec<usize> = (0..self.nodes()).filter(|k| !beta.contains(k)).collect();
        self.matrix.select_rows(&keep)
    }

    /// True when every `S×S` row-submatrix is invertible.
    pub fn is_mds(&self) -> bool {
        let s = self.parity_cols();
        subsets_of_size(self.nodes(), s).into_iter().all(|rows| self.matrix.select_rows(&rows).is_invertible())
    }
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub(crate) fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Vandermonde parity check `p_{k,s} = a_k^(s-1)` with `a_k = k-1`.
pub fn make_mds_parity(k: usize, s: usize, field: PrimeField) -> Result<ParityCheck, CodeError> {
    if s == 0 {
        return Err(ParamError::TooSmall { name: "S", value: s, min: 1 }.into());
    }
    if s >= k {
        return Err(ParamError::ParityTooLarge { s, k }.into());
    }
    if (field.modulus() as usize) < k {
        return Err(ParamError::FieldTooSmall { q: field.modulus(), k }.into());
    }
    let m = FieldMatrix::from_fn(field, k, s, |row, col| field.pow(row as u32, col as u64));
    ParityCheck::new(m)
}

/// Parity check of uncoded storage: `K×(K-1)` with column `j = e_j - e_{j+1}`,
/// so the all-ones row vector is in its left null space.
pub fn make_uncoded_parity(k: usize, field: PrimeField) -> Result<ParityCheck, CodeError> {
    if k < 2 {
        return Err(ParamError::TooSmall { name: "K", value: k, min: 2 }.into());
    }
    let minus_one = field.neg(1);
    let m = FieldMatrix::from_fn(field, k, k - 1, |row, col| {
        if row == col {
            1
        } else if row == col + 1 {
            minus_one
        } else {
            0
        }
    });
    ParityCheck::new(m)
}

/// One record laid out as an `L×K` codeword matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordMatrix {
    matrix: FieldMatrix,
}

impl RecordMatrix {
    /// Wraps `matrix` after checking `matrix · P = 0`.
    pub fn new(matrix: FieldMatrix, parity: &ParityCheck) -> Result<Self, CodeError> {
        if matrix.cols() != parity.nodes() {
            return Err(CodeError::RecordShape {
                index: 0,
                expected: (matrix.rows(), parity.nodes()),
                got: matrix.shape(),
            });
        }
        if !matrix.mul(parity.matrix())?.is_zero() {
            return Err(CodeError::NotCodeword { index: 0 });
        }
        Ok(Self { matrix })
    }

    /// Wraps a decoded matrix without re-checking the codeword property.
    pub(crate) fn from_decoded(matrix: FieldMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    /// `d_{ℓ,k}` with zero-based indices.
    pub fn get(&self, l: usize, k: usize) -> u32 {
        self.matrix.get(l, k)
    }

    /// Reads back the information symbols from the first `info_cols` columns.
    pub fn info(&self, info_cols: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(info_cols * self.rows());
        for c in 0..info_cols {
            for l in 0..self.rows() {
                out.push(self.get(l, c));
            }
        }
        out
    }

    pub fn is_codeword(&self, parity: &ParityCheck) -> bool {
        self.matrix.mul(parity.matrix()).map(|m| m.is_zero()).unwrap_or(false)
    }
}

/// Systematic encoder: information in the first `K-S` columns, parity in the last `S`.
pub fn encode_record(info: &[u32], l: usize, parity: &ParityCheck) -> Result<RecordMatrix, CodeError> {
    let field = parity.field();
    let k = parity.nodes();
    let s = parity.parity_cols();
    let info_cols = k - s;
    if info.len() != info_cols * l {
        return Err(CodeError::InfoLength { expected: info_cols * l, got: info.len() });
    }
    let info_rows: Vec<usize> = (0..info_cols).collect();
    let parity_rows: Vec<usize> = (info_cols..k).collect();
    let p_info = parity.matrix().select_rows(&info_rows);
    let p_par_inv = parity
        .matrix()
        .select_rows(&parity_rows)
        .inverse()
        .ok_or(CodeError::SingularParityBlock { positions: parity_rows.iter().map(|r| r + 1).collect() })?;

    let data: Vec<u32> = info.iter().map(|&v| field.reduce(v as u64)).collect();
    let d_info = FieldMatrix::from_fn(field, l, info_cols, |row, col| data[col * l + row]);
    // d_info·P_info + d_par·P_par = 0  =>  d_par = -d_info·P_info·P_par⁻¹
    let d_par = d_info.mul(&p_info)?.mul(&p_par_inv)?;
    let matrix = FieldMatrix::from_fn(field, l, k, |row, col| {
        if col < info_cols {
            d_info.get(row, col)
        } else {
            field.neg(d_par.get(row, col - info_cols))
        }
    });
    Ok(RecordMatrix { matrix })
}

/// What node `k` stores: column `k` of every record, concatenated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeContent {
    /// Zero-based node index.
    pub node: usize,
    pub vector: Vec<u32>,
}

/// Lays out `records` across the `K` nodes, `X_k = (d_{1,1,k},…,d_{1,L,k},d_{2,1,k},…,d_{N,L,k})`.
pub fn store(records: &[RecordMatrix], parity: &ParityCheck) -> Result<Vec<NodeContent>, CodeError> {
    let first = records.first().ok_or(CodeError::Empty)?;
    let l = first.rows();
    let k = parity.nodes();
    for (index, rec) in records.iter().enumerate() {
        if rec.matrix.shape() != (l, k) {
            return Err(CodeError::RecordShape { index, expected: (l, k), got: rec.matrix.shape() });
        }
        if !rec.is_codeword(parity) {
            return Err(CodeError::NotCodeword { index });
        }
    }
    Ok((0..k)
        .map(|node| NodeContent {
            node,
            vector: records.iter().flat_map(|rec| (0..l).map(move |row| rec.get(row, node))).collect(),
        })
        .collect())
}

/// Storage cost `1/(K-S)`.
pub fn storage_cost(params: &SystemParams) -> Rational {
    Rational::new(1, (params.k - params.s) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn mds_parity_examples() {
        let p = make_mds_parity(3, 1, gf(5)).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![1], vec![1], vec![1]]);
        let p = make_mds_parity(4, 2, gf(5)).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![1, 0], vec![1, 1], vec![1, 2], vec![1, 3]]);
        // All six 2x2 minors, by the determinant formula.
        let rows = p.matrix().to_rows();
        let mut minors = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                let det = (rows[i][0] * rows[j][1] + 5 * 5 - rows[i][1] * rows[j][0]) % 5;
                assert_ne!(det, 0, "rows {i},{j}");
                minors += 1;
            }
        }
        assert_eq!(minors, 6);
        assert!(matches!(make_mds_parity(4, 2, gf(3)), Err(CodeError::Params(ParamError::FieldTooSmall { .. }))));
    }

    #[test]
    fn mds_property_exhaustive_over_subsets() {
        for k in 2..=8 {
            for s in 1..k {
                let p = make_mds_parity(k, s, gf(11)).unwrap();
                assert!(p.is_mds(), "K={k} S={s}");
                assert_eq!(subsets_of_size(k, s).len(), binomial(k, s));
            }
        }
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn uncoded_parity_examples() {
        let p = make_uncoded_parity(2, gf(5)).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![1], vec![4]]);
        let p = make_uncoded_parity(3, gf(2)).unwrap();
        assert_eq!(p.matrix().column(0), vec![1, 1, 0]);
        assert_eq!(p.matrix().column(1), vec![0, 1, 1]);
        for k in 2..9 {
            let f = gf(7);
            let p = make_uncoded_parity(k, f).unwrap();
            let ones = FieldMatrix::from_fn(f, 1, k, |_, _| 1);
            assert!(ones.mul(p.matrix()).unwrap().is_zero());
            assert_eq!(p.matrix().rank(), k - 1);
        }
    }

    #[test]
    fn rejects_rank_deficient_parity() {
        let m = FieldMatrix::from_rows(gf(5), [[1, 2], [2, 4], [3, 0]]).unwrap();
        assert!(ParityCheck::new(m).is_ok());
        let m = FieldMatrix::from_rows(gf(5), [[1, 2], [2, 4], [3, 6]]).unwrap();
        assert!(matches!(ParityCheck::new(m), Err(CodeError::RankDeficient { rank: 1, .. })));
    }

    #[test]
    fn encode_examples() {
        let f = gf(5);
        let p = make_mds_parity(3, 1, f).unwrap();
        let d = encode_record(&[1, 2], 1, &p).unwrap();
        assert_eq!(d.matrix().to_rows(), vec![vec![1, 2, 2]]);
        let zero = encode_record(&[0, 0], 1, &p).unwrap();
        assert!(zero.matrix().is_zero());

        let p = make_mds_parity(4, 2, f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let info: Vec<u32> = (0..2).map(|_| rng.random_range(0..5)).collect();
            let d = encode_record(&info, 1, &p).unwrap();
            assert!(d.is_codeword(&p));
            assert_eq!(d.info(2), info);
        }
        assert!(matches!(encode_record(&[1, 2, 3], 1, &p), Err(CodeError::InfoLength { expected: 2, got: 3 })));
    }

    #[test]
    fn encode_reports_singular_parity_positions() {
        // Last row zero: the 1x1 parity block is singular.
        let m = FieldMatrix::from_rows(gf(5), [[1], [1], [0]]).unwrap();
        let p = ParityCheck::new(m).unwrap();
        assert_eq!(encode_record(&[1, 1], 1, &p), Err(CodeError::SingularParityBlock { positions: vec![3] }));
    }

    #[test]
    fn encode_round_trip_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let k = rng.random_range(2..8);
            let s = rng.random_range(1..k);
            let l = rng.random_range(1..4);
            let f = gf(65537);
            let p = make_mds_parity(k, s, f).unwrap();
            let info: Vec<u32> = (0..(k - s) * l).map(|_| f.random(&mut rng)).collect();
            let d = encode_record(&info, l, &p).unwrap();
            assert!(d.is_codeword(&p));
            assert_eq!(d.info(k - s), info);
        }
    }

    /// Any K-S known columns of an MDS codeword determine the rest.
    #[test]
    fn mds_erasure_decoding_exhaustive() {
        let f = gf(5);
        for k in 2..=4 {
            for s in 1..k {
                let p = make_mds_parity(k, s, f).unwrap();
                // Codeword rows span the left null space of P.
                let basis = p.matrix().transpose().null_space();
                assert_eq!(basis.cols(), k - s);
                let infos = all_vectors(5, k - s);
                for kept in subsets_of_size(k, k - s) {
                    let sub = basis.select_rows(&kept);
                    for info in &infos {
                        let d = encode_record(info, 1, &p).unwrap();
                        let known: Vec<u32> = kept.iter().map(|&c| d.get(0, c)).collect();
                        let coeffs = sub.solve_unique(&known).expect("unique completion");
                        let rebuilt = basis.mul_vec(&coeffs).unwrap();
                        assert_eq!(rebuilt, d.matrix().row(0), "K={k} S={s} kept={kept:?}");
                    }
                }
            }
        }
    }

    fn all_vectors(q: u32, n: usize) -> Vec<Vec<u32>> {
        (0..(q as usize).pow(n as u32))
            .map(|mut idx| {
                (0..n)
                    .map(|_| {
                        let d = (idx % q as usize) as u32;
                        idx /= q as usize;
                        d
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn store_layout() {
        let f = gf(7);
        let p = make_mds_parity(3, 1, f).unwrap();
        let d = encode_record(&[3, 5], 1, &p).unwrap();
        let nodes = store(std::slice::from_ref(&d), &p).unwrap();
        for (k, node) in nodes.iter().enumerate() {
            assert_eq!(node.vector, vec![d.get(0, k)]);
        }

        let d1 = encode_record(&[1, 2, 3, 4], 2, &p).unwrap();
        let d2 = encode_record(&[5, 6, 0, 1], 2, &p).unwrap();
        let nodes = store(&[d1.clone(), d2.clone()], &p).unwrap();
        assert_eq!(nodes[1].vector, vec![d1.get(0, 1), d1.get(1, 1), d2.get(0, 1), d2.get(1, 1)]);
    }

    #[test]
    fn stored_vectors_satisfy_parity_relations() {
        let f = gf(65537);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let p = make_mds_parity(5, 2, f).unwrap();
        let records: Vec<RecordMatrix> = (0..4)
            .map(|_| {
                let info: Vec<u32> = (0..6).map(|_| f.random(&mut rng)).collect();
                encode_record(&info, 2, &p).unwrap()
            })
            .collect();
        let nodes = store(&records, &p).unwrap();
        for s in 0..2 {
            for i in 0..nodes[0].vector.len() {
                let sum = (0..5).fold(0, |acc, k| f.mul_add(acc, p.entry(k, s), nodes[k].vector[i]));
                assert_eq!(sum, 0);
            }
        }
    }

    #[test]
    fn store_rejects_non_codewords() {
        let f = gf(5);
        let p = make_mds_parity(3, 1, f).unwrap();
        let good = encode_record(&[1, 1], 1, &p).unwrap();
        let bad = RecordMatrix { matrix: FieldMatrix::from_rows(f, [[1, 1, 1]]).unwrap() };
        assert_eq!(store(&[good, bad], &p), Err(CodeError::NotCodeword { index: 1 }));
        assert_eq!(store(&[], &p), Err(CodeError::Empty));
    }

    #[test]
    fn storage_cost_examples() {
        let sc = |k, s| storage_cost(&SystemParams::new(5, 1, k, s, 1, 1, 1).unwrap());
        assert_eq!(sc(3, 1), Rational::new(1, 2));
        assert_eq!(sc(5, 2), Rational::new(1, 3));
        assert_eq!(sc(2, 1), Rational::from_integer(1));
    }
}
