//! Dense row-major matrices over a prime field and the elimination kernel
//! (rank, unique solve, null space, reduced column echelon form).
//!
//! Pivoting takes the first nonzero entry in scan order.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::field::{FieldError, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("matrices live in different fields (q={0} vs q={1})")]
    FieldMismatch(u32, u32),
}

/// Why [`FieldMatrix::solve_unique`] produced no solution.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("dimension mismatch: {rows} equations but right-hand side of length {rhs}")]
    DimensionMismatch { rows: usize, rhs: usize },
    #[error("the system has no solution")]
    NoSolution,
    #[error("the system has more than one solution (rank {rank} < {unknowns} unknowns)")]
    Underdetermined { rank: usize, unknowns: usize },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix(q={}, {}x{})", self.field.modulus(), self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

/// Result of in-place reduction to reduced row echelon form.
struct RowEchelon {
    pivot_cols: Vec<usize>,
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.modulus();
        }
        m
    }

    /// Builds a matrix from row-major residues, rejecting anything not already reduced.
    pub fn from_vec(field: PrimeField, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(&bad) = data.iter().find(|&&v| !field.contains(v)) {
            return Err(FieldError::Unreduced { value: bad as u64, q: field.modulus() }.into());
        }
        Ok(Self { field, rows, cols, data })
    }

    /// Builds a matrix from rows of integers, reducing each entry modulo q.
    pub fn from_rows<I, R>(field: PrimeField, rows: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[i64]>,
    {
        let mut data = Vec::new();
        let mut n_rows = 0;
        let mut n_cols = None;
        for row in rows {
            let row = row.as_ref();
            match n_cols {
                None => n_cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(MatrixError::DimensionMismatch(format!(
                        "row {n_rows} has {} entries, expected {c}",
                        row.len()
                    )))
                }
                _ => {}
            }
            data.extend(row.iter().map(|&v| field.from_i64(v)));
            n_rows += 1;
        }
        Ok(Self { field, rows: n_rows, cols: n_cols.unwrap_or(0), data })
    }

    pub fn from_fn(field: PrimeField, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(field.reduce(f(r, c) as u64));
            }
        }
        Self { field, rows, cols, data }
    }

    pub fn column_vector(field: PrimeField, values: &[u32]) -> Result<Self, MatrixError> {
        Self::from_vec(field, values.len(), 1, values.to_vec())
    }

    /// Every entry drawn independently and uniformly from the field.
    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        Self { field, rows, cols, data }
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: u32) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        self.data[r * self.cols + c] = self.field.reduce(value as u64);
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field, self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.field, self.rows, cols.len(), |r, c| self.get(r, cols[c]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(self.field, rows.len(), self.cols, |r, c| self.get(rows[r], c))
    }

    /// Rows `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        let rows: Vec<usize> = (start..end).collect();
        self.select_rows(&rows)
    }

    fn same_field(&self, other: &Self) -> Result<(), MatrixError> {
        if self.field != other.field {
            return Err(MatrixError::FieldMismatch(self.field.modulus(), other.field.modulus()));
        }
        Ok(())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.same_field(rhs)?;
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let f = self.field;
        let mut out = Self::zeros(f, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out.data[idx] = f.mul_add(out.data[idx], a, rhs.data[k * rhs.cols + j]);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>, MatrixError> {
        if v.len() != self.cols {
            return Err(MatrixError::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|r| self.field.dot(self.row(r), v)).collect())
    }

    pub fn hstack(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.same_field(rhs)?;
        if self.rows != rhs.rows {
            return Err(MatrixError::DimensionMismatch(format!("hstack of {} and {} rows", self.rows, rhs.rows)));
        }
        Ok(Self::from_fn(self.field, self.rows, self.cols + rhs.cols, |r, c| {
            if c < self.cols {
                self.get(r, c)
            } else {
                rhs.get(r, c - self.cols)
            }
        }))
    }

    pub fn vstack(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.same_field(rhs)?;
        if self.cols != rhs.cols {
            return Err(MatrixError::DimensionMismatch(format!("vstack of {} and {} columns", self.cols, rhs.cols)));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Ok(Self { field: self.field, rows: self.rows + rhs.rows, cols: self.cols, data })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduces `self` in place to reduced row echelon form, considering
    /// only the first `limit` columns as pivot candidates.
    fn reduce_rows(&mut self, limit: usize) -> RowEchelon {
        let f = self.field;
        let cols = self.cols;
        let mut pivot_cols = Vec::new();
        let mut pivot_row = 0;
        for col in 0..limit.min(cols) {
            if pivot_row == self.rows {
                break;
            }
            let Some(found) = (pivot_row..self.rows).find(|&r| self.data[r * cols + col] != 0) else {
                continue;
            };
            self.swap_rows(pivot_row, found);
            let inv = f.inv(self.data[pivot_row * cols + col]).expect("pivot is nonzero");
            for c in col..cols {
                let idx = pivot_row * cols + c;
                self.data[idx] = f.mul(self.data[idx], inv);
            }
            for r in 0..self.rows {
                if r == pivot_row {
                    continue;
                }
                let factor = self.data[r * cols + col];
                if factor == 0 {
                    continue;
                }
                let neg = f.neg(factor);
                for c in col..cols {
                    let p = self.data[pivot_row * cols + c];
                    if p != 0 {
                        let idx = r * cols + c;
                        self.data[idx] = f.mul_add(self.data[idx], neg, p);
                    }
                }
            }
            pivot_cols.push(col);
            pivot_row += 1;
        }
        RowEchelon { pivot_cols }
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let ech = m.reduce_rows(self.cols);
        (m, ech.pivot_cols)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.reduce_rows(self.cols).pivot_cols.len()
    }

    /// The unique `x` with `self * x = b`, or the reason none exists.
    pub fn solve_unique(&self, b: &[u32]) -> Result<Vec<u32>, SolveError> {
        if b.len() != self.rows {
            return Err(SolveError::DimensionMismatch { rows: self.rows, rhs: b.len() });
        }
        let mut aug = Self::zeros(self.field, self.rows, self.cols + 1);
        for (r, &rhs) in b.iter().enumerate() {
            aug.data[r * (self.cols + 1)..r * (self.cols + 1) + self.cols].copy_from_slice(self.row(r));
            aug.data[r * (self.cols + 1) + self.cols] = self.field.reduce(rhs as u64);
        }
        let pivots = aug.reduce_rows(self.cols).pivot_cols;
        let rank = pivots.len();
        // Rows below the pivots are zero on the left; any nonzero right side is a contradiction.
        if (rank..self.rows).any(|r| aug.get(r, self.cols) != 0) {
            return Err(SolveError::NoSolution);
        }
        if rank < self.cols {
            return Err(SolveError::Underdetermined { rank, unknowns: self.cols });
        }
        Ok((0..self.cols).map(|r| aug.get(r, self.cols)).collect())
    }

    /// Basis of the right null space `{x : self * x = 0}`, one vector per column.
    pub fn null_space(&self) -> Self {
        let (rref, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let f = self.field;
        let mut basis = Self::zeros(f, self.cols, free.len());
        for (j, &fc) in free.iter().enumerate() {
            basis.data[fc * free.len() + j] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                basis.data[pc * free.len() + j] = f.neg(rref.get(i, fc));
            }
        }
        basis
    }

    /// Returns `(echelon, transform)` with `echelon = self * transform`,
    /// `transform` invertible and `echelon` in reduced column echelon form:
    /// nonzero columns first, each with a pivot row that is zero in every
    /// other column.
    pub fn reduced_column_echelon(&self) -> (Self, Self) {
        // Row-reduce [selfᵀ | I]: E·selfᵀ = R, so self·Eᵀ = Rᵀ.
        let n = self.cols;
        let mut work = self.transpose().hstack(&Self::identity(self.field, n)).expect("shapes agree by construction");
        work.reduce_rows(self.rows);
        let reduced = Self::from_fn(self.field, n, self.rows, |r, c| work.get(r, c));
        let row_ops = Self::from_fn(self.field, n, n, |r, c| work.get(r, self.rows + c));
        (reduced.transpose(), row_ops.transpose())
    }

    /// Pivot row of each nonzero column of a reduced column echelon form.
    pub fn column_pivots(&self) -> Vec<usize> {
        (0..self.cols).map_while(|c| (0..self.rows).find(|&r| self.get(r, c) != 0)).collect()
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut work = self.hstack(&Self::identity(self.field, n)).ok()?;
        let pivots = work.reduce_rows(n).pivot_cols;
        if pivots.len() < n {
            return None;
        }
        Some(Self::from_fn(self.field, n, n, |r, c| work.get(r, n + c)))
    }
}
