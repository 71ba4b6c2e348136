use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::field::{FieldError, PrimeField};

/// Exact rational used for cost figures.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{name} must be at least {min} (got {value})")]
    TooSmall { name: &'static str, value: usize, min: usize },
    #[error("parity column count S={s} must be below node count K={k}")]
    ParityTooLarge { s: usize, k: usize },
    #[error("field size q={q} is smaller than K={k}; an MDS parity check needs K distinct points")]
    FieldTooSmall { q: u32, k: usize },
}

/// Scalar parameters of a linear coded-storage retrieval scheme.
///
/// `n` records, `k` nodes, `s` parity columns, `l` rows per record,
/// `t` mask columns and `r` queries per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemParams {
    pub field: PrimeField,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub l: usize,
    pub t: usize,
    pub r: usize,
}

impl SystemParams {
    pub fn new(q: u64, n: usize, k: usize, s: usize, l: usize, t: usize, r: usize) -> Result<Self, ParamError> {
        let field = PrimeField::new(q)?;
        let params = Self { field, n, k, s, l, t, r };
        params.validate()?;
        Ok(params)
    }

    /// Parameters used by the MDS construction: `R = T = K-S`, `L = S`.
    pub fn balanced(q: u64, n: usize, k: usize, s: usize) -> Result<Self, ParamError> {
        if s >= k {
            return Err(ParamError::ParityTooLarge { s, k });
        }
        Self::new(q, n, k, s, s, k - s, k - s)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value, min) in
            [("N", self.n, 1), ("K", self.k, 2), ("S", self.s, 1), ("L", self.l, 1), ("T", self.t, 1), ("R", self.r, 1)]
        {
            if value < min {
                return Err(ParamError::TooSmall { name, value, min });
            }
        }
        if self.s >= self.k {
            return Err(ParamError::ParityTooLarge { s: self.s, k: self.k });
        }
        Ok(())
    }

    pub fn q(&self) -> u32 {
        self.field.modulus()
    }

    /// Information symbols per record, `(K-S)·L`.
    pub fn info_len(&self) -> usize {
        (self.k - self.s) * self.l
    }

    /// Length of each stored node vector and each query, `L·N`.
    pub fn node_len(&self) -> usize {
        self.l * self.n
    }

    /// Rows of the retrieval matrix, `T+L`.
    pub fn v_rows(&self) -> usize {
        self.t + self.l
    }

    /// Columns of the retrieval matrix, `R·K`.
    pub fn v_cols(&self) -> usize {
        self.r * self.k
    }

    /// Unknowns in the decoding system, `K·(T+L)`.
    pub fn unknowns(&self) -> usize {
        self.k * self.v_rows()
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={} N={} K={} S={} L={} T={} R={}", self.q(), self.n, self.k, self.s, self.l, self.t, self.r)
    }
}
