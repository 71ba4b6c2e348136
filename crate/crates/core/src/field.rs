//! Arithmetic in prime fields GF(q).
//!
//! Elements are plain `u32` residues in `[0, q)`; the modulus travels with a
//! [`PrimeField`] handle rather than with every element. Products are formed
//! in `u64`, which is enough for any modulus below 2^31.

use rand::Rng;
use thiserror::Error;

/// Largest modulus accepted by [`PrimeField::new`] (exclusive).
pub const MODULUS_LIMIT: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is out of range (must be below 2^31)")]
    ModulusTooLarge(u64),
    #[error("division by zero in GF({0})")]
    DivisionByZero(u32),
    #[error("residue {value} is not reduced modulo {q}")]
    Unreduced { value: u64, q: u32 },
}

/// The four field operations accepted by [`PrimeField::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Handle for the prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q >= MODULUS_LIMIT {
            return Err(FieldError::ModulusTooLarge(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Self { q: q as u32 })
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.q
    }

    /// Reduces an arbitrary integer into `[0, q)`.
    #[inline]
    pub fn reduce(self, x: u64) -> u32 {
        (x % self.q as u64) as u32
    }

    /// Maps a signed integer to its residue.
    pub fn from_i64(self, x: i64) -> u32 {
        x.rem_euclid(self.q as i64) as u32
    }

    /// Accepts `value` only if it is already a residue.
    pub fn element(self, value: u64) -> Result<u32, FieldError> {
        if value < self.q as u64 {
            Ok(value as u32)
        } else {
            Err(FieldError::Unreduced { value, q: self.q })
        }
    }

    #[inline]
    pub fn contains(self, value: u32) -> bool {
        value < self.q
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        if s >= self.q as u64 {
            (s - self.q as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.q as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    /// `a + b * c`, the elimination workhorse.
    #[inline]
    pub fn mul_add(self, a: u32, b: u32, c: u32) -> u32 {
        ((a as u64 + b as u64 * c as u64) % self.q as u64) as u32
    }

    pub fn pow(self, base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.q;
        let mut b = base % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(self, a: u32) -> Result<u32, FieldError> {
        if a.is_multiple_of(self.q) {
            return Err(FieldError::DivisionByZero(self.q));
        }
        // Extended Euclid on (a, q).
        let (mut r0, mut r1) = (self.q as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        Ok(self.from_i64(t0))
    }

    pub fn div(self, a: u32, b: u32) -> Result<u32, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn apply(self, a: u32, b: u32, op: ArithOp) -> Result<u32, FieldError> {
        match op {
            ArithOp::Add => Ok(self.add(a, b)),
            ArithOp::Sub => Ok(self.sub(a, b)),
            ArithOp::Mul => Ok(self.mul(a, b)),
            ArithOp::Div => self.div(a, b),
        }
    }

    /// Uniform residue.
    pub fn random<R: Rng + ?Sized>(self, rng: &mut R) -> u32 {
        rng.random_range(0..self.q)
    }

    pub fn dot(self, a: &[u32], b: &[u32]) -> u32 {
        debug_assert_eq!(a.len(), b.len());
        let q = self.q as u64;
        // Sum of up to 4 products of values < 2^31 fits in u64.
        let mut acc = 0u64;
        for (chunk_a, chunk_b) in a.chunks(4).zip(b.chunks(4)) {
            let mut s = 0u64;
            for (&x, &y) in chunk_a.iter().zip(chunk_b) {
                s += (x as u64 * y as u64) % q;
            }
            acc = (acc + s) % q;
        }
        acc as u32
    }
}
