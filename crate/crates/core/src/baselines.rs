//! Two reference schemes outside the linear `(P, V)` family.
//!
//! * [`SharingScheme`]: every node stores all `N` records; the selector
//!   `e_M` is split into `K` additive shares, one per node.
//! * [`Example2Scheme`]: two 2-bit records on three nodes with a fixed
//!   response table, achieving storage and retrieval cost 1/2 for `N = 2`.
//!
//! Node 3 of the table scheme stores `(a1⊕a2, b1⊕b2)`. That is the only
//! content from which its table row for query 2 (`b1⊕b2`) and query 3
//! (`a1⊕a2⊕b1⊕b2`) can be computed.

use rand::Rng;
use thiserror::Error;

use crate::field::PrimeField;
use crate::matrix::FieldMatrix;
use crate::oracle::{digits, AnswerScheme, QueryScheme};
use crate::params::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("record index {m} is out of range 1..={n}")]
    IndexOutOfRange { m: usize, n: usize },
    #[error("expected {expected} records, got {got}")]
    RecordCount { expected: usize, got: usize },
    #[error("the sharing scheme needs at least two nodes (got {0})")]
    TooFewNodes(usize),
    #[error("value {0} is not a bit")]
    NotABit(u8),
}

/// Additive secret sharing of the selector vector, `c_k = 1` for all `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharingScheme {
    pub field: PrimeField,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharingTranscript {
    pub m: usize,
    /// `Q_1..Q_K`, each of length `N`.
    pub queries: Vec<Vec<u32>>,
    /// `A_k = ⟨D, Q_k⟩`.
    pub answers: Vec<u32>,
    pub decoded: u32,
}

impl SharingScheme {
    pub fn new(field: PrimeField, k: usize, n: usize) -> Result<Self, BaselineError> {
        if k < 2 {
            return Err(BaselineError::TooFewNodes(k));
        }
        if n == 0 {
            return Err(BaselineError::RecordCount { expected: 1, got: 0 });
        }
        Ok(Self { field, k, n })
    }

    /// Completes `K-1` free shares with `Q_K = e_M − Σ_{k<K} Q_k`.
    pub fn shares(&self, m: usize, free: &[Vec<u32>]) -> Vec<Vec<u32>> {
        let f = self.field;
        let mut last: Vec<u32> = (0..self.n).map(|i| u32::from(i + 1 == m)).collect();
        for share in free {
            for (acc, &x) in last.iter_mut().zip(share) {
                *acc = f.sub(*acc, x);
            }
        }
        let mut out = free.to_vec();
        out.push(last);
        out
    }

    pub fn retrieve<R: Rng + ?Sized>(
        &self,
        records: &[u32],
        m: usize,
        rng: &mut R,
    ) -> Result<SharingTranscript, BaselineError> {
        if records.len() != self.n {
            return Err(BaselineError::RecordCount { expected: self.n, got: records.len() });
        }
        if m == 0 || m > self.n {
            return Err(BaselineError::IndexOutOfRange { m, n: self.n });
        }
        let f = self.field;
        let free: Vec<Vec<u32>> = (0..self.k - 1).map(|_| (0..self.n).map(|_| f.random(rng)).collect()).collect();
        let queries = self.shares(m, &free);
        let records: Vec<u32> = records.iter().map(|&d| f.reduce(d as u64)).collect();
        let answers: Vec<u32> = queries.iter().map(|q| f.dot(&records, q)).collect();
        let decoded = answers.iter().fold(0, |acc, &a| f.add(acc, a));
        Ok(SharingTranscript { m, queries, answers, decoded })
    }

    fn free_shares(&self, outcome: u128) -> Vec<Vec<u32>> {
        digits(outcome, self.field.modulus(), (self.k - 1) * self.n).chunks(self.n).map(|c| c.to_vec()).collect()
    }
}

/// Runs one retrieval of `D_M` from the sharing scheme.
pub fn sharing_retrieve<R: Rng + ?Sized>(
    scheme: &SharingScheme,
    records: &[u32],
    m: usize,
    rng: &mut R,
) -> Result<(u32, SharingTranscript), BaselineError> {
    let t = scheme.retrieve(records, m, rng)?;
    Ok((t.decoded, t))
}

impl QueryScheme for SharingScheme {
    fn nodes(&self) -> usize {
        self.k
    }

    fn record_count(&self) -> usize {
        self.n
    }

    fn randomness_outcomes(&self) -> u128 {
        (self.field.modulus() as u128).saturating_pow(((self.k - 1) * self.n) as u32)
    }

    fn query(&self, m: usize, outcome: u128, node: usize) -> Vec<u32> {
        self.shares(m, &self.free_shares(outcome)).swap_remove(node)
    }
}

impl AnswerScheme for SharingScheme {
    fn record_set_count(&self) -> u128 {
        (self.field.modulus() as u128).saturating_pow(self.n as u32)
    }

    fn answers(&self, record_set: u128, m: usize, outcome: u128) -> Vec<u32> {
        let records = digits(record_set, self.field.modulus(), self.n);
        self.shares(m, &self.free_shares(outcome)).iter().map(|q| self.field.dot(&records, q)).collect()
    }

    fn wanted(&self, record_set: u128, m: usize) -> Vec<u32> {
        vec![digits(record_set, self.field.modulus(), self.n)[m - 1]]
    }
}

/// Query triples `(Q_1, Q_2, Q_3)` used when record 1 is wanted, each with probability 1/3.
pub const EXAMPLE2_TRIPLES_M1: [[u8; 3]; 3] = [[1, 3, 3], [2, 1, 1], [3, 2, 2]];
/// Query triples used when record 2 is wanted.
pub const EXAMPLE2_TRIPLES_M2: [[u8; 3]; 3] = [[3, 1, 3], [1, 2, 1], [2, 3, 2]];

/// Bits `(a1, b1, a2, b2)` of the two records.
pub type Example2Records = [u8; 4];

/// The fixed table scheme with `N = 2`, `K = 3`, singleton collusion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Example2Scheme;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example2Transcript {
    pub m: usize,
    pub triple: [u8; 3],
    pub answers: [u8; 3],
    pub decoded: (u8, u8),
}

impl Example2Scheme {
    pub fn triples(m: usize) -> &'static [[u8; 3]; 3] {
        if m == 1 {
            &EXAMPLE2_TRIPLES_M1
        } else {
            &EXAMPLE2_TRIPLES_M2
        }
    }

    /// Content of node `k` (0-based) as a pair of linear forms over `(a1, b1, a2, b2)`.
    fn content_forms(node: usize) -> [[u8; 4]; 2] {
        match node {
            0 => [[1, 0, 0, 0], [0, 1, 0, 0]],
            1 => [[0, 0, 1, 0], [0, 0, 0, 1]],
            _ => [[1, 0, 1, 0], [0, 1, 0, 1]],
        }
    }

    /// The response of `node` to `query` as a linear form over `(a1, b1, a2, b2)`.
    pub fn response_form(node: usize, query: u8) -> [u8; 4] {
        let [x, y] = Self::content_forms(node);
        match query {
            1 => x,
            2 => y,
            _ => std::array::from_fn(|i| x[i] ^ y[i]),
        }
    }

    /// What node `k` stores.
    pub fn content(records: &Example2Records, node: usize) -> [u8; 2] {
        Self::content_forms(node).map(|form| apply_form(&form, records))
    }

    /// Table lookup performed by `node`.
    pub fn respond(records: &Example2Records, node: usize, query: u8) -> u8 {
        let [x, y] = Self::content(records, node);
        match query {
            1 => x,
            2 => y,
            _ => x ^ y,
        }
    }

    /// Recovers `(a_M, b_M)` by expressing each wanted bit as a GF(2)
    /// combination of the three answers.
    pub fn decode(m: usize, triple: [u8; 3], answers: [u8; 3]) -> Option<(u8, u8)> {
        let f = PrimeField::new(2).expect("2 is prime");
        let forms = FieldMatrix::from_fn(f, 4, 3, |row, col| Self::response_form(col, triple[col])[row] as u32);
        let combine = |target: usize| -> Option<u8> {
            let wanted: Vec<u32> = (0..4).map(|i| u32::from(i == target)).collect();
            let coeffs = forms.solve_unique(&wanted).ok()?;
            Some(coeffs.iter().zip(answers).fold(0, |acc, (&c, a)| acc ^ (c as u8 & a)))
        };
        let base = 2 * (m - 1);
        Some((combine(base)?, combine(base + 1)?))
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        records: Example2Records,
        m: usize,
        rng: &mut R,
    ) -> Result<Example2Transcript, BaselineError> {
        if let Some(&bad) = records.iter().find(|&&b| b > 1) {
            return Err(BaselineError::NotABit(bad));
        }
        if m == 0 || m > 2 {
            return Err(BaselineError::IndexOutOfRange { m, n: 2 });
        }
        let triple = Self::triples(m)[rng.random_range(0..3)];
        let answers: [u8; 3] = std::array::from_fn(|k| Self::respond(&records, k, triple[k]));
        let decoded = Self::decode(m, triple, answers).expect("every listed triple is decodable");
        Ok(Example2Transcript { m, triple, answers, decoded })
    }

    /// `(SC, RC)`: each node stores 2 of the 4 data bits; each answer is 1 bit per 2-bit record.
    pub fn costs() -> (Rational, Rational) {
        let (record_bits, records, node_bits, answer_bits) = (2, 2, 2, 1);
        (Rational::new(node_bits, records * record_bits), Rational::new(answer_bits, record_bits))
    }
}

fn apply_form(form: &[u8; 4], records: &Example2Records) -> u8 {
    form.iter().zip(records).fold(0, |acc, (&c, &b)| acc ^ (c & b))
}

/// Runs the table scheme once.
pub fn example2_run<R: Rng + ?Sized>(
    records: Example2Records,
    m: usize,
    rng: &mut R,
) -> Result<((u8, u8), Example2Transcript), BaselineError> {
    let t = Example2Scheme.run(records, m, rng)?;
    Ok((t.decoded, t))
}

impl QueryScheme for Example2Scheme {
    fn nodes(&self) -> usize {
        3
    }

    fn record_count(&self) -> usize {
        2
    }

    fn randomness_outcomes(&self) -> u128 {
        3
    }

    fn query(&self, m: usize, outcome: u128, node: usize) -> Vec<u32> {
        vec![Self::triples(m)[outcome as usize][node] as u32]
    }
}

impl AnswerScheme for Example2Scheme {
    fn record_set_count(&self) -> u128 {
        16
    }

    fn answers(&self, record_set: u128, m: usize, outcome: u128) -> Vec<u32> {
        let records = bits_of(record_set);
        let triple = Self::triples(m)[outcome as usize];
        (0..3).map(|k| Self::respond(&records, k, triple[k]) as u32).collect()
    }

    fn wanted(&self, record_set: u128, m: usize) -> Vec<u32> {
        let records = bits_of(record_set);
        vec![records[2 * (m - 1)] as u32, records[2 * (m - 1) + 1] as u32]
    }
}

/// The `index`-th of the 16 record assignments.
pub fn bits_of(index: u128) -> Example2Records {
    std::array::from_fn(|i| ((index >> i) & 1) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{tradeoff_bound, CollusionPattern, TradeoffBound};
    use crate::oracle::{brute_errorfree, brute_privacy, conditional_view_counts};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sharing_always_decodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for q in [2u64, 5, 65537] {
            let f = PrimeField::new(q).unwrap();
            for k in 2..6 {
                let scheme = SharingScheme::new(f, k, 4).unwrap();
                for _ in 0..20 {
                    let records: Vec<u32> = (0..4).map(|_| f.random(&mut rng)).collect();
                    for m in 1..=4 {
                        let (value, t) = sharing_retrieve(&scheme, &records, m, &mut rng).unwrap();
                        assert_eq!(value, records[m - 1]);
                        // Σ c_k Q_k = e_M with c_k = 1.
                        let sum: Vec<u32> =
                            (0..4).map(|i| t.queries.iter().fold(0, |acc, qk| f.add(acc, qk[i]))).collect();
                        let e_m: Vec<u32> = (0..4).map(|i| u32::from(i + 1 == m)).collect();
                        assert_eq!(sum, e_m);
                    }
                }
            }
        }
    }

    #[test]
    fn sharing_rejects_bad_input() {
        let f = PrimeField::new(5).unwrap();
        assert_eq!(SharingScheme::new(f, 1, 2), Err(BaselineError::TooFewNodes(1)));
        let s = SharingScheme::new(f, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(s.retrieve(&[1, 2], 3, &mut rng), Err(BaselineError::IndexOutOfRange { .. })));
        assert!(matches!(s.retrieve(&[1], 1, &mut rng), Err(BaselineError::RecordCount { .. })));
    }

    #[test]
    fn sharing_marginals_are_uniform() {
        let f = PrimeField::new(2).unwrap();
        for n in 1..=3 {
            for k in 2..=3 {
                let scheme = SharingScheme::new(f, k, n).unwrap();
                assert!(brute_privacy(&scheme, &CollusionPattern::singletons(k)).unwrap());
                assert!(brute_errorfree(&scheme).unwrap());
                let total = scheme.randomness_outcomes() as u64;
                for node in 0..k {
                    for m in 1..=n {
                        let counts = conditional_view_counts(&scheme, &[node], m);
                        // Uniform over all 2^n vectors.
                        assert_eq!(counts.len(), 1 << n);
                        assert!(counts.values().all(|&c| c * (1 << n) == total));
                    }
                }
            }
        }
    }

    #[test]
    fn sharing_is_not_private_against_all_nodes() {
        let f = PrimeField::new(2).unwrap();
        let scheme = SharingScheme::new(f, 2, 2).unwrap();
        let all = CollusionPattern::new(2, vec![vec![0, 1]]).unwrap();
        assert!(!brute_privacy(&scheme, &all).unwrap());
    }

    #[test]
    fn example2_walkthrough() {
        // M=1, triple (1,3,3): answers a1, a2⊕b2, a1⊕a2⊕b1⊕b2.
        for idx in 0..16 {
            let r = bits_of(idx);
            let [a1, b1, a2, b2] = r;
            let answers: [u8; 3] = std::array::from_fn(|k| Example2Scheme::respond(&r, k, [1, 3, 3][k]));
            assert_eq!(answers, [a1, a2 ^ b2, a1 ^ a2 ^ b1 ^ b2]);
            assert_eq!(answers[0] ^ answers[1] ^ answers[2], b1);
            assert_eq!(Example2Scheme::decode(1, [1, 3, 3], answers), Some((a1, b1)));
        }
    }

    #[test]
    fn example2_table_matches_content() {
        let r = [1, 0, 1, 1];
        assert_eq!(Example2Scheme::content(&r, 2), [0, 1]);
        assert_eq!(Example2Scheme::respond(&r, 1, 2), 1);
        assert_eq!(Example2Scheme::respond(&r, 2, 3), 1);
    }

    #[test]
    fn example2_exhaustive_decoding() {
        let mut cases = 0;
        for idx in 0..16 {
            let r = bits_of(idx);
            for m in 1..=2 {
                for &triple in Example2Scheme::triples(m) {
                    let answers: [u8; 3] = std::array::from_fn(|k| Example2Scheme::respond(&r, k, triple[k]));
                    let expect = (r[2 * (m - 1)], r[2 * (m - 1) + 1]);
                    assert_eq!(Example2Scheme::decode(m, triple, answers), Some(expect));
                    cases += 1;
                }
            }
        }
        assert_eq!(cases, 96);
    }

    #[test]
    fn example2_distributions() {
        for m in 1..=2 {
            let triples = Example2Scheme::triples(m);
            for node in 0..3 {
                let mut seen: Vec<u8> = triples.iter().map(|t| t[node]).collect();
                seen.sort();
                assert_eq!(seen, vec![1, 2, 3]);
            }
        }
        assert!(brute_privacy(&Example2Scheme, &CollusionPattern::singletons(3)).unwrap());
        assert!(brute_errorfree(&Example2Scheme).unwrap());
        // Pairs of nodes do learn the index.
        let pairs = CollusionPattern::new(3, vec![vec![0, 1]]).unwrap();
        assert!(!brute_privacy(&Example2Scheme, &pairs).unwrap());
    }

    #[test]
    fn example2_run_and_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let r = bits_of(rng.random_range(0..16));
            for m in 1..=2 {
                let (decoded, t) = example2_run(r, m, &mut rng).unwrap();
                assert_eq!(decoded, (r[2 * m - 2], r[2 * m - 1]));
                assert!(Example2Scheme::triples(m).contains(&t.triple));
            }
        }
        assert!(matches!(example2_run([2, 0, 0, 0], 1, &mut rng), Err(BaselineError::NotABit(2))));
        let (sc, rc) = Example2Scheme::costs();
        assert_eq!((sc, rc), (Rational::new(1, 2), Rational::new(1, 2)));
        // The linear family cannot reach this point with K=3.
        assert_eq!(tradeoff_bound(sc, 3), TradeoffBound::Finite(Rational::from_integer(1)));
    }
}
