//! Exhaustive oracles for privacy and error-freeness on tiny instances.
//!
//! Both oracles work from the definitions rather than the algebra:
//! privacy compares the exact conditional distributions of what a colluding
//! set sees under each requested index; error-freeness checks that, for
//! every index and every realisation of the client's randomness, no two
//! record sets with different requested records produce the same answers.

use std::collections::HashMap;

use thiserror::Error;

use crate::analysis::CollusionPattern;
use crate::field::PrimeField;
use crate::matrix::FieldMatrix;
use crate::params::SystemParams;
use crate::retrieval::{decode, queries_for_mask, respond, MaskMatrix, RetrievalMatrix};
use crate::storage::{store, ParityCheck, RecordMatrix};

/// Largest enumeration the oracles will attempt.
pub const ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration needs {required} cases, above the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
}

/// A retrieval scheme whose query randomness can be enumerated.
///
/// Each of the `randomness_outcomes()` outcomes is equally likely.
pub trait QueryScheme {
    fn nodes(&self) -> usize;
    fn record_count(&self) -> usize;
    fn randomness_outcomes(&self) -> u128;
    /// Serialised query received by `node` when index `m` (1-based) is
    /// requested under randomness `outcome`.
    fn query(&self, m: usize, outcome: u128, node: usize) -> Vec<u32>;
}

/// A scheme whose record sets can also be enumerated.
pub trait AnswerScheme: QueryScheme {
    fn record_set_count(&self) -> u128;
    /// Concatenated answers of every node.
    fn answers(&self, record_set: u128, m: usize, outcome: u128) -> Vec<u32>;
    /// The requested record `D_m` within `record_set`.
    fn wanted(&self, record_set: u128, m: usize) -> Vec<u32>;
}

fn within_budget(required: u128) -> Result<(), OracleError> {
    if required > ENUMERATION_BUDGET as u128 {
        return Err(OracleError::BudgetExceeded { required, budget: ENUMERATION_BUDGET });
    }
    Ok(())
}

/// Counts of each observed view `(Q_k : k ∈ α)` given `m`.
pub fn conditional_view_counts<S: QueryScheme + ?Sized>(
    scheme: &S,
    alpha: &[usize],
    m: usize,
) -> HashMap<Vec<Vec<u32>>, u64> {
    let mut counts = HashMap::new();
    for outcome in 0..scheme.randomness_outcomes() {
        let view: Vec<Vec<u32>> = alpha.iter().map(|&k| scheme.query(m, outcome, k)).collect();
        *counts.entry(view).or_insert(0) += 1;
    }
    counts
}

/// True iff every colluding set's view has the same distribution under every index.
pub fn brute_privacy<S: QueryScheme + ?Sized>(scheme: &S, phi: &CollusionPattern) -> Result<bool, OracleError> {
    within_budget(scheme.randomness_outcomes().saturating_mul(scheme.record_count() as u128))?;
    for alpha in phi.subsets() {
        let reference = conditional_view_counts(scheme, alpha, 1);
        for m in 2..=scheme.record_count() {
            if conditional_view_counts(scheme, alpha, m) != reference {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff `D_M` is a function of `(M, Q, A)` over every enumerated case.
pub fn brute_errorfree<S: AnswerScheme + ?Sized>(scheme: &S) -> Result<bool, OracleError> {
    within_budget(
        scheme
            .randomness_outcomes()
            .saturating_mul(scheme.record_count() as u128)
            .saturating_mul(scheme.record_set_count()),
    )?;
    for m in 1..=scheme.record_count() {
        for outcome in 0..scheme.randomness_outcomes() {
            let mut seen: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
            for set in 0..scheme.record_set_count() {
                let wanted = scheme.wanted(set, m);
                match seen.entry(scheme.answers(set, m, outcome)) {
                    std::collections::hash_map::Entry::Occupied(e) => {
                        if *e.get() != wanted {
                            return Ok(false);
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(wanted);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Digits of `index` in base `q`, least significant first.
pub fn digits(mut index: u128, q: u32, len: usize) -> Vec<u32> {
    (0..len)
        .map(|_| {
            let d = (index % q as u128) as u32;
            index /= q as u128;
            d
        })
        .collect()
}

fn checked_pow(q: u32, exp: usize) -> u128 {
    (q as u128).checked_pow(exp as u32).unwrap_or(u128::MAX)
}

/// A `(P, V)` scheme viewed as an enumerable object: the randomness is the
/// mask `U`, record sets are all choices of information symbols.
///
/// Records are enumerated through a basis of the code `{d : d·P = 0}`
/// rather than systematic encoding, so parity checks whose last `S` rows
/// are singular are covered too.
pub struct LinearScheme<'a> {
    pub parity: &'a ParityCheck,
    pub v: &'a RetrievalMatrix,
    pub params: SystemParams,
    /// `K×(K−S)`, columns span the code.
    code_basis: FieldMatrix,
}

impl<'a> LinearScheme<'a> {
    pub fn new(parity: &'a ParityCheck, v: &'a RetrievalMatrix, params: SystemParams) -> Self {
        let code_basis = parity.matrix().transpose().null_space();
        Self { parity, v, params, code_basis }
    }

    fn field(&self) -> PrimeField {
        self.params.field
    }

    pub fn mask(&self, outcome: u128) -> MaskMatrix {
        let p = &self.params;
        let entries = digits(outcome, p.q(), p.node_len() * p.t);
        MaskMatrix(FieldMatrix::from_vec(self.field(), p.node_len(), p.t, entries).expect("digits are residues"))
    }

    /// The `record_set`-th assignment of all `N` records.
    pub fn records(&self, record_set: u128) -> Vec<RecordMatrix> {
        let p = &self.params;
        let dim = self.code_basis.cols();
        let coeffs = digits(record_set, p.q(), p.n * p.l * dim);
        coeffs
            .chunks(p.l * dim)
            .map(|record| {
                let rows: Vec<u32> =
                    record.chunks(dim).flat_map(|c| self.code_basis.mul_vec(c).expect("basis width")).collect();
                let m = FieldMatrix::from_vec(self.field(), p.l, p.k, rows).expect("reduced");
                RecordMatrix::new(m, self.parity).expect("rows lie in the code")
            })
            .collect()
    }

    /// Runs the full protocol for every `(records, U, M)` and checks
    /// `decode` returns `d_M` each time.
    pub fn exhaustive_round_trip(&self) -> Result<bool, OracleError> {
        within_budget(
            self.randomness_outcomes()
                .saturating_mul(self.record_count() as u128)
                .saturating_mul(self.record_set_count()),
        )?;
        let p = &self.params;
        for set in 0..self.record_set_count() {
            let records = self.records(set);
            let nodes = store(&records, self.parity).expect("records are codewords");
            for outcome in 0..self.randomness_outcomes() {
                let mask = self.mask(outcome);
                for m in 1..=p.n {
                    let queries = queries_for_mask(self.v, m, p, &mask).expect("valid index");
                    let answers: Vec<_> = nodes
                        .iter()
                        .zip(&queries)
                        .map(|(x, q)| respond(x, q, self.field()).expect("matching lengths"))
                        .collect();
                    match decode(self.v, self.parity, &answers, m, p) {
                        Ok(d) if d == records[m - 1] => {}
                        _ => return Ok(false),
                    }
                }
            }
        }
        Ok(true)
    }
}

impl QueryScheme for LinearScheme<'_> {
    fn nodes(&self) -> usize {
        self.params.k
    }

    fn record_count(&self) -> usize {
        self.params.n
    }

    fn randomness_outcomes(&self) -> u128 {
        checked_pow(self.params.q(), self.params.node_len() * self.params.t)
    }

    fn query(&self, m: usize, outcome: u128, node: usize) -> Vec<u32> {
        let queries = queries_for_mask(self.v, m, &self.params, &self.mask(outcome)).expect("valid index");
        queries[node].vectors.concat()
    }
}

impl AnswerScheme for LinearScheme<'_> {
    fn record_set_count(&self) -> u128 {
        checked_pow(self.params.q(), self.params.n * self.params.info_len())
    }

    fn answers(&self, record_set: u128, m: usize, outcome: u128) -> Vec<u32> {
        let nodes = store(&self.records(record_set), self.parity).expect("records are codewords");
        let queries = queries_for_mask(self.v, m, &self.params, &self.mask(outcome)).expect("valid index");
        nodes
            .iter()
            .zip(&queries)
            .flat_map(|(x, q)| respond(x, q, self.field()).expect("matching lengths").values)
            .collect()
    }

    fn wanted(&self, record_set: u128, m: usize) -> Vec<u32> {
        self.records(record_set).swap_remove(m - 1).matrix().as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{check_privacy, check_retrievability};
    use crate::retrieval::{cyclic_v_for, random_v};
    use crate::storage::make_mds_parity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn digits_round_trip() {
        assert_eq!(digits(0, 3, 2), vec![0, 0]);
        assert_eq!(digits(7, 3, 3), vec![1, 2, 0]);
    }

    #[test]
    fn unmasked_selector_leaks() {
        // T=1 with zero mask weight: Q = E_{M,1} exactly.
        let p = SystemParams::new(2, 2, 2, 1, 1, 1, 1).unwrap();
        let parity = make_mds_parity(2, 1, p.field).unwrap();
        let m = FieldMatrix::from_rows(p.field, [[1, 1], [0, 0]]).unwrap();
        let v = RetrievalMatrix::new(m, &p).unwrap();
        let scheme = LinearScheme::new(&parity, &v, p);
        assert!(!brute_privacy(&scheme, &CollusionPattern::singletons(2)).unwrap());
    }

    #[test]
    fn enumerates_codes_without_systematic_form() {
        // The last parity entry is zero, so the code has no systematic encoder.
        let p = SystemParams::new(3, 2, 3, 1, 1, 2, 2).unwrap();
        let parity = ParityCheck::new(FieldMatrix::from_rows(p.field, [[1], [2], [0]]).unwrap()).unwrap();
        let v = random_v(&p, &mut ChaCha8Rng::seed_from_u64(1));
        let scheme = LinearScheme::new(&parity, &v, p);
        let mut seen = std::collections::HashSet::new();
        for set in 0..scheme.record_set_count() {
            let recs = scheme.records(set);
            assert!(recs.iter().all(|r| r.is_codeword(&parity)));
            assert!(seen.insert(recs.iter().map(|r| r.matrix().as_slice().to_vec()).collect::<Vec<_>>()));
        }
        assert_eq!(seen.len(), 81);
    }

    #[test]
    fn budget_is_enforced() {
        let p = SystemParams::new(65537, 2, 3, 1, 1, 2, 2).unwrap();
        let parity = make_mds_parity(3, 1, p.field).unwrap();
        let v = random_v(&p, &mut ChaCha8Rng::seed_from_u64(0));
        let scheme = LinearScheme::new(&parity, &v, p);
        assert!(matches!(
            brute_privacy(&scheme, &CollusionPattern::singletons(3)),
            Err(OracleError::BudgetExceeded { .. })
        ));
        assert!(brute_errorfree(&scheme).is_err());
    }

    #[test]
    fn cyclic_scheme_at_q2_matches_algebra() {
        let p = SystemParams::balanced(2, 2, 3, 1).unwrap();
        // GF(2) has too few points for the Vandermonde construction; the
        // all-ones parity is MDS for S=1 anyway.
        let parity2 = ParityCheck::new(FieldMatrix::from_rows(p.field, [[1], [1], [1]]).unwrap()).unwrap();
        let v = cyclic_v_for(&p);
        let scheme = LinearScheme::new(&parity2, &v, p);
        assert!(check_retrievability(&parity2, &v, &p));
        assert!(brute_errorfree(&scheme).unwrap());
        assert!(scheme.exhaustive_round_trip().unwrap());
        let phi = CollusionPattern::singletons(3);
        assert_eq!(brute_privacy(&scheme, &phi).unwrap(), check_privacy(&v, &phi, &p).private);
        assert!(!brute_privacy(&scheme, &phi).unwrap());
    }

    #[test]
    fn non_retrievable_scheme_fails_oracle() {
        let p = SystemParams::new(3, 2, 3, 1, 1, 2, 2).unwrap();
        let parity = make_mds_parity(3, 1, p.field).unwrap();
        let v = RetrievalMatrix::new(FieldMatrix::zeros(p.field, 3, 6), &p).unwrap();
        let scheme = LinearScheme::new(&parity, &v, p);
        assert!(!check_retrievability(&parity, &v, &p));
        assert!(!brute_errorfree(&scheme).unwrap());
        assert!(!scheme.exhaustive_round_trip().unwrap());
    }
}
