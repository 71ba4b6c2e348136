//! Algebraic certification of a `(P, V)` pair: the retrievability and
//! privacy conditions, the necessary conditions on `P` and `(R, T)`, and
//! the storage/retrieval tradeoff bound.

use std::fmt;

use thiserror::Error;

use crate::params::{Rational, SystemParams};
use crate::retrieval::{decode_system, retrieval_cost, RetrievalMatrix};
use crate::storage::{storage_cost, ParityCheck};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("collusion subset {subset:?} names node {node}, but there are only {k} nodes")]
    NodeOutOfRange { subset: Vec<usize>, node: usize, k: usize },
    #[error("collusion subsets must be nonempty")]
    EmptySubset,
    #[error("exhaustive subset sweep refused for K={0} > 20; pass explicit subsets")]
    SweepTooLarge(usize),
}

/// Family of node subsets that may pool their queries.
///
/// Stored in canonical form: each subset sorted and deduplicated, subsets
/// contained in another subset dropped, the family sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollusionPattern {
    subsets: Vec<Vec<usize>>,
}

impl CollusionPattern {
    /// Builds a pattern from zero-based node subsets.
    pub fn new(k: usize, subsets: impl IntoIterator<Item = Vec<usize>>) -> Result<Self, AnalysisError> {
        let mut sets: Vec<Vec<usize>> = Vec::new();
        for mut set in subsets {
            if set.is_empty() {
                return Err(AnalysisError::EmptySubset);
            }
            set.sort_unstable();
            set.dedup();
            if let Some(&node) = set.iter().find(|&&n| n >= k) {
                return Err(AnalysisError::NodeOutOfRange { subset: set, node, k });
            }
            sets.push(set);
        }
        sets.sort();
        sets.dedup();
        let dominated = |a: &Vec<usize>, all: &[Vec<usize>]| {
            all.iter().any(|b| b != a && b.len() > a.len() && a.iter().all(|x| b.contains(x)))
        };
        let kept: Vec<Vec<usize>> = sets.iter().filter(|a| !dominated(a, &sets)).cloned().collect();
        Ok(Self { subsets: kept })
    }

    /// Every node on its own.
    pub fn singletons(k: usize) -> Self {
        Self { subsets: (0..k).map(|n| vec![n]).collect() }
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Subsets with 1-based node labels.
    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.subsets.iter().map(|s| s.iter().map(|n| n + 1).collect()).collect()
    }
}

/// Retrievability: the homogeneous decoding system has only the zero solution.
pub fn check_retrievability(parity: &ParityCheck, v: &RetrievalMatrix, params: &SystemParams) -> bool {
    decode_system(v, parity, params).rank() == params.unknowns()
}

/// Privacy for one colluding set: the span of its `V` columns meets `V₀`
/// (vectors supported on the top `L` rows) only in zero. Equivalent to
/// `rank(G) = rank(G⁻)`.
pub fn private_for(v: &RetrievalMatrix, alpha: &[usize], params: &SystemParams) -> bool {
    let g = v.node_block(alpha);
    let g_minus = g.row_block(params.l, params.v_rows());
    g.rank() == g_minus.rank()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyVerdict {
    pub private: bool,
    /// First colluding set (zero-based) whose view leaks the index.
    pub failing: Option<Vec<usize>>,
}

pub fn check_privacy(v: &RetrievalMatrix, phi: &CollusionPattern, params: &SystemParams) -> PrivacyVerdict {
    let failing = phi.subsets().iter().find(|alpha| !private_for(v, alpha, params)).cloned();
    PrivacyVerdict { private: failing.is_none(), failing }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prop1Verdict {
    pub ok: bool,
    /// Subset with the smallest slack (the first violating one when `ok` is false).
    pub worst_beta: Vec<usize>,
    /// `rank P(β)·(T+L) − (T+L−R)(K−|β|)` at `worst_beta`.
    pub slack: i64,
}

fn prop1_slack(parity: &ParityCheck, params: &SystemParams, beta: &[usize]) -> i64 {
    let width = params.v_rows() as i64;
    let lhs = (width - params.r as i64) * (params.k - beta.len()) as i64;
    let rhs = parity.without_rows(beta).rank() as i64 * width;
    rhs - lhs
}

/// `(T+L−R)(K−|β|) ≤ rank P(β)·(T+L)` over every `β ⊆ {0..K}`.
pub fn check_prop1(parity: &ParityCheck, params: &SystemParams) -> Result<Prop1Verdict, AnalysisError> {
    if params.k > 20 {
        return Err(AnalysisError::SweepTooLarge(params.k));
    }
    let betas = (0u32..1 << params.k).map(|mask| (0..params.k).filter(|i| mask >> i & 1 == 1).collect());
    Ok(prop1_over(parity, params, betas))
}

/// [`check_prop1`] over an explicit list of subsets.
pub fn check_prop1_subsets(
    parity: &ParityCheck,
    params: &SystemParams,
    betas: impl IntoIterator<Item = Vec<usize>>,
) -> Prop1Verdict {
    prop1_over(parity, params, betas)
}

fn prop1_over(
    parity: &ParityCheck,
    params: &SystemParams,
    betas: impl IntoIterator<Item = Vec<usize>>,
) -> Prop1Verdict {
    let mut worst: Option<(i64, Vec<usize>)> = None;
    for beta in betas {
        let slack = prop1_slack(parity, params, &beta);
        if slack < 0 {
            return Prop1Verdict { ok: false, worst_beta: beta, slack };
        }
        if worst.as_ref().is_none_or(|(w, _)| slack < *w) {
            worst = Some((slack, beta));
        }
    }
    let (slack, worst_beta) = worst.unwrap_or((0, Vec::new()));
    Prop1Verdict { ok: true, worst_beta, slack }
}

/// Privacy forces `R ≤ T`.
pub fn check_prop2(params: &SystemParams) -> bool {
    params.r <= params.t
}

/// Lower bound on retrieval cost at a given storage cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeoffBound {
    /// `RC ≥ SC/(K·SC − 1)`.
    Finite(Rational),
    /// `K·SC ≤ 1`: no scheme in the family exists.
    Infeasible,
}

impl fmt::Display for TradeoffBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(r) => write!(f, "{r}"),
            Self::Infeasible => f.write_str("infeasible"),
        }
    }
}

pub fn tradeoff_bound(sc: Rational, k: usize) -> TradeoffBound {
    let denom = sc * Rational::from_integer(k as i64) - Rational::from_integer(1);
    if denom <= Rational::from_integer(0) {
        TradeoffBound::Infeasible
    } else {
        TradeoffBound::Finite(sc / denom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub sc: Rational,
    pub rc: Rational,
    pub bound: TradeoffBound,
    /// `rc` equals the bound exactly.
    pub tight: bool,
}

impl CostReport {
    pub fn from_costs(sc: Rational, rc: Rational, k: usize) -> Self {
        let bound = tradeoff_bound(sc, k);
        let tight = matches!(bound, TradeoffBound::Finite(b) if b == rc);
        Self { sc, rc, bound, tight }
    }

    pub fn for_params(params: &SystemParams) -> Self {
        Self::from_costs(storage_cost(params), retrieval_cost(params), params.k)
    }

    /// `rc ≥ bound` (vacuously false when infeasible).
    pub fn respects_bound(&self) -> bool {
        matches!(self.bound, TradeoffBound::Finite(b) if self.rc >= b)
    }
}

/// Overall standing of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Both algebraic conditions hold; the scheme is error-free and private.
    Certified,
    /// An exhaustive oracle found a decoding failure or a leak.
    Falsified,
    /// The algebraic conditions fail but no oracle refuted the scheme.
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Certified => "certified",
            Self::Falsified => "falsified",
            Self::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificationReport {
    pub retrievable: bool,
    pub private: bool,
    pub failing_pattern: Option<Vec<usize>>,
    pub prop1: Prop1Verdict,
    pub prop2_ok: bool,
    pub verdict: Verdict,
}

impl CertificationReport {
    pub fn certified(&self) -> bool {
        self.retrievable && self.private
    }
}

/// Runs every algebraic check. The verdict is `Certified` or `Unknown`;
/// oracle refutation is layered on by callers that can afford it.
pub fn certify(
    parity: &ParityCheck,
    v: &RetrievalMatrix,
    phi: &CollusionPattern,
    params: &SystemParams,
) -> Result<CertificationReport, AnalysisError> {
    let retrievable = check_retrievability(parity, v, params);
    let privacy = check_privacy(v, phi, params);
    let prop1 = check_prop1(parity, params)?;
    let prop2_ok = check_prop2(params);
    let verdict = if retrievable && privacy.private { Verdict::Certified } else { Verdict::Unknown };
    Ok(CertificationReport {
        retrievable,
        private: privacy.private,
        failing_pattern: privacy.failing,
        prop1,
        prop2_ok,
        verdict,
    })
}
