//! A bound `(P, V)` pair with its parameters and collusion pattern, and
//! the construction routine that produces certified schemes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{certify, AnalysisError, CertificationReport, CollusionPattern, CostReport, Verdict};
use crate::oracle::{brute_errorfree, brute_privacy, LinearScheme};
use crate::params::{ParamError, SystemParams};
use crate::retrieval::{cyclic_v_for, random_v, RetrievalError, RetrievalMatrix};
use crate::storage::{make_mds_parity, make_uncoded_parity, CodeError, ParityCheck};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("parity check has {got} rows/{got_cols} columns, parameters need {k}x{s}")]
    ParityShape { k: usize, s: usize, got: usize, got_cols: usize },
    #[error("no certified retrieval matrix after {attempts} seeds starting at {first_seed}; q is likely too small")]
    RetriesExhausted { attempts: usize, first_seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub params: SystemParams,
    pub parity: ParityCheck,
    pub v: RetrievalMatrix,
    pub phi: CollusionPattern,
    /// Seed that produced `v`, when it was drawn at random.
    pub seed: Option<u64>,
}

impl Scheme {
    pub fn new(
        params: SystemParams,
        parity: ParityCheck,
        v: RetrievalMatrix,
        phi: CollusionPattern,
        seed: Option<u64>,
    ) -> Result<Self, ConstructError> {
        if parity.nodes() != params.k || parity.parity_cols() != params.s {
            return Err(ConstructError::ParityShape {
                k: params.k,
                s: params.s,
                got: parity.nodes(),
                got_cols: parity.parity_cols(),
            });
        }
        // Re-validate V against the parameters.
        let v = RetrievalMatrix::new(v.matrix().clone(), &params)?;
        Ok(Self { params, parity, v, phi, seed })
    }

    pub fn certify(&self) -> Result<CertificationReport, AnalysisError> {
        certify(&self.parity, &self.v, &self.phi, &self.params)
    }

    /// Algebraic certification, refined by the exhaustive oracles when the
    /// algebra fails and the instance is small enough to enumerate.
    pub fn certify_with_oracles(&self) -> Result<CertificationReport, AnalysisError> {
        let mut report = self.certify()?;
        if report.verdict != Verdict::Certified {
            let linear = LinearScheme::new(&self.parity, &self.v, self.params);
            let errorfree = if report.retrievable { Ok(true) } else { brute_errorfree(&linear) };
            let private = if report.private { Ok(true) } else { brute_privacy(&linear, &self.phi) };
            if matches!(errorfree, Ok(false)) || matches!(private, Ok(false)) {
                report.verdict = Verdict::Falsified;
            }
        }
        Ok(report)
    }

    pub fn costs(&self) -> CostReport {
        CostReport::for_params(&self.params)
    }

    pub fn linear(&self) -> LinearScheme<'_> {
        LinearScheme::new(&self.parity, &self.v, self.params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    Mds,
    Uncoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VKind {
    Cyclic,
    Random,
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    pub q: u64,
    pub k: usize,
    /// Parity columns; ignored for uncoded storage, which always uses `K-1`.
    pub s: usize,
    pub n: usize,
    pub code: CodeKind,
    pub v: VKind,
    pub seed: u64,
    /// Seeds tried for a random `V` before giving up.
    pub max_attempts: usize,
    /// Defaults to singletons.
    pub phi: Option<CollusionPattern>,
}

impl ConstructOptions {
    pub fn new(q: u64, k: usize, s: usize) -> Self {
        Self { q, k, s, n: 2, code: CodeKind::Mds, v: VKind::Random, seed: 0, max_attempts: 32, phi: None }
    }
}

#[derive(Debug, Clone)]
pub struct Constructed {
    pub scheme: Scheme,
    pub report: CertificationReport,
    /// Seeds tried, including the successful one.
    pub attempts: usize,
}

/// Builds a scheme with `R = T = K-S`, `L = S`.
///
/// A random `V` is redrawn from seeds `seed, seed+1, …` until both
/// conditions hold. A cyclic `V` is returned as is with its report.
pub fn construct(opts: &ConstructOptions) -> Result<Constructed, ConstructError> {
    let s = match opts.code {
        CodeKind::Mds => opts.s,
        CodeKind::Uncoded => opts.k.saturating_sub(1),
    };
    let params = SystemParams::balanced(opts.q, opts.n, opts.k, s)?;
    let parity = match opts.code {
        CodeKind::Mds => make_mds_parity(opts.k, s, params.field)?,
        CodeKind::Uncoded => make_uncoded_parity(opts.k, params.field)?,
    };
    let phi = opts.phi.clone().unwrap_or_else(|| CollusionPattern::singletons(opts.k));
    match opts.v {
        VKind::Cyclic => {
            let scheme = Scheme::new(params, parity, cyclic_v_for(&params), phi, None)?;
            let report = scheme.certify()?;
            Ok(Constructed { scheme, report, attempts: 1 })
        }
        VKind::Random => {
            for attempt in 0..opts.max_attempts {
                let seed = opts.seed.wrapping_add(attempt as u64);
                let v = random_v(&params, &mut ChaCha8Rng::seed_from_u64(seed));
                let scheme = Scheme::new(params, parity.clone(), v, phi.clone(), Some(seed))?;
                let report = scheme.certify()?;
                if report.certified() {
                    return Ok(Constructed { scheme, report, attempts: attempt + 1 });
                }
            }
            Err(ConstructError::RetriesExhausted { attempts: opts.max_attempts, first_seed: opts.seed })
        }
    }
}
