//! Command implementations. Each returns a serialisable report and an exit
//! code; printing is left to the binary.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use pir_core::baselines::{bits_of, Example2Scheme, SharingScheme};
use pir_core::oracle::{brute_errorfree, brute_privacy, OracleError};
use pir_core::{
    construct, CertificationReport, CodeKind, CollusionPattern, ConstructError, ConstructOptions, CostReport,
    PrimeField, Rational, Scheme, Transcript, VKind,
};
use pir_sim::observer::random_records;
use pir_sim::{run_session, ClusterConfig, SessionError, SessionOptions, Transport};

use crate::file::{format_records, parse_records, read, FileError, SchemeFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Usage(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Construct(ConstructError::RetriesExhausted { .. })
            | CommandError::Session(_)
            | CommandError::Oracle(_) => EXIT_FAILED,
            _ => EXIT_USAGE,
        }
    }
}

fn ratio(r: Rational) -> String {
    r.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prop1Json {
    pub ok: bool,
    pub worst_beta: Vec<usize>,
    pub slack: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificationJson {
    pub retrievable: bool,
    pub private: bool,
    /// 1-based node indices of the first leaking colluding set.
    pub failing_pattern: Option<Vec<usize>>,
    pub prop1: Prop1Json,
    pub prop2: bool,
    pub verdict: &'static str,
}

impl From<&CertificationReport> for CertificationJson {
    fn from(r: &CertificationReport) -> Self {
        let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
        Self {
            retrievable: r.retrievable,
            private: r.private,
            failing_pattern: r.failing_pattern.as_deref().map(one_based),
            prop1: Prop1Json { ok: r.prop1.ok, worst_beta: one_based(&r.prop1.worst_beta), slack: r.prop1.slack },
            prop2: r.prop2_ok,
            verdict: r.verdict.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostJson {
    pub sc: String,
    pub rc: Option<String>,
    pub bound: String,
    pub tight: Option<bool>,
    pub respects_bound: Option<bool>,
}

impl From<&CostReport> for CostJson {
    fn from(c: &CostReport) -> Self {
        Self {
            sc: ratio(c.sc),
            rc: Some(ratio(c.rc)),
            bound: c.bound.to_string(),
            tight: Some(c.tight),
            respects_bound: Some(c.respects_bound()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub certification: CertificationJson,
    pub costs: CostJson,
}

// ---------------------------------------------------------------- construct

#[derive(Debug, Clone)]
pub struct ConstructArgs {
    pub q: u64,
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub code: CodeKind,
    pub v: VKind,
    pub seed: u64,
    pub max_attempts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructReport {
    pub attempts: usize,
    pub seed: Option<u64>,
    pub certification: CertificationJson,
    pub costs: CostJson,
}

pub fn cmd_construct(args: &ConstructArgs) -> Result<(Scheme, ConstructReport), CommandError> {
    let opts = ConstructOptions {
        n: args.n,
        code: args.code,
        v: args.v,
        seed: args.seed,
        max_attempts: args.max_attempts,
        ..ConstructOptions::new(args.q, args.k, args.s)
    };
    let built = construct(&opts)?;
    let report = ConstructReport {
        attempts: built.attempts,
        seed: built.scheme.seed,
        certification: (&built.report).into(),
        costs: (&built.scheme.costs()).into(),
    };
    Ok((built.scheme, report))
}

// ---------------------------------------------------------------- check

pub fn check_scheme(scheme: &Scheme) -> Result<(CheckReport, i32), CommandError> {
    let report = scheme.certify_with_oracles().map_err(ConstructError::from)?;
    let code = if report.certified() { EXIT_OK } else { EXIT_FAILED };
    Ok((CheckReport { certification: (&report).into(), costs: (&scheme.costs()).into() }, code))
}

pub fn cmd_check(path: &Path) -> Result<(CheckReport, i32), CommandError> {
    check_scheme(&SchemeFile::load(path)?)
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scheme: PathBuf,
    /// Random records are drawn from the seed when absent.
    pub records: Option<PathBuf>,
    pub m: usize,
    pub transport: Transport,
    pub seed: u64,
    pub allow_uncertified: bool,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeVectors {
    /// 1-based.
    pub node: usize,
    pub vectors: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptJson {
    pub m: usize,
    pub seed: u64,
    pub queries: Vec<NodeVectors>,
    pub answers: Vec<NodeVectors>,
    /// Decoded record as `L` rows of `K` symbols.
    pub decoded: Option<Vec<Vec<u32>>>,
    pub stored: Vec<Vec<u32>>,
    pub pass: bool,
}

impl TranscriptJson {
    fn new(t: &Transcript, seed: u64, stored: Vec<Vec<u32>>) -> Self {
        let decoded = t.decoded.as_ref().map(|d| d.matrix().to_rows());
        Self {
            m: t.m,
            seed,
            queries: t.queries.iter().map(|b| NodeVectors { node: b.node + 1, vectors: b.vectors.clone() }).collect(),
            answers: t
                .answers
                .iter()
                .map(|a| NodeVectors { node: a.node + 1, vectors: vec![a.values.clone()] })
                .collect(),
            pass: decoded.as_ref() == Some(&stored),
            decoded,
            stored,
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(TranscriptJson, i32), CommandError> {
    let scheme = SchemeFile::load(&args.scheme)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let records = match &args.records {
        Some(path) => parse_records(&read(path)?, &scheme)?,
        None => random_records(&scheme, &mut rng)?,
    };
    if args.m == 0 || args.m > scheme.params.n {
        return Err(CommandError::Usage(format!("--m {} is outside 1..={}", args.m, scheme.params.n)));
    }
    let opts = SessionOptions {
        cluster: ClusterConfig { transport: args.transport.clone(), timeout: args.timeout, faults: Vec::new() },
        allow_uncertified: args.allow_uncertified,
    };
    let transcript = run_session(&scheme, &records, args.m, &opts, &mut rng)?;
    let out = TranscriptJson::new(&transcript, args.seed, records[args.m - 1].matrix().to_rows());
    let code = if out.pass { EXIT_OK } else { EXIT_FAILED };
    Ok((out, code))
}

/// Random records for a scheme file, in records-file format.
pub fn sample_records(scheme: &Scheme, seed: u64) -> Result<String, CommandError> {
    let records = random_records(scheme, &mut ChaCha8Rng::seed_from_u64(seed))?;
    Ok(format_records(&records, &scheme.params))
}

// ---------------------------------------------------------------- examples

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Property {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExampleReport {
    pub example: u8,
    pub properties: Vec<Property>,
    pub pass: bool,
}

impl ExampleReport {
    fn new(example: u8, properties: Vec<Property>) -> Self {
        let pass = properties.iter().all(|p| p.pass);
        Self { example, properties, pass }
    }
}

/// The additive-sharing baseline, checked exhaustively.
pub fn example1(q: u64, n: usize, k: usize) -> Result<ExampleReport, CommandError> {
    let field = PrimeField::new(q).map_err(|e| CommandError::Usage(e.to_string()))?;
    let scheme = SharingScheme::new(field, k, n).map_err(|e| CommandError::Usage(e.to_string()))?;
    let private = brute_privacy(&scheme, &CollusionPattern::singletons(k))?;
    let decodes = brute_errorfree(&scheme)?;
    Ok(ExampleReport::new(
        1,
        vec![
            Property { name: "exhaustive_privacy", pass: private, detail: format!("singletons, q={q}, N={n}, K={k}") },
            Property { name: "exhaustive_decoding", pass: decodes, detail: "all records, shares and indices".into() },
        ],
    ))
}

/// The fixed GF(2) table scheme.
pub fn example2() -> Result<ExampleReport, CommandError> {
    let mut cases = 0;
    let mut passed = 0;
    for set in 0..16u128 {
        let records = bits_of(set);
        for m in 1..=2 {
            for triple in Example2Scheme::triples(m) {
                let answers = std::array::from_fn(|k| Example2Scheme::respond(&records, k, triple[k]));
                cases += 1;
                let want = (records[2 * (m - 1)], records[2 * (m - 1) + 1]);
                if Example2Scheme::decode(m, *triple, answers) == Some(want) {
                    passed += 1;
                }
            }
        }
    }
    let private = brute_privacy(&Example2Scheme, &CollusionPattern::singletons(3))?;
    let (sc, rc) = Example2Scheme::costs();
    Ok(ExampleReport::new(
        2,
        vec![
            Property { name: "decode_cases", pass: passed == cases, detail: format!("{passed}/{cases}") },
            Property { name: "exact_privacy", pass: private, detail: "identical query distributions per node".into() },
            Property {
                name: "costs",
                pass: (sc, rc) == (Rational::new(1, 2), Rational::new(1, 2)),
                detail: format!("sc={sc}, rc={rc}"),
            },
        ],
    ))
}

// ---------------------------------------------------------------- tradeoff

pub fn cmd_tradeoff(sc: Rational, k: usize, rc: Option<Rational>) -> CostJson {
    match rc {
        Some(rc) => (&CostReport::from_costs(sc, rc, k)).into(),
        None => CostJson {
            sc: ratio(sc),
            rc: None,
            bound: pir_core::tradeoff_bound(sc, k).to_string(),
            tight: None,
            respects_bound: None,
        },
    }
}
