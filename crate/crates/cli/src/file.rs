//! JSON scheme files and plain-text record files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use pir_core::storage::encode_record;
use pir_core::{
    CollusionPattern, ConstructError, FieldMatrix, ParamError, ParityCheck, RecordMatrix, RetrievalMatrix, Scheme,
    SystemParams,
};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid scheme JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{what} has {got} {unit}, expected {expected}")]
    Dimension { what: String, unit: &'static str, expected: usize, got: usize },
    #[error("{what}[{row}][{col}] = {value} is not a residue modulo {q}")]
    Residue { what: &'static str, row: usize, col: usize, value: u64, q: u32 },
    #[error("phi: {0}")]
    Phi(String),
    #[error(transparent)]
    Scheme(#[from] ConstructError),
    #[error("records line {line}: {message}")]
    Records { line: usize, message: String },
}

/// On-disk form of a scheme. `V` is stored row by row with column
/// `(r,k)` at position `k·R + r`; `phi` lists 1-based node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub q: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<u64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<u64>>,
    pub phi: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn widen(m: &FieldMatrix) -> Vec<Vec<u64>> {
    m.to_rows().into_iter().map(|row| row.into_iter().map(u64::from).collect()).collect()
}

fn narrow(
    what: &'static str,
    rows: &[Vec<u64>],
    shape: (usize, usize),
    params: &SystemParams,
) -> Result<FieldMatrix, FileError> {
    if rows.len() != shape.0 {
        return Err(FileError::Dimension { what: what.into(), unit: "rows", expected: shape.0, got: rows.len() });
    }
    let q = params.q();
    let mut data = Vec::with_capacity(shape.0 * shape.1);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(FileError::Dimension {
                what: format!("{what} row {}", i + 1),
                unit: "entries",
                expected: shape.1,
                got: row.len(),
            });
        }
        for (j, &value) in row.iter().enumerate() {
            if value >= u64::from(q) {
                return Err(FileError::Residue { what, row: i + 1, col: j + 1, value, q });
            }
            data.push(value as u32);
        }
    }
    Ok(FieldMatrix::from_vec(params.field, shape.0, shape.1, data).expect("residues checked"))
}

impl SchemeFile {
    pub fn from_scheme(scheme: &Scheme) -> Self {
        let p = &scheme.params;
        Self {
            q: u64::from(p.q()),
            n: p.n,
            k: p.k,
            s: p.s,
            l: p.l,
            t: p.t,
            r: p.r,
            p: widen(scheme.parity.matrix()),
            v: widen(scheme.v.matrix()),
            phi: scheme.phi.to_one_based(),
            seed: scheme.seed,
        }
    }

    pub fn params(&self) -> Result<SystemParams, FileError> {
        Ok(SystemParams::new(self.q, self.n, self.k, self.s, self.l, self.t, self.r)?)
    }

    pub fn to_scheme(&self) -> Result<Scheme, FileError> {
        let params = self.params()?;
        let p = narrow("P", &self.p, (params.k, params.s), &params)?;
        let v = narrow("V", &self.v, (params.v_rows(), params.v_cols()), &params)?;
        let parity = ParityCheck::new(p).map_err(ConstructError::from)?;
        let v = RetrievalMatrix::new(v, &params).map_err(ConstructError::from)?;
        if self.phi.is_empty() {
            return Err(FileError::Phi("empty collusion pattern".into()));
        }
        let mut subsets = Vec::with_capacity(self.phi.len());
        for subset in &self.phi {
            if let Some(&bad) = subset.iter().find(|&&i| i == 0 || i > params.k) {
                return Err(FileError::Phi(format!("node {bad} outside 1..={}", params.k)));
            }
            subsets.push(subset.iter().map(|i| i - 1).collect::<Vec<_>>());
        }
        let phi = CollusionPattern::new(params.k, subsets).map_err(|e| FileError::Phi(e.to_string()))?;
        Ok(Scheme::new(params, parity, v, phi, self.seed)?)
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Scheme, FileError> {
        Self::parse(&read(path)?)?.to_scheme()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme files always serialise")
    }
}

pub fn read(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io { path: path.to_owned(), source })
}

/// One record per non-blank line, each holding the `(K−S)·L` information
/// symbols. Symbols fill the information columns one column at a time.
pub fn parse_records(text: &str, scheme: &Scheme) -> Result<Vec<RecordMatrix>, FileError> {
    let params = &scheme.params;
    let want = params.info_len();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut info = Vec::with_capacity(want);
        for token in line.split_whitespace() {
            let value: u64 = token
                .parse()
                .map_err(|_| FileError::Records { line: line_no, message: format!("'{token}' is not an integer") })?;
            if value >= u64::from(params.q()) {
                return Err(FileError::Records {
                    line: line_no,
                    message: format!("{value} is not a residue modulo {}", params.q()),
                });
            }
            info.push(value as u32);
        }
        if info.len() != want {
            return Err(FileError::Records {
                line: line_no,
                message: format!("{} symbols, expected (K-S)·L = {want}", info.len()),
            });
        }
        let record = encode_record(&info, params.l, &scheme.parity)
            .map_err(|e| FileError::Records { line: line_no, message: e.to_string() })?;
        records.push(record);
    }
    if records.len() != params.n {
        return Err(FileError::Dimension {
            what: "records file".into(),
            unit: "records",
            expected: params.n,
            got: records.len(),
        });
    }
    Ok(records)
}

/// Inverse of [`parse_records`].
pub fn format_records(records: &[RecordMatrix], params: &SystemParams) -> String {
    let info_cols = params.k - params.s;
    records.iter().map(|r| r.info(info_cols).iter().map(u32::to_string).collect::<Vec<_>>().join(" ") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pir_core::{construct, ConstructOptions, VKind};

    fn sample() -> SchemeFile {
        let scheme =
            construct(&ConstructOptions { v: VKind::Cyclic, ..ConstructOptions::new(5, 3, 1) }).unwrap().scheme;
        SchemeFile::from_scheme(&scheme)
    }

    #[test]
    fn json_keys_and_layout() {
        let file = sample();
        let value: serde_json::Value = serde_json::from_str(&file.to_json()).unwrap();
        let keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["q", "N", "K", "S", "L", "T", "R", "P", "V", "phi"] {
            assert!(keys.contains(&k), "missing {k}");
        }
        assert!(!keys.contains(&"seed"));
        assert_eq!(value["P"], serde_json::json!([[1], [1], [1]]));
        assert_eq!(value["phi"], serde_json::json!([[1], [2], [3]]));
        assert_eq!(file.v.len(), 3);
        assert_eq!(file.v[0].len(), 6);
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut value: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        value["extra"] = 1.into();
        let err = SchemeFile::parse(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn rejects_bad_residues_and_shapes() {
        let mut f = sample();
        f.v[1][2] = 5;
        assert!(matches!(f.to_scheme(), Err(FileError::Residue { what: "V", row: 2, col: 3, value: 5, q: 5 })));

        let mut f = sample();
        f.p.pop();
        assert!(matches!(f.to_scheme(), Err(FileError::Dimension { .. })));

        let mut f = sample();
        f.v[0].push(0);
        assert!(matches!(f.to_scheme(), Err(FileError::Dimension { .. })));

        let mut f = sample();
        f.phi = vec![vec![0]];
        assert!(matches!(f.to_scheme(), Err(FileError::Phi(_))));

        let mut f = sample();
        f.q = 4;
        assert!(matches!(f.to_scheme(), Err(FileError::Params(_))));
    }

    #[test]
    fn records_round_trip() {
        let scheme = sample().to_scheme().unwrap();
        let records = parse_records("1 2\n\n# comment\n3 4\n", &scheme).unwrap();
        assert_eq!(records[0].info(2), vec![1, 2]);
        assert_eq!(format_records(&records, &scheme.params), "1 2\n3 4\n");
        assert!(matches!(parse_records("1 2\n", &scheme), Err(FileError::Dimension { .. })));
        assert!(matches!(parse_records("1 2 3\n1 1\n", &scheme), Err(FileError::Records { line: 1, .. })));
        assert!(matches!(parse_records("1 9\n1 1\n", &scheme), Err(FileError::Records { line: 1, .. })));
        assert!(matches!(parse_records("1 x\n1 1\n", &scheme), Err(FileError::Records { line: 1, .. })));
    }
}
