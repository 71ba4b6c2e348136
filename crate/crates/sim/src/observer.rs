//! An eavesdropper on the query frames of a colluding set `α`, and the
//! empirical privacy experiment built on it.
//!
//! Each observed bundle is reduced to a digest before binning. The digest
//! is the pivot profile of the row-reduced stack of observed query
//! vectors. Raw query values are near-uniform even when the span of the
//! queries leaks `M`, so binning raw values would hide exactly the leaks
//! we look for.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};

use rand::Rng;

use pir_core::storage::encode_record;
use pir_core::{FieldMatrix, PrimeField, QueryBundle, RecordMatrix, Scheme};

use crate::session::{Client, SessionOptions};
use crate::wire::{FrameKind, WireMessage};
use crate::SessionError;

/// What the observer saw in one session. `m_hidden` is always true: the
/// observer is never handed `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedRun {
    pub m_hidden: bool,
    pub bundles: Vec<QueryBundle>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObserverLog {
    pub alpha: Vec<usize>,
    pub runs: Vec<ObservedRun>,
}

pub struct Observer {
    rx: Receiver<Vec<u8>>,
    log: ObserverLog,
}

impl Observer {
    /// The returned sender is the tap to hand to [`Client::attach_observer`].
    pub fn new(alpha: &[usize]) -> (Self, Sender<Vec<u8>>) {
        let (tx, rx) = mpsc::channel();
        let mut alpha = alpha.to_vec();
        alpha.sort_unstable();
        alpha.dedup();
        (Self { rx, log: ObserverLog { alpha, runs: Vec::new() } }, tx)
    }

    /// Consumes the `|α|` frames of one session.
    pub fn collect_run(&mut self) -> Result<&ObservedRun, SessionError> {
        let mut bundles = Vec::with_capacity(self.log.alpha.len());
        for _ in 0..self.log.alpha.len() {
            let bytes = self.rx.try_recv().map_err(|e| match e {
                TryRecvError::Empty => SessionError::Observer("fewer frames than colluding nodes".into()),
                TryRecvError::Disconnected => SessionError::Observer("tap closed".into()),
            })?;
            let node = u16::from_be_bytes([bytes[4], bytes[5]]) as usize;
            let msg = WireMessage::decode(&bytes).map_err(|source| SessionError::Malformed { node, source })?;
            if msg.kind != FrameKind::Query || !self.log.alpha.contains(&node) {
                return Err(SessionError::Observer(format!("unexpected {:?} frame for node {node}", msg.kind)));
            }
            bundles.push(QueryBundle { node, vectors: msg.vectors });
        }
        bundles.sort_by_key(|b| b.node);
        self.log.runs.push(ObservedRun { m_hidden: true, bundles });
        Ok(self.log.runs.last().expect("just pushed"))
    }

    pub fn log(&self) -> &ObserverLog {
        &self.log
    }
}

/// Digest of the row space of the observed query vectors.
pub fn view_digest(bundles: &[QueryBundle], field: PrimeField) -> u64 {
    let rows: Vec<Vec<u32>> = bundles.iter().flat_map(|b| b.vectors.iter().cloned()).collect();
    let mut h = DefaultHasher::new();
    if let Some(width) = rows.first().map(Vec::len) {
        let data = rows.into_iter().flatten().collect::<Vec<_>>();
        let m =
            FieldMatrix::from_vec(field, data.len() / width.max(1), width, data).expect("observed residues reduced");
        m.rref().1.hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationReport {
    pub runs: usize,
    pub alpha: Vec<usize>,
    /// Sessions per requested record, index `m-1`.
    pub per_m: Vec<usize>,
    /// Distinct digests seen.
    pub bins: usize,
    /// Largest pairwise total-variation distance between the
    /// `M`-conditioned digest distributions, `None` when undefined.
    pub distance: Option<f64>,
    /// 3σ sampling band for that pair under identical distributions.
    pub band: Option<f64>,
}

impl ObservationReport {
    pub fn within_band(&self) -> Option<bool> {
        Some(self.distance? <= self.band?)
    }
}

/// Total-variation distance between two empirical histograms, and the
/// mean plus three standard deviations of that distance when both samples
/// come from the pooled distribution (normal approximation per bin).
pub fn tv_with_band(a: &HashMap<u64, usize>, na: usize, b: &HashMap<u64, usize>, nb: usize) -> (f64, f64) {
    let keys: BTreeMap<u64, ()> = a.keys().chain(b.keys()).map(|&k| (k, ())).collect();
    let (na_f, nb_f) = (na as f64, nb as f64);
    let mut tv = 0.0;
    let mut mean = 0.0;
    let mut var = 0.0;
    for k in keys.keys() {
        let ca = *a.get(k).unwrap_or(&0) as f64;
        let cb = *b.get(k).unwrap_or(&0) as f64;
        tv += (ca / na_f - cb / nb_f).abs();
        let p = (ca + cb) / (na_f + nb_f);
        let s2 = p * (1.0 - p) * (1.0 / na_f + 1.0 / nb_f);
        mean += s2.sqrt() * (2.0 / std::f64::consts::PI).sqrt();
        var += s2 * (1.0 - 2.0 / std::f64::consts::PI);
    }
    (tv / 2.0, mean / 2.0 + 3.0 * var.sqrt() / 2.0)
}

/// Runs `runs` sessions with `M` uniform over the records and an observer
/// tapped into the nodes of `alpha` (0-based).
pub fn observe<R: Rng + ?Sized>(
    runs: usize,
    scheme: &Scheme,
    alpha: &[usize],
    opts: &SessionOptions,
    rng: &mut R,
) -> Result<ObservationReport, SessionError> {
    let params = &scheme.params;
    if alpha.is_empty() || alpha.iter().any(|&a| a >= params.k) {
        return Err(SessionError::Observer(format!("pattern {alpha:?} is not a set of nodes below {}", params.k)));
    }
    let (mut observer, tap) = Observer::new(alpha);
    let alpha = observer.log.alpha.clone();
    let mut per_m = vec![0usize; params.n];
    if runs == 0 {
        return Ok(ObservationReport { runs, alpha, per_m, bins: 0, distance: None, band: None });
    }

    let records = random_records(scheme, rng)?;
    let mut client = Client::connect(scheme, &records, opts)?;
    client.attach_observer(&alpha, tap);
    let mut hist: Vec<HashMap<u64, usize>> = vec![HashMap::new(); params.n];
    let mut bins = HashMap::new();
    for _ in 0..runs {
        let m = rng.random_range(1..=params.n);
        client.retrieve(m, rng)?;
        let digest = view_digest(&observer.collect_run()?.bundles, params.field);
        // The harness, not the observer, joins the view with M.
        per_m[m - 1] += 1;
        *hist[m - 1].entry(digest).or_insert(0) += 1;
        *bins.entry(digest).or_insert(0usize) += 1;
    }

    let mut worst: Option<(f64, f64)> = None;
    for i in 0..params.n {
        for j in i + 1..params.n {
            if per_m[i] == 0 || per_m[j] == 0 {
                continue;
            }
            let (tv, band) = tv_with_band(&hist[i], per_m[i], &hist[j], per_m[j]);
            if worst.is_none_or(|(wt, wb)| tv - band > wt - wb) {
                worst = Some((tv, band));
            }
        }
    }
    Ok(ObservationReport {
        runs,
        alpha,
        per_m,
        bins: bins.len(),
        distance: worst.map(|w| w.0),
        band: worst.map(|w| w.1),
    })
}

/// `N` records with uniformly random information symbols.
pub fn random_records<R: Rng + ?Sized>(scheme: &Scheme, rng: &mut R) -> Result<Vec<RecordMatrix>, SessionError> {
    let params = &scheme.params;
    (0..params.n)
        .map(|_| {
            let info: Vec<u32> = (0..params.info_len()).map(|_| params.field.random(rng)).collect();
            Ok(encode_record(&info, params.l, &scheme.parity)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_for_identical_histograms() {
        let a = HashMap::from([(1, 50), (2, 50)]);
        let (tv, band) = tv_with_band(&a, 100, &a, 100);
        assert_eq!(tv, 0.0);
        // Two bins at p=1/2, n=100 each: σ = 0.0707 per bin.
        let s = (0.25f64 * 0.02).sqrt();
        let expected = s * (2.0 / std::f64::consts::PI).sqrt()
            + 3.0 * (2.0 * s * s * (1.0 - 2.0 / std::f64::consts::PI)).sqrt() / 2.0;
        assert!((band - expected).abs() < 1e-12);
    }

    #[test]
    fn disjoint_histograms_are_far() {
        let a = HashMap::from([(1, 10)]);
        let b = HashMap::from([(2, 10)]);
        let (tv, band) = tv_with_band(&a, 10, &b, 10);
        assert_eq!(tv, 1.0);
        assert!(band < 1.0);
    }

    #[test]
    fn digest_sees_span_not_values() {
        let f = PrimeField::new(5).unwrap();
        let a = [QueryBundle { node: 0, vectors: vec![vec![1, 2, 0], vec![0, 0, 3]] }];
        let b = [QueryBundle { node: 0, vectors: vec![vec![3, 1, 0], vec![0, 0, 1]] }];
        let c = [QueryBundle { node: 0, vectors: vec![vec![0, 1, 0], vec![0, 0, 1]] }];
        assert_eq!(view_digest(&a, f), view_digest(&b, f));
        assert_ne!(view_digest(&a, f), view_digest(&c, f));
    }
}
