//! Event intrusion study.
//!
//! Events from a second ("intruder") document are inserted into an origin
//! document, together with the entities that share their sentences. A model
//! that captures document-level centrality should rank the intruders below the
//! origin's own events. AUC treats every origin event as positive; SA-AUC keeps
//! only the salient origin events as positives.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::eval::auc;
use crate::models::frequency_scores;
use crate::par;
use crate::rng::{derive_seed, seeded};

pub const MIN_ORIGIN_SALIENT: usize = 5;
pub const INTRUDER_PREFIX: &str = "intruder:";

#[derive(Debug, Error, PartialEq)]
pub enum IntrusionError {
    #[error("origin document {doc_id} has {salient} salient events, need at least {MIN_ORIGIN_SALIENT}")]
    OriginTooSmall { doc_id: String, salient: usize },
    #[error("intruder document {doc_id} has {available} eligible events, need {needed}")]
    InsufficientEvents {
        doc_id: String,
        needed: usize,
        available: usize,
    },
    #[error("only {eligible} documents qualify for the study, need at least {needed}")]
    NotEnoughDocuments { eligible: usize, needed: usize },
    #[error("invalid intrusion config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntruderKind {
    SalientOnly,
    NonsalientOnly,
}

impl IntruderKind {
    fn admits(self, salient: Option<bool>) -> bool {
        match self {
            IntruderKind::SalientOnly => salient == Some(true),
            IntruderKind::NonsalientOnly => salient == Some(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrusionConfig {
    pub num_pairs: usize,
    pub intruder_kind: IntruderKind,
    pub seed: u64,
    /// Share of the intruder's eligible events inserted at each step, ascending.
    pub fractions: Vec<f64>,
}

impl Default for IntrusionConfig {
    fn default() -> Self {
        IntrusionConfig {
            num_pairs: 500,
            intruder_kind: IntruderKind::NonsalientOnly,
            seed: 0,
            fractions: (1..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl IntrusionConfig {
    pub fn validate(&self) -> Result<(), IntrusionError> {
        if self.num_pairs == 0 {
            return Err(IntrusionError::Config("num_pairs must be positive".into()));
        }
        if self.fractions.is_empty() || self.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(IntrusionError::Config("fractions must lie in (0, 1]".into()));
        }
        if self.fractions.windows(2).any(|w| w[0] > w[1]) {
            return Err(IntrusionError::Config("fractions must be ascending".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntrusionInstance {
    pub origin_doc_id: String,
    pub intruder_doc_id: String,
    pub mixed: Document,
    /// True for events that came from the origin.
    pub origin_flags: Vec<bool>,
    /// True for salient origin events.
    pub salient_origin_flags: Vec<bool>,
}

impl IntrusionInstance {
    /// AUC with origin events positive and intruders negative.
    pub fn auc(&self, scores: &[f64]) -> Option<f64> {
        auc(scores, &self.origin_flags)
    }

    /// AUC over salient origin events against intruders only.
    pub fn sa_auc(&self, scores: &[f64]) -> Option<f64> {
        let keep: Vec<usize> = (0..self.origin_flags.len())
            .filter(|&i| !self.origin_flags[i] || self.salient_origin_flags[i])
            .collect();
        let s: Vec<f64> = keep.iter().map(|&i| scores[i]).collect();
        let l: Vec<bool> = keep.iter().map(|&i| self.origin_flags[i]).collect();
        auc(&s, &l)
    }
}

/// Intruder events of the requested kind, in the seeded insertion order.
pub fn intruder_order(intruder: &Document, kind: IntruderKind, order_seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..intruder.events.len())
        .filter(|&i| kind.admits(intruder.events[i].salient))
        .collect();
    idx.shuffle(&mut seeded(order_seed));
    idx
}

/// Inserts the first `n_intruders` intruder events (in seeded order) into the
/// origin, with the intruder's entities from the same sentences. Intruder
/// sentence indices are shifted past the origin's and intruder ids are
/// prefixed so the mixed document stays valid.
pub fn build_instance(
    origin: &Document,
    intruder: &Document,
    kind: IntruderKind,
    n_intruders: usize,
    order_seed: u64,
) -> Result<IntrusionInstance, IntrusionError> {
    let salient = origin.num_salient();
    if salient < MIN_ORIGIN_SALIENT {
        return Err(IntrusionError::OriginTooSmall {
            doc_id: origin.doc_id.clone(),
            salient,
        });
    }
    let order = intruder_order(intruder, kind, order_seed);
    if order.len() < n_intruders {
        return Err(IntrusionError::InsufficientEvents {
            doc_id: intruder.doc_id.clone(),
            needed: n_intruders,
            available: order.len(),
        });
    }
    let mut mixed = origin.clone();
    let n_origin = origin.events.len();
    if n_intruders > 0 {
        let offset = origin.num_sentences;
        mixed.num_sentences += intruder.num_sentences;
        // Appended in the intruder's discourse order so sentence indices stay monotone.
        let mut picked = order[..n_intruders].to_vec();
        picked.sort_unstable();
        let mut sentences: Vec<usize> = picked.iter().map(|&i| intruder.events[i].sentence_index).collect();
        sentences.sort_unstable();
        sentences.dedup();
        for &i in &picked {
            let mut e = intruder.events[i].clone();
            e.id = format!("{INTRUDER_PREFIX}{}", e.id);
            e.sentence_index += offset;
            mixed.events.push(e);
        }
        for en in &intruder.entities {
            if sentences.binary_search(&en.sentence_index).is_ok() {
                let mut en = en.clone();
                en.id = format!("{INTRUDER_PREFIX}{}", en.id);
                en.sentence_index += offset;
                mixed.entities.push(en);
            }
        }
    }
    let total = mixed.events.len();
    let origin_flags: Vec<bool> = (0..total).map(|i| i < n_origin).collect();
    let salient_origin_flags = (0..total)
        .map(|i| i < n_origin && origin.events[i].salient == Some(true))
        .collect();
    Ok(IntrusionInstance {
        origin_doc_id: origin.doc_id.clone(),
        intruder_doc_id: intruder.doc_id.clone(),
        mixed,
        origin_flags,
        salient_origin_flags,
    })
}

/// Number of intruders inserted for `fraction` of `available` eligible events.
pub fn intruder_count(fraction: f64, available: usize) -> usize {
    ((fraction * available as f64).ceil() as usize).clamp(1, available.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub auc: f64,
    pub sa_auc: f64,
    pub frequency_sa_auc: f64,
    pub n_pairs: usize,
}

pub fn curves_to_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("fraction,auc,sa_auc,frequency_sa_auc,n_pairs\n");
    for p in curve {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{}",
            p.fraction, p.auc, p.sa_auc, p.frequency_sa_auc, p.n_pairs
        );
    }
    out
}

/// Documents usable as origins, and those usable as intruders of `kind`.
/// Both come from the pool of documents with enough salient events.
fn eligible(corpus: &Corpus, kind: IntruderKind) -> (Vec<usize>, Vec<usize>) {
    let origins: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.documents[i].num_salient() >= MIN_ORIGIN_SALIENT)
        .collect();
    let intruders = origins
        .iter()
        .copied()
        .filter(|&i| corpus.documents[i].events.iter().any(|e| kind.admits(e.salient)))
        .collect();
    (origins, intruders)
}

/// Seeded (origin, intruder) document index pairs with distinct ids.
pub fn sample_pairs(corpus: &Corpus, cfg: &IntrusionConfig) -> Result<Vec<(usize, usize)>, IntrusionError> {
    let (origins, intruders) = eligible(corpus, cfg.intruder_kind);
    let usable = origins.len().min(intruders.len());
    if origins.is_empty() || intruders.is_empty() || origins.len().max(intruders.len()) < 2 {
        return Err(IntrusionError::NotEnoughDocuments {
            eligible: usable,
            needed: 2,
        });
    }
    let mut pairs = Vec::with_capacity(cfg.num_pairs);
    for p in 0..cfg.num_pairs {
        let mut rng = seeded(derive_seed(cfg.seed, &[p as u64]));
        let mut found = None;
        for _ in 0..64 {
            let o = origins[rng.gen_range(0..origins.len())];
            let i = intruders[rng.gen_range(0..intruders.len())];
            if corpus.documents[o].doc_id != corpus.documents[i].doc_id {
                found = Some((o, i));
                break;
            }
        }
        match found {
            Some(pair) => pairs.push(pair),
            None => {
                return Err(IntrusionError::NotEnoughDocuments {
                    eligible: usable,
                    needed: 2,
                })
            }
        }
    }
    Ok(pairs)
}

/// Runs the study with `scorer` applied to every mixed document. The scorer
/// is responsible for any feature zeroing; the Frequency comparison curve
/// ranks events by their recounted lemma frequency.
pub fn run_study<F>(corpus: &Corpus, scorer: F, cfg: &IntrusionConfig) -> Result<Vec<CurvePoint>, IntrusionError>
where
    F: Fn(&Document) -> Vec<f64> + Sync + Send,
{
    cfg.validate()?;
    let pairs = sample_pairs(corpus, cfg)?;
    let per_pair: Vec<Result<Vec<(f64, f64, f64)>, IntrusionError>> = par::map_range(pairs.len(), |p| {
        let (o, i) = pairs[p];
        let (origin, intruder) = (&corpus.documents[o], &corpus.documents[i]);
        let order_seed = derive_seed(cfg.seed, &[p as u64, 1]);
        let available = intruder_order(intruder, cfg.intruder_kind, order_seed).len();
        cfg.fractions
            .iter()
            .map(|&f| {
                let inst = build_instance(origin, intruder, cfg.intruder_kind, intruder_count(f, available), order_seed)?;
                let scores = scorer(&inst.mixed);
                let freq = frequency_scores(&inst.mixed);
                Ok((
                    inst.auc(&scores).unwrap_or(0.5),
                    inst.sa_auc(&scores).unwrap_or(0.5),
                    inst.sa_auc(&freq).unwrap_or(0.5),
                ))
            })
            .collect()
    });
    let per_pair: Vec<Vec<(f64, f64, f64)>> = per_pair.into_iter().collect::<Result<_, _>>()?;
    let n = per_pair.len() as f64;
    Ok(cfg
        .fractions
        .iter()
        .enumerate()
        .map(|(k, &fraction)| {
            let (mut a, mut s, mut fs) = (0.0, 0.0, 0.0);
            for row in &per_pair {
                a += row[k].0;
                s += row[k].1;
                fs += row[k].2;
            }
            CurvePoint {
                fraction,
                auc: a / n,
                sa_auc: s / n,
                frequency_sa_auc: fs / n,
                n_pairs: per_pair.len(),
            }
        })
        .collect())
}
