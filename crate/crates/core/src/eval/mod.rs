//! Ranking metrics, corpus aggregation and significance testing.
//!
//! Metrics are computed per document and macro-averaged. A document counts
//! toward P@k and R@k when it has a salient event, and toward AUC when it has
//! both salient and non-salient events.

mod metrics;
mod sigtest;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::par;
use crate::rng::derive_seed;

pub use metrics::{auc, precision_at_k, rank_order, recall_at_k, TieBreak};
pub use sigtest::{exact_permutation_p, ks_uniform_pvalue, permutation_test, SigTestError};

pub const DEFAULT_CUTOFFS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocMetrics {
    pub doc_id: String,
    pub num_events: usize,
    pub num_salient: usize,
    /// Empty when the document has no salient event.
    pub p_at: BTreeMap<usize, f64>,
    pub r_at: BTreeMap<usize, f64>,
    pub auc: Option<f64>,
}

impl DocMetrics {
    /// Looks up a metric by name: `auc`, `p@k` or `r@k`.
    pub fn metric(&self, name: &str) -> Option<f64> {
        if name == "auc" {
            return self.auc;
        }
        let (table, k) = if let Some(k) = name.strip_prefix("p@") {
            (&self.p_at, k)
        } else if let Some(k) = name.strip_prefix("r@") {
            (&self.r_at, k)
        } else {
            return None;
        };
        table.get(&k.parse().ok()?).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub p_at: BTreeMap<usize, f64>,
    pub r_at: BTreeMap<usize, f64>,
    /// `None` when no document has both classes.
    pub auc: Option<f64>,
    pub num_docs: usize,
    pub num_ranked_docs: usize,
    pub num_auc_docs: usize,
    pub tie_break: TieBreak,
    pub per_doc: Vec<DocMetrics>,
}

impl MetricsReport {
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let r = BufReader::new(File::open(path)?);
        Ok(serde_json::from_reader(r)?)
    }
}

/// Metrics for one scored document. `tie` decides the order of equal scores
/// for the cutoff metrics; AUC counts ties as one half.
pub fn document_metrics(doc: &Document, scores: &[f64], cutoffs: &[usize], tie: TieBreak) -> DocMetrics {
    let labels = doc.labels();
    let ids: Vec<&str> = doc.events.iter().map(|e| e.id.as_str()).collect();
    let order = rank_order(scores, &ids, tie);
    let ranked: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
    let num_salient = labels.iter().filter(|&&l| l).count();
    let (mut p_at, mut r_at) = (BTreeMap::new(), BTreeMap::new());
    if num_salient > 0 {
        for &k in cutoffs {
            p_at.insert(k, precision_at_k(&ranked, k));
            r_at.insert(k, recall_at_k(&ranked, k));
        }
    }
    DocMetrics {
        doc_id: doc.doc_id.clone(),
        num_events: labels.len(),
        num_salient,
        p_at,
        r_at,
        auc: auc(scores, &labels),
    }
}

/// Macro-averages precomputed per-document scores. With `TieBreak::Random`,
/// each document gets its own seed derived from the given one and its position.
pub fn evaluate(corpus: &Corpus, scores: &[Vec<f64>], cutoffs: &[usize], tie: TieBreak) -> MetricsReport {
    let per_doc: Vec<DocMetrics> = par::map_range(corpus.len(), |i| {
        let t = match tie {
            TieBreak::ById => TieBreak::ById,
            TieBreak::Random(seed) => TieBreak::Random(derive_seed(seed, &[i as u64])),
        };
        document_metrics(&corpus.documents[i], &scores[i], cutoffs, t)
    });
    aggregate(per_doc, cutoffs, tie)
}

/// Scores every document with `scorer` and evaluates.
pub fn evaluate_with<F>(corpus: &Corpus, scorer: F, cutoffs: &[usize], tie: TieBreak) -> MetricsReport
where
    F: Fn(&Document) -> Vec<f64> + Sync + Send,
{
    let scores = par::map(&corpus.documents, scorer);
    evaluate(corpus, &scores, cutoffs, tie)
}

fn aggregate(per_doc: Vec<DocMetrics>, cutoffs: &[usize], tie: TieBreak) -> MetricsReport {
    let ranked: Vec<&DocMetrics> = per_doc.iter().filter(|d| d.num_salient > 0).collect();
    let mean = |xs: &mut dyn Iterator<Item = f64>| -> Option<f64> {
        let (mut s, mut n) = (0.0, 0usize);
        for x in xs {
            s += x;
            n += 1;
        }
        (n > 0).then(|| s / n as f64)
    };
    let (mut p_at, mut r_at) = (BTreeMap::new(), BTreeMap::new());
    for &k in cutoffs {
        if let Some(p) = mean(&mut ranked.iter().map(|d| d.p_at[&k])) {
            p_at.insert(k, p);
        }
        if let Some(r) = mean(&mut ranked.iter().map(|d| d.r_at[&k])) {
            r_at.insert(k, r);
        }
    }
    let num_auc_docs = per_doc.iter().filter(|d| d.auc.is_some()).count();
    MetricsReport {
        p_at,
        r_at,
        auc: mean(&mut per_doc.iter().filter_map(|d| d.auc)),
        num_docs: per_doc.len(),
        num_ranked_docs: ranked.len(),
        num_auc_docs,
        tie_break: tie,
        per_doc,
    }
}

/// Per-document values of `metric` from two reports, paired by document id;
/// documents missing the metric in either report are dropped.
pub fn paired_metric(a: &MetricsReport, b: &MetricsReport, metric: &str) -> (Vec<f64>, Vec<f64>) {
    let lookup: BTreeMap<&str, &DocMetrics> = b.per_doc.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    a.per_doc
        .iter()
        .filter_map(|da| {
            let db = lookup.get(da.doc_id.as_str())?;
            Some((da.metric(metric)?, db.metric(metric)?))
        })
        .unzip()
}
