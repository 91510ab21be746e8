//! Candidate filtering and lemma-match salience labeling.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("document {doc_id}: abstract_lemmas missing, cannot label salience")]
    MissingAbstract { doc_id: String },
    #[error("filter config {path}: {message}")]
    Config { path: String, message: String },
}

const LIGHT_VERBS: &[&str] = &[
    "appear", "be", "become", "do", "have", "seem", "get", "give", "go", "keep", "make", "put",
    "set", "take",
];

const REPORTING_VERBS: &[&str] = &["argue", "claim", "say", "suggest", "tell"];

/// Which event mentions count as candidates.
///
/// An empty `event_frames` disables the frame filter; the lemma stop lists
/// always apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    #[serde(default)]
    pub event_frames: BTreeSet<String>,
    #[serde(default)]
    pub light_verbs: BTreeSet<String>,
    #[serde(default)]
    pub reporting_verbs: BTreeSet<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        default_filter_config()
    }
}

pub fn default_filter_config() -> FilterConfig {
    FilterConfig {
        event_frames: BTreeSet::new(),
        light_verbs: LIGHT_VERBS.iter().map(|s| s.to_string()).collect(),
        reporting_verbs: REPORTING_VERBS.iter().map(|s| s.to_string()).collect(),
    }
}

impl FilterConfig {
    /// Loads `{"event_frames": [...], "light_verbs": [...], "reporting_verbs": [...]}`.
    /// Entries are lowercased on load.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, AnnotateError> {
        let path = path.as_ref();
        let err = |message: String| AnnotateError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let cfg: FilterConfig = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(cfg.lowercased())
    }

    fn lowercased(self) -> Self {
        let lower = |s: BTreeSet<String>| s.into_iter().map(|x| x.to_lowercase()).collect();
        FilterConfig {
            event_frames: lower(self.event_frames),
            light_verbs: lower(self.light_verbs),
            reporting_verbs: lower(self.reporting_verbs),
        }
    }

    fn keeps(&self, lemma: &str, frame: Option<&str>) -> bool {
        if self.light_verbs.contains(lemma) || self.reporting_verbs.contains(lemma) {
            return false;
        }
        if self.event_frames.is_empty() {
            return true;
        }
        frame.is_some_and(|f| self.event_frames.contains(&f.to_lowercase()))
    }
}

/// Drops events that are light or reporting verbs, or (when a frame list is
/// configured) whose frame is not on it. Order and entities are untouched.
pub fn filter_candidates(doc: &Document, cfg: &FilterConfig) -> Document {
    let mut out = doc.clone();
    out.events
        .retain(|ev| cfg.keeps(&ev.head_lemma, ev.frame.as_deref()));
    out
}

/// Marks each event salient iff its head lemma occurs among the abstract lemmas.
pub fn label_salience(doc: &Document) -> Result<Document, AnnotateError> {
    let lemmas = doc
        .abstract_lemmas
        .as_ref()
        .ok_or_else(|| AnnotateError::MissingAbstract {
            doc_id: doc.doc_id.clone(),
        })?;
    let mut out = doc.clone();
    for ev in &mut out.events {
        ev.salient = Some(lemmas.contains(&ev.head_lemma));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub events: usize,
    pub salient_events: usize,
    pub mean_events_per_doc: f64,
    pub mean_salient_per_doc: f64,
    pub distinct_event_lemmas: usize,
    pub salience_rate: f64,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let documents = corpus.len();
    if documents == 0 {
        return CorpusStats::default();
    }
    let events: usize = corpus.documents.iter().map(|d| d.events.len()).sum();
    let salient_events: usize = corpus.documents.iter().map(Document::num_salient).sum();
    let distinct: HashSet<&str> = corpus
        .documents
        .iter()
        .flat_map(|d| d.events.iter().map(|e| e.head_lemma.as_str()))
        .collect();
    CorpusStats {
        documents,
        events,
        salient_events,
        mean_events_per_doc: events as f64 / documents as f64,
        mean_salient_per_doc: salient_events as f64 / documents as f64,
        distinct_event_lemmas: distinct.len(),
        salience_rate: if events == 0 {
            0.0
        } else {
            salient_events as f64 / events as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EventMention, Split};

    fn ev(id: &str, lemma: &str, frame: Option<&str>) -> EventMention {
        EventMention {
            id: id.into(),
            head_lemma: lemma.into(),
            surface: lemma.into(),
            sentence_index: 0,
            frame: frame.map(Into::into),
            salient: None,
        }
    }

    fn doc(events: Vec<EventMention>, abs: Option<&[&str]>) -> Document {
        Document {
            doc_id: "d".into(),
            num_sentences: 1,
            events,
            entities: vec![],
            abstract_lemmas: abs.map(|a| a.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn default_lists() {
        let cfg = default_filter_config();
        assert!(cfg.light_verbs.contains("take"));
        assert_eq!(cfg.light_verbs.len(), 14);
        assert!(cfg.reporting_verbs.contains("say"));
        assert_eq!(cfg.reporting_verbs.len(), 5);
        assert!(cfg.event_frames.is_empty());
    }

    #[test]
    fn say_is_removed_arson_kept_without_frame_list() {
        let d = doc(
            vec![ev("1", "say", None), ev("2", "burn", Some("Arson"))],
            None,
        );
        let out = filter_candidates(&d, &default_filter_config());
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].id, "2");
    }

    #[test]
    fn frame_list_restricts() {
        let mut cfg = default_filter_config();
        cfg.event_frames.insert("arson".into());
        let d = doc(
            vec![
                ev("1", "burn", Some("Arson")),
                ev("2", "walk", Some("Self_motion")),
                ev("3", "run", None),
            ],
            None,
        );
        let out = filter_candidates(&d, &cfg);
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].id, "1");
    }

    #[test]
    fn label_by_abstract_membership() {
        let d = doc(
            vec![ev("1", "trial", None), ev("2", "walk", None)],
            Some(&["attack", "trial"]),
        );
        let out = label_salience(&d).unwrap();
        assert_eq!(out.events[0].salient, Some(true));
        assert_eq!(out.events[1].salient, Some(false));
    }

    #[test]
    fn empty_abstract_labels_everything_false() {
        let d = doc(vec![ev("1", "trial", None)], Some(&[]));
        let out = label_salience(&d).unwrap();
        assert_eq!(out.events[0].salient, Some(false));
    }

    #[test]
    fn missing_abstract_is_error() {
        let d = doc(vec![ev("1", "trial", None)], None);
        let err = label_salience(&d).unwrap_err();
        assert!(err.to_string().contains("document d"));
    }

    #[test]
    fn stats_empty_and_small() {
        assert_eq!(corpus_stats(&Corpus::default()), CorpusStats::default());
        let mut d = doc(
            vec![ev("1", "a", None), ev("2", "b", None), ev("3", "a", None)],
            None,
        );
        d.events[0].salient = Some(true);
        d.events[1].salient = Some(false);
        d.events[2].salient = Some(false);
        let s = corpus_stats(&Corpus::new(vec![d], Split::Unsplit));
        assert_eq!(s.documents, 1);
        assert_eq!(s.distinct_event_lemmas, 2);
        assert!((s.salience_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.mean_events_per_doc, 3.0);
    }
}
