//! The five hand-built event features and their standardization.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::embeddings::{cosine_unchecked, EmbeddingError, EmbeddingTable};

pub const NUM_FEATURES: usize = 5;
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub frequency: f64,
    pub sentence_location: f64,
    pub event_voting: f64,
    pub entity_voting: f64,
    pub local_entity_voting: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.frequency,
            self.sentence_location,
            self.event_voting,
            self.entity_voting,
            self.local_entity_voting,
        ]
    }

    pub fn from_array(a: [f64; NUM_FEATURES]) -> Self {
        FeatureVector {
            frequency: a[0],
            sentence_location: a[1],
            event_voting: a[2],
            entity_voting: a[3],
            local_entity_voting: a[4],
        }
    }
}

/// Frozen embedding tables the voting features are computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub events: EmbeddingTable,
    pub entities: EmbeddingTable,
    /// Divide the sentence index by the document's sentence count.
    #[serde(default)]
    pub normalize_location: bool,
}

impl FeatureExtractor {
    pub fn new(events: EmbeddingTable, entities: EmbeddingTable) -> Result<Self, EmbeddingError> {
        if events.dim != entities.dim {
            return Err(EmbeddingError::LengthMismatch {
                left: events.dim,
                right: entities.dim,
            });
        }
        Ok(FeatureExtractor {
            events,
            entities,
            normalize_location: false,
        })
    }

    /// Features for every event of `doc`, in event order.
    pub fn document_features(&self, doc: &Document) -> Vec<FeatureVector> {
        let ev_rows: Vec<&[f64]> = doc
            .events
            .iter()
            .map(|e| self.events.lookup(&e.head_lemma))
            .collect();
        let en_rows: Vec<&[f64]> = doc
            .entities
            .iter()
            .map(|e| self.entities.lookup(&e.entity_key))
            .collect();
        (0..doc.events.len())
            .map(|i| {
                let ev = &doc.events[i];
                let mut location = ev.sentence_index as f64;
                if self.normalize_location {
                    location /= doc.num_sentences.max(1) as f64;
                }
                FeatureVector {
                    frequency: frequency_feature(doc, i),
                    sentence_location: location,
                    event_voting: mean_excluding(&ev_rows, i),
                    entity_voting: mean_cos(ev_rows[i], en_rows.iter().copied()),
                    local_entity_voting: mean_cos(
                        ev_rows[i],
                        doc.entities
                            .iter()
                            .zip(&en_rows)
                            .filter(|(en, _)| en.sentence_index == ev.sentence_index)
                            .map(|(_, r)| *r),
                    ),
                }
            })
            .collect()
    }

    pub fn extract_features(&self, doc: &Document, ev_index: usize) -> FeatureVector {
        self.document_features(doc)[ev_index]
    }
}

fn mean_cos<'a>(target: &[f64], others: impl Iterator<Item = &'a [f64]>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for o in others {
        sum += cosine_unchecked(target, o);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn mean_excluding(rows: &[&[f64]], i: usize) -> f64 {
    mean_cos(
        rows[i],
        rows.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| *r),
    )
}

/// Number of events in `doc` sharing the head lemma of event `ev_index`.
pub fn frequency_feature(doc: &Document, ev_index: usize) -> f64 {
    let lemma = &doc.events[ev_index].head_lemma;
    doc.events.iter().filter(|e| &e.head_lemma == lemma).count() as f64
}

pub fn location_feature(doc: &Document, ev_index: usize) -> f64 {
    doc.events[ev_index].sentence_index as f64
}

/// Mean cosine to the other events of the document; 0 for a lone event.
pub fn event_voting(doc: &Document, ev_index: usize, events: &EmbeddingTable) -> f64 {
    let rows: Vec<&[f64]> = doc
        .events
        .iter()
        .map(|e| events.lookup(&e.head_lemma))
        .collect();
    mean_excluding(&rows, ev_index)
}

pub fn entity_voting(
    doc: &Document,
    ev_index: usize,
    events: &EmbeddingTable,
    entities: &EmbeddingTable,
) -> f64 {
    let target = events.lookup(&doc.events[ev_index].head_lemma);
    mean_cos(target, doc.entities.iter().map(|e| entities.lookup(&e.entity_key)))
}

pub fn local_entity_voting(
    doc: &Document,
    ev_index: usize,
    events: &EmbeddingTable,
    entities: &EmbeddingTable,
) -> f64 {
    let ev = &doc.events[ev_index];
    let target = events.lookup(&ev.head_lemma);
    mean_cos(
        target,
        doc.entities
            .iter()
            .filter(|e| e.sentence_index == ev.sentence_index)
            .map(|e| entities.lookup(&e.entity_key)),
    )
}

/// Per-dimension z-scoring fitted on training events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub means: [f64; NUM_FEATURES],
    pub stds: [f64; NUM_FEATURES],
}

impl Default for FeatureScaler {
    fn default() -> Self {
        Self::identity()
    }
}

impl FeatureScaler {
    pub fn identity() -> Self {
        FeatureScaler {
            means: [0.0; NUM_FEATURES],
            stds: [1.0; NUM_FEATURES],
        }
    }

    pub fn fit(rows: &[[f64; NUM_FEATURES]]) -> Self {
        if rows.is_empty() {
            return Self::identity();
        }
        let n = rows.len() as f64;
        let mut means = [0.0; NUM_FEATURES];
        for r in rows {
            for k in 0..NUM_FEATURES {
                means[k] += r[k];
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = [0.0; NUM_FEATURES];
        for r in rows {
            for k in 0..NUM_FEATURES {
                stds[k] += (r[k] - means[k]).powi(2);
            }
        }
        stds.iter_mut()
            .for_each(|s| *s = (*s / n).sqrt().max(STD_FLOOR));
        FeatureScaler { means, stds }
    }

    pub fn apply(&self, fv: &FeatureVector) -> FeatureVector {
        FeatureVector::from_array(self.apply_array(fv.to_array()))
    }

    pub fn apply_array(&self, a: [f64; NUM_FEATURES]) -> [f64; NUM_FEATURES] {
        let mut out = [0.0; NUM_FEATURES];
        for k in 0..NUM_FEATURES {
            out[k] = (a[k] - self.means[k]) / self.stds[k];
        }
        out
    }
}

/// Fits a scaler over every event of every document.
pub fn fit_scaler(corpus: &Corpus, extractor: &FeatureExtractor) -> FeatureScaler {
    let rows: Vec<[f64; NUM_FEATURES]> = crate::par::map(&corpus.documents, |d| {
        extractor
            .document_features(d)
            .iter()
            .map(FeatureVector::to_array)
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    FeatureScaler::fit(&rows)
}

pub fn apply_scaler(fv: &FeatureVector, scaler: &FeatureScaler) -> FeatureVector {
    scaler.apply(fv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EntityMention, EventMention};
    use crate::embeddings::Vocabulary;

    fn table(entries: &[(&str, [f64; 2])]) -> EmbeddingTable {
        let vocab = Vocabulary::from_tokens(entries.iter().map(|(t, _)| t.to_string()));
        let mut vectors = vec![0.0, 0.0];
        for (_, v) in entries {
            vectors.extend_from_slice(v);
        }
        EmbeddingTable {
            vocab,
            dim: 2,
            vectors,
            trainable: false,
        }
    }

    fn ev(id: &str, lemma: &str, s: usize) -> EventMention {
        EventMention {
            id: id.into(),
            head_lemma: lemma.into(),
            surface: lemma.into(),
            sentence_index: s,
            frame: None,
            salient: None,
        }
    }

    fn en(id: &str, key: &str, s: usize) -> EntityMention {
        EntityMention {
            id: id.into(),
            entity_key: key.into(),
            sentence_index: s,
        }
    }

    fn doc(events: Vec<EventMention>, entities: Vec<EntityMention>) -> Document {
        Document {
            doc_id: "d".into(),
            num_sentences: 10,
            events,
            entities,
            abstract_lemmas: None,
        }
    }

    #[test]
    fn frequency_counts_including_self() {
        let d = doc(
            vec![ev("1", "a", 0), ev("2", "b", 0), ev("3", "a", 1), ev("4", "a", 7)],
            vec![],
        );
        assert_eq!(frequency_feature(&d, 0), 3.0);
        assert_eq!(frequency_feature(&d, 1), 1.0);
        assert_eq!(location_feature(&d, 0), 0.0);
        assert_eq!(location_feature(&d, 3), 7.0);
    }

    #[test]
    fn voting_degenerate_and_identical() {
        let t = table(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0]), ("c", [1.0, 0.0])]);
        let single = doc(vec![ev("1", "a", 0)], vec![]);
        assert_eq!(event_voting(&single, 0, &t), 0.0);
        assert_eq!(entity_voting(&single, 0, &t, &t), 0.0);
        assert_eq!(local_entity_voting(&single, 0, &t, &t), 0.0);
        let same = doc(vec![ev("1", "a", 0), ev("2", "c", 0)], vec![]);
        assert!((event_voting(&same, 0, &t) - 1.0).abs() < 1e-15);
        // self excluded: orthogonal partner gives 0, not 0.5
        let orth = doc(vec![ev("1", "a", 0), ev("2", "b", 0)], vec![]);
        assert_eq!(event_voting(&orth, 0, &t), 0.0);
    }

    #[test]
    fn entity_voting_one_match_and_local_restriction() {
        let evt = table(&[("a", [1.0, 0.0])]);
        let ent = table(&[("X", [2.0, 0.0]), ("Y", [0.0, 3.0])]);
        let d = doc(vec![ev("1", "a", 0)], vec![en("n1", "X", 0)]);
        assert!((entity_voting(&d, 0, &evt, &ent) - 1.0).abs() < 1e-15);
        let d2 = doc(vec![ev("1", "a", 0)], vec![en("n1", "X", 0), en("n2", "Y", 1)]);
        assert!((entity_voting(&d2, 0, &evt, &ent) - 0.5).abs() < 1e-15);
        assert!((local_entity_voting(&d2, 0, &evt, &ent) - 1.0).abs() < 1e-15);
        let d3 = doc(vec![ev("1", "a", 2)], vec![en("n1", "X", 0)]);
        assert_eq!(local_entity_voting(&d3, 0, &evt, &ent), 0.0);
    }

    #[test]
    fn extractor_matches_single_feature_functions() {
        let t = table(&[("a", [1.0, 0.2]), ("b", [-0.3, 1.0])]);
        let e = table(&[("X", [0.5, 0.5]), ("Y", [1.0, -1.0])]);
        let x = FeatureExtractor::new(t.clone(), e.clone()).unwrap();
        let d = doc(
            vec![ev("1", "a", 0), ev("2", "b", 1), ev("3", "a", 1)],
            vec![en("n1", "X", 1), en("n2", "Y", 0)],
        );
        let fs = x.document_features(&d);
        for i in 0..3 {
            assert_eq!(fs[i].frequency, frequency_feature(&d, i));
            assert_eq!(fs[i].event_voting, event_voting(&d, i, &t));
            assert_eq!(fs[i].entity_voting, entity_voting(&d, i, &t, &e));
            assert_eq!(fs[i].local_entity_voting, local_entity_voting(&d, i, &t, &e));
        }
    }

    #[test]
    fn scaler_constant_column_and_identity() {
        let rows = vec![[1.0, 2.0, 0.0, 0.0, 0.0], [1.0, 4.0, 0.0, 0.0, 0.0]];
        let s = FeatureScaler::fit(&rows);
        assert_eq!(s.stds[0], STD_FLOOR);
        let out = s.apply_array(rows[0]);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], -1.0);
        let fv = FeatureVector::from_array([3.0, 1.0, 0.5, -0.2, 0.1]);
        assert_eq!(FeatureScaler::identity().apply(&fv), fv);
    }
}
