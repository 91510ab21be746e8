//! Shared construction of embedding tables, feature extractor and scaler.

use crate::corpus::Corpus;
use crate::embeddings::{build_vocab, init_embeddings, EmbeddingError, EmbeddingTable, VocabField, Vocabulary, WordVectors};
use crate::features::{fit_scaler, FeatureExtractor, FeatureScaler};
use crate::kernels::default_bank;
use crate::rng::derive_seed;

use super::{KceModel, KceVariant, LetorModel, PageRankModel};

/// Everything an untrained model is built from. The feature extractor holds
/// frozen copies of the initial tables; models that train embeddings get
/// their own copies.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInputs {
    pub event_table: EmbeddingTable,
    pub entity_table: EmbeddingTable,
    pub features: FeatureExtractor,
    pub scaler: FeatureScaler,
}

impl ModelInputs {
    pub fn new(
        train: &Corpus,
        event_vocab: &Vocabulary,
        entity_vocab: &Vocabulary,
        event_vectors: Option<&WordVectors>,
        entity_vectors: Option<&WordVectors>,
        dim: usize,
        seed: u64,
    ) -> Result<Self, EmbeddingError> {
        let event_table = init_embeddings(event_vocab, dim, derive_seed(seed, &[0]), event_vectors)?;
        let entity_table = init_embeddings(entity_vocab, dim, derive_seed(seed, &[1]), entity_vectors)?;
        let mut frozen_ev = event_table.clone();
        let mut frozen_en = entity_table.clone();
        frozen_ev.trainable = false;
        frozen_en.trainable = false;
        let features = FeatureExtractor::new(frozen_ev, frozen_en)?;
        let scaler = fit_scaler(train, &features);
        Ok(ModelInputs {
            event_table,
            entity_table,
            features,
            scaler,
        })
    }

    /// Builds both vocabularies from `train` with `min_count`.
    pub fn from_corpus(
        train: &Corpus,
        min_count: usize,
        event_vectors: Option<&WordVectors>,
        entity_vectors: Option<&WordVectors>,
        dim: usize,
        seed: u64,
    ) -> Result<Self, EmbeddingError> {
        let ev = build_vocab(train, VocabField::EventLemma, min_count);
        let en = build_vocab(train, VocabField::EntityKey, min_count);
        Self::new(train, &ev, &en, event_vectors, entity_vectors, dim, seed)
    }

    pub fn letor(&self) -> LetorModel {
        LetorModel::new(self.features.clone(), self.scaler.clone())
    }

    pub fn kce(&self, variant: KceVariant, seed: u64) -> KceModel {
        KceModel::new(
            variant,
            default_bank(),
            self.event_table.clone(),
            self.entity_table.clone(),
            self.features.clone(),
            self.scaler.clone(),
            seed,
        )
    }

    /// Temperature 1 and an even frequency/walk mix.
    pub fn pagerank(&self) -> PageRankModel {
        PageRankModel::new(self.event_table.clone(), 1.0, 0.5)
    }
}
