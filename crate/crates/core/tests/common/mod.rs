#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

use salience::embeddings::{EmbeddingTable, Vocabulary};
use salience::features::{FeatureExtractor, FeatureScaler};
use salience::kernels::default_bank;
use salience::models::{KceModel, KceVariant};
use salience::rng::Rng as ChaRng;
use salience::{Document, EntityMention, EventMention};

pub fn lemma(i: usize) -> String {
    format!("v{i}")
}

pub fn key(i: usize) -> String {
    format!("k{i}")
}

/// Random labeled document. Lemmas are drawn from `v0..v{lemmas}` and keys
/// from `k0..k{keys}`, so repeats happen. Both classes are present whenever
/// there are at least two events.
pub fn random_document(
    rng: &mut ChaRng,
    id: &str,
    events: usize,
    entities: usize,
    lemmas: usize,
    keys: usize,
) -> Document {
    let sentences = rng.gen_range(1..=4);
    let mut ev_sent: Vec<usize> = (0..events).map(|_| rng.gen_range(0..sentences)).collect();
    ev_sent.sort_unstable();
    let mut labels: Vec<bool> = (0..events).map(|_| rng.gen_bool(0.4)).collect();
    if events >= 2 {
        let p = rng.gen_range(0..events);
        let mut n = rng.gen_range(0..events - 1);
        if n >= p {
            n += 1;
        }
        labels[p] = true;
        labels[n] = false;
    }
    let mut en_sent: Vec<usize> = (0..entities).map(|_| rng.gen_range(0..sentences)).collect();
    en_sent.sort_unstable();
    Document {
        doc_id: id.to_string(),
        num_sentences: sentences,
        events: (0..events)
            .map(|i| {
                let l = lemma(rng.gen_range(0..lemmas));
                EventMention {
                    id: format!("e{i}"),
                    surface: l.clone(),
                    head_lemma: l,
                    sentence_index: ev_sent[i],
                    frame: None,
                    salient: Some(labels[i]),
                }
            })
            .collect(),
        entities: (0..entities)
            .map(|i| EntityMention {
                id: format!("n{i}"),
                entity_key: key(rng.gen_range(0..keys)),
                sentence_index: en_sent[i],
            })
            .collect(),
        abstract_lemmas: None,
    }
}

/// Table over `tokens` with standard normal entries.
pub fn gaussian_table(rng: &mut ChaRng, tokens: Vec<String>, dim: usize) -> EmbeddingTable {
    let vocab = Vocabulary::from_tokens(tokens);
    let vectors = (0..vocab.size() * dim).map(|_| rng.sample(StandardNormal)).collect();
    EmbeddingTable {
        vocab,
        dim,
        vectors,
        trainable: true,
    }
}

/// A full KCE model with O(1) weights and Gaussian embeddings, and a document
/// over its vocabulary.
pub fn random_kce_instance(rng: &mut ChaRng, dim: usize) -> (KceModel, Document) {
    let (lemmas, keys) = (10, 8);
    let events = rng.gen_range(3..=8);
    let entities = rng.gen_range(2..=6);
    let doc = random_document(rng, "doc", events, entities, lemmas, keys);
    let ev = gaussian_table(rng, (0..lemmas).map(lemma).collect(), dim);
    let en = gaussian_table(rng, (0..keys).map(key).collect(), dim);
    let (mut fev, mut fen) = (ev.clone(), en.clone());
    fev.trainable = false;
    fen.trainable = false;
    let features = FeatureExtractor::new(fev, fen).expect("matching dims");
    let rows: Vec<_> = features.document_features(&doc).iter().map(|f| f.to_array()).collect();
    let scaler = FeatureScaler::fit(&rows);
    let mut model = KceModel::new(KceVariant::Full, default_bank(), ev, en, features, scaler, rng.gen());
    for w in model
        .w_v
        .iter_mut()
        .chain(model.w_e.iter_mut())
        .chain(model.w_f.iter_mut())
        .chain(model.bias.iter_mut())
    {
        *w = rng.gen_range(-0.5..0.5);
    }
    (model, doc)
}
