mod common;

use proptest::prelude::*;

use salience::features::{fit_scaler, FeatureExtractor, FeatureScaler, NUM_FEATURES, STD_FLOOR};
use salience::rng::seeded;
use salience::{Corpus, Document, Split};

fn naive_cos(u: &[f64], v: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        d / (nu * nv)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn fixture(seed: u64) -> (FeatureExtractor, Document) {
    let mut rng = seeded(seed);
    let n = 1 + (seed % 9) as usize;
    let doc = common::random_document(&mut rng, "d", n, (seed % 5) as usize, 6, 4);
    // Tables leave out one lemma and one key so unknown tokens occur.
    let ev = common::gaussian_table(&mut rng, (0..5).map(common::lemma).collect(), 7);
    let en = common::gaussian_table(&mut rng, (0..3).map(common::key).collect(), 7);
    (FeatureExtractor::new(ev, en).unwrap(), doc)
}

proptest! {
    #[test]
    fn features_match_naive_definitions(seed in any::<u64>()) {
        let (fx, doc) = fixture(seed);
        let feats = fx.document_features(&doc);
        prop_assert_eq!(feats.len(), doc.events.len());
        let ev_vec = |i: usize| fx.events.lookup(&doc.events[i].head_lemma).to_vec();
        for (i, f) in feats.iter().enumerate() {
            let e = &doc.events[i];
            let freq = doc.events.iter().filter(|o| o.head_lemma == e.head_lemma).count() as f64;
            prop_assert_eq!(f.frequency, freq);
            prop_assert_eq!(f.sentence_location, e.sentence_index as f64);
            let others: Vec<f64> = (0..doc.events.len()).filter(|&j| j != i).map(|j| naive_cos(&ev_vec(i), &ev_vec(j))).collect();
            prop_assert!((f.event_voting - mean(&others)).abs() < 1e-12);
            let all: Vec<f64> = doc.entities.iter().map(|n| naive_cos(&ev_vec(i), fx.entities.lookup(&n.entity_key))).collect();
            prop_assert!((f.entity_voting - mean(&all)).abs() < 1e-12);
            let local: Vec<f64> = doc
                .entities
                .iter()
                .filter(|n| n.sentence_index == e.sentence_index)
                .map(|n| naive_cos(&ev_vec(i), fx.entities.lookup(&n.entity_key)))
                .collect();
            prop_assert!((f.local_entity_voting - mean(&local)).abs() < 1e-12);
            prop_assert_eq!(fx.extract_features(&doc, i), *f);
        }
    }

    #[test]
    fn scaler_standardizes_training_rows(seeds in proptest::collection::vec(any::<u64>(), 1..6)) {
        let (fx, _) = fixture(0);
        let docs: Vec<Document> = seeds
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let mut d = fixture(s).1;
                d.doc_id = format!("d{k}");
                d
            })
            .collect();
        let corpus = Corpus::new(docs, Split::Train);
        let scaler = fit_scaler(&corpus, &fx);
        let rows: Vec<[f64; NUM_FEATURES]> = corpus
            .documents
            .iter()
            .flat_map(|d| fx.document_features(d))
            .map(|f| scaler.apply_array(f.to_array()))
            .collect();
        let n = rows.len() as f64;
        for k in 0..NUM_FEATURES {
            let m = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let v = rows.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / n;
            prop_assert!(m.abs() < 1e-9);
            if scaler.stds[k] > STD_FLOOR {
                prop_assert!((v - 1.0).abs() < 1e-9);
            } else {
                prop_assert!(v < 1e-9);
            }
        }
    }
}

#[test]
fn identity_scaler_is_a_no_op() {
    let a = [1.5, -2.0, 0.0, 3.25, 1e-9];
    assert_eq!(FeatureScaler::identity().apply_array(a), a);
}
