//! Unsupervised ranking baselines. Ties are left in the scores; rank-time
//! tie-breaking lives in [`crate::eval::rank_order`].

use crate::corpus::Document;
use crate::features::frequency_feature;

/// Head-lemma count of each event.
pub fn frequency_scores(doc: &Document) -> Vec<f64> {
    (0..doc.events.len())
        .map(|i| frequency_feature(doc, i))
        .collect()
}

/// Negated discourse position: the first mention scores highest.
pub fn location_scores(doc: &Document) -> Vec<f64> {
    (0..doc.events.len()).map(|i| -(i as f64)).collect()
}
