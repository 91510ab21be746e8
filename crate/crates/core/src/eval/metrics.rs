use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;

/// How exact score ties are ordered before cutoff metrics are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "seed")]
pub enum TieBreak {
    /// Ascending identifier.
    ById,
    /// Seeded random order.
    Random(u64),
}

/// Indices of `scores` from highest to lowest.
pub fn rank_order<S: AsRef<str>>(scores: &[f64], ids: &[S], tie: TieBreak) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    match tie {
        TieBreak::ById => order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| ids[a].as_ref().cmp(ids[b].as_ref()))
        }),
        TieBreak::Random(seed) => {
            order.shuffle(&mut seeded(seed));
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        }
    }
    order
}

/// Salient events among the first `min(k, n)` ranks, divided by `k`.
pub fn precision_at_k(ranked: &[bool], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked.iter().take(k).filter(|&&s| s).count();
    hits as f64 / k as f64
}

/// Fraction of all salient events found in the first `k` ranks; 0 when the
/// list has no salient events.
pub fn recall_at_k(ranked: &[bool], k: usize) -> f64 {
    let total = ranked.iter().filter(|&&s| s).count();
    if total == 0 {
        return 0.0;
    }
    let hits = ranked.iter().take(k).filter(|&&s| s).count();
    hits as f64 / total as f64
}

/// Mann-Whitney AUC with ties counted one half. `None` without both classes.
///
/// Sort-based, `O(n log n)`: positives are credited with every negative
/// scored strictly below them plus half the negatives they tie with.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut twice_correct: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let group = &idx[i..j];
        let gp = group.iter().filter(|&&g| labels[g]).count() as u64;
        let gn = group.len() as u64 - gp;
        twice_correct += gp * (2 * neg_below + gn);
        neg_below += gn;
        i = j;
    }
    Some(twice_correct as f64 / (2 * pos * neg) as f64)
}
