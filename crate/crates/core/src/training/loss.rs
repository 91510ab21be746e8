//! Pairwise hinge loss over (salient, non-salient) event pairs of one document.

use rand::seq::index::sample;

use crate::rng::seeded;

/// `(salient index, non-salient index)`.
pub type Pair = (usize, usize);

/// Loss and score gradient over the full cross product of salient and
/// non-salient events.
pub fn document_pair_loss(scores: &[f64], labels: &[bool]) -> (f64, Vec<f64>) {
    pair_loss(scores, &all_pairs(labels))
}

/// `sum max(0, 1 - s[pos] + s[neg])` over `pairs`, with subgradient 0 at the
/// hinge corner.
pub fn pair_loss(scores: &[f64], pairs: &[Pair]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut grad = vec![0.0; scores.len()];
    for &(p, n) in pairs {
        let margin = 1.0 - scores[p] + scores[n];
        if margin > 0.0 {
            loss += margin;
            grad[p] -= 1.0;
            grad[n] += 1.0;
        }
    }
    (loss, grad)
}

pub fn all_pairs(labels: &[bool]) -> Vec<Pair> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.iter()
        .flat_map(|&p| neg.iter().map(move |&n| (p, n)))
        .collect()
}

/// Full cross product, or a seeded uniform sample of `max_pairs` distinct pairs
/// (sorted) when the cross product is larger.
pub fn make_pairs(labels: &[bool], max_pairs: Option<usize>, seed: u64) -> Vec<Pair> {
    let pairs = all_pairs(labels);
    match max_pairs {
        Some(m) if m < pairs.len() => {
            let mut rng = seeded(seed);
            let mut picked: Vec<usize> = sample(&mut rng, pairs.len(), m).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| pairs[i]).collect()
        }
        _ => pairs,
    }
}
