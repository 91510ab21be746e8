//! Finite-difference verification of the KCE backward pass.
//!
//! The loss is re-evaluated in double-double arithmetic through the model's
//! generic forward pass, so the central difference is limited by truncation
//! error rather than by cancellation in `L(θ+h) - L(θ-h)`. The hinge active
//! set is fixed at the unperturbed parameters: the check targets the
//! gradient of the piecewise-linear loss on its current piece.

use rand::seq::index::sample;
use serde::Serialize;

use super::loss::{all_pairs, pair_loss, Pair};
use super::TrainError;
use crate::corpus::Document;
use crate::models::kce::{Perturbation, BLOCK_ENTITY_EMB, BLOCK_EVENT_EMB};
use crate::models::{Differentiable, KceModel, ScoreOptions};
use crate::numeric::{DoubleDouble, Real};
use crate::par;
use crate::rng::seeded;

/// Embedding rows checked per document at most.
pub const MAX_CHECKED_ROWS: usize = 32;
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Block name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
    pub active_pairs: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn active_loss<T: Real>(scores: &[T], active: &[Pair]) -> T {
    let one = T::from_f64(1.0);
    let mut l = T::zero();
    for &(p, n) in active {
        l += one - scores[p] + scores[n];
    }
    l
}

fn checked_coordinates(model: &KceModel, doc: &Document) -> Vec<(usize, usize)> {
    let blocks = model.blocks();
    let mut coords = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        if block.trainable && block.row_dim.is_none() {
            coords.extend((0..block.values.len()).map(|i| (b, i)));
        }
    }
    let mut rows: Vec<(usize, usize)> = Vec::new();
    if model.block_trainable(BLOCK_EVENT_EMB) {
        rows.extend(doc.events.iter().map(|e| (BLOCK_EVENT_EMB, model.event_table.index_of(&e.head_lemma))));
    }
    if model.block_trainable(BLOCK_ENTITY_EMB) {
        rows.extend(doc.entities.iter().map(|e| (BLOCK_ENTITY_EMB, model.entity_table.index_of(&e.entity_key))));
    }
    rows.sort_unstable();
    rows.dedup();
    if rows.len() > MAX_CHECKED_ROWS {
        let mut keep = sample(&mut seeded(rows.len() as u64), rows.len(), MAX_CHECKED_ROWS).into_vec();
        keep.sort_unstable();
        rows = keep.into_iter().map(|i| rows[i]).collect();
    }
    for (b, r) in rows {
        let dim = blocks[b].row_dim.expect("embedding block has rows");
        coords.extend((r * dim..(r + 1) * dim).map(|i| (b, i)));
    }
    coords
}

/// Compares the analytic gradient of the pairwise loss on `doc` against
/// central differences with step `step`, over every trainable linear block
/// and up to [`MAX_CHECKED_ROWS`] embedding rows used by the document.
pub fn grad_check(model: &KceModel, doc: &Document, step: f64) -> Result<GradCheckReport, TrainError> {
    if !doc.is_labeled() {
        return Err(TrainError::Unlabeled {
            doc_id: doc.doc_id.clone(),
        });
    }
    let opts = ScoreOptions::default();
    let scores = model.score_with(doc, opts);
    let active: Vec<Pair> = all_pairs(&doc.labels())
        .into_iter()
        .filter(|&(p, n)| 1.0 - scores[p] + scores[n] > 0.0)
        .collect();
    if active.is_empty() {
        return Ok(GradCheckReport {
            max_rel_error: 0.0,
            worst: None,
            coords_checked: 0,
            active_pairs: 0,
        });
    }
    let (_, dscores) = pair_loss(&scores, &active);
    let grads = model.backward_with(doc, &dscores, opts);
    let coords = checked_coordinates(model, doc);

    let errors = par::map(&coords, |&(block, index)| {
        let loss_at = |delta: f64| {
            let s = model.forward::<DoubleDouble>(doc, opts, Some(Perturbation { block, index, delta }));
            active_loss(&s, &active)
        };
        let numeric = ((loss_at(step) - loss_at(-step)) / DoubleDouble::from_f64(2.0 * step)).to_f64();
        relative_error(grads[block].get(index), numeric)
    });

    let names: Vec<&str> = model.blocks().iter().map(|b| b.name).collect();
    let (mut max_rel_error, mut worst) = (0.0, None);
    for (&(block, index), &e) in coords.iter().zip(&errors) {
        if e > max_rel_error || e.is_nan() {
            max_rel_error = e;
            worst = Some((names[block].to_string(), index));
        }
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst,
        coords_checked: coords.len(),
        active_pairs: active.len(),
    })
}
