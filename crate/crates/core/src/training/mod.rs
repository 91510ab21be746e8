//! Pairwise training loop.
//!
//! Documents are shuffled per epoch and grouped into batches; each batch sums
//! the hinge loss of its documents and takes one Adam step. Per-document
//! gradients may be computed in parallel but are always reduced in batch
//! order, so a fixed seed gives bitwise-identical parameters for any thread
//! count.

mod adam;
mod gradcheck;
mod loss;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::eval::{evaluate_with, TieBreak};
use crate::models::{Differentiable, ModelMeta, PageRankModel};
use crate::par;
use crate::rng::{derive_seed, seeded};

pub use adam::Adam;
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use loss::{all_pairs, document_pair_loss, make_pairs, pair_loss, Pair};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("document {doc_id} is not fully labeled")]
    Unlabeled { doc_id: String },
    #[error("non-finite {what} after epoch {epoch}, batch {batch}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("invalid training config: {0}")]
    Config(String),
}

fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    128
}
fn default_epochs() -> usize {
    20
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_docs: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_pairs_per_doc: Option<usize>,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_eps")]
    pub adam_eps: f64,
    #[serde(default)]
    pub freeze_embeddings: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_lr(),
            batch_docs: default_batch(),
            epochs: default_epochs(),
            seed: 0,
            max_pairs_per_doc: None,
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_eps: default_eps(),
            freeze_embeddings: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_docs == 0 {
            return bad("batch_docs must be positive");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must lie in (0, 1)");
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must lie in (0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if self.max_pairs_per_doc == Some(0) {
            return bad("max_pairs_per_doc must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Summed training loss over the epoch's batches, each measured before its step.
    pub loss: f64,
    pub dev_auc: Option<f64>,
    pub dev_p1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Training loss of the initial parameters, with epoch 1's pairs.
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        let mut out = String::from("epoch,loss,dev_auc,dev_p1\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{:?},{},{}", r.epoch, r.loss, opt(r.dev_auc), opt(r.dev_p1));
        }
        out
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|r| r.loss)
    }
}

/// Checks that every document carries a salience label on every event.
pub fn check_labeled(corpus: &Corpus) -> Result<(), TrainError> {
    match corpus.documents.iter().find(|d| !d.is_labeled()) {
        Some(d) => Err(TrainError::Unlabeled {
            doc_id: d.doc_id.clone(),
        }),
        None => Ok(()),
    }
}

fn doc_pairs(doc: &Document, cfg: &TrainConfig, epoch: usize, doc_index: usize) -> Vec<Pair> {
    let seed = derive_seed(cfg.seed, &[1, epoch as u64, doc_index as u64]);
    make_pairs(&doc.labels(), cfg.max_pairs_per_doc, seed)
}

fn doc_loss<M: Differentiable>(model: &M, doc: &Document, pairs: &[Pair]) -> (f64, Vec<f64>) {
    if pairs.is_empty() {
        return (0.0, Vec::new());
    }
    pair_loss(&model.score(doc), pairs)
}

/// Summed pairwise loss over a corpus, with the pairs `train` would use in `epoch`.
pub fn corpus_loss<M: Differentiable>(model: &M, corpus: &Corpus, cfg: &TrainConfig, epoch: usize) -> f64 {
    let losses = par::map_range(corpus.len(), |i| {
        let doc = &corpus.documents[i];
        doc_loss(model, doc, &doc_pairs(doc, cfg, epoch, i)).0
    });
    losses.iter().sum()
}

fn dev_snapshot<M: Differentiable>(model: &M, dev: &Corpus) -> (Option<f64>, Option<f64>) {
    if dev.is_empty() {
        return (None, None);
    }
    let r = evaluate_with(dev, |d| model.score(d), &[1], TieBreak::ById);
    (r.auc, r.p_at.get(&1).copied())
}

fn all_finite<M: Differentiable>(model: &M) -> bool {
    model.blocks().iter().all(|b| b.values.iter().all(|x| x.is_finite()))
}

/// Trains `model` on `train`, selecting the epoch with the best dev AUC (the
/// last epoch when `dev` is empty or never yields an AUC).
pub fn train<M: Differentiable>(
    mut model: M,
    train: &Corpus,
    dev: &Corpus,
    cfg: &TrainConfig,
) -> Result<(M, TrainHistory), TrainError> {
    cfg.validate()?;
    check_labeled(train)?;
    check_labeled(dev)?;
    if cfg.freeze_embeddings {
        model.freeze_embeddings();
    }
    let mut history = TrainHistory {
        initial_loss: corpus_loss(&model, train, cfg, 1),
        ..TrainHistory::default()
    };
    if cfg.epochs == 0 {
        return Ok((model, history));
    }

    let (sizes, trainable): (Vec<usize>, Vec<bool>) =
        model.blocks().iter().map(|b| (b.values.len(), b.trainable)).unzip();
    let mut adam = Adam::new(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, &sizes);
    let mut best: Option<(f64, usize, M)> = None;

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut seeded(derive_seed(cfg.seed, &[0, epoch as u64])));
        let mut epoch_loss = 0.0;

        for (b, batch) in order.chunks(cfg.batch_docs).enumerate() {
            let per_doc = par::map(batch, |&i| {
                let doc = &train.documents[i];
                let pairs = doc_pairs(doc, cfg, epoch, i);
                let (loss, dscores) = doc_loss(&model, doc, &pairs);
                let grads = if loss > 0.0 {
                    Some(model.backward(doc, &dscores))
                } else {
                    None
                };
                (loss, grads)
            });
            let mut dense: Vec<Vec<f64>> = sizes
                .iter()
                .zip(&trainable)
                .map(|(&n, &t)| if t { vec![0.0; n] } else { Vec::new() })
                .collect();
            for (loss, grads) in &per_doc {
                epoch_loss += loss;
                if let Some(grads) = grads {
                    for ((g, buf), &t) in grads.iter().zip(dense.iter_mut()).zip(&trainable) {
                        if t {
                            g.add_into(buf);
                        }
                    }
                }
            }
            if !epoch_loss.is_finite() {
                return Err(TrainError::NonFinite {
                    what: "loss",
                    epoch,
                    batch: b,
                });
            }
            {
                let mut params = model.blocks_mut();
                adam.step(&mut params, &dense, &trainable);
            }
            model.project();
            if !all_finite(&model) {
                return Err(TrainError::NonFinite {
                    what: "parameters",
                    epoch,
                    batch: b,
                });
            }
        }

        let (dev_auc, dev_p1) = dev_snapshot(&model, dev);
        history.epochs.push(EpochRecord {
            epoch,
            loss: epoch_loss,
            dev_auc,
            dev_p1,
        });
        let key = dev_auc.unwrap_or(f64::NEG_INFINITY);
        let improved = match &best {
            None => true,
            Some((k, _, _)) => key > *k || (dev_auc.is_none() && key == *k),
        };
        if improved {
            best = Some((key, epoch, model.clone()));
        }
    }

    let (_, epoch, model) = best.expect("at least one epoch ran");
    history.best_epoch = Some(epoch);
    Ok((model, history))
}

/// Records the outcome of training in a model's metadata.
pub fn record_meta(meta: &mut ModelMeta, cfg: &TrainConfig, history: &TrainHistory) {
    meta.seed = Some(cfg.seed);
    meta.epochs_run = history.epochs.len();
    meta.best_epoch = history.best_epoch;
    meta.best_dev_auc = history
        .best_epoch
        .and_then(|e| history.epochs.iter().find(|r| r.epoch == e))
        .and_then(|r| r.dev_auc);
}

/// Sets `combine_lambda` to the best dev-AUC value on the grid
/// `0, 0.1, ..., 1` (first best wins). Returns the chosen value and its AUC.
pub fn tune_pagerank_lambda(model: &mut PageRankModel, dev: &Corpus) -> (f64, Option<f64>) {
    let mut best = (model.combine_lambda, None::<f64>);
    for step in 0..=10 {
        let lambda = step as f64 / 10.0;
        let mut m = model.clone();
        m.combine_lambda = lambda;
        let (auc, _) = dev_snapshot(&m, dev);
        if let Some(a) = auc {
            if best.1.is_none_or(|b| a > b) {
                best = (lambda, Some(a));
            }
        }
    }
    model.combine_lambda = best.0;
    best
}
