//! Event scoring models and their on-disk format.
//!
//! Every trainable model exposes its parameters as a list of flat blocks and
//! returns gradients aligned with those blocks, so the trainer and the
//! optimizer stay model-agnostic.

pub mod baselines;
mod inputs;
mod io;
pub mod kce;
pub mod letor;
pub mod pagerank;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;

pub use baselines::{frequency_scores, location_scores};
pub use inputs::ModelInputs;
pub use io::{load_model, read_model, save_model, write_model, ModelError, MODEL_VERSION};
pub use kce::{KceModel, KceVariant, ScoreOptions};
pub use letor::LetorModel;
pub use pagerank::PageRankModel;

/// Gradient for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockGrad {
    /// Block untouched by this document.
    Zero,
    Dense(Vec<f64>),
    /// Row-sparse gradient for a `rows x dim` matrix block.
    Rows {
        dim: usize,
        rows: BTreeMap<usize, Vec<f64>>,
    },
}

impl BlockGrad {
    /// Adds this gradient into a dense buffer covering the whole block.
    pub fn add_into(&self, dense: &mut [f64]) {
        match self {
            BlockGrad::Zero => {}
            BlockGrad::Dense(g) => {
                for (d, x) in dense.iter_mut().zip(g) {
                    *d += x;
                }
            }
            BlockGrad::Rows { dim, rows } => {
                for (&r, g) in rows {
                    for (d, x) in dense[r * dim..(r + 1) * dim].iter_mut().zip(g) {
                        *d += x;
                    }
                }
            }
        }
    }

    /// Value of one flat coordinate.
    pub fn get(&self, index: usize) -> f64 {
        match self {
            BlockGrad::Zero => 0.0,
            BlockGrad::Dense(g) => g[index],
            BlockGrad::Rows { dim, rows } => rows
                .get(&(index / dim))
                .map_or(0.0, |r| r[index % dim]),
        }
    }
}

/// Row-sparse accumulator used while building embedding gradients.
#[derive(Debug, Clone, Default)]
pub(crate) struct RowAccumulator {
    dim: usize,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl RowAccumulator {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub(crate) fn add_scaled(&mut self, row: usize, scale: f64, g: &[f64]) {
        let dim = self.dim;
        let r = self.rows.entry(row).or_insert_with(|| vec![0.0; dim]);
        for (a, b) in r.iter_mut().zip(g) {
            *a += scale * b;
        }
    }

    pub(crate) fn finish(self) -> BlockGrad {
        if self.rows.is_empty() {
            BlockGrad::Zero
        } else {
            BlockGrad::Rows {
                dim: self.dim,
                rows: self.rows,
            }
        }
    }
}

/// A named, flat view of one parameter block.
#[derive(Debug)]
pub struct ParamBlock<'a> {
    pub name: &'static str,
    pub values: &'a [f64],
    pub trainable: bool,
    /// Row width for matrix blocks; `None` for vectors and scalars.
    pub row_dim: Option<usize>,
}

/// A scoring model that can be trained with the pairwise loss.
pub trait Differentiable: Clone + Send + Sync {
    fn score(&self, doc: &Document) -> Vec<f64>;

    /// Gradient of `sum_i dscores[i] * score_i` with respect to every block.
    fn backward(&self, doc: &Document, dscores: &[f64]) -> Vec<BlockGrad>;

    fn blocks(&self) -> Vec<ParamBlock<'_>>;

    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    /// Re-imposes parameter constraints after an optimizer step.
    fn project(&mut self) {}

    /// Stops gradient updates to embedding tables. A no-op for models without any.
    fn freeze_embeddings(&mut self) {}
}

/// Any saved model.
#[derive(Debug, Clone, PartialEq)]
pub enum SalienceModel {
    Letor(LetorModel),
    Kce(KceModel),
    PageRank(PageRankModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Letor,
    Kce,
    Pagerank,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Letor => "letor",
            ModelKind::Kce => "kce",
            ModelKind::Pagerank => "pagerank",
        })
    }
}

impl SalienceModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SalienceModel::Letor(_) => ModelKind::Letor,
            SalienceModel::Kce(_) => ModelKind::Kce,
            SalienceModel::PageRank(_) => ModelKind::Pagerank,
        }
    }

    pub fn score(&self, doc: &Document) -> Vec<f64> {
        match self {
            SalienceModel::Letor(m) => m.score(doc),
            SalienceModel::Kce(m) => m.score(doc),
            SalienceModel::PageRank(m) => m.score(doc),
        }
    }

    pub fn meta(&self) -> &ModelMeta {
        match self {
            SalienceModel::Letor(m) => &m.meta,
            SalienceModel::Kce(m) => &m.meta,
            SalienceModel::PageRank(m) => &m.meta,
        }
    }
}

/// Training provenance stored alongside parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub epochs_run: usize,
    #[serde(default)]
    pub best_epoch: Option<usize>,
    #[serde(default)]
    pub best_dev_auc: Option<f64>,
}

/// Dot product with a fixed-size feature row.
#[inline]
pub(crate) fn dot5(w: &[f64], f: &[f64; crate::features::NUM_FEATURES]) -> f64 {
    w.iter().zip(f).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_grad_accumulates() {
        let mut dense = vec![0.0; 6];
        BlockGrad::Dense(vec![1.0; 6]).add_into(&mut dense);
        let mut acc = RowAccumulator::new(2);
        acc.add_scaled(1, 2.0, &[1.0, -1.0]);
        acc.add_scaled(1, 1.0, &[1.0, 0.0]);
        let g = acc.finish();
        g.add_into(&mut dense);
        assert_eq!(dense, vec![1.0, 1.0, 4.0, -1.0, 1.0, 1.0]);
        assert_eq!(g.get(2), 3.0);
        assert_eq!(g.get(0), 0.0);
        assert_eq!(RowAccumulator::new(3).finish(), BlockGrad::Zero);
    }
}
